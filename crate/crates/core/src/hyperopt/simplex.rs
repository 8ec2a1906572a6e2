//! Nelder-Mead minimizer over a box (points are clamped before evaluation).

use alloc::vec;
use alloc::vec::Vec;

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
}

pub(crate) fn nelder_mead<F>(f: F, x0: &[f64], step: f64, lo: &[f64], hi: &[f64], max_evals: usize) -> Outcome
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for k in 0..n {
            x[k] = x[k].clamp(lo[k], hi[k]);
        }
    };
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    simplex.push(start.clone());
    for k in 0..n {
        let mut p = start.clone();
        // step inward if the forward step would hit the box
        p[k] = if p[k] + step <= hi[k] { p[k] + step } else { p[k] - step };
        clamp(&mut p);
        simplex.push(p);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    let mut evals = n + 1;

    while evals < max_evals {
        // order by value, stable on ties
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let spread = fv[n] - fv[0];
        if spread.abs() < 1e-10 * (1.0 + fv[0].abs()) && evals > 2 * (n + 1) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for k in 0..n {
                centroid[k] += p[k] / n as f64;
            }
        }
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect();
            clamp(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        evals += 1;
        if fr < fv[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            let (xc, fc) = if fr < fv[n] {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            };
            evals += 1;
            if fc < fv[n].min(fr) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                // shrink towards the best vertex
                for i in 1..=n {
                    let mut p: Vec<f64> = (0..n).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                    clamp(&mut p);
                    fv[i] = eval(&p);
                    simplex[i] = p;
                }
                evals += n;
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap();
    Outcome { x: simplex[best].clone(), f: fv[best] }
}
