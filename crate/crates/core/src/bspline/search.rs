use alloc::vec::Vec;
use alloc::format;

use super::{BandedSpd, DesignMatrix, SplineConfig, SplineModel, SplineSpace};
use crate::data::{eval_grid_coords, nrmse, EvalGrid, SampleSet};
use crate::error::{Error, Result};
use crate::exec::Executor;

/// Normal equations of one spline space, reusable across ridge strengths:
/// only the diagonal shift changes between solves.
#[derive(Debug, Clone)]
pub struct RidgeProblem {
    config: SplineConfig,
    gram: BandedSpd,
    rhs: Vec<f64>,
}

impl RidgeProblem {
    pub fn new(samples: &SampleSet, config: SplineConfig) -> Self {
        let phi = DesignMatrix::from_coords(samples.coords(), &config);
        Self::from_design(&phi, samples.values())
    }

    pub fn from_design(phi: &DesignMatrix, y: &[f64]) -> Self {
        RidgeProblem { config: *phi.config(), gram: phi.gram(), rhs: phi.transpose_mul(y) }
    }

    pub fn config(&self) -> &SplineConfig {
        &self.config
    }

    /// `(Phi^T Phi + lambda I)^{-1} Phi^T y`.
    pub fn solve(&self, lambda: f64) -> Result<SplineModel> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("ridge strength {lambda} must be finite and >= 0")));
        }
        let mut a = self.gram.clone();
        if lambda > 0.0 {
            a.add_diagonal(lambda);
        }
        let chol = a.cholesky()?;
        let coeffs = chol.solve(&self.rhs);
        SplineModel::new(self.config, coeffs)
    }
}

/// Closed-form ridge coefficients for a prebuilt design matrix.
pub fn ridge_fit(phi: &DesignMatrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if y.len() != phi.n_rows() {
        return Err(Error::invalid("observation count does not match design rows"));
    }
    Ok(RidgeProblem::from_design(phi, y).solve(lambda)?.coeffs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub m: usize,
    pub lambda: f64,
    /// NRMSE on the evaluation grid, or the error that stopped the fit.
    pub outcome: Result<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSearch {
    /// Best successful cell; `None` only if every cell failed.
    pub best: Option<GridCell>,
    /// One entry per `(m, lambda)`, `m`-major in input order.
    pub table: Vec<GridCell>,
}

/// Fit every `(lambda, m)` pair and score it against the grid truth.
///
/// Ties on NRMSE go to the smaller `m`, then the smaller `lambda`.
pub fn oracle_grid_search<E: Executor>(
    samples: &SampleSet,
    grid: &EvalGrid,
    lambdas: &[f64],
    ms: &[usize],
    space: &SplineSpace,
    exec: &E,
) -> Result<OracleSearch> {
    let truth = grid.truth()?;
    if lambdas.is_empty() || ms.is_empty() {
        return Err(Error::invalid("lambda and m ladders must be nonempty"));
    }
    let coords = eval_grid_coords(grid);
    let mut table = Vec::with_capacity(lambdas.len() * ms.len());
    for &m in ms {
        let config = space.config(m)?;
        let problem = RidgeProblem::new(samples, config);
        let eval = DesignMatrix::from_coords(&coords, &config);
        let scores = exec.map(lambdas.len(), |k| {
            let model = problem.solve(lambdas[k])?;
            let pred = eval.mul_vec(&model.coeffs);
            let e = nrmse(&pred, truth)?;
            if e.is_finite() {
                Ok(e)
            } else {
                Err(Error::invalid("non-finite NRMSE"))
            }
        });
        table.extend(
            lambdas.iter().zip(scores).map(|(&lambda, outcome)| GridCell { m, lambda, outcome }),
        );
    }
    let best = table
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok().map(|e| (*e, c)))
        .min_by(|(ea, a), (eb, b)| {
            ea.total_cmp(eb).then(a.m.cmp(&b.m)).then(a.lambda.total_cmp(&b.lambda))
        })
        .map(|(_, c)| c.clone());
    Ok(OracleSearch { best, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_samples, rect2d};
    use crate::exec::Sequential;
    use crate::RngSeed;

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let s = gen_samples(60, RngSeed(1), |_, _| 0.0).unwrap();
        let m = RidgeProblem::new(&s, SplineConfig::on_unit_experiment(5).unwrap()).solve(0.1).unwrap();
        assert!(m.coeffs.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let s = gen_samples(200, RngSeed(2), rect2d).unwrap();
        let cfg = SplineConfig::on_unit_experiment(5).unwrap();
        let phi = DesignMatrix::from_coords(s.coords(), &cfg);
        let c = ridge_fit(&phi, s.values(), 1e12).unwrap();
        let norm: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let aty: f64 = phi.transpose_mul(s.values()).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-9);
        assert!((norm - aty / 1e12).abs() / (aty / 1e12) < 1e-3);
    }

    #[test]
    fn rank_deficient_unregularized_fit_is_singular() {
        // 3 samples cannot determine 49 coefficients.
        let s = gen_samples(3, RngSeed(4), rect2d).unwrap();
        let r = RidgeProblem::new(&s, SplineConfig::on_unit_experiment(5).unwrap()).solve(0.0);
        assert!(matches!(r, Err(Error::Singular { .. })));
        assert!(RidgeProblem::new(&s, SplineConfig::on_unit_experiment(5).unwrap()).solve(-1.0).is_err());
    }

    #[test]
    fn single_cell_and_duplicates() {
        let s = gen_samples(400, RngSeed(5), rect2d).unwrap();
        let g = EvalGrid::square(-0.3, 3.3, 21).unwrap().with_truth(rect2d);
        let one = oracle_grid_search(&s, &g, &[0.01], &[8], &SplineSpace::default(), &Sequential).unwrap();
        assert_eq!(one.table.len(), 1);
        assert_eq!(one.best.as_ref().unwrap().m, 8);

        let dup = oracle_grid_search(&s, &g, &[0.01, 0.01], &[8], &SplineSpace::default(), &Sequential).unwrap();
        assert_eq!(dup.table[0].outcome, dup.table[1].outcome);
        assert_eq!(dup.best.unwrap().lambda, 0.01);
    }

    #[test]
    fn singular_cells_are_recorded_not_fatal() {
        let s = gen_samples(20, RngSeed(5), rect2d).unwrap();
        let g = EvalGrid::square(-0.3, 3.3, 11).unwrap().with_truth(rect2d);
        let r = oracle_grid_search(&s, &g, &[0.0, 0.1], &[10], &SplineSpace::default(), &Sequential).unwrap();
        assert!(r.table[0].outcome.is_err());
        assert!(r.table[1].outcome.is_ok());
        assert_eq!(r.best.unwrap().lambda, 0.1);
    }

    #[test]
    fn requires_truth() {
        let s = gen_samples(20, RngSeed(5), rect2d).unwrap();
        let g = EvalGrid::square(0.0, 3.0, 5).unwrap();
        assert_eq!(oracle_grid_search(&s, &g, &[1.0], &[4], &SplineSpace::default(), &Sequential), Err(Error::MissingTruth));
    }
}
