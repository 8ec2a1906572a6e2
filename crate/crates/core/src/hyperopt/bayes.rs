//! Expected-improvement Bayesian optimization over a [`HyperBounds`] box.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::gp::{gp_fit, GpSurrogate};
use super::halton::shifted_halton;
use super::hyper::{HyperBounds, HyperVector, SearchRecord, Status};
use super::simplex::nelder_mead;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::rng::RngSeed;
use crate::special::{norm_cdf, norm_pdf};

/// Seconds since an arbitrary origin; lets callers with a clock fill in
/// wall times.
pub trait Clock: Sync {
    fn now(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoConfig {
    /// Total objective evaluations, initial design included.
    pub budget: usize,
    pub initial_design: usize,
    /// Quasi-random candidates scored per proposal.
    pub candidates: usize,
    /// Best candidates polished by a local search.
    pub refine_starts: usize,
    /// Model `ln(objective)` instead of the objective (positive objectives only).
    pub log_objective: bool,
    pub seed: RngSeed,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            budget: 60,
            initial_design: 12,
            candidates: 1024,
            refine_starts: 4,
            log_objective: true,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoResult {
    /// Best successful record.
    pub best: SearchRecord,
    pub history: Vec<SearchRecord>,
    /// Incumbent objective after each record.
    pub incumbent: Vec<f64>,
}

/// Expected improvement (minimization) below `best` for a posterior with
/// mean `mean` and standard deviation `sd`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let gap = best - mean;
    if sd <= 1e-12 {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (gap * norm_cdf(z) + sd * norm_pdf(z)).max(0.0)
}

/// Score of a unit-box point: EI first, posterior variance to break ties.
fn score(gp: &GpSurrogate, best: f64, u: &[f64]) -> (f64, f64) {
    let (m, v) = gp.predict(u);
    (expected_improvement(m, libm::sqrt(v), best), v)
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
}

/// Maximize EI of the fitted surrogate over the unit box and map the winner
/// onto `bounds`.
///
/// Candidates are shifted-Halton points; the best `refine_starts` are
/// polished with a Nelder-Mead search on EI.
pub fn propose_next(
    gp: &GpSurrogate,
    bounds: &HyperBounds,
    candidates: usize,
    refine_starts: usize,
    seed: RngSeed,
) -> HyperVector {
    assert_eq!(gp.dim(), HyperVector::DIM);
    let best = gp.targets().iter().copied().fold(f64::INFINITY, f64::min);
    let pts = shifted_halton::<4>(candidates.max(1), seed);
    let mut scored: Vec<(usize, (f64, f64))> = pts.iter().enumerate().map(|(i, p)| (i, score(gp, best, p))).collect();
    scored.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0).then(b.1 .1.total_cmp(&a.1 .1)).then(a.0.cmp(&b.0)));

    let mut winner = pts[scored[0].0].to_vec();
    let mut winner_score = scored[0].1;
    let lo = [0.0; 4];
    let hi = [1.0; 4];
    for &(i, s0) in scored.iter().take(refine_starts) {
        // Nelder-Mead minimizes; EI ties are resolved afterwards.
        let r = nelder_mead(|u| -score(gp, best, u).0, &pts[i], 0.05, &lo, &hi, 200);
        let s = score(gp, best, &r.x);
        let (cand, cs) = if better(s, s0) { (r.x, s) } else { (pts[i].to_vec(), s0) };
        if better(cs, winner_score) {
            winner = cand;
            winner_score = cs;
        }
    }
    bounds.from_unit([winner[0], winner[1], winner[2], winner[3]])
}

fn incumbent_of(history: &[SearchRecord]) -> Option<&SearchRecord> {
    history.iter().filter(|r| r.is_ok()).min_by(|a, b| a.objective.total_cmp(&b.objective))
}

fn surrogate_target(cfg: &BoConfig, v: f64) -> f64 {
    if cfg.log_objective {
        libm::log(v.max(1e-300))
    } else {
        v
    }
}

/// Minimize `objective` over `bounds`.
///
/// `prior` records (for example from an interrupted run) count towards the
/// budget and are replayed without re-evaluation. The first
/// `initial_design` evaluations are shifted-Halton points evaluated through
/// `exec`; after that each proposal maximizes EI of a GP fitted to all
/// successful records. Evaluation `k` receives seed `cfg.seed.derive(k)`.
/// A failed evaluation is recorded with the worst objective seen so far and
/// is excluded from the surrogate. `on_record` sees every new record in
/// order.
pub fn bayes_optimize<F, E, C, R>(
    bounds: &HyperBounds,
    cfg: &BoConfig,
    prior: &[SearchRecord],
    objective: F,
    exec: &E,
    clock: &C,
    mut on_record: R,
) -> Result<BoResult>
where
    F: Fn(&HyperVector, RngSeed) -> Result<f64> + Sync + Send,
    E: Executor,
    C: Clock,
    R: FnMut(&SearchRecord),
{
    bounds.validate()?;
    if cfg.initial_design == 0 || cfg.budget < cfg.initial_design {
        return Err(Error::invalid("budget must be at least the initial design size (>= 1)"));
    }
    if prior.len() > cfg.budget {
        return Err(Error::invalid("more prior records than the evaluation budget"));
    }
    let mut history: Vec<SearchRecord> = prior.to_vec();

    let finish = |history: &mut Vec<SearchRecord>, raw: Vec<(HyperVector, RngSeed, Result<f64>, f64)>, on_record: &mut R| {
        for (hyper, seed, outcome, wall_time) in raw {
            let rec = match outcome {
                Ok(v) if v.is_finite() => SearchRecord { hyper, objective: v, status: Status::Ok, seed, wall_time },
                _ => {
                    let worst = history
                        .iter()
                        .filter(|r| r.is_ok())
                        .map(|r| r.objective)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let objective = if worst.is_finite() { worst } else { f64::MAX };
                    SearchRecord { hyper, objective, status: Status::Failed, seed, wall_time }
                }
            };
            on_record(&rec);
            history.push(rec);
        }
    };

    let design = shifted_halton::<4>(cfg.initial_design, cfg.seed.derive(u64::MAX));
    if history.len() < cfg.initial_design {
        let start = history.len();
        let todo = cfg.initial_design - start;
        let raw = exec.map(todo, |k| {
            let idx = start + k;
            let hyper = bounds.from_unit(design[idx]);
            let seed = cfg.seed.derive(idx as u64);
            let t0 = clock.now();
            let v = objective(&hyper, seed);
            (hyper, seed, v, clock.now() - t0)
        });
        finish(&mut history, raw, &mut on_record);
    }

    while history.len() < cfg.budget {
        let idx = history.len();
        let ok: Vec<&SearchRecord> = history.iter().filter(|r| r.is_ok()).collect();
        let hyper = if ok.len() >= 2 {
            let xs: Vec<Vec<f64>> = ok.iter().map(|r| bounds.to_unit(&r.hyper).to_vec()).collect();
            let ys: Vec<f64> = ok.iter().map(|r| surrogate_target(cfg, r.objective)).collect();
            let gp = gp_fit(&xs, &ys, cfg.seed.derive(1 << 32 | idx as u64))?;
            propose_next(&gp, bounds, cfg.candidates, cfg.refine_starts, cfg.seed.derive(2 << 32 | idx as u64))
        } else {
            // not enough data for a surrogate: keep exploring quasi-randomly
            let extra = shifted_halton::<4>(idx + 1, cfg.seed.derive(u64::MAX));
            bounds.from_unit(extra[idx])
        };
        let seed = cfg.seed.derive(idx as u64);
        let t0 = clock.now();
        let v = objective(&hyper, seed);
        let dt = clock.now() - t0;
        finish(&mut history, alloc::vec![(hyper, seed, v, dt)], &mut on_record);
    }

    let best = incumbent_of(&history)
        .cloned()
        .ok_or_else(|| Error::invalid("every evaluation failed"))?;
    let mut incumbent = Vec::with_capacity(history.len());
    let mut cur = f64::INFINITY;
    for r in &history {
        if r.is_ok() && r.objective < cur {
            cur = r.objective;
        }
        incumbent.push(cur);
    }
    Ok(BoResult { best, history, incumbent })
}
