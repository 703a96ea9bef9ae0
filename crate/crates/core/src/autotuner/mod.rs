//! Two-phase search: measure a random sample, fit a surrogate, measure the
//! best-predicted unmeasured configurations, keep the best measurement.

pub mod history;
pub mod surrogate;

use crate::space::{Configuration, SpaceCount, SpaceError, TuningSpace, ENUMERATION_CAP};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::time::Instant;
use thiserror::Error;

pub use history::{read_history, write_history, HistoryError};
pub use surrogate::{Encoding, InsufficientDataError, Surrogate, TrainingMeta};

/// Candidates scored in phase 2 when the space is too large to enumerate.
pub const PREDICTION_SUBSAMPLE: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub cfg: Configuration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub status: Status,
}

impl Measurement {
    pub fn ok(cfg: Configuration, value: f64) -> Measurement {
        Measurement { cfg, value: Some(value), status: Status::Ok }
    }

    pub fn failed(cfg: Configuration, reason: impl Into<String>) -> Measurement {
        Measurement { cfg, value: None, status: Status::Failed(reason.into()) }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

pub trait Evaluator: Sync {
    fn evaluate(&self, cfg: &Configuration) -> Measurement;

    /// Whether several configurations may be evaluated at once.
    fn concurrency_safe(&self) -> bool {
        false
    }
}

/// Evaluator from a closure returning a value or a failure reason.
pub struct FnEvaluator<F> {
    pub f: F,
    pub parallel: bool,
}

impl<F: Fn(&Configuration) -> Result<f64, String> + Sync> FnEvaluator<F> {
    pub fn new(f: F) -> Self {
        FnEvaluator { f, parallel: true }
    }
}

impl<F: Fn(&Configuration) -> Result<f64, String> + Sync> Evaluator for FnEvaluator<F> {
    fn evaluate(&self, cfg: &Configuration) -> Measurement {
        match (self.f)(cfg) {
            Ok(v) if v.is_finite() => Measurement::ok(cfg.clone(), v),
            Ok(v) => Measurement::failed(cfg.clone(), format!("non-finite value {v}")),
            Err(e) => Measurement::failed(cfg.clone(), e),
        }
    }

    fn concurrency_safe(&self) -> bool {
        self.parallel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Budget {
    pub phase1: usize,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { phase1: 200, top_k: 50, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TuneResult {
    pub best: Measurement,
    pub history: Vec<Measurement>,
    pub phase1_count: usize,
    pub phase2_count: usize,
    /// Configurations actually evaluated, excluding those reused from a
    /// previous session.
    pub evaluations: usize,
    pub surrogate: Option<TrainingMeta>,
    pub wall_clock: f64,
}

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("phase 1 needs at least {min} samples, got {got}", min = surrogate::MIN_SAMPLES)]
    BudgetTooSmall { got: usize },
    #[error("top-k must be at least 1")]
    ZeroTopK,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("every one of {} evaluations failed", history.len())]
    NoValidMeasurement { history: Vec<Measurement> },
}

#[derive(Debug, Clone, Default)]
pub struct TuneOptions {
    /// Measurements from an earlier session, reused instead of re-evaluating.
    pub prior: Vec<Measurement>,
    /// Maximum concurrent evaluations; 0 or 1 runs sequentially.
    pub jobs: usize,
}

/// Configurations ranked by ascending prediction, ties in lexicographic
/// configuration order. Scores every valid configuration when the space is
/// enumerable under `cap`, else a seeded random subsample.
pub fn predict_all(model: &Surrogate, space: &TuningSpace, cap: u64, seed: u64) -> Vec<(Configuration, f64)> {
    let candidates: Vec<Configuration> = match space.count() {
        SpaceCount::Exact(_) if space.product_size() <= cap => space.iter_valid().collect(),
        _ => {
            let mut s = space.sample(PREDICTION_SUBSAMPLE, seed ^ 0x5eed).unwrap_or_default();
            s.sort_by_cached_key(|c| space.indices_of(c));
            s.dedup();
            s
        }
    };
    let mut scored: Vec<(Configuration, f64)> = candidates.into_par_iter().map(|c| {
        let p = model.predict(&c);
        (c, p)
    }).collect();
    // Stable sort keeps the lexicographic order among ties.
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    scored
}

fn run_batch(
    eval: &dyn Evaluator,
    cfgs: &[Configuration],
    prior: &HashMap<Configuration, Measurement>,
    jobs: usize,
) -> (Vec<Measurement>, usize) {
    let todo: Vec<&Configuration> = cfgs.iter().filter(|c| !prior.contains_key(*c)).collect();
    let fresh: Vec<Measurement> = if jobs > 1 && eval.concurrency_safe() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
        pool.install(|| todo.par_iter().map(|c| eval.evaluate(c)).collect())
    } else {
        todo.iter().map(|c| eval.evaluate(c)).collect()
    };
    let n = fresh.len();
    let mut fresh: HashMap<&Configuration, Measurement> = todo.into_iter().zip(fresh).collect();
    let out = cfgs
        .iter()
        .map(|c| prior.get(c).cloned().unwrap_or_else(|| fresh.remove(c).expect("evaluated")))
        .collect();
    (out, n)
}

fn best_of(history: &[Measurement]) -> Option<&Measurement> {
    history
        .iter()
        .filter(|m| m.is_ok())
        .min_by(|a, b| a.value.unwrap().total_cmp(&b.value.unwrap()))
}

pub fn tune(space: &TuningSpace, eval: &dyn Evaluator, budget: Budget) -> Result<TuneResult, TuneError> {
    tune_with(space, eval, budget, &TuneOptions::default())
}

pub fn tune_with(
    space: &TuningSpace,
    eval: &dyn Evaluator,
    budget: Budget,
    opts: &TuneOptions,
) -> Result<TuneResult, TuneError> {
    if budget.phase1 < surrogate::MIN_SAMPLES {
        return Err(TuneError::BudgetTooSmall { got: budget.phase1 });
    }
    if budget.top_k == 0 {
        return Err(TuneError::ZeroTopK);
    }
    let start = Instant::now();
    let prior: HashMap<Configuration, Measurement> =
        opts.prior.iter().map(|m| (m.cfg.clone(), m.clone())).collect();

    let mut phase1 = space.sample(budget.phase1, budget.seed)?;
    let mut seen = HashSet::new();
    phase1.retain(|c| seen.insert(c.clone()));
    let (mut history, mut evaluations) = run_batch(eval, &phase1, &prior, opts.jobs);
    let phase1_count = history.len();

    let data: Vec<(Configuration, f64)> =
        history.iter().filter(|m| m.is_ok()).map(|m| (m.cfg.clone(), m.value.unwrap())).collect();
    let mut meta = None;
    let mut phase2_count = 0;
    if let Ok(model) = Surrogate::train(&data, Encoding::for_space(space), budget.seed) {
        let measured: HashSet<&Configuration> = history.iter().map(|m| &m.cfg).collect();
        let picks: Vec<Configuration> = predict_all(&model, space, ENUMERATION_CAP, budget.seed)
            .into_iter()
            .map(|(c, _)| c)
            .filter(|c| !measured.contains(c))
            .take(budget.top_k)
            .collect();
        let (more, n) = run_batch(eval, &picks, &prior, opts.jobs);
        evaluations += n;
        phase2_count = more.len();
        history.extend(more);
        meta = Some(model.meta);
    }

    match best_of(&history).cloned() {
        Some(best) => Ok(TuneResult {
            best,
            history,
            phase1_count,
            phase2_count,
            evaluations,
            surrogate: meta,
            wall_clock: start.elapsed().as_secs_f64(),
        }),
        None => Err(TuneError::NoValidMeasurement { history }),
    }
}

/// Best valid configuration by evaluating the whole space.
pub fn exhaustive(space: &TuningSpace, eval: &dyn Evaluator, jobs: usize) -> Result<TuneResult, TuneError> {
    let start = Instant::now();
    let all: Vec<Configuration> = space.iter_valid().collect();
    let (history, evaluations) = run_batch(eval, &all, &HashMap::new(), jobs);
    match best_of(&history).cloned() {
        Some(best) => Ok(TuneResult {
            best,
            phase1_count: history.len(),
            history,
            phase2_count: 0,
            evaluations,
            surrogate: None,
            wall_clock: start.elapsed().as_secs_f64(),
        }),
        None => Err(TuneError::NoValidMeasurement { history }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{TuningKind, TuningParameter};

    fn space3() -> TuningSpace {
        let p = |id: &str, kind, domain: Vec<i64>| TuningParameter { id: id.into(), kind, domain };
        TuningSpace::synthetic(
            "sep",
            vec![
                p("wgX", TuningKind::WorkGroupX, (0..10).map(|i| 1 << i).collect()),
                p("wgY", TuningKind::WorkGroupY, (0..10).map(|i| 1 << i).collect()),
                p("cX", TuningKind::CoarsenX, (0..9).map(|i| 1 << i).collect()),
            ],
        )
    }

    fn separable(c: &Configuration) -> Result<f64, String> {
        let l = |id: &str, best: f64| ((c.get(id).unwrap() as f64).log2() - best).powi(2);
        Ok(10.0 + l("wgX", 5.0) + 2.0 * l("wgY", 2.0) + 0.5 * l("cX", 3.0))
    }

    #[test]
    fn separable_cost_found_near_optimum() {
        let s = space3();
        let all: Vec<f64> = s.iter_valid().map(|c| separable(&c).unwrap()).collect();
        let mut sorted = all.clone();
        sorted.sort_by(f64::total_cmp);
        let threshold = sorted[(sorted.len() as f64 * 0.05) as usize];
        let eval = FnEvaluator::new(separable);
        let mut good = 0;
        for seed in 0..50 {
            let r = tune(&s, &eval, Budget { phase1: 30, top_k: 10, seed }).unwrap();
            if r.best.value.unwrap() <= threshold {
                good += 1;
            }
        }
        assert!(good >= 45, "{good}/50 within top 5%");
    }

    #[test]
    fn single_configuration() {
        let s = TuningSpace::synthetic(
            "one",
            vec![TuningParameter { id: "wgX".into(), kind: TuningKind::WorkGroupX, domain: vec![8] }],
        );
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let eval = FnEvaluator::new(|_: &Configuration| {
            calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok(3.0)
        });
        let r = tune(&s, &eval, Budget { phase1: 10, top_k: 5, seed: 1 }).unwrap();
        assert_eq!(calls.into_inner(), 1);
        assert_eq!(r.best.cfg.get("wgX"), Some(8));
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn all_failing() {
        let eval = FnEvaluator::new(|_: &Configuration| Err("boom".to_string()));
        match tune(&space3(), &eval, Budget { phase1: 12, top_k: 3, seed: 0 }) {
            Err(TuneError::NoValidMeasurement { history }) => assert_eq!(history.len(), 12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reproducible_and_parallel_safe() {
        let s = space3();
        let eval = FnEvaluator::new(separable);
        let b = Budget { phase1: 20, top_k: 5, seed: 9 };
        let a = tune(&s, &eval, b).unwrap();
        let p = tune_with(&s, &eval, b, &TuneOptions { jobs: 3, ..Default::default() }).unwrap();
        assert_eq!(a.history, p.history);
        assert_eq!(a.phase1_count, 20);
        assert_eq!(a.phase2_count, 5);
        let p1_best = best_of(&a.history[..20]).unwrap().value.unwrap();
        assert!(a.best.value.unwrap() <= p1_best);
    }

    #[test]
    fn resume_skips_measured() {
        let s = space3();
        let eval = FnEvaluator::new(separable);
        let b = Budget { phase1: 20, top_k: 5, seed: 4 };
        let first = tune(&s, &eval, b).unwrap();
        let prior = first.history[..20].to_vec();
        let again = tune_with(&s, &eval, b, &TuneOptions { prior, jobs: 1 }).unwrap();
        assert_eq!(again.history, first.history);
        assert_eq!(again.evaluations, 5);
    }

    #[test]
    fn whole_space_budget_is_exhaustive() {
        let p = |id: &str, kind, domain: Vec<i64>| TuningParameter { id: id.into(), kind, domain };
        let s = TuningSpace::synthetic(
            "small",
            vec![p("wgX", TuningKind::WorkGroupX, vec![1, 2, 4]), p("cX", TuningKind::CoarsenX, vec![1, 2, 4, 8])],
        );
        let eval = FnEvaluator::new(separable_small);
        let r = tune(&s, &eval, Budget { phase1: 12, top_k: 1, seed: 2 }).unwrap();
        let ex = exhaustive(&s, &eval, 1).unwrap();
        assert_eq!(r.best, ex.best);
    }

    fn separable_small(c: &Configuration) -> Result<f64, String> {
        Ok(1.0 + (c.get("wgX").unwrap() - 2).abs() as f64 + (c.get("cX").unwrap() - 4).abs() as f64)
    }

    #[test]
    fn ranking_rules() {
        let p = |id: &str, kind, domain: Vec<i64>| TuningParameter { id: id.into(), kind, domain };
        let s = TuningSpace::synthetic(
            "r",
            vec![p("wgX", TuningKind::WorkGroupX, vec![1, 2, 4, 8]), p("interleaved", TuningKind::Interleaved, vec![0, 1]), p("cX", TuningKind::CoarsenX, vec![1, 2])],
        );
        let all: Vec<Configuration> = s.iter_valid().collect();
        assert_eq!(all.len(), 16);
        // Constant data trains a constant model: every prediction ties.
        let flat: Vec<_> = all.iter().map(|c| (c.clone(), 5.0)).collect();
        let m = Surrogate::train(&flat, Encoding::for_space(&s), 0).unwrap();
        let ranked: Vec<Configuration> = predict_all(&m, &s, ENUMERATION_CAP, 0).into_iter().map(|r| r.0).collect();
        assert_eq!(ranked, all);
        // Monotone in wgX alone.
        let mono: Vec<_> = all.iter().map(|c| (c.clone(), c.get("wgX").unwrap() as f64)).collect();
        let m = Surrogate::train(&mono, Encoding::for_space(&s), 0).unwrap();
        let ranked = predict_all(&m, &s, ENUMERATION_CAP, 0);
        let wg: Vec<i64> = ranked.iter().map(|r| r.0.get("wgX").unwrap()).collect();
        assert!(wg.windows(2).all(|w| w[0] <= w[1]), "{wg:?}");
    }
}
