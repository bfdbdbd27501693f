//! Evaluation protocol: seeded synthesis of leaf requirements, systematic
//! selection of UNSAT and SAT probes, and timing of every approach on them.
//!
//! Requirements are drawn from `ChaCha8Rng::seed_from_u64(plan.seed)`
//! (`rand_chacha` pinned in the manifest), so probe sets are reproducible
//! across platforms and runs.

mod report;

pub use report::{render_table, ApproachResult, BenchReport, ModelStats, ProbeTiming};

use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Assignment, FeatureModel};
use crate::repr::ReprError;
use crate::solver::{Approach, Solver, SolverOptions};

pub const DEFAULT_SEED: u64 = 141982;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePlan {
    pub seed: u64,
    pub sample_count: usize,
    /// Fraction of leaf features bound per requirement, inclusive.
    pub coverage: (f64, f64),
    pub pick_unsat: usize,
    pub pick_sat: usize,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            seed: DEFAULT_SEED,
            sample_count: 25_000,
            coverage: (0.40, 0.60),
            pick_unsat: 10,
            pick_sat: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid sample plan: {0}")]
    InvalidPlan(String),
    #[error("model has no leaf features")]
    NoLeaves,
    #[error("coverage [{lo}, {hi}] of {leaves} leaves admits no positive requirement size")]
    EmptyCoverage { lo: f64, hi: f64, leaves: usize },
    #[error("not enough {verdict} samples: need {needed}, found {available}")]
    Shortfall {
        verdict: Verdict,
        needed: usize,
        available: usize,
    },
    #[error("verdict disagreement on probe {probe}: {approach} says {got}, expected {expected}")]
    Disagreement {
        probe: usize,
        approach: Approach,
        expected: Verdict,
        got: Verdict,
    },
    #[error("{approach} returned a configuration violating the model or requirements on probe {probe}")]
    InvalidSolution { probe: usize, approach: Approach },
    #[error(transparent)]
    Repr(#[from] ReprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Sat,
    Unsat,
}

impl Verdict {
    pub fn from_sat(sat: bool) -> Self {
        if sat {
            Verdict::Sat
        } else {
            Verdict::Unsat
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
        })
    }
}

/// Requirement sizes admitted by the coverage interval over `leaves`
/// leaves, rounding the bounds inward.
pub fn coverage_bounds(leaves: usize, coverage: (f64, f64)) -> Result<(usize, usize), BenchError> {
    let (lo, hi) = coverage;
    if !(0.0 < lo && lo <= hi && hi <= 1.0) {
        return Err(BenchError::InvalidPlan(format!(
            "coverage must satisfy 0 < lo <= hi <= 1, got [{lo}, {hi}]"
        )));
    }
    if leaves == 0 {
        return Err(BenchError::NoLeaves);
    }
    const EPS: f64 = 1e-9;
    let l = leaves as f64;
    let kmin = ((lo * l - EPS).ceil() as usize).max(1);
    let kmax = ((hi * l + EPS).floor() as usize).min(leaves);
    if kmin > kmax {
        return Err(BenchError::EmptyCoverage { lo, hi, leaves });
    }
    Ok((kmin, kmax))
}

/// `plan.sample_count` requirements, each binding between the coverage
/// bounds of distinct leaves to uniform values.
pub fn sample_requirements(fm: &FeatureModel, plan: &SamplePlan) -> Result<Vec<Assignment>, BenchError> {
    let leaves = fm.leaves();
    let (kmin, kmax) = coverage_bounds(leaves.len(), plan.coverage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = Vec::with_capacity(plan.sample_count);
    for _ in 0..plan.sample_count {
        let k = rng.random_range(kmin..=kmax);
        let chosen = sample(&mut rng, leaves.len(), k);
        let cr = chosen
            .iter()
            .map(|i| (leaves[i], rng.random_bool(0.5)))
            .collect();
        out.push(cr);
    }
    Ok(out)
}

/// Picks `k` items at indices `floor(i * N / k)`.
pub fn systematic_indices(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| i * n / k).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub id: usize,
    /// Position in the sampled pool.
    pub sample_index: usize,
    pub verdict: Verdict,
    pub cr: Assignment,
}

/// Partitions `samples` by the oracle's verdict and selects probes by
/// equal-interval sampling from each partition: UNSAT probes first, then
/// SAT probes.
pub fn systematic_select<E>(
    samples: &[Assignment],
    mut is_sat: impl FnMut(&Assignment) -> Result<bool, E>,
    plan: &SamplePlan,
) -> Result<Vec<Probe>, BenchError>
where
    BenchError: From<E>,
{
    let mut unsat = Vec::new();
    let mut sat = Vec::new();
    for (i, cr) in samples.iter().enumerate() {
        if is_sat(cr)? {
            sat.push(i);
        } else {
            unsat.push(i);
        }
    }
    let mut probes = Vec::new();
    for (pool, needed, verdict) in [
        (&unsat, plan.pick_unsat, Verdict::Unsat),
        (&sat, plan.pick_sat, Verdict::Sat),
    ] {
        if pool.len() < needed {
            return Err(BenchError::Shortfall {
                verdict,
                needed,
                available: pool.len(),
            });
        }
        for j in systematic_indices(pool.len(), needed) {
            let sample_index = pool[j];
            probes.push(Probe {
                id: probes.len(),
                sample_index,
                verdict,
                cr: samples[sample_index].clone(),
            });
        }
    }
    Ok(probes)
}

/// Samples requirements and selects probes using the CSP baseline as the
/// verdict oracle.
pub fn plan_probes(fm: &Arc<FeatureModel>, plan: &SamplePlan) -> Result<Vec<Probe>, BenchError> {
    let samples = sample_requirements(fm, plan)?;
    let oracle = Solver::build(fm.clone(), Approach::Csp, SolverOptions::default())?;
    systematic_select(&samples, |cr| oracle.solve(cr).map(|c| c.is_some()), plan)
}

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub warmup: usize,
    pub reps: usize,
    pub solver: SolverOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            warmup: 5,
            reps: 50,
            solver: SolverOptions::default(),
        }
    }
}

/// Times `approaches` on every probe. Representations are built once per
/// approach and their build time is reported apart from query time. An
/// all-configs table above the threshold is reported as skipped.
pub fn run_benchmark(
    name: &str,
    fm: &Arc<FeatureModel>,
    probes: &[Probe],
    approaches: &[Approach],
    cfg: &BenchConfig,
) -> Result<BenchReport, BenchError> {
    let mut results = Vec::new();
    for &approach in approaches {
        let solver = match Solver::build(fm.clone(), approach, cfg.solver) {
            Ok(s) => s,
            Err(e @ ReprError::TooLarge { .. }) => {
                results.push(ApproachResult::skipped(approach, e.to_string()));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mut timings = Vec::with_capacity(probes.len());
        for probe in probes {
            for _ in 0..cfg.warmup {
                std::hint::black_box(solver.solve(&probe.cr)?);
            }
            let mut result = None;
            let started = Instant::now();
            for _ in 0..cfg.reps.max(1) {
                result = std::hint::black_box(solver.solve(&probe.cr)?);
            }
            let mean_ms = started.elapsed().as_secs_f64() * 1000.0 / cfg.reps.max(1) as f64;

            let got = Verdict::from_sat(result.is_some());
            if got != probe.verdict {
                return Err(BenchError::Disagreement {
                    probe: probe.id,
                    approach,
                    expected: probe.verdict,
                    got,
                });
            }
            if let Some(conf) = &result {
                if !solver.constraints().satisfied_by(conf) || !probe.cr.consistent_with(conf) {
                    return Err(BenchError::InvalidSolution {
                        probe: probe.id,
                        approach,
                    });
                }
            }
            timings.push(ProbeTiming {
                probe_id: probe.id,
                verdict: got,
                mean_ms,
            });
        }
        results.push(ApproachResult::measured(
            approach,
            solver.build_time().as_secs_f64() * 1000.0,
            timings,
        ));
    }
    Ok(BenchReport {
        model: name.to_string(),
        stats: ModelStats::of(fm),
        results,
    })
}
