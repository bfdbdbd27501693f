//! Diagnoses read directly off configuration tables: for each configuration
//! the requirements it disagrees with form a diagnosis, whose removal leaves
//! requirements consistent with that configuration.

use std::collections::HashMap;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::model::{Assignment, Configuration, FeatureModel};
use crate::repr::{build_all_configs, build_per_feature, ReprError, Reductions, EXHAUSTIVE_THRESHOLD};
use crate::semantics::ConstraintSet;

/// Default number of configurations streamed when the configuration space
/// is too large to tabulate.
pub const DEFAULT_STREAM_BOUND: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnosis {
    /// Requirement bindings in conflict with the witness.
    pub delta: Assignment,
    pub witness: Configuration,
    /// Witness values for the features in `delta`.
    pub suggested: Assignment,
}

impl Diagnosis {
    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosisReport {
    pub diagnoses: Vec<Diagnosis>,
    /// Configurations compared against the requirements.
    pub scanned: usize,
    /// True when the scanned set was the full configuration space, so the
    /// diagnoses are set-minimal globally rather than only within the scan.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosisError {
    #[error("no configurations available")]
    NoConfigurations,
    #[error(transparent)]
    Repr(#[from] ReprError),
}

fn is_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Derives the set-minimal diagnoses of `cr` against `configs`, ordered by
/// size then canonical order, at most `max_results` of them.
pub fn diagnose(
    cr: &Assignment,
    configs: impl IntoIterator<Item = Configuration>,
    max_results: usize,
) -> Result<DiagnosisReport, DiagnosisError> {
    let bound: Vec<(usize, bool)> = cr.iter().collect();
    let words = bound.len().div_ceil(64).max(1);

    // Distinct mismatch sets (as bitsets over cr positions), first witness.
    let mut first_witness: HashMap<Vec<u64>, Configuration> = HashMap::new();
    let mut scanned = 0usize;
    for conf in configs {
        scanned += 1;
        let mut bits = vec![0u64; words];
        for (i, &(f, v)) in bound.iter().enumerate() {
            if conf.get(f) != v {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        first_witness.entry(bits).or_insert(conf);
    }
    if scanned == 0 {
        return Err(DiagnosisError::NoConfigurations);
    }

    let positions = |bits: &[u64]| -> Vec<usize> {
        (0..bound.len())
            .filter(|&i| bits[i / 64] >> (i % 64) & 1 == 1)
            .collect()
    };
    let mut candidates: Vec<(Vec<usize>, Vec<u64>)> = first_witness
        .keys()
        .map(|bits| (positions(bits), bits.clone()))
        .collect();
    // cr positions follow canonical order, so this is (size, canonical).
    candidates.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));

    let mut minimal: Vec<(Vec<usize>, Vec<u64>)> = Vec::new();
    for (pos, bits) in candidates {
        if minimal.iter().any(|(_, m)| is_subset(m, &bits)) {
            continue;
        }
        minimal.push((pos, bits));
    }

    let diagnoses = minimal
        .into_iter()
        .take(max_results)
        .map(|(pos, bits)| {
            let witness = first_witness.remove(&bits).expect("witness recorded");
            let delta: Assignment = pos.iter().map(|&i| bound[i]).collect();
            let suggested = pos
                .iter()
                .map(|&i| (bound[i].0, witness.get(bound[i].0)))
                .collect();
            Diagnosis {
                delta,
                witness,
                suggested,
            }
        })
        .collect();

    Ok(DiagnosisReport {
        diagnoses,
        scanned,
        complete: false,
    })
}

/// Replaces the diagnosed bindings by the witness's values.
pub fn apply_diagnosis(cr: &Assignment, d: &Diagnosis) -> Assignment {
    let mut out = cr.clone();
    for (f, v) in d.suggested.iter() {
        out.bind(f, v);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct DiagnosisOptions {
    /// Feature count up to which the all-configs table is used.
    pub exhaustive_threshold: usize,
    /// Configurations streamed otherwise.
    pub stream_bound: usize,
}

impl Default for DiagnosisOptions {
    fn default() -> Self {
        DiagnosisOptions {
            exhaustive_threshold: EXHAUSTIVE_THRESHOLD,
            stream_bound: DEFAULT_STREAM_BOUND,
        }
    }
}

/// Diagnoses `cr` against the model's configurations: the full
/// all-configs table when the model is small enough, otherwise a bounded
/// stream of configurations from the per-feature encoding with `cr`
/// dropped.
pub fn diagnose_model(
    fm: &FeatureModel,
    cf: &ConstraintSet,
    cr: &Assignment,
    max_results: usize,
    opts: DiagnosisOptions,
) -> Result<DiagnosisReport, DiagnosisError> {
    match build_all_configs(fm, cf, opts.exhaustive_threshold) {
        Ok(repr) => {
            let rows = repr.tables[0].rows().iter().cloned().map(Configuration);
            let mut report = diagnose(cr, rows, max_results)?;
            report.complete = true;
            Ok(report)
        }
        Err(ReprError::TooLarge { .. }) => {
            let repr = build_per_feature(fm, cf, Reductions::root_only());
            let mut configs = Vec::new();
            repr.for_each_config(fm, &Assignment::new(), Some(opts.stream_bound), |c| {
                configs.push(c);
                ControlFlow::Continue(())
            })?;
            diagnose(cr, configs, max_results)
        }
        Err(e) => Err(e.into()),
    }
}
