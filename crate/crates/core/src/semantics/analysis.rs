use std::collections::BTreeSet;

use serde::Serialize;

use super::ConstraintSet;
use crate::csp::{csp_solve, CspProblem};
use crate::model::{Assignment, Configuration, Decomposition, FeatureModel};
use crate::repr::{build_per_feature, ConfigTask, Reductions, EXHAUSTIVE_THRESHOLD};

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    /// Configurations are counted only for models up to this many features.
    pub exhaustive_threshold: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            exhaustive_threshold: EXHAUSTIVE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisResult {
    pub void: bool,
    /// Canonical indices of features included in no configuration.
    pub dead: BTreeSet<usize>,
    /// Canonical indices of non-mandatory features included whenever their
    /// parent is.
    pub false_optional: BTreeSet<usize>,
    pub configuration_count: Option<u64>,
}

pub fn analyze(fm: &FeatureModel, cf: &ConstraintSet) -> AnalysisResult {
    analyze_with(fm, cf, AnalysisOptions::default())
}

/// Satisfiability probes through the CSP solver: one per feature for
/// deadness, one per remaining optional-looking feature for false
/// optionality. Solutions found along the way rule out later probes.
pub fn analyze_with(fm: &FeatureModel, cf: &ConstraintSet, opts: AnalysisOptions) -> AnalysisResult {
    let n = fm.len();
    let probe = |pairs: &[(usize, bool)]| -> Option<Configuration> {
        let cr = Assignment::from_pairs(pairs.iter().copied());
        csp_solve(&CspProblem::new(fm, cf, &cr))
    };

    let Some(first) = probe(&[]) else {
        return AnalysisResult {
            void: true,
            dead: (0..n).collect(),
            false_optional: BTreeSet::new(),
            configuration_count: (n <= opts.exhaustive_threshold).then_some(0),
        };
    };
    let mut witnesses = vec![first];

    let mut dead = BTreeSet::new();
    for f in 0..n {
        if witnesses.iter().any(|w| w.get(f)) {
            continue;
        }
        match probe(&[(f, true)]) {
            Some(w) => witnesses.push(w),
            None => {
                dead.insert(f);
            }
        }
    }

    let mut false_optional = BTreeSet::new();
    for f in 0..n {
        let Some(p) = fm.parent(f) else { continue };
        if dead.contains(&f) || fm.feature(f).decomposition == Decomposition::Mandatory {
            continue;
        }
        if witnesses.iter().any(|w| w.get(p) && !w.get(f)) {
            continue;
        }
        match probe(&[(p, true), (f, false)]) {
            Some(w) => witnesses.push(w),
            None => {
                false_optional.insert(f);
            }
        }
    }

    let configuration_count = (n <= opts.exhaustive_threshold).then(|| {
        let repr = build_per_feature(fm, cf, Reductions::root_only());
        repr.count(&ConfigTask::new(fm, Assignment::new()))
            .expect("task over the same model")
    });

    AnalysisResult {
        void: false,
        dead,
        false_optional,
        configuration_count,
    }
}
