//! One entry point over the four configuration approaches: the three table
//! encodings and the CSP baseline.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::csp::{csp_count, csp_enumerate, csp_solve, CspProblem};
use crate::model::{Assignment, Configuration, FeatureModel};
use crate::repr::{
    build_all_configs, build_per_constraint, build_per_feature, ConfigTask, Reductions,
    ReprError, ReprKind, Representation, EXHAUSTIVE_THRESHOLD,
};
use crate::semantics::{analyze_with, translate, AnalysisOptions, AnalysisResult, ConstraintSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    AllConfigs,
    PerFeature,
    PerConstraint,
    Csp,
}

impl Approach {
    pub const ALL: [Approach; 4] = [
        Approach::AllConfigs,
        Approach::PerFeature,
        Approach::PerConstraint,
        Approach::Csp,
    ];

    pub fn repr_kind(self) -> Option<ReprKind> {
        match self {
            Approach::AllConfigs => Some(ReprKind::AllConfigs),
            Approach::PerFeature => Some(ReprKind::PerFeature),
            Approach::PerConstraint => Some(ReprKind::PerConstraint),
            Approach::Csp => None,
        }
    }

    /// Row label used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            Approach::AllConfigs => "all configurations",
            Approach::PerFeature => "one table per feature",
            Approach::PerConstraint => "one table per constraint",
            Approach::Csp => "CSP",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::AllConfigs => "all-configs",
            Approach::PerFeature => "per-feature",
            Approach::PerConstraint => "per-constraint",
            Approach::Csp => "csp",
        })
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" | "all-configs" => Ok(Approach::AllConfigs),
            "per-feature" => Ok(Approach::PerFeature),
            "per-constraint" => Ok(Approach::PerConstraint),
            "csp" => Ok(Approach::Csp),
            other => Err(format!(
                "unknown approach {other:?} (expected all, per-feature, per-constraint or csp)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub exhaustive_threshold: usize,
    /// Root, dead and false-optional reductions on per-feature tables.
    pub reductions: bool,
    /// Pairwise semi-join pruning of per-constraint tables.
    pub prune_pairwise: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            exhaustive_threshold: EXHAUSTIVE_THRESHOLD,
            reductions: true,
            prune_pairwise: true,
        }
    }
}

/// A prepared solver for one model and approach. Immutable after build.
#[derive(Debug, Clone)]
pub struct Solver {
    approach: Approach,
    model: Arc<FeatureModel>,
    cf: ConstraintSet,
    repr: Option<Representation>,
    analysis: Option<AnalysisResult>,
    build_time: Duration,
}

impl Solver {
    /// Translates the model and builds the approach's representation. Fails
    /// with [`ReprError::TooLarge`] for all-configs above the threshold.
    pub fn build(
        model: Arc<FeatureModel>,
        approach: Approach,
        opts: SolverOptions,
    ) -> Result<Self, ReprError> {
        let started = Instant::now();
        let cf = translate(&model);
        let mut analysis = None;
        let repr = match approach {
            Approach::AllConfigs => Some(build_all_configs(&model, &cf, opts.exhaustive_threshold)?),
            Approach::PerFeature => {
                if opts.reductions {
                    let a = analyze_with(
                        &model,
                        &cf,
                        AnalysisOptions {
                            exhaustive_threshold: 0,
                        },
                    );
                    let r = build_per_feature(&model, &cf, Reductions::all(&a));
                    analysis = Some(a);
                    Some(r)
                } else {
                    Some(build_per_feature(&model, &cf, Reductions::none()))
                }
            }
            Approach::PerConstraint => {
                Some(build_per_constraint(&model, &cf, opts.prune_pairwise))
            }
            Approach::Csp => None,
        };
        Ok(Solver {
            approach,
            model,
            cf,
            repr,
            analysis,
            build_time: started.elapsed(),
        })
    }

    pub fn approach(&self) -> Approach {
        self.approach
    }

    pub fn model(&self) -> &FeatureModel {
        &self.model
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.cf
    }

    pub fn representation(&self) -> Option<&Representation> {
        self.repr.as_ref()
    }

    /// Analysis computed for per-feature reductions, if any.
    pub fn analysis(&self) -> Option<&AnalysisResult> {
        self.analysis.as_ref()
    }

    pub fn build_time(&self) -> Duration {
        self.build_time
    }

    /// A configuration satisfying the model and `cr`, or `None`.
    pub fn solve(&self, cr: &Assignment) -> Result<Option<Configuration>, ReprError> {
        match &self.repr {
            Some(r) => r.solve_config(&self.model, cr),
            None => Ok(csp_solve(&CspProblem::new(&self.model, &self.cf, cr))),
        }
    }

    /// Up to `limit` configurations satisfying the model and `cr`, in the
    /// approach's enumeration order.
    pub fn enumerate(&self, cr: &Assignment, limit: Option<usize>) -> Result<Vec<Configuration>, ReprError> {
        match &self.repr {
            Some(r) => {
                let mut out = Vec::new();
                r.for_each_config(&self.model, cr, limit, |c| {
                    out.push(c);
                    ControlFlow::Continue(())
                })?;
                Ok(out)
            }
            None => Ok(csp_enumerate(&CspProblem::new(&self.model, &self.cf, cr), limit)),
        }
    }

    /// Number of configurations satisfying the model and `cr`.
    pub fn count(&self, cr: &Assignment) -> Result<u64, ReprError> {
        self.count_up_to(cr, None)
    }

    /// Counts, stopping at `cap` when given.
    pub fn count_up_to(&self, cr: &Assignment, cap: Option<usize>) -> Result<u64, ReprError> {
        match &self.repr {
            Some(r) => r.count_up_to(&ConfigTask::new(&self.model, cr.clone()), cap),
            None => {
                let p = CspProblem::new(&self.model, &self.cf, cr);
                Ok(match cap {
                    None => csp_count(&p),
                    Some(k) => csp_enumerate(&p, Some(k)).len() as u64,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::survey_model;

    #[test]
    fn every_approach_counts_fifteen() {
        let fm = Arc::new(survey_model());
        for a in Approach::ALL {
            let s = Solver::build(fm.clone(), a, SolverOptions::default()).unwrap();
            assert_eq!(s.count(&Assignment::new()).unwrap(), 15, "{a}");
            assert_eq!(s.count_up_to(&Assignment::new(), Some(4)).unwrap(), 4, "{a}");
            let cr = Assignment::parse(&fm, "s=1,p=1,n=1,mm=0").unwrap();
            let all = s.enumerate(&cr, None).unwrap();
            assert_eq!(all.len(), 2, "{a}");
            assert!(all.iter().all(|c| s.constraints().satisfied_by(c) && cr.consistent_with(c)));
            assert_eq!(s.enumerate(&cr, Some(1)).unwrap().len(), 1);
        }
    }

    #[test]
    fn approach_names_round_trip() {
        for a in Approach::ALL {
            assert_eq!(a.to_string().parse::<Approach>().unwrap(), a);
        }
        assert_eq!("all".parse::<Approach>().unwrap(), Approach::AllConfigs);
        assert!("sat".parse::<Approach>().is_err());
    }
}
