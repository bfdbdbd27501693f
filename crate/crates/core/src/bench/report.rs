use std::fmt::Write;

use serde::Serialize;

use super::Verdict;
use crate::csp::{csp_enumerate, CspProblem};
use crate::model::{Assignment, FeatureModel};
use crate::semantics::translate;
use crate::solver::Approach;

/// Models with more configurations than this report the count as unknown.
pub const COUNT_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelStats {
    pub features: usize,
    pub leaves: usize,
    pub hierarchical_constraints: usize,
    pub cross_tree_constraints: usize,
    pub configurations: Option<u64>,
}

impl ModelStats {
    pub fn of(fm: &FeatureModel) -> Self {
        let cf = translate(fm);
        let hierarchical = cf.iter().filter(|f| f.origin.is_hierarchical()).count();
        let found = csp_enumerate(&CspProblem::new(fm, &cf, &Assignment::new()), Some(COUNT_CAP + 1)).len();
        ModelStats {
            features: fm.len(),
            leaves: fm.leaves().len(),
            hierarchical_constraints: hierarchical,
            cross_tree_constraints: fm.ctcs().len(),
            configurations: (found <= COUNT_CAP).then_some(found as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTiming {
    pub probe_id: usize,
    pub verdict: Verdict,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproachResult {
    pub approach: Approach,
    /// Why the approach was not run, e.g. too many features to tabulate.
    pub skipped: Option<String>,
    pub build_ms: f64,
    pub probes: Vec<ProbeTiming>,
}

impl ApproachResult {
    pub(crate) fn skipped(approach: Approach, reason: String) -> Self {
        ApproachResult {
            approach,
            skipped: Some(reason),
            build_ms: 0.0,
            probes: Vec::new(),
        }
    }

    pub(crate) fn measured(approach: Approach, build_ms: f64, probes: Vec<ProbeTiming>) -> Self {
        ApproachResult {
            approach,
            skipped: None,
            build_ms,
            probes,
        }
    }

    /// Mean query time over all probes.
    pub fn mean_ms(&self) -> Option<f64> {
        if self.skipped.is_some() || self.probes.is_empty() {
            return None;
        }
        Some(self.probes.iter().map(|p| p.mean_ms).sum::<f64>() / self.probes.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub model: String,
    pub stats: ModelStats,
    pub results: Vec<ApproachResult>,
}

impl BenchReport {
    pub fn result(&self, approach: Approach) -> Option<&ApproachResult> {
        self.results.iter().find(|r| r.approach == approach)
    }

    /// `model,approach,probe_id,verdict,mean_ms`, one row per probe; a
    /// skipped approach gets a single row of dashes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,approach,probe_id,verdict,mean_ms\n");
        for r in &self.results {
            if r.skipped.is_some() {
                let _ = writeln!(out, "{},{},-,-,-", self.model, r.approach);
                continue;
            }
            for p in &r.probes {
                let _ = writeln!(out, "{},{},{},{},{:.3}", self.model, r.approach, p.probe_id, p.verdict, p.mean_ms);
            }
        }
        out
    }

    pub fn render_table(&self) -> String {
        render_table(std::slice::from_ref(self))
    }
}

/// Mean runtime table: one row per approach, one column per model, "-" for
/// approaches that were skipped.
pub fn render_table(reports: &[BenchReport]) -> String {
    let mut approaches: Vec<Approach> = Vec::new();
    for r in reports.iter().flat_map(|r| &r.results) {
        if !approaches.contains(&r.approach) {
            approaches.push(r.approach);
        }
    }
    approaches.sort();

    let mut rows: Vec<Vec<String>> = vec![std::iter::once("feature model".to_string())
        .chain(reports.iter().map(|r| r.model.clone()))
        .collect()];
    type Stat = fn(&ModelStats) -> String;
    let stat_rows: [(&str, Stat); 5] = [
        ("#features", |s| s.features.to_string()),
        ("#leaf features", |s| s.leaves.to_string()),
        ("#hierarchical constraints", |s| s.hierarchical_constraints.to_string()),
        ("#cross-tree constraints", |s| s.cross_tree_constraints.to_string()),
        ("#configurations", |s| {
            s.configurations.map_or("-".to_string(), |c| c.to_string())
        }),
    ];
    for (label, get) in stat_rows {
        rows.push(
            std::iter::once(label.to_string())
                .chain(reports.iter().map(|r| get(&r.stats)))
                .collect(),
        );
    }
    let header_rows = rows.len();
    for a in &approaches {
        rows.push(
            std::iter::once(a.title().to_string())
                .chain(reports.iter().map(|r| {
                    r.result(*a)
                        .and_then(ApproachResult::mean_ms)
                        .map_or("-".to_string(), |m| format!("{m:.3}"))
                }))
                .collect(),
        );
    }

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        if i == 1 || i == header_rows {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("-+-"));
        }
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
    }
    out
}
