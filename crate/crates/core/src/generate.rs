//! Seeded model and requirement generators for property tests and
//! benchmarks, plus a fixed large model shaped like the WebArch repository
//! model (77 features, 46 leaves, 65 hierarchical constraints, no cross-tree
//! constraints).

use rand::seq::index::sample;
use rand::Rng;

use crate::model::{
    CrossTreeConstraint, CtcKind, Decomposition, Feature, FeatureModel, Group, GroupKind,
};
use crate::Assignment;

/// A random valid model with between 1 and `max_features` features, up to
/// three groups and up to three cross-tree constraints. Void models and
/// dead features are possible.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, max_features: usize) -> FeatureModel {
    assert!(max_features >= 1);
    let n = rng.random_range(1..=max_features);
    let name = |i: usize| format!("f{i}");

    let mut parent_of = vec![usize::MAX; n];
    for (i, p) in parent_of.iter_mut().enumerate().skip(1) {
        *p = rng.random_range(0..i);
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        children[parent_of[i]].push(i);
    }

    let mut is_member = vec![false; n];
    let mut groups = Vec::new();
    for (p, kids) in children.iter().enumerate() {
        if kids.len() >= 2 && groups.len() < 3 && rng.random_bool(0.5) {
            let size = rng.random_range(2..=kids.len());
            let start = rng.random_range(0..=kids.len() - size);
            let members = &kids[start..start + size];
            for &m in members {
                is_member[m] = true;
            }
            let kind = if rng.random_bool(0.5) {
                GroupKind::Alternative
            } else {
                GroupKind::Or
            };
            groups.push(Group {
                parent: name(p),
                kind,
                members: members.iter().map(|&m| name(m)).collect(),
            });
        }
    }

    let features = (0..n)
        .map(|i| {
            let (parent, d) = if i == 0 {
                (None, Decomposition::Root)
            } else if is_member[i] {
                (Some(name(parent_of[i])), Decomposition::GroupMember)
            } else if rng.random_bool(0.35) {
                (Some(name(parent_of[i])), Decomposition::Mandatory)
            } else {
                (Some(name(parent_of[i])), Decomposition::Optional)
            };
            Feature::new(&name(i), parent.as_deref(), d)
        })
        .collect();

    let mut ctcs = Vec::new();
    if n >= 3 {
        for _ in 0..rng.random_range(0..=3) {
            let pair = sample(rng, n - 1, 2);
            let (a, b) = (pair.index(0) + 1, pair.index(1) + 1);
            let kind = if rng.random_bool(0.5) {
                CtcKind::Requires
            } else {
                CtcKind::Excludes
            };
            ctcs.push(CrossTreeConstraint {
                kind,
                lhs: name(a),
                rhs: name(b),
            });
        }
    }

    FeatureModel::new(features, groups, ctcs).expect("generator builds valid models")
}

/// Random requirements over any features of `fm`, binding each with
/// probability `density`.
pub fn random_requirements<R: Rng + ?Sized>(rng: &mut R, fm: &FeatureModel, density: f64) -> Assignment {
    let mut cr = Assignment::new();
    for f in 0..fm.len() {
        if rng.random_bool(density) {
            cr.bind(f, rng.random_bool(0.5));
        }
    }
    cr
}

/// Fixed 77-feature model with the size profile of WebArch: 46 leaves,
/// 60 mandatory/optional edges and 5 groups (16 members), no cross-tree
/// constraints.
pub fn webarch_like_model() -> FeatureModel {
    let mut features = vec![Feature::new("web", None, Decomposition::Root)];
    let mut groups = Vec::new();
    let group_sizes = [4usize, 3, 3, 3, 3];
    let mut extra_leaves = 15;
    for a in 0..10 {
        let area = format!("a{a}");
        let d = if a % 3 == 2 {
            Decomposition::Optional
        } else {
            Decomposition::Mandatory
        };
        features.push(Feature::new(&area, Some("web"), d));
        for s in 0..2 {
            let sub = format!("{area}_{s}");
            let d = if s == 0 {
                Decomposition::Mandatory
            } else {
                Decomposition::Optional
            };
            features.push(Feature::new(&sub, Some(&area), d));
            let mut leaves = 0;
            if s == 0 && a < group_sizes.len() {
                let kind = if a % 2 == 0 {
                    GroupKind::Alternative
                } else {
                    GroupKind::Or
                };
                let members: Vec<String> = (0..group_sizes[a]).map(|g| format!("{sub}_g{g}")).collect();
                for m in &members {
                    features.push(Feature::new(m, Some(&sub), Decomposition::GroupMember));
                }
                groups.push(Group {
                    parent: sub.clone(),
                    kind,
                    members,
                });
            } else {
                leaves = 1;
            }
            if extra_leaves > 0 {
                extra_leaves -= 1;
                leaves += 1;
            }
            for l in 0..leaves {
                let d = if l == 1 {
                    Decomposition::Mandatory
                } else {
                    Decomposition::Optional
                };
                features.push(Feature::new(&format!("{sub}_x{l}"), Some(&sub), d));
            }
        }
    }
    FeatureModel::new(features, groups, Vec::new()).expect("valid")
}
