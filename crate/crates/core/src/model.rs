//! Feature model domain types: the feature tree, groups, cross-tree
//! constraints, and (partial or total) assignments of features to {0,1}.
//!
//! A [`FeatureModel`] is always structurally valid and stored in canonical
//! order: preorder of the tree, children in declaration order, with the
//! members of a group kept contiguous at the position of the group's first
//! member. Feature indices (`usize`) used throughout the crate refer to this
//! order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Derives a stable feature id from a display name: lowercase, every
/// non-alphanumeric character replaced by `_`.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decomposition {
    Root,
    Mandatory,
    Optional,
    GroupMember,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub id: String,
    pub name: String,
    pub parent: Option<String>,
    pub decomposition: Decomposition,
}

impl Feature {
    /// Creates a feature whose id is the slug of `name`. `parent` is a
    /// feature id.
    pub fn new(name: &str, parent: Option<&str>, decomposition: Decomposition) -> Self {
        Feature {
            id: slug(name),
            name: name.to_string(),
            parent: parent.map(str::to_string),
            decomposition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    /// Exactly one member iff the parent is included.
    Alternative,
    /// At least one member iff the parent is included.
    Or,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::Alternative => "alternative",
            GroupKind::Or => "or",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub parent: String,
    pub kind: GroupKind,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CtcKind {
    Requires,
    Excludes,
}

impl fmt::Display for CtcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CtcKind::Requires => "requires",
            CtcKind::Excludes => "excludes",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTreeConstraint {
    pub kind: CtcKind,
    pub lhs: String,
    pub rhs: String,
}

/// One structural defect found by [`validate_model`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("no root feature")]
    NoRoot,
    #[error("multiple roots: {}", .0.join(", "))]
    MultipleRoots(Vec<String>),
    #[error("root feature {0} must not have a parent")]
    RootWithParent(String),
    #[error("feature {0} has no parent but is not declared as root")]
    MisdeclaredRoot(String),
    #[error("duplicate feature id {0}")]
    DuplicateId(String),
    #[error("duplicate feature name {0}")]
    DuplicateName(String),
    #[error("unknown feature {id} referenced by {context}")]
    UnknownFeature { id: String, context: String },
    #[error("cycle in parent links through {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("group under {parent} has {size} member(s); at least 2 required")]
    GroupTooSmall { parent: String, size: usize },
    #[error("group member {member} does not have the group's parent {parent}")]
    MemberParentMismatch { member: String, parent: String },
    #[error("feature {0} belongs to more than one group")]
    MultipleGroups(String),
    #[error("feature {0} is declared as a group member but belongs to no group")]
    MemberWithoutGroup(String),
    #[error("feature {0} belongs to a group but is not declared as a group member")]
    NotDeclaredMember(String),
    #[error("cross-tree constraint {kind} {id} {id}: both sides are the same feature")]
    SelfConstraint { kind: CtcKind, id: String },
}

/// Outcome of [`validate_model`]: ok iff `errors` is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.errors.is_empty() {
            return f.write_str("ok");
        }
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

/// Checks every structural invariant of a feature model and reports all
/// violations found.
pub fn validate_model(
    features: &[Feature],
    groups: &[Group],
    ctcs: &[CrossTreeConstraint],
) -> ValidationReport {
    let mut errors = Vec::new();

    let mut ids = HashSet::new();
    let mut names = HashSet::new();
    for f in features {
        if !ids.insert(f.id.as_str()) {
            errors.push(ValidationError::DuplicateId(f.id.clone()));
        }
        if !names.insert(f.name.as_str()) {
            errors.push(ValidationError::DuplicateName(f.name.clone()));
        }
    }

    let roots: Vec<&Feature> = features
        .iter()
        .filter(|f| f.parent.is_none() || f.decomposition == Decomposition::Root)
        .collect();
    match roots.len() {
        0 => errors.push(ValidationError::NoRoot),
        1 => {}
        _ => errors.push(ValidationError::MultipleRoots(
            roots.iter().map(|f| f.id.clone()).collect(),
        )),
    }
    for f in &roots {
        match (&f.parent, f.decomposition) {
            (Some(_), Decomposition::Root) => {
                errors.push(ValidationError::RootWithParent(f.id.clone()))
            }
            (None, d) if d != Decomposition::Root => {
                errors.push(ValidationError::MisdeclaredRoot(f.id.clone()))
            }
            _ => {}
        }
    }

    for f in features {
        if let Some(p) = &f.parent {
            if !ids.contains(p.as_str()) {
                errors.push(ValidationError::UnknownFeature {
                    id: p.clone(),
                    context: format!("parent of {}", f.id),
                });
            }
        }
    }

    // Cycle detection: follow parent links from each feature.
    let parent_of: HashMap<&str, &str> = features
        .iter()
        .filter_map(|f| f.parent.as_deref().map(|p| (f.id.as_str(), p)))
        .collect();
    let mut reported: HashSet<&str> = HashSet::new();
    for f in features {
        let mut path = vec![f.id.as_str()];
        let mut seen: HashSet<&str> = HashSet::from([f.id.as_str()]);
        let mut cur = f.id.as_str();
        while let Some(&p) = parent_of.get(cur) {
            if !seen.insert(p) {
                let start = path.iter().position(|x| *x == p).unwrap_or(0);
                let cycle: Vec<&str> = path[start..].to_vec();
                if cycle.iter().all(|c| !reported.contains(c)) {
                    reported.extend(cycle.iter().copied());
                    let mut names: Vec<String> = cycle.iter().map(|s| s.to_string()).collect();
                    names.push(p.to_string());
                    errors.push(ValidationError::Cycle(names));
                }
                break;
            }
            path.push(p);
            cur = p;
        }
    }

    let mut membership: HashMap<&str, usize> = HashMap::new();
    for g in groups {
        if !ids.contains(g.parent.as_str()) {
            errors.push(ValidationError::UnknownFeature {
                id: g.parent.clone(),
                context: format!("{} group", g.kind),
            });
        }
        if g.members.len() < 2 {
            errors.push(ValidationError::GroupTooSmall {
                parent: g.parent.clone(),
                size: g.members.len(),
            });
        }
        for m in &g.members {
            match features.iter().find(|f| &f.id == m) {
                None => errors.push(ValidationError::UnknownFeature {
                    id: m.clone(),
                    context: format!("{} group under {}", g.kind, g.parent),
                }),
                Some(f) => {
                    if f.parent.as_deref() != Some(g.parent.as_str()) {
                        errors.push(ValidationError::MemberParentMismatch {
                            member: m.clone(),
                            parent: g.parent.clone(),
                        });
                    }
                    if f.decomposition != Decomposition::GroupMember {
                        errors.push(ValidationError::NotDeclaredMember(m.clone()));
                    }
                }
            }
            let n = membership.entry(m.as_str()).or_insert(0);
            *n += 1;
            if *n == 2 {
                errors.push(ValidationError::MultipleGroups(m.clone()));
            }
        }
    }
    for f in features {
        if f.decomposition == Decomposition::GroupMember && !membership.contains_key(f.id.as_str())
        {
            errors.push(ValidationError::MemberWithoutGroup(f.id.clone()));
        }
    }

    for c in ctcs {
        for side in [&c.lhs, &c.rhs] {
            if !ids.contains(side.as_str()) {
                errors.push(ValidationError::UnknownFeature {
                    id: side.clone(),
                    context: format!("{} {} {}", c.kind, c.lhs, c.rhs),
                });
            }
        }
        if c.lhs == c.rhs {
            errors.push(ValidationError::SelfConstraint {
                kind: c.kind,
                id: c.lhs.clone(),
            });
        }
    }

    ValidationReport { errors }
}

/// A structurally valid feature model in canonical order.
#[derive(Debug, Clone)]
pub struct FeatureModel {
    features: Vec<Feature>,
    groups: Vec<Group>,
    ctcs: Vec<CrossTreeConstraint>,
    index: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    group_of: Vec<Option<usize>>,
}

impl PartialEq for FeatureModel {
    fn eq(&self, other: &Self) -> bool {
        self.features == other.features && self.groups == other.groups && self.ctcs == other.ctcs
    }
}

impl Eq for FeatureModel {}

impl FeatureModel {
    /// Validates the parts and brings them into canonical order.
    pub fn new(
        features: Vec<Feature>,
        groups: Vec<Group>,
        ctcs: Vec<CrossTreeConstraint>,
    ) -> Result<Self, ValidationReport> {
        let report = validate_model(&features, &groups, &ctcs);
        if !report.is_ok() {
            return Err(report);
        }

        let decl: HashMap<&str, usize> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.as_str(), i))
            .collect();
        let member_group: HashMap<&str, usize> = groups
            .iter()
            .enumerate()
            .flat_map(|(gi, g)| g.members.iter().map(move |m| (m.as_str(), gi)))
            .collect();

        // Children per declared feature, in declaration order, with group
        // members pulled together at their first member's position.
        let mut decl_children: Vec<Vec<usize>> = vec![Vec::new(); features.len()];
        for (i, f) in features.iter().enumerate() {
            if let Some(p) = &f.parent {
                decl_children[decl[p.as_str()]].push(i);
            }
        }
        for kids in &mut decl_children {
            let mut ordered = Vec::with_capacity(kids.len());
            let mut placed: HashSet<usize> = HashSet::new();
            for &k in kids.iter() {
                if placed.contains(&k) {
                    continue;
                }
                match member_group.get(features[k].id.as_str()) {
                    Some(&gi) => {
                        for &m in kids.iter() {
                            if member_group.get(features[m].id.as_str()) == Some(&gi) {
                                placed.insert(m);
                                ordered.push(m);
                            }
                        }
                    }
                    None => {
                        placed.insert(k);
                        ordered.push(k);
                    }
                }
            }
            *kids = ordered;
        }

        let root = features
            .iter()
            .position(|f| f.decomposition == Decomposition::Root)
            .expect("validated model has a root");
        let mut order = Vec::with_capacity(features.len());
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            order.push(i);
            stack.extend(decl_children[i].iter().rev());
        }

        let features: Vec<Feature> = order.iter().map(|&i| features[i].clone()).collect();
        let index: HashMap<String, usize> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.clone(), i))
            .collect();
        let by_name = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), i))
            .collect();
        let parent: Vec<Option<usize>> = features
            .iter()
            .map(|f| f.parent.as_ref().map(|p| index[p]))
            .collect();
        let mut children = vec![Vec::new(); features.len()];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }

        let mut groups: Vec<Group> = groups
            .into_iter()
            .map(|mut g| {
                g.members.sort_by_key(|m| index[m]);
                g
            })
            .collect();
        groups.sort_by_key(|g| (index[&g.parent], index[&g.members[0]]));
        let mut group_of = vec![None; features.len()];
        for (gi, g) in groups.iter().enumerate() {
            for m in &g.members {
                group_of[index[m]] = Some(gi);
            }
        }

        Ok(FeatureModel {
            features,
            groups,
            ctcs,
            index,
            by_name,
            parent,
            children,
            group_of,
        })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn ctcs(&self) -> &[CrossTreeConstraint] {
        &self.ctcs
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, idx: usize) -> &Feature {
        &self.features[idx]
    }

    /// Short label of a feature (its id).
    pub fn id(&self, idx: usize) -> &str {
        &self.features[idx].id
    }

    /// The root is always at index 0.
    pub fn root(&self) -> usize {
        0
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Resolves a feature by id, falling back to its display name.
    pub fn lookup(&self, key: &str) -> Option<usize> {
        self.index
            .get(key)
            .or_else(|| self.by_name.get(key))
            .copied()
    }

    pub fn parent(&self, idx: usize) -> Option<usize> {
        self.parent[idx]
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn group_of(&self, idx: usize) -> Option<&Group> {
        self.group_of[idx].map(|g| &self.groups[g])
    }

    /// Features without children, in canonical order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.children[i].is_empty())
            .collect()
    }

    /// Re-runs structural validation; always ok for a constructed model.
    pub fn validate(&self) -> ValidationReport {
        validate_model(&self.features, &self.groups, &self.ctcs)
    }
}

/// Ids of the leaf features, in canonical order.
pub fn leaf_features(fm: &FeatureModel) -> Vec<&str> {
    fm.leaves().into_iter().map(|i| fm.id(i)).collect()
}

/// Name-based construction helper. Parent and constraint arguments are
/// feature names; ids are derived with [`slug`].
#[derive(Debug, Clone, Default)]
pub struct ModelBuilder {
    features: Vec<Feature>,
    groups: Vec<Group>,
    ctcs: Vec<CrossTreeConstraint>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root(&mut self, name: &str) -> &mut Self {
        self.features
            .push(Feature::new(name, None, Decomposition::Root));
        self
    }

    pub fn mandatory(&mut self, parent: &str, name: &str) -> &mut Self {
        self.child(parent, name, Decomposition::Mandatory)
    }

    pub fn optional(&mut self, parent: &str, name: &str) -> &mut Self {
        self.child(parent, name, Decomposition::Optional)
    }

    fn child(&mut self, parent: &str, name: &str, d: Decomposition) -> &mut Self {
        self.features
            .push(Feature::new(name, Some(&slug(parent)), d));
        self
    }

    pub fn group(&mut self, parent: &str, kind: GroupKind, members: &[&str]) -> &mut Self {
        for m in members {
            self.child(parent, m, Decomposition::GroupMember);
        }
        self.groups.push(Group {
            parent: slug(parent),
            kind,
            members: members.iter().map(|m| slug(m)).collect(),
        });
        self
    }

    pub fn requires(&mut self, lhs: &str, rhs: &str) -> &mut Self {
        self.ctc(CtcKind::Requires, lhs, rhs)
    }

    pub fn excludes(&mut self, lhs: &str, rhs: &str) -> &mut Self {
        self.ctc(CtcKind::Excludes, lhs, rhs)
    }

    pub fn ctc(&mut self, kind: CtcKind, lhs: &str, rhs: &str) -> &mut Self {
        self.ctcs.push(CrossTreeConstraint {
            kind,
            lhs: slug(lhs),
            rhs: slug(rhs),
        });
        self
    }

    pub fn build(&self) -> Result<FeatureModel, ValidationReport> {
        FeatureModel::new(
            self.features.clone(),
            self.groups.clone(),
            self.ctcs.clone(),
        )
    }
}

/// The survey software model used as the running example: payment with an
/// alternative {license, no license}, optional AB testing and statistics,
/// mandatory questions with an or-group {multiple choice, multimedia}.
pub fn survey_model() -> FeatureModel {
    ModelBuilder::new()
        .root("s")
        .mandatory("s", "p")
        .optional("s", "t")
        .optional("s", "st")
        .mandatory("s", "q")
        .group("p", GroupKind::Alternative, &["l", "n"])
        .group("q", GroupKind::Or, &["m", "mm"])
        .excludes("t", "n")
        .requires("t", "st")
        .build()
        .expect("survey model is valid")
}

/// A total assignment of the model's features, indexed canonically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration(pub Vec<bool>);

impl Configuration {
    pub fn get(&self, idx: usize) -> bool {
        self.0[idx]
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses a 0/1 tuple such as `(1,1,0,1,0,1,1,1,0)`.
    pub fn from_bits(bits: &[u8]) -> Self {
        Configuration(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn to_assignment(&self) -> Assignment {
        Assignment {
            bindings: self.0.iter().copied().enumerate().collect(),
        }
    }

    /// `{s=1, p=1, ...}` in canonical order.
    pub fn render(&self, fm: &FeatureModel) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{}={}", fm.id(i), u8::from(*v)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// A bad atom in a requirement string, with the reason it was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BadAtom {
    pub atom: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid requirement atoms: {}", .bad.iter().map(|b| format!("{} ({})", b.atom, b.reason)).collect::<Vec<_>>().join(", "))]
pub struct AssignmentError {
    pub bad: Vec<BadAtom>,
}

/// A partial assignment (requirements `cr`) keyed by canonical index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Assignment {
    bindings: BTreeMap<usize, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, bool)>) -> Self {
        Assignment {
            bindings: pairs.into_iter().collect(),
        }
    }

    pub fn bind(&mut self, feature: usize, value: bool) -> Option<bool> {
        self.bindings.insert(feature, value)
    }

    pub fn unbind(&mut self, feature: usize) -> Option<bool> {
        self.bindings.remove(&feature)
    }

    pub fn get(&self, feature: usize) -> Option<bool> {
        self.bindings.get(&feature).copied()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Bindings in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.bindings.iter().map(|(k, v)| (*k, *v))
    }

    /// True iff every binding agrees with `conf`.
    pub fn consistent_with(&self, conf: &Configuration) -> bool {
        self.iter().all(|(f, v)| conf.get(f) == v)
    }

    /// Parses `f=1,g=0` (whitespace tolerant, features by id or name,
    /// values `0`/`1`). Every bad atom is reported.
    pub fn parse(fm: &FeatureModel, text: &str) -> Result<Self, AssignmentError> {
        let atoms = text
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .map(|a| match a.split_once('=') {
                Some((f, v)) => (a.to_string(), f.trim().to_string(), v.trim().to_string()),
                None => (a.to_string(), a.to_string(), String::new()),
            });
        Self::from_atoms(fm, atoms)
    }

    /// Builds an assignment from `(feature, value)` pairs given as text,
    /// e.g. decoded from a request body.
    pub fn from_named<'a>(
        fm: &FeatureModel,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, AssignmentError> {
        Self::from_atoms(
            fm,
            pairs
                .into_iter()
                .map(|(f, v)| (format!("{f}={v}"), f.to_string(), v.to_string())),
        )
    }

    fn from_atoms(
        fm: &FeatureModel,
        atoms: impl Iterator<Item = (String, String, String)>,
    ) -> Result<Self, AssignmentError> {
        let mut out = Assignment::new();
        let mut bad = Vec::new();
        for (atom, feature, value) in atoms {
            let value = match value.as_str() {
                "1" | "true" => Some(true),
                "0" | "false" => Some(false),
                _ => None,
            };
            match (fm.lookup(&feature), value) {
                (None, _) => bad.push(BadAtom {
                    atom,
                    reason: "unknown feature".into(),
                }),
                (_, None) => bad.push(BadAtom {
                    atom,
                    reason: "value must be 0 or 1".into(),
                }),
                (Some(f), Some(v)) => {
                    if let Some(prev) = out.bind(f, v) {
                        if prev != v {
                            bad.push(BadAtom {
                                atom,
                                reason: "conflicting binding".into(),
                            });
                        }
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(AssignmentError { bad })
        }
    }

    /// `s=1,p=1` in canonical order.
    pub fn render(&self, fm: &FeatureModel) -> String {
        self.iter()
            .map(|(f, v)| format!("{}={}", fm.id(f), u8::from(v)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromIterator<(usize, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (usize, bool)>>(iter: T) -> Self {
        Assignment::from_pairs(iter)
    }
}
