//! Finite incidence posets of strata.
//!
//! A [`Skeleton`] is the combinatorial image of a stratified space: one
//! labelled node per stratum and the adherence order `S' <= S` ("S' lies in
//! the closure of S"). The order is stored fully closed, so every skeleton
//! value is a partial order; raw, possibly inconsistent input lives in
//! [`RawSkeleton`] until [`RawSkeleton::build`] accepts it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkeletonError {
    #[error("unknown stratum `{0}`")]
    UnknownStratum(String),
    #[error("invalid stratum identifier `{0}`")]
    InvalidId(String),
    #[error("stratum `{0}` is not compact")]
    NonCompact(String),
    #[error("invalid skeleton: {0}")]
    Invalid(ValidationReport),
}

/// Identifier of a stratum, unique within one skeleton.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StratumId(String);

impl StratumId {
    pub fn new(token: impl Into<String>) -> Result<Self, SkeletonError> {
        let token = token.into();
        if Self::is_valid(&token) {
            Ok(StratumId(token))
        } else {
            Err(SkeletonError::InvalidId(token))
        }
    }

    /// Letters, digits and underscores, not starting with a digit.
    pub fn is_valid(token: &str) -> bool {
        let mut chars = token.chars();
        match chars.next() {
            Some(c) if c.is_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_alphanumeric() || c == '_')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StratumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<&str> for StratumId {
    type Error = SkeletonError;
    fn try_from(s: &str) -> Result<Self, Self::Error> {
        StratumId::new(s)
    }
}

impl Serialize for StratumId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for StratumId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        StratumId::new(s).map_err(serde::de::Error::custom)
    }
}

/// Dimension of a stratum. `Inf` only appears on colimit strata whose
/// dimension grows without bound along a tower.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dim {
    Finite(u32),
    Inf,
}

impl Dim {
    pub fn finite(self) -> Option<u32> {
        match self {
            Dim::Finite(d) => Some(d),
            Dim::Inf => None,
        }
    }

    pub fn shift(self, by: u32) -> Dim {
        match self {
            Dim::Finite(d) => Dim::Finite(d + by),
            Dim::Inf => Dim::Inf,
        }
    }
}

impl std::ops::Add for Dim {
    type Output = Dim;
    fn add(self, other: Dim) -> Dim {
        match (self, other) {
            (Dim::Finite(a), Dim::Finite(b)) => Dim::Finite(a + b),
            _ => Dim::Inf,
        }
    }
}

impl From<u32> for Dim {
    fn from(d: u32) -> Self {
        Dim::Finite(d)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Finite(d) => write!(f, "{d}"),
            Dim::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for Dim {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Dim::Finite(d) => s.serialize_u32(*d),
            Dim::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Dim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(u32),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(n) => Ok(Dim::Finite(n)),
            Repr::Word(w) if w == "inf" => Ok(Dim::Inf),
            Repr::Word(w) => Err(serde::de::Error::custom(format!("bad dimension `{w}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StratumLabel {
    pub dim: Dim,
    pub compact: bool,
    pub connected: bool,
    pub display_name: Option<String>,
}

impl StratumLabel {
    pub fn new(dim: u32) -> Self {
        StratumLabel {
            dim: Dim::Finite(dim),
            compact: false,
            connected: false,
            display_name: None,
        }
    }

    pub fn compact(mut self) -> Self {
        self.compact = true;
        self
    }

    pub fn connected(mut self) -> Self {
        self.connected = true;
        self
    }

    /// Labels agree on everything but the display name.
    pub fn agrees_with(&self, other: &StratumLabel) -> bool {
        self.dim == other.dim && self.compact == other.compact && self.connected == other.connected
    }
}

/// A set of whole strata of some skeleton.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrataSubset(BTreeSet<StratumId>);

impl StrataSubset {
    pub fn new() -> Self {
        StrataSubset(BTreeSet::new())
    }

    pub fn contains(&self, id: &StratumId) -> bool {
        self.0.contains(id)
    }

    pub fn insert(&mut self, id: StratumId) -> bool {
        self.0.insert(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &StratumId> {
        self.0.iter()
    }

    pub fn intersection(&self, other: &StrataSubset) -> StrataSubset {
        StrataSubset(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn union(&self, other: &StrataSubset) -> StrataSubset {
        StrataSubset(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &StrataSubset) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Ids as plain strings, in sorted order.
    pub fn names(&self) -> Vec<&str> {
        self.0.iter().map(StratumId::as_str).collect()
    }
}

impl FromIterator<StratumId> for StrataSubset {
    fn from_iter<I: IntoIterator<Item = StratumId>>(iter: I) -> Self {
        StrataSubset(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a StrataSubset {
    type Item = &'a StratumId;
    type IntoIter = std::collections::btree_set::Iter<'a, StratumId>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidId {
        id: String,
    },
    DuplicateStratum {
        id: String,
    },
    UnknownStratum {
        id: String,
    },
    /// Both `a <= b` and `b <= a` follow from the declared relation (an order
    /// cycle). `a == b` when a strict self-incidence was declared.
    Antisymmetry {
        a: String,
        b: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidId { id } => write!(f, "invalid_id({id})"),
            Violation::DuplicateStratum { id } => write!(f, "duplicate({id})"),
            Violation::UnknownStratum { id } => write!(f, "unknown({id})"),
            Violation::Antisymmetry { a, b } => write!(f, "antisymmetry({a},{b})"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}

/// One stratum of the JSON / raw form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawStratum {
    pub id: String,
    pub dim: Dim,
    #[serde(default)]
    pub compact: bool,
    #[serde(default)]
    pub connected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
}

/// Unvalidated skeleton: strata plus an arbitrary strict relation
/// (`[lower, upper]` pairs). This is also the JSON interchange form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSkeleton {
    pub strata: Vec<RawStratum>,
    #[serde(default)]
    pub order: Vec<(String, String)>,
}

impl RawSkeleton {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stratum(mut self, id: &str, label: StratumLabel) -> Self {
        self.strata.push(RawStratum {
            id: id.to_string(),
            dim: label.dim,
            compact: label.compact,
            connected: label.connected,
            display_name: label.display_name,
        });
        self
    }

    /// Declares `lower < upper`.
    pub fn below(mut self, lower: &str, upper: &str) -> Self {
        self.order.push((lower.to_string(), upper.to_string()));
        self
    }

    pub fn validate(&self) -> ValidationReport {
        match self.build() {
            Ok(_) => ValidationReport::default(),
            Err(report) => report,
        }
    }

    /// Closes the declared relation reflexively and transitively, then checks
    /// antisymmetry.
    pub fn build(&self) -> Result<Skeleton, ValidationReport> {
        let mut violations = Vec::new();
        let mut seen = BTreeSet::new();
        let mut strata = Vec::new();
        for raw in &self.strata {
            if !StratumId::is_valid(&raw.id) {
                violations.push(Violation::InvalidId { id: raw.id.clone() });
                continue;
            }
            if !seen.insert(raw.id.clone()) {
                violations.push(Violation::DuplicateStratum { id: raw.id.clone() });
                continue;
            }
            let label = StratumLabel {
                dim: raw.dim,
                compact: raw.compact,
                connected: raw.connected,
                display_name: raw.display_name.clone(),
            };
            strata.push((StratumId(raw.id.clone()), label));
        }
        let position: BTreeMap<&str, usize> = strata
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.as_str(), i))
            .collect();
        let mut relations = Vec::new();
        for (lower, upper) in &self.order {
            let mut resolve = |name: &String| match position.get(name.as_str()) {
                Some(&i) => Some(i),
                None => {
                    let v = Violation::UnknownStratum { id: name.clone() };
                    if !violations.contains(&v) {
                        violations.push(v);
                    }
                    None
                }
            };
            let (l, u) = (resolve(lower), resolve(upper));
            if let (Some(l), Some(u)) = (l, u) {
                relations.push((l, u));
            }
        }
        if !violations.is_empty() {
            return Err(ValidationReport { violations });
        }
        Skeleton::from_relations(strata, &relations).map_err(|e| match e {
            SkeletonError::Invalid(report) => report,
            other => ValidationReport {
                violations: vec![Violation::InvalidId {
                    id: other.to_string(),
                }],
            },
        })
    }
}

/// A finite, validated stratification poset.
///
/// Strata are kept sorted by id; `leq` is the reflexive-transitive order as a
/// row-major boolean matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Skeleton {
    ids: Vec<StratumId>,
    labels: Vec<StratumLabel>,
    leq: Vec<bool>,
}

impl Default for Skeleton {
    fn default() -> Self {
        Skeleton::empty()
    }
}

impl Skeleton {
    pub fn empty() -> Self {
        Skeleton {
            ids: Vec::new(),
            labels: Vec::new(),
            leq: Vec::new(),
        }
    }

    /// Single stratum, no incidences: the trivial stratification of a manifold.
    pub fn trivial(id: &str, label: StratumLabel) -> Result<Self, SkeletonError> {
        Skeleton::from_relations(vec![(StratumId::new(id)?, label)], &[])
    }

    /// Builds a skeleton from strata and strict relations given as index pairs
    /// `(lower, upper)` into `strata`. Ids must already be unique.
    pub fn from_relations(
        strata: Vec<(StratumId, StratumLabel)>,
        relations: &[(usize, usize)],
    ) -> Result<Self, SkeletonError> {
        let n = strata.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&a, &b| strata[a].0.cmp(&strata[b].0));
        let mut rank = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            rank[old] = new;
        }
        for w in perm.windows(2) {
            if strata[w[0]].0 == strata[w[1]].0 {
                return Err(SkeletonError::Invalid(ValidationReport {
                    violations: vec![Violation::DuplicateStratum {
                        id: strata[w[0]].0.to_string(),
                    }],
                }));
            }
        }
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        let mut self_loops = BTreeSet::new();
        for &(l, u) in relations {
            if l == u {
                self_loops.insert(rank[l]);
            }
            leq[rank[l] * n + rank[u]] = true;
        }
        transitive_close(&mut leq, n);

        let mut ids = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut slots: Vec<Option<(StratumId, StratumLabel)>> =
            strata.into_iter().map(Some).collect();
        for &old in &perm {
            let (id, label) = slots[old].take().expect("each slot taken once");
            ids.push(id);
            labels.push(label);
        }

        let mut violations = Vec::new();
        for i in 0..n {
            if self_loops.contains(&i) {
                violations.push(Violation::Antisymmetry {
                    a: ids[i].to_string(),
                    b: ids[i].to_string(),
                });
            }
            for j in i + 1..n {
                if leq[i * n + j] && leq[j * n + i] {
                    violations.push(Violation::Antisymmetry {
                        a: ids[i].to_string(),
                        b: ids[j].to_string(),
                    });
                }
            }
        }
        if !violations.is_empty() {
            return Err(SkeletonError::Invalid(ValidationReport { violations }));
        }
        Ok(Skeleton { ids, labels, leq })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[StratumId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &StratumId {
        &self.ids[i]
    }

    pub fn label(&self, i: usize) -> &StratumLabel {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[StratumLabel] {
        &self.labels
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index_of(id).is_some()
    }

    fn require(&self, id: &str) -> Result<usize, SkeletonError> {
        self.index_of(id)
            .ok_or_else(|| SkeletonError::UnknownStratum(id.to_string()))
    }

    pub fn label_of(&self, id: &str) -> Option<&StratumLabel> {
        self.index_of(id).map(|i| &self.labels[i])
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.len() + j]
    }

    pub fn lt(&self, i: usize, j: usize) -> bool {
        i != j && self.leq(i, j)
    }

    pub fn leq_ids(&self, a: &str, b: &str) -> Result<bool, SkeletonError> {
        Ok(self.leq(self.require(a)?, self.require(b)?))
    }

    /// Cover pairs `(lower, upper)`: `lower < upper` with nothing in between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.lt(i, j) && !(0..n).any(|k| self.lt(i, k) && self.lt(k, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn subset_where(&self, keep: impl Fn(usize) -> bool) -> StrataSubset {
        (0..self.len())
            .filter(|&i| keep(i))
            .map(|i| self.ids[i].clone())
            .collect()
    }

    pub fn all_strata(&self) -> StrataSubset {
        self.subset_where(|_| true)
    }

    /// Down-set of `x`: the strata adhering to it.
    pub fn closure_of(&self, x: &str) -> Result<StrataSubset, SkeletonError> {
        let x = self.require(x)?;
        Ok(self.subset_where(|i| self.leq(i, x)))
    }

    /// Up-set `U_x` of `x`.
    pub fn incidence_neighborhood(&self, x: &str) -> Result<StrataSubset, SkeletonError> {
        let x = self.require(x)?;
        Ok(self.subset_where(|i| self.leq(x, i)))
    }

    pub fn is_minimal(&self, i: usize) -> bool {
        !(0..self.len()).any(|j| self.lt(j, i))
    }

    pub fn is_maximal(&self, i: usize) -> bool {
        !(0..self.len()).any(|j| self.lt(i, j))
    }

    pub fn minimal_strata(&self) -> StrataSubset {
        self.subset_where(|i| self.is_minimal(i))
    }

    pub fn maximal_strata(&self) -> StrataSubset {
        self.subset_where(|i| self.is_maximal(i))
    }

    /// Open strata.
    pub fn regular_part(&self) -> StrataSubset {
        self.maximal_strata()
    }

    /// Non-open strata.
    pub fn singular_part(&self) -> StrataSubset {
        self.subset_where(|i| !self.is_maximal(i))
    }

    /// Length of the longest strict chain starting at each stratum.
    pub fn heights(&self) -> Vec<i64> {
        let n = self.len();
        let up_size: Vec<usize> = (0..n)
            .map(|i| (0..n).filter(|&j| self.lt(i, j)).count())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| up_size[i]);
        let mut height = vec![0i64; n];
        for &i in &order {
            height[i] = (0..n)
                .filter(|&j| self.lt(i, j))
                .map(|j| height[j] + 1)
                .max()
                .unwrap_or(0);
        }
        height
    }

    pub fn length_of(&self, x: &str) -> Result<i64, SkeletonError> {
        let x = self.require(x)?;
        Ok(self.heights()[x])
    }

    /// Supremum of the stratum lengths; `-1` for the empty skeleton.
    pub fn length(&self) -> i64 {
        self.heights().into_iter().max().unwrap_or(-1)
    }

    /// Largest finite dimension, `Inf` if any stratum is infinite-dimensional.
    pub fn max_dim(&self) -> Option<Dim> {
        self.labels.iter().map(|l| l.dim).max()
    }

    pub fn is_down_closed(&self, z: &StrataSubset) -> bool {
        z.iter().all(|id| match self.index_of(id.as_str()) {
            Some(j) => (0..self.len()).all(|i| !self.leq(i, j) || z.contains(&self.ids[i])),
            None => false,
        })
    }

    pub fn is_up_closed(&self, z: &StrataSubset) -> bool {
        z.iter().all(|id| match self.index_of(id.as_str()) {
            Some(i) => (0..self.len()).all(|j| !self.leq(i, j) || z.contains(&self.ids[j])),
            None => false,
        })
    }

    /// Sub-poset on `z` with the induced order and unchanged labels.
    pub fn restrict(&self, z: &StrataSubset) -> Result<Skeleton, SkeletonError> {
        let mut keep = Vec::with_capacity(z.len());
        for id in z {
            keep.push(self.require(id.as_str())?);
        }
        keep.sort_unstable();
        Ok(self.induced(&keep))
    }

    /// Induced sub-poset on sorted indices.
    pub(crate) fn induced(&self, keep: &[usize]) -> Skeleton {
        let m = keep.len();
        let mut leq = vec![false; m * m];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                leq[a * m + b] = self.leq(i, j);
            }
        }
        Skeleton {
            ids: keep.iter().map(|&i| self.ids[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
            leq,
        }
    }

    /// Same poset with ids renamed through `rename`, which must be injective.
    pub fn renamed(
        &self,
        rename: impl Fn(&StratumId) -> StratumId,
    ) -> Result<Skeleton, SkeletonError> {
        let strata: Vec<(StratumId, StratumLabel)> = self
            .ids
            .iter()
            .zip(&self.labels)
            .map(|(id, l)| (rename(id), l.clone()))
            .collect();
        Skeleton::from_relations(strata, &self.strict_pairs())
    }

    /// Same poset with relabelled strata.
    pub fn map_labels(&self, f: impl Fn(&StratumId, &StratumLabel) -> StratumLabel) -> Skeleton {
        Skeleton {
            ids: self.ids.clone(),
            labels: self
                .ids
                .iter()
                .zip(&self.labels)
                .map(|(i, l)| f(i, l))
                .collect(),
            leq: self.leq.clone(),
        }
    }

    pub(crate) fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.lt(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Canonical raw form: strata sorted by id, order as cover pairs.
    pub fn to_raw(&self) -> RawSkeleton {
        RawSkeleton {
            strata: self
                .ids
                .iter()
                .zip(&self.labels)
                .map(|(id, l)| RawStratum {
                    id: id.to_string(),
                    dim: l.dim,
                    compact: l.compact,
                    connected: l.connected,
                    display_name: l.display_name.clone(),
                })
                .collect(),
            order: self
                .covers()
                .into_iter()
                .map(|(l, u)| (self.ids[l].to_string(), self.ids[u].to_string()))
                .collect(),
        }
    }

    /// Byte-stable pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("skeleton serializes")
    }
}

impl Serialize for Skeleton {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Skeleton {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RawSkeleton::deserialize(d)?
            .build()
            .map_err(serde::de::Error::custom)
    }
}

pub(crate) fn transitive_close(leq: &mut [bool], n: usize) {
    for k in 0..n {
        for i in 0..n {
            if leq[i * n + k] {
                for j in 0..n {
                    if leq[k * n + j] {
                        leq[i * n + j] = true;
                    }
                }
            }
        }
    }
}

/// Checks the partial-order axioms of a built skeleton from scratch.
pub fn validate_skeleton(s: &Skeleton) -> ValidationReport {
    let n = s.len();
    let mut violations = Vec::new();
    for i in 0..n {
        if !s.leq(i, i) {
            violations.push(Violation::Antisymmetry {
                a: s.id(i).to_string(),
                b: s.id(i).to_string(),
            });
        }
        for j in i + 1..n {
            if s.leq(i, j) && s.leq(j, i) {
                violations.push(Violation::Antisymmetry {
                    a: s.id(i).to_string(),
                    b: s.id(j).to_string(),
                });
            }
            for k in 0..n {
                if s.leq(i, k) && s.leq(k, j) && !s.leq(i, j) {
                    violations.push(Violation::Antisymmetry {
                        a: s.id(i).to_string(),
                        b: s.id(j).to_string(),
                    });
                }
            }
        }
    }
    for w in s.ids().windows(2) {
        if w[0] >= w[1] {
            violations.push(Violation::DuplicateStratum {
                id: w[1].to_string(),
            });
        }
    }
    ValidationReport { violations }
}

/// First of `base`, `base_1`, `base_2`, ... not in `taken`.
pub fn fresh_id(base: &str, taken: &BTreeSet<StratumId>) -> StratumId {
    let candidate = StratumId(base.to_string());
    if !taken.contains(&candidate) {
        return candidate;
    }
    (1..)
        .map(|k| StratumId(format!("{base}_{k}")))
        .find(|c| !taken.contains(c))
        .expect("unbounded search")
}

/// How the ids of the two summands were renamed inside a disjoint union.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming {
    pub left: BTreeMap<StratumId, StratumId>,
    pub right: BTreeMap<StratumId, StratumId>,
}

/// `a ⊔ b`. Left ids are kept; right ids are suffixed only on collision.
pub fn disjoint_union(a: &Skeleton, b: &Skeleton) -> (Skeleton, Renaming) {
    let mut taken: BTreeSet<StratumId> = a.ids().iter().cloned().collect();
    let mut renaming = Renaming::default();
    let mut strata = Vec::with_capacity(a.len() + b.len());
    for (id, l) in a.ids().iter().zip(a.labels()) {
        renaming.left.insert(id.clone(), id.clone());
        strata.push((id.clone(), l.clone()));
    }
    for (id, l) in b.ids().iter().zip(b.labels()) {
        let new = fresh_id(id.as_str(), &taken);
        taken.insert(new.clone());
        renaming.right.insert(id.clone(), new.clone());
        strata.push((new, l.clone()));
    }
    let offset = a.len();
    let mut relations = a.strict_pairs();
    relations.extend(
        b.strict_pairs()
            .into_iter()
            .map(|(i, j)| (i + offset, j + offset)),
    );
    let union = Skeleton::from_relations(strata, &relations).expect("disjoint union is a poset");
    (union, renaming)
}

/// Canonical product stratification `{S x T}` with componentwise order.
pub fn product(a: &Skeleton, b: &Skeleton) -> Skeleton {
    product_with_factors(a, b).0
}

/// Product together with the factor pair of every product stratum.
pub fn product_with_factors(
    a: &Skeleton,
    b: &Skeleton,
) -> (Skeleton, BTreeMap<StratumId, (StratumId, StratumId)>) {
    let mut taken = BTreeSet::new();
    let mut strata = Vec::with_capacity(a.len() * b.len());
    let mut factors = BTreeMap::new();
    for i in 0..a.len() {
        for j in 0..b.len() {
            let (la, lb) = (a.label(i), b.label(j));
            let id = fresh_id(&format!("{}_{}", a.id(i), b.id(j)), &taken);
            taken.insert(id.clone());
            factors.insert(id.clone(), (a.id(i).clone(), b.id(j).clone()));
            let label = StratumLabel {
                dim: la.dim + lb.dim,
                compact: la.compact && lb.compact,
                connected: la.connected && lb.connected,
                display_name: None,
            };
            strata.push((id, label));
        }
    }
    let m = b.len();
    let mut relations = Vec::new();
    for i in 0..a.len() {
        for j in 0..m {
            for k in 0..a.len() {
                for l in 0..m {
                    if (i, j) != (k, l) && a.leq(i, k) && b.leq(j, l) {
                        relations.push((i * m + j, k * m + l));
                    }
                }
            }
        }
    }
    let s = Skeleton::from_relations(strata, &relations).expect("product of posets is a poset");
    (s, factors)
}

/// Id given to the cone vertex when building `cone(l)`.
pub fn cone_vertex_id(l: &Skeleton) -> StratumId {
    fresh_id("v", &l.ids().iter().cloned().collect())
}

/// Open cone `c(L)`: a new vertex below every stratum, and `S x R+` (same id,
/// dimension + 1, non-compact) for every stratum `S` of `L`. `c(∅)` is a point.
pub fn cone(l: &Skeleton) -> Result<Skeleton, SkeletonError> {
    if let Some(i) = (0..l.len()).find(|&i| !l.label(i).compact) {
        return Err(SkeletonError::NonCompact(l.id(i).to_string()));
    }
    let vertex = cone_vertex_id(l);
    let mut strata = vec![(
        vertex,
        StratumLabel {
            dim: Dim::Finite(0),
            compact: l.is_empty(),
            connected: true,
            display_name: None,
        },
    )];
    for (id, lab) in l.ids().iter().zip(l.labels()) {
        strata.push((
            id.clone(),
            StratumLabel {
                dim: lab.dim.shift(1),
                compact: false,
                connected: lab.connected,
                display_name: lab.display_name.clone(),
            },
        ));
    }
    let mut relations: Vec<(usize, usize)> = (1..=l.len()).map(|i| (0, i)).collect();
    relations.extend(l.strict_pairs().into_iter().map(|(i, j)| (i + 1, j + 1)));
    Skeleton::from_relations(strata, &relations)
}
