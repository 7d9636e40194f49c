//! Stratified pseudomanifolds as skeletons with a recursive link attached to
//! every singular stratum.
//!
//! Only the combinatorial shadow of the conic charts is checked: links exist
//! exactly on non-maximal strata, are compact, are strictly shorter than the
//! space, and dimensions grow along the order. Local triviality itself is not
//! decidable from a labelled poset; the constructors here (cones, products,
//! disjoint unions, closed amalgamation) produce it by construction.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amalgamation::{pushout, AmalgamationError, Leg};
use crate::decomposition::{
    decompose, replay_stages, AmalgamationPlan, DecompositionError, PlanStep,
};
use crate::graphs::is_irreducible;
use crate::morphisms::{
    find_isomorphism_with, is_closed_embedding, MorphClass, MorphismError, StrataMorphism,
};
use crate::skeleton::{
    cone, cone_vertex_id, disjoint_union, validate_skeleton, Dim, Skeleton, SkeletonError,
    StrataSubset, StratumId, StratumLabel,
};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PseudoSkeleton {
    pub base: Skeleton,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub links: BTreeMap<StratumId, PseudoSkeleton>,
}

impl PseudoSkeleton {
    pub fn new(base: Skeleton, links: BTreeMap<StratumId, PseudoSkeleton>) -> Self {
        PseudoSkeleton { base, links }
    }

    /// A manifold: one stratum, no links.
    pub fn manifold(base: Skeleton) -> Self {
        PseudoSkeleton {
            base,
            links: BTreeMap::new(),
        }
    }

    pub fn empty() -> Self {
        PseudoSkeleton::default()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn link(&self, id: &str) -> Option<&PseudoSkeleton> {
        self.links
            .iter()
            .find(|(k, _)| k.as_str() == id)
            .map(|(_, v)| v)
    }

    /// The link of `id`, or the empty link for maximal strata.
    pub fn link_or_empty(&self, id: &str) -> Cow<'_, PseudoSkeleton> {
        match self.link(id) {
            Some(l) => Cow::Borrowed(l),
            None => Cow::Owned(PseudoSkeleton::empty()),
        }
    }

    pub fn length(&self) -> i64 {
        self.base.length()
    }

    /// Nesting depth of links; 0 for a space without links.
    pub fn depth(&self) -> usize {
        self.links
            .values()
            .map(|l| l.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Restriction to the strata in `z`. Strata that stay singular keep their
    /// links, which is exact for open unions of strata (up-sets); strata that
    /// become regular lose theirs.
    pub fn restrict(&self, z: &StrataSubset) -> Result<PseudoSkeleton, SkeletonError> {
        let base = self.base.restrict(z)?;
        let links = self
            .links
            .iter()
            .filter(|(k, _)| {
                base.index_of(k.as_str())
                    .is_some_and(|i| !base.is_maximal(i))
            })
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(PseudoSkeleton { base, links })
    }

    pub fn renamed(
        &self,
        rename: impl Fn(&StratumId) -> StratumId,
    ) -> Result<PseudoSkeleton, SkeletonError> {
        Ok(PseudoSkeleton {
            base: self.base.renamed(&rename)?,
            links: self
                .links
                .iter()
                .map(|(k, v)| (rename(k), v.clone()))
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pseudo skeleton serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PseudoViolation {
    Base {
        report: String,
    },
    Dimension {
        lower: String,
        upper: String,
    },
    MissingLink {
        stratum: String,
    },
    UnexpectedLink {
        stratum: String,
    },
    NonCompactLink {
        stratum: String,
    },
    LinkTooLong {
        stratum: String,
        link_length: i64,
        length: i64,
    },
}

impl fmt::Display for PseudoViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PseudoViolation::Base { report } => write!(f, "invalid base: {report}"),
            PseudoViolation::Dimension { lower, upper } => {
                write!(f, "dimension not increasing from {lower} to {upper}")
            }
            PseudoViolation::MissingLink { stratum } => write!(f, "missing link at {stratum}"),
            PseudoViolation::UnexpectedLink { stratum } => {
                write!(f, "link at regular or unknown stratum {stratum}")
            }
            PseudoViolation::NonCompactLink { stratum } => {
                write!(f, "non-compact link at {stratum}")
            }
            PseudoViolation::LinkTooLong {
                stratum,
                link_length,
                length,
            } => write!(
                f,
                "link at {stratum} has length {link_length}, not below {length}"
            ),
        }
    }
}

/// A violation together with the chain of strata whose links lead to it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocatedViolation {
    pub path: Vec<String>,
    pub violation: PseudoViolation,
}

impl fmt::Display for LocatedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.path {
            write!(f, "link({p}): ")?;
        }
        write!(f, "{}", self.violation)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoReport {
    pub violations: Vec<LocatedViolation>,
}

impl PseudoReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PseudoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn validate_pseudo(x: &PseudoSkeleton) -> PseudoReport {
    let mut report = PseudoReport::default();
    check(x, &mut Vec::new(), &mut report.violations);
    report
}

fn check(x: &PseudoSkeleton, path: &mut Vec<String>, out: &mut Vec<LocatedViolation>) {
    let mut push = |violation| {
        out.push(LocatedViolation {
            path: path.clone(),
            violation,
        })
    };
    let s = &x.base;
    let base = validate_skeleton(s);
    if !base.is_ok() {
        push(PseudoViolation::Base {
            report: base.to_string(),
        });
        return;
    }
    for i in 0..s.len() {
        for j in 0..s.len() {
            let (a, b) = (s.label(i).dim, s.label(j).dim);
            if s.lt(i, j) && a != Dim::Inf && b != Dim::Inf && a >= b {
                push(PseudoViolation::Dimension {
                    lower: s.id(i).to_string(),
                    upper: s.id(j).to_string(),
                });
            }
        }
    }
    for id in x.links.keys() {
        match s.index_of(id.as_str()) {
            Some(i) if !s.is_maximal(i) => {}
            _ => push(PseudoViolation::UnexpectedLink {
                stratum: id.to_string(),
            }),
        }
    }
    let length = s.length();
    for i in 0..s.len() {
        if s.is_maximal(i) {
            continue;
        }
        let id = s.id(i);
        let Some(link) = x.links.get(id) else {
            push(PseudoViolation::MissingLink {
                stratum: id.to_string(),
            });
            continue;
        };
        if link.base.labels().iter().any(|l| !l.compact) {
            push(PseudoViolation::NonCompactLink {
                stratum: id.to_string(),
            });
        }
        if link.length() >= length {
            push(PseudoViolation::LinkTooLong {
                stratum: id.to_string(),
                link_length: link.length(),
                length,
            });
        }
    }
    for (id, link) in &x.links {
        path.push(id.to_string());
        check(link, path, out);
        path.pop();
    }
}

/// Every link, at every depth, has a connected (irreducible) base.
pub fn is_normal(x: &PseudoSkeleton) -> bool {
    x.links
        .values()
        .all(|l| is_irreducible(&l.base) && is_normal(l))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PseudoError {
    #[error("invalid pseudomanifold: {0}")]
    Invalid(PseudoReport),
    #[error("stratum `{0}` of a link is not compact")]
    NonCompact(String),
    #[error("NonClosedGluing: the glued part is not closed in the {leg} space, so the amalgam would have a non-compact link")]
    NonClosedGluing { leg: Leg },
    #[error("{leg} carrier is {class}, a strong embedding is required")]
    NotStrong { leg: Leg, class: MorphClass },
    #[error("the two maps do not share a source")]
    SourceMismatch,
    #[error("link map at `{stratum}`: {reason}")]
    LinkMap { stratum: String, reason: String },
    #[error("at link of `{stratum}`: {source}")]
    AtLink {
        stratum: String,
        #[source]
        source: Box<PseudoError>,
    },
    #[error(transparent)]
    Amalgamation(#[from] AmalgamationError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// A stratified map of bases together with the induced maps of links.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoMorphism {
    source: PseudoSkeleton,
    target: PseudoSkeleton,
    carrier: StrataMorphism,
    link_maps: BTreeMap<StratumId, PseudoMorphism>,
}

impl PseudoMorphism {
    /// `link_maps` may omit strata whose source link is empty; those maps
    /// are the empty inclusions.
    pub fn new(
        source: PseudoSkeleton,
        target: PseudoSkeleton,
        carrier: StrataMorphism,
        link_maps: BTreeMap<StratumId, PseudoMorphism>,
    ) -> Result<Self, PseudoError> {
        if carrier.source() != &source.base || carrier.target() != &target.base {
            return Err(MorphismError::SkeletonMismatch.into());
        }
        for (s, m) in &link_maps {
            let err = |reason: &str| PseudoError::LinkMap {
                stratum: s.to_string(),
                reason: reason.to_string(),
            };
            let image = carrier
                .apply(s.as_str())
                .ok_or_else(|| err("not a source stratum"))?;
            if m.source != *source.link_or_empty(s.as_str()) {
                return Err(err("source is not the link in the source space"));
            }
            if m.target != *target.link_or_empty(image.as_str()) {
                return Err(err("target is not the link in the target space"));
            }
        }
        for (s, l) in &source.links {
            if !l.is_empty() && !link_maps.contains_key(s) {
                return Err(PseudoError::LinkMap {
                    stratum: s.to_string(),
                    reason: "missing".into(),
                });
            }
        }
        Ok(PseudoMorphism {
            source,
            target,
            carrier,
            link_maps,
        })
    }

    /// Inclusion by stratum id at every level: each stratum of `source`
    /// goes to the stratum of `target` with the same id, and so on inside
    /// the links.
    pub fn inclusion(
        source: &PseudoSkeleton,
        target: &PseudoSkeleton,
    ) -> Result<Self, PseudoError> {
        let carrier = StrataMorphism::inclusion(&source.base, &target.base)?;
        let mut link_maps = BTreeMap::new();
        for (s, l) in &source.links {
            let into = target.link_or_empty(s.as_str());
            let m = PseudoMorphism::inclusion(l, &into).map_err(|e| PseudoError::AtLink {
                stratum: s.to_string(),
                source: Box::new(e),
            })?;
            link_maps.insert(s.clone(), m);
        }
        PseudoMorphism::new(source.clone(), target.clone(), carrier, link_maps)
    }

    pub fn source(&self) -> &PseudoSkeleton {
        &self.source
    }

    pub fn target(&self) -> &PseudoSkeleton {
        &self.target
    }

    pub fn carrier(&self) -> &StrataMorphism {
        &self.carrier
    }

    pub fn link_maps(&self) -> &BTreeMap<StratumId, PseudoMorphism> {
        &self.link_maps
    }

    /// The induced map of links at source stratum `s`.
    pub fn link_map(&self, s: &str) -> Result<Cow<'_, PseudoMorphism>, PseudoError> {
        if let Some(m) = self
            .link_maps
            .iter()
            .find(|(k, _)| k.as_str() == s)
            .map(|(_, m)| m)
        {
            return Ok(Cow::Borrowed(m));
        }
        let image = self.carrier.apply(s).ok_or_else(|| PseudoError::LinkMap {
            stratum: s.to_string(),
            reason: "not a source stratum".into(),
        })?;
        let target = self.target.link_or_empty(image.as_str()).into_owned();
        Ok(Cow::Owned(PseudoMorphism::inclusion(
            &PseudoSkeleton::empty(),
            &target,
        )?))
    }

    /// Weakest class among the carrier and all link maps, recursively.
    pub fn class(&self) -> MorphClass {
        self.link_maps
            .values()
            .map(|m| m.class())
            .fold(self.carrier.classify().class, |a, b| a.min(b))
    }
}

/// `c(L)`; the vertex gets `L` as its link and every ray keeps the link of
/// the stratum it comes from.
pub fn cone_pseudo(l: &PseudoSkeleton) -> Result<PseudoSkeleton, PseudoError> {
    let report = validate_pseudo(l);
    if !report.is_ok() {
        return Err(PseudoError::Invalid(report));
    }
    if let Some(i) = (0..l.base.len()).find(|&i| !l.base.label(i).compact) {
        return Err(PseudoError::NonCompact(l.base.id(i).to_string()));
    }
    let base = cone(&l.base)?;
    let mut links = l.links.clone();
    if !l.is_empty() {
        links.insert(cone_vertex_id(&l.base), l.clone());
    }
    Ok(PseudoSkeleton { base, links })
}

/// `R^m x X`: dimensions shift by `m`, links are unchanged. For `m > 0`
/// no stratum is compact.
pub fn product_manifold(m_dim: u32, x: &PseudoSkeleton) -> PseudoSkeleton {
    if m_dim == 0 {
        return x.clone();
    }
    PseudoSkeleton {
        base: x.base.map_labels(|_, l| StratumLabel {
            dim: l.dim.shift(m_dim),
            compact: false,
            ..l.clone()
        }),
        links: x.links.clone(),
    }
}

/// Suspension `ΣK` of a compact pseudomanifold with the two vertices named
/// `north`, `south`: both vertices have link `K`, and each `S x (0,1)` keeps
/// the id and link of `S`. All strata are compact, so the result can serve
/// as a link. `Σ∅` is two points.
pub fn suspension(
    k: &PseudoSkeleton,
    north: &str,
    south: &str,
) -> Result<PseudoSkeleton, PseudoError> {
    let vertex = StratumLabel::new(0).compact().connected();
    let mut strata = vec![
        (StratumId::new(north)?, vertex.clone()),
        (StratumId::new(south)?, vertex),
    ];
    for (id, l) in k.base.ids().iter().zip(k.base.labels()) {
        strata.push((
            id.clone(),
            StratumLabel {
                dim: l.dim.shift(1),
                compact: true,
                ..l.clone()
            },
        ));
    }
    let n = k.base.len();
    let mut relations = Vec::new();
    for i in 0..n {
        relations.push((0, i + 2));
        relations.push((1, i + 2));
        for j in 0..n {
            if k.base.lt(i, j) {
                relations.push((i + 2, j + 2));
            }
        }
    }
    let base = Skeleton::from_relations(strata, &relations)?;
    let mut links = k.links.clone();
    if !k.is_empty() {
        links.insert(StratumId::new(north)?, k.clone());
        links.insert(StratumId::new(south)?, k.clone());
    }
    Ok(PseudoSkeleton { base, links })
}

/// `a ⊔ b`; colliding ids on the right are renamed as in the skeleton case.
pub fn disjoint_union_pseudo(a: &PseudoSkeleton, b: &PseudoSkeleton) -> PseudoSkeleton {
    let (base, renaming) = disjoint_union(&a.base, &b.base);
    let mut links = a.links.clone();
    for (k, v) in &b.links {
        links.insert(renaming.right[k].clone(), v.clone());
    }
    PseudoSkeleton { base, links }
}

/// `W ∪_X Y` for strong embeddings with closed image. Strata outside the
/// glued part keep their links; a glued stratum gets the amalgam of its two
/// links along its link in `X`.
pub fn amalgamate_pseudo(
    f: &PseudoMorphism,
    h: &PseudoMorphism,
) -> Result<PseudoSkeleton, PseudoError> {
    if f.source != h.source {
        return Err(PseudoError::SourceMismatch);
    }
    for space in [&f.source, &f.target, &h.target] {
        let report = validate_pseudo(space);
        if !report.is_ok() {
            return Err(PseudoError::Invalid(report));
        }
    }
    for (m, leg) in [(f, Leg::Left), (h, Leg::Right)] {
        let class = m.carrier.classify().class;
        if class < MorphClass::StrongEmbedding {
            return Err(PseudoError::NotStrong { leg, class });
        }
        if !is_closed_embedding(&m.carrier)? {
            return Err(PseudoError::NonClosedGluing { leg });
        }
    }
    let p = pushout(&f.carrier, &h.carrier)?;

    enum Origin<'a> {
        Shared(&'a StratumId),
        Left(&'a StratumId),
        Right(&'a StratumId),
    }
    let mut origin: BTreeMap<&StratumId, Origin> = BTreeMap::new();
    for ((leg, from), to) in &p.identification {
        origin.entry(to).or_insert(match leg {
            Leg::Left => Origin::Left(from),
            Leg::Right => Origin::Right(from),
        });
    }
    for x in f.source.base.ids() {
        let z = f.carrier.apply(x.as_str()).expect("x is a source stratum");
        origin.insert(z, Origin::Shared(x));
    }

    let a = &p.amalgam;
    let mut links = BTreeMap::new();
    for i in 0..a.len() {
        if a.is_maximal(i) {
            continue;
        }
        let z = a.id(i);
        let link = match origin[z] {
            Origin::Left(w) => f.target.link_or_empty(w.as_str()).into_owned(),
            Origin::Right(y) => h.target.link_or_empty(y.as_str()).into_owned(),
            Origin::Shared(x) => {
                let at = |e| PseudoError::AtLink {
                    stratum: z.to_string(),
                    source: Box::new(e),
                };
                let lf = f.link_map(x.as_str()).map_err(at)?;
                let lh = h.link_map(x.as_str()).map_err(at)?;
                amalgamate_pseudo(&lf, &lh).map_err(at)?
            }
        };
        links.insert(z.clone(), link);
    }
    let out = PseudoSkeleton {
        base: p.amalgam,
        links,
    };
    let report = validate_pseudo(&out);
    if !report.is_ok() {
        return Err(PseudoError::Invalid(report));
    }
    Ok(out)
}

/// Base plan of [`decompose`] plus each piece as an open sub-pseudomanifold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoPlan {
    pub plan: AmalgamationPlan,
    pub pieces: Vec<PseudoSkeleton>,
}

pub fn decompose_pseudo(x: &PseudoSkeleton) -> PseudoPlan {
    let plan = decompose(&x.base);
    let pieces = plan
        .pieces
        .iter()
        .map(|p| x.restrict(&p.all_strata()).expect("piece of x"))
        .collect();
    PseudoPlan { plan, pieces }
}

/// Folds a [`PseudoPlan`]. Steps whose glue is closed in both sides go
/// through [`amalgamate_pseudo`]; open overlaps are glued on the base and the
/// links of the pieces are carried over unchanged.
pub fn replay_pseudo(p: &PseudoPlan) -> Result<PseudoSkeleton, PseudoError> {
    let stages = replay_stages(&p.plan)?;
    let Some(first) = p.pieces.first() else {
        return Ok(PseudoSkeleton::empty());
    };
    let mut acc = first.clone();
    for (step, next_base) in p.plan.steps.iter().zip(stages.iter().skip(1)) {
        let piece = &p.pieces[step.piece()];
        acc = match step {
            PlanStep::Disjoint { .. } => disjoint_union_pseudo(&acc, piece),
            PlanStep::Glue { glue, .. } => {
                let glue_pseudo = acc.restrict(&glue.all_strata())?;
                let f = PseudoMorphism::inclusion(&glue_pseudo, &acc)?;
                let h = PseudoMorphism::inclusion(&glue_pseudo, piece)?;
                if is_closed_embedding(&f.carrier)? && is_closed_embedding(&h.carrier)? {
                    amalgamate_pseudo(&f, &h)?
                } else {
                    let mut links = acc.links.clone();
                    links.extend(piece.links.iter().map(|(k, v)| (k.clone(), v.clone())));
                    PseudoSkeleton {
                        base: next_base.clone(),
                        links,
                    }
                }
            }
        };
    }
    Ok(acc)
}

/// Isomorphism of bases that matches strata only when their links are
/// isomorphic, recursively.
pub fn find_pseudo_isomorphism(a: &PseudoSkeleton, b: &PseudoSkeleton) -> Option<StrataMorphism> {
    let mut memo: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    find_isomorphism_with(&a.base, &b.base, |i, j| {
        *memo.entry((i, j)).or_insert_with(|| {
            match (a.link(a.base.id(i).as_str()), b.link(b.base.id(j).as_str())) {
                (None, None) => true,
                (Some(x), Some(y)) => find_pseudo_isomorphism(x, y).is_some(),
                _ => false,
            }
        })
    })
}

/// Random compact pseudomanifold: finitely many points, a suspension, or a
/// disjoint union of two smaller ones. Ids are drawn from `prefix`.
pub fn random_compact_pseudo(rng: &mut impl Rng, depth: u32, prefix: &str) -> PseudoSkeleton {
    let choice = if depth == 0 {
        0
    } else {
        rng.random_range(0..3)
    };
    match choice {
        0 => points(rng.random_range(1..=3), prefix),
        1 => {
            let k = random_compact_pseudo(rng, depth - 1, &format!("{prefix}k"));
            suspension(&k, &format!("{prefix}n"), &format!("{prefix}s")).expect("fresh vertex ids")
        }
        _ => {
            let a = random_compact_pseudo(rng, depth - 1, &format!("{prefix}a"));
            let b = random_compact_pseudo(rng, depth - 1, &format!("{prefix}b"));
            disjoint_union_pseudo(&a, &b)
        }
    }
}

fn points(k: usize, prefix: &str) -> PseudoSkeleton {
    let strata = (0..k)
        .map(|i| {
            (
                StratumId::new(format!("{prefix}{i}")).expect("valid prefix"),
                StratumLabel::new(0).compact().connected(),
            )
        })
        .collect();
    PseudoSkeleton::manifold(Skeleton::from_relations(strata, &[]).expect("discrete"))
}

/// `(X, W, Y)` with `X` closed and strongly embedded (by id) in `W` and `Y`,
/// all three compact.
fn random_compact_cospan(
    rng: &mut impl Rng,
    depth: u32,
) -> (PseudoSkeleton, PseudoSkeleton, PseudoSkeleton) {
    let choice = if depth == 0 {
        0
    } else {
        rng.random_range(0..3)
    };
    match choice {
        0 => {
            let x = points(rng.random_range(0..=2), &format!("q{depth}_"));
            let w =
                disjoint_union_pseudo(&x, &points(rng.random_range(0..=2), &format!("x{depth}_")));
            let y =
                disjoint_union_pseudo(&x, &points(rng.random_range(0..=2), &format!("z{depth}_")));
            (x, w, y)
        }
        1 => {
            let (x, w, y) = random_compact_cospan(rng, depth - 1);
            let (n, s) = (format!("n{depth}"), format!("s{depth}"));
            let sus = |k: &PseudoSkeleton| suspension(k, &n, &s).expect("fresh vertex ids");
            (sus(&x), sus(&w), sus(&y))
        }
        _ => {
            let (x, w, y) = random_compact_cospan(rng, depth - 1);
            let extra_w = random_compact_pseudo(rng, depth - 1, &format!("ew{depth}_"));
            let extra_y = random_compact_pseudo(rng, depth - 1, &format!("ey{depth}_"));
            (
                x,
                disjoint_union_pseudo(&w, &extra_w),
                disjoint_union_pseudo(&y, &extra_y),
            )
        }
    }
}

/// Two closed strong pseudo-embeddings `X -> W`, `X -> Y`: a compact cospan
/// of depth at most `depth`, optionally coned and crossed with `R^m`.
pub fn random_closed_pseudo_cospan(
    rng: &mut impl Rng,
    depth: u32,
) -> (PseudoMorphism, PseudoMorphism) {
    let (mut x, mut w, mut y) = random_compact_cospan(rng, depth);
    if !x.is_empty() && rng.random_bool(0.5) {
        let c = |s: &PseudoSkeleton| cone_pseudo(s).expect("compact and valid");
        let vx = cone_vertex_id(&x.base);
        let vw = cone_vertex_id(&w.base);
        let vy = cone_vertex_id(&y.base);
        if vx == vw && vx == vy {
            (x, w, y) = (c(&x), c(&w), c(&y));
        }
    }
    let m = rng.random_range(0..=2);
    let (x, w, y) = (
        product_manifold(m, &x),
        product_manifold(m, &w),
        product_manifold(m, &y),
    );
    let f = PseudoMorphism::inclusion(&x, &w).expect("x sits in w by id");
    let h = PseudoMorphism::inclusion(&x, &y).expect("x sits in y by id");
    (f, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::rng_for;
    use crate::skeleton::RawSkeleton;

    fn two_points() -> PseudoSkeleton {
        points(2, "e")
    }

    fn arc() -> PseudoSkeleton {
        // closed interval [0,1] with endpoint strata
        let base = RawSkeleton::new()
            .stratum("a0", StratumLabel::new(0).compact().connected())
            .stratum("a1", StratumLabel::new(0).compact().connected())
            .stratum("i", StratumLabel::new(1).connected())
            .below("a0", "i")
            .below("a1", "i")
            .build()
            .unwrap();
        let pt = points(1, "t");
        PseudoSkeleton::new(
            base,
            [("a0", pt.clone()), ("a1", pt)]
                .into_iter()
                .map(|(k, v)| (StratumId::new(k).unwrap(), v))
                .collect(),
        )
    }

    #[test]
    fn manifold_is_valid() {
        let m = PseudoSkeleton::manifold(Skeleton::trivial("M", StratumLabel::new(3)).unwrap());
        assert!(validate_pseudo(&m).is_ok());
        assert_eq!(m.depth(), 0);
    }

    #[test]
    fn cone_over_two_points() {
        let c = cone_pseudo(&two_points()).unwrap();
        assert_eq!(c.base.len(), 3);
        assert!(validate_pseudo(&c).is_ok(), "{}", validate_pseudo(&c));
        assert_eq!(c.link("v"), Some(&two_points()));
        assert_eq!(c.length(), 1);
        assert!(!is_normal(&c));
        let cc = cone_pseudo(&suspension(&two_points(), "n", "s").unwrap()).unwrap();
        assert!(validate_pseudo(&cc).is_ok(), "{}", validate_pseudo(&cc));
        assert_eq!(cc.length(), 2);
        assert_eq!(cc.depth(), 2);
    }

    #[test]
    fn non_compact_link_is_reported() {
        let mut c = cone_pseudo(&two_points()).unwrap();
        let bad = PseudoSkeleton::manifold(Skeleton::trivial("o", StratumLabel::new(0)).unwrap());
        c.links.insert(StratumId::new("v").unwrap(), bad.clone());
        let r = validate_pseudo(&c);
        assert_eq!(r.to_string(), "non-compact link at v");
        assert!(matches!(cone_pseudo(&bad), Err(PseudoError::NonCompact(_))));
    }

    #[test]
    fn missing_and_extra_links() {
        let mut c = cone_pseudo(&two_points()).unwrap();
        let l = c.links.remove(&StratumId::new("v").unwrap()).unwrap();
        assert!(validate_pseudo(&c)
            .to_string()
            .contains("missing link at v"));
        c.links.insert(StratumId::new("e0").unwrap(), l);
        assert!(validate_pseudo(&c)
            .to_string()
            .contains("regular or unknown stratum e0"));
    }

    #[test]
    fn link_length_and_dimension() {
        let mut c = cone_pseudo(&two_points()).unwrap();
        c.links.insert(
            StratumId::new("v").unwrap(),
            cone_pseudo(&points(1, "u")).unwrap().clone(),
        );
        let r = validate_pseudo(&c);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v.violation, PseudoViolation::LinkTooLong { .. })));
        let flat = PseudoSkeleton::new(
            c.base.map_labels(|_, l| StratumLabel {
                dim: 1.into(),
                ..l.clone()
            }),
            BTreeMap::new(),
        );
        assert!(validate_pseudo(&flat)
            .violations
            .iter()
            .any(|v| matches!(v.violation, PseudoViolation::Dimension { .. })));
    }

    #[test]
    fn product_with_a_point_is_identity() {
        let c = cone_pseudo(&two_points()).unwrap();
        assert_eq!(product_manifold(0, &c), c);
        let p = product_manifold(2, &c);
        assert!(validate_pseudo(&p).is_ok());
        assert_eq!(p.base.label_of("v").unwrap().dim, 2.into());
    }

    #[test]
    fn base_case_link_is_disjoint_union() {
        let l = two_points();
        let l2 = suspension(&points(1, "k"), "n", "s").unwrap();
        let w = cone_pseudo(&l).unwrap();
        let y = cone_pseudo(&l2).unwrap();
        let x = w.restrict(&w.base.closure_of("v").unwrap()).unwrap();
        let f = PseudoMorphism::inclusion(&x, &w).unwrap();
        let h = PseudoMorphism::inclusion(&x, &y).unwrap();
        let z = amalgamate_pseudo(&f, &h).unwrap();
        let direct = cone_pseudo(&disjoint_union_pseudo(&l, &l2)).unwrap();
        assert!(find_pseudo_isomorphism(&z, &direct).is_some());
        assert!(find_pseudo_isomorphism(
            &z.link("v").unwrap().clone(),
            &disjoint_union_pseudo(&l, &l2)
        )
        .is_some());
    }

    #[test]
    fn empty_gluing_is_disjoint_union() {
        let w = cone_pseudo(&two_points()).unwrap();
        let y = arc();
        let e = PseudoSkeleton::empty();
        let z = amalgamate_pseudo(
            &PseudoMorphism::inclusion(&e, &w).unwrap(),
            &PseudoMorphism::inclusion(&e, &y).unwrap(),
        )
        .unwrap();
        assert_eq!(z, disjoint_union_pseudo(&w, &y));
    }

    #[test]
    fn eight_curve_from_arcs() {
        let a = arc();
        let ends = a
            .restrict(
                &["a0", "a1"]
                    .into_iter()
                    .map(|s| StratumId::new(s).unwrap())
                    .collect(),
            )
            .unwrap();
        let circle = amalgamate_pseudo(
            &PseudoMorphism::inclusion(&ends, &a).unwrap(),
            &PseudoMorphism::inclusion(&ends, &a).unwrap(),
        )
        .unwrap();
        assert_eq!(circle.base.len(), 4);
        assert_eq!(circle.link("a0").unwrap().base.len(), 2);
        let p = circle
            .restrict(
                &["a0"]
                    .into_iter()
                    .map(|s| StratumId::new(s).unwrap())
                    .collect(),
            )
            .unwrap();
        let eight = amalgamate_pseudo(
            &PseudoMorphism::inclusion(&p, &circle).unwrap(),
            &PseudoMorphism::inclusion(&p, &circle).unwrap(),
        )
        .unwrap();
        assert!(validate_pseudo(&eight).is_ok());
        let link = eight.link("a0").unwrap();
        assert_eq!(link.base.len(), 4);
        assert!(link
            .base
            .labels()
            .iter()
            .all(|l| l.compact && l.dim == 0.into()));
    }

    #[test]
    fn open_gluing_is_refused() {
        let a = arc();
        let open = a
            .restrict(&a.base.incidence_neighborhood("i").unwrap())
            .unwrap();
        let f = PseudoMorphism::inclusion(&open, &a).unwrap();
        let err = amalgamate_pseudo(&f, &f).unwrap_err();
        assert!(matches!(
            err,
            PseudoError::NonClosedGluing { leg: Leg::Left }
        ));
        assert!(err.to_string().starts_with("NonClosedGluing"));
    }

    #[test]
    fn weak_carrier_is_refused() {
        let a = arc();
        let ends = a.restrict(&a.base.minimal_strata()).unwrap();
        let f = PseudoMorphism::inclusion(&ends, &a).unwrap();
        let weak = PseudoMorphism {
            carrier: f.carrier.clone().with_declarations(Default::default()),
            ..f.clone()
        };
        assert!(matches!(
            amalgamate_pseudo(&weak, &f),
            Err(PseudoError::NotStrong { .. })
        ));
    }

    #[test]
    fn link_maps_are_checked() {
        let a = arc();
        let ends = a.restrict(&a.base.minimal_strata()).unwrap();
        let carrier = StrataMorphism::inclusion(&ends.base, &a.base).unwrap();
        let good = PseudoMorphism::inclusion(&ends, &a).unwrap();
        assert_eq!(good.class(), MorphClass::StrongEmbedding);
        let wrong = PseudoMorphism::inclusion(&points(1, "t"), &points(1, "t")).unwrap();
        let maps: BTreeMap<_, _> = [(StratumId::new("a0").unwrap(), wrong)]
            .into_iter()
            .collect();
        assert!(PseudoMorphism::new(ends.clone(), a.clone(), carrier, maps).is_err());
    }

    #[test]
    fn random_compact_cones_validate() {
        for i in 0..100 {
            let l = random_compact_pseudo(&mut rng_for(11, i), 3, "l");
            assert!(validate_pseudo(&l).is_ok(), "{}", validate_pseudo(&l));
            let c = cone_pseudo(&l).unwrap();
            assert!(validate_pseudo(&c).is_ok(), "{}", validate_pseudo(&c));
            assert_eq!(c.length(), l.length() + 1);
            assert!(c.links.values().all(|k| k.length() < c.length()));
        }
    }

    #[test]
    fn random_cospans_amalgamate() {
        for i in 0..60 {
            let (f, h) = random_closed_pseudo_cospan(&mut rng_for(12, i), 3);
            assert!(f.class() >= MorphClass::StrongEmbedding);
            let z = amalgamate_pseudo(&f, &h).unwrap_or_else(|e| panic!("{i}: {e}"));
            assert!(validate_pseudo(&z).is_ok());
            assert!(z.depth() <= f.target().depth().max(h.target().depth()));
        }
    }

    #[test]
    fn decomposition_round_trips() {
        let c = cone_pseudo(&two_points()).unwrap();
        assert_eq!(decompose_pseudo(&c).pieces.len(), 1);
        let two = disjoint_union_pseudo(&c, &cone_pseudo(&arc_link()).unwrap());
        let plan = decompose_pseudo(&two);
        assert_eq!(plan.pieces.len(), 2);
        assert_eq!(replay_pseudo(&plan).unwrap(), two);
        let book = open_book();
        assert!(validate_pseudo(&book).is_ok(), "{}", validate_pseudo(&book));
        let plan = decompose_pseudo(&book);
        assert_eq!(plan.pieces.len(), 2);
        let back = replay_pseudo(&plan).unwrap();
        assert!(find_pseudo_isomorphism(&back, &book).is_some());
    }

    fn arc_link() -> PseudoSkeleton {
        suspension(&points(1, "k"), "n", "s").unwrap()
    }

    fn open_book() -> PseudoSkeleton {
        let base = RawSkeleton::new()
            .stratum("a", StratumLabel::new(0).compact().connected())
            .stratum("b", StratumLabel::new(0).compact().connected())
            .stratum("m", StratumLabel::new(1).connected())
            .stratum("n", StratumLabel::new(1).connected())
            .stratum("r", StratumLabel::new(2).connected())
            .below("a", "m")
            .below("m", "r")
            .below("b", "n")
            .below("n", "r")
            .build()
            .unwrap();
        let pt = points(1, "t");
        let half = cone_pseudo(&pt)
            .unwrap()
            .base
            .map_labels(|_, l| StratumLabel {
                compact: true,
                ..l.clone()
            });
        let half = PseudoSkeleton::manifold(half);
        // the link of `v` in the cone is one point, so the half-arc relabelled compact is a valid link
        let half = PseudoSkeleton::new(
            half.base,
            [(StratumId::new("v").unwrap(), pt.clone())]
                .into_iter()
                .collect(),
        );
        let links = [
            ("a", half.clone()),
            ("b", half),
            ("m", pt.clone()),
            ("n", pt),
        ]
        .into_iter()
        .map(|(k, v)| (StratumId::new(k).unwrap(), v))
        .collect();
        PseudoSkeleton::new(base, links)
    }
}
