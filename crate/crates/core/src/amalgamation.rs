//! Amalgamated sums along strong embeddings and the Fraïssé axioms.
//!
//! The amalgam `W ∪_X Y` of two strong embeddings `f: X -> W`, `h: X -> Y`
//! is the quotient of `W ⊔ Y` identifying `f(x)` with `h(x)`. Its order is
//! the transitive closure of the union of the two orders; nothing else is
//! added.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{self, GenConfig};
use crate::graphs::hasse_graph;
use crate::morphisms::{
    compose, is_closed_embedding, Declarations, MorphClass, MorphismError, StrataMorphism,
};
use crate::skeleton::{
    disjoint_union, fresh_id, validate_skeleton, Skeleton, SkeletonError, StratumId, StratumLabel,
    ValidationReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmalgamationError {
    #[error("{leg} leg is {class}, a strong embedding is required")]
    NotStrong { leg: Leg, class: MorphClass },
    #[error("the two maps do not share a source skeleton")]
    SourceMismatch,
    #[error("identified strata `{left}` and `{right}` carry different labels")]
    LabelConflict { left: String, right: String },
    #[error("amalgam order is not a partial order: {0}")]
    Order(ValidationReport),
    #[error("bouquet base `{0}` is not a minimal stratum")]
    BaseNotMinimal(String),
    #[error("bouquet base `{0}` is not 0-dimensional")]
    BaseNotPoint(String),
    #[error("a bouquet needs at least 2 copies, got {0}")]
    TooFewCopies(usize),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Left,
    Right,
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Leg::Left => "left",
            Leg::Right => "right",
        })
    }
}

/// `W ∪_X Y` with its two legs and the cospan it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PushoutResult {
    pub amalgam: Skeleton,
    /// `W -> amalgam`
    pub left_leg: StrataMorphism,
    /// `Y -> amalgam`
    pub right_leg: StrataMorphism,
    /// Where each stratum of `W` (left) and `Y` (right) ended up.
    pub identification: BTreeMap<(Leg, StratumId), StratumId>,
    /// `f: X -> W`
    pub f: StrataMorphism,
    /// `h: X -> Y`
    pub h: StrataMorphism,
}

fn require_strong(m: &StrataMorphism, leg: Leg) -> Result<(), AmalgamationError> {
    let class = m.classify().class;
    if class < MorphClass::StrongEmbedding {
        return Err(AmalgamationError::NotStrong { leg, class });
    }
    Ok(())
}

/// Pushout of two strong embeddings out of the same skeleton. Strata of `W`
/// keep their ids; strata of `Y` outside the glued part keep theirs unless
/// they collide, in which case they get a numeric suffix.
pub fn pushout(f: &StrataMorphism, h: &StrataMorphism) -> Result<PushoutResult, AmalgamationError> {
    if f.source() != h.source() {
        return Err(AmalgamationError::SourceMismatch);
    }
    require_strong(f, Leg::Left)?;
    require_strong(h, Leg::Right)?;
    let (x, w, y) = (f.source(), f.target(), h.target());

    let mut glued: BTreeMap<usize, usize> = BTreeMap::new();
    for xi in 0..x.len() {
        let (wi, _) = f.entry(xi);
        let (yi, _) = h.entry(xi);
        if !w.label(wi).agrees_with(y.label(yi)) {
            return Err(AmalgamationError::LabelConflict {
                left: w.id(wi).to_string(),
                right: y.id(yi).to_string(),
            });
        }
        glued.insert(yi, wi);
    }

    let mut taken: BTreeSet<StratumId> = w.ids().iter().cloned().collect();
    let mut strata: Vec<(StratumId, StratumLabel)> = w
        .ids()
        .iter()
        .cloned()
        .zip(w.labels().iter().cloned())
        .collect();
    // position of every Y stratum in `strata`
    let mut y_slot = vec![0usize; y.len()];
    for yi in 0..y.len() {
        y_slot[yi] = match glued.get(&yi) {
            Some(&wi) => wi,
            None => {
                let id = fresh_id(y.id(yi).as_str(), &taken);
                taken.insert(id.clone());
                strata.push((id, y.label(yi).clone()));
                strata.len() - 1
            }
        };
    }
    let mut relations = Vec::new();
    for i in 0..w.len() {
        for j in 0..w.len() {
            if w.lt(i, j) {
                relations.push((i, j));
            }
        }
    }
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y.lt(i, j) {
                relations.push((y_slot[i], y_slot[j]));
            }
        }
    }
    let slot_ids: Vec<StratumId> = strata.iter().map(|(id, _)| id.clone()).collect();
    let amalgam = Skeleton::from_relations(strata, &relations).map_err(|e| match e {
        SkeletonError::Invalid(r) => AmalgamationError::Order(r),
        other => other.into(),
    })?;

    let mut identification = BTreeMap::new();
    for id in w.ids() {
        identification.insert((Leg::Left, id.clone()), id.clone());
    }
    for yi in 0..y.len() {
        identification.insert((Leg::Right, y.id(yi).clone()), slot_ids[y_slot[yi]].clone());
    }
    let left_leg = StrataMorphism::new(
        w.clone(),
        amalgam.clone(),
        w.ids().iter().map(|id| (id.as_str(), id.as_str(), true)),
        Declarations::all(),
    )?;
    let right_leg = StrataMorphism::new(
        y.clone(),
        amalgam.clone(),
        (0..y.len()).map(|yi| (y.id(yi).as_str(), slot_ids[y_slot[yi]].as_str(), true)),
        Declarations::all(),
    )?;
    Ok(PushoutResult {
        amalgam,
        left_leg,
        right_leg,
        identification,
        f: f.clone(),
        h: h.clone(),
    })
}

/// `a ⊔ b` with its two inclusions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointEmbedding {
    pub joint: Skeleton,
    pub left: StrataMorphism,
    pub right: StrataMorphism,
}

pub fn joint_embedding(a: &Skeleton, b: &Skeleton) -> JointEmbedding {
    let (joint, renaming) = disjoint_union(a, b);
    let leg = |s: &Skeleton, names: &BTreeMap<StratumId, StratumId>| {
        StrataMorphism::new(
            s.clone(),
            joint.clone(),
            s.ids()
                .iter()
                .map(|id| (id.as_str(), names[id].as_str(), true)),
            Declarations::all(),
        )
        .expect("summand inclusion is well formed")
    };
    JointEmbedding {
        left: leg(a, &renaming.left),
        right: leg(b, &renaming.right),
        joint,
    }
}

/// Limits for [`verify_pushout_universal`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalityConfig {
    /// Cocone targets range over all posets with at most this many elements.
    pub max_target_strata: usize,
    /// Give up (indeterminate) after examining this many cocones.
    pub max_cocones: u64,
}

impl Default for UniversalityConfig {
    fn default() -> Self {
        UniversalityConfig {
            max_target_strata: 4,
            max_cocones: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Universality {
    Holds { targets: usize, cocones: u64 },
    Fails { counterexample: String },
    Indeterminate { reason: String },
}

impl Universality {
    pub fn holds(&self) -> bool {
        matches!(self, Universality::Holds { .. })
    }
}

/// Finite poset used as a cocone target.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmallPoset {
    n: usize,
    leq: Vec<bool>,
}

impl SmallPoset {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.n + j]
    }

    fn of_skeleton(s: &Skeleton) -> SmallPoset {
        let n = s.len();
        SmallPoset {
            n,
            leq: (0..n * n).map(|k| s.leq(k / n, k % n)).collect(),
        }
    }

    fn permuted(&self, perm: &[usize]) -> Vec<bool> {
        let n = self.n;
        let mut out = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                out[perm[i] * n + perm[j]] = self.leq(i, j);
            }
        }
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// All posets on exactly `n` elements, one per isomorphism class.
pub fn posets_up_to_iso(n: usize) -> Vec<SmallPoset> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let perms = permutations(n);
    let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                leq[i * n + j] = true;
            }
        }
        let transitive = (0..n).all(|i| {
            (0..n).all(|j| !leq[i * n + j] || (0..n).all(|k| !leq[j * n + k] || leq[i * n + k]))
        });
        let antisymmetric = pairs
            .iter()
            .all(|&(i, j)| !(leq[i * n + j] && leq[j * n + i]));
        if !(transitive && antisymmetric) {
            continue;
        }
        let p = SmallPoset { n, leq };
        let canon = perms
            .iter()
            .map(|perm| p.permuted(perm))
            .min()
            .unwrap_or_default();
        if seen.insert(canon) {
            out.push(p);
        }
    }
    out
}

/// Calls `visit` with every order-preserving map `source -> target`
/// (as a vector of target indices) that agrees with `fixed` where set.
/// Stops early when `visit` returns false.
fn for_each_monotone_map(
    source: &Skeleton,
    target: &SmallPoset,
    fixed: &[Option<usize>],
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    fn go(
        source: &Skeleton,
        target: &SmallPoset,
        fixed: &[Option<usize>],
        i: usize,
        map: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if i == source.len() {
            return visit(map);
        }
        let choices: Vec<usize> = match fixed[i] {
            Some(t) => vec![t],
            None => (0..target.len()).collect(),
        };
        for t in choices {
            let ok = (0..i).all(|k| {
                (!source.leq(k, i) || target.leq(map[k], t))
                    && (!source.leq(i, k) || target.leq(t, map[k]))
            });
            if !ok {
                continue;
            }
            map.push(t);
            let cont = go(source, target, fixed, i + 1, map, visit);
            map.pop();
            if !cont {
                return false;
            }
        }
        true
    }
    go(
        source,
        target,
        fixed,
        0,
        &mut Vec::with_capacity(source.len()),
        visit,
    )
}

/// Checks the pushout property at the level of order-preserving strata maps:
/// every commuting cocone `W -> Z' <- Y` into a poset `Z'` with at most
/// `max_target_strata` elements (one per isomorphism class), plus the
/// amalgam's own cocone, factors through exactly one order-preserving
/// mediator.
pub fn verify_pushout_universal(p: &PushoutResult, cfg: &UniversalityConfig) -> Universality {
    let (x, w, y, a) = (p.f.source(), p.f.target(), p.h.target(), &p.amalgam);
    if p.left_leg.source() != w
        || p.right_leg.source() != y
        || p.left_leg.target() != a
        || p.right_leg.target() != a
    {
        return Universality::Fails {
            counterexample: "legs do not match the cospan and amalgam".into(),
        };
    }
    let left_sq = compose(&p.left_leg, &p.f);
    let right_sq = compose(&p.right_leg, &p.h);
    match (left_sq, right_sq) {
        (Ok(l), Ok(r)) if l.strata_map() == r.strata_map() => {}
        _ => {
            return Universality::Fails {
                counterexample: "square does not commute".into(),
            }
        }
    }

    let mut targets: Vec<SmallPoset> = (0..=cfg.max_target_strata)
        .flat_map(posets_up_to_iso)
        .collect();
    targets.push(SmallPoset::of_skeleton(a));
    let ntargets = targets.len();

    let left: Vec<usize> = (0..w.len()).map(|i| p.left_leg.entry(i).0).collect();
    let right: Vec<usize> = (0..y.len()).map(|i| p.right_leg.entry(i).0).collect();
    let fx: Vec<usize> = (0..x.len()).map(|i| p.f.entry(i).0).collect();
    let hx: Vec<usize> = (0..x.len()).map(|i| p.h.entry(i).0).collect();

    let mut cocones = 0u64;
    let mut failure: Option<String> = None;
    let mut exhausted = false;
    for (ti, z) in targets.iter().enumerate() {
        let own = ti + 1 == ntargets;
        let mut check = |s: &[usize], t: &[usize]| -> bool {
            cocones += 1;
            if cocones > cfg.max_cocones {
                exhausted = true;
                return false;
            }
            let mut forced: Vec<Option<usize>> = vec![None; a.len()];
            for (wi, &ai) in left.iter().enumerate() {
                forced[ai] = Some(s[wi]);
            }
            for (yi, &ai) in right.iter().enumerate() {
                match forced[ai] {
                    Some(v) if v != t[yi] => {
                        failure = Some(format!(
                            "cocone into a {}-element poset has no mediator",
                            z.len()
                        ));
                        return false;
                    }
                    _ => forced[ai] = Some(t[yi]),
                }
            }
            let mut mediators = 0usize;
            for_each_monotone_map(a, z, &forced, &mut |_| {
                mediators += 1;
                mediators < 2
            });
            if mediators != 1 {
                failure = Some(format!(
                    "cocone into a {}-element poset has {} mediators",
                    z.len(),
                    if mediators == 0 { "no" } else { "several" }
                ));
                return false;
            }
            true
        };
        if own {
            // the amalgam's own cocone; its mediator must be the identity
            let s: Vec<usize> = left.clone();
            let t: Vec<usize> = right.clone();
            if !check(&s, &t) {
                break;
            }
            continue;
        }
        let completed = for_each_monotone_map(w, z, &vec![None; w.len()], &mut |s| {
            let mut fixed = vec![None; y.len()];
            for k in 0..x.len() {
                fixed[hx[k]] = Some(s[fx[k]]);
            }
            let s = s.to_vec();
            for_each_monotone_map(y, z, &fixed, &mut |t| check(&s, t))
        });
        if !completed {
            break;
        }
    }
    if let Some(counterexample) = failure {
        return Universality::Fails { counterexample };
    }
    if exhausted {
        return Universality::Indeterminate {
            reason: format!("cocone budget of {} exhausted", cfg.max_cocones),
        };
    }
    Universality::Holds {
        targets: ntargets,
        cocones,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JoinCheck {
    Holds,
    Fails {
        upper: String,
        lower: String,
        detail: String,
    },
    NotApplicable {
        reason: String,
    },
}

/// Compares Γ(amalgam) with the join of Γ(W) and Γ(Y) along the glued
/// strata. Only meaningful when `X` is closed in both `W` and `Y`.
pub fn graph_join_check(f: &StrataMorphism, h: &StrataMorphism, p: &PushoutResult) -> JoinCheck {
    for (m, leg) in [(f, Leg::Left), (h, Leg::Right)] {
        match is_closed_embedding(m) {
            Ok(true) => {}
            Ok(false) => {
                return JoinCheck::NotApplicable {
                    reason: format!("glued part is not closed on the {leg} side"),
                }
            }
            Err(e) => {
                return JoinCheck::NotApplicable {
                    reason: e.to_string(),
                }
            }
        }
    }
    let mut joined = BTreeSet::new();
    for (leg, s, map) in [
        (Leg::Left, p.left_leg.source(), &p.left_leg),
        (Leg::Right, p.right_leg.source(), &p.right_leg),
    ] {
        let _ = leg;
        for (a, b) in hasse_graph(s).edges() {
            let (fa, fb) = (
                map.apply(a.as_str()).unwrap(),
                map.apply(b.as_str()).unwrap(),
            );
            joined.insert((fa.clone(), fb.clone()));
        }
    }
    let actual = hasse_graph(&p.amalgam);
    if let Some((a, b)) = joined.iter().find(|e| !actual.edges().contains(e)) {
        return JoinCheck::Fails {
            upper: a.to_string(),
            lower: b.to_string(),
            detail: "join edge missing from the amalgam graph".into(),
        };
    }
    if let Some((a, b)) = actual.edges().iter().find(|e| !joined.contains(e)) {
        return JoinCheck::Fails {
            upper: a.to_string(),
            lower: b.to_string(),
            detail: "amalgam edge not in the join".into(),
        };
    }
    JoinCheck::Holds
}

/// `k` copies of `x` glued at the point stratum `base`. Copy `i` renames
/// every other stratum `s` to `s_i`.
pub fn bouquet(x: &Skeleton, base: &str, k: usize) -> Result<Skeleton, AmalgamationError> {
    let b = x
        .index_of(base)
        .ok_or_else(|| SkeletonError::UnknownStratum(base.to_string()))?;
    if !x.is_minimal(b) {
        return Err(AmalgamationError::BaseNotMinimal(base.to_string()));
    }
    if x.label(b).dim != 0.into() {
        return Err(AmalgamationError::BaseNotPoint(base.to_string()));
    }
    if k < 2 {
        return Err(AmalgamationError::TooFewCopies(k));
    }
    let copy = |i: usize| {
        x.renamed(|id| {
            if id.as_str() == base {
                id.clone()
            } else {
                StratumId::new(format!("{id}_{i}")).expect("suffix keeps ids valid")
            }
        })
    };
    let point = Skeleton::from_relations(vec![(x.id(b).clone(), x.label(b).clone())], &[])?;
    let mut acc = copy(1)?;
    for i in 2..=k {
        let next = copy(i)?;
        let f = StrataMorphism::inclusion(&point, &acc)?;
        let h = StrataMorphism::inclusion(&point, &next)?;
        acc = pushout(&f, &h)?.amalgam;
    }
    Ok(acc)
}

/// Options for [`fraisse_check`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FraisseConfig {
    pub generator: GenConfig,
    /// Flip the compactness label of one glued stratum on the right side
    /// before amalgamating (fault injection).
    #[serde(default)]
    pub inject_label_conflict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomFailure {
    pub seed: u64,
    pub iteration: u64,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub iterations: u64,
    pub failures: Vec<AxiomFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FraisseReport {
    pub seed: u64,
    pub axioms: Vec<AxiomReport>,
}

impl FraisseReport {
    pub fn passed(&self) -> bool {
        self.axioms.iter().all(|a| a.failures.is_empty())
    }
}

pub const AXIOMS: [&str; 3] = ["heritability", "joint_embedding", "amalgamation"];

fn heritability(rng: &mut impl rand::Rng, cfg: &GenConfig) -> Result<(), String> {
    let y = generate::random_skeleton(rng, cfg, "s");
    let part = generate::random_subset(rng, &y, 0.5);
    let x = y.restrict(&part).map_err(|e| e.to_string())?;
    let e = StrataMorphism::inclusion(&x, &y).map_err(|e| e.to_string())?;
    let class = e.classify().class;
    if class < MorphClass::StrongEmbedding {
        return Err(format!("sub-skeleton inclusion classified {class}"));
    }
    let report = validate_skeleton(e.source());
    if !report.is_ok() {
        return Err(format!("embedded source is not a skeleton: {report}"));
    }
    Ok(())
}

fn joint(rng: &mut impl rand::Rng, cfg: &GenConfig) -> Result<(), String> {
    let a = generate::random_skeleton(rng, cfg, "a");
    let b = generate::random_skeleton(rng, cfg, "b");
    let j = joint_embedding(&a, &b);
    for (leg, m) in [("left", &j.left), ("right", &j.right)] {
        let class = m.classify().class;
        if class < MorphClass::StrongEmbedding {
            return Err(format!("{leg} joint leg classified {class}"));
        }
    }
    Ok(())
}

fn amalgamation(rng: &mut impl rand::Rng, cfg: &FraisseConfig) -> Result<(), String> {
    let closed = rng.random_bool(0.5);
    let (f, mut h) = generate::random_strong_cospan(rng, &cfg.generator, closed);
    if cfg.inject_label_conflict && !f.source().is_empty() {
        let glued = h.apply(f.source().id(0).as_str()).unwrap().clone();
        let y = h.target().map_labels(|id, l| {
            if *id == glued {
                StratumLabel {
                    compact: !l.compact,
                    ..l.clone()
                }
            } else {
                l.clone()
            }
        });
        h = StrataMorphism::from_json(h.source().clone(), y, &h.to_json())
            .map_err(|e| e.to_string())?;
    }
    let p = pushout(&f, &h).map_err(|e| e.to_string())?;
    for (leg, m) in [("left", &p.left_leg), ("right", &p.right_leg)] {
        let class = m.classify().class;
        if class < MorphClass::StrongEmbedding {
            return Err(format!("{leg} pushout leg classified {class}"));
        }
    }
    let l = compose(&p.left_leg, &f).map_err(|e| e.to_string())?;
    let r = compose(&p.right_leg, &h).map_err(|e| e.to_string())?;
    if l.strata_map() != r.strata_map() {
        return Err("pushout square does not commute".into());
    }
    Ok(())
}

/// Runs the three Fraïssé axioms on `iterations` random instances. Iteration
/// `i` draws from stream `i` of `seed`, so the report does not depend on how
/// the work is scheduled.
pub fn fraisse_check(cfg: &FraisseConfig, seed: u64, iterations: u64) -> FraisseReport {
    let outcomes: Vec<[Result<(), String>; 3]> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = generate::rng_for(seed, i);
            [
                heritability(&mut rng, &cfg.generator),
                joint(&mut rng, &cfg.generator),
                amalgamation(&mut rng, cfg),
            ]
        })
        .collect();
    let axioms = AXIOMS
        .iter()
        .enumerate()
        .map(|(k, name)| AxiomReport {
            axiom: name.to_string(),
            iterations,
            failures: outcomes
                .iter()
                .enumerate()
                .filter_map(|(i, o)| {
                    o[k].as_ref().err().map(|w| AxiomFailure {
                        seed,
                        iteration: i as u64,
                        witness: w.clone(),
                    })
                })
                .collect(),
        })
        .collect();
    FraisseReport { seed, axioms }
}
