//! Stratum-level maps between skeletons and the embedding hierarchy.
//!
//! A map records, for every source stratum, the target stratum it lands in
//! and whether it covers that target stratum entirely (`onto`). Point-level
//! hypotheses that a poset cannot see (properness, injectivity on points,
//! being an immersion on each stratum) are carried as declarations and are
//! trusted; everything else is checked.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skeleton::{Skeleton, StrataSubset, StratumId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("unknown {side} stratum `{id}`")]
    UnknownStratum { side: Side, id: String },
    #[error("no stratum-preserving map: source stratum `{stratum}` has {found} target strata")]
    NoStratumPreservingMap { stratum: String, found: usize },
    #[error("entry `{source_id}` -> `{target_id}` violates the dimension constraint")]
    Dimension {
        source_id: String,
        target_id: String,
    },
    #[error("skeleton mismatch: target of the first map is not the source of the second")]
    SkeletonMismatch,
    #[error("map is not an embedding (classified {0})")]
    NotEmbedding(MorphClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Source,
    Target,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

/// Unmodelled point-level hypotheses, declared by the user.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Declarations {
    #[serde(default)]
    pub proper: bool,
    #[serde(default)]
    pub injective: bool,
    #[serde(default)]
    pub immersion: bool,
}

impl Declarations {
    pub fn all() -> Self {
        Declarations {
            proper: true,
            injective: true,
            immersion: true,
        }
    }

    pub fn and(self, other: Declarations) -> Declarations {
        Declarations {
            proper: self.proper && other.proper,
            injective: self.injective && other.injective,
            immersion: self.immersion && other.immersion,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MorphClass {
    NotMorphism,
    Morphism,
    Immersion,
    Embedding,
    StrongEmbedding,
    Isomorphism,
}

impl fmt::Display for MorphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MorphClass::NotMorphism => "NOT_MORPHISM",
            MorphClass::Morphism => "MORPHISM",
            MorphClass::Immersion => "IMMERSION",
            MorphClass::Embedding => "EMBEDDING",
            MorphClass::StrongEmbedding => "STRONG_EMBEDDING",
            MorphClass::Isomorphism => "ISOMORPHISM",
        })
    }
}

impl std::str::FromStr for MorphClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        Ok(match norm.as_str() {
            "NOT_MORPHISM" => MorphClass::NotMorphism,
            "MORPHISM" => MorphClass::Morphism,
            "IMMERSION" => MorphClass::Immersion,
            "EMBEDDING" => MorphClass::Embedding,
            "STRONG_EMBEDDING" | "STRONG" => MorphClass::StrongEmbedding,
            "ISOMORPHISM" => MorphClass::Isomorphism,
            _ => return Err(format!("unknown class `{s}`")),
        })
    }
}

/// Why a map stops at its class (or `Certified` for isomorphisms).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Certified,
    NoStratumPreservingMap {
        stratum: String,
    },
    OrderNotPreserved {
        lower: String,
        upper: String,
    },
    MissingDeclaration {
        declaration: String,
    },
    NotInjective {
        first: String,
        second: String,
        image: String,
    },
    NotOnto {
        stratum: String,
    },
    OrderNotReflected {
        first: String,
        second: String,
    },
    NotSurjective {
        missed: String,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Certified => f.write_str("certified"),
            Witness::NoStratumPreservingMap { stratum } => {
                write!(f, "no stratum-preserving map at `{stratum}`")
            }
            Witness::OrderNotPreserved { lower, upper } => {
                write!(f, "`{lower}` <= `{upper}` but their images are not ordered")
            }
            Witness::MissingDeclaration { declaration } => {
                write!(f, "`{declaration}` not declared")
            }
            Witness::NotInjective {
                first,
                second,
                image,
            } => {
                write!(f, "`{first}` and `{second}` both map to `{image}`")
            }
            Witness::NotOnto { stratum } => {
                write!(f, "`{stratum}` does not fill its target stratum")
            }
            Witness::OrderNotReflected { first, second } => {
                write!(
                    f,
                    "images of `{first}` <= `{second}` are ordered but the strata are not"
                )
            }
            Witness::NotSurjective { missed } => write!(f, "target stratum `{missed}` is not hit"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: MorphClass,
    pub witness: Witness,
}

/// JSON form: `{"map": [["s", "t", onto], ...], "declare": {...}}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismJson {
    pub map: Vec<(String, String, bool)>,
    #[serde(default)]
    pub declare: Declarations,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StrataMorphism {
    source: Skeleton,
    target: Skeleton,
    /// Indexed by source stratum: (target index, onto).
    entries: Vec<(usize, bool)>,
    declarations: Declarations,
}

impl StrataMorphism {
    /// Builds a map from `(source id, target id, onto)` triples. Every source
    /// stratum must appear exactly once.
    pub fn new<S, T>(
        source: Skeleton,
        target: Skeleton,
        entries: impl IntoIterator<Item = (S, T, bool)>,
        declarations: Declarations,
    ) -> Result<Self, MorphismError>
    where
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut assigned: Vec<Vec<(usize, bool)>> = vec![Vec::new(); source.len()];
        for (s, t, onto) in entries {
            let (s, t) = (s.as_ref(), t.as_ref());
            let si = source
                .index_of(s)
                .ok_or_else(|| MorphismError::UnknownStratum {
                    side: Side::Source,
                    id: s.to_string(),
                })?;
            let ti = target
                .index_of(t)
                .ok_or_else(|| MorphismError::UnknownStratum {
                    side: Side::Target,
                    id: t.to_string(),
                })?;
            if !assigned[si].iter().any(|&(x, _)| x == ti) {
                assigned[si].push((ti, onto));
            }
        }
        let mut out = Vec::with_capacity(source.len());
        for (si, targets) in assigned.iter().enumerate() {
            if targets.len() != 1 {
                return Err(MorphismError::NoStratumPreservingMap {
                    stratum: source.id(si).to_string(),
                    found: targets.len(),
                });
            }
            let (ti, onto) = targets[0];
            let (ds, dt) = (source.label(si).dim, target.label(ti).dim);
            if (onto && ds != dt) || ds > dt {
                return Err(MorphismError::Dimension {
                    source_id: source.id(si).to_string(),
                    target_id: target.id(ti).to_string(),
                });
            }
            out.push((ti, onto));
        }
        Ok(StrataMorphism {
            source,
            target,
            entries: out,
            declarations,
        })
    }

    pub fn from_json(
        source: Skeleton,
        target: Skeleton,
        json: &MorphismJson,
    ) -> Result<Self, MorphismError> {
        StrataMorphism::new(
            source,
            target,
            json.map
                .iter()
                .map(|(s, t, o)| (s.as_str(), t.as_str(), *o)),
            json.declare,
        )
    }

    pub fn to_json(&self) -> MorphismJson {
        MorphismJson {
            map: (0..self.source.len())
                .map(|i| {
                    let (t, onto) = self.entries[i];
                    (
                        self.source.id(i).to_string(),
                        self.target.id(t).to_string(),
                        onto,
                    )
                })
                .collect(),
            declare: self.declarations,
        }
    }

    pub fn identity(s: &Skeleton) -> Self {
        StrataMorphism {
            source: s.clone(),
            target: s.clone(),
            entries: (0..s.len()).map(|i| (i, true)).collect(),
            declarations: Declarations::all(),
        }
    }

    /// Sends every stratum of `source` to the same id in `target`, onto.
    pub fn inclusion(source: &Skeleton, target: &Skeleton) -> Result<Self, MorphismError> {
        StrataMorphism::new(
            source.clone(),
            target.clone(),
            source
                .ids()
                .iter()
                .map(|id| (id.as_str(), id.as_str(), true)),
            Declarations::all(),
        )
    }

    pub fn source(&self) -> &Skeleton {
        &self.source
    }

    pub fn target(&self) -> &Skeleton {
        &self.target
    }

    pub fn declarations(&self) -> Declarations {
        self.declarations
    }

    pub fn with_declarations(mut self, declarations: Declarations) -> Self {
        self.declarations = declarations;
        self
    }

    /// Target index and onto flag of source stratum `i`.
    pub fn entry(&self, i: usize) -> (usize, bool) {
        self.entries[i]
    }

    pub fn apply(&self, id: &str) -> Option<&StratumId> {
        self.source
            .index_of(id)
            .map(|i| self.target.id(self.entries[i].0))
    }

    pub fn is_onto_at(&self, id: &str) -> Option<bool> {
        self.source.index_of(id).map(|i| self.entries[i].1)
    }

    /// Source id -> target id.
    pub fn strata_map(&self) -> BTreeMap<StratumId, StratumId> {
        (0..self.source.len())
            .map(|i| {
                (
                    self.source.id(i).clone(),
                    self.target.id(self.entries[i].0).clone(),
                )
            })
            .collect()
    }

    pub fn image(&self) -> StrataSubset {
        self.entries
            .iter()
            .map(|&(t, _)| self.target.id(t).clone())
            .collect()
    }

    pub fn is_injective(&self) -> bool {
        let mut hit = vec![false; self.target.len()];
        self.entries
            .iter()
            .all(|&(t, _)| !std::mem::replace(&mut hit[t], true))
    }

    pub fn classify(&self) -> Classification {
        let (src, tgt) = (&self.source, &self.target);
        let n = src.len();
        let name = |i: usize| src.id(i).to_string();
        let done = |class, witness| Classification { class, witness };

        for i in 0..n {
            for j in 0..n {
                if src.leq(i, j) && !tgt.leq(self.entries[i].0, self.entries[j].0) {
                    return done(
                        MorphClass::NotMorphism,
                        Witness::OrderNotPreserved {
                            lower: name(i),
                            upper: name(j),
                        },
                    );
                }
            }
        }
        let d = self.declarations;
        let missing = |what: &str| Witness::MissingDeclaration {
            declaration: what.to_string(),
        };
        if !d.immersion {
            return done(MorphClass::Morphism, missing("immersion"));
        }
        if !d.proper {
            return done(MorphClass::Immersion, missing("proper"));
        }
        if !d.injective {
            return done(MorphClass::Immersion, missing("injective"));
        }
        let mut first_preimage: Vec<Option<usize>> = vec![None; tgt.len()];
        for i in 0..n {
            let t = self.entries[i].0;
            if let Some(prev) = first_preimage[t] {
                return done(
                    MorphClass::Immersion,
                    Witness::NotInjective {
                        first: name(prev),
                        second: name(i),
                        image: tgt.id(t).to_string(),
                    },
                );
            }
            first_preimage[t] = Some(i);
        }
        if let Some(i) = (0..n).find(|&i| !self.entries[i].1) {
            return done(MorphClass::Embedding, Witness::NotOnto { stratum: name(i) });
        }
        for i in 0..n {
            for j in 0..n {
                if !src.leq(i, j) && tgt.leq(self.entries[i].0, self.entries[j].0) {
                    return done(
                        MorphClass::Embedding,
                        Witness::OrderNotReflected {
                            first: name(i),
                            second: name(j),
                        },
                    );
                }
            }
        }
        if let Some(t) = (0..tgt.len()).find(|&t| first_preimage[t].is_none()) {
            return done(
                MorphClass::StrongEmbedding,
                Witness::NotSurjective {
                    missed: tgt.id(t).to_string(),
                },
            );
        }
        done(MorphClass::Isomorphism, Witness::Certified)
    }
}

/// Classifies a candidate correspondence that may fail to be a function:
/// a source stratum related to zero or several target strata means no
/// stratum-preserving map exists, reported as `NotMorphism`.
pub fn classify_candidate<S, T>(
    source: &Skeleton,
    target: &Skeleton,
    entries: impl IntoIterator<Item = (S, T, bool)>,
    declarations: Declarations,
) -> Result<Classification, MorphismError>
where
    S: AsRef<str>,
    T: AsRef<str>,
{
    match StrataMorphism::new(source.clone(), target.clone(), entries, declarations) {
        Ok(f) => Ok(f.classify()),
        Err(MorphismError::NoStratumPreservingMap { stratum, .. }) => Ok(Classification {
            class: MorphClass::NotMorphism,
            witness: Witness::NoStratumPreservingMap { stratum },
        }),
        Err(e) => Err(e),
    }
}

/// `g ∘ f`; onto flags and declarations compose conjunctively.
pub fn compose(g: &StrataMorphism, f: &StrataMorphism) -> Result<StrataMorphism, MorphismError> {
    if f.target != g.source {
        return Err(MorphismError::SkeletonMismatch);
    }
    Ok(StrataMorphism {
        source: f.source.clone(),
        target: g.target.clone(),
        entries: f
            .entries
            .iter()
            .map(|&(t, onto)| {
                let (u, onto2) = g.entries[t];
                (u, onto && onto2)
            })
            .collect(),
        declarations: f.declarations.and(g.declarations),
    })
}

/// Whether an embedding has a down-closed (closed) image.
pub fn is_closed_embedding(f: &StrataMorphism) -> Result<bool, MorphismError> {
    let class = f.classify().class;
    if class < MorphClass::Embedding {
        return Err(MorphismError::NotEmbedding(class));
    }
    Ok(f.target.is_down_closed(&f.image()))
}

/// Label- and order-preserving bijection `a -> b`, if one exists.
pub fn find_isomorphism(a: &Skeleton, b: &Skeleton) -> Option<StrataMorphism> {
    find_isomorphism_with(a, b, |_, _| true)
}

/// Isomorphism search where stratum `i` of `a` may only go to stratum `j` of
/// `b` when `compatible(i, j)` holds. Backtracking over label- and
/// degree-compatible candidates, most constrained stratum first; the result
/// is deterministic.
pub fn find_isomorphism_with(
    a: &Skeleton,
    b: &Skeleton,
    mut compatible: impl FnMut(usize, usize) -> bool,
) -> Option<StrataMorphism> {
    let n = a.len();
    if n != b.len() {
        return None;
    }
    let signature = |s: &Skeleton, i: usize| {
        let l = s.label(i);
        let below = (0..s.len()).filter(|&j| s.lt(j, i)).count();
        let above = (0..s.len()).filter(|&j| s.lt(i, j)).count();
        (l.dim, l.compact, l.connected, below, above)
    };
    let sig_b: Vec<_> = (0..n).map(|j| signature(b, j)).collect();
    let mut candidates: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let sig = signature(a, i);
            (0..n).filter(|&j| sig_b[j] == sig).collect()
        })
        .collect();
    for i in 0..n {
        let keep: Vec<usize> = candidates[i]
            .iter()
            .copied()
            .filter(|&j| compatible(i, j))
            .collect();
        if keep.is_empty() {
            return None;
        }
        candidates[i] = keep;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (candidates[i].len(), i));

    let mut assignment = vec![usize::MAX; n];
    let mut used = vec![false; n];
    if !extend(a, b, &order, &candidates, 0, &mut assignment, &mut used) {
        return None;
    }
    Some(StrataMorphism {
        source: a.clone(),
        target: b.clone(),
        entries: assignment.into_iter().map(|j| (j, true)).collect(),
        declarations: Declarations::all(),
    })
}

fn extend(
    a: &Skeleton,
    b: &Skeleton,
    order: &[usize],
    candidates: &[Vec<usize>],
    depth: usize,
    assignment: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&i) = order.get(depth) else {
        return true;
    };
    for &j in &candidates[i] {
        if used[j] {
            continue;
        }
        let consistent = order[..depth].iter().all(|&k| {
            let m = assignment[k];
            a.leq(i, k) == b.leq(j, m) && a.leq(k, i) == b.leq(m, j)
        });
        if !consistent {
            continue;
        }
        assignment[i] = j;
        used[j] = true;
        if extend(a, b, order, candidates, depth + 1, assignment, used) {
            return true;
        }
        used[j] = false;
        assignment[i] = usize::MAX;
    }
    false
}
