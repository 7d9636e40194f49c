//! Directed towers `X_1 -> X_2 -> ...` of embeddings, their colimits, and a
//! classifier for the observed limit behaviour.
//!
//! Stages are numbered from 1. A finite tower never proves anything about the
//! limit; with `extrapolate = false` only observed behaviour is reported.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amalgamation::{bouquet, AmalgamationError};
use crate::generate::{self, GenConfig};
use crate::graphs::{hasse_graph, StratGraph};
use crate::morphisms::{Declarations, MorphClass, MorphismError, MorphismJson, StrataMorphism};
use crate::skeleton::{
    cone, disjoint_union, Dim, Skeleton, SkeletonError, StratumId, StratumLabel,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LimitError {
    #[error("a tower needs at least one stage")]
    NoStages,
    #[error("{stages} stages need {} maps, got {maps}", stages - 1)]
    MapCount { stages: usize, maps: usize },
    #[error("map {index} does not go from stage {index} to stage {}", index + 1)]
    Mismatch { index: usize },
    #[error("map {index} is {class}, an injective embedding is required")]
    NotEmbedding { index: usize, class: MorphClass },
    #[error("{0} needs at least one step")]
    NoSteps(&'static str),
    #[error(transparent)]
    Amalgamation(#[from] AmalgamationError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

/// `maps[i]` goes from `stages[i]` to `stages[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    stages: Vec<Skeleton>,
    maps: Vec<StrataMorphism>,
    regular_image: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerJson {
    pub stages: Vec<Skeleton>,
    pub maps: Vec<MorphismJson>,
    #[serde(default)]
    pub regular_image: Vec<bool>,
}

impl Tower {
    pub fn new(
        stages: Vec<Skeleton>,
        maps: Vec<StrataMorphism>,
        regular_image: Vec<bool>,
    ) -> Result<Self, LimitError> {
        if stages.is_empty() {
            return Err(LimitError::NoStages);
        }
        if maps.len() + 1 != stages.len() || regular_image.len() != maps.len() {
            return Err(LimitError::MapCount {
                stages: stages.len(),
                maps: maps.len().min(regular_image.len()),
            });
        }
        for (index, m) in maps.iter().enumerate() {
            if m.source() != &stages[index] || m.target() != &stages[index + 1] {
                return Err(LimitError::Mismatch { index });
            }
            let class = m.classify().class;
            if class < MorphClass::Embedding || !m.is_injective() {
                return Err(LimitError::NotEmbedding { index, class });
            }
        }
        Ok(Tower {
            stages,
            maps,
            regular_image,
        })
    }

    pub fn stages(&self) -> &[Skeleton] {
        &self.stages
    }

    pub fn maps(&self) -> &[StrataMorphism] {
        &self.maps
    }

    pub fn regular_image(&self) -> &[bool] {
        &self.regular_image
    }

    pub fn last(&self) -> &Skeleton {
        self.stages.last().expect("towers are non-empty")
    }

    /// Drops the first stage; `None` if only one is left.
    pub fn tail(&self) -> Option<Tower> {
        (self.stages.len() > 1).then(|| Tower {
            stages: self.stages[1..].to_vec(),
            maps: self.maps[1..].to_vec(),
            regular_image: self.regular_image[1..].to_vec(),
        })
    }

    /// Puts `m: s -> first stage` in front.
    pub fn prepend(
        &self,
        s: Skeleton,
        m: StrataMorphism,
        regular_image: bool,
    ) -> Result<Tower, LimitError> {
        let mut stages = vec![s];
        stages.extend(self.stages.iter().cloned());
        let mut maps = vec![m];
        maps.extend(self.maps.iter().cloned());
        let mut regular = vec![regular_image];
        regular.extend(self.regular_image.iter().copied());
        Tower::new(stages, maps, regular)
    }

    pub fn to_json(&self) -> TowerJson {
        TowerJson {
            stages: self.stages.clone(),
            maps: self.maps.iter().map(|m| m.to_json()).collect(),
            regular_image: self.regular_image.clone(),
        }
    }

    pub fn from_json(json: &TowerJson) -> Result<Tower, LimitError> {
        let maps = json
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (s, t) = (json.stages.get(i), json.stages.get(i + 1));
                match (s, t) {
                    (Some(s), Some(t)) => Ok(StrataMorphism::from_json(s.clone(), t.clone(), m)?),
                    _ => Err(LimitError::MapCount {
                        stages: json.stages.len(),
                        maps: json.maps.len(),
                    }),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let regular = if json.regular_image.is_empty() {
            vec![false; maps.len()]
        } else {
            json.regular_image.clone()
        };
        Tower::new(json.stages.clone(), maps, regular)
    }

    /// For each stratum of the last stage, the indices of its preimages,
    /// earliest stage first, ending with the stratum itself.
    fn chains(&self) -> Vec<Vec<usize>> {
        let k = self.stages.len() - 1;
        (0..self.last().len())
            .map(|z| {
                let mut chain = vec![z];
                let mut cur = z;
                for n in (0..k).rev() {
                    let m = &self.maps[n];
                    match (0..m.source().len()).find(|&i| m.entry(i).0 == cur) {
                        Some(i) => {
                            chain.push(i);
                            cur = i;
                        }
                        None => break,
                    }
                }
                chain.reverse();
                chain
            })
            .collect()
    }
}

/// Union of the stages along the maps. Every stratum of an earlier stage
/// lands in the last one, so the strata are those of the last stage. With
/// `extrapolate`, a stratum whose dimension goes up at every step of its
/// chain (over at least two stages) gets dimension `INF`.
pub fn colimit(t: &Tower, extrapolate: bool) -> Skeleton {
    let last = t.last();
    let k = t.stages.len() - 1;
    let chains = t.chains();
    let strata: Vec<(StratumId, StratumLabel)> = (0..last.len())
        .map(|z| {
            let chain = &chains[z];
            let first = k + 1 - chain.len();
            let dims: Vec<Dim> = chain
                .iter()
                .enumerate()
                .map(|(off, &i)| t.stages[first + off].label(i).dim)
                .collect();
            let growing = dims.len() >= 2 && dims.windows(2).all(|w| w[0] < w[1]);
            let mut label = last.label(z).clone();
            if extrapolate && growing {
                label.dim = Dim::Inf;
            }
            (last.id(z).clone(), label)
        })
        .collect();
    let mut relations = Vec::new();
    for (n, s) in t.stages.iter().enumerate() {
        // push every stage's order forward to the last stage
        let forward: Vec<usize> = (0..s.len())
            .map(|mut i| {
                for m in &t.maps[n..] {
                    i = m.entry(i).0;
                }
                i
            })
            .collect();
        for i in 0..s.len() {
            for j in 0..s.len() {
                if s.lt(i, j) {
                    relations.push((forward[i], forward[j]));
                }
            }
        }
    }
    Skeleton::from_relations(strata, &relations)
        .expect("orders pushed along embeddings stay antisymmetric")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LimitVerdict {
    GraphStable,
    LengthUnbounded,
    FiniteDim,
    Mixed,
}

impl fmt::Display for LimitVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitVerdict::GraphStable => "GRAPH_STABLE",
            LimitVerdict::LengthUnbounded => "LENGTH_UNBOUNDED",
            LimitVerdict::FiniteDim => "FINITE_DIM",
            LimitVerdict::Mixed => "MIXED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitClassification {
    pub verdict: LimitVerdict,
    pub extrapolated: bool,
    /// First stage (1-based) from which every map is a graph isomorphism.
    pub stabilization_stage: Option<usize>,
    pub lengths: Vec<i64>,
    /// Largest stratum dimension per stage.
    pub dims: Vec<Option<Dim>>,
    pub stable_graph: Option<StratGraph>,
}

/// The map is a bijection on strata carrying Γ(source) onto Γ(target).
pub fn induces_graph_isomorphism(m: &StrataMorphism) -> bool {
    let (s, t) = (m.source(), m.target());
    if s.len() != t.len() || !m.is_injective() {
        return false;
    }
    let gs = hasse_graph(s);
    let gt = hasse_graph(t);
    let mapped: std::collections::BTreeSet<(StratumId, StratumId)> = gs
        .edges()
        .iter()
        .map(|(a, b)| {
            (
                m.apply(a.as_str()).unwrap().clone(),
                m.apply(b.as_str()).unwrap().clone(),
            )
        })
        .collect();
    &mapped == gt.edges()
}

/// Verdict rules, in order: GRAPH_STABLE when the last maps are all graph
/// isomorphisms (at least one); LENGTH_UNBOUNDED, only with `extrapolate`,
/// when the length went up on the last map; FINITE_DIM when the largest
/// dimension did not change on the last map; MIXED otherwise.
pub fn classify_limit(t: &Tower, extrapolate: bool) -> LimitClassification {
    let lengths: Vec<i64> = t.stages.iter().map(|s| s.length()).collect();
    let dims: Vec<Option<Dim>> = t.stages.iter().map(|s| s.max_dim()).collect();
    let iso: Vec<bool> = t.maps.iter().map(induces_graph_isomorphism).collect();
    let stable_from = iso.iter().rposition(|&b| !b).map_or(0, |p| p + 1);
    let stabilization_stage = (stable_from < iso.len()).then_some(stable_from + 1);
    let n = t.stages.len();
    let verdict = if stabilization_stage.is_some() {
        LimitVerdict::GraphStable
    } else if n < 2 {
        LimitVerdict::Mixed
    } else if extrapolate && lengths[n - 1] > lengths[n - 2] {
        LimitVerdict::LengthUnbounded
    } else if dims[n - 1] == dims[n - 2] {
        LimitVerdict::FiniteDim
    } else {
        LimitVerdict::Mixed
    };
    LimitClassification {
        verdict,
        extrapolated: extrapolate,
        stabilization_stage,
        lengths,
        dims,
        stable_graph: stabilization_stage.map(|_| hasse_graph(t.last())),
    }
}

/// `S^n = R^n ⊔ {∞}` with singular part `{0, ∞}`: strata `zero`, `inf` of
/// dimension 0 below `reg` of dimension `n`.
pub fn sphere(n: u32) -> Skeleton {
    let point = StratumLabel::new(0).compact().connected();
    let reg = StratumLabel {
        connected: n >= 2,
        ..StratumLabel::new(n)
    };
    crate::skeleton::RawSkeleton::new()
        .stratum("zero", point.clone())
        .stratum("inf", point)
        .stratum("reg", reg)
        .below("zero", "reg")
        .below("inf", "reg")
        .build()
        .expect("sphere skeleton")
}

/// `S^1 -> S^2 -> ... -> S^steps`.
pub fn sphere_tower(steps: usize) -> Result<Tower, LimitError> {
    if steps == 0 {
        return Err(LimitError::NoSteps("sphere_tower"));
    }
    let stages: Vec<Skeleton> = (1..=steps as u32).map(sphere).collect();
    let maps = stages
        .windows(2)
        .map(|w| {
            StrataMorphism::new(
                w[0].clone(),
                w[1].clone(),
                [
                    ("zero", "zero", true),
                    ("inf", "inf", true),
                    ("reg", "reg", false),
                ],
                Declarations::all(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let regular = vec![true; maps.len()];
    Tower::new(stages, maps, regular)
}

/// `X, c(X), c(c(X)), ...` with `steps` cones. Each stage is relabelled
/// compact before coning, and each stratum goes to its own ray.
pub fn cone_tower(seed: &Skeleton, steps: usize) -> Result<Tower, LimitError> {
    if steps == 0 {
        return Err(LimitError::NoSteps("cone_tower"));
    }
    let mut stages = vec![seed.clone()];
    for _ in 0..steps {
        let prev = stages.last().unwrap().map_labels(|_, l| StratumLabel {
            compact: true,
            ..l.clone()
        });
        stages.push(cone(&prev)?);
    }
    let maps = stages
        .windows(2)
        .map(|w| {
            StrataMorphism::new(
                w[0].clone(),
                w[1].clone(),
                w[0].ids()
                    .iter()
                    .map(|id| (id.as_str(), id.as_str(), false)),
                Declarations::all(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let regular = vec![false; maps.len()];
    Tower::new(stages, maps, regular)
}

/// `Z_n = bouquet(X_n, base, k)` where `X_n` is `x` with every stratum other
/// than `base` raised by `n - 1` dimensions.
pub fn bouquet_tower(
    x: &Skeleton,
    base: &str,
    k: usize,
    steps: usize,
) -> Result<Tower, LimitError> {
    if steps == 0 {
        return Err(LimitError::NoSteps("bouquet_tower"));
    }
    let stages = (0..steps as u32)
        .map(|shift| {
            let xn = x.map_labels(|id, l| {
                if id.as_str() == base {
                    l.clone()
                } else {
                    StratumLabel {
                        dim: l.dim.shift(shift),
                        ..l.clone()
                    }
                }
            });
            bouquet(&xn, base, k)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let maps = stages
        .windows(2)
        .map(|w| {
            StrataMorphism::new(
                w[0].clone(),
                w[1].clone(),
                w[0].ids()
                    .iter()
                    .map(|id| (id.as_str(), id.as_str(), id.as_str() == base)),
                Declarations::all(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let regular = vec![true; maps.len()];
    Tower::new(stages, maps, regular)
}

/// Each stage adds a random disjoint component of dimension at most `top`;
/// the first stage already contains a `top`-dimensional manifold, so the
/// largest dimension never moves. Every map is a strong embedding.
pub fn growing_tower(
    rng: &mut impl Rng,
    cfg: &GenConfig,
    top: u32,
    steps: usize,
) -> Result<Tower, LimitError> {
    if steps == 0 {
        return Err(LimitError::NoSteps("growing_tower"));
    }
    let capped = |s: Skeleton| {
        s.map_labels(|_, l| StratumLabel {
            dim: l
                .dim
                .finite()
                .map_or(Dim::Finite(top), |d| Dim::Finite(d.min(top))),
            ..l.clone()
        })
    };
    let top_manifold = Skeleton::trivial("top", StratumLabel::new(top))?;
    let mut stages = vec![top_manifold];
    let mut maps = Vec::new();
    for step in 1..steps {
        let n = rng.random_range(1..=3);
        let extra = generate::random_skeleton_sized(rng, cfg, &format!("g{step}_"), n);
        let extra = flatten_levels(capped(extra));
        let prev = stages.last().unwrap().clone();
        let (next, _) = disjoint_union(&prev, &extra);
        maps.push(StrataMorphism::inclusion(&prev, &next)?);
        stages.push(next);
    }
    let regular = vec![true; maps.len()];
    Tower::new(stages, maps, regular)
}

/// Removes relations that capping made dimension-inconsistent.
fn flatten_levels(s: Skeleton) -> Skeleton {
    let strata: Vec<(StratumId, StratumLabel)> = s
        .ids()
        .iter()
        .cloned()
        .zip(s.labels().iter().cloned())
        .collect();
    let relations: Vec<(usize, usize)> = (0..s.len())
        .flat_map(|i| (0..s.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| s.lt(i, j) && s.label(i).dim < s.label(j).dim)
        .collect();
    Skeleton::from_relations(strata, &relations).expect("sub-order of a poset")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::rng_for;
    use crate::morphisms::find_isomorphism;
    use crate::skeleton::RawSkeleton;

    fn gamma1() -> Skeleton {
        RawSkeleton::new()
            .stratum("p", StratumLabel::new(0))
            .stratum("C1", StratumLabel::new(1))
            .stratum("C2", StratumLabel::new(1))
            .below("p", "C1")
            .below("p", "C2")
            .build()
            .unwrap()
    }

    fn constant(s: &Skeleton, n: usize) -> Tower {
        Tower::new(
            vec![s.clone(); n],
            vec![StrataMorphism::identity(s); n - 1],
            vec![true; n - 1],
        )
        .unwrap()
    }

    #[test]
    fn constant_tower() {
        let t = constant(&gamma1(), 3);
        assert!(find_isomorphism(&colimit(&t, true), &gamma1()).is_some());
        let c = classify_limit(&t, false);
        assert_eq!(c.verdict, LimitVerdict::GraphStable);
        assert_eq!(c.stabilization_stage, Some(1));
    }

    #[test]
    fn sphere_maps_are_plain_embeddings() {
        let t = sphere_tower(3).unwrap();
        for m in t.maps() {
            assert_eq!(m.classify().class, MorphClass::Embedding);
        }
        let dims: Vec<Dim> = t
            .stages()
            .iter()
            .map(|s| s.label_of("reg").unwrap().dim)
            .collect();
        assert_eq!(dims, [1.into(), 2.into(), 3.into()]);
        assert_eq!(colimit(&t, true).label_of("reg").unwrap().dim, Dim::Inf);
        assert_eq!(colimit(&t, false).label_of("reg").unwrap().dim, 3.into());
        assert_eq!(colimit(&t, true).label_of("zero").unwrap().dim, 0.into());
    }

    #[test]
    fn sphere_tower_is_graph_stable() {
        let c = classify_limit(&sphere_tower(5).unwrap(), false);
        assert_eq!(c.verdict, LimitVerdict::GraphStable);
        assert_eq!(c.stabilization_stage, Some(1));
        let g = c.stable_graph.unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (3, 2));
    }

    #[test]
    fn prepending_keeps_graph_stability() {
        let t = sphere_tower(4).unwrap();
        let point = Skeleton::trivial("zero", StratumLabel::new(0).compact().connected()).unwrap();
        let m = StrataMorphism::inclusion(&point, &t.stages()[0]).unwrap();
        let longer = t.prepend(point, m, true).unwrap();
        let c = classify_limit(&longer, false);
        assert_eq!(c.verdict, LimitVerdict::GraphStable);
        assert_eq!(c.stabilization_stage, Some(2));
    }

    #[test]
    fn cone_tower_lengths() {
        let m = Skeleton::trivial("M", StratumLabel::new(0).compact()).unwrap();
        let t = cone_tower(&m, 2).unwrap();
        let c = classify_limit(&t, true);
        assert_eq!(c.lengths, [0, 1, 2]);
        assert_eq!(c.verdict, LimitVerdict::LengthUnbounded);
        assert_eq!(classify_limit(&t, false).verdict, LimitVerdict::Mixed);
        let lim = colimit(&t, true);
        assert_eq!(lim.len(), 3);
        assert_eq!(lim.label_of("M").unwrap().dim, Dim::Inf);
    }

    #[test]
    fn bouquet_tower_shares_its_base() {
        let t = bouquet_tower(&sphere(1), "zero", 3, 4).unwrap();
        for s in t.stages() {
            assert!(s.contains("zero"));
            assert_eq!(s.len(), 3 * 2 + 1);
        }
        for m in t.maps() {
            assert_eq!(m.apply("zero").unwrap().as_str(), "zero");
        }
        assert_eq!(classify_limit(&t, false).verdict, LimitVerdict::GraphStable);
    }

    #[test]
    fn growing_towers_have_finite_dim() {
        for i in 0..20 {
            let t = growing_tower(&mut rng_for(4, i), &GenConfig::default(), 3, 5).unwrap();
            for m in t.maps() {
                assert!(m.classify().class >= MorphClass::StrongEmbedding);
            }
            assert!(t
                .stages()
                .windows(2)
                .all(|w| w[0].length() <= w[1].length()));
            let c = classify_limit(&t, false);
            assert_eq!(c.verdict, LimitVerdict::FiniteDim);
            assert_eq!(colimit(&t, false).len(), t.last().len());
        }
    }

    #[test]
    fn bad_towers_are_rejected() {
        let g = gamma1();
        assert!(matches!(
            Tower::new(vec![], vec![], vec![]),
            Err(LimitError::NoStages)
        ));
        assert!(matches!(
            Tower::new(vec![g.clone(), g.clone()], vec![], vec![]),
            Err(LimitError::MapCount { .. })
        ));
        let squash = StrataMorphism::new(
            g.clone(),
            sphere(1),
            [
                ("p", "zero", true),
                ("C1", "reg", true),
                ("C2", "reg", true),
            ],
            Declarations::all(),
        )
        .unwrap();
        assert!(matches!(
            Tower::new(vec![g, sphere(1)], vec![squash], vec![false]),
            Err(LimitError::NotEmbedding { index: 0, .. })
        ));
        assert!(sphere_tower(0).is_err());
    }

    #[test]
    fn tower_json_round_trip() {
        let t = sphere_tower(3).unwrap();
        let json = serde_json::to_string(&t.to_json()).unwrap();
        let back = Tower::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
