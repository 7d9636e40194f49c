//! Seeded random skeletons, maps and cospans for property checks.
//!
//! Every generator takes an explicit RNG; [`rng_for`] derives an independent
//! stream per `(seed, index)` so that parallel runs reproduce exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::morphisms::{Declarations, StrataMorphism};
use crate::skeleton::{Skeleton, StrataSubset, StratumId, StratumLabel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Upper bound on strata per generated skeleton.
    pub max_strata: usize,
    /// Strata are spread over levels `0..=max_level`; relations only go up.
    pub max_level: u32,
    /// Probability of a relation between strata on different levels.
    pub edge_prob: f64,
    /// Dimension of a level-`i` stratum is `i + extra`, `extra <= max_extra_dim`.
    pub max_extra_dim: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_strata: 12,
            max_level: 3,
            edge_prob: 0.35,
            max_extra_dim: 2,
        }
    }
}

/// RNG for stream `stream` of master seed `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sid(s: String) -> StratumId {
    StratumId::new(s).expect("generated ids are valid")
}

fn random_label(rng: &mut impl Rng, dim: u32) -> StratumLabel {
    StratumLabel {
        dim: dim.into(),
        compact: rng.random_bool(0.5),
        connected: rng.random_bool(0.5),
        display_name: None,
    }
}

/// Random skeleton with between 0 and `cfg.max_strata` strata named
/// `{prefix}0, {prefix}1, ...`.
pub fn random_skeleton(rng: &mut impl Rng, cfg: &GenConfig, prefix: &str) -> Skeleton {
    let n = rng.random_range(0..=cfg.max_strata);
    random_skeleton_sized(rng, cfg, prefix, n)
}

pub fn random_skeleton_sized(
    rng: &mut impl Rng,
    cfg: &GenConfig,
    prefix: &str,
    n: usize,
) -> Skeleton {
    let levels: Vec<u32> = (0..n)
        .map(|_| rng.random_range(0..=cfg.max_level))
        .collect();
    let strata: Vec<(StratumId, StratumLabel)> = (0..n)
        .map(|i| {
            let dim = levels[i] + rng.random_range(0..=cfg.max_extra_dim);
            (sid(format!("{prefix}{i}")), random_label(rng, dim))
        })
        .collect();
    let mut relations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if levels[i] < levels[j] && rng.random_bool(cfg.edge_prob) {
                relations.push((i, j));
            }
        }
    }
    Skeleton::from_relations(strata, &relations).expect("level-increasing relations are acyclic")
}

/// Random skeleton whose strata are all labelled compact.
pub fn random_compact_skeleton(rng: &mut impl Rng, cfg: &GenConfig, prefix: &str) -> Skeleton {
    random_skeleton(rng, cfg, prefix).map_labels(|_, l| StratumLabel {
        compact: true,
        ..l.clone()
    })
}

/// Each stratum kept independently with probability `p`.
pub fn random_subset(rng: &mut impl Rng, s: &Skeleton, p: f64) -> StrataSubset {
    s.ids()
        .iter()
        .filter(|_| rng.random_bool(p))
        .cloned()
        .collect()
}

/// Down-closure of a random subset.
pub fn random_down_set(rng: &mut impl Rng, s: &Skeleton, p: f64) -> StrataSubset {
    let seeds: Vec<usize> = (0..s.len()).filter(|_| rng.random_bool(p)).collect();
    (0..s.len())
        .filter(|&i| seeds.iter().any(|&j| s.leq(i, j)))
        .map(|i| s.id(i).clone())
        .collect()
}

/// Copy of `s` with ids replaced by a random permutation of `r0, r1, ...`.
pub fn shuffled_copy(rng: &mut impl Rng, s: &Skeleton) -> Skeleton {
    let mut perm: Vec<usize> = (0..s.len()).collect();
    perm.shuffle(rng);
    let index: std::collections::BTreeMap<StratumId, usize> = s
        .ids()
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();
    s.renamed(|id| sid(format!("r{}", perm[index[id]])))
        .expect("permutation is injective")
}

/// A random map with every declaration set. The source is pulled back from
/// the target along a random assignment, so the map always preserves order;
/// roughly half the draws are injective.
pub fn random_declared_morphism(rng: &mut impl Rng, cfg: &GenConfig) -> StrataMorphism {
    let n = rng.random_range(1..=cfg.max_strata.max(1));
    let target = random_skeleton_sized(rng, cfg, "t", n);
    let m = rng.random_range(0..=cfg.max_strata.max(1));
    let assignment: Vec<usize> = if m <= n && rng.random_bool(0.5) {
        let mut pool: Vec<usize> = (0..n).collect();
        pool.shuffle(rng);
        pool.truncate(m);
        pool
    } else {
        (0..m).map(|_| rng.random_range(0..n)).collect()
    };
    let strata: Vec<(StratumId, StratumLabel)> = assignment
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let tdim = target
                .label(t)
                .dim
                .finite()
                .expect("generated dims are finite");
            let dim = if rng.random_bool(0.5) {
                tdim
            } else {
                rng.random_range(0..=tdim)
            };
            (sid(format!("a{i}")), random_label(rng, dim))
        })
        .collect();
    let mut relations = Vec::new();
    for a in 0..m {
        for b in 0..m {
            if target.lt(assignment[a], assignment[b]) && rng.random_bool(0.5) {
                relations.push((a, b));
            }
        }
    }
    let source = Skeleton::from_relations(strata, &relations).expect("pulled-back strict order");
    let entries: Vec<(String, String, bool)> = (0..m)
        .map(|i| {
            let t = assignment[i];
            let onto = source.label_of(&format!("a{i}")).unwrap().dim == target.label(t).dim
                && rng.random_bool(0.7);
            (format!("a{i}"), target.id(t).to_string(), onto)
        })
        .collect();
    StrataMorphism::new(source, target, entries, Declarations::all())
        .expect("generated map is well formed")
}

/// Two strong embeddings `f: X -> W`, `h: X -> Y` with a common source.
/// With `closed`, the image of `X` is down-closed in both targets.
pub fn random_strong_cospan(
    rng: &mut impl Rng,
    cfg: &GenConfig,
    closed: bool,
) -> (StrataMorphism, StrataMorphism) {
    let w = random_skeleton(rng, cfg, "w");
    let part = if closed {
        random_down_set(rng, &w, 0.4)
    } else {
        random_subset(rng, &w, 0.5)
    };
    let x = w.restrict(&part).expect("subset of w");
    let f = StrataMorphism::inclusion(&x, &w).expect("induced inclusion");
    let y = extend(rng, cfg, &x, closed);
    let h = StrataMorphism::new(
        x.clone(),
        y,
        x.ids()
            .iter()
            .enumerate()
            .map(|(k, id)| (id.to_string(), format!("y{k}"), true)),
        Declarations::all(),
    )
    .expect("copy of x inside y");
    (f, h)
}

/// Skeleton containing a copy `y0, y1, ...` of `x` as an induced sub-poset
/// (down-closed when `closed`), plus up to `cfg.max_strata - |x|` new strata.
fn extend(rng: &mut impl Rng, cfg: &GenConfig, x: &Skeleton, closed: bool) -> Skeleton {
    let k = x.len();
    let room = cfg.max_strata.saturating_sub(k);
    for _ in 0..16 {
        let extra = rng.random_range(0..=room);
        let mut strata: Vec<(StratumId, StratumLabel)> = (0..k)
            .map(|i| (sid(format!("y{i}")), x.label(i).clone()))
            .collect();
        for e in 0..extra {
            let dim = rng.random_range(0..=cfg.max_level + cfg.max_extra_dim);
            strata.push((sid(format!("y{}", k + e)), random_label(rng, dim)));
        }
        let mut relations: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| i != j).map(move |j| (i, j)))
            .filter(|&(i, j)| x.leq(i, j))
            .collect();
        for u in k..k + extra {
            for xi in 0..k {
                if rng.random_bool(cfg.edge_prob) {
                    relations.push((xi, u));
                }
                if !closed && rng.random_bool(cfg.edge_prob / 2.0) {
                    relations.push((u, xi));
                }
            }
            for v in u + 1..k + extra {
                if rng.random_bool(cfg.edge_prob) {
                    relations.push((u, v));
                }
            }
        }
        let Ok(y) = Skeleton::from_relations(strata, &relations) else {
            continue;
        };
        let copy: StrataSubset = (0..k).map(|i| sid(format!("y{i}"))).collect();
        let faithful = (0..k).all(|i| {
            (0..k).all(|j| y.leq_ids(&format!("y{i}"), &format!("y{j}")).unwrap() == x.leq(i, j))
        });
        if faithful && (!closed || y.is_down_closed(&copy)) {
            return y;
        }
    }
    x.renamed(|id| {
        let i = x.index_of(id.as_str()).unwrap();
        sid(format!("y{i}"))
    })
    .expect("renaming is injective")
}
