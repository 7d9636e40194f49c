//! The associated graph of a stratification: the directed Hasse diagram of
//! the incidence poset, with edges pointing from a stratum to the strata it
//! covers (towards the minimal, closed strata).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use petgraph::algo::toposort;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skeleton::{Skeleton, SkeletonError, StrataSubset, StratumId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has a directed cycle through `{0}`")]
    Cyclic(String),
    #[error("edge mentions unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

/// Directed graph on stratum ids; an edge `(upper, lower)` records that
/// `lower < upper` with no stratum in between.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StratGraph {
    vertices: BTreeSet<StratumId>,
    edges: BTreeSet<(StratumId, StratumId)>,
}

impl StratGraph {
    pub fn new(
        vertices: impl IntoIterator<Item = StratumId>,
        edges: impl IntoIterator<Item = (StratumId, StratumId)>,
    ) -> Result<Self, GraphError> {
        let vertices: BTreeSet<StratumId> = vertices.into_iter().collect();
        let edges: BTreeSet<(StratumId, StratumId)> = edges.into_iter().collect();
        for (a, b) in &edges {
            for v in [a, b] {
                if !vertices.contains(v) {
                    return Err(GraphError::UnknownVertex(v.to_string()));
                }
            }
        }
        Ok(StratGraph { vertices, edges })
    }

    pub fn vertices(&self) -> &BTreeSet<StratumId> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<(StratumId, StratumId)> {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, upper: &StratumId, lower: &StratumId) -> bool {
        self.edges.contains(&(upper.clone(), lower.clone()))
    }

    /// Induced subgraph on the vertices in `keep`.
    pub fn induced(&self, keep: &StrataSubset) -> StratGraph {
        StratGraph {
            vertices: self
                .vertices
                .iter()
                .filter(|v| keep.contains(v))
                .cloned()
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .cloned()
                .collect(),
        }
    }

    fn to_petgraph(&self) -> (DiGraph<StratumId, ()>, BTreeMap<&StratumId, NodeIndex>) {
        let mut g = DiGraph::with_capacity(self.vertices.len(), self.edges.len());
        let mut index = BTreeMap::new();
        for v in &self.vertices {
            index.insert(v, g.add_node(v.clone()));
        }
        for (a, b) in &self.edges {
            g.add_edge(index[a], index[b], ());
        }
        (g, index)
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn weak_components(&self) -> Vec<BTreeSet<StratumId>> {
        let (g, _) = self.to_petgraph();
        let mut uf = UnionFind::new(g.node_count());
        for e in g.edge_indices() {
            let (a, b) = g.edge_endpoints(e).expect("edge exists");
            uf.union(a.index(), b.index());
        }
        let mut groups: BTreeMap<usize, BTreeSet<StratumId>> = BTreeMap::new();
        for n in g.node_indices() {
            groups
                .entry(uf.find(n.index()))
                .or_default()
                .insert(g[n].clone());
        }
        let mut out: Vec<BTreeSet<StratumId>> = groups.into_values().collect();
        out.sort();
        out
    }

    pub fn is_weakly_connected(&self) -> bool {
        self.weak_components().len() == 1
    }

    /// Underlying undirected graph is a tree.
    pub fn is_tree(&self) -> bool {
        self.is_weakly_connected() && self.edges.len() + 1 == self.vertices.len()
    }
}

/// Γ(s): vertices are strata, edges are cover relations.
pub fn hasse_graph(s: &Skeleton) -> StratGraph {
    StratGraph {
        vertices: s.ids().iter().cloned().collect(),
        edges: s
            .covers()
            .into_iter()
            .map(|(lower, upper)| (s.id(upper).clone(), s.id(lower).clone()))
            .collect(),
    }
}

/// Maximum number of edges on a directed path.
pub fn longest_path(g: &StratGraph) -> Result<usize, GraphError> {
    let (pg, _) = g.to_petgraph();
    let order = toposort(&pg, None).map_err(|c| GraphError::Cyclic(pg[c.node_id()].to_string()))?;
    let mut best = vec![0usize; pg.node_count()];
    for n in order.into_iter().rev() {
        best[n.index()] = pg
            .neighbors(n)
            .map(|m| best[m.index()] + 1)
            .max()
            .unwrap_or(0);
    }
    Ok(best.into_iter().max().unwrap_or(0))
}

/// A non-empty skeleton is irreducible iff its graph is weakly connected.
pub fn is_irreducible(s: &Skeleton) -> bool {
    hasse_graph(s).is_weakly_connected()
}

pub fn irreducible_components(s: &Skeleton) -> Vec<Skeleton> {
    hasse_graph(s)
        .weak_components()
        .into_iter()
        .map(|c| {
            s.restrict(&c.into_iter().collect())
                .expect("component strata belong to s")
        })
        .collect()
}

/// Basic = irreducible of finite length; every skeleton here is finite.
pub fn is_basic(s: &Skeleton) -> bool {
    is_irreducible(s)
}

/// `z` is closed iff it is down-closed in `s`.
pub fn is_closed_subset(s: &Skeleton, z: &StrataSubset) -> Result<bool, GraphError> {
    for id in z {
        if !s.contains(id.as_str()) {
            return Err(SkeletonError::UnknownStratum(id.to_string()).into());
        }
    }
    Ok(s.is_down_closed(z))
}

/// Graph-side closedness test: Γ(z) sits in Γ(s) as a subgraph that is
/// closed under outgoing paths (every Γ(s)-edge leaving a vertex of `z`
/// belongs to Γ(z)). Decided on graphs only.
pub fn is_path_closed_subgraph(s: &Skeleton, z: &StrataSubset) -> Result<bool, GraphError> {
    let whole = hasse_graph(s);
    let part = hasse_graph(&s.restrict(z)?);
    let edges_inside = part.edges().iter().all(|e| whole.edges().contains(e));
    let outgoing_kept = whole
        .edges()
        .iter()
        .filter(|(upper, _)| z.contains(upper))
        .all(|e| part.edges().contains(e));
    Ok(edges_inside && outgoing_kept)
}

/// Γ of the closure of `x`: all paths starting at `x`.
pub fn graph_of_closure(s: &Skeleton, x: &str) -> Result<StratGraph, GraphError> {
    Ok(hasse_graph(s).induced(&s.closure_of(x)?))
}

/// Γ of `U_x`: all paths ending at `x`.
pub fn graph_of_neighborhood(s: &Skeleton, x: &str) -> Result<StratGraph, GraphError> {
    Ok(hasse_graph(s).induced(&s.incidence_neighborhood(x)?))
}

/// Graphviz text, vertices and edges in sorted order.
pub fn to_dot(g: &StratGraph, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    for v in g.vertices() {
        writeln!(out, "  \"{}\";", escape(v.as_str())).unwrap();
    }
    for (a, b) in g.edges() {
        writeln!(
            out,
            "  \"{}\" -> \"{}\";",
            escape(a.as_str()),
            escape(b.as_str())
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
