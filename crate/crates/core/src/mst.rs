//! Per-cluster minimum spanning trees and their DOT rendering.
//!
//! Each cluster with `n_s >= 2` members gets a spanning tree over its
//! members built with Kruskal's algorithm. Ties on equal weights are broken
//! by the lexicographic order of the `(i, j)` asset pair.

use std::fmt::Write as _;

use serde::Serialize;

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::partition::Partition;

/// How a correlation becomes an edge weight.
///
/// Both choices are decreasing in the correlation and so produce the same
/// trees; they differ only in the reported weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeWeights {
    /// `sqrt(2 (1 - C))`, the correlation distance.
    #[default]
    CorrDist,
    /// `1 - C`, i.e. strongest correlations first.
    Raw,
}

impl EdgeWeights {
    pub fn weight(self, c: f64) -> f64 {
        match self {
            EdgeWeights::CorrDist => (2.0 * (1.0 - c)).max(0.0).sqrt(),
            EdgeWeights::Raw => 1.0 - c,
        }
    }
}

impl std::str::FromStr for EdgeWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrdist" => Ok(EdgeWeights::CorrDist),
            "raw" => Ok(EdgeWeights::Raw),
            other => Err(Error::invalid(format!("unknown edge weights {other:?}, expected corrdist or raw"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    /// Asset indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterTree {
    pub label: u32,
    /// Member assets, ascending.
    pub members: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl ClusterTree {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterForest {
    pub n: usize,
    pub weights: EdgeWeights,
    /// One tree per cluster, ordered by label.
    pub trees: Vec<ClusterTree>,
}

impl ClusterForest {
    pub fn edge_count(&self) -> usize {
        self.trees.iter().map(|t| t.edges.len()).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.trees.iter().map(ClusterTree::total_weight).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("forest serializes")
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal over the complete graph on `members`.
fn kruskal(members: &[usize], c: &CorrelationMatrix, weights: EdgeWeights) -> Vec<Edge> {
    let k = members.len();
    let mut candidates = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for x in 0..k {
        for y in x + 1..k {
            let (a, b) = (members[x], members[y]);
            let correlation = c.get(a, b);
            candidates.push((x, y, Edge { a, b, weight: weights.weight(correlation), correlation }));
        }
    }
    candidates.sort_by(|p, q| {
        p.2.weight
            .total_cmp(&q.2.weight)
            .then((p.2.a, p.2.b).cmp(&(q.2.a, q.2.b)))
    });
    let mut uf = UnionFind::new(k);
    let mut edges = Vec::with_capacity(k.saturating_sub(1));
    for (x, y, e) in candidates {
        if uf.union(x, y) {
            edges.push(e);
            if edges.len() + 1 == k {
                break;
            }
        }
    }
    edges
}

pub fn build_forest(p: &Partition, c: &CorrelationMatrix, weights: EdgeWeights) -> Result<ClusterForest> {
    if p.len() != c.n() {
        return Err(Error::DimensionMismatch {
            expected: c.n(),
            actual: p.len(),
        });
    }
    let trees = p
        .clusters()
        .into_iter()
        .enumerate()
        .map(|(i, members)| ClusterTree {
            label: i as u32 + 1,
            edges: kruskal(&members, c, weights),
            members,
        })
        .collect();
    Ok(ClusterForest { n: c.n(), weights, trees })
}

pub const MIN_PENWIDTH: f64 = 0.5;
pub const MAX_PENWIDTH: f64 = 5.0;

/// Pen width linear in the correlation: `C <= 0` gives the minimum, `C = 1` the maximum.
pub fn penwidth(correlation: f64) -> f64 {
    MIN_PENWIDTH + (MAX_PENWIDTH - MIN_PENWIDTH) * correlation.clamp(0.0, 1.0)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders the forest as one DOT graph with a subgraph per cluster.
pub fn export_dot(f: &ClusterForest, names: &[String]) -> Result<String> {
    if names.len() != f.n {
        return Err(Error::DimensionMismatch {
            expected: f.n,
            actual: names.len(),
        });
    }
    let mut out = String::from("graph forest {\n  node [shape=ellipse];\n");
    for t in &f.trees {
        let _ = writeln!(out, "  subgraph cluster_{} {{", t.label);
        let _ = writeln!(out, "    label=\"cluster {}\";", t.label);
        for &m in &t.members {
            let _ = writeln!(out, "    {};", quote(&names[m]));
        }
        for e in &t.edges {
            let _ = writeln!(
                out,
                "    {} -- {} [weight={:.6}, penwidth={:.3}, label=\"{:.3}\"];",
                quote(&names[e.a]),
                quote(&names[e.b]),
                e.weight,
                penwidth(e.correlation),
                e.correlation
            );
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::default_names;
    use proptest::prelude::*;

    fn abc() -> CorrelationMatrix {
        CorrelationMatrix::from_rows(&[
            vec![1.0, 0.9, 0.8],
            vec![0.9, 1.0, 0.1],
            vec![0.8, 0.1, 1.0],
        ])
        .unwrap()
    }

    /// Minimum spanning-tree weight by decoding every Prüfer sequence.
    fn exhaustive_min(members: &[usize], c: &CorrelationMatrix, w: EdgeWeights) -> f64 {
        let k = members.len();
        if k < 2 {
            return 0.0;
        }
        if k == 2 {
            return w.weight(c.get(members[0], members[1]));
        }
        let mut best = f64::INFINITY;
        let mut seq = vec![0usize; k - 2];
        loop {
            let mut degree = vec![1usize; k];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut total = 0.0;
            for &s in &seq {
                let leaf = (0..k).find(|&v| degree[v] == 1).unwrap();
                total += w.weight(c.get(members[leaf], members[s]));
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<usize> = (0..k).filter(|&v| degree[v] == 1).collect();
            total += w.weight(c.get(members[rest[0]], members[rest[1]]));
            best = best.min(total);
            // next sequence in base k
            let mut pos = 0;
            loop {
                if pos == seq.len() {
                    return best;
                }
                seq[pos] += 1;
                if seq[pos] < k {
                    break;
                }
                seq[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn three_node_example() {
        let f = build_forest(&Partition::single_cluster(3), &abc(), EdgeWeights::CorrDist).unwrap();
        let e = &f.trees[0].edges;
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].a, e[0].b), (0, 1));
        assert_eq!((e[1].a, e[1].b), (0, 2));
        assert!((e[0].weight - 0.2f64.sqrt()).abs() < 1e-12);
        assert!((e[1].weight - 0.4f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singletons_have_no_edges() {
        let f = build_forest(&Partition::singletons(3), &abc(), EdgeWeights::CorrDist).unwrap();
        assert_eq!(f.trees.len(), 3);
        assert_eq!(f.edge_count(), 0);
        let dot = export_dot(&f, &default_names(3)).unwrap();
        assert!(!dot.contains("--"));
        assert!(dot.starts_with("graph forest {") && dot.ends_with("}\n"));
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = CorrelationMatrix::from_rows(&[
            vec![1.0, 0.5, 0.5],
            vec![0.5, 1.0, 0.5],
            vec![0.5, 0.5, 1.0],
        ])
        .unwrap();
        let f = build_forest(&Partition::single_cluster(3), &c, EdgeWeights::CorrDist).unwrap();
        let pairs: Vec<_> = f.trees[0].edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn penwidth_is_linear() {
        assert_eq!(penwidth(0.0), MIN_PENWIDTH);
        assert_eq!(penwidth(1.0), MAX_PENWIDTH);
        assert_eq!(penwidth(-0.4), MIN_PENWIDTH);
        assert!((penwidth(0.5) - (MIN_PENWIDTH + MAX_PENWIDTH) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn raw_weights_give_the_same_tree() {
        let c = abc();
        let p = Partition::single_cluster(3);
        let a = build_forest(&p, &c, EdgeWeights::CorrDist).unwrap();
        let b = build_forest(&p, &c, EdgeWeights::Raw).unwrap();
        let pairs = |f: &ClusterForest| f.trees[0].edges.iter().map(|e| (e.a, e.b)).collect::<Vec<_>>();
        assert_eq!(pairs(&a), pairs(&b));
        assert!((b.total_weight() - 0.3).abs() < 1e-12);
        assert_eq!("raw".parse::<EdgeWeights>().unwrap(), EdgeWeights::Raw);
        assert!("max".parse::<EdgeWeights>().is_err());
    }

    #[test]
    fn json_lists_edges() {
        let f = build_forest(&Partition::single_cluster(3), &abc(), EdgeWeights::CorrDist).unwrap();
        let v: serde_json::Value = serde_json::from_str(&f.to_json()).unwrap();
        assert_eq!(v["weights"], "corrdist");
        assert_eq!(v["trees"][0]["edges"].as_array().unwrap().len(), 2);
    }

    fn random_matrix(n: usize, seed: u64) -> CorrelationMatrix {
        let spec = crate::synth::PlantedSpec::uniform(1, n, 0.5, 3 * n, seed);
        crate::synth::generate_noh(&spec).unwrap().0.correlation()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn forest_is_minimal_and_spanning(seed in 0u64..10_000, labels in proptest::collection::vec(1u32..=3, 7)) {
            let c = random_matrix(7, seed);
            let p = Partition::from_labels(labels).unwrap();
            let f = build_forest(&p, &c, EdgeWeights::CorrDist).unwrap();
            for t in &f.trees {
                prop_assert_eq!(t.edges.len(), t.members.len().saturating_sub(1));
                let mut uf = UnionFind::new(c.n());
                for e in &t.edges {
                    prop_assert!(uf.union(e.a, e.b), "cycle");
                }
                let root = uf.find(t.members[0]);
                prop_assert!(t.members.iter().all(|&m| uf.find(m) == root));
                let best = exhaustive_min(&t.members, &c, EdgeWeights::CorrDist);
                prop_assert!((t.total_weight() - best).abs() < 1e-12);
            }
        }

        #[test]
        fn higher_correlation_never_costs_more(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            for w in [EdgeWeights::CorrDist, EdgeWeights::Raw] {
                if a >= b {
                    prop_assert!(w.weight(a) <= w.weight(b));
                }
            }
        }
    }
}
