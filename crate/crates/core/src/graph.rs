//! Directed influence graphs with per-node behavioural parameters.
//!
//! An edge `(u, v)` with weight `a_uv` means the observable of `u` feeds the
//! latent state of `v` at the next step. Self-influence is carried by an
//! explicit per-node `self_weight` rather than a `(v, v)` edge, and for every
//! node the self-weight plus the incoming edge weights sum to one.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the per-node weight normalisation.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Behavioural parameters of a single agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    /// Openness to social input, in (0, 1).
    pub alpha: f64,
    /// Intrinsic bias, in [0, 1].
    #[serde(rename = "l")]
    pub bias: f64,
    /// Slope `c` of the linear sample-rate function `mu(x) = c * x`.
    pub mu_slope: f64,
    /// Mean of the fluctuation term, in (0, 1).
    pub zbar: f64,
}

impl Default for NodeParams {
    /// The ring/line evaluation settings: `alpha = 0.8`, `l = 0.167`,
    /// `mu(x) = 0.4 x`, uniform fluctuations with mean 0.5.
    fn default() -> Self {
        NodeParams {
            alpha: 0.8,
            bias: 0.167,
            mu_slope: 0.4,
            zbar: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    #[serde(flatten)]
    pub params: NodeParams,
    pub self_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// A directed weighted influence graph.
///
/// Serialises to the graph file format
/// `{"nodes": [{"alpha", "l", "mu_slope", "zbar", "self_weight"}], "edges": [{"from", "to", "weight"}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

/// A broken graph invariant. Violations are data: `validate` collects all of them.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty,
    NodeParam {
        node: usize,
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    EdgeOutOfRange { from: usize, to: usize },
    SelfEdge { node: usize },
    EdgeWeight { from: usize, to: usize, weight: f64 },
    DuplicateEdge { from: usize, to: usize },
    Normalization { node: usize, sum: f64 },
}

impl Violation {
    /// Openness exactly 0 or 1 breaks the open-interval invariant but still
    /// yields well-defined dynamics, so the simulator tolerates it.
    pub fn is_boundary_alpha(&self) -> bool {
        matches!(self, Violation::NodeParam { field: "alpha", value, .. } if (0.0..=1.0).contains(value))
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "graph has no nodes"),
            Violation::NodeParam {
                node,
                field,
                value,
                expected,
            } => write!(f, "node {node}: {field} = {value} not in {expected}"),
            Violation::EdgeOutOfRange { from, to } => {
                write!(f, "edge ({from}, {to}): endpoint out of range")
            }
            Violation::SelfEdge { node } => {
                write!(f, "edge ({node}, {node}): self-influence must use self_weight")
            }
            Violation::EdgeWeight { from, to, weight } => {
                write!(f, "edge ({from}, {to}): weight {weight} not in (0, 1]")
            }
            Violation::DuplicateEdge { from, to } => write!(f, "edge ({from}, {to}) appears twice"),
            Violation::Normalization { node, sum } => {
                write!(f, "node {node}: incoming weights plus self-weight sum to {sum}, expected 1")
            }
        }
    }
}

fn check_range(
    out: &mut Vec<Violation>,
    node: usize,
    field: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) {
    if !ok || !value.is_finite() {
        out.push(Violation::NodeParam {
            node,
            field,
            value,
            expected,
        });
    }
}

impl InfluenceGraph {
    /// Assemble a graph without checking it; call [`InfluenceGraph::validate`].
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        InfluenceGraph { nodes, edges }
    }

    /// Directed cycle `v -> v+1 (mod n)`, unit weights, zero self-weight.
    pub fn ring(n: usize, params: NodeParams) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize { n, min: 2 });
        }
        let nodes = vec![
            Node {
                params,
                self_weight: 0.0
            };
            n
        ];
        let edges = (0..n)
            .map(|v| Edge {
                from: v,
                to: (v + 1) % n,
                weight: 1.0,
            })
            .collect();
        Ok(InfluenceGraph { nodes, edges })
    }

    /// Directed path `0 -> 1 -> ... -> n-1`. Node 0 has no in-neighbour and
    /// gets self-weight 1.
    pub fn line(n: usize, params: NodeParams) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize { n, min: 2 });
        }
        let mut nodes = vec![
            Node {
                params,
                self_weight: 0.0
            };
            n
        ];
        nodes[0].self_weight = 1.0;
        let edges = (0..n - 1)
            .map(|v| Edge {
                from: v,
                to: v + 1,
                weight: 1.0,
            })
            .collect();
        Ok(InfluenceGraph { nodes, edges })
    }

    /// Every node draws `in_degree` distinct in-neighbours uniformly without
    /// replacement; weights are `1 / in_degree`.
    pub fn random(n: usize, in_degree: usize, params: NodeParams, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize { n, min: 2 });
        }
        if in_degree == 0 || in_degree > n - 1 {
            return Err(Error::InvalidDegree {
                n,
                in_degree,
                max: n - 1,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = vec![
            Node {
                params,
                self_weight: 0.0
            };
            n
        ];
        let weight = 1.0 / in_degree as f64;
        let mut edges = Vec::with_capacity(n * in_degree);
        for v in 0..n {
            let mut picked: Vec<usize> = index::sample(&mut rng, n - 1, in_degree)
                .into_iter()
                .map(|i| if i >= v { i + 1 } else { i })
                .collect();
            picked.sort_unstable();
            edges.extend(picked.into_iter().map(|u| Edge {
                from: u,
                to: v,
                weight,
            }));
        }
        Ok(InfluenceGraph { nodes, edges })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn params(&self, v: usize) -> &NodeParams {
        &self.nodes[v].params
    }

    pub fn self_weight(&self, v: usize) -> f64 {
        self.nodes[v].self_weight
    }

    /// In-neighbours of `v` (excluding `v`) with their weights, in edge order.
    pub fn in_neighbors(&self, v: usize) -> Vec<(usize, f64)> {
        self.edges
            .iter()
            .filter(|e| e.to == v && e.from != v)
            .map(|e| (e.from, e.weight))
            .collect()
    }

    /// The true neighbourhood `N_v` as a sorted node set.
    pub fn neighborhood(&self, v: usize) -> BTreeSet<usize> {
        self.in_neighbors(v).into_iter().map(|(u, _)| u).collect()
    }

    /// All `(u, v)` edges with `u != v`.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .filter(|e| e.from != e.to)
            .map(|e| (e.from, e.to))
            .collect()
    }

    /// Every broken invariant, with the offending node or edge named.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.nodes.len();
        if n == 0 {
            out.push(Violation::Empty);
            return out;
        }
        for (v, node) in self.nodes.iter().enumerate() {
            let p = &node.params;
            check_range(&mut out, v, "alpha", p.alpha, p.alpha > 0.0 && p.alpha < 1.0, "(0, 1)");
            check_range(&mut out, v, "l", p.bias, (0.0..=1.0).contains(&p.bias), "[0, 1]");
            check_range(&mut out, v, "mu_slope", p.mu_slope, p.mu_slope >= 0.0, "[0, inf)");
            check_range(&mut out, v, "zbar", p.zbar, p.zbar > 0.0 && p.zbar < 1.0, "(0, 1)");
            check_range(
                &mut out,
                v,
                "self_weight",
                node.self_weight,
                (0.0..=1.0).contains(&node.self_weight),
                "[0, 1]",
            );
        }

        let mut sums: Vec<f64> = self.nodes.iter().map(|node| node.self_weight).collect();
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                out.push(Violation::EdgeOutOfRange {
                    from: e.from,
                    to: e.to,
                });
                continue;
            }
            if e.from == e.to {
                out.push(Violation::SelfEdge { node: e.from });
            }
            if !(e.weight > 0.0 && e.weight <= 1.0) {
                out.push(Violation::EdgeWeight {
                    from: e.from,
                    to: e.to,
                    weight: e.weight,
                });
            }
            if !seen.insert((e.from, e.to)) {
                out.push(Violation::DuplicateEdge {
                    from: e.from,
                    to: e.to,
                });
            }
            sums[e.to] += e.weight;
        }
        for (node, sum) in sums.into_iter().enumerate() {
            if !((sum - 1.0).abs() <= NORMALIZATION_TOL) {
                out.push(Violation::Normalization { node, sum });
            }
        }
        out
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(
                violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }

    /// Matrix with entry `(u, v) = alpha_v * a_uv`, including the self term on
    /// the diagonal.
    pub fn influence_matrix(&self) -> Result<InfluenceMatrix> {
        self.ensure_valid()?;
        let n = self.nodes.len();
        let mut m = InfluenceMatrix::zeros(n);
        for (v, node) in self.nodes.iter().enumerate() {
            m.set(v, v, node.params.alpha * node.self_weight);
        }
        for e in &self.edges {
            let alpha = self.nodes[e.to].params.alpha;
            m.set(e.from, e.to, alpha * e.weight);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialisation is infallible")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Dense square matrix of nonnegative influence coefficients, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl InfluenceMatrix {
    pub fn zeros(n: usize) -> Self {
        InfluenceMatrix {
            n,
            entries: vec![0.0; n * n],
        }
    }

    /// Build from row-major entries; `entries.len()` must be a perfect square.
    pub fn from_rows(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::param(
                "entries",
                format!("expected {} entries for a {n}x{n} matrix, got {}", n * n, entries.len()),
            ));
        }
        Ok(InfluenceMatrix { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.n + j] = value;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn scaled(&self, c: f64) -> Self {
        InfluenceMatrix {
            n: self.n,
            entries: self.entries.iter().map(|x| x * c).collect(),
        }
    }

    /// Perron root of the (nonnegative) matrix.
    ///
    /// Power iteration runs on `A + I`: for nonnegative `A` the shifted
    /// matrix has `rho(A) + 1` as its unique dominant eigenvalue even when
    /// `A` is periodic (a ring is a permutation matrix up to scale), so the
    /// iteration converges where plain power iteration would oscillate.
    pub fn spectral_radius(&self) -> Result<f64> {
        const TOL: f64 = 1e-10;
        const MAX_ITER: usize = 10_000;

        let n = self.n;
        if n == 0 {
            return Ok(0.0);
        }
        if let Some(&bad) = self.entries.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::param(
                "matrix",
                format!("power iteration needs finite nonnegative entries, found {bad}"),
            ));
        }

        let mut x = vec![1.0 / n as f64; n];
        let mut y = vec![0.0; n];
        let mut prev = f64::NAN;
        for _ in 0..MAX_ITER {
            // y = (A + I) x
            for i in 0..n {
                let row = &self.entries[i * n..(i + 1) * n];
                y[i] = x[i] + row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            }
            // x stays on the simplex, so sum(y) is the growth factor.
            let lambda: f64 = y.iter().sum();
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / lambda;
            }
            if (lambda - prev).abs() <= TOL * lambda {
                return Ok((lambda - 1.0).max(0.0));
            }
            prev = lambda;
        }
        Err(Error::NoConvergence {
            iterations: MAX_ITER,
            estimate: prev - 1.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> NodeParams {
        NodeParams::default()
    }

    #[test]
    fn ring_edges() {
        let g = InfluenceGraph::ring(4, params()).unwrap();
        let edges: Vec<_> = g.edges().iter().map(|e| (e.from, e.to, e.weight)).collect();
        assert_eq!(
            edges,
            vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]
        );
        let g = InfluenceGraph::ring(2, params()).unwrap();
        assert_eq!(g.edge_set(), [(0, 1), (1, 0)].into_iter().collect());
        assert!(InfluenceGraph::ring(10, params()).unwrap().validate().is_empty());
        assert!(matches!(
            InfluenceGraph::ring(1, params()),
            Err(Error::InvalidSize { n: 1, .. })
        ));
    }

    #[test]
    fn line_edges() {
        let g = InfluenceGraph::line(3, params()).unwrap();
        assert_eq!(g.edge_set(), [(0, 1), (1, 2)].into_iter().collect());
        assert_eq!(g.self_weight(0), 1.0);
        assert_eq!(g.self_weight(1), 0.0);
        assert!(g.validate().is_empty());
        assert_eq!(InfluenceGraph::line(2, params()).unwrap().edges().len(), 1);
        let g = InfluenceGraph::line(10, params()).unwrap();
        assert_eq!(g.edges().len(), 9);
        assert!(g.edges().iter().all(|e| e.weight == 1.0));
        assert!(InfluenceGraph::line(0, params()).is_err());
    }

    #[test]
    fn random_graph_contract() {
        assert!(matches!(
            InfluenceGraph::random(5, 5, params(), 1),
            Err(Error::InvalidDegree { .. })
        ));
        assert!(InfluenceGraph::random(5, 0, params(), 1).is_err());
        let a = InfluenceGraph::random(4, 1, params(), 7).unwrap();
        let b = InfluenceGraph::random(4, 1, params(), 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());

        let g = InfluenceGraph::random(6, 2, params(), 3).unwrap();
        for v in 0..6 {
            assert_eq!(g.in_neighbors(v).len(), 2);
            assert!(!g.neighborhood(v).contains(&v));
        }
        assert!(g.validate().is_empty());
    }

    #[test]
    fn validate_reports_violations() {
        let g = InfluenceGraph::ring(4, params()).unwrap();
        let mut edges = g.edges().to_vec();
        edges[2].weight = 0.5;
        let bad = InfluenceGraph::from_parts(g.nodes().to_vec(), edges);
        let v = bad.validate();
        assert_eq!(v, vec![Violation::Normalization { node: 3, sum: 0.5 }]);

        let mut nodes = g.nodes().to_vec();
        nodes[1].params.alpha = 1.2;
        let bad = InfluenceGraph::from_parts(nodes, g.edges().to_vec());
        let v = bad.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("node 1: alpha"));
        assert!(!v[0].is_boundary_alpha());

        let mut edges = g.edges().to_vec();
        edges.push(edges[0]);
        let dup = InfluenceGraph::from_parts(g.nodes().to_vec(), edges);
        assert!(dup
            .validate()
            .contains(&Violation::DuplicateEdge { from: 0, to: 1 }));
    }

    #[test]
    fn influence_matrix_ring3() {
        let p = NodeParams {
            alpha: 0.8,
            ..params()
        };
        let m = InfluenceGraph::ring(3, p).unwrap().influence_matrix().unwrap();
        #[rustfmt::skip]
        let expected = [
            0.0, 0.8, 0.0,
            0.0, 0.0, 0.8,
            0.8, 0.0, 0.0,
        ];
        assert_eq!(m.entries(), &expected);
    }

    #[test]
    fn influence_matrix_isolated_nodes() {
        let p = NodeParams {
            alpha: 0.5,
            ..params()
        };
        let nodes = vec![
            Node {
                params: p,
                self_weight: 1.0
            };
            3
        ];
        let m = InfluenceGraph::from_parts(nodes, vec![])
            .influence_matrix()
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), if i == j { 0.5 } else { 0.0 });
            }
        }
        assert_abs_diff_eq!(m.spectral_radius().unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn influence_matrix_line2() {
        let m = InfluenceGraph::line(2, params())
            .unwrap()
            .influence_matrix()
            .unwrap();
        assert_eq!(m.get(0, 1), 0.8);
        assert_eq!(m.get(0, 0), 0.8);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn influence_matrix_rejects_invalid() {
        let g = InfluenceGraph::ring(3, params()).unwrap();
        let mut edges = g.edges().to_vec();
        edges[0].weight = 0.3;
        let bad = InfluenceGraph::from_parts(g.nodes().to_vec(), edges);
        assert!(matches!(bad.influence_matrix(), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn spectral_radius_simple_cases() {
        assert_eq!(InfluenceMatrix::zeros(4).spectral_radius().unwrap(), 0.0);
        let mut m = InfluenceMatrix::zeros(3);
        for i in 0..3 {
            m.set(i, i, 0.5);
        }
        assert_abs_diff_eq!(m.spectral_radius().unwrap(), 0.5, epsilon = 1e-9);
        let ring = InfluenceGraph::ring(10, params()).unwrap();
        let rho = ring.influence_matrix().unwrap().spectral_radius().unwrap();
        assert_abs_diff_eq!(rho, 0.8, epsilon = 1e-9);
    }

    #[test]
    fn spectral_radius_rejects_negative_entries() {
        let m = InfluenceMatrix::from_rows(2, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        assert!(m.spectral_radius().is_err());
        assert!(InfluenceMatrix::from_rows(2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = InfluenceGraph::random(7, 3, params(), 11).unwrap();
        let text = g.to_json();
        let back = InfluenceGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"self_weight\""));
        assert!(text.contains("\"l\""));
    }
}
