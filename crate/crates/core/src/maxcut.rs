//! Weighted MAXCUT instances with node preferences, plus exact and greedy
//! classical solvers used as oracles for the quantum runs.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count for which payoff enumeration is allowed.
pub const MAX_ENUMERATION_NODES: usize = 20;

/// Undirected graph with node weights `w_i` and edge weights `w_ij` (`i < j`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    node_weights: Vec<f64>,
    edges: BTreeMap<(usize, usize), f64>,
}

/// On-disk instance layout: `{"n": 3, "node_weights": [...], "edges": [[i, j, w], ...]}`
/// with 0-based node indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub node_weights: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, node_weights: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("graph needs at least one node".into()));
        }
        if node_weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: node_weights.len(),
            });
        }
        if let Some(w) = node_weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite node weight {w}")));
        }
        let mut map = BTreeMap::new();
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::out_of_range("edge endpoint", a.max(b), format!("0..{n}")));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on node {a}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite weight on edge ({a}, {b})")));
            }
            let key = (a.min(b), a.max(b));
            if map.insert(key, w).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({}, {})",
                    key.0, key.1
                )));
            }
        }
        Ok(Self {
            n,
            node_weights,
            edges: map,
        })
    }

    /// Three nodes with `w_i = 2`, `w_12 = 2`, `w_13 = 1`, `w_23 = 3`.
    pub fn paper_instance() -> Self {
        Self::new(3, vec![2.0, 2.0, 2.0], &[(0, 1, 2.0), (0, 2, 1.0), (1, 2, 3.0)])
            .expect("static instance is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    /// Edges as `(i, j, w_ij)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    /// `w_ij` for any ordering of `i != j`; zero when the edge is absent.
    pub fn edge_weight(&self, i: usize, j: usize) -> f64 {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn with_node_weights(&self, node_weights: Vec<f64>) -> Result<Self> {
        let edges: Vec<_> = self.edges().collect();
        Self::new(self.n, node_weights, &edges)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n,
            node_weights: self.node_weights.clone(),
            edges: self.edges().collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        Self::new(file.n, file.node_weights.clone(), &file.edges)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A cut `s` in `[0, 2^n)`; node `i` sits on side `s_i`, where node 0 is the
/// most significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CutAssignment {
    bits: usize,
    n: usize,
}

impl CutAssignment {
    pub fn new(n: usize, bits: usize) -> Result<Self> {
        if n == 0 || n > usize::BITS as usize - 1 || bits >> n != 0 {
            return Err(Error::out_of_range("cut assignment", bits, format!("0..2^{n}")));
        }
        Ok(Self { bits, n })
    }

    /// Parse a bit string such as `"101"`.
    pub fn parse(text: &str) -> Result<Self> {
        let bits = usize::from_str_radix(text, 2)
            .map_err(|_| Error::InvalidInput(format!("not a bit string: {text:?}")))?;
        Self::new(text.len(), bits)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `s_i` in {0, 1}.
    pub fn side(&self, node: usize) -> u8 {
        ((self.bits >> (self.n - 1 - node)) & 1) as u8
    }

    pub fn flip(&self, node: usize) -> Self {
        Self {
            bits: self.bits ^ (1 << (self.n - 1 - node)),
            n: self.n,
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: !self.bits & ((1 << self.n) - 1),
            n: self.n,
        }
    }
}

impl fmt::Display for CutAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.n)
    }
}

/// All `2^n` payoffs, indexed by `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable {
    pub values: Vec<f64>,
}

impl PayoffTable {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `P(s) = Σ_i w_i s_i + Σ_{i<j} w_ij [s_i != s_j]`.
pub fn payoff(g: &WeightedGraph, s: CutAssignment) -> f64 {
    let nodes: f64 = (0..g.n)
        .filter(|&i| s.side(i) == 1)
        .fold(0.0, |acc, i| acc + g.node_weights[i]);
    let cut: f64 = g
        .edges()
        .filter(|&(i, j, _)| s.side(i) != s.side(j))
        .fold(0.0, |acc, (_, _, w)| acc + w);
    nodes + cut
}

fn enumeration_guard(g: &WeightedGraph) -> Result<()> {
    if g.n > MAX_ENUMERATION_NODES {
        return Err(Error::out_of_range(
            "node count for enumeration",
            g.n,
            format!("<= {MAX_ENUMERATION_NODES}"),
        ));
    }
    Ok(())
}

pub fn payoff_table(g: &WeightedGraph) -> Result<PayoffTable> {
    enumeration_guard(g)?;
    let values = (0..1usize << g.n)
        .map(|bits| payoff(g, CutAssignment { bits, n: g.n }))
        .collect();
    Ok(PayoffTable { values })
}

/// Every maximizer, ascending in `s`, and the maximum payoff.
pub fn brute_force_max(g: &WeightedGraph) -> Result<(Vec<CutAssignment>, f64)> {
    let table = payoff_table(g)?;
    let best = table.max();
    let argmax = table
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(bits, _)| CutAssignment { bits, n: g.n })
        .collect();
    Ok((argmax, best))
}

/// Plateau handling for [`greedy_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyRule {
    /// Stop as soon as no single flip strictly improves the payoff.
    Strict,
    /// Like `Strict`, but when stuck take one sideways move to an unvisited
    /// equal-payoff neighbor (lowest node index first).
    AcceptEqual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyWalk {
    pub endpoint: CutAssignment,
    /// Visited cuts, starting with the start point and ending at `endpoint`.
    pub path: Vec<CutAssignment>,
}

/// Steepest-ascent single-bit-flip hill climb. Ties between equally good flips
/// go to the lowest node index.
pub fn greedy_search(g: &WeightedGraph, start: CutAssignment, rule: GreedyRule) -> Result<GreedyWalk> {
    if start.n != g.n {
        return Err(Error::DimensionMismatch {
            expected: g.n,
            actual: start.n,
        });
    }
    let mut current = start;
    let mut path = vec![start];
    let mut visited: HashSet<CutAssignment> = HashSet::from([start]);
    let mut sideways_left = matches!(rule, GreedyRule::AcceptEqual);

    loop {
        let here = payoff(g, current);
        let mut best: Option<(CutAssignment, f64)> = None;
        for node in 0..g.n {
            let next = current.flip(node);
            let p = payoff(g, next);
            if p > here && best.is_none_or(|(_, bp)| p > bp) {
                best = Some((next, p));
            }
        }
        let step = match best {
            Some((next, _)) => Some(next),
            None if sideways_left => {
                sideways_left = false;
                (0..g.n)
                    .map(|node| current.flip(node))
                    .find(|next| payoff(g, *next) == here && !visited.contains(next))
            }
            None => None,
        };
        match step {
            Some(next) => {
                visited.insert(next);
                path.push(next);
                current = next;
            }
            None => break,
        }
    }
    Ok(GreedyWalk {
        endpoint: current,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(s: &str) -> CutAssignment {
        CutAssignment::parse(s).unwrap()
    }

    #[test]
    fn paper_payoffs() {
        let g = WeightedGraph::paper_instance();
        assert_eq!(payoff(&g, cut("101")), 9.0);
        assert_eq!(payoff(&g, cut("000")), 0.0);
        assert_eq!(payoff(&g, cut("110")), 8.0);
    }

    #[test]
    fn paper_table() {
        let g = WeightedGraph::paper_instance();
        assert_eq!(
            payoff_table(&g).unwrap().values,
            vec![0.0, 6.0, 7.0, 7.0, 5.0, 9.0, 8.0, 6.0]
        );
    }

    #[test]
    fn zero_weights_give_zero_table() {
        let g = WeightedGraph::new(3, vec![0.0; 3], &[]).unwrap();
        assert!(payoff_table(&g).unwrap().values.iter().all(|&v| v == 0.0));
        let (argmax, best) = brute_force_max(&g).unwrap();
        assert_eq!(best, 0.0);
        assert_eq!(argmax.len(), 8);
    }

    #[test]
    fn symmetric_variant_has_two_maximizers() {
        // w23 is the lightest edge, so node 1 is cut away from nodes 2 and 3.
        let g = WeightedGraph::new(3, vec![0.0; 3], &[(0, 1, 3.0), (0, 2, 2.0), (1, 2, 1.0)]).unwrap();
        let (argmax, best) = brute_force_max(&g).unwrap();
        assert_eq!(argmax, vec![cut("011"), cut("100")]);
        assert_eq!(best, 5.0);
    }

    #[test]
    fn brute_force_examples() {
        let (argmax, best) = brute_force_max(&WeightedGraph::paper_instance()).unwrap();
        assert_eq!(argmax, vec![cut("101")]);
        assert_eq!(best, 9.0);

        let single = WeightedGraph::new(1, vec![5.0], &[]).unwrap();
        let (argmax, best) = brute_force_max(&single).unwrap();
        assert_eq!(argmax, vec![cut("1")]);
        assert_eq!(best, 5.0);
    }

    #[test]
    fn greedy_walks_from_table() {
        let g = WeightedGraph::paper_instance();
        let w = greedy_search(&g, cut("001"), GreedyRule::Strict).unwrap();
        assert_eq!(w.endpoint, cut("101"));
        let w = greedy_search(&g, cut("000"), GreedyRule::Strict).unwrap();
        assert_eq!(w.path, vec![cut("000"), cut("010"), cut("110")]);
    }

    #[test]
    fn plateau_behaviour() {
        let g = WeightedGraph::paper_instance();
        let strict = greedy_search(&g, cut("011"), GreedyRule::Strict).unwrap();
        assert_eq!(strict.endpoint, cut("011"));
        let sideways = greedy_search(&g, cut("011"), GreedyRule::AcceptEqual).unwrap();
        assert_eq!(sideways.path, vec![cut("011"), cut("010"), cut("110")]);
    }

    #[test]
    fn graph_validation() {
        assert!(WeightedGraph::new(0, vec![], &[]).is_err());
        assert!(WeightedGraph::new(2, vec![0.0], &[]).is_err());
        assert!(WeightedGraph::new(2, vec![0.0; 2], &[(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![0.0; 2], &[(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![0.0; 2], &[(0, 2, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![f64::NAN, 0.0], &[]).is_err());
        let g = WeightedGraph::new(2, vec![0.0; 2], &[(1, 0, 2.0)]).unwrap();
        assert_eq!(g.edge_weight(0, 1), 2.0);
        assert_eq!(g.edge_weight(1, 0), 2.0);
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let g = WeightedGraph::paper_instance();
        let text = serde_json::to_string(&g.to_file()).unwrap();
        assert_eq!(WeightedGraph::from_json(&text).unwrap(), g);
        let dup = r#"{"n": 3, "node_weights": [0,0,0], "edges": [[0,1,1.0],[1,0,1.0]]}"#;
        assert!(WeightedGraph::from_json(dup).is_err());
        let lp = r#"{"n": 3, "node_weights": [0,0,0], "edges": [[2,2,1.0]]}"#;
        assert!(WeightedGraph::from_json(lp).is_err());
    }

    #[test]
    fn cut_assignment_bits() {
        let s = cut("100");
        assert_eq!((s.side(0), s.side(1), s.side(2)), (1, 0, 0));
        assert_eq!(s.complement(), cut("011"));
        assert_eq!(s.to_string(), "100");
        assert!(CutAssignment::new(3, 8).is_err());
    }

    #[test]
    fn enumeration_guard_rejects_large_graphs() {
        let g = WeightedGraph::new(21, vec![0.0; 21], &[]).unwrap();
        assert!(payoff_table(&g).is_err());
    }
}
