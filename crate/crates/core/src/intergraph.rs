//! BS interference graph and Recursive Largest First coloring.

use std::fmt::Write as _;

use crate::clustering::VirtualCellPartition;
use crate::scenario::{distance, Point};
use crate::{Error, Result};

/// Undirected simple graph on the BSs.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph {
    num_vertices: usize,
    /// Sorted adjacency lists.
    adjacency: Vec<Vec<usize>>,
    pub gamma_d: f64,
}

impl InterferenceGraph {
    /// Graph from an explicit edge list. Self-loops are rejected, duplicate
    /// edges and endpoint order are ignored.
    pub fn from_edges(num_vertices: usize, edges: &[(usize, usize)], gamma_d: f64) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); num_vertices];
        for &(a, b) in edges {
            if a >= num_vertices || b >= num_vertices || a == b {
                return Err(Error::InvalidConfig(format!("bad edge ({a}, {b})")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self { num_vertices, adjacency, gamma_d })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, adj)| adj.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Plain edge list: a `# vertices N gamma_d G` header, then one `a b` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# vertices {} gamma_d {}\n", self.num_vertices, self.gamma_d);
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

/// Links BSs `b1 != b2` when they sit in different virtual cells, are closer
/// than `gamma_d` (strictly), and at least one of them is the best BS of some user.
pub fn build_interference_graph(
    bs_positions: &[Point],
    partition: &VirtualCellPartition,
    user_counts: &[usize],
    gamma_d: f64,
) -> InterferenceGraph {
    let n = bs_positions.len();
    assert_eq!(partition.num_bs(), n, "partition does not match BS count");
    assert_eq!(user_counts.len(), n, "user counts do not match BS count");
    let mut adjacency = vec![Vec::new(); n];
    for b1 in 0..n {
        for b2 in (b1 + 1)..n {
            let linked = partition.cell_of_bs[b1] != partition.cell_of_bs[b2]
                && distance(bs_positions[b1], bs_positions[b2]) < gamma_d
                && user_counts[b1] + user_counts[b2] > 0;
            if linked {
                adjacency[b1].push(b2);
                adjacency[b2].push(b1);
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    InterferenceGraph { num_vertices: n, adjacency, gamma_d }
}

/// Color classes `I_1..I_kappa`; BSs of one class do not interfere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub color_of: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
}

impl Coloring {
    pub fn num_colors(&self) -> usize {
        self.groups.len()
    }

    /// No edge joins two vertices of the same color.
    pub fn is_proper(&self, g: &InterferenceGraph) -> bool {
        g.edges().iter().all(|&(a, b)| self.color_of[a] != self.color_of[b])
    }
}

/// Recursive Largest First.
///
/// Each color class is grown as a maximal independent set of the still
/// uncolored vertices. It is seeded with the vertex of largest degree in the
/// uncolored subgraph; afterwards the candidate with the most neighbors among
/// the vertices already excluded from the class is added. Ties go to the
/// smallest vertex index.
pub fn color_graph(g: &InterferenceGraph) -> Coloring {
    let n = g.num_vertices();
    let mut color_of = vec![usize::MAX; n];
    let mut groups = Vec::new();
    let mut uncolored: Vec<bool> = vec![true; n];
    let mut remaining = n;

    while remaining > 0 {
        let color = groups.len();
        // candidate: uncolored and not adjacent to the class; excluded: uncolored and adjacent
        let mut candidate = uncolored.clone();
        let mut excluded = vec![false; n];
        let mut class = Vec::new();

        let uncolored_degree =
            |v: usize| g.neighbors(v).iter().filter(|&&w| uncolored[w]).count();
        let mut next = argmax_by_key((0..n).filter(|&v| candidate[v]), uncolored_degree);

        while let Some(v) = next {
            class.push(v);
            candidate[v] = false;
            for &w in g.neighbors(v) {
                if candidate[w] {
                    candidate[w] = false;
                    excluded[w] = true;
                }
            }
            next = argmax_by_key((0..n).filter(|&v| candidate[v]), |v| {
                g.neighbors(v).iter().filter(|&&w| excluded[w]).count()
            });
        }

        class.sort_unstable();
        for &v in &class {
            color_of[v] = color;
            uncolored[v] = false;
        }
        remaining -= class.len();
        groups.push(class);
    }

    Coloring { color_of, groups }
}

/// First maximizer in iteration order.
fn argmax_by_key(items: impl Iterator<Item = usize>, mut key: impl FnMut(usize) -> usize) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for v in items {
        let k = key(v);
        if best.is_none_or(|(_, bk)| k > bk) {
            best = Some((v, k));
        }
    }
    best.map(|(v, _)| v)
}
