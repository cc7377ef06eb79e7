use super::d_maximal_size;
use crate::bitstring::GhdParams;
use crate::error::{GhdError, Result};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Dense undirected graph with bitset adjacency rows.
#[derive(Clone, Debug)]
pub struct Graph {
    order: usize,
    words: usize,
    adj: Vec<u64>,
}

impl Graph {
    /// Edge {a, b} (a ≠ b) iff `edge(a, b)`; the predicate must be symmetric.
    pub fn from_predicate<F: Fn(usize, usize) -> bool + Sync>(order: usize, edge: F) -> Self {
        let words = order.div_ceil(64);
        let rows: Vec<Vec<u64>> = (0..order)
            .into_par_iter()
            .map(|a| {
                let mut row = vec![0u64; words];
                for b in 0..order {
                    if a != b && edge(a, b) {
                        row[b / 64] |= 1 << (b % 64);
                    }
                }
                row
            })
            .collect();
        Self {
            order,
            words,
            adj: rows.concat(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.row(a)[b / 64] >> (b % 64) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    fn full_set(&self) -> Vec<u64> {
        let mut s = vec![u64::MAX; self.words];
        let rem = self.order % 64;
        if rem != 0 {
            s[self.words - 1] = (1u64 << rem) - 1;
        }
        s
    }
}

fn members(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(i * 64 + b)
        })
    })
}

fn first_member(set: &[u64]) -> Option<usize> {
    set.iter()
        .position(|&w| w != 0)
        .map(|i| i * 64 + set[i].trailing_zeros() as usize)
}

fn is_empty(set: &[u64]) -> bool {
    set.iter().all(|&w| w == 0)
}

struct CliqueSearch<'a> {
    g: &'a Graph,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl CliqueSearch<'_> {
    /// Greedy colouring of `cand`; vertices in colour order with colour numbers.
    fn colour_sort(&self, cand: &[u64]) -> Vec<(usize, usize)> {
        let mut uncoloured = cand.to_vec();
        let mut out = Vec::new();
        let mut colour = 0;
        while !is_empty(&uncoloured) {
            colour += 1;
            let mut q = uncoloured.clone();
            while let Some(v) = first_member(&q) {
                q[v / 64] &= !(1 << (v % 64));
                uncoloured[v / 64] &= !(1 << (v % 64));
                for (qw, aw) in q.iter_mut().zip(self.g.row(v)) {
                    *qw &= !aw;
                }
                out.push((v, colour));
            }
        }
        out
    }

    fn expand(&mut self, current: &mut Vec<usize>, mut cand: Vec<u64>) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let order = self.colour_sort(&cand);
        for &(v, bound) in order.iter().rev() {
            if current.len() + bound <= self.best.len() {
                return true;
            }
            current.push(v);
            let next: Vec<u64> = cand.iter().zip(self.g.row(v)).map(|(a, b)| a & b).collect();
            if is_empty(&next) {
                if current.len() > self.best.len() {
                    self.best = current.clone();
                }
            } else if !self.expand(current, next) {
                return false;
            }
            current.pop();
            cand[v / 64] &= !(1 << (v % 64));
        }
        true
    }
}

/// Maximum clique by colour-bounded branch and bound. With `containing`,
/// only cliques through that vertex are searched (enough for vertex-transitive
/// graphs). Returns the best clique and whether the search finished.
pub fn max_clique(g: &Graph, node_budget: u64, containing: Option<usize>) -> (Vec<usize>, bool) {
    let mut s = CliqueSearch {
        g,
        best: Vec::new(),
        nodes: 0,
        budget: node_budget,
    };
    let mut current = Vec::new();
    let cand = match containing {
        Some(v) => {
            current.push(v);
            s.best = vec![v];
            g.row(v).to_vec()
        }
        None => g.full_set(),
    };
    if g.order == 0 {
        return (Vec::new(), true);
    }
    let complete = s.expand(&mut current, cand);
    let mut best = s.best;
    best.sort_unstable();
    (best, complete)
}

/// Result of the exact colouring search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColoringOutcome {
    /// Colour of each vertex in the best colouring found.
    pub colouring: Vec<u32>,
    pub colours: usize,
    pub lower_bound: usize,
    /// `colours` is proven minimum.
    pub optimal: bool,
    pub nodes: u64,
}

const NONE: u32 = u32::MAX;

struct Dsatur<'a> {
    g: &'a Graph,
    colour: Vec<u32>,
    /// Neighbours of each vertex holding each colour.
    seen: Vec<Vec<u16>>,
    saturation: Vec<u32>,
    degree: Vec<u32>,
    best: Vec<u32>,
    best_k: usize,
    lower: usize,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl Dsatur<'_> {
    fn pick(&self) -> usize {
        let mut best = usize::MAX;
        let mut key = (0u32, 0u32);
        for v in 0..self.g.order {
            if self.colour[v] != NONE {
                continue;
            }
            let k = (self.saturation[v], self.degree[v]);
            if best == usize::MAX || k > key {
                best = v;
                key = k;
            }
        }
        best
    }

    fn set(&mut self, v: usize, c: u32) {
        self.colour[v] = c;
        for u in members(self.g.row(v)).collect::<Vec<_>>() {
            let cell = &mut self.seen[u][c as usize];
            *cell += 1;
            if *cell == 1 {
                self.saturation[u] += 1;
            }
        }
    }

    fn unset(&mut self, v: usize) {
        let c = self.colour[v];
        self.colour[v] = NONE;
        for u in members(self.g.row(v)).collect::<Vec<_>>() {
            let cell = &mut self.seen[u][c as usize];
            *cell -= 1;
            if *cell == 0 {
                self.saturation[u] -= 1;
            }
        }
    }

    /// Returns true once an optimal colouring is certain.
    fn search(&mut self, coloured: usize, k: usize) -> bool {
        if coloured == self.g.order {
            self.best = self.colour.clone();
            self.best_k = k;
            return self.best_k <= self.lower;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return true;
        }
        let v = self.pick();
        for c in 0..k {
            if self.seen[v][c] == 0 {
                self.set(v, c as u32);
                let done = self.search(coloured + 1, k);
                self.unset(v);
                if done {
                    return true;
                }
            }
        }
        if k + 1 < self.best_k {
            self.set(v, k as u32);
            let done = self.search(coloured + 1, k + 1);
            self.unset(v);
            if done {
                return true;
            }
        }
        false
    }
}

/// Default node budget for the colouring search.
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;

/// Exact chromatic number by DSATUR branch and bound, stopping early when the
/// colouring meets `lower_bound` or the node budget runs out.
pub fn chromatic_number(g: &Graph, lower_bound: usize, node_budget: u64) -> ColoringOutcome {
    let n = g.order;
    if n == 0 {
        return ColoringOutcome {
            colouring: vec![],
            colours: 0,
            lower_bound: 0,
            optimal: true,
            nodes: 0,
        };
    }
    let slots = n.min(u16::MAX as usize);
    let mut s = Dsatur {
        g,
        colour: vec![NONE; n],
        seen: vec![vec![0; slots + 1]; n],
        saturation: vec![0; n],
        degree: (0..n).map(|v| g.degree(v) as u32).collect(),
        best: Vec::new(),
        best_k: n + 1,
        lower: lower_bound.max(1),
        nodes: 0,
        budget: node_budget,
        aborted: false,
    };
    s.search(0, 0);
    let optimal = !s.aborted || s.best_k <= s.lower;
    let lower = if optimal { s.best_k } else { s.lower };
    ColoringOutcome {
        colouring: s.best,
        colours: s.best_k,
        lower_bound: lower,
        optimal,
        nodes: s.nodes,
    }
}

/// Exact one-way analysis of GHD at tiny n through the conflict graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConflictGraphSummary {
    pub n: usize,
    pub c: String,
    /// Smallest integer distance d with d >= 2c√n; pairs at distance >= d conflict.
    pub threshold: u64,
    /// Minimum number of zero-error message classes, when proven.
    pub chromatic_number: Option<usize>,
    pub chromatic_lower: usize,
    pub chromatic_upper: usize,
    pub max_compatible_set: usize,
    pub max_set_exhaustive: bool,
    /// d_maximal_size(n, threshold - 1).
    pub d_maximal: u64,
    /// 2^n / d_maximal.
    pub counting_bound: f64,
    /// Largest pairwise distance inside any class of the best colouring.
    pub max_class_diameter: u64,
    pub class_sizes: Vec<usize>,
    pub search_nodes: u64,
}

impl ConflictGraphSummary {
    pub const CSV_HEADER: &'static str = "n,c,threshold,chromatic,max_set,log2_chromatic";

    pub fn csv_row(&self) -> String {
        let (chrom, log) = match self.chromatic_number {
            Some(k) => (k.to_string(), format!("{}", (k as f64).log2())),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{}",
            self.n, self.c, self.threshold, chrom, self.max_compatible_set, log
        )
    }
}

/// Builds the conflict graph {x1, x2 : Δ >= 2c√n} on {0,1}^n (n <= 10),
/// colours it exactly, and finds the largest conflict-free set.
pub fn exact_oneway_complexity(p: &GhdParams, node_budget: u64) -> Result<ConflictGraphSummary> {
    let n = p.n;
    if n > 10 {
        return Err(GhdError::ResourceLimit(format!(
            "exact one-way complexity needs n <= 10, got {n}"
        )));
    }
    let nu = n as u64;
    let threshold = (0..)
        .find(|&d| p.gap.at_least_two_c_sqrt_n(nu, d))
        .expect("2c√n is finite");
    let order = 1usize << n;
    let conflict = Graph::from_predicate(order, |a, b| {
        ((a ^ b) as u32).count_ones() as u64 >= threshold
    });
    let d_max_arg = threshold.saturating_sub(1).min(nu);
    let d_maximal = d_maximal_size(nu, d_max_arg)?.to_u64().expect("small");
    let compat = Graph::from_predicate(order, |a, b| {
        (((a ^ b) as u32).count_ones() as u64) < threshold
    });
    let (clique, exhaustive) = max_clique(&compat, node_budget, Some(0));
    let max_set = if exhaustive {
        clique.len()
    } else {
        d_maximal as usize
    };
    let lower = order.div_ceil(max_set);
    let outcome = chromatic_number(&conflict, lower, node_budget);
    let k = outcome.colours;
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (v, &c) in outcome.colouring.iter().enumerate() {
        classes[c as usize].push(v);
    }
    let max_class_diameter = classes
        .iter()
        .flat_map(|cls| {
            cls.iter().flat_map(move |&a| {
                cls.iter()
                    .map(move |&b| ((a ^ b) as u32).count_ones() as u64)
            })
        })
        .max()
        .unwrap_or(0);
    Ok(ConflictGraphSummary {
        n,
        c: p.gap.to_string(),
        threshold,
        chromatic_number: outcome.optimal.then_some(k),
        chromatic_lower: outcome.lower_bound,
        chromatic_upper: k,
        max_compatible_set: max_set,
        max_set_exhaustive: exhaustive,
        d_maximal,
        counting_bound: order as f64 / d_maximal as f64,
        max_class_diameter,
        class_sizes: classes.iter().map(Vec::len).collect(),
        search_nodes: outcome.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::Gap;

    fn cycle(n: usize) -> Graph {
        Graph::from_predicate(n, |a, b| (a + 1) % n == b || (b + 1) % n == a)
    }

    #[test]
    fn small_graph_colourings() {
        assert_eq!(chromatic_number(&cycle(6), 1, 1000).colours, 2);
        let odd = chromatic_number(&cycle(7), 1, 100_000);
        assert_eq!((odd.colours, odd.optimal), (3, true));
        let k5 = Graph::from_predicate(5, |_, _| true);
        assert_eq!(chromatic_number(&k5, 1, 1000).colours, 5);
        assert_eq!(max_clique(&k5, 1000, None).0.len(), 5);
        assert_eq!(max_clique(&cycle(7), 1000, None).0.len(), 2);
    }

    #[test]
    fn petersen_graph() {
        // outer 5-cycle, inner pentagram, spokes
        let edge = |a: usize, b: usize| {
            let (a, b) = (a.min(b), a.max(b));
            (a < 5 && b < 5 && (b - a == 1 || b - a == 4))
                || (a >= 5 && (b - a == 2 || b - a == 3))
                || b == a + 5
        };
        let g = Graph::from_predicate(10, edge);
        let out = chromatic_number(&g, 1, 100_000);
        assert_eq!((out.colours, out.optimal), (3, true));
        for a in 0..10 {
            for b in 0..10 {
                if g.adjacent(a, b) {
                    assert_ne!(out.colouring[a], out.colouring[b]);
                }
            }
        }
    }

    #[test]
    fn n4_conflicts_are_complements() {
        let p = GhdParams::new(4, Gap::integer(1)).unwrap();
        let s = exact_oneway_complexity(&p, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(s.threshold, 4);
        assert_eq!(s.chromatic_number, Some(2));
        assert!(s.max_class_diameter < 4);
        assert_eq!(s.max_compatible_set, 8);
        assert_eq!(s.csv_row(), "4,1,4,2,8,1");
    }

    #[test]
    fn large_gap_has_no_conflicts() {
        let p = GhdParams::new(4, Gap::integer(3)).unwrap();
        let s = exact_oneway_complexity(&p, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(s.threshold, 12);
        assert_eq!(s.chromatic_number, Some(1));
        assert_eq!(s.max_compatible_set, 16);
    }

    #[test]
    fn counting_bound_small_n() {
        for n in 4..=6 {
            let p = GhdParams::new(n, Gap::integer(1)).unwrap();
            let s = exact_oneway_complexity(&p, DEFAULT_NODE_BUDGET).unwrap();
            let k = s.chromatic_number.expect("small instances finish");
            assert!((k as f64).log2() >= n as f64 - (s.d_maximal as f64).log2() - 1.0);
            assert!(k * s.max_compatible_set >= 1 << n);
            assert_eq!(s.max_compatible_set as u64, s.d_maximal);
            assert!(s.max_class_diameter < s.threshold);
        }
    }
}
