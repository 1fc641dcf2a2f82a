//! Admissible directed graphs and their bidifferential operators.
//!
//! A graph has `n` aerial and `m` ground vertices; edges depart only from
//! aerial vertices, with no multiple edges and no short loops. Each aerial
//! vertex carries an ordered list of outgoing targets: for the star-product
//! operators the two slots of a vertex correspond to the two derivative
//! indices of the linear bivector `f_ij^k x_k d_i d_j`, in that order.

use crate::liealg::LieAlgebra;
use crate::poly::SymPoly;
use crate::rat::Rat;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge from {from} targets itself (short loop)")]
    ShortLoop { from: usize },
    #[error("multiple edge from {from} to {to}")]
    MultipleEdge { from: usize, to: String },
    #[error("aerial vertex {vertex} has in-degree {indegree} >= 2 under a linear bivector")]
    InDegreeTooHigh { vertex: usize, indegree: usize },
    #[error("operator application requires exactly 2 ground vertices, got {m}")]
    GroundCountMismatch { m: usize },
    #[error("operator application requires out-degree 2 at aerial vertex {vertex}")]
    OutDegreeMismatch { vertex: usize },
    #[error("cannot parse graph: {0}")]
    ParseError(String),
}

/// Target of a directed edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Aerial(usize),
    Ground(usize),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Aerial(v) => write!(f, "{v}"),
            Target::Ground(v) => write!(f, "g{v}"),
        }
    }
}

/// Directed graph with `n` aerial and `m` ground vertices and ordered
/// out-edge lists per aerial vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdmissibleGraph {
    n: usize,
    m: usize,
    out: Vec<Vec<Target>>,
}

impl AdmissibleGraph {
    pub fn new(n: usize, m: usize, out: Vec<Vec<Target>>) -> Result<Self, GraphError> {
        assert_eq!(out.len(), n, "one out-list per aerial vertex");
        for (v, targets) in out.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for t in targets {
                match *t {
                    Target::Aerial(a) => {
                        if a == v {
                            return Err(GraphError::ShortLoop { from: v });
                        }
                        assert!(a < n, "aerial target out of range");
                    }
                    Target::Ground(gr) => assert!(gr < m, "ground target out of range"),
                }
                if !seen.insert(*t) {
                    return Err(GraphError::MultipleEdge { from: v, to: t.to_string() });
                }
            }
        }
        Ok(AdmissibleGraph { n, m, out })
    }

    pub fn aerial_count(&self) -> usize {
        self.n
    }

    pub fn ground_count(&self) -> usize {
        self.m
    }

    pub fn out_edges(&self, v: usize) -> &[Target] {
        &self.out[v]
    }

    /// Edges in canonical order: by source vertex, then slot.
    pub fn edges(&self) -> Vec<(usize, Target)> {
        let mut out = Vec::new();
        for (v, targets) in self.out.iter().enumerate() {
            for t in targets {
                out.push((v, *t));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn aerial_in_degree(&self, v: usize) -> usize {
        self.edges()
            .iter()
            .filter(|(_, t)| matches!(t, Target::Aerial(a) if *a == v))
            .count()
    }

    /// Lexicographically minimal out-edge table over relabelings of the
    /// aerial vertices (ground vertices stay fixed). Equal canonical forms
    /// characterize isomorphic labeled graphs.
    pub fn canonical_form(&self) -> AdmissibleGraph {
        let mut best: Option<Vec<Vec<Target>>> = None;
        let mut perm: Vec<usize> = (0..self.n).collect();
        loop {
            let relabeled = self.relabel(&perm);
            if best.as_ref().is_none_or(|b| relabeled < *b) {
                best = Some(relabeled);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        AdmissibleGraph { n: self.n, m: self.m, out: best.unwrap_or_default() }
    }

    fn relabel(&self, perm: &[usize]) -> Vec<Vec<Target>> {
        // perm[old] = new
        let mut out = vec![Vec::new(); self.n];
        for (v, targets) in self.out.iter().enumerate() {
            out[perm[v]] = targets
                .iter()
                .map(|t| match *t {
                    Target::Aerial(a) => Target::Aerial(perm[a]),
                    g => g,
                })
                .collect();
        }
        out
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

impl fmt::Display for AdmissibleGraph {
    /// Text form `n m ; v:(t1,t2) ...`, ground targets written `g0`, `g1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ;", self.n, self.m)?;
        for (v, targets) in self.out.iter().enumerate() {
            if targets.is_empty() {
                continue;
            }
            let list: Vec<String> = targets.iter().map(|t| t.to_string()).collect();
            write!(f, " {v}:({})", list.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for AdmissibleGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| GraphError::ParseError(m.to_string());
        let (head, rest) = s.split_once(';').ok_or_else(|| bad("missing `;`"))?;
        let mut head = head.split_whitespace();
        let n: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad aerial count"))?;
        let m: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad ground count"))?;
        if head.next().is_some() {
            return Err(bad("unexpected tokens before `;`"));
        }
        let mut out = vec![Vec::new(); n];
        for clause in rest.split_whitespace() {
            let (v, targets) = clause.split_once(':').ok_or_else(|| bad("missing `:`"))?;
            let v: usize = v.parse().map_err(|_| bad("bad vertex id"))?;
            if v >= n {
                return Err(bad(&format!("vertex {v} out of range")));
            }
            let targets = targets
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| bad("targets must be parenthesized"))?;
            let mut list = Vec::new();
            for t in targets.split(',').filter(|t| !t.is_empty()) {
                if let Some(gr) = t.strip_prefix('g') {
                    let gr: usize = gr.parse().map_err(|_| bad("bad ground id"))?;
                    if gr >= m {
                        return Err(bad(&format!("ground g{gr} out of range")));
                    }
                    list.push(Target::Ground(gr));
                } else {
                    let a: usize = t.parse().map_err(|_| bad("bad target id"))?;
                    if a >= n {
                        return Err(bad(&format!("target {a} out of range")));
                    }
                    list.push(Target::Aerial(a));
                }
            }
            if !out[v].is_empty() {
                return Err(bad(&format!("duplicate clause for vertex {v}")));
            }
            out[v] = list;
        }
        AdmissibleGraph::new(n, m, out)
    }
}

/// Exhaustive enumeration of admissible graphs on `n` labeled aerial and `m`
/// ground vertices with the given ordered out-degree per aerial vertex.
/// `max_in_degree` optionally caps the in-degree of aerial vertices (1 for a
/// linear bivector, where a second derivative kills the coefficient).
pub fn enumerate_graphs(
    n: usize,
    m: usize,
    out_degree: usize,
    max_in_degree: Option<usize>,
) -> Vec<AdmissibleGraph> {
    let mut results = Vec::new();
    let mut out: Vec<Vec<Target>> = vec![Vec::new(); n];
    let targets_for = |v: usize| -> Vec<Target> {
        (0..n)
            .filter(|&a| a != v)
            .map(Target::Aerial)
            .chain((0..m).map(Target::Ground))
            .collect()
    };

    fn ordered_tuples(pool: &[Target], k: usize) -> Vec<Vec<Target>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for (i, t) in pool.iter().enumerate() {
            let rest: Vec<Target> = pool
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| *t)
                .collect();
            for mut tail in ordered_tuples(&rest, k - 1) {
                let mut tuple = vec![*t];
                tuple.append(&mut tail);
                out.push(tuple);
            }
        }
        out
    }

    fn go(
        v: usize,
        n: usize,
        m: usize,
        out_degree: usize,
        max_in: Option<usize>,
        out: &mut Vec<Vec<Target>>,
        choices: &[Vec<Vec<Target>>],
        results: &mut Vec<AdmissibleGraph>,
    ) {
        if v == n {
            let g = AdmissibleGraph { n, m, out: out.clone() };
            if let Some(cap) = max_in {
                if (0..n).any(|a| g.aerial_in_degree(a) > cap) {
                    return;
                }
            }
            results.push(g);
            return;
        }
        for tuple in &choices[v] {
            out[v] = tuple.clone();
            go(v + 1, n, m, out_degree, max_in, out, choices, results);
        }
        out[v] = Vec::new();
    }

    let choices: Vec<Vec<Vec<Target>>> =
        (0..n).map(|v| ordered_tuples(&targets_for(v), out_degree)).collect();
    go(0, n, m, out_degree, max_in_degree, &mut out, &choices, &mut results);
    results
}

/// Applies the graph's bidifferential operator for the linear bivector of
/// `g` to `(f1, f2)`: every aerial vertex contributes `f_ij^k x_k`, its first
/// slot differentiates the target of the first edge by `i` and the second by
/// `j`; ground vertices hold `f1` and `f2`. Aerial vertices of in-degree two
/// or more contribute zero (second derivative of a linear coefficient).
pub fn bidiff_apply(g: &LieAlgebra, graph: &AdmissibleGraph, f1: &SymPoly, f2: &SymPoly) -> SymPoly {
    bidiff_apply_impl(g, graph, f1, f2)
        .unwrap_or_else(|e| panic!("bidiff_apply: {e}"))
}

/// Like [`bidiff_apply`] but rejects graphs where an aerial vertex has
/// in-degree two or more instead of returning their exact zero.
pub fn bidiff_apply_strict(
    g: &LieAlgebra,
    graph: &AdmissibleGraph,
    f1: &SymPoly,
    f2: &SymPoly,
) -> Result<SymPoly, GraphError> {
    for v in 0..graph.aerial_count() {
        let indeg = graph.aerial_in_degree(v);
        if indeg >= 2 {
            return Err(GraphError::InDegreeTooHigh { vertex: v, indegree: indeg });
        }
    }
    bidiff_apply_impl(g, graph, f1, f2)
}

fn bidiff_apply_impl(
    g: &LieAlgebra,
    graph: &AdmissibleGraph,
    f1: &SymPoly,
    f2: &SymPoly,
) -> Result<SymPoly, GraphError> {
    if graph.ground_count() != 2 {
        return Err(GraphError::GroundCountMismatch { m: graph.ground_count() });
    }
    let n = graph.aerial_count();
    for v in 0..n {
        if graph.out_edges(v).len() != 2 {
            return Err(GraphError::OutDegreeMismatch { vertex: v });
        }
    }
    // nonzero structure entries (i, j, k, f_ij^k) selectable per vertex
    let entries = g.nonzero_entries();
    if n > 0 && entries.is_empty() {
        return Ok(SymPoly::zero());
    }

    let mut total = SymPoly::zero();
    let mut pick = vec![0usize; n];
    'outer: loop {
        // Each aerial vertex v is assigned (i_v, j_v, k_v, c_v).
        let assignment: Vec<&(usize, usize, usize, Rat)> =
            pick.iter().map(|&idx| &entries[idx]).collect();
        total = &total + &contract(graph, &assignment, f1, f2);

        // advance the mixed-radix counter
        for slot in 0..n {
            pick[slot] += 1;
            if pick[slot] < entries.len() {
                continue 'outer;
            }
            pick[slot] = 0;
        }
        break;
    }
    if n == 0 {
        // no aerial vertices: the operator is plain multiplication
        return Ok(f1 * f2);
    }
    Ok(total)
}

fn contract(
    graph: &AdmissibleGraph,
    assignment: &[&(usize, usize, usize, Rat)],
    f1: &SymPoly,
    f2: &SymPoly,
) -> SymPoly {
    let n = graph.aerial_count();
    // Collect the derivative indices hitting every vertex.
    let mut aerial_hits: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut ground_hits: Vec<Vec<usize>> = vec![Vec::new(); 2];
    for (v, entry) in assignment.iter().enumerate() {
        let (i, j) = (entry.0, entry.1);
        for (slot, target) in graph.out_edges(v).iter().enumerate() {
            let index = if slot == 0 { i } else { j };
            match *target {
                Target::Aerial(a) => aerial_hits[a].push(index),
                Target::Ground(gr) => ground_hits[gr].push(index),
            }
        }
    }

    let mut scalar = num::traits::One::one();
    let mut poly_factor = SymPoly::one();
    for (v, entry) in assignment.iter().enumerate() {
        let k = entry.2;
        scalar *= entry.3.clone();
        match aerial_hits[v].len() {
            0 => poly_factor = &poly_factor * &SymPoly::var(k),
            1 => {
                if aerial_hits[v][0] != k {
                    return SymPoly::zero();
                }
            }
            // second derivative of the linear coefficient x_k
            _ => return SymPoly::zero(),
        }
    }
    let mut d1 = f1.clone();
    for &i in &ground_hits[0] {
        d1 = d1.derivative(i);
        if d1.is_zero() {
            return SymPoly::zero();
        }
    }
    let mut d2 = f2.clone();
    for &j in &ground_hits[1] {
        d2 = d2.derivative(j);
        if d2.is_zero() {
            return SymPoly::zero();
        }
    }
    (&(&poly_factor * &d1) * &d2).scale(&scalar)
}

/// Result of contracting a vertex subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuotientResult {
    Graph(AdmissibleGraph),
    /// The contraction produced a multiple edge, a short loop, or an edge
    /// departing a ground vertex; such strata contribute nothing.
    Degenerate,
}

/// Vertex reference used to name contraction subsets.
pub type VertexRef = Target;

/// Shrinks the subset `a` to a single vertex: edges internal to `a` are
/// deleted, crossing edges re-attach to the merged vertex (placed at the
/// position of the smallest member, keeping slot order). Returns
/// [`QuotientResult::Degenerate`] when the result violates admissibility.
pub fn quotient_graph(graph: &AdmissibleGraph, a: &BTreeSet<VertexRef>) -> QuotientResult {
    assert!(!a.is_empty(), "contraction subset must be non-empty");
    let merged_is_ground = a.iter().any(|t| matches!(t, Target::Ground(_)));

    // New labels. Aerial vertices in `a` merge; the merged vertex sits at the
    // position of its smallest aerial member unless it becomes ground.
    let in_a = |t: &Target| a.contains(t);
    let mut aerial_map: Vec<Option<usize>> = vec![None; graph.n];
    let mut next = 0usize;
    let mut merged_aerial_id = None;
    for v in 0..graph.n {
        if in_a(&Target::Aerial(v)) {
            if merged_is_ground {
                continue;
            }
            if merged_aerial_id.is_none() {
                merged_aerial_id = Some(next);
                next += 1;
            }
            aerial_map[v] = merged_aerial_id;
        } else {
            aerial_map[v] = Some(next);
            next += 1;
        }
    }
    let new_n = next;

    // Ground vertices never merge away; the merged-ground case reuses the
    // smallest ground member as the representative.
    let merged_ground_id = a.iter().find_map(|t| match t {
        Target::Ground(gr) => Some(*gr),
        _ => None,
    });
    let map_target = |t: &Target| -> Target {
        if in_a(t) {
            if merged_is_ground {
                Target::Ground(merged_ground_id.unwrap())
            } else {
                Target::Aerial(merged_aerial_id.unwrap())
            }
        } else {
            match *t {
                Target::Aerial(v) => Target::Aerial(aerial_map[v].unwrap()),
                g => g,
            }
        }
    };

    let mut out: Vec<Vec<Target>> = vec![Vec::new(); new_n];
    for v in 0..graph.n {
        let src_in_a = in_a(&Target::Aerial(v));
        if src_in_a && merged_is_ground {
            // surviving edges would depart a ground vertex
            if graph.out_edges(v).iter().any(|t| !in_a(t)) {
                return QuotientResult::Degenerate;
            }
            continue;
        }
        let new_src = if src_in_a { merged_aerial_id.unwrap() } else { aerial_map[v].unwrap() };
        for t in graph.out_edges(v) {
            if src_in_a && in_a(t) {
                continue; // internal edge: deleted
            }
            let new_t = map_target(t);
            if new_t == Target::Aerial(new_src) {
                return QuotientResult::Degenerate; // short loop after collapse
            }
            out[new_src].push(new_t);
        }
    }
    for targets in &out {
        let set: BTreeSet<&Target> = targets.iter().collect();
        if set.len() != targets.len() {
            return QuotientResult::Degenerate;
        }
    }
    QuotientResult::Graph(AdmissibleGraph { n: new_n, m: graph.m, out })
}

/// Simple-component type in the two-external-vertex decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentType {
    /// Rooted tree, every vertex with two ordered out-edges and in-degree at
    /// most one; the root has in-degree zero.
    TreeI,
    /// Exactly one directed cycle with out-trees hanging off it (wheel with
    /// legs, possibly extended by trees).
    WheelII,
    /// A rooted tree whose root additionally receives the one edge emitted by
    /// an external vertex.
    TreeWithReturnIII,
}

/// Partition of the internal vertices of a graph (the last two vertices are
/// external) into maximal simple components with type labels; vertices of
/// unrecognized components land in `residue`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentReport {
    pub components: Vec<(BTreeSet<usize>, ComponentType)>,
    pub residue: BTreeSet<usize>,
}

/// Classifies the simple components of a graph in which the last two aerial
/// vertices are external (out-degree zero, except that one external vertex
/// may emit the single extra edge that marks a type-iii component).
pub fn classify_components(graph: &AdmissibleGraph) -> ComponentReport {
    assert_eq!(graph.ground_count(), 0, "classification expects ground-free graphs");
    assert!(graph.aerial_count() >= 2, "need the two external vertices");
    let n_int = graph.aerial_count() - 2;
    let externals = [n_int, n_int + 1];

    // union-find over internal vertices, connected through internal edges
    let mut parent: Vec<usize> = (0..n_int).collect();
    fn find(parent: &mut Vec<usize>, v: usize) -> usize {
        if parent[v] != v {
            let root = find(parent, parent[v]);
            parent[v] = root;
        }
        parent[v]
    }
    let mut internal_edges: Vec<(usize, usize)> = Vec::new();
    let mut external_roots: Vec<usize> = Vec::new(); // targets of external-emitted edges
    for (src, t) in graph.edges() {
        if let Target::Aerial(dst) = t {
            let src_ext = externals.contains(&src);
            let dst_ext = externals.contains(&dst);
            if src_ext && !dst_ext {
                external_roots.push(dst);
            } else if !src_ext && !dst_ext {
                internal_edges.push((src, dst));
                let (rs, rd) = (find(&mut parent, src), find(&mut parent, dst));
                if rs != rd {
                    parent[rs] = rd;
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for v in 0..n_int {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().insert(v);
    }

    let mut components = Vec::new();
    let mut residue = BTreeSet::new();
    for (_, verts) in groups {
        let k = verts.len();
        let edges: Vec<(usize, usize)> = internal_edges
            .iter()
            .filter(|(s, _)| verts.contains(s))
            .copied()
            .collect();
        let mut in_deg: BTreeMap<usize, usize> = verts.iter().map(|&v| (v, 0)).collect();
        for &(_, d) in &edges {
            *in_deg.get_mut(&d).unwrap() += 1;
        }
        let ext_in: Vec<usize> =
            external_roots.iter().filter(|r| verts.contains(r)).copied().collect();
        for &r in &ext_in {
            *in_deg.get_mut(&r).unwrap() += 1;
        }
        let ok_outdeg = verts.iter().all(|&v| graph.out_edges(v).len() == 2);
        let max_in = in_deg.values().max().copied().unwrap_or(0);

        let class = if !ok_outdeg || max_in > 1 {
            None
        } else if edges.len() == k - 1 {
            // arborescence; with an external edge into the root it is type iii
            if ext_in.len() == 1 {
                Some(ComponentType::TreeWithReturnIII)
            } else if ext_in.is_empty() {
                Some(ComponentType::TreeI)
            } else {
                None
            }
        } else if edges.len() == k && ext_in.is_empty() {
            // every vertex has exactly one incoming internal edge: a single
            // directed cycle with out-trees attached
            Some(ComponentType::WheelII)
        } else {
            None
        };
        match class {
            Some(c) => components.push((verts, c)),
            None => residue.extend(verts),
        }
    }
    ComponentReport { components, residue }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use num::traits::Zero;
    use proptest::prelude::*;

    fn a(v: usize) -> Target {
        Target::Aerial(v)
    }
    fn gr(v: usize) -> Target {
        Target::Ground(v)
    }

    #[test]
    fn validation_rejects_loops_and_multiedges() {
        assert!(matches!(
            AdmissibleGraph::new(1, 2, vec![vec![a(0), gr(0)]]),
            Err(GraphError::ShortLoop { .. })
        ));
        assert!(matches!(
            AdmissibleGraph::new(1, 2, vec![vec![gr(0), gr(0)]]),
            Err(GraphError::MultipleEdge { .. })
        ));
        assert!(AdmissibleGraph::new(1, 2, vec![vec![gr(0), gr(1)]]).is_ok());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_graphs(0, 2, 2, None).len(), 1);
        assert_eq!(enumerate_graphs(1, 2, 2, None).len(), 2);
        // edge count invariant
        for g in enumerate_graphs(2, 2, 2, Some(1)) {
            assert_eq!(g.edge_count(), 4);
        }
    }

    /// Independent brute-force generator: enumerate 0/1 adjacency matrices
    /// with out-degree 2 rows, then expand each into the two slot orders per
    /// vertex.
    fn brute_force_graphs(n: usize, max_in: Option<usize>) -> BTreeSet<AdmissibleGraph> {
        let verts: Vec<Target> = (0..n).map(a).chain((0..2).map(gr)).collect();
        let mut out = BTreeSet::new();
        let pairs_per_vertex: Vec<Vec<(Target, Target)>> = (0..n)
            .map(|v| {
                let mut pairs = Vec::new();
                for (i, t1) in verts.iter().enumerate() {
                    for t2 in verts.iter().skip(i + 1) {
                        if *t1 == a(v) || *t2 == a(v) {
                            continue;
                        }
                        pairs.push((*t1, *t2));
                    }
                }
                pairs
            })
            .collect();
        let mut pick = vec![0usize; n];
        'outer: loop {
            // expand unordered pairs into both slot orders
            let mut ordered_choices: Vec<Vec<Vec<Target>>> = Vec::new();
            for v in 0..n {
                let (t1, t2) = pairs_per_vertex[v][pick[v]];
                ordered_choices.push(vec![vec![t1, t2], vec![t2, t1]]);
            }
            let mut idx = vec![0usize; n];
            'inner: loop {
                let lists: Vec<Vec<Target>> =
                    (0..n).map(|v| ordered_choices[v][idx[v]].clone()).collect();
                if let Ok(g) = AdmissibleGraph::new(n, 2, lists) {
                    let ok = max_in
                        .map(|cap| (0..n).all(|v| g.aerial_in_degree(v) <= cap))
                        .unwrap_or(true);
                    if ok {
                        out.insert(g);
                    }
                }
                for slot in 0..n {
                    idx[slot] += 1;
                    if idx[slot] < 2 {
                        continue 'inner;
                    }
                    idx[slot] = 0;
                }
                break;
            }
            for slot in 0..n {
                pick[slot] += 1;
                if pick[slot] < pairs_per_vertex[slot].len() {
                    continue 'outer;
                }
                pick[slot] = 0;
            }
            break;
        }
        out
    }

    #[test]
    fn enumeration_matches_independent_generator() {
        for n in 0..=3 {
            let fast: BTreeSet<AdmissibleGraph> =
                enumerate_graphs(n, 2, 2, Some(1)).into_iter().collect();
            let brute = brute_force_graphs(n, Some(1));
            assert_eq!(fast, brute, "n = {n}");
        }
    }

    #[test]
    fn enumeration_matches_independent_generator_n4() {
        let fast: BTreeSet<AdmissibleGraph> =
            enumerate_graphs(4, 2, 2, Some(1)).into_iter().collect();
        let brute = brute_force_graphs(4, Some(1));
        assert_eq!(fast.len(), brute.len());
        assert_eq!(fast, brute);
    }

    #[test]
    fn text_format_round_trip() {
        let g: AdmissibleGraph = "2 2 ; 0:(1,g0) 1:(g0,g1)".parse().unwrap();
        assert_eq!(g.aerial_count(), 2);
        assert_eq!(g.to_string(), "2 2 ; 0:(1,g0) 1:(g0,g1)");
        let again: AdmissibleGraph = g.to_string().parse().unwrap();
        assert_eq!(again, g);
        assert!("2 2 ; 0:(0,g0)".parse::<AdmissibleGraph>().is_err());
        assert!("nonsense".parse::<AdmissibleGraph>().is_err());
    }

    #[test]
    fn bidiff_no_edges_is_multiplication() {
        let g = LieAlgebra::sl2();
        let graph = AdmissibleGraph::new(0, 2, vec![]).unwrap();
        let f1 = &SymPoly::var(0) * &SymPoly::var(1);
        let f2 = SymPoly::var(2);
        assert_eq!(bidiff_apply(&g, &graph, &f1, &f2), &f1 * &f2);
    }

    #[test]
    fn bidiff_single_vertex_is_poisson_bracket() {
        let g = LieAlgebra::sl2();
        let graph = AdmissibleGraph::new(1, 2, vec![vec![gr(0), gr(1)]]).unwrap();
        let f1 = &SymPoly::var(0) * &SymPoly::var(2);
        let f2 = &SymPoly::var(1) + &(&SymPoly::var(1) * &SymPoly::var(1));
        assert_eq!(bidiff_apply(&g, &graph, &f1, &f2), g.poisson_bracket(&f1, &f2));
    }

    #[test]
    fn bidiff_two_cycle_is_trace_pairing() {
        // v0 -> (v1, g0), v1 -> (v0, g1): contributes
        // sum f_{i a}^{k} f_{k b}^{i} (d_a f1)(d_b f2), a Killing-type pairing.
        let g = LieAlgebra::sl2();
        let graph =
            AdmissibleGraph::new(2, 2, vec![vec![a(1), gr(0)], vec![a(0), gr(1)]]).unwrap();
        for (p, q) in [(0, 1), (2, 2), (0, 0)] {
            let result = bidiff_apply(&g, &graph, &SymPoly::var(p), &SymPoly::var(q));
            // independent direct contraction
            let mut expected = Rat::zero();
            for i in 0..3 {
                for k in 0..3 {
                    expected += g.f(i, p, k) * g.f(k, q, i);
                }
            }
            assert_eq!(result, SymPoly::constant(expected), "pair ({p},{q})");
        }
    }

    #[test]
    fn bidiff_in_degree_two_vanishes_and_strict_errors() {
        // v0 and v1 both point at v2
        let g = LieAlgebra::sl2();
        let graph = AdmissibleGraph::new(
            3,
            2,
            vec![vec![a(2), gr(0)], vec![a(2), gr(1)], vec![gr(0), gr(1)]],
        )
        .unwrap();
        let f1 = &SymPoly::var(0) * &SymPoly::var(1);
        let f2 = &SymPoly::var(2) * &SymPoly::var(1);
        assert!(bidiff_apply(&g, &graph, &f1, &f2).is_zero());
        assert!(matches!(
            bidiff_apply_strict(&g, &graph, &f1, &f2),
            Err(GraphError::InDegreeTooHigh { vertex: 2, indegree: 2 })
        ));
    }

    #[test]
    fn bidiff_scales_with_structure_constant_power() {
        // scaling the bivector by t multiplies an n-vertex operator by t^n
        let g = LieAlgebra::sl2();
        let t = ratio(1, 3);
        let scaled = g.scaled(&t);
        let f1 = &SymPoly::var(0) * &SymPoly::var(1);
        let f2 = SymPoly::var(2);
        for graph in enumerate_graphs(2, 2, 2, Some(1)) {
            let plain = bidiff_apply(&g, &graph, &f1, &f2);
            let scaled_out = bidiff_apply(&scaled, &graph, &f1, &f2);
            assert_eq!(scaled_out, plain.scale(&(&t * &t)));
        }
    }

    #[test]
    fn quotient_identity_and_chain() {
        // chain v0 -> v1 -> g0 with extra ground edges
        let graph = AdmissibleGraph::new(
            2,
            2,
            vec![vec![a(1), gr(0)], vec![gr(0), gr(1)]],
        )
        .unwrap();
        // singleton contraction is isomorphic to the original
        let single: BTreeSet<Target> = [a(1)].into_iter().collect();
        match quotient_graph(&graph, &single) {
            QuotientResult::Graph(q) => assert_eq!(q, graph),
            QuotientResult::Degenerate => panic!("singleton must not degenerate"),
        }
        // contracting the chain edge shortens the chain: the merged vertex
        // keeps edges g0 (from v0), g0... which is a multiple edge -> pick a
        // chain without the shared ground target instead
        let graph2 = AdmissibleGraph::new(
            2,
            2,
            vec![vec![a(1), gr(0)], vec![gr(1), gr(0)]],
        )
        .unwrap();
        let both: BTreeSet<Target> = [a(0), a(1)].into_iter().collect();
        match quotient_graph(&graph2, &both) {
            QuotientResult::Graph(_) => panic!("double g0 edge must degenerate"),
            QuotientResult::Degenerate => {}
        }
        let graph3 = AdmissibleGraph::new(
            2,
            2,
            vec![vec![a(1), gr(0)], vec![gr(1), gr(1)]],
        );
        assert!(graph3.is_err()); // just confirming multi-edge is impossible here
    }

    #[test]
    fn quotient_chain_shortens() {
        // 3-chain: v0 -> v1 (and v0 -> g0), v1 -> v2 (and v1 -> g1),
        // v2 -> (g0, g1). Contract {v0, v1}.
        let graph = AdmissibleGraph::new(
            3,
            2,
            vec![vec![a(1), gr(0)], vec![a(2), gr(1)], vec![gr(0), gr(1)]],
        )
        .unwrap();
        let set: BTreeSet<Target> = [a(0), a(1)].into_iter().collect();
        match quotient_graph(&graph, &set) {
            QuotientResult::Graph(q) => {
                assert_eq!(q.aerial_count(), 2);
                assert_eq!(q.edge_count(), 5);
                // merged vertex keeps g0 (from v0) then v2, g1 (from v1)
                assert_eq!(q.out_edges(0), &[gr(0), a(1), gr(1)]);
            }
            QuotientResult::Degenerate => panic!("chain contraction must survive"),
        }
    }

    #[test]
    fn quotient_two_cycle_degenerates() {
        // v0 <-> v1 plus edges to a common ground target
        let graph = AdmissibleGraph::new(
            2,
            2,
            vec![vec![a(1), gr(0)], vec![a(0), gr(0)]],
        )
        .unwrap();
        let set: BTreeSet<Target> = [a(0), a(1)].into_iter().collect();
        assert_eq!(quotient_graph(&graph, &set), QuotientResult::Degenerate);
    }

    #[test]
    fn classify_tree_wheel_and_return() {
        // Type i: 4-vertex chain tree in a 6-vertex graph (externals 4, 5).
        let ext0 = 4;
        let ext1 = 5;
        let tree = AdmissibleGraph::new(
            6,
            0,
            vec![
                vec![a(1), a(ext0)],
                vec![a(2), a(ext1)],
                vec![a(3), a(ext0)],
                vec![a(ext0), a(ext1)],
                vec![],
                vec![],
            ],
        )
        .unwrap();
        let report = classify_components(&tree);
        assert_eq!(report.components.len(), 1);
        assert_eq!(report.components[0].1, ComponentType::TreeI);
        assert!(report.residue.is_empty());

        // Type iii: same tree with the first external emitting an edge to the root.
        let tree_return = AdmissibleGraph::new(
            6,
            0,
            vec![
                vec![a(1), a(ext0)],
                vec![a(2), a(ext1)],
                vec![a(3), a(ext0)],
                vec![a(ext0), a(ext1)],
                vec![a(0)],
                vec![],
            ],
        )
        .unwrap();
        let report = classify_components(&tree_return);
        assert_eq!(report.components.len(), 1);
        assert_eq!(report.components[0].1, ComponentType::TreeWithReturnIII);

        // Type ii: 3-cycle with a hanging tree vertex, externals 4, 5.
        let wheel = AdmissibleGraph::new(
            6,
            0,
            vec![
                vec![a(1), a(3)],
                vec![a(2), a(ext0)],
                vec![a(0), a(ext1)],
                vec![a(ext0), a(ext1)],
                vec![],
                vec![],
            ],
        )
        .unwrap();
        let report = classify_components(&wheel);
        assert_eq!(report.components.len(), 1);
        assert_eq!(report.components[0].1, ComponentType::WheelII);
    }

    #[test]
    fn classify_minimal_tree_and_disjoint_union() {
        // single internal vertex with both edges to the externals
        let minimal =
            AdmissibleGraph::new(3, 0, vec![vec![a(1), a(2)], vec![], vec![]]).unwrap();
        let report = classify_components(&minimal);
        assert_eq!(report.components.len(), 1);
        assert_eq!(report.components[0].1, ComponentType::TreeI);

        // disjoint union: a minimal tree and a 2-wheel, externals 3, 4
        let union = AdmissibleGraph::new(
            5,
            0,
            vec![
                vec![a(3), a(4)],
                vec![a(2), a(3)],
                vec![a(1), a(4)],
                vec![],
                vec![],
            ],
        )
        .unwrap();
        let report = classify_components(&union);
        let types: Vec<ComponentType> = report.components.iter().map(|(_, t)| *t).collect();
        assert!(types.contains(&ComponentType::TreeI));
        assert!(types.contains(&ComponentType::WheelII));
        assert!(report.residue.is_empty());
        // components partition the internal vertices
        let mut seen = BTreeSet::new();
        for (verts, _) in &report.components {
            for v in verts {
                assert!(seen.insert(*v), "components overlap");
            }
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn classification_covers_generated_trees_and_wheels() {
        // trees and wheels assembled mechanically up to 6 internal vertices:
        // chains of length k and pure cycles of length k
        for k in 1..=6usize {
            let ext0 = k;
            let ext1 = k + 1;
            let mut out = Vec::new();
            for v in 0..k {
                if v + 1 < k {
                    out.push(vec![a(v + 1), a(if v % 2 == 0 { ext0 } else { ext1 })]);
                } else {
                    out.push(vec![a(ext0), a(ext1)]);
                }
            }
            out.push(vec![]);
            out.push(vec![]);
            let tree = AdmissibleGraph::new(k + 2, 0, out).unwrap();
            let report = classify_components(&tree);
            assert_eq!(report.components.len(), 1, "chain {k}");
            assert_eq!(report.components[0].1, ComponentType::TreeI);
            assert!(report.residue.is_empty());
        }
        for k in 2..=6usize {
            let ext0 = k;
            let ext1 = k + 1;
            let mut out = Vec::new();
            for v in 0..k {
                out.push(vec![a((v + 1) % k), a(if v % 2 == 0 { ext0 } else { ext1 })]);
            }
            out.push(vec![]);
            out.push(vec![]);
            let wheel = AdmissibleGraph::new(k + 2, 0, out).unwrap();
            let report = classify_components(&wheel);
            assert_eq!(report.components.len(), 1, "cycle {k}");
            assert_eq!(report.components[0].1, ComponentType::WheelII);
            assert!(report.residue.is_empty());
        }
    }

    proptest! {
        #[test]
        fn canonical_form_is_relabeling_invariant(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let graphs = enumerate_graphs(3, 2, 2, None);
            let g = &graphs[rng.gen_range(0..graphs.len())];
            // random relabeling of aerial vertices
            let mut perm: Vec<usize> = (0..3).collect();
            for i in (1..3).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let relabeled = AdmissibleGraph::new(3, 2, g.relabel(&perm)).unwrap();
            prop_assert_eq!(g.canonical_form(), relabeled.canonical_form());
        }
    }

    #[test]
    fn bidiff_is_bilinear() {
        let g = LieAlgebra::heisenberg3();
        let graphs = enumerate_graphs(2, 2, 2, Some(1));
        let (p, q) = (SymPoly::var(0), &SymPoly::var(1) * &SymPoly::var(2));
        let r = SymPoly::var(2);
        let c = rat(3);
        for graph in graphs.iter().take(8) {
            let lhs = bidiff_apply(&g, graph, &(&p + &q.scale(&c)), &r);
            let rhs = &bidiff_apply(&g, graph, &p, &r)
                + &bidiff_apply(&g, graph, &q, &r).scale(&c);
            assert_eq!(lhs, rhs);
        }
    }
}
