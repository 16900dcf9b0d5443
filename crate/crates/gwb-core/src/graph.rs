//! Directed graphs on colored vertex sets.
//!
//! Three flavors of graphs appear throughout the crate: plane graphs on free
//! vertices only (`C`), flag graphs with free and collinear vertices (`CF_C`)
//! and half-plane flag graphs which additionally carry boundary vertices
//! (`CF_H`). An edge list is ordered; reordering edges changes the sign of a
//! graph inside a [`GraphSum`].

use crate::Rat;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex label {0}")]
    DuplicateLabel(u32),
    #[error("edge ({0},{1}) references an unknown vertex")]
    UnknownVertex(u32, u32),
    #[error("tadpole edge at vertex {0}")]
    Tadpole(u32),
    #[error("repeated edge ({0},{1})")]
    RepeatedEdge(u32, u32),
    #[error("flavor {0:?} forbids {1} vertices")]
    FlavorMismatch(Flavor, &'static str),
    #[error("enumeration candidate count {0} exceeds bound {1}")]
    EnumerationBound(u128, u64),
}

/// The three graph flavors, named after the configuration-space family each
/// graph set integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// Plane graphs: free vertices only, connected, no isolated vertices.
    C,
    /// Flag graphs in the plane: free + collinear vertices.
    #[serde(rename = "CF_C")]
    CfC,
    /// Flag graphs in the half-plane: free + collinear + boundary vertices.
    #[serde(rename = "CF_H")]
    CfH,
}

/// Which of the three label groups a vertex belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    Free,
    Collinear,
    Boundary,
}

/// Ordered, colored vertex labels. Labels are pairwise distinct across the
/// three groups; the global order is free < collinear < boundary, each group
/// in its stored order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexSet {
    pub flavor: Flavor,
    pub free: Vec<u32>,
    pub collinear: Vec<u32>,
    pub boundary: Vec<u32>,
}

impl VertexSet {
    pub fn new(
        flavor: Flavor,
        free: Vec<u32>,
        collinear: Vec<u32>,
        boundary: Vec<u32>,
    ) -> Result<Self, GraphError> {
        let vs = VertexSet { flavor, free, collinear, boundary };
        vs.validate()?;
        Ok(vs)
    }

    /// Plane vertex set on the given free labels.
    pub fn plane(free: Vec<u32>) -> Self {
        VertexSet { flavor: Flavor::C, free, collinear: vec![], boundary: vec![] }
    }

    pub fn flag_plane(free: Vec<u32>, collinear: Vec<u32>) -> Self {
        VertexSet { flavor: Flavor::CfC, free, collinear, boundary: vec![] }
    }

    pub fn flag_half_plane(free: Vec<u32>, collinear: Vec<u32>, boundary: Vec<u32>) -> Self {
        VertexSet { flavor: Flavor::CfH, free, collinear, boundary }
    }

    fn validate(&self) -> Result<(), GraphError> {
        let mut seen = std::collections::BTreeSet::new();
        for &l in self.labels() {
            if !seen.insert(l) {
                return Err(GraphError::DuplicateLabel(l));
            }
        }
        match self.flavor {
            Flavor::C => {
                if !self.collinear.is_empty() {
                    return Err(GraphError::FlavorMismatch(self.flavor, "collinear"));
                }
                if !self.boundary.is_empty() {
                    return Err(GraphError::FlavorMismatch(self.flavor, "boundary"));
                }
            }
            Flavor::CfC => {
                if !self.boundary.is_empty() {
                    return Err(GraphError::FlavorMismatch(self.flavor, "boundary"));
                }
            }
            Flavor::CfH => {}
        }
        Ok(())
    }

    /// All labels in the global order free < collinear < boundary.
    pub fn labels(&self) -> impl Iterator<Item = &u32> {
        self.free.iter().chain(&self.collinear).chain(&self.boundary)
    }

    pub fn len(&self) -> usize {
        self.free.len() + self.collinear.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group_of(&self, label: u32) -> Option<Group> {
        if self.free.contains(&label) {
            Some(Group::Free)
        } else if self.collinear.contains(&label) {
            Some(Group::Collinear)
        } else if self.boundary.contains(&label) {
            Some(Group::Boundary)
        } else {
            None
        }
    }

    /// Position of a label in the global order, if present.
    pub fn index_of(&self, label: u32) -> Option<usize> {
        self.labels().position(|&l| l == label)
    }
}

/// A directed graph: an ordered list of distinct directed edges (no tadpoles)
/// on a colored vertex set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedGraph {
    vertices: VertexSet,
    edges: Vec<(u32, u32)>,
}

impl DirectedGraph {
    pub fn new(vertices: VertexSet, edges: Vec<(u32, u32)>) -> Result<Self, GraphError> {
        vertices.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        for &(s, t) in &edges {
            if s == t {
                return Err(GraphError::Tadpole(s));
            }
            if vertices.index_of(s).is_none() || vertices.index_of(t).is_none() {
                return Err(GraphError::UnknownVertex(s, t));
            }
            if !seen.insert((s, t)) {
                return Err(GraphError::RepeatedEdge(s, t));
            }
        }
        Ok(DirectedGraph { vertices, edges })
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn flavor(&self) -> Flavor {
        self.vertices.flavor
    }

    /// Maximal edge subsets whose incident vertex sets are mutually disjoint,
    /// plus the vertices incident to no edge.
    pub fn connected_components(&self) -> Components {
        let n = self.vertices.len();
        let mut uf = UnionFind::new(n);
        for &(s, t) in &self.edges {
            let si = self.vertices.index_of(s).unwrap();
            let ti = self.vertices.index_of(t).unwrap();
            uf.union(si, ti);
        }
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &(s, _)) in self.edges.iter().enumerate() {
            let si = self.vertices.index_of(s).unwrap();
            by_root.entry(uf.find(si)).or_default().push(i);
        }
        let mut touched = vec![false; n];
        for &(s, t) in &self.edges {
            touched[self.vertices.index_of(s).unwrap()] = true;
            touched[self.vertices.index_of(t).unwrap()] = true;
        }
        let isolated = self
            .vertices
            .labels()
            .enumerate()
            .filter(|&(i, _)| !touched[i])
            .map(|(_, &l)| l)
            .collect();
        Components { edge_sets: by_root.into_values().collect(), isolated }
    }

    /// True when some pair of vertices is joined by edges in both directions.
    pub fn has_opposite_double_edge(&self) -> bool {
        let set: std::collections::BTreeSet<_> = self.edges.iter().copied().collect();
        self.edges.iter().any(|&(s, t)| set.contains(&(t, s)))
    }

    /// Flavor-dependent admissibility.
    ///
    /// * `C`: connected, every vertex incident to an edge, at least 2
    ///   vertices, no pair of opposite edges (the plane angle forms of the two
    ///   directions coincide, and the graph classes are counted without double
    ///   edges).
    /// * `CF_C`: at least one collinear vertex, `p + q >= 2`, no connected
    ///   edge component supported entirely on free vertices, no opposite
    ///   double edges.
    /// * `CF_H`: the `CF_C`-style component condition, no edge sourced at a
    ///   boundary vertex, and the arity bounds `2k+m+n >= 1` (`m >= 1`) or
    ///   `2k+n >= 2` (`m = 0`). Opposite double edges are kept: the two
    ///   half-plane angle forms differ.
    pub fn is_admissible(&self) -> bool {
        let comps = self.connected_components();
        match self.flavor() {
            Flavor::C => {
                self.vertices.len() >= 2
                    && comps.edge_sets.len() == 1
                    && comps.isolated.is_empty()
                    && !self.has_opposite_double_edge()
            }
            Flavor::CfC => {
                let p = self.vertices.free.len();
                let q = self.vertices.collinear.len();
                q >= 1
                    && p + q >= 2
                    && !self.has_free_only_component(&comps)
                    && !self.has_opposite_double_edge()
            }
            Flavor::CfH => {
                let k = self.vertices.free.len();
                let m = self.vertices.collinear.len();
                let n = self.vertices.boundary.len();
                let arity_ok = if m >= 1 { 2 * k + m + n >= 1 } else { 2 * k + n >= 2 };
                arity_ok
                    && !self.has_free_only_component(&comps)
                    && !self
                        .edges
                        .iter()
                        .any(|&(s, _)| self.vertices.group_of(s) == Some(Group::Boundary))
            }
        }
    }

    fn has_free_only_component(&self, comps: &Components) -> bool {
        comps.edge_sets.iter().any(|set| {
            set.iter().all(|&i| {
                let (s, t) = self.edges[i];
                self.vertices.group_of(s) == Some(Group::Free)
                    && self.vertices.group_of(t) == Some(Group::Free)
            })
        })
    }

    /// Sorts the edge list by the fixed total order on (source, target) index
    /// pairs and returns the sorted graph with the parity of the sorting
    /// permutation.
    pub fn canonical_form(&self) -> (DirectedGraph, i8) {
        let key = |&(s, t): &(u32, u32)| {
            (self.vertices.index_of(s).unwrap(), self.vertices.index_of(t).unwrap())
        };
        let mut idx: Vec<usize> = (0..self.edges.len()).collect();
        idx.sort_by_key(|&i| key(&self.edges[i]));
        let sign = permutation_sign(&idx);
        let edges = idx.iter().map(|&i| self.edges[i]).collect();
        (DirectedGraph { vertices: self.vertices.clone(), edges }, sign)
    }

    pub fn is_canonical(&self) -> bool {
        let key = |&(s, t): &(u32, u32)| {
            (self.vertices.index_of(s).unwrap(), self.vertices.index_of(t).unwrap())
        };
        self.edges.windows(2).all(|w| key(&w[0]) < key(&w[1]))
    }
}

/// Result of [`DirectedGraph::connected_components`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Edge index subsets, one per component.
    pub edge_sets: Vec<Vec<usize>>,
    /// Vertices incident to no edge.
    pub isolated: Vec<u32>,
}

/// Parity of the permutation `i -> perm[i]`.
pub fn permutation_sign(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i8;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Formal linear combination of canonical graphs with exact rational
/// coefficients, modulo the edge-permutation sign rule.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphSum {
    terms: BTreeMap<DirectedGraph, Rat>,
}

impl GraphSum {
    pub fn new() -> Self {
        GraphSum::default()
    }

    /// Adds `coeff * g`, canonicalizing the edge order first. An odd edge
    /// permutation negates the coefficient before merging.
    pub fn add(&mut self, g: &DirectedGraph, coeff: Rat) {
        let (canon, sign) = g.canonical_form();
        let c = if sign < 0 { -coeff } else { coeff };
        let entry = self.terms.entry(canon).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            let (canon, _) = g.canonical_form();
            self.terms.remove(&canon);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DirectedGraph, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, g: &DirectedGraph) -> Rat {
        let (canon, sign) = g.canonical_form();
        let c = self.terms.get(&canon).cloned().unwrap_or_else(Rat::zero);
        if sign < 0 {
            -c
        } else {
            c
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Enumerates one canonical representative per equivalence class of admissible
/// graphs with `edge_count` edges on `vertices`, optionally post-filtered.
///
/// Since a graph is an injective list of edges, equivalence classes under edge
/// reordering are exactly edge *subsets*; the representative carries the
/// canonical edge order. `bound` guards against candidate explosion.
pub fn enumerate_graphs(
    vertices: &VertexSet,
    edge_count: usize,
    filter: Option<&dyn Fn(&DirectedGraph) -> bool>,
    bound: u64,
) -> Result<Vec<DirectedGraph>, GraphError> {
    let labels: Vec<u32> = vertices.labels().copied().collect();
    let mut pairs = Vec::new();
    for &s in &labels {
        if vertices.flavor == Flavor::CfH && vertices.group_of(s) == Some(Group::Boundary) {
            continue;
        }
        for &t in &labels {
            if s != t {
                pairs.push((s, t));
            }
        }
    }
    // Pairs come out sorted in the global index order, so each subset is
    // already a canonical edge list.
    let count = binomial(pairs.len() as u128, edge_count as u128);
    if count > bound as u128 {
        return Err(GraphError::EnumerationBound(count, bound));
    }
    let mut out = Vec::new();
    if edge_count > pairs.len() {
        return Ok(out);
    }
    let mut subset: Vec<usize> = (0..edge_count).collect();
    loop {
        let edges: Vec<(u32, u32)> = subset.iter().map(|&i| pairs[i]).collect();
        let g = DirectedGraph { vertices: vertices.clone(), edges };
        if g.is_admissible() && filter.map_or(true, |f| f(&g)) {
            out.push(g);
        }
        if !next_combination(&mut subset, pairs.len()) {
            break;
        }
    }
    Ok(out)
}

/// Advances `subset` to the next k-subset of `0..n` in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

// ---------------------------------------------------------------------------
// JSON round trip

#[derive(Serialize, Deserialize)]
struct GraphJson {
    flavor: Flavor,
    free: Vec<u32>,
    collinear: Vec<u32>,
    boundary: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl Serialize for DirectedGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphJson {
            flavor: self.vertices.flavor,
            free: self.vertices.free.clone(),
            collinear: self.vertices.collinear.clone(),
            boundary: self.vertices.boundary.clone(),
            edges: self.edges.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DirectedGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = GraphJson::deserialize(d)?;
        let vs = VertexSet::new(j.flavor, j.free, j.collinear, j.boundary)
            .map_err(serde::de::Error::custom)?;
        DirectedGraph::new(vs, j.edges).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for DirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[", self.flavor())?;
        for (i, (s, t)) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}->{}", s, t)?;
        }
        write!(f, "]")
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let r = self.find(self.parent[i]);
            self.parent[i] = r;
        }
        self.parent[i]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}
