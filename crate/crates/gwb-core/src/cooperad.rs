//! Full-subgraph embeddings, quotient graphs, the ordering sign and the
//! cocomposition maps of the three graph cooperads, together with the dual
//! operadic composition.
//!
//! A cocomposition term contracts an embedded subgraph to a single new vertex;
//! the color of the new vertex is dictated by the flavor of the contracted
//! factor (free for a plane factor, collinear for a plane-flag factor,
//! boundary for a half-plane factor). Terms whose factor graphs fall outside
//! the admissible graph sets are dropped.

use crate::graph::{DirectedGraph, Flavor, GraphSum, Group, VertexSet};
use crate::Rat;
use num_traits::One;
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CooperadError {
    #[error("contraction creates a tadpole at the new vertex")]
    Tadpole,
    #[error("contraction creates a repeated edge ({0},{1})")]
    RepeatedEdge(u32, u32),
    #[error("half-plane factor with empty boundary block needs an insertion gap")]
    MissingGap,
    #[error("vertex {0} is not a vertex of the outer graph")]
    UnknownVertex(u32),
    #[error("insertion color mismatch at vertex {0}")]
    ColorMismatch(u32),
    #[error("labels of the factors overlap on {0}")]
    LabelClash(u32),
    #[error("candidate count {0} exceeds bound {1}")]
    ResourceGuard(u64, u64),
}

/// An embedding of `sub` as a subgraph of `host`: an order-preserving
/// injection of edge indices such that the host edge list restricted to the
/// image reproduces the sub's edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub host: DirectedGraph,
    pub sub: DirectedGraph,
    /// Host edge positions of the sub's edges, strictly increasing.
    pub edge_injection: Vec<usize>,
}

/// Contracted graph together with the parity of the edge-order bijection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientResult {
    pub quotient: DirectedGraph,
    pub sign: i8,
}

/// Index of the contiguous block `subset` occupies inside `order`, if it is a
/// connected subset of the order.
fn contiguous_block(order: &[u32], subset: &BTreeSet<u32>) -> Option<usize> {
    if subset.is_empty() {
        return Some(0);
    }
    let positions: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|(_, l)| subset.contains(l))
        .map(|(i, _)| i)
        .collect();
    if positions.len() != subset.len() {
        return None;
    }
    let start = positions[0];
    positions
        .iter()
        .enumerate()
        .all(|(k, &p)| p == start + k)
        .then_some(start)
}

/// All order-preserving edge injections of `sub` into `host` satisfying the
/// commuting condition. Since edges are pairwise distinct pairs there is at
/// most one; the list form mirrors the cocomposition sum.
pub fn find_embeddings(host: &DirectedGraph, sub: &DirectedGraph) -> Vec<Embedding> {
    let hv = host.vertices();
    let sv = sub.vertices();
    let free_ok = sv.free.iter().all(|l| hv.free.contains(l));
    let coll: BTreeSet<u32> = sv.collinear.iter().copied().collect();
    let bdry: BTreeSet<u32> = sv.boundary.iter().copied().collect();
    if !free_ok
        || contiguous_block(&hv.collinear, &coll).is_none()
        || contiguous_block(&hv.boundary, &bdry).is_none()
    {
        return vec![];
    }
    let mut positions = Vec::with_capacity(sub.edge_count());
    let mut from = 0;
    for e in sub.edges() {
        match host.edges()[from..].iter().position(|h| h == e) {
            Some(off) => {
                positions.push(from + off);
                from += off + 1;
            }
            None => return vec![],
        }
    }
    vec![Embedding { host: host.clone(), sub: sub.clone(), edge_injection: positions }]
}

/// Parity of the bijection relating the host's edge order to the reference
/// order (sub edges first, then the remaining edges), so that a sub occupying
/// a prefix of the host order has sign +1.
fn ordering_sign(edge_count: usize, sub_positions: &[usize]) -> i8 {
    let in_sub: Vec<bool> = {
        let mut v = vec![false; edge_count];
        for &p in sub_positions {
            v[p] = true;
        }
        v
    };
    let mut inversions = 0usize;
    for i in 0..edge_count {
        for j in i + 1..edge_count {
            if !in_sub[i] && in_sub[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Contracts the embedded subgraph to a single vertex labelled by the minimum
/// of the contracted labels. The new vertex is colored after the sub's flavor.
///
/// `boundary_gap` selects the insertion position in the outer boundary order
/// when a half-plane factor with no boundary vertices is contracted; it is
/// ignored otherwise.
pub fn quotient_with_gap(
    host: &DirectedGraph,
    e: &Embedding,
    boundary_gap: Option<usize>,
) -> Result<QuotientResult, CooperadError> {
    let hv = host.vertices();
    let sv = e.sub.vertices();
    let sub_labels: BTreeSet<u32> = sv.labels().copied().collect();
    let v = *sub_labels.iter().next().expect("sub graph has at least one vertex");

    let mut free: Vec<u32> = hv.free.iter().copied().filter(|l| !sub_labels.contains(l)).collect();
    let mut collinear: Vec<u32> =
        hv.collinear.iter().copied().filter(|l| !sub_labels.contains(l)).collect();
    let mut boundary: Vec<u32> =
        hv.boundary.iter().copied().filter(|l| !sub_labels.contains(l)).collect();
    match e.sub.flavor() {
        Flavor::C => {
            free.push(v);
            free.sort_unstable();
        }
        Flavor::CfC => {
            let block: BTreeSet<u32> = sv.collinear.iter().copied().collect();
            let start = contiguous_block(&hv.collinear, &block).expect("embedding checked");
            collinear.insert(start, v);
        }
        Flavor::CfH => {
            if sv.boundary.is_empty() {
                let gap = boundary_gap.ok_or(CooperadError::MissingGap)?;
                boundary.insert(gap, v);
            } else {
                let block: BTreeSet<u32> = sv.boundary.iter().copied().collect();
                let start = contiguous_block(&hv.boundary, &block).expect("embedding checked");
                boundary.insert(start, v);
            }
        }
    }
    let vertices = VertexSet::new(hv.flavor, free, collinear, boundary)
        .expect("quotient vertex set is valid");

    let in_sub: BTreeSet<usize> = e.edge_injection.iter().copied().collect();
    let mut edges = Vec::new();
    for (i, &(s, t)) in host.edges().iter().enumerate() {
        if in_sub.contains(&i) {
            continue;
        }
        let s = if sub_labels.contains(&s) { v } else { s };
        let t = if sub_labels.contains(&t) { v } else { t };
        if s == t {
            return Err(CooperadError::Tadpole);
        }
        if edges.contains(&(s, t)) {
            return Err(CooperadError::RepeatedEdge(s, t));
        }
        edges.push((s, t));
    }
    let quotient = DirectedGraph::new(vertices, edges).expect("quotient edges validated");
    let sign = ordering_sign(host.edge_count(), &e.edge_injection);
    Ok(QuotientResult { quotient, sign })
}

/// [`quotient_with_gap`] without a boundary insertion gap.
pub fn quotient(host: &DirectedGraph, e: &Embedding) -> Result<QuotientResult, CooperadError> {
    quotient_with_gap(host, e, None)
}

/// One cocomposition term: the contracted outer factor (as a signed sum, so
/// canonical-order bookkeeping is explicit) tensor the inner factor.
#[derive(Debug, Clone)]
pub struct CocompositionTerm {
    pub left: GraphSum,
    pub right: DirectedGraph,
}

/// The full cooperadic cocomposition of an admissible graph: one term per
/// embedding whose inner and outer factors are both admissible in one of the
/// flavor-typed target signatures. The inner factor of each term is canonical;
/// the sign carries the edge-ordering parity and both canonicalization signs.
pub fn cocompose(g: &DirectedGraph) -> Vec<CocompositionTerm> {
    let mut terms = Vec::new();
    for (sub, gap) in candidate_factors(g) {
        let embeddings = find_embeddings(g, &sub);
        let Some(emb) = embeddings.first() else { continue };
        if !sub.is_admissible() {
            continue;
        }
        let Ok(q) = quotient_with_gap(g, emb, gap) else { continue };
        if !q.quotient.is_admissible() {
            continue;
        }
        let (sub_canon, s2) = sub.canonical_form();
        let mut left = GraphSum::new();
        let coeff = Rat::one() * Rat::from_integer((q.sign as i64 * s2 as i64).into());
        left.add(&q.quotient, coeff);
        terms.push(CocompositionTerm { left, right: sub_canon });
    }
    terms
}

/// Enumerates the candidate inner factors of `g` for every cocomposition
/// signature of its flavor, together with the boundary gap when the factor is
/// a half-plane graph with no boundary vertices.
fn candidate_factors(g: &DirectedGraph) -> Vec<(DirectedGraph, Option<usize>)> {
    let gv = g.vertices();
    let mut out = Vec::new();
    let free_subsets = subsets(&gv.free);
    let coll_blocks = blocks(&gv.collinear, false);
    let coll_blocks_or_empty = blocks(&gv.collinear, true);
    let bdry_blocks = blocks(&gv.boundary, false);

    let push = |vertices: VertexSet, gap: Option<usize>, out: &mut Vec<_>| {
        if vertices.is_empty() {
            return;
        }
        let labels: BTreeSet<u32> = vertices.labels().copied().collect();
        let edges: Vec<(u32, u32)> = g
            .edges()
            .iter()
            .copied()
            .filter(|&(s, t)| labels.contains(&s) && labels.contains(&t))
            .collect();
        if let Ok(sub) = DirectedGraph::new(vertices, edges) {
            out.push((sub, gap));
        }
    };

    match g.flavor() {
        Flavor::C => {
            for f in &free_subsets {
                if f.len() >= 2 {
                    push(VertexSet::plane(f.clone()), None, &mut out);
                }
            }
        }
        Flavor::CfC => {
            for f in &free_subsets {
                if f.len() >= 2 {
                    push(VertexSet::plane(f.clone()), None, &mut out);
                }
                for q in &coll_blocks {
                    if f.len() + q.len() >= 2 {
                        push(VertexSet::flag_plane(f.clone(), q.clone()), None, &mut out);
                    }
                }
            }
        }
        Flavor::CfH => {
            for f in &free_subsets {
                if f.len() >= 2 {
                    push(VertexSet::plane(f.clone()), None, &mut out);
                }
                for q in &coll_blocks {
                    if f.len() + q.len() >= 2 {
                        push(VertexSet::flag_plane(f.clone(), q.clone()), None, &mut out);
                    }
                }
                for t in &coll_blocks_or_empty {
                    for u in &bdry_blocks {
                        push(
                            VertexSet::flag_half_plane(f.clone(), t.clone(), u.clone()),
                            None,
                            &mut out,
                        );
                    }
                    // a factor with no boundary vertices lands at one of the
                    // n+1 gaps in the outer boundary order
                    for gap in 0..=gv.boundary.len() {
                        push(
                            VertexSet::flag_half_plane(f.clone(), t.clone(), vec![]),
                            Some(gap),
                            &mut out,
                        );
                    }
                }
            }
        }
    }
    out
}

fn subsets(labels: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(1 << labels.len());
    for mask in 0u32..(1 << labels.len()) {
        out.push(
            labels
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask & (1 << i) != 0)
                .map(|(_, &l)| l)
                .collect(),
        );
    }
    out
}

fn blocks(order: &[u32], allow_empty: bool) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if allow_empty {
        out.push(vec![]);
    }
    for i in 0..order.len() {
        for j in i + 1..=order.len() {
            out.push(order[i..j].to_vec());
        }
    }
    out
}

/// The dual operadic composition: the signed sum of all admissible host
/// graphs whose cocomposition at `at_vertex` yields `g1 (x) g2`.
///
/// Labels of `g2` must be disjoint from the labels of `g1` other than
/// `at_vertex`; the contracted vertex of every produced host carries the
/// minimum label of `g2`, so round trips through [`cocompose`] relabel
/// `at_vertex` accordingly.
pub fn operad_compose(
    g1: &DirectedGraph,
    at_vertex: u32,
    g2: &DirectedGraph,
    bound: u64,
) -> Result<GraphSum, CooperadError> {
    let v_group = g1
        .vertices()
        .group_of(at_vertex)
        .ok_or(CooperadError::UnknownVertex(at_vertex))?;
    let unit = g2.vertices().len() == 1 && g2.edge_count() == 0;
    if !unit {
        let want = match g2.flavor() {
            Flavor::C => Group::Free,
            Flavor::CfC => Group::Collinear,
            Flavor::CfH => Group::Boundary,
        };
        if v_group != want {
            return Err(CooperadError::ColorMismatch(at_vertex));
        }
    }
    for &l in g2.vertices().labels() {
        if l != at_vertex && g1.vertices().index_of(l).is_some() {
            return Err(CooperadError::LabelClash(l));
        }
    }

    let g1v = g1.vertices();
    let g2v = g2.vertices();
    let g2_labels: Vec<u32> = g2v.labels().copied().collect();

    // endpoints of g1 edges incident to the grafting vertex
    let mut slots = 0usize;
    for &(s, t) in g1.edges() {
        slots += usize::from(s == at_vertex) + usize::from(t == at_vertex);
    }
    let gaps = if !unit && v_group == Group::Boundary && !g2v.collinear.is_empty() {
        g1v.collinear.len() + 1
    } else {
        1
    };
    let candidates = (g2_labels.len() as u64)
        .checked_pow(slots as u32)
        .and_then(|c| c.checked_mul(gaps as u64))
        .unwrap_or(u64::MAX);
    if candidates > bound {
        return Err(CooperadError::ResourceGuard(candidates, bound));
    }

    let mut result = GraphSum::new();
    for gap in 0..gaps {
        let host_vs = match (unit, v_group) {
            (true, _) => {
                // grafting the one-vertex unit just relabels at_vertex
                let relabel = |l: &u32| if *l == at_vertex { g2_labels[0] } else { *l };
                let mut free: Vec<u32> = g1v.free.iter().map(relabel).collect();
                free.sort_unstable();
                VertexSet::new(
                    g1v.flavor,
                    free,
                    g1v.collinear.iter().map(relabel).collect(),
                    g1v.boundary.iter().map(relabel).collect(),
                )
                .expect("relabelled vertex set")
            }
            (false, Group::Free) => {
                let mut free: Vec<u32> =
                    g1v.free.iter().copied().filter(|&l| l != at_vertex).collect();
                free.extend(&g2v.free);
                free.sort_unstable();
                VertexSet::new(g1v.flavor, free, g1v.collinear.clone(), g1v.boundary.clone())
                    .expect("host vertex set")
            }
            (false, Group::Collinear) => {
                let mut free = g1v.free.clone();
                free.extend(&g2v.free);
                free.sort_unstable();
                let pos = g1v.collinear.iter().position(|&l| l == at_vertex).unwrap();
                let mut collinear = g1v.collinear.clone();
                collinear.splice(pos..pos + 1, g2v.collinear.iter().copied());
                VertexSet::new(g1v.flavor, free, collinear, g1v.boundary.clone())
                    .expect("host vertex set")
            }
            (false, Group::Boundary) => {
                let mut free = g1v.free.clone();
                free.extend(&g2v.free);
                free.sort_unstable();
                let mut collinear = g1v.collinear.clone();
                collinear.splice(gap..gap, g2v.collinear.iter().copied());
                let pos = g1v.boundary.iter().position(|&l| l == at_vertex).unwrap();
                let mut boundary = g1v.boundary.clone();
                boundary.splice(pos..pos + 1, g2v.boundary.iter().copied());
                VertexSet::new(g1v.flavor, free, collinear, boundary).expect("host vertex set")
            }
        };

        // enumerate reattachments of the v-incident endpoints
        let mut attach = vec![0usize; slots];
        loop {
            let mut edge_set: Vec<(u32, u32)> = Vec::new();
            let mut slot = 0usize;
            let mut clash = false;
            let mut g1_images = Vec::with_capacity(g1.edge_count());
            for &(s, t) in g1.edges() {
                let s2 = if s == at_vertex {
                    let l = g2_labels[attach[slot]];
                    slot += 1;
                    l
                } else {
                    s
                };
                let t2 = if t == at_vertex {
                    let l = g2_labels[attach[slot]];
                    slot += 1;
                    l
                } else {
                    t
                };
                if edge_set.contains(&(s2, t2)) {
                    clash = true;
                    break;
                }
                edge_set.push((s2, t2));
                g1_images.push((s2, t2));
            }
            if !clash {
                for &e in g2.edges() {
                    if edge_set.contains(&e) {
                        clash = true;
                        break;
                    }
                    edge_set.push(e);
                }
            }
            if !clash {
                if let Ok(host) = DirectedGraph::new(host_vs.clone(), edge_set.clone()) {
                    // the coefficient is computed against the canonical edge
                    // order, which is also the order GraphSum keys on
                    let (host, _) = host.canonical_form();
                    if host.is_admissible() {
                        let coeff = composition_coefficient(&host, &g1_images, g2);
                        result.add(&host, Rat::from_integer((coeff as i64).into()));
                    }
                }
            }
            // next attachment tuple
            let mut i = slots;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                attach[i] += 1;
                if attach[i] < g2_labels.len() {
                    break;
                }
                attach[i] = 0;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if slots == 0 || i == usize::MAX {
                break;
            }
        }
    }
    Ok(result)
}

/// Sign of the cocomposition term of `host` that reproduces the given factor
/// pair: ordering parity times the two permutation signs aligning the factor
/// edge lists.
fn composition_coefficient(
    host: &DirectedGraph,
    g1_images: &[(u32, u32)],
    g2: &DirectedGraph,
) -> i8 {
    let positions_of = |edges: &[(u32, u32)]| -> Vec<usize> {
        edges
            .iter()
            .map(|e| host.edges().iter().position(|h| h == e).expect("edge present"))
            .collect()
    };
    let p1 = positions_of(g1_images);
    let p2 = positions_of(g2.edges());
    // parity of the bijection [d1]+[d2] -> [d] relative to (sub, quotient)
    let mut sub_sorted = p2.clone();
    sub_sorted.sort_unstable();
    let eps = ordering_sign(host.edge_count(), &sub_sorted);
    let s1 = block_sign(&p1);
    let s2 = block_sign(&p2);
    eps * s1 * s2
}

/// Parity of the permutation sorting `positions` ascending.
fn block_sign(positions: &[usize]) -> i8 {
    let mut idx: Vec<usize> = (0..positions.len()).collect();
    idx.sort_by_key(|&i| positions[i]);
    crate::graph::permutation_sign(&idx)
}

/// Basis pairing `<sum, g>`: the coefficient of `g` in `sum`, with the edge
/// permutation sign.
pub fn pairing(sum: &GraphSum, g: &DirectedGraph) -> Rat {
    sum.coeff(g)
}
