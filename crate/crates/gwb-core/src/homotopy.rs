//! Codimension-one boundary strata of the configuration-space families,
//! Stokes identity checks over them, verification of the induced
//! homotopy-algebra relations, and twisting by Maurer-Cartan elements.
//!
//! A top-degree closed form integrated over the boundary of a compactified
//! stratum gives zero; the boundary factors into products of smaller strata,
//! so the weights of the factor graphs satisfy quadratic identities. The
//! checker assembles those sums from a weight source (the exact table or
//! Monte Carlo estimates) and verifies that they vanish within tolerance.

use crate::graph::{DirectedGraph, Flavor, GraphError, VertexSet};
use crate::hochschild::{differential, AInfinity, Cochain, CochainError};
use crate::polyvector::{
    product, schouten, MultiOperator, PolyError, PolyVector, SlotKind, Space,
};
use crate::weights::{integrate_weight, known_weight, GaugeSlice, WeightCache, WeightError};
use crate::{rat, Rat};
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeSet;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum HomotopyError {
    #[error("graph has {edges} edges; a Stokes check needs dimension {dim} minus one")]
    NotCodimensionOne { edges: usize, dim: usize },
    #[error("Stokes assembly covers plane and flag-plane flavors only")]
    UnsupportedFlavor,
    #[error("no weight available for {0}")]
    MissingWeight(String),
    #[error("element is not Maurer-Cartan: [pi,pi] != 0")]
    NotMaurerCartan,
    #[error("missing structure component {0}")]
    MissingComponent(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Cochain(#[from] CochainError),
}

// ---------------------------------------------------------------------------
// Boundary strata

/// The three kinds of codimension-one degeneration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratumFamily {
    /// A cluster of free points collapses to a free point.
    FreeCollapse,
    /// Free points and a consecutive run of collinear points collapse to a
    /// point of the collinear line.
    LineCollapse,
    /// Free points, a collinear run, and a consecutive run of boundary
    /// points collapse to a boundary point of the half-plane.
    BoundaryCollapse,
}

/// One codimension-one stratum: the collapsing cluster (`inner`), the
/// ambient factor with the cluster contracted to the minimum label
/// (`outer`), and for boundary collapses without boundary points, the gap of
/// the outer boundary order receiving the contracted point.
#[derive(Debug, Clone)]
pub struct BoundaryTerm {
    pub family: StratumFamily,
    pub inner: VertexSet,
    pub outer: VertexSet,
    pub gap: Option<usize>,
    /// Start index of the collapsing collinear run in the ambient collinear
    /// order (`LineCollapse` and `BoundaryCollapse` with a nonempty run).
    pub block_start: Option<usize>,
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

/// Consecutive runs `order[i..j]`; optionally including the empty run.
fn runs(order: &[u32], allow_empty: bool) -> Vec<(usize, Vec<u32>)> {
    let mut out = Vec::new();
    if allow_empty {
        out.push((0, vec![]));
    }
    for i in 0..order.len() {
        for j in i + 1..=order.len() {
            out.push((i, order[i..j].to_vec()));
        }
    }
    out
}

fn contract_free(host: &VertexSet, cluster: &[u32]) -> (VertexSet, u32) {
    let c = *cluster.iter().min().expect("nonempty cluster");
    let mut free: Vec<u32> = host.free.iter().copied().filter(|l| !cluster.contains(l)).collect();
    free.push(c);
    free.sort_unstable();
    (
        VertexSet {
            flavor: host.flavor,
            free,
            collinear: host.collinear.clone(),
            boundary: host.boundary.clone(),
        },
        c,
    )
}

/// The complete list of codimension-one boundary factorizations of the
/// compactified stratum on the given vertex data.
pub fn boundary_strata(host: &VertexSet) -> Vec<BoundaryTerm> {
    let mut out = Vec::new();
    let free_subsets = subsets(&host.free);
    let (p, q, n) = (host.free.len(), host.collinear.len(), host.boundary.len());

    // free clusters of at least two points collapse in the bulk
    if host.flavor != Flavor::C || p > 2 {
        for s in free_subsets.iter().filter(|s| s.len() >= 2) {
            if host.flavor == Flavor::C && s.len() == p {
                continue;
            }
            let (outer, _) = contract_free(host, s);
            out.push(BoundaryTerm {
                family: StratumFamily::FreeCollapse,
                inner: VertexSet::plane(s.clone()),
                outer,
                gap: None,
                block_start: None,
            });
        }
    }
    if host.flavor == Flavor::C {
        return out;
    }

    // free points plus a collinear run collapse to a line point
    for s in &free_subsets {
        for (start, t) in runs(&host.collinear, false) {
            if 2 * s.len() + t.len() < 2 {
                continue;
            }
            let whole = s.len() == p && t.len() == q;
            if whole && (host.flavor == Flavor::CfC || n == 0) {
                continue;
            }
            let c = s.iter().chain(&t).min().copied().expect("nonempty");
            let free: Vec<u32> = host.free.iter().copied().filter(|l| !s.contains(l)).collect();
            let mut collinear = Vec::with_capacity(q - t.len() + 1);
            collinear.extend_from_slice(&host.collinear[..start]);
            collinear.push(c);
            collinear.extend_from_slice(&host.collinear[start + t.len()..]);
            out.push(BoundaryTerm {
                family: StratumFamily::LineCollapse,
                inner: VertexSet::flag_plane(s.clone(), t.clone()),
                outer: VertexSet {
                    flavor: host.flavor,
                    free,
                    collinear,
                    boundary: host.boundary.clone(),
                },
                gap: None,
                block_start: Some(start),
            });
        }
    }
    if host.flavor == Flavor::CfC {
        return out;
    }

    // free points, a collinear run, and a boundary run collapse to a
    // boundary point of the half-plane
    for s in &free_subsets {
        for (t_start, t) in runs(&host.collinear, true) {
            for (u_start, u) in runs(&host.boundary, true) {
                if t.is_empty() && 2 * s.len() + u.len() < 2 {
                    continue;
                }
                if t.is_empty() && s.is_empty() && u.is_empty() {
                    continue;
                }
                if s.len() == p && t.len() == q && u.len() == n {
                    continue;
                }
                let inner = VertexSet::flag_half_plane(s.clone(), t.clone(), u.clone());
                let c = inner.labels().min().copied().expect("nonempty");
                let free: Vec<u32> =
                    host.free.iter().copied().filter(|l| !s.contains(l)).collect();
                let mut collinear = host.collinear.clone();
                if !t.is_empty() {
                    collinear.drain(t_start..t_start + t.len());
                }
                let make = |boundary: Vec<u32>| VertexSet {
                    flavor: Flavor::CfH,
                    free: free.clone(),
                    collinear: collinear.clone(),
                    boundary,
                };
                if u.is_empty() {
                    // the contracted point lands at one of the n+1 gaps
                    for gap in 0..=n {
                        let mut boundary = host.boundary.clone();
                        boundary.insert(gap, c);
                        out.push(BoundaryTerm {
                            family: StratumFamily::BoundaryCollapse,
                            inner: inner.clone(),
                            outer: make(boundary),
                            gap: Some(gap),
                            block_start: if t.is_empty() { None } else { Some(t_start) },
                        });
                    }
                } else {
                    let mut boundary = Vec::with_capacity(n - u.len() + 1);
                    boundary.extend_from_slice(&host.boundary[..u_start]);
                    boundary.push(c);
                    boundary.extend_from_slice(&host.boundary[u_start + u.len()..]);
                    out.push(BoundaryTerm {
                        family: StratumFamily::BoundaryCollapse,
                        inner,
                        outer: make(boundary),
                        gap: None,
                        block_start: if t.is_empty() { None } else { Some(t_start) },
                    });
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Weight sources

/// Supplies `(value, stderr)` weights of canonical top-degree graphs.
pub trait WeightSource {
    fn weight(&mut self, g: &DirectedGraph) -> Result<(f64, f64), HomotopyError>;
}

/// The exact table only; errors when a weight is not determined.
pub struct KnownWeights;

impl WeightSource for KnownWeights {
    fn weight(&mut self, g: &DirectedGraph) -> Result<(f64, f64), HomotopyError> {
        match known_weight(g) {
            Some(w) => Ok((w.to_f64().unwrap_or(0.0), 0.0)),
            None => Err(HomotopyError::MissingWeight(format!("{g}"))),
        }
    }
}

/// Monte Carlo / quadrature weights, optionally consulting the exact table
/// first and an append-only cache.
pub struct McWeights {
    pub samples: u64,
    pub seed: u64,
    pub use_table: bool,
    pub cache: Option<WeightCache>,
}

impl McWeights {
    pub fn new(samples: u64, seed: u64) -> Self {
        McWeights { samples, seed, use_table: true, cache: None }
    }
}

impl WeightSource for McWeights {
    fn weight(&mut self, g: &DirectedGraph) -> Result<(f64, f64), HomotopyError> {
        if self.use_table {
            if let Some(w) = known_weight(g) {
                return Ok((w.to_f64().unwrap_or(0.0), 0.0));
            }
        }
        let slice = GaugeSlice::for_graph(g.vertices())?;
        if let Some(cache) = &self.cache {
            return Ok(cache.weight(g, &slice, self.samples, self.seed)?);
        }
        let est = integrate_weight(g, &slice, self.samples, self.seed)?;
        Ok((est.value, est.stderr))
    }
}

// ---------------------------------------------------------------------------
// Stokes checks

#[derive(Debug, Clone, Serialize)]
pub struct StokesReport {
    pub graph: String,
    pub terms: usize,
    pub total: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl StokesReport {
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "relation": "stokes",
            "graph": self.graph,
            "terms": self.terms,
            "total": self.total,
            "stderr": self.stderr,
            "tolerance": self.tolerance,
            "status": if self.pass { "pass" } else { "fail" },
        })
        .to_string()
    }
}

/// Orientation sign of a boundary stratum relative to the product of the
/// calibrated factor charts. The free-collapse constants and the alternating
/// line-collapse rule are calibrated once on identities whose weights are
/// all exactly known, and then held fixed.
fn kappa(term: &BoundaryTerm, host_flavor: Flavor) -> f64 {
    match term.family {
        StratumFamily::FreeCollapse => {
            if host_flavor == Flavor::C {
                1.0
            } else {
                -1.0
            }
        }
        StratumFamily::LineCollapse => {
            let pos = term.block_start.expect("line collapse has a block");
            let t = term.inner.collinear.len();
            if (pos * (t + 1) + t) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        StratumFamily::BoundaryCollapse => 1.0,
    }
}

/// Verifies the quadratic Stokes identity of a closed graph form of degree
/// one less than its stratum dimension: the signed sum of products of factor
/// weights over all boundary strata vanishes.
pub fn stokes_check(
    g: &DirectedGraph,
    source: &mut dyn WeightSource,
    tolerance: f64,
) -> Result<StokesReport, HomotopyError> {
    if g.flavor() == Flavor::CfH {
        return Err(HomotopyError::UnsupportedFlavor);
    }
    let host_slice = GaugeSlice::for_graph(g.vertices())?;
    let dim = host_slice.dimension();
    if g.edge_count() + 1 != dim {
        return Err(HomotopyError::NotCodimensionOne { edges: g.edge_count(), dim });
    }
    let mut total = 0.0f64;
    let mut var = 0.0f64;
    let mut terms = 0usize;
    for stratum in boundary_strata(g.vertices()) {
        let inner_labels: BTreeSet<u32> = stratum.inner.labels().copied().collect();
        let contracted = *inner_labels.iter().min().expect("nonempty cluster");
        let mut inner_edges = Vec::new();
        let mut outer_edges = Vec::new();
        let mut inversions = 0usize;
        let mut inner_seen = 0usize;
        for &(s, t) in g.edges() {
            if inner_labels.contains(&s) && inner_labels.contains(&t) {
                inner_edges.push((s, t));
                inner_seen += 1;
            } else {
                let map = |l: u32| if inner_labels.contains(&l) { contracted } else { l };
                outer_edges.push((map(s), map(t)));
                // edges of the cluster must move left past this outer edge
                inversions += inner_seen;
            }
        }
        let inner = DirectedGraph::new(stratum.inner.clone(), inner_edges)?;
        let Ok(outer) = DirectedGraph::new(stratum.outer.clone(), outer_edges) else {
            // a repeated edge after contraction wedges equal angle forms
            continue;
        };
        let top = |h: &DirectedGraph| {
            GaugeSlice::for_graph(h.vertices())
                .map(|s| s.dimension() == h.edge_count())
                .unwrap_or(false)
        };
        if !top(&inner) || !top(&outer) {
            continue;
        }
        let (inner_c, si) = inner.canonical_form();
        let (outer_c, so) = outer.canonical_form();
        let (wi, ei) = source.weight(&inner_c)?;
        let (wo, eo) = source.weight(&outer_c)?;
        let sign = kappa(&stratum, g.flavor())
            * if inversions % 2 == 0 { 1.0 } else { -1.0 }
            * (si as i32 * so as i32) as f64;
        total += sign * wi * wo;
        var += (wi * eo).powi(2) + (wo * ei).powi(2);
        terms += 1;
    }
    let stderr = var.sqrt();
    Ok(StokesReport {
        graph: format!("{g}"),
        terms,
        total,
        stderr,
        tolerance,
        pass: total.abs() <= tolerance + 3.0 * stderr,
    })
}

// ---------------------------------------------------------------------------
// Structure components

/// The multilinear components of the induced homotopy structures, indexed by
/// their arities, as far as they are pinned down exactly.
pub struct StructureComponents {
    pub space: Space,
    /// bracket components: arity -> operator
    pub lambda: std::collections::BTreeMap<usize, MultiOperator>,
    /// product components on polyvectors
    pub nu: std::collections::BTreeMap<usize, MultiOperator>,
    /// product components on functions
    pub mu: std::collections::BTreeMap<usize, MultiOperator>,
    /// mixed components (p polyvector slots acting on q polyvector slots)
    pub v: std::collections::BTreeMap<(usize, usize), MultiOperator>,
    /// components with function outputs (k polyvector, n function slots)
    pub u: std::collections::BTreeMap<(usize, usize), MultiOperator>,
    /// three-colored components
    pub z: std::collections::BTreeMap<(usize, usize, usize), MultiOperator>,
}

/// The trilinear correction operator with one acting slot: 1/24 times the
/// eight-fold sum of triple contractions connecting the first slot to each
/// of the other three in either direction.
pub fn exotic_trilinear(space: &Space) -> MultiOperator {
    let _ = space;
    MultiOperator::new(
        vec![SlotKind::TPoly; 4],
        -3,
        Arc::new(move |args: &[PolyVector]| {
            let space = args[0].space().clone();
            let vs = VertexSet::flag_plane(vec![1], vec![2, 3, 4]);
            let mut out = PolyVector::zero(&space);
            for dirs in 0u8..8 {
                // edge list in reverse application order: the contraction
                // with slot 2 acts first
                let edge = |j: u32, bit: u8| if dirs & bit == 0 { (1, j) } else { (j, 1) };
                let edges = vec![edge(4, 4), edge(3, 2), edge(2, 1)];
                let g = DirectedGraph::new(vs.clone(), edges).expect("valid star");
                out = out.add(&crate::polyvector::phi_apply(&g, args).expect("arity 4"));
            }
            out.scale(&rat(1, 24))
        }),
    )
}

/// The multiderivation operator with `n` function slots: the graph with one
/// free vertex and an ordered edge to each of `n` boundary vertices, scaled
/// by `1/n!`.
fn multiderivation(n: usize) -> MultiOperator {
    let mut slots = vec![SlotKind::TPoly];
    slots.extend(std::iter::repeat(SlotKind::Functions).take(n));
    MultiOperator::new(
        slots,
        -(n as i64),
        Arc::new(move |args: &[PolyVector]| {
            let boundary: Vec<u32> = (2..2 + n as u32).collect();
            let vs = VertexSet::flag_half_plane(vec![1], vec![], boundary.clone());
            // descending edge list so the first argument is contracted first
            let edges: Vec<(u32, u32)> = boundary.iter().rev().map(|&b| (1, b)).collect();
            let g = DirectedGraph::new(vs, edges).expect("valid star");
            let mut fact = Rat::one();
            for k in 2..=n as i64 {
                fact *= rat(k, 1);
            }
            crate::polyvector::phi_apply(&g, args)
                .expect("arity n+1")
                .scale(&(Rat::one() / fact))
        }),
    )
}

impl StructureComponents {
    /// The components the weight evaluations determine exactly.
    pub fn known(space: &Space) -> Self {
        use std::collections::BTreeMap;
        let mut lambda = BTreeMap::new();
        lambda.insert(
            2,
            MultiOperator::new(
                vec![SlotKind::TPoly; 2],
                -1,
                Arc::new(|args: &[PolyVector]| schouten(&args[0], &args[1])),
            ),
        );
        let wedge = MultiOperator::new(
            vec![SlotKind::TPoly; 2],
            0,
            Arc::new(|args: &[PolyVector]| product(&args[0], &args[1])),
        );
        let mut nu = BTreeMap::new();
        nu.insert(2, wedge.clone());
        let mut mu = BTreeMap::new();
        mu.insert(
            2,
            MultiOperator::new(
                vec![SlotKind::Functions; 2],
                0,
                Arc::new(|args: &[PolyVector]| product(&args[0], &args[1])),
            ),
        );
        let mut v = BTreeMap::new();
        v.insert(
            (1, 1),
            MultiOperator::new(
                vec![SlotKind::TPoly; 2],
                -1,
                Arc::new(|args: &[PolyVector]| schouten(&args[0], &args[1])),
            ),
        );
        v.insert((1, 3), exotic_trilinear(space));
        let mut u = BTreeMap::new();
        let mut z = BTreeMap::new();
        for n in 0..=space.dim.min(4) {
            u.insert((1, n), multiderivation(n));
            z.insert((0, 1, n), multiderivation(n));
        }
        StructureComponents { space: space.clone(), lambda, nu, mu, v, u, z }
    }

    /// Whether a mixed component is known to vanish identically.
    pub fn v_known_zero(p: usize, q: usize) -> bool {
        (p + q) % 2 == 1 || (q == 1 && p >= 2) || q == 2
    }
}

// ---------------------------------------------------------------------------
// Relation verification

#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    pub relation: String,
    pub arity: usize,
    pub status: String,
    pub residual_norm: f64,
    pub tolerance: f64,
    pub seeds: Vec<u64>,
}

impl RelationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

fn coeff_norm(p: &PolyVector) -> f64 {
    p.monomials()
        .map(|(_, c)| c.to_f64().map(f64::abs).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// A random polynomial in the coordinates with small integer coefficients.
fn random_function(space: &Space, rng: &mut ChaCha8Rng) -> PolyVector {
    let mut out = PolyVector::zero(space);
    for _ in 0..3 {
        let mut m = PolyVector::constant(space, rat(rng.gen_range(-3i64..=3), 1));
        for _ in 0..rng.gen_range(0..=2) {
            let a = rng.gen_range(0..space.dim);
            m = product(&m, &PolyVector::x(space, a).expect("coordinate"));
        }
        out = out.add(&m);
    }
    out
}

/// A random homogeneous element of the given direction degree.
fn random_homogeneous(space: &Space, rng: &mut ChaCha8Rng, psi_degree: usize) -> PolyVector {
    let mut out = random_function(space, rng);
    let mut used: Vec<usize> = (0..space.dim).collect();
    for k in 0..psi_degree.min(space.dim) {
        let pick = rng.gen_range(0..used.len() - k.min(used.len() - 1));
        let a = used.remove(pick.min(used.len() - 1));
        out = product(&out, &PolyVector::psi(space, a).expect("direction"));
    }
    out
}

/// Symbolic verification of a structure relation on randomized inputs.
pub fn verify_relation(
    s: &StructureComponents,
    relation: &str,
) -> Result<RelationReport, HomotopyError> {
    let seeds: Vec<u64> = (101..=105).collect();
    let space = Space::new(s.space.dim).truncated(40);
    let mut residual = 0.0f64;
    let arity;
    match relation {
        "lambda-jacobi" => {
            arity = 3;
            let br = s
                .lambda
                .get(&2)
                .ok_or_else(|| HomotopyError::MissingComponent("lambda_2".into()))?;
            for &seed in &seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = { let deg = rng.gen_range(0..=2); random_homogeneous(&space, &mut rng, deg) };
                let b = { let deg = rng.gen_range(0..=2); random_homogeneous(&space, &mut rng, deg) };
                let c = { let deg = rng.gen_range(0..=2); random_homogeneous(&space, &mut rng, deg) };
                let (da, db) = (a.degree().unwrap_or(0), b.degree().unwrap_or(0));
                let lhs = br.apply(&[a.clone(), br.apply(&[b.clone(), c.clone()])?])?;
                let r1 = br.apply(&[br.apply(&[a.clone(), b.clone()])?, c.clone()])?;
                let r2 = br.apply(&[b, br.apply(&[a, c])?])?;
                let s1 = if (da + 1).rem_euclid(2) == 0 { Rat::one() } else { -Rat::one() };
                let s2 = if (da * db + da + db + 1).rem_euclid(2) == 0 {
                    Rat::one()
                } else {
                    -Rat::one()
                };
                let defect = lhs.sub(&r1.scale(&s1)).sub(&r2.scale(&s2));
                residual = residual.max(coeff_norm(&defect));
            }
        }
        "lambda-higher-vanish" => {
            arity = 3;
            // every top-degree three-point plane graph has exact weight zero
            let vs = VertexSet::plane(vec![1, 2, 3]);
            let graphs = crate::graph::enumerate_graphs(&vs, 3, None, 100_000)?;
            if graphs.is_empty() {
                return Err(HomotopyError::MissingComponent("plane graphs".into()));
            }
            for g in &graphs {
                match known_weight(g) {
                    Some(w) if w == rat(0, 1) => {}
                    _ => residual = f64::INFINITY,
                }
            }
        }
        "nu-associativity" | "mu-associativity" => {
            arity = 3;
            let m = if relation.starts_with("nu") { &s.nu[&2] } else { &s.mu[&2] };
            for &seed in &seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = if relation.starts_with("nu") { 1 } else { 0 };
                let a = { let deg = rng.gen_range(0..=psi); random_homogeneous(&space, &mut rng, deg) };
                let b = { let deg = rng.gen_range(0..=psi); random_homogeneous(&space, &mut rng, deg) };
                let c = { let deg = rng.gen_range(0..=psi); random_homogeneous(&space, &mut rng, deg) };
                let l = m.apply(&[m.apply(&[a.clone(), b.clone()])?, c.clone()])?;
                let r = m.apply(&[a, m.apply(&[b, c])?])?;
                residual = residual.max(coeff_norm(&l.sub(&r)));
            }
        }
        "v11-derivation" => {
            arity = 3;
            let ad = s
                .v
                .get(&(1, 1))
                .ok_or_else(|| HomotopyError::MissingComponent("v_{1,1}".into()))?;
            for &seed in &seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = { let deg = rng.gen_range(0..=2); random_homogeneous(&space, &mut rng, deg) };
                let a = { let deg = rng.gen_range(0..=2); random_homogeneous(&space, &mut rng, deg) };
                let b = { let deg = rng.gen_range(0..=2); random_homogeneous(&space, &mut rng, deg) };
                let (dx, da) = (x.degree().unwrap_or(0), a.degree().unwrap_or(0));
                let lhs = ad.apply(&[x.clone(), product(&a, &b)])?;
                let r1 = product(&ad.apply(&[x.clone(), a.clone()])?, &b);
                let r2 = product(&a, &ad.apply(&[x, b])?);
                let sgn = if ((dx + 1) * da).rem_euclid(2) == 0 { Rat::one() } else { -Rat::one() };
                let defect = lhs.sub(&r1).sub(&r2.scale(&sgn));
                residual = residual.max(coeff_norm(&defect));
            }
        }
        "u1-chain-map" => {
            arity = 3;
            let m = AInfinity::multiplication(&space);
            for &seed in &seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let gamma = random_homogeneous(&space, &mut rng, 0)
                    .add(&random_homogeneous(&space, &mut rng, 1))
                    .add(&random_homogeneous(&space, &mut rng, 2));
                let h = crate::duflo::hkr(&gamma);
                let d = differential(&m, &h);
                for k in 1..=3usize {
                    let args: Vec<PolyVector> =
                        (0..k).map(|_| random_function(&space, &mut rng)).collect();
                    residual = residual.max(coeff_norm(&d.eval(&args)));
                }
            }
        }
        other => return Err(HomotopyError::UnknownRelation(other.to_string())),
    }
    Ok(RelationReport {
        relation: relation.to_string(),
        arity,
        status: if residual == 0.0 { "pass" } else { "fail" }.to_string(),
        residual_norm: residual,
        tolerance: 0.0,
        seeds,
    })
}

// ---------------------------------------------------------------------------
// Twisting

/// The arity components of a product structure twisted by a Maurer-Cartan
/// element, organized by formal-parameter power.
pub struct TwistedStructure {
    space: Space,
    pub hbar_order: usize,
    /// components[(arity, power)] = coefficient operator of the power
    components: std::collections::BTreeMap<(usize, usize), MultiOperator>,
}

impl TwistedStructure {
    pub fn component(&self, arity: usize, power: usize) -> Option<&MultiOperator> {
        self.components.get(&(arity, power))
    }

    /// All components of one formal-parameter power assembled as a cochain.
    pub fn level(&self, power: usize) -> Cochain {
        let mut out = Cochain::zero(&self.space);
        for ((arity, k), op) in &self.components {
            if *k != power {
                continue;
            }
            let op = op.clone();
            let piece = Cochain::from_multilinear(
                &self.space,
                *arity,
                2 - *arity as i64,
                Arc::new(move |args: &[PolyVector]| op.apply(args).expect("arity checked")),
            );
            out = out.add(&piece);
        }
        out
    }

    /// The given power of the square of the twisted structure under the
    /// brace composition; Maurer-Cartan means every power vanishes.
    pub fn mc_defect(&self, power: usize) -> Result<Cochain, HomotopyError> {
        let mut out = Cochain::zero(&self.space);
        for k1 in 0..=power {
            let l1 = self.level(k1);
            let l2 = self.level(power - k1);
            if l1.is_empty() || l2.is_empty() {
                continue;
            }
            out = out.add(&crate::hochschild::brace(&l1, &[l2])?);
        }
        Ok(out)
    }
}

/// Twists the product structure by a Maurer-Cartan polyvector: arity-q
/// components pick up `(1/p!) V_{p,q}(pi^p, -)` at each power p of the
/// formal parameter, through the requested order.
pub fn twist(
    s: &StructureComponents,
    pi: &PolyVector,
    hbar_order: usize,
) -> Result<TwistedStructure, HomotopyError> {
    if !schouten(pi, pi).is_zero() {
        return Err(HomotopyError::NotMaurerCartan);
    }
    let space = pi.space().clone();
    let mut components = std::collections::BTreeMap::new();
    let wedge = s
        .nu
        .get(&2)
        .ok_or_else(|| HomotopyError::MissingComponent("nu_2".into()))?
        .clone();
    components.insert((2usize, 0usize), wedge);
    let max_arity = 4usize;
    for k in 1..=hbar_order {
        for q in 1..=max_arity {
            if let Some(vkq) = s.v.get(&(k, q)) {
                let vkq = vkq.clone();
                let pi = pi.clone();
                let mut fact = Rat::one();
                for j in 2..=k as i64 {
                    fact *= rat(j, 1);
                }
                let scale = Rat::one() / fact;
                let op = MultiOperator::new(
                    vec![SlotKind::TPoly; q],
                    vkq.degree + 2 * k as i64,
                    Arc::new(move |args: &[PolyVector]| {
                        let mut full: Vec<PolyVector> = std::iter::repeat(pi.clone())
                            .take(k)
                            .collect();
                        full.extend_from_slice(args);
                        vkq.apply(&full).expect("arity checked").scale(&scale)
                    }),
                );
                components.insert((q, k), op);
            } else if !StructureComponents::v_known_zero(k, q) {
                return Err(HomotopyError::MissingComponent(format!("v_{{{k},{q}}}")));
            }
        }
    }
    Ok(TwistedStructure { space, hbar_order, components })
}
