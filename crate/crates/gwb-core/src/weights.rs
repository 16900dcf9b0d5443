//! Numerical weight integrals of graphs over gauge-fixed configuration
//! strata, plus a table of exactly known weights.
//!
//! Each graph flavor comes with a family of configuration strata: free points
//! in the plane modulo translation and dilation; free points plus an ordered
//! row of collinear points; and free points, a collinear row, and an ordered
//! row of boundary points in the upper half-plane modulo horizontal
//! translation and dilation. A gauge slice is an explicit chart that hits
//! every group orbit of the open stratum exactly once; the weight of a graph
//! whose edge count equals the stratum dimension is the integral of the
//! wedge of its normalized edge-angle forms over that chart.

use crate::graph::{DirectedGraph, Flavor, Group, VertexSet};
use crate::Rat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WeightError {
    #[error("graph has {edges} edges but the slice has dimension {dim}")]
    DegreeMismatch { edges: usize, dim: usize },
    #[error("slice flavor does not match the graph")]
    FlavorMismatch,
    #[error("unsupported vertex data for a gauge slice: {0}")]
    BadLabels(String),
    #[error("cache i/o: {0}")]
    Cache(String),
}

/// Complex number with hand-rolled arithmetic (only +, −, ×, ÷, arg needed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }
    pub fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    pub fn conj(self) -> Self {
        C64::new(self.re, -self.im)
    }
    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }
    fn add(self, o: C64) -> Self {
        C64::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: C64) -> Self {
        C64::new(self.re - o.re, self.im - o.im)
    }
    fn div(self, o: C64) -> Self {
        let d = o.norm_sq();
        C64::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
}

/// The four chart families, one per stratum type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceKind {
    /// Free points in the plane; x₁ = 0, x₂ on the unit circle.
    Plane { l: usize },
    /// Free points and a collinear row on the real axis; c₁ = 0 and either
    /// c₂ = 1 (q ≥ 2) or the first free point on the unit circle (q = 1).
    FlagPlane { p: usize, q: usize },
    /// Interior points and a boundary row (no collinear row); b₁ = 0 and
    /// either b₂ = 1 (n ≥ 2) or the first interior point at height 1.
    HalfPlane { m: usize, n: usize },
    /// Interior points, a collinear row at positive height, and a boundary
    /// row; b₁ = 0, and dilation fixes b₂ = 1 (n ≥ 2) or the height (n ≤ 1).
    FlagHalfPlane { k: usize, m: usize, n: usize },
}

/// A gauge-fixed chart over the open stratum of a graph's configuration
/// space. `variant` 0 is the default gauge; variant 1 is an alternative
/// gauge for the plane families, used to test gauge independence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeSlice {
    pub kind: SliceKind,
    pub variant: u8,
    labels: Vec<u32>,
    groups: Vec<Group>,
}

/// Positions of all configuration points together with the partial
/// derivatives with respect to every chart coordinate.
struct ChartPoint {
    pos: Vec<C64>,
    /// grad[point][coord] = ∂z_point/∂u_coord
    grad: Vec<Vec<C64>>,
}

/// Maps (0,1) onto the real line; returns (t, dt/du).
fn line(u: f64) -> (f64, f64) {
    let t = (PI * (u - 0.5)).tan();
    (t, PI * (1.0 + t * t))
}

/// Maps (0,1) onto the positive half-line; returns (g, dg/du).
fn ray(u: f64) -> (f64, f64) {
    let g = (PI * u / 2.0).tan();
    (g, PI / 2.0 * (1.0 + g * g))
}

impl GaugeSlice {
    pub fn for_graph(vertices: &VertexSet) -> Result<GaugeSlice, WeightError> {
        GaugeSlice::for_graph_variant(vertices, 0)
    }

    pub fn for_graph_variant(vertices: &VertexSet, variant: u8) -> Result<GaugeSlice, WeightError> {
        let (kf, m, n) = (
            vertices.free.len(),
            vertices.collinear.len(),
            vertices.boundary.len(),
        );
        let kind = match vertices.flavor {
            Flavor::C => SliceKind::Plane { l: kf },
            Flavor::CfC => SliceKind::FlagPlane { p: kf, q: m },
            Flavor::CfH if m == 0 => SliceKind::HalfPlane { m: kf, n },
            Flavor::CfH => SliceKind::FlagHalfPlane { k: kf, m, n },
        };
        let mut labels: Vec<u32> = vertices.free.clone();
        labels.extend(&vertices.collinear);
        labels.extend(&vertices.boundary);
        let mut groups = vec![Group::Free; kf];
        groups.extend(std::iter::repeat(Group::Collinear).take(m));
        groups.extend(std::iter::repeat(Group::Boundary).take(n));
        let slice = GaugeSlice { kind, variant, labels, groups };
        if variant > 0 && !matches!(kind, SliceKind::Plane { .. } | SliceKind::FlagPlane { .. }) {
            return Err(WeightError::BadLabels(
                "alternative gauge exists only for plane strata".into(),
            ));
        }
        if slice.dimension_checked().is_none() {
            return Err(WeightError::BadLabels(format!("{kind:?}")));
        }
        Ok(slice)
    }

    fn dimension_checked(&self) -> Option<usize> {
        let d = match self.kind {
            SliceKind::Plane { l } => {
                if l < 2 {
                    return None;
                }
                2 * l - 3
            }
            SliceKind::FlagPlane { p, q } => {
                if q < 1 || p + q < 2 || (q == 1 && p == 0) {
                    return None;
                }
                if self.variant == 1 && p == 0 {
                    return None;
                }
                2 * p + q - 2
            }
            SliceKind::HalfPlane { m, n } => {
                if 2 * m + n < 2 {
                    return None;
                }
                2 * m + n - 2
            }
            SliceKind::FlagHalfPlane { k, m, n } => {
                if m == 0 {
                    return None;
                }
                2 * k + m + n - 1
            }
        };
        Some(d)
    }

    /// Dimension of the open stratum (the number of chart coordinates).
    pub fn dimension(&self) -> usize {
        self.dimension_checked().expect("validated at construction")
    }

    pub fn name(&self) -> String {
        let v = if self.variant == 0 { String::new() } else { format!("-alt{}", self.variant) };
        match self.kind {
            SliceKind::Plane { l } => format!("plane-{l}{v}"),
            SliceKind::FlagPlane { p, q } => format!("flag-plane-{p}-{q}{v}"),
            SliceKind::HalfPlane { m, n } => format!("half-plane-{m}-{n}{v}"),
            SliceKind::FlagHalfPlane { k, m, n } => format!("flag-half-plane-{k}-{m}-{n}{v}"),
        }
    }

    fn uses_halfplane_angles(&self) -> bool {
        matches!(self.kind, SliceKind::HalfPlane { .. } | SliceKind::FlagHalfPlane { .. })
    }

    /// Evaluates the chart at box coordinates `u`, producing positions and
    /// their gradients. Points are ordered free, collinear, boundary.
    fn chart(&self, u: &[f64]) -> ChartPoint {
        let dim = self.dimension();
        assert_eq!(u.len(), dim);
        let npts = self.labels.len();
        let mut pos = vec![C64::zero(); npts];
        let mut grad = vec![vec![C64::zero(); dim]; npts];
        let mut c = 0usize; // next chart coordinate
        match self.kind {
            SliceKind::Plane { l } => {
                // variant 0: x₁ = 0, x₂ = e^{2πiθ}; variant 1: roles swapped
                let (fixed, circle) = if self.variant == 0 { (0, 1) } else { (1, 0) };
                pos[fixed] = C64::zero();
                let th = 2.0 * PI * u[c];
                pos[circle] = C64::new(th.cos(), th.sin());
                grad[circle][c] = C64::new(-th.sin() * 2.0 * PI, th.cos() * 2.0 * PI);
                c += 1;
                for j in 2..l {
                    let (x, dx) = line(u[c]);
                    let (y, dy) = line(u[c + 1]);
                    pos[j] = C64::new(x, y);
                    grad[j][c] = C64::new(dx, 0.0);
                    grad[j][c + 1] = C64::new(0.0, dy);
                    c += 2;
                }
            }
            SliceKind::FlagPlane { p, q } => {
                let col = p; // index of the first collinear point
                pos[col] = C64::zero();
                let mut free_start = 0;
                if self.variant == 0 && q >= 2 {
                    pos[col + 1] = C64::new(1.0, 0.0);
                    let mut prev = 1.0;
                    for j in 2..q {
                        let (g, dg) = ray(u[c]);
                        prev += g;
                        pos[col + j] = C64::new(prev, 0.0);
                        // the gap also shifts every later collinear point
                        for jj in j..q {
                            grad[col + jj][c] = C64::new(dg, 0.0);
                        }
                        c += 1;
                    }
                } else {
                    // dilation gauge on the first free point instead
                    let th = 2.0 * PI * u[c];
                    pos[0] = C64::new(th.cos(), th.sin());
                    grad[0][c] = C64::new(-th.sin() * 2.0 * PI, th.cos() * 2.0 * PI);
                    c += 1;
                    free_start = 1;
                    let mut prev = 0.0;
                    for j in 1..q {
                        let (g, dg) = ray(u[c]);
                        prev += g;
                        pos[col + j] = C64::new(prev, 0.0);
                        for jj in j..q {
                            grad[col + jj][c] = C64::new(dg, 0.0);
                        }
                        c += 1;
                    }
                }
                for j in free_start..p {
                    let (x, dx) = line(u[c]);
                    let (y, dy) = line(u[c + 1]);
                    pos[j] = C64::new(x, y);
                    grad[j][c] = C64::new(dx, 0.0);
                    grad[j][c + 1] = C64::new(0.0, dy);
                    c += 2;
                }
            }
            SliceKind::HalfPlane { m, n } => {
                let bnd = m;
                let mut int_start = 0;
                if n >= 1 {
                    pos[bnd] = C64::zero();
                }
                if n >= 2 {
                    pos[bnd + 1] = C64::new(1.0, 0.0);
                    let mut prev = 1.0;
                    for j in 2..n {
                        let (g, dg) = ray(u[c]);
                        prev += g;
                        pos[bnd + j] = C64::new(prev, 0.0);
                        for jj in j..n {
                            grad[bnd + jj][c] = C64::new(dg, 0.0);
                        }
                        c += 1;
                    }
                } else {
                    // dilation gauge: first interior point at height 1
                    let x = if n == 1 {
                        let (x, dx) = line(u[c]);
                        grad[0][c] = C64::new(dx, 0.0);
                        c += 1;
                        x
                    } else {
                        0.0
                    };
                    pos[0] = C64::new(x, 1.0);
                    int_start = 1;
                }
                for j in int_start..m {
                    let (x, dx) = line(u[c]);
                    let (y, dy) = ray(u[c + 1]);
                    pos[j] = C64::new(x, y);
                    grad[j][c] = C64::new(dx, 0.0);
                    grad[j][c + 1] = C64::new(0.0, dy);
                    c += 2;
                }
            }
            SliceKind::FlagHalfPlane { k, m, n } => {
                let col = k;
                let bnd = k + m;
                if n >= 1 {
                    pos[bnd] = C64::zero();
                }
                if n >= 2 {
                    pos[bnd + 1] = C64::new(1.0, 0.0);
                    let mut prev = 1.0;
                    for j in 2..n {
                        let (g, dg) = ray(u[c]);
                        prev += g;
                        pos[bnd + j] = C64::new(prev, 0.0);
                        for jj in j..n {
                            grad[bnd + jj][c] = C64::new(dg, 0.0);
                        }
                        c += 1;
                    }
                }
                // collinear line: height h, then ordered positions
                let (h, dh_coord) = if n >= 2 {
                    let (h, dh) = ray(u[c]);
                    let cc = c;
                    c += 1;
                    for j in 0..m {
                        grad[col + j][cc] = C64::new(0.0, dh);
                    }
                    (h, Some(cc))
                } else {
                    (1.0, None)
                };
                let _ = dh_coord;
                let x0 = if n >= 1 {
                    let (x, dx) = line(u[c]);
                    for j in 0..m {
                        grad[col + j][c] = C64::new(dx, 0.0);
                    }
                    c += 1;
                    x
                } else {
                    0.0
                };
                let mut prev = x0;
                pos[col] = C64::new(prev, h);
                for j in 1..m {
                    let (g, dg) = ray(u[c]);
                    prev += g;
                    pos[col + j] = C64::new(prev, h);
                    for jj in j..m {
                        let old = grad[col + jj][c];
                        grad[col + jj][c] = old.add(C64::new(dg, 0.0));
                    }
                    c += 1;
                }
                for j in 0..k {
                    let (x, dx) = line(u[c]);
                    let (y, dy) = ray(u[c + 1]);
                    pos[j] = C64::new(x, y);
                    grad[j][c] = C64::new(dx, 0.0);
                    grad[j][c + 1] = C64::new(0.0, dy);
                    c += 2;
                }
            }
        }
        debug_assert_eq!(c, dim);
        ChartPoint { pos, grad }
    }

    fn index_of(&self, label: u32) -> usize {
        self.labels.iter().position(|&l| l == label).expect("label in slice")
    }
}

/// Normalized plane angle `Arg(x_j − x_i)/2π` in [0,1).
pub fn angle_plane(xi: C64, xj: C64) -> f64 {
    let a = xj.sub(xi).arg() / (2.0 * PI);
    a.rem_euclid(1.0)
}

/// Normalized hyperbolic angle `Arg((x_j−x_i)/(x_j−x̄_i))/2π` in [0,1).
pub fn angle_halfplane(xi: C64, xj: C64) -> f64 {
    let a = xj.sub(xi).div(xj.sub(xi.conj())).arg() / (2.0 * PI);
    a.rem_euclid(1.0)
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut sign = 1.0;
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            sign = -sign;
        }
        d *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for cc in col..n {
                let sub = f * m[col][cc];
                m[row][cc] -= sub;
            }
        }
    }
    sign * d
}

/// Density of the wedge of normalized edge-angle one-forms against the chart
/// volume element: the Jacobian determinant of (chart coords) → (angles).
/// Returns `None` when the configuration is singular and must be resampled.
pub fn omega_density(
    g: &DirectedGraph,
    u: &[f64],
    slice: &GaugeSlice,
) -> Result<Option<f64>, WeightError> {
    let dim = slice.dimension();
    if g.edge_count() != dim {
        return Err(WeightError::DegreeMismatch { edges: g.edge_count(), dim });
    }
    if dim == 0 {
        return Ok(Some(1.0));
    }
    let cp = slice.chart(u);
    let halfplane = slice.uses_halfplane_angles();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for &(s, t) in g.edges() {
        let i = slice.index_of(s);
        let j = slice.index_of(t);
        let zi = cp.pos[i];
        let zj = cp.pos[j];
        let mut row = Vec::with_capacity(dim);
        if halfplane {
            let w1 = zj.sub(zi);
            let w2 = zj.sub(zi.conj());
            if w1.norm_sq() < 1e-24 || w2.norm_sq() < 1e-24 {
                return Ok(None);
            }
            for cc in 0..dim {
                let d1 = cp.grad[j][cc].sub(cp.grad[i][cc]);
                let d2 = cp.grad[j][cc].sub(cp.grad[i][cc].conj());
                row.push((d1.div(w1).im - d2.div(w2).im) / (2.0 * PI));
            }
        } else {
            let w = zj.sub(zi);
            if w.norm_sq() < 1e-24 {
                return Ok(None);
            }
            for cc in 0..dim {
                let dw = cp.grad[j][cc].sub(cp.grad[i][cc]);
                row.push(dw.div(w).im / (2.0 * PI));
            }
        }
        rows.push(row);
    }
    let v = det(rows);
    if v.is_finite() {
        Ok(Some(v))
    } else {
        Ok(None)
    }
}

/// Number of integration workers; part of the determinism contract.
pub const DEFAULT_WORKERS: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightEstimate {
    pub graph: DirectedGraph,
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub slice: String,
    pub workers: usize,
}

impl WeightEstimate {
    pub fn report_json(&self) -> String {
        serde_json::json!({
            "graph": self.graph,
            "value": self.value,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "slice": self.slice,
            "workers": self.workers,
        })
        .to_string()
    }
}

/// Deterministic weight integral: low-dimensional quadrature for dimension
/// ≤ 2, otherwise Monte Carlo with per-worker deterministic random streams
/// and an order-fixed reduction.
pub fn integrate_weight(
    g: &DirectedGraph,
    slice: &GaugeSlice,
    samples: u64,
    seed: u64,
) -> Result<WeightEstimate, WeightError> {
    let dim = slice.dimension();
    if g.edge_count() != dim {
        return Err(WeightError::DegreeMismatch { edges: g.edge_count(), dim });
    }
    let mk = |value: f64, stderr: f64| WeightEstimate {
        graph: g.clone(),
        value,
        stderr,
        samples,
        seed,
        slice: slice.name(),
        workers: DEFAULT_WORKERS,
    };
    if dim == 0 {
        return Ok(mk(1.0, 0.0));
    }
    if dim <= 2 {
        // midpoint rule on a grid; the error estimate compares with the
        // half-resolution grid
        let side = if dim == 1 {
            samples.clamp(16, 20_000) as usize
        } else {
            (samples as f64).sqrt().clamp(16.0, 600.0) as usize
        };
        let fine = quadrature(g, slice, dim, side)?;
        let coarse = quadrature(g, slice, dim, side / 2)?;
        return Ok(mk(fine, (fine - coarse).abs()));
    }
    let workers = DEFAULT_WORKERS;
    let per = samples / workers as u64;
    let mut counts = vec![per; workers];
    counts[workers - 1] += samples - per * workers as u64;
    let mut partials = vec![(0.0f64, 0.0f64); workers];
    std::thread::scope(|scope| {
        let mut handles = vec![];
        for (w, &count) in counts.iter().enumerate() {
            handles.push(scope.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(w as u64 + 1);
                let mut sum = 0.0f64;
                let mut sum_sq = 0.0f64;
                let mut u = vec![0.0f64; dim];
                for _ in 0..count {
                    let mut val = 0.0;
                    for _attempt in 0..64 {
                        for x in u.iter_mut() {
                            *x = rng.gen_range(0.0..1.0);
                        }
                        if let Ok(Some(v)) = omega_density(g, &u, slice) {
                            val = v;
                            break;
                        }
                    }
                    sum += val;
                    sum_sq += val * val;
                }
                (sum, sum_sq)
            }));
        }
        for (w, h) in handles.into_iter().enumerate() {
            partials[w] = h.join().expect("integration worker");
        }
    });
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for &(s, q) in &partials {
        sum += s;
        sum_sq += q;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(mk(mean, (var / n).sqrt()))
}

fn quadrature(
    g: &DirectedGraph,
    slice: &GaugeSlice,
    dim: usize,
    side: usize,
) -> Result<f64, WeightError> {
    let side = side.max(8);
    let mut total = 0.0;
    let mut u = vec![0.0f64; dim];
    let cells = side.pow(dim as u32);
    for cell in 0..cells {
        let mut rest = cell;
        for x in u.iter_mut() {
            *x = (rest % side) as f64 / side as f64 + 0.5 / side as f64;
            rest /= side;
        }
        if let Some(v) = omega_density(g, &u, slice)? {
            total += v;
        }
    }
    Ok(total / cells as f64)
}

/// Exact weights determined analytically, where available.
pub fn known_weight(g: &DirectedGraph) -> Option<Rat> {
    let vs = g.vertices();
    let d = g.edge_count();
    let slice = GaugeSlice::for_graph(vs).ok()?;
    let dim = slice.dimension();
    if d != dim {
        return None;
    }
    if d == 0 {
        return Some(crate::rat(1, 1));
    }
    match vs.flavor {
        Flavor::C => {
            let l = vs.free.len();
            if l == 2 {
                // both one-edge two-vertex graphs integrate the angle once
                Some(crate::rat(1, 1))
            } else {
                // reduces to an integral of the vanishing-lemma type
                Some(crate::rat(0, 1))
            }
        }
        Flavor::CfC => {
            let (p, q) = (vs.free.len(), vs.collinear.len());
            // the angle between collinear points is constant
            if g.edges().iter().any(|&(s, t)| {
                vs.group_of(s) == Some(Group::Collinear) && vs.group_of(t) == Some(Group::Collinear)
            }) {
                return Some(crate::rat(0, 1));
            }
            if (p + q) % 2 == 1 {
                // reflection in the line of collinearity
                return Some(crate::rat(0, 1));
            }
            if q == 1 && p == 1 {
                // the single-edge pair integrates the angle once, as in the plane
                return Some(crate::rat(1, 1));
            }
            if q == 1 && p >= 2 {
                return Some(crate::rat(0, 1));
            }
            if q == 2 {
                return Some(crate::rat(0, 1));
            }
            if p == 1 && q == 3 {
                return Some(one_three_weight(g));
            }
            None
        }
        Flavor::CfH => None,
    }
}

/// Weight of a (1,3) flag-plane graph of degree three: ±1/24, where the sign
/// is the edge permutation relating the graph to the reference ordering with
/// edge i incident to the i-th collinear vertex.
fn one_three_weight(g: &DirectedGraph) -> Rat {
    let vs = g.vertices();
    let free = vs.free[0];
    let mut perm = Vec::with_capacity(3);
    for &(s, t) in g.edges() {
        let col = if s == free { t } else { s };
        let idx = vs.collinear.iter().position(|&c| c == col).expect("collinear endpoint");
        perm.push(idx);
    }
    let mut sorted = perm.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != 3 {
        // an edge repeats a collinear vertex: such graphs have a lower-
        // dimensional angle map and vanish
        return crate::rat(0, 1);
    }
    let sign = crate::graph::permutation_sign(&perm);
    crate::rat(sign as i64, 24)
}

/// Key for the append-only weight cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub graph_key: String,
    pub slice: String,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Append-only JSON-lines cache of Monte Carlo weight estimates.
pub struct WeightCache {
    path: PathBuf,
}

pub fn graph_cache_key(g: &DirectedGraph) -> String {
    serde_json::to_string(&g.canonical_form().0).expect("graph serializes")
}

impl WeightCache {
    pub fn open(path: impl AsRef<Path>) -> Self {
        WeightCache { path: path.as_ref().to_path_buf() }
    }

    pub fn lookup(
        &self,
        g: &DirectedGraph,
        slice: &GaugeSlice,
        samples: u64,
        seed: u64,
    ) -> Option<(f64, f64)> {
        let key = graph_cache_key(g);
        let text = std::fs::read_to_string(&self.path).ok()?;
        for l in text.lines() {
            if let Ok(e) = serde_json::from_str::<CacheEntry>(l) {
                if e.graph_key == key
                    && e.slice == slice.name()
                    && e.samples == samples
                    && e.seed == seed
                    && e.workers == DEFAULT_WORKERS
                {
                    return Some((e.value, e.stderr));
                }
            }
        }
        None
    }

    pub fn append(&self, est: &WeightEstimate) -> Result<(), WeightError> {
        let entry = CacheEntry {
            graph_key: graph_cache_key(&est.graph),
            slice: est.slice.clone(),
            samples: est.samples,
            seed: est.seed,
            workers: est.workers,
            value: est.value,
            stderr: est.stderr,
        };
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| WeightError::Cache(e.to_string()))?;
        }
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| WeightError::Cache(e.to_string()))?;
        let line = serde_json::to_string(&entry).expect("entry serializes");
        writeln!(f, "{line}").map_err(|e| WeightError::Cache(e.to_string()))?;
        Ok(())
    }

    /// Cached-or-computed weight, appending on a miss.
    pub fn weight(
        &self,
        g: &DirectedGraph,
        slice: &GaugeSlice,
        samples: u64,
        seed: u64,
    ) -> Result<(f64, f64), WeightError> {
        if let Some(hit) = self.lookup(g, slice, samples, seed) {
            return Ok(hit);
        }
        let est = integrate_weight(g, slice, samples, seed)?;
        self.append(&est)?;
        Ok((est.value, est.stderr))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_graphs, VertexSet};

    fn plane2(rev: bool) -> DirectedGraph {
        let vs = VertexSet::plane(vec![1, 2]);
        let e = if rev { (2, 1) } else { (1, 2) };
        DirectedGraph::new(vs, vec![e]).unwrap()
    }

    #[test]
    fn angle_examples() {
        let z = C64::zero;
        assert!((angle_plane(z(), C64::new(1.0, 0.0))).abs() < 1e-12);
        assert!((angle_plane(z(), C64::new(0.0, 1.0)) - 0.25).abs() < 1e-12);
        let a = angle_plane(C64::new(0.3, 0.7), C64::new(-1.1, 0.2));
        let b = angle_plane(C64::new(-1.1, 0.2), C64::new(0.3, 0.7));
        let diff = (a - b).rem_euclid(1.0);
        assert!((diff - 0.5).abs() < 1e-12);
        // both points on the imaginary axis: hyperbolic angle zero
        assert!(angle_halfplane(C64::new(0.0, 1.0), C64::new(0.0, 2.0)).abs() < 1e-12);
        let w = C64::new(1.0, 0.0).div(C64::new(1.0, 2.0));
        let expect = (w.arg() / (2.0 * PI)).rem_euclid(1.0);
        assert!((angle_halfplane(C64::new(0.0, 1.0), C64::new(1.0, 1.0)) - expect).abs() < 1e-12);
        // invariance under horizontal translation and dilation
        let (p1, p2) = (C64::new(0.4, 0.9), C64::new(-0.3, 1.7));
        let shift = |z: C64, s: f64, t: f64| C64::new(s * z.re + t, s * z.im);
        let a = angle_halfplane(p1, p2);
        let b = angle_halfplane(shift(p1, 2.5, -3.0), shift(p2, 2.5, -3.0));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn one_edge_calibration_weight_is_one() {
        for rev in [false, true] {
            let g = plane2(rev);
            let slice = GaugeSlice::for_graph(g.vertices()).unwrap();
            assert_eq!(slice.dimension(), 1);
            let est = integrate_weight(&g, &slice, 10_000, 7).unwrap();
            assert!((est.value - 1.0).abs() < 1e-6, "weight {}", est.value);
        }
    }

    #[test]
    fn edgeless_and_degree_mismatch() {
        let vs = VertexSet::flag_plane(vec![], vec![1, 2]);
        let g = DirectedGraph::new(vs, vec![]).unwrap();
        let slice = GaugeSlice::for_graph(g.vertices()).unwrap();
        assert_eq!(slice.dimension(), 0);
        let est = integrate_weight(&g, &slice, 10, 1).unwrap();
        assert_eq!(est.value, 1.0);
        let g2 = plane2(false);
        let s3 = GaugeSlice::for_graph(&VertexSet::plane(vec![1, 2, 3])).unwrap();
        assert!(matches!(
            integrate_weight(&g2, &s3, 10, 1),
            Err(WeightError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_action_graphs_have_weight_one() {
        // one free and one collinear vertex joined by a single edge
        for rev in [false, true] {
            let vs = VertexSet::flag_plane(vec![1], vec![2]);
            let e = if rev { (2, 1) } else { (1, 2) };
            let g = DirectedGraph::new(vs, vec![e]).unwrap();
            let slice = GaugeSlice::for_graph(g.vertices()).unwrap();
            assert_eq!(slice.dimension(), 1);
            let est = integrate_weight(&g, &slice, 10_000, 3).unwrap();
            assert!((est.value - 1.0).abs() < 1e-6, "weight {}", est.value);
        }
    }

    #[test]
    fn known_weight_table() {
        assert_eq!(known_weight(&plane2(false)), Some(crate::rat(1, 1)));
        // plane triple with three edges: vanishing lemma
        let vs = VertexSet::plane(vec![1, 2, 3]);
        let g = DirectedGraph::new(vs, vec![(1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(known_weight(&g), Some(crate::rat(0, 1)));
        // collinear-collinear edge
        let vs = VertexSet::flag_plane(vec![1], vec![2, 3]);
        let g = DirectedGraph::new(vs, vec![(2, 3), (1, 2)]).unwrap();
        assert_eq!(known_weight(&g), Some(crate::rat(0, 1)));
        // star graph in reference edge order
        let vs = VertexSet::flag_plane(vec![1], vec![2, 3, 4]);
        let g = DirectedGraph::new(vs.clone(), vec![(1, 2), (1, 3), (1, 4)]).unwrap();
        assert_eq!(known_weight(&g), Some(crate::rat(1, 24)));
        // odd edge permutation flips the sign
        let g = DirectedGraph::new(vs, vec![(1, 3), (1, 2), (1, 4)]).unwrap();
        assert_eq!(known_weight(&g), Some(crate::rat(-1, 24)));
        // (p,q) = (1,2) top graph
        let vs = VertexSet::flag_plane(vec![1], vec![2, 3]);
        let g = DirectedGraph::new(vs, vec![(1, 2), (1, 3)]).unwrap();
        assert_eq!(known_weight(&g), Some(crate::rat(0, 1)));
    }

    #[test]
    fn determinism_bitwise() {
        let vs = VertexSet::flag_plane(vec![1], vec![2, 3, 4]);
        let g = DirectedGraph::new(vs, vec![(1, 2), (1, 3), (1, 4)]).unwrap();
        let slice = GaugeSlice::for_graph(g.vertices()).unwrap();
        let a = integrate_weight(&g, &slice, 20_000, 42).unwrap();
        let b = integrate_weight(&g, &slice, 20_000, 42).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert_eq!(a.report_json(), b.report_json());
    }

    #[test]
    fn star_graph_weight_close_to_one_twenty_fourth() {
        let vs = VertexSet::flag_plane(vec![1], vec![2, 3, 4]);
        let g = DirectedGraph::new(vs, vec![(1, 2), (1, 3), (1, 4)]).unwrap();
        let slice = GaugeSlice::for_graph(g.vertices()).unwrap();
        let est = integrate_weight(&g, &slice, 400_000, 11).unwrap();
        let target = 1.0 / 24.0;
        let tol = (3.0 * est.stderr).max(6e-3);
        assert!(
            (est.value - target).abs() < tol,
            "estimate {} ± {} vs {}",
            est.value,
            est.stderr,
            target
        );
    }

    #[test]
    fn gauge_independence() {
        // three graphs, default vs alternative gauge
        let cases: Vec<DirectedGraph> = vec![
            plane2(false),
            {
                let vs = VertexSet::flag_plane(vec![1], vec![2]);
                DirectedGraph::new(vs, vec![(1, 2)]).unwrap()
            },
            {
                let vs = VertexSet::flag_plane(vec![1], vec![2, 3, 4]);
                DirectedGraph::new(vs, vec![(1, 2), (1, 3), (1, 4)]).unwrap()
            },
        ];
        for g in &cases {
            let s0 = GaugeSlice::for_graph(g.vertices()).unwrap();
            let s1 = GaugeSlice::for_graph_variant(g.vertices(), 1).unwrap();
            let a = integrate_weight(g, &s0, 300_000, 5).unwrap();
            let b = integrate_weight(g, &s1, 300_000, 5).unwrap();
            let tol = (3.0 * (a.stderr + b.stderr)).max(8e-3);
            assert!(
                (a.value - b.value).abs() < tol,
                "{g}: {} ± {} vs {} ± {}",
                a.value,
                a.stderr,
                b.value,
                b.stderr
            );
        }
    }

    #[test]
    fn reflection_parity_vanishing() {
        // every (1,2) top graph without collinear-collinear edges still
        // integrates to ~0 (p+q odd)
        let vs = VertexSet::flag_plane(vec![1], vec![2, 3]);
        let graphs = enumerate_graphs(&vs, 2, None, 10_000).unwrap();
        let mut tested = 0;
        for g in graphs {
            if g.edges().iter().any(|&(s, t)| s != 1 && t != 1) {
                continue;
            }
            let slice = GaugeSlice::for_graph(g.vertices()).unwrap();
            let est = integrate_weight(&g, &slice, 120_000, 9).unwrap();
            assert!(
                est.value.abs() < (3.0 * est.stderr).max(8e-3),
                "{g}: {} ± {}",
                est.value,
                est.stderr
            );
            tested += 1;
        }
        assert!(tested >= 2);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = std::env::temp_dir().join(format!("gwb-cache-{}", std::process::id()));
        let path = dir.join("weights.jsonl");
        let _ = std::fs::remove_file(&path);
        let cache = WeightCache::open(&path);
        let g = plane2(false);
        let slice = GaugeSlice::for_graph(g.vertices()).unwrap();
        assert!(cache.lookup(&g, &slice, 5000, 1).is_none());
        let (v, e) = cache.weight(&g, &slice, 5000, 1).unwrap();
        let (v2, e2) = cache.weight(&g, &slice, 5000, 1).unwrap();
        assert_eq!(v.to_bits(), v2.to_bits());
        assert_eq!(e.to_bits(), e2.to_bits());
        assert!((v - 1.0).abs() < 1e-6);
        let _ = std::fs::remove_file(&path);
    }
}
