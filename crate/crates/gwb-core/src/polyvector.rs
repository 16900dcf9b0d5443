//! Truncated formal polyvector fields.
//!
//! The algebra is a truncated graded-symmetric algebra on generators
//! `x1..xn` (coordinates, degree `degrees[a]`) and `ψ1..ψn` (vector
//! directions, degree `1 - degrees[a]`). With the default grading the `x` are
//! even and the `ψ` odd Grassmann generators. The pairing operator τ, the
//! Schouten bracket and the multilinear operators Φ attached to graphs all
//! live here.

use crate::graph::{DirectedGraph, Flavor, Group};
use crate::{rat, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("generator index {0} out of range for dimension {1}")]
    BadGenerator(usize, usize),
    #[error("operands live in different spaces")]
    SpaceMismatch,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("operator expects {0} arguments, got {1}")]
    Arity(usize, usize),
}

/// Ambient graded vector space data: dimension, generator degrees and the
/// word-length truncation of the symmetric algebra.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Space {
    pub dim: usize,
    pub degrees: Vec<i64>,
    pub truncation: usize,
}

impl Space {
    /// Space of the given dimension concentrated in degree 0.
    pub fn new(dim: usize) -> Self {
        Space { dim, degrees: vec![0; dim], truncation: 6 }
    }

    pub fn with_degrees(degrees: Vec<i64>) -> Self {
        Space { dim: degrees.len(), degrees, truncation: 6 }
    }

    pub fn truncated(mut self, truncation: usize) -> Self {
        self.truncation = truncation;
        self
    }

    /// Degree of the coordinate generator `x^a`.
    pub fn x_degree(&self, a: usize) -> i64 {
        self.degrees[a]
    }

    /// Degree of the direction generator `ψ_a`.
    pub fn psi_degree(&self, a: usize) -> i64 {
        1 - self.degrees[a]
    }

    /// Parity (0 or 1) of the generator at normal-order position `pos`
    /// (coordinates first, then directions).
    fn parity_at(&self, pos: usize) -> u8 {
        let d = if pos < self.dim {
            self.x_degree(pos)
        } else {
            self.psi_degree(pos - self.dim)
        };
        (d.rem_euclid(2)) as u8
    }

    fn degree_at(&self, pos: usize) -> i64 {
        if pos < self.dim {
            self.x_degree(pos)
        } else {
            self.psi_degree(pos - self.dim)
        }
    }
}

/// A normal-ordered monomial: exponents of `x1..xn` then `ψ1..ψn`. Odd
/// generators never carry an exponent above 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    exps: Vec<u8>,
}

impl Monomial {
    fn unit(dim: usize) -> Self {
        Monomial { exps: vec![0; 2 * dim] }
    }

    fn word_length(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    fn degree(&self, space: &Space) -> i64 {
        self.exps
            .iter()
            .enumerate()
            .map(|(pos, &e)| e as i64 * space.degree_at(pos))
            .sum()
    }

    fn parity(&self, space: &Space) -> u8 {
        (self.degree(space).rem_euclid(2)) as u8
    }

    fn is_psi_free(&self, dim: usize) -> bool {
        self.exps[dim..].iter().all(|&e| e == 0)
    }
}

/// Graded-commutative product of two monomials with the Koszul sign, or
/// `None` when the result vanishes (odd generator squared) or falls outside
/// the truncation.
fn mul_monomials(space: &Space, m1: &Monomial, m2: &Monomial) -> Option<(Monomial, i8)> {
    if m1.word_length() + m2.word_length() > space.truncation {
        return None;
    }
    let n = m1.exps.len();
    // odd factors of m1 strictly after each position
    let mut sign_exp = 0u32;
    let mut suffix_odd = 0u32;
    let mut odd_after = vec![0u32; n];
    for pos in (0..n).rev() {
        odd_after[pos] = suffix_odd;
        suffix_odd += (m1.exps[pos] * space.parity_at(pos)) as u32;
    }
    let mut exps = m1.exps.clone();
    for pos in 0..n {
        let e2 = m2.exps[pos];
        if e2 == 0 {
            continue;
        }
        if space.parity_at(pos) == 1 {
            if exps[pos] + e2 > 1 {
                return None;
            }
            sign_exp += odd_after[pos];
        }
        exps[pos] += e2;
    }
    let sign = if sign_exp % 2 == 0 { 1 } else { -1 };
    Some((Monomial { exps }, sign))
}

/// Left derivative by the generator at normal position `pos`: the reduced
/// monomial, the multiplicity and the Koszul sign from passing the operator
/// over the preceding factors.
fn derive_monomial(space: &Space, m: &Monomial, pos: usize) -> Option<(Monomial, Rat)> {
    let e = m.exps[pos];
    if e == 0 {
        return None;
    }
    let mut prefix_odd = 0u32;
    for p in 0..pos {
        prefix_odd += (m.exps[p] * space.parity_at(p)) as u32;
    }
    let sign_exp = space.parity_at(pos) as u32 * prefix_odd;
    let mut exps = m.exps.clone();
    exps[pos] -= 1;
    let mut coeff = rat(e as i64, 1);
    if sign_exp % 2 == 1 {
        coeff = -coeff;
    }
    Some((Monomial { exps }, coeff))
}

/// A polyvector field: exact rational linear combination of monomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyVector {
    space: Space,
    terms: BTreeMap<Monomial, Rat>,
}

impl PolyVector {
    pub fn zero(space: &Space) -> Self {
        PolyVector { space: space.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(space: &Space, c: Rat) -> Self {
        let mut p = PolyVector::zero(space);
        p.add_term(Monomial::unit(space.dim), c);
        p
    }

    pub fn one(space: &Space) -> Self {
        PolyVector::constant(space, Rat::one())
    }

    /// The coordinate generator `x^a` (0-based index).
    pub fn x(space: &Space, a: usize) -> Result<Self, PolyError> {
        if a >= space.dim {
            return Err(PolyError::BadGenerator(a, space.dim));
        }
        let mut m = Monomial::unit(space.dim);
        m.exps[a] = 1;
        let mut p = PolyVector::zero(space);
        p.add_term(m, Rat::one());
        Ok(p)
    }

    /// The direction generator `ψ_a` (0-based index).
    pub fn psi(space: &Space, a: usize) -> Result<Self, PolyError> {
        if a >= space.dim {
            return Err(PolyError::BadGenerator(a, space.dim));
        }
        let mut m = Monomial::unit(space.dim);
        m.exps[space.dim + a] = 1;
        let mut p = PolyVector::zero(space);
        p.add_term(m, Rat::one());
        Ok(p)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates the nonzero terms in the stable monomial order.
    pub fn monomials(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    /// The element with the single given term.
    pub fn from_monomial(space: &Space, m: Monomial, c: Rat) -> PolyVector {
        let mut p = PolyVector::zero(space);
        p.add_term(m, c);
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &PolyVector) -> PolyVector {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &PolyVector) -> PolyVector {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> PolyVector {
        let mut out = PolyVector::zero(&self.space);
        for (m, coeff) in &self.terms {
            out.add_term(m.clone(), coeff.clone() * c.clone());
        }
        out
    }

    /// Cohomological degree, when the element is homogeneous.
    pub fn degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(|m| m.degree(&self.space));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Splits into the even and odd part.
    pub fn parity_parts(&self) -> [PolyVector; 2] {
        let mut parts = [PolyVector::zero(&self.space), PolyVector::zero(&self.space)];
        for (m, c) in &self.terms {
            parts[m.parity(&self.space) as usize].add_term(m.clone(), c.clone());
        }
        parts
    }
}

/// Graded-commutative truncated product.
pub fn product(a: &PolyVector, b: &PolyVector) -> PolyVector {
    let mut out = PolyVector::zero(&a.space);
    for (m1, c1) in &a.terms {
        for (m2, c2) in &b.terms {
            if let Some((m, s)) = mul_monomials(&a.space, m1, m2) {
                let mut c = c1.clone() * c2.clone();
                if s < 0 {
                    c = -c;
                }
                out.add_term(m, c);
            }
        }
    }
    out
}

/// Left partial derivative by the coordinate `x^i`.
pub fn deriv_x(a: &PolyVector, i: usize) -> PolyVector {
    deriv_at(a, i)
}

/// Left partial derivative by the direction generator `ψ_i`.
pub fn deriv_psi(a: &PolyVector, i: usize) -> PolyVector {
    deriv_at(a, a.space.dim + i)
}

fn deriv_at(a: &PolyVector, pos: usize) -> PolyVector {
    let mut out = PolyVector::zero(&a.space);
    for (m, c) in &a.terms {
        if let Some((m2, dc)) = derive_monomial(&a.space, m, pos) {
            out.add_term(m2, c.clone() * dc);
        }
    }
    out
}

/// Kills every monomial containing a direction generator.
pub fn project_to_o(a: &PolyVector) -> PolyVector {
    let mut out = PolyVector::zero(&a.space);
    for (m, c) in &a.terms {
        if m.is_psi_free(a.space.dim) {
            out.add_term(m.clone(), c.clone());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Tensor engine

/// A sum of elementary tensors of monomials (slot tuples) with coefficients.
type Tensor = BTreeMap<Vec<Monomial>, Rat>;

fn tensor_insert(t: &mut Tensor, slots: Vec<Monomial>, c: Rat) {
    if c.is_zero() {
        return;
    }
    let entry = t.entry(slots.clone()).or_insert_with(Rat::zero);
    *entry += c;
    if entry.is_zero() {
        t.remove(&slots);
    }
}

/// Expands a tuple of polyvectors into the elementary-tensor sum.
fn expand(args: &[PolyVector]) -> Tensor {
    let mut t: Tensor = BTreeMap::new();
    t.insert(vec![], Rat::one());
    for a in args {
        let mut next: Tensor = BTreeMap::new();
        for (slots, c) in &t {
            for (m, cm) in &a.terms {
                let mut s = slots.clone();
                s.push(m.clone());
                tensor_insert(&mut next, s, c.clone() * cm.clone());
            }
        }
        t = next;
    }
    t
}

/// Applies the derivative by the generator at normal position `pos` to slot
/// `slot`, with the Koszul sign from carrying the operator past the earlier
/// slots.
fn derive_at_slot(space: &Space, t: &Tensor, slot: usize, pos: usize) -> Tensor {
    let op_parity = space.parity_at(pos) as u32;
    let mut out: Tensor = BTreeMap::new();
    for (slots, c) in t {
        let Some((m, dc)) = derive_monomial(space, &slots[slot], pos) else { continue };
        let crossed: u32 = slots[..slot].iter().map(|m| m.parity(space) as u32).sum();
        let mut coeff = c.clone() * dc;
        if (op_parity * crossed) % 2 == 1 {
            coeff = -coeff;
        }
        let mut s = slots.clone();
        s[slot] = m;
        tensor_insert(&mut out, s, coeff);
    }
    out
}

/// τ on slots `(s, t)` of a tensor: Σ_a ∂/∂ψ_a at slot `s` composed after
/// ∂/∂x^a at slot `t`, identity elsewhere.
fn tau_slots(space: &Space, t: &Tensor, s_slot: usize, t_slot: usize) -> Tensor {
    let mut out: Tensor = BTreeMap::new();
    for a in 0..space.dim {
        let dx = derive_at_slot(space, t, t_slot, a);
        let dpsi = derive_at_slot(space, &dx, s_slot, space.dim + a);
        for (slots, c) in dpsi {
            tensor_insert(&mut out, slots, c);
        }
    }
    out
}

fn tensor_to_pairs(space: &Space, t: &Tensor) -> Vec<(PolyVector, PolyVector)> {
    t.iter()
        .map(|(slots, c)| {
            let mut left = PolyVector::zero(space);
            left.add_term(slots[0].clone(), c.clone());
            let mut right = PolyVector::zero(space);
            right.add_term(slots[1].clone(), Rat::one());
            (left, right)
        })
        .collect()
}

/// τ(a ⊗ b) = Σ_a ∂a/∂ψ_a ⊗ ∂b/∂x^a, as a sum of elementary pairs with the
/// coefficient carried on the left factor.
pub fn tau(a: &PolyVector, b: &PolyVector) -> Vec<(PolyVector, PolyVector)> {
    let t = expand(&[a.clone(), b.clone()]);
    tensor_to_pairs(&a.space, &tau_slots(&a.space, &t, 0, 1))
}

/// τ on slots `(s, t)` of a list of polyvectors, returned as a sum of slot
/// tuples with the coefficient on the first slot.
pub fn tau_st(inputs: &[PolyVector], s: usize, t: usize) -> Vec<Vec<PolyVector>> {
    let space = &inputs[0].space;
    let tensor = tau_slots(space, &expand(inputs), s, t);
    tensor
        .iter()
        .map(|(slots, c)| {
            slots
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let mut p = PolyVector::zero(space);
                    p.add_term(m.clone(), if i == 0 { c.clone() } else { Rat::one() });
                    p
                })
                .collect()
        })
        .collect()
}

fn multiply_out(space: &Space, t: &Tensor) -> PolyVector {
    let mut out = PolyVector::zero(space);
    for (slots, c) in t {
        let mut acc = Monomial::unit(space.dim);
        let mut coeff = c.clone();
        let mut dead = false;
        for m in slots {
            match mul_monomials(space, &acc, m) {
                Some((next, s)) => {
                    acc = next;
                    if s < 0 {
                        coeff = -coeff;
                    }
                }
                None => {
                    dead = true;
                    break;
                }
            }
        }
        if !dead {
            out.add_term(acc, coeff);
        }
    }
    out
}

/// Schouten bracket `[a, b] = m∘τ∘(id + (21))`, where `(21)` is the Koszul
/// transposition. A degree −1 Lie bracket; the τ convention drops out of the
/// symmetrized expression.
pub fn schouten(a: &PolyVector, b: &PolyVector) -> PolyVector {
    let space = &a.space;
    let mut out = PolyVector::zero(space);
    for pa in a.parity_parts() {
        for pb in b.parity_parts() {
            if pa.is_zero() || pb.is_zero() {
                continue;
            }
            let sa = pa.terms.keys().next().unwrap().parity(space) as u32;
            let sb = pb.terms.keys().next().unwrap().parity(space) as u32;
            let direct = multiply_out(space, &tau_slots(space, &expand(&[pa.clone(), pb.clone()]), 0, 1));
            let swapped =
                multiply_out(space, &tau_slots(space, &expand(&[pb.clone(), pa.clone()]), 0, 1));
            out = out.add(&direct);
            let sign = if (sa * sb) % 2 == 1 { -Rat::one() } else { Rat::one() };
            out = out.add(&swapped.scale(&sign));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Graphs as multilinear operators

/// Input slot typing of a multilinear operator: a full polyvector slot or a
/// function (ψ-free) slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    TPoly,
    Functions,
}

/// A multilinear operator on polyvector tuples with a slot signature and a
/// cohomological degree.
#[derive(Clone)]
pub struct MultiOperator {
    pub slots: Vec<SlotKind>,
    pub degree: i64,
    op: Arc<dyn Fn(&[PolyVector]) -> PolyVector + Send + Sync>,
}

impl MultiOperator {
    pub fn new(
        slots: Vec<SlotKind>,
        degree: i64,
        op: Arc<dyn Fn(&[PolyVector]) -> PolyVector + Send + Sync>,
    ) -> Self {
        MultiOperator { slots, degree, op }
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    pub fn apply(&self, args: &[PolyVector]) -> Result<PolyVector, PolyError> {
        if args.len() != self.slots.len() {
            return Err(PolyError::Arity(self.slots.len(), args.len()));
        }
        Ok((self.op)(args))
    }
}

impl fmt::Debug for MultiOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiOperator(arity {}, degree {})", self.slots.len(), self.degree)
    }
}

/// Evaluates the operator of a graph on a tuple of polyvectors, one per
/// vertex in the global label order: composes τ over the ordered edges
/// right-to-left, multiplies all slots, and projects to the function algebra
/// for half-plane graphs.
pub fn phi_apply(g: &DirectedGraph, args: &[PolyVector]) -> Result<PolyVector, PolyError> {
    let vs = g.vertices();
    if args.len() != vs.len() {
        return Err(PolyError::Arity(vs.len(), args.len()));
    }
    let space = args[0].space.clone();
    let mut tensor = expand(args);
    for &(s, t) in g.edges().iter().rev() {
        let s_slot = vs.index_of(s).expect("edge endpoint");
        let t_slot = vs.index_of(t).expect("edge endpoint");
        tensor = tau_slots(&space, &tensor, s_slot, t_slot);
    }
    let out = multiply_out(&space, &tensor);
    Ok(match g.flavor() {
        Flavor::CfH => project_to_o(&out),
        _ => out,
    })
}

/// The multilinear operator of a graph: boundary vertices become function
/// slots, all other vertices polyvector slots; the degree is minus the edge
/// count.
pub fn phi(g: &DirectedGraph, _space: &Space) -> MultiOperator {
    let slots = g
        .vertices()
        .labels()
        .map(|&l| match g.vertices().group_of(l) {
            Some(Group::Boundary) => SlotKind::Functions,
            _ => SlotKind::TPoly,
        })
        .collect();
    let g = g.clone();
    MultiOperator::new(
        slots,
        -(g.edge_count() as i64),
        Arc::new(move |args| phi_apply(&g, args).expect("arity checked by MultiOperator")),
    )
}

// ---------------------------------------------------------------------------
// Text format

impl fmt::Display for PolyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", c)?;
            for (pos, &e) in m.exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if pos < self.space.dim {
                    write!(f, " * x{}", pos + 1)?;
                } else {
                    write!(f, " * ψ{}", pos - self.space.dim + 1)?;
                }
                if e > 1 {
                    write!(f, "^{}", e)?;
                }
            }
        }
        Ok(())
    }
}

/// Parses the canonical text format: terms joined by `+`, each a rational
/// coefficient followed by `* x<i>(^k)` / `* ψ<i>(^k)` factors (`psi<i>`
/// accepted as an ASCII alias).
pub fn parse(space: &Space, input: &str) -> Result<PolyVector, PolyError> {
    let mut out = PolyVector::zero(space);
    let trimmed = input.trim();
    if trimmed == "0" {
        return Ok(out);
    }
    for term in trimmed.split('+') {
        let mut coeff: Option<Rat> = None;
        let mut m = Monomial::unit(space.dim);
        for factor in term.split('*') {
            let factor = factor.trim();
            if factor.is_empty() {
                return Err(PolyError::Parse(format!("empty factor in {term:?}")));
            }
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => (
                    n.trim(),
                    e.trim()
                        .parse::<u8>()
                        .map_err(|_| PolyError::Parse(format!("bad exponent in {factor:?}")))?,
                ),
                None => (factor, 1),
            };
            let gen = if let Some(idx) = name.strip_prefix('x') {
                idx.parse::<usize>().ok().map(|i| (i, 0usize))
            } else if let Some(idx) = name.strip_prefix('ψ').or_else(|| name.strip_prefix("psi")) {
                idx.parse::<usize>().ok().map(|i| (i, space.dim))
            } else {
                None
            };
            match gen {
                Some((idx, offset)) => {
                    if idx == 0 || idx > space.dim {
                        return Err(PolyError::BadGenerator(idx, space.dim));
                    }
                    let pos = offset + idx - 1;
                    m.exps[pos] += exp;
                    if space.parity_at(pos) == 1 && m.exps[pos] > 1 {
                        return Err(PolyError::Parse(format!(
                            "odd generator squared in {term:?}"
                        )));
                    }
                }
                None => {
                    if coeff.is_some() {
                        return Err(PolyError::Parse(format!("two coefficients in {term:?}")));
                    }
                    coeff = Some(parse_rat(name)?);
                }
            }
        }
        out.add_term(m, coeff.unwrap_or_else(Rat::one));
    }
    Ok(out)
}

fn parse_rat(s: &str) -> Result<Rat, PolyError> {
    s.parse::<Rat>().map_err(|_| PolyError::Parse(format!("bad coefficient {s:?}")))
}

// silence a pedantic lint pattern: Signed is used for coefficient printing in
// downstream modules
#[allow(unused)]
fn _signed_witness(r: &Rat) -> bool {
    r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(space: &Space, rng: &mut ChaCha8Rng, parity: u8) -> PolyVector {
        // homogeneous parity, a handful of random monomials
        let mut out = PolyVector::zero(space);
        for _ in 0..4 {
            let mut m = Monomial::unit(space.dim);
            for pos in 0..2 * space.dim {
                let cap = if space.parity_at(pos) == 1 { 1 } else { 2 };
                m.exps[pos] = rng.gen_range(0..=cap);
            }
            if m.word_length() > space.truncation {
                continue;
            }
            if m.parity(space) != parity {
                continue;
            }
            let c = rat(rng.gen_range(-3i64..=3), 1);
            out.add_term(m, c);
        }
        out
    }

    #[test]
    fn odd_generators_anticommute() {
        let sp = Space::new(2);
        let p1 = PolyVector::psi(&sp, 0).unwrap();
        let p2 = PolyVector::psi(&sp, 1).unwrap();
        assert_eq!(product(&p1, &p2), product(&p2, &p1).scale(&-Rat::one()));
        assert!(product(&p1, &p1).is_zero());
    }

    #[test]
    fn product_sign_matches_transposition_count() {
        // oracle: multiply words by explicit bubble sort with parity count
        let sp = Space::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut mk = || {
                let mut m = Monomial::unit(sp.dim);
                for pos in 0..2 * sp.dim {
                    let cap = if sp.parity_at(pos) == 1 { 1 } else { 2 };
                    m.exps[pos] = rng.gen_range(0..=cap);
                }
                m
            };
            let m1 = mk();
            let m2 = mk();
            let word = |m: &Monomial| -> Vec<usize> {
                let mut w = vec![];
                for (pos, &e) in m.exps.iter().enumerate() {
                    for _ in 0..e {
                        w.push(pos);
                    }
                }
                w
            };
            let mut w: Vec<usize> = word(&m1);
            w.extend(word(&m2));
            // bubble sort, counting odd-odd transpositions
            let mut swaps = 0u32;
            let mut sorted = w.clone();
            for i in 0..sorted.len() {
                for j in (i + 1..sorted.len()).rev() {
                    if sorted[j] < sorted[j - 1] {
                        if sp.parity_at(sorted[j]) == 1 && sp.parity_at(sorted[j - 1]) == 1 {
                            swaps += 1;
                        }
                        sorted.swap(j, j - 1);
                    }
                }
            }
            let square = sorted.windows(2).any(|p| p[0] == p[1] && sp.parity_at(p[0]) == 1);
            let expect = if square || w.len() > sp.truncation {
                None
            } else {
                Some(if swaps % 2 == 0 { 1i8 } else { -1 })
            };
            let got = mul_monomials(&sp, &m1, &m2).map(|(_, s)| s);
            assert_eq!(got, expect, "m1={:?} m2={:?}", m1, m2);
        }
    }

    #[test]
    fn tau_examples() {
        let sp = Space::new(2);
        let psi1 = PolyVector::psi(&sp, 0).unwrap();
        let x1 = PolyVector::x(&sp, 0).unwrap();
        let pairs = tau(&psi1, &x1);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].0, PolyVector::one(&sp));
        assert_eq!(pairs[0].1, PolyVector::one(&sp));

        assert!(tau(&x1, &x1).is_empty());

        // τ(ψ1ψ2 ⊗ x1x2) = ψ2⊗x2 − ψ1⊗x1
        let psi12 = product(&psi1, &PolyVector::psi(&sp, 1).unwrap());
        let x12 = product(&x1, &PolyVector::x(&sp, 1).unwrap());
        let pairs = tau(&psi12, &x12);
        let as_map: BTreeMap<String, String> =
            pairs.iter().map(|(a, b)| (b.to_string(), a.to_string())).collect();
        assert_eq!(as_map["1 * x2"], "1 * ψ2");
        assert_eq!(as_map["1 * x1"], "-1 * ψ1");
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn tau_st_two_slots_is_tau() {
        let sp = Space::new(2);
        let a = product(
            &PolyVector::psi(&sp, 0).unwrap(),
            &PolyVector::psi(&sp, 1).unwrap(),
        );
        let b = product(&PolyVector::x(&sp, 0).unwrap(), &PolyVector::x(&sp, 1).unwrap());
        let via_st = tau_st(&[a.clone(), b.clone()], 0, 1);
        let via_tau = tau(&a, &b);
        assert_eq!(via_st.len(), via_tau.len());
        for row in &via_st {
            assert_eq!(row.len(), 2);
        }
    }

    #[test]
    fn schouten_pairing_and_function_cases() {
        let sp = Space::new(2);
        let psi1 = PolyVector::psi(&sp, 0).unwrap();
        let x1 = PolyVector::x(&sp, 0).unwrap();
        assert_eq!(schouten(&psi1, &x1), PolyVector::one(&sp));
        // [X, f] = v^a ∂f/∂x^a for X = x2 ψ1 (vector field), f = x1^2
        let x2 = PolyVector::x(&sp, 1).unwrap();
        let vf = product(&x2, &psi1);
        let f = product(&x1, &x1);
        let expect = product(&x2, &x1).scale(&rat(2, 1));
        assert_eq!(schouten(&vf, &f), expect);
        // two functions bracket to zero
        assert!(schouten(&x1, &f).is_zero());
    }

    #[test]
    fn schouten_graded_jacobi_and_leibniz() {
        // The symmetrized bracket convention here relates to the
        // antisymmetric-convention bracket by [a,b] = (-1)^{|a|}[a,b]',
        // which turns the usual shifted Jacobi identity into
        //   [a,[b,c]] = (-1)^{|a|+1}[[a,b],c] + (-1)^{|a||b|+|a|+|b|+1}[b,[a,c]]
        // while Leibniz keeps the usual shape. The truncation is raised so no
        // nested product falls off the end, which would break exactness.
        let sp = Space::new(3).truncated(40);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..24 {
            let pa = (trial % 2) as i64;
            let pb = ((trial / 2) % 2) as i64;
            let a = random_poly(&sp, &mut rng, pa as u8);
            let b = random_poly(&sp, &mut rng, pb as u8);
            let c = random_poly(&sp, &mut rng, ((trial / 4) % 2) as u8);
            let lhs = schouten(&a, &schouten(&b, &c));
            let s1 = if (pa + 1).rem_euclid(2) == 1 { -Rat::one() } else { Rat::one() };
            let s2 = if (pa * pb + pa + pb + 1).rem_euclid(2) == 1 {
                -Rat::one()
            } else {
                Rat::one()
            };
            let rhs = schouten(&schouten(&a, &b), &c)
                .scale(&s1)
                .add(&schouten(&b, &schouten(&a, &c)).scale(&s2));
            assert_eq!(lhs, rhs, "jacobi failed at trial {trial}");
            // [a, bc] = [a,b]c + (-1)^{(|a|+1)|b|} b [a,c]
            let lhs = schouten(&a, &product(&b, &c));
            let sign = if ((pa + 1) * pb).rem_euclid(2) == 1 { -Rat::one() } else { Rat::one() };
            let rhs = product(&schouten(&a, &b), &c)
                .add(&product(&b, &schouten(&a, &c)).scale(&sign));
            assert_eq!(lhs, rhs, "leibniz failed at trial {trial}");
        }
    }

    #[test]
    fn schouten_graded_symmetry() {
        let sp = Space::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..12 {
            let pa = (trial % 2) as u8;
            let pb = ((trial / 2) % 2) as u8;
            let a = random_poly(&sp, &mut rng, pa);
            let b = random_poly(&sp, &mut rng, pb);
            let sign = if pa * pb == 1 { -Rat::one() } else { Rat::one() };
            assert_eq!(schouten(&a, &b), schouten(&b, &a).scale(&sign));
        }
    }

    #[test]
    fn project_kills_psi() {
        let sp = Space::new(2);
        let x1 = PolyVector::x(&sp, 0).unwrap();
        let psi1 = PolyVector::psi(&sp, 0).unwrap();
        let mix = x1.add(&psi1);
        assert_eq!(project_to_o(&mix), x1);
        assert_eq!(project_to_o(&x1), x1);
        let p = product(&psi1, &product(&PolyVector::psi(&sp, 1).unwrap(), &x1));
        assert!(project_to_o(&p).is_zero());
    }

    fn plane_graph(labels: &[u32], edges: &[(u32, u32)]) -> DirectedGraph {
        DirectedGraph::new(VertexSet::plane(labels.to_vec()), edges.to_vec()).unwrap()
    }

    #[test]
    fn one_edge_operator_is_tau_pairing() {
        let sp = Space::new(1);
        let g = plane_graph(&[1, 2], &[(1, 2)]);
        let psi1 = PolyVector::psi(&sp, 0).unwrap();
        let x1 = PolyVector::x(&sp, 0).unwrap();
        let out = phi_apply(&g, &[psi1, x1]).unwrap();
        assert_eq!(out, PolyVector::one(&sp));
    }

    #[test]
    fn two_edge_operators_reproduce_schouten() {
        // Φ(e12) + Φ(e21) = Schouten bracket on random homogeneous inputs
        let sp = Space::new(2);
        let e12 = plane_graph(&[1, 2], &[(1, 2)]);
        let e21 = plane_graph(&[1, 2], &[(2, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..12 {
            let a = random_poly(&sp, &mut rng, (trial % 2) as u8);
            let b = random_poly(&sp, &mut rng, ((trial / 2) % 2) as u8);
            let lhs = phi_apply(&e12, &[a.clone(), b.clone()])
                .unwrap()
                .add(&phi_apply(&e21, &[a.clone(), b.clone()]).unwrap());
            assert_eq!(lhs, schouten(&a, &b), "trial {trial}");
        }
    }

    #[test]
    fn edge_order_reversal_flips_sign() {
        let sp = Space::new(2);
        let g1 = plane_graph(&[1, 2, 3], &[(1, 2), (1, 3)]);
        let g2 = plane_graph(&[1, 2, 3], &[(1, 3), (1, 2)]);
        let a = product(
            &PolyVector::psi(&sp, 0).unwrap(),
            &PolyVector::psi(&sp, 1).unwrap(),
        );
        let b = PolyVector::x(&sp, 0).unwrap();
        let c = PolyVector::x(&sp, 1).unwrap();
        let v1 = phi_apply(&g1, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let v2 = phi_apply(&g2, &[a, b, c]).unwrap();
        assert!(!v1.is_zero());
        assert_eq!(v1, v2.scale(&-Rat::one()));
    }

    #[test]
    fn edgeless_flag_graph_multiplies() {
        let sp = Space::new(2);
        let vs = VertexSet::flag_plane(vec![], vec![1, 2]);
        let g = DirectedGraph::new(vs, vec![]).unwrap();
        let a = PolyVector::x(&sp, 0).unwrap();
        let b = PolyVector::x(&sp, 1).unwrap();
        let out = phi_apply(&g, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(out, product(&a, &b));
    }

    #[test]
    fn half_plane_operator_projects_and_types_slots() {
        let sp = Space::new(1);
        let vs = VertexSet::flag_half_plane(vec![1], vec![], vec![8, 9]);
        let g = DirectedGraph::new(vs, vec![(1, 8), (1, 9)]).unwrap();
        let op = phi(&g, &sp);
        assert_eq!(op.slots, vec![SlotKind::TPoly, SlotKind::Functions, SlotKind::Functions]);
        assert_eq!(op.degree, -2);
        // bivector ψ1ψ1 vanishes in dim 1; use ψ1 on one edge only
        let psi1 = PolyVector::psi(&sp, 0).unwrap();
        let x1 = PolyVector::x(&sp, 0).unwrap();
        let g1 = DirectedGraph::new(
            VertexSet::flag_half_plane(vec![1], vec![], vec![9]),
            vec![(1, 9)],
        )
        .unwrap();
        let out = phi_apply(&g1, &[psi1, x1.clone()]).unwrap();
        assert_eq!(out, PolyVector::one(&sp));
    }

    #[test]
    fn text_format_round_trip() {
        let sp = Space::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..10 {
            let p = random_poly(&sp, &mut rng, (trial % 2) as u8);
            let printed = p.to_string();
            let back = parse(&sp, &printed).unwrap();
            assert_eq!(p, back, "round trip of {printed}");
        }
        // ascii alias and explicit exponents
        let p = parse(&sp, "-1/2 * x1^2 * psi3 + 2 * x2").unwrap();
        assert_eq!(p.to_string(), "2 * x2 + -1/2 * x1^2 * ψ3");
        assert!(parse(&sp, "1 * psi1 * psi1").is_err());
        assert!(parse(&sp, "1 * x9").is_err());
    }

    #[test]
    fn odd_coordinate_model() {
        // degrees all 1: coordinates odd, directions even
        let sp = Space::with_degrees(vec![1, 1]);
        let x1 = PolyVector::x(&sp, 0).unwrap();
        let x2 = PolyVector::x(&sp, 1).unwrap();
        assert!(product(&x1, &x1).is_zero());
        assert_eq!(product(&x1, &x2), product(&x2, &x1).scale(&-Rat::one()));
        let psi2 = PolyVector::psi(&sp, 1).unwrap();
        // π = x1 x2 ψ2 squares to zero under the bracket
        let pi = product(&product(&x1, &x2), &psi2);
        assert!(schouten(&pi, &pi).is_zero());
        // [π, x1] reproduces the adjoint action x1 ↦ x1 x2 ... restricted
        let br = schouten(&pi, &x2);
        assert_eq!(br, product(&x1, &x2));
    }
}
