//! Hochschild cochains with brace operations.
//!
//! A cochain on the function algebra is a finite collection of multilinear
//! operators, one per arity, each with an internal degree (the degree of the
//! operator as a map `A^{⊗r} → A`). In the grading used throughout, an
//! arity-`r` component of internal degree `d` sits in total degree `r + d`,
//! and Koszul signs are computed with the suspended degrees `|x|' = |x| − 1`
//! for cochains and `|a|' = |a| − 1` for algebra elements.

use crate::polyvector::{PolyVector, Space};
use crate::Rat;
use num_traits::One;
use std::collections::BTreeMap;
use std::sync::Arc;

pub type MultiFn = Arc<dyn Fn(&[PolyVector]) -> PolyVector + Send + Sync>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CochainError {
    #[error("brace needs at least one argument")]
    EmptyBrace,
    #[error("cochain is not concentrated in a single total degree")]
    Inhomogeneous,
}

/// A Hochschild cochain: multilinear components keyed by (arity, internal
/// degree), finitely supported.
#[derive(Clone)]
pub struct Cochain {
    space: Space,
    comps: BTreeMap<(usize, i64), MultiFn>,
}

impl Cochain {
    pub fn zero(space: &Space) -> Self {
        Cochain { space: space.clone(), comps: BTreeMap::new() }
    }

    /// A single multilinear component.
    pub fn from_multilinear(space: &Space, arity: usize, internal_degree: i64, op: MultiFn) -> Self {
        let mut c = Cochain::zero(space);
        c.comps.insert((arity, internal_degree), op);
        c
    }

    /// A 0-cochain given by a constant.
    pub fn from_element(space: &Space, value: PolyVector) -> Self {
        let degree = value.degree().unwrap_or(0);
        Cochain::from_multilinear(space, 0, degree, Arc::new(move |_| value.clone()))
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn arities(&self) -> Vec<usize> {
        let mut a: Vec<usize> = self.comps.keys().map(|&(r, _)| r).collect();
        a.dedup();
        a
    }

    /// Total degree when all components agree on `arity + internal degree`.
    pub fn total_degree(&self) -> Result<i64, CochainError> {
        let mut it = self.comps.keys().map(|&(r, d)| r as i64 + d);
        let Some(first) = it.next() else { return Err(CochainError::Inhomogeneous) };
        if it.all(|t| t == first) {
            Ok(first)
        } else {
            Err(CochainError::Inhomogeneous)
        }
    }

    pub fn add(&self, other: &Cochain) -> Cochain {
        let mut out = self.clone();
        for (&key, op) in &other.comps {
            match out.comps.remove(&key) {
                Some(prev) => {
                    let op = op.clone();
                    out.comps.insert(
                        key,
                        Arc::new(move |args: &[PolyVector]| prev(args).add(&op(args))),
                    );
                }
                None => {
                    out.comps.insert(key, op.clone());
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Cochain {
        let mut out = Cochain::zero(&self.space);
        for (&key, op) in &self.comps {
            let op = op.clone();
            let c = c.clone();
            out.comps
                .insert(key, Arc::new(move |args: &[PolyVector]| op(args).scale(&c)));
        }
        out
    }

    /// Sum of all arity-`r` components evaluated on `args`.
    pub fn eval(&self, args: &[PolyVector]) -> PolyVector {
        let mut out = PolyVector::zero(&self.space);
        for (&(r, _), op) in &self.comps {
            if r == args.len() {
                out = out.add(&op(args));
            }
        }
        out
    }
}

impl std::fmt::Debug for Cochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cochain{:?}", self.comps.keys().collect::<Vec<_>>())
    }
}

/// Splits arguments into parity-homogeneous tuples with the list of parities.
fn homogeneous_tuples(args: &[PolyVector]) -> Vec<(Vec<PolyVector>, Vec<u8>)> {
    let mut out: Vec<(Vec<PolyVector>, Vec<u8>)> = vec![(vec![], vec![])];
    for a in args {
        let parts = a.parity_parts();
        let mut next = vec![];
        for (tuple, pars) in &out {
            for (p, part) in parts.iter().enumerate() {
                if part.is_zero() {
                    continue;
                }
                let mut t = tuple.clone();
                t.push(part.clone());
                let mut q = pars.clone();
                q.push(p as u8);
                next.push((t, q));
            }
        }
        out = next;
    }
    out
}

type CompRef = (usize, i64, MultiFn);

/// The brace `x{y_1,…,y_p}` on single components: inserts the `y_k` into `p`
/// of `x`'s slots in order. The composite is computed in the suspended
/// complex, where the insertion sign is `Σ_k |y_k|'·Σ_{j≤i_k}|a_j|'` with
/// `i_k` counting the outer arguments standing before the `k`-th insertion,
/// and then transported back: each operator acts on suspended arguments
/// through the shift isomorphism, which contributes the resuspension signs
/// `Σ_j (r−j)|b_j|'` per factor of arity `r` and the constant
/// `n(n−1)/2` from inverting the `n`-fold suspension of the result. Without
/// the transport, odd-degree derivations would fail to be cocycles on odd
/// arguments.
fn brace_single(space: &Space, x: &CompRef, ys: &[CompRef]) -> Option<CompRef> {
    let (rx, dx, xop) = x;
    let p = ys.len();
    if p > *rx {
        return None;
    }
    let n = rx - p + ys.iter().map(|(r, _, _)| r).sum::<usize>();
    let d = dx + ys.iter().map(|(_, d, _)| d).sum::<i64>();
    let rx = *rx;
    let xop = xop.clone();
    let ys: Vec<CompRef> = ys.iter().map(|(r, d, op)| (*r, *d, op.clone())).collect();
    let space = space.clone();
    let op: MultiFn = Arc::new(move |args: &[PolyVector]| {
        let mut out = PolyVector::zero(&space);
        for (tuple, pars) in homogeneous_tuples(args) {
            // suspended parities of the outer arguments
            let susp: Vec<u8> = pars.iter().map(|&q| (q + 1) % 2).collect();
            let prefix: Vec<u32> = {
                let mut acc = 0u32;
                let mut v = vec![0u32];
                for &s in &susp {
                    acc += s as u32;
                    v.push(acc);
                }
                v
            };
            // choose the insertion slots 1 ≤ j_1 < … < j_p ≤ rx
            let mut slots: Vec<usize> = (0..ys.len()).collect();
            loop {
                // arguments consumed before the k-th insertion
                let mut sign = 0u32;
                let mut consumed = 0usize;
                let mut ok = true;
                let mut positions = vec![];
                for (k, &jk) in slots.iter().enumerate() {
                    let before = jk - k + consumed;
                    if before > tuple.len() {
                        ok = false;
                        break;
                    }
                    let yk_susp = ((ys[k].0 as i64 + ys[k].1 - 1).rem_euclid(2)) as u32;
                    sign += yk_susp * prefix[before];
                    positions.push(before);
                    consumed += ys[k].0;
                }
                if ok && tuple.len() == n {
                    // desuspension of the whole argument string; the constant
                    // accounts for inverting the n-fold suspension exactly
                    sign += (n * (n.max(1) - 1) / 2) as u32;
                    for (i, &q) in pars.iter().enumerate() {
                        sign += (n - 1 - i) as u32 * q as u32;
                    }
                    let mut x_args: Vec<PolyVector> = Vec::with_capacity(rx);
                    let mut x_pars: Vec<u32> = Vec::with_capacity(rx);
                    let mut cursor = 0usize;
                    let mut fine = true;
                    for (k, &before) in positions.iter().enumerate() {
                        while x_args.len() < slots[k] && cursor < tuple.len() {
                            x_args.push(tuple[cursor].clone());
                            x_pars.push(pars[cursor] as u32);
                            cursor += 1;
                        }
                        if x_args.len() != slots[k] || before != cursor {
                            fine = false;
                            break;
                        }
                        let (ry, dy, yop) = &ys[k];
                        // resuspension inside the inserted factor
                        let mut ypar = dy.rem_euclid(2) as u32;
                        for j in 0..*ry {
                            sign += (*ry - 1 - j) as u32 * susp[cursor + j] as u32;
                            ypar += pars[cursor + j] as u32;
                        }
                        x_args.push(yop(&tuple[cursor..cursor + ry]));
                        x_pars.push(ypar % 2);
                        cursor += ry;
                    }
                    while fine && cursor < n {
                        x_args.push(tuple[cursor].clone());
                        x_pars.push(pars[cursor] as u32);
                        cursor += 1;
                    }
                    if fine && x_args.len() == rx {
                        // resuspension of the outer factor's inputs
                        for (u, &q) in x_pars.iter().enumerate() {
                            sign += (rx - 1 - u) as u32 * (q + 1);
                        }
                        let c = if sign % 2 == 0 { Rat::one() } else { -Rat::one() };
                        out = out.add(&xop(&x_args).scale(&c));
                    }
                }
                // next increasing slot tuple
                let mut i = slots.len();
                let mut advanced = false;
                while i > 0 {
                    i -= 1;
                    if slots[i] < rx - (slots.len() - i) {
                        slots[i] += 1;
                        for j in i + 1..slots.len() {
                            slots[j] = slots[j - 1] + 1;
                        }
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    break;
                }
            }
        }
        out
    });
    Some((n, d, op))
}

/// The brace operation `x{y_1,…,y_p}`, summed over all components.
pub fn brace(x: &Cochain, ys: &[Cochain]) -> Result<Cochain, CochainError> {
    if ys.is_empty() {
        return Err(CochainError::EmptyBrace);
    }
    let space = x.space.clone();
    let mut out = Cochain::zero(&space);
    let mut selections: Vec<Vec<CompRef>> = vec![vec![]];
    for y in ys {
        let mut next = vec![];
        for sel in &selections {
            for (&(r, d), op) in &y.comps {
                let mut s = sel.clone();
                s.push((r, d, op.clone()));
                next.push(s);
            }
        }
        selections = next;
    }
    for (&(rx, dx), xop) in &x.comps {
        for sel in &selections {
            if let Some((n, d, op)) = brace_single(&space, &(rx, dx, xop.clone()), sel) {
                out = out.add(&Cochain::from_multilinear(&space, n, d, op));
            }
        }
    }
    Ok(out)
}

/// Gerstenhaber bracket `[x,y] = x{y}₁ − (−1)^{|x|'|y|'} y{x}₁`, assembled
/// component-wise so the sign uses each component's suspended degree.
pub fn gerstenhaber(x: &Cochain, y: &Cochain) -> Cochain {
    let space = x.space.clone();
    let mut out = Cochain::zero(&space);
    for (&(rx, dx), xop) in &x.comps {
        for (&(ry, dy), yop) in &y.comps {
            let xc = (rx, dx, xop.clone());
            let yc = (ry, dy, yop.clone());
            if let Some((n, d, op)) = brace_single(&space, &xc, std::slice::from_ref(&yc)) {
                out = out.add(&Cochain::from_multilinear(&space, n, d, op));
            }
            if let Some((n, d, op)) = brace_single(&space, &yc, std::slice::from_ref(&xc)) {
                let sx = (rx as i64 + dx - 1).rem_euclid(2);
                let sy = (ry as i64 + dy - 1).rem_euclid(2);
                let sign = if sx * sy == 1 { Rat::one() } else { -Rat::one() };
                out = out.add(&Cochain::from_multilinear(&space, n, d, op).scale(&sign));
            }
        }
    }
    out
}

/// A (possibly curved) A∞ structure: a Maurer–Cartan cochain.
#[derive(Clone, Debug)]
pub struct AInfinity {
    pub structure: Cochain,
}

impl AInfinity {
    /// The strict structure whose only component is the commutative product
    /// of the function algebra.
    pub fn multiplication(space: &Space) -> Self {
        let sp = space.clone();
        let op: MultiFn =
            Arc::new(move |args: &[PolyVector]| crate::polyvector::product(&args[0], &args[1]));
        AInfinity { structure: Cochain::from_multilinear(&sp, 2, 0, op) }
    }

    /// Checks `[m,m] = 0` by evaluating on the given argument tuples.
    pub fn is_maurer_cartan_on(&self, panel: &[Vec<PolyVector>]) -> bool {
        let sq = gerstenhaber(&self.structure, &self.structure);
        panel.iter().all(|args| sq.eval(args).is_zero())
    }
}

/// The Hochschild differential `d(x) = [m, x]`.
pub fn differential(m: &AInfinity, x: &Cochain) -> Cochain {
    gerstenhaber(&m.structure, x)
}

/// The brace-induced structure `∪^m`: `cup(m, args) = m{args}`. For a strict
/// binary `m` and two 1-cochains this is the classical cup product.
pub fn cup(m: &AInfinity, args: &[Cochain]) -> Result<Cochain, CochainError> {
    brace(&m.structure, args)
}

/// An operator on cochains: components keyed by the number of cochain
/// arguments, each with a suspended degree for the level-two Koszul signs.
#[derive(Clone)]
pub struct CochainOperator {
    space: Space,
    /// components: arity -> (suspended degree, evaluator)
    comps: BTreeMap<usize, (i64, Arc<dyn Fn(&[Cochain]) -> Cochain + Send + Sync>)>,
}

impl CochainOperator {
    pub fn zero(space: &Space) -> Self {
        CochainOperator { space: space.clone(), comps: BTreeMap::new() }
    }

    pub fn eval(&self, args: &[Cochain]) -> Cochain {
        match self.comps.get(&args.len()) {
            Some((_, op)) => op(args),
            None => Cochain::zero(&self.space),
        }
    }
}

/// `br(x)`: the cochain operator with `p`-th component
/// `(y_1,…,y_p) ↦ x{y_1,…,y_p}`, plus the extra summand `−(−1)^{|x|'|y|'}
/// y{x}₁` at `p = 1` (so the one-argument component is `y ↦ [x,y]`). With
/// this sign `br` intertwines the two Gerstenhaber brackets.
pub fn br(x: &Cochain, max_args: usize) -> CochainOperator {
    let space = x.space.clone();
    let susp = x
        .comps
        .keys()
        .map(|&(r, d)| r as i64 + d - 1)
        .next()
        .unwrap_or(0);
    let mut out = CochainOperator::zero(&space);
    for p in 1..=max_args {
        let x = x.clone();
        let sp = space.clone();
        let op = Arc::new(move |ys: &[Cochain]| {
            let mut val = brace(&x, ys).expect("nonempty argument list");
            if ys.len() == 1 {
                // the `(){x}₁` summand, applied component-wise: plugging the
                // argument y into the empty slot moves x past y, so the term
                // is −(−1)^{|x|'|y|'} y{x}₁ and the one-argument component of
                // the operator is the adjoint action [x,y]
                for (&(ry, dy), yop) in &ys[0].comps {
                    let piece = Cochain::from_multilinear(&sp, ry, dy, yop.clone());
                    let mut term =
                        brace(&piece, std::slice::from_ref(&x)).expect("one argument");
                    let sy = (ry as i64 + dy - 1).rem_euclid(2);
                    if (susp.rem_euclid(2) * sy) == 0 {
                        term = term.scale(&-Rat::one());
                    }
                    val = val.add(&term);
                }
            }
            val
        });
        out.comps.insert(p, (susp, op));
    }
    out
}

/// Level-two Gerstenhaber bracket of cochain operators, with the Koszul signs
/// driven by the suspended total degrees of the cochain arguments.
pub fn operator_bracket(f: &CochainOperator, g: &CochainOperator, max_args: usize) -> CochainOperator {
    let mut out = CochainOperator::zero(&f.space);
    let sd = f.comps.values().map(|(d, _)| *d).next().unwrap_or(0)
        + g.comps.values().map(|(d, _)| *d).next().unwrap_or(0);
    for n in 1..=max_args {
        let f = f.clone();
        let g = g.clone();
        let space = out.space.clone();
        let op = Arc::new(move |zs: &[Cochain]| {
            let mut total = Cochain::zero(&space);
            for (first, second, flip) in [(&f, &g, false), (&g, &f, true)] {
                for (&m, (sd_first, fop)) in &first.comps {
                    for (&k, (sd_second, gop)) in &second.comps {
                        if m + k != zs.len() + 1 {
                            continue;
                        }
                        // insert `second(z_{i+1}..z_{i+k})` into slot i of `first`
                        for i in 0..m {
                            let mut prefix = 0i64;
                            let mut ok = true;
                            for z in &zs[..i] {
                                match z.total_degree() {
                                    Ok(t) => prefix += t - 1,
                                    Err(_) => ok = false,
                                }
                            }
                            if !ok {
                                continue;
                            }
                            let inner = gop(&zs[i..i + k]);
                            let mut args: Vec<Cochain> = zs[..i].to_vec();
                            args.push(inner);
                            args.extend_from_slice(&zs[i + k..]);
                            let mut sgn = (sd_second * prefix).rem_euclid(2);
                            if flip {
                                sgn += (sd_first * sd_second).rem_euclid(2) + 1;
                            }
                            let c = if sgn.rem_euclid(2) == 0 { Rat::one() } else { -Rat::one() };
                            total = total.add(&fop(&args).scale(&c));
                        }
                    }
                }
            }
            total
        });
        out.comps.insert(n, (sd, op));
    }
    out
}
