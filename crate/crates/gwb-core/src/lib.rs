//! Workbench for directed-graph (co)operads, configuration-space weight
//! integrals, formal polyvector fields and the homotopy-algebra structures
//! they induce, together with an operadic rewriting engine.
//!
//! The crate is organized in layers:
//!
//! * [`graph`] — directed graphs in three flavors, canonical forms, enumeration;
//! * [`cooperad`] — subgraph embeddings, quotients, cocomposition and the dual
//!   operadic composition;
//! * [`polyvector`] — truncated polyvector fields, Schouten bracket and the
//!   representation of graphs as multilinear operators;
//! * [`hochschild`] — braces, Gerstenhaber bracket and the Hochschild
//!   differential on cochains of the truncated function algebra;
//! * [`weights`] — Monte Carlo / quadrature evaluation of graph weights over
//!   gauge-fixed configuration strata, plus the table of exactly known weights;
//! * [`homotopy`] — boundary-stratum enumeration, Stokes identity checks,
//!   structure-relation verification and twisting by Maurer-Cartan elements;
//! * [`duflo`] — star products and the exotic trilinear correction for small
//!   Lie algebras;
//! * [`rewriting`] — operadic rewriting, critical monomials and confluence.

pub mod cooperad;
pub mod duflo;
pub mod graph;
pub mod hochschild;
pub mod homotopy;
pub mod polyvector;
pub mod rewriting;
pub mod weights;

pub use num_rational::BigRational as Rat;

/// Convenience constructor for exact rational constants.
pub fn rat(num: i64, den: i64) -> Rat {
    use num_bigint::BigInt;
    Rat::new(BigInt::from(num), BigInt::from(den))
}
