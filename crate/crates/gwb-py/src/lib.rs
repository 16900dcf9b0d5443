//! Python bindings: thin JSON/string-oriented wrappers over the core
//! library, mirroring the CLI's operations for interactive use.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gwb_core::duflo::{exotic_correction, lie_to_mc, star_product, LieAlgebra};
use gwb_core::graph::{enumerate_graphs as enumerate_core, DirectedGraph, VertexSet};
use gwb_core::homotopy::{
    stokes_check as stokes_core, verify_relation as verify_core, KnownWeights, McWeights,
    StructureComponents,
};
use gwb_core::polyvector::{parse, schouten as schouten_core, PolyVector, Space};
use gwb_core::rewriting::{check_confluence, normal_form, Presentation, TreePoly};
use gwb_core::weights::{integrate_weight as integrate_core, known_weight as known_core, GaugeSlice};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_graph(text: &str) -> PyResult<DirectedGraph> {
    serde_json::from_str(text).map_err(err)
}

fn algebra(preset: &str) -> PyResult<LieAlgebra> {
    match preset {
        "solvable2" => Ok(LieAlgebra::solvable2()),
        "heisenberg" => Ok(LieAlgebra::heisenberg()),
        "sl2" => Ok(LieAlgebra::sl2()),
        _ => {
            if let Some(n) = preset.strip_prefix("abelian") {
                return Ok(LieAlgebra::abelian(n.parse().map_err(err)?));
            }
            LieAlgebra::from_json(preset).map_err(err)
        }
    }
}

fn presentation(name: &str) -> PyResult<Presentation> {
    if let Some(p) = Presentation::builtin(name) {
        return Ok(p);
    }
    let p = Presentation::from_json(name).map_err(err)?;
    p.validate().map_err(err)?;
    Ok(p)
}

/// All admissible directed graphs over the requested vertex set, as JSON
/// strings. Free vertices are labelled first, then collinear, then boundary.
#[pyfunction]
#[pyo3(signature = (flavor, free, edges, collinear = 0, boundary = 0, bound = 10_000_000))]
fn graphs(
    flavor: &str,
    free: usize,
    edges: usize,
    collinear: usize,
    boundary: usize,
    bound: u64,
) -> PyResult<Vec<String>> {
    let mut next = 1u32;
    let mut take = |n: usize| {
        let v: Vec<u32> = (next..next + n as u32).collect();
        next += n as u32;
        v
    };
    let (f, c, b) = (take(free), take(collinear), take(boundary));
    let vs = match flavor {
        "C" => VertexSet::plane(f),
        "CF_C" => VertexSet::flag_plane(f, c),
        "CF_H" => VertexSet::flag_half_plane(f, c, b),
        other => return Err(PyValueError::new_err(format!("unknown flavor: {other}"))),
    };
    let graphs = enumerate_core(&vs, edges, None, bound).map_err(err)?;
    graphs
        .iter()
        .map(|g| serde_json::to_string(g).map_err(err))
        .collect()
}

/// Monte Carlo (or quadrature) weight of a graph given as JSON; returns
/// (value, stderr).
#[pyfunction]
#[pyo3(signature = (graph, samples = 100_000, seed = 42))]
fn weight(graph: &str, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let g = parse_graph(graph)?;
    let slice = GaugeSlice::for_graph(g.vertices()).map_err(err)?;
    let est = integrate_core(&g, &slice, samples, seed).map_err(err)?;
    Ok((est.value, est.stderr))
}

/// Exact tabulated weight of a graph, as a rational string, or None.
#[pyfunction]
fn known_weight(graph: &str) -> PyResult<Option<String>> {
    Ok(known_core(&parse_graph(graph)?).map(|w| w.to_string()))
}

/// Stokes identity report (JSON) for a graph whose form degree is one below
/// its stratum dimension.
#[pyfunction]
#[pyo3(signature = (graph, tolerance = 1e-9, samples = None, seed = 42))]
fn stokes(graph: &str, tolerance: f64, samples: Option<u64>, seed: u64) -> PyResult<String> {
    let g = parse_graph(graph)?;
    let report = match samples {
        None => stokes_core(&g, &mut KnownWeights, tolerance).map_err(err)?,
        Some(n) => {
            let mut mc = McWeights::new(n, seed);
            stokes_core(&g, &mut mc, tolerance).map_err(err)?
        }
    };
    Ok(report.to_json())
}

/// Verifies one named identity of the transferred structure maps; returns
/// the JSON report.
#[pyfunction]
#[pyo3(signature = (relation, dim = 2))]
fn relation(relation: &str, dim: usize) -> PyResult<String> {
    let components = StructureComponents::known(&Space::new(dim));
    Ok(verify_core(&components, relation).map_err(err)?.to_json())
}

/// Schouten bracket of two polyvectors given in text form, e.g.
/// "x1^2 * psi2 + 3 * x2".
#[pyfunction]
#[pyo3(signature = (a, b, dim = 2, truncation = 20))]
fn schouten(a: &str, b: &str, dim: usize, truncation: usize) -> PyResult<String> {
    let space = Space::new(dim).truncated(truncation);
    let pa = parse(&space, a).map_err(err)?;
    let pb = parse(&space, b).map_err(err)?;
    Ok(schouten_core(&pa, &pb).to_string())
}

/// Star-product graph/weight table (JSON) for a Lie algebra preset
/// ("abelian<N>", "solvable2", "heisenberg", "sl2", or algebra JSON).
#[pyfunction]
#[pyo3(signature = (preset, order = 2, samples = 100_000, seed = 42))]
fn star_table(preset: &str, order: usize, samples: u64, seed: u64) -> PyResult<String> {
    let alg = algebra(preset)?;
    let mut source = McWeights::new(samples, seed);
    let star = star_product(&alg, order, &mut source).map_err(err)?;
    Ok(star.term_table())
}

/// The degree-(-1) trilinear correction evaluated on the coordinate triple
/// (i, j, k) (1-based), as a polyvector string.
#[pyfunction]
fn exotic(preset: &str, i: usize, j: usize, k: usize) -> PyResult<String> {
    let alg = algebra(preset)?;
    let op = exotic_correction(&alg);
    let space = lie_to_mc(&alg).space().clone();
    let arg = |n: usize| PolyVector::x(&space, n.checked_sub(1).unwrap_or(usize::MAX)).map_err(err);
    let value = op.apply(&[arg(i)?, arg(j)?, arg(k)?]).map_err(err)?;
    Ok(value.to_string())
}

/// Confluence report (JSON) of a presentation ("ncg", "ncg1", "assoc", or
/// presentation JSON).
#[pyfunction]
#[pyo3(signature = (preset, budget = 10_000))]
fn koszul(preset: &str, budget: usize) -> PyResult<String> {
    let report = check_confluence(&presentation(preset)?, budget);
    serde_json::to_string(&report).map_err(err)
}

/// Normal form of a tree monomial (JSON, integers as leaves) under a
/// presentation's rewriting system, displayed as text.
#[pyfunction]
#[pyo3(signature = (preset, tree, budget = 10_000))]
fn tree_normal_form(preset: &str, tree: &str, budget: usize) -> PyResult<String> {
    let pres = presentation(preset)?;
    let t = serde_json::from_str(tree).map_err(err)?;
    let nf = normal_form(&TreePoly::from_tree(t), &pres, budget).map_err(err)?;
    Ok(pres.display_poly(&nf))
}

#[pymodule]
fn gwb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(graphs, m)?)?;
    m.add_function(wrap_pyfunction!(weight, m)?)?;
    m.add_function(wrap_pyfunction!(known_weight, m)?)?;
    m.add_function(wrap_pyfunction!(stokes, m)?)?;
    m.add_function(wrap_pyfunction!(relation, m)?)?;
    m.add_function(wrap_pyfunction!(schouten, m)?)?;
    m.add_function(wrap_pyfunction!(star_table, m)?)?;
    m.add_function(wrap_pyfunction!(exotic, m)?)?;
    m.add_function(wrap_pyfunction!(koszul, m)?)?;
    m.add_function(wrap_pyfunction!(tree_normal_form, m)?)?;
    Ok(())
}
