//! End-to-end acceptance suite. Each test covers one numbered criterion and
//! prints a single PASS line; every check runs at its stated tolerance and
//! (where applicable) through the `gwb` binary alone.

use std::io::Write;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use gwb_core::cooperad::operad_compose;
use gwb_core::graph::{enumerate_graphs, DirectedGraph, VertexSet};
use gwb_core::hochschild::{
    brace, br, differential, gerstenhaber, operator_bracket, AInfinity, Cochain, MultiFn,
};
use gwb_core::polyvector::{deriv_x, phi_apply, product, schouten, PolyVector, Space};
use gwb_core::{rat, Rat};

/// Runs the CLI with a clean cache environment and captures stdout.
fn gwb(args: &[&str]) -> (Value, String, i32) {
    let output = Command::new(env!("CARGO_BIN_EXE_gwb"))
        .env_remove("GWB_CACHE_DIR")
        .args(args)
        .output()
        .expect("gwb runs");
    let stdout = String::from_utf8(output.stdout).expect("utf-8 report");
    let code = output.status.code().expect("exit code");
    let value = serde_json::from_str(stdout.trim()).unwrap_or(Value::Null);
    (value, stdout, code)
}

fn write_graph(dir: &std::path::Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).expect("graph file");
    writeln!(f, "{text}").unwrap();
    path.display().to_string()
}

#[test]
fn criterion_1_one_edge_plane_weights_are_exactly_one() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (report, _, code) =
        gwb(&["graphs", "enumerate", "--flavor", "C", "--vertices", "2", "--edges", "1"]);
    assert_eq!(code, 0);
    let graphs = report["graphs"].as_array().unwrap();
    assert_eq!(graphs.len(), 2, "two one-edge plane graphs");
    for (i, g) in graphs.iter().enumerate() {
        let path = write_graph(dir.path(), &format!("edge_{i}.json"), &g.to_string());
        let (report, _, code) = gwb(&[
            "weight", "compute", "--graph", &path, "--samples", "1000", "--seed", "42",
            "--expect", "1", "--tolerance", "1e-6",
        ]);
        assert_eq!(code, 0, "weight of {g} differs from 1 beyond 1e-6");
        assert!((report["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0, "criterion 1 must finish under 1 s");
    println!("PASS criterion 1: both one-edge plane graphs have weight 1 within 1e-6");
}

/// The eight degree-three star graphs on one free and three collinear
/// vertices: one edge per collinear vertex, each orientation.
fn one_three_star_graphs() -> Vec<String> {
    let mut out = Vec::new();
    for mask in 0..8u32 {
        let edges: Vec<String> = (0..3)
            .map(|i| {
                let c = i + 2;
                if mask >> i & 1 == 0 {
                    format!("[1,{c}]")
                } else {
                    format!("[{c},1]")
                }
            })
            .collect();
        out.push(format!(
            "{{\"flavor\":\"CF_C\",\"free\":[1],\"collinear\":[2,3,4],\"boundary\":[],\"edges\":[{}]}}",
            edges.join(",")
        ));
    }
    out
}

#[test]
fn criterion_2_the_eight_one_three_graphs_weigh_one_twenty_fourth() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in one_three_star_graphs().iter().enumerate() {
        let path = write_graph(dir.path(), &format!("v13_{}.json", i + 1), text);
        let (report, _, code) = gwb(&[
            "weight", "compute", "--graph", &path, "--samples", "1000000", "--seed", "42",
            "--expect", "1/24", "--tolerance", "5e-3",
        ]);
        assert_eq!(
            code, 0,
            "graph {} missed 1/24: value {} stderr {}",
            text, report["value"], report["stderr"]
        );
    }
    assert!(start.elapsed().as_secs() < 300, "criterion 2 must finish under 5 min");
    println!("PASS criterion 2: all eight (1,3) star graphs estimate 1/24 within max(5e-3, 3*stderr)");
}

#[test]
fn criterion_3_vanishing_weights() {
    let dir = tempfile::tempdir().unwrap();
    // (a) three distinct top graphs on three plane vertices
    let plane_tops = [
        "[[1,2],[1,3],[2,3]]",
        "[[2,1],[1,3],[2,3]]",
        "[[1,2],[3,1],[3,2]]",
    ];
    for (i, edges) in plane_tops.iter().enumerate() {
        let text = format!(
            "{{\"flavor\":\"C\",\"free\":[1,2,3],\"collinear\":[],\"boundary\":[],\"edges\":{edges}}}"
        );
        let path = write_graph(dir.path(), &format!("top_{i}.json"), &text);
        let (report, _, code) = gwb(&[
            "weight", "compute", "--graph", &path, "--samples", "200000", "--seed", "42",
            "--expect", "0", "--tolerance", "1e-12",
        ]);
        assert_eq!(
            code, 0,
            "plane top graph {edges} not within 3*stderr of 0: value {} stderr {}",
            report["value"], report["stderr"]
        );
    }
    // (b) two top graphs with p+q odd over the flag configuration spaces
    let odd_tops = [
        // (p,q) = (1,2): two-dimensional slice, deterministic quadrature
        (
            "{\"flavor\":\"CF_C\",\"free\":[1],\"collinear\":[2,3],\"boundary\":[],\"edges\":[[1,2],[1,3]]}",
            "1e-6",
        ),
        // (p,q) = (2,1): three-dimensional slice, Monte Carlo
        (
            "{\"flavor\":\"CF_C\",\"free\":[1,2],\"collinear\":[3],\"boundary\":[],\"edges\":[[1,2],[1,3],[2,3]]}",
            "1e-12",
        ),
    ];
    for (i, (text, tol)) in odd_tops.iter().enumerate() {
        let path = write_graph(dir.path(), &format!("odd_{i}.json"), text);
        let (report, _, code) = gwb(&[
            "weight", "compute", "--graph", &path, "--samples", "200000", "--seed", "42",
            "--expect", "0", "--tolerance", tol,
        ]);
        assert_eq!(
            code, 0,
            "odd flag top graph {i} not within tolerance of 0: value {} stderr {}",
            report["value"], report["stderr"]
        );
    }
    // (c) a collinear-collinear edge vanishes exactly via the weight table
    let text = "{\"flavor\":\"CF_C\",\"free\":[1],\"collinear\":[2,3],\"boundary\":[],\"edges\":[[2,3],[1,2]]}";
    let path = write_graph(dir.path(), "collinear_edge.json", text);
    let (report, _, code) = gwb(&[
        "weight", "compute", "--graph", &path, "--samples", "1000", "--seed", "42",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["exact"], "0", "collinear-collinear edge must be tabulated as exact 0");
    println!("PASS criterion 3: plane tops and odd flag tops vanish within 3*stderr; collinear-collinear edge is exact 0");
}

// ---------------------------------------------------------------------------
// Criterion 4: exact symbolic identities on seeded random inputs.

/// Random polyvector of homogeneous Grassmann parity: a few monomials in the
/// coordinates times a direction word of the requested parity.
fn random_polyvector(space: &Space, rng: &mut ChaCha8Rng, parity: usize) -> PolyVector {
    let mut out = PolyVector::zero(space);
    for _ in 0..4 {
        let mut term = PolyVector::constant(space, rat(rng.gen_range(-3i64..=3), 1));
        for a in 0..space.dim {
            let e = rng.gen_range(0..=2u8);
            for _ in 0..e {
                term = product(&term, &PolyVector::x(space, a).unwrap());
            }
        }
        let mut take: Vec<bool> = (0..space.dim).map(|_| rng.gen_bool(0.5)).collect();
        if take.iter().filter(|&&t| t).count() % 2 != parity % 2 {
            take[0] = !take[0];
        }
        for a in 0..space.dim {
            if take[a] {
                term = product(&term, &PolyVector::psi(space, a).unwrap());
            }
        }
        out = out.add(&term);
    }
    out
}

fn sign(exp: i64) -> Rat {
    if exp.rem_euclid(2) == 1 {
        -rat(1, 1)
    } else {
        rat(1, 1)
    }
}

/// Random multilinear cochain: each slot is hit by a word of derivatives and
/// coordinate multiplications and the results are multiplied.
fn random_cochain(space: &Space, rng: &mut ChaCha8Rng, arity: usize) -> Cochain {
    let mut slot_ops: Vec<Vec<u8>> = vec![];
    for _ in 0..arity {
        let len = rng.gen_range(0..3u8);
        slot_ops.push((0..len).map(|_| rng.gen_range(0..4u8)).collect());
    }
    let c = rat(rng.gen_range(-2i64..=2), 1);
    let sp = space.clone();
    let op: MultiFn = Arc::new(move |args: &[PolyVector]| {
        let mut acc = PolyVector::constant(&sp, c.clone());
        for (slot, word) in slot_ops.iter().enumerate() {
            let mut v = args[slot].clone();
            for &w in word {
                v = match w {
                    0 => deriv_x(&v, 0),
                    1 => deriv_x(&v, 1),
                    2 => product(&PolyVector::x(&sp, 0).unwrap(), &v),
                    _ => product(&PolyVector::x(&sp, 1).unwrap(), &v),
                };
            }
            acc = product(&acc, &v);
        }
        acc
    });
    Cochain::from_multilinear(space, arity, 0, op)
}

fn random_function(space: &Space, rng: &mut ChaCha8Rng) -> PolyVector {
    let mut out = PolyVector::constant(space, rat(rng.gen_range(-2i64..=2), 1));
    for _ in 0..2 {
        let mut m = PolyVector::constant(space, rat(rng.gen_range(-2i64..=2), 1));
        for _ in 0..rng.gen_range(1..3) {
            let a = rng.gen_range(0..space.dim);
            m = product(&m, &PolyVector::x(space, a).unwrap());
        }
        out = out.add(&m);
    }
    out
}

fn assert_cochain_eq(a: &Cochain, b: &Cochain, space: &Space, rng: &mut ChaCha8Rng, msg: &str) {
    let mut arities: Vec<usize> = a.arities();
    arities.extend(b.arities());
    arities.sort_unstable();
    arities.dedup();
    for r in arities {
        for _ in 0..3 {
            let args: Vec<PolyVector> = (0..r).map(|_| random_function(space, rng)).collect();
            assert_eq!(a.eval(&args), b.eval(&args), "{msg} at arity {r}");
        }
    }
}

#[test]
fn criterion_4_symbolic_structure_identities() {
    let start = Instant::now();

    // Schouten graded Jacobi and Leibniz on >= 20 seeded random polyvectors
    // in dimensions up to 3. The symmetrized-convention bracket satisfies
    //   [a,[b,c]] = (-1)^{|a|+1}[[a,b],c] + (-1)^{|a||b|+|a|+|b|+1}[b,[a,c]]
    //   [a, bc]   = [a,b]c + (-1)^{(|a|+1)|b|} b [a,c]
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut trials = 0usize;
    for dim in 1..=3usize {
        let sp = Space::new(dim).truncated(40);
        for trial in 0..8usize {
            let pa = (trial % 2) as i64;
            let pb = ((trial / 2) % 2) as i64;
            let pc = (trial / 4) % 2;
            let a = random_polyvector(&sp, &mut rng, pa as usize);
            let b = random_polyvector(&sp, &mut rng, pb as usize);
            let c = random_polyvector(&sp, &mut rng, pc);
            let lhs = schouten(&a, &schouten(&b, &c));
            let rhs = schouten(&schouten(&a, &b), &c)
                .scale(&sign(pa + 1))
                .add(&schouten(&b, &schouten(&a, &c)).scale(&sign(pa * pb + pa + pb + 1)));
            assert_eq!(lhs, rhs, "Schouten Jacobi failed (dim {dim}, trial {trial})");
            let lhs = schouten(&a, &product(&b, &c));
            let rhs = product(&schouten(&a, &b), &c)
                .add(&product(&b, &schouten(&a, &c)).scale(&sign((pa + 1) * pb)));
            assert_eq!(lhs, rhs, "Schouten Leibniz failed (dim {dim}, trial {trial})");
            trials += 1;
        }
    }
    assert!(trials >= 20);

    // Gerstenhaber antisymmetry and Jacobi, and d^2 = 0, on random cochains
    // of arity <= 2.
    let sp = Space::new(2).truncated(40);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..6usize {
        let x = random_cochain(&sp, &mut rng, 1 + trial % 2);
        let y = random_cochain(&sp, &mut rng, 1 + (trial / 2) % 2);
        let z = random_cochain(&sp, &mut rng, 1 + (trial / 4) % 2);
        let sx = x.total_degree().unwrap() - 1;
        let sy = y.total_degree().unwrap() - 1;
        let lhs = gerstenhaber(&x, &y);
        let rhs = gerstenhaber(&y, &x).scale(&-sign(sx * sy));
        assert_cochain_eq(&lhs, &rhs, &sp, &mut rng, "Gerstenhaber antisymmetry");
        let lhs = gerstenhaber(&x, &gerstenhaber(&y, &z));
        let rhs = gerstenhaber(&gerstenhaber(&x, &y), &z)
            .add(&gerstenhaber(&y, &gerstenhaber(&x, &z)).scale(&sign(sx * sy)));
        assert_cochain_eq(&lhs, &rhs, &sp, &mut rng, "Gerstenhaber Jacobi");
    }
    let m = AInfinity::multiplication(&sp);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for arity in 0..=2usize {
        let x = if arity == 0 {
            Cochain::from_element(&sp, random_function(&sp, &mut rng))
        } else {
            random_cochain(&sp, &mut rng, arity)
        };
        let dd = differential(&m, &differential(&m, &x));
        assert_cochain_eq(&dd, &Cochain::zero(&sp), &sp, &mut rng, "d^2 = 0");
    }

    // br intertwines the Gerstenhaber bracket with the operator bracket.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..4usize {
        let x = random_cochain(&sp, &mut rng, 1 + trial % 2);
        let y = random_cochain(&sp, &mut rng, 1 + (trial / 2) % 2);
        let lhs = br(&gerstenhaber(&x, &y), 2);
        let rhs = operator_bracket(&br(&x, 2), &br(&y, 2), 2);
        for p in 1..=2usize {
            let zs: Vec<Cochain> = (0..p).map(|_| random_cochain(&sp, &mut rng, 1)).collect();
            let a = lhs.eval(&zs);
            let b = rhs.eval(&zs);
            assert_cochain_eq(&a, &b, &sp, &mut rng, "br Lie map");
        }
    }
    // brace sanity kept alongside: inserting into the product is a derivation
    let f = Cochain::from_multilinear(
        &sp,
        1,
        0,
        Arc::new(|args: &[PolyVector]| deriv_x(&args[0], 0)),
    );
    let braced = brace(&m.structure, std::slice::from_ref(&f)).unwrap();
    let a = random_function(&sp, &mut rng);
    let b = random_function(&sp, &mut rng);
    let expect = product(&deriv_x(&a, 0), &b).add(&product(&a, &deriv_x(&b, 0)));
    assert_eq!(braced.eval(&[a, b]), expect);

    // Phi is compatible with operadic composition on all plane graph pairs
    // with at most two edges each: evaluating the composed graph sum equals
    // plugging the inner operator's value into the grafting slot, times the
    // Koszul sign of the graded insertion. The operators are applied with
    // parity equal to their edge count, so the sign is
    //   (-1)^{e1 e2} * (-1)^{e2 (|a_1| + ... + |a_{i-1}|)}
    // for homogeneous outer arguments a_1, ..., a_{i-1} before the slot.
    let sp = Space::new(2).truncated(40);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let outer_sets = [VertexSet::plane(vec![1, 10]), VertexSet::plane(vec![1, 10, 20])];
    let inner_sets = [VertexSet::plane(vec![10, 11]), VertexSet::plane(vec![10, 11, 12])];
    let mut pairs = 0usize;
    let mut nontrivial = 0usize;
    for outer in &outer_sets {
        for e1 in 1..=2usize {
            for g1 in enumerate_graphs(outer, e1, None, 1_000_000).unwrap() {
                for inner in &inner_sets {
                    for e2 in 1..=2usize {
                        for g2 in enumerate_graphs(inner, e2, None, 1_000_000).unwrap() {
                            let sum = operad_compose(&g1, 10, &g2, 1_000_000).unwrap();
                            let outer_labels: Vec<u32> =
                                g1.vertices().labels().copied().collect();
                            let inner_count = inner.len();
                            for trial in 0..4usize {
                                let inner_args: Vec<PolyVector> = (0..inner_count)
                                    .map(|k| random_polyvector(&sp, &mut rng, (trial + k) % 2))
                                    .collect();
                                let spare: Vec<(PolyVector, usize)> = (0..outer_labels.len() - 1)
                                    .map(|k| {
                                        let p = (trial / 2 + k) % 2;
                                        (random_polyvector(&sp, &mut rng, p), p)
                                    })
                                    .collect();
                                let inner_val = phi_apply(&g2, &inner_args).unwrap();
                                let mut outer_args = Vec::new();
                                let mut composed_args = Vec::new();
                                let mut before_parity = 0usize;
                                let mut seen_slot = false;
                                let mut spare_it = spare.iter();
                                for &l in &outer_labels {
                                    if l == 10 {
                                        seen_slot = true;
                                        outer_args.push(inner_val.clone());
                                        composed_args.extend(inner_args.iter().cloned());
                                    } else {
                                        let (s, p) = spare_it.next().unwrap();
                                        if !seen_slot {
                                            before_parity += p;
                                        }
                                        outer_args.push(s.clone());
                                        composed_args.push(s.clone());
                                    }
                                }
                                let koszul = sign((e1 * e2 + e2 * before_parity) as i64);
                                let rhs = phi_apply(&g1, &outer_args).unwrap().scale(&koszul);
                                let mut lhs = PolyVector::zero(&sp);
                                for (term, coeff) in sum.terms() {
                                    lhs = lhs.add(
                                        &phi_apply(term, &composed_args).unwrap().scale(coeff),
                                    );
                                }
                                assert_eq!(
                                    lhs, rhs,
                                    "Phi compatibility failed for {g1} o_10 {g2} (trial {trial})"
                                );
                                if !lhs.is_zero() {
                                    nontrivial += 1;
                                }
                            }
                            pairs += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(pairs > 0 && nontrivial > 0);

    assert!(start.elapsed().as_secs() < 60, "criterion 4 must finish under 1 min");
    println!("PASS criterion 4: Schouten, Gerstenhaber, d^2, br Lie-map, and Phi compatibility identities hold exactly");
}

#[test]
fn criterion_5_stokes_and_relation_checks() {
    let dir = tempfile::tempdir().unwrap();
    // flavor-C three-point identity, exact weights; paired with the Jacobi
    // relation of the induced binary bracket
    let plane = "{\"flavor\":\"C\",\"free\":[1,2,3],\"collinear\":[],\"boundary\":[],\"edges\":[[1,2],[1,3]]}";
    let path = write_graph(dir.path(), "plane3.json", plane);
    let (report, _, code) = gwb(&[
        "relation", "check", "--relation", "lambda-jacobi", "--stokes", &path,
        "--source", "known", "--tolerance", "1e-9",
    ]);
    assert_eq!(code, 0, "plane Stokes identity or lambda-jacobi failed: {report}");
    assert_eq!(report["stokes"]["status"], "pass");

    // flag (1,4) identity tying the 1/24-family weights together, with every
    // factor weight integrated numerically and the errors propagated
    let flag = "{\"flavor\":\"CF_C\",\"free\":[1],\"collinear\":[2,3,4,5],\"boundary\":[],\"edges\":[[1,2],[1,3],[1,4]]}";
    let path = write_graph(dir.path(), "flag14.json", flag);
    let (report, _, code) = gwb(&[
        "relation", "check", "--relation", "u1-chain-map", "--stokes", &path,
        "--source", "mc", "--no-table", "--samples", "150000", "--seed", "17",
        "--tolerance", "5e-3",
    ]);
    assert_eq!(code, 0, "flag Stokes identity failed: {report}");
    assert_eq!(report["stokes"]["status"], "pass");
    assert!(report["stokes"]["stderr"].as_f64().unwrap() > 0.0);

    // the one-brace component acts as a derivation of the wedge product
    let (report, _, code) = gwb(&["relation", "check", "--relation", "v11-derivation"]);
    assert_eq!(code, 0, "v11-derivation failed: {report}");
    println!("PASS criterion 5: plane and flag Stokes identities balance; v11 is a derivation of the wedge");
}

#[test]
fn criterion_6_star_product_associativity() {
    let (report, _, code) = gwb(&[
        "duflo", "star", "--preset", "solvable2", "--order", "2", "--samples", "1000000",
        "--seed", "42", "--check-associativity", "--panel-degree", "3",
    ]);
    assert_eq!(code, 0, "nonabelian associativity defect exceeded 10*stderr: {report}");
    assert_eq!(report["associativity"]["status"], "pass");
    assert_eq!(report["associativity"]["triples"], 729, "9 monomials of degree <= 3, cubed");

    let (report, _, code) = gwb(&[
        "duflo", "star", "--preset", "abelian2", "--order", "2", "--samples", "100000",
        "--seed", "42", "--check-associativity", "--panel-degree", "3",
    ]);
    assert_eq!(code, 0);
    for d in report["associativity"]["max_defect"].as_array().unwrap() {
        assert_eq!(d.as_f64().unwrap(), 0.0, "abelian star must be exactly associative");
    }
    println!("PASS criterion 6: order-2 nonabelian associativity defect below 10*stderr; abelian exactly associative");
}

#[test]
fn criterion_7_confluence_reports_and_traces() {
    let start = Instant::now();
    let (report, _, code) = gwb(&["koszul", "check", "--preset", "ncg", "--trace"]);
    assert_eq!(code, 0, "ncg must be confluent with exit 0");
    assert_eq!(report["confluent"], true);
    let monomials = report["monomials"].as_array().unwrap();
    assert_eq!(monomials.len(), 5, "five critical monomials");
    for m in monomials {
        assert_eq!(m["verdict"], "CONFLUENT", "monomial {} not confluent", m["monomial"]);
    }
    // the displayed reductions, line by line
    let traces = report["traces"].as_array().unwrap();
    let states = |monomial: &str| -> Vec<String> {
        traces
            .iter()
            .find(|t| t["monomial"] == monomial)
            .unwrap_or_else(|| panic!("no trace for {monomial}"))["states"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(
        states("(x1•((a1·a2)·a3))"),
        vec![
            "(x1•((a1·a2)·a3))",
            "(x1•(a1·(a2·a3)))",
            "(a1·(x1•(a2·a3))) + ((x1•a1)·(a2·a3))",
            "(a1·(a2·(x1•a3))) + (a1·((x1•a2)·a3)) + ((x1•a1)·(a2·a3))",
        ],
        "action-on-a-triple-product derivation"
    );
    assert_eq!(
        states("([x1,x2]•(a1·a2))"),
        vec![
            "([x1,x2]•(a1·a2))",
            "(a1·([x1,x2]•a2)) + (([x1,x2]•a1)·a2)",
            "(a1·(x1•(x2•a2))) - (a1·(x2•(x1•a2))) + (([x1,x2]•a1)·a2)",
            "(a1·(x1•(x2•a2))) - (a1·(x2•(x1•a2))) + ((x1•(x2•a1))·a2) - ((x2•(x1•a1))·a2)",
        ],
        "bracket-action-on-a-product derivation"
    );
    assert_eq!(
        states("(((a1·a2)·a3)·a4)"),
        vec![
            "(((a1·a2)·a3)·a4)",
            "((a1·(a2·a3))·a4)",
            "(a1·((a2·a3)·a4))",
            "(a1·(a2·(a3·a4)))",
        ],
        "reassociation derivation"
    );

    let (report, _, code) = gwb(&["koszul", "check", "--preset", "ncg1"]);
    assert_eq!(code, 1, "ncg1 must fail the confluence check");
    assert_eq!(report["confluent"], false);
    let bad = report["monomials"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["monomial"] == "[(x1·x2),(x3·x4)]")
        .expect("bracket-of-products critical monomial");
    assert_eq!(bad["verdict"], "NOT_CONFLUENT");

    let (report, _, code) = gwb(&["koszul", "check", "--preset", "assoc"]);
    assert_eq!(code, 0);
    assert_eq!(report["confluent"], true);

    assert!(start.elapsed().as_secs() < 5, "criterion 7 must finish under 5 s");
    println!("PASS criterion 7: ncg 5/5 confluent with matching traces; ncg1 non-confluent at [(x1·x2),(x3·x4)]; assoc confluent");
}

#[test]
fn criterion_8_reports_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_graph(dir.path(), "v13_1.json", &one_three_star_graphs()[0]);
    let weight_args = [
        "weight", "compute", "--graph", &path, "--samples", "1000000", "--seed", "42",
        "--expect", "1/24", "--tolerance", "5e-3",
    ];
    let (_, first, _) = gwb(&weight_args);
    let (_, second, _) = gwb(&weight_args);
    assert_eq!(first, second, "weight reports must be byte-identical across runs");

    let star_args = [
        "duflo", "star", "--preset", "solvable2", "--order", "2", "--samples", "1000000",
        "--seed", "42", "--check-associativity", "--panel-degree", "3",
    ];
    let (_, first, _) = gwb(&star_args);
    let (_, second, _) = gwb(&star_args);
    assert_eq!(first, second, "star-product reports must be byte-identical across runs");
    println!("PASS criterion 8: weight and star-product reports byte-identical on rerun");
}
