//! Operadic rewriting for quadratic presentations with binary generators.
//!
//! Monomials are planar rooted trees whose internal vertices carry
//! generators and whose leaves carry labeled inputs.  Antisymmetric
//! generators are kept in a canonical orientation: the child containing the
//! smallest leaf label comes first, and a swap contributes a sign.  Rewrite
//! rules are oriented and only fire when every monomial on the right-hand
//! side is strictly smaller than the rewritten subtree in a
//! path-lexicographic monomial order; the order is well founded and
//! compatible with tree contexts, so rewriting terminates.
//!
//! The module ships three presentations:
//!
//! * `ncg` — two colors `x` and `a`, an antisymmetric bracket on `x`, an
//!   associative product on `a` and a mixed action generator, with Jacobi,
//!   associativity, Leibniz and action-composition rules;
//! * `ncg1` — the one-colored collapse of `ncg`, where the bracket acts on
//!   products through its own Leibniz rule;
//! * `assoc` — a single associative product.
//!
//! Critical monomials are the weight-three trees on which two rule
//! instances overlap; [`check_confluence`] reduces every one-step reduct of
//! each critical monomial to normal form along several strategies and
//! reports whether all results agree.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Rat;

/// Errors for presentation parsing and rewriting.
#[derive(Debug, Error)]
pub enum RewriteError {
    /// The step budget was exhausted before a normal form was reached.
    #[error("rewriting budget of {budget} steps exceeded")]
    BudgetExceeded {
        /// The budget that was exhausted.
        budget: usize,
    },
    /// The presentation is malformed.
    #[error("invalid presentation: {0}")]
    BadPresentation(String),
    /// The presentation JSON could not be parsed.
    #[error("malformed presentation json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A planar tree monomial: either a labeled leaf or a generator applied to
/// child trees.  Leaf labels are arbitrary distinct positive integers; in
/// rule patterns they play the role of variables bound to subtrees.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tree {
    /// A labeled input.
    Leaf(u32),
    /// A generator with its ordered children.
    Node {
        /// Generator name, resolved against the presentation.
        gen: String,
        /// Ordered child subtrees.
        children: Vec<Tree>,
    },
}

impl Tree {
    /// Leaf constructor.
    pub fn leaf(label: u32) -> Tree {
        Tree::Leaf(label)
    }

    /// Binary node constructor.
    pub fn node(gen: &str, left: Tree, right: Tree) -> Tree {
        Tree::Node {
            gen: gen.to_string(),
            children: vec![left, right],
        }
    }

    fn min_leaf(&self) -> u32 {
        match self {
            Tree::Leaf(l) => *l,
            Tree::Node { children, .. } => {
                children.iter().map(Tree::min_leaf).min().unwrap_or(u32::MAX)
            }
        }
    }

    /// Number of internal vertices (the weight of the monomial).
    pub fn weight(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node { children, .. } => {
                1 + children.iter().map(Tree::weight).sum::<usize>()
            }
        }
    }
}

/// A generator of the presentation: a typed operation with a display
/// notation and an optional antisymmetry (a swap of the two inputs equals
/// minus the operation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// Name used in tree monomials.
    pub name: String,
    /// Infix symbol used for display (ignored when `bracket` is set).
    #[serde(default)]
    pub symbol: String,
    /// Display as `[u,v]` instead of an infix pair.
    #[serde(default)]
    pub bracket: bool,
    /// Input colors.
    pub inputs: Vec<String>,
    /// Output color.
    pub output: String,
    /// Homological degree (bookkeeping only).
    pub degree: i64,
    /// Whether swapping the two inputs introduces a sign.
    #[serde(default)]
    pub antisymmetric: bool,
}

/// An oriented rewrite rule: a weight-two left-hand pattern and a linear
/// combination of weight-two right-hand terms in the same variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    /// Name used in reports.
    pub name: String,
    /// Left-hand pattern; its leaves are variables bound to subtrees.
    pub lhs: Tree,
    /// Right-hand terms with rational coefficients.
    pub rhs: Vec<(Rat, Tree)>,
}

/// A colored operadic presentation by binary generators and quadratic
/// rewrite rules.
#[derive(Clone, Debug, PartialEq)]
pub struct Presentation {
    /// Presentation name.
    pub name: String,
    /// Color names; they double as leaf prefixes in displays.
    pub colors: Vec<String>,
    /// Generators in decreasing rank; the rank enters the monomial order.
    pub generators: Vec<Generator>,
    /// Oriented rules, tried in order.
    pub rules: Vec<Rule>,
}

#[derive(Serialize, Deserialize)]
struct RhsTermJson {
    coeff: String,
    term: Tree,
}

#[derive(Serialize, Deserialize)]
struct RuleJson {
    name: String,
    lhs: Tree,
    rhs: Vec<RhsTermJson>,
}

#[derive(Serialize, Deserialize)]
struct PresentationJson {
    name: String,
    colors: Vec<String>,
    generators: Vec<Generator>,
    rules: Vec<RuleJson>,
}

impl Presentation {
    fn generator(&self, name: &str) -> Option<(usize, &Generator)> {
        self.generators
            .iter()
            .enumerate()
            .find(|(_, g)| g.name == name)
    }

    /// The builtin presentation with the given name, if any.
    pub fn builtin(name: &str) -> Option<Presentation> {
        match name {
            "ncg" => Some(Presentation::ncg()),
            "ncg1" => Some(Presentation::ncg1()),
            "assoc" => Some(Presentation::assoc()),
            _ => None,
        }
    }

    /// Two-colored presentation: a degree `-1` antisymmetric bracket on the
    /// color `x`, an associative product on the color `a` and an action
    /// generator of type `(x, a) -> a`, subject to associativity, Jacobi,
    /// Leibniz and action-composition rules.
    pub fn ncg() -> Presentation {
        let l = Tree::leaf;
        let act = |a, b| Tree::node("act", a, b);
        let br = |a, b| Tree::node("br", a, b);
        let mul = |a, b| Tree::node("mul", a, b);
        Presentation {
            name: "ncg".into(),
            colors: vec!["x".into(), "a".into()],
            generators: vec![
                Generator {
                    name: "act".into(),
                    symbol: "\u{2022}".into(),
                    bracket: false,
                    inputs: vec!["x".into(), "a".into()],
                    output: "a".into(),
                    degree: 0,
                    antisymmetric: false,
                },
                Generator {
                    name: "br".into(),
                    symbol: String::new(),
                    bracket: true,
                    inputs: vec!["x".into(), "x".into()],
                    output: "x".into(),
                    degree: -1,
                    antisymmetric: true,
                },
                Generator {
                    name: "mul".into(),
                    symbol: "\u{b7}".into(),
                    bracket: false,
                    inputs: vec!["a".into(), "a".into()],
                    output: "a".into(),
                    degree: 0,
                    antisymmetric: false,
                },
            ],
            rules: vec![
                Rule {
                    name: "associativity".into(),
                    lhs: mul(mul(l(1), l(2)), l(3)),
                    rhs: vec![(crate::rat(1, 1), mul(l(1), mul(l(2), l(3))))],
                },
                Rule {
                    name: "jacobi".into(),
                    lhs: br(br(l(1), l(2)), l(3)),
                    rhs: vec![
                        (crate::rat(-1, 1), br(br(l(2), l(3)), l(1))),
                        (crate::rat(-1, 1), br(br(l(3), l(1)), l(2))),
                    ],
                },
                Rule {
                    name: "leibniz".into(),
                    lhs: act(l(1), mul(l(2), l(3))),
                    rhs: vec![
                        (crate::rat(1, 1), mul(act(l(1), l(2)), l(3))),
                        (crate::rat(1, 1), mul(l(2), act(l(1), l(3)))),
                    ],
                },
                Rule {
                    name: "action".into(),
                    lhs: act(br(l(1), l(2)), l(3)),
                    rhs: vec![
                        (crate::rat(1, 1), act(l(1), act(l(2), l(3)))),
                        (crate::rat(-1, 1), act(l(2), act(l(1), l(3)))),
                    ],
                },
            ],
        }
    }

    /// One-colored collapse of [`Presentation::ncg`]: the bracket and the
    /// product live on the same color and the bracket acts on products
    /// through its own Leibniz rule.
    pub fn ncg1() -> Presentation {
        let l = Tree::leaf;
        let br = |a, b| Tree::node("br", a, b);
        let mul = |a, b| Tree::node("mul", a, b);
        Presentation {
            name: "ncg1".into(),
            colors: vec!["x".into()],
            generators: vec![
                Generator {
                    name: "br".into(),
                    symbol: String::new(),
                    bracket: true,
                    inputs: vec!["x".into(), "x".into()],
                    output: "x".into(),
                    degree: -1,
                    antisymmetric: true,
                },
                Generator {
                    name: "mul".into(),
                    symbol: "\u{b7}".into(),
                    bracket: false,
                    inputs: vec!["x".into(), "x".into()],
                    output: "x".into(),
                    degree: 0,
                    antisymmetric: false,
                },
            ],
            rules: vec![
                Rule {
                    name: "associativity".into(),
                    lhs: mul(mul(l(1), l(2)), l(3)),
                    rhs: vec![(crate::rat(1, 1), mul(l(1), mul(l(2), l(3))))],
                },
                Rule {
                    name: "jacobi".into(),
                    lhs: br(br(l(1), l(2)), l(3)),
                    rhs: vec![
                        (crate::rat(-1, 1), br(br(l(2), l(3)), l(1))),
                        (crate::rat(-1, 1), br(br(l(3), l(1)), l(2))),
                    ],
                },
                Rule {
                    name: "leibniz".into(),
                    lhs: br(l(1), mul(l(2), l(3))),
                    rhs: vec![
                        (crate::rat(1, 1), mul(br(l(1), l(2)), l(3))),
                        (crate::rat(1, 1), mul(l(2), br(l(1), l(3)))),
                    ],
                },
            ],
        }
    }

    /// A single associative product.
    pub fn assoc() -> Presentation {
        let l = Tree::leaf;
        let mul = |a, b| Tree::node("mul", a, b);
        Presentation {
            name: "assoc".into(),
            colors: vec!["a".into()],
            generators: vec![Generator {
                name: "mul".into(),
                symbol: "\u{b7}".into(),
                bracket: false,
                inputs: vec!["a".into(), "a".into()],
                output: "a".into(),
                degree: 0,
                antisymmetric: false,
            }],
            rules: vec![Rule {
                name: "associativity".into(),
                lhs: mul(mul(l(1), l(2)), l(3)),
                rhs: vec![(crate::rat(1, 1), mul(l(1), mul(l(2), l(3))))],
            }],
        }
    }

    /// Parse a presentation from its JSON encoding and validate it.
    pub fn from_json(text: &str) -> Result<Presentation, RewriteError> {
        let raw: PresentationJson = serde_json::from_str(text)?;
        let mut rules = Vec::new();
        for r in raw.rules {
            let mut rhs = Vec::new();
            for t in r.rhs {
                let coeff: Rat = t.coeff.trim().parse().map_err(|_| {
                    RewriteError::BadPresentation(format!(
                        "rule {}: bad coefficient {:?}",
                        r.name, t.coeff
                    ))
                })?;
                rhs.push((coeff, t.term));
            }
            rules.push(Rule {
                name: r.name,
                lhs: r.lhs,
                rhs,
            });
        }
        let pres = Presentation {
            name: raw.name,
            colors: raw.colors,
            generators: raw.generators,
            rules,
        };
        pres.validate()?;
        Ok(pres)
    }

    /// Serialize the presentation to JSON.
    pub fn to_json(&self) -> String {
        let raw = PresentationJson {
            name: self.name.clone(),
            colors: self.colors.clone(),
            generators: self.generators.clone(),
            rules: self
                .rules
                .iter()
                .map(|r| RuleJson {
                    name: r.name.clone(),
                    lhs: r.lhs.clone(),
                    rhs: r
                        .rhs
                        .iter()
                        .map(|(c, t)| RhsTermJson {
                            coeff: c.to_string(),
                            term: t.clone(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("presentation serializes")
    }

    /// Check that generators are well typed and rules are linear quadratic
    /// rewrites in the presentation's generators.
    pub fn validate(&self) -> Result<(), RewriteError> {
        let bad = |msg: String| Err(RewriteError::BadPresentation(msg));
        if self.colors.is_empty() {
            return bad("no colors".into());
        }
        let mut names = BTreeSet::new();
        for g in &self.generators {
            if !names.insert(g.name.clone()) {
                return bad(format!("duplicate generator {}", g.name));
            }
            for c in g.inputs.iter().chain(std::iter::once(&g.output)) {
                if !self.colors.contains(c) {
                    return bad(format!("generator {} uses unknown color {}", g.name, c));
                }
            }
            if g.antisymmetric && g.inputs.len() != 2 {
                return bad(format!("antisymmetric generator {} is not binary", g.name));
            }
        }
        for rule in &self.rules {
            let mut vars = Vec::new();
            self.check_tree(&rule.lhs, &rule.name, &mut vars)?;
            vars.sort_unstable();
            if vars.windows(2).any(|w| w[0] == w[1]) {
                return bad(format!("rule {}: repeated variable on the left", rule.name));
            }
            if rule.lhs.weight() != 2 {
                return bad(format!("rule {}: left side is not quadratic", rule.name));
            }
            for (_, term) in &rule.rhs {
                let mut tvars = Vec::new();
                self.check_tree(term, &rule.name, &mut tvars)?;
                tvars.sort_unstable();
                if tvars != vars {
                    return bad(format!(
                        "rule {}: right-hand variables differ from the left",
                        rule.name
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_tree(
        &self,
        tree: &Tree,
        rule: &str,
        vars: &mut Vec<u32>,
    ) -> Result<(), RewriteError> {
        match tree {
            Tree::Leaf(l) => {
                vars.push(*l);
                Ok(())
            }
            Tree::Node { gen, children } => {
                let Some((_, g)) = self.generator(gen) else {
                    return Err(RewriteError::BadPresentation(format!(
                        "rule {}: unknown generator {}",
                        rule, gen
                    )));
                };
                if g.inputs.len() != children.len() {
                    return Err(RewriteError::BadPresentation(format!(
                        "rule {}: generator {} applied to {} arguments",
                        rule,
                        gen,
                        children.len()
                    )));
                }
                for c in children {
                    self.check_tree(c, rule, vars)?;
                }
                Ok(())
            }
        }
    }

    fn leaf_colors(&self, tree: &Tree, color: &str, out: &mut BTreeMap<u32, String>) {
        match tree {
            Tree::Leaf(l) => {
                out.insert(*l, color.to_string());
            }
            Tree::Node { gen, children } => {
                if let Some((_, g)) = self.generator(gen) {
                    for (c, col) in children.iter().zip(&g.inputs) {
                        self.leaf_colors(c, col, out);
                    }
                }
            }
        }
    }

    fn leaf_names(&self, tree: &Tree) -> BTreeMap<u32, String> {
        let root = match tree {
            Tree::Node { gen, .. } => self
                .generator(gen)
                .map(|(_, g)| g.output.clone())
                .unwrap_or_else(|| self.colors[0].clone()),
            Tree::Leaf(_) => self.colors[0].clone(),
        };
        let mut colors = BTreeMap::new();
        self.leaf_colors(tree, &root, &mut colors);
        let mut counters: BTreeMap<String, usize> = BTreeMap::new();
        let mut names = BTreeMap::new();
        for (label, color) in colors {
            let n = counters.entry(color.clone()).or_insert(0);
            *n += 1;
            names.insert(label, format!("{}{}", color, n));
        }
        names
    }

    fn fmt_tree(&self, tree: &Tree, names: &BTreeMap<u32, String>) -> String {
        match tree {
            Tree::Leaf(l) => names
                .get(l)
                .cloned()
                .unwrap_or_else(|| format!("v{}", l)),
            Tree::Node { gen, children } => {
                let parts: Vec<String> =
                    children.iter().map(|c| self.fmt_tree(c, names)).collect();
                match self.generator(gen) {
                    Some((_, g)) if g.bracket && parts.len() == 2 => {
                        format!("[{},{}]", parts[0], parts[1])
                    }
                    Some((_, g)) if parts.len() == 2 => {
                        format!("({}{}{})", parts[0], g.symbol, parts[1])
                    }
                    _ => format!("{}({})", gen, parts.join(",")),
                }
            }
        }
    }

    /// Render a tree monomial with colored leaf names, e.g. `[x1,x2]`.
    pub fn display_tree(&self, tree: &Tree) -> String {
        self.fmt_tree(tree, &self.leaf_names(tree))
    }

    /// Render a linear combination of tree monomials.
    pub fn display_poly(&self, poly: &TreePoly) -> String {
        if poly.terms.is_empty() {
            return "0".into();
        }
        let one = crate::rat(1, 1);
        let minus_one = crate::rat(-1, 1);
        let mut out = String::new();
        for (i, (tree, coeff)) in poly.terms.iter().enumerate() {
            let body = self.fmt_tree(tree, &self.leaf_names(tree));
            if i == 0 {
                if *coeff == one {
                    out.push_str(&body);
                } else if *coeff == minus_one {
                    out.push_str(&format!("-{}", body));
                } else {
                    out.push_str(&format!("{}\u{b7}{}", coeff, body));
                }
            } else if *coeff == one {
                out.push_str(&format!(" + {}", body));
            } else if *coeff == minus_one {
                out.push_str(&format!(" - {}", body));
            } else if coeff > &Rat::zero() {
                out.push_str(&format!(" + {}\u{b7}{}", coeff, body));
            } else {
                out.push_str(&format!(" - {}\u{b7}{}", -coeff.clone(), body));
            }
        }
        out
    }
}

/// A finite linear combination of tree monomials with rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct TreePoly {
    terms: BTreeMap<Tree, Rat>,
}

impl TreePoly {
    /// The zero combination.
    pub fn new() -> TreePoly {
        TreePoly::default()
    }

    /// A single monomial with coefficient one.
    pub fn from_tree(tree: Tree) -> TreePoly {
        let mut p = TreePoly::new();
        p.add(tree, crate::rat(1, 1));
        p
    }

    /// Add `coeff` times the monomial `tree`, pruning zeros.
    pub fn add(&mut self, tree: Tree, coeff: Rat) {
        let entry = self.terms.entry(tree).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    fn add_scaled(&mut self, other: &TreePoly, scale: &Rat) {
        for (t, c) in &other.terms {
            self.add(t.clone(), c * scale);
        }
    }

    /// Iterate over (monomial, coefficient) pairs in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Tree, &Rat)> {
        self.terms.iter()
    }

    /// Number of monomials.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Whether the combination is zero.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a monomial (zero when absent).
    pub fn coeff(&self, tree: &Tree) -> Rat {
        self.terms.get(tree).cloned().unwrap_or_else(Rat::zero)
    }
}

/// Put antisymmetric generators in canonical orientation (smallest leaf
/// first); returns the canonical tree and the sign of the reordering.
fn normalize(tree: &Tree, pres: &Presentation) -> (Tree, i32) {
    match tree {
        Tree::Leaf(l) => (Tree::Leaf(*l), 1),
        Tree::Node { gen, children } => {
            let mut sign = 1;
            let mut cs: Vec<Tree> = children
                .iter()
                .map(|c| {
                    let (n, s) = normalize(c, pres);
                    sign *= s;
                    n
                })
                .collect();
            if let Some((_, g)) = pres.generator(gen) {
                if g.antisymmetric && cs.len() == 2 && cs[0].min_leaf() > cs[1].min_leaf() {
                    cs.swap(0, 1);
                    sign = -sign;
                }
            }
            (
                Tree::Node {
                    gen: gen.clone(),
                    children: cs,
                },
                sign,
            )
        }
    }
}

/// The root-to-leaf path of every leaf, as a word of (generator rank,
/// child index) letters.
fn leaf_paths(
    tree: &Tree,
    pres: &Presentation,
    path: &mut Vec<(usize, usize)>,
    out: &mut BTreeMap<u32, Vec<(usize, usize)>>,
) {
    match tree {
        Tree::Leaf(l) => {
            out.insert(*l, path.clone());
        }
        Tree::Node { gen, children } => {
            let rank = pres.generator(gen).map(|(i, _)| i).unwrap_or(usize::MAX);
            for (i, c) in children.iter().enumerate() {
                path.push((rank, i));
                leaf_paths(c, pres, path, out);
                path.pop();
            }
        }
    }
}

/// Compare two leaf paths letter by letter.  A smaller generator rank or a
/// larger child index is a larger letter; a proper prefix is larger than
/// any extension of it.
fn path_cmp(p: &[(usize, usize)], q: &[(usize, usize)]) -> Ordering {
    for (&(rp, ip), &(rq, iq)) in p.iter().zip(q.iter()) {
        match rq.cmp(&rp).then(ip.cmp(&iq)) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    q.len().cmp(&p.len())
}

/// Strict path-lexicographic order on tree monomials: walk the leaf labels
/// in decreasing order and let the first differing root-to-leaf path
/// decide.  The order is well founded on monomials of a fixed weight and
/// compatible with tree contexts, so guarded rewriting terminates.
fn monomial_gt(s: &Tree, t: &Tree, pres: &Presentation) -> bool {
    let mut ps = BTreeMap::new();
    let mut pt = BTreeMap::new();
    leaf_paths(s, pres, &mut Vec::new(), &mut ps);
    leaf_paths(t, pres, &mut Vec::new(), &mut pt);
    for (label, p) in ps.iter().rev() {
        let Some(q) = pt.get(label) else { continue };
        match path_cmp(p, q) {
            Ordering::Equal => {}
            Ordering::Greater => return true,
            Ordering::Less => return false,
        }
    }
    false
}

type Bindings = BTreeMap<u32, Tree>;

/// All ways the pattern matches the subject, using the generator symmetry
/// of antisymmetric generators; each match carries the sign of the
/// reorientations used.
fn matches(pattern: &Tree, subject: &Tree, pres: &Presentation) -> Vec<(Bindings, i32)> {
    match pattern {
        Tree::Leaf(v) => vec![(BTreeMap::from([(*v, subject.clone())]), 1)],
        Tree::Node { gen, children: pc } => {
            let Tree::Node {
                gen: sgen,
                children: sc,
            } = subject
            else {
                return Vec::new();
            };
            if gen != sgen || pc.len() != sc.len() {
                return Vec::new();
            }
            let antisym = pres
                .generator(gen)
                .map(|(_, g)| g.antisymmetric && sc.len() == 2)
                .unwrap_or(false);
            let mut orders: Vec<(Vec<&Tree>, i32)> = vec![(sc.iter().collect(), 1)];
            if antisym {
                orders.push((vec![&sc[1], &sc[0]], -1));
            }
            let mut out = Vec::new();
            for (order, s0) in orders {
                let mut partial: Vec<(Bindings, i32)> = vec![(Bindings::new(), s0)];
                for (pchild, schild) in pc.iter().zip(order) {
                    let mut next = Vec::new();
                    for (b, s) in &partial {
                        for (b2, s2) in matches(pchild, schild, pres) {
                            let mut merged = b.clone();
                            merged.extend(b2);
                            next.push((merged, s * s2));
                        }
                    }
                    partial = next;
                }
                out.extend(partial);
            }
            out
        }
    }
}

fn substitute(term: &Tree, bindings: &Bindings) -> Tree {
    match term {
        Tree::Leaf(v) => bindings
            .get(v)
            .cloned()
            .unwrap_or(Tree::Leaf(*v)),
        Tree::Node { gen, children } => Tree::Node {
            gen: gen.clone(),
            children: children.iter().map(|c| substitute(c, bindings)).collect(),
        },
    }
}

fn subtree<'a>(tree: &'a Tree, path: &[usize]) -> &'a Tree {
    let mut cur = tree;
    for &i in path {
        let Tree::Node { children, .. } = cur else {
            unreachable!("path into a leaf")
        };
        cur = &children[i];
    }
    cur
}

fn replace(tree: &Tree, path: &[usize], replacement: &Tree) -> Tree {
    if path.is_empty() {
        return replacement.clone();
    }
    let Tree::Node { gen, children } = tree else {
        unreachable!("path into a leaf")
    };
    let mut cs = children.clone();
    cs[path[0]] = replace(&children[path[0]], &path[1..], replacement);
    Tree::Node {
        gen: gen.clone(),
        children: cs,
    }
}

/// The reduction strategy used when searching for the next redex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Innermost redexes first, leftmost among those.
    LeftmostInnermost,
    /// Outermost redexes first, rightmost among those.
    RightmostOutermost,
}

fn positions(tree: &Tree, strategy: Strategy) -> Vec<Vec<usize>> {
    fn go(tree: &Tree, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, strategy: Strategy) {
        let Tree::Node { children, .. } = tree else {
            return;
        };
        match strategy {
            Strategy::LeftmostInnermost => {
                for (i, c) in children.iter().enumerate() {
                    path.push(i);
                    go(c, path, out, strategy);
                    path.pop();
                }
                out.push(path.clone());
            }
            Strategy::RightmostOutermost => {
                out.push(path.clone());
                for (i, c) in children.iter().enumerate().rev() {
                    path.push(i);
                    go(c, path, out, strategy);
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(tree, &mut Vec::new(), &mut out, strategy);
    out
}

/// Apply one rule at one position, once per match that passes the
/// orientation guard (every right-hand monomial strictly smaller than the
/// redex).  Distinct matches through a generator symmetry may rewrite the
/// same redex in genuinely different ways.
fn rewrite_all(tree: &Tree, path: &[usize], rule: &Rule, pres: &Presentation) -> Vec<TreePoly> {
    let sub = subtree(tree, path);
    let mut out = Vec::new();
    'matches: for (bindings, sigma) in matches(&rule.lhs, sub, pres) {
        let mut parts = Vec::new();
        for (coeff, term) in &rule.rhs {
            let (canon, s) = normalize(&substitute(term, &bindings), pres);
            if !monomial_gt(sub, &canon, pres) {
                continue 'matches;
            }
            parts.push((coeff * crate::rat((sigma * s) as i64, 1), canon));
        }
        let mut poly = TreePoly::new();
        for (coeff, canon_sub) in parts {
            let (full, s) = normalize(&replace(tree, path, &canon_sub), pres);
            poly.add(full, coeff * crate::rat(s as i64, 1));
        }
        out.push(poly);
    }
    out
}

/// First passing match of one rule at one position, used for deterministic
/// stepping.
fn rewrite_with(
    tree: &Tree,
    path: &[usize],
    rule: &Rule,
    pres: &Presentation,
) -> Option<TreePoly> {
    rewrite_all(tree, path, rule, pres).into_iter().next()
}

fn rewrite_at(tree: &Tree, path: &[usize], pres: &Presentation) -> Option<TreePoly> {
    pres.rules
        .iter()
        .find_map(|rule| rewrite_with(tree, path, rule, pres))
}

/// Perform one rewrite step at the leftmost-innermost redex, trying the
/// rules in presentation order.  Returns `None` when the monomial is in
/// normal form.
pub fn rewrite_step(tree: &Tree, pres: &Presentation) -> Option<TreePoly> {
    positions(tree, Strategy::LeftmostInnermost)
        .iter()
        .find_map(|path| rewrite_at(tree, path, pres))
}

fn step_poly(poly: &TreePoly, pres: &Presentation, strategy: Strategy) -> Option<TreePoly> {
    for (tree, coeff) in poly.terms() {
        for path in positions(tree, strategy) {
            if let Some(rewritten) = rewrite_at(tree, &path, pres) {
                let mut next = poly.clone();
                next.add(tree.clone(), -coeff.clone());
                next.add_scaled(&rewritten, coeff);
                return Some(next);
            }
        }
    }
    None
}

fn normal_form_with(
    poly: &TreePoly,
    pres: &Presentation,
    budget: usize,
    strategy: Strategy,
) -> Result<(TreePoly, usize), RewriteError> {
    let mut work = poly.clone();
    let mut steps = 0usize;
    while let Some(next) = step_poly(&work, pres, strategy) {
        steps += 1;
        if steps > budget {
            return Err(RewriteError::BudgetExceeded { budget });
        }
        work = next;
    }
    Ok((work, steps))
}

/// Reduce a linear combination to normal form with the leftmost-innermost
/// strategy, or fail when the step budget is exhausted.
pub fn normal_form(
    poly: &TreePoly,
    pres: &Presentation,
    budget: usize,
) -> Result<TreePoly, RewriteError> {
    normal_form_with(poly, pres, budget, Strategy::LeftmostInnermost).map(|(nf, _)| nf)
}

/// The successive states of a reduction to normal form, starting with the
/// input monomial itself.
pub fn rewrite_trace(
    tree: &Tree,
    pres: &Presentation,
    budget: usize,
    strategy: Strategy,
) -> Result<Vec<TreePoly>, RewriteError> {
    let mut states = vec![TreePoly::from_tree(tree.clone())];
    let mut steps = 0usize;
    while let Some(next) = step_poly(states.last().unwrap(), pres, strategy) {
        steps += 1;
        if steps > budget {
            return Err(RewriteError::BudgetExceeded { budget });
        }
        states.push(next);
    }
    Ok(states)
}

struct LhsShape {
    top: String,
    slot: usize,
    inner: Tree,
}

fn lhs_shape(rule: &Rule) -> Option<LhsShape> {
    let Tree::Node { gen, children } = &rule.lhs else {
        return None;
    };
    let mut inner = None;
    for (i, c) in children.iter().enumerate() {
        if matches!(c, Tree::Node { .. }) {
            if inner.is_some() {
                return None;
            }
            inner = Some((i, c.clone()));
        }
    }
    inner.map(|(slot, tree)| LhsShape {
        top: gen.clone(),
        slot,
        inner: tree,
    })
}

fn inner_gen(shape: &LhsShape) -> &str {
    match &shape.inner {
        Tree::Node { gen, .. } => gen,
        Tree::Leaf(_) => unreachable!("inner pattern is a node"),
    }
}

fn relabel(tree: &Tree) -> Tree {
    fn go(tree: &Tree, next: &mut u32) -> Tree {
        match tree {
            Tree::Leaf(_) => {
                let l = *next;
                *next += 1;
                Tree::Leaf(l)
            }
            Tree::Node { gen, children } => Tree::Node {
                gen: gen.clone(),
                children: children.iter().map(|c| go(c, next)).collect(),
            },
        }
    }
    go(tree, &mut 1)
}

/// All weight-three monomials on which two rule instances overlap: chains
/// where the inner generator of one left-hand side is the top of another,
/// pairs of left-hand sides sharing their top generator in different slots,
/// and self-overlaps of a rule through the antisymmetry of its top
/// generator.  Leaves are labeled canonically from left to right.
pub fn critical_monomials(pres: &Presentation) -> Vec<Tree> {
    let shapes: Vec<Option<LhsShape>> = pres.rules.iter().map(lhs_shape).collect();
    let mut found = BTreeSet::new();
    let mut push = |tree: Tree| {
        let (canon, _) = normalize(&relabel(&tree), pres);
        found.insert(canon);
    };
    for (i, si) in shapes.iter().enumerate() {
        let Some(si) = si else { continue };
        // chain overlaps: the inner generator of rule i is the top of rule j
        for sj in shapes.iter().flatten() {
            if inner_gen(si) == sj.top {
                let lhs_j = pres
                    .rules
                    .iter()
                    .find(|r| {
                        lhs_shape(r).map(|s| s.top == sj.top && s.slot == sj.slot && s.inner == sj.inner).unwrap_or(false)
                    })
                    .map(|r| r.lhs.clone());
                if let Some(lhs_j) = lhs_j {
                    let Tree::Node { gen, children } = &pres.rules[i].lhs else {
                        continue;
                    };
                    let mut cs = children.clone();
                    cs[si.slot] = lhs_j;
                    push(Tree::Node {
                        gen: gen.clone(),
                        children: cs,
                    });
                }
            }
        }
        // overlaps sharing the top generator in different slots
        for sj in shapes.iter().skip(i + 1).flatten() {
            if si.top == sj.top && si.slot != sj.slot {
                let mut cs = vec![si.inner.clone(), si.inner.clone()];
                cs[si.slot] = si.inner.clone();
                cs[sj.slot] = sj.inner.clone();
                push(Tree::Node {
                    gen: si.top.clone(),
                    children: cs,
                });
            }
        }
        // self-overlap through the antisymmetry of the top generator
        let antisym_top = pres
            .generator(&si.top)
            .map(|(_, g)| g.antisymmetric)
            .unwrap_or(false);
        if antisym_top && inner_gen(si) != si.top {
            push(Tree::Node {
                gen: si.top.clone(),
                children: vec![si.inner.clone(), si.inner.clone()],
            });
        }
    }
    found.into_iter().collect()
}

/// Verdict of the confluence check for one critical monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Every reduction reached the same normal form.
    Confluent,
    /// Two reductions reached different normal forms.
    NotConfluent,
    /// Some reduction exhausted the step budget.
    Indeterminate,
}

/// Per-monomial result of the confluence check.
#[derive(Clone, Debug, Serialize)]
pub struct MonomialReport {
    /// Rendered critical monomial.
    pub monomial: String,
    /// Outcome for this monomial.
    pub verdict: Verdict,
    /// Number of distinct one-step reducts explored.
    pub reducts: usize,
    /// The distinct normal forms reached (one entry when confluent).
    pub normal_forms: Vec<String>,
    /// Total rewrite steps spent on this monomial.
    pub steps: usize,
}

/// Result of checking every critical monomial of a presentation.
#[derive(Clone, Debug, Serialize)]
pub struct ConfluenceReport {
    /// Presentation name.
    pub presentation: String,
    /// One report per critical monomial, in canonical order.
    pub reports: Vec<MonomialReport>,
}

impl ConfluenceReport {
    /// Whether every critical monomial came out confluent.
    pub fn confluent(&self) -> bool {
        self.reports
            .iter()
            .all(|r| r.verdict == Verdict::Confluent)
    }

    /// Whether any monomial was left undecided by the budget.
    pub fn indeterminate(&self) -> bool {
        self.reports
            .iter()
            .any(|r| r.verdict == Verdict::Indeterminate)
    }
}

fn check_monomial(tree: &Tree, pres: &Presentation, budget: usize) -> MonomialReport {
    let mut reducts: BTreeSet<TreePoly> = BTreeSet::new();
    for path in positions(tree, Strategy::LeftmostInnermost) {
        for rule in &pres.rules {
            for poly in rewrite_all(tree, &path, rule, pres) {
                reducts.insert(poly);
            }
        }
    }
    reducts.insert(TreePoly::from_tree(tree.clone()));
    let mut normal_forms: BTreeSet<TreePoly> = BTreeSet::new();
    let mut steps = 0usize;
    let mut exhausted = false;
    for poly in &reducts {
        for strategy in [Strategy::LeftmostInnermost, Strategy::RightmostOutermost] {
            match normal_form_with(poly, pres, budget, strategy) {
                Ok((nf, n)) => {
                    steps += n;
                    normal_forms.insert(nf);
                }
                Err(_) => exhausted = true,
            }
        }
    }
    let verdict = if exhausted {
        Verdict::Indeterminate
    } else if normal_forms.len() == 1 {
        Verdict::Confluent
    } else {
        Verdict::NotConfluent
    };
    MonomialReport {
        monomial: pres.display_tree(tree),
        verdict,
        reducts: reducts.len() - 1,
        normal_forms: normal_forms
            .iter()
            .map(|nf| pres.display_poly(nf))
            .collect(),
        steps,
    }
}

/// Check local confluence on every critical monomial: reduce each one-step
/// reduct to normal form along both strategies and compare the results.
/// Monomials are checked in parallel.
pub fn check_confluence(pres: &Presentation, budget: usize) -> ConfluenceReport {
    let monomials = critical_monomials(pres);
    let reports = std::thread::scope(|scope| {
        let handles: Vec<_> = monomials
            .iter()
            .map(|m| scope.spawn(move || check_monomial(m, pres, budget)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("confluence worker panicked"))
            .collect()
    });
    ConfluenceReport {
        presentation: pres.name.clone(),
        reports,
    }
}
