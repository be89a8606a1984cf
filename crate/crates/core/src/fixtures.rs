//! Named decision problems with stored expected values.

use crate::graph::NodeKind::{Chance, Decision, Utility};
use crate::graph::ScopedGraph;
use crate::scm::{Component, ScmDoc, Slice, Term, Test, VariableDoc};

/// A hand-written model plus the expected MEU with and without one context.
#[derive(Debug, Clone)]
pub struct ScmFixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub decision: &'static str,
    pub context: &'static str,
    pub meu_with: &'static str,
    pub meu_without: &'static str,
    build: fn() -> ScmDoc,
}

impl ScmFixture {
    pub fn doc(&self) -> ScmDoc {
        (self.build)()
    }
}

/// Expected outcome of the graphical check on one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedVerdict {
    ImmaterialSingleDecision,
    ImmaterialLb2,
    MaterialByThm1,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct GraphFixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub decision: &'static str,
    pub context: &'static str,
    pub verdict: ExpectedVerdict,
    /// `k` used when synthesizing at desk scale.
    pub k_override: Option<u32>,
    build: fn() -> ScopedGraph,
}

impl GraphFixture {
    pub fn graph(&self) -> ScopedGraph {
        (self.build)()
    }
}

fn s(parent: &str, lo: u32, len: u32) -> Slice {
    Slice::new(parent, lo, len)
}

fn uniform(width: u32) -> Vec<Component> {
    vec![Component::Uniform { width }]
}

fn xor(a: &str, b: &str) -> Component {
    Component::Table {
        inputs: vec![s(a, 0, 1), s(b, 0, 1)],
        width: 1,
        noise: vec!["1".into()],
        table: vec![vec![0], vec![1], vec![1], vec![0]],
    }
}

fn indicator(weight: &str, test: Test) -> Term {
    Term::Indicator { weight: weight.into(), test }
}

fn equal(lhs: Slice, rhs: Slice) -> Test {
    Test::Equal { lhs: vec![lhs], rhs: vec![rhs] }
}

fn doc(variables: Vec<VariableDoc>) -> ScmDoc {
    ScmDoc { variables }
}

fn graph(nodes: &[(&str, crate::graph::NodeKind)], edges: &[(&str, &str)]) -> ScopedGraph {
    ScopedGraph::new(nodes, edges).expect("fixture graphs are valid")
}

fn linear_doc() -> ScmDoc {
    doc(vec![
        VariableDoc::chance("Z", &[], uniform(1)),
        VariableDoc::decision("X", &["Z"], 1),
        VariableDoc::utility("Y", &["X"], vec![Term::Table {
            inputs: vec![s("X", 0, 1)],
            values: vec!["0".into(), "1".into()],
        }]),
    ])
}

fn yes_voi_doc() -> ScmDoc {
    doc(vec![
        VariableDoc::chance("Z", &[], uniform(1)),
        VariableDoc::decision("X", &["Z"], 1),
        VariableDoc::utility("Y", &["X", "Z"], vec![indicator("1", equal(s("Z", 0, 1), s("X", 0, 1)))]),
    ])
}

fn no_sr_doc() -> ScmDoc {
    doc(vec![
        VariableDoc::chance("Z", &[], uniform(1)),
        VariableDoc::decision("X", &["Z"], 1),
        VariableDoc::decision("X'", &["X"], 1),
        VariableDoc::utility("Y", &["X'", "Z"], vec![indicator(
            "1",
            equal(s("Z", 0, 1), s("X'", 0, 1)),
        )]),
    ])
}

fn triangle_doc() -> ScmDoc {
    doc(vec![
        VariableDoc::decision("Z", &[], 1),
        VariableDoc::decision("X", &["Z"], 1),
        VariableDoc::utility("Y", &["X", "Z"], vec![indicator("1", equal(s("Z", 0, 1), s("X", 0, 1)))]),
    ])
}

fn xor_chain_doc() -> ScmDoc {
    doc(vec![
        VariableDoc::chance("Z", &[], uniform(1)),
        VariableDoc::chance("U1", &[], uniform(1)),
        VariableDoc::chance("U2", &[], uniform(1)),
        VariableDoc::chance("W1", &["U1", "Z"], vec![xor("Z", "U1")]),
        VariableDoc::chance("W2", &["U1", "U2"], vec![xor("U1", "U2")]),
        VariableDoc::decision("X", &["W1", "W2", "Z"], 1),
        VariableDoc::utility("Y", &["U2", "X"], vec![indicator("1", equal(s("X", 0, 1), s("U2", 0, 1)))]),
    ])
}

fn soluble_doc(revealing: bool) -> ScmDoc {
    let (u_width, w, terms) = if revealing {
        (
            2,
            vec![
                Component::Copy { slices: vec![s("Z'", 0, 1)] },
                Component::Index { array: s("U'", 0, 2), index: vec![s("Z'", 0, 1)] },
            ],
            vec![
                indicator("1", equal(s("Z", 0, 1), s("X'", 0, 1))),
                indicator("1", Test::IndexEq {
                    array: s("U'", 0, 2),
                    index: vec![s("X'", 0, 1)],
                    value: s("X'", 1, 1),
                }),
            ],
        )
    } else {
        (1, vec![xor("Z'", "U'")], vec![indicator("1", equal(s("Z", 0, 1), s("X'", 0, 1)))])
    };
    let x_width = if revealing { 2 } else { 1 };
    doc(vec![
        VariableDoc::chance("Z", &[], uniform(1)),
        VariableDoc::decision("X", &["Z"], 1),
        VariableDoc::chance("Z'", &["X"], vec![Component::Copy { slices: vec![s("X", 0, 1)] }]),
        VariableDoc::chance("U'", &[], uniform(u_width)),
        VariableDoc::chance("W'", &["U'", "Z'"], w),
        VariableDoc::decision("X'", &["W'", "Z", "Z'"], x_width),
        VariableDoc::utility("Y", &["U'", "X'", "Z"], terms),
    ])
}

fn remember_doc(from_u: bool) -> ScmDoc {
    let lhs = if from_u { s("U", 0, 1) } else { s("Z0", 0, 1) };
    doc(vec![
        VariableDoc::chance("U", &[], uniform(1)),
        VariableDoc::decision("Z0", &["U"], 1),
        VariableDoc::decision("X0", &["Z0"], 1),
        VariableDoc::utility("Y", &["U", "X0", "Z0"], vec![indicator("1", equal(lhs, s("X0", 0, 1)))]),
    ])
}

fn finite_domain_doc(indexed: bool) -> ScmDoc {
    let (u_width, w, x0_width, test) = if indexed {
        (
            2,
            Component::Index { array: s("U1", 0, 2), index: vec![s("Z0", 0, 1)] },
            2,
            Test::IndexEq { array: s("U1", 0, 2), index: vec![s("X0", 0, 1)], value: s("X0", 1, 1) },
        )
    } else {
        (1, xor("Z0", "U1"), 1, equal(s("U1", 0, 1), s("X0", 0, 1)))
    };
    doc(vec![
        VariableDoc::chance("Z0", &[], uniform(1)),
        VariableDoc::chance("U1", &[], uniform(u_width)),
        VariableDoc::chance("W1", &["U1", "Z0"], vec![w]),
        VariableDoc::decision("X'", &["W1", "Z0"], 1),
        VariableDoc::decision("X0", &["X'", "Z0"], x0_width),
        VariableDoc::utility("Y", &["U1", "X0"], vec![indicator("1", test)]),
    ])
}

fn red_term() -> Term {
    indicator("10", Test::IndexEq {
        array: s("V", 0, 2),
        index: vec![s("X0", 0, 1)],
        value: s("X0", 1, 1),
    })
}

fn obstacle_doc(noisy: bool) -> ScmDoc {
    let (x1_width, c, blue) = if noisy {
        (
            1,
            vec![Component::Table {
                inputs: vec![s("Z0", 0, 1)],
                width: 1,
                noise: vec!["99/100".into(), "1/100".into()],
                table: vec![vec![0, 1], vec![1, 0]],
            }],
            equal(s("C", 0, 1), s("X0", 0, 1)),
        )
    } else {
        (
            2,
            vec![Component::Copy { slices: vec![s("X1", 0, 1), s("Z0", 0, 1)] }],
            equal(s("C", 0, 1), s("C", 1, 1)),
        )
    };
    doc(vec![
        VariableDoc::chance("Z0", &[], uniform(1)),
        VariableDoc::chance("V", &[], uniform(2)),
        VariableDoc::decision("X1", &["V", "Z0"], x1_width),
        VariableDoc::chance("C", &["X1", "Z0"], c),
        VariableDoc::decision("X0", &["C", "X1", "Z0"], 2),
        VariableDoc::utility("Y", &["C", "V", "X0"], vec![red_term(), indicator("1", blue)]),
    ])
}

fn superimposed_doc() -> ScmDoc {
    doc(vec![
        VariableDoc::chance("Z0", &[], uniform(1)),
        VariableDoc::chance("V", &[], uniform(2)),
        VariableDoc::chance("A1", &[], vec![]),
        VariableDoc::chance("A2", &[], vec![]),
        VariableDoc::chance("A3", &[], vec![]),
        VariableDoc::decision("X1", &["V", "Z0"], 1),
        VariableDoc::chance("C", &["A1", "X1", "Z0"], vec![Component::Table {
            inputs: vec![s("Z0", 0, 1)],
            width: 1,
            noise: vec!["99/100".into(), "1/100".into()],
            table: vec![vec![0, 1], vec![1, 0]],
        }]),
        VariableDoc::decision("X2", &["A2", "C", "Z0"], 1),
        VariableDoc::decision("X3", &["A3", "X2", "Z0"], 1),
        VariableDoc::decision("X0", &["C", "X1", "X2", "X3", "Z0"], 2),
        VariableDoc::utility("Y", &["A1", "A2", "A3", "V", "X0", "X3"], vec![
            red_term(),
            indicator("1", equal(s("X3", 0, 1), s("X0", 0, 1))),
        ]),
    ])
}

/// Every hand-written model fixture.
pub fn scm_fixtures() -> Vec<ScmFixture> {
    let f = |name, summary, decision, context, meu_with, meu_without, build| ScmFixture {
        name,
        summary,
        decision,
        context,
        meu_with,
        meu_without,
        build,
    };
    vec![
        f("linear-no-voi", "Z -> X -> Y with Y = x", "X", "Z", "1", "1", linear_doc as fn() -> ScmDoc),
        f("yes-voi", "X must copy Z", "X", "Z", "1", "1/2", yes_voi_doc),
        f("yes-voi-no-sr", "X' must copy X, which copies Z", "X'", "X", "1", "1/2", no_sr_doc),
        f("triangle", "Z and X are both decisions", "X", "Z", "1", "1", triangle_doc),
        f("xor-chain", "X = Z xor W1 xor W2 recovers U2", "X", "Z", "1", "1/2", xor_chain_doc),
        f("soluble-everitt", "X' observes Z directly", "X", "Z", "1", "1", || soluble_doc(false)),
        f("soluble-indexed", "W' reveals U'[Z']", "X", "Z", "2", "7/4", || soluble_doc(true)),
        f("remember-decision-1", "Y = [z0 = x0]", "X0", "Z0", "1", "1", || remember_doc(false)),
        f("remember-decision-2", "Y = [u = x0]", "X0", "Z0", "1", "1/2", || remember_doc(true)),
        f("finite-domain-1", "X' = U1 recovers U1", "X0", "Z0", "1", "1", || finite_domain_doc(false)),
        f("finite-domain-2", "W1 = U1[Z0]", "X0", "Z0", "1", "3/4", || finite_domain_doc(true)),
        f("obstacle-1", "C = <X1[0], Z0>", "X0", "Z0", "11", "11", || obstacle_doc(false)),
        f("obstacle-2", "C is a noisy copy of Z0", "X0", "Z0", "1099/100", "1095/100", || {
            obstacle_doc(true)
        }),
        f("superimposed", "X2 and X3 relay Z0", "X0", "Z0", "11", "11", superimposed_doc),
    ]
}

pub fn scm_fixture(name: &str) -> Option<ScmFixture> {
    scm_fixtures().into_iter().find(|f| f.name == name)
}

fn linear_graph() -> ScopedGraph {
    graph(&[("Z", Chance), ("X", Decision), ("Y", Utility)], &[("Z", "X"), ("X", "Y")])
}

fn yes_voi_graph() -> ScopedGraph {
    graph(&[("Z", Chance), ("X", Decision), ("Y", Utility)], &[("Z", "X"), ("X", "Y"), ("Z", "Y")])
}

fn no_sr_graph() -> ScopedGraph {
    graph(
        &[("Z", Chance), ("X", Decision), ("X'", Decision), ("Y", Utility)],
        &[("Z", "X"), ("X", "X'"), ("X'", "Y"), ("Z", "Y")],
    )
}

fn triangle_graph() -> ScopedGraph {
    graph(&[("Z", Decision), ("X", Decision), ("Y", Utility)], &[("Z", "X"), ("X", "Y"), ("Z", "Y")])
}

fn soluble_graph() -> ScopedGraph {
    graph(
        &[
            ("Z", Chance),
            ("X", Decision),
            ("Z'", Chance),
            ("W'", Chance),
            ("U'", Chance),
            ("X'", Decision),
            ("Y", Utility),
        ],
        &[
            ("Z", "X"),
            ("Z", "X'"),
            ("X", "Z'"),
            ("Z'", "X'"),
            ("Z'", "W'"),
            ("U'", "W'"),
            ("W'", "X'"),
            ("U'", "Y"),
            ("X'", "Y"),
            ("Z", "Y"),
        ],
    )
}

fn remember_graph() -> ScopedGraph {
    graph(
        &[("U", Chance), ("Z0", Decision), ("X0", Decision), ("Y", Utility)],
        &[("U", "Z0"), ("Z0", "X0"), ("X0", "Y"), ("Z0", "Y"), ("U", "Y")],
    )
}

fn finite_domain_graph() -> ScopedGraph {
    graph(
        &[("Z0", Chance), ("U1", Chance), ("W1", Chance), ("X'", Decision), ("X0", Decision), ("Y", Utility)],
        &[
            ("Z0", "X0"),
            ("Z0", "W1"),
            ("Z0", "X'"),
            ("W1", "X'"),
            ("X'", "X0"),
            ("U1", "W1"),
            ("U1", "Y"),
            ("X0", "Y"),
        ],
    )
}

fn empty_fix_graph() -> ScopedGraph {
    graph(
        &[("Z", Chance), ("C", Chance), ("X", Decision), ("X''", Decision), ("Y", Utility)],
        &[("Z", "X"), ("Z", "X''"), ("Z", "C"), ("C", "X''"), ("X", "Y"), ("X''", "Y"), ("C", "Y")],
    )
}

fn obstacle_graph() -> ScopedGraph {
    graph(
        &[("Z0", Chance), ("V", Chance), ("X1", Decision), ("C", Chance), ("X0", Decision), ("Y", Utility)],
        &[
            ("Z0", "X1"),
            ("Z0", "C"),
            ("X1", "C"),
            ("X1", "X0"),
            ("C", "X0"),
            ("C", "Y"),
            ("V", "X1"),
            ("V", "Y"),
            ("X0", "Y"),
            ("Z0", "X0"),
        ],
    )
}

fn collider_graph() -> ScopedGraph {
    graph(
        &[("Z", Chance), ("U", Chance), ("W", Chance), ("X", Decision), ("Y", Utility)],
        &[("Z", "X"), ("Z", "W"), ("U", "W"), ("W", "X"), ("U", "Y"), ("X", "Y")],
    )
}

fn confounded_graph() -> ScopedGraph {
    graph(
        &[("U", Chance), ("Z", Chance), ("X", Decision), ("Y", Utility)],
        &[("U", "Z"), ("U", "Y"), ("Z", "X"), ("X", "Y")],
    )
}

fn mediated_graph() -> ScopedGraph {
    graph(
        &[("Z", Chance), ("M", Chance), ("X", Decision), ("Y", Utility)],
        &[("Z", "M"), ("M", "Y"), ("Z", "X"), ("X", "Y")],
    )
}

fn downstream_graph() -> ScopedGraph {
    graph(
        &[("Z", Chance), ("X", Decision), ("M", Chance), ("Y", Utility)],
        &[("Z", "X"), ("X", "M"), ("M", "Y"), ("Z", "Y")],
    )
}

fn shared_mediator_graph() -> ScopedGraph {
    graph(
        &[("Z", Chance), ("U", Chance), ("W", Chance), ("M", Chance), ("X", Decision), ("Y", Utility)],
        &[("Z", "X"), ("Z", "W"), ("U", "W"), ("W", "X"), ("U", "M"), ("M", "Y"), ("X", "M")],
    )
}

fn two_contexts_graph() -> ScopedGraph {
    graph(
        &[("Z1", Chance), ("Z2", Chance), ("X", Decision), ("Y", Utility)],
        &[("Z1", "X"), ("Z2", "X"), ("Z1", "Y"), ("Z2", "Y"), ("X", "Y")],
    )
}

fn disconnected_graph() -> ScopedGraph {
    graph(&[("Z", Chance), ("X", Decision), ("Y", Utility)], &[("Z", "X")])
}

/// Every graph fixture with the expected verdict for one edge.
pub fn graph_fixtures() -> Vec<GraphFixture> {
    use ExpectedVerdict::*;
    let f = |name, summary, decision, context, verdict, k_override, build| GraphFixture {
        name,
        summary,
        decision,
        context,
        verdict,
        k_override,
        build,
    };
    vec![
        f("linear-no-voi", "Z -> X -> Y", "X", "Z", ImmaterialSingleDecision, None, linear_graph as fn() -> ScopedGraph),
        f("yes-voi", "Z -> X -> Y and Z -> Y", "X", "Z", MaterialByThm1, Some(1), yes_voi_graph),
        f("yes-voi-no-sr", "X relayed through X'", "X'", "X", MaterialByThm1, Some(1), no_sr_graph),
        f("triangle", "Z and X are both decisions", "X", "Z", ImmaterialLb2, None, triangle_graph),
        f("soluble", "X' observes Z, Z' and W'", "X", "Z", MaterialByThm1, Some(1), soluble_graph),
        f("remember-decision", "U -> Z0 -> X0 -> Y", "X0", "Z0", MaterialByThm1, Some(1), remember_graph),
        f("finite-domain", "X' reports W1 to X0", "X0", "Z0", MaterialByThm1, Some(1), finite_domain_graph),
        f("thm-2-1", "fix-point is empty", "X", "Z", Unknown, None, empty_fix_graph),
        f("obstacle", "two info paths into X0", "X0", "Z0", Unknown, None, obstacle_graph),
        f("collider", "Z -> W <- U -> Y", "X", "Z", MaterialByThm1, Some(1), collider_graph),
        f("confounded", "Z <- U -> Y", "X", "Z", MaterialByThm1, Some(1), confounded_graph),
        f("mediated", "Z -> M -> Y", "X", "Z", MaterialByThm1, Some(1), mediated_graph),
        f("downstream", "X -> M -> Y", "X", "Z", MaterialByThm1, Some(1), downstream_graph),
        f("shared-mediator", "U and X both feed M", "X", "Z", MaterialByThm1, Some(1), shared_mediator_graph),
        f("two-contexts", "X observes Z1 and Z2", "X", "Z1", MaterialByThm1, Some(1), two_contexts_graph),
        f("disconnected", "Y has no parents", "X", "Z", ImmaterialSingleDecision, None, disconnected_graph),
    ]
}

pub fn graph_fixture(name: &str) -> Option<GraphFixture> {
    graph_fixtures().into_iter().find(|f| f.name == name)
}

/// Names accepted by `reproduce`.
pub fn fixture_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = scm_fixtures().iter().map(|f| f.name).collect();
    for g in graph_fixtures() {
        if !names.contains(&g.name) {
            names.push(g.name);
        }
    }
    names
}
