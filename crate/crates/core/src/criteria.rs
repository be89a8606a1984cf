//! Graphical criteria: the single-decision test, solubility, the three
//! sufficient conditions for materiality, LB-factorizability with ordering
//! search, path extraction from non-factorizable sets and the fix-point
//! immateriality check.
//!
//! The single-decision criterion is complete only when the scope has one
//! decision. With several decisions a `PossiblyMaterial` answer is just that.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    directed_path, topological_orders_of, GraphError, Node, NodeSet, Path, ScopedGraph, Shape,
};
use crate::separation::{
    active_path_witness, active_policy_path, closure, is_active, policy_relevance, separated,
    separated1, SeparationQuery, Vertex,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriteriaError {
    #[error("`{context}` is not a context of `{decision}`")]
    NotAContext { decision: String, context: String },
    #[error("`{0}` is not a decision")]
    NotADecision(String),
    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Limits for the combinatorial searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Partial orderings expanded per factorizability query.
    pub ordering_nodes: usize,
    /// Candidate `(X', Z)` pairs tried by the fix-point check.
    pub lb2_candidates: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { ordering_nodes: 1 << 20, lb2_candidates: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingleDecisionVerdict {
    PossiblyMaterial,
    Immaterial,
}

fn require_decision(g: &ScopedGraph, x: Node) -> Result<(), CriteriaError> {
    if g.is_decision(x) {
        Ok(())
    } else {
        Err(CriteriaError::NotADecision(g.name(x).to_string()))
    }
}

fn require_context(g: &ScopedGraph, x: Node, z: Node) -> Result<(), CriteriaError> {
    require_decision(g, x)?;
    if g.contexts(x).contains(&z) {
        Ok(())
    } else {
        Err(CriteriaError::NotAContext {
            decision: g.name(x).to_string(),
            context: g.name(z).to_string(),
        })
    }
}

/// `{X} ∪ C_X`, optionally without one context.
fn observed_at(g: &ScopedGraph, x: Node, without: Option<Node>) -> NodeSet {
    let mut s: NodeSet = g.contexts(x).iter().copied().collect();
    s.insert(x);
    if let Some(z) = without {
        s.remove(&z);
    }
    s
}

/// Immaterial iff the utility is not downstream of `x`, or `z` is separated
/// from it by everything else `x` observes.
pub fn single_decision_criterion(
    g: &ScopedGraph,
    x: Node,
    z: Node,
) -> Result<SingleDecisionVerdict, CriteriaError> {
    require_context(g, x, z)?;
    let y = g.utility();
    if !g.descendants(x).contains(&y) || separated1(g, z, y, &observed_at(g, x, Some(z))) {
        Ok(SingleDecisionVerdict::Immaterial)
    } else {
        Ok(SingleDecisionVerdict::PossiblyMaterial)
    }
}

fn soluble_under(g: &ScopedGraph, order: &[Node], anc_y: &NodeSet) -> bool {
    let y = g.utility();
    let mut earlier = NodeSet::new();
    for &x in order {
        let here = observed_at(g, x, None);
        for v in &earlier {
            if here.contains(v) || !anc_y.contains(v) {
                continue;
            }
            if !separated1(g, *v, y, &here) {
                return false;
            }
        }
        earlier.extend(here);
    }
    true
}

/// Rearranges `v` into the next permutation in lexicographic order.
pub(crate) fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// First decision ordering, in lexicographic order, under which no earlier
/// decision or context carries information relevant to a later decision.
pub fn solubility(g: &ScopedGraph) -> Option<Vec<Node>> {
    let anc_y = g.ancestors(g.utility());
    let mut order: Vec<Node> = g.decisions().collect();
    loop {
        if soluble_under(g, &order, &anc_y) {
            return Some(order);
        }
        if !next_permutation(&mut order) {
            return None;
        }
    }
}

/// `⌈(X(S) ∪ C_{X(S)∖{z}}) ∖ {z}⌉`: everything the other decisions could
/// jointly pin down once `z` is withheld.
pub fn info_conditioning_set(g: &ScopedGraph, z: Node) -> NodeSet {
    let mut s = NodeSet::new();
    for x in g.decisions() {
        s.insert(x);
        if x != z {
            s.extend(g.contexts(x).iter().copied());
        }
    }
    s.remove(&z);
    closure(g, &s)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Thm1Report {
    /// Per decision: the decision is an ancestor of the utility.
    pub a: BTreeMap<Node, bool>,
    /// Per `(decision, context)`: the context is connected to the utility
    /// given the decision and its other contexts.
    pub b: BTreeMap<(Node, Node), bool>,
    /// Per `(decision, context)`: the policy node of the decision is
    /// connected to the utility given [`info_conditioning_set`].
    pub c: BTreeMap<(Node, Node), bool>,
}

impl Thm1Report {
    pub fn all_hold(&self) -> bool {
        self.a.values().chain(self.b.values()).chain(self.c.values()).all(|v| *v)
    }
}

pub fn thm1_conditions(g: &ScopedGraph) -> Thm1Report {
    let y = g.utility();
    let anc_y = g.ancestors(y);
    let mut r = Thm1Report::default();
    for x in g.decisions() {
        r.a.insert(x, anc_y.contains(&x));
        for &c in g.contexts(x) {
            r.b.insert((x, c), !separated1(g, c, y, &observed_at(g, x, Some(c))));
            r.c.insert((x, c), policy_relevance(g, x, &info_conditioning_set(g, c)));
        }
    }
    r
}

/// Precedence graph whose topological orders are exactly the orderings
/// meeting condition III.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingGraph {
    pub vertices: Vec<Node>,
    pub edges: Vec<(Node, Node)>,
}

impl OrderingGraph {
    pub fn descendants(&self, v: Node) -> NodeSet {
        let mut out = NodeSet::from([v]);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for (a, b) in &self.edges {
                if *a == u && out.insert(*b) {
                    stack.push(*b);
                }
            }
        }
        out
    }

    pub fn is_topological(&self, order: &[Node]) -> bool {
        let pos: BTreeMap<Node, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        order.len() == self.vertices.len()
            && self.edges.iter().all(|(a, b)| pos.get(a) < pos.get(b))
    }
}

/// `C_{X'} ∖ (X' ∪ Z)`.
pub fn derived_contexts(g: &ScopedGraph, x_prime: &NodeSet, z: &NodeSet) -> NodeSet {
    x_prime
        .iter()
        .flat_map(|x| g.contexts(*x).iter().copied())
        .filter(|c| !x_prime.contains(c) && !z.contains(c))
        .collect()
}

pub fn build_ordering_graph(g: &ScopedGraph, x_prime: &NodeSet, z: &NodeSet) -> OrderingGraph {
    let c_prime = derived_contexts(g, x_prime, z);
    let vertices: NodeSet = z.iter().chain(x_prime).chain(&c_prime).copied().collect();
    let mut edges = Vec::new();
    for &b in x_prime {
        for &a in g.contexts(b) {
            edges.push((a, b));
        }
        for d in g.descendants(b) {
            if d != b && vertices.contains(&d) {
                edges.push((b, d));
            }
        }
    }
    edges.sort();
    edges.dedup();
    OrderingGraph { vertices: vertices.into_iter().collect(), edges }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorizationWitness {
    pub x_prime: NodeSet,
    pub z: NodeSet,
    pub c_prime: NodeSet,
    pub u_prime: NodeSet,
    pub ordering: Vec<Node>,
}

impl FactorizationWitness {
    fn predecessors(&self, v: Node) -> NodeSet {
        self.ordering.iter().take_while(|u| **u != v).copied().collect()
    }
}

/// Condition I: `Y ⊥ π_{X'} | ⌈X' ∪ C'⌉`.
pub fn condition_one(g: &ScopedGraph, x_prime: &NodeSet, c_prime: &NodeSet) -> bool {
    let given = closure(g, &x_prime.union(c_prime).copied().collect());
    crate::separation::d_separated(
        g,
        &SeparationQuery::new(
            x_prime.iter().map(|x| Vertex::Policy(*x)),
            NodeSet::from([g.utility()]),
            given,
        ),
    )
}

/// Condition II for a single context, with the policy term dropped:
/// `Z_{≺C} ⊥ C | ⌈(X' ∪ C')_{≺C}⌉`.
fn condition_two_at(
    g: &ScopedGraph,
    c: Node,
    prefix: &[Node],
    x_prime: &NodeSet,
    c_prime: &NodeSet,
    z: &NodeSet,
) -> bool {
    let zs: NodeSet = prefix.iter().filter(|v| z.contains(v)).copied().collect();
    if zs.is_empty() {
        return true;
    }
    let given: NodeSet =
        prefix.iter().filter(|v| x_prime.contains(v) || c_prime.contains(v)).copied().collect();
    separated(g, &zs, &NodeSet::from([c]), &closure(g, &given))
}

/// Depth-first search over topological orders of the ordering graph, pruning
/// prefixes that already break condition II. Returns the first complete
/// ordering, in lexicographic order, that `accept` approves.
fn search_orderings(
    g: &ScopedGraph,
    x_prime: &NodeSet,
    z: &NodeSet,
    budget: usize,
    accept: &mut dyn FnMut(&[Node]) -> bool,
) -> Result<Option<Vec<Node>>, CriteriaError> {
    let h = build_ordering_graph(g, x_prime, z);
    let c_prime = derived_contexts(g, x_prime, z);
    let n = h.vertices.len();
    let idx = |v: Node| h.vertices.binary_search(&v).expect("edge endpoints are vertices");
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for (a, b) in &h.edges {
        succ[idx(*a)].push(idx(*b));
        indeg[idx(*b)] += 1;
    }

    struct State<'s> {
        g: &'s ScopedGraph,
        verts: &'s [Node],
        succ: &'s [Vec<usize>],
        x_prime: &'s NodeSet,
        c_prime: &'s NodeSet,
        z: &'s NodeSet,
        expanded: usize,
        budget: usize,
    }

    fn rec(
        s: &mut State<'_>,
        indeg: &mut [usize],
        used: &mut [bool],
        prefix: &mut Vec<Node>,
        accept: &mut dyn FnMut(&[Node]) -> bool,
    ) -> Result<bool, ()> {
        if prefix.len() == s.verts.len() {
            return Ok(accept(prefix));
        }
        for i in 0..s.verts.len() {
            if used[i] || indeg[i] != 0 {
                continue;
            }
            let v = s.verts[i];
            if s.c_prime.contains(&v)
                && !condition_two_at(s.g, v, prefix, s.x_prime, s.c_prime, s.z)
            {
                continue;
            }
            s.expanded += 1;
            if s.expanded > s.budget {
                return Err(());
            }
            used[i] = true;
            for &j in &s.succ[i] {
                indeg[j] -= 1;
            }
            prefix.push(v);
            if rec(s, indeg, used, prefix, accept)? {
                return Ok(true);
            }
            prefix.pop();
            for &j in &s.succ[i] {
                indeg[j] += 1;
            }
            used[i] = false;
        }
        Ok(false)
    }

    let mut state = State {
        g,
        verts: &h.vertices,
        succ: &succ,
        x_prime,
        c_prime: &c_prime,
        z,
        expanded: 0,
        budget,
    };
    let mut used = vec![false; n];
    let mut prefix = Vec::with_capacity(n);
    match rec(&mut state, &mut indeg, &mut used, &mut prefix, accept) {
        Ok(true) => Ok(Some(prefix)),
        Ok(false) => Ok(None),
        Err(()) => Err(CriteriaError::SearchBudgetExceeded(format!(
            "more than {budget} partial orderings over {n} variables"
        ))),
    }
}

fn check_factorizable_inputs(
    g: &ScopedGraph,
    x_prime: &NodeSet,
    z: &NodeSet,
) -> Result<(), CriteriaError> {
    for x in x_prime {
        require_decision(g, *x)?;
    }
    if let Some(v) = z.intersection(x_prime).next() {
        return Err(CriteriaError::PreconditionViolated(format!(
            "`{}` is both a target decision and a member of Z",
            g.name(*v)
        )));
    }
    if z.contains(&g.utility()) {
        return Err(CriteriaError::PreconditionViolated("Z contains the utility node".into()));
    }
    Ok(())
}

/// Searches for an ordering of `Z ∪ X' ∪ C'` meeting conditions I–III with
/// `U' = ∅`.
pub fn lb_factorizable(
    g: &ScopedGraph,
    x_prime: &NodeSet,
    z: &NodeSet,
    cfg: &SearchConfig,
) -> Result<Option<FactorizationWitness>, CriteriaError> {
    check_factorizable_inputs(g, x_prime, z)?;
    let c_prime = derived_contexts(g, x_prime, z);
    if !condition_one(g, x_prime, &c_prime) {
        return Ok(None);
    }
    let ordering = search_orderings(g, x_prime, z, cfg.ordering_nodes, &mut |_| true)?;
    Ok(ordering.map(|ordering| FactorizationWitness {
        x_prime: x_prime.clone(),
        z: z.clone(),
        c_prime,
        u_prime: NodeSet::new(),
        ordering,
    }))
}

/// True iff `z ⊥ (predecessors ∖ ⌈fixed⌉) | (predecessors ∩ ⌈fixed⌉) ∪ U'`.
pub fn minimal_context_separator_check(
    g: &ScopedGraph,
    z: Node,
    predecessors: &NodeSet,
    fixed: &NodeSet,
    u_prime: &NodeSet,
) -> bool {
    let cf = closure(g, fixed);
    let free: NodeSet = predecessors.difference(&cf).copied().collect();
    if free.is_empty() {
        return true;
    }
    let mut given: NodeSet = predecessors.intersection(&cf).copied().collect();
    given.extend(u_prime);
    separated(g, &NodeSet::from([z]), &free, &given)
}

/// Least fixpoint of `T ↦ ⌈T⌉ ∪ {Z ∈ Z | separator check passes}`.
pub fn fix_point(g: &ScopedGraph, w: &FactorizationWitness, t: &NodeSet) -> NodeSet {
    let preds: BTreeMap<Node, NodeSet> = w.z.iter().map(|z| (*z, w.predecessors(*z))).collect();
    let mut cur = t.clone();
    loop {
        let mut next = closure(g, &cur);
        for z in &w.z {
            if minimal_context_separator_check(g, *z, &preds[z], &cur, &w.u_prime) {
                next.insert(*z);
            }
        }
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn lb2_certifies(g: &ScopedGraph, w: &FactorizationWitness) -> bool {
    w.x_prime.iter().all(|x| {
        let cx: NodeSet = g.contexts(*x).iter().copied().collect();
        let start: NodeSet = cx.difference(&w.z).copied().collect();
        cx.is_subset(&fix_point(g, w, &start))
    })
}

fn combinations(pool: &[Node], k: usize, mut f: impl FnMut(&[Node]) -> bool) -> bool {
    fn rec(
        pool: &[Node],
        k: usize,
        start: usize,
        cur: &mut Vec<Node>,
        f: &mut dyn FnMut(&[Node]) -> bool,
    ) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..pool.len() {
            if pool.len() - i < k - cur.len() {
                break;
            }
            cur.push(pool[i]);
            if rec(pool, k, i + 1, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    rec(pool, k, 0, &mut Vec::with_capacity(k), &mut f)
}

/// Tries candidate sets `X' = {X} ∪ S` and `Z = {Z0} ∪ R`, smallest first,
/// and returns the first factorization whose fix-point covers every context
/// of every decision in `X'`.
pub fn immaterial_by_lb2(
    g: &ScopedGraph,
    x: Node,
    z0: Node,
    cfg: &SearchConfig,
) -> Result<Option<FactorizationWitness>, CriteriaError> {
    require_context(g, x, z0)?;
    let others: Vec<Node> = g.decisions().filter(|d| *d != x && *d != z0).collect();
    let max_total = others.len() + g.len();
    let mut tried = 0usize;
    let mut found: Option<FactorizationWitness> = None;
    let mut error: Option<CriteriaError> = None;
    for total in 0..=max_total {
        let mut any_shape = false;
        for s_size in 0..=total.min(others.len()) {
            let r_size = total - s_size;
            let stop = combinations(&others, s_size, |s| {
                let x_prime: NodeSet = s.iter().copied().chain([x]).collect();
                let pool: Vec<Node> = x_prime
                    .iter()
                    .flat_map(|d| g.contexts(*d).iter().copied())
                    .filter(|c| !x_prime.contains(c) && *c != z0)
                    .collect::<NodeSet>()
                    .into_iter()
                    .collect();
                if r_size > pool.len() {
                    return false;
                }
                any_shape = true;
                combinations(&pool, r_size, |r| {
                    tried += 1;
                    if tried > cfg.lb2_candidates {
                        error = Some(CriteriaError::SearchBudgetExceeded(format!(
                            "more than {} candidate sets",
                            cfg.lb2_candidates
                        )));
                        return true;
                    }
                    let z: NodeSet = r.iter().copied().chain([z0]).collect();
                    if !condition_one(g, &x_prime, &derived_contexts(g, &x_prime, &z)) {
                        return false;
                    }
                    let c_prime = derived_contexts(g, &x_prime, &z);
                    let mut accept = |ord: &[Node]| {
                        lb2_certifies(
                            g,
                            &FactorizationWitness {
                                x_prime: x_prime.clone(),
                                z: z.clone(),
                                c_prime: c_prime.clone(),
                                u_prime: NodeSet::new(),
                                ordering: ord.to_vec(),
                            },
                        )
                    };
                    match search_orderings(g, &x_prime, &z, cfg.ordering_nodes, &mut accept) {
                        Ok(Some(ordering)) => {
                            found = Some(FactorizationWitness {
                                x_prime: x_prime.clone(),
                                z,
                                c_prime: c_prime.clone(),
                                u_prime: NodeSet::new(),
                                ordering,
                            });
                            true
                        }
                        Ok(None) => false,
                        Err(e) => {
                            error = Some(e);
                            true
                        }
                    }
                })
            });
            if stop {
                break;
            }
        }
        if found.is_some() || error.is_some() || !any_shape {
            break;
        }
    }
    match (found, error) {
        (Some(w), _) => Ok(Some(w)),
        (None, Some(e)) => Err(e),
        (None, None) => Ok(None),
    }
}

/// Output of [`extract_paths_from_nonfactorizability`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedPaths {
    /// Path from `Z0` to `target`, active given `⌈X' ∪ C'⌉`.
    pub info: Path,
    /// Directed path from a member of `X'` to `target`.
    pub control: Path,
    pub target: Node,
    /// The ordering used; topological in the ordering graph.
    pub ordering: Vec<Node>,
    /// Which condition the ordering violated: 1 or 2.
    pub violated: u8,
    /// Set when the walk construction did not yield an active path and a
    /// direct witness search was used instead.
    pub fallback: bool,
}

fn kahn_lex(h: &OrderingGraph, subset: &NodeSet) -> Vec<Node> {
    let edges: Vec<(Node, Node)> = h
        .edges
        .iter()
        .filter(|(a, b)| subset.contains(a) && subset.contains(b))
        .copied()
        .collect();
    let verts: Vec<Node> = subset.iter().copied().collect();
    topological_orders_of(&verts, &edges, 1).0.pop().unwrap_or_default()
}

/// Removes cycles from a walk, keeping the first visit of each vertex.
fn loop_erase(walk: &[Node]) -> Vec<Node> {
    let mut out: Vec<Node> = Vec::new();
    for &v in walk {
        if let Some(i) = out.iter().position(|u| *u == v) {
            out.truncate(i + 1);
        } else {
            out.push(v);
        }
    }
    out
}

/// Builds an info path and a control path from a set pair that is not
/// LB-factorizable, following the two cases of the existence argument.
pub fn extract_paths_from_nonfactorizability(
    g: &ScopedGraph,
    z0: Node,
    x_prime: &NodeSet,
) -> Result<ExtractedPaths, CriteriaError> {
    let z = NodeSet::from([z0]);
    check_factorizable_inputs(g, x_prime, &z)?;
    let violated = |msg: String| Err(CriteriaError::PreconditionViolated(msg));
    for c in g.children(z0) {
        if g.is_decision(*c) && !x_prime.contains(c) {
            return violated(format!("decision child `{}` of Z0 is not in X'", g.name(*c)));
        }
    }
    let y = g.utility();
    let anc_y = g.ancestors(y);
    for &x in x_prime {
        if !anc_y.contains(&x) {
            return violated(format!("`{}` is not an ancestor of the utility", g.name(x)));
        }
        for &c in g.contexts(x) {
            if separated1(g, c, y, &observed_at(g, x, Some(c))) {
                return violated(format!(
                    "context `{}` of `{}` is separated from the utility",
                    g.name(c),
                    g.name(x)
                ));
            }
        }
    }

    let h = build_ordering_graph(g, x_prime, &z);
    let c_prime = derived_contexts(g, x_prime, &z);
    let below = h.descendants(z0);
    let above: NodeSet = h.vertices.iter().filter(|v| !below.contains(v)).copied().collect();
    let mut rest = below.clone();
    rest.remove(&z0);
    let mut ordering = kahn_lex(&h, &above);
    ordering.push(z0);
    ordering.extend(kahn_lex(&h, &rest));
    let full_given = closure(g, &x_prime.union(&c_prime).copied().collect());

    if !condition_one(g, x_prime, &c_prime) {
        let mut best: Option<(Node, Path)> = None;
        for &x in x_prime {
            if let Some(p) = active_policy_path(g, x, y, &full_given) {
                if best.as_ref().is_none_or(|(_, b)| p.len() < b.len()) {
                    best = Some((x, p));
                }
            }
        }
        let (x, p) = best.expect("condition I fails, so some policy path is active");
        if p.is_empty() || p.forward()[0] || p.nodes()[1] != z0 {
            return violated("policy path does not enter through Z0".into());
        }
        let info = p.segment(1, p.len());
        let control = directed_path(g, x, y).expect("x is an ancestor of the utility");
        return Ok(ExtractedPaths {
            info,
            control,
            target: y,
            ordering,
            violated: 1,
            fallback: false,
        });
    }

    let pos: BTreeMap<Node, usize> = ordering.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let z_pos = pos[&z0];
    for (i, &c) in ordering.iter().enumerate() {
        if !c_prime.contains(&c) || i < z_pos {
            continue;
        }
        let prefix = &ordering[..i];
        if condition_two_at(g, c, prefix, x_prime, &c_prime, &z) {
            continue;
        }
        let given: NodeSet = closure(
            g,
            &prefix.iter().filter(|v| x_prime.contains(v) || c_prime.contains(v)).copied().collect(),
        );
        let p = active_path_witness(g, z0, c, &given).expect("condition II fails here");
        // detour from each collider to its nearest conditioned descendant
        let mut walk = vec![p.first()];
        for k in 1..p.nodes().len() {
            let v = p.nodes()[k];
            walk.push(v);
            if p.shape(k) == Some(Shape::Collider) && !given.contains(&v) {
                let detour = given
                    .iter()
                    .filter_map(|s| directed_path(g, v, *s))
                    .min_by(|a, b| a.len().cmp(&b.len()).then(a.nodes().cmp(b.nodes())))
                    .expect("active collider has a conditioned descendant");
                let nodes = detour.nodes();
                walk.extend_from_slice(&nodes[1..]);
                walk.extend(nodes[..nodes.len() - 1].iter().rev());
            }
        }
        let later: NodeSet =
            c_prime.iter().filter(|v| pos[*v] > z_pos).copied().collect();
        let cut = walk
            .iter()
            .skip(1)
            .position(|v| later.contains(v))
            .map(|k| k + 1)
            .expect("walk ends in a later context");
        let target = walk[cut];
        let erased = loop_erase(&walk[..=cut]);
        let mut fallback = false;
        let info = match Path::from_nodes(g, erased) {
            Some(m) if is_active(g, &m, &full_given, false) => m,
            _ => {
                fallback = true;
                match active_path_witness(g, z0, target, &full_given) {
                    Some(m) => m,
                    None => return violated("no active info path to the truncation point".into()),
                }
            }
        };
        let control = g
            .children(z0)
            .iter()
            .filter(|x| x_prime.contains(x))
            .filter_map(|x| directed_path(g, *x, target))
            .min_by(|a, b| a.len().cmp(&b.len()).then(a.nodes().cmp(b.nodes())))
            .expect("later contexts descend from a decision child of Z0");
        return Ok(ExtractedPaths { info, control, target, ordering, violated: 2, fallback });
    }
    violated("the sets are LB-factorizable under the canonical ordering".into())
}
