//! d-separation, implied-variable closure and active-path witnesses.
//!
//! Policy nodes `π_X` never live in the graph. A query that starts at `π_X`
//! behaves as if `X` had one extra parentless parent.

use std::collections::VecDeque;

use crate::graph::{Node, NodeSet, Path, ScopedGraph, Shape};

/// Endpoint of a separation query.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Node(Node),
    /// The virtual policy parent of the given node.
    Policy(Node),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationQuery {
    pub sources: Vec<Vertex>,
    pub targets: NodeSet,
    pub given: NodeSet,
}

impl SeparationQuery {
    pub fn new(sources: impl IntoIterator<Item = Vertex>, targets: NodeSet, given: NodeSet) -> Self {
        SeparationQuery { sources: sources.into_iter().collect(), targets, given }
    }
}

/// Nodes reachable from `sources` along a path that is active given `given`.
/// Members of `given` are never reported; unobserved sources are.
pub fn reachable(g: &ScopedGraph, sources: &[Vertex], given: &NodeSet) -> NodeSet {
    let anc = g.ancestors_of_set(given);
    // state index: 2 * node + (1 if the ball arrived from a parent)
    let mut seen = vec![false; 2 * g.len()];
    let mut queue = VecDeque::new();
    for s in sources {
        match *s {
            Vertex::Node(v) => queue.push_back((v, false)),
            Vertex::Policy(x) => queue.push_back((x, true)),
        }
    }
    let mut out = NodeSet::new();
    while let Some((v, from_parent)) = queue.pop_front() {
        let idx = 2 * v.index() + from_parent as usize;
        if seen[idx] {
            continue;
        }
        seen[idx] = true;
        let observed = given.contains(&v);
        if !observed {
            out.insert(v);
            for c in g.children(v) {
                queue.push_back((*c, true));
            }
            if !from_parent {
                for p in g.parents(v) {
                    queue.push_back((*p, false));
                }
            }
        }
        if from_parent && anc.contains(&v) {
            for p in g.parents(v) {
                queue.push_back((*p, false));
            }
        }
    }
    out
}

/// Sources and targets in `given` are blocked; a source that is also a
/// target is connected to itself.
pub fn d_separated(g: &ScopedGraph, q: &SeparationQuery) -> bool {
    let reach = reachable(g, &q.sources, &q.given);
    q.targets.is_disjoint(&reach)
}

/// `a ⊥ b | given` for plain node sets.
pub fn separated(g: &ScopedGraph, a: &NodeSet, b: &NodeSet, given: &NodeSet) -> bool {
    d_separated(
        g,
        &SeparationQuery::new(a.iter().map(|v| Vertex::Node(*v)), b.clone(), given.clone()),
    )
}

pub fn separated1(g: &ScopedGraph, a: Node, b: Node, given: &NodeSet) -> bool {
    separated(g, &NodeSet::from([a]), &NodeSet::from([b]), given)
}

/// True iff `π_X` is d-connected to the utility node given `given`.
pub fn policy_relevance(g: &ScopedGraph, x: Node, given: &NodeSet) -> bool {
    let q = SeparationQuery::new([Vertex::Policy(x)], NodeSet::from([g.utility()]), given.clone());
    !d_separated(g, &q)
}

/// Least superset of `w` containing every decision whose contexts it contains.
pub fn closure(g: &ScopedGraph, w: &NodeSet) -> NodeSet {
    let mut out = w.clone();
    loop {
        let mut grew = false;
        for x in g.decisions() {
            if !out.contains(&x) && g.contexts(x).iter().all(|c| out.contains(c)) {
                out.insert(x);
                grew = true;
            }
        }
        if !grew {
            return out;
        }
    }
}

/// Checks the blocking clauses at the interior vertices of a path. With
/// `from_policy` the path is read as `π_{first} -> first ...`, so its first
/// vertex counts as interior.
pub fn is_active(g: &ScopedGraph, path: &Path, given: &NodeSet, from_policy: bool) -> bool {
    let anc = g.ancestors_of_set(given);
    let nodes = path.nodes();
    if from_policy && !nodes.is_empty() {
        let first = path.first();
        let collider = path.forward().first().map(|f| !f).unwrap_or(false);
        let ok = if collider { anc.contains(&first) } else { !given.contains(&first) };
        if !ok {
            return false;
        }
    }
    (1..nodes.len().saturating_sub(1)).all(|i| match path.shape(i) {
        Some(Shape::Collider) => anc.contains(&nodes[i]),
        _ => !given.contains(&nodes[i]),
    })
}

/// Shortest active path from `a` to `b`, ties broken by vertex names. Only
/// interior vertices are checked, so the endpoints may lie in `given`.
pub fn active_path_witness(g: &ScopedGraph, a: Node, b: Node, given: &NodeSet) -> Option<Path> {
    if a == b {
        return Some(Path::single(a));
    }
    if !given.contains(&a) && !given.contains(&b) && separated1(g, a, b, given) {
        return None;
    }
    Searcher::new(g, given, false).run(a, b)
}

/// Shortest active path `π_x -> x ... b`, returned without the virtual vertex.
pub fn active_policy_path(g: &ScopedGraph, x: Node, b: Node, given: &NodeSet) -> Option<Path> {
    let q = SeparationQuery::new([Vertex::Policy(x)], NodeSet::from([b]), given.clone());
    if x == b {
        return Some(Path::single(x));
    }
    if !given.contains(&b) && d_separated(g, &q) {
        return None;
    }
    Searcher::new(g, given, true).run(x, b)
}

struct Searcher<'a> {
    g: &'a ScopedGraph,
    given: &'a NodeSet,
    anc: NodeSet,
    from_policy: bool,
    neighbours: Vec<Vec<(Node, bool)>>,
}

impl<'a> Searcher<'a> {
    fn new(g: &'a ScopedGraph, given: &'a NodeSet, from_policy: bool) -> Self {
        let neighbours = g
            .nodes()
            .map(|v| {
                let mut n: Vec<(Node, bool)> = g
                    .children(v)
                    .iter()
                    .map(|c| (*c, true))
                    .chain(g.parents(v).iter().map(|p| (*p, false)))
                    .collect();
                n.sort();
                n
            })
            .collect();
        Searcher { g, given, anc: g.ancestors_of_set(given), from_policy, neighbours }
    }

    fn run(&self, a: Node, b: Node) -> Option<Path> {
        let mut on_path = vec![false; self.g.len()];
        on_path[a.index()] = true;
        for depth in 1..self.g.len() {
            let mut nodes = vec![a];
            let mut forward = Vec::new();
            if self.dfs(b, depth, &mut nodes, &mut forward, &mut on_path) {
                return Path::from_nodes(self.g, nodes);
            }
        }
        None
    }

    /// Whether the vertex at the end of `nodes` may be passed through when
    /// entered via `into_forward` and left via `out_forward`.
    fn passable(&self, v: Node, into_forward: bool, out_forward: bool) -> bool {
        if into_forward && !out_forward {
            self.anc.contains(&v)
        } else {
            !self.given.contains(&v)
        }
    }

    fn dfs(
        &self,
        b: Node,
        remaining: usize,
        nodes: &mut Vec<Node>,
        forward: &mut Vec<bool>,
        on_path: &mut [bool],
    ) -> bool {
        let v = *nodes.last().expect("path never empty");
        if remaining == 0 {
            return v == b;
        }
        if v == b {
            return false;
        }
        for &(n, fw) in &self.neighbours[v.index()] {
            if on_path[n.index()] {
                continue;
            }
            let entering = match forward.last() {
                Some(f) => Some(*f),
                None if self.from_policy => Some(true),
                None => None,
            };
            if let Some(into) = entering {
                if !self.passable(v, into, fw) {
                    continue;
                }
            }
            if n == b {
                if remaining != 1 {
                    continue;
                }
            } else if remaining == 1 {
                continue;
            }
            on_path[n.index()] = true;
            nodes.push(n);
            forward.push(fw);
            if self.dfs(b, remaining - 1, nodes, forward, on_path) {
                return true;
            }
            forward.pop();
            nodes.pop();
            on_path[n.index()] = false;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeKind::*;
    use crate::random::random_graph;
    use proptest::prelude::*;

    fn set(g: &ScopedGraph, names: &[&str]) -> NodeSet {
        g.set_of(names).unwrap()
    }

    /// Enumerates every simple path between `a` and `b` and applies the
    /// blocking clauses one by one.
    fn oracle_connected(g: &ScopedGraph, a: Node, b: Node, given: &NodeSet) -> bool {
        if a == b {
            return !given.contains(&a);
        }
        let desc: Vec<NodeSet> = g.nodes().map(|v| g.descendants(v)).collect();
        let mut stack = vec![vec![a]];
        while let Some(p) = stack.pop() {
            let last = *p.last().unwrap();
            if last == b {
                let path = Path::from_nodes(g, p.clone()).unwrap();
                let blocked = given.contains(&a)
                    || given.contains(&b)
                    || (1..p.len() - 1).any(|i| match path.shape(i) {
                        Some(Shape::Collider) => desc[p[i].index()].is_disjoint(given),
                        _ => given.contains(&p[i]),
                    });
                if !blocked {
                    return true;
                }
                continue;
            }
            for n in g.parents(last).iter().chain(g.children(last)) {
                if !p.contains(n) {
                    let mut q = p.clone();
                    q.push(*n);
                    stack.push(q);
                }
            }
        }
        false
    }

    #[test]
    fn chain_blocked_by_middle() {
        let g = ScopedGraph::new(
            &[("Z", Chance), ("X", Decision), ("Y", Utility)],
            &[("Z", "X"), ("X", "Y")],
        )
        .unwrap();
        let (z, y) = (g.node("Z").unwrap(), g.node("Y").unwrap());
        assert!(separated1(&g, z, y, &set(&g, &["X"])));
        assert!(!separated1(&g, z, y, &NodeSet::new()));
    }

    #[test]
    fn edgeless_pair_is_separated() {
        let g = ScopedGraph::new(&[("A", Chance), ("B", Utility)], &[]).unwrap();
        assert!(separated1(&g, g.node("A").unwrap(), g.node("B").unwrap(), &NodeSet::new()));
    }

    #[test]
    fn collider_opened_by_descendant() {
        let g = ScopedGraph::new(
            &[("A", Chance), ("B", Chance), ("C", Chance), ("D", Chance), ("Y", Utility)],
            &[("A", "C"), ("B", "C"), ("C", "D")],
        )
        .unwrap();
        let (a, b) = (g.node("A").unwrap(), g.node("B").unwrap());
        assert!(separated1(&g, a, b, &NodeSet::new()));
        assert!(!separated1(&g, a, b, &set(&g, &["D"])));
        let w = active_path_witness(&g, a, b, &set(&g, &["D"])).unwrap();
        assert_eq!(w.display(&g).to_string(), "A -> C <- B");
    }

    fn triangle() -> ScopedGraph {
        ScopedGraph::new(
            &[("Z", Decision), ("X", Decision), ("Y", Utility)],
            &[("Z", "X"), ("X", "Y"), ("Z", "Y")],
        )
        .unwrap()
    }

    #[test]
    fn triangle_closure_and_policy_relevance() {
        let g = triangle();
        let x = g.node("X").unwrap();
        assert_eq!(closure(&g, &set(&g, &["X"])), set(&g, &["X", "Z"]));
        assert_eq!(closure(&g, &NodeSet::new()), set(&g, &["X", "Z"]));
        assert!(!policy_relevance(&g, x, &closure(&g, &set(&g, &["X"]))));
        assert!(policy_relevance(&g, x, &NodeSet::new()));
    }

    #[test]
    fn policy_path_through_observed_decision() {
        let g = ScopedGraph::new(
            &[("Z", Chance), ("X", Decision), ("Y", Utility)],
            &[("Z", "X"), ("X", "Y"), ("Z", "Y")],
        )
        .unwrap();
        let (x, y) = (g.node("X").unwrap(), g.node("Y").unwrap());
        let p = active_policy_path(&g, x, y, &set(&g, &["X"])).unwrap();
        assert_eq!(p.display(&g).to_string(), "X <- Z -> Y");
        assert!(is_active(&g, &p, &set(&g, &["X"]), true));
        let p = active_policy_path(&g, x, y, &NodeSet::new()).unwrap();
        assert_eq!(p.display(&g).to_string(), "X -> Y");
    }

    #[test]
    fn witness_is_shortest() {
        let g = ScopedGraph::new(
            &[("A", Chance), ("B", Chance), ("C", Chance), ("Y", Utility)],
            &[("A", "B"), ("B", "C"), ("C", "Y"), ("A", "Y")],
        )
        .unwrap();
        let p =
            active_path_witness(&g, g.node("A").unwrap(), g.node("Y").unwrap(), &NodeSet::new())
                .unwrap();
        assert_eq!(p.len(), 1);
    }

    fn subset(g: &ScopedGraph, mask: u64) -> NodeSet {
        g.nodes().filter(|v| mask >> v.index() & 1 == 1).collect()
    }

    proptest! {
        #[test]
        fn matches_path_enumeration(seed in any::<u64>(), n in 2usize..8, mask in any::<u64>(), ai in 0usize..8, bi in 0usize..8) {
            let g = random_graph(seed, n, 0.4, 0.3);
            let (a, b) = (Node(ai % n), Node(bi % n));
            prop_assume!(a != b);
            let mut given = subset(&g, mask);
            given.remove(&a);
            given.remove(&b);
            let expect = oracle_connected(&g, a, b, &given);
            prop_assert_eq!(!separated1(&g, a, b, &given), expect);
            let w = active_path_witness(&g, a, b, &given);
            prop_assert_eq!(w.is_some(), expect);
            if let Some(w) = w {
                prop_assert!(is_active(&g, &w, &given, false));
                prop_assert_eq!(w.first(), a);
                prop_assert_eq!(w.last(), b);
            }
        }

        #[test]
        fn policy_matches_rewritten_graph(seed in any::<u64>(), n in 2usize..7, mask in any::<u64>(), xi in 0usize..7) {
            let g = random_graph(seed, n, 0.4, 0.3);
            let x = Node(xi % (n - 1));
            let given: NodeSet = subset(&g, mask).into_iter().filter(|v| *v != g.utility()).collect();
            // rebuild with an explicit parentless parent of x
            let mut doc = g.to_doc();
            doc.nodes.push(crate::graph::NodeDoc { name: "!pi".into(), kind: Chance });
            doc.edges.push(("!pi".into(), g.name(x).into()));
            if let Some(ctx) = doc.contexts.get_mut(g.name(x)) {
                ctx.push("!pi".into());
            }
            let h = ScopedGraph::from_doc(&doc).unwrap();
            let hgiven: NodeSet = given.iter().map(|v| h.node(g.name(*v)).unwrap()).collect();
            let expect = !separated1(&h, h.node("!pi").unwrap(), h.utility(), &hgiven);
            prop_assert_eq!(policy_relevance(&g, x, &given), expect);
            if let Some(p) = active_policy_path(&g, x, g.utility(), &given) {
                prop_assert!(is_active(&g, &p, &given, true));
            } else {
                prop_assert!(!expect);
            }
        }

        #[test]
        fn closure_is_monotone_and_idempotent(seed in any::<u64>(), n in 2usize..9, m1 in any::<u64>(), m2 in any::<u64>()) {
            let g = random_graph(seed, n, 0.4, 0.4);
            let a = subset(&g, m1 & m2);
            let b = subset(&g, m1);
            let ca = closure(&g, &a);
            prop_assert!(ca.is_subset(&closure(&g, &b)));
            prop_assert_eq!(closure(&g, &ca), ca.clone());
            prop_assert!(a.is_subset(&ca));
        }
    }
}
