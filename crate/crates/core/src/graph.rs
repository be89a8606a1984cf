//! Scoped decision graphs: parsing, relatives, shortest directed paths and
//! topological order enumeration.
//!
//! Nodes are stored sorted by name, so comparing two [`Node`] handles is the
//! same as comparing their names. Every tie-break in the crate relies on that.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Handle to a node of one particular [`ScopedGraph`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node(pub(crate) usize);

impl Node {
    pub fn index(self) -> usize {
        self.0
    }
}

pub type NodeSet = BTreeSet<Node>;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Chance,
    Decision,
    Utility,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Relation {
    Parents,
    Children,
    Ancestors,
    Descendants,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph contains a cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("graph has no utility node")]
    MissingUtility,
    #[error("graph has more than one utility node: {0:?}")]
    MultipleUtility(Vec<String>),
    #[error("parents of decision `{decision}` differ from its contexts")]
    DecisionParentMismatch { decision: String },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("node names must be non-empty")]
    EmptyName,
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {0} -> {1} listed twice")]
    MultiEdge(String, String),
    #[error("utility node `{0}` has children")]
    UtilityHasChildren(String),
    #[error("`{0}` is not a decision")]
    NotADecision(String),
    #[error("malformed graph document: {0}")]
    Json(String),
}

/// Wire format of a scoped graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<(String, String)>,
    pub contexts: BTreeMap<String, Vec<String>>,
    pub utility: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub name: String,
    pub kind: NodeKind,
}

/// A DAG over chance, decision and utility nodes in which the parents of every
/// decision are exactly its contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopedGraph {
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    parents: Vec<Vec<Node>>,
    children: Vec<Vec<Node>>,
    utility: Node,
    lookup: BTreeMap<String, Node>,
}

impl ScopedGraph {
    /// Builds a graph whose decision contexts are read off the edge list.
    pub fn new(nodes: &[(&str, NodeKind)], edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let mut contexts: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (name, kind) in nodes {
            if *kind == NodeKind::Decision {
                contexts.insert((*name).to_string(), Vec::new());
            }
        }
        for (a, b) in edges {
            if let Some(ctx) = contexts.get_mut(*b) {
                ctx.push((*a).to_string());
            }
        }
        let utility = nodes
            .iter()
            .find(|(_, k)| *k == NodeKind::Utility)
            .map(|(n, _)| (*n).to_string())
            .unwrap_or_default();
        Self::from_doc(&GraphDoc {
            nodes: nodes
                .iter()
                .map(|(n, k)| NodeDoc { name: (*n).to_string(), kind: *k })
                .collect(),
            edges: edges.iter().map(|(a, b)| ((*a).to_string(), (*b).to_string())).collect(),
            contexts,
            utility,
        })
    }

    pub fn from_doc(doc: &GraphDoc) -> Result<Self, GraphError> {
        let utilities: Vec<&NodeDoc> =
            doc.nodes.iter().filter(|n| n.kind == NodeKind::Utility).collect();
        match utilities.len() {
            0 => return Err(GraphError::MissingUtility),
            1 => {}
            _ => {
                return Err(GraphError::MultipleUtility(
                    utilities.iter().map(|n| n.name.clone()).collect(),
                ))
            }
        }
        let mut sorted: Vec<&NodeDoc> = doc.nodes.iter().collect();
        sorted.sort_by(|a, b| a.name.cmp(&b.name));
        let mut lookup = BTreeMap::new();
        for (i, n) in sorted.iter().enumerate() {
            if n.name.is_empty() {
                return Err(GraphError::EmptyName);
            }
            if lookup.insert(n.name.clone(), Node(i)).is_some() {
                return Err(GraphError::DuplicateNode(n.name.clone()));
            }
        }
        let node_of = |name: &str| {
            lookup.get(name).copied().ok_or_else(|| GraphError::UnknownNode(name.to_string()))
        };
        let utility = node_of(&doc.utility)?;
        if sorted[utility.0].kind != NodeKind::Utility {
            return Err(GraphError::MissingUtility);
        }

        let n = sorted.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (a, b) in &doc.edges {
            let (na, nb) = (node_of(a)?, node_of(b)?);
            if na == nb {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            if !seen.insert((na, nb)) {
                return Err(GraphError::MultiEdge(a.clone(), b.clone()));
            }
            parents[nb.0].push(na);
            children[na.0].push(nb);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort();
        }

        for (key, ctx) in &doc.contexts {
            let x = node_of(key)?;
            if sorted[x.0].kind != NodeKind::Decision {
                return Err(GraphError::NotADecision(key.clone()));
            }
            let mut declared = Vec::with_capacity(ctx.len());
            for c in ctx {
                declared.push(node_of(c)?);
            }
            declared.sort();
            declared.dedup();
            if declared != parents[x.0] {
                return Err(GraphError::DecisionParentMismatch { decision: key.clone() });
            }
        }
        for (i, nd) in sorted.iter().enumerate() {
            if nd.kind == NodeKind::Decision
                && !doc.contexts.contains_key(&nd.name)
                && !parents[i].is_empty()
            {
                return Err(GraphError::DecisionParentMismatch { decision: nd.name.clone() });
            }
        }
        if !children[utility.0].is_empty() {
            return Err(GraphError::UtilityHasChildren(doc.utility.clone()));
        }

        let g = ScopedGraph {
            names: sorted.iter().map(|n| n.name.clone()).collect(),
            kinds: sorted.iter().map(|n| n.kind).collect(),
            parents,
            children,
            utility,
            lookup,
        };
        if let Some(cycle) = g.find_cycle() {
            return Err(GraphError::Cycle(cycle.iter().map(|v| g.name(*v).to_string()).collect()));
        }
        Ok(g)
    }

    pub fn to_doc(&self) -> GraphDoc {
        let mut edges = Vec::new();
        for v in self.nodes() {
            for c in self.children(v) {
                edges.push((self.name(v).to_string(), self.name(*c).to_string()));
            }
        }
        let contexts = self
            .decisions()
            .map(|x| {
                (
                    self.name(x).to_string(),
                    self.parents(x).iter().map(|c| self.name(*c).to_string()).collect(),
                )
            })
            .collect();
        GraphDoc {
            nodes: self
                .nodes()
                .map(|v| NodeDoc { name: self.name(v).to_string(), kind: self.kind(v) })
                .collect(),
            edges,
            contexts,
            utility: self.name(self.utility).to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.names.len()).map(Node)
    }

    pub fn decisions(&self) -> impl Iterator<Item = Node> + '_ {
        self.nodes().filter(|v| self.is_decision(*v))
    }

    pub fn node(&self, name: &str) -> Result<Node, GraphError> {
        self.lookup.get(name).copied().ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn name(&self, v: Node) -> &str {
        &self.names[v.0]
    }

    pub fn kind(&self, v: Node) -> NodeKind {
        self.kinds[v.0]
    }

    pub fn is_decision(&self, v: Node) -> bool {
        self.kinds[v.0] == NodeKind::Decision
    }

    pub fn utility(&self) -> Node {
        self.utility
    }

    pub fn parents(&self, v: Node) -> &[Node] {
        &self.parents[v.0]
    }

    pub fn children(&self, v: Node) -> &[Node] {
        &self.children[v.0]
    }

    /// Contexts of a decision; identical to its parents.
    pub fn contexts(&self, x: Node) -> &[Node] {
        &self.parents[x.0]
    }

    pub fn has_edge(&self, a: Node, b: Node) -> bool {
        self.children[a.0].binary_search(&b).is_ok()
    }

    pub fn names_of<'a>(&'a self, set: impl IntoIterator<Item = &'a Node>) -> Vec<&'a str> {
        set.into_iter().map(|v| self.name(*v)).collect()
    }

    pub fn set_of(&self, names: &[&str]) -> Result<NodeSet, GraphError> {
        names.iter().map(|n| self.node(n)).collect()
    }

    pub fn ancestors(&self, v: Node) -> NodeSet {
        self.closure_along(std::iter::once(v), |u| self.parents(u))
    }

    pub fn descendants(&self, v: Node) -> NodeSet {
        self.closure_along(std::iter::once(v), |u| self.children(u))
    }

    /// Reflexive ancestors of a whole set.
    pub fn ancestors_of_set<'a>(&self, set: impl IntoIterator<Item = &'a Node>) -> NodeSet {
        self.closure_along(set.into_iter().copied(), |u| self.parents(u))
    }

    fn closure_along<'s>(
        &'s self,
        start: impl Iterator<Item = Node>,
        step: impl Fn(Node) -> &'s [Node],
    ) -> NodeSet {
        let mut out = NodeSet::new();
        let mut stack: Vec<Node> = start.collect();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend_from_slice(step(u));
            }
        }
        out
    }

    /// A topological order that always picks the smallest available node.
    pub fn topological_order(&self) -> Vec<Node> {
        let vertices: Vec<Node> = self.nodes().collect();
        let edges = self.edges();
        let (mut orders, _) = topological_orders_of(&vertices, &edges, 1);
        orders.pop().unwrap_or_default()
    }

    pub fn edges(&self) -> Vec<(Node, Node)> {
        self.nodes().flat_map(|v| self.children(v).iter().map(move |c| (v, *c))).collect()
    }

    fn find_cycle(&self) -> Option<Vec<Node>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.len()];
        let mut stack: Vec<(Node, usize)> = Vec::new();
        for root in self.nodes() {
            if state[root.0] != 0 {
                continue;
            }
            stack.push((root, 0));
            state[root.0] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(&c) = self.children[v.0].get(*next) {
                    *next += 1;
                    match state[c.0] {
                        0 => {
                            state[c.0] = 1;
                            stack.push((c, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|(u, _)| *u == c).unwrap_or(0);
                            return Some(stack[start..].iter().map(|(u, _)| *u).collect());
                        }
                        _ => {}
                    }
                } else {
                    state[v.0] = 2;
                    stack.pop();
                }
            }
        }
        None
    }
}

pub fn relatives(g: &ScopedGraph, v: Node, relation: Relation) -> NodeSet {
    match relation {
        Relation::Parents => g.parents(v).iter().copied().collect(),
        Relation::Children => g.children(v).iter().copied().collect(),
        Relation::Ancestors => g.ancestors(v),
        Relation::Descendants => g.descendants(v),
    }
}

/// Local shape of an interior path vertex.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `-> v ->` or `<- v <-`
    Chain,
    /// `<- v ->`
    Fork,
    /// `-> v <-`
    Collider,
}

/// A simple path. `forward[i]` records whether the edge between `nodes[i]` and
/// `nodes[i + 1]` points away from `nodes[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<Node>,
    forward: Vec<bool>,
}

impl Path {
    pub fn single(v: Node) -> Self {
        Path { nodes: vec![v], forward: Vec::new() }
    }

    /// Checks adjacency and vertex distinctness.
    pub fn from_nodes(g: &ScopedGraph, nodes: Vec<Node>) -> Option<Self> {
        if nodes.is_empty() {
            return None;
        }
        let distinct: NodeSet = nodes.iter().copied().collect();
        if distinct.len() != nodes.len() {
            return None;
        }
        let mut forward = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            if g.has_edge(w[0], w[1]) {
                forward.push(true);
            } else if g.has_edge(w[1], w[0]) {
                forward.push(false);
            } else {
                return None;
            }
        }
        Some(Path { nodes, forward })
    }

    pub fn from_names(g: &ScopedGraph, names: &[&str]) -> Option<Self> {
        let nodes = names.iter().map(|n| g.node(n).ok()).collect::<Option<Vec<_>>>()?;
        Self::from_nodes(g, nodes)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn forward(&self) -> &[bool] {
        &self.forward
    }

    pub fn first(&self) -> Node {
        self.nodes[0]
    }

    pub fn last(&self) -> Node {
        self.nodes[self.nodes.len() - 1]
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn contains(&self, v: Node) -> bool {
        self.nodes.contains(&v)
    }

    pub fn position(&self, v: Node) -> Option<usize> {
        self.nodes.iter().position(|u| *u == v)
    }

    /// Shape of `nodes[i]`; `None` for endpoints.
    pub fn shape(&self, i: usize) -> Option<Shape> {
        if i == 0 || i + 1 >= self.nodes.len() {
            return None;
        }
        Some(match (self.forward[i - 1], self.forward[i]) {
            (true, false) => Shape::Collider,
            (false, true) => Shape::Fork,
            _ => Shape::Chain,
        })
    }

    /// True when every edge points from the first vertex towards the last.
    pub fn is_directed(&self) -> bool {
        self.forward.iter().all(|f| *f)
    }

    /// Vertices `i..=j` as a path.
    pub fn segment(&self, i: usize, j: usize) -> Path {
        Path { nodes: self.nodes[i..=j].to_vec(), forward: self.forward[i..j].to_vec() }
    }

    pub fn reversed(&self) -> Path {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        let forward = self.forward.iter().rev().map(|f| !f).collect();
        Path { nodes, forward }
    }

    pub fn display<'a>(&'a self, g: &'a ScopedGraph) -> PathDisplay<'a> {
        PathDisplay { path: self, graph: g }
    }
}

pub struct PathDisplay<'a> {
    path: &'a Path,
    graph: &'a ScopedGraph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.path;
        write!(f, "{}", self.graph.name(p.nodes[0]))?;
        for (i, fw) in p.forward.iter().enumerate() {
            let arrow = if *fw { " -> " } else { " <- " };
            write!(f, "{arrow}{}", self.graph.name(p.nodes[i + 1]))?;
        }
        Ok(())
    }
}

/// Shortest directed path from `a` to `b`. Among shortest paths the one whose
/// vertex sequence is lexicographically smallest is returned.
pub fn directed_path(g: &ScopedGraph, a: Node, b: Node) -> Option<Path> {
    directed_path_avoiding(g, a, b, &NodeSet::new())
}

/// As [`directed_path`], restricted to paths whose interior avoids `banned`.
pub fn directed_path_avoiding(g: &ScopedGraph, a: Node, b: Node, banned: &NodeSet) -> Option<Path> {
    // distance to b along children, computed backwards from b
    let mut dist = vec![usize::MAX; g.len()];
    dist[b.0] = 0;
    let mut queue = VecDeque::from([b]);
    while let Some(v) = queue.pop_front() {
        for p in g.parents(v) {
            if dist[p.0] == usize::MAX && (*p == a || !banned.contains(p)) {
                dist[p.0] = dist[v.0] + 1;
                queue.push_back(*p);
            }
        }
    }
    if dist[a.0] == usize::MAX {
        return None;
    }
    let mut nodes = vec![a];
    let mut cur = a;
    while cur != b {
        cur = *g
            .children(cur)
            .iter()
            .find(|c| dist[c.0] != usize::MAX && dist[c.0] + 1 == dist[cur.0])?;
        nodes.push(cur);
    }
    let forward = vec![true; nodes.len() - 1];
    Some(Path { nodes, forward })
}

/// Enumerates topological orders of the DAG `(vertices, edges)` in
/// lexicographic order, stopping after `limit`. The flag reports truncation.
pub fn topological_orders_of(
    vertices: &[Node],
    edges: &[(Node, Node)],
    limit: usize,
) -> (Vec<Vec<Node>>, bool) {
    let mut verts: Vec<Node> = vertices.to_vec();
    verts.sort();
    verts.dedup();
    let pos = |v: Node| verts.binary_search(&v).ok();
    let n = verts.len();
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for (a, b) in edges {
        if let (Some(i), Some(j)) = (pos(*a), pos(*b)) {
            succ[i].push(j);
            indeg[j] += 1;
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut truncated = false;
    fn rec(
        verts: &[Node],
        succ: &[Vec<usize>],
        indeg: &mut [usize],
        used: &mut [bool],
        current: &mut Vec<Node>,
        out: &mut Vec<Vec<Node>>,
        limit: usize,
        truncated: &mut bool,
    ) {
        if out.len() >= limit {
            *truncated = true;
            return;
        }
        if current.len() == verts.len() {
            out.push(current.clone());
            return;
        }
        for i in 0..verts.len() {
            if used[i] || indeg[i] != 0 {
                continue;
            }
            used[i] = true;
            for &j in &succ[i] {
                indeg[j] -= 1;
            }
            current.push(verts[i]);
            rec(verts, succ, indeg, used, current, out, limit, truncated);
            current.pop();
            for &j in &succ[i] {
                indeg[j] += 1;
            }
            used[i] = false;
            if *truncated {
                return;
            }
        }
    }
    rec(&verts, &succ, &mut indeg, &mut used, &mut current, &mut out, limit, &mut truncated);
    (out, truncated)
}

/// Distinct topological orders of `g`, at most `limit` of them.
pub fn topological_orders(g: &ScopedGraph, limit: usize) -> Vec<Vec<Node>> {
    let vertices: Vec<Node> = g.nodes().collect();
    topological_orders_of(&vertices, &g.edges(), limit).0
}

pub fn parse_scoped_graph(text: &str) -> Result<ScopedGraph, GraphError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
    ScopedGraph::from_doc(&doc)
}

pub fn to_json(g: &ScopedGraph) -> String {
    serde_json::to_string_pretty(&g.to_doc()).expect("graph documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeKind::*;

    fn linear() -> ScopedGraph {
        ScopedGraph::new(&[("Z", Chance), ("X", Decision), ("Y", Utility)], &[("Z", "X"), ("X", "Y")])
            .unwrap()
    }

    #[test]
    fn parses_linear_graph_document() {
        let text = r#"{"nodes":[{"name":"Z","kind":"chance"},{"name":"X","kind":"decision"},
            {"name":"Y","kind":"utility"}],"edges":[["Z","X"],["X","Y"]],
            "contexts":{"X":["Z"]},"utility":"Y"}"#;
        let g = parse_scoped_graph(text).unwrap();
        assert_eq!(g.len(), 3);
        let y = g.node("Y").unwrap();
        assert_eq!(g.names_of(g.parents(y)), vec!["X"]);
        assert_eq!(g, linear());
    }

    #[test]
    fn empty_node_list_is_missing_utility() {
        let text = r#"{"nodes":[],"edges":[],"contexts":{},"utility":"Y"}"#;
        assert_eq!(parse_scoped_graph(text), Err(GraphError::MissingUtility));
    }

    #[test]
    fn parents_of_utility_in_fork_graph() {
        let g = ScopedGraph::new(
            &[("Z", Chance), ("X", Decision), ("Y", Utility)],
            &[("Z", "X"), ("X", "Y"), ("Z", "Y")],
        )
        .unwrap();
        let y = g.node("Y").unwrap();
        assert_eq!(relatives(&g, y, Relation::Parents), g.set_of(&["X", "Z"]).unwrap());
    }

    #[test]
    fn rejects_malformed_documents() {
        let base = |edges: &str, ctx: &str| {
            format!(
                r#"{{"nodes":[{{"name":"Z","kind":"chance"}},{{"name":"X","kind":"decision"}},
                {{"name":"Y","kind":"utility"}}],"edges":{edges},"contexts":{ctx},"utility":"Y"}}"#
            )
        };
        assert!(matches!(
            parse_scoped_graph(&base(r#"[["Z","X"],["X","Y"]]"#, r#"{"X":[]}"#)),
            Err(GraphError::DecisionParentMismatch { .. })
        ));
        assert!(matches!(
            parse_scoped_graph(&base(r#"[["Z","X"],["X","Y"]]"#, "{}")),
            Err(GraphError::DecisionParentMismatch { .. })
        ));
        assert!(matches!(
            parse_scoped_graph(&base(r#"[["Q","X"]]"#, r#"{"X":["Q"]}"#)),
            Err(GraphError::UnknownNode(_))
        ));
        assert!(matches!(
            parse_scoped_graph(&base(r#"[["Z","Z"]]"#, r#"{"X":[]}"#)),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            parse_scoped_graph(&base(r#"[["Z","X"],["Z","X"]]"#, r#"{"X":["Z"]}"#)),
            Err(GraphError::MultiEdge(..))
        ));
        assert!(matches!(
            parse_scoped_graph(&base(r#"[["Z","X"],["X","Z"]]"#, r#"{"X":["Z"]}"#)),
            Err(GraphError::Cycle(_))
        ));
        assert!(matches!(
            parse_scoped_graph(&base(r#"[["Y","Z"]]"#, r#"{"X":[]}"#)),
            Err(GraphError::UtilityHasChildren(_))
        ));
        assert!(matches!(
            parse_scoped_graph(&base("[]", r#"{"Z":[]}"#)),
            Err(GraphError::NotADecision(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = linear();
        assert_eq!(parse_scoped_graph(&to_json(&g)).unwrap(), g);
    }

    #[test]
    fn reflexive_descendants() {
        let g = linear();
        let z = g.node("Z").unwrap();
        assert_eq!(relatives(&g, z, Relation::Descendants), g.set_of(&["Z", "X", "Y"]).unwrap());
        assert!(relatives(&g, z, Relation::Ancestors).contains(&z));
        assert!(!relatives(&g, z, Relation::Children).contains(&z));
    }

    #[test]
    fn directed_path_follows_decision_chain() {
        let g = ScopedGraph::new(
            &[("Z", Chance), ("X", Decision), ("X'", Decision), ("Y", Utility)],
            &[("Z", "X"), ("X", "X'"), ("X'", "Y"), ("Z", "Y")],
        )
        .unwrap();
        let p = directed_path(&g, g.node("X").unwrap(), g.node("Y").unwrap()).unwrap();
        assert_eq!(p.display(&g).to_string(), "X -> X' -> Y");
        let x = g.node("X").unwrap();
        assert_eq!(directed_path(&g, x, x).unwrap(), Path::single(x));
        assert!(directed_path(&g, g.node("Y").unwrap(), x).is_none());
    }

    #[test]
    fn directed_path_breaks_ties_by_name() {
        let g = ScopedGraph::new(
            &[("A", Chance), ("B", Chance), ("C", Chance), ("Y", Utility)],
            &[("A", "C"), ("A", "B"), ("B", "Y"), ("C", "Y")],
        )
        .unwrap();
        let p = directed_path(&g, g.node("A").unwrap(), g.node("Y").unwrap()).unwrap();
        assert_eq!(p.display(&g).to_string(), "A -> B -> Y");
    }

    #[test]
    fn topological_orders_of_diamond() {
        let g = ScopedGraph::new(
            &[("A", Chance), ("B", Chance), ("C", Chance), ("Y", Utility)],
            &[("A", "B"), ("A", "C"), ("B", "Y"), ("C", "Y")],
        )
        .unwrap();
        let orders = topological_orders(&g, 10);
        let named: Vec<Vec<&str>> = orders.iter().map(|o| g.names_of(o)).collect();
        assert_eq!(named, vec![vec!["A", "B", "C", "Y"], vec!["A", "C", "B", "Y"]]);
        assert_eq!(topological_orders(&g, 1).len(), 1);
    }

    #[test]
    fn path_shapes() {
        let g = ScopedGraph::new(
            &[("A", Chance), ("B", Chance), ("C", Chance), ("Y", Utility)],
            &[("A", "B"), ("C", "B"), ("C", "Y")],
        )
        .unwrap();
        let p = Path::from_names(&g, &["A", "B", "C", "Y"]).unwrap();
        assert_eq!(p.shape(1), Some(Shape::Collider));
        assert_eq!(p.shape(2), Some(Shape::Fork));
        assert_eq!(p.shape(0), None);
        assert_eq!(p.display(&g).to_string(), "A -> B <- C -> Y");
        assert_eq!(p.reversed().display(&g).to_string(), "Y <- C -> B <- A");
        assert!(Path::from_names(&g, &["A", "C"]).is_none());
    }
}
