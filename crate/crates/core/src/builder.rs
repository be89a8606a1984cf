//! Materiality paths and the model synthesized from them.
//!
//! Given a context `Z0` of a decision `X0` in a graph meeting conditions
//! A to C, [`build_materiality_paths`] picks a control path
//! `d: A -> .. -> Z0 -> X0 -> .. -> Y`, one info path per decision on `d`
//! and one auxiliary path per collider on an info path. Then
//! [`build_materiality_scm`] gives every vertex one bitstring component per
//! path through it:
//!
//! * `A` samples `k` uniform bits that `d` carries to `Y`.
//! * Directed info paths copy the value entering their intersection node
//!   `T_i` and `Y` checks it against the control value.
//! * Other info paths sample doubly exponential forks. Each collider
//!   indexes the fork on its right with the value on its left, and `Y`
//!   checks that the values reported along `d` and the auxiliary paths are
//!   compatible with the last fork.
//!
//! Under the compliant policy each info path scores 1. Withholding `Z0`
//! from `X0` makes that impossible to guarantee.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bits::tower;
use crate::criteria::{info_conditioning_set, thm1_conditions, CriteriaError};
use crate::graph::{
    directed_path, directed_path_avoiding, GraphError, Node, NodeKind, NodeSet, Path, ScopedGraph,
    Shape,
};
use crate::scm::{
    component_width, context_space, Component, FiniteScm, Policy, ScmDoc, ScmError, Slice, Term, Test, VariableDoc,
};
use crate::separation::{active_path_witness, active_policy_path, is_active};
use crate::policy::Scope;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("lemma hypothesis failed: {0}")]
    LemmaHypothesisFailed(String),
    #[error("no control path: {0}")]
    NoControlPath(String),
    #[error("domain explosion: {0}")]
    DomainExplosion(String),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

fn hypothesis(msg: impl Into<String>) -> BuildError {
    BuildError::LemmaHypothesisFailed(msg.into())
}

/// Non-decision context of decision `z` outside [`info_conditioning_set`].
/// The smallest by name if several qualify.
pub fn chance_parent(g: &ScopedGraph, z: Node) -> Result<Node, BuildError> {
    if !g.is_decision(z) {
        return Err(CriteriaError::NotADecision(g.name(z).to_string()).into());
    }
    let s = info_conditioning_set(g, z);
    g.contexts(z)
        .iter()
        .copied()
        .find(|n| !g.is_decision(*n) && !s.contains(n))
        .ok_or_else(|| hypothesis(format!("decision `{}` has no usable chance parent", g.name(z))))
}

/// Info path `z ... Y`, active given [`info_conditioning_set`] of `z`. For a
/// decision `z` it starts `z <- N` with `N` from [`chance_parent`].
pub fn info_path(g: &ScopedGraph, z: Node) -> Result<Path, BuildError> {
    let y = g.utility();
    let s_z = info_conditioning_set(g, z);
    let missing = || hypothesis(format!("no active path from `{}` to the utility", g.name(z)));
    if !g.is_decision(z) {
        return active_path_witness(g, z, y, &s_z).ok_or_else(missing);
    }
    let n = chance_parent(g, z)?;
    let s_n = info_conditioning_set(g, n);
    let p = active_policy_path(g, z, y, &s_n).ok_or_else(missing)?;
    if p.nodes().get(1) != Some(&n) {
        return Err(hypothesis(format!(
            "policy path of `{}` does not leave through `{}`",
            g.name(z),
            g.name(n)
        )));
    }
    let anc = g.ancestors_of_set(&s_z);
    let blocked = (1..p.nodes().len() - 1)
        .find(|i| p.shape(*i) == Some(Shape::Collider) && !anc.contains(&p.nodes()[*i]));
    let candidate = match blocked {
        None => p,
        Some(i) => {
            let m = p.nodes()[i];
            let prefix = &p.nodes()[..=i];
            let banned: NodeSet = prefix[..i].iter().copied().collect();
            let nodes = match directed_path_avoiding(g, m, y, &banned) {
                Some(tail) => prefix.iter().chain(&tail.nodes()[1..]).copied().collect(),
                None => {
                    let tail = directed_path(g, m, y).ok_or_else(missing)?;
                    let j = prefix
                        .iter()
                        .position(|v| tail.contains(*v))
                        .expect("the tail starts inside the prefix");
                    let from = tail.position(prefix[j]).expect("just found");
                    prefix[..j].iter().chain(&tail.nodes()[from..]).copied().collect()
                }
            };
            Path::from_nodes(g, nodes).ok_or_else(missing)?
        }
    };
    if candidate.nodes().get(1) != Some(&n) || !is_active(g, &candidate, &s_z, false) {
        return Err(hypothesis(format!("info path for `{}` is not active", g.name(z))));
    }
    Ok(candidate)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoPath {
    pub index: i32,
    pub decision: Node,
    pub context: Node,
    /// `m'_i`, from the context to the utility.
    pub full: Path,
    pub intersection: Node,
    /// `m_i`, from the intersection node to the utility.
    pub truncated: Path,
    pub forks: Vec<Node>,
    pub colliders: Vec<Node>,
    pub auxiliary: Vec<Path>,
}

impl InfoPath {
    /// True when the truncated path starts `T <- ..`, making `T` its first
    /// collider.
    pub fn starts_into_intersection(&self) -> bool {
        !self.truncated.is_empty() && !self.truncated.forward()[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaterialityPaths {
    pub x0: Node,
    pub z0: Node,
    pub source: Node,
    pub control: Path,
    pub i_min: i32,
    pub i_max: i32,
    pub info: Vec<InfoPath>,
}

/// Identifies one materiality path. The derived order is the component
/// order inside every variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathId {
    Control,
    Info(i32),
    Aux(i32, usize),
}

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathId::Control => write!(f, "d"),
            PathId::Info(i) => write!(f, "m{i}"),
            PathId::Aux(i, j) => write!(f, "r{i},{j}"),
        }
    }
}

impl MaterialityPaths {
    pub fn info(&self, i: i32) -> &InfoPath {
        &self.info[(i - self.i_min) as usize]
    }

    /// Every materiality path with its id, control path first.
    pub fn all(&self) -> Vec<(PathId, &Path)> {
        let mut out = vec![(PathId::Control, &self.control)];
        out.extend(self.info.iter().map(|m| (PathId::Info(m.index), &m.truncated)));
        for m in &self.info {
            for (j, r) in m.auxiliary.iter().enumerate() {
                out.push((PathId::Aux(m.index, j + 1), r));
            }
        }
        out
    }

    pub fn path(&self, id: PathId) -> &Path {
        match id {
            PathId::Control => &self.control,
            PathId::Info(i) => &self.info(i).truncated,
            PathId::Aux(i, j) => &self.info(i).auxiliary[j - 1],
        }
    }

    /// Control and auxiliary paths that enter `T_i`.
    pub fn entering(&self, i: i32) -> Vec<PathId> {
        let t = self.info(i).intersection;
        self.all()
            .into_iter()
            .filter(|(id, p)| match id {
                PathId::Control => true,
                PathId::Aux(..) => p.position(t).is_some_and(|q| q > 0),
                PathId::Info(_) => false,
            })
            .map(|(id, _)| id)
            .collect()
    }

    /// Rechecks every structural invariant against `g`.
    pub fn validate(&self, g: &ScopedGraph) -> Result<(), BuildError> {
        let y = g.utility();
        let d = &self.control;
        if !d.is_directed() || d.first() != self.source || d.last() != y {
            return Err(hypothesis("control path is not a directed path from the source to Y"));
        }
        if g.is_decision(self.source) {
            return Err(hypothesis("control path starts at a decision"));
        }
        let p0 = d.position(self.x0).ok_or_else(|| hypothesis("control path misses X0"))?;
        if p0 == 0 || d.nodes()[p0 - 1] != self.z0 {
            return Err(hypothesis("control path does not use the edge Z0 -> X0"));
        }
        for v in d.nodes() {
            if *v != self.z0 && g.parents(self.x0).contains(v) {
                return Err(hypothesis(format!(
                    "control path contains `{}`, another parent of X0",
                    g.name(*v)
                )));
            }
        }
        for m in &self.info {
            let s = info_conditioning_set(g, m.context);
            if !is_active(g, &m.full, &s, false) || m.full.first() != m.context || m.full.last() != y {
                return Err(hypothesis(format!("info path {} is not active", m.index)));
            }
            if g.is_decision(m.context) {
                let n = m.full.nodes()[1];
                if m.full.forward()[0] || g.is_decision(n) || s.contains(&n) {
                    return Err(hypothesis(format!(
                        "info path {} does not start at a chance parent",
                        m.index
                    )));
                }
            }
            let zp = d.position(m.context).ok_or_else(|| hypothesis("context off control path"))?;
            let back: Vec<Node> = d.nodes()[..=zp].iter().rev().copied().collect();
            let shared = m.full.nodes().iter().zip(&back).take_while(|(a, b)| a == b).count();
            if m.full.nodes()[shared - 1] != m.intersection
                || m.truncated.nodes() != &m.full.nodes()[shared - 1..]
            {
                return Err(hypothesis(format!("intersection of info path {} is wrong", m.index)));
            }
            for (w, r) in m.colliders.iter().zip(&m.auxiliary) {
                if !r.is_directed() || r.first() != *w || r.last() != y {
                    return Err(hypothesis("auxiliary path is not a directed path to Y"));
                }
            }
        }
        Ok(())
    }

    pub fn describe(&self, g: &ScopedGraph) -> String {
        let mut out = format!("d: {}\n", self.control.display(g));
        for m in &self.info {
            out += &format!(
                "m{}: {} (T = {})\n",
                m.index,
                m.truncated.display(g),
                g.name(m.intersection)
            );
            for (j, r) in m.auxiliary.iter().enumerate() {
                out += &format!("r{},{}: {}\n", m.index, j + 1, r.display(g));
            }
        }
        out
    }
}

fn decompose(m: &Path) -> Result<(Vec<Node>, Vec<Node>), BuildError> {
    let nodes = m.nodes();
    let mut forks = Vec::new();
    let mut colliders = Vec::new();
    if !m.is_empty() && !m.forward()[0] {
        colliders.push(nodes[0]);
    }
    for i in 1..nodes.len().saturating_sub(1) {
        match m.shape(i) {
            Some(Shape::Fork) => forks.push(nodes[i]),
            Some(Shape::Collider) => colliders.push(nodes[i]),
            _ => {}
        }
    }
    if forks.len() != colliders.len() || m.forward().last() != Some(&true) {
        return Err(hypothesis("truncated info path does not alternate into Y"));
    }
    Ok((forks, colliders))
}

/// Control, info and auxiliary paths for the edge `z0 -> x0`.
pub fn build_materiality_paths(
    g: &ScopedGraph,
    x0: Node,
    z0: Node,
) -> Result<MaterialityPaths, BuildError> {
    if !g.is_decision(x0) {
        return Err(CriteriaError::NotADecision(g.name(x0).to_string()).into());
    }
    if !g.contexts(x0).contains(&z0) {
        return Err(CriteriaError::NotAContext {
            decision: g.name(x0).to_string(),
            context: g.name(z0).to_string(),
        }
        .into());
    }
    if !thm1_conditions(g).all_hold() {
        return Err(hypothesis("conditions A to C do not all hold"));
    }
    let y = g.utility();
    let source = if g.is_decision(z0) { chance_parent(g, z0)? } else { z0 };
    let tail = directed_path(g, x0, y)
        .ok_or_else(|| BuildError::NoControlPath(format!("`{}` does not reach Y", g.name(x0))))?;
    let mut nodes = Vec::new();
    if source != z0 {
        nodes.push(source);
    }
    nodes.push(z0);
    nodes.extend_from_slice(tail.nodes());
    let control = Path::from_nodes(g, nodes)
        .ok_or_else(|| BuildError::NoControlPath("control path is not simple".into()))?;

    let on_d: Vec<(usize, Node)> = control
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, v)| g.is_decision(**v))
        .map(|(p, v)| (p, *v))
        .collect();
    let zero = on_d.iter().position(|(_, v)| *v == x0).expect("x0 lies on d") as i32;
    let mut info = Vec::new();
    for (ord, (pos, x)) in on_d.iter().enumerate() {
        let z = control.nodes()[pos - 1];
        let full = info_path(g, z)?;
        let back: Vec<Node> = control.nodes()[..*pos].iter().rev().copied().collect();
        let shared = full.nodes().iter().zip(&back).take_while(|(a, b)| a == b).count();
        let truncated = full.segment(shared - 1, full.nodes().len() - 1);
        let (forks, colliders) = decompose(&truncated)?;
        let auxiliary = colliders
            .iter()
            .map(|w| {
                directed_path(g, *w, y)
                    .ok_or_else(|| hypothesis(format!("collider `{}` does not reach Y", g.name(*w))))
            })
            .collect::<Result<Vec<_>, _>>()?;
        info.push(InfoPath {
            index: ord as i32 - zero,
            decision: *x,
            context: z,
            intersection: truncated.first(),
            full,
            truncated,
            forks,
            colliders,
            auxiliary,
        });
    }
    let paths = MaterialityPaths {
        x0,
        z0,
        source,
        control,
        i_min: -zero,
        i_max: on_d.len() as i32 - 1 - zero,
        info,
    };
    paths.validate(g)?;
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SynthesisParams {
    pub k: u32,
    pub b: usize,
    pub c: usize,
    pub k_override: Option<u32>,
    /// Set when an override drops `k` below the value the counting
    /// argument needs.
    pub guarantees_void: bool,
}

/// Smallest `k >= 1` with `2^k > (k + c) b c`.
pub fn minimal_k(b: usize, c: usize) -> u32 {
    (1u32..)
        .find(|k| (1u128 << k) > (*k as u128 + c as u128) * b as u128 * c as u128)
        .expect("2^k eventually dominates")
}

pub fn compute_params(
    g: &ScopedGraph,
    paths: &MaterialityPaths,
    k_override: Option<u32>,
) -> SynthesisParams {
    let b = g.decisions().map(|x| g.contexts(x).len()).max().unwrap_or(0);
    let mut through: BTreeMap<Node, usize> = BTreeMap::new();
    for (_, p) in paths.all() {
        for v in p.nodes() {
            *through.entry(*v).or_default() += 1;
        }
    }
    let c = through.values().copied().max().unwrap_or(0);
    let k = minimal_k(b, c);
    SynthesisParams {
        k: k_override.unwrap_or(k),
        b,
        c,
        k_override,
        guarantees_void: k_override.is_some_and(|o| o < k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildConfig {
    /// Widest variable allowed, in bits.
    pub max_bits: u32,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { max_bits: 24 }
    }
}

/// A component of `node` carried by path `id`.
type Src = (Node, PathId);

#[derive(Debug, Clone)]
enum Part {
    Uniform,
    Copy(Vec<Src>),
    Index { array: Vec<Src>, index: Vec<Src> },
}

/// The synthesized model with everything needed to inspect it.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub paths: MaterialityPaths,
    pub params: SynthesisParams,
    pub scm: FiniteScm,
    /// The same model with every decision replaced by its compliant rule.
    pub non_intervened: FiniteScm,
    /// Per vertex: `(path, lo, len)` of each component.
    pub layout: BTreeMap<Node, Vec<(PathId, u32, u32)>>,
}

impl Synthesis {
    pub fn expected_total(&self) -> i64 {
        (self.paths.i_max - self.paths.i_min + 1) as i64
    }
}

struct Plan<'a> {
    paths: &'a MaterialityPaths,
    k: u32,
    parts: BTreeMap<Node, Vec<(PathId, u32, Part)>>,
}

impl<'a> Plan<'a> {
    fn entering_width(&self, i: i32) -> u32 {
        self.k + self.paths.entering(i).len() as u32 - 1
    }

    /// Value that path `id` passes on from position `q`.
    fn out(&self, id: PathId, q: usize) -> Vec<Src> {
        let p = self.paths.path(id);
        match id {
            PathId::Control => vec![(p.nodes()[q], id)],
            PathId::Aux(i, _) if q == 0 => vec![(p.nodes()[0], PathId::Info(i))],
            PathId::Aux(..) => vec![(p.nodes()[q], id)],
            PathId::Info(i) if q == 0 => {
                let t = p.nodes()[0];
                self.paths.entering(i).into_iter().map(|e| (t, e)).collect()
            }
            PathId::Info(_) => vec![(p.nodes()[q], id)],
        }
    }

    /// `T_i`'s entering value expressed through its parents, so `T_i` can
    /// index with it. Only the source of `d` reads its own bits.
    fn entering_inlined(&self, i: i32) -> Vec<Src> {
        let t = self.paths.info(i).intersection;
        let mut out = Vec::new();
        for id in self.paths.entering(i) {
            let q = self.paths.path(id).position(t).expect("entering paths contain T");
            if q == 0 {
                out.push((t, id));
            } else {
                out.extend(self.out(id, q - 1));
            }
        }
        out
    }

    fn width_of(&self, srcs: &[Src]) -> u32 {
        srcs.iter()
            .map(|(v, id)| {
                self.parts[v]
                    .iter()
                    .find(|(pid, _, _)| pid == id)
                    .map(|(_, w, _)| *w)
                    .expect("components are planned before they are read")
            })
            .sum()
    }

    fn push(&mut self, v: Node, id: PathId, width: u32, part: Part) {
        if width > 0 {
            self.parts.entry(v).or_default().push((id, width, part));
        }
    }

    fn plan_control(&mut self) {
        let d = self.paths.control.clone();
        let last = d.nodes().len() - 1;
        self.push(d.nodes()[0], PathId::Control, self.k, Part::Uniform);
        for q in 1..last {
            let src = self.out(PathId::Control, q - 1);
            self.push(d.nodes()[q], PathId::Control, self.k, Part::Copy(src));
        }
    }

    fn plan_aux(&mut self, id: PathId) {
        let r = self.paths.path(id).clone();
        for q in 1..r.nodes().len() - 1 {
            let src = self.out(id, q - 1);
            let w = self.width_of(&src);
            self.push(r.nodes()[q], id, w, Part::Copy(src));
        }
    }

    fn plan_info(&mut self, i: i32) -> Result<(), BuildError> {
        let id = PathId::Info(i);
        let m = self.paths.info(i).truncated.clone();
        let kp = self.entering_width(i) as usize;
        let nodes = m.nodes();
        let last = nodes.len() - 1;
        let fork_width = |j: usize| -> Result<u32, BuildError> {
            tower(j, kp).filter(|w| *w <= 63).map(|w| w as u32).ok_or_else(|| {
                BuildError::DomainExplosion(format!(
                    "fork {j} of info path {i} needs 2^^{j}({kp}) bits; lower k"
                ))
            })
        };
        // positions in flow order: sources first, then the chains they feed
        let mut fork_ord = BTreeMap::new();
        for q in 1..last {
            if m.shape(q) == Some(Shape::Fork) {
                fork_ord.insert(q, fork_ord.len() + 1);
            }
        }
        let mut done = vec![false; last + 1];
        done[0] = !self.paths.info(i).starts_into_intersection();
        for (&q, &j) in &fork_ord {
            let w = fork_width(j)?;
            self.push(nodes[q], id, w, Part::Uniform);
            done[q] = true;
        }
        // chains copy from their upstream neighbour; colliders wait for both
        loop {
            let mut progressed = false;
            for q in 0..last {
                if done[q] {
                    continue;
                }
                let shape = if q == 0 { Some(Shape::Collider) } else { m.shape(q) };
                match shape {
                    Some(Shape::Chain) => {
                        let from = if m.forward()[q - 1] { q - 1 } else { q + 1 };
                        if !done[from] {
                            continue;
                        }
                        let src = self.out(id, from);
                        let w = self.width_of(&src);
                        self.push(nodes[q], id, w, Part::Copy(src));
                    }
                    Some(Shape::Collider) => {
                        if !done[q + 1] || (q > 0 && !done[q - 1]) {
                            continue;
                        }
                        let array = self.out(id, q + 1);
                        let index =
                            if q == 0 { self.entering_inlined(i) } else { self.out(id, q - 1) };
                        self.push(nodes[q], id, 1, Part::Index { array, index });
                    }
                    _ => unreachable!("forks are placed first"),
                }
                done[q] = true;
                progressed = true;
            }
            if done[..last].iter().all(|d| *d) {
                return Ok(());
            }
            if !progressed {
                return Err(hypothesis(format!("info path {i} has no consistent flow")));
            }
        }
    }
}

fn slices(
    g: &ScopedGraph,
    layout: &BTreeMap<Node, Vec<(PathId, u32, u32)>>,
    srcs: &[Src],
) -> Vec<Slice> {
    srcs.iter()
        .map(|(v, id)| {
            let (_, lo, len) = layout[v].iter().find(|(pid, _, _)| pid == id).expect("laid out");
            Slice::new(g.name(*v), *lo, *len)
        })
        .collect()
}

/// Synthesizes the materiality model for `paths`.
pub fn build_materiality_scm(
    g: &ScopedGraph,
    paths: &MaterialityPaths,
    params: &SynthesisParams,
    cfg: &BuildConfig,
) -> Result<Synthesis, BuildError> {
    paths.validate(g)?;
    let fresh = compute_params(g, paths, params.k_override);
    if fresh.b != params.b || fresh.c != params.c {
        return Err(hypothesis("parameters were computed for different paths"));
    }
    if params.k == 0 {
        return Err(hypothesis("k must be positive"));
    }
    let mut plan = Plan { paths, k: params.k, parts: BTreeMap::new() };
    plan.plan_control();
    // aux paths of one info path may feed the entering value of another
    let mut pending: Vec<PathId> = paths.all().into_iter().map(|(id, _)| id).skip(1).collect();
    let mut planned = vec![PathId::Control];
    while !pending.is_empty() {
        let ready = pending.iter().position(|id| match id {
            PathId::Info(i) => paths.entering(*i).iter().all(|e| planned.contains(e)),
            PathId::Aux(i, _) => planned.contains(&PathId::Info(*i)),
            PathId::Control => true,
        });
        let Some(pos) = ready else {
            return Err(hypothesis("info and auxiliary paths feed each other in a cycle"));
        };
        let id = pending.remove(pos);
        match id {
            PathId::Info(i) => plan.plan_info(i)?,
            PathId::Aux(..) => plan.plan_aux(id),
            PathId::Control => {}
        }
        planned.push(id);
    }

    let mut layout: BTreeMap<Node, Vec<(PathId, u32, u32)>> = BTreeMap::new();
    for (v, parts) in plan.parts.iter_mut() {
        parts.sort_by_key(|(id, _, _)| *id);
        let mut lo = 0;
        let entry = layout.entry(*v).or_default();
        for (id, w, _) in parts.iter() {
            entry.push((*id, lo, *w));
            lo += w;
        }
        if lo > cfg.max_bits {
            return Err(BuildError::DomainExplosion(format!(
                "`{}` needs {lo} bits, over the limit of {}; lower k with an override",
                g.name(*v),
                cfg.max_bits
            )));
        }
    }

    let y = g.utility();
    let mut terms = Vec::new();
    for m in &paths.info {
        let id = PathId::Info(m.index);
        let end = m.truncated.nodes().len() - 1;
        let reported: Vec<Src> = paths
            .entering(m.index)
            .into_iter()
            .flat_map(|e| plan.out(e, paths.path(e).nodes().len() - 2))
            .collect();
        let rhs = plan.out(id, end - 1);
        let test = if m.forks.is_empty() {
            Test::Equal { lhs: slices(g, &layout, &reported), rhs: slices(g, &layout, &rhs) }
        } else {
            let ws: Vec<Src> = (1..=m.auxiliary.len())
                .flat_map(|j| {
                    let e = PathId::Aux(m.index, j);
                    plan.out(e, paths.path(e).nodes().len() - 2)
                })
                .collect();
            Test::Compatible {
                w0: slices(g, &layout, &reported),
                ws: slices(g, &layout, &ws),
                u: slices(g, &layout, &rhs),
            }
        };
        terms.push(Term::Indicator { weight: "1".into(), test });
    }

    let make = |as_chance: bool| -> Result<FiniteScm, BuildError> {
        let mut vars = Vec::new();
        for v in g.nodes() {
            let parents: Vec<&str> = g.parents(v).iter().map(|p| g.name(*p)).collect();
            let components: Vec<Component> = plan
                .parts
                .get(&v)
                .map(|ps| {
                    ps.iter()
                        .map(|(_, w, part)| match part {
                            Part::Uniform => Component::Uniform { width: *w },
                            Part::Copy(src) => Component::Copy { slices: slices(g, &layout, src) },
                            Part::Index { array, index } => {
                                let a = slices(g, &layout, array);
                                assert_eq!(a.len(), 1, "collider arrays come from one parent");
                                Component::Index {
                                    array: a[0].clone(),
                                    index: slices(g, &layout, index),
                                }
                            }
                        })
                        .collect()
                })
                .unwrap_or_default();
            let var = match g.kind(v) {
                NodeKind::Utility => VariableDoc::utility(g.name(v), &parents, terms.clone()),
                NodeKind::Decision if !as_chance => {
                    let width = components.iter().map(component_width).sum();
                    VariableDoc::decision(g.name(v), &parents, width)
                }
                _ => VariableDoc::chance(g.name(v), &parents, components),
            };
            vars.push(var);
        }
        Ok(FiniteScm::from_doc(ScmDoc { variables: vars })?)
    };
    let scm = make(false)?;
    let non_intervened = make(true)?;
    debug_assert_eq!(scm.utility(), y.index());
    Ok(Synthesis { paths: paths.clone(), params: *params, scm, non_intervened, layout })
}

/// Every decision applies its own components to its contexts.
pub fn compliant_policy(s: &Synthesis) -> Result<Policy, BuildError> {
    let scope = Scope::full(&s.scm);
    let mut policy = Policy::new();
    let mut vals = vec![0u64; s.scm.len()];
    for (d, ctx) in &scope.contexts {
        let mut table = Vec::new();
        for assignment in context_space(&s.scm, ctx) {
            for (c, x) in ctx.iter().zip(&assignment) {
                vals[*c] = *x;
            }
            table.push(s.non_intervened.mechanism_value(*d, &mut vals)?);
        }
        policy = policy.with_rule(*d, ctx.clone(), table);
    }
    Ok(policy)
}

/// Paths, parameters and model in one call.
pub fn synthesize(
    g: &ScopedGraph,
    x0: Node,
    z0: Node,
    k_override: Option<u32>,
    cfg: &BuildConfig,
) -> Result<Synthesis, BuildError> {
    let paths = build_materiality_paths(g, x0, z0)?;
    let params = compute_params(g, &paths, k_override);
    build_materiality_scm(g, &paths, &params, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeKind::{Chance as C, Decision as D, Utility as U};
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    fn yes_voi() -> ScopedGraph {
        ScopedGraph::new(&[("Z", C), ("X", D), ("Y", U)], &[("Z", "X"), ("X", "Y"), ("Z", "Y")])
            .unwrap()
    }

    fn no_sr() -> ScopedGraph {
        ScopedGraph::new(
            &[("Z", C), ("X", D), ("X'", D), ("Y", U)],
            &[("Z", "X"), ("X", "X'"), ("X'", "Y"), ("Z", "Y")],
        )
        .unwrap()
    }

    fn names(g: &ScopedGraph, p: &Path) -> String {
        p.display(g).to_string()
    }

    #[test]
    fn minimal_k_values() {
        assert_eq!(minimal_k(1, 1), 2);
        assert_eq!(minimal_k(2, 2), 5);
        // independent recount
        for b in 1..4 {
            for c in 1..6 {
                let k = minimal_k(b, c) as usize;
                assert!(1usize << k > (k + c) * b * c);
                assert!(k == 1 || 1usize << (k - 1) <= (k - 1 + c) * b * c);
            }
        }
    }

    #[test]
    fn override_sets_warning() {
        let g = yes_voi();
        let (x, z) = (g.node("X").unwrap(), g.node("Z").unwrap());
        let paths = build_materiality_paths(&g, x, z).unwrap();
        let p = compute_params(&g, &paths, Some(1));
        assert_eq!(p.k, 1);
        assert!(p.guarantees_void);
        let q = compute_params(&g, &paths, None);
        assert!(!q.guarantees_void);
        assert_eq!((q.b, q.c), (1, 2));
        assert_eq!(q.k, minimal_k(1, 2));
    }

    #[test]
    fn directed_info_path() {
        let g = yes_voi();
        let (x, z) = (g.node("X").unwrap(), g.node("Z").unwrap());
        let paths = build_materiality_paths(&g, x, z).unwrap();
        assert_eq!(names(&g, &paths.control), "Z -> X -> Y");
        assert_eq!((paths.i_min, paths.i_max), (0, 0));
        let m = paths.info(0);
        assert_eq!(names(&g, &m.truncated), "Z -> Y");
        assert_eq!(m.intersection, z);
        assert!(m.forks.is_empty());
    }

    #[test]
    fn decision_context_uses_chance_parent() {
        let g = no_sr();
        let (x, xp, z) = (g.node("X").unwrap(), g.node("X'").unwrap(), g.node("Z").unwrap());
        assert_eq!(chance_parent(&g, x).unwrap(), z);
        let paths = build_materiality_paths(&g, xp, x).unwrap();
        assert_eq!(names(&g, &paths.control), "Z -> X -> X' -> Y");
        assert_eq!((paths.i_min, paths.i_max), (-1, 0));
        assert_eq!(names(&g, &paths.info(0).full), "X <- Z -> Y");
        assert_eq!(paths.info(0).intersection, z);
        assert_eq!(names(&g, &paths.info(-1).truncated), "Z -> Y");
    }

    #[test]
    fn chance_parent_rejects_chance_nodes() {
        let g = yes_voi();
        assert!(chance_parent(&g, g.node("Z").unwrap()).is_err());
    }

    fn check_synthesis(g: &ScopedGraph, x: &str, z: &str, k: u32) -> Synthesis {
        let s = synthesize(g, g.node(x).unwrap(), g.node(z).unwrap(), Some(k), &BuildConfig::default())
            .unwrap();
        let policy = compliant_policy(&s).unwrap();
        let total = BigRational::from_integer(s.expected_total().into());
        for (_, noise) in s.scm.worlds(1 << 20).unwrap() {
            let vals = s.scm.evaluate(&policy, &noise).unwrap();
            assert_eq!(s.scm.utility_value(&vals).unwrap(), total);
            let plain = s.non_intervened.evaluate(&Policy::new(), &noise).unwrap();
            assert_eq!(plain, vals);
        }
        s
    }

    #[test]
    fn compliant_policy_scores_every_path() {
        check_synthesis(&yes_voi(), "X", "Z", 1);
        check_synthesis(&yes_voi(), "X", "Z", 2);
        check_synthesis(&no_sr(), "X'", "X", 1);
    }

    #[test]
    fn collider_path_synthesis() {
        // Z -> W <- U -> Y with W observed by the decision
        let g = ScopedGraph::new(
            &[("Z", C), ("U", C), ("W", C), ("X", D), ("Y", U)],
            &[("Z", "X"), ("Z", "W"), ("U", "W"), ("W", "X"), ("U", "Y"), ("X", "Y")],
        )
        .unwrap();
        let s = check_synthesis(&g, "X", "Z", 1);
        let m = s.paths.info(0);
        assert_eq!(names(&g, &m.truncated), "Z -> W <- U -> Y");
        assert_eq!(g.names_of(&m.forks), vec!["U"]);
        assert_eq!(g.names_of(&m.colliders), vec!["W"]);
        assert_eq!(names(&g, &m.auxiliary[0]), "W -> X -> Y");
        let u = g.node("U").unwrap();
        assert_eq!(s.layout[&u], vec![(PathId::Info(0), 0, 2)]);
    }

    #[test]
    fn perturbed_policies_lose() {
        let s = check_synthesis(&yes_voi(), "X", "Z", 1);
        let policy = compliant_policy(&s).unwrap();
        let best = s.scm.expected_utility(&policy).unwrap();
        for (d, rule) in &policy.rules {
            for row in 0..rule.table.len() {
                let mut p = policy.clone();
                let r = p.rules.get_mut(d).unwrap();
                r.table[row] ^= 1;
                let v = s.scm.expected_utility(&p).unwrap();
                assert!(v < best);
            }
        }
        assert!(best > BigRational::zero());
        assert_eq!(best, BigRational::one());
    }

    #[test]
    fn domain_explosion_is_reported() {
        let g = ScopedGraph::new(
            &[("Z", C), ("U", C), ("W", C), ("X", D), ("Y", U)],
            &[("Z", "X"), ("Z", "W"), ("U", "W"), ("W", "X"), ("U", "Y"), ("X", "Y")],
        )
        .unwrap();
        let r = synthesize(&g, g.node("X").unwrap(), g.node("Z").unwrap(), Some(5), &BuildConfig {
            max_bits: 16,
        });
        assert!(matches!(r, Err(BuildError::DomainExplosion(_))));
    }
}
