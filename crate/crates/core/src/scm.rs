//! Exact finite-domain structural causal models.
//!
//! Every variable holds a bitstring of declared width packed into a `u64`,
//! bit 0 being the leftmost (highest-order) bit. A chance variable's value is
//! the concatenation of its components. Decisions have no mechanism and take
//! their value from a policy. The utility is a sum of rational terms.
//!
//! Exogenous noise lives inside components (`uniform` and noisy `table`),
//! so a world is one outcome per noise source. Probabilities are kept as
//! integer numerators over a common denominator, which makes every expected
//! utility an exact rational.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::compatible_packed;
use crate::graph::{GraphDoc, NodeDoc, NodeKind, ScopedGraph};

/// Default cap on the number of exogenous worlds.
pub const DEFAULT_WORLD_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScmError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("policy does not cover decision `{0}`")]
    IncompletePolicy(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("domain explosion: {0}")]
    DomainExplosion(String),
    #[error("the utility is not a random variable of the joint distribution")]
    UtilityRequested,
    #[error("arithmetic overflow while accumulating exact sums")]
    Overflow,
}

/// Bits `lo .. lo + len` of a parent's value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slice {
    pub parent: String,
    #[serde(default)]
    pub lo: u32,
    pub len: u32,
}

impl Slice {
    pub fn new(parent: &str, lo: u32, len: u32) -> Self {
        Slice { parent: parent.to_string(), lo, len }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    /// Fresh uniform noise.
    Uniform { width: u32 },
    /// Concatenation of parent slices.
    Copy { slices: Vec<Slice> },
    /// One bit: `array[index]`.
    Index { array: Slice, index: Vec<Slice> },
    Const { width: u32, value: u64 },
    /// `table[input][noise]` where `input` is the concatenated slices and
    /// `noise` is drawn from the given distribution.
    Table { inputs: Vec<Slice>, width: u32, noise: Vec<String>, table: Vec<Vec<u64>> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Test {
    Equal { lhs: Vec<Slice>, rhs: Vec<Slice> },
    /// `array[index] = value`, `value` being one bit.
    IndexEq { array: Slice, index: Vec<Slice>, value: Slice },
    /// The report `⟨w_0, w_1 .. w_J⟩` is compatible with `u`.
    Compatible { w0: Vec<Slice>, ws: Vec<Slice>, u: Vec<Slice> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    Indicator { weight: String, test: Test },
    Table { inputs: Vec<Slice>, values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub width: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Term>,
}

impl VariableDoc {
    pub fn chance(name: &str, parents: &[&str], components: Vec<Component>) -> Self {
        let width = components.iter().map(component_width).sum();
        VariableDoc {
            name: name.into(),
            kind: NodeKind::Chance,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            width,
            components,
            terms: Vec::new(),
        }
    }

    pub fn decision(name: &str, parents: &[&str], width: u32) -> Self {
        VariableDoc {
            name: name.into(),
            kind: NodeKind::Decision,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            width,
            components: Vec::new(),
            terms: Vec::new(),
        }
    }

    pub fn utility(name: &str, parents: &[&str], terms: Vec<Term>) -> Self {
        VariableDoc {
            name: name.into(),
            kind: NodeKind::Utility,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            width: 0,
            components: Vec::new(),
            terms,
        }
    }
}

/// Wire format of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmDoc {
    pub variables: Vec<VariableDoc>,
}

pub(crate) fn component_width(c: &Component) -> u32 {
    match c {
        Component::Uniform { width } | Component::Const { width, .. } => *width,
        Component::Table { width, .. } => *width,
        Component::Copy { slices } => slices.iter().map(|s| s.len).sum(),
        Component::Index { .. } => 1,
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, ScmError> {
    let bad = || ScmError::Invalid(format!("`{s}` is not a rational"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rendering with `digits` places, truncated toward zero.
pub fn decimal(r: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (r * BigRational::from_integer(scale.clone())).trunc().to_integer();
    let neg = scaled.is_negative() || (r.is_negative() && scaled.is_zero());
    let abs = scaled.abs();
    let (int, frac) = abs.div_rem(&scale);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int}");
    }
    format!("{sign}{int}.{:0>width$}", frac.to_string(), width = digits as usize)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CSlice {
    var: usize,
    shift: u32,
    mask: u64,
    len: u32,
}

impl CSlice {
    #[inline]
    fn get(&self, vals: &[u64]) -> u64 {
        (vals[self.var] >> self.shift) & self.mask
    }
}

#[inline]
fn concat(slices: &[CSlice], vals: &[u64]) -> u64 {
    slices.iter().fold(0u64, |acc, s| if s.len == 0 { acc } else { acc << s.len | s.get(vals) })
}

#[inline]
fn bit_at(v: u64, width: u32, p: u64) -> u64 {
    if p >= width as u64 {
        0
    } else {
        v >> (width as u64 - 1 - p) & 1
    }
}

#[derive(Debug, Clone)]
enum CComponent {
    Noise { source: usize },
    Copy(Vec<CSlice>),
    Index { array: CSlice, index: Vec<CSlice> },
    Const(u64),
    Table { inputs: Vec<CSlice>, source: Option<usize>, table: Vec<Vec<u64>> },
}

#[derive(Debug, Clone)]
enum CTest {
    Equal(Vec<CSlice>, Vec<CSlice>),
    IndexEq(CSlice, Vec<CSlice>, CSlice),
    Compatible { w0: Vec<CSlice>, k: u32, ws: Vec<CSlice>, u: Vec<CSlice>, width: u32 },
}

#[derive(Debug, Clone)]
enum CTerm {
    Indicator(i128, CTest),
    Table(Vec<CSlice>, Vec<i128>),
}

enum RawTerm {
    Indicator(BigRational, CTest),
    Table(Vec<CSlice>, Vec<BigRational>),
}

#[derive(Debug, Clone)]
enum CMech {
    Decision,
    Chance(Vec<(CComponent, u32)>),
    Utility(Vec<CTerm>),
}

/// A noise source: integer weights over its outcomes, summing to `total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseSource {
    pub variable: usize,
    pub weights: Vec<u64>,
    pub total: u64,
}

/// A validated model.
#[derive(Debug, Clone)]
pub struct FiniteScm {
    doc: ScmDoc,
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    widths: Vec<u32>,
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
    mechs: Vec<CMech>,
    sources: Vec<NoiseSource>,
    utility: usize,
    utility_denom: i128,
}

fn lcm_i128(a: i128, b: i128) -> Result<i128, ScmError> {
    let g = a.gcd(&b);
    (a / g).checked_mul(b).ok_or(ScmError::Overflow)
}

fn to_i128(b: &BigInt) -> Result<i128, ScmError> {
    b.to_i128().ok_or(ScmError::Overflow)
}

impl FiniteScm {
    pub fn from_doc(doc: ScmDoc) -> Result<Self, ScmError> {
        let n = doc.variables.len();
        let mut index = BTreeMap::new();
        for (i, v) in doc.variables.iter().enumerate() {
            if v.name.is_empty() {
                return Err(ScmError::Invalid("empty variable name".into()));
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(ScmError::Invalid(format!("duplicate variable `{}`", v.name)));
            }
            if v.width > 63 {
                return Err(ScmError::DomainExplosion(format!(
                    "`{}` has {} bits; values are limited to 63",
                    v.name, v.width
                )));
            }
        }
        let utilities: Vec<usize> = (0..n)
            .filter(|i| doc.variables[*i].kind == NodeKind::Utility)
            .collect();
        if utilities.len() != 1 {
            return Err(ScmError::Invalid("exactly one utility variable is required".into()));
        }
        let utility = utilities[0];
        let lookup =
            |s: &str| index.get(s).copied().ok_or_else(|| ScmError::UnknownVariable(s.to_string()));
        let mut parents = Vec::with_capacity(n);
        for v in &doc.variables {
            let mut ps = Vec::new();
            for p in &v.parents {
                let pi = lookup(p)?;
                if ps.contains(&pi) {
                    return Err(ScmError::Invalid(format!("`{p}` listed twice as parent")));
                }
                ps.push(pi);
            }
            parents.push(ps);
        }
        let widths: Vec<u32> = doc.variables.iter().map(|v| v.width).collect();
        let order = topo_order(&parents)
            .ok_or_else(|| ScmError::Invalid("parent relation is cyclic".into()))?;

        let mut sources = Vec::new();
        let mut mechs = Vec::with_capacity(n);
        let mut denoms: Vec<BigInt> = Vec::new();
        let mut raw_utility = Vec::new();
        for (i, v) in doc.variables.iter().enumerate() {
            let slice = |s: &Slice| -> Result<CSlice, ScmError> {
                let var = lookup(&s.parent)?;
                // a chance variable may read its own earlier components
                if !parents[i].contains(&var) && !(var == i && v.kind == NodeKind::Chance) {
                    return Err(ScmError::Invalid(format!(
                        "`{}` reads `{}`, which is not a parent",
                        v.name, s.parent
                    )));
                }
                let w = widths[var];
                if s.lo.checked_add(s.len).is_none_or(|e| e > w) {
                    return Err(ScmError::Invalid(format!(
                        "slice {}..{} of `{}` exceeds its {} bits",
                        s.lo,
                        s.lo + s.len,
                        s.parent,
                        w
                    )));
                }
                let mask = if s.len == 64 { u64::MAX } else { (1u64 << s.len) - 1 };
                Ok(CSlice { var, shift: w - s.lo - s.len, mask, len: s.len })
            };
            let slices = |ss: &[Slice]| -> Result<Vec<CSlice>, ScmError> {
                ss.iter().map(&slice).collect()
            };
            let total_len = |ss: &[CSlice]| ss.iter().map(|s| s.len).sum::<u32>();
            match v.kind {
                NodeKind::Decision => {
                    if !v.components.is_empty() || !v.terms.is_empty() {
                        return Err(ScmError::Invalid(format!(
                            "decision `{}` cannot carry a mechanism",
                            v.name
                        )));
                    }
                    mechs.push(CMech::Decision);
                }
                NodeKind::Chance => {
                    if !v.terms.is_empty() {
                        return Err(ScmError::Invalid(format!("`{}` has utility terms", v.name)));
                    }
                    let mut comps = Vec::new();
                    for c in &v.components {
                        let w = component_width(c);
                        let cc = match c {
                            Component::Uniform { width } => {
                                if *width > 0 {
                                    sources.push(NoiseSource {
                                        variable: i,
                                        weights: vec![1; 1usize << width],
                                        total: 1u64 << width,
                                    });
                                    CComponent::Noise { source: sources.len() - 1 }
                                } else {
                                    CComponent::Const(0)
                                }
                            }
                            Component::Copy { slices: ss } => CComponent::Copy(slices(ss)?),
                            Component::Index { array, index } => {
                                let a = slice(array)?;
                                let idx = slices(index)?;
                                let iw = total_len(&idx);
                                if iw >= 32 || (a.len as u64) < (1u64 << iw) {
                                    return Err(ScmError::Invalid(format!(
                                        "`{}`: array of {} bits indexed by {} bits",
                                        v.name, a.len, iw
                                    )));
                                }
                                CComponent::Index { array: a, index: idx }
                            }
                            Component::Const { width, value } => {
                                if *width < 64 && value >> width != 0 {
                                    return Err(ScmError::DomainViolation(format!(
                                        "constant {value} exceeds {width} bits in `{}`",
                                        v.name
                                    )));
                                }
                                CComponent::Const(*value)
                            }
                            Component::Table { inputs, width, noise, table } => {
                                let ins = slices(inputs)?;
                                let iw = total_len(&ins);
                                if iw > 20 || table.len() != 1usize << iw {
                                    return Err(ScmError::Invalid(format!(
                                        "`{}`: table needs 2^{iw} rows",
                                        v.name
                                    )));
                                }
                                let probs = noise
                                    .iter()
                                    .map(|s| parse_rational(s))
                                    .collect::<Result<Vec<_>, _>>()?;
                                let probs = if probs.is_empty() {
                                    vec![BigRational::one()]
                                } else {
                                    probs
                                };
                                if probs.iter().any(|p| p.is_negative())
                                    || probs.iter().sum::<BigRational>() != BigRational::one()
                                {
                                    return Err(ScmError::Invalid(format!(
                                        "`{}`: noise probabilities must be non-negative and sum to 1",
                                        v.name
                                    )));
                                }
                                for row in table {
                                    if row.len() != probs.len() {
                                        return Err(ScmError::Invalid(format!(
                                            "`{}`: every table row needs one entry per noise outcome",
                                            v.name
                                        )));
                                    }
                                    if row.iter().any(|x| *width < 64 && x >> width != 0) {
                                        return Err(ScmError::DomainViolation(format!(
                                            "`{}`: table entry exceeds {width} bits",
                                            v.name
                                        )));
                                    }
                                }
                                let source = if probs.len() > 1 {
                                    let den = probs
                                        .iter()
                                        .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
                                    let weights = probs
                                        .iter()
                                        .map(|p| {
                                            (p * BigRational::from_integer(den.clone()))
                                                .to_integer()
                                                .to_u64()
                                                .ok_or(ScmError::Overflow)
                                        })
                                        .collect::<Result<Vec<_>, _>>()?;
                                    sources.push(NoiseSource {
                                        variable: i,
                                        weights,
                                        total: den.to_u64().ok_or(ScmError::Overflow)?,
                                    });
                                    Some(sources.len() - 1)
                                } else {
                                    None
                                };
                                CComponent::Table { inputs: ins, source, table: table.clone() }
                            }
                        };
                        let produced: u32 = comps.iter().map(|(_, w)| *w).sum();
                        if own_slices(&cc).any(|s| s.var == i && v.width - s.shift > produced) {
                            return Err(ScmError::Invalid(format!(
                                "`{}` reads its own bits before they are produced",
                                v.name
                            )));
                        }
                        comps.push((cc, w));
                    }
                    let total: u32 = comps.iter().map(|(_, w)| *w).sum();
                    if total != v.width {
                        return Err(ScmError::Invalid(format!(
                            "`{}` declares {} bits but its components produce {}",
                            v.name, v.width, total
                        )));
                    }
                    mechs.push(CMech::Chance(comps));
                }
                NodeKind::Utility => {
                    if !v.components.is_empty() {
                        return Err(ScmError::Invalid("the utility has no components".into()));
                    }
                    let mut terms = Vec::new();
                    for t in &v.terms {
                        match t {
                            Term::Indicator { weight, test } => {
                                let w = parse_rational(weight)?;
                                denoms.push(w.denom().clone());
                                let ct = match test {
                                    Test::Equal { lhs, rhs } => {
                                        CTest::Equal(slices(lhs)?, slices(rhs)?)
                                    }
                                    Test::IndexEq { array, index, value } => {
                                        let val = slice(value)?;
                                        if val.len != 1 {
                                            return Err(ScmError::Invalid(
                                                "index test compares a single bit".into(),
                                            ));
                                        }
                                        CTest::IndexEq(slice(array)?, slices(index)?, val)
                                    }
                                    Test::Compatible { w0, ws, u } => {
                                        let (w0, ws, u) = (slices(w0)?, slices(ws)?, slices(u)?);
                                        let k = total_len(&w0);
                                        let width = total_len(&u);
                                        if ws.iter().any(|s| s.len != 1)
                                            || Some(width as usize)
                                                != crate::bits::tower(ws.len(), k as usize)
                                        {
                                            return Err(ScmError::Invalid(
                                                "compatibility test widths do not match".into(),
                                            ));
                                        }
                                        CTest::Compatible { w0, k, ws, u, width }
                                    }
                                };
                                terms.push(RawTerm::Indicator(w, ct));
                            }
                            Term::Table { inputs, values } => {
                                let ins = slices(inputs)?;
                                let iw = total_len(&ins);
                                if iw > 20 || values.len() != 1usize << iw {
                                    return Err(ScmError::Invalid(
                                        "utility table needs one value per input".into(),
                                    ));
                                }
                                let vals = values
                                    .iter()
                                    .map(|s| parse_rational(s))
                                    .collect::<Result<Vec<_>, _>>()?;
                                denoms.extend(vals.iter().map(|r| r.denom().clone()));
                                terms.push(RawTerm::Table(ins, vals));
                            }
                        }
                    }
                    raw_utility = terms;
                    mechs.push(CMech::Utility(Vec::new()));
                }
            }
        }
        let mut den: i128 = 1;
        for d in &denoms {
            den = lcm_i128(den, to_i128(d)?)?;
        }
        let scale = |r: &BigRational| -> Result<i128, ScmError> {
            to_i128(&(r * BigRational::from_integer(BigInt::from(den))).to_integer())
        };
        let mut scaled = Vec::with_capacity(raw_utility.len());
        for t in raw_utility {
            scaled.push(match t {
                RawTerm::Indicator(w, test) => CTerm::Indicator(scale(&w)?, test),
                RawTerm::Table(ins, vals) => {
                    CTerm::Table(ins, vals.iter().map(scale).collect::<Result<_, _>>()?)
                }
            });
        }
        mechs[utility] = CMech::Utility(scaled);
        if !doc.variables[utility].components.is_empty() {
            return Err(ScmError::Invalid("the utility has no components".into()));
        }
        for (i, v) in doc.variables.iter().enumerate() {
            if parents[i].contains(&utility) {
                return Err(ScmError::Invalid(format!("`{}` is a child of the utility", v.name)));
            }
        }
        Ok(FiniteScm {
            names: doc.variables.iter().map(|v| v.name.clone()).collect(),
            kinds: doc.variables.iter().map(|v| v.kind).collect(),
            widths,
            parents,
            order,
            mechs,
            sources,
            utility,
            utility_denom: den,
            doc,
        })
    }

    pub fn doc(&self) -> &ScmDoc {
        &self.doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("model documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ScmError> {
        let doc: ScmDoc =
            serde_json::from_str(text).map_err(|e| ScmError::Invalid(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn var(&self, name: &str) -> Result<usize, ScmError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ScmError::UnknownVariable(name.to_string()))
    }

    pub fn kind(&self, v: usize) -> NodeKind {
        self.kinds[v]
    }

    pub fn width(&self, v: usize) -> u32 {
        self.widths[v]
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn utility(&self) -> usize {
        self.utility
    }

    pub fn decisions(&self) -> Vec<usize> {
        (0..self.len()).filter(|v| self.kinds[*v] == NodeKind::Decision).collect()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sources(&self) -> &[NoiseSource] {
        &self.sources
    }

    pub(crate) fn utility_denom(&self) -> i128 {
        self.utility_denom
    }

    /// The scoped graph with the model's parent sets.
    pub fn graph(&self) -> Result<ScopedGraph, crate::graph::GraphError> {
        let mut edges = Vec::new();
        let mut contexts = BTreeMap::new();
        for v in 0..self.len() {
            for p in &self.parents[v] {
                edges.push((self.names[*p].clone(), self.names[v].clone()));
            }
            if self.kinds[v] == NodeKind::Decision {
                contexts.insert(
                    self.names[v].clone(),
                    self.parents[v].iter().map(|p| self.names[*p].clone()).collect(),
                );
            }
        }
        ScopedGraph::from_doc(&GraphDoc {
            nodes: (0..self.len())
                .map(|v| NodeDoc { name: self.names[v].clone(), kind: self.kinds[v] })
                .collect(),
            edges,
            contexts,
            utility: self.names[self.utility].clone(),
        })
    }

    /// Number of exogenous worlds, or `None` past `u64`.
    pub fn world_count(&self) -> Option<u64> {
        self.sources.iter().try_fold(1u64, |acc, s| acc.checked_mul(s.weights.len() as u64))
    }

    /// All worlds with positive weight, as `(weight, outcome per source)`.
    /// Weights are over the common denominator [`Self::world_denominator`].
    pub fn worlds(&self, limit: u64) -> Result<Vec<(u128, Vec<u32>)>, ScmError> {
        let count = self.world_count().filter(|c| *c <= limit).ok_or_else(|| {
            ScmError::DomainExplosion(format!(
                "more than {limit} exogenous worlds; lower the widths or raise the limit"
            ))
        })?;
        let mut out = Vec::with_capacity(count as usize);
        let mut outcome = vec![0u32; self.sources.len()];
        loop {
            let w = self.sources.iter().zip(&outcome).try_fold(1u128, |acc, (s, o)| {
                acc.checked_mul(s.weights[*o as usize] as u128)
            });
            let w = w.ok_or(ScmError::Overflow)?;
            if w > 0 {
                out.push((w, outcome.clone()));
            }
            // odometer, last source fastest
            let mut i = self.sources.len();
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                outcome[i] += 1;
                if (outcome[i] as usize) < self.sources[i].weights.len() {
                    break;
                }
                outcome[i] = 0;
            }
        }
    }

    pub fn world_denominator(&self) -> Result<u128, ScmError> {
        self.sources
            .iter()
            .try_fold(1u128, |acc, s| acc.checked_mul(s.total as u128))
            .ok_or(ScmError::Overflow)
    }

    /// Fills `vals` in topological order. `decide(var, vals)` supplies
    /// decision values.
    pub(crate) fn run(
        &self,
        noise: &[u32],
        vals: &mut [u64],
        decide: &mut dyn FnMut(usize, &[u64]) -> Result<u64, ScmError>,
    ) -> Result<(), ScmError> {
        for &v in &self.order {
            vals[v] = match &self.mechs[v] {
                CMech::Decision => {
                    let x = decide(v, vals)?;
                    if self.widths[v] < 64 && x >> self.widths[v] != 0 {
                        return Err(ScmError::DomainViolation(format!(
                            "decision `{}` given {x}, outside {} bits",
                            self.names[v], self.widths[v]
                        )));
                    }
                    x
                }
                CMech::Chance(comps) => self.chance_value(v, comps, Some(noise), vals)?,
                CMech::Utility(_) => 0,
            };
        }
        Ok(())
    }

    fn chance_value(
        &self,
        v: usize,
        comps: &[(CComponent, u32)],
        noise: Option<&[u32]>,
        vals: &mut [u64],
    ) -> Result<u64, ScmError> {
        let needs_noise = || ScmError::Invalid(format!("`{}` is not deterministic", self.names[v]));
        let width = self.widths[v];
        let mut acc = 0u64;
        let mut produced = 0u32;
        vals[v] = 0;
        for (c, w) in comps {
            let part = match c {
                CComponent::Noise { source } => noise.ok_or_else(needs_noise)?[*source] as u64,
                CComponent::Copy(ss) => concat(ss, vals),
                CComponent::Index { array, index } => {
                    bit_at(array.get(vals), array.len, concat(index, vals))
                }
                CComponent::Const(x) => *x,
                CComponent::Table { inputs, source, table } => {
                    let row = concat(inputs, vals) as usize;
                    let col = match source {
                        Some(s) => noise.ok_or_else(needs_noise)?[*s] as usize,
                        None => 0,
                    };
                    table[row][col]
                }
            };
            if *w > 0 {
                acc = acc << w | part;
                produced += w;
                vals[v] = acc << (width - produced);
            }
        }
        Ok(acc)
    }

    /// Value of a noise-free chance variable given its parents in `vals`.
    pub fn mechanism_value(&self, v: usize, vals: &mut [u64]) -> Result<u64, ScmError> {
        match &self.mechs[v] {
            CMech::Chance(comps) => self.chance_value(v, comps, None, vals),
            _ => Err(ScmError::Invalid(format!("`{}` has no mechanism", self.names[v]))),
        }
    }

    /// Utility numerator over [`Self::utility_denom`].
    pub(crate) fn utility_numer(&self, vals: &[u64]) -> Result<i128, ScmError> {
        let CMech::Utility(terms) = &self.mechs[self.utility] else {
            unreachable!("utility index always holds a utility mechanism")
        };
        let mut y: i128 = 0;
        for t in terms {
            let add = match t {
                CTerm::Indicator(w, test) => {
                    if eval_test(test, vals) {
                        *w
                    } else {
                        0
                    }
                }
                CTerm::Table(ins, values) => values[concat(ins, vals) as usize],
            };
            y = y.checked_add(add).ok_or(ScmError::Overflow)?;
        }
        Ok(y)
    }

    pub fn utility_value(&self, vals: &[u64]) -> Result<BigRational, ScmError> {
        Ok(BigRational::new(
            BigInt::from(self.utility_numer(vals)?),
            BigInt::from(self.utility_denom),
        ))
    }

    /// Full assignment for one world. `exo` gives one outcome per noise
    /// source, in [`Self::sources`] order.
    pub fn evaluate(&self, policy: &Policy, exo: &[u32]) -> Result<Vec<u64>, ScmError> {
        if exo.len() != self.sources.len() {
            return Err(ScmError::DomainViolation(format!(
                "expected {} noise outcomes, got {}",
                self.sources.len(),
                exo.len()
            )));
        }
        for (o, s) in exo.iter().zip(&self.sources) {
            if *o as usize >= s.weights.len() {
                return Err(ScmError::DomainViolation("noise outcome out of range".into()));
            }
        }
        let mut vals = vec![0u64; self.len()];
        self.run(exo, &mut vals, &mut |v, vals| policy.decide(self, v, vals))?;
        Ok(vals)
    }

    pub fn expected_utility(&self, policy: &Policy) -> Result<BigRational, ScmError> {
        self.expected_utility_limited(policy, DEFAULT_WORLD_LIMIT)
    }

    pub fn expected_utility_limited(
        &self,
        policy: &Policy,
        limit: u64,
    ) -> Result<BigRational, ScmError> {
        let worlds = self.worlds(limit)?;
        let mut vals = vec![0u64; self.len()];
        let mut acc = BigInt::zero();
        for (w, noise) in &worlds {
            self.run(noise, &mut vals, &mut |v, vals| policy.decide(self, v, vals))?;
            acc += BigInt::from(*w) * BigInt::from(self.utility_numer(&vals)?);
        }
        let den = BigInt::from(self.world_denominator()?) * BigInt::from(self.utility_denom);
        Ok(BigRational::new(acc, den))
    }

    /// Replaces the mechanisms of the listed variables by constants.
    /// Decisions that are fixed become chance variables.
    pub fn intervene(&self, fixed: &BTreeMap<String, u64>) -> Result<FiniteScm, ScmError> {
        let mut doc = self.doc.clone();
        for (name, value) in fixed {
            let v = self.var(name)?;
            if v == self.utility {
                return Err(ScmError::UtilityRequested);
            }
            let w = self.widths[v];
            if w < 64 && value >> w != 0 {
                return Err(ScmError::DomainViolation(format!("{value} exceeds {w} bits of `{name}`")));
            }
            let var = &mut doc.variables[v];
            var.kind = NodeKind::Chance;
            var.components = if w == 0 {
                Vec::new()
            } else {
                vec![Component::Const { width: w, value: *value }]
            };
        }
        FiniteScm::from_doc(doc)
    }

    /// Exact marginal over `over` (no utility).
    pub fn joint_distribution(
        &self,
        policy: &Policy,
        over: &[usize],
    ) -> Result<BTreeMap<Vec<u64>, BigRational>, ScmError> {
        if over.contains(&self.utility) {
            return Err(ScmError::UtilityRequested);
        }
        let worlds = self.worlds(DEFAULT_WORLD_LIMIT)?;
        let mut acc: BTreeMap<Vec<u64>, u128> = BTreeMap::new();
        let mut vals = vec![0u64; self.len()];
        for (w, noise) in &worlds {
            self.run(noise, &mut vals, &mut |v, vals| policy.decide(self, v, vals))?;
            let key: Vec<u64> = over.iter().map(|v| vals[*v]).collect();
            let e = acc.entry(key).or_insert(0);
            *e = e.checked_add(*w).ok_or(ScmError::Overflow)?;
        }
        let den = BigInt::from(self.world_denominator()?);
        Ok(acc
            .into_iter()
            .map(|(k, w)| (k, BigRational::new(BigInt::from(w), den.clone())))
            .collect())
    }

    /// Exact test of `A ⊥ B | C` under the given policy.
    pub fn ci_oracle(
        &self,
        policy: &Policy,
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> Result<bool, ScmError> {
        let sa: BTreeSet<usize> = a.iter().copied().collect();
        let sb: BTreeSet<usize> = b.iter().copied().collect();
        let sc: BTreeSet<usize> = c.iter().copied().collect();
        if !sa.is_disjoint(&sb) || !sa.is_disjoint(&sc) || !sb.is_disjoint(&sc) {
            return Err(ScmError::Invalid("independence query sets must be disjoint".into()));
        }
        let over: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        let joint = self.joint_distribution(policy, &over)?;
        let (na, nb) = (a.len(), b.len());
        let mut p_abc: BTreeMap<(Vec<u64>, Vec<u64>, Vec<u64>), BigRational> = BTreeMap::new();
        let mut p_ac: BTreeMap<(Vec<u64>, Vec<u64>), BigRational> = BTreeMap::new();
        let mut p_bc: BTreeMap<(Vec<u64>, Vec<u64>), BigRational> = BTreeMap::new();
        let mut p_c: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
        for (k, p) in joint {
            let (ka, rest) = k.split_at(na);
            let (kb, kc) = rest.split_at(nb);
            *p_ac.entry((ka.to_vec(), kc.to_vec())).or_insert_with(BigRational::zero) += &p;
            *p_bc.entry((kb.to_vec(), kc.to_vec())).or_insert_with(BigRational::zero) += &p;
            *p_c.entry(kc.to_vec()).or_insert_with(BigRational::zero) += &p;
            p_abc.insert((ka.to_vec(), kb.to_vec(), kc.to_vec()), p);
        }
        for ((ka, kc), pac) in &p_ac {
            for ((kb, kc2), pbc) in &p_bc {
                if kc != kc2 {
                    continue;
                }
                let pabc = p_abc
                    .get(&(ka.clone(), kb.clone(), kc.clone()))
                    .cloned()
                    .unwrap_or_else(BigRational::zero);
                if pabc * &p_c[kc] != pac * pbc {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn own_slices(c: &CComponent) -> Box<dyn Iterator<Item = &CSlice> + '_> {
    match c {
        CComponent::Copy(ss) => Box::new(ss.iter()),
        CComponent::Index { array, index } => Box::new(std::iter::once(array).chain(index)),
        CComponent::Table { inputs, .. } => Box::new(inputs.iter()),
        CComponent::Noise { .. } | CComponent::Const(_) => Box::new(std::iter::empty()),
    }
}

fn eval_test(t: &CTest, vals: &[u64]) -> bool {
    match t {
        CTest::Equal(l, r) => concat(l, vals) == concat(r, vals),
        CTest::IndexEq(array, index, value) => {
            bit_at(array.get(vals), array.len, concat(index, vals)) == value.get(vals)
        }
        CTest::Compatible { w0, k, ws, u, width } => {
            let report: Vec<bool> = ws.iter().map(|s| s.get(vals) == 1).collect();
            compatible_packed(concat(w0, vals), *k, &report, concat(u, vals), *width)
        }
    }
}

fn topo_order(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (v, ps) in parents.iter().enumerate() {
        for p in ps {
            children[*p].push(v);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|v| indeg[*v] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        out.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (out.len() == n).then_some(out)
}

/// Deterministic decision rules. Each rule reads a list of context
/// variables and maps their concatenated value to an action.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Policy {
    pub rules: BTreeMap<usize, DecisionRule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRule {
    pub contexts: Vec<usize>,
    pub table: Vec<u64>,
}

impl Policy {
    pub fn new() -> Self {
        Policy::default()
    }

    pub fn with_rule(mut self, decision: usize, contexts: Vec<usize>, table: Vec<u64>) -> Self {
        self.rules.insert(decision, DecisionRule { contexts, table });
        self
    }

    /// Builds a rule from a function of the context values.
    pub fn with_fn(
        self,
        scm: &FiniteScm,
        decision: usize,
        contexts: Vec<usize>,
        f: impl Fn(&[u64]) -> u64,
    ) -> Self {
        let table = context_space(scm, &contexts)
            .map(|vals| f(&vals))
            .collect();
        self.with_rule(decision, contexts, table)
    }

    pub(crate) fn decide(&self, scm: &FiniteScm, v: usize, vals: &[u64]) -> Result<u64, ScmError> {
        let rule =
            self.rules.get(&v).ok_or_else(|| ScmError::IncompletePolicy(scm.name(v).to_string()))?;
        let idx = context_index(scm, &rule.contexts, vals);
        rule.table
            .get(idx as usize)
            .copied()
            .ok_or_else(|| ScmError::DomainViolation(format!("rule for `{}` too short", scm.name(v))))
    }
}

/// Concatenated context value used as a rule index.
#[inline]
pub fn context_index(scm: &FiniteScm, contexts: &[usize], vals: &[u64]) -> u64 {
    contexts.iter().fold(0u64, |acc, c| {
        let w = scm.width(*c);
        if w == 0 {
            acc
        } else {
            acc << w | vals[*c]
        }
    })
}

/// Every assignment to `contexts`, in rule-index order.
pub fn context_space<'a>(
    scm: &'a FiniteScm,
    contexts: &'a [usize],
) -> impl Iterator<Item = Vec<u64>> + 'a {
    let total: u32 = contexts.iter().map(|c| scm.width(*c)).sum();
    (0..1u64 << total).map(move |mut idx| {
        let mut out = vec![0u64; contexts.len()];
        for (i, c) in contexts.iter().enumerate().rev() {
            let w = scm.width(*c);
            out[i] = idx & ((1u64 << w) - 1);
            idx >>= w;
        }
        out
    })
}

/// A random model on the graph: every chance node gets a noisy table over
/// all of its parents with full-support weights, decisions get random widths
/// and the utility is a random table with small rational values.
pub fn random_scm(g: &ScopedGraph, seed: u64, bits_per_node: u32) -> Result<FiniteScm, ScmError> {
    assert!((1..=2).contains(&bits_per_node), "desk-scale widths only");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut widths = BTreeMap::new();
    let mut vars = Vec::new();
    for v in g.topological_order() {
        let name = g.name(v);
        let parents: Vec<&str> = g.parents(v).iter().map(|p| g.name(*p)).collect();
        let in_slices: Vec<Slice> = g
            .parents(v)
            .iter()
            .map(|p| Slice::new(g.name(*p), 0, widths[g.name(*p)]))
            .collect();
        let in_width: u32 = in_slices.iter().map(|s| s.len).sum();
        match g.kind(v) {
            NodeKind::Decision => {
                let w = rng.gen_range(1..=bits_per_node);
                widths.insert(name, w);
                vars.push(VariableDoc::decision(name, &parents, w));
            }
            NodeKind::Chance => {
                let w = rng.gen_range(1..=bits_per_node);
                widths.insert(name, w);
                let outcomes = if in_width == 0 { 1usize << w } else { 2 };
                let weights: Vec<u64> = (0..outcomes).map(|_| rng.gen_range(1..=4)).collect();
                let total: u64 = weights.iter().sum();
                let noise = weights.iter().map(|x| format!("{x}/{total}")).collect();
                let table = (0..1usize << in_width)
                    .map(|_| {
                        if in_width == 0 {
                            (0..outcomes as u64).collect()
                        } else {
                            (0..outcomes).map(|_| rng.gen_range(0..1u64 << w)).collect()
                        }
                    })
                    .collect();
                vars.push(VariableDoc::chance(
                    name,
                    &parents,
                    vec![Component::Table { inputs: in_slices, width: w, noise, table }],
                ));
            }
            NodeKind::Utility => {
                let values =
                    (0..1usize << in_width).map(|_| format!("{}/4", rng.gen_range(0..=12))).collect();
                vars.push(VariableDoc::utility(
                    name,
                    &parents,
                    vec![Term::Table { inputs: in_slices, values }],
                ));
            }
        }
    }
    FiniteScm::from_doc(ScmDoc { variables: vars })
}
