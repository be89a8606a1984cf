//! Exact MEU and value of information by deterministic policy enumeration.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scm::{context_index, FiniteScm, Policy, ScmError, DEFAULT_WORLD_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error(
        "policy space too large: {total} deterministic policies, {enumerated} to enumerate, budget {budget}"
    )]
    PolicySpaceTooLarge { total: BigUint, enumerated: BigUint, budget: u64 },
    #[error("`{context}` is not a context of `{decision}`")]
    NotAContext { decision: String, context: String },
    #[error("`{0}` is not a decision")]
    NotADecision(String),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Maximum number of policies to enumerate explicitly.
    pub budget: u64,
    pub threads: usize,
    pub world_limit: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { budget: 1 << 24, threads: 1, world_limit: DEFAULT_WORLD_LIMIT }
    }
}

/// The context each decision may read. Always a subset of the model's
/// parent set, kept in ascending variable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    pub contexts: BTreeMap<usize, Vec<usize>>,
}

impl Scope {
    pub fn full(scm: &FiniteScm) -> Scope {
        let contexts = scm
            .decisions()
            .into_iter()
            .map(|d| {
                let mut ps = scm.parents(d).to_vec();
                ps.sort_unstable();
                (d, ps)
            })
            .collect();
        Scope { contexts }
    }

    /// Removes `z` from the contexts of `x`.
    pub fn without(&self, scm: &FiniteScm, x: usize, z: usize) -> Result<Scope, PolicyError> {
        let ctx = self
            .contexts
            .get(&x)
            .ok_or_else(|| PolicyError::NotADecision(scm.name(x).to_string()))?;
        if !ctx.contains(&z) {
            return Err(PolicyError::NotAContext {
                decision: scm.name(x).to_string(),
                context: scm.name(z).to_string(),
            });
        }
        let mut out = self.clone();
        out.contexts.get_mut(&x).expect("checked above").retain(|c| *c != z);
        Ok(out)
    }

    /// Adds `z` back to the contexts of `x`. Only model parents are allowed.
    pub fn with(&self, scm: &FiniteScm, x: usize, z: usize) -> Result<Scope, PolicyError> {
        if !self.contexts.contains_key(&x) {
            return Err(PolicyError::NotADecision(scm.name(x).to_string()));
        }
        if !scm.parents(x).contains(&z) {
            return Err(PolicyError::NotAContext {
                decision: scm.name(x).to_string(),
                context: scm.name(z).to_string(),
            });
        }
        let mut out = self.clone();
        let ctx = out.contexts.get_mut(&x).expect("checked above");
        if !ctx.contains(&z) {
            ctx.push(z);
            ctx.sort_unstable();
        }
        Ok(out)
    }

    /// Applies edits of the form `-Z->X` or `+Z->X`.
    pub fn edit(&self, scm: &FiniteScm, edit: &str) -> Result<Scope, PolicyError> {
        let bad = || ScmError::Invalid(format!("scope edit `{edit}` is not `±Z->X`"));
        let (sign, rest) = edit.split_at(edit.chars().next().map_or(0, |c| c.len_utf8()));
        let (z, x) = rest.split_once("->").ok_or_else(bad)?;
        let (z, x) = (scm.var(z.trim())?, scm.var(x.trim())?);
        match sign {
            "-" => self.without(scm, x, z),
            "+" => self.with(scm, x, z),
            _ => Err(bad().into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Slot {
    decision: usize,
    contexts: Vec<usize>,
    rows: u64,
    actions: u64,
}

/// Mixed-radix index over the tables of the listed decisions.
#[derive(Debug, Clone)]
struct Space {
    slots: Vec<Slot>,
}

impl Space {
    fn new(scm: &FiniteScm, scope: &Scope, decisions: &[usize]) -> Result<Space, ScmError> {
        let mut slots = Vec::new();
        for &d in decisions {
            let contexts = scope.contexts[&d].clone();
            let cw: u32 = contexts.iter().map(|c| scm.width(*c)).sum();
            if cw > 40 || scm.width(d) > 40 {
                return Err(ScmError::DomainExplosion(format!(
                    "decision `{}` has a table beyond enumeration range",
                    scm.name(d)
                )));
            }
            slots.push(Slot { decision: d, contexts, rows: 1 << cw, actions: 1 << scm.width(d) });
        }
        Ok(Space { slots })
    }

    fn count(&self) -> BigUint {
        self.slots.iter().fold(BigUint::one(), |acc, s| {
            acc * BigUint::from(s.actions).pow(s.rows.min(u32::MAX as u64) as u32)
        })
    }

    /// Policy number `index`; the last row of the last decision varies fastest.
    fn decode(&self, mut index: u64) -> Policy {
        let mut tables: Vec<Vec<u64>> =
            self.slots.iter().map(|s| vec![0; s.rows as usize]).collect();
        for (s, t) in self.slots.iter().zip(tables.iter_mut()).rev() {
            for cell in t.iter_mut().rev() {
                *cell = index % s.actions;
                index /= s.actions;
            }
        }
        self.slots
            .iter()
            .zip(tables)
            .fold(Policy::new(), |p, (s, t)| p.with_rule(s.decision, s.contexts.clone(), t))
    }
}

/// Exact policy count for `scope`.
pub fn policy_count(scm: &FiniteScm, scope: &Scope) -> Result<BigUint, PolicyError> {
    let ds: Vec<usize> = scope.contexts.keys().copied().collect();
    Ok(Space::new(scm, scope, &ds)?.count())
}

/// Every deterministic policy for `scope` in a fixed order.
pub fn enumerate_policies(
    scm: &FiniteScm,
    scope: &Scope,
    budget: u64,
) -> Result<impl Iterator<Item = Policy>, PolicyError> {
    let ds: Vec<usize> = scope.contexts.keys().copied().collect();
    let space = Space::new(scm, scope, &ds)?;
    let total = space.count();
    if total > BigUint::from(budget) {
        return Err(PolicyError::PolicySpaceTooLarge {
            enumerated: total.clone(),
            total,
            budget,
        });
    }
    let n = total.to_u64().expect("bounded by budget");
    Ok((0..n).map(move |i| space.decode(i)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeuResult {
    pub value: BigRational,
    pub witness: Policy,
    /// Policies enumerated explicitly.
    pub policies_examined: u64,
    /// Size of the full deterministic policy space.
    pub policy_count: BigUint,
}

/// Maximum expected utility over deterministic policies.
///
/// The last decision in topological order has no decision descendants, so
/// its best response to the other rules is a per-context argmax. Only the
/// remaining decisions are enumerated.
pub fn meu(scm: &FiniteScm, scope: &Scope, limits: &SearchLimits) -> Result<MeuResult, PolicyError> {
    let order_pos: BTreeMap<usize, usize> =
        scm.order().iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut ds: Vec<usize> = scope.contexts.keys().copied().collect();
    ds.sort_by_key(|d| order_pos[d]);
    let Some(leaf) = ds.pop() else {
        let value = scm.expected_utility_limited(&Policy::new(), limits.world_limit)?;
        return Ok(MeuResult {
            value,
            witness: Policy::new(),
            policies_examined: 1,
            policy_count: BigUint::one(),
        });
    };
    ds.sort_unstable();
    let outer = Space::new(scm, scope, &ds)?;
    let leaf_space = Space::new(scm, scope, &[leaf])?;
    let total = outer.count() * leaf_space.count();
    let enumerated = outer.count();
    if enumerated > BigUint::from(limits.budget) {
        return Err(PolicyError::PolicySpaceTooLarge { total, enumerated, budget: limits.budget });
    }
    let n = enumerated.to_u64().expect("bounded by budget");
    let worlds = scm.worlds(limits.world_limit)?;
    let leaf_slot = &leaf_space.slots[0];

    let search = |range: std::ops::Range<u64>| -> Result<Option<(BigInt, u64, Vec<u64>)>, ScmError> {
        let mut best: Option<(BigInt, u64, Vec<u64>)> = None;
        let mut vals = vec![0u64; scm.len()];
        let mut score = vec![BigInt::zero(); (leaf_slot.rows * leaf_slot.actions) as usize];
        for idx in range {
            let policy = outer.decode(idx);
            score.iter_mut().for_each(|s| s.set_zero());
            for (w, noise) in &worlds {
                for a in 0..leaf_slot.actions {
                    let mut row = 0;
                    scm.run(noise, &mut vals, &mut |v, vals| {
                        if v == leaf {
                            row = context_index(scm, &leaf_slot.contexts, vals);
                            Ok(a)
                        } else {
                            policy.decide(scm, v, vals)
                        }
                    })?;
                    let u = scm.utility_numer(&vals)?;
                    if u != 0 {
                        score[(row * leaf_slot.actions + a) as usize] +=
                            BigInt::from(*w) * BigInt::from(u);
                    }
                }
            }
            let mut value = BigInt::zero();
            let mut table = Vec::with_capacity(leaf_slot.rows as usize);
            for row in score.chunks(leaf_slot.actions as usize) {
                let (a, s) = row
                    .iter()
                    .enumerate()
                    .fold((0, &row[0]), |(ba, bs), (a, s)| if s > bs { (a, s) } else { (ba, bs) });
                value += s;
                table.push(a as u64);
            }
            if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
                best = Some((value, idx, table));
            }
        }
        Ok(best)
    };

    let threads = limits.threads.max(1) as u64;
    let results: Vec<Result<Option<(BigInt, u64, Vec<u64>)>, ScmError>> = if threads == 1 || n < 2 {
        vec![search(0..n)]
    } else {
        let chunk = n.div_ceil(threads);
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let lo = (t * chunk).min(n);
                    let hi = ((t + 1) * chunk).min(n);
                    let search = &search;
                    sc.spawn(move || search(lo..hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    // ranges are in index order, so strict improvement keeps the first maximum
    let mut best: Option<(BigInt, u64, Vec<u64>)> = None;
    for r in results {
        if let Some(cand) = r? {
            if best.as_ref().is_none_or(|(b, _, _)| cand.0 > *b) {
                best = Some(cand);
            }
        }
    }
    let (numer, idx, table) = best.expect("at least one policy");
    let witness = outer.decode(idx).with_rule(leaf, leaf_slot.contexts.clone(), table);
    let den = BigInt::from(scm.world_denominator()?) * BigInt::from(scm.utility_denom());
    Ok(MeuResult {
        value: BigRational::new(numer, den),
        witness,
        policies_examined: n,
        policy_count: total,
    })
}

/// Plain enumeration of every policy. Slow; kept as a reference.
pub fn meu_exhaustive(
    scm: &FiniteScm,
    scope: &Scope,
    limits: &SearchLimits,
) -> Result<MeuResult, PolicyError> {
    let mut best: Option<(BigRational, Policy)> = None;
    let mut examined = 0;
    for p in enumerate_policies(scm, scope, limits.budget)? {
        examined += 1;
        let v = scm.expected_utility_limited(&p, limits.world_limit)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, p));
        }
    }
    let (value, witness) = best.expect("policy spaces are never empty");
    Ok(MeuResult { value, witness, policies_examined: examined, policy_count: policy_count(scm, scope)? })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoiResult {
    pub with: MeuResult,
    pub without: MeuResult,
    pub value: BigRational,
}

/// MEU with `z` in the contexts of `x` minus MEU without it.
pub fn voi(
    scm: &FiniteScm,
    scope: &Scope,
    x: usize,
    z: usize,
    limits: &SearchLimits,
) -> Result<VoiResult, PolicyError> {
    let reduced = scope.without(scm, x, z)?;
    let with = meu(scm, scope, limits)?;
    let without = meu(scm, &reduced, limits)?;
    let value = &with.value - &without.value;
    Ok(VoiResult { with, without, value })
}

/// A behavioural policy: per decision and context row, integer weights over
/// actions summing to `total`.
#[derive(Debug, Clone)]
struct Behavioural {
    rules: BTreeMap<usize, (Vec<usize>, Vec<Vec<(u64, u64)>>)>,
    total: u64,
}

fn random_behavioural(scm: &FiniteScm, scope: &Scope, rng: &mut ChaCha8Rng) -> Behavioural {
    const TOTAL: u64 = 8;
    let mut rules = BTreeMap::new();
    for (d, ctx) in &scope.contexts {
        let cw: u32 = ctx.iter().map(|c| scm.width(*c)).sum();
        let actions = 1u64 << scm.width(*d);
        let rows = (0..1u64 << cw)
            .map(|_| {
                let a = rng.gen_range(0..actions);
                let b = rng.gen_range(0..actions);
                let wa = rng.gen_range(0..=TOTAL);
                if a == b || wa == TOTAL {
                    vec![(a, TOTAL)]
                } else if wa == 0 {
                    vec![(b, TOTAL)]
                } else {
                    vec![(a, wa), (b, TOTAL - wa)]
                }
            })
            .collect();
        rules.insert(*d, (ctx.clone(), rows));
    }
    Behavioural { rules, total: TOTAL }
}

fn behavioural_value(scm: &FiniteScm, pi: &Behavioural, limit: u64) -> Result<BigRational, ScmError> {
    fn branch(
        scm: &FiniteScm,
        pi: &Behavioural,
        noise: &[u32],
        fixed: &mut BTreeMap<usize, u64>,
        weight: u128,
        acc: &mut BigInt,
    ) -> Result<(), ScmError> {
        let mut vals = vec![0u64; scm.len()];
        let mut pending = None;
        let r = scm.run(noise, &mut vals, &mut |v, vals| {
            if let Some(a) = fixed.get(&v) {
                return Ok(*a);
            }
            let (ctx, rows) = &pi.rules[&v];
            // stop at the first unresolved decision and branch on it
            pending = Some((v, rows[context_index(scm, ctx, vals) as usize].clone()));
            Err(ScmError::Overflow)
        });
        match (r, pending) {
            (Ok(()), _) => {
                *acc += BigInt::from(weight) * BigInt::from(scm.utility_numer(&vals)?);
                Ok(())
            }
            (Err(_), Some((v, dist))) => {
                for (a, w) in dist {
                    fixed.insert(v, a);
                    branch(scm, pi, noise, fixed, weight * w as u128, acc)?;
                }
                fixed.remove(&v);
                Ok(())
            }
            (Err(e), None) => Err(e),
        }
    }
    let mut acc = BigInt::zero();
    let depth = pi.rules.len() as u32;
    for (w, noise) in scm.worlds(limit)? {
        branch(scm, pi, &noise, &mut BTreeMap::new(), w, &mut acc)?;
    }
    let den = BigInt::from(scm.world_denominator()?)
        * BigInt::from(scm.utility_denom())
        * BigInt::from(pi.total).pow(depth);
    Ok(BigRational::new(acc, den))
}

/// Samples behavioural policies and checks that none beats `meu_value`.
pub fn stochastic_bound_check(
    scm: &FiniteScm,
    scope: &Scope,
    meu_value: &BigRational,
    samples: usize,
    seed: u64,
) -> Result<bool, PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let pi = random_behavioural(scm, scope, &mut rng);
        if behavioural_value(scm, &pi, DEFAULT_WORLD_LIMIT)? > *meu_value {
            return Ok(false);
        }
    }
    Ok(true)
}
