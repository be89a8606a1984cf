//! Stored MEU constants checked against hand-written enumerations.

use std::collections::BTreeMap;

use materiality::fixtures::scm_fixture;
use materiality::policy::{voi, Scope, SearchLimits};
use materiality::scm::{parse_rational, FiniteScm};
use num_bigint::BigInt;
use num_rational::BigRational;

fn bit(v: u64, width: u32, i: u64) -> u64 {
    v >> (width as u64 - 1 - i) & 1
}

/// Value of the best per-context response when the last decision sees
/// `ctx` and scores `score(action)` in each equally likely world.
fn best_response<F>(worlds: Vec<(Vec<u64>, F)>, actions: u64) -> (i64, usize)
where
    F: Fn(u64) -> i64,
{
    let n = worlds.len();
    let mut by_ctx: BTreeMap<Vec<u64>, Vec<i64>> = BTreeMap::new();
    for (ctx, score) in worlds {
        let row = by_ctx.entry(ctx).or_insert_with(|| vec![0; actions as usize]);
        for a in 0..actions {
            row[a as usize] += score(a);
        }
    }
    (by_ctx.values().map(|row| *row.iter().max().unwrap()).sum(), n)
}

fn stored(name: &str) -> (BigRational, BigRational) {
    let f = scm_fixture(name).unwrap();
    let m = FiniteScm::from_doc(f.doc()).unwrap();
    let r = voi(&m, &Scope::full(&m), m.var(f.decision).unwrap(), m.var(f.context).unwrap(), &SearchLimits::default())
        .unwrap();
    assert_eq!(r.with.value, parse_rational(f.meu_with).unwrap());
    assert_eq!(r.without.value, parse_rational(f.meu_without).unwrap());
    (r.with.value, r.without.value)
}

fn frac(n: i64, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d as i64))
}

/// X picks a bit from Z (or a constant), then X' best-responds to
/// `(W', Z, Z')` with W' = <Z', U'[Z']> and Y = [Z = X'[0]] + [U'[X'[0]] = X'[1]].
fn soluble_indexed(x_rule: impl Fn(u64) -> u64) -> (i64, usize) {
    let mut worlds = Vec::new();
    for z in 0..2u64 {
        for u in 0..4u64 {
            let zp = x_rule(z);
            let wp = zp << 1 | bit(u, 2, zp);
            let score = move |a: u64| {
                let (a0, a1) = (bit(a, 2, 0), bit(a, 2, 1));
                (z == a0) as i64 + (bit(u, 2, a0) == a1) as i64
            };
            worlds.push((vec![wp, z, zp], score));
        }
    }
    best_response(worlds, 4)
}

#[test]
fn soluble_indexed_matches_enumeration() {
    let (with, without) = stored("soluble-indexed");
    let best_with = (0..4u64)
        .map(|f| soluble_indexed(move |z| f >> z & 1))
        .map(|(v, n)| frac(v, n))
        .max()
        .unwrap();
    let best_without = (0..2u64).map(|x| soluble_indexed(move |_| x)).map(|(v, n)| frac(v, n)).max().unwrap();
    assert_eq!(best_with, with);
    assert_eq!(best_without, without);
    assert_eq!(without, parse_rational("7/4").unwrap());
}

#[test]
fn xor_chain_matches_enumeration() {
    let (with, without) = stored("xor-chain");
    for (see_z, expected) in [(true, with), (false, without)] {
        let mut worlds = Vec::new();
        for z in 0..2u64 {
            for u1 in 0..2u64 {
                for u2 in 0..2u64 {
                    let (w1, w2) = (z ^ u1, u1 ^ u2);
                    let ctx = if see_z { vec![w1, w2, z] } else { vec![w1, w2] };
                    worlds.push((ctx, move |a: u64| (a == u2) as i64));
                }
            }
        }
        let (v, n) = best_response(worlds, 2);
        assert_eq!(frac(v, n), expected);
    }
}

#[test]
fn remember_decision_matches_enumeration() {
    let (with, without) = stored("remember-decision-2");
    // Z0 = g(U); X0 sees Z0 or nothing; Y = [U = X0].
    let mut best = [frac(0, 1), frac(0, 1)];
    for g in 0..4u64 {
        for (i, see) in [true, false].into_iter().enumerate() {
            let worlds = (0..2u64)
                .map(|u| {
                    let z0 = g >> u & 1;
                    (if see { vec![z0] } else { vec![] }, move |a: u64| (a == u) as i64)
                })
                .collect();
            let (v, n) = best_response(worlds, 2);
            best[i] = best[i].clone().max(frac(v, n));
        }
    }
    assert_eq!(best, [with, without]);
}
