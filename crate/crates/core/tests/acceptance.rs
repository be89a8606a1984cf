//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use materiality::bits::{adversarial_forks, consistent, tower, Bitstring};
use materiality::builder::{compliant_policy, synthesize, BuildConfig};
use materiality::check::{check_graph, Verdict};
use materiality::criteria::{
    condition_one, derived_contexts, fix_point, lb_factorizable, solubility, SearchConfig,
};
use materiality::fixtures::{graph_fixture, graph_fixtures, scm_fixture, scm_fixtures, ExpectedVerdict};
use materiality::policy::{meu, stochastic_bound_check, voi, Scope, SearchLimits};
use materiality::random::random_graph;
use materiality::scm::{parse_rational, random_scm, FiniteScm, Policy};
use materiality::separation::{closure, separated, separated1};
use materiality::{Node, NodeSet, ScopedGraph};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(s: &str) -> BigRational {
    parse_rational(s).unwrap()
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn limits() -> SearchLimits {
    SearchLimits::default()
}

fn fixture_model(name: &str) -> Result<FiniteScm, String> {
    let f = scm_fixture(name).ok_or_else(|| format!("missing fixture {name}"))?;
    FiniteScm::from_doc(f.doc()).map_err(|e| e.to_string())
}

fn fixture_voi(name: &str) -> Result<materiality::policy::VoiResult, String> {
    let f = scm_fixture(name).ok_or_else(|| format!("missing fixture {name}"))?;
    let m = fixture_model(name)?;
    let x = m.var(f.decision).map_err(|e| e.to_string())?;
    let z = m.var(f.context).map_err(|e| e.to_string())?;
    voi(&m, &Scope::full(&m), x, z, &limits()).map_err(|e| e.to_string())
}

fn var(m: &FiniteScm, name: &str) -> Result<usize, String> {
    m.var(name).map_err(|e| e.to_string())
}

/// Bit `i` of a `width`-bit value, counted from the left.
fn bit(v: u64, width: u32, i: u32) -> u64 {
    v >> (width - 1 - i) & 1
}

fn criterion_1() -> Outcome {
    let r = fixture_voi("yes-voi")?;
    ensure(r.with.value == q("1"), || format!("MEU with Z = {}", r.with.value))?;
    ensure(r.without.value == q("1/2"), || format!("MEU without Z = {}", r.without.value))?;
    ensure(r.value == q("1/2"), || format!("VoI = {}", r.value))?;
    // Hand enumeration: Z uniform, X = f(Z), Y = [X = Z].
    let with = (0..4u32)
        .map(|f| (0..2u32).filter(|z| (f >> z & 1) == *z).count())
        .max()
        .unwrap();
    let without = (0..2u32).map(|x| (0..2u32).filter(|z| x == *z).count()).max().unwrap();
    ensure(
        ratio(with as i64, 2) == r.with.value && ratio(without as i64, 2) == r.without.value,
        || format!("oracle gives {with}/2 and {without}/2"),
    )
}

fn criterion_2() -> Outcome {
    let g = graph_fixture("linear-no-voi").unwrap().graph();
    for seed in 0..20 {
        let m = random_scm(&g, seed, 1).map_err(|e| e.to_string())?;
        let r = voi(&m, &Scope::full(&m), var(&m, "X")?, var(&m, "Z")?, &limits())
            .map_err(|e| e.to_string())?;
        ensure(r.value.is_zero(), || format!("seed {seed}: VoI = {}", r.value))?;
    }
    Ok(())
}

fn criterion_3() -> Outcome {
    let r = fixture_voi("yes-voi-no-sr")?;
    ensure(r.with.value == q("1"), || format!("MEU with X = {}", r.with.value))?;
    ensure(r.without.value == q("1/2"), || format!("MEU without X = {}", r.without.value))?;
    let g = graph_fixture("yes-voi-no-sr").unwrap().graph();
    ensure(solubility(&g).is_none(), || "graph reported soluble".into())?;
    let xp = g.set_of(&["X'"]).unwrap();
    let z = g.set_of(&["X"]).unwrap();
    let c = derived_contexts(&g, &xp, &z);
    ensure(!condition_one(&g, &xp, &c), || "condition I holds".into())?;
    let w = lb_factorizable(&g, &xp, &z, &SearchConfig::default()).map_err(|e| e.to_string())?;
    ensure(w.is_none(), || "factorization witness found".into())
}

fn criterion_4() -> Outcome {
    let r = fixture_voi("finite-domain-1")?;
    ensure(r.value.is_zero(), || format!("VoI = {}", r.value))?;
    ensure(r.with.value == q("1"), || format!("MEU = {}", r.with.value))?;
    let m = fixture_model("finite-domain-1")?;
    let (z0, w1, xp, x0) = (var(&m, "Z0")?, var(&m, "W1")?, var(&m, "X'")?, var(&m, "X0")?);
    // X' recovers U1 = W1 xor Z0; X0 copies X' without looking at Z0.
    let mut ctx = vec![w1, z0];
    ctx.sort_unstable();
    let p = Policy::new()
        .with_fn(&m, xp, ctx.clone(), |v| v[0] ^ v[1])
        .with_fn(&m, x0, vec![xp], |v| v[0]);
    let eu = m.expected_utility(&p).map_err(|e| e.to_string())?;
    ensure(eu == q("1"), || format!("witness policy scores {eu}"))
}

/// Exhaustive MEU of finite-domain-2 with X0 blind to Z0, written out by hand.
fn finite_domain_2_without() -> BigRational {
    let mut best = 0;
    for xp_rule in 0..16u32 {
        for x0_rule in 0..16u32 {
            let mut hits = 0;
            for z0 in 0..2u64 {
                for u1 in 0..4u64 {
                    let w1 = bit(u1, 2, z0 as u32);
                    let xp = (xp_rule >> (w1 << 1 | z0)) as u64 & 1;
                    let x0 = (x0_rule >> (2 * xp)) as u64 & 3;
                    if bit(u1, 2, bit(x0, 2, 0) as u32) == bit(x0, 2, 1) {
                        hits += 1;
                    }
                }
            }
            best = best.max(hits);
        }
    }
    ratio(best, 8)
}

fn criterion_5() -> Outcome {
    let r = fixture_voi("finite-domain-2")?;
    ensure(r.value.is_positive(), || format!("VoI = {}", r.value))?;
    let oracle = finite_domain_2_without();
    ensure(oracle == r.without.value, || {
        format!("oracle {} vs search {}", oracle, r.without.value)
    })?;
    ensure(r.without.value == q("3/4"), || format!("MEU without Z0 = {}", r.without.value))
}

fn criterion_6() -> Outcome {
    let r = fixture_voi("obstacle-2")?;
    ensure(r.with.value == q("1099/100"), || format!("MEU with Z0 = {}", r.with.value))?;
    ensure(r.without.value == q("1095/100"), || format!("MEU without Z0 = {}", r.without.value))?;
    ensure(r.value == q("1/25"), || format!("VoI = {}", r.value))
}

fn criterion_7() -> Outcome {
    let r = fixture_voi("superimposed")?;
    ensure(r.without.value == q("11"), || format!("MEU without Z0 = {}", r.without.value))?;
    ensure(r.value.is_zero(), || format!("VoI = {}", r.value))?;
    let m = fixture_model("superimposed")?;
    let id = |n| var(&m, n);
    let (v, z0, x1, x2, x3, x0) = (id("V")?, id("Z0")?, id("X1")?, id("X2")?, id("X3")?, id("X0")?);
    let sorted = |mut c: Vec<usize>| {
        c.sort_unstable();
        c
    };
    let x1_ctx = sorted(vec![v, z0]);
    let z_first = x1_ctx[0] == z0;
    let x0_ctx = sorted(vec![x1, x3]);
    let x3_first = x0_ctx[0] == x3;
    let p = Policy::new()
        .with_fn(&m, x1, x1_ctx, move |c| {
            let (z, vv) = if z_first { (c[0], c[1]) } else { (c[1], c[0]) };
            bit(vv, 2, z as u32)
        })
        .with_fn(&m, x2, vec![z0], |c| c[0])
        .with_fn(&m, x3, vec![x2], |c| c[0])
        .with_fn(&m, x0, x0_ctx, move |c| {
            let (a, b) = if x3_first { (c[0], c[1]) } else { (c[1], c[0]) };
            a << 1 | b
        });
    let eu = m.expected_utility(&p).map_err(|e| e.to_string())?;
    ensure(eu == q("11"), || format!("relay policy scores {eu}"))
}

fn criterion_8() -> Outcome {
    let g = graph_fixture("triangle").unwrap().graph();
    let xp = g.set_of(&["X"]).unwrap();
    let z = g.set_of(&["Z"]).unwrap();
    let w = lb_factorizable(&g, &xp, &z, &SearchConfig::default())
        .map_err(|e| e.to_string())?
        .ok_or("no factorization witness")?;
    ensure(g.names_of(&w.ordering) == ["Z", "X"], || format!("ordering {:?}", g.names_of(&w.ordering)))?;
    let fixed = fix_point(&g, &w, &NodeSet::new());
    let x = g.node("X").unwrap();
    ensure(g.contexts(x).iter().all(|c| fixed.contains(c)), || {
        format!("fix(empty) = {:?}", g.names_of(&fixed))
    })?;
    let report = check_graph(&g, &SearchConfig::default()).map_err(|e| e.to_string())?;
    let e = report.edge(x, g.node("Z").unwrap()).ok_or("edge missing")?;
    ensure(matches!(e.verdict, Verdict::ImmaterialLb2(_)), || format!("verdict {}", e.verdict.label()))
}

fn criterion_9() -> Outcome {
    let mut passed = Vec::new();
    for f in graph_fixtures().into_iter().filter(|f| f.verdict == ExpectedVerdict::MaterialByThm1) {
        let g = f.graph();
        let (x, z) = (g.node(f.decision).unwrap(), g.node(f.context).unwrap());
        let s = synthesize(&g, x, z, f.k_override, &BuildConfig::default())
            .map_err(|e| format!("{}: {e}", f.name))?;
        let (xs, zs) = (var(&s.scm, f.decision)?, var(&s.scm, f.context)?);
        let r = voi(&s.scm, &Scope::full(&s.scm), xs, zs, &limits())
            .map_err(|e| format!("{}: {e}", f.name))?;
        ensure(r.value.is_positive(), || format!("{}: VoI = {}", f.name, r.value))?;
        let p = compliant_policy(&s).map_err(|e| format!("{}: {e}", f.name))?;
        let eu = s.scm.expected_utility(&p).map_err(|e| e.to_string())?;
        let total = s.paths.i_max - s.paths.i_min + 1;
        ensure(eu == ratio(total.into(), 1), || format!("{}: compliant policy scores {eu}, want {total}", f.name))?;
        ensure(r.with.value == eu, || format!("{}: MEU {} differs from compliant {eu}", f.name, r.with.value))?;
        if f.name == "finite-domain" {
            let widths: Vec<u32> =
                ["U1", "W1", "X'", "X0"].iter().map(|n| s.scm.width(s.scm.var(n).unwrap())).collect();
            ensure(widths == [2, 1, 1, 2], || format!("finite-domain widths {widths:?}"))?;
        }
        passed.push(f.name);
    }
    ensure(passed.len() >= 10, || format!("only {} graphs", passed.len()))?;
    for name in ["yes-voi-no-sr", "soluble", "remember-decision", "finite-domain"] {
        ensure(passed.contains(&name), || format!("{name} not covered"))?;
    }
    Ok(())
}

fn nodes(g: &ScopedGraph) -> Vec<Node> {
    g.nodes().collect()
}

fn random_subset(rng: &mut ChaCha8Rng, pool: &[Node], p: f64) -> NodeSet {
    pool.iter().copied().filter(|_| rng.gen_bool(p)).collect()
}

fn descendants_of(g: &ScopedGraph, v: Node) -> NodeSet {
    let mut seen = NodeSet::from([v]);
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        for c in g.children(u) {
            if seen.insert(*c) {
                stack.push(*c);
            }
        }
    }
    seen
}

/// Enumerates every simple path of the skeleton and tests each one.
fn path_connected(g: &ScopedGraph, a: Node, b: Node, given: &NodeSet) -> bool {
    fn active(g: &ScopedGraph, path: &[Node], given: &NodeSet) -> bool {
        path.windows(3).all(|w| {
            let collider = g.has_edge(w[0], w[1]) && g.has_edge(w[2], w[1]);
            if collider {
                !descendants_of(g, w[1]).is_disjoint(given)
            } else {
                !given.contains(&w[1])
            }
        })
    }
    fn dfs(g: &ScopedGraph, path: &mut Vec<Node>, b: Node, given: &NodeSet) -> bool {
        let cur = *path.last().unwrap();
        if cur == b {
            return active(g, path, given);
        }
        let next: Vec<Node> = g.parents(cur).iter().chain(g.children(cur)).copied().collect();
        for n in next {
            if path.contains(&n) {
                continue;
            }
            path.push(n);
            if dfs(g, path, b, given) {
                return true;
            }
            path.pop();
        }
        false
    }
    dfs(g, &mut vec![a], b, given)
}

fn random_policy(m: &FiniteScm, rng: &mut ChaCha8Rng) -> Policy {
    let mut p = Policy::new();
    for d in m.decisions() {
        let ctx = m.parents(d).to_vec();
        let rows: u32 = ctx.iter().map(|c| m.width(*c)).sum();
        let table = (0..1u64 << rows).map(|_| rng.gen_range(0..1u64 << m.width(d))).collect();
        p = p.with_rule(d, ctx, table);
    }
    p
}

fn criterion_10a() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..200u64 {
        let n = rng.gen_range(3..9);
        let g = random_graph(i, n, 0.4, 0.3);
        let vs = nodes(&g);
        let a = vs[rng.gen_range(0..n)];
        let b = vs[rng.gen_range(0..n)];
        if a == b {
            continue;
        }
        let pool: Vec<Node> = vs.iter().copied().filter(|v| *v != a && *v != b).collect();
        let given = random_subset(&mut rng, &pool, 0.3);
        let oracle = path_connected(&g, a, b, &given);
        ensure(separated1(&g, a, b, &given) != oracle, || {
            format!("query {i}: {} vs {} given {:?}", g.name(a), g.name(b), g.names_of(&given))
        })?;
    }
    let mut checked = 0;
    for seed in 0..50u64 {
        let g = random_graph(1000 + seed, 5, 0.45, 0.3);
        let m = random_scm(&g, seed, 1).map_err(|e| e.to_string())?;
        let policy = random_policy(&m, &mut rng);
        let vs: Vec<Node> = nodes(&g).into_iter().filter(|v| *v != g.utility()).collect();
        for &a in &vs {
            for &b in &vs {
                if a >= b {
                    continue;
                }
                let pool: Vec<Node> = vs.iter().copied().filter(|v| *v != a && *v != b).collect();
                let given = random_subset(&mut rng, &pool, 0.4);
                if !separated1(&g, a, b, &given) {
                    continue;
                }
                let idx = |v: &Node| m.var(g.name(*v)).unwrap();
                let c: Vec<usize> = given.iter().map(idx).collect();
                let ci = m.ci_oracle(&policy, &[idx(&a)], &[idx(&b)], &c).map_err(|e| e.to_string())?;
                ensure(ci, || format!("model {seed}: {} and {} dependent", g.name(a), g.name(b)))?;
                checked += 1;
            }
        }
    }
    ensure(checked > 50, || format!("only {checked} separated pairs"))
}

fn criterion_10b() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100u64 {
        let n = rng.gen_range(3..9);
        let g = random_graph(2000 + i, n, 0.4, 0.35);
        let vs = nodes(&g);

        // weak union
        let mut shuffled = vs.clone();
        shuffled.sort_by_key(|_| rng.gen::<u32>());
        let cut1 = rng.gen_range(1..n);
        let cut2 = rng.gen_range(cut1..=n);
        let a: NodeSet = shuffled[..cut1].iter().copied().collect();
        let b: NodeSet = shuffled[cut1..cut2].iter().copied().collect();
        let rest: Vec<Node> = shuffled[cut2..].to_vec();
        let c = random_subset(&mut rng, &rest, 0.5);
        if !b.is_empty() && separated(&g, &a, &b, &c) {
            let bv: Vec<Node> = b.iter().copied().collect();
            let z = random_subset(&mut rng, &bv, 0.5);
            let b2: NodeSet = b.difference(&z).copied().collect();
            let c2: NodeSet = c.union(&z).copied().collect();
            ensure(b2.is_empty() || separated(&g, &a, &b2, &c2), || format!("weak union, graph {i}"))?;
        }

        // max-conditioning
        let y = vs[rng.gen_range(0..n)];
        let z = vs[rng.gen_range(0..n)];
        if z != y {
            let anc: Vec<Node> = g.ancestors(y).into_iter().filter(|v| *v != y && *v != z).collect();
            let big = random_subset(&mut rng, &anc, 0.6);
            let bigv: Vec<Node> = big.iter().copied().collect();
            let small = random_subset(&mut rng, &bigv, 0.5);
            if separated1(&g, z, y, &small) {
                ensure(separated1(&g, z, y, &big), || format!("max-conditioning, graph {i}"))?;
            }
        }

        // ancestors of closure
        let w = random_subset(&mut rng, &vs, 0.3);
        let cw = closure(&g, &w);
        let anc_w = g.ancestors_of_set(&w);
        for v in &cw {
            for a in g.ancestors(*v) {
                if !cw.contains(&a) {
                    ensure(anc_w.contains(&a), || format!("ancestors of closure, graph {i}"))?;
                }
            }
        }
    }
    Ok(())
}

/// `u[idx]` with the index read as a left-to-right binary number.
fn index_bit(u: &[bool], idx: &[bool]) -> bool {
    let p = idx.iter().fold(0usize, |acc, b| acc << 1 | *b as usize);
    u[p]
}

fn all_strings(width: usize) -> Vec<Vec<bool>> {
    (0..1u64 << width)
        .map(|v| (0..width).map(|i| v >> (width - 1 - i) & 1 == 1).collect())
        .collect()
}

fn chains(j: usize) -> Vec<Vec<Vec<bool>>> {
    let mut out = vec![vec![]];
    for i in 0..j {
        let width = tower(i, 1).unwrap();
        out = out
            .into_iter()
            .flat_map(|c| {
                all_strings(width).into_iter().map(move |s| {
                    let mut c = c.clone();
                    c.push(s);
                    c
                })
            })
            .collect();
    }
    out
}

fn chain_consistent(w: &[Vec<bool>], u: &[Vec<bool>]) -> bool {
    u.is_empty() || w[0] == u[0] && (1..w.len()).all(|n| index_bit(&u[n], &u[n - 1]) == w[n][0])
}

fn criterion_10c() -> Outcome {
    let to_bits = |v: &[Vec<bool>]| v.iter().map(|b| Bitstring::new(b.clone())).collect::<Vec<_>>();
    for j in 1..=3usize {
        let reports: Vec<Vec<Vec<bool>>> = all_strings(j + 1)
            .into_iter()
            .map(|bits| bits.iter().map(|b| vec![*b]).collect())
            .collect();
        let short_chains = chains(j);
        for w in &reports {
            for wbar in &reports {
                let Some(jp) = (0..=j).find(|i| w[*i] != wbar[*i]) else { continue };
                let prefixes: BTreeSet<Vec<Vec<bool>>> = chains(jp)
                    .into_iter()
                    .filter(|p| chain_consistent(&w[..jp], p))
                    .collect();
                for prefix in prefixes {
                    let tail = adversarial_forks(&to_bits(w), &to_bits(wbar), &to_bits(&prefix))
                        .map_err(|e| e.to_string())?;
                    let mut u = to_bits(&prefix);
                    u.extend(tail);
                    ensure(consistent(&to_bits(w), &u).map_err(|e| e.to_string())?, || {
                        format!("J={j}: result not consistent with w")
                    })?;
                    let last: Vec<bool> = u.last().unwrap().bits().to_vec();
                    let beaten = short_chains.iter().any(|c| {
                        chain_consistent(&wbar[..j], c) && index_bit(&last, &c[j - 1]) == wbar[j][0]
                    });
                    ensure(!beaten, || format!("J={j}: w-bar still compatible"))?;
                }
            }
        }
    }
    Ok(())
}

fn criterion_10d() -> Outcome {
    let mut done = 0;
    let mut seed = 0u64;
    while done < 50 {
        seed += 1;
        let g = random_graph(3000 + seed, 6, 0.45, 0.4);
        let m = random_scm(&g, seed, 1).map_err(|e| e.to_string())?;
        let full = Scope::full(&m);
        if full.contexts.values().all(Vec::is_empty) {
            continue;
        }
        let base = meu(&m, &full, &limits()).map_err(|e| e.to_string())?;
        let mut scope = full.clone();
        let mut prev = base.value.clone();
        for (x, ctx) in &full.contexts {
            for z in ctx {
                let r = voi(&m, &full, *x, *z, &limits()).map_err(|e| e.to_string())?;
                ensure(!r.value.is_negative(), || format!("model {seed}: negative VoI"))?;
                scope = scope.without(&m, *x, *z).map_err(|e| e.to_string())?;
                let smaller = meu(&m, &scope, &limits()).map_err(|e| e.to_string())?.value;
                ensure(smaller <= prev, || format!("model {seed}: MEU grew after dropping a context"))?;
                prev = smaller;
            }
        }
        done += 1;
    }
    Ok(())
}

fn criterion_10e() -> Outcome {
    for f in scm_fixtures() {
        let m = FiniteScm::from_doc(f.doc()).map_err(|e| e.to_string())?;
        let full = Scope::full(&m);
        let reduced = full.without(&m, var(&m, f.decision)?, var(&m, f.context)?).map_err(|e| e.to_string())?;
        for (scope, value) in [(&full, f.meu_with), (&reduced, f.meu_without)] {
            let ok = stochastic_bound_check(&m, scope, &q(value), 1000, 7).map_err(|e| e.to_string())?;
            ensure(ok, || format!("{}: a stochastic policy beats {value}", f.name))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("1 yes-voi values", criterion_1),
        ("2 linear-no-voi random models", criterion_2),
        ("3 yes-voi-no-sr values and insolubility", criterion_3),
        ("4 finite-domain-1 relay policy", criterion_4),
        ("5 finite-domain-2 brute force", criterion_5),
        ("6 obstacle-2 values", criterion_6),
        ("7 superimposed relay", criterion_7),
        ("8 triangle fix-point", criterion_8),
        ("9 synthesized models", criterion_9),
        ("10a d-separation oracle and CI", criterion_10a),
        ("10b separation lemmas", criterion_10b),
        ("10c adversarial forks", criterion_10c),
        ("10d VoI sign and monotonicity", criterion_10d),
        ("10e stochastic bound", criterion_10e),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("PASS criterion {name} ({secs:.2}s)"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {e}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
