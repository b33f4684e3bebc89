//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use latc_core::arith::{falsify, normalize, prove_eq, prove_leq, ArithTerm, AssumptionSet, Constraint, Relation, TriState};
use latc_core::runtime::{run_traced, Strategy, TraceEvent};
use latc_core::syntax::{parse, parse_arith, pretty, Program, Term};
use latc_core::topology::load_topology;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUZZ_COUNT: u64 = 500;
const FUZZ_SEED: u64 = 42;
const FUZZ_TIME_LIMIT: Duration = Duration::from_secs(60);
const ROUND_TRIP_WEIGHT: u64 = 200;
const IF_BOUND: u64 = 400;
const LENGTH_RANGE: std::ops::RangeInclusive<usize> = 0..=5;
const TERMINATION_FUEL: usize = 10_000;
const PROVER_INSTANCES: usize = 1_000;
const FALSIFY_BUDGET: usize = 10_000;
const PROVER_GRID: u128 = 6;
const NORMALIZE_INSTANCES: usize = 1_000;
const NORMALIZE_GRID: u128 = 3;
const NORMALIZE_MAX_VARS: usize = 3;
const MIN_CORPUS: usize = 30;
const TRACE_SEEDS: u64 = 4;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    root().join("fixtures/programs").join(name)
}

fn topology(name: &str) -> PathBuf {
    root().join("fixtures/topologies").join(name)
}

struct Output {
    code: i32,
    stdout: String,
}

fn latc(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_latc"))
        .args(args)
        .output()
        .expect("latc runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
    }
}

fn line_value<'a>(out: &'a str, prefix: &str) -> Option<&'a str> {
    out.lines().find_map(|l| l.strip_prefix(prefix))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::write(&p, contents).expect("scratch file");
    p
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------------------
// Independent arithmetic evaluator, used as the oracle for 6 and 7.

fn eval(t: &ArithTerm, env: &BTreeMap<String, u128>) -> Option<u128> {
    Some(match t {
        ArithTerm::Zero => 0,
        ArithTerm::Lit(n) => u128::try_from(n.clone()).ok()?,
        ArithTerm::Var(x) => *env.get(x)?,
        ArithTerm::Succ(a) => eval(a, env)?.checked_add(1)?,
        ArithTerm::Add(a, b) => eval(a, env)?.checked_add(eval(b, env)?)?,
        ArithTerm::Mul(a, b) => eval(a, env)?.checked_mul(eval(b, env)?)?,
        ArithTerm::Min(a, b) => eval(a, env)?.min(eval(b, env)?),
        ArithTerm::Max(a, b) => eval(a, env)?.max(eval(b, env)?),
    })
}

fn holds(c: &Constraint, env: &BTreeMap<String, u128>) -> Option<bool> {
    let (l, r) = (eval(&c.lhs, env)?, eval(&c.rhs, env)?);
    Some(match c.rel {
        Relation::Eq => l == r,
        Relation::Leq => l <= r,
    })
}

/// Every assignment of `vars` over `0..=max`.
fn grid(vars: &[String], max: u128) -> Vec<BTreeMap<String, u128>> {
    let mut out = vec![BTreeMap::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|env| {
                (0..=max).map(move |n| {
                    let mut e = env.clone();
                    e.insert(v.clone(), n);
                    e
                })
            })
            .collect();
    }
    out
}

fn random_term(rng: &mut ChaCha8Rng, vars: &[&str], depth: u32) -> ArithTerm {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => ArithTerm::lit(rng.gen_range(0u32..=4)),
            1 if !vars.is_empty() => ArithTerm::var(vars[rng.gen_range(0..vars.len())]),
            _ => ArithTerm::Zero,
        };
    }
    let a = random_term(rng, vars, depth - 1);
    match rng.gen_range(0..6) {
        0 => ArithTerm::succ(a),
        1 => ArithTerm::add(a, random_term(rng, vars, depth - 1)),
        2 => ArithTerm::mul(a, random_term(rng, vars, depth - 1)),
        3 => ArithTerm::min(a, random_term(rng, vars, depth - 1)),
        4 => ArithTerm::max(a, random_term(rng, vars, depth - 1)),
        _ => match vars.first() {
            Some(v) => ArithTerm::add(a, ArithTerm::var(*v)),
            None => ArithTerm::succ(a),
        },
    }
}

// ---------------------------------------------------------------------------

fn c1_fuzz() -> Outcome {
    let start = Instant::now();
    let out = latc(&["fuzz", "--count", &FUZZ_COUNT.to_string(), "--seed", &FUZZ_SEED.to_string()]);
    let elapsed = start.elapsed();
    let expected = format!("{FUZZ_COUNT} ok, 0 violations");
    let summary = out.stdout.lines().last().unwrap_or("").to_string();
    ensure(out.code == 0, format!("exit {}: {}", out.code, out.stdout))?;
    ensure(summary == expected, format!("summary `{summary}`, expected `{expected}`"))?;
    ensure(elapsed < FUZZ_TIME_LIMIT, format!("took {elapsed:?}"))?;
    let again = latc(&["fuzz", "--count", &FUZZ_COUNT.to_string(), "--seed", &FUZZ_SEED.to_string()]);
    ensure(again.stdout == out.stdout, "reports differ between identical runs")?;
    Ok(format!("{summary} in {:.1}s, reproducible", elapsed.as_secs_f64()))
}

fn c2_get() -> Outcome {
    let prog = path_str(&fixture("two_node.lat"));
    let topo_src = fs::read_to_string(topology("two_dc.topo")).map_err(|e| e.to_string())?;
    let topo = load_topology(&topo_src).map_err(|e| e.to_string())?;
    let (client, server) = (topo.peers()[0].clone(), topo.peers()[1].clone());
    let expected = topo.weight(&client, &server).unwrap() + topo.weight(&server, &client).unwrap();
    ensure(expected == ROUND_TRIP_WEIGHT, format!("fixture topology round trip is {expected}"))?;

    let check = latc(&["check", &prog]);
    let main = line_value(&check.stdout, "main : ").ok_or("no main line")?;
    ensure(main == format!("(Nat, 5, {expected})"), format!("check reported {main}"))?;
    let run = latc(&["run", &prog]);
    let lr = line_value(&run.stdout, "latency = ").ok_or("no latency line")?;
    ensure(lr == expected.to_string(), format!("run reported {lr}"))?;
    ensure(line_value(&run.stdout, "value = ") == Some("5"), "wrong value")?;
    Ok(format!("l_T = l_R = {expected}"))
}

fn c3_if() -> Outcome {
    let template = fs::read_to_string(fixture("if_remote_cond.lat")).map_err(|e| e.to_string())?;
    let topo = path_str(&topology("two_dc.topo"));
    // Condition: one round trip. Else branch: one round trip (2·L with L = 100).
    let (l_c, two_l) = (ROUND_TRIP_WEIGHT, ROUND_TRIP_WEIGHT);
    let branches = [0, two_l];
    let bound = l_c + branches.iter().max().copied().unwrap_or(0);
    ensure(bound == IF_BOUND, "oracle disagrees with pinned bound")?;
    let mut observed = Vec::new();
    for flag in ["true", "false"] {
        let src = template.replace("(Bool, 0, 0) = false", &format!("(Bool, 0, 0) = {flag}"));
        let p = path_str(&scratch(&format!("if_{flag}.lat"), &src));
        let check = latc(&["check", &p, "--topology", &topo]);
        let main = line_value(&check.stdout, "main : ").ok_or("no main line")?;
        ensure(main == format!("(Nat, 1, {bound})"), format!("bound {main}"))?;
        let run = latc(&["run", &p, "--topology", &topo]);
        let lr: u64 = line_value(&run.stdout, "latency = ")
            .ok_or("no latency")?
            .parse()
            .map_err(|_| "bad latency")?;
        ensure(lr <= bound, format!("l_R {lr} exceeds {bound}"))?;
        observed.push(lr);
    }
    ensure(observed == [l_c, l_c + two_l], format!("runs {observed:?}"))?;
    ensure(observed.contains(&bound), "bound never attained")?;
    Ok(format!("bound {bound}, runs {observed:?}"))
}

fn nat_list(n: usize) -> String {
    let mut s = "nil[Nat]".to_string();
    for i in 0..n {
        s = format!("cons({i}, {s})");
    }
    s
}

fn c4_size() -> Outcome {
    let template = fs::read_to_string(fixture("length.lat")).map_err(|e| e.to_string())?;
    let topo = path_str(&topology("two_dc.topo"));
    let body = template.split("main at Client =").next().ok_or("no main")?;
    let mut seen = Vec::new();
    for n in LENGTH_RANGE {
        let src = format!("{body}main at Client = len {}\n", nat_list(n));
        let p = path_str(&scratch(&format!("length_{n}.lat"), &src));
        let check = latc(&["check", &p, "--topology", &topo]);
        let sig = line_value(&check.stdout, "len : ").ok_or("no len line")?;
        // `(forall s . (List[Nat], s) -> (Nat, <size>, <latency>), 0, 0)`
        let inner = sig.rsplit_once("-> (").ok_or("no arrow")?.1;
        let latency_src = inner.split(", ").nth(2).ok_or("no latency")?.trim_end_matches(')');
        let latency_src = latency_src.split(')').next().unwrap_or(latency_src);
        let bound = parse_arith(latency_src).map_err(|e| e.to_string())?;
        let sigma = BTreeMap::from([("s".to_string(), BigUint::from(n))]);
        let instantiated = bound.denote(&sigma).map_err(|e| e.to_string())?;
        let run = latc(&["run", &p, "--topology", &topo]);
        let lr: u64 = line_value(&run.stdout, "latency = ")
            .ok_or("no latency")?
            .parse()
            .map_err(|_| "bad latency")?;
        let expected = n as u64 * ROUND_TRIP_WEIGHT;
        ensure(lr == expected, format!("n={n}: l_R {lr}, expected {expected}"))?;
        ensure(
            instantiated == BigUint::from(expected),
            format!("n={n}: type bound {instantiated}, expected {expected}"),
        )?;
        let main = line_value(&check.stdout, "main : ").ok_or("no main")?;
        ensure(main == format!("(Nat, {n}, {expected})"), format!("n={n}: main {main}"))?;
        seen.push(lr);
    }
    Ok(format!("l_R = n*{ROUND_TRIP_WEIGHT} for n in 0..=5: {seen:?}"))
}

fn c5_termination() -> Outcome {
    let bad = latc(&["check", &path_str(&root().join("fixtures/rejected/non_decreasing.lat"))]);
    ensure(bad.code == 1, format!("non-decreasing fix: exit {}", bad.code))?;
    ensure(
        bad.stdout.contains("[NonDecreasingRecursion]"),
        format!("wrong rejection: {}", bad.stdout),
    )?;
    let template = fs::read_to_string(fixture("length_local.lat")).map_err(|e| e.to_string())?;
    let body = template.split("main at Client =").next().ok_or("no main")?;
    let topo = path_str(&topology("two_dc.topo"));
    for n in LENGTH_RANGE {
        let src = format!("{body}main at Client = len {}\n", nat_list(n));
        let p = path_str(&scratch(&format!("terminate_{n}.lat"), &src));
        let run = latc(&["run", &p, "--topology", &topo, "--fuel", &TERMINATION_FUEL.to_string()]);
        ensure(run.code == 0, format!("n={n}: exit {} {}", run.code, run.stdout))?;
        ensure(
            line_value(&run.stdout, "value = ") == Some(n.to_string().as_str()),
            format!("n={n}: {}", run.stdout),
        )?;
    }
    Ok(format!("rejected; length terminates within fuel {TERMINATION_FUEL}"))
}

fn c6_prover() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let names = ["a", "b", "c"];
    let (mut proved, mut disproved, mut tries) = (0usize, 0usize, 0usize);
    while proved + disproved < PROVER_INSTANCES {
        tries += 1;
        if tries > PROVER_INSTANCES * 50 {
            return Err(format!("only {} decided instances", proved + disproved));
        }
        let vars = &names[..rng.gen_range(1..=3)];
        let mut phi = AssumptionSet::new();
        for _ in 0..rng.gen_range(0..=2) {
            let x = ArithTerm::var(vars[rng.gen_range(0..vars.len())]);
            let e = random_term(&mut rng, vars, 2);
            let c = match rng.gen_range(0..3) {
                0 => Constraint::eq(x, e),
                1 => Constraint::leq(ArithTerm::succ(e), x),
                _ => Constraint::leq(e, x),
            };
            phi.insert(c);
        }
        let a = random_term(&mut rng, vars, 3);
        let b = random_term(&mut rng, vars, 3);
        let eq = rng.gen_bool(0.3);
        let (verdict, claim) = if eq {
            (prove_eq(&phi, &a, &b), Constraint::eq(a, b))
        } else {
            (prove_leq(&phi, &a, &b), Constraint::leq(a, b))
        };
        let mut all_vars: Vec<String> = phi.free_vars().into_iter().collect();
        for v in claim.free_vars() {
            if !all_vars.contains(&v) {
                all_vars.push(v);
            }
        }
        match verdict {
            TriState::Proved => {
                if let Some(w) = falsify(&phi, &claim, FALSIFY_BUDGET) {
                    return Err(format!("proved {claim} under {phi:?}, falsified by {w:?}"));
                }
                for env in grid(&all_vars, PROVER_GRID) {
                    let assumed = phi.iter().all(|c| holds(c, &env) == Some(true));
                    if assumed && holds(&claim, &env) == Some(false) {
                        return Err(format!("proved {claim} under {phi:?}, fails at {env:?}"));
                    }
                }
                proved += 1;
            }
            TriState::Disproved(w) => {
                let env: BTreeMap<String, u128> = w
                    .iter()
                    .map(|(k, v)| (k.clone(), u128::try_from(v.clone()).unwrap_or(u128::MAX)))
                    .collect();
                let assumed = phi.iter().all(|c| holds(c, &env) == Some(true));
                if !assumed || holds(&claim, &env) != Some(false) {
                    return Err(format!("bogus counterexample {w:?} for {claim} under {phi:?}"));
                }
                disproved += 1;
            }
            TriState::Unknown => {}
        }
    }
    Ok(format!(
        "{PROVER_INSTANCES} decided instances ({proved} proved, {disproved} disproved), 0 contradictions"
    ))
}

fn c7_normalize() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let names = ["a", "b", "c"];
    let mut points = 0usize;
    for i in 0..NORMALIZE_INSTANCES {
        let vars = &names[..rng.gen_range(0..=NORMALIZE_MAX_VARS)];
        let t = random_term(&mut rng, vars, 4);
        let n = normalize(&t).embed();
        let vs: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        for env in grid(&vs, NORMALIZE_GRID) {
            points += 1;
            if eval(&t, &env) != eval(&n, &env) {
                return Err(format!("instance {i}: {t} vs {n} at {env:?}"));
            }
        }
    }
    Ok(format!("{NORMALIZE_INSTANCES} terms, {points} assignments, 0 mismatches"))
}

fn corpus() -> Result<Vec<(PathBuf, String)>, String> {
    let mut out = Vec::new();
    for dir in ["fixtures/programs", "fixtures/rejected"] {
        let mut entries: Vec<PathBuf> = fs::read_dir(root().join(dir))
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "lat"))
            .collect();
        entries.sort();
        for p in entries {
            let src = fs::read_to_string(&p).map_err(|e| e.to_string())?;
            out.push((p, src));
        }
    }
    Ok(out)
}

fn constructors(t: &Term, seen: &mut BTreeMap<&'static str, usize>) {
    let (name, kids): (&'static str, Vec<&Term>) = match t {
        Term::Var(_) => ("Var", vec![]),
        Term::UnitLit => ("UnitLit", vec![]),
        Term::BoolLit(_) => ("BoolLit", vec![]),
        Term::NatLit(_) => ("NatLit", vec![]),
        Term::SuccT(a) => ("SuccT", vec![a]),
        Term::Nil(_) => ("Nil", vec![]),
        Term::Cons(a, b) => ("Cons", vec![a, b]),
        Term::CaseList {
            scrutinee,
            nil_branch,
            cons_branch,
            ..
        } => ("CaseList", vec![scrutinee, nil_branch, cons_branch]),
        Term::If {
            cond,
            then_branch,
            else_branch,
        } => ("If", vec![cond, then_branch, else_branch]),
        Term::Lam { body, .. } => ("Lam", vec![body]),
        Term::App(a, b) => ("App", vec![a, b]),
        Term::Fix { body, .. } => ("Fix", vec![body]),
        Term::Get { body, .. } => ("Get", vec![body]),
    };
    *seen.entry(name).or_default() += 1;
    for k in kids {
        constructors(k, seen);
    }
}

fn c8_round_trip() -> Outcome {
    let files = corpus()?;
    ensure(files.len() >= MIN_CORPUS, format!("only {} programs", files.len()))?;
    let mut seen = BTreeMap::new();
    for (path, src) in &files {
        let p: Program = parse(src).map_err(|e| format!("{}: {e}", path.display()))?;
        let printed = pretty(&p);
        let again = parse(&printed).map_err(|e| format!("{}: reparse: {e}", path.display()))?;
        ensure(again.alpha_eq(&p), format!("{}: round trip changed the program", path.display()))?;
        ensure(pretty(&again) == printed, format!("{}: printing not stable", path.display()))?;
        for d in &p.defs {
            constructors(&d.body, &mut seen);
        }
        constructors(&p.main, &mut seen);
    }
    const ALL: [&str; 13] = [
        "Var", "UnitLit", "BoolLit", "NatLit", "SuccT", "Nil", "Cons", "CaseList", "If", "Lam", "App", "Fix", "Get",
    ];
    let missing: Vec<&str> = ALL.iter().copied().filter(|c| !seen.contains_key(c)).collect();
    ensure(missing.is_empty(), format!("constructors not covered: {missing:?}"))?;
    Ok(format!("{} programs, all 13 constructors covered", files.len()))
}

/// Independent check: every frame id's latency never decreases.
fn monotone(trace: &[TraceEvent]) -> bool {
    let mut last = BTreeMap::new();
    trace.iter().all(|e| {
        e.frames.iter().all(|&(id, l)| {
            let ok = last.get(&id).is_none_or(|&prev| l >= prev);
            last.insert(id, l);
            ok
        })
    })
}

fn c9_monotonicity() -> Outcome {
    let files = corpus()?;
    let (mut runs, mut steps) = (0usize, 0usize);
    for (path, src) in files.iter().filter(|(p, _)| p.to_string_lossy().contains("programs")) {
        let topo_name = src
            .lines()
            .find_map(|l| l.strip_prefix("-- topology: "))
            .ok_or(format!("{}: no topology", path.display()))?;
        let topo_src = fs::read_to_string(path.parent().unwrap().join(topo_name.trim())).map_err(|e| e.to_string())?;
        let topo = load_topology(&topo_src).map_err(|e| e.to_string())?;
        let p = parse(src).map_err(|e| e.to_string())?;
        let strategies = std::iter::once(Strategy::Leftmost).chain((0..TRACE_SEEDS).map(Strategy::Seeded));
        for s in strategies {
            let (_, trace) = run_traced(&p, &topo, s, TERMINATION_FUEL).map_err(|e| format!("{}: {e}", path.display()))?;
            ensure(monotone(&trace), format!("{}: latency decreased under {s:?}", path.display()))?;
            runs += 1;
            steps += trace.len();
        }
    }
    Ok(format!("{runs} traced runs, {steps} steps, 0 decreases"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("soundness fuzz (500 programs, seed 42)", c1_fuzz),
        ("get latency is exact", c2_get),
        ("if bound over both conditions", c3_if),
        ("size-dependent bound", c4_size),
        ("termination and rejection", c5_termination),
        ("prover soundness", c6_prover),
        ("normalization oracle", c7_normalize),
        ("parser round trip", c8_round_trip),
        ("latency monotonicity", c9_monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
