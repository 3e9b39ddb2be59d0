//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails; exit code 4 when a generated model satisfies the
//! premises of a proven implication but not its conclusion.

use std::cell::RefCell;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regime_core::ci::numeric::{check_extended_ci, check_stochastic_ci, mixture_joint};
use regime_core::ci::semigraphoid::derivable;
use regime_core::ci::statement::CiStatement;
use regime_core::cli;
use regime_core::conditions::{condition_report, Checker, Evidence};
use regime_core::diagram::InfluenceDiagram;
use regime_core::dsl::{parse_ci, parse_premises};
use regime_core::fixtures::{fixture, verify_fixture, verify_pair};
use regime_core::grecursion::{consequence_brute_force, g_recursion, g_recursion_traced, OutcomeFunctional, Trace};
use regime_core::joint::{materialize_joint, Joint};
use regime_core::model::RegimeModel;
use regime_core::random::{random_functional, random_model, random_prior, random_rational, GenConfig, Profile};
use regime_core::rational::{fmt_exact, int, ratio, zero, Rational};
use regime_core::strategy::{optimize, Mode, Safety};

/// Mismatches collected while a criterion runs.
#[derive(Default)]
struct Log {
    failures: Vec<String>,
    facts: Vec<String>,
    violation: bool,
}

impl Log {
    fn expect<T: PartialEq + std::fmt::Debug>(&mut self, what: &str, expected: T, actual: T) {
        if expected != actual {
            self.failures
                .push(format!("{what}: expected {expected:?}, got {actual:?}"));
        }
    }

    fn ensure(&mut self, what: &str, ok: bool) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn fact(&mut self, text: impl Into<String>) {
        self.facts.push(text.into());
    }
}

struct Outcome {
    passed: bool,
    violation: bool,
}

fn criterion(
    number: usize,
    title: &str,
    tolerance: &str,
    budget: Option<Duration>,
    body: impl FnOnce(&mut Log) -> regime_core::Result<()>,
) -> Outcome {
    let mut log = Log::default();
    let start = Instant::now();
    if let Err(e) = body(&mut log) {
        log.failures.push(format!("error: {e}"));
    }
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            log.failures.push(format!(
                "took {:.3} s, budget {:.0} s",
                elapsed.as_secs_f64(),
                b.as_secs_f64()
            ));
        }
    }
    let passed = log.failures.is_empty();
    let budget_text = budget.map_or(String::new(), |b| format!(", budget {:.0} s", b.as_secs_f64()));
    println!(
        "{} [{number}] {title} (tolerance: {tolerance}; {:.3} s{budget_text})",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    for f in &log.facts {
        println!("       {f}");
    }
    for f in &log.failures {
        println!("       FAILURE: {f}");
    }
    Outcome {
        passed,
        violation: log.violation,
    }
}

fn model(name: &str) -> RegimeModel {
    fixture(name).unwrap().parse_model().unwrap().unwrap()
}

fn cond(joint: &Joint, event: &[(&str, &str)], given: &[(&str, &str)]) -> regime_core::Result<Rational> {
    let both: Vec<(&str, &str)> = event.iter().chain(given).copied().collect();
    Ok(joint.prob(&both)? / joint.prob(given)?)
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["regime"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn holds(report: &regime_core::conditions::ConditionReport, label: &str) -> Option<bool> {
    report.get(label).map(|c| c.holds)
}

fn discrete_table(log: &mut Log) -> regime_core::Result<()> {
    let v = verify_fixture("discretesi")?;
    log.ensure("fixture verification passes", v.passed);
    for e in v.expectations.iter().filter(|e| !e.passed) {
        log.failures
            .push(format!("{}: expected {}, got {}", e.check, e.expected, e.actual));
    }
    let (code, _, _) = run_cli(&["fixture", "discretesi", "--verify"]);
    log.expect("`fixture discretesi --verify` exit code", 0, code);

    // independent arithmetic on the regime joints
    let m = model("discretesi");
    let (o, s) = (materialize_joint(&m, "o")?, materialize_joint(&m, "s")?);
    log.expect("P(Y=1|A=1;o)", ratio(4, 5), cond(&o, &[("Y", "1")], &[("A", "1")])?);
    log.expect("P(Y=1|A=1;s)", ratio(59, 100), cond(&s, &[("Y", "1")], &[("A", "1")])?);
    log.expect(
        "P(Y=1|U=0,A=1;s)",
        ratio(4, 5),
        cond(&s, &[("Y", "1")], &[("U", "0"), ("A", "1")])?,
    );
    log.expect(
        "P(Y=1|U=1,A=1;s)",
        ratio(11, 25),
        cond(&s, &[("Y", "1")], &[("U", "1"), ("A", "1")])?,
    );
    for u in ["0", "1"] {
        log.expect(
            &format!("P(A=1|U={u};s)"),
            ratio(1, 5),
            cond(&s, &[("A", "1")], &[("U", u)])?,
        );
    }
    log.expect("P(U=1,A=1;o)", zero(), o.prob(&[("U", "1"), ("A", "1")])?);
    log.expect("P(U=1,A=1;s)", ratio(7, 60), s.prob(&[("U", "1"), ("A", "1")])?);

    let r = condition_report(&m, "s")?;
    for (label, want) in [
        ("extended-stability", true),
        ("control(s)", true),
        ("sequential-irrelevance(o)", true),
        ("sequential-irrelevance(s)", false),
        ("extended-positivity", false),
        ("simple-stability", false),
    ] {
        log.expect(label, Some(want), holds(&r, label));
    }
    let cv = r
        .get("extended-stability")
        .and_then(|c| c.stages.last())
        .and_then(|s| s.common_version.clone());
    let w = |z: &[(&str, &str)]| cv.as_ref().and_then(|c| c.value(z, &[("Y", "1")]).cloned());
    log.expect("w(Y=1|U=0,A=0)", Some(ratio(16, 25)), w(&[("U", "0"), ("A", "0")]));
    log.expect("w(Y=1|U=1,A=1)", Some(ratio(11, 25)), w(&[("U", "1"), ("A", "1")]));
    log.fact("common version w(Y=1|U=0,A=0)=16/25, w(Y=1|U=1,A=1)=11/25; witness A=1: 4/5 vs 59/100");
    Ok(())
}

fn positivity_counterexample(log: &mut Log) -> regime_core::Result<()> {
    let m = model("appb");
    let r = Checker::new(&m)?.positivity("s")?;
    log.expect("positivity", false, r.holds);
    let event_a1 = r.witnesses.iter().find_map(|w| match w {
        Evidence::Event { event, s_mass, o_mass } if event.0 == [("A".to_string(), "1".to_string())] => {
            Some((s_mass.clone(), o_mass.clone()))
        }
        _ => None,
    });
    log.expect("witness event A=1 (s-mass, o-mass)", Some((int(1), zero())), event_a1);

    let (model_path, loss_path) = (fixture_path("appb.model"), fixture_path("y.loss"));
    let base = [
        "evaluate",
        &model_path,
        "--regime",
        "s",
        "--loss",
        &loss_path,
        "--method",
        "transfer",
    ];
    let (code, out, _) = run_cli(&base);
    log.expect("transfer exit code", 1, code);
    log.ensure("refusal names positivity", out.contains("positivity failed"));
    let mut forced = base.to_vec();
    forced.push("--force");
    let (code, _, err) = run_cli(&forced);
    log.expect("forced transfer exit code", 3, code);
    log.ensure("undefined conditional is located", err.contains("(L1=0, A=1)"));

    let k = OutcomeFunctional::identity(&m)?;
    log.expect("E(L2;s) by recursion", ratio(3, 2), g_recursion(&m, "s", &k)?);
    // direct sum: L1 uniform, A=1, L2=L1+1
    log.expect(
        "E(L2;s) by brute force",
        ratio(3, 2),
        consequence_brute_force(&m, "s", &k)?,
    );

    let v = verify_fixture("appb")?;
    for regime in ["o", "s"] {
        for w in ["W_o", "W_s"] {
            let label = format!("{w} is a version of E(L2|L1,A) under {regime}");
            let got = v
                .expectations
                .iter()
                .find(|e| e.check == label)
                .map(|e| e.actual.clone());
            let own = (w == "W_o") == (regime == "o");
            log.expect(&label, Some(own.to_string()), got);
        }
    }
    log.ensure("fixture verification passes", v.passed);
    log.fact("witness A=1: s-mass 1, o-mass 0; exit 1 refused, exit 3 forced; E(L2;s)=3/2");
    Ok(())
}

fn discretized_counterexample(log: &mut Log) -> regime_core::Result<()> {
    for n in [2usize, 10, 100] {
        let start = Instant::now();
        let m = fixture(&format!("cts({n})"))?.parse_model()?.unwrap();
        let checker = Checker::new(&m)?;
        log.expect(
            &format!("N={n} extended stability"),
            true,
            checker.extended_stability("s")?.holds,
        );
        log.expect(&format!("N={n} control"), true, checker.control_strategy("s")?.holds);
        log.expect(
            &format!("N={n} simple stability"),
            false,
            checker.simple_stability("s")?.holds,
        );
        let k = OutcomeFunctional::indicator(&m, "1")?;
        log.expect(&format!("N={n} P(Y=1;o)"), int(1), g_recursion(&m, "o", &k)?);
        log.expect(
            &format!("N={n} P(Y=1;s)"),
            ratio(1, n as i64),
            g_recursion(&m, "s", &k)?,
        );
        log.expect(
            &format!("N={n} P(Y=1;s) by brute force"),
            ratio(1, n as i64),
            consequence_brute_force(&m, "s", &k)?,
        );
        let t = start.elapsed();
        log.fact(format!("N={n}: {:.3} s", t.as_secs_f64()));
        if n == 100 && t > Duration::from_secs(5) {
            log.failures
                .push(format!("N=100 took {:.3} s, budget 5 s", t.as_secs_f64()));
        }
    }
    Ok(())
}

fn recursion_vs_brute_force(log: &mut Log) -> regime_core::Result<()> {
    let cfg = GenConfig::default();
    let profiles = [Profile::Unrestricted, Profile::Randomized, Profile::Irrelevant];
    let (mut models, mut null_models, mut comparisons) = (0, 0, 0);
    for seed in 0..520u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa11ce ^ seed);
        let m = random_model(&mut rng, profiles[seed as usize % 3], &cfg);
        let k = random_functional(&mut rng, &m);
        let noise = RefCell::new(ChaCha8Rng::seed_from_u64(seed));
        let version = |_: &[(String, String)]| -> Rational {
            let mut r = noise.borrow_mut();
            let v = random_rational(&mut *r);
            v * int(r.gen_range(-1000..1000))
        };
        let mut saw_null = false;
        for id in m.regime_ids() {
            let brute = consequence_brute_force(&m, &id, &k)?;
            let g = g_recursion(&m, &id, &k)?;
            if g != brute {
                log.failures.push(format!(
                    "seed {seed} regime {id}: {} vs {}",
                    fmt_exact(&g),
                    fmt_exact(&brute)
                ));
            }
            let perturbed = g_recursion_traced(
                &m,
                &id,
                &k,
                &Trace {
                    version: Some(&version),
                    record: true,
                },
            )?;
            saw_null |= perturbed.table.iter().any(|e| e.null);
            if perturbed.value != brute {
                log.failures
                    .push(format!("seed {seed} regime {id}: perturbation changed the value"));
            }
            comparisons += 1;
        }
        models += 1;
        null_models += usize::from(saw_null);
    }
    log.ensure("at least 500 models", models >= 500);
    log.ensure("null histories were exercised", null_models > 0);
    log.fact(format!(
        "{models} models, {comparisons} regime comparisons, {null_models} models with zero-mass histories perturbed"
    ));
    Ok(())
}

fn implication_suite(log: &mut Log, profile: Profile, premises: &[&str], lemma: bool) -> regime_core::Result<()> {
    let cfg = GenConfig::default();
    let (mut accepted, mut with_zero_cells, mut skipped) = (0, 0, 0);
    let mut seed = 0u64;
    while accepted < 220 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0xbeef ^ seed);
        let m = random_model(&mut rng, profile, &cfg);
        let r = condition_report(&m, "s")?;
        if !premises.iter().all(|p| holds(&r, p) == Some(true)) {
            skipped += 1;
            if skipped > 1000 {
                log.failures.push("generator rarely meets the premises".to_string());
                break;
            }
            continue;
        }
        accepted += 1;
        if holds(&r, "extended-positivity") == Some(false) {
            with_zero_cells += 1;
        }
        if holds(&r, "simple-stability") != Some(true) {
            log.violation = true;
            log.failures
                .push(format!("seed {seed}: premises hold, simple stability fails"));
        }
        if lemma && holds(&r, "lemma1") != Some(true) {
            log.violation = true;
            log.failures
                .push(format!("seed {seed}: positivity does not propagate to observed cells"));
        }
        if r.internal_error {
            log.violation = true;
        }
    }
    log.ensure("at least 200 models", accepted >= 200);
    log.fact(format!(
        "{accepted} models meeting [{}], {with_zero_cells} with extended positivity failing, {skipped} generated models skipped",
        premises.join(", ")
    ));
    Ok(())
}

fn all_queries(n: usize, mut f: impl FnMut(&[String], &[String], &[String])) {
    let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    for code in 0..4usize.pow(n as u32) {
        let side = |k: usize| -> Vec<String> {
            (0..n)
                .filter(|&i| code / 4usize.pow(i as u32) % 4 == k)
                .map(|i| names[i].clone())
                .collect()
        };
        let (x, y, z) = (side(1), side(2), side(3));
        if !x.is_empty() && !y.is_empty() {
            f(&x, &y, &z);
        }
    }
}

fn ci_cross_validation(log: &mut Log) -> regime_core::Result<()> {
    // every labelled DAG is a relabelling of one whose edges follow the index
    // order, and the queries range over all labellings, so this covers all DAGs
    let mut queries = 0usize;
    for n in 1..=5usize {
        let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
        for bits in 0..1u64 << pairs.len() {
            let edges: Vec<(String, String)> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| bits >> b & 1 == 1)
                .map(|(_, &(i, j))| (names[i].clone(), names[j].clone()))
                .collect();
            let d = InfluenceDiagram::new(&names, &edges)?;
            all_queries(n, |x, y, z| {
                queries += 1;
                let a = d.d_separated(x, y, z).map(|s| s.separated);
                let b = d.moral_separated(x, y, z);
                if a.as_ref().ok() != b.as_ref().ok() || a.is_err() {
                    log.failures
                        .push(format!("{x:?} _||_ {y:?} | {z:?} with edges {edges:?}"));
                }
            });
        }
    }
    log.fact(format!(
        "d-separation and moralization agree on {queries} queries over all DAGs with up to 5 nodes"
    ));

    let mut implied = 0;
    for (m, d) in [("appb", "appb"), ("cts(3)", "fig5"), ("hiv-toy", "fig3")] {
        let model = fixture(m)?.parse_model()?.unwrap();
        let dag = fixture(d)?.parse_diagram()?.unwrap();
        let check = verify_pair(&model, &dag)?;
        implied += check.statements;
        for f in &check.failures {
            log.failures
                .push(format!("{m} with {d}: implied `{f}` fails numerically"));
        }
    }
    log.fact(format!(
        "{implied} implied statements verified numerically on fixture pairs"
    ));

    let mut models: Vec<RegimeModel> = ["discretesi", "appb", "hiv-toy", "xor"]
        .iter()
        .map(|n| model(n))
        .collect();
    models.push(fixture("cts(3)")?.parse_model()?.unwrap());
    let small = GenConfig {
        max_stages: 2,
        max_domain: 3,
        ..GenConfig::default()
    };
    for seed in 0..60 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc1 ^ seed);
        let p = [Profile::Unrestricted, Profile::Randomized, Profile::Irrelevant][seed as usize % 3];
        models.push(random_model(&mut rng, p, &small));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut compared = 0;
    for m in &models {
        let priors: Vec<_> = (0..3).map(|_| random_prior(&mut rng, m)).collect();
        let mixtures = priors
            .iter()
            .map(|p| Ok(mixture_joint(m, p)?.joint))
            .collect::<regime_core::Result<Vec<_>>>()?;
        let ids = m.regime_ids();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let names: Vec<String> = m.variables.iter().map(|v| v.name.clone()).collect();
        for _ in 0..8 {
            let mut pool = names.clone();
            pool.shuffle(&mut rng);
            let nx = rng.gen_range(1..=2.min(pool.len()));
            let nz = rng.gen_range(0..=(pool.len() - nx).min(3));
            let (x, z) = (pool[..nx].to_vec(), pool[nx..nx + nz].to_vec());
            let mut stmts = vec![CiStatement::new(
                x.clone(),
                Vec::<String>::new(),
                z.clone(),
                true,
                false,
            )?];
            if nx + nz < pool.len() {
                stmts.push(CiStatement::new(x, vec![pool[nx + nz].clone()], z, false, true)?);
            }
            for stmt in stmts {
                let extended = check_extended_ci(m, &refs, &stmt)?.holds;
                for mix in &mixtures {
                    compared += 1;
                    if check_stochastic_ci(mix, &stmt)?.holds != extended {
                        log.failures
                            .push(format!("`{stmt}`: extended and mixture verdicts differ"));
                    }
                }
            }
        }
    }
    log.fact(format!(
        "extended and mixture verdicts agree on {compared} comparisons ({} models, 3 positive priors each)",
        models.len()
    ));
    Ok(())
}

fn semigraphoid(log: &mut Log) -> regime_core::Result<()> {
    let ground: Vec<String> = ["L1", "U1", "A1", "L2", "sigma"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    // extended stability, then actions ignore U given observed history in every regime
    let randomization = parse_premises("L1 U1 _||_ sigma\nL2 _||_ sigma | L1 U1 A1\nA1 _||_ U1 | L1 sigma\n")?;
    // extended stability, then the next observable ignores past U
    let irrelevance = parse_premises("L1 U1 _||_ sigma\nL2 _||_ sigma | L1 U1 A1\nL2 _||_ U1 | L1 A1 sigma\n")?;
    let targets = [parse_ci("L1 _||_ sigma")?, parse_ci("L2 _||_ sigma | L1 A1")?];

    let start = Instant::now();
    for t in &targets {
        let d = derivable(&randomization, t, Some(&ground))?;
        log.expect(&format!("`{t}` from the randomization premises"), true, d.derivable);
    }
    let t1 = start.elapsed();
    let start = Instant::now();
    let d = derivable(&irrelevance, &targets[1], Some(&ground))?;
    log.expect(
        &format!("`{}` from the irrelevance premises", targets[1]),
        false,
        d.derivable,
    );
    let t2 = start.elapsed();
    for (what, t) in [("derivation", t1), ("non-derivation", t2)] {
        if t > Duration::from_secs(10) {
            log.failures
                .push(format!("{what} took {:.3} s, budget 10 s", t.as_secs_f64()));
        }
    }
    log.fact(format!(
        "derivable in {:.3} s; closure of the irrelevance premises ({} statements) lacks it, {:.3} s",
        t1.as_secs_f64(),
        d.closure_size,
        t2.as_secs_f64()
    ));
    Ok(())
}

fn optimization(log: &mut Log) -> regime_core::Result<()> {
    let m = model("xor");
    let r = condition_report(&m, "s")?;
    log.expect("simple stability on xor", Some(true), holds(&r, "simple-stability"));
    log.expect("positivity on xor", Some(true), holds(&r, "positivity"));
    let k = OutcomeFunctional::indicator(&m, "1")?;
    let oracle = optimize(&m, &k, Mode::Oracle)?;
    let transfer = optimize(&m, &k, Mode::Transfer)?;
    log.expect("selected strategy", oracle.best.id.clone(), transfer.best.id.clone());
    log.expect(
        "optimal loss",
        oracle.best.consequence.clone(),
        transfer.best.consequence.clone(),
    );
    for (a, b) in oracle.table.iter().zip(&transfer.table) {
        log.expect(&format!("{} transfer safety", b.id), Safety::Verified, b.safety);
        log.expect(&format!("{} value", a.id), a.consequence.clone(), b.consequence.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut scalings = vec![(int(1), zero()), (int(3), int(-7)), (ratio(1, 1000), int(5))];
    for _ in 0..20 {
        let a = random_rational(&mut rng);
        let a = if a > zero() { a } else { ratio(1, 100) - a };
        scalings.push((a, random_rational(&mut rng) - random_rational(&mut rng)));
    }
    for mode in [Mode::Oracle, Mode::Transfer] {
        for (a, b) in &scalings {
            let scaled = optimize(&m, &k.affine(a, b), mode)?;
            log.expect(
                &format!("{mode:?} choice under {}·k + {}", fmt_exact(a), fmt_exact(b)),
                oracle.best.id.clone(),
                scaled.best.id,
            );
        }
    }
    log.fact(format!(
        "both modes select {} with loss {}; {} affine rescalings per mode keep the choice",
        oracle.best.id,
        oracle.best.consequence.as_ref().map_or("-".to_string(), fmt_exact),
        scalings.len()
    ));
    Ok(())
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as --nocapture; none apply here
    let s = |n| Some(Duration::from_secs(n));
    let outcomes = [
        criterion(
            1,
            "discrete table reproduction (discretesi)",
            "exact",
            s(1),
            discrete_table,
        ),
        criterion(
            2,
            "positivity counterexample (appb)",
            "exact",
            s(1),
            positivity_counterexample,
        ),
        criterion(
            3,
            "discretized continuous counterexample, N in {2, 10, 100}",
            "exact",
            None,
            discretized_counterexample,
        ),
        criterion(
            4,
            "G-recursion equals brute force, null-history perturbation",
            "exact",
            None,
            recursion_vs_brute_force,
        ),
        criterion(
            5,
            "randomization premises imply simple stability",
            "exact",
            None,
            |log| {
                implication_suite(
                    log,
                    Profile::Randomized,
                    &["extended-stability", "sequential-randomization(o)", "control(s)"],
                    false,
                )
            },
        ),
        criterion(
            6,
            "discrete irrelevance premises imply simple stability",
            "exact",
            None,
            |log| {
                implication_suite(
                    log,
                    Profile::Irrelevant,
                    &["extended-stability", "control(s)", "sequential-irrelevance(s)"],
                    true,
                )
            },
        ),
        criterion(7, "CI machinery cross-validation", "exact", None, ci_cross_validation),
        criterion(
            8,
            "semi-graphoid derivation and non-derivation",
            "exact",
            None,
            semigraphoid,
        ),
        criterion(9, "optimization sanity (xor)", "exact", None, optimization),
    ];
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if outcomes.iter().any(|o| o.violation) {
        ExitCode::from(4)
    } else if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
