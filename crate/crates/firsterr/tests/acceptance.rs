//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use firsterr::config::CorpusConfig;
use firsterr::corpus::{generate_records, verify_records, CorpusStats};
use firsterr::evalio::{corpus_items, JudgeSpec};
use firsterr::realize::{leak_lint, realize_templated, NlMode};
use firsterr::record::{read_file, write_jsonl, Record};
use firsterr_core::chain::verify_chain;
use firsterr_core::eval::{bestofk_select, evaluate, majority_at_k, oracle_at_k, Candidate, CandidatePool};
use firsterr_core::fixtures;
use firsterr_core::inject::{verify_first_error, ErrorType, Instance};
use firsterr_core::labels::{label_steps, Label, LabelStrategy};
use firsterr_core::logic::{FactId, Literal, Rule, RuleTemplate, State};
use firsterr_core::prover::{entails, propagate, Backbone, EntailmentStatus, Theory};
use firsterr_core::rng::{rng_from_seed, stage_seed};
use rand::seq::SliceRandom;
use rand::Rng;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus(count: u64, seed: u64) -> CorpusConfig {
    CorpusConfig { count, seed, ..CorpusConfig::default() }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn closed_loop(records: &[Record], elapsed: Duration) -> Check {
    let t = Instant::now();
    let items = corpus_items(records, JudgeSpec::Oracle, false, workers()).map_err(|e| e.to_string())?;
    let rep = evaluate(&items, 0.5).map_err(|e| e.to_string())?;
    let total = elapsed + t.elapsed();
    ensure(rep.first_error_acc == 1.0 && rep.all_step_acc == 1.0, || {
        format!("first_error {} all_step {}", rep.first_error_acc, rep.all_step_acc)
    })?;
    ensure(total < Duration::from_secs(60), || format!("took {total:?}"))?;
    Ok(format!(
        "{} trajectories, first_error 1.000, all_step 1.000, {:.1}s",
        rep.n_instances,
        total.as_secs_f64()
    ))
}

fn reverify(records: &[Record]) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("corpus.jsonl");
    let f = std::fs::File::create(&path).map_err(|e| e.to_string())?;
    write_jsonl(f, records).map_err(|e| e.to_string())?;
    let back: Vec<Record> = read_file(&path).map_err(|e| e.to_string())?;
    ensure(back == records, || "serialized corpus does not round-trip".into())?;
    let fails = verify_records(&back, workers()).map_err(|e| e.to_string())?;
    ensure(fails.is_empty(), || format!("{} failures, first {:?}", fails.len(), fails[0]))?;
    Ok(format!("{} / {} records verified", back.len(), back.len()))
}

/// Published final-set counts, out of 20,000.
const PUBLISHED: [(&str, f64); 11] = [
    ("xor_as_equiv", 3610.0),
    ("xor_as_or", 3609.0),
    ("or_and_confusion", 3598.0),
    ("drop_condition", 1934.0),
    ("implication_misuse", 1466.0),
    ("converse_error", 1299.0),
    ("redundant_step", 1185.0),
    ("circular_reference", 946.0),
    ("partial_evaluation", 913.0),
    ("missing_prerequisite", 869.0),
    ("vacuous_truth_error", 571.0),
];

fn distribution() -> Check {
    let t = Instant::now();
    let (records, _) = generate_records(&corpus(20_000, 2024), workers()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.error_type.as_str()).or_insert(0) += 1;
    }
    let known: Vec<&str> = PUBLISHED.iter().map(|(n, _)| *n).collect();
    ensure(counts.keys().all(|k| known.contains(k)), || format!("unexpected types {counts:?}"))?;
    let mut worst = (0.0f64, "");
    for (name, n) in PUBLISHED {
        let got = 100.0 * *counts.get(name).unwrap_or(&0) as f64 / records.len() as f64;
        let want = 100.0 * n / 20_000.0;
        if (got - want).abs() > worst.0 {
            worst = ((got - want).abs(), name);
        }
        ensure((got - want).abs() <= 1.5, || format!("{name}: {got:.2}% vs published {want:.2}%"))?;
    }
    let budget = if workers() >= 8 { 300 } else { 1200 };
    ensure(elapsed < Duration::from_secs(budget), || format!("took {elapsed:?} with {} workers", workers()))?;
    Ok(format!(
        "max deviation {:.2} pt ({}), {:.1}s with {} worker(s)",
        worst.0,
        worst.1,
        elapsed.as_secs_f64(),
        workers()
    ))
}

fn step_counts(records: &[Record]) -> Check {
    let bad: Vec<&str> = records
        .iter()
        .filter(|r| !(7..=10).contains(&r.correct.len()) || !(7..=10).contains(&r.erroneous.len()))
        .map(|r| r.id.as_str())
        .collect();
    ensure(bad.is_empty(), || format!("{} out of range, e.g. {}", bad.len(), bad[0]))?;
    let stats = CorpusStats::from_records(records).map_err(|e| e.to_string())?;
    let (c, e) = stats.mean_steps();
    Ok(format!("{} / {} in 7..=10 (mean {c:.2} correct, {e:.2} erroneous)", records.len(), records.len()))
}

fn truth(t: RuleTemplate, v: &[bool]) -> bool {
    match t {
        RuleTemplate::Impl => !v[0] || v[1],
        RuleTemplate::AndAnte => !(v[0] && v[1]) || v[2],
        RuleTemplate::AndCons => !v[0] || (v[1] && v[2]),
        RuleTemplate::OrAnte => !(v[0] || v[1]) || v[2],
        RuleTemplate::OrCons => !v[0] || v[1] || v[2],
        RuleTemplate::XorAnte => (v[0] == v[1]) || v[2],
        RuleTemplate::XorBare => v[0] != v[1],
    }
}

fn table_entails(rules: &[Rule], state: &State, q: Literal, n: usize) -> EntailmentStatus {
    let mut any = false;
    for bits in 0u32..(1 << n) {
        let val = |f: FactId| bits >> f.0 & 1 == 1;
        if state.literals().any(|l| val(l.fact) != l.value) {
            continue;
        }
        if !rules.iter().all(|r| truth(r.template(), &r.slots().iter().map(|f| val(*f)).collect::<Vec<_>>())) {
            continue;
        }
        any = true;
        if val(q.fact) != q.value {
            return EntailmentStatus::NotEntailed;
        }
    }
    if any {
        EntailmentStatus::Entailed
    } else {
        EntailmentStatus::Inconsistent
    }
}

fn random_theory(rng: &mut impl Rng) -> (Vec<Rule>, State, usize) {
    let n = rng.gen_range(3..=10);
    let facts: Vec<FactId> = (0..n as u32).map(FactId).collect();
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(0..=8) {
        let t = *RuleTemplate::ALL.choose(rng).unwrap();
        let slots: Vec<FactId> = facts.choose_multiple(rng, t.arity()).copied().collect();
        rules.push(Rule::instantiate(t, &slots).unwrap());
    }
    let mut s = State::new();
    for f in &facts {
        if rng.gen_bool(0.25) {
            s.assign(Literal::new(*f, rng.gen_bool(0.5))).unwrap();
        }
    }
    (rules, s, n)
}

fn prover_soundness() -> Check {
    let t = Instant::now();
    let mut rng = rng_from_seed(0xac1);
    let mut derived = 0;
    let mut inconsistent = 0;
    for i in 0..500 {
        let (rules, s, n) = random_theory(&mut rng);
        let th = Theory::with_facts(rules.clone(), (0..n as u32).map(FactId)).map_err(|e| e.to_string())?;
        let bb = Backbone::compute(&th, &s).map_err(|e| e.to_string())?;
        inconsistent += usize::from(!bb.is_consistent());
        match propagate(&th, &s) {
            Ok(out) => {
                // An inconsistent theory entails every literal.
                for lit in out.literals() {
                    let got = entails(&th, &s, lit).map_err(|e| e.to_string())?.status;
                    ensure(got != EntailmentStatus::NotEntailed, || format!("theory {i}: {lit} not entailed"))?;
                    let want = table_entails(&rules, &s, lit, n);
                    ensure(want != EntailmentStatus::NotEntailed, || format!("theory {i}: {lit} fails the truth table"))?;
                    derived += 1;
                }
            }
            Err(_) => ensure(!bb.is_consistent(), || format!("theory {i}: propagation contradicted a consistent state"))?,
        }
    }
    let mut rng = rng_from_seed(0xac2);
    for i in 0..5000 {
        let (rules, s, n) = random_theory(&mut rng);
        let th = Theory::with_facts(rules.clone(), (0..n as u32).map(FactId)).map_err(|e| e.to_string())?;
        let q = Literal::new(FactId(rng.gen_range(0..n as u32)), rng.gen_bool(0.5));
        let got = entails(&th, &s, q).map_err(|e| e.to_string())?.status;
        let want = table_entails(&rules, &s, q, n);
        ensure(got == want, || format!("query {i}: {got:?} vs truth table {want:?}"))?;
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "500 theories ({inconsistent} inconsistent, {derived} propagated literals entailed), 5000 queries agree, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn random_pool(rng: &mut impl Rng) -> CandidatePool {
    let n = rng.gen_range(1..=8);
    CandidatePool {
        candidates: (0..n)
            .map(|_| Candidate {
                scores: (0..rng.gen_range(0..6)).map(|_| f64::from(rng.gen_range(0u8..=10)) / 10.0).collect(),
                answer: format!("a{}", rng.gen_range(0..4)),
                correct: rng.gen_bool(0.4),
            })
            .collect(),
    }
}

fn brute_select(pool: &CandidatePool) -> usize {
    let score = |c: &Candidate| c.scores.iter().copied().fold(1.0f64, f64::min);
    let n = pool.candidates.len();
    (0..n)
        .find(|&i| {
            (0..n).all(|j| {
                let (a, b) = (score(&pool.candidates[i]), score(&pool.candidates[j]));
                a > b || (a == b && i <= j)
            })
        })
        .unwrap()
}

fn brute_majority(pool: &CandidatePool) -> &str {
    let votes = |a: &str| pool.candidates.iter().filter(|c| c.answer == a).count();
    let top = pool.candidates.iter().map(|c| votes(&c.answer)).max().unwrap();
    &pool.candidates.iter().find(|c| votes(&c.answer) == top).unwrap().answer
}

fn bestofk() -> Check {
    let mut rng = rng_from_seed(0xb0c);
    for i in 0..10_000 {
        let pool = random_pool(&mut rng);
        let sel = bestofk_select(&pool).map_err(|e| e.to_string())?;
        ensure(sel == brute_select(&pool), || format!("pool {i}: selected {sel}"))?;
        let maj = majority_at_k(&pool).map_err(|e| e.to_string())?;
        ensure(maj == brute_majority(&pool), || format!("pool {i}: majority {maj}"))?;
        let orc = oracle_at_k(&pool).map_err(|e| e.to_string())?;
        ensure(orc == pool.candidates.iter().any(|c| c.correct), || format!("pool {i}: oracle {orc}"))?;
    }
    for i in 0..1000 {
        let pool = random_pool(&mut rng);
        let mut warped = pool.clone();
        let p = rng.gen_range(0.2..5.0);
        for c in &mut warped.candidates {
            for s in &mut c.scores {
                *s = s.powf(p);
            }
        }
        ensure(bestofk_select(&pool).unwrap() == bestofk_select(&warped).unwrap(), || {
            format!("rescaled pool {i} changed selection")
        })?;
    }
    Ok("10000 pools match brute force, 1000 rescaled pools keep their selection".into())
}

fn expected_labels(n: usize, k: usize) -> Vec<Label> {
    let mut v = vec![Label::Valid; n];
    for l in v.iter_mut().skip(k - 1) {
        *l = Label::Invalid;
    }
    v
}

fn golden_fixture(name: &str, inst: &Instance, k: usize, ty: ErrorType) -> Result<(), String> {
    let chain = verify_chain(&inst.correct);
    ensure(chain.is_valid(), || format!("{name}: {:?}", chain.failures))?;
    let fe = verify_first_error(inst);
    ensure(fe.failures.is_empty(), || format!("{name}: {:?}", fe.failures))?;
    ensure(inst.k() == k && inst.error_type() == ty, || format!("{name}: k={} {}", inst.k(), inst.error_type()))?;
    let labels = label_steps(inst, LabelStrategy::AllAfterError);
    ensure(labels.correct == vec![Label::Valid; inst.correct.steps.len()], || format!("{name}: correct labels"))?;
    ensure(labels.erroneous == expected_labels(inst.erroneous.steps.len(), k), || format!("{name}: erroneous labels"))
}

fn golden() -> Check {
    golden_fixture("example_a", &fixtures::example_a(), 4, ErrorType::MissingPrerequisite)?;
    golden_fixture("example_b", &fixtures::example_b(), 7, ErrorType::XorAsEquiv)?;
    Ok("example_a k=4 missing_prerequisite, example_b k=7 xor_as_equiv".into())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (run, w) in ["1", "8", "1", "8"].iter().enumerate() {
        let out = dir.path().join(format!("run{run}.jsonl"));
        let st = Command::new(env!("CARGO_BIN_EXE_firsterr"))
            .args(["synth", "--count", "1000", "--seed", "7", "--workers", w, "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(st.status.success(), || String::from_utf8_lossy(&st.stderr).into_owned())?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || "corpora differ".into())?;
    Ok(format!("4 runs (workers 1, 8, 1, 8), {} identical bytes each", outputs[0].len()))
}

fn lint(records: &[Record]) -> Check {
    let mut violations = Vec::new();
    let mut steps = 0;
    for r in records {
        let inst = r.to_instance().map_err(|e| e.to_string())?;
        let nl = realize_templated(&inst, NlMode::Clean, stage_seed(0, &r.id)).map_err(|e| e.to_string())?;
        steps += nl.erroneous_steps.len() + 1 - r.k;
        violations.extend(leak_lint(&nl, r.k).into_iter().map(|v| (r.id.clone(), v)));
    }
    ensure(violations.is_empty(), || format!("{} violations, first {:?}", violations.len(), violations[0]))?;
    Ok(format!("{} records, {steps} steps at or after k, 0 violations", records.len()))
}

fn main() -> ExitCode {
    let t = Instant::now();
    let generated = generate_records(&corpus(1000, 7), workers());
    let gen_time = t.elapsed();
    let records = match generated {
        Ok((r, _)) => Ok(r),
        Err(e) => Err(e.to_string()),
    };
    let records = &records;
    let with = |f: fn(&[Record]) -> Check| move || records.as_ref().map_err(Clone::clone).and_then(|r| f(r));

    let criteria: Vec<Criterion> = vec![
        ("closed-loop oracle judge", Box::new(move || records.as_ref().map_err(Clone::clone).and_then(|r| closed_loop(r, gen_time)))),
        ("first-error re-verification", Box::new(with(reverify))),
        ("error-type distribution", Box::new(distribution)),
        ("step-count conformance", Box::new(with(step_counts))),
        ("prover soundness", Box::new(prover_soundness)),
        ("best-of-k mechanics", Box::new(bestofk)),
        ("golden fixtures", Box::new(golden)),
        ("determinism", Box::new(determinism)),
        ("leak lint", Box::new(with(lint))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
