use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use firsterr::config::{self, CorpusConfig, Settings};
use firsterr::corpus::{generate_corpus, verify_records, CorpusStats};
use firsterr::evalio::{self, JudgeSpec};
use firsterr::realize::{leak_lint, realize_templated, templated_context, NlMode};
use firsterr::record::{read_file, to_line, NlRecord, PoolRecord, Record, ScoredRecord};
use firsterr::translator::{self, ExternalOptions, Recorder, ReplayTranslator, TranslatorClient};
use firsterr::Error;
use firsterr_core::chain::verify_chain;
use firsterr_core::eval::evaluate;
use firsterr_core::fixtures;
use firsterr_core::inject::verify_first_error;
use firsterr_core::rng::stage_seed;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "firsterr", version, about = "First-error counterfactual corpora: synthesize, verify, realize, evaluate")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a corpus of verified instances.
    Synth(SynthArgs),
    /// Re-verify every instance of a corpus.
    Verify(VerifyArgs),
    /// Add natural-language text to a corpus.
    Realize(RealizeArgs),
    /// Score a judge, or Best-of-K pools.
    Eval(EvalArgs),
    /// Per-type counts and shares of a corpus.
    Stats(StatsArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Flat key = value settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    count: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Preset (`default`, `uniform`) or a file of `error_type = weight` lines.
    #[arg(long)]
    weights: Option<String>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Stats report path; defaults to `<out>.stats`.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct VerifyArgs {
    path: Option<PathBuf>,
    /// Also verify the built-in reference instances.
    #[arg(long)]
    fixtures: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct RealizeArgs {
    path: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `templated` or `external`.
    #[arg(long, default_value = "templated")]
    mode: String,
    /// `clean` or `annotated`.
    #[arg(long, default_value = "clean")]
    nl_mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Answer external requests from this transcript instead of the network.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Save every external exchange to this transcript.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Lint report path; defaults to `<out>.lint`.
    #[arg(long)]
    lint_report: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Corpus file.
    corpus: Option<PathBuf>,
    /// Scored trajectories without symbolic content.
    #[arg(long)]
    scored: Option<PathBuf>,
    /// Candidate pools for Best-of-K, Majority@K and Oracle@K.
    #[arg(long)]
    pools: Option<PathBuf>,
    /// `oracle`, `constant:<score>` or `random:<seed>`.
    #[arg(long, default_value = "oracle")]
    judge: String,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Count correct trajectories too, expecting no error on them.
    #[arg(long)]
    include_correct: bool,
    /// Machine-readable report path.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct StatsArgs {
    path: PathBuf,
}

/// Exit statuses: 0 success, 1 verification or lint failure, 2 usage, 3
/// exhaustion.
enum Failure {
    Check(String),
    Usage(String),
    Exhausted(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Exhausted { .. } => Failure::Exhausted(e.to_string()),
            Error::Config(_) | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_atomic(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), Error>) -> Result<(), Error> {
    let tmp = path.with_extension("partial");
    let res = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
        Ok(())
    })();
    match res {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn synth(a: SynthArgs) -> Outcome {
    let mut settings = match &a.config {
        Some(p) => config::read_kv(p)?,
        None => Settings::new(),
    };
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        settings.insert(k.trim().into(), v.trim().into());
    }
    if let Some(c) = a.count {
        settings.insert("count".into(), c.to_string());
    }
    if let Some(s) = a.seed {
        settings.insert("seed".into(), s.to_string());
    }
    if let Some(w) = &a.weights {
        settings.insert("weights".into(), w.clone());
    }
    let cfg = CorpusConfig::from_settings(&settings)?;
    let digest = cfg.digest();
    let mut stats = None;
    write_atomic(&a.out, |w| {
        stats = Some(generate_corpus(&cfg, a.workers, w)?);
        Ok(())
    })?;
    let stats = stats.expect("generated");
    let report = format!("{}{}", config::render_kv(&cfg.effective()), stats.render_kv());
    fs::write(a.stats.unwrap_or_else(|| with_suffix(&a.out, ".stats")), report).map_err(Error::from)?;
    eprintln!("wrote {} instances to {} (config digest {digest})", stats.total, a.out.display());
    print!("{}", stats.render_table());
    Ok(())
}

fn verify(a: VerifyArgs) -> Outcome {
    if a.path.is_none() && !a.fixtures {
        return Err(usage("give a corpus path or --fixtures"));
    }
    let mut failed = 0usize;
    if a.fixtures {
        for (name, inst) in [("example_a", fixtures::example_a()), ("example_b", fixtures::example_b())] {
            let mut f = verify_chain(&inst.correct).failures;
            f.extend(verify_first_error(&inst).failures);
            if f.is_empty() {
                println!("{name}: ok (k={}, {})", inst.k(), inst.error_type());
            } else {
                failed += 1;
                println!("{name}: FAIL {}", f.join("; "));
            }
        }
    }
    if let Some(p) = &a.path {
        let records: Vec<Record> = read_file(p)?;
        let fails = verify_records(&records, a.workers)?;
        for (id, f) in &fails {
            println!("{id}: FAIL {}", f.join("; "));
        }
        println!("verified {} records, {} failed", records.len(), fails.len());
        failed += fails.len();
    }
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} instance(s) failed verification")));
    }
    Ok(())
}

fn realize(a: RealizeArgs) -> Outcome {
    let nl_mode: NlMode = a.nl_mode.parse()?;
    let records: Vec<Record> = read_file(&a.path)?;
    let mut settings = Settings::new();
    settings.insert("mode".into(), a.mode.clone());
    settings.insert("nl_mode".into(), nl_mode.name().into());
    settings.insert("seed".into(), a.seed.to_string());
    let digest = config::digest(&settings);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers.max(1))
        .build()
        .map_err(|e| usage(e.to_string()))?;
    let seed_for = |r: &Record| stage_seed(a.seed, &r.id);
    let realized: Vec<Result<NlRecord, Error>> = match a.mode.as_str() {
        "templated" => pool.install(|| {
            records.par_iter().map(|r| realize_templated(&r.to_instance()?, nl_mode, seed_for(r))).collect()
        }),
        "external" => {
            let base: Box<dyn TranslatorClient> = match &a.transcript {
                Some(t) => Box::new(ReplayTranslator::from_file(t)?),
                None => translator::client_from_env()?,
            };
            let client = Recorder::new(base);
            let opts = ExternalOptions { nl_mode, ..ExternalOptions::default() };
            // Sequential, so a transcript replays in recording order; an
            // HTTP client bounds its own in-flight requests.
            let out = records
                .iter()
                .map(|r| {
                    let name = templated_context(seed_for(r)).name;
                    translator::realize_external(&r.to_instance()?, &name, &client, opts)
                })
                .collect();
            if let Some(path) = &a.record {
                translator::write_transcript(path, &client.transcript())?;
            }
            out
        }
        other => return Err(usage(format!("unknown mode `{other}` (templated, external)"))),
    };

    let mut lint = format!("{}digest = {digest}\n", config::render_kv(&settings));
    let mut violations = 0usize;
    let mut out = Vec::with_capacity(records.len());
    for (mut r, nl) in records.into_iter().zip(realized) {
        let nl = nl?;
        for v in leak_lint(&nl, r.k) {
            violations += 1;
            lint.push_str(&format!("violation = {} step {} `{}`\n", r.id, v.step, v.term));
        }
        r.nl = Some(nl);
        r.extra.insert("nl_digest".into(), digest.clone().into());
        out.push(r);
    }
    lint.push_str(&format!("violations = {violations}\n"));
    write_atomic(&a.out, |w| {
        for r in &out {
            writeln!(w, "{}", to_line(r))?;
        }
        Ok(())
    })?;
    fs::write(a.lint_report.unwrap_or_else(|| with_suffix(&a.out, ".lint")), &lint).map_err(Error::from)?;
    println!("realized {} records, {violations} lint violation(s)", out.len());
    if violations > 0 && nl_mode == NlMode::Clean {
        return Err(Failure::Check(format!("{violations} label-leaking term(s) in clean text")));
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Outcome {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(usage("--threshold must lie in [0, 1]"));
    }
    let spec: JudgeSpec = a.judge.parse()?;
    let mut header = Settings::new();
    header.insert("schema_version".into(), firsterr::record::SCHEMA_VERSION.to_string());
    header.insert("threshold".into(), a.threshold.to_string());
    header.insert("erroneous_only".into(), (!a.include_correct).to_string());
    let mut json = serde_json::Map::new();
    let items = match (&a.corpus, &a.scored) {
        (Some(_), Some(_)) => return Err(usage("give either a corpus or --scored, not both")),
        (Some(p), None) => {
            header.insert("judge".into(), spec.to_string());
            let records: Vec<Record> = read_file(p)?;
            if let Some(d) = records.first().map(|r| r.config_digest.clone()) {
                header.insert("corpus_digest".into(), d);
            }
            Some(evalio::corpus_items(&records, spec, !a.include_correct, a.workers)?)
        }
        (None, Some(p)) => {
            header.insert("judge".into(), "scored".into());
            let records: Vec<ScoredRecord> = read_file(p)?;
            Some(evalio::scored_items(&records, !a.include_correct)?)
        }
        (None, None) => None,
    };
    if items.is_none() && a.pools.is_none() {
        return Err(usage("nothing to evaluate: give a corpus, --scored or --pools"));
    }
    header.insert("digest".into(), config::digest(&header));
    if let Some(items) = items {
        let rep = evaluate(&items, a.threshold).map_err(Error::from)?;
        print!("{}", evalio::render_eval(&rep, &header));
        json.insert("steps".into(), evalio::eval_json(&rep, &header));
    }
    if let Some(p) = &a.pools {
        let records: Vec<PoolRecord> = read_file(p)?;
        let rep = evalio::pool_report(&records)?;
        print!("{}", evalio::render_selection(&rep, &header));
        json.insert("selection".into(), evalio::selection_json(&rep, &header));
    }
    if let Some(p) = &a.json {
        fs::write(p, serde_json::Value::Object(json).to_string() + "\n").map_err(Error::from)?;
    }
    Ok(())
}

fn stats(a: StatsArgs) -> Outcome {
    let records: Vec<Record> = read_file(&a.path)?;
    let s = CorpusStats::from_records(&records)?;
    print!("{}", s.render_table());
    print!("{}", s.render_kv());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = firsterr_core::prover::verify_catalog() {
        eprintln!("inference pattern catalog is unsound: {e}");
        return ExitCode::from(1);
    }
    let res = match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Realize(a) => realize(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Stats(a) => stats(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Exhausted(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
