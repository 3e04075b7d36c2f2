use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use trex_core::code::{self, CodeConfig, CodeParams, DESK_C_FIELD};
use trex_core::design::{self, DesignFamily};
use trex_core::reconstruct::{self, Budgets};
use trex_core::trevisan::{self, ExtractorParams, Plan};
use trex_core::verify::{self, SearchMode, SeededExtractor};
use trex_core::{gf2e, rac, BitString, Strategy};

/// Trevisan's extractor with desk-scale verification tools.
#[derive(Parser, Debug)]
#[command(name = "trex", version, about)]
struct Cli {
    /// Seed for every randomized step (decimal or 0x-prefixed hex).
    #[arg(long, global = true, default_value = "0", value_parser = parse_u64)]
    rng_seed: u64,
    /// Worker threads; 1 runs every loop sequentially.
    #[arg(long, global = true, env = "TREX_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Choose extractor parameters; exits 2 when none exist.
    Plan(PlanArgs),
    /// Build a design family, or check one read from a file.
    Design(DesignArgs),
    /// Write the full codeword of a message.
    Encode(EncodeArgs),
    /// Print one codeword bit.
    EncodeBit(EncodeBitArgs),
    /// Apply the extractor to a raw source file.
    Extract(ExtractArgs),
    /// Worst flat source and storage adversaries for a small extractor.
    Verify(VerifyArgs),
    /// Run the reconstruction game against the exact-match distinguisher.
    Reconstruct(ReconstructArgs),
    /// Random-access-code experiments.
    Rac(RacArgs),
    /// Irreducible moduli used for GF(2^s).
    FieldTable,
    /// Time sequential against parallel execution.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    b: usize,
    #[arg(long)]
    eps: f64,
    /// Exponent c in the output length (k/b)^{1/c}.
    #[arg(long = "c", default_value_t = trevisan::DEFAULT_C_EXPONENT)]
    c_exponent: f64,
    #[arg(long, default_value_t = 1.0)]
    mult: f64,
    /// Field-size constant: a number, `paper` (1) or `desk` (1/1024).
    #[arg(long, default_value = "paper", value_parser = parse_c_field)]
    c_field: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[arg(long, required_unless_present = "check")]
    m: Option<usize>,
    #[arg(long, required_unless_present = "check")]
    l: Option<usize>,
    /// Intersection bound; defaults to max(1, ⌈log2 m⌉).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verify a design JSON file instead of building one.
    #[arg(long, conflicts_with_all = ["m", "l", "r"])]
    check: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MessageArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value = "paper", value_parser = parse_c_field)]
    c_field: f64,
    /// Raw message file, bits LSB-first within bytes.
    #[arg(long = "in", conflicts_with = "bits")]
    input: Option<PathBuf>,
    /// Message as a 0/1 string, index 0 first.
    #[arg(long)]
    bits: Option<String>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    msg: MessageArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EncodeBitArgs {
    #[command(flatten)]
    msg: MessageArgs,
    #[arg(long)]
    j: u64,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Raw source file; its first n bits are used.
    #[arg(long = "in")]
    input: PathBuf,
    /// Seed as hex, LSB-first bytes.
    #[arg(long, required_unless_present = "seed_file")]
    seed: Option<String>,
    /// Raw seed file.
    #[arg(long, conflicts_with = "seed")]
    seed_file: Option<PathBuf>,
    /// Output of `trex plan`.
    #[arg(long)]
    params: PathBuf,
    /// Output of `trex design`, replacing the planned design.
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ExtractorKind {
    Trevisan,
    Hash,
    Bitselect,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Exhaustive,
    Sampled,
    Auto,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    extractor: ExtractorKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Storage bits kept by the classical adversary.
    #[arg(long, default_value_t = 0)]
    b: u32,
    /// Output bits of the hash.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Extractor parameters for `trevisan`; planned from n otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 4.0)]
    mult: f64,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Extractor parameters; the n=16 toy instance by default.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    trials: u64,
    #[arg(long, default_value_t = 4096)]
    advantage_trials: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Experiment {
    Amplify,
    Regev,
    Avgcase,
}

#[derive(Args, Debug)]
struct RacArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Hash range for `regev`.
    #[arg(long, default_value_t = rac::DEFAULT_RANGE)]
    range: u64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 3)]
    reps: u32,
}

/// A failed run: exit code plus what to report.
enum Failure {
    Usage(anyhow::Error),
    Infeasible(Value),
    Check(Value),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<trex_core::Error>() {
            Some(trex_core::Error::Infeasible(reason)) => {
                Failure::Infeasible(json!({ "status": "infeasible", "reason": reason }))
            }
            _ => Failure::Usage(e),
        }
    }
}

impl From<trex_core::Error> for Failure {
    fn from(e: trex_core::Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

type Outcome = Result<Value, Failure>;

fn parse_u64(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_c_field(s: &str) -> Result<f64, String> {
    match s {
        "paper" => Ok(1.0),
        "desk" => Ok(DESK_C_FIELD),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0)
            .ok_or_else(|| format!("expected a positive number, `paper` or `desk`, got {s:?}")),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Parameters from a `plan` report or a bare parameter object.
fn read_params(path: &Path) -> Result<ExtractorParams, Failure> {
    let value: Value = read_json(path)?;
    let params = if value.get("status").is_some() {
        match serde_json::from_value::<Plan>(value).with_context(|| format!("parsing {}", path.display()))? {
            Plan::Feasible(p) => p,
            Plan::Infeasible(r) => return Err(Failure::Infeasible(to_value(&Plan::Infeasible(r)))),
        }
    } else {
        serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?
    };
    params.validate()?;
    Ok(params)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn toy_params() -> ExtractorParams {
    trevisan::plan_params_with(16, 16, 1, 0.7, 15.0, 10.0, &CodeConfig::desk())
        .ok()
        .and_then(Plan::feasible)
        .expect("toy instance is feasible")
}

fn plan(a: &PlanArgs) -> Outcome {
    let cfg = CodeConfig { c_field: a.c_field, ..CodeConfig::default() };
    let plan = trevisan::plan_params_with(a.n, a.k, a.b, a.eps, a.c_exponent, a.mult, &cfg)?;
    let value = to_value(&plan);
    if let Some(out) = &a.out {
        write_file(out, serde_json::to_string_pretty(&value).expect("json").as_bytes())?;
    }
    match plan {
        Plan::Feasible(_) => Ok(value),
        Plan::Infeasible(_) => Err(Failure::Infeasible(value)),
    }
}

fn design_cmd(a: &DesignArgs) -> Outcome {
    if let Some(path) = &a.check {
        let d: DesignFamily = read_json(path)?;
        let valid = design::verify_design(&d);
        let report = json!({ "valid": valid, "m": d.m(), "l": d.l, "r": d.r, "t": d.t });
        return if valid { Ok(report) } else { Err(Failure::Check(report)) };
    }
    let (m, l) = (a.m.expect("required"), a.l.expect("required"));
    let r = a.r.unwrap_or_else(|| design::default_intersection(m));
    let d = design::make_design(m, l, r)?;
    let value = to_value(&d);
    if let Some(out) = &a.out {
        write_file(out, serde_json::to_string(&value).expect("json").as_bytes())?;
    }
    Ok(value)
}

fn read_message(a: &MessageArgs) -> anyhow::Result<(BitString, CodeParams)> {
    let f = match (&a.input, &a.bits) {
        (Some(path), None) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            BitString::from_bytes_lsb(&bytes, a.n)?
        }
        (None, Some(bits)) => {
            let f = BitString::parse_binary(bits)?;
            if f.len() != a.n {
                bail!("--bits has {} bits, expected n={}", f.len(), a.n);
            }
            f
        }
        _ => bail!("give the message with --in FILE or --bits STRING"),
    };
    let cfg = CodeConfig { c_field: a.c_field, ..CodeConfig::default() };
    Ok((f, code::code_params_with(a.n, a.delta, &cfg)?))
}

fn encode(a: &EncodeArgs, strategy: Strategy) -> Outcome {
    let (f, p) = read_message(&a.msg)?;
    let word = code::encode_all_with(&f, &p, strategy)?;
    write_file(&a.out, &word.to_bytes_lsb())?;
    Ok(json!({ "params": p, "nbar": p.nbar, "weight": word.weight(), "out": a.out }))
}

fn encode_bit(a: &EncodeBitArgs) -> Outcome {
    let (f, p) = read_message(&a.msg)?;
    let bit = code::encode_bit(&f, &p, a.j)?;
    Ok(json!({ "params": p, "j": a.j, "bit": bit as u8 }))
}

fn extract(a: &ExtractArgs, strategy: Strategy) -> Outcome {
    let mut p = read_params(&a.params)?;
    if let Some(path) = &a.design {
        let d: DesignFamily = read_json(path)?;
        if d.m() != p.m || d.l != p.design.l {
            return Err(Failure::Usage(anyhow!(
                "design has m={}, l={} but the parameters need m={}, l={}",
                d.m(),
                d.l,
                p.m,
                p.design.l
            )));
        }
        p.t = d.t;
        p.design = d;
        p.validate()?;
    }
    let source = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let x = BitString::from_bytes_lsb(&source, p.n)?;
    let y = match (&a.seed, &a.seed_file) {
        (Some(hex), _) => BitString::from_hex(hex, p.t)?,
        (None, Some(path)) => {
            BitString::from_bytes_lsb(&fs::read(path).with_context(|| format!("reading {}", path.display()))?, p.t)?
        }
        (None, None) => unreachable!("clap requires a seed"),
    };
    let z = trevisan::Trevisan::new(&x, &p)?.eval_with(&y, strategy)?;
    if let Some(out) = &a.out {
        write_file(out, &z.to_bytes_lsb())?;
    }
    Ok(json!({ "n": p.n, "t": p.t, "m": p.m, "output": z.to_string(), "output_hex": z.to_hex() }))
}

fn verify_cmd(a: &VerifyArgs, seed: u64, strategy: Strategy) -> Outcome {
    let e: Box<dyn SeededExtractor> = match a.extractor {
        ExtractorKind::Bitselect => Box::new(verify::BitSelect::new(a.n)?),
        ExtractorKind::Hash => Box::new(verify::ToeplitzHash::new(a.n, a.m)?),
        ExtractorKind::Trevisan => {
            let p = match &a.params {
                Some(path) => read_params(path)?,
                None => {
                    match trevisan::plan_params_with(a.n, a.n, a.b.max(1) as usize, a.eps, 15.0, a.mult, &CodeConfig::desk())? {
                        Plan::Feasible(p) => p,
                        infeasible => return Err(Failure::Infeasible(to_value(&infeasible))),
                    }
                }
            };
            Box::new(verify::TrevisanExtractor::new(&p, strategy)?)
        }
    };
    let mode = match a.mode {
        ModeArg::Exhaustive => SearchMode::Exhaustive,
        ModeArg::Sampled => SearchMode::Sampled,
        ModeArg::Auto => SearchMode::Auto,
    };
    let worst = verify::worst_flat_source(e.as_ref(), a.k, mode, a.budget, seed, strategy)?;
    let mut report = json!({ "worst": worst });
    let mut ok = true;
    if a.extractor == ExtractorKind::Hash {
        let cert = verify::collision_certificate(e.as_ref(), a.k, strategy)?;
        let bound = 0.5 * 2f64.powf((a.m as f64 - a.k as f64) / 2.0);
        let within = worst.distance * worst.distance * 4 <= cert.target_sq;
        ok &= within && cert.holds;
        report["lhl_bound"] = json!(bound);
        report["within_lhl_bound"] = json!(within);
        report["certificate"] = to_value(&cert);
    }
    if a.b > 0 {
        let source = trex_core::FlatSource::from_values(worst.values.iter().copied(), a.n)?;
        let storage = verify::classical_storage_advantage(e.as_ref(), &source, a.b, a.budget, seed, strategy)?;
        report["storage"] = to_value(&storage);
    }
    if a.n <= 4 && a.b as usize <= a.k {
        let lemma = verify::StorageLemma::new(e.as_ref(), strategy)?.check(a.k, a.b)?;
        ok &= lemma.violations == 0;
        report["lemma"] = to_value(&lemma);
    }
    if ok {
        Ok(report)
    } else {
        Err(Failure::Check(report))
    }
}

fn reconstruct_cmd(a: &ReconstructArgs, seed: u64, strategy: Strategy) -> Outcome {
    let p = match &a.params {
        Some(path) => read_params(path)?,
        None => toy_params(),
    };
    let budgets = Budgets { advantage_trials: a.advantage_trials, ..Budgets::default() };
    let game = reconstruct::run_game(&p, a.trials, &budgets, seed, strategy)?;
    let value = to_value(&game);
    if game.success_rate >= 0.9 {
        Ok(value)
    } else {
        Err(Failure::Check(value))
    }
}

fn rac_cmd(a: &RacArgs, seed: u64, strategy: Strategy) -> Outcome {
    let (value, ok) = match a.experiment {
        Experiment::Amplify => {
            let r = rac::amplify(a.delta, a.eps, a.trials, seed, strategy)?;
            (to_value(&r), r.within_slack)
        }
        Experiment::Regev => {
            let r = rac::regev_experiment(a.n, a.range, a.trials, seed, strategy)?;
            (to_value(&r), r.measured_success >= 2.0 / 3.0)
        }
        Experiment::Avgcase => {
            let r = rac::avgcase_counterexample(a.n, a.trials, seed)?;
            let ok = 3 * *r.exact_average.numer() >= 2 * *r.exact_average.denom() && r.worst_case_success == 0.0;
            (to_value(&r), ok)
        }
    };
    if ok {
        Ok(value)
    } else {
        Err(Failure::Check(value))
    }
}

/// Median wall time in milliseconds and the last result.
fn time<T>(reps: u32, mut f: impl FnMut() -> T) -> (f64, T) {
    let mut times = Vec::new();
    let mut last = None;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        last = Some(f());
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    (times[times.len() / 2], last.expect("at least one run"))
}

fn bench(a: &BenchArgs, seed: u64) -> Outcome {
    let p16 = code::code_params_with(16, 0.125, &CodeConfig::desk())?;
    let f = BitString::from_u64(0xa5c3, 16);
    let h = verify::ToeplitzHash::new(5, 2)?;
    let toy = toy_params();
    let d = reconstruct::ExactMatch::new(&f, &toy)?;
    let mut kernels = Vec::new();
    let mut row = |name: &str, run: &dyn Fn(Strategy) -> anyhow::Result<String>| -> anyhow::Result<()> {
        let (seq_ms, seq) = time(a.reps, || run(Strategy::Sequential));
        let (par_ms, par) = time(a.reps, || run(Strategy::Parallel));
        kernels.push(json!({
            "kernel": name,
            "sequential_ms": seq_ms,
            "parallel_ms": par_ms,
            "speedup": seq_ms / par_ms,
            "identical": seq? == par?,
        }));
        Ok(())
    };
    row("encode_all n=16 delta=1/8", &|s| Ok(code::encode_all_with(&f, &p16, s)?.to_hex()))?;
    row("worst_flat_source hash n=5 k=2", &|s| {
        Ok(serde_json::to_string(&verify::worst_flat_source(&h, 2, SearchMode::Exhaustive, 1 << 20, seed, s)?)?)
    })?;
    row("worst_case_reconstruct toy", &|s| {
        Ok(serde_json::to_string(&reconstruct::worst_case_reconstruct(&d, &f, &toy, &Budgets::default(), seed, s)?.report)?)
    })?;
    row("amplify 10^4 trials", &|s| Ok(serde_json::to_string(&rac::amplify(0.1, 0.01, 10_000, seed, s)?)?))?;
    Ok(json!({ "threads": worker_threads(), "reps": a.reps, "kernels": kernels }))
}

#[cfg(feature = "parallel")]
fn worker_threads() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn worker_threads() -> usize {
    1
}

#[cfg(feature = "parallel")]
fn set_threads(threads: usize) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring the thread pool")
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_threads: usize) -> anyhow::Result<()> {
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Usage(anyhow!("--threads must be at least 1")));
        }
        set_threads(threads)?;
    }
    let strategy = match cli.threads {
        Some(1) => Strategy::Sequential,
        _ => Strategy::default(),
    };
    let seed = cli.rng_seed;
    match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Design(a) => design_cmd(a),
        Command::Encode(a) => encode(a, strategy),
        Command::EncodeBit(a) => encode_bit(a),
        Command::Extract(a) => extract(a, strategy),
        Command::Verify(a) => verify_cmd(a, seed, strategy),
        Command::Reconstruct(a) => reconstruct_cmd(a, seed, strategy),
        Command::Rac(a) => rac_cmd(a, seed, strategy),
        Command::FieldTable => Ok(Value::String(gf2e::field_table())),
        Command::Bench(a) => bench(a, seed),
    }
}

/// Writes a report to stdout; a closed pipe is not an error.
fn print(value: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = match value {
        Value::String(text) => write!(out, "{text}"),
        other => writeln!(out, "{}", serde_json::to_string_pretty(other).expect("json")),
    };
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(value) => {
            print(&value);
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(value)) => {
            print(&value);
            ExitCode::from(2)
        }
        Err(Failure::Check(value)) => {
            print(&value);
            ExitCode::from(3)
        }
    }
}
