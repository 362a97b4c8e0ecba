//! `boxkit` command-line front end.
//!
//! Exit codes: 0 pass, 1 negative verdict, 2 input error, 3 resource cap.

mod specs;

use std::fs;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use boxkit::boxes::{BipartiteBox, BoxShape, ValidationReport};
use boxkit::error::Error;
use boxkit::format::box_to_json;
use boxkit::locality::{chsh_success_probability, is_local};
use boxkit::par::Parallelism;
use boxkit::search::{
    evaluate_strategy, exhaustive_search, precheck_report, Engine, FidelityMetrics, PrecheckReport,
    SearchCertificate, SearchMode, SearchOptions, DEFAULT_CAP,
};
use boxkit::wiring::{compose_crt, induced_box, WiringStrategy};

use specs::{parse_list, parse_resources, read_box, resources_from, BoxSpec};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const CAP_ENV: &str = "BOXKIT_CAP";

#[derive(Parser)]
#[command(name = "boxkit", version, about = "Exact no-signalling boxes, wirings and simulation searches")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Human, global = true)]
    format: OutputFormat,

    /// Worker threads for searches (default: one per logical core).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,

    /// Search work cap; overrides BOXKIT_CAP.
    #[arg(long, global = true)]
    cap: Option<u128>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Build or load a box and emit it in the JSON box format.
    #[command(subcommand)]
    Box(BoxCommand),
    /// Check a property of a box file.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        path: String,
    },
    /// Search deterministic wirings of the resources for the target.
    Search(SearchArgs),
    /// Wire a mod-p and a mod-q box into the mod-pq box and verify it exactly.
    Compose {
        p: u64,
        q: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Re-evaluate a strategy file or the best strategy of a certificate.
    Replay(ReplayArgs),
}

#[derive(Subcommand)]
enum BoxCommand {
    /// The mod-p box.
    Modp {
        p: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// A deterministic local box `a = alice[x]`, `b = bob[y]`.
    LocalDet {
        /// Alphabet sizes X,Y,A,B.
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        alice: String,
        #[arg(long)]
        bob: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Load a box file; `--validate` reports its invariants.
    FromFile {
        path: String,
        #[arg(long)]
        validate: bool,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Nosignal,
    Local,
    Uniform,
    Chsh,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Equation,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Exhaustive,
    BestResponse,
    Decomposed,
}

#[derive(Args)]
struct SearchArgs {
    /// Target box: `modp P`, `modpP` or `file:path`.
    #[arg(long, num_args = 1..=2, required = true)]
    target: Vec<String>,
    /// Comma-separated resource specs (`modpK`, `file:path`).
    #[arg(long, default_value = "")]
    resources: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Equation)]
    mode: ModeArg,
    /// Let each box input depend on earlier box outputs.
    #[arg(long)]
    adaptive: bool,
    /// Disable marginal-condition pruning.
    #[arg(long)]
    no_prune: bool,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
    /// Only run the divisibility precheck.
    #[arg(long)]
    precheck_only: bool,
    /// Write the certificate JSON here.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Strategy JSON file.
    #[arg(long, conflicts_with = "certificate", required_unless_present = "certificate")]
    strategy: Option<String>,
    /// Certificate JSON file; its best strategy is re-evaluated.
    #[arg(long)]
    certificate: Option<String>,
    #[arg(long, num_args = 1..=2, requires = "strategy")]
    target: Vec<String>,
    #[arg(long, default_value = "", requires = "strategy")]
    resources: String,
}

/// Outcome of a command that ran to completion.
enum Verdict {
    Pass,
    Fail,
}

struct Ctx {
    format: OutputFormat,
    parallelism: Parallelism,
    cap: u128,
}

impl Ctx {
    fn json(&self) -> bool {
        self.format == OutputFormat::Json
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match context(&cli) {
        Ok(ctx) => ctx,
        Err(e) => return report_error(&e),
    };
    match run(cli.command, &ctx) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => report_error(&e),
    }
}

fn context(cli: &Cli) -> Result<Ctx> {
    let cap = match cli.cap {
        Some(c) => c,
        None => match std::env::var(CAP_ENV) {
            Ok(v) => v.trim().parse().with_context(|| format!("{CAP_ENV}={v:?} is not an integer"))?,
            Err(_) => DEFAULT_CAP,
        },
    };
    Ok(Ctx {
        format: cli.format,
        parallelism: Parallelism::from_workers(cli.workers.map(|w| w as usize)),
        cap,
    })
}

fn report_error(e: &anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    let capped = e.chain().any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::CapExceeded { .. })));
    ExitCode::from(if capped { 3 } else { 2 })
}

fn run(command: Command, ctx: &Ctx) -> Result<Verdict> {
    match command {
        Command::Box(cmd) => cmd_box(cmd, ctx),
        Command::Check { kind, path } => cmd_check(kind, &path, ctx),
        Command::Search(args) => cmd_search(args, ctx),
        Command::Compose { p, q, out } => cmd_compose(p, q, out.as_deref(), ctx),
        Command::Replay(args) => cmd_replay(args, ctx),
    }
}

fn emit(text: &str, out: Option<&str>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("writing {path}")),
        None => {
            say!("{text}");
            Ok(())
        }
    }
}

fn print_json(value: &impl serde::Serialize) {
    say!("{}", serde_json::to_string_pretty(value).expect("report serialization cannot fail"));
}

fn cmd_box(cmd: BoxCommand, ctx: &Ctx) -> Result<Verdict> {
    match cmd {
        BoxCommand::Modp { p, out } => {
            emit(&box_to_json(&BipartiteBox::modp(p)?), out.as_deref())?;
            Ok(Verdict::Pass)
        }
        BoxCommand::LocalDet { sizes, alice, bob, out } => {
            let s = parse_list(&sizes, "--sizes")?;
            let [x, y, a, b] = s[..] else { bail!("--sizes takes four values X,Y,A,B") };
            let alice = parse_list(&alice, "--alice")?;
            let bob = parse_list(&bob, "--bob")?;
            let made = BipartiteBox::local_deterministic(x, y, a, b, &alice, &bob)?;
            emit(&box_to_json(&made), out.as_deref())?;
            Ok(Verdict::Pass)
        }
        BoxCommand::FromFile { path, validate, out } => {
            let b = read_box(&path)?;
            if !validate {
                emit(&box_to_json(&b), out.as_deref())?;
                return Ok(Verdict::Pass);
            }
            let report = b.check_invariants();
            let uniform = report.is_valid() && b.is_uniform_output();
            if let Some(out) = out.as_deref() {
                emit(&box_to_json(&b), Some(out))?;
            }
            if ctx.json() {
                print_json(&json!({ "validation": report, "uniform_output": uniform }));
            } else {
                print_validation(&report);
                say!("uniform outputs: {}", yes_no(uniform));
            }
            Ok(if report.is_valid() { Verdict::Pass } else { Verdict::Fail })
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "YES"
    } else {
        "NO"
    }
}

fn print_validation(report: &ValidationReport) {
    for (name, violation) in report.entries() {
        match violation {
            None => say!("{name}: ok"),
            Some(v) => say!("{name}: VIOLATED ({v})"),
        }
    }
}

fn load_valid(path: &str) -> Result<BipartiteBox> {
    let b = read_box(path)?;
    b.ensure_valid().with_context(|| format!("{path} is not a valid box"))?;
    Ok(b)
}

fn cmd_check(kind: CheckKind, path: &str, ctx: &Ctx) -> Result<Verdict> {
    match kind {
        CheckKind::Nosignal => {
            let report = read_box(path)?.check_invariants();
            if ctx.json() {
                print_json(&report);
            } else {
                print_validation(&report);
            }
            Ok(if report.is_valid() { Verdict::Pass } else { Verdict::Fail })
        }
        CheckKind::Local => {
            let verdict = is_local(&load_valid(path)?)?;
            if ctx.json() {
                print_json(&verdict);
            } else if let Some(parts) = &verdict.decomposition {
                say!("local: YES ({} vertices)", parts.len());
                for wv in parts {
                    say!("  {}  f_A={:?} f_B={:?}", wv.weight, wv.vertex.alice, wv.vertex.bob);
                }
            } else {
                say!("local: NO (nonlocal)");
                if let Some(sep) = &verdict.separating_report {
                    say!(
                        "separating functional: box value {} > local maximum {}",
                        sep.box_value, sep.max_vertex_value
                    );
                }
            }
            Ok(if verdict.is_local { Verdict::Pass } else { Verdict::Fail })
        }
        CheckKind::Uniform => {
            let b = load_valid(path)?;
            let uniform = b.is_uniform_output();
            if ctx.json() {
                let (alice, bob) = b.marginals()?;
                print_json(&json!({ "uniform_output": uniform, "alice": alice, "bob": bob }));
            } else {
                say!("uniform outputs: {}", yes_no(uniform));
            }
            Ok(if uniform { Verdict::Pass } else { Verdict::Fail })
        }
        CheckKind::Chsh => {
            let value = chsh_success_probability(&load_valid(path)?)?;
            if ctx.json() {
                print_json(&value);
            } else {
                say!("{}", value.success_probability);
            }
            Ok(Verdict::Pass)
        }
    }
}

fn target_spec(tokens: &[String]) -> Result<BoxSpec> {
    BoxSpec::parse(&tokens.join(" "))
}

fn print_precheck(report: &PrecheckReport) {
    if let Some(reason) = &report.reason {
        say!("precheck: provably impossible (divisibility): {reason}");
    } else {
        say!(
            "precheck: inconclusive ({} divides a product of output sizes)",
            report.modulus
        );
    }
    say!(
        "  Alice output sizes {:?} (product {}), Bob output sizes {:?} (product {})",
        report.alice_output_sizes, report.alice_product, report.bob_output_sizes, report.bob_product
    );
}

fn cmd_search(args: SearchArgs, ctx: &Ctx) -> Result<Verdict> {
    let target_spec = target_spec(&args.target)?;
    let resources = parse_resources(&args.resources)?;
    if args.precheck_only {
        let BoxSpec::Modp(p) = target_spec else { bail!("--precheck-only needs a modp target") };
        let report = precheck_report(p, &resources)?;
        if ctx.json() {
            print_json(&report);
        } else {
            print_precheck(&report);
        }
        return Ok(Verdict::Pass);
    }

    let target = target_spec.load()?;
    let mode = match (args.mode, &target_spec) {
        (ModeArg::Equation, BoxSpec::Modp(p)) => SearchMode::Equation { modulus: *p as usize },
        (ModeArg::Equation, BoxSpec::File(_)) => bail!("equation mode needs a modp target; use --mode exact"),
        (ModeArg::Exact, _) => SearchMode::ExactBox,
    };
    let engine = match args.engine {
        EngineArg::Auto => Engine::Auto,
        EngineArg::Exhaustive => Engine::Exhaustive,
        EngineArg::BestResponse => Engine::BestResponse,
        EngineArg::Decomposed => Engine::Decomposed,
    };
    let opts = SearchOptions {
        mode,
        adaptive: args.adaptive,
        prune: !args.no_prune,
        cap: ctx.cap,
        engine,
        parallelism: ctx.parallelism,
    };
    let mut cert = exhaustive_search(&target, &resources, &opts)?;
    // Record the spec so the certificate can be replayed.
    cert.target.label = target_spec.label();
    let cert_json = cert.to_json();
    if let Some(path) = args.out.as_deref() {
        emit(&cert_json, Some(path))?;
    }
    if ctx.json() {
        say!("{cert_json}");
    } else {
        print_certificate(&cert, args.out.as_deref());
    }
    Ok(Verdict::Pass)
}

fn print_metrics(m: &FidelityMetrics) {
    say!("best avg success: {}", m.equation_success_avg);
    say!("best worst success: {}", m.equation_success_worst);
    say!("tv distance: {}", m.tv_distance_to_target);
}

fn print_certificate(cert: &SearchCertificate, out: Option<&str>) {
    let resources: Vec<&str> = cert.resources.iter().map(|r| r.label.as_str()).collect();
    say!("target: {}", cert.target.label);
    say!("resources: [{}]", resources.join(", "));
    match cert.mode {
        SearchMode::Equation { modulus } => say!("mode: equation (b - a = xy mod {modulus})"),
        SearchMode::ExactBox => say!("mode: exact box"),
    }
    say!("adaptive: {}", yes_no(cert.adaptive));
    say!("engine: {}", cert.engine);
    say!("space size: {}", cert.space_size);
    say!("visited: {}", cert.visited_count);
    say!("pruned: {}", cert.pruned_count);
    say!("best-response resolved: {}", cert.best_response_count);
    say!("graph solved: {}", cert.solved_count);
    if let Some(report) = &cert.precheck {
        print_precheck(report);
    }
    say!("perfect: {}", yes_no(cert.perfect));
    print_metrics(&cert.best_metrics);
    if let Some(s) = &cert.perfect_strategy {
        say!("perfect strategy:");
        say!("{}", s.to_json());
    }
    if let Some(path) = out {
        say!("certificate: {path}");
    }
}

fn cmd_compose(p: u64, q: u64, out: Option<&str>, ctx: &Ctx) -> Result<Verdict> {
    let (strategy, resources) = compose_crt(p, q)?;
    let induced = induced_box(&strategy, &resources)?;
    let exact = induced == BipartiteBox::modp(p * q)?;
    if let Some(path) = out {
        emit(&box_to_json(&induced), Some(path))?;
    }
    if ctx.json() {
        let value = json!({ "p": p, "q": q, "modulus": p * q, "verified_exact": exact, "strategy": strategy });
        print_json(&value);
    } else {
        if out.is_none() {
            say!("{}", box_to_json(&induced));
        }
        say!("mod-{} box from mod-{p} and mod-{q}: {}", p * q, if exact { "verified exact" } else { "NOT exact" });
    }
    Ok(if exact { Verdict::Pass } else { Verdict::Fail })
}

fn cmd_replay(args: ReplayArgs, ctx: &Ctx) -> Result<Verdict> {
    let (strategy, target, resources, expected) = if let Some(path) = &args.certificate {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let cert = SearchCertificate::from_json(&text).with_context(|| format!("parsing certificate {path}"))?;
        let target = BoxSpec::parse(&cert.target.label)
            .with_context(|| "certificate target cannot be rebuilt")?
            .load()?;
        let specs = cert
            .resources
            .iter()
            .map(|r| BoxSpec::parse(&r.label))
            .collect::<Result<Vec<_>>>()
            .context("certificate resources cannot be rebuilt")?;
        (cert.best_strategy, target, resources_from(&specs)?, Some(cert.best_metrics))
    } else {
        let path = args.strategy.as_deref().expect("clap requires one source");
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let strategy = WiringStrategy::from_json(&text).with_context(|| format!("parsing strategy {path}"))?;
        if args.target.is_empty() {
            bail!("--strategy needs --target");
        }
        let target = target_spec(&args.target)?.load()?;
        (strategy, target, parse_resources(&args.resources)?, None)
    };
    check_target_shape(&strategy, &target)?;
    let metrics = evaluate_strategy(&strategy, &target, &resources)?;
    let matches = expected.as_ref().is_none_or(|e| *e == metrics);
    if ctx.json() {
        print_json(&json!({ "metrics": metrics, "matches_certificate": expected.as_ref().map(|_| matches) }));
    } else {
        print_metrics(&metrics);
        if expected.is_some() {
            say!("matches certificate: {}", yes_no(matches));
        }
    }
    Ok(if matches { Verdict::Pass } else { Verdict::Fail })
}

fn check_target_shape(strategy: &WiringStrategy, target: &BipartiteBox) -> Result<()> {
    let shape: BoxShape = target.shape();
    if strategy.target != shape {
        bail!("strategy simulates {} but the target is {}", strategy.target, shape);
    }
    Ok(())
}
