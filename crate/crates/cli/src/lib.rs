//! Command-line front end for the probabilistic round-off analyzer.
//!
//! Four subcommands:
//!
//! * `analyze`  — synthesize a probabilistic round-off threshold for a
//!   problem file, optionally sweeping moment orders;
//! * `validate` — estimate the violation frequency of a threshold by
//!   Monte Carlo sampling;
//! * `bound`    — print deterministic enclosures (interval and structural
//!   bounds) for debugging;
//! * `gen-dot`  — emit a dot-product benchmark problem of a given length.
//!
//! Reports go to stdout (text or, with `--json`, machine-readable JSON with
//! every float carrying 17 significant digits so it re-parses to the same
//! binary64); diagnostics and errors go to stderr. Exit codes: 0 success,
//! 2 parse/validation, 3 unsupported structure, 4 resource/timeout, 5
//! non-finite intermediate, 6 no feasible threshold / sweep exhausted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use probound_core::detbound::{interval_eval, second_order_bound, struct_bound_expr, VarBox};
use probound_core::error::Error;
use probound_core::expr::{
    classify, delta_double, delta_single, eps_double, eps_single, parse_problem, ProblemSpec,
    StructuralForm,
};
use probound_core::fpmodel::{taylor_fraction, taylor_jet};
use probound_core::mc::{validate_threshold, SampleRun};
use probound_core::poly::Budget;
use probound_core::rat::{parse_rational, rat_to_f64, Dir, Rat};
use probound_core::threshold::{analyze, AnalysisConfig, Mode, ThresholdReport};

/// Probabilistic round-off error thresholds for floating-point arithmetic.
#[derive(Debug, Parser)]
#[command(name = "probound", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a probabilistic round-off threshold for a problem file.
    Analyze(AnalyzeArgs),
    /// Estimate a threshold's violation frequency by Monte Carlo sampling.
    Validate(ValidateArgs),
    /// Print deterministic enclosures of the expression for debugging.
    Bound(BoundArgs),
    /// Emit a dot-product benchmark problem of the given length.
    GenDot(GenDotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// cmb for division-free expressions, div for top-level fractions.
    Auto,
    /// Plain order-n moment bound (division-free only).
    Nm,
    /// Centered moment bound with feasibility search (division-free only).
    Cmb,
    /// Fraction bound (top-level division only).
    Div,
}

impl ModeArg {
    fn to_mode(self) -> Mode {
        match self {
            ModeArg::Auto => Mode::Auto,
            ModeArg::Nm => Mode::Nm,
            ModeArg::Cmb => Mode::Cmb,
            ModeArg::Div => Mode::Div,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecArg {
    /// ε = 2⁻²⁴, δ = 2⁻¹⁵⁰.
    Single,
    /// ε = 2⁻⁵³, δ = 2⁻¹⁰⁷⁵.
    Double,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Problem file path.
    pub file: PathBuf,
    /// Bounding strategy.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Moment order n (even, at least 2).
    #[arg(long)]
    pub order: Option<u32>,
    /// Sweep moment orders and keep the best threshold. Bare `--sweep` uses
    /// the default schedule; `--sweep=2,4` restricts it.
    #[arg(long, num_args = 0..=1, require_equals = true, value_name = "ORDERS",
          default_missing_value = "")]
    pub sweep: Option<String>,
    /// Subranges per variable for the partitioned bound.
    #[arg(long)]
    pub partitions: Option<u32>,
    /// Disable per-variable partitioning.
    #[arg(long, conflicts_with = "partitions")]
    pub no_partition: bool,
    /// Confidence level c in (0, 1); overrides the problem file.
    #[arg(long, value_name = "C")]
    pub confidence: Option<String>,
    /// Precision preset; overrides the problem file.
    #[arg(long, value_enum)]
    pub prec: Option<PrecArg>,
    /// Relative rounding bound ε (decimal, hex-float or p/q literal).
    #[arg(long, value_name = "EPS")]
    pub eps: Option<String>,
    /// Absolute rounding bound δ (decimal, hex-float or p/q literal).
    #[arg(long, value_name = "DELTA")]
    pub delta: Option<String>,
    /// Wall-clock budget per analysis order, in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub timeout_per_order: Option<f64>,
    /// Keep the squared denominator in the first-order fraction bound.
    #[arg(long)]
    pub force_q2: bool,
    /// Emit the report as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Problem file path.
    pub file: PathBuf,
    /// Threshold to validate.
    #[arg(long, value_name = "U")]
    pub threshold: Option<f64>,
    /// Read the threshold (`threshold_total`) from a prior `analyze --json`
    /// report instead.
    #[arg(long, value_name = "REPORT", conflicts_with = "threshold")]
    pub report: Option<PathBuf>,
    /// Number of Monte Carlo samples (at least 10000).
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// RNG seed; runs are deterministic for a fixed seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Confidence level c to judge pass/fail against; overrides the file.
    #[arg(long, value_name = "C")]
    pub confidence: Option<String>,
    /// Emit the result as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Problem file path.
    pub file: PathBuf,
    /// Precision preset for the residual bound; overrides the problem file.
    #[arg(long, value_enum)]
    pub prec: Option<PrecArg>,
    /// Emit the result as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenDotArgs {
    /// Number of product terms (the problem gets 2·LENGTH variables).
    pub length: u32,
}

/// Runs a parsed invocation, printing to stdout/stderr; returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Analyze(a) => run_analyze(&a),
        Command::Validate(a) => run_validate(&a),
        Command::Bound(a) => run_bound(&a),
        Command::GenDot(a) => run_gen_dot(&a),
    }
}

/// Maps every analysis error onto the documented process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Invalid(_) => 2,
        Error::Unsupported(_) => 3,
        Error::Resource(_) | Error::Timeout(_) => 4,
        Error::NonFinite(_) => 5,
        Error::NoFeasible { .. } | Error::SweepExhausted(_) => 6,
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn load_problem(path: &Path) -> Result<ProblemSpec, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

fn parse_rat_flag(text: &str, what: &str) -> Result<Rat, Error> {
    parse_rational(text).map_err(|_| Error::invalid(format!("bad {what} literal '{text}'")))
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// Builds the analysis configuration for a problem with flag overrides
/// applied on top of the problem file's directives.
pub fn config_from_flags(problem: &ProblemSpec, a: &AnalyzeArgs) -> Result<AnalysisConfig, Error> {
    let mut cfg = AnalysisConfig::for_problem(problem);
    cfg.mode = a.mode.to_mode();
    if let Some(p) = a.prec {
        match p {
            PrecArg::Single => {
                cfg.eps = eps_single();
                cfg.delta = delta_single();
            }
            PrecArg::Double => {
                cfg.eps = eps_double();
                cfg.delta = delta_double();
            }
        }
    }
    if let Some(e) = &a.eps {
        cfg.eps = parse_rat_flag(e, "eps")?;
    }
    if let Some(d) = &a.delta {
        cfg.delta = parse_rat_flag(d, "delta")?;
    }
    if let Some(c) = &a.confidence {
        cfg.conf = parse_rat_flag(c, "confidence")?;
    }
    if let Some(n) = a.order {
        cfg.order = n;
    }
    if let Some(list) = &a.sweep {
        cfg.sweep = true;
        if !list.is_empty() {
            cfg.sweep_orders = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::invalid(format!("bad sweep order '{s}'")))
                })
                .collect::<Result<Vec<u32>, Error>>()?;
        }
    }
    if let Some(t) = a.timeout_per_order {
        cfg.timeout_per_order = t;
    }
    cfg.partitions = a.partitions;
    cfg.no_partition = a.no_partition;
    cfg.force_q2 = a.force_q2;
    Ok(cfg)
}

fn run_analyze(a: &AnalyzeArgs) -> i32 {
    let report = load_problem(&a.file).and_then(|p| {
        let cfg = config_from_flags(&p, a)?;
        analyze(&p, &cfg)
    });
    match report {
        Ok(rep) => {
            if a.json {
                println!("{}", render_analysis_json(&rep));
            } else {
                print!("{}", render_analysis_text(&rep));
                for d in &rep.diagnostics {
                    eprintln!("note: {d}");
                }
            }
            0
        }
        Err(e) => fail(&e),
    }
}

/// Serializes an f64 with 17 significant digits — enough to re-parse to the
/// identical binary64.
fn jf(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "\"nan\"".to_string()
    } else if x > 0.0 {
        "\"inf\"".to_string()
    } else {
        "\"-inf\"".to_string()
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_str_list(items: &[String]) -> String {
    let body: Vec<String> = items.iter().map(|s| json_str(s)).collect();
    format!("[{}]", body.join(", "))
}

/// Stable JSON rendering of an analysis report.
pub fn render_analysis_json(rep: &ThresholdReport) -> String {
    let flag = match rep.flag_at_threshold {
        Some(f) => jf(f),
        None => "null".to_string(),
    };
    format!(
        "{{\n  \"threshold_total\": {},\n  \"threshold_first_order\": {},\n  \
         \"threshold_second_order\": {},\n  \"mode\": {},\n  \"order\": {},\n  \
         \"partitions\": {},\n  \"confidence\": {},\n  \"eps\": {},\n  \"delta\": {},\n  \
         \"flag_at_threshold\": {},\n  \"timings\": {{\"decompose_s\": {}, \"search_s\": {}, \
         \"total_s\": {}}},\n  \"diagnostics\": {}\n}}",
        jf(rep.threshold_total),
        jf(rep.threshold_first_order),
        jf(rep.threshold_second_order),
        json_str(rep.mode),
        rep.order,
        rep.partitions,
        jf(rep.confidence),
        jf(rep.eps),
        jf(rep.delta),
        flag,
        jf(rep.timings.decompose_s),
        jf(rep.timings.search_s),
        jf(rep.timings.total_s),
        json_str_list(&rep.diagnostics),
    )
}

/// Human-readable rendering; first- and second-order contributions shown
/// separately.
pub fn render_analysis_text(rep: &ThresholdReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "threshold        {:e}   (P[err >= threshold] <= {:e})",
        rep.threshold_total,
        1.0 - rep.confidence
    );
    let _ = writeln!(s, "  first order    {:e}", rep.threshold_first_order);
    let _ = writeln!(s, "  second order   {:e}", rep.threshold_second_order);
    let _ = writeln!(s, "mode             {}", rep.mode);
    let _ = writeln!(s, "order            {}", rep.order);
    let _ = writeln!(s, "partitions       {}", rep.partitions);
    let _ = writeln!(s, "confidence       {}", rep.confidence);
    let _ = writeln!(s, "eps              {:e}", rep.eps);
    let _ = writeln!(s, "delta            {:e}", rep.delta);
    if let Some(f) = rep.flag_at_threshold {
        let _ = writeln!(s, "bound at point   {:e}", f);
    }
    let _ = writeln!(
        s,
        "time             {:.3} s   (decompose {:.3} s, search {:.3} s)",
        rep.timings.total_s, rep.timings.decompose_s, rep.timings.search_s
    );
    s
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn read_threshold_from_report(path: &Path) -> Result<f64, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("bad report JSON {}: {e}", path.display())))?;
    v.get("threshold_total")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::invalid("report lacks a numeric \"threshold_total\""))
}

fn run_validate(a: &ValidateArgs) -> i32 {
    let outcome = (|| -> Result<(SampleRun, f64), Error> {
        let problem = load_problem(&a.file)?;
        let threshold = match (a.threshold, &a.report) {
            (Some(t), None) => t,
            (None, Some(p)) => read_threshold_from_report(p)?,
            (None, None) => {
                return Err(Error::invalid(
                    "a threshold is required: pass --threshold <U> or --report <analyze-json>",
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        };
        let conf = match &a.confidence {
            Some(c) => parse_rat_flag(c, "confidence")?,
            None => problem.conf(),
        };
        let allowed = 1.0 - rat_to_f64(&conf, Dir::Nearest);
        let run = validate_threshold(&problem, threshold, a.samples, a.seed)?;
        Ok((run, allowed))
    })();
    match outcome {
        Ok((run, allowed)) => {
            let pass = run.rate <= allowed + run.ci3_halfwidth;
            if a.json {
                println!("{}", render_validation_json(&run, allowed, pass));
            } else {
                print!("{}", render_validation_text(&run, allowed, pass));
            }
            0
        }
        Err(e) => fail(&e),
    }
}

/// Stable JSON rendering of a validation run.
pub fn render_validation_json(run: &SampleRun, allowed: f64, pass: bool) -> String {
    format!(
        "{{\n  \"threshold\": {},\n  \"requested\": {},\n  \"used\": {},\n  \
         \"violations\": {},\n  \"nonfinite\": {},\n  \"frequency\": {},\n  \
         \"ci3_halfwidth\": {},\n  \"seed\": {},\n  \"allowed\": {},\n  \"pass\": {}\n}}",
        jf(run.threshold),
        run.requested,
        run.used,
        run.violations,
        run.nonfinite,
        jf(run.rate),
        jf(run.ci3_halfwidth),
        run.seed,
        jf(allowed),
        pass,
    )
}

/// Human-readable rendering of a validation run.
pub fn render_validation_text(run: &SampleRun, allowed: f64, pass: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "threshold        {:e}", run.threshold);
    let _ = writeln!(
        s,
        "samples          {}   (used {}, non-finite {})",
        run.requested, run.used, run.nonfinite
    );
    let _ = writeln!(s, "violations       {}", run.violations);
    let _ = writeln!(s, "frequency        {:e}", run.rate);
    let _ = writeln!(s, "3-sigma width    {:e}", run.ci3_halfwidth);
    let _ = writeln!(s, "allowed          {:e}", allowed);
    let _ = writeln!(s, "seed             {}", run.seed);
    let _ = writeln!(s, "result           {}", if pass { "pass" } else { "FAIL" });
    s
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

/// Deterministic enclosures of a problem's expression.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Outward-rounded interval enclosure of `f(x)` over the support box.
    pub interval_lo: f64,
    pub interval_hi: f64,
    /// Structural magnitude bound; absent when the expression divides by
    /// a non-constant.
    pub struct_bound: Option<f64>,
    /// Certified bound on the second-order residual of the rounding model.
    pub second_order: f64,
    /// Number of rounded operations.
    pub operations: u32,
}

/// Computes the `bound` subcommand's report.
pub fn bound_report(problem: &ProblemSpec, prec: Option<PrecArg>) -> Result<BoundReport, Error> {
    let dists = problem.distributions();
    let bx0 = VarBox::from_supports(&dists);
    let iv = interval_eval(&problem.expr, &bx0)?;
    let sb = struct_bound_expr(&problem.expr, &bx0).ok();
    let (eps, delta) = match prec {
        Some(PrecArg::Single) => (eps_single(), delta_single()),
        Some(PrecArg::Double) => (eps_double(), delta_double()),
        None => (problem.eps(), problem.delta()),
    };
    let bx = VarBox::with_errors(&dists, &eps, &delta);
    let budget = Budget::default();
    let (second, k) = match classify(&problem.expr) {
        StructuralForm::TopFraction { .. } => {
            let ff = taylor_fraction(&problem.expr, &budget, false)?;
            (second_order_bound(&ff.r2_num, &ff.r2_den_factors, &bx)?, ff.k)
        }
        StructuralForm::DivisionFree => {
            let jet = taylor_jet(&problem.expr, &bx, &budget)?;
            (rat_to_f64(&jet.r2_bound, Dir::Up), jet.k)
        }
        StructuralForm::Unsupported(why) => return Err(Error::Unsupported(why)),
    };
    Ok(BoundReport {
        interval_lo: rat_to_f64(&iv.0, Dir::Down),
        interval_hi: rat_to_f64(&iv.1, Dir::Up),
        struct_bound: sb.map(|b| rat_to_f64(&b, Dir::Up)),
        second_order: second,
        operations: k,
    })
}

fn run_bound(a: &BoundArgs) -> i32 {
    match load_problem(&a.file).and_then(|p| bound_report(&p, a.prec)) {
        Ok(rep) => {
            if a.json {
                println!("{}", render_bound_json(&rep));
            } else {
                print!("{}", render_bound_text(&rep));
            }
            0
        }
        Err(e) => fail(&e),
    }
}

/// Stable JSON rendering of a deterministic-bound report.
pub fn render_bound_json(rep: &BoundReport) -> String {
    let sb = match rep.struct_bound {
        Some(b) => jf(b),
        None => "null".to_string(),
    };
    format!(
        "{{\n  \"interval_lo\": {},\n  \"interval_hi\": {},\n  \"struct_bound\": {},\n  \
         \"second_order\": {},\n  \"operations\": {}\n}}",
        jf(rep.interval_lo),
        jf(rep.interval_hi),
        sb,
        jf(rep.second_order),
        rep.operations,
    )
}

/// Human-readable rendering of a deterministic-bound report.
pub fn render_bound_text(rep: &BoundReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "interval         [{:e}, {:e}]", rep.interval_lo, rep.interval_hi);
    match rep.struct_bound {
        Some(b) => {
            let _ = writeln!(s, "struct bound     {:e}", b);
        }
        None => {
            let _ = writeln!(s, "struct bound     n/a (non-constant division)");
        }
    }
    let _ = writeln!(s, "second order     {:e}", rep.second_order);
    let _ = writeln!(s, "operations       {}", rep.operations);
    s
}

// ---------------------------------------------------------------------------
// gen-dot
// ---------------------------------------------------------------------------

/// Problem text for a length-`length` dot product: `2·length` variables,
/// all uniform on (0, 1), summed left to right. Deterministic.
pub fn gen_dot(length: u32) -> Result<String, Error> {
    if length < 1 {
        return Err(Error::invalid("gen-dot length must be at least 1"));
    }
    let mut s = String::new();
    for i in 1..=length {
        let _ = writeln!(s, "var a{i} uniform(0, 1)");
    }
    for i in 1..=length {
        let _ = writeln!(s, "var b{i} uniform(0, 1)");
    }
    s.push_str("expr ");
    for i in 1..=length {
        if i > 1 {
            s.push_str(" + ");
        }
        let _ = write!(s, "a{i}*b{i}");
    }
    s.push('\n');
    Ok(s)
}

fn run_gen_dot(a: &GenDotArgs) -> i32 {
    match gen_dot(a.length) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => fail(&e),
    }
}
