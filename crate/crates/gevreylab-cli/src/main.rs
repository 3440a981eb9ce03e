//! Command line front end for the moment-PDE toolkit.
//!
//! Subcommands mirror the library pipeline: `polygon` classifies an
//! equation by its moment Newton polygon and critical value sigma_c,
//! `solve` computes the formal power-series solution, `estimate` fits
//! the Gevrey order to coefficient growth, `verify` runs the norm,
//! majorant, and lemma suites, and `counterexample` builds the sharp
//! divergent example at sigma_c and certifies its growth.
//!
//! Exit codes: 0 on success, 1 when a requested check fails, 2 on
//! input or domain errors. All randomness derives from `--seed`;
//! reports embed the seed and the spec hash and carry no timestamps,
//! so identical invocations produce byte-identical output.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gevreylab::analysis::{
    check_lower_bound, check_norm_properties, estimate_gevrey, product_sharpness_below_one,
    GevreyEstimate, LowerBoundReport,
};
use gevreylab::eqdsl;
use gevreylab::equation::{self, spec_sha256, EquationSpec};
use gevreylab::moments::{envelope_f64, MomentSequence};
use gevreylab::polygon::{self, NewtonPolygon};
use gevreylab::scalar::{parse_rational, DEFAULT_FLOAT_BITS};
use gevreylab::solver::{
    build_counterexample, check_majorant, solve, technical_product_lower_bound, SolveRequest,
    Solution,
};
use gevreylab::{Exact, Fp};

type Rational = Exact;

#[derive(Parser)]
#[command(
    name = "gevreylab",
    version,
    about = "Moment Newton polygons, formal solutions, and Gevrey-order verification for moment PDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

/// Equation input: exactly one of the two sources.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Equation file in the plain-text DSL.
    #[arg(long, value_name = "FILE")]
    dsl: Option<PathBuf>,
    /// Equation file in the canonical JSON form.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Exact rational arithmetic (requires integer moment orders).
    Exact,
    /// High-precision floating point.
    Float,
}

/// Solver controls shared by the computing subcommands.
#[derive(Args)]
struct SolveOpts {
    /// Highest t-order J to compute; must be at least the equation's kappa.
    #[arg(long, value_name = "J")]
    order: u32,
    /// Exact x-degree carried at the final order J.
    #[arg(long, value_name = "D", default_value_t = 8)]
    degree: u32,
    /// Arithmetic mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Mantissa bits in float mode.
    #[arg(long, env = "GEVREYLAB_BITS", default_value_t = DEFAULT_FLOAT_BITS)]
    bits: u32,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the moment Newton polygon and report sigma_c, S, and k*.
    Polygon {
        #[command(flatten)]
        input: Input,
        /// Write the JSON report here in addition to stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compute the formal solution u = sum_j u_j(x) t^j / m_0(j).
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solve: SolveOpts,
        /// Write the JSON report here in addition to stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Solve, then fit sigma_hat to the growth of sup-norms on |x| <= rho.
    Estimate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solve: SolveOpts,
        /// Polydisc radius for the sup-norm samples.
        #[arg(long, value_name = "RAT", default_value = "1/2")]
        rho: String,
        /// Fit window lo:hi in the t-order; defaults to the upper half.
        #[arg(long, value_name = "LO:HI", value_parser = parse_window)]
        window: Option<(u32, u32)>,
        /// Write the JSON report here in addition to stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run the norm-inequality, majorant-domination, and lemma suites.
    Verify {
        #[command(flatten)]
        input: Input,
        /// Seed for all randomized trials.
        #[arg(long, default_value_t = 0x00C0_FFEE)]
        seed: u64,
        /// Randomized trials per norm property.
        #[arg(long, default_value_t = 200)]
        trials: u32,
        /// Highest t-order solved for the majorant comparison.
        #[arg(long, value_name = "J", default_value_t = 12)]
        order: u32,
        /// Exact x-degree carried at the final order.
        #[arg(long, value_name = "D", default_value_t = 8)]
        degree: u32,
        /// Majorant radius r.
        #[arg(long, value_name = "RAT", default_value = "1/2")]
        radius: String,
        /// Inject the known sharpness fault: probe the product
        /// inequality at weight 1/2 and fail if a witness appears.
        #[arg(long)]
        inject_s_lt_1: bool,
        /// Write the JSON report here in addition to stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Build the divergent example at sigma_c and certify its growth.
    Counterexample {
        #[command(flatten)]
        input: Input,
        /// Highest t-order J to compute.
        #[arg(long, value_name = "J", default_value_t = 40)]
        order: u32,
        /// Exact x-degree carried at the final order. The sup-norm of
        /// order j peaks near x-degree 2j / ln 2, so the budget must
        /// stay ahead of the fit window for the estimate to be clean.
        #[arg(long, value_name = "D", default_value_t = 120)]
        degree: u32,
        /// Polydisc radius for the sup-norm samples.
        #[arg(long, value_name = "RAT", default_value = "1/2")]
        rho: String,
        /// Fit window lo:hi for the order estimate.
        #[arg(long, value_name = "LO:HI", value_parser = parse_window)]
        window: Option<(u32, u32)>,
        /// Write the JSON report here in addition to stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn parse_window(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let lo: u32 = lo.trim().parse().map_err(|_| format!("bad window start `{lo}`"))?;
    let hi: u32 = hi.trim().parse().map_err(|_| format!("bad window end `{hi}`"))?;
    if lo > hi {
        return Err(format!("window start {lo} exceeds end {hi}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Ok(0) pass, Ok(1) check failure, Err(_) input or domain error.
fn dispatch(cmd: Cmd) -> Result<u8, String> {
    match cmd {
        Cmd::Polygon { input, out } => cmd_polygon(&input, out.as_deref()),
        Cmd::Solve { input, solve, out } => cmd_solve(&input, &solve, out.as_deref()),
        Cmd::Estimate { input, solve, rho, window, out } => {
            cmd_estimate(&input, &solve, &rho, window, out.as_deref())
        }
        Cmd::Verify { input, seed, trials, order, degree, radius, inject_s_lt_1, out } => {
            cmd_verify(&input, seed, trials, order, degree, &radius, inject_s_lt_1, out.as_deref())
        }
        Cmd::Counterexample { input, order, degree, rho, window, out } => {
            cmd_counterexample(&input, order, degree, &rho, window, out.as_deref())
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load_spec(input: &Input) -> Result<EquationSpec, String> {
    let (path, from_dsl) = match (&input.dsl, &input.json) {
        (Some(p), None) => (p, true),
        (None, Some(p)) => (p, false),
        _ => unreachable!("clap group enforces exactly one input source"),
    };
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec = if from_dsl {
        eqdsl::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
    } else {
        equation::load_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
    };
    let diagnostics = spec.validate();
    let errors: Vec<String> = diagnostics
        .iter()
        .filter(|d| d.severity == gevreylab::equation::Severity::Error)
        .map(|d| match d.term {
            Some(t) => format!("term {t}: {}", d.message),
            None => d.message.clone(),
        })
        .collect();
    if !errors.is_empty() {
        return Err(format!("{}: invalid equation: {}", path.display(), errors.join("; ")));
    }
    Ok(spec)
}

fn parse_rat_flag(name: &str, value: &str) -> Result<Rational, String> {
    parse_rational(value).ok_or_else(|| format!("--{name}: `{value}` is not a rational"))
}

fn rat_str(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn rat_line(x: &Rational) -> String {
    format!("{} ({})", rat_str(x), x.to_f64())
}

/// Write the report if requested, then print the stdout lines. A
/// reader hanging up early (broken pipe) is not an error.
fn emit(lines: &[String], report: &Value, out: Option<&std::path::Path>) -> Result<(), String> {
    if let Some(path) = out {
        let mut text =
            serde_json::to_string_pretty(report).map_err(|e| format!("serialize report: {e}"))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let stdout = std::io::stdout();
    let mut handle = stdout.lock();
    for line in lines {
        match writeln!(handle, "{line}") {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
            Err(e) => return Err(format!("stdout: {e}")),
        }
    }
    Ok(())
}

fn polygon_json(p: &NewtonPolygon) -> Value {
    json!({
        "sigma_c": rat_str(&p.sigma_c),
        "sigma_c_decimal": p.sigma_c.to_f64(),
        "s_terms": p.s_terms,
        "kstar": p.kstar,
        "positive_slopes": p.positive_slopes.iter().map(rat_str).collect::<Vec<_>>(),
        "hull": p.hull.iter().map(|pt| json!({
            "x": rat_str(&pt.x),
            "y": rat_str(&pt.y),
            "term": pt.term,
        })).collect::<Vec<_>>(),
    })
}

fn solution_json<C: gevreylab::Scalar>(sol: &Solution<C>) -> Value {
    json!({
        "spec_sha256": sol.provenance.spec_sha256,
        "mode": sol.provenance.mode.to_string(),
        "t_order": sol.u.t_order(),
        "degree_schedule": sol.degree_schedule,
        "entries": sol.u.entries().iter().map(|e| e.to_json()).collect::<Vec<_>>(),
    })
}

fn estimate_json(est: &GevreyEstimate) -> Value {
    json!({
        "sigma_hat": est.sigma_hat,
        "window": [est.window.0, est.window.1],
        "residual": est.residual,
        "rho": rat_str(&est.rho),
        "degenerate": est.degenerate,
        "points": est.points,
    })
}

fn estimate_lines(est: &GevreyEstimate) -> Vec<String> {
    vec![
        format!("sigma_hat = {:.6}", est.sigma_hat),
        format!("window = {}:{}", est.window.0, est.window.1),
        format!("residual = {:.6}", est.residual),
        format!("degenerate = {}", est.degenerate),
    ]
}

/// Solve in the requested mode and hand each result to one callback.
fn with_solution<T>(
    spec: &EquationSpec,
    opts: &SolveOpts,
    on_exact: impl FnOnce(Solution<Exact>) -> Result<T, String>,
    on_float: impl FnOnce(Solution<Fp>) -> Result<T, String>,
) -> Result<T, String> {
    if opts.order < spec.kappa {
        return Err(format!(
            "--order {} is below kappa = {}; the recursion starts at order kappa",
            opts.order, spec.kappa
        ));
    }
    let req = SolveRequest { spec: spec.clone(), j_max: opts.order, d_out: opts.degree };
    match opts.mode {
        ModeArg::Exact => on_exact(solve::<Exact>(&req, ()).map_err(|e| e.to_string())?),
        ModeArg::Float => on_float(solve::<Fp>(&req, opts.bits).map_err(|e| e.to_string())?),
    }
}

// ---------------------------------------------------------------------------
// polygon
// ---------------------------------------------------------------------------

fn cmd_polygon(input: &Input, out: Option<&std::path::Path>) -> Result<u8, String> {
    let spec = load_spec(input)?;
    let p = polygon::build(&spec).map_err(|e| e.to_string())?;

    let mut lines = vec![
        format!("sigma_c = {}", rat_line(&p.sigma_c)),
        format!(
            "S = {{{}}}",
            p.s_terms.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
        ),
        format!("kstar = {}", p.kstar.map_or_else(|| "none".into(), |k| k.to_string())),
    ];
    lines.extend(polygon::hull_csv(&p).lines().map(str::to_owned));

    let report = json!({
        "command": "polygon",
        "spec_sha256": spec_sha256(&spec),
        "polygon": polygon_json(&p),
    });
    emit(&lines, &report, out)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn cmd_solve(input: &Input, opts: &SolveOpts, out: Option<&std::path::Path>) -> Result<u8, String> {
    let spec = load_spec(input)?;
    let (body, sha, mode) = with_solution(
        &spec,
        opts,
        |sol| Ok((solution_json(&sol), sol.provenance.spec_sha256, sol.provenance.mode)),
        |sol| Ok((solution_json(&sol), sol.provenance.spec_sha256, sol.provenance.mode)),
    )?;
    let lines = vec![
        format!("entries = {} (mode {mode})", opts.order + 1),
        format!("spec sha256 = {sha}"),
    ];
    let report = json!({ "command": "solve", "solution": body });
    emit(&lines, &report, out)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

fn cmd_estimate(
    input: &Input,
    opts: &SolveOpts,
    rho: &str,
    window: Option<(u32, u32)>,
    out: Option<&std::path::Path>,
) -> Result<u8, String> {
    let spec = load_spec(input)?;
    let rho = parse_rat_flag("rho", rho)?;
    if rho <= 0 {
        return Err("--rho must be positive".into());
    }
    let p = polygon::build(&spec).map_err(|e| e.to_string())?;

    let (est, sha, mode) = with_solution(
        &spec,
        opts,
        |sol| {
            let est = estimate_gevrey::<Exact>(&sol.u, &rho, window).map_err(|e| e.to_string())?;
            Ok((est, sol.provenance.spec_sha256, sol.provenance.mode))
        },
        |sol| {
            let est = estimate_gevrey::<Fp>(&sol.u, &rho, window).map_err(|e| e.to_string())?;
            Ok((est, sol.provenance.spec_sha256, sol.provenance.mode))
        },
    )?;

    let mut lines = estimate_lines(&est);
    lines.push(format!("sigma_c = {}", rat_line(&p.sigma_c)));
    let report = json!({
        "command": "estimate",
        "spec_sha256": sha,
        "mode": mode.to_string(),
        "estimate": estimate_json(&est),
        "sigma_c": rat_str(&p.sigma_c),
    });
    emit(&lines, &report, out)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    input: &Input,
    seed: u64,
    trials: u32,
    order: u32,
    degree: u32,
    radius: &str,
    inject_s_lt_1: bool,
    out: Option<&std::path::Path>,
) -> Result<u8, String> {
    let spec = load_spec(input)?;
    let radius = parse_rat_flag("radius", radius)?;
    if radius <= 0 {
        return Err("--radius must be positive".into());
    }
    let mut lines = Vec::new();
    let mut failed = false;

    // Norm inequality suite on randomized series.
    let suite = check_norm_properties(seed, trials).map_err(|e| e.to_string())?;
    lines.extend(suite.summary_lines());
    failed |= !suite.all_passed;

    // Majorant domination for the input equation at sigma = sigma_c.
    let p = polygon::build(&spec).map_err(|e| e.to_string())?;
    if order < spec.kappa {
        return Err(format!("--order {} is below kappa = {}", order, spec.kappa));
    }
    let req = SolveRequest { spec: spec.clone(), j_max: order, d_out: degree };
    let sol = solve::<Exact>(&req, ()).map_err(|e| e.to_string())?;
    let maj = check_majorant::<Exact>(&sol, &spec, &p.sigma_c, &radius, ())
        .map_err(|e| e.to_string())?;
    lines.push(format!(
        "majorant domination (sigma = {}, r = {}): {} (c_star = {}, {} orders)",
        rat_str(&maj.sigma),
        rat_str(&maj.r),
        if maj.dominated { "ok" } else { "FAILED" },
        rat_str(&maj.c_star),
        maj.entries.len(),
    ));
    failed |= !maj.dominated;

    // Factorial product lemma on a small exact grid.
    let mut lemma_ok = true;
    for j in 0..=10u32 {
        for v in 1..=4u32 {
            for a in 0..=4u32 {
                let (lhs, rhs) = technical_product_lower_bound(j, v, a);
                lemma_ok &= lhs >= rhs;
            }
        }
    }
    lines.push(format!(
        "factorial product lower bound (j <= 10, v <= 4, a <= 4): {}",
        if lemma_ok { "ok" } else { "FAILED" }
    ));
    failed |= !lemma_ok;

    // Ratio envelope for gamma moments, checked far out in j.
    let mut envelope_ok = true;
    let mut envelope_json = Vec::new();
    for (num, den) in [(1u32, 1u32), (3, 2), (2, 1), (3, 1)] {
        let s = Rational::from((num, den));
        let m = MomentSequence::gamma(s.clone()).map_err(|e| e.to_string())?;
        let (lo, hi) = m.regularity_bounds_f64(10_000).map_err(|e| e.to_string())?;
        let (env_lo, env_hi) = envelope_f64(s.to_f64());
        let ok = lo >= env_lo * (1.0 - 1e-9) && hi <= env_hi * (1.0 + 1e-9);
        envelope_ok &= ok;
        envelope_json.push(json!({
            "order": rat_str(&s),
            "observed": [lo, hi],
            "envelope": [env_lo, env_hi],
            "ok": ok,
        }));
    }
    lines.push(format!(
        "gamma ratio envelope (j <= 10000): {}",
        if envelope_ok { "ok" } else { "FAILED" }
    ));
    failed |= !envelope_ok;

    // Optional fault injection: with weight 1/2 the product inequality
    // is false, and finding the witness must fail the run.
    let mut witness_json = Value::Null;
    if inject_s_lt_1 {
        match product_sharpness_below_one(seed, 200) {
            Some(w) => {
                lines.push(format!(
                    "injected fault s = 1/2: witness f = {}, g = {}, r = {}: |fg|^2 = {} > {} = (|f||g|)^2",
                    w.f_desc,
                    w.g_desc,
                    rat_str(&w.r),
                    rat_str(&w.lhs_sq),
                    rat_str(&w.rhs_sq),
                ));
                witness_json = json!({
                    "f": w.f_desc,
                    "g": w.g_desc,
                    "r": rat_str(&w.r),
                    "lhs_sq": rat_str(&w.lhs_sq),
                    "rhs_sq": rat_str(&w.rhs_sq),
                });
                failed = true;
            }
            None => lines.push("injected fault s = 1/2: no witness found".into()),
        }
    }

    lines.push(format!("verify: {}", if failed { "FAIL" } else { "ok" }));
    let report = json!({
        "command": "verify",
        "spec_sha256": spec_sha256(&spec),
        "seed": seed,
        "trials_per_property": trials,
        "properties": suite.properties.iter().map(|p| json!({
            "name": p.name,
            "trials": p.trials,
            "failures": p.failures,
            "witness": p.witness,
        })).collect::<Vec<_>>(),
        "majorant": {
            "sigma": rat_str(&maj.sigma),
            "r": rat_str(&maj.r),
            "varsigma": rat_str(&maj.varsigma),
            "alpha_sigma": rat_str(&maj.alpha_sigma),
            "c_star": rat_str(&maj.c_star),
            "dominated": maj.dominated,
            "orders": maj.entries.len(),
        },
        "lemma_ok": lemma_ok,
        "envelope": envelope_json,
        "injected_witness": witness_json,
        "passed": !failed,
    });
    emit(&lines, &report, out)?;
    Ok(u8::from(failed))
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

fn lower_bound_json(lb: &LowerBoundReport) -> Value {
    json!({
        "slope": lb.slope,
        "intercept": lb.intercept,
        "window": [lb.window.0, lb.window.1],
        "points": lb.points,
        "violations": lb.violations.iter().map(|v| json!({
            "sigma_prime": v.sigma_prime,
            "detected": v.detected,
            "first_violation_j": v.first_violation_j,
            "margin": v.margin,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_counterexample(
    input: &Input,
    order: u32,
    degree: u32,
    rho: &str,
    window: Option<(u32, u32)>,
    out: Option<&std::path::Path>,
) -> Result<u8, String> {
    let template = load_spec(input)?;
    let rho = parse_rat_flag("rho", rho)?;
    if rho <= 0 {
        return Err("--rho must be positive".into());
    }
    let ce = build_counterexample(&template).map_err(|e| e.to_string())?;
    if order < ce.spec.kappa {
        return Err(format!("--order {} is below kappa = {}", order, ce.spec.kappa));
    }

    let req = SolveRequest { spec: ce.spec.clone(), j_max: order, d_out: degree };
    let sol = solve::<Exact>(&req, ()).map_err(|e| e.to_string())?;
    let est = estimate_gevrey::<Exact>(&sol.u, &rho, window).map_err(|e| e.to_string())?;

    // Probe strictly smaller orders; each must be refuted by growth.
    let mut probes = vec![Rational::from(&ce.sigma_c / 2)];
    let shifted = Rational::from(&ce.sigma_c - &Rational::from((1, 10)));
    if shifted > 0 && shifted != probes[0] {
        probes.push(shifted);
    }
    let lb = check_lower_bound::<Exact>(&sol.u, ce.spec.kappa, &ce.kstar_data(), &probes, None)
        .map_err(|e| e.to_string())?;

    let mut lines = vec![
        format!("sigma_c = {}", rat_line(&ce.sigma_c)),
        format!(
            "kstar term = {} (i* = {}, v* = {}, q* = {:?})",
            ce.kstar_term,
            ce.i_star,
            ce.v_star,
            ce.q_star.as_slice(),
        ),
    ];
    lines.extend(estimate_lines(&est));

    let mut failed = false;
    let band = (est.sigma_hat - ce.sigma_c.to_f64()).abs() <= 0.15;
    lines.push(format!(
        "estimate within 0.15 of sigma_c: {}",
        if band { "ok" } else { "FAILED" }
    ));
    failed |= !band;

    for v in &lb.violations {
        if v.detected {
            lines.push(format!(
                "probe sigma' = {:.4}: refuted from j = {} (margin {:.3})",
                v.sigma_prime,
                v.first_violation_j.expect("detected probes carry a first index"),
                v.margin,
            ));
        } else {
            lines.push(format!("probe sigma' = {:.4}: NOT refuted", v.sigma_prime));
            failed = true;
        }
    }

    lines.push(format!("counterexample: {}", if failed { "FAIL" } else { "ok" }));
    let report = json!({
        "command": "counterexample",
        "template_sha256": spec_sha256(&template),
        "spec_sha256": sol.provenance.spec_sha256,
        "sigma_c": rat_str(&ce.sigma_c),
        "kstar_term": ce.kstar_term,
        "i_star": ce.i_star,
        "v_star": ce.v_star,
        "q_star": ce.q_star.as_slice(),
        "estimate": estimate_json(&est),
        "lower_bound": lower_bound_json(&lb),
        "passed": !failed,
    });
    emit(&lines, &report, out)?;
    Ok(u8::from(failed))
}
