//! Command-line front end. `dispatch` returns the process exit code:
//! 0 on success, 1 on domain errors (JSON error on stderr), 2 on usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::cone::{Cone, ConeSpec};
use crate::field::SystemDef;
use crate::integrate::{self, Direction, IntegrateOptions, Trajectory};
use crate::limit_set::{self, ClassifyOptions, EstimateOptions, LimitDirection, LimitSetVerdict};
use crate::monotonicity::{self, SamplingBox, SamplingOptions};
use crate::oscillation::{self, VerdictStatus};
use crate::witness::{self, WitnessProblem};

#[derive(Debug, Parser)]
#[command(name = "monoflow", version, about = "Eventually monotone flows: certification, oscillation, witnesses, limit sets")]
struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for reports, CSVs and the run manifest.
    #[arg(long, global = true, default_value = "monoflow-out")]
    out: PathBuf,
    /// Tolerance on order comparisons of sampled states.
    #[arg(long = "tol-order", global = true, default_value_t = 1e-6)]
    tol_order: f64,
    /// Print the JSON report on stdout instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    /// Also write plot-ready CSVs.
    #[arg(long = "emit-plot-data", global = true)]
    emit_plot_data: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare two points in a cone order.
    Order(OrderArgs),
    /// Integrate a trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Certify (eventual) cooperativity or competitivity.
    Certify(CertifyArgs),
    /// Scan a trajectory for increasing and decreasing intervals.
    Oscillation(OscillationArgs),
    /// Run the interval-translation witness construction.
    Witness(WitnessArgs),
    /// Estimate and classify a limit set.
    Limitset(LimitsetArgs),
    /// Floquet multipliers of a periodic orbit.
    Floquet(FloquetArgs),
}

#[derive(Debug, Args)]
struct OrderArgs {
    /// System file whose cone is used.
    #[arg(long, conflicts_with = "cone")]
    system: Option<PathBuf>,
    /// Cone as a JSON fragment; defaults to the positive orthant.
    #[arg(long)]
    cone: Option<String>,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Forward,
    Backward,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Rk4,
    Dp54,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    x0: String,
    /// Integration horizon.
    #[arg(long, default_value_t = 10.0)]
    t: f64,
    #[arg(long, value_enum, default_value = "forward")]
    direction: DirectionArg,
    #[arg(long, value_enum, default_value = "dp54")]
    method: MethodArg,
    /// RK4 step, or DP54 maximum step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    #[arg(long = "norm-cap", default_value_t = 1e9)]
    norm_cap: f64,
}

#[derive(Debug, Args)]
struct BoxArgs {
    /// Lower corner of the sampling box (one value or N comma-separated).
    #[arg(long = "box-lo", default_value = "-1")]
    box_lo: String,
    #[arg(long = "box-hi", default_value = "1")]
    box_hi: String,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    /// Sample ordered pairs even for linear systems.
    #[arg(long)]
    empirical: bool,
    /// Re-sample fresh pairs and check the certificate.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[command(flatten)]
    sample_box: BoxArgs,
}

#[derive(Debug, Args)]
struct OscillationArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    x0: String,
    /// Horizon in each time direction.
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,
    /// Samples per direction.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long = "max-pairs", default_value_t = oscillation::DEFAULT_MAX_PAIRS)]
    max_pairs: usize,
    #[arg(long = "norm-cap", default_value_t = 1e9)]
    norm_cap: f64,
}

#[derive(Debug, Args)]
struct WitnessArgs {
    #[arg(long = "A")]
    a: String,
    #[arg(long = "B")]
    b: String,
    #[arg(long = "E")]
    e: String,
    /// Floating-point mode; values may be expressions such as sqrt(2).
    #[arg(long, requires = "eps")]
    float: bool,
    #[arg(long)]
    eps: Option<f64>,
    /// Also run the brute-force oracle.
    #[arg(long, requires = "lmax")]
    oracle: bool,
    #[arg(long)]
    lmax: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LimitDirectionArg {
    Omega,
    Alpha,
}

#[derive(Debug, Args)]
struct LimitsetArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    x0: String,
    #[arg(long, value_enum, default_value = "omega")]
    direction: LimitDirectionArg,
    #[arg(long, default_value_t = 50.0)]
    transient: f64,
    #[arg(long, default_value_t = 10.0)]
    window: f64,
    #[arg(long, default_value_t = 2)]
    refine: usize,
    /// Samples in the first window.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Debug, Args)]
struct FloquetArgs {
    #[arg(long)]
    system: PathBuf,
    /// A point on the cycle.
    #[arg(long)]
    point: String,
    #[arg(long)]
    period: f64,
}

enum Failure {
    Usage(String),
    Domain { kind: &'static str, message: String },
}

fn domain(kind: &'static str, e: impl std::fmt::Display) -> Failure {
    Failure::Domain {
        kind,
        message: e.to_string(),
    }
}

/// What a subcommand produced: the report, extra files, and tolerances used.
struct Outcome {
    report: Value,
    files: Vec<(String, String)>,
    tolerances: Value,
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli).and_then(|o| finish(&cli, &argv, o, out)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain { kind, message }) => {
            let _ = writeln!(err, "{}", json!({"error": {"kind": kind, "message": message}}));
            1
        }
    }
}

fn finish(cli: &Cli, argv: &[String], o: Outcome, out: &mut dyn Write) -> Result<(), Failure> {
    let io = |e: std::io::Error| domain("Io", e);
    fs::create_dir_all(&cli.out).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", cli.out.display())))?;
    let name = subcommand_name(&cli.command);
    let report_name = format!("{name}.json");
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n";
    fs::write(cli.out.join(&report_name), pretty(&o.report)).map_err(io)?;
    let mut outputs = vec![report_name];
    for (file, content) in &o.files {
        fs::write(cli.out.join(file), content).map_err(io)?;
        outputs.push(file.clone());
    }
    let manifest = json!({
        "tool": "monoflow",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": name,
        "argv": &argv[1..],
        "seed": cli.seed,
        "inputs": inputs(&cli.command),
        "tolerances": merge(json!({"order": cli.tol_order}), o.tolerances),
        "outputs": outputs,
    });
    fs::write(cli.out.join("manifest.json"), pretty(&manifest)).map_err(io)?;
    if cli.json {
        let _ = writeln!(out, "{}", o.report);
    } else {
        let _ = write!(out, "{}", summary(&o.report, ""));
    }
    Ok(())
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

fn summary(v: &Value, prefix: &str) -> String {
    let mut s = String::new();
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match x {
                    Value::Object(_) => s.push_str(&summary(x, &key)),
                    Value::Array(a) if a.len() > 8 => s.push_str(&format!("{key}: [{} items]\n", a.len())),
                    _ => s.push_str(&format!("{key}: {x}\n")),
                }
            }
        }
        other => s.push_str(&format!("{other}\n")),
    }
    s
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Order(_) => "order",
        Command::Simulate(_) => "simulate",
        Command::Certify(_) => "certify",
        Command::Oscillation(_) => "oscillation",
        Command::Witness(_) => "witness",
        Command::Limitset(_) => "limitset",
        Command::Floquet(_) => "floquet",
    }
}

fn inputs(c: &Command) -> Value {
    let sys = |p: &Path| {
        json!({
            "path": p.display().to_string(),
            "content": fs::read_to_string(p).ok().and_then(|t| serde_json::from_str::<Value>(&t).ok()),
        })
    };
    match c {
        Command::Order(a) => json!({"system": a.system.as_deref().map(sys), "cone": a.cone, "x": a.x, "y": a.y}),
        Command::Simulate(a) => json!({"system": sys(&a.system), "x0": a.x0, "t": a.t}),
        Command::Certify(a) => json!({"system": sys(&a.system), "horizon": a.horizon, "grid": a.grid, "pairs": a.pairs}),
        Command::Oscillation(a) => json!({"system": sys(&a.system), "x0": a.x0, "horizon": a.horizon, "samples": a.samples}),
        Command::Witness(a) => json!({"A": a.a, "B": a.b, "E": a.e, "float": a.float, "eps": a.eps, "lmax": a.lmax}),
        Command::Limitset(a) => json!({"system": sys(&a.system), "x0": a.x0, "transient": a.transient, "window": a.window, "refine": a.refine}),
        Command::Floquet(a) => json!({"system": sys(&a.system), "point": a.point, "period": a.period}),
    }
}

fn load_system(path: &Path) -> Result<SystemDef, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read system file {}: {e}", path.display())))?;
    SystemDef::from_json(&text).map_err(|e| domain("InvalidSystem", e))
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| Failure::Usage(format!("--{what}: expected comma-separated numbers, got {s:?}")))
}

fn parse_state(s: &str, what: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let v = parse_vector(s, what)?;
    if v.len() != n {
        return Err(Failure::Usage(format!("--{what}: expected {n} values, got {}", v.len())));
    }
    Ok(v)
}

fn csv_rows(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| integrate::fmt17(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn point_header(n: usize) -> String {
    (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Order(a) => order(cli, a),
        Command::Simulate(a) => simulate(a),
        Command::Certify(a) => certify(cli, a),
        Command::Oscillation(a) => oscillation_cmd(cli, a),
        Command::Witness(a) => witness_cmd(a),
        Command::Limitset(a) => limitset(cli, a),
        Command::Floquet(a) => floquet(a),
    }
}

fn order(cli: &Cli, a: &OrderArgs) -> Result<Outcome, Failure> {
    let x = parse_vector(&a.x, "x")?;
    let cone = match (&a.system, &a.cone) {
        (Some(p), _) => load_system(p)?.cone().clone(),
        (None, Some(text)) => {
            let spec: ConeSpec = serde_json::from_str(text).map_err(|e| Failure::Usage(format!("--cone: {e}")))?;
            Cone::validate(&spec).map_err(|e| domain("InvalidCone", e))?
        }
        (None, None) => Cone::positive_orthant(x.len()).map_err(|e| domain("InvalidCone", e))?,
    };
    let y = parse_state(&a.y, "y", x.len())?;
    let relation = cone.order_relation(&x, &y, cli.tol_order).map_err(|e| domain("DimensionMismatch", e))?;
    let (lo, hi) = cone.slack_range(&x, &y);
    Ok(Outcome {
        report: json!({"relation": relation, "min_slack": lo, "max_slack": hi}),
        files: Vec::new(),
        tolerances: json!({}),
    })
}

fn integrate_opts(a: &SimulateArgs) -> IntegrateOptions {
    let o = match a.method {
        MethodArg::Rk4 => IntegrateOptions::rk4(a.step.unwrap_or(1e-3)),
        MethodArg::Dp54 => {
            let o = IntegrateOptions::dp54(a.rtol, a.atol);
            match a.step {
                Some(h) => o.with_max_step(h),
                None => o,
            }
        }
    };
    o.with_norm_cap(a.norm_cap)
}

fn simulate(a: &SimulateArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.system)?;
    let x0 = parse_state(&a.x0, "x0", sys.dimension())?;
    let opts = integrate_opts(a);
    let run = |d| integrate::integrate(&sys, &x0, a.t, d, &opts).map_err(|e| domain("Integration", e));
    let traj = match a.direction {
        DirectionArg::Forward => run(Direction::Forward)?,
        DirectionArg::Backward => run(Direction::Backward)?,
        DirectionArg::Both => Trajectory::stitch(&run(Direction::Backward)?, &run(Direction::Forward)?).map_err(|e| domain("Integration", e))?,
    };
    let report = json!({
        "samples": traj.len(),
        "t_start": traj.times()[0],
        "t_end": traj.times()[traj.len() - 1],
        "final_state": traj.last_state(),
        "direction": traj.direction(),
    });
    Ok(Outcome {
        report,
        files: vec![("trajectory.csv".into(), traj.to_csv())],
        tolerances: json!({"method": opts.method, "rel_tol": opts.rel_tol, "abs_tol": opts.abs_tol, "step": a.step, "norm_cap": opts.norm_cap}),
    })
}

fn sampling_box(b: &BoxArgs, n: usize) -> Result<SamplingBox, Failure> {
    let expand = |s: &str, what| -> Result<Vec<f64>, Failure> {
        let v = parse_vector(s, what)?;
        match v.len() {
            1 => Ok(vec![v[0]; n]),
            k if k == n => Ok(v),
            k => Err(Failure::Usage(format!("--{what}: expected 1 or {n} values, got {k}"))),
        }
    };
    Ok(SamplingBox {
        lo: expand(&b.box_lo, "box-lo")?,
        hi: expand(&b.box_hi, "box-hi")?,
    })
}

fn certify(cli: &Cli, a: &CertifyArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.system)?;
    let n = sys.dimension();
    let mut opts = SamplingOptions::new(n, a.pairs, a.horizon, cli.seed).with_box(sampling_box(&a.sample_box, n)?);
    opts.tol = cli.tol_order;
    opts.grid = a.grid;
    let linear = sys.linear_matrix().filter(|_| !a.empirical && sys.cone().orthant_signs().is_some());
    let cert = match linear {
        Some(m) => monotonicity::certify_linear(m, sys.cone(), a.horizon, a.grid),
        None => monotonicity::estimate_tstar_empirical(&sys, &opts),
    }
    .map_err(|e| domain("Monotonicity", e))?;
    let mut files = vec![("evidence.txt".to_string(), format!("{}\n", cert.evidence))];
    if a.verify && cert.kind.direction().is_some() {
        let mut vopts = opts.clone();
        vopts.pairs = a.trials;
        let rep = monotonicity::verify_order_preservation(&sys, &cert, &vopts).map_err(|e| domain("Monotonicity", e))?;
        files.push(("verification.json".into(), serde_json::to_string_pretty(&rep).expect("serializable") + "\n"));
    }
    Ok(Outcome {
        report: serde_json::to_value(cert.report()).expect("serializable"),
        files,
        tolerances: json!({"grid": a.grid, "horizon": a.horizon, "substeps": opts.substeps, "norm_cap": opts.norm_cap}),
    })
}

fn oscillation_cmd(cli: &Cli, a: &OscillationArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.system)?;
    let x0 = parse_state(&a.x0, "x0", sys.dimension())?;
    if !(a.horizon > 0.0) || a.samples == 0 {
        return Err(Failure::Usage("--horizon and --samples must be positive".into()));
    }
    let iopts = IntegrateOptions::dp54(1e-10, 1e-12).with_norm_cap(a.norm_cap);
    let dt = a.horizon / a.samples as f64;
    let fwd = limit_set::sample_orbit(&sys, &x0, dt, a.samples, Direction::Forward, &iopts).map_err(|e| domain("Integration", e))?;
    let bwd = limit_set::sample_orbit(&sys, &x0, dt, a.samples, Direction::Backward, &iopts);
    let complete = bwd.is_ok();
    let mut times = Vec::new();
    let mut states = Vec::new();
    if let Ok(b) = bwd {
        for (k, s) in b.into_iter().enumerate().skip(1).collect::<Vec<_>>().into_iter().rev() {
            times.push(-(k as f64) * dt);
            states.push(s);
        }
    }
    for (k, s) in fwd.into_iter().enumerate() {
        times.push(k as f64 * dt);
        states.push(s);
    }
    let traj = Trajectory::new(times, states, Direction::Forward, None).map_err(|e| domain("Integration", e))?;
    let verdict = oscillation::non_oscillation_verdict_with(&traj, sys.cone(), cli.tol_order, a.max_pairs);
    let mut report = verdict.to_json();
    report["orbit"] = json!(if complete { "complete" } else { "forward-only" });
    let mut files = vec![("trajectory.csv".to_string(), traj.to_csv())];
    if verdict.status == VerdictStatus::Oscillating {
        let witnesses = json!({
            "increasing": verdict.witness_increasing,
            "decreasing": verdict.witness_decreasing,
            "disjoint": verdict.disjoint,
        });
        files.push(("counterexample.json".into(), serde_json::to_string_pretty(&witnesses).expect("serializable") + "\n"));
    }
    if cli.emit_plot_data {
        let mut csv = String::from("kind,a,b\n");
        for w in [&verdict.witness_increasing, &verdict.witness_decreasing].into_iter().flatten() {
            csv.push_str(&format!("{:?},{},{}\n", w.kind, integrate::fmt17(w.a), integrate::fmt17(w.b)));
        }
        files.push(("intervals.csv".into(), csv));
    }
    Ok(Outcome {
        report,
        files,
        tolerances: json!({"rel_tol": 1e-10, "abs_tol": 1e-12, "max_pairs": a.max_pairs, "norm_cap": a.norm_cap}),
    })
}

fn witness_cmd(a: &WitnessArgs) -> Result<Outcome, Failure> {
    let bad = |e: witness::WitnessError| match e {
        witness::WitnessError::InvalidProblem(m) => Failure::Usage(m),
        other => domain("Witness", other),
    };
    let wit = |e: witness::WitnessError| {
        let kind = match e {
            witness::WitnessError::InvalidProblem(_) => "InvalidProblem",
            witness::WitnessError::ToleranceAmbiguity(_) => "ToleranceAmbiguity",
            witness::WitnessError::IterationCap(_) => "IterationCap",
            witness::WitnessError::InvariantViolated(_) => "InvariantViolated",
        };
        domain(kind, e)
    };
    let mut report;
    if a.float {
        let eps = a.eps.unwrap_or(0.0);
        let val = |s: &str, what: &str| -> Result<f64, Failure> {
            crate::field::Expr::parse(s, 0)
                .ok()
                .and_then(|e| e.eval(&[]).ok())
                .ok_or_else(|| Failure::Usage(format!("--{what}: cannot evaluate {s:?}")))
        };
        let prob = WitnessProblem {
            a: val(&a.a, "A")?,
            b: val(&a.b, "B")?,
            e: val(&a.e, "E")?,
        };
        let res = witness::construct_float(&prob, eps).map_err(wit)?;
        report = res.to_json(&witness::Float { eps });
        if a.oracle {
            let o = witness::brute_force_float(&prob, a.lmax.unwrap_or(1)).map_err(wit)?;
            report["oracle"] = o.map_or(Value::Null, |(l, n)| json!({"l": l, "n": n}));
        }
    } else {
        let prob = WitnessProblem::parse(&a.a, &a.b, &a.e).map_err(bad)?;
        let res = witness::construct_exact(&prob).map_err(wit)?;
        report = res.to_json(&witness::Exact);
        if a.oracle {
            let o = witness::brute_force_exact(&prob, a.lmax.unwrap_or(1)).map_err(wit)?;
            report["oracle"] = o.map_or(Value::Null, |(l, n)| json!({"l": witness::bigint_json(&l), "n": witness::bigint_json(&n)}));
        }
    }
    Ok(Outcome {
        report,
        files: Vec::new(),
        tolerances: json!({"arithmetic": if a.float { "float" } else { "rational" }, "eps": a.eps}),
    })
}

fn limitset(cli: &Cli, a: &LimitsetArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.system)?;
    let x0 = parse_state(&a.x0, "x0", sys.dimension())?;
    let direction = match a.direction {
        LimitDirectionArg::Omega => LimitDirection::Omega,
        LimitDirectionArg::Alpha => LimitDirection::Alpha,
    };
    let mut eopts = EstimateOptions::new(a.transient, a.window);
    eopts.refine = a.refine;
    eopts.samples = a.samples;
    let kind = |e: &limit_set::LimitSetError| match e {
        limit_set::LimitSetError::AlphaUnbounded { .. } => "AlphaUnbounded",
        limit_set::LimitSetError::BlowUp { .. } => "BlowUp",
        limit_set::LimitSetError::InvalidArgument(_) => "InvalidArgument",
        _ => "LimitSet",
    };
    let fail = |e: limit_set::LimitSetError| domain(kind(&e), e);
    let est = limit_set::estimate_limit_set(&sys, &x0, direction, &eopts).map_err(fail)?;
    let copts = ClassifyOptions::default();
    let class = limit_set::classify_limit_set(&sys, &est, &copts).map_err(fail)?;
    let cone = sys.cone();
    let non_ordering = limit_set::non_ordering_check(&est.points, cone, cli.tol_order);
    let projection = limit_set::project_and_check(&est.points, cone, None).map_err(fail)?;

    let mut spectra = Vec::new();
    let mut report = json!({});
    match &class.verdict {
        LimitSetVerdict::Equilibrium { point } | LimitSetVerdict::ContainsEquilibrium { point } => {
            if let Ok(s) = limit_set::spectrum_at_equilibrium(&sys, point) {
                spectra.push(s.to_json());
            }
        }
        LimitSetVerdict::PeriodicOrbit { period, point } => {
            report["period"] = json!(period);
            match limit_set::floquet_multipliers(&sys, point, *period) {
                Ok(s) => spectra.push(s.to_json()),
                Err(e) => spectra.push(json!({"error": e.to_string()})),
            }
        }
        LimitSetVerdict::Inconclusive => {}
    }
    let verdict_name = match &class.verdict {
        LimitSetVerdict::Equilibrium { .. } => "Equilibrium",
        LimitSetVerdict::PeriodicOrbit { .. } => "PeriodicOrbit",
        LimitSetVerdict::ContainsEquilibrium { .. } => "ContainsEquilibrium",
        LimitSetVerdict::Inconclusive => "Inconclusive",
    };
    let obj: &mut Map<String, Value> = report.as_object_mut().expect("object");
    obj.insert("verdict".into(), json!(verdict_name));
    obj.insert("classification".into(), serde_json::to_value(&class).expect("serializable"));
    obj.insert("non_ordering".into(), serde_json::to_value(&non_ordering).expect("serializable"));
    obj.insert("injectivity_margin".into(), json!(projection.injectivity_margin));
    obj.insert("spectra".into(), Value::Array(spectra));
    obj.insert("hausdorff_gap".into(), json!(est.hausdorff_gap));
    obj.insert("converged".into(), json!(est.converged));

    let n = sys.dimension();
    let mut files = vec![("points.csv".to_string(), csv_rows(&point_header(n), est.points.iter().cloned()))];
    if cli.emit_plot_data {
        let header = (1..n).map(|i| format!("y{i}")).collect::<Vec<_>>().join(",");
        files.push(("projected.csv".into(), csv_rows(&header, projection.projected.iter().cloned())));
    }
    Ok(Outcome {
        report,
        files,
        tolerances: json!({
            "integration_rel_tol": eopts.rel_tol,
            "integration_abs_tol": eopts.abs_tol,
            "gap_threshold": eopts.gap_threshold,
            "equilibrium_residual": limit_set::EQUILIBRIUM_RESIDUAL,
            "recurrence_rel": copts.recurrence_rel,
            "newton_iterations": copts.newton_iterations,
        }),
    })
}

fn floquet(a: &FloquetArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.system)?;
    let p = parse_state(&a.point, "point", sys.dimension())?;
    let rep = limit_set::floquet_multipliers(&sys, &p, a.period).map_err(|e| {
        let kind = match e {
            limit_set::LimitSetError::NotPeriodic { .. } => "NotPeriodic",
            _ => "Floquet",
        };
        domain(kind, e)
    })?;
    Ok(Outcome {
        report: rep.to_json(),
        files: Vec::new(),
        tolerances: json!({"rel_tol": 1e-12, "abs_tol": 1e-14, "recurrence": 1e-4, "unit_circle": 1e-3}),
    })
}
