//! `nodestab` command-line front end.
//!
//! Every run writes `meta.json` into `--out` with the fully resolved
//! configuration; passing that file back with `--config` repeats the run.
//! Exit codes: 0 success, 1 runtime or numeric failure, 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nodestab::experiments::{
    run_linear_pole_study, run_solver_swap_demo, run_teacher_student_study, StudyConfig, SwapConfig,
};
use nodestab::init::{default_initialize, sii_initialize_with, InitReport, DEFAULT_BIAS_BOUND};
use nodestab::network::{Activation, ModelFile, ModelMeta, NetDims};
use nodestab::solver::{fmt_f64, integrate_fixed_bounded, InputSignal, InterpMode, SolverError, SolverKind, Trajectory};
use nodestab::stability::{model_poles, region_grid, PoleRecord, SamplerConfig, DEFAULT_MARGIN};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "nodestab", version, about = "Runge-Kutta stability regions and stability-informed initialization")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// A previous run's meta.json, or for `study` a plain study config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// |R_p(z)| on a grid of the complex plane.
    Region(RegionArgs),
    /// Initialize a network and report its linearized eigenvalues.
    Init(InitArgs),
    /// Linearized poles of a saved model, classified against a solver region.
    Poles(PolesArgs),
    /// Fixed-step rollout of a saved model.
    Simulate(SimulateArgs),
    /// Run one of the studies and write its results tree.
    Study(StudyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Region(_) => "region",
            Command::Init(_) => "init",
            Command::Poles(_) => "poles",
            Command::Simulate(_) => "simulate",
            Command::Study(_) => "study",
        }
    }
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(format!("range {lo}:{hi} must satisfy lo < hi"));
    }
    Ok((lo, hi))
}

fn parse_order(s: &str) -> std::result::Result<u32, String> {
    match s.parse::<u32>() {
        Ok(p @ 1..=4) => Ok(p),
        _ => Err(format!("order must be 1, 2, 3 or 4, got '{s}'")),
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'"))).collect()
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Solver order p.
    #[arg(long, value_parser = parse_order)]
    order: Option<u32>,
    /// Real-axis range lo:hi.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    re: Option<(f64, f64)>,
    /// Imaginary-axis range lo:hi.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    im: Option<(f64, f64)>,
    /// Points per axis.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    res: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegionResolved {
    order: u32,
    re: (f64, f64),
    im: (f64, f64),
    res: u32,
}

#[derive(Args, Debug)]
struct InitArgs {
    /// Layer widths from state to state, e.g. 3,64,64,3.
    #[arg(long)]
    dims: Option<String>,
    /// Number of exogenous inputs.
    #[arg(long)]
    input_dim: Option<usize>,
    #[arg(long)]
    activation: Option<Activation>,
    #[arg(long, value_parser = parse_order)]
    order: Option<u32>,
    #[arg(long, value_parser = parse_positive)]
    step: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Sample real eigenvalues only.
    #[arg(long)]
    real_only: bool,
    /// Safety margin of the region test.
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Sii,
    Default,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InitResolved {
    dims: Vec<usize>,
    input_dim: usize,
    activation: Activation,
    order: u32,
    step: f64,
    method: Method,
    real_only: bool,
    margin: f64,
}

#[derive(Args, Debug)]
struct PolesArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_parser = parse_order)]
    order: Option<u32>,
    #[arg(long, value_parser = parse_positive)]
    step: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolesResolved {
    model: PathBuf,
    order: u32,
    step: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// euler, midpoint, rk3 or rk4.
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long, value_parser = parse_positive)]
    step: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Initial state, comma separated; defaults to zeros.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Constant input values (comma separated) or a CSV file `t,u0,...`.
    #[arg(long, allow_hyphen_values = true)]
    input: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SimulateResolved {
    model: PathBuf,
    solver: SolverKind,
    step: f64,
    steps: usize,
    x0: Option<Vec<f64>>,
    input: Option<String>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long, value_enum)]
    kind: Option<StudyKind>,
    /// Number of seeds.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StudyKind {
    TeacherStudent,
    LinearPoles,
    SolverSwap,
}

impl StudyKind {
    fn dir_name(self) -> &'static str {
        match self {
            StudyKind::TeacherStudent => "teacher-student",
            StudyKind::LinearPoles => "linear-poles",
            StudyKind::SolverSwap => "solver-swap",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StudyResolved {
    kind: StudyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    swap: Option<SwapConfig>,
}

/// The `meta.json` envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    command: String,
    seed: u64,
    format: Format,
    out: PathBuf,
    args: Value,
}

/// Fails with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Configuration loaded from `--config`.
enum Loaded {
    Meta(Meta),
    Plain(Value),
}

fn load_config(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| anyhow!("config {}: line {}, column {}: {e}", path.display(), e.line(), e.column()))?;
    if value.get("command").is_some() && value.get("args").is_some() {
        Ok(Loaded::Meta(serde_json::from_value(value).with_context(|| format!("config {}", path.display()))?))
    } else {
        Ok(Loaded::Plain(value))
    }
}

/// Saved arguments for `command`, if the config is a meta envelope for it.
fn saved_args<T: for<'de> Deserialize<'de>>(loaded: Option<&Loaded>, command: &str) -> Result<Option<T>> {
    match loaded {
        Some(Loaded::Meta(m)) => {
            if m.command != command {
                return Err(usage(format!("config was written by '{}', not '{command}'", m.command)));
            }
            Ok(Some(serde_json::from_value(m.args.clone()).context("config arguments")?))
        }
        Some(Loaded::Plain(_)) if command != "study" => {
            Err(usage(format!("'{command}' only accepts a meta.json written by a previous run as --config")))
        }
        _ => Ok(None),
    }
}

struct Ctx {
    seed: u64,
    format: Format,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn parse_dims(s: &str, input_dim: usize) -> Result<NetDims> {
    let widths: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| usage(format!("--dims: bad width '{t}'"))))
        .collect::<Result<_>>()?;
    if widths.len() < 2 {
        return Err(usage("--dims needs at least the input and output width, e.g. 2,2 or 3,64,64,3"));
    }
    let (first, last) = (widths[0], widths[widths.len() - 1]);
    if first != last {
        return Err(usage(format!(
            "--dims must start and end with the state dimension (got {first} and {last}); pass inputs with --input-dim"
        )));
    }
    NetDims::new(first, input_dim, widths[1..widths.len() - 1].to_vec()).map_err(|e| usage(format!("--dims: {e}")))
}

fn resolve_region(a: &RegionArgs, saved: Option<RegionResolved>) -> Result<RegionResolved> {
    Ok(RegionResolved {
        order: a.order.or(saved.as_ref().map(|s| s.order)).ok_or_else(|| usage("--order is required (1, 2, 3 or 4)"))?,
        re: a.re.or(saved.as_ref().map(|s| s.re)).unwrap_or((-3.5, 0.5)),
        im: a.im.or(saved.as_ref().map(|s| s.im)).unwrap_or((-3.5, 3.5)),
        res: a.res.or(saved.as_ref().map(|s| s.res)).unwrap_or(401),
    })
}

fn cmd_region(ctx: &Ctx, r: &RegionResolved) -> Result<()> {
    let grid = region_grid(r.order, r.re, r.im, r.res as usize).map_err(|e| usage(e.to_string()))?;
    match ctx.format {
        Format::Csv => ctx.write(&format!("region_p{}.csv", r.order), &grid.to_csv())?,
        Format::Json => {
            let v = json!({ "order": grid.order, "re": grid.re, "im": grid.im, "absR": grid.abs_r });
            ctx.write(&format!("region_p{}.json", r.order), &serde_json::to_string_pretty(&v)?)?
        }
    };
    Ok(())
}

fn resolve_init(a: &InitArgs, saved: Option<InitResolved>) -> Result<InitResolved> {
    let dims = match (&a.dims, &saved) {
        (Some(s), _) => s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| usage(format!("--dims: bad width '{t}'"))))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(s)) => s.dims.clone(),
        (None, None) => return Err(usage("--dims is required, e.g. --dims 3,64,64,3")),
    };
    Ok(InitResolved {
        dims,
        input_dim: a.input_dim.or(saved.as_ref().map(|s| s.input_dim)).unwrap_or(0),
        activation: a.activation.or(saved.as_ref().map(|s| s.activation)).unwrap_or(Activation::Elu),
        order: a.order.or(saved.as_ref().map(|s| s.order)).unwrap_or(1),
        step: a.step.or(saved.as_ref().map(|s| s.step)).unwrap_or(0.1),
        method: a.method.or(saved.as_ref().map(|s| s.method)).unwrap_or(Method::Sii),
        real_only: a.real_only || saved.as_ref().is_some_and(|s| s.real_only),
        margin: a.margin.or(saved.as_ref().map(|s| s.margin)).unwrap_or(DEFAULT_MARGIN),
    })
}

fn cmd_init(ctx: &Ctx, r: &InitResolved) -> Result<()> {
    let text: Vec<String> = r.dims.iter().map(ToString::to_string).collect();
    let dims = parse_dims(&text.join(","), r.input_dim)?;
    let mut rng = ctx.rng();
    let (net, report) = match r.method {
        Method::Sii => {
            let cfg = SamplerConfig::new(r.order, r.step, dims.state_dim, !r.real_only).with_margin(r.margin);
            let sii = sii_initialize_with(&dims, r.activation, &cfg, DEFAULT_BIAS_BOUND, &mut rng)?;
            let report = InitReport::for_sii(&sii, ctx.seed)?;
            (sii.net, report)
        }
        Method::Default => {
            let net = default_initialize(&dims, r.activation, &mut rng)?;
            let report = InitReport::for_default(&net, ctx.seed, r.order, r.step)?;
            (net, report)
        }
    };
    let meta = ModelMeta {
        seed: Some(ctx.seed),
        init_method: report.method.clone(),
        solver: Some(r.order),
        step_size: Some(r.step),
    };
    ctx.write("model.json", &ModelFile::from_net(&net, meta).to_json())?;
    ctx.write("init_report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<nodestab::FeedforwardNet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    let file = ModelFile::from_json(&text).with_context(|| format!("model {}", path.display()))?;
    file.to_net().with_context(|| format!("model {}", path.display()))
}

fn resolve_poles(a: &PolesArgs, saved: Option<PolesResolved>) -> Result<PolesResolved> {
    Ok(PolesResolved {
        model: a
            .model
            .clone()
            .or(saved.as_ref().map(|s| s.model.clone()))
            .ok_or_else(|| usage("--model is required"))?,
        order: a.order.or(saved.as_ref().map(|s| s.order)).unwrap_or(1),
        step: a.step.or(saved.as_ref().map(|s| s.step)).unwrap_or(0.1),
    })
}

fn poles_csv(poles: &[PoleRecord]) -> String {
    let mut out = String::from("re,im,z_re,z_im,inside\n");
    for p in poles {
        out.push_str(&format!("{},{},{},{},{}\n", fmt_f64(p.re), fmt_f64(p.im), fmt_f64(p.z_re), fmt_f64(p.z_im), p.inside));
    }
    out
}

fn cmd_poles(ctx: &Ctx, r: &PolesResolved) -> Result<()> {
    let net = load_model(&r.model)?;
    let poles = model_poles(&net, r.step, r.order)?;
    match ctx.format {
        Format::Json => ctx.write("poles.json", &serde_json::to_string_pretty(&poles)?)?,
        Format::Csv => ctx.write("poles.csv", &poles_csv(&poles))?,
    };
    Ok(())
}

fn resolve_simulate(a: &SimulateArgs, saved: Option<SimulateResolved>) -> Result<SimulateResolved> {
    Ok(SimulateResolved {
        model: a
            .model
            .clone()
            .or(saved.as_ref().map(|s| s.model.clone()))
            .ok_or_else(|| usage("--model is required"))?,
        solver: a.solver.or(saved.as_ref().map(|s| s.solver)).unwrap_or(SolverKind::Rk4),
        step: a.step.or(saved.as_ref().map(|s| s.step)).unwrap_or(0.1),
        steps: a.steps.or(saved.as_ref().map(|s| s.steps)).unwrap_or(100),
        x0: a.x0.clone().or(saved.as_ref().and_then(|s| s.x0.clone())),
        input: a.input.clone().or(saved.as_ref().and_then(|s| s.input.clone())),
    })
}

fn read_input(spec: &str, dim: usize) -> Result<InputSignal> {
    if let Ok(values) = parse_list(spec) {
        if values.len() != dim {
            bail!("--input has {} values but the model takes {dim} inputs", values.len());
        }
        return Ok(InputSignal::new(vec![0.0], vec![values], InterpMode::ZeroOrderHold)?);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading input file {spec}"))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let row = parse_list(line).map_err(|e| anyhow!("{spec}: line {}: {e}", i + 1))?;
        if row.len() != dim + 1 {
            bail!("{spec}: line {}: expected t plus {dim} input columns, found {} columns", i + 1, row.len());
        }
        times.push(row[0]);
        values.push(row[1..].to_vec());
    }
    InputSignal::new(times, values, InterpMode::Linear).with_context(|| format!("input file {spec}"))
}

fn trajectory_json(t: &Trajectory) -> Result<String> {
    Ok(serde_json::to_string_pretty(&json!({ "times": t.times, "states": t.states }))?)
}

fn cmd_simulate(ctx: &Ctx, r: &SimulateResolved) -> Result<()> {
    let net = load_model(&r.model)?;
    let d = net.state_dim();
    let x0 = r.x0.clone().unwrap_or_else(|| vec![0.0; d]);
    if x0.len() != d {
        bail!("--x0 has {} entries but the model state dimension is {d}", x0.len());
    }
    let sig = match (&r.input, net.input_dim()) {
        (Some(spec), du) => read_input(spec, du)?,
        (None, 0) => InputSignal::none(),
        (None, du) => InputSignal::new(vec![0.0], vec![vec![0.0; du]], InterpMode::ZeroOrderHold)?,
    };
    let scale = x0.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let traj = integrate_fixed_bounded(&r.solver.tableau(), &net, &x0, &sig, r.step, r.steps, 1e7 * scale)
        .map_err(|e| match e {
            SolverError::Divergence { step, time } => {
                anyhow!("trajectory diverged at step {step} (t = {time}) with solver {}", r.solver)
            }
            other => other.into(),
        })?;
    match ctx.format {
        Format::Csv => ctx.write("trajectory.csv", &traj.to_csv())?,
        Format::Json => ctx.write("trajectory.json", &trajectory_json(&traj)?)?,
    };
    Ok(())
}

fn resolve_study(a: &StudyArgs, loaded: Option<&Loaded>, seed: Option<u64>) -> Result<StudyResolved> {
    let mut saved: Option<StudyResolved> = None;
    let mut plain: Option<Value> = None;
    match loaded {
        Some(Loaded::Meta(_)) => saved = saved_args(loaded, "study")?,
        Some(Loaded::Plain(v)) => plain = Some(v.clone()),
        None => {}
    }
    let kind = a
        .kind
        .or(saved.as_ref().map(|s| s.kind))
        .ok_or_else(|| usage("--kind is required (teacher-student, linear-poles or solver-swap)"))?;
    let parse_plain = |what: &str| -> Result<Option<Value>> {
        Ok(plain.clone().map(|v| v.get(what).cloned().unwrap_or(v)))
    };
    if kind == StudyKind::SolverSwap {
        let swap = match (parse_plain("swap")?, saved.as_ref().and_then(|s| s.swap.clone())) {
            (Some(v), _) => serde_json::from_value(v).context("solver-swap config")?,
            (None, Some(s)) => s,
            (None, None) => SwapConfig::default(),
        };
        return Ok(StudyResolved { kind, study: None, swap: Some(swap) });
    }
    let mut study = match (parse_plain("study")?, saved.and_then(|s| s.study)) {
        (Some(v), _) => {
            let base = match kind {
                StudyKind::LinearPoles => StudyConfig::linear_poles(),
                _ => StudyConfig::teacher_student(),
            };
            merge_config(base, v)?
        }
        (None, Some(s)) => s,
        (None, None) => match kind {
            StudyKind::LinearPoles => StudyConfig::linear_poles(),
            _ => StudyConfig::teacher_student(),
        },
    };
    if let Some(s) = a.seeds {
        study.seeds = s as usize;
    }
    if let Some(s) = seed {
        study.master_seed = s;
    }
    Ok(StudyResolved { kind, study: Some(study), swap: None })
}

/// Overlays the keys present in `patch` onto `base`, recursively.
fn merge_config(base: StudyConfig, patch: Value) -> Result<StudyConfig> {
    fn merge(a: &mut Value, b: Value) {
        match (a, b) {
            (Value::Object(a), Value::Object(b)) => {
                for (k, v) in b {
                    merge(a.entry(k).or_insert(Value::Null), v);
                }
            }
            (a, b) => *a = b,
        }
    }
    let mut v = serde_json::to_value(base)?;
    merge(&mut v, patch);
    serde_json::from_value(v).context("study config")
}

fn cmd_study(ctx: &Ctx, r: &StudyResolved) -> Result<()> {
    let dir = ctx.out.join(r.kind.dir_name());
    match r.kind {
        StudyKind::SolverSwap => {
            let demo = run_solver_swap_demo(r.swap.as_ref().expect("resolved"))?;
            demo.write(&dir)?;
        }
        StudyKind::TeacherStudent => {
            let cfg = r.study.as_ref().expect("resolved");
            let res = run_teacher_student_study(cfg)?;
            res.write(&dir)?;
            if ctx.format == Format::Json {
                fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&res.records)?)?;
            }
            for rec in res.records.iter().filter(|r| r.error.is_some()) {
                eprintln!("seed {} ({}): {}", rec.seed, rec.init_method, rec.error.as_deref().unwrap_or(""));
            }
            if res.failed_seeds.len() == cfg.seeds {
                bail!("all {} seeds failed", cfg.seeds);
            }
        }
        StudyKind::LinearPoles => {
            let cfg = r.study.as_ref().expect("resolved");
            let res = run_linear_pole_study(cfg)?;
            res.write(&dir)?;
            if ctx.format == Format::Json {
                fs::write(dir.join("poles.json"), serde_json::to_string_pretty(&res.poles)?)?;
            }
            let mut all_failed = true;
            for (solver, sr) in &res.per_solver {
                for rec in sr.records.iter().filter(|r| r.error.is_some()) {
                    eprintln!("{solver} seed {}: {}", rec.seed, rec.error.as_deref().unwrap_or(""));
                }
                all_failed &= sr.failed_seeds.len() == cfg.seeds;
            }
            if all_failed {
                bail!("all seeds failed for every solver");
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let loaded = cli.global.config.as_deref().map(load_config).transpose()?;
    let meta_env = match &loaded {
        Some(Loaded::Meta(m)) => Some(m.clone()),
        _ => None,
    };
    let command = cli.command.name();
    let seed = cli.global.seed.or(meta_env.as_ref().map(|m| m.seed)).unwrap_or(0);
    let format = cli.global.format.or(meta_env.as_ref().map(|m| m.format)).unwrap_or(match cli.command {
        Command::Poles(_) => Format::Json,
        _ => Format::Csv,
    });
    let out = cli.global.out.clone().or(meta_env.as_ref().map(|m| m.out.clone())).unwrap_or_else(|| "results".into());
    let ctx = Ctx { seed, format, out };

    enum Resolved {
        Region(RegionResolved),
        Init(InitResolved),
        Poles(PolesResolved),
        Simulate(SimulateResolved),
        Study(StudyResolved),
    }
    let resolved = match &cli.command {
        Command::Region(a) => Resolved::Region(resolve_region(a, saved_args(loaded.as_ref(), command)?)?),
        Command::Init(a) => Resolved::Init(resolve_init(a, saved_args(loaded.as_ref(), command)?)?),
        Command::Poles(a) => Resolved::Poles(resolve_poles(a, saved_args(loaded.as_ref(), command)?)?),
        Command::Simulate(a) => Resolved::Simulate(resolve_simulate(a, saved_args(loaded.as_ref(), command)?)?),
        Command::Study(a) => Resolved::Study(resolve_study(a, loaded.as_ref(), cli.global.seed.or(meta_env.map(|m| m.seed)))?),
    };
    let args = match &resolved {
        Resolved::Region(r) => serde_json::to_value(r)?,
        Resolved::Init(r) => serde_json::to_value(r)?,
        Resolved::Poles(r) => serde_json::to_value(r)?,
        Resolved::Simulate(r) => serde_json::to_value(r)?,
        Resolved::Study(r) => serde_json::to_value(r)?,
    };
    fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    let meta = Meta { command: command.into(), seed: ctx.seed, format: ctx.format, out: ctx.out.clone(), args };
    ctx.write("meta.json", &serde_json::to_string_pretty(&meta)?)?;

    match &resolved {
        Resolved::Region(r) => cmd_region(&ctx, r),
        Resolved::Init(r) => cmd_init(&ctx, r),
        Resolved::Poles(r) => cmd_poles(&ctx, r),
        Resolved::Simulate(r) => cmd_simulate(&ctx, r),
        Resolved::Study(r) => cmd_study(&ctx, r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
