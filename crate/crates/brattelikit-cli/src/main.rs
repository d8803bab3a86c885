use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use brattelikit::bundle::{AnyBundle, WeightedDiagram};
use brattelikit::certify::{certify, CertifyConfig, Verdict};
use brattelikit::components::periodic_component_scan;
use brattelikit::cone::unique_weight_report;
use brattelikit::examples;
use brattelikit::orders::{EdgeOrders, FinitePath, OrderedSide};
use brattelikit::paths::{orbit, Extension, TruncatedPath};
use brattelikit::random::{random_bundle, RandomSpec};
use brattelikit::renorm::{renorm_times, shift_weighted};
use brattelikit::source::{NRule, Rule};
use brattelikit::surface::{build_surface_with, export_svg, functoriality_check};
use brattelikit::weights::{mpn_weight_series, pf_weights, pf_weights_exact, solve_weights, validate_weight, WeightFunction};
use brattelikit::{BiInfiniteDiagram, Error, MatrixSource, Scalar, Side, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exact,
    Float,
}

/// Settings shared by every command. Recorded verbatim in each output.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
struct RunConfig {
    mode: Option<Mode>,
    tol: f64,
    geometry_tol: f64,
    depth: usize,
    max_shift: usize,
    window_depth: usize,
    n_terms: usize,
    seed: u64,
    output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            tol: 1e-12,
            geometry_tol: 1e-9,
            depth: 8,
            max_shift: 40,
            window_depth: 3,
            n_terms: 100,
            seed: 0,
            output_dir: None,
        }
    }
}

#[derive(Args, Debug)]
struct Global {
    /// JSON file with run settings; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Arithmetic for weights and surfaces
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Parser, Debug)]
#[command(name = "brattelikit", version, about = "Bi-infinite Bratteli diagrams, flat surfaces and renormalization")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Start {
    Min,
    Max,
    Path,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check dimensions, orders and any weights in a spec
    Validate { spec: String },
    /// Iterate the Vershik map and print one JSON line per path
    Vershik {
        spec: String,
        #[arg(long, value_enum, default_value = "min")]
        start: Start,
        /// Starting path as JSON, for --start path
        #[arg(long)]
        path: Option<String>,
        /// Vertex on the deepest level, for --start min|max
        #[arg(long, default_value_t = 0)]
        vertex: usize,
        /// Negative values iterate the predecessor
        #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
        steps: i64,
        /// Extend the map across maximal paths on periodic chains
        #[arg(long)]
        extend: bool,
    },
    /// Weights of one side with their validation report
    Weights {
        spec: String,
        #[arg(long, conflicts_with_all = ["pf", "series"])]
        solve: bool,
        #[arg(long, conflicts_with = "series")]
        pf: bool,
        /// The weight series of an M(p, n) family
        #[arg(long)]
        series: bool,
        #[arg(long, default_value = "positive")]
        side: String,
    },
    /// Build the rectangle model and export it
    Surface {
        spec: String,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Negative depth (defaults to what the weights allow, at most 2)
        #[arg(long)]
        minus_depth: Option<usize>,
    },
    /// Apply the shift to a weighted diagram
    Renormalize {
        spec: String,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        check_functoriality: bool,
    },
    /// Run the unique-ergodicity certificate
    Certify {
        spec: String,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        n_terms: Option<usize>,
        #[arg(long)]
        max_shift: Option<usize>,
        #[arg(long)]
        window_depth: Option<usize>,
        /// Exit with status 4 on an inconclusive verdict
        #[arg(long)]
        strict: bool,
    },
    /// Built-in bundles
    Examples {
        #[command(subcommand)]
        action: ExampleAction,
    },
}

#[derive(Subcommand, Debug)]
enum ExampleAction {
    List,
    Emit { name: String },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Tolerance { .. } => 3,
            Error::DimensionMismatch { .. } | Error::TailPolicyFail { .. } | Error::UnknownRule(_) | Error::BadParams(_) | Error::Json(_) => 2,
            _ => 1,
        };
        Failure { code, kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, kind: "Io".into(), message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type Out = Result<(Value, u8), Failure>;

fn run_config(g: &Global) -> Result<RunConfig, Failure> {
    let mut cfg: RunConfig = match &g.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Ok(m) = std::env::var("BRATTELIKIT_MODE") {
        cfg.mode = Some(Mode::from_str(&m, true).map_err(|_| Failure { code: 2, kind: "BadParams".into(), message: format!("BRATTELIKIT_MODE={m:?}") })?);
    }
    if g.mode.is_some() {
        cfg.mode = g.mode;
    }
    if let Some(t) = g.tol {
        cfg.tol = t;
    }
    if let Some(d) = g.depth {
        cfg.depth = d;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if g.output_dir.is_some() {
        cfg.output_dir = g.output_dir.clone();
    }
    Ok(cfg)
}

fn default_weights<S: Scalar>(d: BiInfiniteDiagram, plus_depth: usize, minus_depth: usize) -> brattelikit::Result<WeightedDiagram<S>> {
    let plus = solve_weights::<S>(&d, Side::Positive, plus_depth, 8)?;
    let one = d.one_sided(Side::Negative, minus_depth)?;
    let minus = WeightFunction::from_top(&one, vec![S::one(); one.sizes[minus_depth]]);
    WeightedDiagram::new(d, EdgeOrders::policy_only(), plus, minus)?.normalized()
}

/// An example name, `random` (seeded from the config), a bundle file, or a
/// bare diagram file (weights are then solved for in the requested mode).
fn load(spec: &str, cfg: &RunConfig) -> Result<AnyBundle, Failure> {
    let path = Path::new(spec);
    let bundle = if !path.exists() && examples::NAMES.contains(&spec) {
        examples::build(spec)?
    } else if !path.exists() && spec == "random" {
        let rs = RandomSpec { max_vertices: 4, depth: cfg.depth.clamp(1, 6), ..Default::default() };
        AnyBundle::Exact(random_bundle(cfg.seed, &rs, 4)?)
    } else {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if v.get("weights").is_some() {
            AnyBundle::from_json(&v)?
        } else {
            let d: BiInfiniteDiagram = serde_json::from_value(v.get("diagram").cloned().unwrap_or(v))?;
            let plus_depth = cfg.depth.max(cfg.max_shift + 8);
            match cfg.mode.unwrap_or(Mode::Exact) {
                Mode::Exact => AnyBundle::Exact(default_weights(d, plus_depth, cfg.depth)?),
                Mode::Float => AnyBundle::Float(default_weights(d, plus_depth, cfg.depth)?),
            }
        }
    };
    match (cfg.mode, bundle) {
        (Some(Mode::Float), b) => Ok(AnyBundle::Float(b.to_float())),
        (Some(Mode::Exact), AnyBundle::Float(_)) => {
            Err(Failure { code: 2, kind: "Invalid".into(), message: "float weights cannot be run in exact mode".into() })
        }
        (_, b) => Ok(b),
    }
}

fn with_config(mut v: Value, cfg: &RunConfig) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("config".into(), serde_json::to_value(cfg).expect("serializable"));
    }
    v
}

fn output_path(p: &Path, cfg: &RunConfig) -> PathBuf {
    match &cfg.output_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn validate(spec: &str, cfg: &RunConfig) -> Out {
    let b = load(spec, cfg)?;
    let report = b.diagram().validate(cfg.depth);
    let orders = b.orders().check(b.diagram()).err().map(|e| e.to_string());
    let (plus, minus) = match &b {
        AnyBundle::Float(w) => (validate_weight(&w.plus, &w.diagram, cfg.depth, 1e-9)?, validate_weight(&w.minus, &w.diagram, cfg.depth, 1e-9)?),
        AnyBundle::Exact(w) => (validate_weight(&w.plus, &w.diagram, cfg.depth, 1e-9)?, validate_weight(&w.minus, &w.diagram, cfg.depth, 1e-9)?),
    };
    let valid = report.valid && orders.is_none() && plus.recursion_ok && minus.recursion_ok;
    let out = json!({"valid": valid, "diagram": report, "orders": orders, "weights": {"plus": plus, "minus": minus}});
    Ok((out, if valid { 0 } else { 2 }))
}

fn vershik(spec: &str, start: Start, path: Option<&str>, vertex: usize, steps: i64, extend: bool, cfg: &RunConfig) -> Result<(Vec<Value>, u8), Failure> {
    let b = load(spec, cfg)?;
    let side = OrderedSide::new(b.diagram(), b.orders(), Side::Positive, cfg.depth)?;
    let prefix = match start {
        Start::Min => side.min_path(cfg.depth, vertex),
        Start::Max => side.max_path(cfg.depth, vertex),
        Start::Path => {
            let p: FinitePath = serde_json::from_str(path.ok_or_else(|| Failure::from(Error::BadParams("--start path needs --path".into())))?)?;
            side.check_path(&p)?;
            p
        }
    };
    let chains = if extend { periodic_component_scan(b.diagram(), cfg.depth)? } else { vec![] };
    let ext = Extension { periodic: &chains };
    let o = orbit(&side, &TruncatedPath::free(prefix), steps, cfg.depth, &ext);
    let mut lines: Vec<Value> =
        o.paths.iter().enumerate().map(|(i, p)| json!({"step": i, "symbol": p.symbol(), "path": p.prefix, "tail": p.tail})).collect();
    if let Some(stop) = &o.stop {
        lines.push(json!({"stop": stop}));
    }
    lines.push(with_config(json!({"itinerary": o.itinerary}), cfg));
    Ok((lines, 0))
}

fn weights(spec: &str, solve: bool, series: bool, side: &str, cfg: &RunConfig) -> Out {
    let b = load(spec, cfg)?;
    let d = b.diagram().clone();
    if series {
        let MatrixSource::Programmatic { rule_id, params } = d.source(Side::Positive) else {
            return Err(Error::BadParams("--series needs an mpn-family diagram".into()).into());
        };
        let Rule::Mpn { p, n } = Rule::parse(rule_id, params)? else {
            return Err(Error::BadParams("--series needs an mpn-family diagram".into()).into());
        };
        let s = mpn_weight_series(p, &n, cfg.depth)?;
        return Ok((json!({"series": s, "nRule": NRule::to_json(&n)}), 0));
    }
    let side = match side {
        "positive" | "+" => Side::Positive,
        "negative" | "-" => Side::Negative,
        other => return Err(Error::BadParams(format!("unknown side {other:?}")).into()),
    };
    let exact = !matches!(b, AnyBundle::Float(_));
    let (w, method) = if exact {
        let w = match (solve, pf_weights_exact(&d, side, cfg.depth)?) {
            (false, Some((w, _))) => (w, "pf"),
            _ => (solve_weights::<Q>(&d, side, cfg.depth, 8)?, "solve"),
        };
        (WeightJson::Exact(w.0), w.1)
    } else {
        let w = match (solve, pf_weights(&d, side, cfg.depth)) {
            (false, Ok((w, _))) => (w, "pf"),
            _ => (solve_weights::<f64>(&d, side, cfg.depth, 8)?, "solve"),
        };
        (WeightJson::Float(w.0), w.1)
    };
    let (json_w, report) = match &w {
        WeightJson::Exact(w) => (w.to_json(), validate_weight(w, &d, cfg.depth, 1e-9)?),
        WeightJson::Float(w) => (w.to_json(), validate_weight(w, &d, cfg.depth, 1e-9)?),
    };
    let oracle = if side == Side::Positive { Some(unique_weight_report(&d, cfg.depth.max(20), 1e-8)?) } else { None };
    Ok((json!({"method": method, "weights": json_w, "report": report, "oracle": oracle}), 0))
}

enum WeightJson {
    Exact(WeightFunction<Q>),
    Float(WeightFunction<f64>),
}

fn surface_of<S: Scalar>(b: &WeightedDiagram<S>, minus_depth: Option<usize>, svg: Option<&Path>, json_out: Option<&Path>, cfg: &RunConfig) -> Out {
    let plus_depth = cfg.depth.min(b.depth_plus());
    let minus_depth = minus_depth.unwrap_or(2).min(b.depth_minus());
    let s = build_surface_with(b, plus_depth, minus_depth)?;
    let model = with_config(s.to_json(), cfg);
    if let Some(p) = svg {
        std::fs::write(output_path(p, cfg), export_svg(&s))?;
    }
    if let Some(p) = json_out {
        std::fs::write(output_path(p, cfg), serde_json::to_string_pretty(&model)? + "\n")?;
        let summary = json!({"area": s.area.to_f64(), "rectangles": s.rectangles.len(), "plusDepth": plus_depth, "minusDepth": minus_depth});
        return Ok((summary, 0));
    }
    Ok((model, 0))
}

fn renormalize_of<S: Scalar>(b: &WeightedDiagram<S>, k: usize, check: bool, cfg: &RunConfig) -> Out {
    let shifted = shift_weighted(b, k)?;
    let schedule = renorm_times(&b.diagram, &b.plus, k)?;
    let functoriality = if check {
        let plus_depth = cfg.depth.min(b.depth_plus()).max(k + 1);
        let r = functoriality_check(b, k, plus_depth, 2.min(b.depth_minus()), cfg.geometry_tol)?;
        Some(json!({"k": r.k, "maxDeviation": r.deviation, "areaBefore": r.area_before, "areaAfter": r.area_after, "tol": cfg.geometry_tol}))
    } else {
        None
    };
    Ok((json!({"k": k, "schedule": schedule.to_json(), "bundle": shifted.to_json()?, "functoriality": functoriality}), 0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", json!({"error": f.kind, "message": f.message}));
            ExitCode::from(f.code)
        }
    }
}

/// Write to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut cfg = run_config(&cli.global)?;
    let (out, code) = match cli.command {
        Command::Validate { spec } => validate(&spec, &cfg)?,
        Command::Vershik { spec, start, path, vertex, steps, extend } => {
            let (lines, code) = vershik(&spec, start, path.as_deref(), vertex, steps, extend, &cfg)?;
            for l in lines {
                emit(&serde_json::to_string(&l)?)?;
            }
            return Ok(code);
        }
        Command::Weights { spec, solve, pf: _, series, side } => weights(&spec, solve, series, &side, &cfg)?,
        Command::Surface { spec, svg, json: json_out, minus_depth } => match load(&spec, &cfg)? {
            AnyBundle::Float(b) => surface_of(&b, minus_depth, svg.as_deref(), json_out.as_deref(), &cfg)?,
            AnyBundle::Exact(b) => surface_of(&b, minus_depth, svg.as_deref(), json_out.as_deref(), &cfg)?,
        },
        Command::Renormalize { spec, k, check_functoriality } => match load(&spec, &cfg)? {
            AnyBundle::Float(b) => renormalize_of(&b, k, check_functoriality, &cfg)?,
            AnyBundle::Exact(b) => renormalize_of(&b, k, check_functoriality, &cfg)?,
        },
        Command::Certify { spec, eta, epsilon, mu, n_terms, max_shift, window_depth, strict } => {
            if let Some(n) = n_terms {
                cfg.n_terms = n;
            }
            if let Some(m) = max_shift {
                cfg.max_shift = m;
            }
            if let Some(w) = window_depth {
                cfg.window_depth = w;
            }
            let defaults = CertifyConfig::default();
            let cc = CertifyConfig {
                max_shift: cfg.max_shift,
                window_depth: cfg.window_depth,
                n_terms: cfg.n_terms,
                eta: eta.unwrap_or(defaults.eta),
                epsilon,
                mu,
                ..defaults
            };
            let cert = match load(&spec, &cfg)? {
                AnyBundle::Float(b) => certify(&b, &cc)?,
                AnyBundle::Exact(b) => certify(&b, &cc)?,
            };
            let code = if strict && cert.verdict == Verdict::Inconclusive { 4 } else { 0 };
            (serde_json::to_value(&cert)?, code)
        }
        Command::Examples { action } => match action {
            ExampleAction::List => (json!({"examples": examples::catalogue()}), 0),
            ExampleAction::Emit { name } => (load(&name, &cfg)?.to_json()?, 0),
        },
    };
    emit(&serde_json::to_string_pretty(&with_config(out, &cfg))?)?;
    Ok(code)
}
