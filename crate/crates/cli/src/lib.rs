//! Command-line front end: argument parsing, dispatch, emission and run
//! records.

pub mod emit;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use emit::{render, write_output, Cell, Format, Table};
use qdesign::circuits::{circuit_to_json, sample_circuit, EnsembleSpec, Topology};
use qdesign::experiments::{
    design_error, equilibration_experiment, frame_potential, haar_frame_potential,
    MeasurementFamily, TargetChoice,
};
use qdesign::gap::{design_depth, nachtergaele_check, scaling_check, spectral_gap, GapOptions, GapReport, Solver};
use qdesign::moments::MomentOrder;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "QDESIGN_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Comma-separated non-negative integers; `a..b` expands inclusively.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct UsizeList(pub Vec<usize>);

impl std::str::FromStr for UsizeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let a: usize = a.trim().parse().map_err(|e| format!("'{part}': {e}"))?;
                let b: usize = b.trim().parse().map_err(|e| format!("'{part}': {e}"))?;
                if b < a {
                    return Err(format!("empty range '{part}'"));
                }
                out.extend(a..=b);
            } else {
                out.push(part.parse().map_err(|e| format!("'{part}': {e}"))?);
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(UsizeList(out))
    }
}

#[derive(Debug, Parser)]
#[command(name = "qdesign", version, about = "Random circuits, moment operators and spectral gaps")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Master seed; drawn from entropy and recorded when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Data file; a run record is written next to it as `<out>.run.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; defaults to the extension of --out, else json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for internal parallelism.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Spectral gap of H_{n,k}.
    Gap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// auto, dense or iterative.
        #[arg(long, default_value = "auto")]
        solver: String,
    },
    /// Circuit length t = ceil(ln(1/eps) / delta).
    Depth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = "auto")]
        solver: String,
    },
    /// Exact ||G_nu^t - G_Haar|| against (1 - delta)^t.
    DesignError {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Depths, e.g. `1,2,5` or `0..10`.
        #[arg(long)]
        t: UsizeList,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Monte-Carlo frame potential E|tr(U^dagger V)|^{2k}.
    FramePotential {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value = "line-nn")]
        topology: Topology,
    },
    /// Deviation of evolved states from maximally mixed under random
    /// low-complexity measurements.
    Equilibrate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: UsizeList,
        /// Gates in the measurement circuit.
        #[arg(long, default_value_t = 20)]
        s: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Projected qubits (1-based); a random single qubit per trial when
        /// absent.
        #[arg(long, conflicts_with = "identity")]
        target: Option<UsizeList>,
        /// Use M = I.
        #[arg(long)]
        identity: bool,
    },
    /// Delta(H_{n,k}) >= Delta(H_{m,k}) / (4m) for each n.
    Nachtergaele {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: UsizeList,
        /// Block size; from the formula ceil(2.5 log(4k)) when absent.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        log_base: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = "auto")]
        solver: String,
    },
    /// Table of n * delta(n,k).
    Scaling {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: UsizeList,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = "auto")]
        solver: String,
    },
    /// One random circuit in the JSON circuit format.
    SampleCircuit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value = "line-nn")]
        topology: Topology,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gap { .. } => "gap",
            Command::Depth { .. } => "depth",
            Command::DesignError { .. } => "design-error",
            Command::FramePotential { .. } => "frame-potential",
            Command::Equilibrate { .. } => "equilibrate",
            Command::Nachtergaele { .. } => "nachtergaele",
            Command::Scaling { .. } => "scaling",
            Command::SampleCircuit { .. } => "sample-circuit",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(qdesign::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl From<qdesign::Error> for CliError {
    fn from(e: qdesign::Error) -> Self {
        match e {
            qdesign::Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Compute(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(_) | CliError::Io { .. } => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub format: Format,
}

/// Sidecar describing one invocation.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub seed_source: &'static str,
    pub version: &'static str,
    pub threads: usize,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub status: &'static str,
    pub error: Option<String>,
    pub outputs: Vec<OutputEntry>,
    pub summary: Option<Value>,
}

/// Result of a command: a CSV view, a JSON view and an optional summary
/// that goes into the run record.
pub struct Output {
    pub table: Table,
    pub json: Value,
    pub summary: Option<Value>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn order(k: usize) -> Result<MomentOrder, CliError> {
    Ok(MomentOrder::new(k)?)
}

fn gap_options(tol: f64, solver: &str, seed: u64) -> Result<GapOptions, CliError> {
    Ok(GapOptions {
        tol,
        solver: solver.parse::<Solver>()?,
        seed,
        max_iter: None,
    })
}

pub const GAP_COLUMNS: [&str; 8] = GapReport::CSV_HEADER;

fn gap_row(r: &GapReport) -> Vec<Cell> {
    vec![
        r.n.into(),
        r.k.into(),
        r.delta_gap.into(),
        r.delta_walk.into(),
        r.solver.to_string().into(),
        r.residual.into(),
        r.seed.into(),
        r.wall_time.into(),
    ]
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

/// Runs one command with an explicit seed.
pub fn execute(command: &Command, seed: u64) -> Result<Output, CliError> {
    match command {
        Command::Gap { n, k, tol, solver } => {
            let r = spectral_gap(*n, order(*k)?, &gap_options(*tol, solver, seed)?)?;
            let mut table = Table::new(GAP_COLUMNS);
            table.push(gap_row(&r));
            Ok(Output {
                table,
                json: to_value(&r),
                summary: None,
            })
        }
        Command::Depth { n, k, eps, tol, solver } => {
            let d = design_depth(*n, order(*k)?, *eps, &gap_options(*tol, solver, seed)?)?;
            let mut table = Table::new(["n", "k", "eps", "delta", "t", "seed"]);
            table.push(vec![d.n.into(), d.k.into(), d.eps.into(), d.delta.into(), d.t.into(), seed.into()]);
            let mut json = to_value(&d);
            json["seed"] = json!(seed);
            Ok(Output {
                table,
                json,
                summary: None,
            })
        }
        Command::DesignError { n, k, t, tol } => {
            let opts = gap_options(*tol, "auto", seed)?;
            let tab = design_error(*n, order(*k)?, &t.0, &opts)?;
            let mut table = Table::new(["n", "k", "t", "error", "predicted", "delta"]);
            for r in &tab.rows {
                table.push(vec![
                    tab.n.into(),
                    tab.k.into(),
                    r.t.into(),
                    r.error.into(),
                    r.predicted.into(),
                    tab.delta.into(),
                ]);
            }
            let mut json = to_value(&tab);
            json["seed"] = json!(seed);
            Ok(Output {
                table,
                json,
                summary: None,
            })
        }
        Command::FramePotential {
            n,
            k,
            t,
            samples,
            topology,
        } => {
            let kk = order(*k)?;
            let spec = EnsembleSpec {
                n_qubits: *n,
                depth: *t,
                topology: *topology,
                seed,
            };
            let e = frame_potential(&spec, kk, *samples)?;
            let reference = haar_frame_potential(*n, kk)?;
            let mut table = Table::new([
                "n",
                "k",
                "t",
                "topology",
                "samples",
                "value",
                "std_error",
                "haar_reference",
                "seed",
            ]);
            table.push(vec![
                (*n).into(),
                (*k).into(),
                (*t).into(),
                topology.to_string().into(),
                (*samples).into(),
                e.value.into(),
                e.std_error.into(),
                reference.into(),
                seed.into(),
            ]);
            let mut json = to_value(&e);
            json["haar_reference"] = json!(reference);
            Ok(Output {
                table,
                json,
                summary: None,
            })
        }
        Command::Equilibrate {
            n,
            t,
            s,
            trials,
            target,
            identity,
        } => {
            let family = if *identity {
                MeasurementFamily::identity()
            } else {
                MeasurementFamily {
                    s: *s,
                    target: match target {
                        Some(list) => TargetChoice::Fixed(list.0.clone()),
                        None => TargetChoice::RandomQubit,
                    },
                }
            };
            let r = equilibration_experiment(*n, &t.0, &family, *trials, seed)?;
            let mut table = Table::new(["t", "trial", "deviation", "trace_term", "seed", "target"]);
            for smp in &r.samples {
                let target: Vec<String> = smp.target.iter().map(|q| q.to_string()).collect();
                table.push(vec![
                    smp.t.into(),
                    smp.trial.into(),
                    smp.deviation.into(),
                    smp.trace_term.into(),
                    smp.seed.into(),
                    target.join(";").into(),
                ]);
            }
            let summary = json!({ "summary": r.summary, "baseline": r.baseline });
            Ok(Output {
                table,
                json: to_value(&r),
                summary: Some(summary),
            })
        }
        Command::Nachtergaele {
            k,
            n,
            m,
            log_base,
            tol,
            solver,
        } => {
            let r = nachtergaele_check(order(*k)?, *m, &n.0, *log_base, &gap_options(*tol, solver, seed)?)?;
            let mut table = Table::new(["n", "k", "m", "lhs", "rhs", "ratio", "holds"]);
            for row in &r.rows {
                table.push(vec![
                    row.n.into(),
                    r.k.into(),
                    r.m.into(),
                    row.lhs.into(),
                    row.rhs.into(),
                    row.ratio.into(),
                    row.holds.into(),
                ]);
            }
            let summary = json!({
                "m": r.m,
                "m_formula": r.m_formula,
                "reduced": r.reduced,
                "warning": r.warning,
                "all_hold": r.all_hold(),
            });
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            Ok(Output {
                table,
                json: to_value(&r),
                summary: Some(summary),
            })
        }
        Command::Scaling { k, n, tol, solver } => {
            let r = scaling_check(order(*k)?, &n.0, &gap_options(*tol, solver, seed)?)?;
            let mut header: Vec<&str> = GAP_COLUMNS.to_vec();
            header.push("n_delta");
            let mut table = Table::new(header);
            for (rep, row) in r.reports.iter().zip(&r.rows) {
                let mut cells = gap_row(rep);
                cells.push(row.n_delta.into());
                table.push(cells);
            }
            let summary = json!({
                "median": r.median,
                "all_positive": r.all_positive,
                "within_factor_two": r.within_factor_two,
            });
            Ok(Output {
                table,
                json: to_value(&r),
                summary: Some(summary),
            })
        }
        Command::SampleCircuit { n, t, topology } => {
            let c = sample_circuit(&EnsembleSpec {
                n_qubits: *n,
                depth: *t,
                topology: *topology,
                seed,
            })?;
            let mut table = Table::new(["gate", "site", "partner", "row", "col", "re", "im"]);
            for (g, gate) in c.gates().iter().enumerate() {
                for r in 0..4 {
                    for col in 0..4 {
                        let z = gate.matrix()[(r, col)];
                        table.push(vec![
                            g.into(),
                            gate.site().into(),
                            gate.partner().into(),
                            r.into(),
                            col.into(),
                            z.re.into(),
                            z.im.into(),
                        ]);
                    }
                }
            }
            let json: Value = serde_json::from_str(&circuit_to_json(&c)).expect("valid JSON");
            Ok(Output {
                table,
                json,
                summary: None,
            })
        }
    }
}

fn infer_format(explicit: Option<Format>, out: Option<&Path>) -> Format {
    explicit.unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    })
}

/// `<out>.run.json`
pub fn record_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".run.json");
    PathBuf::from(s)
}

fn json_to_flag(key: &str, value: &Value) -> Result<Vec<String>, CliError> {
    let flag = format!("--{}", key.replace('_', "-"));
    Ok(match value {
        Value::Bool(true) => vec![flag],
        Value::Bool(false) | Value::Null => vec![],
        Value::Number(x) => vec![flag, x.to_string()],
        Value::String(s) => vec![flag, s.clone()],
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            vec![flag, parts.join(",")]
        }
        Value::Object(_) => {
            return Err(CliError::Usage(format!("config key '{key}' must not be an object")))
        }
    })
}

/// Expands `--config <file.json>` into flags. The file holds an object with
/// a `command` key and one key per flag; flags given on the command line
/// take precedence.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let path = argv
        .get(pos + 1)
        .ok_or_else(|| CliError::Usage("--config needs a file argument".into()))?
        .clone();
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let cfg: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;
    let obj = cfg
        .as_object()
        .ok_or_else(|| CliError::Usage(format!("config {path} must hold a JSON object")))?;
    let mut rest: Vec<String> = argv[..pos].iter().chain(&argv[pos + 2..]).cloned().collect();
    let program = if rest.is_empty() { "qdesign".to_string() } else { rest.remove(0) };
    let has_command = rest.first().is_some_and(|a| !a.starts_with('-'));
    let mut out = vec![program];
    if !has_command {
        let cmd = obj
            .get("command")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Usage(format!("config {path} has no 'command'")))?;
        out.push(cmd.to_string());
    } else {
        out.push(rest.remove(0));
    }
    for (key, value) in obj {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if rest.iter().any(|a| a == &flag) {
            continue;
        }
        out.extend(json_to_flag(key, value)?);
    }
    out.extend(rest);
    Ok(out)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> i32 {
    let started_at = unix_now();
    let (seed, seed_source) = match cli.common.seed {
        Some(s) => (s, "flag"),
        None => (rand::random::<u64>(), "entropy"),
    };
    let out = cli.common.out.as_deref();
    let format = infer_format(cli.common.format, out);

    let pool = match cli.common.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(p) => Some(p),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return EXIT_FAILURE;
            }
        },
        None => None,
    };
    let threads = pool
        .as_ref()
        .map(|p| p.current_num_threads())
        .unwrap_or_else(rayon::current_num_threads);

    let work = || -> Result<Output, CliError> {
        let output = execute(&cli.command, seed)?;
        let body = render(format, &output.table, &output.json);
        write_output(out, &body).map_err(|source| CliError::Io {
            path: out.map_or("<stdout>".into(), |p| p.display().to_string()),
            source,
        })?;
        Ok(output)
    };
    let result = match &pool {
        Some(p) => p.install(work),
        None => work(),
    };

    let mut config = to_value(&cli.command);
    config["seed"] = json!(cli.common.seed);
    config["out"] = json!(cli.common.out);
    config["format"] = json!(format);
    config["threads"] = json!(cli.common.threads);
    let (status, error, summary, code) = match &result {
        Ok(o) => ("ok", None, o.summary.clone(), EXIT_OK),
        Err(e) => ("error", Some(e.to_string()), None, e.exit_code()),
    };
    let record = RunRecord {
        command: cli.command.name().to_string(),
        config,
        seed,
        seed_source,
        version: env!("CARGO_PKG_VERSION"),
        threads,
        started_at,
        finished_at: unix_now(),
        status,
        error: error.clone(),
        outputs: match (&result, out) {
            (Ok(_), Some(p)) => vec![OutputEntry {
                path: p.display().to_string(),
                format,
            }],
            (Ok(_), None) => vec![OutputEntry {
                path: "<stdout>".into(),
                format,
            }],
            _ => vec![],
        },
        summary,
    };
    let record_text = serde_json::to_string_pretty(&record).expect("serialisable") + "\n";
    match out {
        Some(p) => {
            if let Err(e) = std::fs::write(record_path(p), &record_text) {
                eprintln!("error: writing run record: {e}");
                return EXIT_FAILURE;
            }
        }
        None => eprint!("{record_text}"),
    }
    if let Some(msg) = error {
        eprintln!("error: {msg}");
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usize_list_parsing() {
        assert_eq!("1,2,5".parse::<UsizeList>().unwrap().0, vec![1, 2, 5]);
        assert_eq!("3..6".parse::<UsizeList>().unwrap().0, vec![3, 4, 5, 6]);
        assert_eq!("0, 2..3".parse::<UsizeList>().unwrap().0, vec![0, 2, 3]);
        assert!("5..3".parse::<UsizeList>().is_err());
        assert!("".parse::<UsizeList>().is_err());
        assert!("a".parse::<UsizeList>().is_err());
    }

    #[test]
    fn format_inference() {
        assert_eq!(infer_format(None, Some(Path::new("x.csv"))), Format::Csv);
        assert_eq!(infer_format(None, Some(Path::new("x.json"))), Format::Json);
        assert_eq!(infer_format(None, None), Format::Json);
        assert_eq!(infer_format(Some(Format::Csv), Some(Path::new("x.json"))), Format::Csv);
    }

    #[test]
    fn record_path_appends_suffix() {
        assert_eq!(record_path(Path::new("a/gap.json")), PathBuf::from("a/gap.json.run.json"));
    }

    #[test]
    fn config_expansion() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"command":"design-error","n":3,"k":1,"t":[1,2]}"#).unwrap();
        let argv = vec![
            "qdesign".to_string(),
            "--config".into(),
            cfg.display().to_string(),
            "--n".into(),
            "2".into(),
        ];
        let out = expand_config(argv).unwrap();
        assert_eq!(out[1], "design-error");
        assert!(out.windows(2).any(|w| w[0] == "--t" && w[1] == "1,2"));
        assert!(out.windows(2).any(|w| w[0] == "--n" && w[1] == "2"));
        assert!(!out.windows(2).any(|w| w[0] == "--n" && w[1] == "3"));
    }

    #[test]
    fn invalid_argument_maps_to_usage() {
        let e: CliError = qdesign::Error::InvalidArgument("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_USAGE);
        let e: CliError = qdesign::Error::DegenerateGram { condition: 1e20 }.into();
        assert_eq!(e.exit_code(), EXIT_FAILURE);
    }
}
