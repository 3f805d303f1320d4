//! Command-line front end.
//!
//! Subcommands: `solve` (one integration with diagnostics and snapshots),
//! `converge` (EOC table over a decreasing k list), `efficiency`
//! (error-versus-wall-time sweep over several schemes).
//!
//! Exit codes: 0 on success, 2 on numerical blow-up, 1 on usage error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use etdrdp::config::load_config;
use etdrdp::etd::{EtdError, Scheme};
use etdrdp::harness::{
    run_convergence_study, run_efficiency_study, run_simulation, diagnostics_csv, study_csv,
    HarnessError, RunReport, StudyConfig,
};
use etdrdp::operators::BoundaryKind;
use etdrdp::problems::catalog_keys;

#[derive(Parser)]
#[command(
    name = "etdrdp",
    about = "ETD-RDP-IF solver and benchmark harness for stiff reaction-diffusion systems",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: CommandKind,
}

#[derive(Subcommand)]
enum CommandKind {
    /// Run one integration, writing diagnostics and optional field snapshots
    Solve(CommonArgs),
    /// Run a convergence (EOC) study over a decreasing list of time steps
    Converge(CommonArgs),
    /// Run an error-versus-wall-time study over several schemes
    Efficiency(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem key from the catalog
    #[arg(long)]
    problem: Option<String>,

    /// Scheme key, repeatable (etd-rdp-if, etd-rdp, imex-bdf2, imex-tr, imex-adams2)
    #[arg(long)]
    scheme: Vec<String>,

    /// Grid points per axis
    #[arg(long)]
    p: Option<usize>,

    /// Time step, repeatable; must be strictly decreasing
    #[arg(long)]
    k: Vec<f64>,

    /// Final time
    #[arg(long = "T")]
    t_final: Option<f64>,

    /// Boundary condition override: D, N, or P
    #[arg(long)]
    bc: Option<String>,

    /// Stage-parallel thread count (1 or 3)
    #[arg(long)]
    threads: Option<usize>,

    /// RNG seed for problems with random initial data
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for CSV reports and field snapshots
    #[arg(long)]
    out: Option<PathBuf>,

    /// Config file with `key = value` lines; command-line flags win
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write a field snapshot every N steps (solve only; needs --out)
    #[arg(long = "snapshot-every")]
    snapshot_every: Option<usize>,

    /// Probe point coordinates, e.g. 0.5,0.5
    #[arg(long)]
    probe: Option<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    BlowUp(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> CliError {
        match &e {
            HarnessError::Integration(EtdError::BlowUp { .. }) => CliError::BlowUp(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn parse_scheme(key: &str) -> Result<Scheme, CliError> {
    Scheme::from_key(key).ok_or_else(|| {
        let known: Vec<&str> = Scheme::ALL.iter().map(|s| s.key()).collect();
        CliError::Usage(format!("unknown scheme '{key}'; known: {}", known.join(", ")))
    })
}

fn parse_bc(text: &str) -> Result<BoundaryKind, CliError> {
    let normalized = match text.to_ascii_lowercase().as_str() {
        "d" | "dirichlet" => 'D',
        "n" | "neumann" => 'N',
        "p" | "periodic" => 'P',
        _ => return Err(CliError::Usage(format!("unknown boundary condition '{text}'"))),
    };
    Ok(BoundaryKind::from_tag(normalized).unwrap())
}

fn parse_probe(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad probe coordinate '{tok}'")))
        })
        .collect()
}

fn parse_k_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad time step '{tok}'")))
        })
        .collect()
}

/// Fold the config file into the flag values. Flags given on the command
/// line always win; file keys that are not flag names become problem
/// parameter overrides.
fn build_study(args: &CommonArgs) -> Result<StudyConfig, CliError> {
    let mut file: BTreeMap<String, String> = BTreeMap::new();
    if let Some(path) = &args.config {
        file = load_config(path).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let take = |key: &str| file.get(key).cloned();

    let problem = match (&args.problem, take("problem")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => p,
        (None, None) => {
            return Err(CliError::Usage(format!(
                "--problem is required; known: {}",
                catalog_keys().join(", ")
            )));
        }
    };
    let mut cfg = StudyConfig::new(&problem);

    let mut schemes = args.scheme.clone();
    if schemes.is_empty() {
        if let Some(text) = take("scheme") {
            schemes = text
                .split([',', ' '])
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
        }
    }
    if !schemes.is_empty() {
        cfg.schemes = schemes.iter().map(|s| parse_scheme(s)).collect::<Result<_, _>>()?;
    }

    cfg.ks = args.k.clone();
    if cfg.ks.is_empty() {
        if let Some(text) = take("k") {
            cfg.ks = parse_k_list(&text)?;
        }
    }

    let parse_num = |key: &str, text: &str| -> Result<f64, CliError> {
        text.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad value for '{key}': '{text}'")))
    };

    cfg.p = args.p;
    if cfg.p.is_none() {
        if let Some(text) = take("p") {
            cfg.p = Some(parse_num("p", &text)? as usize);
        }
    }
    cfg.t_final = args.t_final;
    if cfg.t_final.is_none() {
        if let Some(text) = take("T") {
            cfg.t_final = Some(parse_num("T", &text)?);
        }
    }
    cfg.bc_override = match (&args.bc, take("bc")) {
        (Some(text), _) => Some(parse_bc(text)?),
        (None, Some(text)) => Some(parse_bc(&text)?),
        (None, None) => None,
    };
    cfg.threads = match (args.threads, take("threads")) {
        (Some(n), _) => n,
        (None, Some(text)) => parse_num("threads", &text)? as usize,
        (None, None) => 1,
    };
    cfg.seed = match (args.seed, take("seed")) {
        (Some(n), _) => n,
        (None, Some(text)) => parse_num("seed", &text)? as u64,
        (None, None) => 0,
    };
    cfg.out_dir = args.out.clone().or_else(|| take("out").map(PathBuf::from));
    cfg.snapshot_every = match (args.snapshot_every, take("snapshot-every")) {
        (Some(n), _) => Some(n),
        (None, Some(text)) => Some(parse_num("snapshot-every", &text)? as usize),
        (None, None) => None,
    };
    cfg.probe_point = match (&args.probe, take("probe")) {
        (Some(text), _) => Some(parse_probe(text)?),
        (None, Some(text)) => Some(parse_probe(&text)?),
        (None, None) => None,
    };

    // remaining config keys are problem parameter overrides
    const FLAG_KEYS: [&str; 12] = [
        "problem", "scheme", "p", "k", "T", "bc", "threads", "seed", "out", "config",
        "snapshot-every", "probe",
    ];
    for (key, text) in &file {
        if FLAG_KEYS.contains(&key.as_str()) {
            continue;
        }
        cfg.overrides.insert(key.clone(), parse_num(key, text)?);
    }
    Ok(cfg)
}

fn default_k(cfg: &StudyConfig) -> Result<f64, CliError> {
    let prob = etdrdp::problems::make_problem(&cfg.problem, &cfg.overrides)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(prob.default_dt)
}

fn emit(report: &RunReport, kind: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    let table = study_csv(report, kind);
    print!("{table}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(e.to_string()))?;
        std::fs::write(dir.join(format!("{kind}.csv")), &table)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if !report.diagnostics.is_empty() {
            std::fs::write(dir.join("diagnostics.csv"), diagnostics_csv(report))
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        CommandKind::Solve(args) => {
            let mut cfg = build_study(&args)?;
            if cfg.ks.is_empty() {
                cfg.ks = vec![default_k(&cfg)?];
            }
            let report = run_simulation(&cfg)?;
            emit(&report, "solve", &cfg.out_dir)?;
            if cfg.out_dir.is_none() {
                print!("{}", diagnostics_csv(&report));
            }
            Ok(())
        }
        CommandKind::Converge(args) => {
            let cfg = build_study(&args)?;
            let report = run_convergence_study(&cfg)?;
            emit(&report, "convergence", &cfg.out_dir)
        }
        CommandKind::Efficiency(args) => {
            let cfg = build_study(&args)?;
            let report = run_efficiency_study(&cfg)?;
            emit(&report, "efficiency", &cfg.out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::BlowUp(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
