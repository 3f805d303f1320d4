//! Study drivers: convergence (EOC) tables, efficiency (error versus wall
//! time) sweeps, and long simulations with physical diagnostics and field
//! snapshots. All reports are CSV with a one-line `#` metadata header.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::etd::{integrate, EtdError, IntegrationResult, Scheme, SchemeConfig, StepCounts};
use crate::field::{export_csv, write_field, FieldError};
use crate::operators::{BoundaryKind, GridSpec, OperatorError, StateVector};
use crate::problems::{
    energy, make_problem, mass, probe, DiagnosticsRecord, ProblemError, ProblemSpec,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Grid(#[from] OperatorError),
    #[error(transparent)]
    Integration(#[from] EtdError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid study: {0}")]
    BadStudy(String),
}

/// Everything needed to run a study. Unset options fall back to the
/// problem's published defaults.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub problem: String,
    pub overrides: BTreeMap<String, f64>,
    pub schemes: Vec<Scheme>,
    /// Time steps, strictly decreasing.
    pub ks: Vec<f64>,
    pub p: Option<usize>,
    pub t_final: Option<f64>,
    pub bc_override: Option<BoundaryKind>,
    pub threads: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
    pub probe_point: Option<Vec<f64>>,
}

impl StudyConfig {
    pub fn new(problem: &str) -> StudyConfig {
        StudyConfig {
            problem: problem.to_string(),
            overrides: BTreeMap::new(),
            schemes: vec![Scheme::EtdRdpIf],
            ks: Vec::new(),
            p: None,
            t_final: None,
            bc_override: None,
            threads: 1,
            seed: 0,
            out_dir: None,
            snapshot_every: None,
            probe_point: None,
        }
    }
}

/// One (scheme, k) result.
#[derive(Debug, Clone)]
pub struct RunCell {
    pub scheme: Scheme,
    pub k: f64,
    pub dt_used: f64,
    pub dt_adjusted: bool,
    /// Max-norm error against the study reference, when one exists.
    pub err_linf: Option<f64>,
    /// Unnormalized Euclidean-norm error against the same reference.
    pub err_l2: Option<f64>,
    /// log2 of the max-norm error ratio against the previous (coarser) k of
    /// the same scheme.
    pub eoc: Option<f64>,
    pub wall_secs: f64,
    pub setup_secs: f64,
    pub loop_secs: f64,
    pub counts: StepCounts,
    pub failure: Option<String>,
}

/// Complete record of a study run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub problem: String,
    pub p: usize,
    pub t_final: f64,
    pub threads: usize,
    pub seed: u64,
    pub reference: String,
    pub cells: Vec<RunCell>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub notes: Vec<String>,
}

struct Prepared {
    prob: ProblemSpec,
    grid: GridSpec,
    parts: Vec<crate::operators::BandedOperator>,
    t_final: f64,
}

fn prepare(cfg: &StudyConfig) -> Result<Prepared, HarnessError> {
    let mut prob = make_problem(&cfg.problem, &cfg.overrides)?;
    if let Some(bc) = cfg.bc_override {
        prob.bc = bc;
    }
    let p = cfg.p.unwrap_or(prob.default_p);
    let grid = prob.grid(p)?;
    let parts = crate::operators::split_operators(&grid, &prob.diffusion())?;
    let t_final = cfg.t_final.unwrap_or(prob.t_final);
    Ok(Prepared { prob, grid, parts, t_final })
}

fn run_one(
    prep: &Prepared,
    cfg: &StudyConfig,
    scheme: Scheme,
    k: f64,
    observer: &mut dyn FnMut(usize, f64, &StateVector),
) -> Result<IntegrationResult, EtdError> {
    let reaction = prep.prob.reaction(&prep.grid);
    let u0 = prep.prob.initial_state(&prep.grid, cfg.seed);
    let scheme_cfg = SchemeConfig {
        scheme,
        dt: k,
        t_final: prep.t_final,
        threads: cfg.threads,
    };
    integrate(&u0, reaction.as_ref(), &prep.parts, &scheme_cfg, observer)
}

fn check_ks(ks: &[f64]) -> Result<(), HarnessError> {
    if ks.is_empty() {
        return Err(HarnessError::BadStudy("no time steps given".into()));
    }
    for w in ks.windows(2) {
        if w[1] >= w[0] {
            return Err(HarnessError::BadStudy(
                "time steps must be strictly decreasing".into(),
            ));
        }
    }
    Ok(())
}

/// Reference state for error measurement: the closed-form solution when the
/// problem has one, otherwise the same scheme run at a quarter of the
/// smallest requested step.
fn reference_state(
    prep: &Prepared,
    cfg: &StudyConfig,
    scheme: Scheme,
) -> Result<(StateVector, String), HarnessError> {
    if prep.prob.has_exact() {
        let state = prep.prob.exact_solution(&prep.grid, prep.t_final)?;
        return Ok((state, "exact".to_string()));
    }
    let k_ref = cfg.ks.last().unwrap() / 4.0;
    let res = run_one(prep, cfg, scheme, k_ref, &mut |_, _, _| {})?;
    Ok((res.state, format!("self-refined k={k_ref}")))
}

/// Run every (scheme, k) cell, measuring errors against the reference and
/// recording EOC values per scheme. Integration failures are recorded in the
/// cell and the study continues.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<RunReport, HarnessError> {
    check_ks(&cfg.ks)?;
    if cfg.ks.len() < 2 {
        return Err(HarnessError::BadStudy(
            "convergence study needs at least two time steps".into(),
        ));
    }
    run_error_study(cfg)
}

/// Same sweep as the convergence study but intended for error-versus-time
/// reporting; also notes whether the split scheme dominates the others.
pub fn run_efficiency_study(cfg: &StudyConfig) -> Result<RunReport, HarnessError> {
    check_ks(&cfg.ks)?;
    if cfg.schemes.len() < 2 {
        return Err(HarnessError::BadStudy(
            "efficiency study needs at least two schemes".into(),
        ));
    }
    let mut report = run_error_study(cfg)?;
    add_efficiency_notes(&mut report);
    Ok(report)
}

fn run_error_study(cfg: &StudyConfig) -> Result<RunReport, HarnessError> {
    let prep = prepare(cfg)?;
    let mut cells = Vec::new();
    let mut reference_desc = String::new();
    for &scheme in &cfg.schemes {
        let reference = match reference_state(&prep, cfg, scheme) {
            Ok((state, desc)) => {
                reference_desc = desc;
                Some(state)
            }
            Err(e) => {
                // reference failed: every cell of this scheme is an error
                for &k in &cfg.ks {
                    cells.push(failed_cell(scheme, k, format!("reference run failed: {e}")));
                }
                let _ = e;
                None
            }
        };
        let mut prev_err: Option<f64> = None;
        for &k in &cfg.ks {
            let start = std::time::Instant::now();
            match run_one(&prep, cfg, scheme, k, &mut |_, _, _| {}) {
                Ok(res) => {
                    let wall = start.elapsed().as_secs_f64();
                    let (err_linf, err_l2) = match &reference {
                        Some(r) => (
                            Some(res.state.linf_distance(r)),
                            Some(res.state.l2_distance(r)),
                        ),
                        None => (None, None),
                    };
                    let eoc = match (prev_err, err_linf) {
                        (Some(e_prev), Some(e_now)) if e_now > 0.0 => {
                            Some((e_prev / e_now).log2())
                        }
                        _ => None,
                    };
                    prev_err = err_linf;
                    cells.push(RunCell {
                        scheme,
                        k,
                        dt_used: res.dt_used,
                        dt_adjusted: res.dt_adjusted,
                        err_linf,
                        err_l2,
                        eoc,
                        wall_secs: wall,
                        setup_secs: res.setup_secs,
                        loop_secs: res.loop_secs,
                        counts: res.counts,
                        failure: None,
                    });
                }
                Err(e) => {
                    prev_err = None;
                    cells.push(failed_cell(scheme, k, e.to_string()));
                }
            }
        }
    }
    Ok(RunReport {
        problem: cfg.problem.clone(),
        p: prep.grid.p,
        t_final: prep.t_final,
        threads: cfg.threads,
        seed: cfg.seed,
        reference: reference_desc,
        cells,
        diagnostics: Vec::new(),
        notes: Vec::new(),
    })
}

fn failed_cell(scheme: Scheme, k: f64, failure: String) -> RunCell {
    RunCell {
        scheme,
        k,
        dt_used: k,
        dt_adjusted: false,
        err_linf: None,
        err_l2: None,
        eoc: None,
        wall_secs: 0.0,
        setup_secs: 0.0,
        loop_secs: 0.0,
        counts: StepCounts::default(),
        failure: Some(failure),
    }
}

fn add_efficiency_notes(report: &mut RunReport) {
    // the split scheme dominates when, for every other scheme's point, some
    // split point has both lower error and lower wall time
    let split: Vec<&RunCell> = report
        .cells
        .iter()
        .filter(|c| c.scheme == Scheme::EtdRdpIf && c.failure.is_none())
        .collect();
    if split.is_empty() {
        return;
    }
    let mut dominated_all = true;
    for cell in report.cells.iter().filter(|c| c.scheme != Scheme::EtdRdpIf) {
        let (Some(err), None) = (cell.err_linf, &cell.failure) else { continue };
        let beaten = split.iter().any(|s| {
            s.err_linf.is_some_and(|se| se <= err) && s.wall_secs <= cell.wall_secs
        });
        if !beaten {
            dominated_all = false;
        }
    }
    report.notes.push(if dominated_all {
        "etd-rdp-if dominates every other scheme's (time, error) points".to_string()
    } else {
        "etd-rdp-if does not dominate all other schemes at this scale".to_string()
    });
}

/// Integrate once with the first scheme and smallest k, collecting
/// diagnostics each step and writing field snapshots at the configured
/// cadence. On blow-up the last finite state is still written out.
pub fn run_simulation(cfg: &StudyConfig) -> Result<RunReport, HarnessError> {
    check_ks(&cfg.ks)?;
    let prep = prepare(cfg)?;
    let scheme = *cfg.schemes.first().unwrap_or(&Scheme::EtdRdpIf);
    let k = *cfg.ks.last().unwrap();
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut diagnostics: Vec<DiagnosticsRecord> = Vec::new();
    let mut last_state: Option<StateVector> = None;
    let mut snapshot_err: Option<FieldError> = None;
    let grid = prep.grid.clone();
    let probe_point = cfg.probe_point.clone();
    let out_dir = cfg.out_dir.clone();
    let snapshot_every = cfg.snapshot_every;
    let complex = prep.prob.complex_field;
    let start = std::time::Instant::now();
    let result = run_one(&prep, cfg, scheme, k, &mut |step, t, state| {
        let mass_val = mass(state, &grid).ok();
        let energy_val = energy(state, &grid).ok();
        let probe_val = probe_point
            .as_ref()
            .and_then(|pt| probe(state, &grid, pt).ok());
        diagnostics.push(DiagnosticsRecord {
            t,
            mass: mass_val,
            energy: energy_val,
            max_modulus: state.max_abs(),
            probe: probe_val,
        });
        if let (Some(dir), Some(every)) = (&out_dir, snapshot_every) {
            if every > 0 && step % every == 0 {
                let path = dir.join(format!("field_{step:06}.bin"));
                if let Err(e) = write_field(state, &grid, complex, &path) {
                    snapshot_err.get_or_insert(e);
                }
            }
        }
        last_state = Some(state.clone());
    });
    let wall = start.elapsed().as_secs_f64();
    if let Some(e) = snapshot_err {
        return Err(e.into());
    }
    // final (or last good) snapshot
    if let (Some(dir), Some(state)) = (&cfg.out_dir, &last_state) {
        write_field(state, &grid, complex, &dir.join("field_final.bin"))?;
        export_csv(state, &grid, &dir.join("field_final.csv"))?;
    }
    let res = result?;
    let cell = RunCell {
        scheme,
        k,
        dt_used: res.dt_used,
        dt_adjusted: res.dt_adjusted,
        err_linf: None,
        err_l2: None,
        eoc: None,
        wall_secs: wall,
        setup_secs: res.setup_secs,
        loop_secs: res.loop_secs,
        counts: res.counts,
        failure: None,
    };
    Ok(RunReport {
        problem: cfg.problem.clone(),
        p: grid.p,
        t_final: prep.t_final,
        threads: cfg.threads,
        seed: cfg.seed,
        reference: "none".to_string(),
        cells: vec![cell],
        diagnostics,
        notes: Vec::new(),
    })
}

fn metadata_line(report: &RunReport, kind: &str) -> String {
    format!(
        "# kind={kind} problem={} p={} T={} threads={} seed={} reference=\"{}\"",
        report.problem, report.p, report.t_final, report.threads, report.seed, report.reference
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6e}"))
}

/// Table-style CSV: one row per (scheme, k) with errors, EOC, and timings.
pub fn study_csv(report: &RunReport, kind: &str) -> String {
    let mut out = metadata_line(report, kind);
    out.push('\n');
    out.push_str(
        "scheme,k,dt_used,dt_adjusted,err_linf,err_l2,eoc,wall_secs,setup_secs,loop_secs,solve_ops,raw_solves,reaction_evals,failure\n",
    );
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{:.6e},{:.6e},{},{},{},{},{:.6e},{:.6e},{:.6e},{},{},{},{}",
            c.scheme.key(),
            c.k,
            c.dt_used,
            c.dt_adjusted as u8,
            fmt_opt(c.err_linf),
            fmt_opt(c.err_l2),
            c.eoc.map_or(String::new(), |x| format!("{x:.4}")),
            c.wall_secs,
            c.setup_secs,
            c.loop_secs,
            c.counts.solve_ops,
            c.counts.raw_solves,
            c.counts.reaction_evals,
            c.failure.clone().unwrap_or_default().replace(',', ";"),
        );
    }
    for note in &report.notes {
        let _ = writeln!(out, "# note: {note}");
    }
    out
}

/// Diagnostics CSV: one row per recorded time.
pub fn diagnostics_csv(report: &RunReport) -> String {
    let mut out = metadata_line(report, "diagnostics");
    out.push('\n');
    out.push_str("t,mass,energy,max_modulus,probe\n");
    for rec in &report.diagnostics {
        let probe_txt = rec.probe.as_ref().map_or(String::new(), |vals| {
            vals.iter()
                .map(|z| format!("{:.9e}{:+.9e}i", z.re, z.im))
                .collect::<Vec<_>>()
                .join(" ")
        });
        let _ = writeln!(
            out,
            "{:.9e},{},{},{:.9e},{}",
            rec.t,
            fmt_opt(rec.mass),
            fmt_opt(rec.energy),
            rec.max_modulus,
            probe_txt
        );
    }
    out
}

pub fn write_study_csv(report: &RunReport, kind: &str, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, study_csv(report, kind))?;
    Ok(())
}

pub fn write_diagnostics_csv(report: &RunReport, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, diagnostics_csv(report))?;
    Ok(())
}
