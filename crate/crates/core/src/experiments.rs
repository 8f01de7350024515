//! Experiment configuration, dispatch and report emission.
//!
//! One experiment per invocation. Every output file is listed in
//! `manifest.json` together with its git-style blob hash, the resolved
//! configuration and the seed, so identical `(config, seed)` pairs can be
//! checked for byte-identical output.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::constants::{fit_constant_table, ConstantTable, FitSettings};
use crate::error::{Error, Result};
use crate::ledger::{
    check_exponents, propagation_experiment, Ledger, PropagationConfig, Verdict,
};
use crate::lp::{
    bernstein_scan, norm_equivalence_scan, random_broadband, resolved_shell, DyadicCutoff, LittlewoodPaley,
};
use crate::mhd::{energy_report, orszag_tang, run, save_checkpoint, tail_fraction, write_diagnostics_csv, MhdState, SolverParams, Stepper};
use crate::paraproduct::{commutator_scan, Paraproduct};
use crate::spectral::random::{random_solenoidal, rng_from_seed, Modulus};
use crate::spectral::{advect, leray_project, Exponent, Grid};
use crate::stokes::{heat_sum_check, log_grid, log_scan, rough_data, smooth_data, RoughDataSpec, StokesConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LpVerify,
    Bernstein,
    Commutator,
    Bony,
    StokesLogscan,
    HeatSum,
    MhdRun,
    Ledger,
    Propagation,
    FitConstants,
}

impl ExperimentKind {
    /// Inverse of [`ExperimentKind::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        Self::value_variants().iter().copied().find(|k| k.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LpVerify => "lp-verify",
            ExperimentKind::Bernstein => "bernstein",
            ExperimentKind::Commutator => "commutator",
            ExperimentKind::Bony => "bony",
            ExperimentKind::StokesLogscan => "stokes-logscan",
            ExperimentKind::HeatSum => "heat-sum",
            ExperimentKind::MhdRun => "mhd-run",
            ExperimentKind::Ledger => "ledger",
            ExperimentKind::Propagation => "propagation",
            ExperimentKind::FitConstants => "fit-constants",
        }
    }
}

/// Initial data of `mhd-run`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    OrszagTang,
    Rough,
}

/// A single JSON document; unset fields take per-experiment defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    /// Spatial dimension `n`.
    pub dim: Option<usize>,
    /// Points per axis `N`.
    pub grid: Option<usize>,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub t0: Option<f64>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub initial: Option<InitialData>,
    /// Constant table consumed by `propagation`.
    pub constants: Option<PathBuf>,
    /// Re-run `fit-constants` at `2N` and flag drifting entries.
    pub audit: Option<bool>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_slice(&fs::read(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged(mut self, other: &ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(if other.$f.is_some() { self.$f = other.$f.clone(); })*};
        }
        take!(experiment, dim, grid, nu, alpha, s, r, t0, t_final, dt, eps_list, seed, samples, initial, constants, audit, output);
        self
    }

    /// Fills every unset field with the default of `kind`.
    pub fn resolved(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        use ExperimentKind::*;
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(Error::Config(format!("config is for `{}`, invoked as `{}`", k.name(), kind.name())));
            }
        }
        let grid = match kind {
            StokesLogscan => 1024,
            Propagation => 256,
            MhdRun => 128,
            Ledger => 32,
            _ => 64,
        };
        let nu = match kind {
            StokesLogscan | HeatSum => 1.0,
            _ => 0.05,
        };
        let samples = match kind {
            LpVerify | Bony => 50,
            Bernstein => 100,
            Commutator | FitConstants | HeatSum => 200,
            Ledger => 20,
            _ => 0,
        };
        let dt = match kind {
            StokesLogscan => 1e-5,
            Ledger => 2e-3,
            _ => 1e-3,
        };
        let s = self.s.unwrap_or(1.2);
        let cfg = ExperimentConfig {
            experiment: Some(kind),
            dim: Some(self.dim.unwrap_or(2)),
            grid: Some(self.grid.unwrap_or(grid)),
            nu: Some(self.nu.unwrap_or(nu)),
            alpha: Some(self.alpha.unwrap_or(1.0)),
            s: Some(s),
            r: Some(self.r.unwrap_or(s + 1.0)),
            t0: Some(self.t0.unwrap_or(0.01)),
            t_final: Some(self.t_final.unwrap_or(match kind {
                Propagation => 1.01,
                _ => 1.0,
            })),
            dt: Some(self.dt.unwrap_or(dt)),
            eps_list: Some(self.eps_list.clone().unwrap_or_else(|| vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4])),
            seed: Some(self.seed.unwrap_or(7)),
            samples: Some(self.samples.unwrap_or(samples)),
            initial: Some(self.initial.unwrap_or(InitialData::OrszagTang)),
            constants: self.constants.clone(),
            audit: Some(self.audit.unwrap_or(false)),
            output: Some(self.output.clone().unwrap_or_else(|| PathBuf::from(format!("out/{}", kind.name())))),
        };
        cfg.validate(kind)?;
        Ok(cfg)
    }

    /// Checks the resolved fields against the preconditions of the module
    /// that will consume them; the message names the violated constraint.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        use ExperimentKind::*;
        let bad = |m: String| Err(Error::Config(m));
        let (dim, n) = (self.dim.unwrap_or(2), self.grid.unwrap_or(64));
        Grid::new(dim, n).map_err(|e| Error::Config(e.to_string()))?;
        let positive = [("nu", self.nu), ("alpha", self.alpha), ("t_final", self.t_final), ("dt", self.dt), ("t0", self.t0)];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive and finite, got {v}"));
                }
            }
        }
        let s = self.s.unwrap_or(1.2);
        match kind {
            Ledger | Propagation | FitConstants => {
                check_exponents(dim, s, self.r.unwrap_or(s + 1.0)).map_err(|e| Error::Config(e.to_string()))?;
            }
            _ => {}
        }
        if kind == FitConstants && self.samples.unwrap_or(0) < crate::constants::MIN_SAMPLES {
            return bad(format!(
                "fit-constants needs at least {} samples, got {}",
                crate::constants::MIN_SAMPLES,
                self.samples.unwrap_or(0)
            ));
        }
        if matches!(kind, LpVerify | Bernstein | Commutator | Bony | Ledger | HeatSum) && self.samples == Some(0) {
            return bad(format!("{} needs at least one sample", kind.name()));
        }
        if kind == Propagation && self.t_final.unwrap_or(1.01) <= self.t0.unwrap_or(0.01) {
            return bad("t_final (window search end) must exceed t0".into());
        }
        if kind == StokesLogscan {
            self.stokes_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    fn stokes_config(&self) -> StokesConfig {
        StokesConfig {
            nu: self.nu.unwrap_or(1.0),
            alpha: self.alpha.unwrap_or(1.0),
            s: self.s.unwrap_or(1.2),
            t_final: self.t_final.unwrap_or(1.0),
            eps_list: self.eps_list.clone().unwrap_or_default(),
            dt: self.dt.unwrap_or(1e-5),
        }
    }
}

/// How the experiment ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// The propagation verdict was FAIL.
    VerdictFail,
    BlowUp,
    EmptyWindow,
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_BLOWUP: u8 = 5;
pub const EXIT_EMPTY_WINDOW: u8 = 6;
pub const EXIT_IO: u8 = 7;
pub const EXIT_VERDICT_FAIL: u8 = 8;

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => EXIT_OK,
            Status::VerdictFail => EXIT_VERDICT_FAIL,
            Status::BlowUp => EXIT_BLOWUP,
            Status::EmptyWindow => EXIT_EMPTY_WINDOW,
        }
    }
}

/// Exit code of an error that aborted an experiment.
pub fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Parameter(_)
        | Error::GridMismatch(_)
        | Error::InvalidGrid(_)
        | Error::OutOfRange(_)
        | Error::Cutoff(_) => EXIT_CONFIG,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    /// SHA-1 of `"blob <len>\0" + content`, as `git hash-object` computes it.
    pub sha1: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub version: String,
    pub seed: u64,
    pub status: Status,
    pub config: ExperimentConfig,
    pub files: Vec<ManifestFile>,
}

/// Git blob hash of a byte string.
pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects output files in write order.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        Ok(())
    }
}

/// Result of one invocation.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub status: Status,
    pub output: PathBuf,
    pub manifest: Manifest,
    /// One-line human summary.
    pub headline: String,
}

/// Runs `kind` with `config` (merged over the defaults) and writes the
/// artifacts plus `manifest.json` to the output directory.
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig) -> Result<RunSummary> {
    let cfg = config.resolved(kind)?;
    let out_dir = cfg.output.clone().expect("resolved");
    let mut out = Outputs::new(&out_dir)?;
    let cutoff = DyadicCutoff::default();
    let (status, headline) = dispatch(kind, &cfg, &cutoff, &mut out)?;
    let mut files = Vec::new();
    for name in &out.files {
        files.push(ManifestFile { path: name.clone(), sha1: git_blob_sha1(&fs::read(out_dir.join(name))?) });
    }
    let manifest = Manifest {
        experiment: kind,
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed.expect("resolved"),
        status,
        config: cfg,
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out_dir.join("manifest.json"), text)?;
    Ok(RunSummary { status, output: out_dir, manifest, headline })
}

#[derive(Serialize)]
struct LpVerifyReport {
    grid_n: usize,
    samples: usize,
    max_reconstruction_error: f64,
    max_partition_defect: f64,
    equivalence: crate::lp::EquivalenceReport,
}

#[derive(Serialize)]
struct BonyReport {
    grid_n: usize,
    samples: usize,
    max_relative_error: f64,
    triples: Vec<(i32, f64)>,
}

#[derive(Serialize)]
struct StokesReport {
    rough: crate::stokes::LogScanReport,
    smooth: crate::stokes::LogScanReport,
    smooth_slope_fraction: f64,
}

#[derive(Serialize)]
struct HeatSumReport {
    sup_ratio: f64,
    sup_ratio_halved_grid: f64,
    relative_change: f64,
    report: crate::stokes::HeatReport,
}

#[derive(Serialize)]
struct MhdRunReport {
    grid_n: usize,
    nu: f64,
    dt: f64,
    t_final: f64,
    steps_recorded: usize,
    max_divergence: f64,
    blowup: Option<(f64, String)>,
    energy: crate::mhd::EnergyReport,
}

#[derive(Serialize)]
struct LedgerReport {
    grid_n: usize,
    s: f64,
    r: f64,
    nu: f64,
    flux_terms: Vec<crate::ledger::FluxTerms>,
    max_decomposition_defect: f64,
    max_cancellation_ratio: f64,
    fd_checks: Vec<crate::ledger::LedgerCheck>,
}

/// Random MHD state used by the ledger experiment.
pub fn random_mhd_state(grid: &Grid, seed: u64) -> Result<MhdState> {
    let mut rng = rng_from_seed(seed);
    let u = random_solenoidal(grid, &mut rng, Modulus::Uniform, |k| (1.0 + k * k).powf(-1.3));
    let b = random_solenoidal(grid, &mut rng, Modulus::Uniform, |k| (1.0 + k * k).powf(-1.8));
    MhdState::new(u, b, 0.0)
}

fn dispatch(kind: ExperimentKind, cfg: &ExperimentConfig, cutoff: &DyadicCutoff, out: &mut Outputs) -> Result<(Status, String)> {
    let dim = cfg.dim.unwrap();
    let grid = Grid::new(dim, cfg.grid.unwrap())?;
    let seed = cfg.seed.unwrap();
    let samples = cfg.samples.unwrap();
    let (nu, s) = (cfg.nu.unwrap(), cfg.s.unwrap());
    match kind {
        ExperimentKind::LpVerify => {
            let lp = LittlewoodPaley::new(&grid, cutoff);
            let mut rng = rng_from_seed(seed);
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let u = random_broadband(&grid, 1, &mut rng);
                let rec = lp.decompose(&u)?.reconstruct();
                worst = worst.max((&rec - &u).l2_norm() / u.l2_norm());
            }
            let partition = lp.mode_weights(|_| 1.0, 1);
            let defect = partition.iter().map(|w| (w - 1.0).abs()).fold(0.0, f64::max);
            let equivalence = norm_equivalence_scan(&grid, cutoff, samples, &[0.0, 0.5, 1.0, 2.0], seed);
            let headline = format!(
                "reconstruction {worst:.2e}, partition {defect:.2e}, c2/c1 = {:.3}",
                equivalence.c2 / equivalence.c1
            );
            out.json(
                "lp_verify.json",
                &LpVerifyReport {
                    grid_n: grid.n(),
                    samples,
                    max_reconstruction_error: worst,
                    max_partition_defect: defect,
                    equivalence,
                },
            )?;
            Ok((Status::Ok, headline))
        }
        ExperimentKind::Bernstein => {
            let top = resolved_shell(&grid);
            let rep = bernstein_scan(&grid, cutoff, 0..=top, samples, Exponent::Infinity, Exponent::Finite(2.0), seed)?;
            let headline = format!("C_B = {:.4}, shell spread {:.3}", rep.constant, rep.shell_spread());
            out.json("bernstein.json", &rep)?;
            Ok((Status::Ok, headline))
        }
        ExperimentKind::Commutator => {
            let top = resolved_shell(&grid);
            let rep = commutator_scan(&grid, cutoff, 0..=top, samples, Exponent::Finite(2.0), seed)?;
            let headline = format!("C_comm = {:.4}", rep.constant);
            out.json("commutator.json", &rep)?;
            Ok((Status::Ok, headline))
        }
        ExperimentKind::Bony => {
            use rand::RngExt;
            let lp = LittlewoodPaley::new(&grid, cutoff);
            let mut rng = rng_from_seed(seed);
            let mut triples = Vec::with_capacity(samples);
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let u = leray_project(&random_broadband(&grid, dim, &mut rng))?;
                let v = random_broadband(&grid, dim, &mut rng);
                let q = rng.random_range(0..=lp.q_max());
                let local = lp.project(&advect(&u, &v)?, q);
                let split = Paraproduct::new(&lp, u.as_field(), &v)?.split(q)?;
                let err = (&split.total() - &local).l2_norm() / local.l2_norm().max(f64::MIN_POSITIVE);
                worst = worst.max(err);
                triples.push((q, err));
            }
            out.json("bony.json", &BonyReport { grid_n: grid.n(), samples, max_relative_error: worst, triples })?;
            Ok((Status::Ok, format!("max relative error {worst:.2e}")))
        }
        ExperimentKind::StokesLogscan => {
            let sc = cfg.stokes_config();
            let rough = log_scan(&rough_data(&RoughDataSpec::new(s, seed), &grid)?, &sc)?;
            let smooth = log_scan(&smooth_data(&grid, s, seed)?, &sc)?;
            let first = smooth.rows.first().map(|r| r.j).unwrap_or(0.0);
            let fraction = if first > 0.0 { smooth.b.abs() / first } else { 0.0 };
            rough.write_csv(&out.path("stokes_rough.csv"))?;
            smooth.write_csv(&out.path("stokes_smooth.csv"))?;
            let headline = format!("rough: b = {:.4}, R^2 = {:.5}; smooth b/J = {fraction:.4}", rough.b, rough.r_squared);
            out.json("stokes_logscan.json", &StokesReport { rough, smooth, smooth_slope_fraction: fraction })?;
            Ok((Status::Ok, headline))
        }
        ExperimentKind::HeatSum => {
            let n = samples.max(3);
            let fine = heat_sum_check(nu, cfg.alpha.unwrap(), &log_grid(1e-6, 1.0, n))?;
            let coarse = heat_sum_check(nu, cfg.alpha.unwrap(), &log_grid(1e-6, 1.0, n / 2 + 1))?;
            let change = crate::constants::relative_drift(fine.sup_ratio, coarse.sup_ratio);
            let mut w = csv::Writer::from_path(out.path("heat_sum.csv"))?;
            w.write_record(["t", "series", "ratio"])?;
            for r in &fine.rows {
                w.write_record([r.t, r.series, r.ratio].map(|x| format!("{x:.17e}")))?;
            }
            w.flush()?;
            let headline = format!("sup ratio {:.5}, change under halving {change:.2e}", fine.sup_ratio);
            out.json(
                "heat_sum.json",
                &HeatSumReport {
                    sup_ratio: fine.sup_ratio,
                    sup_ratio_halved_grid: coarse.sup_ratio,
                    relative_change: change,
                    report: fine,
                },
            )?;
            Ok((Status::Ok, headline))
        }
        ExperimentKind::MhdRun => {
            let initial = match cfg.initial.unwrap() {
                InitialData::OrszagTang => orszag_tang(&grid)?,
                InitialData::Rough => crate::ledger::rough_mhd_data(&grid, s, seed)?,
            };
            let params = SolverParams { monitor_s: s, ..SolverParams::new(nu, cfg.dt.unwrap()) };
            let t_final = cfg.t_final.unwrap();
            let outcome = run(&initial, &params, t_final)?;
            let energy = energy_report(&outcome.history, nu, tail_fraction(&outcome.state));
            write_diagnostics_csv(&out.path("diagnostics.csv"), &outcome.history)?;
            save_checkpoint(&out.path("final.lpmh"), &outcome.state)?;
            let status = if outcome.blowup.is_some() { Status::BlowUp } else { Status::Ok };
            let headline = match &outcome.blowup {
                Some((t, why)) => format!("blow-up at t = {t}: {why}"),
                None => format!("max |D| = {:.3e} (E0 = {:.4}), flagged = {}", energy.max_abs, energy.initial_energy, energy.flagged),
            };
            out.json(
                "mhd_run.json",
                &MhdRunReport {
                    grid_n: grid.n(),
                    nu,
                    dt: params.dt,
                    t_final,
                    steps_recorded: outcome.history.len(),
                    max_divergence: outcome.max_divergence,
                    blowup: outcome.blowup.clone(),
                    energy,
                },
            )?;
            Ok((status, headline))
        }
        ExperimentKind::Ledger => {
            let r = cfg.r.unwrap();
            let ledger = Ledger::new(&grid, cutoff, s, r)?;
            let mut flux_terms = Vec::with_capacity(samples);
            let (mut defect, mut cancel) = (0.0f64, 0.0f64);
            for i in 0..samples {
                let f = ledger.flux_terms(&random_mhd_state(&grid, seed.wrapping_add(i as u64))?)?;
                defect = f.decomposition_defects().iter().fold(defect, |m, d| m.max(*d));
                let (a, b) = f.cancellation_ratios();
                cancel = cancel.max(a).max(b);
                flux_terms.push(f);
            }
            // centered differences on checkpoint triples, step halved each time
            let start = random_mhd_state(&grid, seed)?;
            let mut fd_checks = Vec::new();
            let h0 = cfg.dt.unwrap();
            for level in 0..4 {
                let h = h0 / 2f64.powi(level);
                let stepper = Stepper::new(&grid, &SolverParams::new(nu, h / 4.0))?;
                let mut states = vec![start.clone()];
                let mut st = start.clone();
                for k in 1..=8 {
                    st = stepper.step(&st)?;
                    if k % 4 == 0 {
                        states.push(st.clone());
                    }
                }
                fd_checks.push(ledger.check([&states[0], &states[1], &states[2]], nu)?);
            }
            let headline = format!(
                "identity defect {defect:.2e}, cancellation {cancel:.2e}, fd residual {:.2e} -> {:.2e}",
                fd_checks[0].residual_u.max(fd_checks[0].residual_b),
                fd_checks[3].residual_u.max(fd_checks[3].residual_b)
            );
            out.json(
                "ledger.json",
                &LedgerReport {
                    grid_n: grid.n(),
                    s,
                    r,
                    nu,
                    flux_terms,
                    max_decomposition_defect: defect,
                    max_cancellation_ratio: cancel,
                    fd_checks,
                },
            )?;
            Ok((Status::Ok, headline))
        }
        ExperimentKind::Propagation => {
            let constants = match &cfg.constants {
                Some(p) => {
                    let t = ConstantTable::load(p)?;
                    Some((t.value("C_nu")?, t.value("C_0")?))
                }
                None => None,
            };
            let pc = PropagationConfig {
                dim,
                n: grid.n(),
                s,
                nu,
                t0: cfg.t0.unwrap(),
                t_search: cfg.t_final.unwrap(),
                dt_max: cfg.dt.unwrap(),
                seed,
                constants,
                ..PropagationConfig::default()
            };
            let rep = propagation_experiment(&pc, cutoff)?;
            rep.write_trace_csv(&out.path("propagation_trace.csv"))?;
            out.json("propagation.json", &rep)?;
            let status = match rep.verdict {
                Verdict::Pass => Status::Ok,
                Verdict::Fail => Status::VerdictFail,
                Verdict::EmptyWindow => Status::EmptyWindow,
            };
            let headline = match &rep.window {
                crate::ledger::Window::Empty { constraint, detail } => {
                    format!("empty window ({constraint:?}): {detail}")
                }
                _ => format!(
                    "{:?}: T = {:.6e}, max A/A0 = {:.4}",
                    rep.verdict,
                    rep.t_predicted.unwrap_or(f64::NAN),
                    rep.max_ratio
                ),
            };
            Ok((status, headline))
        }
        ExperimentKind::FitConstants => {
            let settings = FitSettings { dim, n: grid.n(), samples, seed, s, nu };
            let mut table = fit_constant_table(&settings, cutoff)?;
            let mut headline = format!("{} constants fitted on N = {}", table.entries.len(), grid.n());
            if cfg.audit.unwrap() {
                let refined = fit_constant_table(&FitSettings { n: 2 * grid.n(), ..settings }, cutoff)?;
                let flagged = table.audit(&refined);
                headline.push_str(&format!("; audit at N = {} flagged {:?}", 2 * grid.n(), flagged));
                out.json("constants_refined.json", &refined)?;
            }
            table.save(&out.path("constants.json"))?;
            Ok((Status::Ok, headline))
        }
    }
}
