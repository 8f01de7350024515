//! Table of measured constants.
//!
//! Every `≲` the analysis hides is materialized here as a number measured
//! over a named random ensemble, together with the grid it was measured on
//! and the drift tolerated when the grid is refined. Nothing in the table
//! is a sharp or published value.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{calibrate, interpolation_checks, rough_mhd_data, PropagationConfig};
use crate::lp::{bernstein_scan, norm_equivalence_scan, resolved_shell, DyadicCutoff};
use crate::paraproduct::commutator_scan;
use crate::spectral::{Exponent, Grid};
use crate::stokes::{heat_sum_check, log_grid};

/// Ensembles smaller than this are refused.
pub const MIN_SAMPLES: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub name: String,
    pub value: f64,
    /// How the value was obtained.
    pub ensemble: String,
    pub samples: usize,
    pub grid_n: usize,
    /// Relative change tolerated under grid doubling.
    pub drift_tol: f64,
    /// Relative change measured by the last audit, if any.
    pub drift: Option<f64>,
    /// Set by an audit whose drift exceeds `drift_tol`.
    pub flagged: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantTable {
    pub seed: u64,
    pub dim: usize,
    pub generator: String,
    pub entries: Vec<ConstantEntry>,
}

impl ConstantTable {
    pub fn get(&self, name: &str) -> Option<&ConstantEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> Result<f64> {
        self.get(name)
            .map(|e| e.value)
            .ok_or_else(|| Error::Config(format!("constant table has no entry `{name}`")))
    }

    /// Inserts or replaces by name.
    pub fn upsert(&mut self, entry: ConstantEntry) {
        match self.entries.iter_mut().find(|e| e.name == entry.name) {
            Some(e) => *e = entry,
            None => self.entries.push(entry),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Records the relative drift of every shared entry against a table
    /// measured on a refined grid and flags those beyond tolerance.
    /// Returns the names of the flagged entries.
    pub fn audit(&mut self, refined: &ConstantTable) -> Vec<String> {
        let mut flagged = Vec::new();
        for e in self.entries.iter_mut() {
            if let Some(r) = refined.get(&e.name) {
                let drift = relative_drift(e.value, r.value);
                e.drift = Some(drift);
                e.flagged = !(drift <= e.drift_tol);
                if e.flagged {
                    flagged.push(e.name.clone());
                }
            }
        }
        flagged
    }
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_drift(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Calibration settings for [`fit_constant_table`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub dim: usize,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub s: f64,
    pub nu: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings { dim: 2, n: 64, samples: 200, seed: 7, s: 1.2, nu: 0.05 }
    }
}

/// Runs every calibration ensemble and collects the table:
/// `c1`, `c2` (block/direct norm equivalence), `C_B` (Bernstein, `(∞, 2)`),
/// `C_comm` (commutator, `L²`), `R_bb`, `R_uu` (product bounds), `C_heat`
/// (heat-sum supremum), `C_nu`, `C_0` (energy inequalities on a
/// reference run).
pub fn fit_constant_table(settings: &FitSettings, cutoff: &DyadicCutoff) -> Result<ConstantTable> {
    let FitSettings { dim, n, samples, seed, s, nu } = settings.clone();
    if samples < MIN_SAMPLES {
        return Err(Error::Config(format!(
            "calibration ensemble of {samples} samples refused (minimum {MIN_SAMPLES})"
        )));
    }
    let grid = Grid::new(dim, n)?;
    let top = resolved_shell(&grid);
    let mut table = ConstantTable {
        seed,
        dim,
        generator: format!("lpmhd {}", env!("CARGO_PKG_VERSION")),
        entries: Vec::new(),
    };
    let entry = |name: &str, value: f64, ensemble: String, count: usize, tol: f64| ConstantEntry {
        name: name.into(),
        value,
        ensemble,
        samples: count,
        grid_n: n,
        drift_tol: tol,
        drift: None,
        flagged: false,
    };

    let eq = norm_equivalence_scan(&grid, cutoff, samples, &[0.0, 0.5, 1.0, 2.0], seed);
    let what = "broadband fields, slopes in [0,3], s in {0, 0.5, 1, 2}".to_string();
    table.upsert(entry("c1", eq.c1, what.clone(), samples, 0.05));
    table.upsert(entry("c2", eq.c2, what, samples, 0.05));

    let bern = bernstein_scan(&grid, cutoff, 0..=top, samples, Exponent::Infinity, Exponent::Finite(2.0), seed)?;
    table.upsert(entry("C_B", bern.constant, format!("shell fields q = 0..{top}, (r, s) = (inf, 2)"), samples, 0.10));

    let comm = commutator_scan(&grid, cutoff, 0..=top, samples, Exponent::Finite(2.0), seed)?;
    table.upsert(entry("C_comm", comm.constant, format!("broadband pairs, q = 0..{top}, L2"), samples, 0.15));

    let interp = interpolation_checks(&grid, s, samples, seed)?;
    let what = format!("broadband divergence-free fields, s = {s}");
    table.upsert(entry("R_bb", interp.r_bb, what.clone(), samples, 0.25));
    table.upsert(entry("R_uu", interp.r_uu, what, samples, 0.25));

    let heat = heat_sum_check(nu, 1.0, &log_grid(1e-6, 1.0, samples))?;
    table.upsert(entry("C_heat", heat.sup_ratio, format!("t log-spaced in [1e-6, 1], nu = {nu}"), samples, 0.05));

    let cfg = PropagationConfig {
        dim,
        n,
        s,
        nu,
        seed,
        calibration_n: n,
        calibration_samples: samples,
        ..PropagationConfig::default()
    };
    let fit = calibrate(&rough_mhd_data(&grid, s, seed)?, &cfg, cutoff)?;
    let what = format!(
        "reference run from rough data, t in [{}, {}], margin {}",
        cfg.t0,
        cfg.t0 + cfg.calibration_time,
        cfg.margin
    );
    table.upsert(entry("C_nu", fit.c_nu, what.clone(), fit.samples, 0.5));
    table.upsert(entry("C_0", fit.c_0, what, fit.samples, 0.5));
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_entry(name: &str, value: f64, tol: f64) -> ConstantEntry {
        ConstantEntry {
            name: name.into(),
            value,
            ensemble: String::new(),
            samples: 50,
            grid_n: 64,
            drift_tol: tol,
            drift: None,
            flagged: false,
        }
    }

    #[test]
    fn small_ensembles_refused() {
        let settings = FitSettings { samples: 10, ..FitSettings::default() };
        assert!(matches!(fit_constant_table(&settings, &DyadicCutoff::default()), Err(Error::Config(_))));
        let empty = FitSettings { samples: 0, ..FitSettings::default() };
        assert!(fit_constant_table(&empty, &DyadicCutoff::default()).is_err());
    }

    #[test]
    fn audit_flags_drift() {
        let mut a = ConstantTable::default();
        a.upsert(sample_entry("x", 1.0, 0.1));
        a.upsert(sample_entry("y", 1.0, 0.1));
        let mut b = ConstantTable::default();
        b.upsert(sample_entry("x", 1.05, 0.1));
        b.upsert(sample_entry("y", 1.5, 0.1));
        assert_eq!(a.audit(&b), vec!["y".to_string()]);
        assert!(!a.get("x").unwrap().flagged);
        assert!((a.get("y").unwrap().drift.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn upsert_replaces() {
        let mut t = ConstantTable::default();
        t.upsert(sample_entry("x", 1.0, 0.1));
        t.upsert(sample_entry("x", 2.0, 0.1));
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.value("x").unwrap(), 2.0);
        assert!(t.value("missing").is_err());
    }
}
