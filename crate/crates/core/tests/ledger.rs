mod common;

use common::{block_energy, convolve_transport, relative, shell, top_shell};
use lpmhd::experiments::{random_mhd_state, run_experiment, ExperimentConfig, ExperimentKind, Manifest};
use lpmhd::ledger::{beta, check_exponents, delta_max, theta_product, Ledger};
use lpmhd::lp::DyadicCutoff;
use lpmhd::mhd::{SolverParams, Stepper};
use lpmhd::spectral::{Grid, SpectralField};
use proptest::prelude::*;

/// `Σ_q λ_q^{2σ} ⟨Δ_q((a·∇)w), Δ_q t⟩`, shell by shell.
fn flux_oracle(a: &SpectralField, w: &SpectralField, t: &SpectralField, sigma: f64) -> f64 {
    let cutoff = DyadicCutoff::default();
    let product = convolve_transport(a, w);
    (-1..=top_shell(a.grid()))
        .map(|q| 2f64.powf(2.0 * sigma * q as f64) * shell(&product, &cutoff, q).inner(&shell(t, &cutoff, q)).re)
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decompositions_close(seed in any::<u64>(), s in 0.1f64..1.5, frac in 0.0f64..1.0) {
        let g = Grid::new(2, 32).unwrap();
        let ledger = Ledger::new(&g, &DyadicCutoff::default(), s, s + 1.0 - frac * delta_max(2, s)).unwrap();
        let f = ledger.flux_terms(&random_mhd_state(&g, seed).unwrap()).unwrap();
        for d in f.decomposition_defects() {
            prop_assert!(d <= 1e-10, "{:?}", f.decomposition_defects());
        }
        let totals = ledger.flux_totals(&random_mhd_state(&g, seed).unwrap()).unwrap();
        for (a, b) in totals.iter().zip([f.i1, f.i2, f.i3, f.i4]) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn flux_totals_match_the_convolution_oracle() {
    let g = Grid::new(2, 16).unwrap();
    let (s, r) = (0.8, 1.6);
    let ledger = Ledger::new(&g, &DyadicCutoff::default(), s, r).unwrap();
    for seed in 0..3 {
        let st = random_mhd_state(&g, seed).unwrap();
        let (u, b) = (st.u.as_field(), st.b.as_field());
        let want = [
            flux_oracle(u, u, u, s),
            -flux_oracle(b, b, u, s),
            flux_oracle(u, b, b, r),
            -flux_oracle(b, u, b, r),
        ];
        let got = ledger.flux_totals(&st).unwrap();
        let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (g, w) in got.iter().zip(want) {
            assert!(relative((g - w).abs(), scale) <= 1e-12, "{got:?} vs {want:?}");
        }
        // the transport part of I1 vanishes with no LP weights at all
        let plain = convolve_transport(u, u).inner(u).re;
        assert!(plain.abs() <= 1e-12 * convolve_transport(u, u).l2_norm() * u.l2_norm());
    }
}

#[test]
fn energies_and_a_match_block_oracle() {
    let g = Grid::new(2, 32).unwrap();
    let cutoff = DyadicCutoff::default();
    let (s, r) = (1.1, 1.9);
    let ledger = Ledger::new(&g, &cutoff, s, r).unwrap();
    let st = random_mhd_state(&g, 5).unwrap();
    let rates = ledger.rates(&st, 0.1).unwrap();
    let eu = block_energy(st.u.as_field(), &cutoff, s);
    let eb = block_energy(st.b.as_field(), &cutoff, r);
    assert!(relative((rates.energy_u - eu).abs(), eu) <= 1e-12);
    assert!(relative((rates.energy_b - eb).abs(), eb) <= 1e-12);
    let a = 2.0 * block_energy(st.u.as_field(), &cutoff, s) + 2.0 * block_energy(st.b.as_field(), &cutoff, s + 1.0);
    assert!(relative((ledger.a_of_t(&st) - a).abs(), a) <= 1e-12);
    let d = 0.1 * 2.0 * block_energy(st.u.as_field(), &cutoff, s + 1.0);
    assert!(relative((rates.dissipation_block - d).abs(), d) <= 1e-12);
}

#[test]
fn check_requires_equal_spacing() {
    let g = Grid::new(2, 16).unwrap();
    let ledger = Ledger::new(&g, &DyadicCutoff::default(), 1.0, 1.5).unwrap();
    let st = random_mhd_state(&g, 1).unwrap();
    let stepper = Stepper::new(&g, &SolverParams::new(0.1, 1e-3)).unwrap();
    let a = stepper.step(&st).unwrap();
    let b = stepper.step(&stepper.step(&a).unwrap()).unwrap();
    assert!(ledger.check([&st, &a, &b], 0.1).is_err());
    let c = stepper.step(&a).unwrap();
    let chk = ledger.check([&st, &a, &c], 0.1).unwrap();
    assert!(chk.residual_u.is_finite() && chk.scale_u > 0.0);
}

#[test]
fn exponent_bounds() {
    assert!(check_exponents(2, 1.0, 1.5).is_ok());
    assert!(check_exponents(2, 1.0, 2.5).is_err());
    assert!(check_exponents(2, -0.1, 0.5).is_err());
    for (n, s) in [(2usize, 1.0f64), (3, 0.6), (2, 2.5)] {
        let want = 4.0 * (s + 1.0) / (2.0 * (s + 1.0) + n as f64);
        assert!((beta(n, s) - want).abs() < 1e-15);
        assert!((theta_product(n, s) - (1.0 - n as f64 / (2.0 * (s + 1.0)))).abs() < 1e-15);
    }
}

#[test]
fn ledger_experiment_writes_its_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        grid: Some(16),
        samples: Some(3),
        output: Some(tmp.path().to_path_buf()),
        ..Default::default()
    };
    let summary = run_experiment(ExperimentKind::Ledger, &cfg).unwrap();
    let m: Manifest = serde_json::from_slice(&std::fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m, summary.manifest);
    assert!(m.files.iter().any(|f| f.path == "ledger.json"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("ledger.json")).unwrap()).unwrap();
    assert_eq!(report["flux_terms"].as_array().unwrap().len(), 3);
    assert!(report["max_decomposition_defect"].as_f64().unwrap() <= 1e-10);
}
