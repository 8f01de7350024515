//! Independent oracles shared by the integration tests: everything here is
//! evaluated mode by mode, without FFTs or the LP machinery under test.

#![allow(dead_code)]

use lpmhd::lp::DyadicCutoff;
use lpmhd::spectral::{Grid, SpectralField};
use num_complex::Complex64;

/// Nonzero modes of a field as `(wavevector, coefficients per component)`.
fn support(f: &SpectralField) -> Vec<([i64; 3], Vec<Complex64>)> {
    let g = f.grid();
    (0..g.len())
        .filter_map(|i| {
            let c: Vec<Complex64> = (0..f.components()).map(|c| f.component(c)[i]).collect();
            c.iter().any(|z| z.norm() > 0.0).then(|| (g.wavevector(i), c))
        })
        .collect()
}

/// `(a·∇)w` by direct convolution `Σ_{j+l=k} Σ_i â_i(j) (i l_i) ŵ(l)`,
/// truncated to the retained box. Exact for dealiased inputs.
pub fn convolve_transport(a: &SpectralField, w: &SpectralField) -> SpectralField {
    let g = a.grid().clone();
    assert!(a.is_dealiased() && w.is_dealiased(), "oracle needs dealiased inputs");
    let cap = g.dealias_cutoff() as i64;
    let dim = g.dim();
    let (sa, sw) = (support(a), support(w));
    let mut out = vec![vec![Complex64::new(0.0, 0.0); g.len()]; w.components()];
    for (j, aj) in &sa {
        for (l, wl) in &sw {
            let k = [j[0] + l[0], j[1] + l[1], j[2] + l[2]];
            if k.iter().any(|c| c.abs() > cap) {
                continue;
            }
            let idx = g.index_of(&k[..dim]).expect("retained");
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..dim {
                dot += aj[i] * Complex64::new(0.0, l[i] as f64);
            }
            for (c, wc) in wl.iter().enumerate() {
                out[c][idx] += dot * wc;
            }
        }
    }
    SpectralField::from_coefficients(&g, out).unwrap()
}

/// `φ_q(|k|)` straight from the cutoff: `χ` for `q = −1`, `φ(2^{−q}|k|)` else.
pub fn shell_symbol(cutoff: &DyadicCutoff, q: i32, kmag: f64) -> f64 {
    if q < 0 {
        cutoff.chi(kmag)
    } else {
        cutoff.phi(kmag / 2f64.powi(q))
    }
}

pub fn shell(f: &SpectralField, cutoff: &DyadicCutoff, q: i32) -> SpectralField {
    let g = f.grid().clone();
    f.apply_symbol(|i| shell_symbol(cutoff, q, g.kmag(i)))
}

/// `Σ_{q ≤ cap} Δ_q f` as one multiplier.
pub fn low_pass(f: &SpectralField, cutoff: &DyadicCutoff, cap: i32) -> SpectralField {
    let g = f.grid().clone();
    f.apply_symbol(|i| (-1..=cap).map(|q| shell_symbol(cutoff, q, g.kmag(i))).sum())
}

/// Highest shell whose symbol is nonzero somewhere on the grid.
pub fn top_shell(g: &Grid) -> i32 {
    let kmax = g.max_wavenumber();
    let mut q = 0;
    while 0.75 * 2f64.powi(q + 1) < kmax {
        q += 1;
    }
    q
}

/// `½ Σ_q λ_q^{2σ} ‖Δ_q f‖²`.
pub fn block_energy(f: &SpectralField, cutoff: &DyadicCutoff, sigma: f64) -> f64 {
    let g = f.grid().clone();
    let top = top_shell(&g);
    0.5 * (-1..=top)
        .map(|q| 2f64.powf(2.0 * sigma * q as f64) * shell(f, cutoff, q).norm_sqr())
        .sum::<f64>()
}

pub fn relative(err: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}
