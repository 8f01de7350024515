//! Fractional Stokes flow `u_t + ν(−Δ)^α u + ∇p = f`, `∇·u = 0`.
//!
//! The free evolution is the exact per-mode semigroup `e^{−ν|k|^{2α}t}`;
//! forcing enters through a second-order exponential integrator. The
//! `log_scan` measures `J(ε) = ∫_ε^T ‖∇^α u(t)‖_{H^{s+α}} dt` and fits it
//! against `log(T/ε)`.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::path::Path;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::lambda;
use crate::spectral::random::{random_field, rng_from_seed, Modulus};
use crate::spectral::{leray_project, sobolev_norm_direct, Grid, SolenoidalField, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesConfig {
    pub nu: f64,
    pub alpha: f64,
    pub s: f64,
    pub t_final: f64,
    /// Strictly decreasing delays in `(0, T)`.
    pub eps_list: Vec<f64>,
    pub dt: f64,
}

impl StokesConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if !(self.nu > 0.0) {
            return bad(format!("viscosity must be positive, got {}", self.nu));
        }
        if !(self.alpha > 0.0) {
            return bad(format!("fractional order must be positive, got {}", self.alpha));
        }
        if !(self.t_final > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.t_final));
        }
        if self.eps_list.is_empty() {
            return bad("empty delay list".into());
        }
        for w in self.eps_list.windows(2) {
            if !(w[1] < w[0]) {
                return bad(format!("delays must decrease strictly: {} then {}", w[0], w[1]));
            }
        }
        for &e in &self.eps_list {
            if !(e > 0.0 && e < self.t_final) {
                return bad(format!("delay {e} outside (0, T = {})", self.t_final));
            }
        }
        let eps_min = *self.eps_list.last().unwrap();
        if !(self.dt > 0.0 && self.dt <= eps_min / 10.0) {
            return bad(format!("time step {} must lie in (0, min(eps)/10 = {}]", self.dt, eps_min / 10.0));
        }
        Ok(())
    }

    fn rate(&self, k2: f64) -> f64 {
        self.nu * k2.powf(self.alpha)
    }
}

/// Rough initial data with `|û_k| = |k|^{−σ}`, `σ = s + n/2 + margin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughDataSpec {
    pub s: f64,
    pub margin: f64,
    pub seed: u64,
}

impl RoughDataSpec {
    pub fn new(s: f64, seed: u64) -> Self {
        RoughDataSpec { s, margin: 0.01, seed }
    }

    pub fn slope(&self, dim: usize) -> f64 {
        self.s + dim as f64 / 2.0 + self.margin
    }
}

/// Random-phase field with `|û_k| = |k|^{−σ}` on the retained modes,
/// Leray-projected and scaled to unit inhomogeneous `H^s` norm.
pub fn rough_data(spec: &RoughDataSpec, grid: &Grid) -> Result<SolenoidalField> {
    let sigma = spec.slope(grid.dim());
    if !(sigma > grid.dim() as f64 / 2.0) {
        return Err(Error::Parameter(format!(
            "spectral slope {sigma} must exceed n/2 = {}",
            grid.dim() as f64 / 2.0
        )));
    }
    let mut rng = rng_from_seed(spec.seed);
    let v = random_field(grid, grid.dim(), &mut rng, Modulus::Exact, |k| k.powf(-sigma));
    let u = leray_project(&v)?;
    let norm = sobolev_norm_direct(&u, spec.s, false);
    Ok(u.scaled(1.0 / norm))
}

/// `û_k(t) = e^{−ν|k|^{2α}t} û_k(0)`.
pub fn evolve_free(u0: &SolenoidalField, t: f64, cfg: &StokesConfig) -> Result<SolenoidalField> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("evolution time must be nonnegative, got {t}")));
    }
    let grid = u0.grid().clone();
    Ok(u0.apply_symbol(|idx| (-cfg.rate(grid.k2(idx)) * t).exp()))
}

/// Forcing sampled at `t_j = j·dt`, `j = 0 … len−1`.
#[derive(Clone, Debug)]
pub struct ForcingSamples {
    pub dt: f64,
    pub samples: Vec<SpectralField>,
}

/// `φ₁(z) = (1 − e^{−z})/z` and `φ₂(z) = (z − 1 + e^{−z})/z²`, accurate for small `z`.
pub(crate) fn etd_weights(z: f64) -> (f64, f64) {
    if z < 0.1 {
        // Σ_j (−z)^j/(j+1)! and Σ_j (−z)^j/(j+2)!
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut term = 1.0; // (−z)^j / j!
        for j in 0..16 {
            p1 += term / (j + 1) as f64;
            p2 += term / ((j + 1) * (j + 2)) as f64;
            term *= -z / (j + 1) as f64;
        }
        (p1, p2)
    } else {
        let e = (-z).exp();
        ((1.0 - e) / z, (z - 1.0 + e) / (z * z))
    }
}

/// Duhamel evolution with the forcing linearly interpolated on each step;
/// returns the state at every sample time (first entry is `u0`).
pub fn evolve_forced(u0: &SolenoidalField, f: &ForcingSamples, cfg: &StokesConfig) -> Result<Vec<SolenoidalField>> {
    if f.samples.len() < 2 {
        return Err(Error::Sampling(format!("need at least two forcing samples, got {}", f.samples.len())));
    }
    if !(f.dt > 0.0) || ((f.dt - cfg.dt).abs() > 1e-12 * cfg.dt) {
        return Err(Error::Sampling(format!("forcing step {} differs from configured step {}", f.dt, cfg.dt)));
    }
    let grid = u0.grid().clone();
    let forcing: Vec<SpectralField> = f
        .samples
        .iter()
        .map(|s| {
            grid.ensure_same(s.grid())?;
            Ok(leray_project(s)?.into_field())
        })
        .collect::<Result<_>>()?;
    let h = f.dt;
    let coeffs: Vec<(f64, f64, f64)> = (0..grid.len())
        .map(|idx| {
            let z = cfg.rate(grid.k2(idx)) * h;
            let (p1, p2) = etd_weights(z);
            ((-z).exp(), h * p1, h * p2)
        })
        .collect();
    let mut traj = Vec::with_capacity(forcing.len());
    traj.push(u0.clone());
    let mut u = u0.as_field().clone();
    for w in forcing.windows(2) {
        let (f0, f1) = (&w[0], &w[1]);
        for c in 0..u.components() {
            let (a, b) = (f0.component(c), f1.component(c));
            for (idx, z) in u.component_mut(c).iter_mut().enumerate() {
                let (e, w1, w2) = coeffs[idx];
                *z = *z * e + a[idx] * w1 + (b[idx] - a[idx]) * w2;
            }
        }
        traj.push(SolenoidalField::new_unchecked(u.clone()));
    }
    Ok(traj)
}

/// Energy of `u0` aggregated by `|k|²`, enough to evaluate any radial norm
/// of the free evolution.
#[derive(Clone, Debug)]
pub struct RadialSpectrum {
    pub k2: Vec<f64>,
    pub energy: Vec<f64>,
}

impl RadialSpectrum {
    pub fn of(u: &SpectralField) -> Self {
        let grid = u.grid();
        let mut bins: BTreeMap<u64, f64> = BTreeMap::new();
        for idx in 0..grid.len() {
            let e: f64 = (0..u.components()).map(|c| u.component(c)[idx].norm_sqr()).sum();
            if e > 0.0 {
                *bins.entry(grid.k2(idx) as u64).or_insert(0.0) += e;
            }
        }
        RadialSpectrum { k2: bins.keys().map(|&k| k as f64).collect(), energy: bins.into_values().collect() }
    }
}

/// `t ↦ ‖∇^α u(t)‖_{H^{s+α}}` for the free evolution, i.e.
/// `(Σ_k (1+|k|²)^{s+α}|k|^{2α} e^{−2ν|k|^{2α}t}|û_k|²)^{1/2}`.
struct Integrand {
    rate: Vec<f64>,
    weight: Vec<f64>,
}

impl Integrand {
    fn new(spec: &RadialSpectrum, cfg: &StokesConfig) -> Self {
        let mut rate = Vec::new();
        let mut weight = Vec::new();
        for (&k2, &e) in spec.k2.iter().zip(&spec.energy) {
            if k2 == 0.0 {
                continue;
            }
            rate.push(2.0 * cfg.rate(k2));
            weight.push((1.0 + k2).powf(cfg.s + cfg.alpha) * k2.powf(cfg.alpha) * e);
        }
        Integrand { rate, weight }
    }

    fn eval(&self, t: f64) -> f64 {
        self.rate
            .iter()
            .zip(&self.weight)
            .map(|(r, w)| w * (-r * t).exp())
            .sum::<f64>()
            .sqrt()
    }
}

const QUAD_RTOL: f64 = 1e-11;
const QUAD_MAX_DEPTH: u32 = 40;

/// Adaptive Gauss-Legendre in `τ = ln t` on `[lo, hi]`; initial panels
/// are geometric with ratio 2.
fn integrate_log<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64) -> Result<f64> {
    let coarse = GaussLegendre::new(NonZeroUsize::new(10).unwrap());
    let fine = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let h = |tau: f64| {
        let t = tau.exp();
        g(t) * t
    };
    let (a, b) = (lo.ln(), hi.ln());
    let panels = ((b - a) / std::f64::consts::LN_2).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mut stack = vec![(a + i as f64 * width, a + (i + 1) as f64 * width, 0u32)];
        while let Some((x0, x1, depth)) = stack.pop() {
            let i1 = coarse.integrate(x0, x1, h);
            let i2 = fine.integrate(x0, x1, h);
            let err = (i2 - i1).abs();
            if err <= QUAD_RTOL * i2.abs() || err < 1e-300 {
                total += i2;
            } else if depth >= QUAD_MAX_DEPTH {
                return Err(Error::Quadrature { lo: x0.exp(), hi: x1.exp(), error: err });
            } else {
                let mid = 0.5 * (x0 + x1);
                stack.push((mid, x1, depth + 1));
                stack.push((x0, mid, depth + 1));
            }
        }
    }
    Ok(total)
}

/// `J(ε)` for one delay.
pub fn j_integral(u0: &SolenoidalField, eps: f64, cfg: &StokesConfig) -> Result<f64> {
    let g = Integrand::new(&RadialSpectrum::of(u0.as_field()), cfg);
    integrate_log(&|t| g.eval(t), eps, cfg.t_final)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub eps: f64,
    pub log_ratio: f64,
    pub j: f64,
    pub fit: f64,
}

/// `J(ε) ≈ a + b·log(T/ε)` over the configured delays.
#[derive(Clone, Debug, Serialize)]
pub struct LogScanReport {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    pub nu: f64,
    pub alpha: f64,
    pub s: f64,
    pub t_final: f64,
    pub u0_hs: f64,
    pub rows: Vec<ScanRow>,
}

impl LogScanReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["eps", "log_T_over_eps", "J", "fit"])?;
        for r in &self.rows {
            w.write_record([r.eps, r.log_ratio, r.j, r.fit].map(|x| format!("{x:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn j_at(&self, eps: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.eps == eps).map(|r| r.j)
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, R²)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (a, b, r2)
}

/// Computes `J(ε)` for every configured delay (free evolution) and fits the log law.
pub fn log_scan(u0: &SolenoidalField, cfg: &StokesConfig) -> Result<LogScanReport> {
    cfg.validate()?;
    let g = Integrand::new(&RadialSpectrum::of(u0.as_field()), cfg);
    let eval = |t: f64| g.eval(t);
    // accumulate from T downward so each segment is integrated once
    let mut js = Vec::with_capacity(cfg.eps_list.len());
    let mut upper = cfg.t_final;
    let mut acc = 0.0;
    for &eps in &cfg.eps_list {
        acc += integrate_log(&eval, eps, upper)?;
        upper = eps;
        js.push(acc);
    }
    let xs: Vec<f64> = cfg.eps_list.iter().map(|e| (cfg.t_final / e).ln()).collect();
    let (a, b, r2) = fit_line(&xs, &js);
    let rows = cfg
        .eps_list
        .iter()
        .zip(&xs)
        .zip(&js)
        .map(|((&eps, &x), &j)| ScanRow { eps, log_ratio: x, j, fit: a + b * x })
        .collect();
    Ok(LogScanReport {
        a,
        b,
        r_squared: r2,
        nu: cfg.nu,
        alpha: cfg.alpha,
        s: cfg.s,
        t_final: cfg.t_final,
        u0_hs: sobolev_norm_direct(u0, cfg.s, false),
        rows,
    })
}

/// `log_scan` on freshly generated rough data.
pub fn log_scan_rough(spec: &RoughDataSpec, grid: &Grid, cfg: &StokesConfig) -> Result<LogScanReport> {
    log_scan(&rough_data(spec, grid)?, cfg)
}

/// Smooth data: Gaussian envelope `e^{−|k|²}` on `|k| < 16` (shells ≤ 3),
/// random phases, unit `H^s` norm. The energy sits at `|k| ≲ 2`, whose
/// dissipation time exceeds the delays probed by the scan.
pub fn smooth_data(grid: &Grid, s: f64, seed: u64) -> Result<SolenoidalField> {
    let mut rng = rng_from_seed(seed);
    let v = random_field(grid, grid.dim(), &mut rng, Modulus::Exact, |k| {
        if k < lambda(4) {
            (-k * k).exp()
        } else {
            0.0
        }
    });
    let u = leray_project(&v)?;
    let norm = sobolev_norm_direct(&u, s, false);
    Ok(u.scaled(1.0 / norm))
}

#[derive(Clone, Debug, Serialize)]
pub struct HeatRow {
    pub t: f64,
    pub series: f64,
    pub ratio: f64,
}

/// `Σ_{q≥−1} λ_q^α e^{−νλ_q^{2α}t/4}` against `ν^{−1/2}t^{−1/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct HeatReport {
    pub nu: f64,
    pub alpha: f64,
    pub rows: Vec<HeatRow>,
    pub sup_ratio: f64,
}

/// Series summed until its terms are past the peak and below `1e−16`.
pub fn heat_series(nu: f64, alpha: f64, t: f64) -> f64 {
    let mut sum = 0.0;
    let mut q = -1;
    loop {
        let lam2a = lambda(q).powf(2.0 * alpha);
        let term = lambda(q).powf(alpha) * (-nu * lam2a * t / 4.0).exp();
        sum += term;
        if term < 1e-16 && nu * lam2a * t > 2.0 {
            return sum;
        }
        q += 1;
    }
}

pub fn heat_sum_check(nu: f64, alpha: f64, t_list: &[f64]) -> Result<HeatReport> {
    if !(nu > 0.0 && alpha > 0.0) {
        return Err(Error::Parameter(format!("need nu > 0 and alpha > 0, got {nu}, {alpha}")));
    }
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        if !(t > 0.0) {
            return Err(Error::Parameter(format!("heat-sum time must be positive, got {t}")));
        }
        let series = heat_series(nu, alpha, t);
        rows.push(HeatRow { t, series, ratio: series * (nu * t).sqrt() });
    }
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(HeatReport { nu, alpha, rows, sup_ratio })
}

/// `n` log-spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(nu: f64) -> StokesConfig {
        StokesConfig { nu, alpha: 1.0, s: 1.2, t_final: 1.0, eps_list: vec![0.1, 0.01, 0.001, 0.0001], dt: 1e-5 }
    }

    fn shear(grid: &Grid, amp: f64) -> SolenoidalField {
        // (amp·cos x₂, 0): modes (0, ±1), divergence-free
        SolenoidalField::new(SpectralField::from_real_fn(grid, 2, |x, out| {
            out[0] = amp * x[1].cos();
            out[1] = 0.0;
        }))
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(cfg(1.0).validate().is_ok());
        let mut c = cfg(1.0);
        c.eps_list = vec![0.01, 0.1];
        assert!(c.validate().is_err());
        let mut c = cfg(1.0);
        c.dt = 1e-4;
        assert!(c.validate().is_err());
        assert!(cfg(0.0).validate().is_err());
    }

    #[test]
    fn free_evolution_examples() {
        let g = Grid::new(2, 16).unwrap();
        let u = shear(&g, 1.0);
        let c = cfg(1.0);
        let same = evolve_free(&u, 0.0, &c).unwrap();
        assert_eq!((same.as_field() - u.as_field()).l2_norm(), 0.0);
        let later = evolve_free(&u, 1.0, &c).unwrap();
        let ratio = later.coeff(0, &[0, 1]).re / u.coeff(0, &[0, 1]).re;
        assert!((ratio - (-1f64).exp()).abs() < 1e-15);
        assert!(evolve_free(&u, -1.0, &c).is_err());
    }

    #[test]
    fn semigroup_composes() {
        let g = Grid::new(2, 32).unwrap();
        let u = rough_data(&RoughDataSpec::new(1.2, 3), &g).unwrap();
        let c = cfg(0.7);
        let once = evolve_free(&u, 0.3, &c).unwrap();
        let twice = evolve_free(&evolve_free(&u, 0.1, &c).unwrap(), 0.2, &c).unwrap();
        assert!((once.as_field() - twice.as_field()).l2_norm() <= 1e-15 * once.l2_norm());
    }

    #[test]
    fn etd_weights_are_continuous() {
        for z in [0.0999999, 0.1] {
            let (a, b) = etd_weights(z);
            let e = (-z).exp();
            assert!((a - (1.0 - e) / z).abs() < 1e-14);
            assert!((b - (z - 1.0 + e) / (z * z)).abs() < 1e-12);
        }
        assert_eq!(etd_weights(0.0), (1.0, 0.5));
    }

    #[test]
    fn zero_forcing_matches_free_flow() {
        let g = Grid::new(2, 16).unwrap();
        let u = rough_data(&RoughDataSpec::new(1.0, 1), &g).unwrap();
        let c = StokesConfig { dt: 0.01, eps_list: vec![0.5], ..cfg(1.0) };
        let f = ForcingSamples { dt: 0.01, samples: vec![SpectralField::zeros(&g, 2); 11] };
        let traj = evolve_forced(&u, &f, &c).unwrap();
        let free = evolve_free(&u, 0.1, &c).unwrap();
        let last = traj.last().unwrap();
        assert!((last.as_field() - free.as_field()).l2_norm() <= 1e-14 * free.l2_norm());
        let bad = ForcingSamples { dt: 0.02, samples: f.samples.clone() };
        assert!(matches!(evolve_forced(&u, &bad, &c), Err(Error::Sampling(_))));
    }

    #[test]
    fn single_mode_j_closed_form() {
        let g = Grid::new(2, 16).unwrap();
        let u = shear(&g, 1.0);
        let c = cfg(1.0);
        let k2: f64 = 1.0;
        let rate = c.nu * k2.powf(c.alpha);
        // two modes (0, ±1) of modulus 1/2 each
        let amp = (2.0 * 0.25f64).sqrt() * ((1.0 + k2).powf(c.s + c.alpha) * k2.powf(c.alpha)).sqrt();
        for &eps in &c.eps_list {
            let exact = amp * ((-rate * eps).exp() - (-rate * c.t_final).exp()) / rate;
            let j = j_integral(&u, eps, &c).unwrap();
            assert!((j - exact).abs() <= 1e-8 * exact, "eps {eps}: {j} vs {exact}");
        }
    }

    #[test]
    fn heat_series_examples() {
        // deep in the decay regime only the q = −1 term survives
        let v = heat_series(1.0, 1.0, 400.0);
        let lead = 0.5 * (-0.25f64 * 0.25 * 400.0).exp();
        assert!((v - lead).abs() <= 1e-12 * lead);
        assert!(heat_sum_check(1.0, 1.0, &[0.0]).is_err());
        let r = heat_sum_check(1.0, 1.0, &[1e-3, 4e-3]).unwrap();
        let f = r.rows[1].ratio / r.rows[0].ratio;
        assert!(f > 0.5 && f < 2.0);
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (a, b, r2) = fit_line(&x, &y);
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
