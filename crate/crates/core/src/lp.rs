//! Littlewood-Paley decomposition on the integer frequency lattice.
//!
//! The low-frequency cutoff `χ` is radial, equal to one on `|ξ| ≤ 3/4` and
//! to zero on `|ξ| ≥ 1`; `φ(ξ) = χ(ξ/2) − χ(ξ)`. Block `q ≥ 0` is the
//! Fourier multiplier `φ(2^{-q}k)`, block `−1` is `χ(k)`, and `λ_q = 2^q`.
//! Because the plateaus are exact, blocks whose indices differ by two or
//! more have disjoint lattice support.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, RngExt};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::random::{random_field, rng_from_seed, Modulus};
use crate::spectral::{lp_norm, sobolev_norm_direct, Exponent, Grid, SpectralField};

/// Inner edge of the transition band of `χ`.
pub const PLATEAU: f64 = 0.75;
/// Outer edge of the transition band of `χ`.
pub const SUPPORT: f64 = 1.0;

/// `λ_q = 2^q` (so `λ_{-1} = 1/2`).
#[inline]
pub fn lambda(q: i32) -> f64 {
    2f64.powi(q)
}

/// Smooth monotone transition `S: [0,1] → [0,1]`, `S(0) = 0`, `S(1) = 1`,
/// used as `χ(ξ) = 1 − S((|ξ| − 3/4)/(1/4))` inside the band.
#[derive(Clone)]
pub enum TransitionProfile {
    /// `B(t)/(B(t)+B(1−t))` with `B(t) = e^{−1/t}`: flat to all orders at both ends.
    ExpBump,
    /// User-supplied transition, validated at construction.
    Custom { name: String, transition: fn(f64) -> f64 },
}

impl TransitionProfile {
    pub fn name(&self) -> &str {
        match self {
            TransitionProfile::ExpBump => "exp-bump",
            TransitionProfile::Custom { name, .. } => name,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            TransitionProfile::ExpBump => {
                if t <= 0.0 {
                    0.0
                } else if t >= 1.0 {
                    1.0
                } else {
                    let a = (-1.0 / t).exp();
                    let b = (-1.0 / (1.0 - t)).exp();
                    a / (a + b)
                }
            }
            TransitionProfile::Custom { transition, .. } => transition(t.clamp(0.0, 1.0)),
        }
    }
}

impl fmt::Debug for TransitionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The pair `(χ, φ)` generating the dyadic partition of unity.
#[derive(Clone, Debug)]
pub struct DyadicCutoff {
    profile: TransitionProfile,
}

impl Default for DyadicCutoff {
    fn default() -> Self {
        DyadicCutoff { profile: TransitionProfile::ExpBump }
    }
}

impl DyadicCutoff {
    /// Validates plateau, support, range and monotonicity of the profile.
    pub fn new(profile: TransitionProfile) -> Result<Self> {
        const SAMPLES: usize = 2000;
        let start = profile.eval(0.0);
        let end = profile.eval(1.0);
        if start.abs() > 1e-15 || (end - 1.0).abs() > 1e-15 {
            return Err(Error::Cutoff(format!(
                "{}: transition must run from 0 to 1, got S(0) = {start}, S(1) = {end}",
                profile.name()
            )));
        }
        let mut prev = start;
        for i in 1..=SAMPLES {
            let t = i as f64 / SAMPLES as f64;
            let v = profile.eval(t);
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::Cutoff(format!("{}: S({t}) = {v} leaves [0, 1]", profile.name())));
            }
            if v < prev {
                return Err(Error::Cutoff(format!("{}: transition decreases near t = {t}", profile.name())));
            }
            prev = v;
        }
        Ok(DyadicCutoff { profile })
    }

    pub fn profile(&self) -> &TransitionProfile {
        &self.profile
    }

    /// `χ(ξ)` for `|ξ| = r`.
    pub fn chi(&self, r: f64) -> f64 {
        if r <= PLATEAU {
            1.0
        } else if r >= SUPPORT {
            0.0
        } else {
            1.0 - self.profile.eval((r - PLATEAU) / (SUPPORT - PLATEAU))
        }
    }

    /// `φ(ξ) = χ(ξ/2) − χ(ξ)`.
    pub fn phi(&self, r: f64) -> f64 {
        self.chi(0.5 * r) - self.chi(r)
    }

    /// Multiplier of block `q` at `|k| = r`.
    pub fn shell_weight(&self, q: i32, r: f64) -> f64 {
        if q < 0 {
            self.chi(r)
        } else {
            self.phi(r / lambda(q))
        }
    }
}

/// Index of the last nonempty shell for a grid: the smallest `Q` with
/// `χ(2^{-(Q+1)} k) = 1` on every stored lattice vector.
pub fn max_shell(grid: &Grid) -> i32 {
    let kmax = grid.max_wavenumber();
    let mut q = -1;
    while PLATEAU * lambda(q + 1) < kmax {
        q += 1;
    }
    q
}

/// Largest shell whose whole annulus `|k| < 2^{q+1}` lies inside the
/// retained (2/3-rule) box; higher shells are clipped by dealiasing.
pub fn resolved_shell(grid: &Grid) -> i32 {
    let cut = grid.dealias_cutoff() as f64;
    let mut q = -1;
    while lambda(q + 2) <= cut + 1.0 {
        q += 1;
    }
    q
}

/// Sparse multiplier tables of every block for one grid and cutoff.
#[derive(Clone, Debug)]
pub struct LittlewoodPaley {
    grid: Grid,
    cutoff: DyadicCutoff,
    q_max: i32,
    shells: Vec<Vec<(usize, f64)>>,
}

impl LittlewoodPaley {
    pub fn new(grid: &Grid, cutoff: &DyadicCutoff) -> Self {
        let q_max = max_shell(grid);
        let mut shells = vec![Vec::new(); (q_max + 2) as usize];
        for idx in 0..grid.len() {
            let r = grid.kmag(idx);
            for q in -1..=q_max {
                let w = cutoff.shell_weight(q, r);
                if w != 0.0 {
                    shells[(q + 1) as usize].push((idx, w));
                }
            }
        }
        LittlewoodPaley { grid: grid.clone(), cutoff: cutoff.clone(), q_max, shells }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cutoff(&self) -> &DyadicCutoff {
        &self.cutoff
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    /// Nonzero `(flat index, φ_q(k))` pairs of block `q`; empty outside `[−1, Q_max]`.
    pub fn shell(&self, q: i32) -> &[(usize, f64)] {
        if q < -1 || q > self.q_max {
            &[]
        } else {
            &self.shells[(q + 1) as usize]
        }
    }

    /// `Δ_q u`; identically zero for `q` outside `[−1, Q_max]`.
    pub fn project(&self, u: &SpectralField, q: i32) -> SpectralField {
        let mut out = SpectralField::zeros(u.grid(), u.components());
        for c in 0..u.components() {
            let src = u.component(c);
            let dst = out.component_mut(c);
            for &(idx, w) in self.shell(q) {
                dst[idx] = src[idx] * w;
            }
        }
        out
    }

    pub fn decompose(&self, u: &SpectralField) -> Result<LPBlocks> {
        self.grid.ensure_same(u.grid())?;
        let blocks = (-1..=self.q_max).map(|q| self.project(u, q)).collect();
        Ok(LPBlocks { q_max: self.q_max, blocks })
    }

    /// Per-mode weight `Σ_q g(q) φ_q(k)^power`.
    pub fn mode_weights<G: Fn(i32) -> f64>(&self, g: G, power: i32) -> Vec<f64> {
        let mut w = vec![0.0; self.grid.len()];
        for q in -1..=self.q_max {
            let gq = g(q);
            for &(idx, phi) in self.shell(q) {
                w[idx] += gq * phi.powi(power);
            }
        }
        w
    }
}

/// Builds the blocks `u_q`, `q = −1 … Q_max`.
pub fn decompose(u: &SpectralField, cutoff: &DyadicCutoff) -> Result<LPBlocks> {
    LittlewoodPaley::new(u.grid(), cutoff).decompose(u)
}

/// Ordered dyadic pieces of one field.
#[derive(Clone, Debug)]
pub struct LPBlocks {
    q_max: i32,
    blocks: Vec<SpectralField>,
}

impl LPBlocks {
    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    fn check(&self, q: i32) -> Result<()> {
        if q < -1 || q > self.q_max {
            Err(Error::OutOfRange(format!("shell {q} outside [-1, {}]", self.q_max)))
        } else {
            Ok(())
        }
    }

    fn zero(&self) -> SpectralField {
        let b = &self.blocks[0];
        SpectralField::zeros(b.grid(), b.components())
    }

    pub fn block(&self, q: i32) -> Result<&SpectralField> {
        self.check(q)?;
        Ok(&self.blocks[(q + 1) as usize])
    }

    /// Block `q`, or the zero field when `q` is outside the tower.
    pub fn block_or_zero(&self, q: i32) -> SpectralField {
        self.block(q).cloned().unwrap_or_else(|_| self.zero())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &SpectralField)> {
        self.blocks.iter().enumerate().map(|(i, b)| (i as i32 - 1, b))
    }

    /// `u_{≤Q} = Σ_{q≤Q} u_q`.
    pub fn low_pass(&self, q_cap: i32) -> Result<SpectralField> {
        self.check(q_cap)?;
        Ok(self.low_pass_or_zero(q_cap))
    }

    /// Low-pass with the empty-sum convention: zero for `Q < −1`, the full
    /// sum for `Q ≥ Q_max`.
    pub fn low_pass_or_zero(&self, q_cap: i32) -> SpectralField {
        let mut acc = self.zero();
        for (q, b) in self.iter() {
            if q <= q_cap {
                acc += b;
            }
        }
        acc
    }

    /// `u_{(Q, N]} = Σ_{Q<p≤N} u_p`.
    pub fn band(&self, lo: i32, hi: i32) -> Result<SpectralField> {
        self.check(lo)?;
        self.check(hi)?;
        if lo > hi {
            return Err(Error::OutOfRange(format!("band ({lo}, {hi}] has lo > hi")));
        }
        let mut acc = self.zero();
        for (q, b) in self.iter() {
            if q > lo && q <= hi {
                acc += b;
            }
        }
        Ok(acc)
    }

    /// `ũ_q = Σ_{|p−q|≤1} u_p`.
    pub fn tilde_block(&self, q: i32) -> Result<SpectralField> {
        self.check(q)?;
        Ok(self.tilde_or_zero(q))
    }

    pub(crate) fn tilde_or_zero(&self, q: i32) -> SpectralField {
        let mut acc = self.zero();
        for (p, b) in self.iter() {
            if (p - q).abs() <= 1 {
                acc += b;
            }
        }
        acc
    }

    pub fn reconstruct(&self) -> SpectralField {
        self.low_pass_or_zero(self.q_max)
    }

    /// `(Σ_q λ_q^{2s} ‖u_q‖₂²)^{1/2}`.
    pub fn block_sobolev_norm(&self, s: f64) -> f64 {
        self.iter()
            .map(|(q, b)| lambda(q).powf(2.0 * s) * b.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `sup_q λ_q^s ‖u_q‖_p`.
    pub fn besov_norm(&self, s: f64, p: Exponent) -> f64 {
        let oversample = match p {
            Exponent::Infinity => 1,
            Exponent::Finite(v) if v == 2.0 => 1,
            Exponent::Finite(_) => 2,
        };
        self.iter()
            .map(|(q, b)| lambda(q).powf(s) * lp_norm(b, p, oversample))
            .fold(0.0, f64::max)
    }
}

/// `block_sobolev_norm` without materializing the blocks.
pub fn block_sobolev_norm(lp: &LittlewoodPaley, u: &SpectralField, s: f64) -> f64 {
    let mut acc = 0.0;
    for q in -1..=lp.q_max() {
        let lam = lambda(q).powf(2.0 * s);
        let mut shell = 0.0;
        for &(idx, w) in lp.shell(q) {
            for c in 0..u.components() {
                shell += w * w * u.component(c)[idx].norm_sqr();
            }
        }
        acc += lam * shell;
    }
    acc.sqrt()
}

/// `‖u_q‖_r / (λ_q^{n(1/s − 1/r)} ‖u_q‖_s)` for a block of shell `q`.
///
/// Norms other than `L²` are evaluated on the 2× oversampled grid.
pub fn bernstein_ratio(block: &SpectralField, q: i32, r: Exponent, s: Exponent) -> Result<f64> {
    if s.value() < 1.0 || r.value() < s.value() {
        return Err(Error::Parameter(format!(
            "Bernstein exponents need r >= s >= 1, got r = {}, s = {}",
            r.value(),
            s.value()
        )));
    }
    let num = lp_norm(block, r, 2);
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = if r == s { num } else { lp_norm(block, s, 2) };
    let n = block.grid().dim() as f64;
    Ok(num / (lambda(q).powf(n * (s.reciprocal() - r.reciprocal())) * den))
}

/// Measured interval of `block / direct` homogeneous Sobolev norms.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub grid_n: usize,
    pub samples: usize,
    pub s_values: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub per_s: Vec<(f64, f64, f64)>,
}

/// Zero-mean random field with spectral slope drawn from `[0, 3]`.
pub fn random_broadband<R: Rng + ?Sized>(grid: &Grid, components: usize, rng: &mut R) -> SpectralField {
    let slope = 3.0 * rng.random::<f64>();
    random_field(grid, components, rng, Modulus::Uniform, |k| k.powf(-slope))
}

/// Scans `block_sobolev_norm / sobolev_norm_direct` over an ensemble.
pub fn norm_equivalence_scan(
    grid: &Grid,
    cutoff: &DyadicCutoff,
    samples: usize,
    s_values: &[f64],
    seed: u64,
) -> EquivalenceReport {
    let lp = LittlewoodPaley::new(grid, cutoff);
    let mut rng = rng_from_seed(seed);
    let fields: Vec<SpectralField> = (0..samples).map(|_| random_broadband(grid, 1, &mut rng)).collect();
    let mut per_s = Vec::new();
    for &s in s_values {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for u in &fields {
            let ratio = block_sobolev_norm(&lp, u, s) / sobolev_norm_direct(u, s, true);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        per_s.push((s, lo, hi));
    }
    let c1 = per_s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let c2 = per_s.iter().map(|p| p.2).fold(0.0, f64::max);
    EquivalenceReport { grid_n: grid.n(), samples, s_values: s_values.to_vec(), c1, c2, per_s }
}

/// Per-shell maxima of the Bernstein ratio.
#[derive(Clone, Debug, Serialize)]
pub struct BernsteinReport {
    pub grid_n: usize,
    pub samples_per_shell: usize,
    pub r: f64,
    pub s: f64,
    pub per_shell: Vec<(i32, f64)>,
    pub constant: f64,
}

impl BernsteinReport {
    /// `(max − min)/mean` of the per-shell maxima.
    pub fn shell_spread(&self) -> f64 {
        let vals: Vec<f64> = self.per_shell.iter().map(|p| p.1).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / mean
    }
}

/// Random field supported on shell `q`: even draws are phase-coherent at a
/// random collocation point (the near-extremal case for `r = ∞`), odd draws
/// carry independent phases.
pub fn random_shell_field<R: Rng + ?Sized>(
    lp: &LittlewoodPaley,
    q: i32,
    components: usize,
    coherent: bool,
    rng: &mut R,
) -> SpectralField {
    let grid = lp.grid();
    let mut f = SpectralField::zeros(grid, components);
    let center = grid.point(rng.random_range(0..grid.len()));
    for c in 0..components {
        let dst = f.component_mut(c);
        for &(idx, w) in lp.shell(q) {
            let m = grid.mirror(idx);
            if m < idx {
                continue;
            }
            let k = grid.wavevector(idx);
            let amp = rng.random::<f64>() * w;
            let phase = if coherent {
                -(k[0] as f64 * center[0] + k[1] as f64 * center[1] + k[2] as f64 * center[2])
            } else {
                rng.random::<f64>() * std::f64::consts::TAU
            };
            let z = Complex64::from_polar(amp, phase);
            dst[idx] = z;
            dst[m] = if m == idx { Complex64::new(z.re, 0.0) } else { z.conj() };
        }
    }
    f
}

/// Maximizes `bernstein_ratio` over `samples` random fields per shell.
pub fn bernstein_scan(
    grid: &Grid,
    cutoff: &DyadicCutoff,
    shells: std::ops::RangeInclusive<i32>,
    samples: usize,
    r: Exponent,
    s: Exponent,
    seed: u64,
) -> Result<BernsteinReport> {
    let lp = LittlewoodPaley::new(grid, cutoff);
    let mut per_shell = Vec::new();
    for q in shells {
        let mut rng = rng_from_seed(seed ^ ((q as u64 + 1) << 32));
        let mut best: f64 = 0.0;
        for i in 0..samples {
            let f = random_shell_field(&lp, q, 1, i % 2 == 0, &mut rng);
            best = best.max(bernstein_ratio(&f, q, r, s)?);
        }
        per_shell.push((q, best));
    }
    let constant = per_shell.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(BernsteinReport {
        grid_n: grid.n(),
        samples_per_shell: samples,
        r: r.value(),
        s: s.value(),
        per_shell,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn cutoff_plateaus() {
        let c = DyadicCutoff::default();
        assert_eq!(c.chi(0.5), 1.0);
        assert_eq!(c.chi(0.75), 1.0);
        assert_eq!(c.chi(1.0), 0.0);
        assert_eq!(c.chi(1.25), 0.0);
        let mid = c.chi(0.85);
        assert!(mid > 0.0 && mid < 1.0);
        assert_eq!(c.phi(1.0), 1.0);
    }

    #[test]
    fn partition_tower_at_085() {
        let c = DyadicCutoff::default();
        // χ(ξ) + Σ_{q≥0} φ(2^{-q}ξ), truncated once the terms vanish for good
        let sum: f64 = c.chi(0.85) + (0..60).map(|q| c.phi(0.85 / lambda(q))).sum::<f64>();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_profiles_rejected() {
        fn shifted(t: f64) -> f64 {
            t * t - 0.5
        }
        fn wiggle(t: f64) -> f64 {
            t + 0.5 * (4.0 * std::f64::consts::PI * t).sin()
        }
        fn quintic(t: f64) -> f64 {
            t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
        let bad = TransitionProfile::Custom { name: "shifted".into(), transition: shifted };
        assert!(matches!(DyadicCutoff::new(bad), Err(Error::Cutoff(_))));
        let bad = TransitionProfile::Custom { name: "wiggle".into(), transition: wiggle };
        assert!(DyadicCutoff::new(bad).is_err());
        let ok = TransitionProfile::Custom { name: "quintic".into(), transition: quintic };
        assert!(DyadicCutoff::new(ok).is_ok());
    }

    #[test]
    fn shell_count_matches_lattice() {
        let g = Grid::new(2, 64).unwrap();
        // kmax = 32√2 ≈ 45.3 ≤ 3/4·2^6
        assert_eq!(max_shell(&g), 5);
        let lp = LittlewoodPaley::new(&g, &DyadicCutoff::default());
        assert!(!lp.shell(5).is_empty());
        assert_eq!(resolved_shell(&g), 3);
        assert_eq!(resolved_shell(&Grid::new(2, 128).unwrap()), 4);
    }

    #[test]
    fn single_mode_lands_in_one_block() {
        let g = Grid::new(2, 32).unwrap();
        let u = SpectralField::single_mode(&g, &[4, 0], &[one()]).unwrap();
        let blocks = decompose(&u, &DyadicCutoff::default()).unwrap();
        for (q, b) in blocks.iter() {
            let expect = if q == 2 { 1.0 } else { 0.0 };
            assert_eq!(b.l2_norm(), expect, "shell {q}");
        }
        assert_eq!(blocks.block_sobolev_norm(1.0), 4.0);
        let t = blocks.tilde_block(2).unwrap();
        assert_eq!((&t - &u).l2_norm(), 0.0);
    }

    #[test]
    fn constant_in_low_block() {
        let g = Grid::new(2, 16).unwrap();
        let u = SpectralField::single_mode(&g, &[0, 0], &[one()]).unwrap();
        let blocks = decompose(&u, &DyadicCutoff::default()).unwrap();
        assert_eq!(blocks.block(-1).unwrap().l2_norm(), 1.0);
        assert_eq!(blocks.band(-1, blocks.q_max()).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn split_mode_in_3d() {
        let g = Grid::new(3, 16).unwrap();
        let u = SpectralField::single_mode(&g, &[1, 1, 1], &[one()]).unwrap();
        let cutoff = DyadicCutoff::default();
        let blocks = decompose(&u, &cutoff).unwrap();
        let r = 3f64.sqrt();
        let w0 = blocks.block(0).unwrap().coeff(0, &[1, 1, 1]).re;
        let w1 = blocks.block(1).unwrap().coeff(0, &[1, 1, 1]).re;
        // φ(√3) = χ(√3/2) and φ(√3/2) = 1 − χ(√3/2)
        assert!((w0 - cutoff.chi(r / 2.0)).abs() < 1e-15);
        assert!((w1 - (1.0 - cutoff.chi(r / 2.0))).abs() < 1e-15);
        assert!(w0 > 0.0 && w1 > 0.0);
        assert!((w0 + w1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn index_errors() {
        let g = Grid::new(2, 16).unwrap();
        let blocks = decompose(&SpectralField::zeros(&g, 1), &DyadicCutoff::default()).unwrap();
        assert!(blocks.low_pass(-2).is_err());
        assert!(blocks.low_pass(blocks.q_max() + 1).is_err());
        assert!(blocks.band(2, 1).is_err());
        assert!(blocks.tilde_block(99).is_err());
        assert_eq!(blocks.band(1, 1).unwrap().l2_norm(), 0.0);
        assert_eq!(blocks.block_sobolev_norm(1.0), 0.0);
        assert_eq!(blocks.besov_norm(1.0, Exponent::Infinity), 0.0);
    }

    #[test]
    fn bernstein_examples() {
        let g = Grid::new(2, 32).unwrap();
        let u = SpectralField::single_mode(&g, &[4, 0], &[one()]).unwrap();
        let ratio = bernstein_ratio(&u, 2, Exponent::Infinity, Exponent::Finite(2.0)).unwrap();
        assert!((ratio - 0.25).abs() < 1e-13);
        let same = bernstein_ratio(&u, 2, Exponent::Finite(3.0), Exponent::Finite(3.0)).unwrap();
        assert_eq!(same, 1.0);
        assert!(bernstein_ratio(&u, 2, Exponent::Finite(2.0), Exponent::Finite(4.0)).is_err());
    }
}
