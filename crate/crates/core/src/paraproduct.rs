//! Bony paraproduct pieces of a transport term `(a·∇)w` and the commutator
//! `[Δ_q, a_{≤p−2}·∇] w_p`.
//!
//! All products are dealiased pseudospectral products, so for inputs on the
//! retained (2/3-rule) lattice every identity below is exact up to roundoff.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{DyadicCutoff, LPBlocks, LittlewoodPaley};
use crate::spectral::{gradient_linf, lp_norm, transport, Exponent, SolenoidalField, SpectralField};

/// Numerators below this count as zero when the denominator vanishes.
pub const ZERO_RATIO_TOL: f64 = 1e-13;

/// The three Bony parts of `Δ_q((u·∇)v)`.
#[derive(Clone, Debug)]
pub struct BonySplit {
    pub q: i32,
    /// `Σ_{|q−p|≤2} Δ_q(u_{≤p−2}·∇v_p)`
    pub low_high: SpectralField,
    /// `Σ_{|q−p|≤2} Δ_q(u_p·∇v_{≤p−2})`
    pub high_low: SpectralField,
    /// `Σ_{p≥q−2} Δ_q(ũ_p·∇v_p)`
    pub high_high: SpectralField,
}

impl BonySplit {
    pub fn total(&self) -> SpectralField {
        let mut t = self.low_high.clone();
        t += &self.high_low;
        t += &self.high_high;
        t
    }
}

/// Which factor of the resonant term carries the tilde.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resonant {
    /// `ã_p·∇w_p`
    TildeTransporter,
    /// `a_p·∇w̃_p`
    TildeTransported,
}

/// Dyadic pieces of a transporting field `a` and a transported field `w`.
#[derive(Clone, Debug)]
pub struct Paraproduct<'a> {
    lp: &'a LittlewoodPaley,
    a: LPBlocks,
    w: LPBlocks,
}

impl<'a> Paraproduct<'a> {
    pub fn new(lp: &'a LittlewoodPaley, a: &SpectralField, w: &SpectralField) -> Result<Self> {
        a.ensure_vector("transporting field")?;
        lp.grid().ensure_same(w.grid())?;
        Ok(Paraproduct { lp, a: lp.decompose(a)?, w: lp.decompose(w)? })
    }

    pub fn lp(&self) -> &LittlewoodPaley {
        self.lp
    }

    pub fn q_max(&self) -> i32 {
        self.lp.q_max()
    }

    pub fn transporter(&self) -> &LPBlocks {
        &self.a
    }

    pub fn transported(&self) -> &LPBlocks {
        &self.w
    }

    /// `a_{≤p−2}·∇w_p` (not localized).
    pub fn low_high_product(&self, p: i32) -> Result<SpectralField> {
        transport(&self.a.low_pass_or_zero(p - 2), &self.w.block_or_zero(p))
    }

    /// `a_p·∇w_{≤p−2}` (not localized).
    pub fn high_low_product(&self, p: i32) -> Result<SpectralField> {
        transport(&self.a.block_or_zero(p), &self.w.low_pass_or_zero(p - 2))
    }

    /// Resonant product for shell `p` (not localized).
    pub fn high_high_product(&self, p: i32, kind: Resonant) -> Result<SpectralField> {
        match kind {
            Resonant::TildeTransporter => transport(&self.a.tilde_or_zero(p), &self.w.block_or_zero(p)),
            Resonant::TildeTransported => transport(&self.a.block_or_zero(p), &self.w.tilde_or_zero(p)),
        }
    }

    fn check_shell(&self, q: i32) -> Result<()> {
        if q < -1 || q > self.q_max() {
            Err(Error::OutOfRange(format!("shell {q} outside [-1, {}]", self.q_max())))
        } else {
            Ok(())
        }
    }

    pub fn split(&self, q: i32) -> Result<BonySplit> {
        self.check_shell(q)?;
        let zero = SpectralField::zeros(self.lp.grid(), self.w.block(-1)?.components());
        let (mut lh, mut hl, mut hh) = (zero.clone(), zero.clone(), zero);
        for p in (q - 2)..=(q + 2) {
            if p < -1 || p > self.q_max() {
                continue;
            }
            lh += &self.lp.project(&self.low_high_product(p)?, q);
            hl += &self.lp.project(&self.high_low_product(p)?, q);
        }
        for p in (q - 2).max(-1)..=self.q_max() {
            hh += &self.lp.project(&self.high_high_product(p, Resonant::TildeTransporter)?, q);
        }
        Ok(BonySplit { q, low_high: lh, high_low: hl, high_high: hh })
    }

    /// `Δ_q(a_{≤p−2}·∇w_p) − a_{≤p−2}·∇Δ_q w_p`.
    pub fn commutator(&self, q: i32, p: i32) -> Result<SpectralField> {
        let low = self.a.low_pass_or_zero(p - 2);
        let wp = self.w.block_or_zero(p);
        let mut c = self.lp.project(&transport(&low, &wp)?, q);
        c -= &transport(&low, &self.lp.project(&wp, q))?;
        Ok(c)
    }

    /// `‖[Δ_q, a_{≤p−2}·∇]w_p‖_r / (‖∇a_{≤p−2}‖_∞ ‖w_p‖_r)`.
    pub fn commutator_bound_ratio(&self, q: i32, p: i32, r: Exponent) -> Result<f64> {
        check_commutator_exponent(r)?;
        let oversample = if r == Exponent::Finite(2.0) { 1 } else { 2 };
        let num = lp_norm(&self.commutator(q, p)?, r, oversample);
        let den = gradient_linf(&self.a.low_pass_or_zero(p - 2)) * lp_norm(&self.w.block_or_zero(p), r, oversample);
        if den == 0.0 {
            if num <= ZERO_RATIO_TOL {
                Ok(0.0)
            } else {
                Err(Error::DegenerateRatio { numerator: num })
            }
        } else {
            Ok(num / den)
        }
    }
}

fn check_commutator_exponent(r: Exponent) -> Result<()> {
    match r {
        Exponent::Finite(v) if v > 1.0 => Ok(()),
        _ => Err(Error::Parameter(format!(
            "commutator exponent must lie in (1, inf), got {}",
            r.value()
        ))),
    }
}

/// Bony split of `Δ_q((u·∇)v)`.
pub fn bony_split(u: &SolenoidalField, v: &SpectralField, q: i32, cutoff: &DyadicCutoff) -> Result<BonySplit> {
    u.grid().ensure_same(v.grid())?;
    let lp = LittlewoodPaley::new(u.grid(), cutoff);
    Paraproduct::new(&lp, u.as_field(), v)?.split(q)
}

/// `[Δ_q, u_{≤p−2}·∇] v_p`; the low-pass is the zero field for `p < 1`.
pub fn commutator(q: i32, p: i32, u: &SolenoidalField, v: &SpectralField, cutoff: &DyadicCutoff) -> Result<SpectralField> {
    u.grid().ensure_same(v.grid())?;
    let lp = LittlewoodPaley::new(u.grid(), cutoff);
    Paraproduct::new(&lp, u.as_field(), v)?.commutator(q, p)
}

pub fn commutator_bound_ratio(
    q: i32,
    p: i32,
    u: &SolenoidalField,
    v: &SpectralField,
    r: Exponent,
    cutoff: &DyadicCutoff,
) -> Result<f64> {
    check_commutator_exponent(r)?;
    u.grid().ensure_same(v.grid())?;
    let lp = LittlewoodPaley::new(u.grid(), cutoff);
    Paraproduct::new(&lp, u.as_field(), v)?.commutator_bound_ratio(q, p, r)
}

/// Per-shell maxima of the commutator bound ratio over an ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct CommutatorReport {
    pub grid_n: usize,
    pub pairs: usize,
    pub r: f64,
    pub per_shell: Vec<(i32, f64)>,
    pub constant: f64,
}

/// Maximizes the commutator ratio over `pairs` random `(u, v)` and every
/// `(q, p)` with `q` in `shells` and `|q − p| ≤ 2`.
///
/// Blocks `v_p` clipped by the dealiasing box (`p > resolved_shell`) are
/// skipped: they are thin slivers of the annulus, not dyadic blocks.
pub fn commutator_scan(
    grid: &crate::spectral::Grid,
    cutoff: &DyadicCutoff,
    shells: std::ops::RangeInclusive<i32>,
    pairs: usize,
    r: Exponent,
    seed: u64,
) -> Result<CommutatorReport> {
    use crate::lp::random_broadband;
    use crate::spectral::random::rng_from_seed;

    let lp = LittlewoodPaley::new(grid, cutoff);
    let p_top = crate::lp::resolved_shell(grid);
    let mut rng = rng_from_seed(seed);
    let mut best: Vec<(i32, f64)> = shells.clone().map(|q| (q, 0.0)).collect();
    for _ in 0..pairs {
        let u = crate::spectral::leray_project(&random_broadband(grid, grid.dim(), &mut rng))?;
        let v = random_broadband(grid, grid.dim(), &mut rng);
        let pp = Paraproduct::new(&lp, u.as_field(), &v)?;
        for (q, b) in best.iter_mut() {
            for p in (*q - 2)..=(*q + 2) {
                if p > p_top {
                    continue;
                }
                *b = b.max(pp.commutator_bound_ratio(*q, p, r)?);
            }
        }
    }
    let constant = best.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(CommutatorReport { grid_n: grid.n(), pairs, r: r.value(), per_shell: best, constant })
}
