//! Dyadic energy ledger of the MHD system.
//!
//! With `W_σ(k) = Σ_q λ_q^{2σ} φ_q(k)²` the block energies are
//! `E_u = ½ Σ_k W_s |û_k|²` and `E_b = ½ Σ_k W_r |b̂_k|²`, and along any
//! trajectory of the (Galerkin-truncated) system
//!
//! ```text
//! dE_u/dt = −I₁ − I₂ − ν Σ_k W_s |k|² |û_k|²,     dE_b/dt = −I₃ − I₄,
//! ```
//!
//! where `I₁ = Σ_q λ_q^{2s}⟨Δ_q(u·∇u), u_q⟩`, `I₂ = −Σ_q λ_q^{2s}⟨Δ_q(b·∇b), u_q⟩`,
//! `I₃ = Σ_q λ_q^{2r}⟨Δ_q(u·∇b), b_q⟩`, `I₄ = −Σ_q λ_q^{2r}⟨Δ_q(b·∇u), b_q⟩`.
//! The flux terms are split with the Bony decomposition, and the first and
//! third once more with the commutator `[Δ_q, u_{≤p−2}·∇]`.
//!
//! The second half of the module makes the continuation argument
//! executable: `A(t)`, the constants `M₀, M₁, F`, the admissible window and
//! the propagation experiment.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{lambda, DyadicCutoff, LittlewoodPaley};
use crate::mhd::{check_cfl, MhdState, SolverParams, Stepper};
use crate::paraproduct::{Paraproduct, Resonant};
use crate::spectral::{
    leray_project, linf_norm, sobolev_norm_direct, transport, Grid, SolenoidalField, SpectralField,
};
use crate::stokes::{rough_data, RoughDataSpec};

/// Relative tolerance of the decomposition identities.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Relative size below which `I₁₁₂` and `I₃₁₂` count as zero.
pub const CANCELLATION_TOL: f64 = 1e-10;

/// Largest `δ` with `r = s + 1 − δ` admissible.
pub fn delta_max(dim: usize, s: f64) -> f64 {
    0.5 * (s - dim as f64 / 2.0 + 1.0)
}

/// `s > n/2 − 1` and `r ∈ [s + 1 − δ_max, s + 1]` (which implies `r > n/2`).
pub fn check_exponents(dim: usize, s: f64, r: f64) -> Result<()> {
    let half = dim as f64 / 2.0;
    if !(s > half - 1.0) {
        return Err(Error::Parameter(format!("need s > n/2 - 1 = {}, got s = {s}", half - 1.0)));
    }
    let lo = s + 1.0 - delta_max(dim, s);
    if !(r > half && r >= lo - 1e-12 && r <= s + 1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "r = {r} outside the admissible range [{lo}, {}] (and r > n/2 = {half})",
            s + 1.0
        )));
    }
    Ok(())
}

/// `Σ_{(k,φ) ∈ shell q} φ^power Re(x̂_k · conj t̂_k)`, summed over components.
fn shell_inner(lp: &LittlewoodPaley, q: i32, power: i32, x: &SpectralField, t: &SpectralField) -> f64 {
    let mut acc = 0.0;
    for c in 0..x.components() {
        let (xc, tc) = (x.component(c), t.component(c));
        for &(idx, phi) in lp.shell(q) {
            acc += phi.powi(power) * (xc[idx] * tc[idx].conj()).re;
        }
    }
    acc
}

/// `Σ_k w_k Re(x̂_k · conj t̂_k)`.
fn weighted_pair(w: &[f64], x: &SpectralField, t: &SpectralField) -> f64 {
    let mut acc = 0.0;
    for c in 0..x.components() {
        for ((wk, a), b) in w.iter().zip(x.component(c)).zip(t.component(c)) {
            acc += wk * (a * b.conj()).re;
        }
    }
    acc
}

/// Every flux term of the ledger for one state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FluxTerms {
    pub s: f64,
    pub r: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i11: f64,
    pub i12: f64,
    pub i13: f64,
    pub i111: f64,
    pub i112: f64,
    pub i113: f64,
    pub i21: f64,
    pub i22: f64,
    pub i23: f64,
    pub i31: f64,
    pub i32: f64,
    pub i33: f64,
    pub i311: f64,
    pub i312: f64,
    pub i313: f64,
    pub i41: f64,
    pub i42: f64,
    pub i43: f64,
}

fn relative_gap(total: f64, parts: &[f64]) -> f64 {
    let sum: f64 = parts.iter().sum();
    let scale = parts.iter().fold(total.abs(), |m, p| m.max(p.abs()));
    if scale == 0.0 {
        0.0
    } else {
        (total - sum).abs() / scale
    }
}

impl FluxTerms {
    /// Relative defects of `I₁ = ΣI₁ₓ`, `I₁₁ = ΣI₁₁ₓ`, `I₂ = ΣI₂ₓ`,
    /// `I₃ = ΣI₃ₓ`, `I₃₁ = ΣI₃₁ₓ`, `I₄ = ΣI₄ₓ`.
    pub fn decomposition_defects(&self) -> [f64; 6] {
        [
            relative_gap(self.i1, &[self.i11, self.i12, self.i13]),
            relative_gap(self.i11, &[self.i111, self.i112, self.i113]),
            relative_gap(self.i2, &[self.i21, self.i22, self.i23]),
            relative_gap(self.i3, &[self.i31, self.i32, self.i33]),
            relative_gap(self.i31, &[self.i311, self.i312, self.i313]),
            relative_gap(self.i4, &[self.i41, self.i42, self.i43]),
        ]
    }

    /// `|I₁₁₂| / max(|I₁₁₁|, |I₁₁₃|)` and `|I₃₁₂| / max(|I₃₁₁|, |I₃₁₃|)`
    /// (zero when the siblings vanish too).
    pub fn cancellation_ratios(&self) -> (f64, f64) {
        let ratio = |x: f64, a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                if x == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                x.abs() / scale
            }
        };
        (ratio(self.i112, self.i111, self.i113), ratio(self.i312, self.i311, self.i313))
    }

    pub fn satisfies_identities(&self) -> bool {
        self.decomposition_defects().iter().all(|d| *d <= IDENTITY_TOL)
    }
}

/// Unsigned pieces of `Σ_q λ_q^{2σ}⟨Δ_q(a·∇w), t_q⟩`.
#[derive(Default)]
struct Family {
    total: f64,
    low_high: f64,
    high_low: f64,
    high_high: f64,
    /// commutator, `a_{≤q−2}` and `a_{≤p−2} − a_{≤q−2}` parts of `low_high`
    split: [f64; 3],
}

fn family(
    lp: &LittlewoodPaley,
    a: &SpectralField,
    w: &SpectralField,
    target: &SpectralField,
    sigma: f64,
    kind: Resonant,
    with_commutator: bool,
) -> Result<Family> {
    let pp = Paraproduct::new(lp, a, w)?;
    let q_max = lp.q_max();
    let weight = |q: i32| lambda(q).powf(2.0 * sigma);
    let full = transport(a, w)?;
    let total = (-1..=q_max).map(|q| weight(q) * shell_inner(lp, q, 2, &full, target)).sum();

    let per_p: Vec<[f64; 6]> = (-1..=q_max)
        .into_par_iter()
        .map(|p| -> Result<[f64; 6]> {
            let mut out = [0.0; 6];
            let near = (p - 2).max(-1)..=(p + 2).min(q_max);
            let lh = pp.low_high_product(p)?;
            let hl = pp.high_low_product(p)?;
            for q in near.clone() {
                out[0] += weight(q) * shell_inner(lp, q, 2, &lh, target);
                out[1] += weight(q) * shell_inner(lp, q, 2, &hl, target);
            }
            let hh = pp.high_high_product(p, kind)?;
            for q in -1..=(p + 2).min(q_max) {
                out[2] += weight(q) * shell_inner(lp, q, 2, &hh, target);
            }
            if with_commutator {
                let low_p = pp.transporter().low_pass_or_zero(p - 2);
                let wp = pp.transported().block_or_zero(p);
                for q in near {
                    let wpq = lp.project(&wp, q);
                    let low_q = pp.transporter().low_pass_or_zero(q - 2);
                    out[3] += weight(q) * shell_inner(lp, q, 1, &pp.commutator(q, p)?, target);
                    out[4] += weight(q) * shell_inner(lp, q, 1, &transport(&low_q, &wpq)?, target);
                    out[5] += weight(q) * shell_inner(lp, q, 1, &transport(&(&low_p - &low_q), &wpq)?, target);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut f = Family { total, ..Family::default() };
    for v in &per_p {
        f.low_high += v[0];
        f.high_low += v[1];
        f.high_high += v[2];
        for i in 0..3 {
            f.split[i] += v[3 + i];
        }
    }
    Ok(f)
}

/// All flux terms of `state` with a prebuilt block table.
pub fn flux_terms_with(lp: &LittlewoodPaley, state: &MhdState, s: f64, r: f64) -> Result<FluxTerms> {
    lp.grid().ensure_same(state.grid())?;
    check_exponents(state.grid().dim(), s, r)?;
    let (u, b) = (state.u.as_field(), state.b.as_field());
    let f1 = family(lp, u, u, u, s, Resonant::TildeTransported, true)?;
    let f2 = family(lp, b, b, u, s, Resonant::TildeTransported, false)?;
    let f3 = family(lp, u, b, b, r, Resonant::TildeTransported, true)?;
    let f4 = family(lp, b, u, b, r, Resonant::TildeTransporter, false)?;
    Ok(FluxTerms {
        s,
        r,
        i1: f1.total,
        i11: f1.low_high,
        i12: f1.high_low,
        i13: f1.high_high,
        i111: f1.split[0],
        i112: f1.split[1],
        i113: f1.split[2],
        i2: -f2.total,
        i21: -f2.low_high,
        i22: -f2.high_low,
        i23: -f2.high_high,
        i3: f3.total,
        i31: f3.low_high,
        i32: f3.high_low,
        i33: f3.high_high,
        // signed so that I₃₁ = I₃₁₁ + I₃₁₂ + I₃₁₃, matching the I₁₁ split
        i311: f3.split[0],
        i312: f3.split[1],
        i313: f3.split[2],
        i4: -f4.total,
        i41: -f4.low_high,
        i42: -f4.high_low,
        i43: -f4.high_high,
    })
}

/// All flux terms of `state`; `r = s + 1` is the customary choice.
pub fn flux_terms(state: &MhdState, s: f64, r: f64, cutoff: &DyadicCutoff) -> Result<FluxTerms> {
    flux_terms_with(&LittlewoodPaley::new(state.grid(), cutoff), state, s, r)
}

/// `W_σ(k) = Σ_q λ_q^{2σ} φ_q(k)²`.
pub fn block_weights(lp: &LittlewoodPaley, sigma: f64) -> Vec<f64> {
    lp.mode_weights(|q| lambda(q).powf(2.0 * sigma), 2)
}

/// Cached weights for repeated ledger evaluations on one grid.
#[derive(Clone, Debug)]
pub struct Ledger {
    lp: LittlewoodPaley,
    s: f64,
    r: f64,
    ws: Vec<f64>,
    wr: Vec<f64>,
    /// `W_s |k|²`
    ws_k2: Vec<f64>,
    /// `Σ_q λ_q^{2s+2} φ_q²`
    ws1: Vec<f64>,
}

/// Ledger quantities at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRates {
    pub t: f64,
    /// `½ Σ_q λ_q^{2s} ‖u_q‖₂²`
    pub energy_u: f64,
    /// `½ Σ_q λ_q^{2r} ‖b_q‖₂²`
    pub energy_b: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// `ν Σ_k W_s |k|² |û_k|²` (the exact viscous term)
    pub dissipation_exact: f64,
    /// `ν Σ_q λ_q^{2s+2} ‖u_q‖₂²` (the block form used in the estimates)
    pub dissipation_block: f64,
}

impl LedgerRates {
    /// `dE_u/dt` predicted by the identity.
    pub fn du_dt(&self) -> f64 {
        -self.i1 - self.i2 - self.dissipation_exact
    }

    /// `dE_b/dt` predicted by the identity.
    pub fn db_dt(&self) -> f64 {
        -self.i3 - self.i4
    }
}

/// Centered-difference check of the ledger identity on three states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerCheck {
    pub t: f64,
    pub h: f64,
    pub du_fd: f64,
    pub du_identity: f64,
    pub db_fd: f64,
    pub db_identity: f64,
    /// `|fd − identity|` for `u` and `b`.
    pub residual_u: f64,
    pub residual_b: f64,
    /// `|I₁| + |I₂| + ν·dissipation` and `|I₃| + |I₄|`: the size of what cancels.
    pub scale_u: f64,
    pub scale_b: f64,
}

impl Ledger {
    pub fn new(grid: &Grid, cutoff: &DyadicCutoff, s: f64, r: f64) -> Result<Self> {
        check_exponents(grid.dim(), s, r)?;
        let lp = LittlewoodPaley::new(grid, cutoff);
        let ws = block_weights(&lp, s);
        let wr = block_weights(&lp, r);
        let ws_k2 = ws.iter().enumerate().map(|(i, w)| w * grid.k2(i)).collect();
        let ws1 = block_weights(&lp, s + 1.0);
        Ok(Ledger { lp, s, r, ws, wr, ws_k2, ws1 })
    }

    pub fn lp(&self) -> &LittlewoodPaley {
        &self.lp
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Totals `I₁ … I₄` from one product each.
    pub fn flux_totals(&self, state: &MhdState) -> Result<[f64; 4]> {
        self.lp.grid().ensure_same(state.grid())?;
        let (u, b) = (state.u.as_field(), state.b.as_field());
        Ok([
            weighted_pair(&self.ws, &transport(u, u)?, u),
            -weighted_pair(&self.ws, &transport(b, b)?, u),
            weighted_pair(&self.wr, &transport(u, b)?, b),
            -weighted_pair(&self.wr, &transport(b, u)?, b),
        ])
    }

    pub fn flux_terms(&self, state: &MhdState) -> Result<FluxTerms> {
        flux_terms_with(&self.lp, state, self.s, self.r)
    }

    pub fn rates(&self, state: &MhdState, nu: f64) -> Result<LedgerRates> {
        let [i1, i2, i3, i4] = self.flux_totals(state)?;
        Ok(LedgerRates {
            t: state.t,
            energy_u: 0.5 * state.u.weighted_norm_sqr(|i| self.ws[i]),
            energy_b: 0.5 * state.b.weighted_norm_sqr(|i| self.wr[i]),
            i1,
            i2,
            i3,
            i4,
            dissipation_exact: nu * state.u.weighted_norm_sqr(|i| self.ws_k2[i]),
            dissipation_block: nu * state.u.weighted_norm_sqr(|i| self.ws1[i]),
        })
    }

    /// Compares `(E(t+h) − E(t−h)) / 2h` with the identity at the middle
    /// state; the mismatch is `O(h²)`.
    pub fn check(&self, triple: [&MhdState; 3], nu: f64) -> Result<LedgerCheck> {
        let [a, m, c] = triple;
        let h = m.t - a.t;
        if !(h > 0.0) || ((c.t - m.t) - h).abs() > 1e-9 * h {
            return Err(Error::Sampling(format!(
                "checkpoints at t = {}, {}, {} are not equally spaced",
                a.t, m.t, c.t
            )));
        }
        let (ra, rm, rc) = (self.rates(a, nu)?, self.rates(m, nu)?, self.rates(c, nu)?);
        let du_fd = (rc.energy_u - ra.energy_u) / (2.0 * h);
        let db_fd = (rc.energy_b - ra.energy_b) / (2.0 * h);
        Ok(LedgerCheck {
            t: m.t,
            h,
            du_fd,
            du_identity: rm.du_dt(),
            db_fd,
            db_identity: rm.db_dt(),
            residual_u: (du_fd - rm.du_dt()).abs(),
            residual_b: (db_fd - rm.db_dt()).abs(),
            scale_u: rm.i1.abs() + rm.i2.abs() + rm.dissipation_exact,
            scale_b: rm.i3.abs() + rm.i4.abs(),
        })
    }

    /// `A = Σ_q λ_q^{2s}‖u_q‖² + Σ_q λ_q^{2s+2}‖b_q‖²`.
    pub fn a_of_t(&self, state: &MhdState) -> f64 {
        a_of_t_with(&self.lp, state, self.s)
    }
}

/// `A(t) = ‖u‖²_{Ḣˢ} + ‖b‖²_{Ḣ^{s+1}}` in block norms.
pub fn a_of_t_with(lp: &LittlewoodPaley, state: &MhdState, s: f64) -> f64 {
    crate::lp::block_sobolev_norm(lp, &state.u, s).powi(2) + crate::lp::block_sobolev_norm(lp, &state.b, s + 1.0).powi(2)
}

pub fn a_of_t(state: &MhdState, s: f64, cutoff: &DyadicCutoff) -> f64 {
    a_of_t_with(&LittlewoodPaley::new(state.grid(), cutoff), state, s)
}

/// `1 − n/(2(s+1))`.
pub fn theta_product(dim: usize, s: f64) -> f64 {
    1.0 - dim as f64 / (2.0 * (s + 1.0))
}

/// `4(s+1) / (2(s+1) + n)`, i.e. `2 / (2 − θ₁θ₂)`.
pub fn beta(dim: usize, s: f64) -> f64 {
    4.0 * (s + 1.0) / (2.0 * (s + 1.0) + dim as f64)
}

/// `R_bb = ‖(b·∇)b‖_{Hˢ} / ‖b‖²_{H^{s+1}}` and
/// `R_uu = ‖(u·∇)u‖_{Hˢ} / (‖u‖₂^{θ} ‖u‖_{H^{s+1}}^{2−θ})`, `θ = θ₁θ₂`;
/// both conventionally zero for a zero field.
pub fn interpolation_ratios(u: &SpectralField, b: &SpectralField, s: f64) -> Result<(f64, f64)> {
    let theta = theta_product(u.grid().dim(), s);
    let nb = sobolev_norm_direct(b, s + 1.0, false);
    let r_bb = if nb == 0.0 {
        0.0
    } else {
        sobolev_norm_direct(&transport(b, b)?, s, false) / (nb * nb)
    };
    let (u2, u1) = (u.l2_norm(), sobolev_norm_direct(u, s + 1.0, false));
    let r_uu = if u2 == 0.0 {
        0.0
    } else {
        sobolev_norm_direct(&transport(u, u)?, s, false) / (u2.powf(theta) * u1.powf(2.0 - theta))
    };
    Ok((r_bb, r_uu))
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolationReport {
    pub grid_n: usize,
    pub samples: usize,
    pub s: f64,
    pub theta_product: f64,
    pub r_bb: f64,
    pub r_uu: f64,
}

/// Sup of both ratios over random divergence-free broadband fields.
pub fn interpolation_checks(grid: &Grid, s: f64, samples: usize, seed: u64) -> Result<InterpolationReport> {
    if !(s > grid.dim() as f64 / 2.0 - 1.0) {
        return Err(Error::Parameter(format!("need s > n/2 - 1, got {s}")));
    }
    let mut rng = crate::spectral::random::rng_from_seed(seed);
    let (mut r_bb, mut r_uu) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let u = leray_project(&crate::lp::random_broadband(grid, grid.dim(), &mut rng))?;
        let b = leray_project(&crate::lp::random_broadband(grid, grid.dim(), &mut rng))?;
        let (x, y) = interpolation_ratios(&u, &b, s)?;
        r_bb = r_bb.max(x);
        r_uu = r_uu.max(y);
    }
    Ok(InterpolationReport { grid_n: grid.n(), samples, s, theta_product: theta_product(grid.dim(), s), r_bb, r_uu })
}

/// Constants of the continuation argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConstants {
    pub dim: usize,
    pub s: f64,
    pub nu: f64,
    pub t0: f64,
    /// `A(t₀)`
    pub a0: f64,
    /// `‖u₀‖₂² + ‖b₀‖₂²`
    pub m0: f64,
    /// `C_ν[(4A₀)^{1+γ₁} + (4A₀)^{1+γ₂} + (4A₀)^{1+γ₃} + (4A₀)²]`
    pub m1: f64,
    pub beta: f64,
    pub theta_product: f64,
    pub c_nu: f64,
    pub c_0: f64,
    pub gammas: [f64; 3],
}

/// The two window constraints, plus the degenerate search interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowConstraint {
    /// `e^{F(T)} < 2`
    ExpF,
    /// `2 M₁ (T − t₀) / A₀ < 1`
    Growth,
    /// `T_search ≤ t₀`
    Search,
}

/// Outcome of [`predicted_window`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Window {
    Admissible {
        t: f64,
        f: f64,
        growth: f64,
        /// The constraint that stops the window short of `T_search`, if any.
        binding: Option<WindowConstraint>,
    },
    Empty {
        constraint: WindowConstraint,
        detail: String,
    },
}

impl Window {
    pub fn end(&self) -> Option<f64> {
        match self {
            Window::Admissible { t, .. } => Some(*t),
            Window::Empty { .. } => None,
        }
    }
}

impl PropagationConstants {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        s: f64,
        nu: f64,
        t0: f64,
        a0: f64,
        m0: f64,
        c_nu: f64,
        c_0: f64,
        gammas: [f64; 3],
    ) -> Result<Self> {
        if !(s > dim as f64 / 2.0 - 1.0) {
            return Err(Error::Parameter(format!("need s > n/2 - 1 = {}, got {s}", dim as f64 / 2.0 - 1.0)));
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !(nu > 0.0 && t0 > 0.0 && t0.is_finite()) {
            return Err(Error::Parameter(format!("need nu > 0 and t0 > 0, got nu = {nu}, t0 = {t0}")));
        }
        if ![a0, m0, c_nu, c_0].into_iter().all(finite_nonneg) {
            return Err(Error::Parameter("A0, M0 and the prefactors must be finite and non-negative".into()));
        }
        if !gammas.iter().all(|g| *g > 0.0 && g.is_finite()) {
            return Err(Error::Parameter(format!("exponents gamma must be positive, got {gammas:?}")));
        }
        let beta = beta(dim, s);
        let theta = theta_product(dim, s);
        if !(beta > 1.0) || !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Parameter(format!("beta = {beta}, theta1*theta2 = {theta} out of range")));
        }
        let x = 4.0 * a0;
        let m1 = c_nu * (gammas.iter().map(|g| x.powf(1.0 + g)).sum::<f64>() + x * x);
        Ok(PropagationConstants { dim, s, nu, t0, a0, m0, m1, beta, theta_product: theta, c_nu, c_0, gammas })
    }

    /// `F(T) = C_ν log(T/t₀)‖u₀‖_{Hˢ} + C_ν (T−t₀)^{1−1/β}(A₀^β T + ν⁻¹ M₀^{θβ/2}(A₀ + M₁T))^{1/β}`.
    pub fn f(&self, t: f64, u0_hs: f64) -> Result<f64> {
        if !(t >= self.t0) {
            return Err(Error::Parameter(format!("F is defined for T >= t0 = {}, got {t}", self.t0)));
        }
        let b = self.beta;
        let inner = self.a0.powf(b) * t
            + self.m0.powf(0.5 * self.theta_product * b) * (self.a0 + self.m1 * t) / self.nu;
        Ok(self.c_nu * (t / self.t0).ln() * u0_hs + self.c_nu * (t - self.t0).powf(1.0 - 1.0 / b) * inner.powf(1.0 / b))
    }

    /// `2 M₁ (T − t₀) / A₀` (zero when `M₁ = 0`).
    pub fn growth(&self, t: f64) -> f64 {
        let num = 2.0 * self.m1 * (t - self.t0);
        if num == 0.0 {
            0.0
        } else {
            num / self.a0
        }
    }

    /// First violated window constraint at `T`, if any.
    pub fn violated(&self, t: f64, u0_hs: f64) -> Result<Option<WindowConstraint>> {
        let f = self.f(t, u0_hs)?;
        Ok(if !(f.exp() < 2.0) {
            Some(WindowConstraint::ExpF)
        } else if !(self.growth(t) < 1.0) {
            Some(WindowConstraint::Growth)
        } else {
            None
        })
    }
}

/// Relative precision of the window bisection.
pub const WINDOW_RTOL: f64 = 1e-6;

/// Largest `T ≤ T_search` with `e^{F(T)} < 2` and `2M₁(T−t₀)/A₀ < 1`.
///
/// Both sides increase with `T`, so the admissible set is an interval
/// `(t₀, T*)`; the offset `T − t₀` is bisected to relative precision
/// [`WINDOW_RTOL`]. No admissible `T` is an [`Window::Empty`] result.
pub fn predicted_window(pc: &PropagationConstants, u0_hs: f64, t_search: f64) -> Result<Window> {
    if !(u0_hs >= 0.0 && u0_hs.is_finite()) {
        return Err(Error::Parameter(format!("initial H^s norm must be finite and >= 0, got {u0_hs}")));
    }
    let t0 = pc.t0;
    if !(t_search > t0) {
        return Ok(Window::Empty {
            constraint: WindowConstraint::Search,
            detail: format!("search horizon {t_search} does not exceed t0 = {t0}"),
        });
    }
    let admissible = |t: f64, binding| -> Result<Window> {
        Ok(Window::Admissible { t, f: pc.f(t, u0_hs)?, growth: pc.growth(t), binding })
    };
    let Some(mut failing) = pc.violated(t_search, u0_hs)? else {
        return admissible(t_search, None);
    };
    let mut hi = t_search - t0;
    let mut lo = loop {
        let tau = 0.5 * hi;
        if t0 + tau == t0 {
            return Ok(Window::Empty {
                constraint: failing,
                detail: format!(
                    "{} already violated at T - t0 = {hi:.3e} (F = {:.3e}, growth = {:.3e})",
                    match failing {
                        WindowConstraint::ExpF => "exp(F) < 2",
                        WindowConstraint::Growth => "2 M1 (T - t0) / A0 < 1",
                        WindowConstraint::Search => "search interval",
                    },
                    pc.f(t0 + hi, u0_hs)?,
                    pc.growth(t0 + hi)
                ),
            });
        }
        match pc.violated(t0 + tau, u0_hs)? {
            None => break tau,
            Some(c) => {
                failing = c;
                hi = tau;
            }
        }
    };
    while hi - lo > WINDOW_RTOL * lo {
        let mid = 0.5 * (lo + hi);
        match pc.violated(t0 + mid, u0_hs)? {
            None => lo = mid,
            Some(c) => {
                failing = c;
                hi = mid;
            }
        }
    }
    admissible(t0 + lo, Some(failing))
}

/// Per-state inequality ratios used to fit `C_ν` and `C₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub t: f64,
    /// `‖u‖²_{Ḣˢ}` (block)
    pub x: f64,
    /// `‖b‖²_{Ḣʳ}` (block)
    pub y: f64,
    /// `d/dt‖u‖²_{Ḣˢ} + ν‖∇u‖²_{Hˢ}`
    pub lhs_energy2: f64,
    /// `d/dt A + ν/2 ‖∇u‖²_{Hˢ}`
    pub lhs_energy4: f64,
    /// `2(|I₃| + |I₄|)`
    pub b_transfer: f64,
    /// `‖∇u‖²_{Hˢ}`
    pub grad_hs_sq: f64,
    /// `‖∇u‖_{H^{s+1}}`
    pub grad_hs1: f64,
    pub energy: f64,
    /// `‖b‖_{H^{s+1}}` and `‖u‖_{H^{s+1}}` (inhomogeneous)
    pub b_hs1: f64,
    pub u_hs1: f64,
}

pub fn calibration_point(ledger: &Ledger, state: &MhdState, nu: f64) -> Result<CalibrationPoint> {
    let rates = ledger.rates(state, nu)?;
    let (x, y) = (2.0 * rates.energy_u, 2.0 * rates.energy_b);
    let g = state.grid().clone();
    let s = ledger.s;
    let grad_hs_sq = state.u.weighted_norm_sqr(|i| (1.0 + g.k2(i)).powf(s) * g.k2(i));
    let grad_hs1 = state.u.weighted_norm_sqr(|i| (1.0 + g.k2(i)).powf(s + 1.0) * g.k2(i)).sqrt();
    let dx = 2.0 * rates.du_dt();
    let dy = 2.0 * rates.db_dt();
    Ok(CalibrationPoint {
        t: state.t,
        x,
        y,
        lhs_energy2: dx + nu * grad_hs_sq,
        lhs_energy4: dx + dy + 0.5 * nu * grad_hs_sq,
        b_transfer: 2.0 * (rates.i3.abs() + rates.i4.abs()),
        grad_hs_sq,
        grad_hs1,
        energy: state.energy(),
        b_hs1: sobolev_norm_direct(&state.b, s + 1.0, false),
        u_hs1: sobolev_norm_direct(&state.u, s + 1.0, false),
    })
}

/// Fitted prefactors with the raw suprema they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub c_nu: f64,
    pub c_0: f64,
    pub margin: f64,
    pub samples: usize,
    /// sup of `lhs_energy2 / (X^{1+γ₁/2} + X^{1+γ₂/2} + Y^{1+γ₃/2} + Y²)`
    pub raw_energy2: f64,
    /// sup of `(lhs_energy4 − C₀‖∇u‖_{H^{s+1}}A) / (A^{1+γ₁} + A^{1+γ₂})`
    pub raw_energy4: f64,
    /// sup of `2(|I₃|+|I₄|) / (‖∇u‖_{H^{s+1}} Y)`
    pub raw_c0: f64,
    /// sup of the time-integral bound on `∫‖∇u‖_{H^{s+1}}`
    pub raw_l1: f64,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0 && num.is_finite()).then(|| num / den)
}

/// Smallest prefactors for which every measured inequality holds over the
/// calibration trajectory, times `margin`.
///
/// `points` must be ordered in time and start at `t₀`; `u0_hs` is the
/// `Hˢ` norm of the data at time zero.
pub fn fit_constants(
    points: &[CalibrationPoint],
    dim: usize,
    s: f64,
    u0_hs: f64,
    gammas: [f64; 3],
    margin: f64,
) -> Result<ConstantFit> {
    if points.len() < 2 {
        return Err(Error::Parameter("constant fit needs at least two calibration states".into()));
    }
    if !(margin >= 1.0) {
        return Err(Error::Parameter(format!("fit margin must be >= 1, got {margin}")));
    }
    let mut raw_c0 = 0.0f64;
    for p in points {
        if let Some(v) = ratio(p.b_transfer, p.grad_hs1 * p.y) {
            raw_c0 = raw_c0.max(v);
        }
    }
    let c_0 = margin * raw_c0;
    let (mut raw2, mut raw4) = (0.0f64, 0.0f64);
    for p in points {
        let (x, y) = (p.x, p.y);
        let p2 = x.powf(1.0 + gammas[0] / 2.0) + x.powf(1.0 + gammas[1] / 2.0) + y.powf(1.0 + gammas[2] / 2.0) + y * y;
        if let Some(v) = ratio(p.lhs_energy2, p2) {
            raw2 = raw2.max(v);
        }
        let a = x + y;
        let p4 = a.powf(1.0 + gammas[0]) + a.powf(1.0 + gammas[1]);
        if let Some(v) = ratio(p.lhs_energy4 - c_0 * p.grad_hs1 * a, p4) {
            raw4 = raw4.max(v);
        }
    }
    // time-integral bound, trapezoidal in the sample times
    let (b, theta) = (beta(dim, s), theta_product(dim, s));
    let t0 = points[0].t;
    let (mut lhs, mut forcing, mut raw_l1) = (0.0, 0.0, 0.0f64);
    let g = |p: &CalibrationPoint| p.b_hs1.powf(2.0 * b) + p.energy.sqrt().powf(theta * b) * p.u_hs1 * p.u_hs1;
    for w in points.windows(2) {
        let dt = w[1].t - w[0].t;
        lhs += 0.5 * dt * (w[0].grad_hs1 + w[1].grad_hs1);
        forcing += 0.5 * dt * (g(&w[0]) + g(&w[1]));
        let t = w[1].t;
        let rhs = (t / t0).ln() * u0_hs + (t - t0).powf(1.0 - 1.0 / b) * forcing.powf(1.0 / b);
        if let Some(v) = ratio(lhs, rhs) {
            raw_l1 = raw_l1.max(v);
        }
    }
    Ok(ConstantFit {
        c_nu: margin * raw2.max(raw4).max(raw_l1),
        c_0,
        margin,
        samples: points.len(),
        raw_energy2: raw2,
        raw_energy4: raw4,
        raw_c0,
        raw_l1,
    })
}

/// Settings of the propagation experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    pub dim: usize,
    pub n: usize,
    pub s: f64,
    pub nu: f64,
    pub t0: f64,
    /// Upper end of the window search.
    pub t_search: f64,
    /// Largest step; the actual step also keeps the CFL number at `cfl_target`.
    pub dt_max: f64,
    pub cfl_target: f64,
    pub seed: u64,
    pub gammas: [f64; 3],
    /// Prefactors `(C_ν, C₀)`; fitted on a reference run when absent.
    pub constants: Option<(f64, f64)>,
    pub calibration_n: usize,
    pub calibration_samples: usize,
    /// Length of the reference run past `t₀`.
    pub calibration_time: f64,
    pub margin: f64,
    /// Record the ledger every this many steps.
    pub trace_cadence: usize,
    /// Repeat the run at `N/2` and compare.
    pub sensitivity: bool,
    /// Relative change of `max A/A₀` counted as converged.
    pub convergence_tol: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            dim: 2,
            n: 256,
            s: 1.2,
            nu: 0.05,
            t0: 0.01,
            t_search: 1.01,
            dt_max: 1e-3,
            cfl_target: 0.25,
            seed: 7,
            gammas: [1.0; 3],
            constants: None,
            calibration_n: 64,
            calibration_samples: 64,
            calibration_time: 0.5,
            margin: 1.1,
            trace_cadence: 1,
            sensitivity: true,
            convergence_tol: 0.05,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.dim, self.n)?;
        check_exponents(self.dim, self.s, self.s + 1.0)?;
        let positive = [
            ("nu", self.nu),
            ("t0", self.t0),
            ("dt_max", self.dt_max),
            ("cfl_target", self.cfl_target),
            ("calibration_time", self.calibration_time),
            ("convergence_tol", self.convergence_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.t_search > self.t0) {
            return Err(Error::Config(format!("t_search = {} must exceed t0 = {}", self.t_search, self.t0)));
        }
        if self.cfl_target > SolverParams::CFL_LIMIT {
            return Err(Error::Config(format!(
                "cfl_target = {} exceeds the limit {}",
                self.cfl_target,
                SolverParams::CFL_LIMIT
            )));
        }
        if self.constants.is_none() && self.calibration_samples < 2 {
            return Err(Error::Config("calibration needs at least two samples".into()));
        }
        if self.trace_cadence == 0 {
            return Err(Error::Config("trace_cadence must be at least 1".into()));
        }
        if !(self.margin >= 1.0) {
            return Err(Error::Config(format!("margin must be >= 1, got {}", self.margin)));
        }
        Ok(())
    }
}

/// Rough data at time zero: `u` at the `Hˢ` threshold, `b` at `H^{s+1}`.
pub fn rough_mhd_data(grid: &Grid, s: f64, seed: u64) -> Result<MhdState> {
    let u = rough_data(&RoughDataSpec::new(s, seed), grid)?;
    let b = rough_data(&RoughDataSpec::new(s + 1.0, seed.wrapping_add(1)), grid)?;
    MhdState::new(u, b, 0.0)
}

/// Restriction of a state to a coarser grid (modes retained there).
pub fn restrict_state(state: &MhdState, coarse: &Grid) -> Result<MhdState> {
    let u = SolenoidalField::new(state.u.restricted(coarse)?)?;
    let b = SolenoidalField::new(state.b.restricted(coarse)?)?;
    MhdState::new(u, b, state.t)
}

/// Step no larger than `dt_max` with CFL number `cfl_target`.
fn pick_dt(state: &MhdState, dt_max: f64, cfl_target: f64) -> f64 {
    let speed = linf_norm(&state.u).max(linf_norm(&state.b)) * state.grid().n() as f64;
    if speed == 0.0 {
        dt_max
    } else {
        dt_max.min(cfl_target / speed)
    }
}

/// Integrates to exactly `t_end` with a fixed step chosen from the initial
/// state, calling `visit` on every state. Returns the final state or the
/// blow-up (time, reason).
fn integrate<F: FnMut(&MhdState) -> Result<()>>(
    start: &MhdState,
    t_end: f64,
    nu: f64,
    dt_max: f64,
    cfl_target: f64,
    mut visit: F,
) -> Result<std::result::Result<MhdState, (f64, String)>> {
    let span = t_end - start.t;
    visit(start)?;
    if span <= 0.0 {
        return Ok(Ok(start.clone()));
    }
    let dt = pick_dt(start, dt_max, cfl_target);
    let steps = (span / dt).ceil().max(1.0) as usize;
    let params = SolverParams::new(nu, span / steps as f64);
    let stepper = Stepper::new(start.grid(), &params)?;
    let mut state = start.clone();
    for i in 1..=steps {
        if let Err(Error::Cfl { value, limit }) = check_cfl(&state, &params) {
            return Ok(Err((state.t, format!("CFL number {value:.3} exceeded {limit}"))));
        }
        state = match stepper.step(&state) {
            Ok(s) => s,
            Err(Error::BlowUp { time, reason }) => return Ok(Err((time, reason))),
            Err(e) => return Err(e),
        };
        if i == steps {
            state.t = t_end;
        }
        visit(&state)?;
    }
    Ok(Ok(state))
}

/// One row of the propagation trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub a: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// `D(t₀, t) = E(t) + 2ν∫‖∇u‖₂² − E(t₀)`
    pub energy_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    EmptyWindow,
}

/// `N` versus `N/2` comparison of the same window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub n_fine: usize,
    pub n_coarse: usize,
    pub max_ratio_fine: f64,
    pub max_ratio_coarse: f64,
    pub relative_change: f64,
    pub converged: bool,
    /// Energy fraction in the outer third of the retained box at the end.
    pub tail_fraction: f64,
}

/// Measured time integrals against the bounds the continuation argument
/// provides for them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralBounds {
    /// `∫_{t₀}^{T} ‖∇u‖²_{Hˢ} dt`
    pub grad_hs_sq: f64,
    /// `ν⁻¹(A₀ + M₁(T − t₀))`
    pub grad_hs_sq_bound: f64,
    /// `∫_{t₀}^{T} ‖∇u‖_{H^{s+1}} dt`
    pub grad_hs1: f64,
    /// `F(T)`
    pub grad_hs1_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub verdict: Verdict,
    pub n: usize,
    pub s: f64,
    pub nu: f64,
    pub t0: f64,
    pub t_search: f64,
    pub t_predicted: Option<f64>,
    pub t_achieved: f64,
    pub max_ratio: f64,
    pub failure: Option<String>,
    pub window: Window,
    pub constants: PropagationConstants,
    pub fit: Option<ConstantFit>,
    pub u0_hs: f64,
    pub integrals: Option<IntegralBounds>,
    pub resolution: Option<ResolutionReport>,
    pub dt: f64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl PropagationReport {
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "A", "I1", "I2", "I3", "I4", "energy_residual"])?;
        for r in &self.trace {
            w.write_record([r.t, r.a, r.i1, r.i2, r.i3, r.i4, r.energy_residual].map(|x| format!("{x:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the reference trajectory at the calibration resolution and fits
/// `(C_ν, C₀)` on it.
pub fn calibrate(initial: &MhdState, cfg: &PropagationConfig, cutoff: &DyadicCutoff) -> Result<ConstantFit> {
    let grid = Grid::new(cfg.dim, cfg.calibration_n)?;
    let start = restrict_state(initial, &grid)?;
    let ledger = Ledger::new(&grid, cutoff, cfg.s, cfg.s + 1.0)?;
    let u0_hs = sobolev_norm_direct(&start.u, cfg.s, false);
    let at_t0 = match integrate(&start, cfg.t0, cfg.nu, cfg.dt_max, cfg.cfl_target, |_| Ok(()))? {
        Ok(s) => s,
        Err((t, why)) => return Err(Error::BlowUp { time: t, reason: format!("calibration pre-run: {why}") }),
    };
    let t_end = cfg.t0 + cfg.calibration_time;
    let every = cfg.calibration_time / cfg.calibration_samples as f64;
    let mut points = vec![calibration_point(&ledger, &at_t0, cfg.nu)?];
    let mut next = cfg.t0 + every;
    let end = integrate(&at_t0, t_end, cfg.nu, cfg.dt_max, cfg.cfl_target, |st| {
        if st.t >= next - 1e-12 || st.t >= t_end {
            points.push(calibration_point(&ledger, st, cfg.nu)?);
            next += every;
        }
        Ok(())
    })?;
    if let Err((t, why)) = end {
        return Err(Error::BlowUp { time: t, reason: format!("calibration run: {why}") });
    }
    fit_constants(&points, cfg.dim, cfg.s, u0_hs, cfg.gammas, cfg.margin)
}

struct WindowRun {
    max_ratio: f64,
    exceeded_at: Option<f64>,
    blowup: Option<(f64, String)>,
    t_achieved: f64,
    trace: Vec<TraceRow>,
    integrals: (f64, f64),
    dt: f64,
    final_state: MhdState,
}

fn run_window(at_t0: &MhdState, t_end: f64, cfg: &PropagationConfig, ledger: &Ledger, a0: f64) -> Result<WindowRun> {
    let g = at_t0.grid().clone();
    let s = cfg.s;
    let w_hs: Vec<f64> = (0..g.len()).map(|i| (1.0 + g.k2(i)).powf(s) * g.k2(i)).collect();
    let w_hs1: Vec<f64> = (0..g.len()).map(|i| (1.0 + g.k2(i)).powf(s + 1.0) * g.k2(i)).collect();
    let mut run = WindowRun {
        max_ratio: 0.0,
        exceeded_at: None,
        blowup: None,
        t_achieved: at_t0.t,
        trace: Vec::new(),
        integrals: (0.0, 0.0),
        dt: pick_dt(at_t0, cfg.dt_max, cfg.cfl_target),
        final_state: at_t0.clone(),
    };
    let e0 = at_t0.energy();
    let (mut prev, mut diss_int, mut count) = (None::<(f64, f64, f64, f64)>, 0.0, 0usize);
    let outcome = integrate(at_t0, t_end, cfg.nu, cfg.dt_max, cfg.cfl_target, |st| {
        let a = ledger.a_of_t(st);
        let ratio = if a0 > 0.0 { a / a0 } else if a > 0.0 { f64::INFINITY } else { 0.0 };
        run.max_ratio = run.max_ratio.max(ratio);
        if ratio > 4.0 && run.exceeded_at.is_none() {
            run.exceeded_at = Some(st.t);
        }
        let gs = st.u.weighted_norm_sqr(|i| w_hs[i]);
        let gs1 = st.u.weighted_norm_sqr(|i| w_hs1[i]).sqrt();
        let d = st.u.weighted_norm_sqr(|i| g.k2(i));
        if let Some((t, pgs, pgs1, pd)) = prev {
            let dt = st.t - t;
            run.integrals.0 += 0.5 * dt * (gs + pgs);
            run.integrals.1 += 0.5 * dt * (gs1 + pgs1);
            diss_int += 0.5 * dt * (d + pd);
        }
        prev = Some((st.t, gs, gs1, d));
        let last = (st.t - t_end).abs() <= 1e-12 * t_end.max(1.0);
        if count % cfg.trace_cadence == 0 || last {
            let [i1, i2, i3, i4] = ledger.flux_totals(st)?;
            let energy_residual = st.energy() + 2.0 * cfg.nu * diss_int - e0;
            run.trace.push(TraceRow { t: st.t, a, i1, i2, i3, i4, energy_residual });
        }
        count += 1;
        run.t_achieved = st.t;
        Ok(())
    })?;
    match outcome {
        Ok(s) => run.final_state = s,
        Err(b) => run.blowup = Some(b),
    }
    Ok(run)
}

/// Runs the experiment from a given state at time zero.
pub fn propagation_run(initial: &MhdState, cfg: &PropagationConfig, cutoff: &DyadicCutoff) -> Result<PropagationReport> {
    cfg.validate()?;
    let grid = initial.grid().clone();
    if grid.n() != cfg.n || grid.dim() != cfg.dim {
        return Err(Error::Config(format!("initial data on {grid}, config asks for N = {}, n = {}", cfg.n, cfg.dim)));
    }
    let (fit, (c_nu, c_0)) = match cfg.constants {
        Some(c) => (None, c),
        None => {
            let f = calibrate(initial, cfg, cutoff)?;
            let c = (f.c_nu, f.c_0);
            (Some(f), c)
        }
    };
    let ledger = Ledger::new(&grid, cutoff, cfg.s, cfg.s + 1.0)?;
    let u0_hs = sobolev_norm_direct(&initial.u, cfg.s, false);
    let m0 = initial.energy();
    let at_t0 = match integrate(initial, cfg.t0, cfg.nu, cfg.dt_max, cfg.cfl_target, |_| Ok(()))? {
        Ok(s) => s,
        Err((t, why)) => return Err(Error::BlowUp { time: t, reason: format!("pre-run to t0: {why}") }),
    };
    let a0 = ledger.a_of_t(&at_t0);
    let constants = PropagationConstants::new(cfg.dim, cfg.s, cfg.nu, cfg.t0, a0, m0, c_nu, c_0, cfg.gammas)?;
    let window = predicted_window(&constants, u0_hs, cfg.t_search)?;
    let mut report = PropagationReport {
        verdict: Verdict::EmptyWindow,
        n: cfg.n,
        s: cfg.s,
        nu: cfg.nu,
        t0: cfg.t0,
        t_search: cfg.t_search,
        t_predicted: window.end(),
        t_achieved: cfg.t0,
        max_ratio: 1.0,
        failure: None,
        window: window.clone(),
        constants: constants.clone(),
        fit,
        u0_hs,
        integrals: None,
        resolution: None,
        dt: 0.0,
        trace: Vec::new(),
    };
    let Some(t_end) = window.end() else {
        return Ok(report);
    };
    let run = run_window(&at_t0, t_end, cfg, &ledger, a0)?;
    report.max_ratio = run.max_ratio;
    report.t_achieved = run.t_achieved;
    report.dt = run.dt;
    report.integrals = Some(IntegralBounds {
        grad_hs_sq: run.integrals.0,
        grad_hs_sq_bound: (a0 + constants.m1 * (t_end - cfg.t0)) / cfg.nu,
        grad_hs1: run.integrals.1,
        grad_hs1_bound: constants.f(t_end, u0_hs)?,
    });
    report.verdict = if run.blowup.is_none() && run.exceeded_at.is_none() { Verdict::Pass } else { Verdict::Fail };
    report.failure = match (&run.blowup, run.exceeded_at) {
        (Some((t, why)), _) => Some(format!("solver failure at t = {t}: {why}")),
        (None, Some(t)) => Some(format!("A(t) > 4 A0 first at t = {t}")),
        _ => None,
    };
    if cfg.sensitivity && cfg.n >= 16 {
        let coarse = Grid::new(cfg.dim, cfg.n / 2)?;
        let coarse_ledger = Ledger::new(&coarse, cutoff, cfg.s, cfg.s + 1.0)?;
        let c0_state = match integrate(&restrict_state(initial, &coarse)?, cfg.t0, cfg.nu, cfg.dt_max, cfg.cfl_target, |_| Ok(()))? {
            Ok(s) => s,
            Err((t, why)) => return Err(Error::BlowUp { time: t, reason: format!("coarse pre-run: {why}") }),
        };
        let ca0 = coarse_ledger.a_of_t(&c0_state);
        let crun = run_window(&c0_state, t_end, &PropagationConfig { trace_cadence: usize::MAX, ..cfg.clone() }, &coarse_ledger, ca0)?;
        let rel = (crun.max_ratio - run.max_ratio).abs() / run.max_ratio.abs().max(f64::MIN_POSITIVE);
        report.resolution = Some(ResolutionReport {
            n_fine: cfg.n,
            n_coarse: cfg.n / 2,
            max_ratio_fine: run.max_ratio,
            max_ratio_coarse: crun.max_ratio,
            relative_change: rel,
            converged: rel <= cfg.convergence_tol && crun.blowup.is_none() == run.blowup.is_none(),
            tail_fraction: crate::mhd::tail_fraction(&run.final_state),
        });
    }
    report.trace = run.trace;
    Ok(report)
}

/// The experiment on rough data drawn from `cfg.seed`.
pub fn propagation_experiment(cfg: &PropagationConfig, cutoff: &DyadicCutoff) -> Result<PropagationReport> {
    cfg.validate()?;
    let grid = Grid::new(cfg.dim, cfg.n)?;
    propagation_run(&rough_mhd_data(&grid, cfg.s, cfg.seed)?, cfg, cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::{random_solenoidal, rng_from_seed, Modulus};
    use num_complex::Complex64;

    fn random_state(n: usize, seed: u64) -> MhdState {
        let g = Grid::new(2, n).unwrap();
        let mut rng = rng_from_seed(seed);
        let u = random_solenoidal(&g, &mut rng, Modulus::Uniform, |k| (1.0 + k * k).powf(-1.3));
        let b = random_solenoidal(&g, &mut rng, Modulus::Uniform, |k| (1.0 + k * k).powf(-1.8));
        MhdState::new(u, b, 0.0).unwrap()
    }

    #[test]
    fn exponent_range() {
        assert!(check_exponents(2, 1.2, 2.2).is_ok());
        assert!(check_exponents(2, 1.2, 1.6).is_ok());
        assert!(check_exponents(2, 1.2, 1.5).is_err());
        assert!(check_exponents(2, 1.2, 2.3).is_err());
        assert!(check_exponents(2, -0.1, 0.9).is_err());
        assert!(check_exponents(3, 0.7, 1.7).is_ok());
        assert!(check_exponents(3, 0.4, 1.4).is_err());
    }

    #[test]
    fn zero_velocity_and_zero_field() {
        let g = Grid::new(2, 32).unwrap();
        let mut st = random_state(32, 1);
        st.u = SolenoidalField::zeros(&g);
        let f = flux_terms(&st, 1.2, 2.2, &DyadicCutoff::default()).unwrap();
        assert_eq!((f.i1, f.i2, f.i3, f.i4), (0.0, 0.0, 0.0, 0.0));

        let mut st = random_state(32, 2);
        st.b = SolenoidalField::zeros(&g);
        let f = flux_terms(&st, 1.2, 2.2, &DyadicCutoff::default()).unwrap();
        assert_eq!((f.i2, f.i3, f.i4), (0.0, 0.0, 0.0));
        let direct = {
            let lp = LittlewoodPaley::new(&g, &DyadicCutoff::default());
            weighted_pair(&block_weights(&lp, 1.2), &transport(&st.u, &st.u).unwrap(), &st.u)
        };
        assert!((f.i1 - direct).abs() <= 1e-13 * direct.abs().max(1e-300));
    }

    #[test]
    fn decompositions_and_cancellations() {
        let st = random_state(32, 3);
        let f = flux_terms(&st, 1.2, 2.2, &DyadicCutoff::default()).unwrap();
        let d = f.decomposition_defects();
        assert!(d.iter().all(|x| *x <= IDENTITY_TOL), "{d:?}");
        let (c1, c3) = f.cancellation_ratios();
        assert!(c1 <= CANCELLATION_TOL && c3 <= CANCELLATION_TOL, "{c1:e} {c3:e}");
        assert!(f.i111.abs() > 0.0 && f.i311.abs() > 0.0);
    }

    #[test]
    fn a_of_single_mode() {
        let g = Grid::new(2, 32).unwrap();
        let amp = [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)];
        let u = SpectralField::single_mode(&g, &[4, 0], &amp).unwrap();
        let mut uf = u.clone();
        uf += &SpectralField::single_mode(&g, &[-4, 0], &amp).unwrap();
        let st = MhdState::new(SolenoidalField::new(uf).unwrap(), SolenoidalField::zeros(&g), 0.0).unwrap();
        // u = (0, cos 4x): one block (q = 2), ‖u‖₂² = 1/2
        let a = a_of_t(&st, 1.0, &DyadicCutoff::default());
        assert!((a - 16.0 * 0.5).abs() < 1e-12, "{a}");
        assert_eq!(a_of_t(&MhdState::zeros(&g), 1.2, &DyadicCutoff::default()), 0.0);
    }

    #[test]
    fn exponents_of_the_bound() {
        assert!((beta(2, 1.2) - 4.0 * 2.2 / 6.4).abs() < 1e-15);
        assert!((theta_product(2, 1.2) - (1.0 - 1.0 / 2.2)).abs() < 1e-15);
        let (b, th) = (beta(3, 0.7), theta_product(3, 0.7));
        assert!((b - 2.0 / (2.0 - th)).abs() < 1e-14);
        assert!(PropagationConstants::new(2, -0.5, 1.0, 0.1, 1.0, 1.0, 1.0, 1.0, [1.0; 3]).is_err());
    }

    fn constants(c_nu: f64, a0: f64) -> PropagationConstants {
        PropagationConstants::new(2, 1.2, 0.05, 0.01, a0, 1.0, c_nu, 1.0, [1.0; 3]).unwrap()
    }

    #[test]
    fn f_vanishes_at_t0_and_increases() {
        let pc = constants(2.0, 1.5);
        assert_eq!(pc.f(pc.t0, 1.0).unwrap(), 0.0);
        let mut last = 0.0;
        for i in 1..200 {
            let t = pc.t0 + 1e-4 * 1.05f64.powi(i);
            let f = pc.f(t, 1.0).unwrap();
            assert!(f >= last);
            last = f;
        }
        assert!(pc.f(pc.t0 * 0.5, 1.0).is_err());
    }

    #[test]
    fn window_is_strict_and_tight() {
        let pc = constants(3.0, 1.0);
        let w = predicted_window(&pc, 1.0, 1.0).unwrap();
        let Window::Admissible { t, f, growth, binding } = w else { panic!("{w:?}") };
        assert!(f.exp() < 2.0 && growth < 1.0);
        assert!(binding.is_some());
        let beyond = t + 2.0 * WINDOW_RTOL * (t - pc.t0);
        assert!(pc.violated(beyond, 1.0).unwrap().is_some());
    }

    #[test]
    fn slack_constants_reach_the_search_end() {
        let pc = constants(1e-12, 1.0);
        let w = predicted_window(&pc, 0.0, 0.5).unwrap();
        assert_eq!(w.end(), Some(0.5));
    }

    #[test]
    fn empty_window_names_the_constraint() {
        let pc = constants(1.0, 1.0);
        let w = predicted_window(&pc, 1.0, 0.005).unwrap();
        assert!(matches!(w, Window::Empty { constraint: WindowConstraint::Search, .. }));
        let huge = constants(1e300, 1.0);
        let w = predicted_window(&huge, 1.0, 1.0).unwrap();
        assert!(matches!(w, Window::Empty { .. }), "{w:?}");
    }
}
