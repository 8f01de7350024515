//! Pseudospectral integrator for viscous, non-resistive MHD on the torus:
//!
//! ```text
//! u_t + u·∇u − b·∇b + ∇p = νΔu,   b_t + u·∇b − b·∇u = 0,   ∇·u = ∇·b = 0.
//! ```
//!
//! Time stepping is integrating-factor RK4: the viscous factor
//! `e^{−ν|k|²Δt}` is applied exactly to `u`, transport is explicit.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    leray_project, linf_norm, project_modes, sobolev_weight, Grid, SolenoidalField, SpectralField,
};

/// Tolerance on `‖∇·f‖₂/‖∇f‖₂` for states during a run.
pub const RUN_DIVERGENCE_TOL: f64 = 1e-9;
/// Blow-up threshold relative to the initial regularity functional.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct MhdState {
    pub u: SolenoidalField,
    pub b: SolenoidalField,
    pub t: f64,
}

impl MhdState {
    pub fn new(u: SolenoidalField, b: SolenoidalField, t: f64) -> Result<Self> {
        u.same_shape(&b)?;
        u.ensure_vector("velocity")?;
        Ok(MhdState { u, b, t })
    }

    pub fn zeros(grid: &Grid) -> Self {
        MhdState { u: SolenoidalField::zeros(grid), b: SolenoidalField::zeros(grid), t: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `‖u‖₂² + ‖b‖₂²`.
    pub fn energy(&self) -> f64 {
        self.u.norm_sqr() + self.b.norm_sqr()
    }

    /// Larger of the two relative divergence defects `‖∇·f‖₂/‖∇f‖₂`.
    pub fn divergence_defect(&self) -> f64 {
        self.u.divergence_ratio().max(self.b.divergence_ratio())
    }

    fn is_finite(&self) -> bool {
        [&self.u, &self.b]
            .iter()
            .all(|f| f.coefficients().iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub nu: f64,
    pub dt: f64,
    /// Record diagnostics every `cadence` steps.
    pub cadence: usize,
    /// Re-project `b` after each step (off by default; drift is monitored).
    pub reproject_b: bool,
    /// Regularity index of the blow-up monitor `‖u‖²_{Ḣˢ} + ‖b‖²_{Ḣ^{s+1}}`.
    pub monitor_s: f64,
}

impl SolverParams {
    pub const CFL_LIMIT: f64 = 0.5;

    pub fn new(nu: f64, dt: f64) -> Self {
        SolverParams { nu, dt, cadence: 1, reproject_b: false, monitor_s: 1.2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::Parameter(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Parameter(format!("time step must be positive, got {}", self.dt)));
        }
        if self.cadence == 0 {
            return Err(Error::Parameter("diagnostic cadence must be at least 1".into()));
        }
        Ok(())
    }
}

/// `Δt · max(|u|, |b|) · N` on the collocation grid. The magnetic field is
/// included because Alfvén waves travel at speed `|b|`.
pub fn cfl_number(state: &MhdState, dt: f64) -> f64 {
    let speed = linf_norm(&state.u).max(linf_norm(&state.b));
    dt * speed * state.grid().n() as f64
}

pub fn check_cfl(state: &MhdState, params: &SolverParams) -> Result<()> {
    let value = cfl_number(state, params.dt);
    if value > SolverParams::CFL_LIMIT {
        Err(Error::Cfl { value, limit: SolverParams::CFL_LIMIT })
    } else {
        Ok(())
    }
}

/// Physical values of `f` and of every `∂_j f_i` (indexed `[j][i]`).
fn physical_with_gradient(f: &SpectralField) -> (Vec<Vec<Complex64>>, Vec<Vec<Vec<Complex64>>>) {
    let dim = f.grid().dim();
    let grad = (0..dim).map(|j| f.derivative(j).to_physical()).collect();
    (f.to_physical(), grad)
}

/// Transport part only: `(P(−u·∇u + b·∇b), −u·∇b + b·∇u)`, assembled in
/// physical space from one set of transforms and dealiased once.
fn nonlinear(u: &SpectralField, b: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    u.same_shape(b)?;
    let grid = u.grid().clone();
    let dim = grid.dim();
    let (up, gu) = physical_with_gradient(u);
    let (bp, gb) = physical_with_gradient(b);
    let mut du = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; dim];
    let mut db = du.clone();
    for i in 0..dim {
        for j in 0..dim {
            let (uj, bj) = (&up[j], &bp[j]);
            let (dui, dbi) = (&gu[j][i], &gb[j][i]);
            for x in 0..grid.len() {
                du[i][x] += bj[x] * dbi[x] - uj[x] * dui[x];
                db[i][x] += bj[x] * dui[x] - uj[x] * dbi[x];
            }
        }
    }
    let mut du = SpectralField::from_physical(&grid, du);
    let mut db = SpectralField::from_physical(&grid, db);
    du.dealias();
    db.dealias();
    Ok((project_modes(&du), db))
}

/// `du/dt = P(−u·∇u + b·∇b) + νΔu`, `db/dt = −u·∇b + b·∇u`; products dealiased.
pub fn rhs(state: &MhdState, nu: f64) -> Result<(SpectralField, SpectralField)> {
    let grid = state.grid().clone();
    let (mut du, db) = nonlinear(&state.u, &state.b)?;
    du.axpy(1.0, &state.u.apply_symbol(|idx| -nu * grid.k2(idx)));
    Ok((du, db))
}

/// Right-hand side of the velocity equation with `b = 0`, assembled in
/// divergence form `−P∇·(u⊗u) + νΔu`; an independent path for checks.
pub fn navier_stokes_rhs(u: &SolenoidalField, nu: f64) -> Result<SpectralField> {
    let grid = u.grid().clone();
    let dim = grid.dim();
    let phys = u.to_physical();
    let mut out = SpectralField::zeros(&grid, dim);
    for i in 0..dim {
        for j in 0..dim {
            let prod: Vec<Complex64> = phys[i].iter().zip(&phys[j]).map(|(a, b)| a * b).collect();
            let mut flux = SpectralField::from_physical(&grid, vec![prod]);
            flux.dealias();
            let d = flux.derivative(j);
            for (o, z) in out.component_mut(i).iter_mut().zip(d.component(0)) {
                *o -= z;
            }
        }
    }
    let mut out = project_modes(&out);
    out.axpy(1.0, &u.apply_symbol(|idx| -nu * grid.k2(idx)));
    Ok(out)
}

/// Precomputed integrating factors for one `(grid, ν, Δt)`.
#[derive(Clone, Debug)]
pub struct Stepper {
    params: SolverParams,
    full: Vec<f64>,
    half: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &Grid, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        let full = grid.k2_table().iter().map(|k2| (-params.nu * k2 * params.dt).exp()).collect();
        let half = grid.k2_table().iter().map(|k2| (-params.nu * k2 * params.dt * 0.5).exp()).collect();
        Ok(Stepper { params: params.clone(), full, half })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    fn factor(&self, f: &SpectralField, half: bool) -> SpectralField {
        let tab = if half { &self.half } else { &self.full };
        f.apply_symbol(|idx| tab[idx])
    }

    /// One IF-RK4 step; checks CFL before and finiteness after.
    pub fn step(&self, state: &MhdState) -> Result<MhdState> {
        check_cfl(state, &self.params)?;
        let h = self.params.dt;
        let (u0, b0) = (state.u.as_field(), state.b.as_field());

        let (k1u, k1b) = nonlinear(u0, b0)?;
        let mut ua = u0.clone();
        ua.axpy(0.5 * h, &k1u);
        let ua = self.factor(&ua, true);
        let mut ba = b0.clone();
        ba.axpy(0.5 * h, &k1b);

        let (k2u, k2b) = nonlinear(&ua, &ba)?;
        let mut ub = self.factor(u0, true);
        ub.axpy(0.5 * h, &k2u);
        let mut bb = b0.clone();
        bb.axpy(0.5 * h, &k2b);

        let (k3u, k3b) = nonlinear(&ub, &bb)?;
        let mut uc = self.factor(u0, false);
        uc.axpy(h, &self.factor(&k3u, true));
        let mut bc = b0.clone();
        bc.axpy(h, &k3b);

        let (k4u, k4b) = nonlinear(&uc, &bc)?;
        let mut mid = k2u;
        mid += &k3u;
        let mut u1 = self.factor(u0, false);
        u1.axpy(h / 6.0, &self.factor(&k1u, false));
        u1.axpy(h / 3.0, &self.factor(&mid, true));
        u1.axpy(h / 6.0, &k4u);
        let mut b1 = b0.clone();
        b1.axpy(h / 6.0, &k1b);
        b1.axpy(h / 3.0, &k2b);
        b1.axpy(h / 3.0, &k3b);
        b1.axpy(h / 6.0, &k4b);
        if self.params.reproject_b {
            b1 = project_modes(&b1);
        }

        let next = MhdState {
            u: SolenoidalField::new_unchecked(u1),
            b: SolenoidalField::new_unchecked(b1),
            t: state.t + h,
        };
        if !next.is_finite() {
            return Err(Error::BlowUp { time: next.t, reason: "non-finite coefficients".into() });
        }
        Ok(next)
    }
}

/// Convenience wrapper building a one-off [`Stepper`].
pub fn step(state: &MhdState, params: &SolverParams) -> Result<MhdState> {
    Stepper::new(state.grid(), params)?.step(state)
}

/// `‖u‖²_{Ḣˢ} + ‖b‖²_{Ḣ^{s+1}}` from multiplier norms (blow-up monitor).
pub fn regularity_monitor(state: &MhdState, s: f64) -> f64 {
    let g = state.grid().clone();
    state.u.weighted_norm_sqr(|i| sobolev_weight(g.k2(i), s, true))
        + state.b.weighted_norm_sqr(|i| sobolev_weight(g.k2(i), s + 1.0, true))
}

/// One row of the diagnostic series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub energy_u: f64,
    pub energy_b: f64,
    /// `‖∇u‖₂²`
    pub dissipation: f64,
    pub div_u: f64,
    pub div_b: f64,
    pub monitor: f64,
    pub mean_u: Vec<f64>,
    pub mean_b: Vec<f64>,
}

impl DiagnosticRecord {
    pub fn of(state: &MhdState, monitor_s: f64) -> Self {
        let g = state.grid().clone();
        let mean = |f: &SpectralField| (0..f.components()).map(|c| f.component(c)[0].re).collect();
        DiagnosticRecord {
            t: state.t,
            energy_u: state.u.norm_sqr(),
            energy_b: state.b.norm_sqr(),
            dissipation: state.u.weighted_norm_sqr(|i| g.k2(i)),
            div_u: state.u.divergence_ratio(),
            div_b: state.b.divergence_ratio(),
            monitor: regularity_monitor(state, monitor_s),
            mean_u: mean(&state.u),
            mean_b: mean(&state.b),
        }
    }
}

/// Writes the series as CSV with one named column per scalar.
pub fn write_diagnostics_csv(path: &Path, rows: &[DiagnosticRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "energy_u", "energy_b", "dissipation", "div_u", "div_b", "monitor"])?;
    for r in rows {
        w.write_record(
            [r.t, r.energy_u, r.energy_b, r.dissipation, r.div_u, r.div_b, r.monitor].map(|x| format!("{x:.17e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Result of a run: the last valid state, the series and an optional blow-up.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: MhdState,
    pub history: Vec<DiagnosticRecord>,
    pub blowup: Option<(f64, String)>,
    pub max_divergence: f64,
}

/// Integrates until `t_end` (to within half a step). Blow-up — a
/// non-finite state or the monitor exceeding `10⁶×` its initial value —
/// ends the run and is reported, not raised. CFL violations are raised.
pub fn run(initial: &MhdState, params: &SolverParams, t_end: f64) -> Result<RunOutcome> {
    run_with(initial, params, t_end, |_| {})
}

/// [`run`] with a callback invoked on every state (including the first).
pub fn run_with<F: FnMut(&MhdState)>(
    initial: &MhdState,
    params: &SolverParams,
    t_end: f64,
    mut visit: F,
) -> Result<RunOutcome> {
    let stepper = Stepper::new(initial.grid(), params)?;
    let steps = ((t_end - initial.t) / params.dt).round().max(0.0) as usize;
    let first = DiagnosticRecord::of(initial, params.monitor_s);
    let threshold = BLOWUP_FACTOR * first.monitor;
    let mut max_div = first.div_u.max(first.div_b);
    let mut history = vec![first];
    let mut state = initial.clone();
    visit(&state);
    for n in 1..=steps {
        let next = match stepper.step(&state) {
            Ok(s) => s,
            Err(Error::BlowUp { time, reason }) => {
                return Ok(RunOutcome { state, history, blowup: Some((time, reason)), max_divergence: max_div })
            }
            Err(e) => return Err(e),
        };
        let record = n % params.cadence == 0 || n == steps;
        let monitor = regularity_monitor(&next, params.monitor_s);
        if threshold > 0.0 && monitor > threshold {
            let reason = format!("regularity monitor {monitor:.3e} exceeds {BLOWUP_FACTOR:.0e} x initial");
            return Ok(RunOutcome { state, history, blowup: Some((next.t, reason)), max_divergence: max_div });
        }
        state = next;
        visit(&state);
        if record {
            let r = DiagnosticRecord::of(&state, params.monitor_s);
            max_div = max_div.max(r.div_u).max(r.div_b);
            history.push(r);
        }
    }
    Ok(RunOutcome { state, history, blowup: None, max_divergence: max_div })
}

/// Energy-balance residuals `D(t₀, t)` over every recorded pair.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub initial_energy: f64,
    /// `D(t_first, t_last)`
    pub total: f64,
    pub max_abs: f64,
    pub max_positive: f64,
    pub worst_pair: (f64, f64),
    /// Fraction of the final energy on the outermost retained band.
    pub tail_fraction: f64,
    /// Set when `max_positive` exceeds `1e−6 ×` the initial energy or the
    /// tail fraction exceeds `1e−4` (under-resolution).
    pub flagged: bool,
}

pub const ENERGY_TOL: f64 = 1e-6;
pub const TAIL_TOL: f64 = 1e-4;

/// `D(t₀,t) = E(t) + 2ν∫_{t₀}^t ‖∇u‖₂² ds − E(t₀)` with trapezoidal quadrature.
pub fn energy_report(history: &[DiagnosticRecord], nu: f64, tail_fraction: f64) -> EnergyReport {
    let energy: Vec<f64> = history.iter().map(|r| r.energy_u + r.energy_b).collect();
    let mut cum = vec![0.0; history.len()];
    for i in 1..history.len() {
        let dt = history[i].t - history[i - 1].t;
        cum[i] = cum[i - 1] + 0.5 * dt * (history[i].dissipation + history[i - 1].dissipation);
    }
    let d = |i: usize, j: usize| energy[j] + 2.0 * nu * (cum[j] - cum[i]) - energy[i];
    let (mut max_abs, mut max_pos, mut worst) = (0.0f64, 0.0f64, (0.0, 0.0));
    for i in 0..history.len() {
        for j in i + 1..history.len() {
            let v = d(i, j);
            if v.abs() > max_abs {
                max_abs = v.abs();
                worst = (history[i].t, history[j].t);
            }
            max_pos = max_pos.max(v);
        }
    }
    let e0 = energy.first().copied().unwrap_or(0.0);
    let total = if history.len() > 1 { d(0, history.len() - 1) } else { 0.0 };
    EnergyReport {
        initial_energy: e0,
        total,
        max_abs,
        max_positive: max_pos,
        worst_pair: worst,
        tail_fraction,
        flagged: max_pos > ENERGY_TOL * e0 || tail_fraction > TAIL_TOL,
    }
}

/// Energy fraction of `u` and `b` in the outer third of the retained box
/// (`max_i |k_i| > 2⌊N/3⌋/3`).
pub fn tail_fraction(state: &MhdState) -> f64 {
    let g = state.grid().clone();
    let edge = (2 * g.dealias_cutoff() / 3) as i64;
    let outer = |i: usize| {
        let k = g.wavevector(i);
        if k.iter().any(|c| c.abs() > edge) {
            1.0
        } else {
            0.0
        }
    };
    let total = state.energy();
    if total == 0.0 {
        return 0.0;
    }
    (state.u.weighted_norm_sqr(outer) + state.b.weighted_norm_sqr(outer)) / total
}

/// `λ·f(λx)` on the lattice.
fn rescale(f: &SpectralField, lambda: usize) -> Result<SpectralField> {
    Ok(f.dilate(lambda)?.scaled(lambda as f64))
}

/// Keeps the modes that stay retained after dilation by `lambda`.
fn band(f: &SpectralField, lambda: usize) -> SpectralField {
    let g = f.grid().clone();
    let cap = (g.dealias_cutoff() / lambda) as i64;
    f.apply_symbol(|i| {
        if g.wavevector(i).iter().all(|c| c.abs() <= cap) {
            1.0
        } else {
            0.0
        }
    })
}

/// Relative mismatch `‖rhs(z_λ) − λ³·(rhs z)(λ·)‖ / ‖λ³·(rhs z)(λ·)‖` with
/// `z_λ = λz(λx)`; modes of `(rhs z)(λ·)` beyond the retained box are dropped.
pub fn scaling_residual(state: &MhdState, lambda: usize, nu: f64) -> Result<f64> {
    if lambda == 0 {
        return Err(Error::Parameter("scale must be a positive integer".into()));
    }
    let g = state.grid();
    if !g.n().is_multiple_of(lambda) {
        return Err(Error::Parameter(format!("grid size {} not divisible by {lambda}", g.n())));
    }
    let cap = (g.n() / (3 * lambda)) as i64;
    for f in [state.u.as_field(), state.b.as_field()] {
        let ext = f.spectral_extent(1e-14);
        if ext > cap {
            return Err(Error::BandLimit(format!("state reaches |k_i| = {ext}, scale {lambda} needs <= {cap}")));
        }
    }
    let scaled = MhdState {
        u: SolenoidalField::new_unchecked(rescale(&state.u, lambda)?),
        b: SolenoidalField::new_unchecked(rescale(&state.b, lambda)?),
        t: state.t / (lambda * lambda) as f64,
    };
    let (su, sb) = rhs(&scaled, nu)?;
    let (ou, ob) = rhs(state, nu)?;
    let l3 = (lambda * lambda * lambda) as f64;
    let tu = band(&ou, lambda).dilate(lambda)?.scaled(l3);
    let tb = band(&ob, lambda).dilate(lambda)?.scaled(l3);
    let num = (&su - &tu).norm_sqr() + (&sb - &tb).norm_sqr();
    let den = tu.norm_sqr() + tb.norm_sqr();
    if den == 0.0 {
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}

/// Orszag–Tang vortex: `u = (−sin y, sin x)`, `b = (−sin y, sin 2x)`
/// (extended by zero in the third component when `n = 3`).
pub fn orszag_tang(grid: &Grid) -> Result<MhdState> {
    let u = SpectralField::from_real_fn(grid, grid.dim(), |x, out| {
        out.fill(0.0);
        out[0] = -x[1].sin();
        out[1] = x[0].sin();
    });
    let b = SpectralField::from_real_fn(grid, grid.dim(), |x, out| {
        out.fill(0.0);
        out[0] = -x[1].sin();
        out[1] = (2.0 * x[0]).sin();
    });
    MhdState::new(leray_project(&u)?, leray_project(&b)?, 0.0)
}

const MAGIC: &[u8; 4] = b"LPMH";
const VERSION: u8 = 1;

/// Binary checkpoint:
///
/// ```text
/// offset  size  field
/// 0       4     magic "LPMH"
/// 4       1     format version (1)
/// 5       1     dimension n
/// 6       4     points per axis N (u32, little-endian)
/// 10      8     time t (f64, little-endian)
/// 18      …     u components 0..n, then b components 0..n; each holds N^n
///               coefficients (re, im as f64 little-endian) in flat grid
///               order with axis 0 varying fastest (FFT order per axis)
/// ```
pub fn write_checkpoint<W: Write>(mut w: W, state: &MhdState) -> Result<()> {
    let g = state.grid();
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, g.dim() as u8])?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&state.t.to_le_bytes())?;
    for f in [&state.u, &state.b] {
        for comp in f.coefficients() {
            for z in comp {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<MhdState> {
    let mut head = [0u8; 18];
    r.read_exact(&mut head).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    if head[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", head[4])));
    }
    let dim = head[5] as usize;
    let n = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    let t = f64::from_le_bytes(head[10..18].try_into().unwrap());
    let grid = Grid::new(dim, n).map_err(|e| Error::Format(format!("bad grid in header: {e}")))?;
    let mut read_field = || -> Result<SpectralField> {
        let mut comps = Vec::with_capacity(dim);
        let mut buf = vec![0u8; 16 * grid.len()];
        for _ in 0..dim {
            r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
            comps.push(
                buf.chunks_exact(16)
                    .map(|c| {
                        Complex64::new(
                            f64::from_le_bytes(c[0..8].try_into().unwrap()),
                            f64::from_le_bytes(c[8..16].try_into().unwrap()),
                        )
                    })
                    .collect(),
            );
        }
        SpectralField::from_coefficients(&grid, comps)
    };
    let u = read_field()?;
    let b = read_field()?;
    Ok(MhdState { u: SolenoidalField::new_unchecked(u), b: SolenoidalField::new_unchecked(b), t })
}

pub fn save_checkpoint(path: &Path, state: &MhdState) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(&mut w, state)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MhdState> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::{random_solenoidal, rng_from_seed, Modulus};

    fn random_state(grid: &Grid, seed: u64, cap: f64) -> MhdState {
        let mut rng = rng_from_seed(seed);
        let amp = |k: f64| if k <= cap { 1.0 / (1.0 + k * k) } else { 0.0 };
        let u = random_solenoidal(grid, &mut rng, Modulus::Uniform, amp);
        let b = random_solenoidal(grid, &mut rng, Modulus::Uniform, amp);
        MhdState::new(u, b, 0.0).unwrap()
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = Grid::new(2, 16).unwrap();
        let z = MhdState::zeros(&g);
        let (du, db) = rhs(&z, 0.1).unwrap();
        assert_eq!(du.l2_norm() + db.l2_norm(), 0.0);
        let next = step(&z, &SolverParams::new(0.1, 0.01)).unwrap();
        assert_eq!(next.energy(), 0.0);
    }

    #[test]
    fn aligned_state_freezes_b() {
        let g = Grid::new(2, 32).unwrap();
        let s = random_state(&g, 1, 8.0);
        let aligned = MhdState::new(s.u.clone(), s.u.clone(), 0.0).unwrap();
        let (_, db) = rhs(&aligned, 0.1).unwrap();
        assert_eq!(db.l2_norm(), 0.0);
    }

    #[test]
    fn navier_stokes_paths_agree() {
        let g = Grid::new(2, 32).unwrap();
        let s = random_state(&g, 2, 10.0);
        let pure = MhdState::new(s.u.clone(), SolenoidalField::zeros(&g), 0.0).unwrap();
        let (du, _) = rhs(&pure, 0.07).unwrap();
        let other = navier_stokes_rhs(&s.u, 0.07).unwrap();
        assert!((&du - &other).l2_norm() <= 1e-12 * du.l2_norm());
    }

    #[test]
    fn cfl_is_enforced() {
        let g = Grid::new(2, 32).unwrap();
        let s = orszag_tang(&g).unwrap();
        let err = step(&s, &SolverParams::new(0.1, 0.1)).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
    }

    #[test]
    fn scaling_examples() {
        let g = Grid::new(2, 64).unwrap();
        let s = random_state(&g, 3, 8.0);
        assert_eq!(scaling_residual(&s, 1, 0.1).unwrap(), 0.0);
        let r = scaling_residual(&s, 2, 0.1).unwrap();
        assert!(r <= 1e-9, "{r}");
        let wide = random_state(&g, 3, 30.0);
        assert!(matches!(scaling_residual(&wide, 2, 0.1), Err(Error::BandLimit(_))));
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = Grid::new(2, 16).unwrap();
        let mut s = random_state(&g, 4, 5.0);
        s.t = 0.375;
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s).unwrap();
        assert_eq!(&buf[0..4], b"LPMH");
        assert_eq!(buf.len(), 18 + 4 * 16 * 256);
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.t, 0.375);
        assert_eq!(back.u.coefficients(), s.u.coefficients());
        assert_eq!(back.b.coefficients(), s.b.coefficients());
        buf[0] = b'X';
        assert!(matches!(read_checkpoint(buf.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_checkpoint(&buf[..10]), Err(Error::Format(_))));
    }

    #[test]
    fn energy_report_of_zero_run() {
        let g = Grid::new(2, 16).unwrap();
        let out = run(&MhdState::zeros(&g), &SolverParams::new(0.1, 0.01), 0.05).unwrap();
        let rep = energy_report(&out.history, 0.1, 0.0);
        assert_eq!(rep.max_abs, 0.0);
        assert!(!rep.flagged);
        assert_eq!(out.history.len(), 6);
    }
}
