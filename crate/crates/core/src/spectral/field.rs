use std::ops::{Add, AddAssign, Deref, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Scalar or vector field on the torus held as Fourier coefficients.
///
/// With `u(x) = Σ_k û_k e^{ik·x}`, the L² norm under the normalized
/// measure is the ℓ² norm of the coefficients. Coefficients of a real
/// field satisfy `û_{-k} = conj(û_k)`; complex fields are allowed so that
/// single exponentials can be represented directly.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid, components: usize) -> Self {
        SpectralField {
            grid: grid.clone(),
            comps: vec![vec![ZERO; grid.len()]; components],
        }
    }

    /// Wraps raw coefficient arrays (one per component, FFT order).
    pub fn from_coefficients(grid: &Grid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Parameter("a field needs at least one component".into()));
        }
        if let Some(c) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch(format!(
                "component of length {} on a grid of {} modes",
                c.len(),
                grid.len()
            )));
        }
        Ok(SpectralField { grid: grid.clone(), comps })
    }

    /// `amplitude[c] · e^{ik·x}` in every component `c`.
    pub fn single_mode(grid: &Grid, k: &[i64], amplitude: &[Complex64]) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::OutOfRange(format!("wavevector {k:?} not on {grid}")))?;
        let mut f = SpectralField::zeros(grid, amplitude.len());
        for (c, a) in amplitude.iter().enumerate() {
            f.comps[c][idx] = *a;
        }
        Ok(f)
    }

    /// Samples a real function at the collocation points and transforms it.
    pub fn from_real_fn<F>(grid: &Grid, components: usize, f: F) -> Self
    where
        F: Fn(&[f64; 3], &mut [f64]),
    {
        let mut values = vec![vec![ZERO; grid.len()]; components];
        let mut out = vec![0.0; components];
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            f(&x, &mut out);
            for c in 0..components {
                values[c][idx] = Complex64::new(out[c], 0.0);
            }
        }
        Self::from_physical(grid, values)
    }

    /// Forward transform of collocation values.
    pub fn from_physical(grid: &Grid, mut values: Vec<Vec<Complex64>>) -> Self {
        let scale = 1.0 / grid.len() as f64;
        for v in values.iter_mut() {
            grid.fft_in_place(v, false);
            v.iter_mut().for_each(|z| *z *= scale);
        }
        SpectralField { grid: grid.clone(), comps: values }
    }

    /// Values at the collocation points, one array per component.
    pub fn to_physical(&self) -> Vec<Vec<Complex64>> {
        self.comps
            .iter()
            .map(|c| {
                let mut v = c.clone();
                self.grid.fft_in_place(&mut v, true);
                v
            })
            .collect()
    }

    /// Values on a grid refined by `factor` (exact trigonometric interpolation).
    pub fn to_physical_refined(&self, factor: usize) -> Vec<Vec<Complex64>> {
        if factor == 1 {
            return self.to_physical();
        }
        self.zero_padded(&self.grid.refined(factor)).to_physical()
    }

    /// Copies every coefficient onto a finer grid, leaving new modes zero.
    pub fn zero_padded(&self, fine: &Grid) -> SpectralField {
        let mut out = SpectralField::zeros(fine, self.comps.len());
        for idx in 0..self.grid.len() {
            let k = self.grid.wavevector(idx);
            if let Some(j) = fine.index_of(&k) {
                for c in 0..self.comps.len() {
                    out.comps[c][j] = self.comps[c][idx];
                }
            }
        }
        out
    }

    /// Keeps the modes retained on a coarser grid and drops the rest.
    pub fn restricted(&self, coarse: &Grid) -> Result<SpectralField> {
        if coarse.dim() != self.grid.dim() || coarse.n() > self.grid.n() {
            return Err(Error::GridMismatch(format!("cannot restrict {} to {}", self.grid, coarse)));
        }
        let mut out = SpectralField::zeros(coarse, self.comps.len());
        for idx in (0..coarse.len()).filter(|&i| coarse.is_retained(i)) {
            if let Some(j) = self.grid.index_of(&coarse.wavevector(idx)) {
                for c in 0..self.comps.len() {
                    out.comps[c][idx] = self.comps[c][j];
                }
            }
        }
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    /// Coefficient of component `c` at wavevector `k` (zero if off-grid).
    pub fn coeff(&self, c: usize, k: &[i64]) -> Complex64 {
        self.grid.index_of(k).map_or(ZERO, |i| self.comps[c][i])
    }

    pub fn is_vector(&self) -> bool {
        self.comps.len() == self.grid.dim()
    }

    pub(crate) fn ensure_vector(&self, what: &str) -> Result<()> {
        if self.is_vector() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "{what} must be a vector field with {} components, got {}",
                self.grid.dim(),
                self.comps.len()
            )))
        }
    }

    /// Multiplies every mode by a real symbol evaluated on the flat index.
    pub fn apply_symbol<F: Fn(usize) -> f64>(&self, symbol: F) -> SpectralField {
        let mut out = self.clone();
        out.apply_symbol_in_place(symbol);
        out
    }

    pub fn apply_symbol_in_place<F: Fn(usize) -> f64>(&mut self, symbol: F) {
        for idx in 0..self.grid.len() {
            let m = symbol(idx);
            for c in self.comps.iter_mut() {
                c[idx] *= m;
            }
        }
    }

    /// Partial derivative along `axis`, applied to every component.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for (idx, z) in c.iter_mut().enumerate() {
                let k = self.grid.wavevector(idx)[axis] as f64;
                *z *= Complex64::new(0.0, k);
            }
        }
        out
    }

    /// `∇·v` of a vector field, as a scalar field.
    pub fn divergence(&self) -> Result<SpectralField> {
        self.ensure_vector("divergence operand")?;
        let mut out = SpectralField::zeros(&self.grid, 1);
        for idx in 0..self.grid.len() {
            let k = self.grid.wavevector(idx);
            let mut acc = ZERO;
            for (j, c) in self.comps.iter().enumerate() {
                acc += Complex64::new(0.0, k[j] as f64) * c[idx];
            }
            out.comps[0][idx] = acc;
        }
        Ok(out)
    }

    /// `max_k |k·û_k| / |û_k|` over modes that carry energy.
    pub fn divergence_defect(&self) -> f64 {
        if !self.is_vector() {
            return f64::INFINITY;
        }
        let floor = self.max_abs() * 1e-14;
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let k = self.grid.wavevector(idx);
            let mut dot = ZERO;
            let mut mag2 = 0.0;
            for (j, c) in self.comps.iter().enumerate() {
                dot += c[idx] * k[j] as f64;
                mag2 += c[idx].norm_sqr();
            }
            let mag = mag2.sqrt();
            if mag > floor && mag > 0.0 {
                worst = worst.max(dot.norm() / mag);
            }
        }
        worst
    }

    /// Global relative defect `‖∇·v‖₂ / ‖∇v‖₂` (zero for a constant field).
    ///
    /// Unlike the per-mode check this stays meaningful for modes carrying
    /// roundoff-level energy, so it is the measure tracked during runs.
    pub fn divergence_ratio(&self) -> f64 {
        if !self.is_vector() {
            return f64::INFINITY;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for idx in 0..self.grid.len() {
            let k = self.grid.wavevector(idx);
            let mut dot = ZERO;
            for (j, c) in self.comps.iter().enumerate() {
                dot += c[idx] * k[j] as f64;
                den += self.grid.k2(idx) * c[idx].norm_sqr();
            }
            num += dot.norm_sqr();
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }

    /// Zeroes every mode removed by the 2/3 rule.
    pub fn dealias(&mut self) {
        for idx in 0..self.grid.len() {
            if !self.grid.is_retained(idx) {
                for c in self.comps.iter_mut() {
                    c[idx] = ZERO;
                }
            }
        }
    }

    pub fn dealiased(&self) -> SpectralField {
        let mut out = self.clone();
        out.dealias();
        out
    }

    pub fn is_dealiased(&self) -> bool {
        (0..self.grid.len())
            .filter(|&i| !self.grid.is_retained(i))
            .all(|i| self.comps.iter().all(|c| c[i] == ZERO))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest `|û_{-k} − conj(û_k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for c in &self.comps {
            for idx in 0..self.grid.len() {
                let m = self.grid.mirror(idx);
                worst = worst.max((c[m] - c[idx].conj()).norm());
            }
        }
        worst / scale
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Projects onto real fields: `û_k ← (û_k + conj(û_{-k}))/2`.
    pub fn symmetrize(&mut self) {
        for c in self.comps.iter_mut() {
            let src = c.clone();
            for (idx, z) in c.iter_mut().enumerate() {
                let m = self.grid.mirror(idx);
                *z = 0.5 * (src[idx] + src[m].conj());
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        // fixed summation order keeps reductions reproducible
        self.comps
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// L² norm under the normalized measure.
    pub fn l2_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩ = Σ_k û_k · conj(v̂_k)` summed over components.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>())
            .sum()
    }

    /// `Σ_k w(k) û_k · conj(v̂_k)` with a real per-mode weight.
    pub fn weighted_inner<F: Fn(usize) -> f64>(&self, other: &SpectralField, w: F) -> Complex64 {
        let mut acc = ZERO;
        for idx in 0..self.grid.len() {
            let wk = w(idx);
            if wk == 0.0 {
                continue;
            }
            for (a, b) in self.comps.iter().zip(&other.comps) {
                acc += a[idx] * b[idx].conj() * wk;
            }
        }
        acc
    }

    /// `Σ_k w(k) |û_k|²` with a real per-mode weight.
    pub fn weighted_norm_sqr<F: Fn(usize) -> f64>(&self, w: F) -> f64 {
        let mut acc = 0.0;
        for idx in 0..self.grid.len() {
            let wk = w(idx);
            if wk == 0.0 {
                continue;
            }
            for c in &self.comps {
                acc += wk * c[idx].norm_sqr();
            }
        }
        acc
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn scale(&mut self, a: f64) {
        self.comps
            .iter_mut()
            .flat_map(|c| c.iter_mut())
            .for_each(|z| *z *= a);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (p, q) in x.iter_mut().zip(y) {
                *p += q * a;
            }
        }
    }

    /// Largest `max_i |k_i|` over modes whose magnitude exceeds `tol · max|û|`.
    pub fn spectral_extent(&self, tol: f64) -> i64 {
        let floor = self.max_abs() * tol;
        let mut ext = 0;
        for idx in 0..self.grid.len() {
            if self.comps.iter().any(|c| c[idx].norm() > floor && c[idx] != ZERO) {
                let k = self.grid.wavevector(idx);
                ext = ext.max(k.iter().map(|c| c.abs()).max().unwrap_or(0));
            }
        }
        ext
    }

    /// Lattice dilation: the coefficient at `k` moves to `factor·k`.
    ///
    /// Physically this is `x ↦ u(factor·x)`; modes that would leave the
    /// grid produce an error.
    pub fn dilate(&self, factor: usize) -> Result<SpectralField> {
        let mut out = SpectralField::zeros(&self.grid, self.comps.len());
        let f = factor as i64;
        for idx in 0..self.grid.len() {
            if self.comps.iter().all(|c| c[idx] == ZERO) {
                continue;
            }
            let k = self.grid.wavevector(idx);
            let target = [k[0] * f, k[1] * f, k[2] * f];
            let j = self.grid.index_of(&target).ok_or_else(|| {
                Error::BandLimit(format!("mode {k:?} leaves the grid under dilation by {factor}"))
            })?;
            for c in 0..self.comps.len() {
                out.comps[c][j] = self.comps[c][idx];
            }
        }
        Ok(out)
    }

    pub(crate) fn same_shape(&self, other: &SpectralField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.comps.len() != other.comps.len() {
            return Err(Error::Parameter(format!(
                "component count mismatch: {} vs {}",
                self.comps.len(),
                other.comps.len()
            )));
        }
        Ok(())
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        self.axpy(-1.0, rhs);
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// Divergence-free vector field.
///
/// Only obtainable through [`SolenoidalField::new`] (which checks every
/// retained mode) or through the Leray projector.
#[derive(Clone, Debug)]
pub struct SolenoidalField {
    field: SpectralField,
}

/// Per-mode tolerance on `|k·û_k| / |û_k|`.
pub const DIVERGENCE_TOL: f64 = 1e-10;

impl SolenoidalField {
    pub fn new(field: SpectralField) -> Result<Self> {
        field.ensure_vector("solenoidal field")?;
        let defect = field.divergence_defect();
        if defect > DIVERGENCE_TOL {
            return Err(Error::Parameter(format!(
                "field is not divergence-free (defect {defect:.3e})"
            )));
        }
        Ok(SolenoidalField { field })
    }

    pub(crate) fn new_unchecked(field: SpectralField) -> Self {
        SolenoidalField { field }
    }

    pub fn zeros(grid: &Grid) -> Self {
        SolenoidalField { field: SpectralField::zeros(grid, grid.dim()) }
    }

    pub fn as_field(&self) -> &SpectralField {
        &self.field
    }

    pub fn into_field(self) -> SpectralField {
        self.field
    }

    /// Sum of two solenoidal fields (closed under addition).
    pub fn plus(&self, other: &SolenoidalField) -> SolenoidalField {
        SolenoidalField { field: &self.field + &other.field }
    }

    pub fn scaled(&self, a: f64) -> SolenoidalField {
        SolenoidalField { field: self.field.scaled(a) }
    }

    /// Any real Fourier multiplier preserves the divergence-free constraint.
    pub fn apply_symbol<F: Fn(usize) -> f64>(&self, symbol: F) -> SolenoidalField {
        SolenoidalField { field: self.field.apply_symbol(symbol) }
    }
}

impl Deref for SolenoidalField {
    type Target = SpectralField;
    fn deref(&self) -> &SpectralField {
        &self.field
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_physical_values() {
        let g = Grid::new(2, 16).unwrap();
        let f = SpectralField::single_mode(&g, &[2, 0], &[Complex64::new(1.0, 0.0)]).unwrap();
        let phys = f.to_physical();
        for idx in 0..g.len() {
            let x = g.point(idx);
            let expect = Complex64::new(0.0, 2.0 * x[0]).exp();
            assert!((phys[0][idx] - expect).norm() < 1e-13);
        }
        assert!((f.l2_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn real_function_is_hermitian() {
        let g = Grid::new(2, 32).unwrap();
        let f = SpectralField::from_real_fn(&g, 1, |x, out| out[0] = (x[0] + 2.0 * x[1]).sin());
        assert!(f.is_hermitian(1e-12));
        let c = f.coeff(0, &[1, 2]);
        assert!((c - Complex64::new(0.0, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn dilation_moves_modes() {
        let g = Grid::new(2, 16).unwrap();
        let f = SpectralField::single_mode(&g, &[1, -2], &[Complex64::new(1.0, 0.0)]).unwrap();
        let d = f.dilate(2).unwrap();
        assert_eq!(d.coeff(0, &[2, -4]), Complex64::new(1.0, 0.0));
        let wide = SpectralField::single_mode(&g, &[5, 0], &[Complex64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(wide.dilate(2), Err(Error::BandLimit(_))));
    }

    #[test]
    fn solenoidal_check_rejects_gradient() {
        let g = Grid::new(2, 16).unwrap();
        let grad = SpectralField::single_mode(
            &g,
            &[1, 0],
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!(SolenoidalField::new(grad).is_err());
        let shear = SpectralField::single_mode(
            &g,
            &[1, 0],
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert!(SolenoidalField::new(shear).is_ok());
    }
}
