use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{SolenoidalField, SpectralField};
use crate::error::{Error, Result};

/// Hermitian-symmetry tolerance for inputs that must be real.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Lebesgue exponent `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::Parameter(format!("Lebesgue exponent must be >= 1, got {p}")))
        }
    }

    /// `1/p`, zero for `p = ∞`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

/// Leray projector `û_k ↦ û_k − k (k·û_k)/|k|²`; the mean mode passes through.
pub fn leray_project(v: &SpectralField) -> Result<SolenoidalField> {
    v.ensure_vector("Leray projection input")?;
    let defect = v.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::SymmetryViolation { defect });
    }
    Ok(SolenoidalField::new_unchecked(project_modes(v)))
}

/// Mode-wise projection without the realness check; used on internally
/// produced right-hand sides, which are real by construction.
pub(crate) fn project_modes(v: &SpectralField) -> SpectralField {
    let grid = v.grid().clone();
    let dim = grid.dim();
    let mut out = v.clone();
    for idx in 0..grid.len() {
        let k2 = grid.k2(idx);
        if k2 == 0.0 {
            continue;
        }
        let k = grid.wavevector(idx);
        let mut dot = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            dot += v.component(j)[idx] * k[j] as f64;
        }
        let dot = dot / k2;
        for j in 0..dim {
            out.component_mut(j)[idx] -= dot * k[j] as f64;
        }
    }
    out
}

/// `(−Δ)^α`: multiplies by `|k|^{2α}`; the zero mode maps to zero.
pub fn fractional_laplacian(u: &SpectralField, alpha: f64) -> Result<SpectralField> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("fractional order must be positive, got {alpha}")));
    }
    let grid = u.grid().clone();
    Ok(u.apply_symbol(|idx| {
        let k2 = grid.k2(idx);
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(alpha)
        }
    }))
}

/// Dealiased `(a·∇)v` for any vector field `a`; `v` may be scalar or vector.
pub fn transport(a: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    a.grid().ensure_same(v.grid())?;
    a.ensure_vector("transporting field")?;
    let grid = a.grid().clone();
    let dim = grid.dim();
    let a_phys = a.to_physical();
    let mut out = Vec::with_capacity(v.components());
    for c in 0..v.components() {
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (j, aj) in a_phys.iter().enumerate().take(dim) {
            let mut d: Vec<Complex64> = v
                .component(c)
                .iter()
                .enumerate()
                .map(|(idx, z)| z * Complex64::new(0.0, grid.wavevector(idx)[j] as f64))
                .collect();
            grid.fft_in_place(&mut d, true);
            for ((s, x), y) in acc.iter_mut().zip(aj).zip(&d) {
                *s += x * y;
            }
        }
        out.push(acc);
    }
    let mut f = SpectralField::from_physical(&grid, out);
    f.dealias();
    Ok(f)
}

/// Dealiased transport term `(u·∇)v` for a divergence-free `u`.
pub fn advect(u: &SolenoidalField, v: &SpectralField) -> Result<SpectralField> {
    transport(u.as_field(), v)
}

/// Multiplier Sobolev norm: homogeneous `(Σ_{k≠0} |k|^{2s}|û_k|²)^{1/2}`,
/// inhomogeneous `(Σ_k (1+|k|²)^s |û_k|²)^{1/2}`.
pub fn sobolev_norm_direct(u: &SpectralField, s: f64, homogeneous: bool) -> f64 {
    let grid = u.grid().clone();
    u.weighted_norm_sqr(|idx| sobolev_weight(grid.k2(idx), s, homogeneous))
        .sqrt()
}

#[inline]
pub(crate) fn sobolev_weight(k2: f64, s: f64, homogeneous: bool) -> f64 {
    if homogeneous {
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(s)
        }
    } else {
        (1.0 + k2).powf(s)
    }
}

/// Max of the pointwise magnitude over the collocation points.
pub fn linf_norm(u: &SpectralField) -> f64 {
    lp_norm(u, Exponent::Infinity, 1)
}

/// `L^p` norm (normalized measure) evaluated on the grid refined by `oversample`.
///
/// Vector fields use the pointwise Euclidean magnitude.
pub fn lp_norm(u: &SpectralField, p: Exponent, oversample: usize) -> f64 {
    if matches!(p, Exponent::Finite(q) if q == 2.0) {
        return u.l2_norm();
    }
    let phys = u.to_physical_refined(oversample);
    let npts = phys[0].len();
    let mag = |i: usize| phys.iter().map(|c| c[i].norm_sqr()).sum::<f64>().sqrt();
    match p {
        Exponent::Infinity => (0..npts).map(mag).fold(0.0, f64::max),
        Exponent::Finite(q) => {
            let sum: f64 = (0..npts).map(|i| mag(i).powf(q)).sum();
            (sum / npts as f64).powf(1.0 / q)
        }
    }
}

/// Gradient matrix magnitude `max_x (Σ_{ij} |∂_j u_i(x)|²)^{1/2}` on the collocation grid.
pub fn gradient_linf(u: &SpectralField) -> f64 {
    let grid = u.grid();
    let mut total = vec![0.0; grid.len()];
    for j in 0..grid.dim() {
        for comp in u.derivative(j).to_physical() {
            for (t, z) in total.iter_mut().zip(&comp) {
                *t += z.norm_sqr();
            }
        }
    }
    total.into_iter().fold(0.0, f64::max).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn gradient_is_annihilated() {
        let g = Grid::new(2, 32).unwrap();
        // ∇ sin(x₁) = (cos x₁, 0)
        let v = SpectralField::from_real_fn(&g, 2, |x, out| {
            out[0] = x[0].cos();
            out[1] = 0.0;
        });
        let p = leray_project(&v).unwrap();
        assert!(p.l2_norm() < 1e-15);
    }

    #[test]
    fn solenoidal_input_is_fixed() {
        let g = Grid::new(2, 32).unwrap();
        let v = SpectralField::from_real_fn(&g, 2, |x, out| {
            out[0] = x[1].sin() + 0.3;
            out[1] = (2.0 * x[0]).cos();
        });
        let p = leray_project(&v).unwrap();
        assert!((p.as_field() - &v).l2_norm() <= 1e-12 * v.l2_norm());
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let g = Grid::new(2, 16).unwrap();
        let v = SpectralField::single_mode(&g, &[1, 1], &[one(), one()]).unwrap();
        assert!(matches!(leray_project(&v), Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn fractional_laplacian_examples() {
        let g = Grid::new(2, 16).unwrap();
        let u = SpectralField::single_mode(&g, &[2, 0], &[one()]).unwrap();
        let half = fractional_laplacian(&u, 0.5).unwrap();
        assert!((half.coeff(0, &[2, 0]) - 2.0 * one()).norm() < 1e-14);
        let full = fractional_laplacian(&u, 1.0).unwrap();
        assert!((full.coeff(0, &[2, 0]) - 4.0 * one()).norm() < 1e-14);
        let c = SpectralField::single_mode(&g, &[0, 0], &[one()]).unwrap();
        assert_eq!(fractional_laplacian(&c, 0.7).unwrap().l2_norm(), 0.0);
        assert!(fractional_laplacian(&u, 0.0).is_err());
        assert!(fractional_laplacian(&u, -1.0).is_err());
    }

    #[test]
    fn constant_coefficient_transport() {
        let g = Grid::new(2, 32).unwrap();
        let c = 0.75;
        let u = SolenoidalField::new(
            SpectralField::single_mode(&g, &[0, 0], &[Complex64::new(c, 0.0), Complex64::new(0.0, 0.0)])
                .unwrap(),
        )
        .unwrap();
        let v = SpectralField::single_mode(&g, &[3, -2], &[one()]).unwrap();
        let w = advect(&u, &v).unwrap();
        let expect = Complex64::new(0.0, c * 3.0);
        assert!((w.coeff(0, &[3, -2]) - expect).norm() < 1e-13);
        assert!((w.l2_norm() - expect.norm()).abs() < 1e-13);
        let flat = SpectralField::single_mode(&g, &[0, 0], &[one()]).unwrap();
        assert!(advect(&u, &flat).unwrap().l2_norm() < 1e-15);
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid::new(2, 16).unwrap();
        let u = SpectralField::single_mode(&g, &[2, 0], &[one()]).unwrap();
        assert!((sobolev_norm_direct(&u, 1.0, true) - 2.0).abs() < 1e-14);
        assert!((sobolev_norm_direct(&u, 1.0, false) - 5f64.sqrt()).abs() < 1e-14);
        assert_eq!(sobolev_norm_direct(&SpectralField::zeros(&g, 1), 1.5, true), 0.0);
    }

    #[test]
    fn linf_examples() {
        let g = Grid::new(2, 16).unwrap();
        let u = SpectralField::from_real_fn(&g, 1, |x, out| out[0] = x[0].cos());
        assert!((linf_norm(&u) - 1.0).abs() < 1e-14);
        assert_eq!(linf_norm(&SpectralField::zeros(&g, 1)), 0.0);
        let w = SpectralField::from_real_fn(&g, 1, |x, out| out[0] = x[0].cos() + (2.0 * x[0]).cos());
        let coarse = linf_norm(&w);
        let fine = lp_norm(&w, Exponent::Infinity, 8);
        assert!((1.0..=2.0).contains(&coarse));
        assert!((coarse - fine).abs() <= 1e-6);
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!(Exponent::new(f64::INFINITY).unwrap(), Exponent::Infinity);
        assert!(Exponent::new(0.5).is_err());
        assert_eq!(Exponent::new(4.0).unwrap().reciprocal(), 0.25);
    }
}
