//! Seeded random fields used by ensembles and initial data.

use num_complex::Complex64;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{SolenoidalField, SpectralField};
use super::grid::Grid;
use super::ops::project_modes;

/// Deterministic generator used everywhere a seed is configured.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// How the modulus of each coefficient is drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Modulus {
    /// `|û_k|` equals the prescribed amplitude exactly.
    Exact,
    /// Amplitude times an independent uniform factor in `[0, 1)`.
    Uniform,
}

/// Real random field on the retained (2/3-rule) modes, `k ≠ 0`.
///
/// Each pair `(k, −k)` receives one random phase, so the result is exactly
/// Hermitian-symmetric. `amplitude` maps `|k|` to the target modulus.
pub fn random_field<R, F>(grid: &Grid, components: usize, rng: &mut R, modulus: Modulus, amplitude: F) -> SpectralField
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let mut f = SpectralField::zeros(grid, components);
    for idx in 0..grid.len() {
        let m = grid.mirror(idx);
        if m < idx || grid.k2(idx) == 0.0 || !grid.is_retained(idx) {
            continue;
        }
        let a = amplitude(grid.kmag(idx));
        for c in 0..components {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let r = match modulus {
                Modulus::Exact => a,
                Modulus::Uniform => a * rng.random::<f64>(),
            };
            let z = Complex64::from_polar(r, theta);
            f.component_mut(c)[idx] = z;
            if m != idx {
                f.component_mut(c)[m] = z.conj();
            } else {
                f.component_mut(c)[idx] = Complex64::new(z.re, 0.0);
            }
        }
    }
    f
}

/// Leray-projected random vector field.
pub fn random_solenoidal<R, F>(grid: &Grid, rng: &mut R, modulus: Modulus, amplitude: F) -> SolenoidalField
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let v = random_field(grid, grid.dim(), rng, modulus, amplitude);
    SolenoidalField::new_unchecked(project_modes(&v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fields_are_real_and_reproducible() {
        let g = Grid::new(2, 32).unwrap();
        let a = random_field(&g, 2, &mut rng_from_seed(3), Modulus::Uniform, |k| 1.0 / (1.0 + k));
        let b = random_field(&g, 2, &mut rng_from_seed(3), Modulus::Uniform, |k| 1.0 / (1.0 + k));
        assert_eq!(a.hermitian_defect(), 0.0);
        assert!(a.is_dealiased());
        assert_eq!(a.component(1), b.component(1));
        let s = random_solenoidal(&g, &mut rng_from_seed(4), Modulus::Exact, |_| 1.0);
        assert!(s.divergence_defect() < 1e-13);
        assert!(s.hermitian_defect() < 1e-15);
    }
}
