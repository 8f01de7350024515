mod common;

use common::convolve_transport;
use lpmhd::lp::random_broadband;
use lpmhd::spectral::random::{random_field, rng_from_seed, Modulus};
use lpmhd::spectral::{advect, fractional_laplacian, leray_project, transport, Grid, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

fn physical_mean_square(f: &SpectralField) -> f64 {
    let phys = f.to_physical();
    let n = phys[0].len() as f64;
    phys.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() / n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parseval(seed in any::<u64>(), n in prop::sample::select(vec![16usize, 64, 256])) {
        let g = Grid::new(2, n).unwrap();
        let f = random_broadband(&g, 2, &mut rng_from_seed(seed));
        let (phys, coef) = (physical_mean_square(&f), f.norm_sqr());
        prop_assert!((phys - coef).abs() <= 1e-12 * coef);
        // physical values of a Hermitian field are real
        let imag = f.to_physical().iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max);
        prop_assert!(imag <= 1e-13 * f.max_abs().max(1.0) * n as f64);
    }

    #[test]
    fn leray_is_an_orthogonal_projection(seed in any::<u64>()) {
        let g = Grid::new(2, 32).unwrap();
        let v = random_field(&g, 2, &mut rng_from_seed(seed), Modulus::Uniform, |k| k.powf(-1.0));
        let p = leray_project(&v).unwrap();
        prop_assert!(p.as_field().divergence_ratio() <= 1e-14);
        let pp = leray_project(p.as_field()).unwrap();
        prop_assert!((pp.as_field() - p.as_field()).l2_norm() <= 1e-14 * p.as_field().l2_norm());
        // the removed part is orthogonal to the kept part
        let rest = &v - p.as_field();
        prop_assert!(rest.inner(p.as_field()).norm() <= 1e-12 * v.norm_sqr());
    }

    #[test]
    fn transport_matches_direct_convolution(seed in any::<u64>()) {
        let g = Grid::new(2, 16).unwrap();
        let mut rng = rng_from_seed(seed);
        let u = leray_project(&random_broadband(&g, 2, &mut rng)).unwrap();
        let v = random_broadband(&g, 2, &mut rng);
        let fast = advect(&u, &v).unwrap();
        let slow = convolve_transport(u.as_field(), &v);
        prop_assert!((&fast - &slow).l2_norm() <= 1e-12 * slow.l2_norm());
        prop_assert!(fast.is_dealiased());
        prop_assert!(fast.is_hermitian(1e-12));
    }

    #[test]
    fn advection_is_skew(seed in any::<u64>()) {
        // ⟨(u·∇)v, v⟩ = 0 for divergence-free u: the Galerkin product is alias-free
        let g = Grid::new(2, 32).unwrap();
        let mut rng = rng_from_seed(seed);
        let u = leray_project(&random_broadband(&g, 2, &mut rng)).unwrap();
        let v = random_broadband(&g, 2, &mut rng);
        let adv = advect(&u, &v).unwrap();
        prop_assert!(adv.inner(&v).re.abs() <= 1e-12 * adv.l2_norm() * v.l2_norm());
    }
}

#[test]
fn transport_in_three_dimensions() {
    let g = Grid::new(3, 16).unwrap();
    let mut rng = rng_from_seed(3);
    let a = random_broadband(&g, 3, &mut rng);
    let w = random_broadband(&g, 1, &mut rng);
    let fast = transport(&a, &w).unwrap();
    let slow = convolve_transport(&a, &w);
    assert!((&fast - &slow).l2_norm() <= 1e-12 * slow.l2_norm());
}

#[test]
fn fractional_laplacian_of_a_mode() {
    let g = Grid::new(2, 32).unwrap();
    let one = Complex64::new(1.0, 0.0);
    let f = SpectralField::single_mode(&g, &[3, 4], &[one]).unwrap();
    for alpha in [0.5, 1.0, 1.5] {
        let l = fractional_laplacian(&f, alpha).unwrap();
        // |k| = 5
        let expected = 5f64.powf(2.0 * alpha);
        assert!((l.coeff(0, &[3, 4]).re - expected).abs() <= 1e-12 * expected);
        // e^{ik·x} alone: the mirror mode stays empty
        assert_eq!(l.coeff(0, &[-3, -4]).norm(), 0.0);
    }
}
