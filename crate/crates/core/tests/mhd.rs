use lpmhd::mhd::{
    load_checkpoint, orszag_tang, read_checkpoint, run, save_checkpoint, write_checkpoint, MhdState, SolverParams,
    Stepper,
};
use lpmhd::spectral::random::{random_solenoidal, rng_from_seed, Modulus};
use lpmhd::spectral::Grid;
use lpmhd::Error;

fn low_mode_state(g: &Grid, seed: u64, with_b: bool) -> MhdState {
    let mut rng = rng_from_seed(seed);
    let band = |k: f64| if k <= 4.0 { 1.0 } else { 0.0 };
    let u = random_solenoidal(g, &mut rng, Modulus::Uniform, band);
    let b = random_solenoidal(g, &mut rng, Modulus::Uniform, band);
    let b = if with_b { b.scaled(0.5) } else { b.scaled(0.0) };
    // unit energy keeps the CFL number well below the limit
    let e = (u.norm_sqr() + b.norm_sqr()).sqrt();
    MhdState::new(u.scaled(1.0 / e), b.scaled(1.0 / e), 0.0).unwrap()
}

fn advance(st: &MhdState, nu: f64, dt: f64, t: f64) -> MhdState {
    let stepper = Stepper::new(st.grid(), &SolverParams::new(nu, dt)).unwrap();
    let mut s = st.clone();
    for _ in 0..(t / dt).round() as usize {
        s = stepper.step(&s).unwrap();
    }
    s
}

fn distance(a: &MhdState, b: &MhdState) -> f64 {
    ((a.u.as_field() - b.u.as_field()).norm_sqr() + (a.b.as_field() - b.b.as_field()).norm_sqr()).sqrt()
}

#[test]
fn self_convergence_order() {
    for with_b in [false, true] {
        let g = Grid::new(2, 32).unwrap();
        let st = low_mode_state(&g, 4, with_b);
        let (nu, t, dt) = (0.05, 0.2, 0.004);
        let reference = advance(&st, nu, dt / 16.0, t);
        let e1 = distance(&advance(&st, nu, dt, t), &reference);
        let e2 = distance(&advance(&st, nu, dt / 2.0, t), &reference);
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "with_b = {with_b}: observed order {order:.2} ({e1:.2e} -> {e2:.2e})");
    }
}

#[test]
fn energy_rate_is_dissipation() {
    // d/dt (‖u‖² + ‖b‖²) = −2ν‖∇u‖², checked by centered differences
    let g = Grid::new(2, 32).unwrap();
    let nu = 0.05;
    let st = low_mode_state(&g, 8, true);
    let mut last = f64::INFINITY;
    for h in [4e-3, 2e-3, 1e-3] {
        let stepper = Stepper::new(&g, &SolverParams::new(nu, h / 8.0)).unwrap();
        let mut traj = vec![st.clone()];
        for _ in 0..16 {
            traj.push(stepper.step(traj.last().unwrap()).unwrap());
        }
        let (a, m, c) = (&traj[0], &traj[8], &traj[16]);
        let fd = (c.energy() - a.energy()) / (2.0 * h);
        let dissipation = 2.0 * nu * m.u.weighted_norm_sqr(|i| g.k2(i));
        let residual = (fd + dissipation).abs() / dissipation;
        assert!(residual < last / 3.5 || residual < 1e-10, "h = {h}: {residual:.3e} after {last:.3e}");
        last = residual;
    }
    assert!(last < 1e-5);
}

#[test]
fn divergence_stays_small_without_reprojection() {
    let g = Grid::new(2, 64).unwrap();
    let out = run(&orszag_tang(&g).unwrap(), &SolverParams::new(0.05, 2e-3), 0.2).unwrap();
    assert!(out.blowup.is_none());
    assert!(out.max_divergence <= 1e-9, "{}", out.max_divergence);
}

#[test]
fn checkpoint_files_round_trip() {
    let g = Grid::new(2, 32).unwrap();
    let st = advance(&low_mode_state(&g, 2, true), 0.05, 1e-3, 0.01);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.lpmh");
    save_checkpoint(&path, &st).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.t, st.t);
    assert_eq!(distance(&back, &st), 0.0);

    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &st).unwrap();
    assert_eq!(&bytes[..4], b"LPMH");
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(read_checkpoint(bad.as_slice()), Err(Error::Format(_))));
    assert!(read_checkpoint(&bytes[..bytes.len() - 8]).is_err());
}
