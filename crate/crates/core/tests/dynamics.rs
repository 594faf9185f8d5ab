use cnls_core::dynamics::*;
use cnls_core::effective::{build, TorusParams};
use cnls_core::phase_space::{mass, momentum, FourierState, SobolevWeight};
use cnls_core::Case;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn conj(z: &FourierState) -> FourierState {
    let mut w = z.clone();
    for x in w.a_slice_mut() {
        *x = x.conj();
    }
    for x in w.b_slice_mut() {
        *x = x.conj();
    }
    w
}

fn quiet(dt: f64, t_end: f64) -> IntegrateOptions {
    IntegrateOptions { dt, t_end, stride: 100, tol_h: None, tol_l: None, gate: None, keep_states: true, watch: (1, 2) }
}

#[test]
fn two_mode_state_is_a_relative_equilibrium() {
    let tp = TorusParams::new(1, 2, (1.0, 2.0), 5e-4).unwrap();
    let z = two_mode_state(&tp, 8);
    let omega = build(&tp).unwrap().omega;
    let tr = integrate(&HChoice::P2P4, &z, &IntegrateOptions { stride: 10_000, t_end: 100.0, ..Default::default() }).unwrap();
    for (t, w) in tr.times.iter().zip(&tr.states) {
        let a = z.a(1) * Complex64::from_polar(1.0, -omega[0] * t);
        let b = z.b(2) * Complex64::from_polar(1.0, -omega[1] * t);
        assert!((w.a(1) - a).norm() < 1e-10 && (w.b(2) - b).norm() < 1e-10, "t = {t}");
        assert!((w.a(1).norm() - z.a(1).norm()).abs() < 1e-12);
    }
}

#[test]
fn time_reversal_returns_to_start() {
    let z = FourierState::random(6, SobolevWeight(1.0), 0.1, &mut ChaCha8Rng::seed_from_u64(3));
    let fwd = integrate(&HChoice::P2P4, &z, &quiet(1e-3, 20.0)).unwrap();
    let back = integrate(&HChoice::P2P4, &conj(fwd.last_state().unwrap()), &quiet(1e-3, 20.0)).unwrap();
    assert!(conj(back.last_state().unwrap()).max_abs_diff(&z) < 1e-8);
}

#[test]
fn gauge_covariance() {
    let z = FourierState::random(6, SobolevWeight(1.0), 0.1, &mut ChaCha8Rng::seed_from_u64(4));
    let (phi, psi) = (0.7, -2.1);
    let t1 = integrate(&HChoice::P2P4, &z, &quiet(1e-2, 10.0)).unwrap();
    let t2 = integrate(&HChoice::P2P4, &z.rotated(phi, psi), &quiet(1e-2, 10.0)).unwrap();
    for (u, v) in t1.states.iter().zip(&t2.states) {
        assert!(u.rotated(phi, psi).max_abs_diff(v) < 1e-12);
    }
}

#[test]
fn galilean_shift_preserves_action_series() {
    let eps = 0.03;
    let place = |p: i32, q: i32| {
        let mut z = FourierState::zeros(12);
        *z.a_mut(p) = Complex64::new(0.8 * eps, 0.0);
        *z.b_mut(q) = Complex64::new(0.8 * eps, 0.1 * eps);
        *z.a_mut(q) = Complex64::new(0.3 * eps, 0.0);
        *z.b_mut(p) = Complex64::new(0.0, 0.3 * eps);
        z
    };
    let (z, zs) = (place(1, 2), place(2, 3));
    assert!((momentum(&zs) - momentum(&z) - mass(&z)).abs() < 1e-15);
    let t1 = integrate(&HChoice::P2P4, &z, &quiet(1e-2, 50.0)).unwrap();
    let t2 = integrate(&HChoice::P2P4, &zs, &quiet(1e-2, 50.0)).unwrap();
    for (u, v) in t1.states.iter().zip(&t2.states) {
        for j in -6..=6 {
            assert!((u.a(j).norm_sqr() - v.a(j + 1).norm_sqr()).abs() < 1e-13);
            assert!((u.b(j).norm_sqr() - v.b(j + 1).norm_sqr()).abs() < 1e-13);
        }
    }
}

#[test]
fn conservation_within_tolerance() {
    let z = FourierState::random(16, SobolevWeight(1.0), 0.1, &mut ChaCha8Rng::seed_from_u64(5));
    let tr = integrate(&HChoice::P2P4, &z, &IntegrateOptions { t_end: 100.0, stride: 1000, keep_states: false, ..Default::default() }).unwrap();
    assert!(tr.drift.h <= DEFAULT_TOL_H && tr.drift.l <= DEFAULT_TOL_L && tr.drift.m <= DEFAULT_TOL_L);
    assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
    // a coarse step cannot meet the energy tolerance
    let coarse = IntegrateOptions { dt: 0.05, t_end: 100.0, ..Default::default() };
    assert!(matches!(integrate(&HChoice::P2P4, &z, &coarse), Err(DynamicsError::DriftExceeded { .. })));
}

#[test]
fn csv_layout() {
    let tp = TorusParams::new(1, 2, (1.0, 1.0), 1e-3).unwrap();
    let tr = integrate(&HChoice::P2P4, &two_mode_state(&tp, 4), &IntegrateOptions { t_end: 0.2, ..Default::default() }).unwrap();
    let csv = tr.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 9));
}

/// `Im sum conj(u) v`, the symplectic pairing of two tangent vectors.
fn omega(u: &FourierState, v: &FourierState) -> f64 {
    let s: Complex64 = u.a_slice().iter().zip(v.a_slice()).chain(u.b_slice().iter().zip(v.b_slice())).map(|(x, y)| x.conj() * y).sum();
    s.im
}

#[test]
fn variational_flow_preserves_symplectic_pairing() {
    let tp = TorusParams::new(1, 1, (1.0, 2.0), 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base = two_mode_state(&tp, 8);
    let mut u = FourierState::random(8, SobolevWeight(0.0), 1.0, &mut rng);
    let mut v = FourierState::random(8, SobolevWeight(0.0), 1.0, &mut rng);
    let w0 = omega(&u, &v);
    let st = Stepper::new(8, 1e-2);
    let (mut z1, mut z2) = (base.clone(), base);
    for _ in 0..20_000 {
        st.step_tangent(&mut z1, &mut u);
        st.step_tangent(&mut z2, &mut v);
    }
    assert!((omega(&u, &v) - w0).abs() < 1e-8, "{} vs {w0}", omega(&u, &v));
}

#[test]
fn growth_rate_matches_frozen_spectrum() {
    let tp = TorusParams::new(1, 2, (1.0, 1.0), 0.01).unwrap();
    let f = linearized_flow(&tp, Case::Unstable, &LinearizedOptions::default()).unwrap();
    assert!((f.rate / f.oracle_rate - 1.0).abs() < 1e-3);
    assert!((f.oracle_rate / f.predicted - 1.0).abs() < 1e-3);
    assert!(f.r2 > 0.999 && f.window.0 < f.window.1);
    let short = LinearizedOptions { t_end: Some(10.0), ..Default::default() };
    assert!(matches!(linearized_flow(&tp, Case::Unstable, &short), Err(DynamicsError::NoGrowthWindow { .. })));
}

#[test]
fn stable_spectrum_is_neutral() {
    for p in [1, 2] {
        let tp = TorusParams::new(p, p, (1.0, 2.0), 0.01).unwrap();
        assert!(frozen_spectrum(&tp, Case::Stable, 12).max_real.abs() < 1e-12);
    }
}

#[test]
fn two_excited_modes_do_not_beat() {
    let r = beating(1e-300, 0.05, 1, 2, &BeatingOptions { horizon: 1.0, ..Default::default() }).unwrap();
    assert!(r.max_exchange < 1e-12 && r.max_pair_gap_p < 1e-10);
    assert!(r.rows.iter().all(|o| (o.ap2 / 0.0025 - 1.0).abs() < 1e-10));
}
