use cnls_core::effective::*;
use cnls_core::phase_space::{FourierState, SobolevWeight};
use cnls_core::poly_algebra::p4_field;
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Characteristic polynomial coefficients `[c0, c1, c2, c3, 1]` by Faddeev-LeVerrier.
fn charpoly(m: &Matrix4<Complex64>) -> [Complex64; 5] {
    let mut out = [c(0.0); 5];
    out[4] = c(1.0);
    let id = Matrix4::<Complex64>::identity();
    let mut mk = Matrix4::<Complex64>::zeros();
    for k in 1..=4 {
        mk = m * mk + id * out[5 - k];
        out[4 - k] = -(m * mk).trace() / c(k as f64);
    }
    out
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut r = vec![c(0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    r
}

#[test]
fn characteristic_polynomial_matches_factored_form() {
    for rho in [(1.0, 2.0), (1.3, 1.7), (2.0, 1.0), (1.5, 1.5)] {
        let tp = TorusParams::new(1, 2, rho, 0.1).unwrap();
        let (nu, s2) = (tp.nu, rho.0 * rho.1);
        let w = I * nu * (rho.1 - rho.0);
        // (l - w)^2 - nu^2 s^2 and (l + w)^2 - nu^2 s^2, low order first
        let f1 = [w * w - nu * nu * s2, -w * 2.0, c(1.0)];
        let f2 = [w * w - nu * nu * s2, w * 2.0, c(1.0)];
        let want = poly_mul(&f1, &f2);
        let got = charpoly(&hyperbolic_matrix(&tp));
        for (g, e) in got.iter().zip(&want) {
            assert!((g - e).norm() < 1e-12, "rho={rho:?}: {g} vs {e}");
        }
    }
}

#[test]
fn eigenvalues_have_real_part_nu_s() {
    for rho in [(1.0, 2.0), (1.2, 1.9), (1.0, 1.0)] {
        for nu in [0.01, 0.1, 0.25] {
            let m = build_unstable(&TorusParams::new(3, -1, rho, nu).unwrap()).unwrap();
            let s = (rho.0 * rho.1).sqrt();
            for l in &m.hyperbolic_eigs {
                assert!((l.re.abs() - nu * s).abs() < 1e-12);
                assert!((l.im.abs() - nu * (rho.1 - rho.0).abs()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn eigenvectors_at_equal_rho() {
    let tp = TorusParams::new(1, 2, (1.4, 1.4), 0.1).unwrap();
    let m = hyperbolic_matrix(&tp);
    let lam = c(tp.nu * 1.4);
    let v1 = Vector4::new(c(1.0), c(0.0), c(0.0), I);
    let v2 = Vector4::new(c(0.0), c(1.0), I, c(0.0));
    assert!((m * v1 - v1 * lam).norm() < 1e-14);
    assert!((m * v2 - v2 * lam).norm() < 1e-14);
    // the sign-flipped companion belongs to the opposite eigenvalue
    let v3 = Vector4::new(c(0.0), c(1.0), -I, c(0.0));
    assert!((m * v3 + v3 * lam).norm() < 1e-14);
}

#[test]
fn zeta_map_diagonalizes_the_block() {
    let tp = TorusParams::new(1, 2, (1.0, 2.0), 0.1).unwrap();
    let t = zeta_ef_matrix();
    let tinv = t.try_inverse().unwrap();
    let d = t * hyperbolic_matrix(&tp) * tinv;
    let (le, lf) = lambda_ef(&tp);
    let want = [-I * le, -I * lf, I * le, I * lf];
    for r in 0..4 {
        for k in 0..4 {
            let e = if r == k { want[r] } else { c(0.0) };
            assert!((d[(r, k)] - e).norm() < 1e-12, "({r},{k}) = {}", d[(r, k)]);
        }
    }
    // symplectic: T J T^T = J
    let mut j = Matrix4::<Complex64>::zeros();
    j[(0, 2)] = c(1.0);
    j[(1, 3)] = c(1.0);
    j[(2, 0)] = c(-1.0);
    j[(3, 1)] = c(-1.0);
    assert!((t * j * t.transpose() - j).norm() < 1e-14);
    // the quadratic form itself becomes Lambda_e zeta_e zeta_e^* + Lambda_f zeta_f zeta_f^*
    let k = k_matrix(&tp).map(c);
    let kk = tinv.transpose() * k * tinv;
    assert!((kk[(0, 2)] - le).norm() < 1e-12 && (kk[(1, 3)] - lf).norm() < 1e-12);
    assert!(kk[(0, 0)].norm() < 1e-12 && kk[(0, 1)].norm() < 1e-12);
}

#[test]
fn zeta_and_sym_round_trip() {
    let v = [Complex64::new(0.3, -0.1), Complex64::new(-0.7, 0.2), Complex64::new(0.3, 0.1), Complex64::new(-0.7, -0.2)];
    let back = zeta_ef_inv(zeta_ef(v[0], v[1], v[2], v[3]));
    for (a, b) in back.iter().zip(&v) {
        assert!((a - b).norm() < 1e-15);
    }
    let (cc, dd) = (Complex64::new(0.4, 1.1), Complex64::new(-0.3, 0.5));
    let (e, f) = psi_sym(cc, dd);
    assert!((e.norm_sqr() + f.norm_sqr() - cc.norm_sqr() - dd.norm_sqr()).abs() < 1e-15);
    let (e, f) = psi_sym(cc, cc);
    assert_eq!(f, c(0.0));
    assert!((e - cc * 2f64.sqrt()).norm() < 1e-15);
}

#[test]
fn zero_angle_is_identity_on_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let z = FourierState::random(4, SobolevWeight(1.0), 0.2, &mut rng);
    let (y, _, zz) = psi_ang_unstable(1, 2, [0.0, 0.0], [0.0, 0.0], &z);
    assert_eq!(zz, z);
    assert!((y[0] - z.b(1).norm_sqr()).abs() < 1e-16 && (y[1] - z.a(2).norm_sqr()).abs() < 1e-16);
    let (_, _, zz) = psi_ang_unstable(1, 2, [0.0, 0.0], [0.4, 1.3], &z);
    assert!((zz.a(2).norm() - z.a(2).norm()).abs() < 1e-16);
}

#[test]
fn two_mode_solution_is_exact() {
    // with only a_p, b_q excited, the field reduces to frequencies Omega
    for (p, q) in [(1, 2), (2, 2), (-1, 3)] {
        let tp = TorusParams::new(p, q, (1.3, 1.8), 0.1).unwrap();
        let m = build(&tp).unwrap();
        let mut w = FourierState::zeros(5);
        let (ap, bq) = (Complex64::from_polar((0.13f64).sqrt(), 0.4), Complex64::from_polar((0.18f64).sqrt(), -1.0));
        *w.a_mut(p) = ap;
        if p == q {
            *w.b_mut(p) = bq;
        } else {
            *w.b_mut(q) = bq;
        }
        // i da/dt = dH/d conj a, so the field is -i (j^2 a + cubic)
        let f = p4_field(&w);
        let da = -I * (c(f64::from(p * p)) * ap) + f.a(p);
        let db = -I * (c(f64::from(q * q)) * bq) + f.b(q);
        assert!((da - (-I * m.omega[0] * ap)).norm() < 1e-13);
        assert!((db - (-I * m.omega[1] * bq)).norm() < 1e-13);
    }
}

#[test]
fn effective_model_matches_normal_form_energy() {
    for (p, q) in [(1, 2), (1, 1)] {
        let tp = TorusParams::new(p, q, (1.0, 2.0), 0.01).unwrap();
        let r = effective_vs_truth(&tp, 4, &VsTruthOptions::default()).unwrap();
        assert!(r.exponent >= 1.9, "{p},{q}: exponent {} ({:?})", r.exponent, r.points);
        assert!(r.torus_residual < 1e-15, "{}", r.torus_residual);
        assert!(r.theta_spread < 1e-12, "{}", r.theta_spread);
    }
}

#[test]
fn truncation_must_cover_the_block() {
    let tp = TorusParams::new(1, 3, (1.0, 1.0), 0.1).unwrap();
    assert!(matches!(effective_vs_truth(&tp, 4, &VsTruthOptions::default()), Err(EffectiveError::TruncationTooSmall { need: 5, .. })));
}
