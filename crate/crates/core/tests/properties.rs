use cnls_core::effective::{psi_ang, psi_ang_inv, psi_sym, psi_sym_inv, TorusParams};
use cnls_core::phase_space::{mass, momentum, norm_s, FourierState, SobolevWeight};
use cnls_core::poly_algebra::{build_p4, coeff_int, mass_poly, momentum_poly, p4_value, Monomial, PolyHamiltonian, VariableId};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn variable() -> impl Strategy<Value = VariableId> {
    (0u8..4, -2i32..=2).prop_map(|(k, j)| match k {
        0 => VariableId::a(j),
        1 => VariableId::abar(j),
        2 => VariableId::b(j),
        _ => VariableId::bbar(j),
    })
}

fn poly() -> impl Strategy<Value = PolyHamiltonian> {
    prop::collection::vec((prop::collection::vec(variable(), 1..=3), -3i64..=3, -3i64..=3), 1..=4).prop_map(|terms| {
        PolyHamiltonian::from_terms(terms.into_iter().map(|(vars, re, im)| (Monomial::from_vars(vars), coeff_int(re, im))))
    })
}

fn state(j_max: usize) -> impl Strategy<Value = FourierState> {
    any::<u64>().prop_map(move |seed| FourierState::random(j_max, SobolevWeight(1.0), 0.3, &mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(f in poly(), g in poly()) {
        prop_assert_eq!(f.poisson(&g), g.poisson(&f).scale(&coeff_int(-1, 0)));
    }

    #[test]
    fn bracket_satisfies_jacobi(f in poly(), g in poly(), h in poly()) {
        let sum = f.poisson(&g.poisson(&h)).add(&g.poisson(&h.poisson(&f))).add(&h.poisson(&f.poisson(&g)));
        prop_assert!(sum.is_empty());
    }

    #[test]
    fn text_format_round_trips(f in poly()) {
        let back: PolyHamiltonian = f.to_string().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn norm_is_homogeneous(z in state(5), lam in -3.0f64..3.0, s in 0.0f64..2.0) {
        let w = z.scaled(Complex64::new(lam, 0.0));
        let (lhs, rhs) = (norm_s(&w, SobolevWeight(s)), lam.abs() * norm_s(&z, SobolevWeight(s)));
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + rhs));
    }

    #[test]
    fn quartic_energy_is_phase_invariant(z in state(5), phi in -6.3f64..6.3, psi in -6.3f64..6.3) {
        let w = z.rotated(phi, psi);
        prop_assert!((p4_value(&w) - p4_value(&z)).abs() < 1e-15);
        prop_assert!((mass(&w) - mass(&z)).abs() < 1e-15);
        prop_assert!((momentum(&w) - momentum(&z)).abs() < 1e-15);
    }

    #[test]
    fn state_json_round_trips(z in state(3)) {
        let text = serde_json::to_string(&z).unwrap();
        let back: FourierState = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, z);
    }

    #[test]
    fn angle_maps_round_trip(
        z in state(4),
        p in -2i32..=2,
        q in -2i32..=2,
        x in prop::array::uniform2(-0.01f64..0.01),
        theta in prop::array::uniform2(-6.3f64..6.3),
    ) {
        let tp = TorusParams::new(p, q, (1.5, 1.2), 0.05).unwrap();
        let (y, th, w) = psi_ang(&tp, x, theta, &z);
        let (x2, th2, z2) = psi_ang_inv(&tp, y, th, &w);
        prop_assert!((x2[0] - x[0]).abs() < 1e-14 && (x2[1] - x[1]).abs() < 1e-14);
        prop_assert!((th2[0] - theta[0]).abs() < 1e-14 && (th2[1] - theta[1]).abs() < 1e-14);
        prop_assert!(z2.max_abs_diff(&z) < 1e-14);
    }

    #[test]
    fn sym_map_round_trips(c in prop::array::uniform2(-1.0f64..1.0), d in prop::array::uniform2(-1.0f64..1.0)) {
        let (c, d) = (Complex64::new(c[0], c[1]), Complex64::new(d[0], d[1]));
        let (e, f) = psi_sym(c, d);
        let (c2, d2) = psi_sym_inv(e, f);
        prop_assert!((c2 - c).norm() < 1e-15 && (d2 - d).norm() < 1e-15);
    }
}

#[test]
fn quartic_term_commutes_with_mass_and_momentum() {
    let p4 = build_p4(3);
    assert!(p4.poisson(&mass_poly(3)).is_empty());
    assert!(p4.poisson(&momentum_poly(3)).is_empty());
}
