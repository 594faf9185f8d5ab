use super::{mass_poly, momentum_poly, partial_mass_polys, PolyHamiltonian};
use crate::Case;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum R5Error {
    #[error("perturbation has a term of degree {degree}; degree >= 5 is required")]
    DegreeTooLow { degree: u32 },
    #[error("perturbation is not real: conjugate-paired coefficients differ")]
    NotReal,
    #[error("{{R5, M}} != 0: monomial `{monomial}` carries momentum {momentum}")]
    NonZeroMomentum { monomial: String, momentum: i64 },
    #[error("{{R5, {bracket}}} != 0: first residual monomial `{monomial}`")]
    MassBracketNonzero { bracket: &'static str, monomial: String },
}

fn first_residual(p: &PolyHamiltonian, q: &PolyHamiltonian) -> Option<String> {
    p.poisson(q).iter().next().map(|(m, _)| m.to_string())
}

/// Validates a user-supplied higher-order perturbation.
///
/// The brackets with the momentum and with the masses relevant to `case`
/// (total mass for the unstable torus, both partial masses for the stable
/// one) must vanish identically.
pub fn user_r5(poly: &PolyHamiltonian, case: Case) -> Result<PolyHamiltonian, R5Error> {
    if !poly.is_empty() && poly.min_degree() < 5 {
        return Err(R5Error::DegreeTooLow { degree: poly.min_degree() });
    }
    if !poly.is_real() {
        return Err(R5Error::NotReal);
    }
    let j = poly.max_abs_index().max(1) as usize;
    if first_residual(poly, &momentum_poly(j)).is_some() {
        let (m, _) = poly.iter().find(|(m, _)| m.momentum() != 0).expect("a term with momentum");
        return Err(R5Error::NonZeroMomentum { monomial: m.to_string(), momentum: m.momentum() });
    }
    match case {
        Case::Unstable => {
            if let Some(monomial) = first_residual(poly, &mass_poly(j)) {
                return Err(R5Error::MassBracketNonzero { bracket: "L", monomial });
            }
        }
        Case::Stable => {
            let (lu, lv) = partial_mass_polys(j);
            if let Some(monomial) = first_residual(poly, &lu) {
                return Err(R5Error::MassBracketNonzero { bracket: "L_u", monomial });
            }
            if let Some(monomial) = first_residual(poly, &lv) {
                return Err(R5Error::MassBracketNonzero { bracket: "L_v", monomial });
            }
        }
    }
    Ok(poly.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_algebra::{density_integral, Coeff, Field, Monomial, VariableId};
    use num_traits::One;

    #[test]
    fn quartic_in_u_times_v_intensity_is_accepted() {
        use Field::*;
        let r5 = density_integral(2, &[U, UBar, U, UBar, V, VBar]);
        assert_eq!(r5.degree(), 6);
        assert!(user_r5(&r5, Case::Unstable).is_ok());
        assert!(user_r5(&r5, Case::Stable).is_ok());
    }

    #[test]
    fn momentum_violation_is_named() {
        let m = Monomial::from_vars([VariableId::a(1), VariableId::abar(2), VariableId::b(1), VariableId::bbar(1), VariableId::b(2)]);
        let p = PolyHamiltonian::monomial(m.clone(), Coeff::one());
        let p = p.add(&PolyHamiltonian::monomial(m.conjugate(), Coeff::one()));
        match user_r5(&p, Case::Unstable) {
            Err(R5Error::NonZeroMomentum { momentum, .. }) => assert_eq!(momentum.abs(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn low_degree_is_rejected() {
        let p = density_integral(2, &[Field::U, Field::VBar]);
        assert_eq!(user_r5(&p, Case::Unstable), Err(R5Error::DegreeTooLow { degree: 2 }));
    }

    #[test]
    fn mixing_term_fails_partial_masses_only() {
        use Field::*;
        // net mass +2: fails every mass bracket
        let p = density_integral(1, &[U, U, U, V, VBar, UBar]);
        let p = p.add(&p.conj());
        assert!(matches!(user_r5(&p, Case::Stable), Err(R5Error::MassBracketNonzero { bracket: "L_u", .. })));
        assert!(matches!(user_r5(&p, Case::Unstable), Err(R5Error::MassBracketNonzero { bracket: "L", .. })));
        // species exchange: total mass kept, partial masses not
        let q = density_integral(1, &[U, U, VBar, VBar, V, UBar]);
        let q = q.add(&q.conj());
        assert!(user_r5(&q, Case::Unstable).is_ok());
        assert!(matches!(user_r5(&q, Case::Stable), Err(R5Error::MassBracketNonzero { .. })));
    }
}
