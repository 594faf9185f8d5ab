use num_traits::One;

use super::{coeff_int, Coeff, Monomial, PolyHamiltonian, VariableId};
use crate::phase_space::ModeIndex;

fn range(j_max: usize) -> std::ops::RangeInclusive<ModeIndex> {
    let r = j_max as ModeIndex;
    -r..=r
}

/// `P2 = sum_j j^2 (a_j conj(a_j) + b_j conj(b_j))`; the `j = 0` terms vanish.
pub fn build_p2(j_max: usize) -> PolyHamiltonian {
    let mut p = PolyHamiltonian::zero();
    for j in range(j_max) {
        let w = coeff_int(i64::from(j) * i64::from(j), 0);
        p.add_term(Monomial::from_vars([VariableId::a(j), VariableId::abar(j)]), w.clone());
        p.add_term(Monomial::from_vars([VariableId::b(j), VariableId::bbar(j)]), w);
    }
    p
}

/// `P4 = sum_{i+j=k+l} a_k b_l conj(a_i) conj(b_j)`.
pub fn build_p4(j_max: usize) -> PolyHamiltonian {
    let mut p = PolyHamiltonian::zero();
    let r = j_max as ModeIndex;
    for k in range(j_max) {
        for l in range(j_max) {
            for i in range(j_max) {
                let j = k + l - i;
                if j.abs() <= r {
                    let m = Monomial::from_vars([VariableId::a(k), VariableId::b(l), VariableId::abar(i), VariableId::bbar(j)]);
                    p.add_term(m, Coeff::one());
                }
            }
        }
    }
    p
}

/// `(L_u, L_v)` as polynomials.
pub fn partial_mass_polys(j_max: usize) -> (PolyHamiltonian, PolyHamiltonian) {
    let mut lu = PolyHamiltonian::zero();
    let mut lv = PolyHamiltonian::zero();
    for j in range(j_max) {
        lu.add_term(Monomial::from_vars([VariableId::a(j), VariableId::abar(j)]), Coeff::one());
        lv.add_term(Monomial::from_vars([VariableId::b(j), VariableId::bbar(j)]), Coeff::one());
    }
    (lu, lv)
}

pub fn mass_poly(j_max: usize) -> PolyHamiltonian {
    let (lu, lv) = partial_mass_polys(j_max);
    lu.add(&lv)
}

pub fn momentum_poly(j_max: usize) -> PolyHamiltonian {
    let mut p = PolyHamiltonian::zero();
    for j in range(j_max) {
        let w = coeff_int(i64::from(j), 0);
        p.add_term(Monomial::from_vars([VariableId::a(j), VariableId::abar(j)]), w.clone());
        p.add_term(Monomial::from_vars([VariableId::b(j), VariableId::bbar(j)]), w);
    }
    p
}

/// Physical-space field factor inside a spatial integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    U,
    UBar,
    V,
    VBar,
}

/// Fourier expansion of `(1/2pi) int prod(fields) dx` on the truncation `[-J, J]`.
///
/// `u = sum a_j e^{ijx}`, so the integral keeps the zero-momentum monomials.
pub fn density_integral(j_max: usize, fields: &[Field]) -> PolyHamiltonian {
    let linear = |f: Field| {
        PolyHamiltonian::from_terms(range(j_max).map(|j| {
            let v = match f {
                Field::U => VariableId::a(j),
                Field::UBar => VariableId::abar(j),
                Field::V => VariableId::b(j),
                Field::VBar => VariableId::bbar(j),
            };
            (Monomial::from_vars([v]), Coeff::one())
        }))
    };
    let mut acc = PolyHamiltonian::monomial(Monomial::one(), Coeff::one());
    let r = i64::from(j_max as ModeIndex);
    for (n, &f) in fields.iter().enumerate() {
        acc = acc.mul(&linear(f));
        // a partial product whose momentum cannot be cancelled by the remaining factors is dropped
        let left = (fields.len() - n - 1) as i64;
        acc = acc.filter(|m| m.momentum().abs() <= left * r);
    }
    acc
}
