//! Exact polynomial Hamiltonians in the variables `a_j, conj(a_j), b_j, conj(b_j)`.
//!
//! Coefficients are Gaussian rationals, so brackets and normal-form
//! identities can be checked with zero residual. Floating evaluation goes
//! through [`CompiledPoly`], which converts coefficients once.

mod builders;
mod field;
mod format;
mod r5;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::phase_space::{FourierState, ModeIndex};

pub use builders::{build_p2, build_p4, density_integral, mass_poly, momentum_poly, partial_mass_polys, Field};
pub use field::{p4_field, p4_field_linearized, p4_value, p2_value, CompiledPoly};
pub use format::ParseError;
pub use r5::{user_r5, R5Error};

/// Exact complex-rational coefficient.
pub type Coeff = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn coeff(re: BigRational, im: BigRational) -> Coeff {
    Complex::new(re, im)
}

pub fn coeff_int(re: i64, im: i64) -> Coeff {
    Complex::new(rat(re, 1), rat(im, 1))
}

pub fn coeff_to_f64(c: &Coeff) -> Complex64 {
    Complex64::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN))
}

fn i_unit() -> Coeff {
    coeff_int(0, 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Species {
    A,
    B,
}

/// One of `a_j`, `conj(a_j)`, `b_j`, `conj(b_j)`. Ordering: species, conjugation, index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    pub species: Species,
    pub conjugated: bool,
    pub index: ModeIndex,
}

impl VariableId {
    pub const fn a(index: ModeIndex) -> Self {
        VariableId { species: Species::A, conjugated: false, index }
    }
    pub const fn abar(index: ModeIndex) -> Self {
        VariableId { species: Species::A, conjugated: true, index }
    }
    pub const fn b(index: ModeIndex) -> Self {
        VariableId { species: Species::B, conjugated: false, index }
    }
    pub const fn bbar(index: ModeIndex) -> Self {
        VariableId { species: Species::B, conjugated: true, index }
    }

    pub fn partner(self) -> Self {
        VariableId { conjugated: !self.conjugated, ..self }
    }

    fn sign(self) -> i64 {
        if self.conjugated {
            -1
        } else {
            1
        }
    }

    /// Value of this variable on a floating state.
    pub fn value(self, state: &FourierState) -> Complex64 {
        let z = match self.species {
            Species::A => state.a(self.index),
            Species::B => state.b(self.index),
        };
        if self.conjugated {
            z.conj()
        } else {
            z
        }
    }
}

/// Multiset of variables, kept sorted with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    factors: Vec<(VariableId, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn from_vars<I: IntoIterator<Item = VariableId>>(vars: I) -> Self {
        let mut counts: BTreeMap<VariableId, u32> = BTreeMap::new();
        for v in vars {
            *counts.entry(v).or_insert(0) += 1;
        }
        Monomial { factors: counts.into_iter().collect() }
    }

    pub fn factors(&self) -> &[(VariableId, u32)] {
        &self.factors
    }

    pub fn vars(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.factors.iter().flat_map(|&(v, e)| std::iter::repeat_n(v, e as usize))
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.1).sum()
    }

    pub fn exponent(&self, v: VariableId) -> u32 {
        self.factors.binary_search_by(|f| f.0.cmp(&v)).map(|i| self.factors[i].1).unwrap_or(0)
    }

    /// Sum of plain indices minus sum of conjugated indices.
    pub fn momentum(&self) -> i64 {
        self.factors.iter().map(|&(v, e)| v.sign() * i64::from(v.index) * i64::from(e)).sum()
    }

    /// Count of plain minus conjugated factors, per species.
    pub fn partial_charges(&self) -> (i64, i64) {
        let mut q = (0, 0);
        for &(v, e) in &self.factors {
            let d = v.sign() * i64::from(e);
            match v.species {
                Species::A => q.0 += d,
                Species::B => q.1 += d,
            }
        }
        q
    }

    /// Sum of squared plain indices minus squared conjugated indices.
    pub fn divisor(&self) -> i64 {
        self.factors.iter().map(|&(v, e)| v.sign() * i64::from(v.index).pow(2) * i64::from(e)).sum()
    }

    pub fn max_abs_index(&self) -> ModeIndex {
        self.factors.iter().map(|f| f.0.index.abs()).max().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Self {
        Monomial::from_vars(self.vars().map(VariableId::partner))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut counts: BTreeMap<VariableId, u32> = self.factors.iter().copied().collect();
        for &(v, e) in &other.factors {
            *counts.entry(v).or_insert(0) += e;
        }
        Monomial { factors: counts.into_iter().collect() }
    }

    /// `(e, m / v)` when `v` occurs with exponent `e`.
    pub fn remove_one(&self, v: VariableId) -> Option<(u32, Monomial)> {
        let pos = self.factors.binary_search_by(|f| f.0.cmp(&v)).ok()?;
        let e = self.factors[pos].1;
        let mut factors = self.factors.clone();
        if e == 1 {
            factors.remove(pos);
        } else {
            factors[pos].1 -= 1;
        }
        Some((e, Monomial { factors }))
    }

    pub fn eval(&self, state: &FourierState) -> Complex64 {
        self.factors.iter().fold(Complex64::new(1.0, 0.0), |acc, &(v, e)| acc * v.value(state).powu(e))
    }
}

/// Sparse polynomial: canonical map monomial -> nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PolyHamiltonian {
    terms: BTreeMap<Monomial, Coeff>,
}

impl PolyHamiltonian {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Coeff)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn monomial(m: Monomial, c: Coeff) -> Self {
        Self::from_terms([(m, c)])
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&Coeff> {
        self.terms.get(m)
    }

    pub fn coeff_mut(&mut self, m: &Monomial) -> Option<&mut Coeff> {
        self.terms.get_mut(m)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).min().unwrap_or(0)
    }

    pub fn max_abs_index(&self) -> ModeIndex {
        self.terms.keys().map(Monomial::max_abs_index).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Coeff::one()))
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, x)| (m.clone(), x.clone() * c.clone())))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut acc: HashMap<Monomial, Coeff> = HashMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let e = acc.entry(m1.mul(m2)).or_insert_with(Coeff::zero);
                *e = e.clone() + c1.clone() * c2.clone();
            }
        }
        Self::from_terms(acc)
    }

    /// Keeps the terms accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Self {
        PolyHamiltonian { terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).collect() }
    }

    /// `{f, g} = -i sum_x (df/dx dg/dxbar - df/dxbar dg/dx)` over all modes of both species.
    pub fn poisson(&self, g: &Self) -> Self {
        let g_terms: Vec<(&Monomial, &Coeff)> = g.terms.iter().collect();
        let mut by_var: HashMap<VariableId, Vec<usize>> = HashMap::new();
        for (idx, (m, _)) in g_terms.iter().enumerate() {
            for &(v, _) in m.factors() {
                by_var.entry(v).or_default().push(idx);
            }
        }
        let minus_i = -i_unit();
        let plus_i = i_unit();
        let mut acc: HashMap<Monomial, Coeff> = HashMap::new();
        for (mf, cf) in &self.terms {
            for &(v, ef) in mf.factors() {
                let Some(partners) = by_var.get(&v.partner()) else { continue };
                let (_, rest_f) = mf.remove_one(v).expect("factor present");
                let unit = if v.conjugated { &plus_i } else { &minus_i };
                for &gi in partners {
                    let (mg, cg) = g_terms[gi];
                    let (eg, rest_g) = mg.remove_one(v.partner()).expect("indexed factor");
                    let mult = BigRational::from_integer(BigInt::from(u64::from(ef) * u64::from(eg)));
                    let c = unit.clone() * cf.clone() * cg.clone() * Coeff::new(mult, BigRational::zero());
                    let e = acc.entry(rest_f.mul(&rest_g)).or_insert_with(Coeff::zero);
                    *e = e.clone() + c;
                }
            }
        }
        Self::from_terms(acc)
    }

    /// Complex conjugate polynomial: conjugated coefficients on conjugated monomials.
    pub fn conj(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (m.conjugate(), c.conj())))
    }

    /// True when the polynomial takes real values on conjugate-paired arguments.
    pub fn is_real(&self) -> bool {
        self.conj() == *self
    }

    pub fn eval(&self, state: &FourierState) -> Complex64 {
        self.terms.iter().map(|(m, c)| coeff_to_f64(c) * m.eval(state)).sum()
    }

    /// Exact evaluation on a state with Gaussian-rational amplitudes.
    pub fn eval_exact(&self, state: &FourierState<Coeff>) -> Coeff {
        let mut total = Coeff::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for x in m.vars() {
                let z = match x.species {
                    Species::A => state.a(x.index),
                    Species::B => state.b(x.index),
                };
                v *= if x.conjugated { z.conj() } else { z };
            }
            total += v;
        }
        total
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }

    /// Hamiltonian field `(da/dt, db/dt)` with `da_j/dt = -i dH/d conj(a_j)`.
    pub fn vector_field(&self, state: &FourierState) -> FourierState {
        self.compile().vector_field(state)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in self.vars() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let tag = match (v.species, v.conjugated) {
                (Species::A, false) => "a",
                (Species::A, true) => "ab",
                (Species::B, false) => "b",
                (Species::B, true) => "bb",
            };
            write!(f, "{tag}({:+})", v.index)?;
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(vars: &[VariableId]) -> Monomial {
        Monomial::from_vars(vars.iter().copied())
    }

    #[test]
    fn term_counts_at_j1() {
        assert_eq!(build_p2(1).len(), 4);
        assert_eq!(build_p4(1).len(), 19);
        assert!(build_p4(3).iter().all(|(m, c)| m.momentum() == 0 && *c == Coeff::one()));
    }

    #[test]
    fn resonant_monomial_commutes_with_p2() {
        let m = mono(&[VariableId::a(1), VariableId::abar(2), VariableId::b(2), VariableId::bbar(1)]);
        assert_eq!(m.divisor(), 0);
        let f = PolyHamiltonian::monomial(m, Coeff::one());
        assert!(f.poisson(&build_p2(2)).is_empty());
    }

    #[test]
    fn bracket_with_p2_multiplies_by_divisor() {
        let m = mono(&[VariableId::a(2), VariableId::abar(1), VariableId::b(0), VariableId::bbar(1)]);
        let f = PolyHamiltonian::monomial(m.clone(), Coeff::one());
        let br = f.poisson(&build_p2(2));
        assert_eq!(br.len(), 1);
        assert_eq!(br.coeff(&m), Some(&coeff_int(0, -2)));
    }

    #[test]
    fn action_commutes_with_phase_invariant_terms() {
        let action = PolyHamiltonian::monomial(mono(&[VariableId::a(1), VariableId::abar(1)]), Coeff::one());
        let p = build_p2(2).add(&build_p4(2)).filter(|m| m.exponent(VariableId::a(1)) == m.exponent(VariableId::abar(1)));
        assert!(action.poisson(&p).is_empty());
        assert!(build_p2(2).poisson(&build_p2(2)).is_empty());
    }

    #[test]
    fn p4_commutes_with_mass_and_momentum() {
        let p4 = build_p4(2);
        assert!(p4.poisson(&mass_poly(2)).is_empty());
        assert!(p4.poisson(&momentum_poly(2)).is_empty());
        assert!(p4.is_real());
    }

    #[test]
    fn p2_field_on_single_mode() {
        let mut st = FourierState::zeros(2);
        *st.a_mut(1) = Complex64::new(1.0, 0.0);
        let x = build_p2(2).vector_field(&st);
        assert_eq!(x.a(1), Complex64::new(0.0, -1.0));
        assert!(build_p4(2).vector_field(&FourierState::zeros(2)).max_abs_diff(&FourierState::zeros(2)) == 0.0);
    }

    #[test]
    fn display_uses_signed_indices() {
        let m = mono(&[VariableId::a(1), VariableId::abar(-2), VariableId::b(2), VariableId::bbar(-1)]);
        assert_eq!(m.to_string(), "a(+1) ab(-2) b(+2) bb(-1)");
    }
}
