//! Quartic Birkhoff step: homological equation, resonant part, the time-one
//! flow `tau` of the generator, and the degree-six remainder pieces.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::phase_space::{norm_s, FourierState, SobolevWeight};
use crate::poly_algebra::{build_p2, build_p4, coeff, p2_value, p4_value, rat, CompiledPoly, Monomial, PolyHamiltonian};

/// Smallness gate on `norm_s(z)` for `tau`.
pub const DEFAULT_EPS0: f64 = 0.1;
pub const DEFAULT_SUBSTEPS: usize = 128;

#[derive(Clone, Debug)]
pub struct HomologicalSolution {
    pub j_max: usize,
    pub chi4: PolyHamiltonian,
    pub z4: PolyHamiltonian,
    /// Integer divisor of every quartic monomial (zero on the resonant ones).
    pub divisor_map: BTreeMap<Monomial, i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    #[serde(rename = "J")]
    pub j_max: usize,
    pub homological_residual: Vec<String>,
    pub z4_commutator_residual: Vec<String>,
    pub chi4_terms: usize,
    pub z4_terms: usize,
}

impl IdentityReport {
    pub fn is_clean(&self) -> bool {
        self.homological_residual.is_empty() && self.z4_commutator_residual.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BirkhoffError {
    #[error("homological identities fail; residual monomials: {:?}", .0.homological_residual)]
    ResidualNonzero(Box<IdentityReport>),
    #[error("flow left the bootstrap ball at t = {t}: norm {norm:.3e} > 2 * {initial:.3e}")]
    NormEscape { t: f64, norm: f64, initial: f64 },
    #[error("state norm {norm:.3e} exceeds the smallness gate eps0 = {eps0}")]
    SmallnessGate { norm: f64, eps0: f64 },
}

/// Splits `P4` into the generator `chi4` (coefficient `i / divisor`) and the resonant part `Z4`.
pub fn solve_homological(j_max: usize) -> HomologicalSolution {
    let p4 = build_p4(j_max);
    let mut chi4 = PolyHamiltonian::zero();
    let mut z4 = PolyHamiltonian::zero();
    let mut divisor_map = BTreeMap::new();
    for (m, c) in p4.iter() {
        let d = m.divisor();
        divisor_map.insert(m.clone(), d);
        if d == 0 {
            z4.add_term(m.clone(), c.clone());
        } else {
            chi4.add_term(m.clone(), c.clone() * coeff(rat(0, 1), rat(1, d)));
        }
    }
    HomologicalSolution { j_max, chi4, z4, divisor_map }
}

/// Checks `{chi4, P2} - P4 + Z4 = 0` and `{P2, Z4} = 0` in exact arithmetic.
pub fn verify_identities(sol: &HomologicalSolution) -> Result<IdentityReport, BirkhoffError> {
    let p2 = build_p2(sol.j_max);
    let p4 = build_p4(sol.j_max);
    let lhs = sol.chi4.poisson(&p2).sub(&p4).add(&sol.z4);
    let comm = p2.poisson(&sol.z4);
    let report = IdentityReport {
        j_max: sol.j_max,
        homological_residual: lhs.iter().map(|(m, _)| m.to_string()).collect(),
        z4_commutator_residual: comm.iter().map(|(m, _)| m.to_string()).collect(),
        chi4_terms: sol.chi4.len(),
        z4_terms: sol.z4.len(),
    };
    if report.is_clean() {
        Ok(report)
    } else {
        Err(BirkhoffError::ResidualNonzero(Box::new(report)))
    }
}

/// `Q1 = {P4, chi4}` and `Q2 = {Z4, chi4} - {P4, chi4} + {{P4, chi4}, chi4}`.
pub fn remainder_terms(sol: &HomologicalSolution) -> (PolyHamiltonian, PolyHamiltonian) {
    let p4 = build_p4(sol.j_max);
    let q1 = p4.poisson(&sol.chi4);
    let q2 = sol.z4.poisson(&sol.chi4).sub(&q1).add(&q1.poisson(&sol.chi4));
    (q1, q2)
}

/// Time-one map of the generator's Hamiltonian flow, by fixed-step RK4.
#[derive(Clone, Debug)]
pub struct TauFlow {
    field: CompiledPoly,
    pub substeps: usize,
    pub eps0: f64,
    pub weight: SobolevWeight,
}

impl TauFlow {
    pub fn new(sol: &HomologicalSolution) -> Self {
        TauFlow { field: sol.chi4.compile(), substeps: DEFAULT_SUBSTEPS, eps0: DEFAULT_EPS0, weight: SobolevWeight(1.0) }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn with_gate(mut self, eps0: f64) -> Self {
        self.eps0 = eps0;
        self
    }

    /// `phi_{+-1}(z) - z`, integrated as its own variable so that it keeps full
    /// relative precision even when it is far below the rounding level of `z`.
    pub fn displacement(&self, z: &FourierState, direction: f64) -> Result<FourierState, BirkhoffError> {
        let n0 = norm_s(z, self.weight);
        if n0 > self.eps0 {
            return Err(BirkhoffError::SmallnessGate { norm: n0, eps0: self.eps0 });
        }
        let h = direction / self.substeps as f64;
        let f = |d: &FourierState| self.field.vector_field(&z.axpy(1.0, d));
        let mut d = FourierState::zeros(z.j_max());
        for step in 0..self.substeps {
            let k1 = f(&d);
            let k2 = f(&d.axpy(0.5 * h, &k1));
            let k3 = f(&d.axpy(0.5 * h, &k2));
            let k4 = f(&d.axpy(h, &k3));
            d.add_scaled(h / 6.0, &k1);
            d.add_scaled(h / 3.0, &k2);
            d.add_scaled(h / 3.0, &k3);
            d.add_scaled(h / 6.0, &k4);
            let norm = norm_s(&z.axpy(1.0, &d), self.weight);
            if norm > 2.0 * n0 {
                return Err(BirkhoffError::NormEscape { t: (step + 1) as f64 * h, norm, initial: n0 });
            }
        }
        Ok(d)
    }

    pub fn apply(&self, z: &FourierState, direction: f64) -> Result<FourierState, BirkhoffError> {
        Ok(z.axpy(1.0, &self.displacement(z, direction)?))
    }
}

/// `tau` (direction `+1`) or its inverse (`-1`) with the default gate.
pub fn tau_flow(sol: &HomologicalSolution, state: &FourierState, direction: f64, substeps: usize) -> Result<FourierState, BirkhoffError> {
    TauFlow::new(sol).with_substeps(substeps).apply(state, direction)
}

/// `H(tau(z)) - P2(z) - Z4(z)`, assembled without cancelling the leading orders in floating point.
pub fn energy_defect(flow: &TauFlow, non_resonant: &CompiledPoly, z: &FourierState) -> Result<f64, BirkhoffError> {
    let d = flow.displacement(z, 1.0)?;
    let p2_shift: f64 = z
        .indices()
        .map(|j| {
            let w = f64::from(j * j);
            let da = 2.0 * (z.a(j).conj() * d.a(j)).re + d.a(j).norm_sqr();
            let db = 2.0 * (z.b(j).conj() * d.b(j)).re + d.b(j).norm_sqr();
            w * (da + db)
        })
        .sum();
    let p4_shift = p4_value(&z.axpy(1.0, &d)) - p4_value(z);
    Ok(p2_shift + p4_shift + non_resonant.eval(z).re)
}

/// `P4 - Z4` compiled for [`energy_defect`].
pub fn non_resonant_part(sol: &HomologicalSolution) -> CompiledPoly {
    let mut p = PolyHamiltonian::zero();
    for (m, _) in sol.chi4.iter() {
        p.add_term(m.clone(), coeff(rat(1, 1), rat(0, 1)));
    }
    p.compile()
}

/// `H = P2 + P4` on a floating state.
pub fn hamiltonian(state: &FourierState) -> f64 {
    p2_value(state) + p4_value(state)
}

/// Jacobian of `tau` in real coordinates `(Re a, Im a, Re b, Im b)` by central differences.
pub fn tau_jacobian(flow: &TauFlow, z: &FourierState, h: f64) -> Vec<Vec<f64>> {
    let n = 2 * z.a_slice().len();
    let dim = 2 * n;
    let unit = |k: usize| {
        let mut e = FourierState::zeros(z.j_max());
        let slot = k / 2;
        let v = if k % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
        if slot < n / 2 {
            e.a_slice_mut()[slot] = v;
        } else {
            e.b_slice_mut()[slot - n / 2] = v;
        }
        e
    };
    let flat = |s: &FourierState| -> Vec<f64> { s.a_slice().iter().chain(s.b_slice()).flat_map(|c| [c.re, c.im]).collect() };
    let mut cols = Vec::with_capacity(dim);
    for k in 0..dim {
        let e = unit(k);
        let plus = flat(&flow.apply(&z.axpy(h, &e), 1.0).expect("small state"));
        let minus = flat(&flow.apply(&z.axpy(-h, &e), 1.0).expect("small state"));
        cols.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<_>>());
    }
    // transpose columns into rows
    (0..dim).map(|r| (0..dim).map(|c| cols[c][r]).collect()).collect()
}

/// `max |D^T Omega D - Omega|` with `Omega` pairing each `(Re, Im)` couple.
pub fn symplectic_defect(d: &[Vec<f64>]) -> f64 {
    let dim = d.len();
    let omega = |r: usize, c: usize| -> f64 {
        if r % 2 == 0 && c == r + 1 {
            1.0
        } else if r % 2 == 1 && c + 1 == r {
            -1.0
        } else {
            0.0
        }
    };
    let mut worst: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let mut s = 0.0;
            for k in (0..dim).step_by(2) {
                s += d[k][r] * d[k + 1][c] - d[k + 1][r] * d[k][c];
            }
            worst = worst.max((s - omega(r, c)).abs());
        }
    }
    worst
}

impl HomologicalSolution {
    /// Largest `|coefficient|` of the generator, as a float.
    pub fn chi4_max_coeff(&self) -> f64 {
        self.chi4.iter().map(|(_, c)| crate::poly_algebra::coeff_to_f64(c).norm()).fold(0.0, f64::max)
    }

    pub fn is_partition_of_p4(&self) -> bool {
        let p4 = build_p4(self.j_max);
        p4.len() == self.chi4.len() + self.z4.len()
            && p4.iter().all(|(m, _)| (self.chi4.coeff(m).is_some()) != (self.z4.coeff(m).is_some()))
            && self.z4.iter().all(|(m, c)| m.divisor() == 0 && m.momentum() == 0 && !c.is_zero())
    }
}
