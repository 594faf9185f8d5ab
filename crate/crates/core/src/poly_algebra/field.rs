use num_complex::Complex64;

use super::{coeff_to_f64, PolyHamiltonian, Species, VariableId};
use crate::phase_space::FourierState;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Floating-point copy of a polynomial for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    j_max: usize,
    terms: Vec<(Complex64, Vec<VariableId>)>,
}

impl CompiledPoly {
    pub fn new(p: &PolyHamiltonian) -> Self {
        let terms = p.iter().map(|(m, c)| (coeff_to_f64(c), m.vars().collect())).collect();
        CompiledPoly { j_max: p.max_abs_index() as usize, terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, state: &FourierState) -> Complex64 {
        self.terms.iter().map(|(c, vars)| vars.iter().fold(*c, |acc, v| acc * v.value(state))).sum()
    }

    /// `da_j/dt = -i dH/d conj(a_j)`, `db_j/dt = -i dH/d conj(b_j)`.
    pub fn vector_field(&self, state: &FourierState) -> FourierState {
        assert!(self.j_max <= state.j_max(), "polynomial reaches beyond the state truncation");
        let mut out = FourierState::zeros(state.j_max());
        let mut values = Vec::with_capacity(8);
        for (c, vars) in &self.terms {
            values.clear();
            values.extend(vars.iter().map(|v| v.value(state)));
            for (pos, v) in vars.iter().enumerate() {
                if !v.conjugated {
                    continue;
                }
                let rest = values.iter().enumerate().filter(|&(q, _)| q != pos).fold(*c, |acc, (_, x)| acc * x);
                let slot = match v.species {
                    Species::A => out.a_mut(v.index),
                    Species::B => out.b_mut(v.index),
                };
                *slot += -I * rest;
            }
        }
        out
    }
}

/// `(x * (y * rev(conj z)))_l` for `|l| <= J`, with `rev(conj z)_n = conj(z_{-n})`.
///
/// Equals `sum_{k+m=l+n} x_k y_m conj(z_n)` over in-band indices.
fn cubic(x: &[Complex64], y: &[Complex64], z: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let r = n / 2;
    // w_d = sum_{m-n'=d} y_m conj(z_n'), d in [-2J, 2J], slot d + 2J
    let mut w = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for (m, ym) in y.iter().enumerate() {
        if ym.re == 0.0 && ym.im == 0.0 {
            continue;
        }
        for (k, zk) in z.iter().enumerate() {
            w[m + n - 1 - k] += ym * zk.conj();
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, xk) in x.iter().enumerate() {
        if xk.re == 0.0 && xk.im == 0.0 {
            continue;
        }
        for (l, o) in out.iter_mut().enumerate() {
            let d = l as isize - k as isize; // d in [-2J, 2J]
            *o += xk * w[(d + 2 * r as isize) as usize];
        }
    }
    out
}

/// Field of `P4` through the convolution identity, O(J^2) per call.
pub fn p4_field(state: &FourierState) -> FourierState {
    let (a, b) = (state.a_slice(), state.b_slice());
    let da: Vec<_> = cubic(a, b, b).into_iter().map(|x| -I * x).collect();
    let db: Vec<_> = cubic(b, a, a).into_iter().map(|x| -I * x).collect();
    FourierState::from_modes(da, db).expect("same shape as input")
}

/// Derivative of [`p4_field`] at `base` in the direction `delta`.
pub fn p4_field_linearized(base: &FourierState, delta: &FourierState) -> FourierState {
    let (a, b) = (base.a_slice(), base.b_slice());
    let (da, db) = (delta.a_slice(), delta.b_slice());
    let sum3 = |u: Vec<Complex64>, v: Vec<Complex64>, w: Vec<Complex64>| -> Vec<Complex64> {
        u.into_iter().zip(v).zip(w).map(|((x, y), z)| -I * (x + y + z)).collect()
    };
    let fa = sum3(cubic(da, b, b), cubic(a, db, b), cubic(a, b, db));
    let fb = sum3(cubic(db, a, a), cubic(b, da, a), cubic(b, a, da));
    FourierState::from_modes(fa, fb).expect("same shape as input")
}

/// `P4(z) = sum_j conj(b_j) dP4/d conj(b_j)` (Euler relation in `conj(b)`).
pub fn p4_value(state: &FourierState) -> f64 {
    let g = cubic(state.b_slice(), state.a_slice(), state.a_slice());
    state.b_slice().iter().zip(g).map(|(bj, gj)| (bj.conj() * gj).re).sum()
}

pub fn p2_value(state: &FourierState) -> f64 {
    state.indices().map(|j| f64::from(j * j) * (state.a(j).norm_sqr() + state.b(j).norm_sqr())).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::SobolevWeight;
    use crate::poly_algebra::{build_p2, build_p4};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fast_path_matches_term_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p4 = build_p4(4).compile();
        for _ in 0..5 {
            let st = FourierState::random(4, SobolevWeight(1.0), 0.7, &mut rng);
            let slow = p4.vector_field(&st);
            let fast = p4_field(&st);
            let scale = slow.a_slice().iter().chain(slow.b_slice()).map(|x| x.norm()).fold(0.0, f64::max);
            assert!(fast.max_abs_diff(&slow) <= 1e-13 * scale);
            let h = p4.eval(&st);
            assert!((h.re - p4_value(&st)).abs() <= 1e-13 * h.norm() && h.im.abs() <= 1e-13 * h.norm());
            let h2 = build_p2(4).compile().eval(&st);
            assert!((h2.re - p2_value(&st)).abs() <= 1e-12 * h2.norm());
        }
    }

    #[test]
    fn linearization_matches_difference_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = FourierState::random(5, SobolevWeight(1.0), 0.5, &mut rng);
        let dir = FourierState::random(5, SobolevWeight(1.0), 1.0, &mut rng);
        let h = 1e-6;
        let fd = p4_field(&base.axpy(h, &dir)).sub(&p4_field(&base.axpy(-h, &dir))).scaled(Complex64::new(0.5 / h, 0.0));
        assert!(fd.max_abs_diff(&p4_field_linearized(&base, &dir)) < 1e-8);
    }
}
