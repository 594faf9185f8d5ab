//! Truncated Fourier phase space for the two-species system.
//!
//! A state holds the modes `a_j` (field `u`) and `b_j` (field `v`) for
//! `j` in `[-J, J]`. Amplitudes are `Complex64` for simulation; the exact
//! Gaussian-rational coefficient type from `poly_algebra` can be used in
//! place of it for symbolic checks.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fourier mode index.
pub type ModeIndex = i32;

/// Weight exponent of the `l^2_s` norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevWeight(pub f64);

impl SobolevWeight {
    pub fn weight(self, j: ModeIndex) -> f64 {
        (1.0 + f64::from(j) * f64::from(j)).powf(self.0)
    }
}

impl Default for SobolevWeight {
    fn default() -> Self {
        SobolevWeight(1.0)
    }
}

/// Sequence indexed by `[-radius, radius]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredSeq<T> {
    radius: usize,
    data: Vec<T>,
}

impl<T: Clone + Zero> CenteredSeq<T> {
    pub fn zeros(radius: usize) -> Self {
        CenteredSeq { radius, data: vec![T::zero(); 2 * radius + 1] }
    }

    /// Panics unless `data.len()` is odd.
    pub fn from_vec(data: Vec<T>) -> Self {
        assert!(data.len() % 2 == 1, "centered sequence needs odd length");
        CenteredSeq { radius: data.len() / 2, data }
    }

    pub fn delta(radius: usize, j: ModeIndex, value: T) -> Self {
        let mut s = Self::zeros(radius);
        *s.get_mut(j) = value;
        s
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, j: ModeIndex) -> T {
        let r = self.radius as i64;
        let j = i64::from(j);
        if j < -r || j > r {
            T::zero()
        } else {
            self.data[(j + r) as usize].clone()
        }
    }

    pub fn get_mut(&mut self, j: ModeIndex) -> &mut T {
        let r = self.radius as ModeIndex;
        assert!(j.abs() <= r, "index {j} outside [-{r}, {r}]");
        &mut self.data[(j + r) as usize]
    }

    /// Restriction to `[-radius, radius]` (zero padding when growing).
    pub fn truncate(&self, radius: usize) -> Self {
        let r = radius as ModeIndex;
        CenteredSeq { radius, data: (-r..=r).map(|j| self.get(j)).collect() }
    }
}

/// Convolution `(x*y)_l = sum_{i+j=l} x_i y_j`, supported on the sum of the radii.
pub fn convolve<T>(x: &CenteredSeq<T>, y: &CenteredSeq<T>) -> CenteredSeq<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    let mut out: CenteredSeq<T> = CenteredSeq::zeros(x.radius + y.radius);
    // index offsets add up: position(i) + position(j) = position(i + j)
    for (ix, xv) in x.data.iter().enumerate() {
        if xv.is_zero() {
            continue;
        }
        for (iy, yv) in y.data.iter().enumerate() {
            let slot: &mut T = &mut out.data[ix + iy];
            *slot = slot.clone() + xv.clone() * yv.clone();
        }
    }
    out
}

/// Truncated two-species state.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierState<T = Complex64> {
    j_max: usize,
    a: Vec<T>,
    b: Vec<T>,
}

impl<T: Clone + Zero> FourierState<T> {
    pub fn zeros(j_max: usize) -> Self {
        let n = 2 * j_max + 1;
        FourierState { j_max, a: vec![T::zero(); n], b: vec![T::zero(); n] }
    }

    /// Builds a state from mode vectors in index order `-J..=J`.
    pub fn from_modes(a: Vec<T>, b: Vec<T>) -> Result<Self, StateError> {
        if a.len() != b.len() {
            return Err(StateError::LengthMismatch { a: a.len(), b: b.len() });
        }
        if a.len() % 2 == 0 || a.len() < 3 {
            return Err(StateError::BadLength(a.len()));
        }
        Ok(FourierState { j_max: a.len() / 2, a, b })
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn indices(&self) -> impl Iterator<Item = ModeIndex> {
        let r = self.j_max as ModeIndex;
        -r..=r
    }

    pub fn contains(&self, j: ModeIndex) -> bool {
        j.unsigned_abs() as usize <= self.j_max
    }

    fn slot(&self, j: ModeIndex) -> usize {
        assert!(self.contains(j), "mode {j} outside truncation {}", self.j_max);
        (j + self.j_max as ModeIndex) as usize
    }

    pub fn a(&self, j: ModeIndex) -> T {
        self.a[self.slot(j)].clone()
    }

    pub fn b(&self, j: ModeIndex) -> T {
        self.b[self.slot(j)].clone()
    }

    pub fn a_mut(&mut self, j: ModeIndex) -> &mut T {
        let s = self.slot(j);
        &mut self.a[s]
    }

    pub fn b_mut(&mut self, j: ModeIndex) -> &mut T {
        let s = self.slot(j);
        &mut self.b[s]
    }

    pub fn a_slice(&self) -> &[T] {
        &self.a
    }

    pub fn b_slice(&self) -> &[T] {
        &self.b
    }

    pub fn a_seq(&self) -> CenteredSeq<T> {
        CenteredSeq { radius: self.j_max, data: self.a.clone() }
    }

    pub fn b_seq(&self) -> CenteredSeq<T> {
        CenteredSeq { radius: self.j_max, data: self.b.clone() }
    }

    /// Same modes on a different truncation (new modes are zero, dropped modes lost).
    pub fn resized(&self, j_max: usize) -> Self {
        let a = self.a_seq().truncate(j_max).data;
        let b = self.b_seq().truncate(j_max).data;
        FourierState { j_max, a, b }
    }
}

impl FourierState<Complex64> {
    pub fn a_slice_mut(&mut self) -> &mut [Complex64] {
        &mut self.a
    }

    pub fn b_slice_mut(&mut self) -> &mut [Complex64] {
        &mut self.b
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        FourierState {
            j_max: self.j_max,
            a: self.a.iter().map(|x| x * c).collect(),
            b: self.b.iter().map(|x| x * c).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(c, other);
        out
    }

    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        assert_eq!(self.j_max, other.j_max);
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y * c;
        }
        for (x, y) in self.b.iter_mut().zip(&other.b) {
            *x += y * c;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// Applies the phase rotations `a -> e^{i phi} a`, `b -> e^{i psi} b`.
    pub fn rotated(&self, phi: f64, psi: f64) -> Self {
        let ea = Complex64::from_polar(1.0, phi);
        let eb = Complex64::from_polar(1.0, psi);
        FourierState {
            j_max: self.j_max,
            a: self.a.iter().map(|x| x * ea).collect(),
            b: self.b.iter().map(|x| x * eb).collect(),
        }
    }

    /// Random state with Gaussian modes, rescaled to `norm_s = norm`.
    pub fn random<R: Rng + ?Sized>(j_max: usize, s: SobolevWeight, norm: f64, rng: &mut R) -> Self {
        let mut st = Self::zeros(j_max);
        for v in st.a.iter_mut().chain(st.b.iter_mut()) {
            *v = Complex64::new(gauss(rng), gauss(rng));
        }
        let n = norm_s(&st, s);
        st.scaled(Complex64::new(norm / n, 0.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .chain(self.b.iter().zip(&other.b))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Standard normal deviate by Box-Muller.
pub(crate) fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StateError {
    #[error("species vectors differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("mode vector length {0} is not 2J+1 with J >= 1")]
    BadLength(usize),
    #[error("declared J = {declared} but vectors have {len} entries")]
    DeclaredRadius { declared: usize, len: usize },
}

/// `sqrt(sum_j (1+j^2)^s (|a_j|^2 + |b_j|^2))`.
pub fn norm_s(state: &FourierState, s: SobolevWeight) -> f64 {
    state
        .indices()
        .map(|j| s.weight(j) * (state.a(j).norm_sqr() + state.b(j).norm_sqr()))
        .sum::<f64>()
        .sqrt()
}

/// Weighted norm of a single centered sequence.
pub fn seq_norm_s(x: &CenteredSeq<Complex64>, s: SobolevWeight) -> f64 {
    let r = x.radius() as ModeIndex;
    (-r..=r).map(|j| s.weight(j) * x.get(j).norm_sqr()).sum::<f64>().sqrt()
}

/// Total mass `L`.
pub fn mass(state: &FourierState) -> f64 {
    let (lu, lv) = partial_masses(state);
    lu + lv
}

/// Momentum `M = sum_j j (|a_j|^2 + |b_j|^2)`.
pub fn momentum(state: &FourierState) -> f64 {
    state
        .indices()
        .map(|j| f64::from(j) * (state.a(j).norm_sqr() + state.b(j).norm_sqr()))
        .sum()
}

/// `(L_u, L_v)`.
pub fn partial_masses(state: &FourierState) -> (f64, f64) {
    let lu = state.a_slice().iter().map(|x| x.norm_sqr()).sum();
    let lv = state.b_slice().iter().map(|x| x.norm_sqr()).sum();
    (lu, lv)
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    #[serde(rename = "J")]
    j: usize,
    a: Vec<[f64; 2]>,
    b: Vec<[f64; 2]>,
}

impl Serialize for FourierState<Complex64> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let pack = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect();
        StateJson { j: self.j_max, a: pack(&self.a), b: pack(&self.b) }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FourierState<Complex64> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = StateJson::deserialize(de)?;
        let unpack = |v: Vec<[f64; 2]>| v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect::<Vec<_>>();
        let (a, b) = (unpack(raw.a), unpack(raw.b));
        if a.len() != 2 * raw.j + 1 {
            return Err(serde::de::Error::custom(StateError::DeclaredRadius { declared: raw.j, len: a.len() }));
        }
        FourierState::from_modes(a, b).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn norm_of_simple_states() {
        let s = SobolevWeight(1.0);
        let mut st = FourierState::zeros(3);
        assert_eq!(norm_s(&st, s), 0.0);
        *st.a_mut(0) = c(1.0);
        assert_eq!(norm_s(&st, s), 1.0);
        let mut st = FourierState::zeros(3);
        *st.a_mut(1) = c(1.0);
        *st.b_mut(-1) = c(1.0);
        assert_eq!(norm_s(&st, s), 2.0);
    }

    #[test]
    fn convolution_of_deltas() {
        let x = CenteredSeq::delta(2, 1, 1i64);
        let z = convolve(&x, &x);
        assert_eq!(z.radius(), 4);
        assert_eq!(z, CenteredSeq::delta(4, 2, 1));
        let y = CenteredSeq::from_vec(vec![3i64, -1, 4, 1, 5]);
        let id = CenteredSeq::delta(2, 0, 1i64);
        assert_eq!(convolve(&id, &y).truncate(2), y);
    }

    #[test]
    fn convolution_exact_rational_algebra() {
        let r = |n: i64, d: i64| Rational64::new(n, d);
        let x = CenteredSeq::from_vec(vec![r(1, 2), r(-3, 4), r(5, 7)]);
        let y = CenteredSeq::from_vec(vec![r(2, 3), r(0, 1), r(-1, 5)]);
        let z = CenteredSeq::from_vec(vec![r(7, 3), r(1, 9), r(4, 1)]);
        assert_eq!(convolve(&x, &y), convolve(&y, &x));
        assert_eq!(convolve(&convolve(&x, &y), &z), convolve(&x, &convolve(&y, &z)));
    }

    #[test]
    fn single_mode_functionals() {
        let mut st = FourierState::zeros(3);
        *st.a_mut(2) = c(1.0);
        assert_eq!(mass(&st), 1.0);
        assert_eq!(momentum(&st), 2.0);
        assert_eq!(partial_masses(&st), (1.0, 0.0));
    }

    #[test]
    fn reflected_state_has_zero_momentum() {
        let mut st = FourierState::zeros(3);
        for j in -3i32..=3 {
            let v = Complex64::new(1.0 + f64::from(j.abs()), 0.5);
            *st.a_mut(j) = v;
            *st.b_mut(-j) = v;
        }
        assert!(momentum(&st).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let mut st = FourierState::zeros(2);
        *st.a_mut(-2) = Complex64::new(1.5, -0.25);
        *st.b_mut(1) = Complex64::new(0.0, 2.0);
        let text = serde_json::to_string(&st).unwrap();
        assert!(text.starts_with("{\"J\":2,\"a\":[[1.5,-0.25],"));
        let back: FourierState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, st);
        let bad = r#"{"J":3,"a":[[0,0],[0,0],[0,0]],"b":[[0,0],[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<FourierState>(bad).is_err());
    }
}
