//! Time integration of the truncated system and of its linearization.
//!
//! The scheme is Strang splitting: exact half-steps of the diagonal linear
//! flow `a_j -> e^{-i j^2 dt/2} a_j` around one RK4 step of the nonlinear
//! field. The tangent map of the same scheme propagates perturbations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::birkhoff::DEFAULT_EPS0;
use crate::effective::TorusParams;
use crate::phase_space::{mass, momentum, norm_s, FourierState, ModeIndex, SobolevWeight};
use crate::poly_algebra::{p2_value, p4_field, p4_field_linearized, p4_value, CompiledPoly};
use crate::stats::linear_fit;
use crate::Case;

pub const DEFAULT_TOL_H: f64 = 1e-9;
pub const DEFAULT_TOL_L: f64 = 1e-10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DynamicsError {
    #[error("dt must be positive and T non-negative (dt = {dt}, T = {t_end})")]
    BadStep { dt: f64, t_end: f64 },
    #[error("initial norm {norm:.4} exceeds the small-data gate {eps0}")]
    NormGate { norm: f64, eps0: f64 },
    #[error("drift exceeded at t = {t}: |dH| = {dh:.3e} (tol {tol_h:.1e}), |dL| = {dl:.3e}, |dM| = {dm:.3e} (tol {tol_l:.1e}); reduce dt")]
    DriftExceeded { t: f64, dh: f64, dl: f64, dm: f64, tol_h: f64, tol_l: f64 },
    #[error("the block norm never grew by e^3 inside the window (max ratio {max_ratio:.3e})")]
    NoGrowthWindow { max_ratio: f64 },
}

/// Hamiltonian driving the flow: `P2 + P4`, optionally plus a validated higher-order term.
#[derive(Clone, Debug, Default)]
pub enum HChoice {
    #[default]
    P2P4,
    WithR5(CompiledPoly),
}

impl HChoice {
    fn nonlinear(&self, z: &FourierState) -> FourierState {
        match self {
            HChoice::P2P4 => p4_field(z),
            HChoice::WithR5(r5) => p4_field(z).axpy(1.0, &r5.vector_field(z)),
        }
    }

    pub fn energy(&self, z: &FourierState) -> f64 {
        let base = p2_value(z) + p4_value(z);
        match self {
            HChoice::P2P4 => base,
            HChoice::WithR5(r5) => base + r5.eval(z).re,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between snapshots.
    pub stride: usize,
    pub tol_h: Option<f64>,
    pub tol_l: Option<f64>,
    /// Small-data gate on the initial `l^2_1` norm; `None` disables it.
    pub gate: Option<f64>,
    pub keep_states: bool,
    /// Modes `(p, q)` whose actions are recorded in each row.
    pub watch: (ModeIndex, ModeIndex),
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt: 1e-3,
            t_end: 1.0,
            stride: 100,
            tol_h: Some(DEFAULT_TOL_H),
            tol_l: Some(DEFAULT_TOL_L),
            gate: Some(DEFAULT_EPS0),
            keep_states: true,
            watch: (1, 2),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Drift {
    pub h: f64,
    pub l: f64,
    pub m: f64,
}

/// One CSV row: `t, |a_p|^2, |b_q|^2, |a_q|^2, |b_p|^2, H, L, M, tail_norm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    pub ap2: f64,
    pub bq2: f64,
    pub aq2: f64,
    pub bp2: f64,
    pub h: f64,
    pub l: f64,
    pub m: f64,
    pub tail_norm: f64,
}

pub const CSV_HEADER: &str = "t,|a_p|^2,|b_q|^2,|a_q|^2,|b_p|^2,H,L,M,tail_norm";

impl Observables {
    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t, self.ap2, self.bq2, self.aq2, self.bp2, self.h, self.l, self.m, self.tail_norm
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<FourierState>,
    pub rows: Vec<Observables>,
    pub drift: Drift,
}

impl Trajectory {
    pub fn last_state(&self) -> Option<&FourierState> {
        self.states.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

fn observe(h: &HChoice, z: &FourierState, t: f64, (p, q): (ModeIndex, ModeIndex)) -> Observables {
    let a2 = |j| if z.contains(j) { z.a(j).norm_sqr() } else { 0.0 };
    let b2 = |j| if z.contains(j) { z.b(j).norm_sqr() } else { 0.0 };
    let (ap2, bq2, aq2, bp2) = (a2(p), b2(q), a2(q), b2(p));
    let tail: f64 = z
        .indices()
        .map(|j| {
            let a = if j == p || j == q { 0.0 } else { z.a(j).norm_sqr() };
            let b = if j == p || j == q { 0.0 } else { z.b(j).norm_sqr() };
            a + b
        })
        .sum();
    Observables { t, ap2, bq2, aq2, bp2, h: h.energy(z), l: mass(z), m: momentum(z), tail_norm: tail.sqrt() }
}

/// Phases `e^{-i j^2 tau}` for every mode index.
fn rotation(j_max: usize, tau: f64) -> Vec<Complex64> {
    let jm = j_max as ModeIndex;
    (-jm..=jm).map(|j| Complex64::from_polar(1.0, -f64::from(j * j) * tau)).collect()
}

fn rotate(z: &mut FourierState, phases: &[Complex64]) {
    for (x, e) in z.a_slice_mut().iter_mut().zip(phases) {
        *x *= e;
    }
    for (x, e) in z.b_slice_mut().iter_mut().zip(phases) {
        *x *= e;
    }
}

fn rk4(z: &FourierState, dt: f64, f: impl Fn(&FourierState) -> FourierState) -> FourierState {
    let k1 = f(z);
    let k2 = f(&z.axpy(0.5 * dt, &k1));
    let k3 = f(&z.axpy(0.5 * dt, &k2));
    let k4 = f(&z.axpy(dt, &k3));
    let mut out = z.clone();
    out.add_scaled(dt / 6.0, &k1);
    out.add_scaled(dt / 3.0, &k2);
    out.add_scaled(dt / 3.0, &k3);
    out.add_scaled(dt / 6.0, &k4);
    out
}

/// One Strang step of the full flow.
pub struct Stepper {
    half: Vec<Complex64>,
    dt: f64,
}

impl Stepper {
    pub fn new(j_max: usize, dt: f64) -> Self {
        Stepper { half: rotation(j_max, 0.5 * dt), dt }
    }

    pub fn step(&self, h: &HChoice, z: &mut FourierState) {
        rotate(z, &self.half);
        *z = rk4(z, self.dt, |w| h.nonlinear(w));
        rotate(z, &self.half);
    }

    /// Advances a state and a tangent vector together; the tangent follows the
    /// derivative of the scheme itself.
    pub fn step_tangent(&self, z: &mut FourierState, d: &mut FourierState) {
        rotate(z, &self.half);
        rotate(d, &self.half);
        let dt = self.dt;
        let f = |w: &FourierState| p4_field(w);
        let g = |w: &FourierState, e: &FourierState| p4_field_linearized(w, e);
        let (k1, l1) = (f(z), g(z, d));
        let (z2, d2) = (z.axpy(0.5 * dt, &k1), d.axpy(0.5 * dt, &l1));
        let (k2, l2) = (f(&z2), g(&z2, &d2));
        let (z3, d3) = (z.axpy(0.5 * dt, &k2), d.axpy(0.5 * dt, &l2));
        let (k3, l3) = (f(&z3), g(&z3, &d3));
        let (z4, d4) = (z.axpy(dt, &k3), d.axpy(dt, &l3));
        let (k4, l4) = (f(&z4), g(&z4, &d4));
        for (acc, ks) in [(&mut *z, [&k1, &k2, &k3, &k4]), (&mut *d, [&l1, &l2, &l3, &l4])] {
            acc.add_scaled(dt / 6.0, ks[0]);
            acc.add_scaled(dt / 3.0, ks[1]);
            acc.add_scaled(dt / 3.0, ks[2]);
            acc.add_scaled(dt / 6.0, ks[3]);
        }
        rotate(z, &self.half);
        rotate(d, &self.half);
    }
}

pub fn integrate(h: &HChoice, state0: &FourierState, opts: &IntegrateOptions) -> Result<Trajectory, DynamicsError> {
    if !(opts.dt > 0.0 && opts.t_end >= 0.0) {
        return Err(DynamicsError::BadStep { dt: opts.dt, t_end: opts.t_end });
    }
    if let Some(eps0) = opts.gate {
        let norm = norm_s(state0, SobolevWeight(1.0));
        if norm > eps0 * (1.0 + 1e-12) {
            return Err(DynamicsError::NormGate { norm, eps0 });
        }
    }
    let steps = (opts.t_end / opts.dt).round() as usize;
    let stride = opts.stride.max(1);
    let stepper = Stepper::new(state0.j_max(), opts.dt);
    let mut z = state0.clone();
    let first = observe(h, &z, 0.0, opts.watch);
    let mut traj = Trajectory { times: vec![0.0], states: Vec::new(), rows: vec![first], drift: Drift::default() };
    if opts.keep_states {
        traj.states.push(z.clone());
    }
    let th = opts.tol_h.unwrap_or(f64::INFINITY);
    let tl = opts.tol_l.unwrap_or(f64::INFINITY);
    // invariants are checked after every step, snapshots only at the stride
    let checked = opts.tol_h.is_some() || opts.tol_l.is_some();
    for n in 1..=steps {
        stepper.step(h, &mut z);
        let snapshot = n % stride == 0 || n == steps;
        if !(checked || snapshot) {
            continue;
        }
        let t = n as f64 * opts.dt;
        let obs = observe(h, &z, t, opts.watch);
        let d = Drift { h: (obs.h - first.h).abs(), l: (obs.l - first.l).abs(), m: (obs.m - first.m).abs() };
        traj.drift = Drift { h: traj.drift.h.max(d.h), l: traj.drift.l.max(d.l), m: traj.drift.m.max(d.m) };
        if d.h > th || d.l > tl || d.m > tl || !(d.h.is_finite() && d.l.is_finite() && d.m.is_finite()) {
            return Err(DynamicsError::DriftExceeded { t, dh: d.h, dl: d.l, dm: d.m, tol_h: th, tol_l: tl });
        }
        if snapshot {
            traj.times.push(t);
            traj.rows.push(obs);
            if opts.keep_states {
                traj.states.push(z.clone());
            }
        }
    }
    Ok(traj)
}

/// `a_p = sqrt(nu rho1)`, `b_q = sqrt(nu rho2)`, everything else zero.
pub fn two_mode_state(tp: &TorusParams, j_max: usize) -> FourierState {
    let mut z = FourierState::zeros(j_max);
    *z.a_mut(tp.p) = Complex64::new((tp.nu * tp.rho.0).sqrt(), 0.0);
    *z.b_mut(tp.q) = Complex64::new((tp.nu * tp.rho.1).sqrt(), 0.0);
    z
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthRegime {
    Exponential,
    Bounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub rate: f64,
    pub window: (f64, f64),
    pub r2: f64,
    /// `nu sqrt(rho1 rho2)` for the hyperbolic torus, `0` for the elliptic one.
    pub predicted: f64,
    /// Largest real part of the frozen co-rotating linearization.
    pub oracle_rate: f64,
    pub regime: GrowthRegime,
    /// `sup_t |delta(t)| / |delta(0)|` on the measured modes.
    pub max_ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearizedOptions {
    pub dt: f64,
    /// Horizon; `None` picks `12 / (nu s)` for growth runs and `10 / nu` otherwise.
    pub t_end: Option<f64>,
    pub j_max: usize,
    pub seed: u64,
    /// Steps between norm samples.
    pub stride: usize,
}

impl Default for LinearizedOptions {
    fn default() -> Self {
        LinearizedOptions { dt: 1e-2, t_end: None, j_max: 16, seed: 0x11ea_4001, stride: 10 }
    }
}

/// Seeds a perturbation; which modes are measured depends on the torus.
fn seed_perturbation(tp: &TorusParams, case: Case, j_max: usize, seed: u64) -> (FourierState, Vec<(bool, ModeIndex)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = FourierState::random(j_max, SobolevWeight(0.0), 1.0, &mut rng);
    let amp = 1e-8 * tp.nu.sqrt();
    let mut d = FourierState::zeros(j_max);
    let mut watched = Vec::new();
    match case {
        Case::Unstable => {
            // (b_p, a_q) block only
            let (x, y) = (r.b(tp.p), r.a(tp.q));
            let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
            *d.b_mut(tp.p) = x * (amp / n);
            *d.a_mut(tp.q) = y * (amp / n);
            watched.push((false, tp.p));
            watched.push((true, tp.q));
        }
        Case::Stable => {
            // every external mode; the internal pair carries a neutral Jordan block
            let mut n2 = 0.0;
            for j in r.indices().filter(|&j| j != tp.p) {
                *d.a_mut(j) = r.a(j);
                *d.b_mut(j) = r.b(j);
                n2 += r.a(j).norm_sqr() + r.b(j).norm_sqr();
                watched.push((true, j));
                watched.push((false, j));
            }
            d = d.scaled(Complex64::new(amp / n2.sqrt(), 0.0));
        }
    }
    (d, watched)
}

fn watched_norm(d: &FourierState, watched: &[(bool, ModeIndex)]) -> f64 {
    watched.iter().map(|&(is_a, j)| if is_a { d.a(j).norm_sqr() } else { d.b(j).norm_sqr() }).sum::<f64>().sqrt()
}

/// Variational flow along the two-mode solution and the fitted growth rate
/// of the perturbation.
pub fn linearized_flow(tp: &TorusParams, case: Case, opts: &LinearizedOptions) -> Result<GrowthFit, DynamicsError> {
    let tp = if case == Case::Stable { TorusParams { q: tp.p, ..*tp } } else { *tp };
    let predicted = if case == Case::Unstable { tp.nu * tp.s() } else { 0.0 };
    let t_end = opts.t_end.unwrap_or(if case == Case::Unstable { 12.0 / (tp.nu * tp.s()) } else { 10.0 / tp.nu });
    if !(opts.dt > 0.0 && t_end > 0.0) {
        return Err(DynamicsError::BadStep { dt: opts.dt, t_end });
    }
    let mut z = two_mode_state(&tp, opts.j_max);
    let (mut d, watched) = seed_perturbation(&tp, case, opts.j_max, opts.seed);
    let n0 = watched_norm(&d, &watched);
    let stepper = Stepper::new(opts.j_max, opts.dt);
    let steps = (t_end / opts.dt).round() as usize;
    let stride = opts.stride.max(1);
    let mut ts = vec![0.0];
    let mut logs = vec![0.0];
    let mut max_ratio: f64 = 1.0;
    let (mut lo, mut hi) = (None, None);
    for n in 1..=steps {
        stepper.step_tangent(&mut z, &mut d);
        if n % stride == 0 || n == steps {
            let t = n as f64 * opts.dt;
            let norm = watched_norm(&d, &watched);
            let ratio = norm / n0;
            max_ratio = max_ratio.max(ratio);
            ts.push(t);
            logs.push(ratio.ln());
            if case == Case::Unstable {
                if lo.is_none() && ratio >= 10.0 {
                    lo = Some(ts.len() - 1);
                }
                if lo.is_some() && (ratio >= 1e3 || norm >= 0.01) {
                    hi = Some(ts.len() - 1);
                    break;
                }
            }
        }
    }
    let oracle_rate = frozen_spectrum(&tp, case, opts.j_max).max_real;
    match case {
        Case::Unstable => {
            let (Some(a), Some(b)) = (lo, hi) else {
                return Err(DynamicsError::NoGrowthWindow { max_ratio });
            };
            if logs[b] - logs[a] < 3.0 {
                return Err(DynamicsError::NoGrowthWindow { max_ratio });
            }
            let fit = linear_fit(&ts[a..=b], &logs[a..=b]);
            Ok(GrowthFit { rate: fit.slope, window: (ts[a], ts[b]), r2: fit.r2, predicted, oracle_rate, regime: GrowthRegime::Exponential, max_ratio, seed: opts.seed })
        }
        Case::Stable => {
            let fit = linear_fit(&ts, &logs);
            let regime = if fit.slope.abs() <= tp.nu / 10.0 && max_ratio <= 10.0 { GrowthRegime::Bounded } else { GrowthRegime::Exponential };
            Ok(GrowthFit { rate: fit.slope, window: (0.0, *ts.last().unwrap()), r2: fit.r2, predicted, oracle_rate, regime, max_ratio, seed: opts.seed })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub max_real: f64,
    /// Eigenvalues as `[re, im]`.
    pub eigenvalues: Vec<[f64; 2]>,
}

/// Real matrix of the linearization around the two-mode solution in the
/// co-rotating frame `delta a_j = alpha_j e^{-i Omega1 t}`, `delta b_j = beta_j e^{-i Omega2 t}`:
/// `i alpha_j' = (j^2-p^2) alpha_j + A conj(B) beta_{j-p+q} + A B conj(beta_{p+q-j})`
/// and symmetrically for `beta`. Coordinates are `(Re, Im)` of `alpha` then `beta`.
/// For the elliptic torus the internal pair is left out.
pub fn linearization_matrix(tp: &TorusParams, case: Case, j_max: usize) -> DMatrix<f64> {
    let tp = if case == Case::Stable { TorusParams { q: tp.p, ..*tp } } else { *tp };
    let (p, q) = (tp.p, tp.q);
    let a0 = (tp.nu * tp.rho.0).sqrt();
    let b0 = (tp.nu * tp.rho.1).sqrt();
    let jm = j_max as ModeIndex;
    let mut slots: Vec<(bool, ModeIndex)> = Vec::new();
    for is_a in [true, false] {
        for j in -jm..=jm {
            if !(case == Case::Stable && j == p) {
                slots.push((is_a, j));
            }
        }
    }
    let index = |is_a: bool, j: ModeIndex| slots.iter().position(|&s| s == (is_a, j));
    let n = 2 * slots.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    // x' = -i (lin x + c y + e conj(w)) in real form
    let mut add = |row: usize, col: Option<usize>, c: Complex64, conj: bool| {
        let Some(col) = col else { return };
        let w = Complex64::new(0.0, -1.0) * c;
        let (cr, ci) = (w.re, w.im);
        let s = if conj { -1.0 } else { 1.0 };
        // real part row
        m[(2 * row, 2 * col)] += cr;
        m[(2 * row, 2 * col + 1)] += -ci * s;
        m[(2 * row + 1, 2 * col)] += ci;
        m[(2 * row + 1, 2 * col + 1)] += cr * s;
    };
    let ab = Complex64::new(a0 * b0, 0.0);
    for (row, &(is_a, j)) in slots.iter().enumerate() {
        if is_a {
            add(row, Some(row), Complex64::new(f64::from(j * j - p * p), 0.0), false);
            add(row, index(false, j - p + q), ab, false);
            add(row, index(false, p + q - j), ab, true);
        } else {
            add(row, Some(row), Complex64::new(f64::from(j * j - q * q), 0.0), false);
            add(row, index(true, j - q + p), ab, false);
            add(row, index(true, p + q - j), ab, true);
        }
    }
    m
}

/// Eigenvalues of [`linearization_matrix`]. The matrix only couples a handful
/// of modes at a time, so each connected block is decomposed separately.
pub fn frozen_spectrum(tp: &TorusParams, case: Case, j_max: usize) -> Spectrum {
    let m = linearization_matrix(tp, case, j_max);
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for r in 0..n {
        for c in 0..n {
            if m[(r, c)] != 0.0 {
                let (a, b) = (root(&mut parent, r), root(&mut parent, c));
                parent[a] = b;
            }
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        blocks.entry(r).or_default().push(i);
    }
    let mut ev: Vec<Complex64> = Vec::with_capacity(n);
    for idx in blocks.values() {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
        ev.extend(block_eigenvalues(&sub));
    }
    let eigenvalues: Vec<[f64; 2]> = ev.iter().map(|c| [c.re, c.im]).collect();
    let max_real = ev.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    Spectrum { max_real, eigenvalues }
}

/// Francis iteration stalls on some of these exactly structured blocks; a
/// real shift breaks the symmetry of the spectrum and is undone afterwards.
fn block_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let n = m.nrows();
    for shift in [0.0, 0.3, -0.55, 1.7] {
        let shifted = m + DMatrix::<f64>::identity(n, n) * shift;
        if let Some(schur) = shifted.try_schur(1e-15, 10_000) {
            return schur.complex_eigenvalues().iter().map(|z| z - shift).collect();
        }
    }
    panic!("Schur iteration failed on a {n}x{n} block");
}

#[derive(Clone, Debug, Serialize)]
pub struct BeatingOptions {
    pub dt: f64,
    pub j_max: usize,
    /// Horizon in units of `1/eps^2`.
    pub horizon: f64,
    pub stride: usize,
}

impl Default for BeatingOptions {
    fn default() -> Self {
        BeatingOptions { dt: 1e-2, j_max: 16, horizon: 12.0, stride: 10 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BeatingReport {
    pub gamma: f64,
    pub epsilon: f64,
    pub p: ModeIndex,
    pub q: ModeIndex,
    /// Initial data uses squared amplitudes: `|a_p|^2 = |b_q|^2 = (1-gamma) eps^2`, `|a_q|^2 = |b_p|^2 = gamma eps^2`.
    pub normalization: &'static str,
    pub max_exchange: f64,
    pub t_peak: f64,
    pub max_pair_gap_q: f64,
    pub max_pair_gap_p: f64,
    pub return_time: Option<f64>,
    pub drift: Drift,
    #[serde(skip)]
    pub rows: Vec<Observables>,
}

/// Four-mode energy exchange started from real amplitudes.
pub fn beating(gamma: f64, epsilon: f64, p: ModeIndex, q: ModeIndex, opts: &BeatingOptions) -> Result<BeatingReport, DynamicsError> {
    let e2 = epsilon * epsilon;
    let mut z = FourierState::zeros(opts.j_max);
    *z.a_mut(p) = Complex64::new(((1.0 - gamma) * e2).sqrt(), 0.0);
    *z.b_mut(q) = Complex64::new(((1.0 - gamma) * e2).sqrt(), 0.0);
    *z.a_mut(q) = Complex64::new((gamma * e2).sqrt(), 0.0);
    *z.b_mut(p) = Complex64::new((gamma * e2).sqrt(), 0.0);
    let io = IntegrateOptions {
        dt: opts.dt,
        t_end: opts.horizon / e2,
        stride: opts.stride,
        tol_h: None,
        tol_l: None,
        gate: None,
        keep_states: false,
        watch: (p, q),
    };
    let traj = integrate(&HChoice::P2P4, &z, &io)?;
    let rows = traj.rows;
    let ratio: Vec<f64> = rows.iter().map(|r| r.aq2 / e2).collect();
    let peak = ratio.iter().copied().fold(0.0, f64::max);
    // first exchange: climb past 90% of the way to the peak, then to the local maximum
    let level = gamma + 0.9 * (peak - gamma);
    let mut ipeak = ratio.iter().position(|&x| x >= level).unwrap_or(0);
    while ipeak + 1 < ratio.len() && ratio[ipeak + 1] >= ratio[ipeak] {
        ipeak += 1;
    }
    let t_peak = rows[ipeak].t;
    let (mut gq, mut gp): (f64, f64) = (0.0, 0.0);
    for r in &rows {
        gq = gq.max((r.aq2 - r.bp2).abs() / e2);
        gp = gp.max((r.ap2 - r.bq2).abs() / e2);
    }
    let return_time = rows[ipeak..].iter().find(|r| r.aq2 / e2 <= 1.1 * gamma).map(|r| r.t);
    Ok(BeatingReport {
        gamma,
        epsilon,
        p,
        q,
        normalization: "actions",
        max_exchange: peak,
        t_peak,
        max_pair_gap_q: gq,
        max_pair_gap_p: gp,
        return_time,
        drift: traj.drift,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_flow_is_exact_rotation() {
        let mut z = FourierState::zeros(3);
        *z.a_mut(2) = Complex64::new(0.01, 0.0);
        let opts = IntegrateOptions { dt: 1e-3, t_end: 1.0, stride: 1000, ..Default::default() };
        let tr = integrate(&HChoice::P2P4, &z, &opts).unwrap();
        let a = tr.last_state().unwrap().a(2);
        assert!((a - Complex64::from_polar(0.01, -4.0)).norm() < 1e-15);
    }

    #[test]
    fn gate_and_step_errors() {
        let z = FourierState::random(4, SobolevWeight(1.0), 0.5, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(integrate(&HChoice::P2P4, &z, &IntegrateOptions::default()), Err(DynamicsError::NormGate { .. })));
        let opts = IntegrateOptions { dt: 0.0, ..Default::default() };
        assert!(matches!(integrate(&HChoice::P2P4, &z, &opts), Err(DynamicsError::BadStep { .. })));
    }
}
