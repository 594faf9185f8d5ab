//! Small divisors of the effective normal forms.
//!
//! Every divisor is affine in `(rho1, rho2, sqrt(rho1 rho2))`:
//! `N + nu (c1 rho1 + c2 rho2 + c3 s) + i nu c4 s`. A catalog is built once per
//! `(p, q, nu, J, N)`; conservation of mass and momentum removes most
//! candidates, the rest are classified uniformly over `[1, 2]^2` as either
//! bounded below by `delta` or transversal along `(k2, k1)/|k|`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::effective::{Branch, EffectiveModel, TorusParams};
use crate::phase_space::ModeIndex;
use crate::stats::wilson_interval;
use crate::Case;

pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3)";

/// External mode: elliptic `(j, +/-)` or one of the two hyperbolic directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Elliptic { j: ModeIndex, branch: Branch },
    E,
    F,
}

impl Label {
    fn cluster(self) -> Option<ModeIndex> {
        match self {
            Label::Elliptic { j, .. } => Some(j.abs()),
            _ => None,
        }
    }

    pub fn is_elliptic(self) -> bool {
        matches!(self, Label::Elliptic { .. })
    }

    pub fn same_cluster(self, other: Label) -> bool {
        self.cluster() == other.cluster()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Elliptic { j, branch: Branch::Plus } => write!(f, "({j},+)"),
            Label::Elliptic { j, branch: Branch::Minus } => write!(f, "({j},-)"),
            Label::E => f.write_str("e"),
            Label::F => f.write_str("f"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Kind {
    #[serde(rename = "Omega.k")]
    Omega,
    #[serde(rename = "Omega.k+L")]
    Plus,
    #[serde(rename = "Omega.k+L+L")]
    PlusPlus,
    #[serde(rename = "Omega.k+L-L")]
    PlusMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    ExcludedByMass,
    ExcludedByMomentum,
    BoundedBelow,
    Transversal,
    /// Survives the selection rules; classification still pending.
    MustCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Divisor {
    pub k: [i32; 2],
    pub kind: Kind,
    pub alpha: Option<Label>,
    pub beta: Option<Label>,
}

/// `n + nu (c1 rho1 + c2 rho2 + c3 s) + i nu c4 s` with `s = sqrt(rho1 rho2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Affine {
    pub n: i64,
    pub c1: i64,
    pub c2: i64,
    pub c3: i64,
    pub c4: i64,
}

impl Affine {
    fn add(self, o: Affine, sign: i64) -> Affine {
        Affine { n: self.n + sign * o.n, c1: self.c1 + sign * o.c1, c2: self.c2 + sign * o.c2, c3: self.c3 + sign * o.c3, c4: self.c4 + sign * o.c4 }
    }

    pub fn eval(&self, rho: (f64, f64), nu: f64) -> Complex64 {
        let s = (rho.0 * rho.1).sqrt();
        let re = self.n as f64 + nu * (self.c1 as f64 * rho.0 + self.c2 as f64 * rho.1 + self.c3 as f64 * s);
        Complex64::new(re, nu * self.c4 as f64 * s)
    }

    /// Lower bound of `|value|` over `rho in [1, 2]^2`, exact for each of the real and imaginary parts.
    pub fn uniform_lower_bound(&self, nu: f64) -> f64 {
        let (lo, hi) = affine_range(self.c1 as f64, self.c2 as f64, self.c3 as f64);
        let (lo, hi) = (self.n as f64 + nu * lo, self.n as f64 + nu * hi);
        let re = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
        let im = nu * self.c4.unsigned_abs() as f64;
        re.hypot(im)
    }
}

/// Exact range of `c1 x + c2 y + c3 sqrt(x y)` on `[1, 2]^2`.
pub fn affine_range(c1: f64, c2: f64, c3: f64) -> (f64, f64) {
    let f = |x: f64, y: f64| c1 * x + c2 * y + c3 * (x * y).sqrt();
    let mut cands = Vec::with_capacity(9);
    for x in [1.0, 2.0] {
        for y in [1.0, 2.0] {
            cands.push(f(x, y));
        }
    }
    if c3 != 0.0 {
        // edges: d/dt (c t + c3 sqrt(a t)) = 0 at t = c3^2 a / (4 c^2)
        for a in [1.0, 2.0] {
            if c2 != 0.0 && -c3 / c2 > 0.0 {
                let t = c3 * c3 * a / (4.0 * c2 * c2);
                if (1.0..=2.0).contains(&t) {
                    cands.push(f(a, t));
                }
            }
            if c1 != 0.0 && -c3 / c1 > 0.0 {
                let t = c3 * c3 * a / (4.0 * c1 * c1);
                if (1.0..=2.0).contains(&t) {
                    cands.push(f(t, a));
                }
            }
        }
        // interior critical rays exist only when 4 c1 c2 = c3^2, and f vanishes there
        if c1 != 0.0 && (4.0 * c1 * c2 - c3 * c3).abs() < 1e-12 && -c3 / c1 > 0.0 {
            let r = 4.0 * c1 * c1 / (c3 * c3);
            if (0.5..=2.0).contains(&r) {
                cands.push(0.0);
            }
        }
    }
    let lo = cands.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cands.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Eigenvalue of a label as an affine form.
pub fn lambda_form(p: ModeIndex, q: ModeIndex, case: Case, l: Label) -> Affine {
    match (case, l) {
        (Case::Unstable, Label::Elliptic { j, branch }) => {
            let n = i64::from(j) * i64::from(j);
            match branch {
                Branch::Plus => Affine { n, c2: 1, ..Default::default() },
                Branch::Minus => Affine { n, c1: 1, ..Default::default() },
            }
        }
        (Case::Unstable, Label::E) => Affine { c1: -1, c2: 1, c4: -1, ..Default::default() },
        (Case::Unstable, Label::F) => Affine { c1: 1, c2: -1, c4: -1, ..Default::default() },
        (Case::Stable, Label::Elliptic { j, branch }) => {
            let n = i64::from(j) * i64::from(j) - i64::from(p) * i64::from(p);
            Affine { n, c3: if branch == Branch::Plus { 1 } else { -1 }, ..Default::default() }
        }
        (Case::Stable, _) => {
            let _ = q;
            panic!("no hyperbolic directions around the elliptic torus")
        }
    }
}

/// `Omega . k` as an affine form.
pub fn omega_form(p: ModeIndex, q: ModeIndex, case: Case, k: [i32; 2]) -> Affine {
    let q = if case == Case::Stable { p } else { q };
    let (k1, k2) = (i64::from(k[0]), i64::from(k[1]));
    Affine { n: k1 * i64::from(p * p) + k2 * i64::from(q * q), c1: k2, c2: k1, ..Default::default() }
}

pub fn divisor_form(p: ModeIndex, q: ModeIndex, case: Case, d: &Divisor) -> Affine {
    let mut a = omega_form(p, q, case, d.k);
    if let Some(al) = d.alpha {
        a = a.add(lambda_form(p, q, case, al), 1);
    }
    if let Some(be) = d.beta {
        let sign = if d.kind == Kind::PlusMinus { -1 } else { 1 };
        a = a.add(lambda_form(p, q, case, be), sign);
    }
    a
}

fn signed_labels(d: &Divisor) -> impl Iterator<Item = (Label, i64)> {
    let beta_sign = if d.kind == Kind::PlusMinus { -1 } else { 1 };
    d.alpha.map(|l| (l, 1)).into_iter().chain(d.beta.map(|l| (l, beta_sign)))
}

/// Whether the monomial behind a divisor can occur in a perturbation that
/// commutes with the conserved quantities of `case`.
pub fn selection_rule(p: ModeIndex, q: ModeIndex, case: Case, d: &Divisor) -> Disposition {
    let (k1, k2) = (i64::from(d.k[0]), i64::from(d.k[1]));
    match case {
        Case::Unstable => {
            let mut charge = k1 + k2;
            let mut mom = i64::from(p) * k1 + i64::from(q) * k2;
            for (l, sign) in signed_labels(d) {
                if let Label::Elliptic { j, .. } = l {
                    charge += sign;
                    mom += sign * i64::from(j);
                }
            }
            if charge != 0 {
                Disposition::ExcludedByMass
            } else if mom != 0 {
                Disposition::ExcludedByMomentum
            } else {
                Disposition::MustCheck
            }
        }
        Case::Stable => {
            // both partial masses are pure actions: no angle dependence at all
            if k1 != 0 || k2 != 0 {
                return Disposition::ExcludedByMass;
            }
            let mut mom = 0;
            for (l, sign) in signed_labels(d) {
                if let Label::Elliptic { j, .. } = l {
                    mom += sign * i64::from(j - p);
                }
            }
            if mom != 0 {
                Disposition::ExcludedByMomentum
            } else {
                Disposition::MustCheck
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub divisor: Divisor,
    pub form: Affine,
    pub disposition: Disposition,
    /// Uniform lower bound of `|value|` on `[1, 2]^2`.
    pub lower_bound: f64,
    /// Directional derivative along `(k2, k1)/|k|` for transversal entries.
    pub derivative: Option<f64>,
    /// Touches the elliptic cutoff `|j| = J`.
    pub boundary: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivisorRecord {
    pub k: [i32; 2],
    pub kind: Kind,
    pub alpha: Option<Label>,
    pub beta: Option<Label>,
    #[serde(serialize_with = "ser_c")]
    pub value: Complex64,
    pub disposition: Disposition,
    pub lower_bound: f64,
    pub derivative: Option<f64>,
    pub boundary: bool,
}

fn ser_c<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

impl DivisorRecord {
    fn from_entry(e: &CatalogEntry, rho: (f64, f64), nu: f64) -> Self {
        DivisorRecord {
            k: e.divisor.k,
            kind: e.divisor.kind,
            alpha: e.divisor.alpha,
            beta: e.divisor.beta,
            value: e.form.eval(rho, nu),
            disposition: e.disposition,
            lower_bound: e.lower_bound,
            derivative: e.derivative,
            boundary: e.boundary,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NonresError {
    #[error("small divisor neither bounded below nor transversal: {0:?}")]
    ViolationFound(Box<DivisorRecord>),
    #[error("hypothesis {which} violated by {pair}: value {value:.3e} < delta")]
    HypothesisViolated { which: &'static str, pair: String, value: f64 },
    #[error("kappa = {kappa} must lie in [0, delta = {delta}]")]
    KappaOutOfRange { kappa: f64, delta: f64 },
}

/// External labels with `|j| <= J` for the given torus.
pub fn labels(p: ModeIndex, q: ModeIndex, case: Case, j_max: usize) -> Vec<Label> {
    let jm = j_max as ModeIndex;
    let mut out = Vec::new();
    for j in -jm..=jm {
        let internal = match case {
            Case::Unstable => j == p || j == q,
            Case::Stable => j == p,
        };
        if !internal {
            out.push(Label::Elliptic { j, branch: Branch::Plus });
            out.push(Label::Elliptic { j, branch: Branch::Minus });
        }
    }
    if case == Case::Unstable {
        out.push(Label::E);
        out.push(Label::F);
    }
    out
}

/// `k in Z^2` with `|k| <= N`, in lexicographic order.
pub fn lattice(n_cut: u32) -> Vec<[i32; 2]> {
    let n = n_cut as i32;
    let mut out = Vec::new();
    for k1 in -n..=n {
        for k2 in -n..=n {
            if k1 * k1 + k2 * k2 <= n * n {
                out.push([k1, k2]);
            }
        }
    }
    out
}

/// All candidate divisors before selection, in canonical order.
fn candidates(p: ModeIndex, q: ModeIndex, case: Case, j_max: usize, n_cut: u32, mut visit: impl FnMut(Divisor)) {
    let ls = labels(p, q, case, j_max);
    let ks = lattice(n_cut);
    for &k in &ks {
        if k != [0, 0] {
            visit(Divisor { k, kind: Kind::Omega, alpha: None, beta: None });
        }
    }
    for &k in &ks {
        for &a in &ls {
            visit(Divisor { k, kind: Kind::Plus, alpha: Some(a), beta: None });
        }
    }
    for &k in &ks {
        let zero = k == [0, 0];
        for (i, &a) in ls.iter().enumerate() {
            for &b in &ls[i..] {
                if zero && !(a.is_elliptic() && b.is_elliptic()) {
                    continue;
                }
                visit(Divisor { k, kind: Kind::PlusPlus, alpha: Some(a), beta: Some(b) });
            }
        }
    }
    for &k in &ks {
        let zero = k == [0, 0];
        for &a in &ls {
            for &b in &ls {
                if zero && !(a.is_elliptic() && b.is_elliptic() && !a.same_cluster(b)) {
                    continue;
                }
                visit(Divisor { k, kind: Kind::PlusMinus, alpha: Some(a), beta: Some(b) });
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DivisorCatalog {
    pub p: ModeIndex,
    pub q: ModeIndex,
    pub case: Case,
    pub nu: f64,
    pub delta: f64,
    pub j_max: usize,
    pub n_cut: u32,
    pub candidates: usize,
    pub excluded_by_mass: usize,
    pub excluded_by_momentum: usize,
    pub entries: Vec<CatalogEntry>,
    /// Populated only on request.
    pub excluded: Vec<CatalogEntry>,
}

fn classify(form: &Affine, k: [i32; 2], nu: f64, delta: f64) -> (Disposition, f64, Option<f64>) {
    let lb = form.uniform_lower_bound(nu);
    if lb >= delta {
        return (Disposition::BoundedBelow, lb, None);
    }
    if k != [0, 0] && form.c3 == 0 {
        let norm = f64::from(k[0] * k[0] + k[1] * k[1]).sqrt();
        let d = nu * (form.c1 as f64 * f64::from(k[1]) + form.c2 as f64 * f64::from(k[0])) / norm;
        if d.abs() >= delta {
            return (Disposition::Transversal, lb, Some(d));
        }
        return (Disposition::MustCheck, lb, Some(d));
    }
    (Disposition::MustCheck, lb, None)
}

impl DivisorCatalog {
    /// Enumerates every candidate with `|k| <= N`, `|j| <= J` and classifies the survivors at `delta = nu/2`.
    pub fn build(p: ModeIndex, q: ModeIndex, case: Case, nu: f64, j_max: usize, n_cut: u32, include_excluded: bool) -> Result<Self, NonresError> {
        let q = if case == Case::Stable { p } else { q };
        let delta = nu / 2.0;
        let jm = j_max as ModeIndex;
        let mut cat = DivisorCatalog {
            p,
            q,
            case,
            nu,
            delta,
            j_max,
            n_cut,
            candidates: 0,
            excluded_by_mass: 0,
            excluded_by_momentum: 0,
            entries: Vec::new(),
            excluded: Vec::new(),
        };
        let mut violation = None;
        candidates(p, q, case, j_max, n_cut, |d| {
            cat.candidates += 1;
            let sel = selection_rule(p, q, case, &d);
            let boundary = [d.alpha, d.beta].iter().flatten().any(|l| matches!(l, Label::Elliptic { j, .. } if j.abs() == jm));
            match sel {
                Disposition::ExcludedByMass | Disposition::ExcludedByMomentum => {
                    if sel == Disposition::ExcludedByMass {
                        cat.excluded_by_mass += 1;
                    } else {
                        cat.excluded_by_momentum += 1;
                    }
                    if include_excluded {
                        let form = divisor_form(p, q, case, &d);
                        cat.excluded.push(CatalogEntry { divisor: d, form, disposition: sel, lower_bound: form.uniform_lower_bound(nu), derivative: None, boundary });
                    }
                }
                _ => {
                    let form = divisor_form(p, q, case, &d);
                    let (disposition, lower_bound, derivative) = classify(&form, d.k, nu, delta);
                    let entry = CatalogEntry { divisor: d, form, disposition, lower_bound, derivative, boundary };
                    if disposition == Disposition::MustCheck && violation.is_none() {
                        violation = Some(entry.clone());
                    }
                    cat.entries.push(entry);
                }
            }
        });
        if let Some(e) = violation {
            return Err(NonresError::ViolationFound(Box::new(DivisorRecord::from_entry(&e, (1.5, 1.5), nu))));
        }
        Ok(cat)
    }

    pub fn records_at(&self, rho: (f64, f64)) -> Vec<DivisorRecord> {
        self.entries.iter().map(|e| DivisorRecord::from_entry(e, rho, self.nu)).collect()
    }

    pub fn excluded_records_at(&self, rho: (f64, f64)) -> Vec<DivisorRecord> {
        self.excluded.iter().map(|e| DivisorRecord::from_entry(e, rho, self.nu)).collect()
    }

    /// Re-checks every disposition numerically at one point of the parameter box.
    pub fn check_at(&self, rho: (f64, f64)) -> Result<(), NonresError> {
        let h = 1e-6;
        for e in &self.entries {
            let ok = match e.disposition {
                Disposition::BoundedBelow => e.form.eval(rho, self.nu).norm() >= self.delta,
                Disposition::Transversal => {
                    let k = e.divisor.k;
                    let n = f64::from(k[0] * k[0] + k[1] * k[1]).sqrt();
                    let z = (f64::from(k[1]) / n, f64::from(k[0]) / n);
                    let up = e.form.eval((rho.0 + h * z.0, rho.1 + h * z.1), self.nu).re;
                    let dn = e.form.eval((rho.0 - h * z.0, rho.1 - h * z.1), self.nu).re;
                    ((up - dn) / (2.0 * h)).abs() >= self.delta * (1.0 - 1e-6)
                }
                _ => false,
            };
            if !ok {
                return Err(NonresError::ViolationFound(Box::new(DivisorRecord::from_entry(e, rho, self.nu))));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub params: TorusParams,
    pub case: Case,
    pub delta: f64,
    pub j_max: usize,
    pub n_cut: u32,
    pub candidates: usize,
    pub excluded_by_mass: usize,
    pub excluded_by_momentum: usize,
    pub records: Vec<DivisorRecord>,
}

/// Classified divisors at `tp.rho`. Excluded candidates are counted, and listed only with `include_excluded`.
pub fn scan_divisors(tp: &TorusParams, j_max: usize, case: Case, n_cut: u32, include_excluded: bool) -> Result<ScanReport, NonresError> {
    let cat = DivisorCatalog::build(tp.p, tp.q, case, tp.nu, j_max, n_cut, include_excluded)?;
    cat.check_at(tp.rho)?;
    let mut records = cat.records_at(tp.rho);
    if include_excluded {
        records.extend(cat.excluded_records_at(tp.rho));
    }
    Ok(ScanReport {
        params: *tp,
        case,
        delta: cat.delta,
        j_max,
        n_cut,
        candidates: cat.candidates,
        excluded_by_mass: cat.excluded_by_mass,
        excluded_by_momentum: cat.excluded_by_momentum,
        records,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub case: Case,
    pub delta: f64,
    pub j_max: usize,
    /// `max |Lambda - w^2|` over the window.
    pub a0_constant: f64,
    pub a1a_min: f64,
    pub a1b_min: f64,
    /// Smallest `|Lambda_a + Lambda_b|` among pairs allowed by momentum.
    pub a1c_min: f64,
    /// Pairs whose sum can vanish but whose monomial is forbidden by momentum.
    pub a1c_zero_sums_excluded: usize,
}

/// Hypotheses A0 and A1 for the external spectrum, uniformly over `rho in [1, 2]^2`.
#[allow(non_snake_case)]
pub fn check_A0_A1(model: &EffectiveModel, j_max: usize) -> Result<HypothesisReport, NonresError> {
    let TorusParams { p, q, nu, .. } = model.params;
    let case = model.case;
    let delta = nu / 2.0;
    let ls = labels(p, q, case, j_max);
    let lam = |l: Label| lambda_form(p, q, case, l);
    let mut a0: f64 = 0.0;
    let mut a1a = f64::INFINITY;
    for &l in &ls {
        let f = lam(l);
        match l {
            Label::Elliptic { j, .. } => {
                let shifted = Affine { n: f.n - i64::from(j) * i64::from(j), ..f };
                let (lo, hi) = affine_range(shifted.c1 as f64, shifted.c2 as f64, shifted.c3 as f64);
                let n = shifted.n as f64;
                a0 = a0.max((n + nu * lo).abs()).max((n + nu * hi).abs());
                let v = f.uniform_lower_bound(nu);
                if v < delta {
                    return Err(NonresError::HypothesisViolated { which: "A1(a)", pair: l.to_string(), value: v });
                }
                a1a = a1a.min(v);
            }
            _ => {
                let v = nu * f.c4.unsigned_abs() as f64;
                if v < delta {
                    return Err(NonresError::HypothesisViolated { which: "A1(a)", pair: l.to_string(), value: v });
                }
                a1a = a1a.min(v);
            }
        }
    }
    let mut a1b = f64::INFINITY;
    let mut a1c = f64::INFINITY;
    let mut zero_sums = 0;
    for (i, &a) in ls.iter().enumerate() {
        for &b in &ls[i..] {
            if !a.same_cluster(b) {
                let v = lam(a).add(lam(b), -1).uniform_lower_bound(nu);
                if v < delta {
                    return Err(NonresError::HypothesisViolated { which: "A1(b)", pair: format!("{a} {b}"), value: v });
                }
                a1b = a1b.min(v);
            }
            if a.is_elliptic() && b.is_elliptic() {
                let v = lam(a).add(lam(b), 1).uniform_lower_bound(nu);
                let d = Divisor { k: [0, 0], kind: Kind::PlusPlus, alpha: Some(a), beta: Some(b) };
                if selection_rule(p, q, case, &d) == Disposition::MustCheck {
                    if v < delta {
                        return Err(NonresError::HypothesisViolated { which: "A1(c)", pair: format!("{a} {b}"), value: v });
                    }
                    a1c = a1c.min(v);
                } else if v < delta {
                    zero_sums += 1;
                }
            }
        }
    }
    Ok(HypothesisReport { case, delta, j_max, a0_constant: a0, a1a_min: a1a, a1b_min: a1b, a1c_min: a1c, a1c_zero_sums_excluded: zero_sums })
}

#[derive(Clone, Debug)]
pub struct MeasureOptions {
    pub n_cut: u32,
    /// Momentum constant; `None` means `|(p, q)|`.
    pub m_const: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub j_max: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { n_cut: 8, m_const: None, samples: 4000, seed: 0x6d65_6173, j_max: 64 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    pub kappa: f64,
    #[serde(rename = "N")]
    pub n_cut: u32,
    #[serde(rename = "M")]
    pub m_const: f64,
    pub excluded_fraction: f64,
    pub excluded_count: usize,
    pub sample_count: usize,
    pub wilson95: (f64, f64),
    pub seed: u64,
    pub prng: &'static str,
}

/// Monte-Carlo estimate of the measure of `rho` where some divisor with
/// `|k| <= N` drops below each `kappa`. All `kappa` share the same samples,
/// so the fractions are monotone in `kappa` by construction.
pub fn measure_sweep(p: ModeIndex, q: ModeIndex, case: Case, nu: f64, kappas: &[f64], opts: &MeasureOptions) -> Result<Vec<MeasureReport>, NonresError> {
    let delta = nu / 2.0;
    for &kappa in kappas {
        if !(0.0..=delta).contains(&kappa) {
            return Err(NonresError::KappaOutOfRange { kappa, delta });
        }
    }
    let kmax = kappas.iter().copied().fold(0.0, f64::max);
    let q = if case == Case::Stable { p } else { q };
    let m_const = opts.m_const.unwrap_or_else(|| f64::from(p).hypot(f64::from(q)));
    let cat = DivisorCatalog::build(p, q, case, nu, opts.j_max, opts.n_cut, false)?;
    let relevant: Vec<&CatalogEntry> = cat
        .entries
        .iter()
        .filter(|e| e.lower_bound < kmax || (kmax == 0.0 && e.lower_bound == 0.0))
        .filter(|e| {
            let d = &e.divisor;
            match (d.kind, d.alpha, d.beta) {
                (Kind::PlusMinus, Some(a @ Label::Elliptic { j, .. }), Some(b)) if a != b && a.same_cluster(b) => {
                    let kn = f64::from(d.k[0] * d.k[0] + d.k[1] * d.k[1]).sqrt();
                    f64::from(j.abs()) <= m_const * kn
                }
                _ => true,
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let rhos: Vec<(f64, f64)> = (0..opts.samples).map(|_| (rng.gen_range(1.0..=2.0), rng.gen_range(1.0..=2.0))).collect();
    let smallest: Vec<f64> = rhos
        .par_iter()
        .map(|&rho| relevant.iter().map(|e| e.form.eval(rho, nu).norm()).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(kappas
        .iter()
        .map(|&kappa| {
            let count = smallest.iter().filter(|&&m| m < kappa).count();
            MeasureReport {
                kappa,
                n_cut: opts.n_cut,
                m_const,
                excluded_fraction: count as f64 / opts.samples.max(1) as f64,
                excluded_count: count,
                sample_count: opts.samples,
                wilson95: wilson_interval(count, opts.samples),
                seed: opts.seed,
                prng: PRNG_NAME,
            }
        })
        .collect())
}

pub fn measure_estimate(kappa: f64, tp: &TorusParams, case: Case, opts: &MeasureOptions) -> Result<MeasureReport, NonresError> {
    Ok(measure_sweep(tp.p, tp.q, case, tp.nu, &[kappa], opts)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ell(j: i32, plus: bool) -> Label {
        Label::Elliptic { j, branch: if plus { Branch::Plus } else { Branch::Minus } }
    }

    #[test]
    fn range_matches_dense_grid() {
        for &(c1, c2, c3) in &[(1.0, -1.0, 0.0), (0.0, 0.0, 2.0), (1.0, 1.0, -2.0), (-1.0, 0.0, 1.0), (2.0, 0.5, -2.0), (1.0, 0.0, -3.0)] {
            let (lo, hi) = affine_range(c1, c2, c3);
            let (mut glo, mut ghi) = (f64::INFINITY, f64::NEG_INFINITY);
            for a in 0..=400 {
                for b in 0..=400 {
                    let (x, y) = (1.0 + a as f64 / 400.0, 1.0 + b as f64 / 400.0);
                    let v = c1 * x + c2 * y + c3 * (x * y).sqrt();
                    glo = glo.min(v);
                    ghi = ghi.max(v);
                }
            }
            assert!(lo <= glo + 1e-12 && hi >= ghi - 1e-12, "{c1},{c2},{c3}: ({lo},{hi}) vs ({glo},{ghi})");
            assert!(glo - lo < 1e-4 && hi - ghi < 1e-4);
        }
    }

    #[test]
    fn selection_examples() {
        let (p, q) = (1, 2);
        for j in [-3, 0, 4] {
            let d = Divisor { k: [0, -1], kind: Kind::Plus, alpha: Some(ell(j, true)), beta: None };
            assert_eq!(selection_rule(p, q, Case::Unstable, &d), Disposition::ExcludedByMomentum);
        }
        let d = Divisor { k: [0, 0], kind: Kind::PlusPlus, alpha: Some(ell(-1, true)), beta: Some(ell(-1, false)) };
        assert_eq!(selection_rule(1, 1, Case::Stable, &d), Disposition::ExcludedByMomentum);
        // hyperbolic pairs survive only at k = 0
        for k in lattice(4) {
            let d = Divisor { k, kind: Kind::PlusPlus, alpha: Some(Label::E), beta: Some(Label::F) };
            let ok = selection_rule(p, q, Case::Unstable, &d) == Disposition::MustCheck;
            assert_eq!(ok, k == [0, 0]);
        }
    }
}
