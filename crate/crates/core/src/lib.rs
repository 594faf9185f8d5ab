//! Normal forms, small-divisor checks and direct simulation for the coupled
//! cubic Schrodinger system on the circle,
//! `i u_t = -u_xx + |v|^2 u`, `i v_t = -v_xx + |u|^2 v`,
//! written in Fourier modes `a_j` (of `u`) and `b_j` (of `v`).

pub mod phase_space;
pub mod poly_algebra;
pub mod birkhoff;
pub mod effective;
pub mod nonres;
pub mod dynamics;
pub mod stats;
pub mod acceptance;

use serde::{Deserialize, Serialize};

/// Which two-mode torus is studied: `p != q` (hyperbolic) or `p = q` (elliptic).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Unstable,
    Stable,
}
