//! Exact time-ordered evolution and the distance measures every accuracy
//! check compares against.
//!
//! Each substep of length `h` freezes the Hamiltonian at the two
//! Gauss–Legendre nodes and exponentiates the fourth-order Magnus generator
//! `K = (h/2)(H₁ + H₂) − i(√3h²/12)[H₂, H₁]`. The substep count doubles until
//! two successive products agree to `tol` in spectral norm.

use std::f64::consts::PI;

use nalgebra::Schur;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::TimeDependentHamiltonian;
use crate::linalg::{expm_hermitian, spectral_norm, CMatrix};
use crate::state;

/// Doublings attempted before giving up.
pub const MAX_DOUBLINGS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceEvolution {
    pub unitary: CMatrix,
    pub substeps: usize,
    /// Spectral-norm change between the last two refinements.
    pub estimated_error: f64,
}

fn magnus_step(h: &TimeDependentHamiltonian, t0: f64, dt: f64) -> Result<CMatrix> {
    let offset = 3f64.sqrt() / 6.0;
    let h1 = h.dense_matrix(t0 + (0.5 - offset) * dt)?;
    let h2 = h.dense_matrix(t0 + (0.5 + offset) * dt)?;
    let commutator = &h2 * &h1 - &h1 * &h2;
    let k = (&h1 + &h2) * Complex64::new(0.5 * dt, 0.0)
        + commutator * Complex64::new(0.0, -3f64.sqrt() * dt * dt / 12.0);
    // symmetrise away rounding so the eigen-solver sees an exact Hermitian
    let k = (&k + k.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(expm_hermitian(&k, 1.0))
}

fn product(h: &TimeDependentHamiltonian, t_start: f64, t_end: f64, steps: usize) -> Result<CMatrix> {
    let dt = (t_end - t_start) / steps as f64;
    let mut u = CMatrix::identity(h.dimension(), h.dimension());
    for k in 0..steps {
        u = magnus_step(h, t_start + k as f64 * dt, dt)? * u;
    }
    Ok(u)
}

/// `U(t_start → t_end) = T exp(−i ∫ H(t') dt')`.
pub fn evolution_between(
    h: &TimeDependentHamiltonian,
    t_start: f64,
    t_end: f64,
    tol: f64,
) -> Result<ReferenceEvolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if h.is_time_independent() {
        return Ok(ReferenceEvolution {
            unitary: expm_hermitian(&h.dense_matrix(t_start)?, t_end - t_start),
            substeps: 1,
            estimated_error: 0.0,
        });
    }
    let mut steps = 1;
    let mut current = product(h, t_start, t_end, steps)?;
    for _ in 0..MAX_DOUBLINGS {
        let refined = product(h, t_start, t_end, 2 * steps)?;
        let change = spectral_norm(&(&refined - &current));
        steps *= 2;
        current = refined;
        if change <= tol {
            return Ok(ReferenceEvolution {
                unitary: current,
                substeps: steps,
                estimated_error: change,
            });
        }
    }
    Err(Error::NonConvergence(steps))
}

pub fn exact_evolution(h: &TimeDependentHamiltonian, t: f64, tol: f64) -> Result<ReferenceEvolution> {
    evolution_between(h, 0.0, t, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `min_φ ‖A − e^{iφ}B‖`.
    pub operator_distance: f64,
    /// `|Tr(A†B)|/dim` for unitaries, `|⟨a|b⟩|²` for states.
    pub fidelity: f64,
    /// Worst-case trace distance between `A|ψ⟩` and `B|ψ⟩` for unitaries,
    /// `√(1 − |⟨a|b⟩|²)` for states.
    pub trace_distance: f64,
}

/// Smallest arc of the unit circle containing all the angles.
fn covering_arc(mut angles: Vec<f64>) -> f64 {
    if angles.len() < 2 {
        return 0.0;
    }
    angles.sort_by(f64::total_cmp);
    let mut largest_gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        largest_gap = largest_gap.max(w[1] - w[0]);
    }
    (2.0 * PI - largest_gap).max(0.0)
}

/// Distances between two unitaries with the global phase quotiented out.
pub fn metrics(a: &CMatrix, b: &CMatrix) -> Result<Metrics> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(a.nrows(), b.nrows()));
    }
    let v = a.adjoint() * b;
    let fidelity = v.trace().norm() / a.nrows() as f64;
    let (_, t) = Schur::new(v).unpack();
    let arc = covering_arc(t.diagonal().iter().map(|z| z.arg()).collect());
    Ok(Metrics {
        operator_distance: 2.0 * (arc / 4.0).sin(),
        fidelity,
        trace_distance: if arc >= PI { 1.0 } else { (arc / 2.0).sin() },
    })
}

/// Distances between two normalised states with the global phase quotiented
/// out.
pub fn state_metrics(a: &[Complex64], b: &[Complex64]) -> Result<Metrics> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let fidelity = state::fidelity(a, b).min(1.0);
    Ok(Metrics {
        operator_distance: state::phase_distance(a, b),
        fidelity,
        trace_distance: (1.0 - fidelity).max(0.0).sqrt(),
    })
}
