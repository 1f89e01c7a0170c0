//! One-ancilla probabilistic implementation of `exp(−iUs)` for a self-inverse
//! `U`.
//!
//! The ancilla starts in `|0⟩`, passes through `R` and `P`, controls `U`, passes
//! through `R` again and is measured. With `c = cos s`, `σ = sin s`:
//!
//! * `b = 0` applies `(c − iσU)/(c + σ) = exp(−iUs)/(c + σ)`, probability
//!   `1/(c + σ)²` for every input state;
//! * `b = 1` applies `√(cσ)(I + iU)/(c + σ)`, i.e. the unitary fault
//!   `F = (I + iU)/√2 = exp(+iUπ/4)` with probability `sin 2s/(c + σ)²`.
//!
//! Running the gadget with `P*` in place of `P` flips the sign of `U`, which
//! implements `exp(+iUs)` with fault `exp(−iUπ/4)`; this is how undo passes
//! invert earlier gadgets. A fault is removed exactly by `exp(∓iUπ/4)`, built
//! from two controlled-`U` calls on a fresh ancilla.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::self_inverse::SelfInverseTerm;
use crate::state::{self, State};

/// Oracle queries charged for one exact fault correction.
pub const CORRECTION_QUERIES: u64 = 2;

/// Largest register for which [`joint_segment_outcomes`] is offered.
pub const MAX_JOINT_GADGETS: usize = 6;

const NORM_TOLERANCE: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_angle(s: f64) -> Result<()> {
    if (0.0..std::f64::consts::FRAC_PI_2).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gadget angle s = {s} outside [0, pi/2)"
        )))
    }
}

/// `(R, P)` for angle `s`.
pub fn gadget_matrices(s: f64) -> Result<(Matrix2<Complex64>, Matrix2<Complex64>)> {
    check_angle(s)?;
    let (sn, cs) = s.sin_cos();
    let nu = (cs.abs() + sn.abs()).sqrt();
    let (a, b) = (cs.sqrt() / nu, sn.sqrt() / nu);
    let r = Matrix2::new(c(a, 0.0), c(b, 0.0), c(b, 0.0), c(-a, 0.0));
    let p = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0));
    Ok((r, p))
}

/// Probability of the intended outcome `b = 0`, `(|cos s| + |sin s|)^{-2}`.
pub fn success_probability(s: f64) -> f64 {
    let (sn, cs) = s.sin_cos();
    (cs.abs() + sn.abs()).powi(-2)
}

/// Probability of a fault, `sin 2s/(cos s + sin s)²`. Equal to
/// `1 − success_probability(s)` without the cancellation at small `s`.
pub fn failure_probability(s: f64) -> f64 {
    let (sn, cs) = s.sin_cos();
    (2.0 * s).sin() / (cs + sn).powi(2)
}

/// Probability that the ancilla carries a `1` after `R` and `P`,
/// `sin s/(cos s + sin s)`; the Hamming-weight distribution of a segment is
/// built from it.
pub fn p_one(s: f64) -> f64 {
    let (sn, cs) = s.sin_cos();
    sn / (cs + sn)
}

/// Which exponential the gadget targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `exp(−iUs)`, phase gate `P`.
    Forward,
    /// `exp(+iUs)`, phase gate `P*`.
    Reverse,
}

impl Direction {
    /// `+1` for forward, `−1` for reverse: the gadget acts with `sign·U`.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliedOperator {
    Intended,
    Fault,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetOutcome {
    pub b: u8,
    /// Normalised system state after the measurement.
    pub post_state: State,
    pub branch_probability: f64,
    pub applied: AppliedOperator,
}

pub enum GadgetMode<'a, R: Rng + ?Sized> {
    /// Keep the `b = 0` branch.
    Postselect,
    /// Draw `b` by the Born rule.
    Sample(&'a mut R),
}

/// Unnormalised ancilla-resolved branches `(|0⟩ part, |1⟩ part)` of one gadget,
/// simulated gate by gate on the joint register.
pub fn gadget_branches(
    psi: &[Complex64],
    u: &SelfInverseTerm,
    s: f64,
    direction: Direction,
) -> Result<(State, State)> {
    let (r, mut p) = gadget_matrices(s)?;
    if direction == Direction::Reverse {
        p = p.conjugate();
    }
    if psi.len() != u.dimension() {
        return Err(Error::DimensionMismatch(psi.len(), u.dimension()));
    }
    // ancilla |0⟩ ⊗ ψ, then R·P on the ancilla
    let first = p * r;
    let mut a0: State = psi.iter().map(|z| first[(0, 0)] * z).collect();
    let a1_pre: State = psi.iter().map(|z| first[(1, 0)] * z).collect();
    // controlled-U
    let mut a1 = vec![c(0.0, 0.0); psi.len()];
    u.apply_to(&a1_pre, &mut a1);
    // final R
    let mut b1 = vec![c(0.0, 0.0); psi.len()];
    for i in 0..psi.len() {
        let (x, y) = (a0[i], a1[i]);
        a0[i] = r[(0, 0)] * x + r[(0, 1)] * y;
        b1[i] = r[(1, 0)] * x + r[(1, 1)] * y;
    }
    Ok((a0, b1))
}

/// Runs one gadget on a normalised state.
pub fn apply_gadget<R: Rng + ?Sized>(
    psi: &[Complex64],
    u: &SelfInverseTerm,
    s: f64,
    direction: Direction,
    mode: GadgetMode<'_, R>,
) -> Result<GadgetOutcome> {
    let n = state::norm(psi);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Unnormalized(n));
    }
    let (zero, one) = gadget_branches(psi, u, s, direction)?;
    let p0 = state::norm_sqr(&zero);
    let b = match mode {
        GadgetMode::Postselect => 0,
        GadgetMode::Sample(rng) => u8::from(rng.random::<f64>() >= p0),
    };
    let (mut post_state, probability, applied) = if b == 0 {
        (zero, p0, AppliedOperator::Intended)
    } else {
        let p1 = state::norm_sqr(&one);
        (one, p1, AppliedOperator::Fault)
    };
    state::normalize(&mut post_state);
    Ok(GadgetOutcome {
        b,
        post_state,
        branch_probability: probability,
        applied,
    })
}

/// The unitary applied on a `b = 1` outcome: `exp(+i·sign·U·π/4)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultOperator {
    pub direction: Direction,
}

impl FaultOperator {
    pub fn new(direction: Direction) -> Self {
        Self { direction }
    }

    /// Rotation angle `θ` with `F = exp(−iθU)`.
    pub fn angle(self) -> f64 {
        -self.direction.sign() * FRAC_PI_4
    }

    /// `state ← F·state`.
    pub fn apply(self, u: &SelfInverseTerm, state: &mut [Complex64]) {
        u.rotate(state, self.angle());
    }

    /// Dense `(I + i·sign·U)/√2`.
    pub fn dense(self, u: &SelfInverseTerm) -> DMatrix<Complex64> {
        let n = u.dimension();
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::identity(n, n) * c(scale, 0.0) + u.dense() * c(0.0, self.direction.sign() * scale)
    }

    /// `state ← F⁻¹·state` through the exact two-query circuit. Returns the
    /// number of queries used.
    pub fn correct(self, u: &SelfInverseTerm, state: &mut [Complex64]) -> u64 {
        exact_rotation(u, -self.angle(), state)
    }
}

/// `state ← exp(−iθU)·state` deterministically, using two controlled-`U`
/// calls on an ancilla: `H, cU, H, diag(e^{−iθ}, e^{iθ}), H, cU, H`.
/// Returns the number of queries used.
pub fn exact_rotation(u: &SelfInverseTerm, theta: f64, state: &mut [Complex64]) -> u64 {
    let n = state.len();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = |a0: &mut [Complex64], a1: &mut [Complex64]| {
        for i in 0..n {
            let (x, y) = (a0[i], a1[i]);
            a0[i] = (x + y) * h;
            a1[i] = (x - y) * h;
        }
    };
    let controlled_u = |a1: &mut [Complex64]| {
        let mut tmp = vec![c(0.0, 0.0); n];
        u.apply_to(a1, &mut tmp);
        a1.copy_from_slice(&tmp);
    };
    let mut a0 = state.to_vec();
    let mut a1 = vec![c(0.0, 0.0); n];
    hadamard(&mut a0, &mut a1);
    controlled_u(&mut a1);
    hadamard(&mut a0, &mut a1);
    let (minus, plus) = (Complex64::from_polar(1.0, -theta), Complex64::from_polar(1.0, theta));
    a0.iter_mut().for_each(|z| *z *= minus);
    a1.iter_mut().for_each(|z| *z *= plus);
    hadamard(&mut a0, &mut a1);
    controlled_u(&mut a1);
    hadamard(&mut a0, &mut a1);
    debug_assert!(state::norm_sqr(&a1) < 1e-20);
    state.copy_from_slice(&a0);
    CORRECTION_QUERIES
}

/// Hamming-weight law of a segment's ancilla register: `Binomial(m, p₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDistribution {
    pub m: u64,
    pub p_one: f64,
}

impl WeightDistribution {
    pub fn new(m: u64, s: f64) -> Self {
        Self { m, p_one: p_one(s) }
    }

    /// Probabilities of weights `0..=m`.
    pub fn probabilities(&self) -> Vec<f64> {
        binomial::distribution(self.m, self.p_one)
    }

    /// `Pr[weight > k]`.
    pub fn truncation_error(&self, k: u64) -> f64 {
        binomial::upper_tail(self.m, self.p_one, k)
    }

    /// Smallest `k` with `truncation_error(k) ≤ eps`.
    pub fn minimal_truncation(&self, eps: f64) -> u64 {
        binomial::minimal_truncation(self.m, self.p_one, eps)
    }
}

/// One measurement record of a segment register: bit `j` of `bits` is the
/// outcome of gadget `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentOutcome {
    pub bits: u32,
    pub probability: f64,
    /// Normalised post-measurement state (zero vector if the outcome has
    /// probability zero).
    pub state: State,
}

/// All outcomes of a segment simulated with the whole ancilla register held
/// coherently: each register string controls the product of the `U_j` at the
/// positions of its 1's, in schedule order, and every ancilla is measured at
/// the end.
pub fn joint_segment_outcomes(
    psi: &[Complex64],
    gadgets: &[(&SelfInverseTerm, f64)],
) -> Result<Vec<SegmentOutcome>> {
    let m = gadgets.len();
    if m > MAX_JOINT_GADGETS {
        return Err(Error::InvalidArgument(format!(
            "joint simulation supports at most {MAX_JOINT_GADGETS} gadgets, got {m}"
        )));
    }
    let dim = psi.len();
    let mut prep = Vec::with_capacity(m);
    let mut rs = Vec::with_capacity(m);
    for &(u, s) in gadgets {
        if u.dimension() != dim {
            return Err(Error::DimensionMismatch(dim, u.dimension()));
        }
        let (r, p) = gadget_matrices(s)?;
        prep.push(p * r);
        rs.push(r);
    }
    let strings = 1usize << m;
    // register amplitudes after R·P, with positional control applied
    let mut joint: Vec<State> = Vec::with_capacity(strings);
    for x in 0..strings {
        let mut amp = c(1.0, 0.0);
        let mut phi = psi.to_vec();
        let mut tmp = vec![c(0.0, 0.0); dim];
        for (j, &(u, _)) in gadgets.iter().enumerate() {
            let bit = (x >> j) & 1;
            amp *= prep[j][(bit, 0)];
            if bit == 1 {
                u.apply_to(&phi, &mut tmp);
                std::mem::swap(&mut phi, &mut tmp);
            }
        }
        joint.push(phi.into_iter().map(|z| z * amp).collect());
    }
    // final R on every ancilla
    for (j, r) in rs.iter().enumerate() {
        let bit = 1usize << j;
        for x in 0..strings {
            if x & bit != 0 {
                continue;
            }
            let y = x | bit;
            for i in 0..dim {
                let (u0, u1) = (joint[x][i], joint[y][i]);
                joint[x][i] = r[(0, 0)] * u0 + r[(0, 1)] * u1;
                joint[y][i] = r[(1, 0)] * u0 + r[(1, 1)] * u1;
            }
        }
    }
    Ok(joint
        .into_iter()
        .enumerate()
        .map(|(bits, mut state)| {
            let probability = state::norm_sqr(&state);
            state::normalize(&mut state);
            SegmentOutcome {
                bits: bits as u32,
                probability,
                state,
            }
        })
        .collect())
}

/// The same outcome table obtained by running the gadgets one at a time,
/// measuring each ancilla before the next gadget starts.
pub fn sequential_segment_outcomes(
    psi: &[Complex64],
    gadgets: &[(&SelfInverseTerm, f64)],
) -> Result<Vec<SegmentOutcome>> {
    let m = gadgets.len();
    if m > MAX_JOINT_GADGETS {
        return Err(Error::InvalidArgument(format!(
            "sequential table supports at most {MAX_JOINT_GADGETS} gadgets, got {m}"
        )));
    }
    // branches carry unnormalised states so probabilities multiply through
    let mut frontier: Vec<State> = vec![psi.to_vec()];
    for &(u, s) in gadgets {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for phi in &frontier {
            let (zero, one) = gadget_branches(phi, u, s, Direction::Forward)?;
            next.push(zero);
            next.push(one);
        }
        // reorder so that bit j of the index is gadget j's outcome
        let half = frontier.len();
        let mut ordered = vec![Vec::new(); next.len()];
        for (k, v) in next.into_iter().enumerate() {
            let (x, b) = (k / 2, k % 2);
            ordered[x + b * half] = v;
        }
        frontier = ordered;
    }
    Ok(frontier
        .into_iter()
        .enumerate()
        .map(|(bits, mut state)| {
            let probability = state::norm_sqr(&state);
            state::normalize(&mut state);
            SegmentOutcome {
                bits: bits as u32,
                probability,
                state,
            }
        })
        .collect())
}
