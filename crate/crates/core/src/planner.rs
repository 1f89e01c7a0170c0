//! Compiles `(H, t, ε)` into a segmented gadget schedule and prices it.
//!
//! The error budget is split evenly: `ε/3` for the first-order product
//! formula, `ε/3` for rounding onto self-inverse families and `ε/3` for
//! Hamming-weight truncation shared across segments. Every `Θ(·)` constant
//! is `1` unless configured otherwise.
//!
//! The schedule is the product `Π_{step} Π_{j} exp(−i H̃_j(t₀) δt)` with
//! `t₀ = step·δt` the left endpoint, terms applied in decomposition order.
//! Each `exp(−i H̃_j δt)` is a run of gadgets, one per family member, all with
//! angle `s = γ_eff·δt`; consecutive gadgets are grouped into segments of `m`.

use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::gadget;
use crate::hamiltonian::{NormReport, TimeDependentHamiltonian, DEFAULT_NORM_SAMPLES};
use crate::one_sparse::{decompose_hamiltonian, OneSparseTerm};
use crate::par::Execution;
use crate::self_inverse::{decompose, family_shape, FamilyShape, SelfInverseFamily};
use crate::walk;

/// Ratios such as `24000.000000000004` come out of exact-looking inputs; the
/// slack keeps them from rounding up a whole extra step.
const CEIL_SLACK: f64 = 1e-12;

fn ceil_slack(x: f64) -> f64 {
    (x * (1.0 - CEIL_SLACK)).ceil()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Constant in front of the product-formula error bound.
    pub c_r: f64,
    /// Time samples used to estimate `‖H‖` and `‖H'‖`.
    pub norm_samples: usize,
    /// Upper bound on `Σ_segment p_fail`.
    pub segment_failure_target: f64,
    /// Largest `r·M` for which time-dependent families are enumerated.
    pub max_enumerated_blocks: u128,
    pub execution: Execution,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            c_r: 1.0,
            norm_samples: DEFAULT_NORM_SAMPLES,
            segment_failure_target: 0.25,
            max_enumerated_blocks: 200_000_000,
            execution: Execution::Parallel,
        }
    }
}

fn check_inputs(t: f64, eps: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("evolution time must be positive, got {t}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `r = ⌈C_r (M t)² (‖H‖² + ‖H'‖)/(ε/3)⌉`, at least 1.
pub fn choose_r(norm_h: f64, norm_dh: f64, t: f64, eps: f64, num_terms: usize, c_r: f64) -> Result<u64> {
    check_inputs(t, eps)?;
    let mt = num_terms as f64 * t;
    let r = ceil_slack(c_r * mt * mt * (norm_h * norm_h + norm_dh) / (eps / 3.0)).max(1.0);
    if !(r < 1e18) {
        return Err(Error::PlanTooLarge(format!("Trotter step count {r:e} does not fit")));
    }
    Ok(r as u64)
}

/// `γ = (ε/3)/(t√d)`.
pub fn choose_gamma(t: f64, eps: f64, d: usize) -> Result<f64> {
    check_inputs(t, eps)?;
    Ok((eps / 3.0) / (t * (d as f64).sqrt()))
}

/// One `exp(−i H̃_j(t₀) δt)` block of the schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub step: u64,
    pub term: usize,
    pub t0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub t: f64,
    pub eps: f64,
    pub r: u64,
    pub dt: f64,
    pub gamma: f64,
    /// Hilbert-space dimension `2^n`.
    pub dimension: usize,
    /// Sparseness `d` of the input.
    pub d: usize,
    /// Number of 1-sparse terms `M`.
    pub num_terms: usize,
    pub norms: NormReport,
    /// Largest gadget angle in the schedule.
    pub s_max: f64,
    pub m: u64,
    pub num_segments: u64,
    pub total_gadgets: u128,
    pub k1: u64,
    pub eps1: f64,
    /// `sin s/(cos s + sin s)` at `s_max`.
    pub p_one: f64,
    /// `1 − (cos s + sin s)^{-2}` at `s_max`.
    pub failure_probability: f64,
    /// `m · failure_probability`.
    pub segment_failure_bound: f64,
    /// `C_r (Mt)²(‖H‖² + ‖H'‖)/r`.
    pub trotter_bound: f64,
    /// `√d·γ·t`.
    pub discretization_bound: f64,
    /// `num_segments · ε₁`.
    pub truncation_budget: f64,
    pub time_independent: bool,
    #[serde(skip)]
    pub terms: Vec<OneSparseTerm>,
}

impl SegmentPlan {
    /// Blocks in application order.
    pub fn schedule(&self) -> impl Iterator<Item = ScheduleEntry> + '_ {
        let m = self.num_terms;
        (0..self.r).flat_map(move |step| {
            (0..m).map(move |term| ScheduleEntry {
                step,
                term,
                t0: step as f64 * self.dt,
            })
        })
    }

    pub fn family(&self, entry: ScheduleEntry) -> Result<SelfInverseFamily> {
        decompose(&self.terms[entry.term], entry.t0, self.gamma)
    }

    pub fn shape(&self, entry: ScheduleEntry) -> Result<FamilyShape> {
        family_shape(&self.terms[entry.term], entry.t0, self.gamma)
    }

    /// Gadget angle of a block.
    pub fn angle(&self, shape: &FamilyShape) -> f64 {
        shape.weight * self.dt
    }

    /// Half-open gadget index range of a segment.
    pub fn segment_range(&self, segment: u64) -> (u128, u128) {
        let start = segment as u128 * self.m as u128;
        (start, (start + self.m as u128).min(self.total_gadgets))
    }

    /// Sum of the three error budgets.
    pub fn total_error_bound(&self) -> f64 {
        self.trotter_bound + self.discretization_bound + self.truncation_budget
    }
}

/// Gadget count and largest angle over steps `start..end`.
fn scan_steps(
    terms: &[OneSparseTerm],
    gamma: f64,
    dt: f64,
    steps: std::ops::Range<u64>,
) -> Result<(u128, f64)> {
    let mut count = 0u128;
    let mut s_max = 0.0f64;
    for step in steps {
        let t0 = step as f64 * dt;
        for term in terms {
            let shape = family_shape(term, t0, gamma)?;
            count += shape.size as u128;
            s_max = s_max.max(shape.weight * dt);
        }
    }
    Ok((count, s_max))
}

fn gadget_census(
    terms: &[OneSparseTerm],
    time_independent: bool,
    r: u64,
    gamma: f64,
    dt: f64,
    config: &PlannerConfig,
) -> Result<(u128, f64)> {
    if time_independent {
        let (per_step, s_max) = scan_steps(terms, gamma, dt, 0..1)?;
        return Ok((per_step * r as u128, s_max));
    }
    let blocks = r as u128 * terms.len() as u128;
    if blocks > config.max_enumerated_blocks {
        return Err(Error::PlanTooLarge(format!(
            "{blocks} time-dependent blocks exceed the enumeration limit of {}",
            config.max_enumerated_blocks
        )));
    }
    const CHUNK: u64 = 4096;
    let chunks = r.div_ceil(CHUNK) as usize;
    let parts = config.execution.map_indexed(chunks, |c| {
        let start = c as u64 * CHUNK;
        scan_steps(terms, gamma, dt, start..(start + CHUNK).min(r))
    });
    let mut total = 0u128;
    let mut s_max = 0.0f64;
    for part in parts {
        let (count, s) = part?;
        total += count;
        s_max = s_max.max(s);
    }
    Ok((total, s_max))
}

/// Builds the full plan.
pub fn segment_plan(h: &TimeDependentHamiltonian, t: f64, eps: f64, config: &PlannerConfig) -> Result<SegmentPlan> {
    check_inputs(t, eps)?;
    let (_, terms) = decompose_hamiltonian(h);
    let num_terms = terms.len();
    let norms = h.norms(t, config.norm_samples)?;
    let time_independent = terms.iter().all(OneSparseTerm::is_time_independent);
    let gamma = choose_gamma(t, eps, h.sparseness())?;
    let mut r = choose_r(
        norms.spectral_norm_max,
        norms.derivative_norm_max,
        t,
        eps,
        num_terms,
        config.c_r,
    )?;

    let (total_gadgets, s_max, dt) = loop {
        let dt = t / r as f64;
        let (total, s_max) = gadget_census(&terms, time_independent, r, gamma, dt, config)?;
        if gadget::failure_probability(s_max) <= config.segment_failure_target {
            break (total, s_max, dt);
        }
        // a single gadget would already exceed the segment budget
        r = r.checked_mul(2).ok_or_else(|| Error::PlanTooLarge("step count overflow".into()))?;
    };

    let p_fail = gadget::failure_probability(s_max);
    let m = if total_gadgets == 0 {
        1
    } else if p_fail > 0.0 {
        let cap = (config.segment_failure_target / p_fail).floor().max(1.0);
        (cap.min(total_gadgets as f64) as u128).min(total_gadgets) as u64
    } else {
        total_gadgets.min(u64::MAX as u128) as u64
    }
    .max(1);
    let num_segments = u64::try_from(total_gadgets.div_ceil(m as u128).max(1))
        .map_err(|_| Error::PlanTooLarge("segment count does not fit in 64 bits".into()))?;
    let eps1 = (eps / 3.0) / num_segments as f64;
    let p_one = gadget::p_one(s_max);
    let k1 = binomial::minimal_truncation(m, p_one, eps1);
    let mt = num_terms as f64 * t;
    let trotter_bound = config.c_r
        * mt
        * mt
        * (norms.spectral_norm_max.powi(2) + norms.derivative_norm_max)
        / r as f64;

    Ok(SegmentPlan {
        t,
        eps,
        r,
        dt,
        gamma,
        dimension: h.dimension(),
        d: h.sparseness(),
        num_terms,
        norms,
        s_max,
        m,
        num_segments,
        total_gadgets,
        k1,
        eps1,
        p_one,
        failure_probability: p_fail,
        segment_failure_bound: m as f64 * p_fail,
        trotter_bound,
        discretization_bound: (h.sparseness() as f64).sqrt() * gamma * t,
        truncation_budget: eps1 * num_segments as f64,
        time_independent,
        terms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub k0: u64,
    pub eps0: f64,
    pub k1: u64,
    /// Segments to complete, `T`.
    pub segments: u64,
    /// Attempt cap `N = 2T + λ`.
    pub attempts_cap: u64,
    pub lambda: u64,
    /// `N·k₁`.
    pub queries_total: u128,
    /// `t·d²·‖H‖_max·k₁`, the reference scale for `queries_total`.
    pub queries_scale: f64,
    /// `t·M·‖H‖_max·k₀·[(log m)² + log m·log log(1/ε₀)]`, in model units.
    pub gates_model: f64,
    /// `‖H‖·t`.
    pub tau: f64,
    /// `‖H'‖·t`.
    pub tau_prime: f64,
}

/// Query and gate cost model for a plan, with `T = num_segments` and the
/// attempt cap taken from the walk analysis.
pub fn resource_estimate(plan: &SegmentPlan, eps: f64) -> Result<ResourceEstimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let h_max = plan.norms.entry_norm_max;
    let denom = plan.m as f64 * plan.t * plan.num_terms as f64 * h_max;
    let eps0 = if denom > 0.0 { eps / denom } else { eps };
    let k0 = (1.0 / eps0).log2().ceil().max(0.0) as u64;
    let cap = walk::chernoff_cap(plan.num_segments, eps)?;
    let log_m = (plan.m as f64).log2();
    let loglog = (1.0 / eps0).log2().max(1.0).log2();
    Ok(ResourceEstimate {
        k0,
        eps0,
        k1: plan.k1,
        segments: plan.num_segments,
        attempts_cap: cap.n,
        lambda: cap.lambda,
        queries_total: cap.n as u128 * plan.k1 as u128,
        queries_scale: plan.t * (plan.d * plan.d) as f64 * h_max * plan.k1 as f64,
        gates_model: plan.t * plan.num_terms as f64 * h_max * k0 as f64 * (log_m * log_m + log_m * loglog),
        tau: plan.norms.spectral_norm_max * plan.t,
        tau_prime: plan.norms.derivative_norm_max * plan.t,
    })
}

/// One row of an `ε` sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub r: u64,
    pub gamma: f64,
    pub m: u64,
    pub k1: u64,
    pub eps1: f64,
    pub num_segments: u64,
    pub attempts_cap: u64,
    pub queries_total: u128,
}

pub fn sweep(h: &TimeDependentHamiltonian, t: f64, eps_values: &[f64], config: &PlannerConfig) -> Result<Vec<SweepRow>> {
    eps_values
        .iter()
        .map(|&eps| {
            let plan = segment_plan(h, t, eps, config)?;
            let est = resource_estimate(&plan, eps)?;
            Ok(SweepRow {
                eps,
                r: plan.r,
                gamma: plan.gamma,
                m: plan.m,
                k1: plan.k1,
                eps1: plan.eps1,
                num_segments: plan.num_segments,
                attempts_cap: est.attempts_cap,
                queries_total: est.queries_total,
            })
        })
        .collect()
}
