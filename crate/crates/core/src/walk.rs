//! Concentration bounds for the segment random walk and a Monte Carlo model
//! of it.
//!
//! A segment attempt applies `m` gadgets, each failing independently with
//! probability `p_fail`. A failed attempt must be undone before the segment
//! is retried, and the undo is itself an attempt that can fail. The walk
//! position (successes minus failures) has to reach `T` within `N = 2T + λ`
//! attempts.
//!
//! Undo bookkeeping uses a stack of pending records, each holding the number
//! of exact fault corrections `c` that undoing it requires. Undoing costs
//! `2c` queries; if it fails with `f'` new faults the record that must now
//! be undone needs `c + f'` corrections.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::gadget::CORRECTION_QUERIES;
use crate::par::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChernoffCap {
    pub lambda: u64,
    /// `N = 2T + λ`.
    pub n: u64,
}

/// `exp(−λ²/(24(2T + λ)))`.
pub fn cap_bound(segments: u64, lambda: u64) -> f64 {
    let l = lambda as f64;
    (-(l * l) / (24.0 * (2.0 * segments as f64 + l))).exp()
}

/// Smallest `λ` with `cap_bound(T, λ) ≤ ε`.
pub fn chernoff_cap(segments: u64, eps: f64) -> Result<ChernoffCap> {
    if segments == 0 {
        return Err(Error::InvalidArgument("the walk needs at least one segment".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let n2 = 2 * segments;
    if eps >= 1.0 {
        return Ok(ChernoffCap { lambda: 0, n: n2 });
    }
    // λ² ≥ 24 L (2T + λ) with L = ln(1/ε)
    let l = (1.0 / eps).ln();
    let satisfied = |lam: u64| {
        let x = lam as f64;
        x * x >= 24.0 * l * (n2 as f64 + x)
    };
    let root = 12.0 * l + (144.0 * l * l + 24.0 * l * n2 as f64).sqrt();
    let mut lambda = root.ceil() as u64;
    while lambda > 0 && satisfied(lambda - 1) {
        lambda -= 1;
    }
    while !satisfied(lambda) {
        lambda += 1;
    }
    Ok(ChernoffCap { lambda, n: n2 + lambda })
}

fn check_pmf_domain(m: u64, f: u64) -> Result<()> {
    if m == 0 || f > m {
        return Err(Error::InvalidArgument(format!(
            "fault pmf needs m ≥ 1 and 0 ≤ f ≤ m, got m = {m}, f = {f}"
        )));
    }
    Ok(())
}

/// `q(f) = C(m, f)(1/4m)^f (1 − 1/4m)^{m−f}`.
pub fn fault_pmf(m: u64, f: u64) -> Result<f64> {
    check_pmf_domain(m, f)?;
    Ok(binomial::pmf(m, 1.0 / (4.0 * m as f64), f))
}

/// `q(f)` as an exact rational.
pub fn fault_pmf_exact(m: u64, f: u64) -> Result<BigRational> {
    check_pmf_domain(m, f)?;
    let mut choose = BigInt::one();
    for i in 0..f {
        choose = choose * BigInt::from(m - i) / BigInt::from(i + 1);
    }
    let p = BigRational::new(BigInt::one(), BigInt::from(4 * m));
    let q = BigRational::one() - &p;
    Ok(BigRational::from_integer(choose) * num_traits::pow(p, f as usize) * num_traits::pow(q, (m - f) as usize))
}

/// `e^{−1/4} (1/f!) (1/(4 − 1/m))^f`.
pub fn fault_pmf_bound(m: u64, f: u64) -> f64 {
    let ln = -0.25 - binomial_ln_factorial(f) - f as f64 * (4.0 - 1.0 / m as f64).ln();
    ln.exp()
}

fn binomial_ln_factorial(f: u64) -> f64 {
    statrs::function::factorial::ln_factorial(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub q: f64,
    pub bound: f64,
    pub holds: bool,
    /// Decided in rational arithmetic rather than in log space.
    pub exact: bool,
}

/// Largest `m` checked in rational arithmetic.
pub const EXACT_CHECK_LIMIT: u64 = 100;

/// Rational bracket `lo ≤ e^{−1/4} ≤ hi` from the alternating series.
fn exp_minus_quarter_bracket() -> (BigRational, BigRational) {
    let quarter = BigRational::new(BigInt::from(-1), BigInt::from(4));
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let mut partial = Vec::new();
    for k in 1..=24u32 {
        term = term * &quarter / BigRational::from_integer(BigInt::from(k));
        sum += &term;
        partial.push(sum.clone());
    }
    // with decreasing terms, consecutive partial sums bracket the limit
    let (a, b) = (partial[partial.len() - 2].clone(), partial[partial.len() - 1].clone());
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Checks `q(f) ≤ e^{−1/4}(1/f!)(1/(4 − 1/m))^f`.
pub fn bound_check(m: u64, f: u64) -> Result<BoundCheck> {
    check_pmf_domain(m, f)?;
    let q = fault_pmf(m, f)?;
    let bound = fault_pmf_bound(m, f);
    if m <= EXACT_CHECK_LIMIT {
        let exact_q = fault_pmf_exact(m, f)?;
        let mut factorial = BigInt::one();
        for i in 2..=f {
            factorial *= BigInt::from(i);
        }
        // (1/(4 − 1/m))^f = (m/(4m − 1))^f
        let base = BigRational::new(BigInt::from(m), BigInt::from(4 * m - 1));
        let rest = num_traits::pow(base, f as usize) / BigRational::from_integer(factorial);
        let (lo, hi) = exp_minus_quarter_bracket();
        let holds = if exact_q <= &lo * &rest {
            true
        } else if exact_q > &hi * &rest {
            false
        } else {
            return Err(Error::NonConvergence(24));
        };
        return Ok(BoundCheck { q, bound, holds, exact: true });
    }
    let ln_q = binomial::ln_choose(m, f) + f as f64 * (1.0 / (4.0 * m as f64)).ln()
        + (m - f) as f64 * (-1.0 / (4.0 * m as f64)).ln_1p();
    let ln_bound = -0.25 - binomial_ln_factorial(f) - f as f64 * (4.0 - 1.0 / m as f64).ln();
    Ok(BoundCheck {
        q,
        bound,
        holds: ln_q <= ln_bound,
        exact: false,
    })
}

/// `β(m) = Σ_{f≥1} q(f) e^{f/10}`, summed exactly over the support.
pub fn beta(m: u64) -> f64 {
    let p = 1.0 / (4.0 * m as f64);
    let mut sum = 0.0;
    for f in 1..=m {
        let term = binomial::pmf(m, p, f) * (f as f64 / 10.0).exp();
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

/// Closed-form upper bound `e^{−1/4}(e^{e^{1/10}/(4 − 1/m)} − 1)` on `β(m)`.
pub fn beta_bound(m: u64) -> f64 {
    (-0.25f64).exp() * ((0.1f64.exp() / (4.0 - 1.0 / m as f64)).exp() - 1.0)
}

/// Smallest `m` for which the moment-generating-function argument applies.
pub const MGF_MIN_M: u64 = 35;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBoundParams {
    pub beta: f64,
    pub beta_bound: f64,
    /// `q(0)`.
    pub q0: f64,
    pub alpha: f64,
    /// Attempt bound per segment, `n_M`.
    pub n_m: u64,
    pub t_mgf: f64,
    /// `1/(1 − ε/T)`.
    pub x: f64,
    pub lambda_cost: f64,
    pub bound_on_lambda_t: f64,
}

/// `n_M`: the attempt cap for a single segment at failure probability `ε/T`.
pub fn per_segment_attempt_bound(segments: u64, eps: f64) -> Result<u64> {
    Ok(chernoff_cap(1, eps / segments as f64)?.n)
}

pub fn mgf_bound_params(m: u64, segments: u64, eps: f64) -> Result<CostBoundParams> {
    if m < MGF_MIN_M {
        return Err(Error::InvalidArgument(format!(
            "the cost bound needs m ≥ {MGF_MIN_M}, got {m}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let n_m = per_segment_attempt_bound(segments, eps)?;
    let q0 = fault_pmf(m, 0)?;
    let b = beta(m);
    let alpha = 16.0 * q0 * q0 / (1.0 - 4.0 * q0 * b).powi(3);
    let t_mgf = 1.0 / (40.0 * n_m as f64);
    let x = 1.0 / (1.0 - eps / segments as f64);
    let lambda_cost = (1.0 / eps).ln() / (t_mgf * segments as f64) + x * alpha;
    Ok(CostBoundParams {
        beta: b,
        beta_bound: beta_bound(m),
        q0,
        alpha,
        n_m,
        t_mgf,
        x,
        lambda_cost,
        bound_on_lambda_t: lambda_cost * segments as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkParameters {
    pub segments: u64,
    pub m: u64,
    pub p_fail: f64,
    pub eps: f64,
    pub lambda: u64,
    /// Attempt cap `N`.
    pub n: u64,
    pub n_m: u64,
    pub x: f64,
    /// Argument at which `E[e^{tQ}]` is estimated.
    pub t_mgf: f64,
}

impl WalkParameters {
    /// Parameters with `p_fail = 1/(4m)`.
    pub fn new(segments: u64, m: u64, eps: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be positive".into()));
        }
        Self::with_failure_probability(segments, m, eps, 1.0 / (4.0 * m as f64))
    }

    pub fn with_failure_probability(segments: u64, m: u64, eps: f64, p_fail: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_fail) {
            return Err(Error::InvalidArgument(format!("p_fail must lie in [0, 1], got {p_fail}")));
        }
        let cap = chernoff_cap(segments, eps)?;
        let n_m = per_segment_attempt_bound(segments, eps)?;
        Ok(Self {
            segments,
            m,
            p_fail,
            eps,
            lambda: cap.lambda,
            n: cap.n,
            n_m,
            x: 1.0 / (1.0 - eps / segments as f64),
            t_mgf: 1.0 / (40.0 * n_m as f64),
        })
    }

    /// `1 + 2f⌈log₂ m⌉` steps for an attempt with `f` faults.
    pub fn recursive_steps(&self, faults: u64) -> u64 {
        1 + 2 * faults * ceil_log2(self.m)
    }

    /// `N(1 + 2⌈log₂ m⌉)`, the per-trial recursive-step cap.
    pub fn recursive_step_cap(&self) -> u64 {
        self.n * (1 + 2 * ceil_log2(self.m))
    }
}

pub fn ceil_log2(m: u64) -> u64 {
    if m <= 1 {
        0
    } else {
        u64::from(64 - (m - 1).leading_zeros())
    }
}

/// Per-segment totals of one walk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentWalk {
    pub attempts: u64,
    /// Failed attempts `n`.
    pub n_fail: u64,
    /// Total faults `E` over the failed attempts.
    pub faults: u64,
    /// Correction queries `Q`.
    pub queries: u64,
}

impl SegmentWalk {
    /// `Q ≤ 2(2n − 1)E`.
    pub fn satisfies_accounting(&self) -> bool {
        if self.n_fail == 0 {
            return self.queries == 0;
        }
        self.queries <= CORRECTION_QUERIES * (2 * self.n_fail - 1) * self.faults
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub attempts: u64,
    pub queries: u64,
    pub recursive_steps: u64,
    pub faults: u64,
    pub exceeded_cap: bool,
    /// Segments whose walk stayed within `n_M` failed attempts.
    pub conditioned_segments: u64,
    /// `Σ e^{t·Q_seg}` and `Σ e^{2t·Q_seg}` over the conditioned segments.
    pub mgf_sum: f64,
    pub mgf_sq_sum: f64,
    pub accounting_violations: u64,
    pub max_segment_failures: u64,
}

/// Hard stop for a single trial, far beyond any cap of interest.
fn attempt_limit(params: &WalkParameters) -> u64 {
    params.n.saturating_mul(64).max(1 << 20)
}

/// Walks one segment to completion and returns its totals.
fn walk_segment<S: FnMut() -> u64>(mut sample_faults: S, params: &WalkParameters, budget: u64, steps: &mut u64) -> SegmentWalk {
    let mut seg = SegmentWalk::default();
    let mut stack: Vec<u64> = Vec::new();
    while seg.attempts < budget {
        seg.attempts += 1;
        let f = sample_faults();
        *steps += params.recursive_steps(f);
        match stack.last().copied() {
            None if f == 0 => break,
            None => {
                stack.push(f);
                seg.n_fail += 1;
                seg.faults += f;
            }
            Some(c) => {
                seg.queries += CORRECTION_QUERIES * c;
                if f == 0 {
                    stack.pop();
                } else {
                    // the failed undo must itself be undone before `c` is retried
                    stack.push(c + f);
                    seg.n_fail += 1;
                    seg.faults += f;
                }
            }
        }
    }
    seg
}

/// Simulates one trial of the abstract walk. The trial's random stream is
/// `(seed, trial)`, so trials can run in any order.
pub fn simulate_trial(params: &WalkParameters, seed: u64, trial: u64) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let dist = Binomial::new(params.m, params.p_fail).expect("valid binomial parameters");
    let mut record = TrialRecord {
        trial,
        attempts: 0,
        queries: 0,
        recursive_steps: 0,
        faults: 0,
        exceeded_cap: false,
        conditioned_segments: 0,
        mgf_sum: 0.0,
        mgf_sq_sum: 0.0,
        accounting_violations: 0,
        max_segment_failures: 0,
    };
    let limit = attempt_limit(params);
    for _ in 0..params.segments {
        let budget = limit.saturating_sub(record.attempts);
        let seg = walk_segment(|| dist.sample(&mut rng), params, budget, &mut record.recursive_steps);
        record.attempts += seg.attempts;
        record.queries += seg.queries;
        record.faults += seg.faults;
        record.max_segment_failures = record.max_segment_failures.max(seg.n_fail);
        if !seg.satisfies_accounting() {
            record.accounting_violations += 1;
        }
        if seg.n_fail <= params.n_m {
            let e = (params.t_mgf * seg.queries as f64).exp();
            record.conditioned_segments += 1;
            record.mgf_sum += e;
            record.mgf_sq_sum += e * e;
        }
        if record.attempts >= limit {
            break;
        }
    }
    record.exceeded_cap = record.attempts > params.n;
    record
}

/// Mergeable summary of a batch of trials.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub trials: u64,
    pub exceeded: u64,
    pub attempts_sum: u64,
    pub attempts_max: u64,
    /// Histogram of attempts per trial.
    pub attempts_histogram: BTreeMap<u64, u64>,
    pub queries_sum: u64,
    pub queries_max: u64,
    pub queries_histogram: BTreeMap<u64, u64>,
    pub recursive_steps_sum: u64,
    pub recursive_steps_max: u64,
    pub conditioned_segments: u64,
    pub mgf_sum: f64,
    pub mgf_sq_sum: f64,
    pub accounting_violations: u64,
}

impl WalkStats {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut stats = Self::default();
        for r in records {
            stats.add(r);
        }
        stats
    }

    pub fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        self.exceeded += u64::from(r.exceeded_cap);
        self.attempts_sum += r.attempts;
        self.attempts_max = self.attempts_max.max(r.attempts);
        *self.attempts_histogram.entry(r.attempts).or_default() += 1;
        self.queries_sum += r.queries;
        self.queries_max = self.queries_max.max(r.queries);
        *self.queries_histogram.entry(r.queries).or_default() += 1;
        self.recursive_steps_sum += r.recursive_steps;
        self.recursive_steps_max = self.recursive_steps_max.max(r.recursive_steps);
        self.conditioned_segments += r.conditioned_segments;
        self.mgf_sum += r.mgf_sum;
        self.mgf_sq_sum += r.mgf_sq_sum;
        self.accounting_violations += r.accounting_violations;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.trials += other.trials;
        self.exceeded += other.exceeded;
        self.attempts_sum += other.attempts_sum;
        self.attempts_max = self.attempts_max.max(other.attempts_max);
        for (k, v) in &other.attempts_histogram {
            *self.attempts_histogram.entry(*k).or_default() += v;
        }
        self.queries_sum += other.queries_sum;
        self.queries_max = self.queries_max.max(other.queries_max);
        for (k, v) in &other.queries_histogram {
            *self.queries_histogram.entry(*k).or_default() += v;
        }
        self.recursive_steps_sum += other.recursive_steps_sum;
        self.recursive_steps_max = self.recursive_steps_max.max(other.recursive_steps_max);
        self.conditioned_segments += other.conditioned_segments;
        self.mgf_sum += other.mgf_sum;
        self.mgf_sq_sum += other.mgf_sq_sum;
        self.accounting_violations += other.accounting_violations;
        self
    }

    pub fn exceedance_rate(&self) -> f64 {
        self.exceeded as f64 / self.trials.max(1) as f64
    }

    pub fn mean_attempts(&self) -> f64 {
        self.attempts_sum as f64 / self.trials.max(1) as f64
    }

    /// Estimate of `E[e^{tQ}]` per conditioned segment.
    pub fn mgf_mean(&self) -> f64 {
        self.mgf_sum / self.conditioned_segments.max(1) as f64
    }

    pub fn mgf_standard_error(&self) -> f64 {
        let n = self.conditioned_segments.max(2) as f64;
        let mean = self.mgf_mean();
        let var = (self.mgf_sq_sum / n - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Runs `trials` independent walks.
pub fn monte_carlo_walk(
    params: &WalkParameters,
    trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<(Vec<TrialRecord>, WalkStats)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let records = execution.map_indexed(trials as usize, |i| simulate_trial(params, seed, i as u64));
    let stats = WalkStats::from_records(&records);
    Ok((records, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn cap_bound_at_lambda_24() {
        assert!((cap_bound(1, 24) - (-576.0f64 / 624.0).exp()).abs() < 1e-15);
        assert!((cap_bound(1, 24) - 0.397).abs() < 1e-3);
    }

    #[test]
    fn cap_for_hundred_segments() {
        let cap = chernoff_cap(100, 1e-3).unwrap();
        // independent recomputation: scan every integer
        let l = 1000f64.ln();
        let brute = (0u64..).find(|&x| (x * x) as f64 >= 24.0 * l * (200.0 + x as f64)).unwrap();
        assert_eq!(cap.lambda, brute);
        assert_eq!(cap.lambda, 283);
        assert_eq!(cap.n, 483);
        assert!(cap_bound(100, cap.lambda) <= 1e-3);
        assert!(cap_bound(100, cap.lambda - 1) > 1e-3);
    }

    #[test]
    fn cap_at_eps_one_is_zero() {
        assert_eq!(chernoff_cap(5, 1.0).unwrap(), ChernoffCap { lambda: 0, n: 10 });
        assert!(chernoff_cap(0, 0.1).is_err());
        assert!(chernoff_cap(3, 0.0).is_err());
    }

    #[test]
    fn fault_pmf_values() {
        assert_eq!(fault_pmf_exact(1, 0).unwrap(), BigRational::new(3.into(), 4.into()));
        assert!((fault_pmf(1, 0).unwrap() - 0.75).abs() < 1e-16);
        let q0 = fault_pmf(35, 0).unwrap();
        assert!((q0 - (1.0f64 - 1.0 / 140.0).powi(35)).abs() < 1e-15);
        assert!((q0 - 0.77811).abs() < 1e-5 && q0 >= 0.75);
        for m in [1u64, 35, 1000] {
            let total: f64 = (0..=m).map(|f| fault_pmf(m, f).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
        assert!(fault_pmf(3, 4).is_err());
        assert!(fault_pmf(0, 0).is_err());
    }

    #[test]
    fn exact_and_float_pmf_agree() {
        for f in 0..=10 {
            let exact = fault_pmf_exact(10, f).unwrap().to_f64().unwrap();
            let got = fault_pmf(10, f).unwrap();
            assert!(((got - exact) / exact).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_bound_holds() {
        for m in [2u64, 10, 35, 100, 1000] {
            for f in 0..=m {
                let check = bound_check(m, f).unwrap();
                assert!(check.holds, "m={m} f={f}");
                assert_eq!(check.exact, m <= EXACT_CHECK_LIMIT);
            }
        }
    }

    #[test]
    fn beta_stays_below_a_quarter() {
        for m in [35u64, 100, 1000, 10_000] {
            assert!(beta(m) < 0.25);
            assert!(beta(m) <= beta_bound(m));
        }
        let limit = (-0.25f64).exp() * ((0.1f64.exp() / 4.0).exp() - 1.0);
        assert!((beta_bound(1 << 40) - limit).abs() < 1e-12);
        assert!(limit < 0.25);
    }

    #[test]
    fn mgf_params() {
        let p = mgf_bound_params(100, 100, 1e-3).unwrap();
        assert!(p.alpha > 0.0 && p.alpha.is_finite());
        assert_eq!(p.n_m, chernoff_cap(1, 1e-5).unwrap().n);
        assert!((p.t_mgf - 1.0 / (40.0 * p.n_m as f64)).abs() < 1e-18);
        assert!(mgf_bound_params(34, 100, 1e-3).is_err());
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!([1, 2, 3, 4, 5, 100, 128, 129].map(ceil_log2), [0, 1, 2, 2, 3, 7, 7, 8]);
    }

    #[test]
    fn fault_free_walk_uses_exactly_t_attempts() {
        let params = WalkParameters::with_failure_probability(50, 10, 1e-3, 0.0).unwrap();
        let (records, stats) = monte_carlo_walk(&params, 20, 1, Execution::Sequential).unwrap();
        assert!(records.iter().all(|r| r.attempts == 50 && r.queries == 0));
        assert_eq!(stats.exceeded, 0);
    }

    #[test]
    fn scripted_walk_accounting() {
        let params = WalkParameters::new(1, 100, 1e-3).unwrap();
        // fail (3), undo fails (2), undo-of-undo ok, undo ok, redo ok
        let mut script = vec![3u64, 2, 0, 0, 0].into_iter();
        let mut steps = 0;
        let seg = walk_segment(|| script.next().unwrap(), &params, 100, &mut steps);
        assert_eq!(seg.attempts, 5);
        assert_eq!(seg.n_fail, 2);
        assert_eq!(seg.faults, 5);
        assert_eq!(seg.queries, 2 * 3 + 2 * 5 + 2 * 3);
        assert!(seg.satisfies_accounting());
        assert_eq!(steps, 5 + 2 * 5 * 7);
    }

    #[test]
    fn trials_are_reproducible_and_policy_independent() {
        let params = WalkParameters::new(20, 40, 1e-2).unwrap();
        let (a, sa) = monte_carlo_walk(&params, 200, 9, Execution::Parallel).unwrap();
        let (b, sb) = monte_carlo_walk(&params, 200, 9, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let merged = WalkStats::from_records(&a[..70]).merge(&WalkStats::from_records(&a[70..]));
        assert_eq!(merged.attempts_histogram, sa.attempts_histogram);
        assert_eq!(merged.trials, sa.trials);
        assert_eq!(merged.accounting_violations, 0);
    }
}
