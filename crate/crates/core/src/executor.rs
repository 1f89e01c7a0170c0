//! Runs a compiled plan on a statevector.
//!
//! The ideal mode keeps the `b = 0` branch of every gadget. The stochastic
//! mode samples gadget outcomes and drives the undo/redo walk: a failed
//! attempt is undone by applying, in reverse order, exact corrections for
//! its faults and opposite-direction gadgets for its successes; that undo
//! can fail in turn and is then pushed onto a stack of pending undos.
//!
//! Gadgets that share a term and an angle commute, and their outcome
//! probabilities do not depend on the state, so a run of `n` of them is
//! simulated by drawing the fault count `f` and applying the combined
//! rotation `exp(−i·sign·((n − f)s − fπ/4)·U)`.

use std::collections::VecDeque;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::gadget::{self, Direction, FaultOperator, CORRECTION_QUERIES};
use crate::hamiltonian::{TimeDependentHamiltonian, DEFAULT_DENSE_CAP};
use crate::linalg::{expm_hermitian, CMatrix};
use crate::one_sparse::decompose_hamiltonian;
use crate::par::Execution;
use crate::planner::{ScheduleEntry, SegmentPlan};
use crate::reference::{self, Metrics};
use crate::self_inverse::SelfInverseTerm;
use crate::state::{self, State};
use crate::walk::{self, ceil_log2};

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutorConfig {
    /// Largest number of schedule blocks `r·M` a run will walk through.
    pub max_blocks: u128,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self { max_blocks: 50_000_000 }
    }
}

/// `n` consecutive gadgets with the same term and angle.
#[derive(Clone, Debug)]
pub struct GadgetRun {
    pub term: Arc<SelfInverseTerm>,
    pub s: f64,
    pub count: u64,
}

#[derive(Clone, Debug)]
struct CompiledFamily {
    s: f64,
    runs: Vec<(Arc<SelfInverseTerm>, u64)>,
}

fn compile_family(plan: &SegmentPlan, entry: ScheduleEntry) -> Result<CompiledFamily> {
    let family = plan.family(entry)?;
    Ok(CompiledFamily {
        s: family.weight * plan.dt,
        runs: family
            .terms
            .into_iter()
            .map(|wt| (Arc::new(wt.term), wt.multiplicity))
            .collect(),
    })
}

/// Gadget runs of a plan in schedule order, with families of
/// time-independent terms built once.
struct RunStream<'a> {
    plan: &'a SegmentPlan,
    fixed: Vec<Option<Arc<CompiledFamily>>>,
    entries: Box<dyn Iterator<Item = ScheduleEntry> + 'a>,
    pending: VecDeque<GadgetRun>,
}

impl<'a> RunStream<'a> {
    fn new(plan: &'a SegmentPlan) -> Result<Self> {
        let mut fixed = Vec::with_capacity(plan.terms.len());
        for (i, term) in plan.terms.iter().enumerate() {
            fixed.push(if term.is_time_independent() {
                Some(Arc::new(compile_family(
                    plan,
                    ScheduleEntry { step: 0, term: i, t0: 0.0 },
                )?))
            } else {
                None
            });
        }
        Ok(Self {
            plan,
            fixed,
            entries: Box::new(plan.schedule()),
            pending: VecDeque::new(),
        })
    }

    fn next_run(&mut self) -> Result<Option<GadgetRun>> {
        while self.pending.is_empty() {
            let Some(entry) = self.entries.next() else {
                return Ok(None);
            };
            let family = match &self.fixed[entry.term] {
                Some(f) => f.clone(),
                None => Arc::new(compile_family(self.plan, entry)?),
            };
            for (term, count) in &family.runs {
                self.pending.push_back(GadgetRun {
                    term: term.clone(),
                    s: family.s,
                    count: *count,
                });
            }
        }
        Ok(self.pending.pop_front())
    }

    /// The next `m` gadgets (fewer at the end), splitting a run at the
    /// boundary.
    fn next_segment(&mut self, m: u64) -> Result<Vec<GadgetRun>> {
        let mut out = Vec::new();
        let mut filled = 0;
        while filled < m {
            let Some(mut run) = self.next_run()? else { break };
            let take = run.count.min(m - filled);
            if take < run.count {
                let mut rest = run.clone();
                rest.count -= take;
                self.pending.push_front(rest);
                run.count = take;
            }
            filled += take;
            out.push(run);
        }
        Ok(out)
    }
}

fn check_run_inputs(plan: &SegmentPlan, dimension: usize, config: &ExecutorConfig) -> Result<()> {
    if plan.dimension != dimension {
        return Err(Error::DimensionMismatch(dimension, plan.dimension));
    }
    if dimension > 1 << DEFAULT_DENSE_CAP {
        return Err(Error::DimensionCap {
            n_qubits: dimension.trailing_zeros(),
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let blocks = plan.r as u128 * plan.num_terms as u128;
    if blocks > config.max_blocks {
        return Err(Error::PlanTooLarge(format!(
            "{blocks} schedule blocks exceed the executor limit of {}",
            config.max_blocks
        )));
    }
    Ok(())
}

fn check_state(plan: &SegmentPlan, psi: &[Complex64], config: &ExecutorConfig) -> Result<()> {
    check_run_inputs(plan, psi.len(), config)?;
    let n = state::norm(psi);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Unnormalized(n));
    }
    Ok(())
}

/// Distribution of a segment's Hamming weight over `0..=k`, with the last
/// bin holding `Pr[W > k]`.
#[derive(Clone, Debug)]
struct WeightTracker {
    m: u64,
    k: u64,
    filled: u64,
    dist: Vec<f64>,
    expected_queries: f64,
    max_tail: f64,
    segments: u64,
}

impl WeightTracker {
    fn new(m: u64, k: u64) -> Self {
        let mut dist = vec![0.0; k as usize + 2];
        dist[0] = 1.0;
        Self {
            m,
            k,
            filled: 0,
            dist,
            expected_queries: 0.0,
            max_tail: 0.0,
            segments: 0,
        }
    }

    fn convolve(&mut self, n: u64, p: f64) {
        let k = self.k as usize;
        let mut b = vec![0.0; k + 2];
        let mut term = (n as f64 * (-p).ln_1p()).exp();
        let ratio = p / (1.0 - p);
        let mut acc = 0.0;
        for (j, slot) in b.iter_mut().enumerate().take(k + 1) {
            if j as u64 > n {
                break;
            }
            *slot = term;
            acc += term;
            term *= (n - j as u64) as f64 / (j + 1) as f64 * ratio;
        }
        b[k + 1] = binomial::upper_tail(n, p, self.k).max(0.0);
        if acc + b[k + 1] == 0.0 {
            b[k + 1] = (1.0 - acc).max(0.0);
        }
        let mut out = vec![0.0; k + 2];
        for (i, &di) in self.dist.iter().enumerate() {
            if di == 0.0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                out[(i + j).min(k + 1)] += di * bj;
            }
        }
        self.dist = out;
    }

    fn add(&mut self, mut count: u64, p: f64) {
        while count > 0 {
            let take = count.min(self.m - self.filled);
            if p > 0.0 {
                self.convolve(take, p);
            }
            self.filled += take;
            count -= take;
            if self.filled == self.m {
                self.close_segment();
            }
        }
    }

    fn close_segment(&mut self) {
        let k = self.k as usize;
        self.expected_queries += self
            .dist
            .iter()
            .enumerate()
            .map(|(w, p)| w.min(k) as f64 * p)
            .sum::<f64>();
        self.max_tail = self.max_tail.max(self.dist[k + 1]);
        self.segments += 1;
        self.dist.iter_mut().for_each(|x| *x = 0.0);
        self.dist[0] = 1.0;
        self.filled = 0;
    }

    fn finish(&mut self) {
        if self.filled > 0 {
            self.close_segment();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealRun {
    pub final_state: State,
    /// Probability that every gadget reads `b = 0`.
    pub success_probability: f64,
    pub gadget_count: u128,
    /// `Σ_segments E[min(W, k₁)]`.
    pub expected_truncated_queries: f64,
    /// `num_segments · k₁`.
    pub query_cap: u128,
    /// Largest per-segment `Pr[W > k₁]` seen.
    pub max_segment_tail: f64,
    pub segments: u64,
}

/// Applies the whole schedule to every state in `states`, calling `on_run`
/// once per gadget run.
fn propagate(
    plan: &SegmentPlan,
    states: &mut [State],
    mut on_run: impl FnMut(&GadgetRun),
) -> Result<()> {
    let mut stream = RunStream::new(plan)?;
    while let Some(run) = stream.next_run()? {
        for psi in states.iter_mut() {
            run.term.rotate(psi, run.s * run.count as f64);
        }
        on_run(&run);
    }
    Ok(())
}

/// Postselected run: every gadget yields `b = 0`.
pub fn run_ideal(plan: &SegmentPlan, psi: &[Complex64], config: &ExecutorConfig) -> Result<IdealRun> {
    check_state(plan, psi, config)?;
    let mut states = vec![psi.to_vec()];
    let mut log_success = 0.0;
    let mut gadget_count = 0u128;
    let mut tracker = WeightTracker::new(plan.m, plan.k1);
    propagate(plan, &mut states, |run| {
        log_success += run.count as f64 * (-gadget::failure_probability(run.s)).ln_1p();
        gadget_count += run.count as u128;
        tracker.add(run.count, gadget::p_one(run.s));
    })?;
    tracker.finish();
    Ok(IdealRun {
        final_state: states.pop().expect("one state"),
        success_probability: log_success.exp(),
        gadget_count,
        expected_truncated_queries: tracker.expected_queries,
        query_cap: plan.num_segments as u128 * plan.k1 as u128,
        max_segment_tail: tracker.max_tail,
        segments: tracker.segments,
    })
}

/// The postselected schedule as a dense unitary.
pub fn compile_unitary(plan: &SegmentPlan, config: &ExecutorConfig) -> Result<CMatrix> {
    let dim = plan.dimension;
    check_run_inputs(plan, dim, config)?;
    let mut columns: Vec<State> = (0..dim).map(|i| state::basis_state(dim, i)).collect();
    propagate(plan, &mut columns, |_| {})?;
    Ok(CMatrix::from_fn(dim, dim, |i, j| columns[j][i]))
}

/// Exact first-order product `Π_step Π_j exp(−i H_j(t₀) δt)` over the
/// 1-sparse terms, with no rounding and no truncation.
pub fn trotter_product(h: &TimeDependentHamiltonian, t: f64, r: u64) -> Result<CMatrix> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    let (_, terms) = decompose_hamiltonian(h);
    let dim = h.dimension();
    if h.n_qubits() > DEFAULT_DENSE_CAP {
        return Err(Error::DimensionCap { n_qubits: h.n_qubits(), cap: DEFAULT_DENSE_CAP });
    }
    let dt = t / r as f64;
    let step = |t0: f64| {
        terms.iter().fold(CMatrix::identity(dim, dim), |u, term| {
            expm_hermitian(&term.dense(t0), dt) * u
        })
    };
    if h.is_time_independent() {
        // binary powering of the single step
        let mut base = step(0.0);
        let mut acc = CMatrix::identity(dim, dim);
        let mut e = r;
        while e > 0 {
            if e & 1 == 1 {
                acc = &base * &acc;
            }
            base = &base * &base;
            e >>= 1;
        }
        return Ok(acc);
    }
    Ok((0..r).fold(CMatrix::identity(dim, dim), |u, k| step(k as f64 * dt) * u))
}

/// Phase-quotiented distances between two unitaries.
pub fn error_vs_exact(result: &CMatrix, reference: &CMatrix) -> Result<Metrics> {
    reference::metrics(result, reference)
}

/// Phase-quotiented distances between two states.
pub fn state_error_vs_exact(result: &[Complex64], reference: &[Complex64]) -> Result<Metrics> {
    reference::state_metrics(result, reference)
}

/// Supplies fault counts for the gadget runs of one attempt.
pub trait FaultSource {
    /// `runs[i] = (n, p)`: `n` gadgets that each fail with probability `p`.
    fn faults(&mut self, runs: &[(u64, f64)]) -> Vec<u64>;
}

/// Independent binomial draws from a seeded stream.
pub struct SampledFaults {
    rng: ChaCha8Rng,
}

impl SampledFaults {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl FaultSource for SampledFaults {
    fn faults(&mut self, runs: &[(u64, f64)]) -> Vec<u64> {
        runs.iter()
            .map(|&(n, p)| {
                if n == 0 || p <= 0.0 {
                    0
                } else {
                    Binomial::new(n, p.min(1.0)).expect("valid binomial").sample(&mut self.rng)
                }
            })
            .collect()
    }
}

/// Fault totals fixed per attempt, placed on the earliest gadgets; attempts
/// past the end of the script are fault-free.
pub struct ScriptedFaults {
    per_attempt: VecDeque<u64>,
}

impl ScriptedFaults {
    pub fn new(per_attempt: impl IntoIterator<Item = u64>) -> Self {
        Self { per_attempt: per_attempt.into_iter().collect() }
    }
}

impl FaultSource for ScriptedFaults {
    fn faults(&mut self, runs: &[(u64, f64)]) -> Vec<u64> {
        let mut left = self.per_attempt.pop_front().unwrap_or(0);
        runs.iter()
            .map(|&(n, _)| {
                let f = left.min(n);
                left -= f;
                f
            })
            .collect()
    }
}

/// What one attempt did to the state, in order.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    /// `successes + faults` gadgets of one run.
    Gadgets {
        run: usize,
        direction: Direction,
        successes: u64,
        faults: u64,
    },
    /// `count` exact applications of `exp(−iθU)`.
    Exact { run: usize, theta: f64, count: u64 },
}

impl Op {
    /// Exact corrections needed to undo this operation.
    fn pending_corrections(&self) -> u64 {
        match *self {
            Op::Gadgets { faults, .. } => faults,
            Op::Exact { count, .. } => count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptKind {
    Forward,
    Undo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub kind: AttemptKind,
    pub success: bool,
    pub faults: u64,
    pub correction_queries: u64,
    pub recursive_steps: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentTrace {
    pub gadgets: u64,
    pub attempts: Vec<AttemptRecord>,
    /// Failed attempts `n`.
    pub n_fail: u64,
    /// Faults `E` over the failed attempts.
    pub faults: u64,
    /// Correction queries `Q`.
    pub correction_queries: u64,
    pub completed: bool,
}

impl SegmentTrace {
    /// `Q ≤ 2(2n − 1)E`.
    pub fn satisfies_accounting(&self) -> bool {
        if self.n_fail == 0 {
            return self.correction_queries == 0;
        }
        self.correction_queries <= CORRECTION_QUERIES * (2 * self.n_fail - 1) * self.faults
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub completed: bool,
    pub segments: u64,
    pub segments_completed: u64,
    pub attempts_cap: u64,
    pub attempts_used: u64,
    pub segment_traces: Vec<SegmentTrace>,
    /// Successful minus failed attempts after each attempt.
    pub walk_positions: Vec<i64>,
    pub correction_queries: u64,
    /// `k₁` per attempt.
    pub basic_queries: u64,
    pub total_faults: u64,
    pub recursive_measurement_steps: u64,
    pub final_state: State,
}

impl RunTrace {
    pub fn fault_free(&self) -> bool {
        self.total_faults == 0
    }
}

fn apply_op(op: Op, runs: &[GadgetRun], psi: &mut [Complex64]) {
    match op {
        Op::Gadgets { run, direction, successes, faults } => {
            let r = &runs[run];
            let theta = direction.sign() * r.s * successes as f64
                + FaultOperator::new(direction).angle() * faults as f64;
            r.term.rotate(psi, theta);
        }
        Op::Exact { run, theta, count } => {
            gadget::exact_rotation(&runs[run].term, theta * count as f64, psi);
        }
    }
}

/// A forward pass over a segment's runs.
fn forward_attempt(runs: &[GadgetRun], source: &mut dyn FaultSource, psi: &mut [Complex64]) -> (Vec<Op>, u64) {
    let probs: Vec<_> = runs.iter().map(|r| (r.count, gadget::failure_probability(r.s))).collect();
    let faults = source.faults(&probs);
    let mut ops = Vec::with_capacity(runs.len());
    for (i, (&f, r)) in faults.iter().zip(runs).enumerate() {
        let op = Op::Gadgets {
            run: i,
            direction: Direction::Forward,
            successes: r.count - f,
            faults: f,
        };
        apply_op(op, runs, psi);
        ops.push(op);
    }
    (ops, faults.iter().sum())
}

/// Undoes `record`; returns the operations applied, the new faults and the
/// correction queries spent.
fn undo_attempt(
    record: &[Op],
    runs: &[GadgetRun],
    source: &mut dyn FaultSource,
    psi: &mut [Complex64],
) -> (Vec<Op>, u64, u64) {
    // exact inverses and the gadget batches that still need sampling
    let mut plan: Vec<Op> = Vec::new();
    let mut sampled: Vec<(u64, f64)> = Vec::new();
    for &op in record.iter().rev() {
        match op {
            Op::Gadgets { run, direction, successes, faults } => {
                if faults > 0 {
                    plan.push(Op::Exact {
                        run,
                        theta: -FaultOperator::new(direction).angle(),
                        count: faults,
                    });
                }
                if successes > 0 {
                    plan.push(Op::Gadgets {
                        run,
                        direction: direction.flip(),
                        successes,
                        faults: 0,
                    });
                    sampled.push((successes, gadget::failure_probability(runs[run].s)));
                }
            }
            Op::Exact { run, theta, count } => plan.push(Op::Exact { run, theta: -theta, count }),
        }
    }
    let draws = source.faults(&sampled);
    let mut draws = draws.into_iter();
    let mut new_faults = 0;
    let mut queries = 0;
    for op in plan.iter_mut() {
        match op {
            Op::Gadgets { successes, faults, .. } => {
                let f = draws.next().expect("one draw per batch");
                *successes -= f;
                *faults = f;
                new_faults += f;
            }
            Op::Exact { count, .. } => queries += CORRECTION_QUERIES * *count,
        }
        apply_op(*op, runs, psi);
    }
    (plan, new_faults, queries)
}

/// Stochastic run with faults drawn from `source`. `seed` is only recorded.
pub fn run_with_source(
    plan: &SegmentPlan,
    psi: &[Complex64],
    source: &mut dyn FaultSource,
    seed: u64,
    config: &ExecutorConfig,
) -> Result<RunTrace> {
    check_state(plan, psi, config)?;
    let cap = walk::chernoff_cap(plan.num_segments, plan.eps)?;
    let steps_per_fault = 2 * ceil_log2(plan.m);
    let mut stream = RunStream::new(plan)?;
    let mut state = psi.to_vec();
    let mut trace = RunTrace {
        seed,
        completed: false,
        segments: plan.num_segments,
        segments_completed: 0,
        attempts_cap: cap.n,
        attempts_used: 0,
        segment_traces: Vec::new(),
        walk_positions: Vec::new(),
        correction_queries: 0,
        basic_queries: 0,
        total_faults: 0,
        recursive_measurement_steps: 0,
        final_state: Vec::new(),
    };
    let mut position = 0i64;
    'segments: for _ in 0..plan.num_segments {
        let runs = stream.next_segment(plan.m)?;
        let mut seg = SegmentTrace {
            gadgets: runs.iter().map(|r| r.count).sum(),
            ..SegmentTrace::default()
        };
        let mut stack: Vec<Vec<Op>> = Vec::new();
        loop {
            if trace.attempts_used >= cap.n {
                trace.segment_traces.push(seg);
                break 'segments;
            }
            trace.attempts_used += 1;
            trace.basic_queries += plan.k1;
            let (ops, faults, queries, kind) = match stack.last() {
                None => {
                    let (ops, f) = forward_attempt(&runs, source, &mut state);
                    (ops, f, 0, AttemptKind::Forward)
                }
                Some(record) => {
                    let (ops, f, q) = undo_attempt(record, &runs, source, &mut state);
                    (ops, f, q, AttemptKind::Undo)
                }
            };
            let steps = 1 + faults * steps_per_fault;
            trace.recursive_measurement_steps += steps;
            trace.total_faults += faults;
            seg.correction_queries += queries;
            seg.attempts.push(AttemptRecord {
                kind,
                success: faults == 0,
                faults,
                correction_queries: queries,
                recursive_steps: steps,
            });
            if faults == 0 {
                position += 1;
                trace.walk_positions.push(position);
                if stack.pop().is_none() {
                    seg.completed = true;
                    break;
                }
            } else {
                position -= 1;
                trace.walk_positions.push(position);
                seg.n_fail += 1;
                seg.faults += faults;
                debug_assert!(ops.iter().map(Op::pending_corrections).sum::<u64>() >= faults);
                stack.push(ops);
            }
        }
        trace.correction_queries += seg.correction_queries;
        trace.segment_traces.push(seg);
        trace.segments_completed += 1;
    }
    trace.completed = trace.segments_completed == plan.num_segments;
    trace.final_state = state;
    Ok(trace)
}

/// Stochastic run with binomially sampled faults.
pub fn run_stochastic(plan: &SegmentPlan, psi: &[Complex64], seed: u64, config: &ExecutorConfig) -> Result<RunTrace> {
    run_with_source(plan, psi, &mut SampledFaults::new(seed), seed, config)
}

/// Independent stochastic runs, returned in seed order.
pub fn run_batch(
    plan: &SegmentPlan,
    psi: &[Complex64],
    seeds: &[u64],
    execution: Execution,
    config: &ExecutorConfig,
) -> Result<Vec<RunTrace>> {
    execution
        .map_indexed(seeds.len(), |i| run_stochastic(plan, psi, seeds[i], config))
        .into_iter()
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub runs: u64,
    pub completed: u64,
    pub incomplete_rate: f64,
    /// Over completed runs, against the reference state.
    pub mean_fidelity: f64,
    pub fidelity_standard_error: f64,
    pub mean_attempts: f64,
    pub mean_correction_queries: f64,
    pub fault_free_runs: u64,
}

pub fn summarize(traces: &[RunTrace], reference_state: &[Complex64]) -> BatchStats {
    let fidelities: Vec<f64> = traces
        .iter()
        .filter(|t| t.completed)
        .map(|t| state::fidelity(&t.final_state, reference_state))
        .collect();
    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n.max(1.0);
    let var = if n > 1.0 {
        fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let runs = traces.len() as f64;
    BatchStats {
        runs: traces.len() as u64,
        completed: fidelities.len() as u64,
        incomplete_rate: 1.0 - n / runs.max(1.0),
        mean_fidelity: mean,
        fidelity_standard_error: (var / n.max(1.0)).sqrt(),
        mean_attempts: traces.iter().map(|t| t.attempts_used as f64).sum::<f64>() / runs.max(1.0),
        mean_correction_queries: traces.iter().map(|t| t.correction_queries as f64).sum::<f64>() / runs.max(1.0),
        fault_free_runs: traces.iter().filter(|t| t.fault_free()).count() as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub segment: u64,
    pub gadgets: u64,
    /// `‖K ψ − K_{≤k₁} ψ‖` for the segment's `b = 0` operator `K`.
    pub error: f64,
    /// `Pr[W > k₁]` for the segment's own weight distribution.
    pub weight_tail: f64,
    pub eps1: f64,
    /// `E[min(W, k₁)]`.
    pub expected_queries: f64,
}

/// Drops every ancilla string of weight above `k₁` from one segment and
/// measures the effect on the `b = 0` branch for input `psi`.
pub fn segment_truncation(
    plan: &SegmentPlan,
    segment: u64,
    psi: &[Complex64],
    config: &ExecutorConfig,
) -> Result<TruncationCheck> {
    check_state(plan, psi, config)?;
    if segment >= plan.num_segments {
        return Err(Error::InvalidArgument(format!(
            "segment {segment} out of range (plan has {})",
            plan.num_segments
        )));
    }
    let mut stream = RunStream::new(plan)?;
    for _ in 0..segment {
        stream.next_segment(plan.m)?;
    }
    let runs = stream.next_segment(plan.m)?;
    let k = plan.k1 as usize;
    let dim = psi.len();
    let zero = Complex64::new(0.0, 0.0);
    // by_weight[w] = Σ_{|x| = w} amplitude(x)·U_x ψ
    let mut by_weight: Vec<State> = vec![vec![zero; dim]; k + 1];
    by_weight[0] = psi.to_vec();
    let mut full = psi.to_vec();
    let mut tracker = WeightTracker::new(u64::MAX, plan.k1);
    let mut gadgets = 0;
    for run in &runs {
        let (sn, cs) = run.s.sin_cos();
        let norm = cs + sn;
        let n = run.count;
        // coefficient of weight j within the run: C(n,j)(c/ν²)^{n−j}(−i σ/ν²)^j
        let coeff: Vec<Complex64> = (0..=k as u64)
            .map(|j| {
                if j > n {
                    return zero;
                }
                let ln = binomial::ln_choose(n, j) + (n - j) as f64 * (cs / norm).ln() + j as f64 * (sn / norm).ln();
                let magnitude = if j == 0 { ((n as f64) * (cs / norm).ln()).exp() } else { ln.exp() };
                magnitude * Complex64::new(0.0, -1.0).powu(j as u32)
            })
            .collect();
        let applied: Vec<State> = by_weight
            .iter()
            .map(|v| {
                let mut out = vec![zero; dim];
                run.term.apply_to(v, &mut out);
                out
            })
            .collect();
        let mut next: Vec<State> = vec![vec![zero; dim]; k + 1];
        for w in 0..=k {
            for j in 0..=w {
                let c = coeff[j];
                if c == zero {
                    continue;
                }
                let src = if j % 2 == 0 { &by_weight[w - j] } else { &applied[w - j] };
                for (dst, x) in next[w].iter_mut().zip(src) {
                    *dst += c * x;
                }
            }
        }
        by_weight = next;
        run.term.rotate(&mut full, run.s * n as f64);
        let scale = norm.powi(-(n.min(i32::MAX as u64) as i32));
        full.iter_mut().for_each(|z| *z *= scale);
        tracker.add(n, gadget::p_one(run.s));
        gadgets += n;
    }
    let mut truncated = vec![zero; dim];
    for v in &by_weight {
        for (t, x) in truncated.iter_mut().zip(v) {
            *t += x;
        }
    }
    tracker.finish();
    Ok(TruncationCheck {
        segment,
        gadgets,
        error: state::distance(&full, &truncated),
        weight_tail: tracker.max_tail,
        eps1: plan.eps1,
        expected_queries: tracker.expected_queries,
    })
}
