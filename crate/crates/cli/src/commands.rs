use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hamsim_core::executor::{self, ExecutorConfig};
use hamsim_core::gadget::{self, Direction, FaultOperator, GadgetMode};
use hamsim_core::hamiltonian::{TimeDependentHamiltonian, DEFAULT_DENSE_CAP};
use hamsim_core::instances::{self, RandomSpec};
use hamsim_core::linalg::apply;
use hamsim_core::one_sparse::{decompose_hamiltonian, verify_partition, TermKind};
use hamsim_core::par::{with_jobs, Execution};
use hamsim_core::planner::{resource_estimate, segment_plan, sweep, PlannerConfig};
use hamsim_core::reference::exact_evolution;
use hamsim_core::self_inverse::{decompose, verify_family};
use hamsim_core::walk::{self, WalkParameters};
use hamsim_core::{report, state, Error as CoreError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{Command, Mode, Problem, Suite};

/// Tolerance of the exact reference evolution.
const REFERENCE_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("verification suite failed: {0}")]
    VerifyFailed(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::VerifyFailed(_) => 1,
            CliError::Core(CoreError::NonConvergence(_)) => 2,
            CliError::Core(_) => 1,
            CliError::Output(_) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load_spec(path: &Path) -> Result<TimeDependentHamiltonian> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input { path: path.to_path_buf(), source: e })?;
    Ok(TimeDependentHamiltonian::from_json(&text)?)
}

fn print_json(value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)? + "\n";
    print_text(&text)
}

/// Writes to standard output; a reader that closed the pipe early is not an
/// error.
fn print_text(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

/// Writes `value` to `path`, or to standard error without a path.
fn write_summary(path: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)? + "\n";
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stderr().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execution(jobs: usize) -> Execution {
    if jobs == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--eps must lie in (0, 1), got {eps}")))
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Decompose { spec, t, dump } => decompose_cmd(&spec, t, dump),
        Command::Plan { problem, eps } => plan_cmd(&problem, eps),
        Command::Run { problem, eps, mode, seed, seeds, jobs, state, summary } => with_jobs(jobs, || {
            run_cmd(&problem, eps, mode, seed, seeds, execution(jobs), state, summary.as_deref())
        }),
        Command::Walk { segments, m, eps, trials, seed, p_fail, jobs, summary } => with_jobs(jobs, || {
            walk_cmd(segments, m, eps, trials, seed, p_fail, execution(jobs), summary.as_deref())
        }),
        Command::Sweep { problem, eps, max_blocks, jobs } => {
            with_jobs(jobs, || sweep_cmd(&problem, &eps, max_blocks, execution(jobs)))
        }
        Command::Verify { suite, seed, cases } => verify_cmd(suite, seed, cases),
    }
}

fn decompose_cmd(spec: &Path, t: f64, dump: bool) -> Result<()> {
    let h = load_spec(spec)?;
    let (coloring, terms) = decompose_hamiltonian(&h);
    if dump {
        let mut fragments = Vec::with_capacity(terms.len());
        for term in &terms {
            let doc: Value = serde_json::from_str(&term.to_hamiltonian()?.to_json()).map_err(std::io::Error::from)?;
            fragments.push(json!({ "color": term.color, "kind": term.kind, "term": doc }));
        }
        return print_json(&Value::Array(fragments));
    }
    let report = verify_partition(&h, &terms, t)?;
    let summary: Vec<Value> = terms
        .iter()
        .map(|term| json!({ "color": term.color, "kind": term.kind, "blocks": term.support.len() }))
        .collect();
    print_json(&json!({
        "n_qubits": h.n_qubits(),
        "d": h.sparseness(),
        "num_colors": coloring.num_colors,
        "num_terms": terms.len(),
        "terms": summary,
        "t": t,
        "max_deviation": report.max_deviation,
        "exact": report.is_exact(),
    }))
}

fn plan_cmd(problem: &Problem, eps: f64) -> Result<()> {
    check_eps(eps)?;
    let h = load_spec(&problem.spec)?;
    let plan = segment_plan(&h, problem.t, eps, &PlannerConfig::default())?;
    let estimate = resource_estimate(&plan, eps)?;
    print_json(&json!({
        "plan": plan,
        "estimate": estimate,
        "error_bound": plan.total_error_bound(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn run_cmd(
    problem: &Problem,
    eps: f64,
    mode: Mode,
    seed: u64,
    seeds: Option<u64>,
    execution: Execution,
    index: usize,
    summary: Option<&Path>,
) -> Result<()> {
    check_eps(eps)?;
    let h = load_spec(&problem.spec)?;
    if index >= h.dimension() {
        return Err(CliError::Usage(format!(
            "--state {index} is out of range for dimension {}",
            h.dimension()
        )));
    }
    let plan = segment_plan(&h, problem.t, eps, &PlannerConfig { execution, ..PlannerConfig::default() })?;
    let psi = state::basis_state(h.dimension(), index);
    let exact = apply(&exact_evolution(&h, problem.t, REFERENCE_TOL)?.unitary, &psi);
    let config = ExecutorConfig::default();
    match (mode, seeds) {
        (Mode::Ideal, Some(_)) => Err(CliError::Usage("--seeds applies to stochastic runs only".into())),
        (Mode::Ideal, None) => {
            let run = executor::run_ideal(&plan, &psi, &config)?;
            let error = executor::state_error_vs_exact(&run.final_state, &exact)?;
            print_json(&json!({
                "mode": "ideal",
                "r": plan.r,
                "m": plan.m,
                "segments": plan.num_segments,
                "k1": plan.k1,
                "error": error,
                "run": run,
            }))
        }
        (Mode::Stochastic, None) => {
            let trace = executor::run_stochastic(&plan, &psi, seed, &config)?;
            let error = if trace.completed {
                Some(executor::state_error_vs_exact(&trace.final_state, &exact)?)
            } else {
                None
            };
            print_json(&json!({ "mode": "stochastic", "error": error, "trace": trace }))
        }
        (Mode::Stochastic, Some(count)) => {
            if count == 0 {
                return Err(CliError::Usage("--seeds must be positive".into()));
            }
            let list: Vec<u64> = (0..count).map(|i| seed.wrapping_add(i)).collect();
            let traces = executor::run_batch(&plan, &psi, &list, execution, &config)?;
            print_text(&report::batch_csv(&traces, &exact)?)?;
            write_summary(
                summary,
                &json!({
                    "eps": eps,
                    "first_seed": seed,
                    "seeds": count,
                    "stats": executor::summarize(&traces, &exact),
                }),
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn walk_cmd(
    segments: u64,
    m: u64,
    eps: f64,
    trials: u64,
    seed: u64,
    p_fail: Option<f64>,
    execution: Execution,
    summary: Option<&Path>,
) -> Result<()> {
    check_eps(eps)?;
    let params = match p_fail {
        Some(p) => WalkParameters::with_failure_probability(segments, m, eps, p)?,
        None => WalkParameters::new(segments, m, eps)?,
    };
    let (records, stats) = walk::monte_carlo_walk(&params, trials, seed, execution)?;
    print_text(&report::walk_csv(&records)?)?;
    let mgf = walk::mgf_bound_params(m, segments, eps).ok();
    let trials_f = stats.trials as f64;
    write_summary(
        summary,
        &json!({
            "parameters": params,
            "empirical": {
                "trials": stats.trials,
                "exceedance_rate": stats.exceedance_rate(),
                "mean_attempts": stats.mean_attempts(),
                "max_attempts": stats.attempts_max,
                "mean_queries": stats.queries_sum as f64 / trials_f,
                "max_queries": stats.queries_max,
                "max_recursive_steps": stats.recursive_steps_max,
                "mgf_mean": stats.mgf_mean(),
                "mgf_standard_error": stats.mgf_standard_error(),
                "accounting_violations": stats.accounting_violations,
            },
            "analytic": {
                "cap_bound": walk::cap_bound(segments, params.lambda),
                "recursive_step_cap": params.recursive_step_cap(),
                "mgf_limit": mgf.map(|b| 1.0 + b.x * b.alpha * b.t_mgf),
                "cost": mgf,
            },
        }),
    )
}

fn sweep_cmd(problem: &Problem, eps_values: &[f64], max_blocks: u128, execution: Execution) -> Result<()> {
    for &eps in eps_values {
        check_eps(eps)?;
    }
    let h = load_spec(&problem.spec)?;
    let config = PlannerConfig { execution, ..PlannerConfig::default() };
    let rows = sweep(&h, problem.t, eps_values, &config)?;
    let exact = if h.n_qubits() <= DEFAULT_DENSE_CAP {
        Some(exact_evolution(&h, problem.t, REFERENCE_TOL)?.unitary)
    } else {
        None
    };
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let blocks = row.r as u128 * decompose_hamiltonian(&h).1.len() as u128;
        let measured = match &exact {
            Some(u) if blocks <= max_blocks => {
                let plan = segment_plan(&h, problem.t, row.eps, &config)?;
                let compiled = executor::compile_unitary(&plan, &ExecutorConfig { max_blocks })?;
                Some(executor::error_vs_exact(&compiled, u)?.operator_distance)
            }
            _ => None,
        };
        out.push((row, measured));
    }
    print_text(&report::sweep_csv(&out)?)
}

struct SuiteResult {
    failures: Vec<String>,
    details: Value,
}

fn verify_cmd(suite: Suite, seed: u64, cases: usize) -> Result<()> {
    if cases == 0 {
        return Err(CliError::Usage("--cases must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = match suite {
        Suite::Lemma1 => lemma1_suite(&mut rng, cases)?,
        Suite::Partition => partition_suite(&mut rng, cases)?,
        Suite::Gadget => gadget_suite(&mut rng, cases)?,
        Suite::Bounds => bounds_suite()?,
    };
    let passed = result.failures.is_empty();
    print_json(&json!({
        "suite": format!("{suite:?}").to_lowercase(),
        "seed": seed,
        "passed": passed,
        "failures": result.failures.iter().take(20).collect::<Vec<_>>(),
        "details": result.details,
    }))?;
    if passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(format!("{} checks failed", result.failures.len())))
    }
}

fn lemma1_suite(rng: &mut ChaCha8Rng, cases: usize) -> Result<SuiteResult> {
    let kinds = [TermKind::RealOffDiagonal, TermKind::RealDiagonal, TermKind::ImaginaryOffDiagonal];
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut families = 0;
    for i in 0..cases {
        let n = rng.random_range(1..=6);
        let term = instances::random_one_sparse_term(rng, n, kinds[i % 3]);
        let t0 = rng.random_range(0.0..2.0);
        for gamma in [0.5, 0.1, 0.02] {
            let family = decompose(&term, t0, gamma)?;
            let r = verify_family(&term, t0, &family);
            families += 1;
            worst = worst.max(r.max_norm_error / gamma);
            if r.max_norm_error > gamma {
                failures.push(format!("case {i}, gamma {gamma}: max-norm error {:e}", r.max_norm_error));
            }
            if r.max_involution_deviation != 0.0 || r.max_commutator != 0.0 {
                failures.push(format!("case {i}, gamma {gamma}: algebraic check failed"));
            }
            if r.size > 2 * r.ell + 2 {
                failures.push(format!("case {i}, gamma {gamma}: family size {} exceeds 2l+2", r.size));
            }
        }
    }
    Ok(SuiteResult {
        failures,
        details: json!({ "families": families, "worst_error_over_gamma": worst }),
    })
}

fn partition_suite(rng: &mut ChaCha8Rng, cases: usize) -> Result<SuiteResult> {
    let mut failures = Vec::new();
    let mut max_terms = 0;
    for i in 0..cases {
        let n = rng.random_range(1..=5);
        let d = rng.random_range(1..=4);
        let h = instances::random_hamiltonian(rng, &RandomSpec::new(n, d));
        let (_, terms) = decompose_hamiltonian(&h);
        max_terms = max_terms.max(terms.len());
        let t = rng.random_range(0.0..3.0);
        let report = verify_partition(&h, &terms, t)?;
        if !report.is_exact() {
            failures.push(format!("case {i}: deviation {:e}", report.max_deviation));
        }
        if terms.len() > 2 * (2 * d - 1) + 1 {
            failures.push(format!("case {i}: {} terms for d = {d}", terms.len()));
        }
    }
    Ok(SuiteResult { failures, details: json!({ "max_terms": max_terms }) })
}

fn gadget_suite(rng: &mut ChaCha8Rng, cases: usize) -> Result<SuiteResult> {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < cases {
        let n = rng.random_range(1..=5);
        let term = instances::random_one_sparse_term(rng, n, TermKind::RealOffDiagonal);
        let family = decompose(&term, 0.0, 0.3)?;
        let Some(wt) = family.terms.first() else { continue };
        let u = &wt.term;
        let s = FRAC_PI_4 * (1.0 - rng.random::<f64>());
        let psi = state::random_state(rng, u.dimension());
        let direction = if i % 2 == 0 { Direction::Forward } else { Direction::Reverse };
        let out = gadget::apply_gadget::<ChaCha8Rng>(&psi, u, s, direction, GadgetMode::Postselect)?;
        let mut target = psi.clone();
        u.rotate(&mut target, direction.sign() * s);
        let d_branch = state::phase_distance(&out.post_state, &target);
        let d_prob = (out.branch_probability - gadget::success_probability(s)).abs();
        let (_, mut faulted) = gadget::gadget_branches(&psi, u, s, direction)?;
        state::normalize(&mut faulted);
        FaultOperator::new(direction).correct(u, &mut faulted);
        let d_corr = state::phase_distance(&faulted, &psi);
        for (name, d) in [("branch", d_branch), ("probability", d_prob), ("correction", d_corr)] {
            worst = worst.max(d);
            if d > 1e-12 {
                failures.push(format!("case {i}: {name} deviation {d:e}"));
            }
        }
        i += 1;
    }
    Ok(SuiteResult { failures, details: json!({ "worst_deviation": worst }) })
}

fn bounds_suite() -> Result<SuiteResult> {
    let mut failures = Vec::new();
    for m in [2u64, 10, 35, 100, 1000] {
        let mut total = 0.0;
        for f in 0..=m {
            if !walk::bound_check(m, f)?.holds {
                failures.push(format!("pmf bound fails at m = {m}, f = {f}"));
            }
            total += walk::fault_pmf(m, f)?;
        }
        if (total - 1.0).abs() > 1e-14 {
            failures.push(format!("pmf of m = {m} sums to {total}"));
        }
    }
    let betas: Vec<(u64, f64)> = [35u64, 100, 1000, 10_000].iter().map(|&m| (m, walk::beta(m))).collect();
    for &(m, b) in &betas {
        if b >= 0.25 {
            failures.push(format!("beta({m}) = {b}"));
        }
    }
    let cap = walk::cap_bound(1, 24);
    if (cap - (-576.0f64 / 624.0).exp()).abs() > 1e-12 {
        failures.push(format!("cap bound {cap}"));
    }
    Ok(SuiteResult { failures, details: json!({ "beta": betas, "cap_bound_1_24": cap }) })
}
