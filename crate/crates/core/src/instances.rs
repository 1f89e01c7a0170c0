//! Named Hamiltonians and seeded random generators shared by the tests,
//! benches, the acceptance suite and the CLI `verify` command.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::hamiltonian::{
    CoefficientFunction, DiagonalEntry, OffDiagonalEntry, TimeDependentHamiltonian,
};
use crate::one_sparse::{OneSparseTerm, Support, TermKind};

fn off(row: usize, col: usize, re: CoefficientFunction, im: CoefficientFunction) -> OffDiagonalEntry {
    OffDiagonalEntry { row, col, re, im }
}

pub fn sigma_x() -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(
        1,
        1,
        vec![off(0, 1, CoefficientFunction::constant(1.0), CoefficientFunction::ZERO)],
        vec![],
    )
    .expect("valid")
}

pub fn sigma_y() -> TimeDependentHamiltonian {
    // σy[0,1] = −i
    TimeDependentHamiltonian::new(
        1,
        1,
        vec![off(0, 1, CoefficientFunction::ZERO, CoefficientFunction::constant(-1.0))],
        vec![],
    )
    .expect("valid")
}

pub fn sigma_z() -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(
        1,
        1,
        vec![],
        vec![
            DiagonalEntry {
                index: 0,
                re: CoefficientFunction::constant(1.0),
            },
            DiagonalEntry {
                index: 1,
                re: CoefficientFunction::constant(-1.0),
            },
        ],
    )
    .expect("valid")
}

pub fn sigma_x_plus_sigma_z() -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(
        1,
        2,
        vec![off(0, 1, CoefficientFunction::constant(1.0), CoefficientFunction::ZERO)],
        vec![
            DiagonalEntry {
                index: 0,
                re: CoefficientFunction::constant(1.0),
            },
            DiagonalEntry {
                index: 1,
                re: CoefficientFunction::constant(-1.0),
            },
        ],
    )
    .expect("valid")
}

/// `(1 + t)·σx`, which commutes with itself at all times.
pub fn ramped_sigma_x() -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(
        1,
        1,
        vec![off(0, 1, CoefficientFunction::ramp(1.0, 1.0), CoefficientFunction::ZERO)],
        vec![],
    )
    .expect("valid")
}

/// Two σx blocks with weights 1 and 1/2 on two qubits: the smallest matrix
/// whose rounded decomposition needs the zero-eigenvalue split.
pub fn two_block_example() -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(
        2,
        1,
        vec![
            off(0, 1, CoefficientFunction::constant(1.0), CoefficientFunction::ZERO),
            off(2, 3, CoefficientFunction::constant(0.5), CoefficientFunction::ZERO),
        ],
        vec![],
    )
    .expect("valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeDependence {
    Constant,
    Ramp,
    Sinusoid,
    /// Each coefficient picks one of the above at random.
    Mixed,
}

/// Shape of a random instance.
#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub n_qubits: u32,
    pub d: usize,
    pub time_dependence: TimeDependence,
    pub imaginary_parts: bool,
    pub diagonal: bool,
    /// Coefficients are drawn from `[-magnitude, magnitude]`.
    pub magnitude: f64,
}

impl RandomSpec {
    pub fn new(n_qubits: u32, d: usize) -> Self {
        Self {
            n_qubits,
            d,
            time_dependence: TimeDependence::Mixed,
            imaginary_parts: true,
            diagonal: true,
            magnitude: 1.0,
        }
    }

    pub fn with_time_dependence(mut self, td: TimeDependence) -> Self {
        self.time_dependence = td;
        self
    }

    pub fn with_magnitude(mut self, magnitude: f64) -> Self {
        self.magnitude = magnitude;
        self
    }
}

fn random_coefficient<R: Rng + ?Sized>(rng: &mut R, td: TimeDependence, scale: f64) -> CoefficientFunction {
    let td = match td {
        TimeDependence::Mixed => *[TimeDependence::Constant, TimeDependence::Ramp, TimeDependence::Sinusoid]
            .choose(rng)
            .expect("nonempty"),
        other => other,
    };
    let c = rng.random_range(-scale..scale);
    match td {
        TimeDependence::Constant | TimeDependence::Mixed => CoefficientFunction::constant(c),
        TimeDependence::Ramp => CoefficientFunction::ramp(c, rng.random_range(-scale..scale)),
        TimeDependence::Sinusoid => CoefficientFunction::sinusoid(
            c,
            rng.random_range(-scale..scale) * 0.5,
            rng.random_range(0.5..3.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        ),
    }
}

/// Random d-sparse Hamiltonian. Edges are proposed at random and kept while
/// both endpoints have spare row capacity, so rows never exceed `d`.
pub fn random_hamiltonian<R: Rng + ?Sized>(rng: &mut R, spec: &RandomSpec) -> TimeDependentHamiltonian {
    let dim = 1usize << spec.n_qubits;
    let mut degree = vec![0usize; dim];
    let mut diagonal = Vec::new();
    if spec.diagonal {
        for (i, deg) in degree.iter_mut().enumerate() {
            if rng.random_bool(0.5) {
                diagonal.push(DiagonalEntry {
                    index: i,
                    re: random_coefficient(rng, spec.time_dependence, spec.magnitude),
                });
                *deg += 1;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|a| ((a + 1)..dim).map(move |b| (a, b)))
        .collect();
    pairs.shuffle(rng);
    let mut entries = Vec::new();
    for (a, b) in pairs {
        if degree[a] < spec.d && degree[b] < spec.d && rng.random_bool(0.7) {
            degree[a] += 1;
            degree[b] += 1;
            let re = random_coefficient(rng, spec.time_dependence, spec.magnitude);
            let im = if spec.imaginary_parts && rng.random_bool(0.5) {
                random_coefficient(rng, spec.time_dependence, spec.magnitude)
            } else {
                CoefficientFunction::ZERO
            };
            entries.push(off(a, b, re, im));
        }
    }
    TimeDependentHamiltonian::new(spec.n_qubits, spec.d, entries, diagonal)
        .expect("generator respects the sparsity bound")
}

/// Random 1-sparse term of the requested kind on `n_qubits` qubits. Roughly
/// half the basis is left uncovered so the zero-eigenvalue split is exercised.
pub fn random_one_sparse_term<R: Rng + ?Sized>(rng: &mut R, n_qubits: u32, kind: TermKind) -> OneSparseTerm {
    let dim = 1usize << n_qubits;
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(rng);
    let mut support = Vec::new();
    let mut coefficients = Vec::new();
    let full = rng.random_bool(0.25);
    match kind {
        TermKind::RealDiagonal => {
            for &i in &order {
                if full || rng.random_bool(0.6) {
                    support.push(Support::Single(i));
                    coefficients.push(random_coefficient(rng, TimeDependence::Mixed, 2.0));
                }
            }
        }
        _ => {
            for chunk in order.chunks(2) {
                if let [a, b] = *chunk {
                    if full || rng.random_bool(0.6) {
                        support.push(Support::Pair(a.min(b), a.max(b)));
                        coefficients.push(random_coefficient(rng, TimeDependence::Mixed, 2.0));
                    }
                }
            }
        }
    }
    if support.is_empty() {
        support.push(match kind {
            TermKind::RealDiagonal => Support::Single(0),
            _ => Support::Pair(0, 1),
        });
        coefficients.push(CoefficientFunction::constant(1.0));
    }
    OneSparseTerm::new(dim, 0, kind, support, coefficients).expect("valid by construction")
}
