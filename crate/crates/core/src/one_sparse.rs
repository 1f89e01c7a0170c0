//! Partition of a d-sparse Hamiltonian into real and imaginary 1-sparse terms.
//!
//! The sparsity graph is edge-coloured greedily in `(row, col)` order, so a
//! colour class is a matching and therefore 1-sparse. Each class contributes
//! at most two terms (its real and its imaginary parts) and the whole diagonal
//! becomes a single real term. The partition is exact: summing the terms
//! reproduces `H(t)` bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{CoefficientFunction, DiagonalEntry, OffDiagonalEntry, TimeDependentHamiltonian};

/// Colour assignment for the off-diagonal sparsity graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringPlan {
    /// Colour of each stored upper-triangle entry, aligned with
    /// [`TimeDependentHamiltonian::entries`].
    pub edge_colors: Vec<u32>,
    /// Reserved label for the diagonal term.
    pub diagonal_color: u32,
    /// Number of off-diagonal colours, plus one if the diagonal is nonempty.
    pub num_colors: u32,
}

impl ColoringPlan {
    pub fn color_of(&self, h: &TimeDependentHamiltonian, a: usize, b: usize) -> Option<u32> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        h.entries()
            .binary_search_by_key(&(lo, hi), |e| (e.row, e.col))
            .ok()
            .map(|k| self.edge_colors[k])
    }

    pub fn off_diagonal_colors(&self) -> u32 {
        self.diagonal_color
    }
}

/// Greedy proper edge colouring in lexicographic edge order: every edge gets
/// the smallest colour unused at both endpoints, giving at most `2Δ − 1`
/// colours for maximum off-diagonal degree `Δ`.
pub fn color_edges(h: &TimeDependentHamiltonian) -> ColoringPlan {
    let dim = h.dimension();
    // colours already used at each vertex; degrees are tiny so a Vec suffices
    let mut used: Vec<Vec<u32>> = vec![Vec::new(); dim];
    let mut edge_colors = Vec::with_capacity(h.entries().len());
    let mut num_off = 0u32;
    for e in h.entries() {
        let mut c = 0u32;
        while used[e.row].contains(&c) || used[e.col].contains(&c) {
            c += 1;
        }
        used[e.row].push(c);
        used[e.col].push(c);
        num_off = num_off.max(c + 1);
        edge_colors.push(c);
    }
    let has_diag = !h.diagonal().is_empty();
    ColoringPlan {
        edge_colors,
        diagonal_color: num_off,
        num_colors: num_off + u32::from(has_diag),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// Real symmetric off-diagonal blocks, multiples of σx.
    RealOffDiagonal,
    /// Real diagonal.
    RealDiagonal,
    /// Purely imaginary Hermitian off-diagonal blocks, multiples of σy.
    ImaginaryOffDiagonal,
}

/// One element of a 1-sparse support: a `(low, high)` pair or a diagonal site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Pair(usize, usize),
    Single(usize),
}

/// A real or imaginary 1-sparse Hamiltonian.
///
/// For a pair `(a, b)` with `a < b` and coefficient `w(t)` the matrix holds
/// `w` at both `(a,b)` and `(b,a)` for the real kind, and `i·w` at `(a,b)`,
/// `−i·w` at `(b,a)` for the imaginary kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneSparseTerm {
    pub dimension: usize,
    pub color: u32,
    pub kind: TermKind,
    pub support: Vec<Support>,
    pub coefficients: Vec<CoefficientFunction>,
}

impl OneSparseTerm {
    /// Builds a term after checking kind/support consistency and 1-sparsity.
    pub fn new(
        dimension: usize,
        color: u32,
        kind: TermKind,
        support: Vec<Support>,
        coefficients: Vec<CoefficientFunction>,
    ) -> Result<Self> {
        if support.len() != coefficients.len() {
            return Err(Error::InvalidArgument(
                "support and coefficient lists differ in length".into(),
            ));
        }
        let mut touched = vec![false; dimension];
        let mut mark = |i: usize| -> Result<()> {
            if i >= dimension {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dimension,
                });
            }
            if std::mem::replace(&mut touched[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "index {i} appears twice; the term is not 1-sparse"
                )));
            }
            Ok(())
        };
        for s in &support {
            match (*s, kind) {
                (Support::Pair(a, b), TermKind::RealOffDiagonal | TermKind::ImaginaryOffDiagonal) => {
                    if a >= b {
                        return Err(Error::InvalidArgument(format!(
                            "pair ({a}, {b}) must be ordered low < high"
                        )));
                    }
                    mark(a)?;
                    mark(b)?;
                }
                (Support::Single(a), TermKind::RealDiagonal) => mark(a)?,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "support element {s:?} does not match term kind {kind:?}"
                    )))
                }
            }
        }
        Ok(Self {
            dimension,
            color,
            kind,
            support,
            coefficients,
        })
    }

    /// Real coefficient values at `t`, aligned with `support`.
    pub fn values(&self, t: f64) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.value(t)).collect()
    }

    /// `‖G(t)‖_max`.
    pub fn max_entry(&self, t: f64) -> f64 {
        self.coefficients
            .iter()
            .fold(0.0, |acc, c| acc.max(c.value(t).abs()))
    }

    pub fn is_time_independent(&self) -> bool {
        self.coefficients.iter().all(CoefficientFunction::is_time_independent)
    }

    /// Number of basis states touched by the support.
    pub fn covered_rows(&self) -> usize {
        self.support
            .iter()
            .map(|s| match s {
                Support::Pair(..) => 2,
                Support::Single(_) => 1,
            })
            .sum()
    }

    /// The term as a 1-sparse Hamiltonian of its own, so it can be written in
    /// the spec-file format.
    pub fn to_hamiltonian(&self) -> Result<TimeDependentHamiltonian> {
        let n_qubits = self.dimension.trailing_zeros();
        let mut entries = Vec::new();
        let mut diagonal = Vec::new();
        for (s, c) in self.support.iter().zip(&self.coefficients) {
            match (*s, self.kind) {
                (Support::Pair(row, col), TermKind::RealOffDiagonal) => entries.push(OffDiagonalEntry {
                    row,
                    col,
                    re: *c,
                    im: CoefficientFunction::ZERO,
                }),
                (Support::Pair(row, col), _) => entries.push(OffDiagonalEntry {
                    row,
                    col,
                    re: CoefficientFunction::ZERO,
                    im: *c,
                }),
                (Support::Single(index), _) => diagonal.push(DiagonalEntry { index, re: *c }),
            }
        }
        TimeDependentHamiltonian::new(n_qubits, 1, entries, diagonal)
    }

    pub fn dense(&self, t: f64) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        for (s, c) in self.support.iter().zip(&self.coefficients) {
            let w = c.value(t);
            match (*s, self.kind) {
                (Support::Pair(a, b), TermKind::RealOffDiagonal) => {
                    m[(a, b)] = Complex64::new(w, 0.0);
                    m[(b, a)] = Complex64::new(w, 0.0);
                }
                (Support::Pair(a, b), TermKind::ImaginaryOffDiagonal) => {
                    m[(a, b)] = Complex64::new(0.0, w);
                    m[(b, a)] = Complex64::new(0.0, -w);
                }
                (Support::Single(a), _) => m[(a, a)] = Complex64::new(w, 0.0),
                _ => unreachable!("validated at construction"),
            }
        }
        m
    }
}

/// Splits `H` into 1-sparse terms according to `plan`.
///
/// Terms come out colour by colour (real part before imaginary part), then
/// the diagonal. A part whose coefficients all vanish identically is omitted,
/// so the list length `M` is measured rather than assumed.
pub fn one_sparse_terms(h: &TimeDependentHamiltonian, plan: &ColoringPlan) -> Vec<OneSparseTerm> {
    let dim = h.dimension();
    let mut terms = Vec::new();
    for color in 0..plan.off_diagonal_colors() {
        let members: Vec<_> = h
            .entries()
            .iter()
            .zip(&plan.edge_colors)
            .filter(|(_, &c)| c == color)
            .map(|(e, _)| e)
            .collect();
        for kind in [TermKind::RealOffDiagonal, TermKind::ImaginaryOffDiagonal] {
            let mut support = Vec::new();
            let mut coefficients = Vec::new();
            for e in &members {
                let coeff = match kind {
                    TermKind::RealOffDiagonal => e.re,
                    _ => e.im,
                };
                if !coeff.is_identically_zero() {
                    support.push(Support::Pair(e.row, e.col));
                    coefficients.push(coeff);
                }
            }
            if !support.is_empty() {
                terms.push(OneSparseTerm {
                    dimension: dim,
                    color,
                    kind,
                    support,
                    coefficients,
                });
            }
        }
    }
    if !h.diagonal().is_empty() {
        terms.push(OneSparseTerm {
            dimension: dim,
            color: plan.diagonal_color,
            kind: TermKind::RealDiagonal,
            support: h.diagonal().iter().map(|e| Support::Single(e.index)).collect(),
            coefficients: h.diagonal().iter().map(|e| e.re).collect(),
        });
    }
    terms
}

/// Colours and splits in one go.
pub fn decompose_hamiltonian(h: &TimeDependentHamiltonian) -> (ColoringPlan, Vec<OneSparseTerm>) {
    let plan = color_edges(h);
    let terms = one_sparse_terms(h, &plan);
    (plan, terms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    /// `max |Σ_j H_j(t) − H(t)|` over all entries.
    pub max_deviation: f64,
    /// Whether each term is 1-sparse (every row touched at most once).
    pub one_sparse: Vec<bool>,
}

impl PartitionReport {
    pub fn is_exact(&self) -> bool {
        self.max_deviation == 0.0 && self.one_sparse.iter().all(|&b| b)
    }
}

/// Compares the densely summed terms against `H(t)`.
pub fn verify_partition(
    h: &TimeDependentHamiltonian,
    terms: &[OneSparseTerm],
    t: f64,
) -> Result<PartitionReport> {
    let target = h.dense_matrix(t)?;
    let dim = h.dimension();
    let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
    let mut flags = Vec::with_capacity(terms.len());
    for term in terms {
        if term.dimension != dim {
            return Err(Error::DimensionMismatch(term.dimension, dim));
        }
        let dense = term.dense(t);
        let one_sparse = dense
            .row_iter()
            .all(|row| row.iter().filter(|z| **z != Complex64::new(0.0, 0.0)).count() <= 1)
            && {
                let mut seen = vec![false; dim];
                term.support.iter().all(|s| match *s {
                    Support::Pair(a, b) => {
                        !std::mem::replace(&mut seen[a], true)
                            && !std::mem::replace(&mut seen[b], true)
                    }
                    Support::Single(a) => !std::mem::replace(&mut seen[a], true),
                })
            };
        flags.push(one_sparse);
        sum += dense;
    }
    let max_deviation = sum
        .iter()
        .zip(target.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()));
    Ok(PartitionReport {
        max_deviation,
        one_sparse: flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path_graph() -> TimeDependentHamiltonian {
        let e = |row, col| OffDiagonalEntry {
            row,
            col,
            re: CoefficientFunction::constant(1.0),
            im: CoefficientFunction::ZERO,
        };
        TimeDependentHamiltonian::new(2, 2, vec![e(0, 1), e(1, 2)], vec![]).unwrap()
    }

    #[test]
    fn single_edge_needs_one_color() {
        let plan = color_edges(&instances::sigma_x());
        assert_eq!(plan.num_colors, 1);
    }

    #[test]
    fn path_needs_two_colors() {
        let h = path_graph();
        let plan = color_edges(&h);
        assert_eq!(plan.num_colors, 2);
        assert_ne!(plan.color_of(&h, 0, 1), plan.color_of(&h, 2, 1));
    }

    #[test]
    fn sigma_x_and_sigma_y_terms() {
        let (_, terms) = decompose_hamiltonian(&instances::sigma_x());
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].kind, TermKind::RealOffDiagonal);
        assert_eq!(terms[0].dense(0.0), instances::sigma_x().dense_matrix(0.0).unwrap());

        let (_, terms) = decompose_hamiltonian(&instances::sigma_y());
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].kind, TermKind::ImaginaryOffDiagonal);
    }

    #[test]
    fn random_coloring_is_proper_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let h = instances::random_hamiltonian(&mut rng, &instances::RandomSpec::new(5, 4));
            let plan = color_edges(&h);
            assert!(plan.off_diagonal_colors() <= 7);
            // exhaustive adjacency scan
            let entries = h.entries();
            for i in 0..entries.len() {
                for j in (i + 1)..entries.len() {
                    let (a, b) = (entries[i], entries[j]);
                    let share = a.row == b.row || a.row == b.col || a.col == b.row || a.col == b.col;
                    if share {
                        assert_ne!(plan.edge_colors[i], plan.edge_colors[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn random_partition_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = instances::RandomSpec::new(4, 3);
        let h = instances::random_hamiltonian(&mut rng, &spec);
        let (_, terms) = decompose_hamiltonian(&h);
        for _ in 0..100 {
            let t = rng.random_range(0.0..3.0);
            let report = verify_partition(&h, &terms, t).unwrap();
            assert!(report.is_exact(), "{report:?}");
        }
    }

    #[test]
    fn diagonal_and_off_diagonal_parts_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = instances::random_hamiltonian(&mut rng, &instances::RandomSpec::new(3, 3));
        let (_, terms) = decompose_hamiltonian(&h);
        let diag = terms.iter().find(|t| t.kind == TermKind::RealDiagonal);
        let Some(diag) = diag else { return };
        // restrict the diagonal to the support of each real off-diagonal term
        for term in terms.iter().filter(|t| t.kind == TermKind::RealOffDiagonal) {
            let off = term.dense(0.4);
            let mut d = diag.dense(0.4);
            for i in 0..h.dimension() {
                let inside = term.support.iter().any(|s| matches!(*s, Support::Pair(a, b) if a == i || b == i));
                if inside {
                    d[(i, i)] = Complex64::new(0.0, 0.0);
                }
            }
            let comm = &off * &d - &d * &off;
            assert!(comm.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn dropped_term_and_perturbation_are_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = instances::random_hamiltonian(&mut rng, &instances::RandomSpec::new(3, 2));
        let (_, mut terms) = decompose_hamiltonian(&h);
        let t = 0.7;
        let dropped = terms.pop().unwrap();
        let report = verify_partition(&h, &terms, t).unwrap();
        assert_eq!(report.max_deviation, dropped.max_entry(t));

        terms.push(dropped);
        terms[0].coefficients[0].constant += 1e-9;
        let report = verify_partition(&h, &terms, t).unwrap();
        assert!(report.max_deviation >= 1e-9 * (1.0 - 1e-6));
        assert!(!report.is_exact());
    }

    #[test]
    fn constructor_rejects_overlap() {
        let err = OneSparseTerm::new(
            4,
            0,
            TermKind::RealOffDiagonal,
            vec![Support::Pair(0, 1), Support::Pair(1, 2)],
            vec![CoefficientFunction::constant(1.0); 2],
        );
        assert!(err.is_err());
    }

    #[test]
    fn terms_round_trip_through_spec_fragments() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = instances::random_hamiltonian(&mut rng, &instances::RandomSpec::new(3, 3));
        let (_, terms) = decompose_hamiltonian(&h);
        for term in &terms {
            let fragment = term.to_hamiltonian().unwrap().to_json();
            let back = TimeDependentHamiltonian::from_json(&fragment).unwrap();
            for t in [0.0, 0.4, 1.3] {
                assert_eq!(back.dense_matrix(t).unwrap(), term.dense(t));
            }
        }
    }
}
