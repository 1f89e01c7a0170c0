//! Commuting self-inverse decomposition of real or imaginary 1-sparse
//! Hamiltonians.
//!
//! A 1-sparse term frozen at `t₀` is a direct sum of 1×1 and 2×2 blocks whose
//! weights lie in `[-g, g]`, `g = ‖G(t₀)‖_max`. Rounding every weight to the
//! grid `(h/ℓ)·g`, `h ∈ {-ℓ..ℓ}`, costs at most `g/(2ℓ)` in max-norm and writes
//! the rounded term as `(g/ℓ)·Σ_{j=1..ℓ} G_j` with `G_j` carrying `sign(h)` on
//! every block with `|h| ≥ j`. A `G_j` that leaves some rows empty has a zero
//! eigenvalue; it is replaced by `½(G_j + D) + ½(G_j − D)` with `D` the
//! identity on the empty rows, after which every summand is a signed
//! permutation squaring to the identity.
//!
//! The diagonal kind uses the same counting rule on 1×1 blocks (`D±`
//! entries). Blocks of one family are all σx-type, all σy-type or all
//! diagonal on disjoint supports, so the family commutes exactly.
//!
//! Families are stored run-length encoded: `G_j` for consecutive `j` with the
//! same active set are one [`WeightedTerm`] with a multiplicity.

use std::collections::BTreeSet;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::one_sparse::{OneSparseTerm, Support, TermKind};

/// One of the four unit phases `{+1, +i, −1, −i}`, stored as a power of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    fn power(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    fn from_power(k: u8) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn from_sign(sign: i8) -> Self {
        if sign >= 0 {
            Phase::PlusOne
        } else {
            Phase::MinusOne
        }
    }

    pub fn negate(self) -> Self {
        Self::from_power(self.power() + 2)
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_power(self.power() + rhs.power())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockType {
    /// `±σx` on a pair.
    X,
    /// `±σy`-type pair: `U[low, high] = ±i`, `U[high, low] = ∓i`.
    Y,
    /// `+1` on a single site.
    DPlus,
    /// `−1` on a single site.
    DMinus,
}

/// An orbit of the involution underlying a [`SelfInverseTerm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orbit {
    Pair {
        low: usize,
        high: usize,
        block: BlockType,
        sign: i8,
    },
    Fixed {
        index: usize,
        block: BlockType,
    },
}

/// A Hermitian signed-permutation matrix with `U² = I`.
///
/// Stored column-wise: `U|a⟩ = phase_a |row_a⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelfInverseTerm {
    action: Vec<(u32, Phase)>,
}

impl SelfInverseTerm {
    /// Builds a term from orbits that must cover every basis index exactly
    /// once.
    pub fn from_orbits(dimension: usize, orbits: &[Orbit]) -> Result<Self> {
        let unset = (u32::MAX, Phase::PlusOne);
        let mut action = vec![unset; dimension];
        let mut set = |col: usize, row: usize, phase: Phase| -> Result<()> {
            if col >= dimension || row >= dimension {
                return Err(Error::IndexOutOfRange {
                    index: col.max(row),
                    dimension,
                });
            }
            if action[col] != unset {
                return Err(Error::InvalidArgument(format!(
                    "basis index {col} appears in two orbits"
                )));
            }
            action[col] = (row as u32, phase);
            Ok(())
        };
        for orbit in orbits {
            match *orbit {
                Orbit::Pair {
                    low,
                    high,
                    block,
                    sign,
                } => {
                    if low >= high {
                        return Err(Error::InvalidArgument(format!(
                            "pair orbit ({low}, {high}) must be ordered"
                        )));
                    }
                    let s = Phase::from_sign(sign);
                    match block {
                        BlockType::X => {
                            set(low, high, s)?;
                            set(high, low, s)?;
                        }
                        BlockType::Y => {
                            // U[low, high] = s·i sits in column `high`
                            set(high, low, s * Phase::PlusI)?;
                            set(low, high, s * Phase::MinusI)?;
                        }
                        _ => {
                            return Err(Error::InvalidArgument(
                                "pair orbits must be X or Y blocks".into(),
                            ))
                        }
                    }
                }
                Orbit::Fixed { index, block } => {
                    let phase = match block {
                        BlockType::DPlus => Phase::PlusOne,
                        BlockType::DMinus => Phase::MinusOne,
                        _ => {
                            return Err(Error::InvalidArgument(
                                "fixed orbits must be D+ or D- blocks".into(),
                            ))
                        }
                    };
                    set(index, index, phase)?;
                }
            }
        }
        if let Some(missing) = action.iter().position(|&a| a == unset) {
            return Err(Error::InvalidArgument(format!(
                "basis index {missing} is not covered; the term would not be unitary"
            )));
        }
        Ok(Self { action })
    }

    pub fn dimension(&self) -> usize {
        self.action.len()
    }

    /// Exact action on a basis state: `U|index⟩ = phase·|row⟩`.
    pub fn apply(&self, index: usize) -> Result<(usize, Phase)> {
        self.action
            .get(index)
            .map(|&(row, phase)| (row as usize, phase))
            .ok_or(Error::IndexOutOfRange {
                index,
                dimension: self.action.len(),
            })
    }

    /// Orbits in ascending order of their smallest index.
    pub fn orbits(&self) -> Vec<Orbit> {
        let mut out = Vec::new();
        for (col, &(row, phase)) in self.action.iter().enumerate() {
            let row = row as usize;
            if row == col {
                let block = if phase == Phase::PlusOne {
                    BlockType::DPlus
                } else {
                    BlockType::DMinus
                };
                out.push(Orbit::Fixed { index: col, block });
            } else if col < row {
                // column `low` holds U[high, low]
                let (block, sign) = match phase {
                    Phase::PlusOne => (BlockType::X, 1),
                    Phase::MinusOne => (BlockType::X, -1),
                    Phase::MinusI => (BlockType::Y, 1),
                    Phase::PlusI => (BlockType::Y, -1),
                };
                out.push(Orbit::Pair {
                    low: col,
                    high: row,
                    block,
                    sign,
                });
            }
        }
        out
    }

    /// Monomial product `self · other`, column-wise.
    fn compose(&self, other: &Self) -> Vec<(u32, Phase)> {
        other
            .action
            .iter()
            .map(|&(r, p)| {
                let (r2, p2) = self.action[r as usize];
                (r2, p2 * p)
            })
            .collect()
    }

    /// `max |(U² − I)_{ab}|`, computed with exact phase arithmetic.
    pub fn involution_deviation(&self) -> f64 {
        let sq = self.compose(self);
        sq.iter()
            .enumerate()
            .map(|(col, &(row, phase))| {
                if row as usize != col {
                    1.0
                } else {
                    (phase.to_complex() - Complex64::new(1.0, 0.0)).norm()
                }
            })
            .fold(0.0, f64::max)
    }

    /// `max |[U, V]_{ab}|`, exactly zero when the terms commute.
    pub fn commutator_max_entry(&self, other: &Self) -> f64 {
        if self.dimension() != other.dimension() {
            return f64::INFINITY;
        }
        let uv = self.compose(other);
        let vu = other.compose(self);
        uv.iter()
            .zip(&vu)
            .map(|(&(r1, p1), &(r2, p2))| {
                if r1 == r2 {
                    (p1.to_complex() - p2.to_complex()).norm()
                } else if p1 == p2 && r1 == r2 {
                    0.0
                } else {
                    1.0
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        for (col, &(row, phase)) in self.action.iter().enumerate() {
            m[(row as usize, col)] = phase.to_complex();
        }
        m
    }

    /// `out = U·input`.
    pub fn apply_to(&self, input: &[Complex64], out: &mut [Complex64]) {
        for (col, &(row, phase)) in self.action.iter().enumerate() {
            out[row as usize] = phase.to_complex() * input[col];
        }
    }

    /// `state ← exp(−iθU)·state = cos θ·state − i sin θ·U·state`.
    pub fn rotate(&self, state: &mut [Complex64], theta: f64) {
        let (s, c) = theta.sin_cos();
        let minus_i_sin = Complex64::new(0.0, -s);
        for (col, &(row, phase)) in self.action.iter().enumerate() {
            let row = row as usize;
            if row == col {
                state[col] *= Complex64::new(c, 0.0) + minus_i_sin * phase.to_complex();
            } else if col < row {
                let (a, b) = (state[col], state[row]);
                // U|col⟩ = p_col|row⟩, U|row⟩ = p_row|col⟩
                let p_col = phase.to_complex();
                let p_row = self.action[row].1.to_complex();
                state[row] = c * b + minus_i_sin * p_col * a;
                state[col] = c * a + minus_i_sin * p_row * b;
            }
        }
    }
}

/// A distinct self-inverse term together with how many times it occurs in
/// the equally weighted sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: SelfInverseTerm,
    pub multiplicity: u64,
}

/// `G(t₀) ≈ weight · Σ_l U_l`, all `U_l` commuting and self-inverse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfInverseFamily {
    /// Common weight `γ_eff` of every summand.
    pub weight: f64,
    /// Rounding denominator `ℓ`.
    pub ell: u64,
    /// `‖G(t₀)‖_max`.
    pub g: f64,
    pub parent_kind: TermKind,
    pub dimension: usize,
    pub terms: Vec<WeightedTerm>,
}

impl SelfInverseFamily {
    /// Number of summands counted with multiplicity.
    pub fn len(&self) -> u64 {
        self.terms.iter().map(|t| t.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `weight · Σ_l U_l` as a dense matrix.
    pub fn dense_sum(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        for wt in &self.terms {
            m += wt.term.dense() * Complex64::new(self.weight * wt.multiplicity as f64, 0.0);
        }
        m
    }

    /// `state ← Π_l exp(−i·weight·U_l·dt)·state`; exact because the summands
    /// commute.
    pub fn evolve(&self, state: &mut [Complex64], dt: f64) {
        for wt in &self.terms {
            wt.term
                .rotate(state, self.weight * wt.multiplicity as f64 * dt);
        }
    }
}

/// One group of consecutive `G_j` sharing an active set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    /// How many consecutive `j` share this matrix.
    pub multiplicity: u64,
    /// Active blocks and their `±1` sign.
    pub entries: Vec<(Support, i8)>,
}

impl Level {
    fn covered_rows(&self) -> usize {
        self.entries
            .iter()
            .map(|(s, _)| match s {
                Support::Pair(..) => 2,
                Support::Single(_) => 1,
            })
            .sum()
    }

    /// Dense `G_j` with entries in `{0, ±1}` (or `{0, ±i}` for the imaginary
    /// kind).
    pub fn dense(&self, kind: TermKind, dimension: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(dimension, dimension);
        for &(s, sign) in &self.entries {
            let v = f64::from(sign);
            match (s, kind) {
                (Support::Pair(a, b), TermKind::RealOffDiagonal) => {
                    m[(a, b)] = Complex64::new(v, 0.0);
                    m[(b, a)] = Complex64::new(v, 0.0);
                }
                (Support::Pair(a, b), TermKind::ImaginaryOffDiagonal) => {
                    m[(a, b)] = Complex64::new(0.0, v);
                    m[(b, a)] = Complex64::new(0.0, -v);
                }
                (Support::Single(a), _) => m[(a, a)] = Complex64::new(v, 0.0),
                _ => unreachable!("support matches kind"),
            }
        }
        m
    }

    fn orbits(&self, kind: TermKind) -> Vec<Orbit> {
        self.entries
            .iter()
            .map(|&(s, sign)| match s {
                Support::Pair(low, high) => Orbit::Pair {
                    low,
                    high,
                    block: if kind == TermKind::ImaginaryOffDiagonal {
                        BlockType::Y
                    } else {
                        BlockType::X
                    },
                    sign,
                },
                Support::Single(index) => Orbit::Fixed {
                    index,
                    block: if sign > 0 {
                        BlockType::DPlus
                    } else {
                        BlockType::DMinus
                    },
                },
            })
            .collect()
    }

    fn uncovered(&self, dimension: usize) -> Vec<usize> {
        let mut covered = vec![false; dimension];
        for (s, _) in &self.entries {
            match *s {
                Support::Pair(a, b) => {
                    covered[a] = true;
                    covered[b] = true;
                }
                Support::Single(a) => covered[a] = true,
            }
        }
        (0..dimension).filter(|&i| !covered[i]).collect()
    }
}

/// The rounding stage: `G ≈ (g/ℓ)·Σ_j G_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundedLevels {
    pub ell: u64,
    pub g: f64,
    pub kind: TermKind,
    pub dimension: usize,
    /// Rounded numerators `h`, aligned with the parent's support.
    pub numerators: Vec<i64>,
    /// `G_1, G_2, …` grouped into runs, in increasing `j`.
    pub levels: Vec<Level>,
}

/// Rounds to the nearest integer with exact halves going toward zero.
fn round_half_toward_zero(x: f64) -> f64 {
    let f = x.floor();
    let frac = x - f;
    if frac > 0.5 || (frac == 0.5 && x <= 0.0) {
        f + 1.0
    } else {
        f
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "precision gamma must be positive and finite, got {gamma}"
        )))
    }
}

/// `ℓ = ⌈g/(2γ)⌉`, nudged up if floating point leaves `g/(2ℓ)` above `γ`.
fn rounding_denominator(g: f64, gamma: f64) -> Result<u64> {
    let raw = (g / (2.0 * gamma)).ceil();
    if !(raw < 1e18) {
        return Err(Error::InvalidArgument(format!(
            "gamma = {gamma:e} is too small for max entry {g:e}"
        )));
    }
    let mut ell = (raw as u64).max(1);
    while g / (2.0 * ell as f64) > gamma {
        ell += 1;
    }
    Ok(ell)
}

/// Rounded numerators `h` and `ℓ` for `G(t₀)`; `None` when `G(t₀) = 0`.
fn numerators(g_values: &[f64], gamma: f64) -> Result<Option<(f64, u64, Vec<i64>)>> {
    check_gamma(gamma)?;
    let g = g_values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    if g == 0.0 {
        return Ok(None);
    }
    let ell = rounding_denominator(g, gamma)?;
    let l = ell as f64;
    let h = g_values
        .iter()
        .map(|&v| (round_half_toward_zero(l * v / g) as i64).clamp(-(ell as i64), ell as i64))
        .collect();
    Ok(Some((g, ell, h)))
}

/// The counting-rule stage on its own.
pub fn round_to_levels(term: &OneSparseTerm, t0: f64, gamma: f64) -> Result<RoundedLevels> {
    let values = term.values(t0);
    let Some((g, ell, h)) = numerators(&values, gamma)? else {
        return Ok(RoundedLevels {
            ell: 0,
            g: 0.0,
            kind: term.kind,
            dimension: term.dimension,
            numerators: vec![0; values.len()],
            levels: Vec::new(),
        });
    };
    let thresholds: BTreeSet<u64> = h.iter().map(|v| v.unsigned_abs()).filter(|&v| v > 0).collect();
    let mut levels = Vec::with_capacity(thresholds.len());
    let mut previous = 0u64;
    for &threshold in &thresholds {
        let entries = term
            .support
            .iter()
            .zip(&h)
            .filter(|(_, hv)| hv.unsigned_abs() >= threshold)
            .map(|(s, hv)| (*s, hv.signum() as i8))
            .collect();
        levels.push(Level {
            multiplicity: threshold - previous,
            entries,
        });
        previous = threshold;
    }
    Ok(RoundedLevels {
        ell,
        g,
        kind: term.kind,
        dimension: term.dimension,
        numerators: h,
        levels,
    })
}

/// The zero-eigenvalue stage: turns rounded levels into an equally weighted
/// family of self-inverse terms.
///
/// When any level leaves rows empty, every level is re-expressed at half
/// weight: split levels become their `+D`/`−D` completions, full levels are
/// counted twice.
pub fn eliminate_zero_eigenvalues(rounded: &RoundedLevels) -> Result<SelfInverseFamily> {
    let dim = rounded.dimension;
    let mut family = SelfInverseFamily {
        weight: 0.0,
        ell: rounded.ell,
        g: rounded.g,
        parent_kind: rounded.kind,
        dimension: dim,
        terms: Vec::new(),
    };
    if rounded.levels.is_empty() {
        return Ok(family);
    }
    let split = rounded.levels.iter().any(|l| l.covered_rows() < dim);
    let base_weight = rounded.g / rounded.ell as f64;
    if !split {
        family.weight = base_weight;
        for level in &rounded.levels {
            family.terms.push(WeightedTerm {
                term: SelfInverseTerm::from_orbits(dim, &level.orbits(rounded.kind))?,
                multiplicity: level.multiplicity,
            });
        }
        return Ok(family);
    }
    family.weight = base_weight / 2.0;
    for level in &rounded.levels {
        let uncovered = level.uncovered(dim);
        let orbits = level.orbits(rounded.kind);
        if uncovered.is_empty() {
            family.terms.push(WeightedTerm {
                term: SelfInverseTerm::from_orbits(dim, &orbits)?,
                multiplicity: 2 * level.multiplicity,
            });
            continue;
        }
        for block in [BlockType::DPlus, BlockType::DMinus] {
            let mut completed = orbits.clone();
            completed.extend(uncovered.iter().map(|&index| Orbit::Fixed { index, block }));
            family.terms.push(WeightedTerm {
                term: SelfInverseTerm::from_orbits(dim, &completed)?,
                multiplicity: level.multiplicity,
            });
        }
    }
    Ok(family)
}

/// Approximates the frozen term `G(t₀)` within max-norm `g/(2ℓ) ≤ γ` by an
/// equally weighted sum of commuting self-inverse terms, `ℓ = ⌈g/(2γ)⌉`.
/// A term that vanishes at `t₀` yields an empty family of weight zero.
pub fn decompose(term: &OneSparseTerm, t0: f64, gamma: f64) -> Result<SelfInverseFamily> {
    eliminate_zero_eigenvalues(&round_to_levels(term, t0, gamma)?)
}

/// Size and weight of the family [`decompose`] would build, without building
/// it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyShape {
    pub ell: u64,
    pub g: f64,
    pub weight: f64,
    pub size: u64,
}

pub fn family_shape(term: &OneSparseTerm, t0: f64, gamma: f64) -> Result<FamilyShape> {
    let values = term.values(t0);
    let Some((g, ell, h)) = numerators(&values, gamma)? else {
        return Ok(FamilyShape {
            ell: 0,
            g: 0.0,
            weight: 0.0,
            size: 0,
        });
    };
    // the top level (j = ℓ) has the smallest active set
    let split = term.covered_rows() < term.dimension || h.iter().any(|v| v.unsigned_abs() < ell);
    let base = g / ell as f64;
    Ok(if split {
        FamilyShape {
            ell,
            g,
            weight: base / 2.0,
            size: 2 * ell,
        }
    } else {
        FamilyShape {
            ell,
            g,
            weight: base,
            size: ell,
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    /// `‖G(t₀) − γ_eff ΣU_l‖_max`.
    pub max_norm_error: f64,
    /// `g/(2ℓ)`.
    pub rounding_bound: f64,
    pub max_commutator: f64,
    pub max_involution_deviation: f64,
    pub size: u64,
    pub ell: u64,
}

pub fn verify_family(term: &OneSparseTerm, t0: f64, family: &SelfInverseFamily) -> FamilyReport {
    let target = term.dense(t0);
    let approx = family.dense_sum();
    let max_norm_error = target
        .iter()
        .zip(approx.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()));
    let mut max_commutator: f64 = 0.0;
    let mut max_involution: f64 = 0.0;
    for (i, a) in family.terms.iter().enumerate() {
        max_involution = max_involution.max(a.term.involution_deviation());
        for b in &family.terms[i + 1..] {
            max_commutator = max_commutator.max(a.term.commutator_max_entry(&b.term));
        }
    }
    FamilyReport {
        max_norm_error,
        rounding_bound: if family.ell == 0 {
            0.0
        } else {
            family.g / (2.0 * family.ell as f64)
        },
        max_commutator,
        max_involution_deviation: max_involution,
        size: family.len(),
        ell: family.ell,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::CoefficientFunction;
    use crate::instances;
    use crate::linalg::{expm_hermitian, max_abs_diff};
    use crate::one_sparse::decompose_hamiltonian;
    use crate::state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_matrix(rows: &[[f64; 4]; 4]) -> DMatrix<Complex64> {
        DMatrix::from_fn(4, 4, |i, j| c(rows[i][j], 0.0))
    }

    #[test]
    fn two_block_example_reproduces_printed_levels() {
        let (_, terms) = decompose_hamiltonian(&instances::two_block_example());
        let rounded = round_to_levels(&terms[0], 0.0, 0.25).unwrap();
        assert_eq!(rounded.ell, 2);
        assert_eq!(rounded.levels.len(), 2);
        assert!(rounded.levels.iter().all(|l| l.multiplicity == 1));
        let g1 = real_matrix(&[
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]);
        let g2 = real_matrix(&[
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(rounded.levels[0].dense(rounded.kind, 4), g1);
        assert_eq!(rounded.levels[1].dense(rounded.kind, 4), g2);

        let family = eliminate_zero_eigenvalues(&rounded).unwrap();
        assert_eq!(family.weight, 0.25);
        assert_eq!(family.len(), 4);
        let plus = real_matrix(&[
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        let minus = real_matrix(&[
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ]);
        let dense: Vec<_> = family.terms.iter().map(|t| (t.term.dense(), t.multiplicity)).collect();
        assert_eq!(dense, vec![(g1, 2), (plus, 1), (minus, 1)]);

        let report = verify_family(&terms[0], 0.0, &family);
        assert_eq!(report.max_norm_error, 0.0);
        assert_eq!(report.max_commutator, 0.0);
    }

    #[test]
    fn sigma_x_with_unit_gamma() {
        let (_, terms) = decompose_hamiltonian(&instances::sigma_x());
        let family = decompose(&terms[0], 0.0, 1.0).unwrap();
        assert_eq!(family.ell, 1);
        assert_eq!(family.len(), 1);
        assert_eq!(family.terms[0].term.dense(), instances::sigma_x().dense_matrix(0.0).unwrap());
        assert_eq!(verify_family(&terms[0], 0.0, &family).max_norm_error, 0.0);
    }

    #[test]
    fn sigma_y_family_commutes() {
        let mut term = decompose_hamiltonian(&instances::sigma_y()).1.remove(0);
        // embed in two qubits so D± padding is needed
        term.dimension = 4;
        term.coefficients[0] = CoefficientFunction::constant(-0.7);
        let family = decompose(&term, 0.0, 0.05).unwrap();
        let report = verify_family(&term, 0.0, &family);
        assert_eq!(report.max_commutator, 0.0);
        assert_eq!(report.max_involution_deviation, 0.0);
        assert!(report.max_norm_error <= 0.05);
        assert!(family.terms.iter().all(|t| t.term.orbits().iter().any(|o| matches!(
            o,
            Orbit::Pair { block: BlockType::Y, .. }
        ))));
        // dense commutator oracle
        for a in &family.terms {
            for b in &family.terms {
                let (x, y) = (a.term.dense(), b.term.dense());
                assert_eq!(&x * &y - &y * &x, DMatrix::zeros(4, 4));
            }
        }
    }

    #[test]
    fn mixed_blocks_do_not_commute() {
        let x = SelfInverseTerm::from_orbits(
            2,
            &[Orbit::Pair {
                low: 0,
                high: 1,
                block: BlockType::X,
                sign: 1,
            }],
        )
        .unwrap();
        let y = SelfInverseTerm::from_orbits(
            2,
            &[Orbit::Pair {
                low: 0,
                high: 1,
                block: BlockType::Y,
                sign: 1,
            }],
        )
        .unwrap();
        assert_eq!(x.commutator_max_entry(&y), 2.0);
        let dense = x.dense() * y.dense() - y.dense() * x.dense();
        assert!(dense.iter().any(|z| z.norm() > 1.0));
    }

    #[test]
    fn apply_term_on_basis_states() {
        let d_minus = SelfInverseTerm::from_orbits(
            4,
            &[
                Orbit::Pair { low: 0, high: 1, block: BlockType::X, sign: 1 },
                Orbit::Fixed { index: 2, block: BlockType::DPlus },
                Orbit::Fixed { index: 3, block: BlockType::DMinus },
            ],
        )
        .unwrap();
        assert_eq!(d_minus.apply(3).unwrap(), (3, Phase::MinusOne));
        assert_eq!(d_minus.apply(0).unwrap(), (1, Phase::PlusOne));
        assert!(d_minus.apply(4).is_err());

        let y = SelfInverseTerm::from_orbits(
            2,
            &[Orbit::Pair { low: 0, high: 1, block: BlockType::Y, sign: 1 }],
        )
        .unwrap();
        let (i1, p1) = y.apply(0).unwrap();
        let (i2, p2) = y.apply(i1).unwrap();
        assert_eq!((i2, p1 * p2), (0, Phase::PlusOne));
    }

    #[test]
    fn orbits_round_trip() {
        let orbits = vec![
            Orbit::Pair { low: 0, high: 3, block: BlockType::Y, sign: -1 },
            Orbit::Pair { low: 1, high: 2, block: BlockType::X, sign: -1 },
        ];
        let u = SelfInverseTerm::from_orbits(4, &orbits).unwrap();
        assert_eq!(u.orbits(), orbits);
        assert!(SelfInverseTerm::from_orbits(4, &orbits[..1]).is_err());
    }

    #[test]
    fn ties_round_toward_zero() {
        assert_eq!(round_half_toward_zero(2.5), 2.0);
        assert_eq!(round_half_toward_zero(-2.5), -2.0);
        assert_eq!(round_half_toward_zero(2.6), 3.0);
        assert_eq!(round_half_toward_zero(-2.4), -2.0);
    }

    #[test]
    fn zero_term_and_bad_gamma() {
        let term = OneSparseTerm::new(
            2,
            0,
            TermKind::RealOffDiagonal,
            vec![Support::Pair(0, 1)],
            vec![CoefficientFunction::ramp(0.0, 1.0)],
        )
        .unwrap();
        let family = decompose(&term, 0.0, 0.1).unwrap();
        assert!(family.is_empty());
        assert_eq!(family.weight, 0.0);
        assert!(matches!(decompose(&term, 1.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(decompose(&term, 1.0, -1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn random_real_five_qubit_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let term = instances::random_one_sparse_term(&mut rng, 5, TermKind::RealOffDiagonal);
        let t0 = 0.3;
        let family = decompose(&term, t0, 0.1).unwrap();
        // dense reconstruction oracle, independent of verify_family
        let mut recon = DMatrix::zeros(32, 32);
        for wt in &family.terms {
            recon += wt.term.dense() * c(family.weight * wt.multiplicity as f64, 0.0);
        }
        let err = max_abs_diff(&recon, &term.dense(t0));
        assert!(err <= 0.1);
        assert!(err <= term.max_entry(t0) / (2.0 * family.ell as f64) + 1e-15);
    }

    #[test]
    fn shape_matches_built_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in [TermKind::RealOffDiagonal, TermKind::ImaginaryOffDiagonal, TermKind::RealDiagonal] {
            for _ in 0..30 {
                let term = instances::random_one_sparse_term(&mut rng, 3, kind);
                let t0 = rng.random_range(0.0..2.0);
                let gamma = rng.random_range(0.01..0.5);
                let family = decompose(&term, t0, gamma).unwrap();
                let shape = family_shape(&term, t0, gamma).unwrap();
                assert_eq!(shape.size, family.len());
                assert_eq!(shape.weight, family.weight);
                assert_eq!(shape.ell, family.ell);
            }
        }
    }

    #[test]
    fn commuting_factorisation_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [TermKind::RealOffDiagonal, TermKind::ImaginaryOffDiagonal, TermKind::RealDiagonal] {
            let term = instances::random_one_sparse_term(&mut rng, 3, kind);
            let family = decompose(&term, 0.5, 0.1).unwrap();
            let dt = rng.random_range(0.1..1.0);
            let psi = state::random_state(&mut rng, 8);
            let mut evolved = psi.clone();
            family.evolve(&mut evolved, dt);
            let exact = crate::linalg::apply(&expm_hermitian(&family.dense_sum(), dt), &psi);
            assert!(state::distance(&evolved, &exact) < 1e-12);
        }
    }

    #[test]
    fn rotate_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let term = instances::random_one_sparse_term(&mut rng, 3, TermKind::ImaginaryOffDiagonal);
        let family = decompose(&term, 0.0, 0.3).unwrap();
        let u = &family.terms[0].term;
        let psi = state::random_state(&mut rng, 8);
        let theta = 0.37;
        let mut rotated = psi.clone();
        u.rotate(&mut rotated, theta);
        let mut u_psi = vec![c(0.0, 0.0); 8];
        u.apply_to(&psi, &mut u_psi);
        let expected: Vec<_> = psi
            .iter()
            .zip(&u_psi)
            .map(|(a, b)| a * theta.cos() - c(0.0, theta.sin()) * b)
            .collect();
        assert!(state::distance(&rotated, &expected) < 1e-15);
    }
}
