//! Sparse time-dependent Hermitian matrices, their column oracle and a dense
//! adapter for desk-scale verification.
//!
//! Only the strictly upper triangle (`row < col`) and the diagonal are stored;
//! the lower triangle is the conjugate of the upper one, so Hermiticity holds
//! structurally at every time. The sparsity pattern is fixed: a coefficient
//! that is identically zero is dropped at construction, any other entry is a
//! structural nonzero even at instants where its value happens to vanish.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest register the dense adapter will materialise unless told otherwise.
pub const DEFAULT_DENSE_CAP: u32 = 10;

/// Grid size used by [`TimeDependentHamiltonian::norms`] callers that have no
/// better idea.
pub const DEFAULT_NORM_SAMPLES: usize = 257;

/// `c + lin·t + sin_amp·sin(sin_freq·t + sin_phase)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientFunction {
    #[serde(rename = "c")]
    pub constant: f64,
    #[serde(rename = "lin")]
    pub linear: f64,
    #[serde(rename = "sin_amp")]
    pub sine_amplitude: f64,
    #[serde(rename = "sin_freq")]
    pub sine_frequency: f64,
    #[serde(rename = "sin_phase")]
    pub sine_phase: f64,
}

impl CoefficientFunction {
    pub const ZERO: Self = Self {
        constant: 0.0,
        linear: 0.0,
        sine_amplitude: 0.0,
        sine_frequency: 0.0,
        sine_phase: 0.0,
    };

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Self::ZERO
        }
    }

    pub fn ramp(c: f64, lin: f64) -> Self {
        Self {
            constant: c,
            linear: lin,
            ..Self::ZERO
        }
    }

    pub fn sinusoid(c: f64, amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            constant: c,
            linear: 0.0,
            sine_amplitude: amplitude,
            sine_frequency: frequency,
            sine_phase: phase,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.constant
            + self.linear * t
            + self.sine_amplitude * (self.sine_frequency * t + self.sine_phase).sin()
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        self.linear
            + self.sine_amplitude
                * self.sine_frequency
                * (self.sine_frequency * t + self.sine_phase).cos()
    }

    pub fn is_time_independent(&self) -> bool {
        self.linear == 0.0 && (self.sine_amplitude == 0.0 || self.sine_frequency == 0.0)
    }

    /// True when the function vanishes for every `t`.
    pub fn is_identically_zero(&self) -> bool {
        self.linear == 0.0
            && self.constant + self.sine_amplitude * self.sine_phase.sin() == 0.0
            && (self.sine_amplitude == 0.0 || self.sine_frequency == 0.0)
    }

    fn is_finite(&self) -> bool {
        [
            self.constant,
            self.linear,
            self.sine_amplitude,
            self.sine_frequency,
            self.sine_phase,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// An upper-triangle element `H[row, col] = re(t) + i·im(t)` with `row < col`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffDiagonalEntry {
    pub row: usize,
    pub col: usize,
    #[serde(default)]
    pub re: CoefficientFunction,
    #[serde(default)]
    pub im: CoefficientFunction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalEntry {
    pub index: usize,
    #[serde(default)]
    pub re: CoefficientFunction,
}

/// Diagonal record as it appears on disk. `im` is accepted only so that a
/// complex diagonal can be rejected with a Hermiticity message instead of an
/// unknown-field error.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagonalRecord {
    index: usize,
    #[serde(default)]
    re: CoefficientFunction,
    #[serde(default)]
    im: Option<CoefficientFunction>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    n_qubits: u32,
    d: usize,
    #[serde(default)]
    entries: Vec<OffDiagonalEntry>,
    #[serde(default)]
    diag: Vec<DiagonalRecord>,
}

#[derive(Serialize)]
struct SpecDocumentOut<'a> {
    n_qubits: u32,
    d: usize,
    entries: &'a [OffDiagonalEntry],
    diag: &'a [DiagonalEntry],
}

/// Where a column's structural nonzero lives in storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Element {
    Diagonal(usize),
    /// Stored entry, queried at `(row, col)` as given.
    Upper(usize),
    /// Stored entry, queried at the transposed position; value is conjugated.
    Lower(usize),
}

/// Sparse Hermitian matrix-valued function of time on `n_qubits` qubits.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    n_qubits: u32,
    d: usize,
    entries: Vec<OffDiagonalEntry>,
    diagonal: Vec<DiagonalEntry>,
    /// Per column: `(row, element)` in ascending row order.
    columns: Vec<Vec<(usize, Element)>>,
}

impl TimeDependentHamiltonian {
    /// Validates and builds a Hamiltonian. Identically-zero entries are
    /// discarded before the row-count check.
    pub fn new(
        n_qubits: u32,
        d: usize,
        entries: Vec<OffDiagonalEntry>,
        diagonal: Vec<DiagonalEntry>,
    ) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 30 {
            return Err(Error::Validation(format!(
                "n_qubits must lie in 1..=30, got {n_qubits}"
            )));
        }
        if d == 0 {
            return Err(Error::Validation("sparseness d must be positive".into()));
        }
        let dim = 1usize << n_qubits;

        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(entries.len());
        for e in entries {
            if e.row == e.col {
                return Err(Error::Validation(format!(
                    "entry ({}, {}) lies on the diagonal; list it under \"diag\"",
                    e.row, e.col
                )));
            }
            if e.row > e.col {
                return Err(Error::Validation(format!(
                    "entry ({}, {}) must have row < col; the conjugate element is implied",
                    e.row, e.col
                )));
            }
            if e.col >= dim {
                return Err(Error::Validation(format!(
                    "entry ({}, {}) is outside the {dim}-dimensional space",
                    e.row, e.col
                )));
            }
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::Validation(format!(
                    "entry ({}, {}) has a non-finite coefficient",
                    e.row, e.col
                )));
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::Validation(format!(
                    "entry ({}, {}) is listed twice",
                    e.row, e.col
                )));
            }
            if e.re.is_identically_zero() && e.im.is_identically_zero() {
                continue;
            }
            kept.push(e);
        }
        kept.sort_by_key(|e| (e.row, e.col));

        let mut seen_diag = BTreeSet::new();
        let mut kept_diag = Vec::with_capacity(diagonal.len());
        for e in diagonal {
            if e.index >= dim {
                return Err(Error::Validation(format!(
                    "diagonal index {} is outside the {dim}-dimensional space",
                    e.index
                )));
            }
            if !e.re.is_finite() {
                return Err(Error::Validation(format!(
                    "diagonal entry {} has a non-finite coefficient",
                    e.index
                )));
            }
            if !seen_diag.insert(e.index) {
                return Err(Error::Validation(format!(
                    "diagonal index {} is listed twice",
                    e.index
                )));
            }
            if e.re.is_identically_zero() {
                continue;
            }
            kept_diag.push(e);
        }
        kept_diag.sort_by_key(|e| e.index);

        let mut columns: Vec<Vec<(usize, Element)>> = vec![Vec::new(); dim];
        for (k, e) in kept.iter().enumerate() {
            // column `col` holds H[row, col]; column `row` holds H[col, row]
            columns[e.col].push((e.row, Element::Upper(k)));
            columns[e.row].push((e.col, Element::Lower(k)));
        }
        for (k, e) in kept_diag.iter().enumerate() {
            columns[e.index].push((e.index, Element::Diagonal(k)));
        }
        for (j, col) in columns.iter_mut().enumerate() {
            col.sort_by_key(|&(row, _)| row);
            if col.len() > d {
                return Err(Error::Validation(format!(
                    "row {j} has {} nonzero entries, exceeding sparseness d = {d}",
                    col.len()
                )));
            }
        }

        Ok(Self {
            n_qubits,
            d,
            entries: kept,
            diagonal: kept_diag,
            columns,
        })
    }

    /// Parses the JSON spec-file format.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut diagonal = Vec::with_capacity(doc.diag.len());
        for rec in doc.diag {
            if let Some(im) = rec.im {
                if !im.is_identically_zero() {
                    return Err(Error::Validation(format!(
                        "diagonal entry {} has an imaginary part; Hermiticity requires a real diagonal",
                        rec.index
                    )));
                }
            }
            diagonal.push(DiagonalEntry {
                index: rec.index,
                re: rec.re,
            });
        }
        Self::new(doc.n_qubits, doc.d, doc.entries, diagonal)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpecDocumentOut {
            n_qubits: self.n_qubits,
            d: self.d,
            entries: &self.entries,
            diag: &self.diagonal,
        })
        .expect("spec document serialises")
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn dimension(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn sparseness(&self) -> usize {
        self.d
    }

    /// Stored upper-triangle entries in `(row, col)` lexicographic order.
    pub fn entries(&self) -> &[OffDiagonalEntry] {
        &self.entries
    }

    pub fn diagonal(&self) -> &[DiagonalEntry] {
        &self.diagonal
    }

    pub fn is_time_independent(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.re.is_time_independent() && e.im.is_time_independent())
            && self.diagonal.iter().all(|e| e.re.is_time_independent())
    }

    /// Largest number of structural nonzeros in any row.
    pub fn max_row_count(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn element_value(&self, element: Element, t: f64) -> Complex64 {
        match element {
            Element::Diagonal(k) => Complex64::new(self.diagonal[k].re.value(t), 0.0),
            Element::Upper(k) => {
                let e = &self.entries[k];
                Complex64::new(e.re.value(t), e.im.value(t))
            }
            Element::Lower(k) => {
                let e = &self.entries[k];
                Complex64::new(e.re.value(t), -e.im.value(t))
            }
        }
    }

    fn element_derivative(&self, element: Element, t: f64) -> Complex64 {
        match element {
            Element::Diagonal(k) => Complex64::new(self.diagonal[k].re.derivative(t), 0.0),
            Element::Upper(k) => {
                let e = &self.entries[k];
                Complex64::new(e.re.derivative(t), e.im.derivative(t))
            }
            Element::Lower(k) => {
                let e = &self.entries[k];
                Complex64::new(e.re.derivative(t), -e.im.derivative(t))
            }
        }
    }

    /// Position and value of the `slot`-th (1-based) nonzero of `column` at
    /// time `t`. Nonzeros are enumerated in ascending row order; `None` when
    /// the column has fewer than `slot` of them.
    pub fn oracle_query(
        &self,
        column: usize,
        slot: usize,
        t: f64,
    ) -> Result<Option<(usize, Complex64)>> {
        let dim = self.dimension();
        if column >= dim {
            return Err(Error::IndexOutOfRange {
                index: column,
                dimension: dim,
            });
        }
        if slot == 0 || slot > self.d {
            return Err(Error::IndexOutOfRange {
                index: slot,
                dimension: self.d,
            });
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("query time {t} is not finite")));
        }
        Ok(self.columns[column]
            .get(slot - 1)
            .map(|&(row, el)| (row, self.element_value(el, t))))
    }

    fn check_cap(&self, cap: u32) -> Result<()> {
        if self.n_qubits > cap {
            Err(Error::DimensionCap {
                n_qubits: self.n_qubits,
                cap,
            })
        } else {
            Ok(())
        }
    }

    /// `H(t)` as a dense matrix, subject to [`DEFAULT_DENSE_CAP`].
    pub fn dense_matrix(&self, t: f64) -> Result<DMatrix<Complex64>> {
        self.dense_matrix_capped(t, DEFAULT_DENSE_CAP)
    }

    pub fn dense_matrix_capped(&self, t: f64, cap: u32) -> Result<DMatrix<Complex64>> {
        self.check_cap(cap)?;
        let dim = self.dimension();
        let mut m = DMatrix::zeros(dim, dim);
        for (col, elements) in self.columns.iter().enumerate() {
            for &(row, el) in elements {
                m[(row, col)] = self.element_value(el, t);
            }
        }
        Ok(m)
    }

    /// `dH/dt` at `t` as a dense matrix.
    pub fn dense_derivative(&self, t: f64) -> Result<DMatrix<Complex64>> {
        self.check_cap(DEFAULT_DENSE_CAP)?;
        let dim = self.dimension();
        let mut m = DMatrix::zeros(dim, dim);
        for (col, elements) in self.columns.iter().enumerate() {
            for &(row, el) in elements {
                m[(row, col)] = self.element_derivative(el, t);
            }
        }
        Ok(m)
    }

    /// Largest `|H[a,b](t)|`.
    pub fn max_entry(&self, t: f64) -> f64 {
        let off = self.entries.iter().map(|e| {
            let v = Complex64::new(e.re.value(t), e.im.value(t));
            v.norm()
        });
        let diag = self.diagonal.iter().map(|e| e.re.value(t).abs());
        off.chain(diag).fold(0.0, f64::max)
    }

    /// Norm maxima over a uniform grid of `samples` points on `[0, t]`.
    ///
    /// The maximum over a grid can only undershoot the true supremum; for the
    /// coefficient family used here the shortfall is at most
    /// `spacing · sup‖H'‖` (resp. `spacing · sup‖H''‖`), which is why the
    /// default grid is fine.
    pub fn norms(&self, t: f64, samples: usize) -> Result<NormReport> {
        if samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "norm grid needs at least 2 samples, got {samples}"
            )));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("evolution time {t} is invalid")));
        }
        self.check_cap(DEFAULT_DENSE_CAP)?;
        let mut report = NormReport {
            spectral_norm_max: 0.0,
            derivative_norm_max: 0.0,
            entry_norm_max: 0.0,
            sample_count: samples,
        };
        let grid: Vec<f64> = if self.is_time_independent() {
            vec![0.0]
        } else {
            (0..samples)
                .map(|k| t * k as f64 / (samples - 1) as f64)
                .collect()
        };
        for &tk in &grid {
            let h = self.dense_matrix(tk)?;
            report.spectral_norm_max = report
                .spectral_norm_max
                .max(linalg::hermitian_spectral_norm(&h));
            report.entry_norm_max = report.entry_norm_max.max(self.max_entry(tk));
            if !self.is_time_independent() {
                let dh = self.dense_derivative(tk)?;
                report.derivative_norm_max = report
                    .derivative_norm_max
                    .max(linalg::hermitian_spectral_norm(&dh));
            }
        }
        Ok(report)
    }
}

/// Norm maxima of `H` and `H'` over `[0, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub spectral_norm_max: f64,
    pub derivative_norm_max: f64,
    pub entry_norm_max: f64,
    pub sample_count: usize,
}
