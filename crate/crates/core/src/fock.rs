//! Multimode truncated Fock space: pure states, density operators and the
//! handful of tensor operations the protocol needs (products, partial
//! traces, photon-number projections, fidelity, purity).
//!
//! Basis ordering is row-major over modes with mode 0 most significant, so
//! the flat index of `|n_0, n_1, ..., n_{M-1}>` is `sum_k n_k * d^(M-1-k)`
//! with `d = n_max + 1`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Maximum tolerated `|rho - rho^dagger|` entry.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Slack on unit norm / unit trace.
pub const NORM_TOL: f64 = 1e-9;
/// Below this trace a herald branch is treated as impossible.
pub const IMPOSSIBLE_BRANCH: f64 = 1e-14;
/// Probability weight below which a basis component counts as unpopulated.
pub const POPULATION_TOL: f64 = 1e-24;

/// Per-mode photon-number cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncationSpec {
    n_max: usize,
}

impl TruncationSpec {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter {
                name: "n_max",
                value: n_max as f64,
                reason: "must be at least 1",
            });
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Dimension of a single mode, `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn hilbert_dim(&self, num_modes: usize) -> usize {
        self.dim().pow(num_modes as u32)
    }

    pub(crate) fn check_same(&self, other: &TruncationSpec) -> Result<()> {
        if self != other {
            return Err(Error::TruncationMismatch {
                left: *self,
                right: *other,
            });
        }
        Ok(())
    }

    pub(crate) fn check_photons(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::PhotonCountOutOfRange { n, n_max: self.n_max });
        }
        Ok(())
    }
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { n_max: 10 }
    }
}

/// Occupation numbers of flat basis index `index`.
pub fn occupations(index: usize, dim: usize, num_modes: usize) -> Vec<usize> {
    let mut occ = vec![0; num_modes];
    let mut rem = index;
    for slot in occ.iter_mut().rev() {
        *slot = rem % dim;
        rem /= dim;
    }
    occ
}

/// Flat basis index of the occupation vector `occ`.
pub fn basis_index(occ: &[usize], dim: usize) -> usize {
    occ.iter().fold(0, |acc, &n| acc * dim + n)
}

pub(crate) fn check_modes(modes: &[usize], num_modes: usize) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= num_modes {
            return Err(Error::InvalidMode { mode: m, num_modes });
        }
        if modes[..i].contains(&m) {
            return Err(Error::DuplicateMode(m));
        }
    }
    Ok(())
}

/// Splits a multimode basis into a selected subsystem (in the order given)
/// and the remaining modes (in their original order).
#[derive(Debug, Clone)]
pub(crate) struct ModeSplit {
    pub selected_dim: usize,
    pub rest_dim: usize,
    table: Vec<usize>,
}

impl ModeSplit {
    pub fn new(dim: usize, num_modes: usize, selected: &[usize]) -> Self {
        let rest: Vec<usize> = (0..num_modes).filter(|m| !selected.contains(m)).collect();
        let selected_dim = dim.pow(selected.len() as u32);
        let rest_dim = dim.pow(rest.len() as u32);
        let total = selected_dim * rest_dim;
        let mut table = vec![0; total];
        for full in 0..total {
            let occ = occupations(full, dim, num_modes);
            let s = selected.iter().fold(0, |acc, &m| acc * dim + occ[m]);
            let q = rest.iter().fold(0, |acc, &m| acc * dim + occ[m]);
            table[q * selected_dim + s] = full;
        }
        Self {
            selected_dim,
            rest_dim,
            table,
        }
    }

    /// Flat index of the full basis state with rest index `q` and selected index `s`.
    #[inline]
    pub fn full(&self, q: usize, s: usize) -> usize {
        self.table[q * self.selected_dim + s]
    }
}

/// A (possibly unnormalized) ket on `num_modes` truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    truncation: TruncationSpec,
    num_modes: usize,
    amplitudes: Array1<C64>,
}

impl PureState {
    pub fn new(truncation: TruncationSpec, num_modes: usize, amplitudes: Array1<C64>) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::ModeCountMismatch { expected: 1, found: 0 });
        }
        let expected = truncation.hilbert_dim(num_modes);
        if amplitudes.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        let state = Self {
            truncation,
            num_modes,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if norm > 1.0 + NORM_TOL {
            return Err(Error::NotNormalized {
                what: "state norm exceeds one",
                value: norm,
            });
        }
        Ok(state)
    }

    pub(crate) fn from_parts(truncation: TruncationSpec, num_modes: usize, amplitudes: Array1<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), truncation.hilbert_dim(num_modes));
        Self {
            truncation,
            num_modes,
            amplitudes,
        }
    }

    pub fn vacuum(truncation: TruncationSpec, num_modes: usize) -> Self {
        Self::fock(truncation, &vec![0; num_modes]).expect("vacuum is always representable")
    }

    /// Fock basis state `|n_0, n_1, ...>`.
    pub fn fock(truncation: TruncationSpec, occ: &[usize]) -> Result<Self> {
        for &n in occ {
            truncation.check_photons(n)?;
        }
        let mut amplitudes = Array1::zeros(truncation.hilbert_dim(occ.len()));
        amplitudes[basis_index(occ, truncation.dim())] = C64::new(1.0, 0.0);
        Self::new(truncation, occ.len(), amplitudes)
    }

    pub fn truncation(&self) -> TruncationSpec {
        self.truncation
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, occ: &[usize]) -> C64 {
        assert_eq!(occ.len(), self.num_modes);
        if occ.iter().any(|&n| n > self.truncation.n_max) {
            return C64::new(0.0, 0.0);
        }
        self.amplitudes[basis_index(occ, self.truncation.dim())]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.truncation.check_same(&other.truncation)?;
        self.check_modes_match(other.num_modes)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Returns the normalized state and the squared norm it had.
    pub fn normalized(&self) -> Result<(PureState, f64)> {
        let norm = self.norm_sqr();
        if norm <= IMPOSSIBLE_BRANCH {
            return Err(Error::ImpossibleBranch { probability: norm });
        }
        let scale = 1.0 / norm.sqrt();
        Ok((
            Self::from_parts(self.truncation, self.num_modes, self.amplitudes.mapv(|a| a * scale)),
            norm,
        ))
    }

    pub fn scaled(&self, factor: C64) -> Result<PureState> {
        Self::new(self.truncation, self.num_modes, self.amplitudes.mapv(|a| a * factor))
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        self.truncation.check_same(&other.truncation)?;
        let n = other.amplitudes.len();
        let mut out = Array1::zeros(self.amplitudes.len() * n);
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                out[i * n + j] = a * b;
            }
        }
        Ok(Self::from_parts(self.truncation, self.num_modes + other.num_modes, out))
    }

    /// Unnormalized projection of `mode` onto `<n|`; the mode is removed.
    pub fn fock_project(&self, mode: usize, n: usize) -> Result<PureState> {
        check_modes(&[mode], self.num_modes)?;
        self.truncation.check_photons(n)?;
        if self.num_modes == 1 {
            return Err(Error::TraceAllModes);
        }
        let split = ModeSplit::new(self.truncation.dim(), self.num_modes, &[mode]);
        let out = Array1::from_shape_fn(split.rest_dim, |q| self.amplitudes[split.full(q, n)]);
        Ok(Self::from_parts(self.truncation, self.num_modes - 1, out))
    }

    /// Re-expresses the state in a different truncation. Components that do
    /// not fit are dropped and their probability weight returned.
    pub fn with_truncation(&self, truncation: TruncationSpec) -> (PureState, f64) {
        let old_dim = self.truncation.dim();
        let new_dim = truncation.dim();
        let mut out = Array1::zeros(truncation.hilbert_dim(self.num_modes));
        let mut dropped = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            let occ = occupations(i, old_dim, self.num_modes);
            if occ.iter().all(|&n| n < new_dim) {
                out[basis_index(&occ, new_dim)] = *a;
            } else {
                dropped += a.norm_sqr();
            }
        }
        (Self::from_parts(truncation, self.num_modes, out), dropped)
    }

    pub fn to_density(&self) -> DensityOperator {
        let d = self.amplitudes.len();
        let matrix = Array2::from_shape_fn((d, d), |(i, j)| self.amplitudes[i] * self.amplitudes[j].conj());
        DensityOperator::from_parts(self.truncation, self.num_modes, matrix)
    }

    fn check_modes_match(&self, found: usize) -> Result<()> {
        if self.num_modes != found {
            return Err(Error::ModeCountMismatch {
                expected: self.num_modes,
                found,
            });
        }
        Ok(())
    }
}

/// Dense density operator on `num_modes` truncated modes. The trace may be
/// below one; an unnormalized herald branch carries its probability there.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    truncation: TruncationSpec,
    num_modes: usize,
    matrix: Array2<C64>,
}

impl DensityOperator {
    /// Validates shape and Hermiticity. Positivity and the trace bound are
    /// the caller's responsibility (see [`DensityOperator::min_diagonal`]).
    pub fn new(truncation: TruncationSpec, num_modes: usize, matrix: Array2<C64>) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::ModeCountMismatch { expected: 1, found: 0 });
        }
        let expected = truncation.hilbert_dim(num_modes);
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let rho = Self::from_parts(truncation, num_modes, matrix);
        let dev = rho.hermiticity_error();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(rho)
    }

    pub(crate) fn from_parts(truncation: TruncationSpec, num_modes: usize, matrix: Array2<C64>) -> Self {
        Self {
            truncation,
            num_modes,
            matrix,
        }
    }

    pub fn vacuum(truncation: TruncationSpec, num_modes: usize) -> Self {
        PureState::vacuum(truncation, num_modes).to_density()
    }

    /// `|n><n|` for the occupation vector `occ`.
    pub fn fock(truncation: TruncationSpec, occ: &[usize]) -> Result<Self> {
        Ok(PureState::fock(truncation, occ)?.to_density())
    }

    pub fn from_pure(state: &PureState) -> Self {
        state.to_density()
    }

    pub fn truncation(&self) -> TruncationSpec {
        self.truncation
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).sum()
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Smallest diagonal entry (a cheap necessary condition for positivity).
    pub fn min_diagonal(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> DensityOperator {
        Self::from_parts(self.truncation, self.num_modes, self.matrix.mapv(|z| z * factor))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> Result<f64> {
        self.truncation.check_same(&other.truncation)?;
        self.check_modes_match(other.num_modes)?;
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn tensor_product(&self, other: &DensityOperator) -> Result<DensityOperator> {
        self.truncation.check_same(&other.truncation)?;
        let (da, db) = (self.dim(), other.dim());
        let mut out = Array2::zeros((da * db, da * db));
        for ((i, j), a) in self.matrix.indexed_iter() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for ((k, l), b) in other.matrix.indexed_iter() {
                out[[i * db + k, j * db + l]] = a * b;
            }
        }
        Ok(Self::from_parts(self.truncation, self.num_modes + other.num_modes, out))
    }

    pub fn partial_trace(&self, modes: &[usize]) -> Result<DensityOperator> {
        check_modes(modes, self.num_modes)?;
        if modes.is_empty() {
            return Ok(self.clone());
        }
        if modes.len() == self.num_modes {
            return Err(Error::TraceAllModes);
        }
        let split = ModeSplit::new(self.truncation.dim(), self.num_modes, modes);
        let keep = split.rest_dim;
        let out = Array2::from_shape_fn((keep, keep), |(i, j)| {
            (0..split.selected_dim)
                .map(|t| self.matrix[[split.full(i, t), split.full(j, t)]])
                .sum()
        });
        Ok(Self::from_parts(self.truncation, self.num_modes - modes.len(), out))
    }

    /// Unnormalized herald `<n|_mode rho |n>_mode`; the mode is removed and the
    /// trace of the result is the outcome probability.
    pub fn fock_project(&self, mode: usize, n: usize) -> Result<DensityOperator> {
        check_modes(&[mode], self.num_modes)?;
        self.truncation.check_photons(n)?;
        if self.num_modes == 1 {
            return Err(Error::TraceAllModes);
        }
        let split = ModeSplit::new(self.truncation.dim(), self.num_modes, &[mode]);
        let keep = split.rest_dim;
        let out = Array2::from_shape_fn((keep, keep), |(i, j)| self.matrix[[split.full(i, n), split.full(j, n)]]);
        Ok(Self::from_parts(self.truncation, self.num_modes - 1, out))
    }

    /// Returns `(rho / tr rho, tr rho)`.
    pub fn normalize(&self) -> Result<(DensityOperator, f64)> {
        let tr = self.trace();
        if tr <= IMPOSSIBLE_BRANCH {
            return Err(Error::ImpossibleBranch { probability: tr });
        }
        Ok((self.scaled(1.0 / tr), tr))
    }

    /// `Tr(rho^2)` of a normalized operator.
    pub fn purity(&self) -> Result<f64> {
        self.check_normalized()?;
        // Hermitian, so Tr(rho^2) = sum |rho_ij|^2.
        Ok(self.matrix.iter().map(|z| z.norm_sqr()).sum())
    }

    /// `rho -> K rho K^dagger` with `K` acting on a single mode.
    pub fn apply_local(&self, mode: usize, op: &Array2<C64>) -> Result<DensityOperator> {
        check_modes(&[mode], self.num_modes)?;
        let d = self.truncation.dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                found: op.nrows().max(op.ncols()),
            });
        }
        let split = ModeSplit::new(d, self.num_modes, &[mode]);
        let dim = self.dim();
        // left: (K rho)
        let mut left = Array2::<C64>::zeros((dim, dim));
        for q in 0..split.rest_dim {
            for s in 0..d {
                let row_in = split.full(q, s);
                for t in 0..d {
                    let k = op[[t, s]];
                    if k == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let row_out = split.full(q, t);
                    for c in 0..dim {
                        let v = self.matrix[[row_in, c]];
                        left[[row_out, c]] += k * v;
                    }
                }
            }
        }
        // right: (K rho) K^dagger
        let mut out = Array2::<C64>::zeros((dim, dim));
        for q in 0..split.rest_dim {
            for s in 0..d {
                let col_in = split.full(q, s);
                for t in 0..d {
                    let k = op[[t, s]].conj();
                    if k == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let col_out = split.full(q, t);
                    for r in 0..dim {
                        let v = left[[r, col_in]];
                        out[[r, col_out]] += v * k;
                    }
                }
            }
        }
        Ok(Self::from_parts(self.truncation, self.num_modes, out))
    }

    /// Photon-number distribution of a single mode (diagonal of its reduced state).
    pub fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        check_modes(&[mode], self.num_modes)?;
        let d = self.truncation.dim();
        let split = ModeSplit::new(d, self.num_modes, &[mode]);
        Ok((0..d)
            .map(|n| {
                (0..split.rest_dim)
                    .map(|q| self.matrix[[split.full(q, n), split.full(q, n)]].re)
                    .sum()
            })
            .collect())
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "density operator trace",
                value: tr,
            });
        }
        Ok(())
    }

    fn check_modes_match(&self, found: usize) -> Result<()> {
        if self.num_modes != found {
            return Err(Error::ModeCountMismatch {
                expected: self.num_modes,
                found,
            });
        }
        Ok(())
    }
}

pub fn tensor_product(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    a.tensor_product(b)
}

pub fn partial_trace(rho: &DensityOperator, modes_to_trace: &[usize]) -> Result<DensityOperator> {
    rho.partial_trace(modes_to_trace)
}

pub fn fock_project(rho: &DensityOperator, mode: usize, n: usize) -> Result<DensityOperator> {
    rho.fock_project(mode, n)
}

pub fn normalize(rho: &DensityOperator) -> Result<(DensityOperator, f64)> {
    rho.normalize()
}

pub fn purity(rho: &DensityOperator) -> Result<f64> {
    rho.purity()
}

/// `<psi|rho|psi>` for normalized inputs, clamped to `[0, 1]`.
pub fn fidelity(psi: &PureState, rho: &DensityOperator) -> Result<f64> {
    psi.truncation.check_same(&rho.truncation)?;
    if psi.num_modes != rho.num_modes {
        return Err(Error::ModeCountMismatch {
            expected: rho.num_modes,
            found: psi.num_modes,
        });
    }
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized {
            what: "target state norm",
            value: norm,
        });
    }
    rho.check_normalized()?;
    let rho_psi = rho.matrix.dot(&psi.amplitudes);
    let value: C64 = psi
        .amplitudes
        .iter()
        .zip(rho_psi.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(value.im.abs() < 1e-10, "fidelity has imaginary part {}", value.im);
    Ok(value.re.clamp(0.0, 1.0))
}
