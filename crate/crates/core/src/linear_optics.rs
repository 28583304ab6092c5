//! Passive linear optics on truncated Fock space.
//!
//! A [`ModeUnitary`] acts on creation operators as
//! `a_j^dagger -> sum_i U[i][j] a_i^dagger`; [`FockLift`] expands that action
//! on Fock components sector by sector. Photon number is conserved, so a
//! component with `s` photons on the acted modes stays exactly representable
//! as long as `s <= n_max`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::fock::{check_modes, DensityOperator, ModeSplit, PureState, POPULATION_TOL};
use crate::math::{binomial, sqrt_factorial};

/// Maximum tolerated entry of `U^dagger U - I`.
pub const UNITARY_TOL: f64 = 1e-12;

/// A `dim x dim` unitary on mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    matrix: Array2<C64>,
}

impl ModeUnitary {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let u = Self { matrix };
        let err = u.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Error::NotUnitary(err));
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Array2::from_diag_elem(dim, C64::new(1.0, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> ModeUnitary {
        Self {
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &ModeUnitary) -> Result<ModeUnitary> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.matrix.t().mapv(|z| z.conj()).dot(&self.matrix);
        prod.indexed_iter()
            .map(|((i, j), z)| {
                let target = if i == j { 1.0 } else { 0.0 };
                (z - C64::new(target, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Channel transmissivity (power units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    eta: f64,
}

impl LossSpec {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(invalid("eta", eta, "transmissivity must lie in [0, 1]"));
        }
        Ok(Self { eta })
    }

    pub fn lossless() -> Self {
        Self { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Symmetric three-waveguide coupler: coupling rate and propagation length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimerConfig {
    kappa: f64,
    z: f64,
}

impl TrimerConfig {
    pub fn new(kappa: f64, z: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid("kappa", kappa, "coupling rate must be positive"));
        }
        if !(z >= 0.0 && z.is_finite()) {
            return Err(invalid("z", z, "propagation distance must be non-negative"));
        }
        Ok(Self { kappa, z })
    }

    /// Unit coupling, so `z` is measured in units of `1/kappa`.
    pub fn with_unit_coupling(z: f64) -> Result<Self> {
        Self::new(1.0, z)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Coupling phase `sqrt(2) * kappa * z`.
    pub fn theta(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.kappa * self.z
    }

    /// Propagation length at which `theta = pi / 2`; fidelities are mirror
    /// symmetric about it.
    pub fn symmetric_point(kappa: f64) -> f64 {
        std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2 * kappa)
    }
}

/// Two-mode coupler `[[sqrt t, i sqrt(1-t)], [i sqrt(1-t), sqrt t]]`.
pub fn beamsplitter_unitary(t: f64) -> Result<ModeUnitary> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("t", t, "transmission must lie in [0, 1]"));
    }
    let tr = C64::new(t.sqrt(), 0.0);
    let rf = C64::new(0.0, (1.0 - t).sqrt());
    Ok(ModeUnitary {
        matrix: Array2::from_shape_vec((2, 2), vec![tr, rf, rf, tr]).expect("2x2"),
    })
}

/// Evolution matrix of the symmetric trimer at `theta = sqrt(2) kappa z`.
pub fn trimer_unitary(cfg: &TrimerConfig) -> ModeUnitary {
    let theta = cfg.theta();
    let (s, c) = theta.sin_cos();
    let diag = C64::new(0.5 + 0.5 * c, 0.0);
    let corner = C64::new(-0.5 + 0.5 * c, 0.0);
    let middle = C64::new(0.0, -s / std::f64::consts::SQRT_2);
    let centre = C64::new(c, 0.0);
    ModeUnitary {
        matrix: Array2::from_shape_vec(
            (3, 3),
            vec![diag, middle, corner, middle, centre, middle, corner, middle, diag],
        )
        .expect("3x3"),
    }
}

/// Image of one input Fock component: `(output occupations, amplitude)`.
pub type FockImage = Arc<Vec<(Vec<usize>, C64)>>;

/// Fock-space action of a [`ModeUnitary`], memoized per input component.
/// The cache is behind a `RwLock` so concurrent readers never block each
/// other once an entry exists.
#[derive(Debug)]
pub struct FockLift {
    unitary: ModeUnitary,
    cache: RwLock<HashMap<Vec<usize>, FockImage>>,
}

impl FockLift {
    pub fn new(unitary: ModeUnitary) -> Self {
        Self {
            unitary,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn unitary(&self) -> &ModeUnitary {
        &self.unitary
    }

    /// `U |occ>` expanded in the output Fock basis, sorted by occupation.
    pub fn image(&self, occ: &[usize]) -> FockImage {
        assert_eq!(
            occ.len(),
            self.unitary.dim(),
            "occupation length must match unitary dimension"
        );
        if let Some(hit) = self.cache.read().expect("lift cache poisoned").get(occ) {
            return Arc::clone(hit);
        }
        let img = Arc::new(self.expand(occ));
        let mut guard = self.cache.write().expect("lift cache poisoned");
        Arc::clone(guard.entry(occ.to_vec()).or_insert(img))
    }

    /// Amplitude `<out| U |input>`.
    pub fn amplitude(&self, out: &[usize], input: &[usize]) -> C64 {
        let img = self.image(input);
        img.iter()
            .find(|(o, _)| o.as_slice() == out)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    fn expand(&self, occ: &[usize]) -> Vec<(Vec<usize>, C64)> {
        let k = self.unitary.dim();
        let u = &self.unitary.matrix;
        // Polynomial in output creation operators, keyed by exponent vector.
        // BTreeMap keeps the summation order fixed across runs.
        let mut poly: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
        poly.insert(vec![0; k], C64::new(1.0, 0.0));
        for (j, &n) in occ.iter().enumerate() {
            for _ in 0..n {
                let mut next: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
                for (exps, coeff) in &poly {
                    for i in 0..k {
                        let uij = u[[i, j]];
                        if uij == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut e = exps.clone();
                        e[i] += 1;
                        *next.entry(e).or_default() += coeff * uij;
                    }
                }
                poly = next;
            }
        }
        let input_norm: f64 = occ.iter().map(|&n| sqrt_factorial(n)).product();
        poly.into_iter()
            .map(|(exps, coeff)| {
                let out_norm: f64 = exps.iter().map(|&m| sqrt_factorial(m)).product();
                let amp = coeff * (out_norm / input_norm);
                (exps, amp)
            })
            .filter(|(_, amp)| *amp != C64::new(0.0, 0.0))
            .collect()
    }
}

/// States that a mode unitary can act on.
pub trait ModeTransform: Sized {
    /// Applies the lifted unitary on `modes` (in the order of the unitary's
    /// rows). Errors with [`Error::TruncationLeakage`] if a populated
    /// component would not fit.
    fn transform(&self, lift: &FockLift, modes: &[usize]) -> Result<Self>;
}

/// Sparse image of every selected-subsystem basis index; `None` marks
/// components that would leak out of the truncation.
type SparseImage = Vec<(usize, C64)>;

fn selected_images(lift: &FockLift, dim: usize, k: usize, populated: &[bool]) -> Result<Vec<Option<SparseImage>>> {
    let n_max = dim - 1;
    let mut out = Vec::with_capacity(populated.len());
    for (s, &pop) in populated.iter().enumerate() {
        if !pop {
            out.push(None);
            continue;
        }
        let occ = crate::fock::occupations(s, dim, k);
        let photons: usize = occ.iter().sum();
        if photons > n_max {
            return Err(Error::TruncationLeakage { photons, n_max });
        }
        let img = lift.image(&occ);
        out.push(Some(
            img.iter()
                .map(|(o, c)| (crate::fock::basis_index(o, dim), *c))
                .collect(),
        ));
    }
    Ok(out)
}

fn check_lift_modes(lift: &FockLift, modes: &[usize], num_modes: usize) -> Result<()> {
    check_modes(modes, num_modes)?;
    if modes.len() != lift.unitary.dim() {
        return Err(Error::ShapeMismatch {
            expected: lift.unitary.dim(),
            found: modes.len(),
        });
    }
    Ok(())
}

impl ModeTransform for PureState {
    fn transform(&self, lift: &FockLift, modes: &[usize]) -> Result<Self> {
        check_lift_modes(lift, modes, self.num_modes())?;
        let trunc = self.truncation();
        let dim = trunc.dim();
        let split = ModeSplit::new(dim, self.num_modes(), modes);
        let amps = self.amplitudes();
        let populated: Vec<bool> = (0..split.selected_dim)
            .map(|s| (0..split.rest_dim).any(|q| amps[split.full(q, s)].norm_sqr() > POPULATION_TOL))
            .collect();
        let images = selected_images(lift, dim, modes.len(), &populated)?;
        let mut out = ndarray::Array1::<C64>::zeros(amps.len());
        for q in 0..split.rest_dim {
            for (s, img) in images.iter().enumerate() {
                let Some(img) = img else { continue };
                let a = amps[split.full(q, s)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(t, c) in img {
                    out[split.full(q, t)] += c * a;
                }
            }
        }
        Ok(PureState::from_parts(trunc, self.num_modes(), out))
    }
}

impl ModeTransform for DensityOperator {
    fn transform(&self, lift: &FockLift, modes: &[usize]) -> Result<Self> {
        check_lift_modes(lift, modes, self.num_modes())?;
        let trunc = self.truncation();
        let dim = trunc.dim();
        let split = ModeSplit::new(dim, self.num_modes(), modes);
        let rho = self.matrix();
        let n = rho.nrows();
        let populated: Vec<bool> = (0..split.selected_dim)
            .map(|s| {
                (0..split.rest_dim).any(|q| {
                    let i = split.full(q, s);
                    rho[[i, i]].re > POPULATION_TOL
                })
            })
            .collect();
        let images = selected_images(lift, dim, modes.len(), &populated)?;
        // U rho
        let mut left = Array2::<C64>::zeros((n, n));
        for q in 0..split.rest_dim {
            for (s, img) in images.iter().enumerate() {
                let Some(img) = img else { continue };
                let row_in = split.full(q, s);
                for &(t, c) in img {
                    let row_out = split.full(q, t);
                    for col in 0..n {
                        let v = rho[[row_in, col]];
                        left[[row_out, col]] += c * v;
                    }
                }
            }
        }
        // (U rho) U^dagger
        let mut out = Array2::<C64>::zeros((n, n));
        for q in 0..split.rest_dim {
            for (s, img) in images.iter().enumerate() {
                let Some(img) = img else { continue };
                let col_in = split.full(q, s);
                for &(t, c) in img {
                    let col_out = split.full(q, t);
                    let cc = c.conj();
                    for row in 0..n {
                        let v = left[[row, col_in]];
                        out[[row, col_out]] += v * cc;
                    }
                }
            }
        }
        Ok(DensityOperator::from_parts(trunc, self.num_modes(), out))
    }
}

/// Applies `u` on `modes` of a pure state or density operator.
pub fn apply_mode_unitary<S: ModeTransform>(state: &S, u: &ModeUnitary, modes: &[usize]) -> Result<S> {
    state.transform(&FockLift::new(u.clone()), modes)
}

/// Photon loss on one mode via the binomial Kraus map
/// `|n><n'| -> sum_k sqrt(C(n,k) C(n',k)) eta^((n+n'-2k)/2) (1-eta)^k |n-k><n'-k|`.
pub fn apply_loss_kraus(rho: &DensityOperator, mode: usize, loss: &LossSpec) -> Result<DensityOperator> {
    check_modes(&[mode], rho.num_modes())?;
    let eta = loss.eta();
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let trunc = rho.truncation();
    let d = trunc.dim();
    let split = ModeSplit::new(d, rho.num_modes(), &[mode]);
    let m = rho.matrix();
    let sqrt_eta = eta.sqrt();
    let lost = 1.0 - eta;
    // coef[n][n'][k]
    let coef = |n: usize, np: usize, k: usize| -> f64 {
        (binomial(n, k) * binomial(np, k)).sqrt() * sqrt_eta.powi((n + np - 2 * k) as i32) * lost.powi(k as i32)
    };
    let mut out = Array2::<C64>::zeros(m.raw_dim());
    for q in 0..split.rest_dim {
        for qp in 0..split.rest_dim {
            for n in 0..d {
                for np in 0..d {
                    let v = m[[split.full(q, n), split.full(qp, np)]];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for k in 0..=n.min(np) {
                        let c = coef(n, np, k);
                        if c == 0.0 {
                            continue;
                        }
                        out[[split.full(q, n - k), split.full(qp, np - k)]] += v * c;
                    }
                }
            }
        }
    }
    Ok(DensityOperator::from_parts(trunc, rho.num_modes(), out))
}

/// Photon loss on one mode by mixing with a vacuum ancilla on a coupler of
/// transmission `eta` and tracing the ancilla out.
pub fn apply_loss_ancilla(rho: &DensityOperator, mode: usize, loss: &LossSpec) -> Result<DensityOperator> {
    check_modes(&[mode], rho.num_modes())?;
    let ancilla = rho.num_modes();
    let joint = rho.tensor_product(&DensityOperator::vacuum(rho.truncation(), 1))?;
    let mixed = apply_mode_unitary(&joint, &beamsplitter_unitary(loss.eta())?, &[mode, ancilla])?;
    mixed.partial_trace(&[ancilla])
}
