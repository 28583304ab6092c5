//! Parameterized input and reference states: two-mode squeezed vacuum,
//! coherent states, two-component cat states and entangled coherent states.
//!
//! Every factory renormalizes inside the truncation and reports the
//! probability mass that fell outside it.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::fock::{PureState, TruncationSpec};
use crate::math::{coherent_coefficients, poisson_tail};

/// Tail mass above which the factories log a warning.
pub const TAIL_WARN: f64 = 1e-6;

/// Below this a superposition norm is considered degenerate.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// A factory output together with the probability mass lost to truncation
/// before renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub state: PureState,
    pub tail_mass: f64,
}

fn warn_tail(what: &str, tail: f64, trunc: TruncationSpec) {
    if tail > TAIL_WARN {
        log::warn!("{what}: truncated tail mass {tail:.3e} at n_max = {}", trunc.n_max());
    }
}

/// Two-mode squeezing parameter `r = tanh(xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSpec {
    r: C64,
}

impl SqueezingSpec {
    pub fn new(r: C64) -> Result<Self> {
        if r.norm().is_nan() || r.norm() >= 1.0 {
            return Err(invalid("|r|", r.norm(), "squeezing parameter must satisfy |r| < 1"));
        }
        Ok(Self { r })
    }

    pub fn real(r: f64) -> Result<Self> {
        Self::new(C64::new(r, 0.0))
    }

    pub fn r(&self) -> C64 {
        self.r
    }
}

/// `(eps_plus |beta> + eps_minus |-beta>) / sqrt(N0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec {
    pub beta: C64,
    pub eps_plus: C64,
    pub eps_minus: C64,
}

impl CatSpec {
    pub fn new(beta: C64, eps_plus: C64, eps_minus: C64) -> Self {
        Self {
            beta,
            eps_plus,
            eps_minus,
        }
    }

    /// `<beta|-beta> = exp(-2|beta|^2)`, real for any complex `beta`.
    pub fn c_overlap(&self) -> f64 {
        (-2.0 * self.beta.norm_sqr()).exp()
    }

    /// `N0 = |eps+|^2 + |eps-|^2 + 2 c Re[eps+^* eps-]`.
    pub fn norm(&self) -> f64 {
        self.eps_plus.norm_sqr()
            + self.eps_minus.norm_sqr()
            + 2.0 * self.c_overlap() * (self.eps_plus.conj() * self.eps_minus).re
    }

    pub fn is_degenerate(&self) -> bool {
        self.norm() <= DEGENERATE_NORM
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// `N (|alpha, alpha> +/- |-alpha, -alpha>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcsSpec {
    alpha: C64,
    parity: Parity,
}

impl EcsSpec {
    pub fn new(alpha: C64, parity: Parity) -> Result<Self> {
        let spec = Self { alpha, parity };
        if spec.norm_sqr_inverse() <= DEGENERATE_NORM {
            return Err(Error::DegenerateState(format!(
                "{parity:?} ECS with alpha = {alpha} has zero norm"
            )));
        }
        Ok(spec)
    }

    pub fn odd(alpha: f64) -> Result<Self> {
        Self::new(C64::new(alpha, 0.0), Parity::Odd)
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// `2 (1 +/- exp(-4|alpha|^2))`, the squared norm of the bare superposition.
    fn norm_sqr_inverse(&self) -> f64 {
        2.0 * (1.0 + self.parity.sign() * (-4.0 * self.alpha.norm_sqr()).exp())
    }

    /// Normalization constant `1 / sqrt(2 (1 +/- exp(-4|alpha|^2)))`.
    pub fn norm(&self) -> f64 {
        1.0 / self.norm_sqr_inverse().sqrt()
    }
}

pub fn make_tmsvs(sq: &SqueezingSpec, trunc: TruncationSpec) -> Result<Prepared> {
    let d = trunc.dim();
    let r = sq.r();
    let weight = r.norm_sqr();
    let pref = (1.0 - weight).sqrt();
    let mut amps = Array1::<C64>::zeros(trunc.hilbert_dim(2));
    let mut rn = C64::new(pref, 0.0);
    for n in 0..d {
        amps[n * d + n] = rn;
        rn *= r;
    }
    let tail = weight.powi(d as i32);
    warn_tail("two-mode squeezed vacuum", tail, trunc);
    let kept = 1.0 - tail;
    let scale = 1.0 / kept.sqrt();
    let state = PureState::new(trunc, 2, amps.mapv(|a| a * scale))?;
    Ok(Prepared { state, tail_mass: tail })
}

pub fn make_coherent(gamma: C64, trunc: TruncationSpec) -> Prepared {
    let coeffs = coherent_coefficients(gamma, trunc.dim());
    let tail = poisson_tail(gamma.norm_sqr(), trunc.n_max());
    warn_tail("coherent state", tail, trunc);
    let amps = Array1::from_vec(coeffs);
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let scale = 1.0 / norm.sqrt();
    Prepared {
        state: PureState::from_parts(trunc, 1, amps.mapv(|a| a * scale)),
        tail_mass: tail,
    }
}

pub fn make_cat(spec: &CatSpec, trunc: TruncationSpec) -> Result<Prepared> {
    let n0 = spec.norm();
    if n0 <= DEGENERATE_NORM {
        return Err(Error::DegenerateState(format!(
            "cat state with beta = {}, eps = ({}, {}) has norm {n0:.3e}",
            spec.beta, spec.eps_plus, spec.eps_minus
        )));
    }
    let coeffs = coherent_coefficients(spec.beta, trunc.dim());
    let envelope = (-spec.beta.norm_sqr() / 2.0).exp();
    let amps = Array1::from_iter(coeffs.iter().enumerate().map(|(n, c)| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        (spec.eps_plus + spec.eps_minus * sign) * c * envelope
    }));
    let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if kept <= DEGENERATE_NORM {
        return Err(Error::DegenerateState(
            "cat state has no weight inside the truncation".into(),
        ));
    }
    let tail = (1.0 - kept / n0).max(0.0);
    warn_tail("cat state", tail, trunc);
    let scale = 1.0 / kept.sqrt();
    Ok(Prepared {
        state: PureState::from_parts(trunc, 1, amps.mapv(|a| a * scale)),
        tail_mass: tail,
    })
}

/// The six cat inputs spanning the cat-qubit Bloch sphere:
/// `|beta>, |-beta>, (|beta> +/- |-beta>)/sqrt2, (|beta> +/- i|-beta>)/sqrt2`.
pub fn six_cat_states(beta: C64) -> [CatSpec; 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let pairs = [
        (one, zero),
        (zero, one),
        (C64::new(h, 0.0), C64::new(h, 0.0)),
        (C64::new(h, 0.0), C64::new(-h, 0.0)),
        (C64::new(h, 0.0), C64::new(0.0, h)),
        (C64::new(h, 0.0), C64::new(0.0, -h)),
    ];
    pairs.map(|(p, m)| CatSpec::new(beta, p, m))
}

pub fn make_ecs(spec: &EcsSpec, trunc: TruncationSpec) -> Result<Prepared> {
    let d = trunc.dim();
    let coeffs = coherent_coefficients(spec.alpha, d);
    let envelope = (-spec.alpha.norm_sqr()).exp();
    let sign = spec.parity.sign();
    let amps = Array1::from_shape_fn(d * d, |idx| {
        let (n, m) = (idx / d, idx % d);
        // |alpha,alpha> +/- |-alpha,-alpha> keeps only one total-photon parity
        let factor = if (n + m) % 2 == 0 { 1.0 + sign } else { 1.0 - sign };
        if factor == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            coeffs[n] * coeffs[m] * (factor * envelope)
        }
    });
    let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let exact = spec.norm_sqr_inverse();
    let tail = (1.0 - kept / exact).max(0.0);
    warn_tail("entangled coherent state", tail, trunc);
    let scale = 1.0 / kept.sqrt();
    Ok(Prepared {
        state: PureState::from_parts(trunc, 2, amps.mapv(|a| a * scale)),
        tail_mass: tail,
    })
}
