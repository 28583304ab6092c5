//! The four pipeline stages: quasi-ECS generation in the trimer, lossy
//! distribution, single-photon-catalysis purification and photon-number
//! teleportation, together with the closed-form evaluators used to cross
//! check the first two stages.
//!
//! Mode conventions: a two-mode resource is ordered `(a, c)`. Mode `a`
//! travels to Bob and mode `c` to Alice, so Alice mixes the input with
//! resource mode 1 and Bob keeps resource mode 0.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::fock::{fidelity, DensityOperator, PureState, TruncationSpec, IMPOSSIBLE_BRANCH, NORM_TOL};
use crate::linear_optics::{
    apply_loss_kraus, beamsplitter_unitary, trimer_unitary, FockLift, LossSpec, ModeTransform, TrimerConfig,
};
use crate::math::{binomial, factorial, sqrt_factorial};
use crate::states::{make_cat, make_coherent, make_ecs, make_tmsvs, six_cat_states, EcsSpec, SqueezingSpec};

/// Propagation length of the operating point (units of `1/kappa`).
pub const OPERATING_Z: f64 = 1.25;
/// Directional-coupler transmission used for catalysis.
pub const DEFAULT_COUPLER_T: f64 = 0.1;
/// Target ECS amplitude for the generation and purification figures.
pub const DEFAULT_ALPHA: f64 = 0.5;
/// Cat amplitude used for the teleportation figures.
pub const DEFAULT_BETA: f64 = 0.55;
/// Best average fidelity reachable by measure-and-resend strategies.
pub const CLASSICAL_LIMIT: f64 = 2.0 / 3.0;

/// Squeezed input, trimer geometry and number of subtracted photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    pub squeezing: SqueezingSpec,
    pub trimer: TrimerConfig,
    pub n_subtract: usize,
}

impl GenerationConfig {
    pub fn new(squeezing: SqueezingSpec, trimer: TrimerConfig, n_subtract: usize) -> Result<Self> {
        if n_subtract == 0 {
            return Err(invalid("n_subtract", 0.0, "at least one photon must be subtracted"));
        }
        Ok(Self {
            squeezing,
            trimer,
            n_subtract,
        })
    }

    /// Real squeezing `r`, unit coupling, `z = 1.25`, one subtracted photon.
    pub fn at_operating_point(r: f64) -> Result<Self> {
        Self::new(
            SqueezingSpec::real(r)?,
            TrimerConfig::with_unit_coupling(OPERATING_Z)?,
            1,
        )
    }

    fn check(&self, trunc: TruncationSpec) -> Result<()> {
        trunc.check_photons(self.n_subtract)
    }

    /// Default cutoff on the TMSVS photon number: `n_max + N`. Larger
    /// components cannot land inside the output truncation.
    pub fn default_series_cutoff(&self, trunc: TruncationSpec) -> usize {
        trunc.n_max() + self.n_subtract
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurificationConfig {
    coupler_t: f64,
}

impl PurificationConfig {
    pub fn new(coupler_t: f64) -> Result<Self> {
        if !(coupler_t > 0.0 && coupler_t < 1.0) {
            return Err(invalid(
                "coupler_t",
                coupler_t,
                "coupler transmission must lie in (0, 1)",
            ));
        }
        Ok(Self { coupler_t })
    }

    pub fn coupler_t(&self) -> f64 {
        self.coupler_t
    }
}

impl Default for PurificationConfig {
    fn default() -> Self {
        Self {
            coupler_t: DEFAULT_COUPLER_T,
        }
    }
}

/// A normalized herald branch with its success probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Heralded {
    pub state: DensityOperator,
    pub probability: f64,
    /// Branch weight lost to truncation (diagnostic).
    pub tail_mass: f64,
}

/// Brute-force quasi-ECS: TMSVS on the outer waveguides, vacuum in the
/// middle, trimer evolution, projection of the middle guide onto `N`.
pub fn generate_quasi_ecs(cfg: &GenerationConfig, trunc: TruncationSpec) -> Result<Heralded> {
    generate_quasi_ecs_with_cutoff(cfg, trunc, cfg.default_series_cutoff(trunc))
}

/// As [`generate_quasi_ecs`], with the TMSVS expanded up to `series_cutoff`
/// photons per mode.
pub fn generate_quasi_ecs_with_cutoff(
    cfg: &GenerationConfig,
    trunc: TruncationSpec,
    series_cutoff: usize,
) -> Result<Heralded> {
    cfg.check(trunc)?;
    if series_cutoff < trunc.n_max() {
        return Err(invalid("series_cutoff", series_cutoff as f64, "must be at least n_max"));
    }
    let source = make_tmsvs(&cfg.squeezing, TruncationSpec::new(series_cutoff)?)?;
    // the trimer conserves photon number: 2 * cutoff photons always fit
    let work = TruncationSpec::new(2 * series_cutoff)?;
    let (tmsvs, _) = source.state.with_truncation(work);
    let joint = tmsvs.tensor(&PureState::vacuum(work, 1))?;
    // waveguides (1, 2, 3) live on state modes (0, 2, 1)
    let lift = FockLift::new(trimer_unitary(&cfg.trimer));
    let evolved = joint.transform(&lift, &[0, 2, 1])?;
    let branch = evolved.fock_project(2, cfg.n_subtract)?;
    let (kept, dropped) = branch.with_truncation(trunc);
    // undo the factory renormalization so the trace is the physical probability
    let weight = 1.0 - source.tail_mass;
    let probability = kept.norm_sqr() * weight;
    let dropped = dropped * weight;
    if probability <= IMPOSSIBLE_BRANCH {
        return Err(Error::ImpossibleBranch { probability });
    }
    let (state, _) = kept.normalized()?;
    let tail_mass = dropped / (probability + dropped) + source.tail_mass;
    if tail_mass > crate::states::TAIL_WARN {
        log::warn!(
            "quasi-ECS generation: tail mass {tail_mass:.3e} at n_max = {}",
            trunc.n_max()
        );
    }
    Ok(Heralded {
        state: state.to_density(),
        probability,
        tail_mass,
    })
}

/// Accumulators of the analytic photon-subtracted state.
///
/// The summand `S` factorizes into a ket half (unprimed indices) and a bra
/// half (primed indices), so `Q(v, v')` is stored as the outer product of a
/// single ket accumulator with itself, scaled by `(1-|r|^2) N! |U12|^(2N)`.
#[derive(Debug, Clone)]
pub struct ClosedFormCoefficients {
    pub n_max: usize,
    pub n_subtract: usize,
    pub series_cutoff: usize,
    prefactor: f64,
    /// `r^l sum_{p1, p2, p3} l! / (p! (v-p)!) U11^.. U13^.. sqrt(v1! v3!)`,
    /// indexed by `v1 * (n_max + 1) + v3`.
    ket: Vec<C64>,
}

impl ClosedFormCoefficients {
    pub fn evaluate(cfg: &GenerationConfig, trunc: TruncationSpec, series_cutoff: usize) -> Result<Self> {
        cfg.check(trunc)?;
        if series_cutoff < trunc.n_max() {
            return Err(invalid("series_cutoff", series_cutoff as f64, "must be at least n_max"));
        }
        let u = trimer_unitary(&cfg.trimer);
        let u11 = u.matrix()[[0, 0]];
        let u12 = u.matrix()[[0, 1]];
        let u13 = u.matrix()[[0, 2]];
        let r = cfg.squeezing.r();
        let n = cfg.n_subtract;
        let d = trunc.dim();
        let mut ket = vec![C64::new(0.0, 0.0); d * d];
        for v1 in 0..d {
            for v3 in 0..d {
                // delta(v1 + N + v3, 2l)
                let total = v1 + n + v3;
                if total % 2 == 1 {
                    continue;
                }
                let l = total / 2;
                if l > series_cutoff {
                    continue;
                }
                let mut acc = C64::new(0.0, 0.0);
                // delta(p1 + p2 + p3, l); factorial arguments v1-p1, N-p2, v3-p3 must be >= 0
                for p1 in 0..=v1.min(l) {
                    for p2 in 0..=n.min(l - p1) {
                        let p3 = l - p1 - p2;
                        if p3 > v3 {
                            continue;
                        }
                        let weight = factorial(l)
                            / (factorial(p1) * factorial(p2) * factorial(p3))
                            / (factorial(v1 - p1) * factorial(n - p2) * factorial(v3 - p3));
                        acc += u11.powu((p1 + v3 - p3) as u32) * u13.powu((p3 + v1 - p1) as u32) * weight;
                    }
                }
                ket[v1 * d + v3] = acc * r.powu(l as u32) * (sqrt_factorial(v1) * sqrt_factorial(v3));
            }
        }
        let prefactor = (1.0 - r.norm_sqr()) * factorial(n) * u12.norm_sqr().powi(n as i32);
        Ok(Self {
            n_max: trunc.n_max(),
            n_subtract: n,
            series_cutoff,
            prefactor,
            ket,
        })
    }

    /// `Q` coefficient of `|v1>_a |v3>_c <v3'|_c <v1'|_a`.
    pub fn q(&self, v1: usize, v3: usize, v1p: usize, v3p: usize) -> C64 {
        let d = self.n_max + 1;
        if v1.max(v3).max(v1p).max(v3p) >= d {
            return C64::new(0.0, 0.0);
        }
        self.ket[v1 * d + v3] * self.ket[v1p * d + v3p].conj() * self.prefactor
    }

    fn truncation(&self) -> TruncationSpec {
        TruncationSpec::new(self.n_max).expect("validated on construction")
    }

    pub fn rho_sub(&self) -> DensityOperator {
        let d = self.n_max + 1;
        let dim = d * d;
        let m = Array2::from_shape_fn((dim, dim), |(i, j)| self.q(i / d, i % d, j / d, j % d));
        DensityOperator::from_parts(self.truncation(), 2, m)
    }

    /// `R`: the closed form pushed through equal loss `eta` on both arms.
    pub fn rho_lossy(&self, eta: &LossSpec) -> DensityOperator {
        let d = self.n_max + 1;
        let dim = d * d;
        let eta = eta.eta();
        let amp = eta.sqrt();
        let lost = 1.0 - eta;
        let mut m = Array2::<C64>::zeros((dim, dim));
        for v1 in 0..d {
            for v3 in 0..d {
                for v1p in 0..d {
                    for v3p in 0..d {
                        let q = self.q(v1, v3, v1p, v3p);
                        if q == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for ka in 0..=v1.min(v1p) {
                            let fa = (binomial(v1, ka) * binomial(v1p, ka)).sqrt()
                                * amp.powi((v1 + v1p - 2 * ka) as i32)
                                * lost.powi(ka as i32);
                            if fa == 0.0 {
                                continue;
                            }
                            for kc in 0..=v3.min(v3p) {
                                let fc = (binomial(v3, kc) * binomial(v3p, kc)).sqrt()
                                    * amp.powi((v3 + v3p - 2 * kc) as i32)
                                    * lost.powi(kc as i32);
                                if fc == 0.0 {
                                    continue;
                                }
                                let row = (v1 - ka) * d + (v3 - kc);
                                let col = (v1p - ka) * d + (v3p - kc);
                                m[[row, col]] += q * (fa * fc);
                            }
                        }
                    }
                }
            }
        }
        DensityOperator::from_parts(self.truncation(), 2, m)
    }
}

/// Unnormalized analytic photon-subtracted state; its trace is the herald
/// probability.
pub fn closed_form_rho_sub(
    cfg: &GenerationConfig,
    trunc: TruncationSpec,
    series_cutoff: usize,
) -> Result<DensityOperator> {
    Ok(ClosedFormCoefficients::evaluate(cfg, trunc, series_cutoff)?.rho_sub())
}

/// Unnormalized analytic photon-subtracted state after loss `eta` on both arms.
pub fn closed_form_rho_lossy(
    cfg: &GenerationConfig,
    eta: &LossSpec,
    trunc: TruncationSpec,
    series_cutoff: usize,
) -> Result<DensityOperator> {
    Ok(ClosedFormCoefficients::evaluate(cfg, trunc, series_cutoff)?.rho_lossy(eta))
}

/// Independent loss on each arm of a two-mode state.
pub fn distribute(rho: &DensityOperator, eta_a: &LossSpec, eta_c: &LossSpec) -> Result<DensityOperator> {
    check_two_modes(rho)?;
    let after_a = apply_loss_kraus(rho, 0, eta_a)?;
    apply_loss_kraus(&after_a, 1, eta_c)
}

/// Single-mode Kraus operator of catalysis: a single photon enters the
/// ancilla port of a coupler with transmission `T` and one photon is
/// heralded at the ancilla output, `K = <1|_anc U_T |1>_anc`.
pub fn catalysis_kraus(cfg: &PurificationConfig, trunc: TruncationSpec) -> Result<Array2<C64>> {
    let lift = FockLift::new(beamsplitter_unitary(cfg.coupler_t())?);
    let d = trunc.dim();
    let mut k = Array2::<C64>::zeros((d, d));
    for n in 0..d {
        for (out, amp) in lift.image(&[n, 1]).iter() {
            if out[1] == 1 && out[0] < d {
                k[[out[0], n]] += *amp;
            }
        }
    }
    Ok(k)
}

/// Catalysis on both arms; the returned probability is the trace of the
/// unnormalized purified branch.
pub fn purify(rho: &DensityOperator, cfg: &PurificationConfig) -> Result<Heralded> {
    check_two_modes(rho)?;
    let k = catalysis_kraus(cfg, rho.truncation())?;
    let branch = rho.apply_local(0, &k)?.apply_local(1, &k)?;
    let (state, probability) = branch.normalize()?;
    Ok(Heralded {
        state,
        probability,
        tail_mass: 0.0,
    })
}

fn check_two_modes(rho: &DensityOperator) -> Result<()> {
    if rho.num_modes() != 2 {
        return Err(Error::ModeCountMismatch {
            expected: 2,
            found: rho.num_modes(),
        });
    }
    Ok(())
}

/// Photon counts at Alice's two detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeraldOutcome {
    pub x: usize,
    pub y: usize,
}

impl HeraldOutcome {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// The single-photon odd outcomes accepted by the protocol.
    pub const ACCEPTED: [HeraldOutcome; 2] = [HeraldOutcome::new(1, 0), HeraldOutcome::new(0, 1)];

    pub fn total(&self) -> usize {
        self.x + self.y
    }
}

/// Bob-side correction: multiplies odd Fock amplitudes by `i^quarter_turns`.
/// `0` is the identity and `2` the photon-number parity flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BobCorrection {
    quarter_turns: u8,
}

impl BobCorrection {
    pub fn new(quarter_turns: u8) -> Self {
        Self {
            quarter_turns: quarter_turns % 4,
        }
    }

    pub fn identity() -> Self {
        Self::new(0)
    }

    pub fn parity_flip() -> Self {
        Self::new(2)
    }

    pub fn quarter_turns(&self) -> u8 {
        self.quarter_turns
    }

    pub fn odd_phase(&self) -> C64 {
        C64::new(0.0, 1.0).powu(self.quarter_turns as u32)
    }

    pub fn apply(&self, rho: &DensityOperator) -> DensityOperator {
        if self.quarter_turns == 0 {
            return rho.clone();
        }
        let phase = self.odd_phase();
        let factor = |n: usize| if n.is_multiple_of(2) { C64::new(1.0, 0.0) } else { phase };
        let m = Array2::from_shape_fn(rho.matrix().raw_dim(), |(i, j)| {
            factor(i) * rho.matrix()[[i, j]] * factor(j).conj()
        });
        DensityOperator::from_parts(rho.truncation(), rho.num_modes(), m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldRecord {
    pub outcome: HeraldOutcome,
    pub probability: f64,
    /// `None` when the outcome has zero probability.
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportResult {
    pub heralds: Vec<HeraldRecord>,
}

impl TeleportResult {
    /// Sum of accepted-herald probabilities.
    pub fn success_probability(&self) -> f64 {
        self.heralds.iter().map(|h| h.probability).sum()
    }

    /// Probability-weighted fidelity over accepted heralds.
    pub fn fidelity(&self) -> f64 {
        let (num, den) = self
            .heralds
            .iter()
            .filter_map(|h| h.fidelity.map(|f| (h.probability * f, h.probability)))
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        num / den
    }
}

/// Photon-number teleportation with a balanced coupler and calibrated Bob
/// corrections. Construct once per truncation and reuse; [`Teleporter::shared`]
/// memoizes instances.
#[derive(Debug)]
pub struct Teleporter {
    trunc: TruncationSpec,
    lift: FockLift,
    corrections: [BobCorrection; 2],
}

impl Teleporter {
    /// Builds the teleporter and calibrates the per-herald correction at the
    /// ideal point (odd ECS resource, matched coherent input, no loss).
    pub fn new(trunc: TruncationSpec) -> Result<Self> {
        let mut tp = Self::with_corrections(trunc, [BobCorrection::identity(); 2])?;
        tp.corrections = tp.calibrate()?;
        Ok(tp)
    }

    pub fn with_corrections(trunc: TruncationSpec, corrections: [BobCorrection; 2]) -> Result<Self> {
        Ok(Self {
            trunc,
            lift: FockLift::new(beamsplitter_unitary(0.5)?),
            corrections,
        })
    }

    /// Process-wide memoized instance for `trunc`.
    pub fn shared(trunc: TruncationSpec) -> Result<Arc<Teleporter>> {
        static CACHE: OnceLock<RwLock<HashMap<TruncationSpec, Arc<Teleporter>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(tp) = cache.read().expect("teleporter cache poisoned").get(&trunc) {
            return Ok(Arc::clone(tp));
        }
        let tp = Arc::new(Teleporter::new(trunc)?);
        let mut guard = cache.write().expect("teleporter cache poisoned");
        Ok(Arc::clone(guard.entry(trunc).or_insert(tp)))
    }

    pub fn truncation(&self) -> TruncationSpec {
        self.trunc
    }

    pub fn corrections(&self) -> [BobCorrection; 2] {
        self.corrections
    }

    fn calibrate(&self) -> Result<[BobCorrection; 2]> {
        let resource = make_ecs(&EcsSpec::odd(DEFAULT_ALPHA)?, self.trunc)?.state.to_density();
        let input = make_coherent(C64::new(DEFAULT_ALPHA, 0.0), self.trunc).state;
        let mut chosen = [BobCorrection::identity(); 2];
        for (slot, outcome) in chosen.iter_mut().zip(HeraldOutcome::ACCEPTED) {
            let (bob, _) = self.conditional_state(&resource, &input, outcome)?.normalize()?;
            let mut best = (f64::NEG_INFINITY, BobCorrection::identity());
            for k in 0..4 {
                let corr = BobCorrection::new(k);
                let f = fidelity(&input, &corr.apply(&bob))?;
                if f > best.0 {
                    best = (f, corr);
                }
            }
            *slot = best.1;
        }
        Ok(chosen)
    }

    fn check_inputs(&self, resource: &DensityOperator, input: &PureState) -> Result<()> {
        self.trunc.check_same(&resource.truncation())?;
        self.trunc.check_same(&input.truncation())?;
        check_two_modes(resource)?;
        if input.num_modes() != 1 {
            return Err(Error::ModeCountMismatch {
                expected: 1,
                found: input.num_modes(),
            });
        }
        let tr = resource.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "teleportation resource trace",
                value: tr,
            });
        }
        let norm = input.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "teleportation input norm",
                value: norm,
            });
        }
        Ok(())
    }

    /// Bob's unnormalized, uncorrected state for one detector outcome; its
    /// trace is the outcome probability.
    pub fn conditional_state(
        &self,
        resource: &DensityOperator,
        input: &PureState,
        outcome: HeraldOutcome,
    ) -> Result<DensityOperator> {
        let d = self.trunc.dim();
        let s = outcome.total();
        let psi = input.amplitudes();
        // phi_j = sum_i <x,y| U |i,j> psi_i  with i + j = s
        let mut phi = vec![C64::new(0.0, 0.0); d];
        for (j, slot) in phi.iter_mut().enumerate() {
            if j > s || s - j >= d {
                continue;
            }
            let i = s - j;
            let a = self.lift.amplitude(&[outcome.x, outcome.y], &[i, j]);
            *slot = a * psi[i];
        }
        let rho = resource.matrix();
        let bob = Array2::from_shape_fn((d, d), |(b, bp)| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, pj) in phi.iter().enumerate() {
                if *pj == C64::new(0.0, 0.0) {
                    continue;
                }
                for (jp, pjp) in phi.iter().enumerate() {
                    if *pjp == C64::new(0.0, 0.0) {
                        continue;
                    }
                    acc += pj * rho[[b * d + j, bp * d + jp]] * pjp.conj();
                }
            }
            acc
        });
        Ok(DensityOperator::from_parts(self.trunc, 1, bob))
    }

    pub fn teleport(&self, resource: &DensityOperator, input: &PureState) -> Result<TeleportResult> {
        self.check_inputs(resource, input)?;
        let mut heralds = Vec::with_capacity(2);
        for (outcome, corr) in HeraldOutcome::ACCEPTED.into_iter().zip(self.corrections) {
            let bob = self.conditional_state(resource, input, outcome)?;
            let probability = bob.trace().clamp(0.0, 1.0);
            let fid = if probability > IMPOSSIBLE_BRANCH {
                let (bob, _) = bob.normalize()?;
                Some(fidelity(input, &corr.apply(&bob))?)
            } else {
                None
            };
            heralds.push(HeraldRecord {
                outcome,
                probability,
                fidelity: fid,
            });
        }
        if heralds.iter().all(|h| h.fidelity.is_none()) {
            return Err(Error::ImpossibleBranch {
                probability: heralds.iter().map(|h| h.probability).sum(),
            });
        }
        Ok(TeleportResult { heralds })
    }

    /// Probability of every detector outcome, including rejected ones.
    pub fn outcome_probabilities(
        &self,
        resource: &DensityOperator,
        input: &PureState,
    ) -> Result<Vec<(HeraldOutcome, f64)>> {
        self.check_inputs(resource, input)?;
        let max_total = 2 * self.trunc.n_max();
        let mut out = Vec::new();
        for s in 0..=max_total {
            for x in 0..=s {
                let outcome = HeraldOutcome::new(x, s - x);
                out.push((outcome, self.conditional_state(resource, input, outcome)?.trace()));
            }
        }
        Ok(out)
    }
}

/// Teleports `input` with the shared teleporter for its truncation.
pub fn teleport(resource: &DensityOperator, input: &PureState) -> Result<TeleportResult> {
    Teleporter::shared(resource.truncation())?.teleport(resource, input)
}

/// Six-state average for cat inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CatAverage {
    /// Unweighted mean over the normalizable states of each state's
    /// probability-weighted herald fidelity.
    pub fidelity: f64,
    /// Mean accepted-herald probability over the same states.
    pub success_probability: f64,
    /// Per-state results, `None` for degenerate inputs.
    pub per_state: Vec<Option<TeleportResult>>,
    /// Indices (into the six-state list) skipped because their norm vanishes.
    pub degenerate: Vec<usize>,
}

pub fn average_cat_fidelity(resource: &DensityOperator, beta: f64) -> Result<CatAverage> {
    let tp = Teleporter::shared(resource.truncation())?;
    average_cat_fidelity_with(&tp, resource, beta)
}

pub fn average_cat_fidelity_with(tp: &Teleporter, resource: &DensityOperator, beta: f64) -> Result<CatAverage> {
    let mut per_state = Vec::with_capacity(6);
    let mut degenerate = Vec::new();
    let (mut f_sum, mut p_sum, mut count) = (0.0, 0.0, 0usize);
    for (idx, spec) in six_cat_states(C64::new(beta, 0.0)).iter().enumerate() {
        if spec.is_degenerate() {
            degenerate.push(idx);
            per_state.push(None);
            continue;
        }
        let input = make_cat(spec, tp.truncation())?.state;
        let res = tp.teleport(resource, &input)?;
        f_sum += res.fidelity();
        p_sum += res.success_probability();
        count += 1;
        per_state.push(Some(res));
    }
    if count == 0 {
        return Err(Error::DegenerateState("no normalizable cat input".into()));
    }
    Ok(CatAverage {
        fidelity: f_sum / count as f64,
        success_probability: p_sum / count as f64,
        per_state,
        degenerate,
    })
}

/// Gaussian baseline: lossy TMSVS resource, same measurement and corrections.
pub fn tmsvs_baseline(sq: &SqueezingSpec, eta: &LossSpec, beta: f64, trunc: TruncationSpec) -> Result<CatAverage> {
    let resource = tmsvs_resource(sq, eta, trunc)?;
    average_cat_fidelity(&resource, beta)
}

/// Normalized TMSVS after equal loss on both arms.
pub fn tmsvs_resource(sq: &SqueezingSpec, eta: &LossSpec, trunc: TruncationSpec) -> Result<DensityOperator> {
    let tmsvs = make_tmsvs(sq, trunc)?.state.to_density();
    distribute(&tmsvs, eta, eta)
}

/// Teleportation of a coherent state `|gamma>`.
pub fn coherent_teleportation(resource: &DensityOperator, gamma: C64) -> Result<TeleportResult> {
    let input = make_coherent(gamma, resource.truncation()).state;
    teleport(resource, &input)
}

/// Every stage of the non-Gaussian pipeline at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub generation: GenerationConfig,
    pub eta_a: LossSpec,
    pub eta_c: LossSpec,
    pub purification: Option<PurificationConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResource {
    pub generated: Heralded,
    /// Normalized state after distribution.
    pub lossy: DensityOperator,
    pub purified: Option<Heralded>,
}

impl PipelineResource {
    /// The state handed to the teleportation stage.
    pub fn resource(&self) -> &DensityOperator {
        self.purified.as_ref().map(|h| &h.state).unwrap_or(&self.lossy)
    }

    /// Probability that the purification herald fired (1 without purification).
    pub fn purification_probability(&self) -> f64 {
        self.purified.as_ref().map(|h| h.probability).unwrap_or(1.0)
    }
}

pub fn build_resource(cfg: &PipelineConfig, trunc: TruncationSpec) -> Result<PipelineResource> {
    let generated = generate_quasi_ecs(&cfg.generation, trunc)?;
    let lossy = distribute(&generated.state, &cfg.eta_a, &cfg.eta_c)?;
    let purified = match &cfg.purification {
        Some(p) => Some(purify(&lossy, p)?),
        None => None,
    };
    Ok(PipelineResource {
        generated,
        lossy,
        purified,
    })
}
