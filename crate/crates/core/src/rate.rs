//! Rates and the per-sample design objective.
//!
//! The interference-plus-noise term uses the closed-form expectations
//! `g_k(v) = ‖v^H Ḡ_k‖² / (M_k N_k) + α_kr α_r0 M_r N_r (1 - τ_k) + α_k0`,
//! and the serving term `g_0 = |(v^H Ĝ + ĥ^H) w|² + δ₂² + M_r N_r δ₁²`.
//! [`upper_bound_rate`] is the Jensen bound with the MRT beamformer plugged
//! in; [`ergodic_rate_mc`] averages the instantaneous rate over physical
//! channel draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{equivalent_channel, robust_beamformer, Beamformer};
use crate::channel::{sample_physical_channels, ChannelStatistics, CsiSample, GaussianCsiModel};
use crate::error::{Error, Result};
use crate::linalg::{mean_and_stderr, norm_sqr, CMatrix, CVector, C64};
use crate::rng::StreamFactory;

const UNIT_MODULUS_TOL: f64 = 1e-9;
const RELAXED_TOL: f64 = 1e-12;

/// Which constraint a phase-shift vector satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseForm {
    /// `|v_n| = 1`, deployable on the IRS.
    Deployment,
    /// `|v_n| ≤ 1`, the solver's convex relaxation.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftVector {
    values: CVector,
    form: PhaseForm,
}

impl PhaseShiftVector {
    pub fn deployment(values: CVector) -> Result<Self> {
        if let Some((n, z)) = values
            .iter()
            .enumerate()
            .find(|(_, z)| (z.norm() - 1.0).abs() > UNIT_MODULUS_TOL)
        {
            return Err(Error::Contract(format!(
                "phase shift {n} has modulus {}, expected 1",
                z.norm()
            )));
        }
        Ok(Self {
            values,
            form: PhaseForm::Deployment,
        })
    }

    pub fn relaxed(values: CVector) -> Result<Self> {
        if let Some((n, z)) = values
            .iter()
            .enumerate()
            .find(|(_, z)| z.norm() > 1.0 + RELAXED_TOL)
        {
            return Err(Error::Contract(format!(
                "phase shift {n} has modulus {} > 1",
                z.norm()
            )));
        }
        Ok(Self {
            values,
            form: PhaseForm::Relaxed,
        })
    }

    pub fn ones(len: usize) -> Self {
        Self {
            values: CVector::from_element(len, C64::new(1.0, 0.0)),
            form: PhaseForm::Deployment,
        }
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            values: CVector::from_iterator(phases.len(), phases.iter().map(|&p| C64::from_polar(1.0, p))),
            form: PhaseForm::Deployment,
        }
    }

    pub fn values(&self) -> &CVector {
        &self.values
    }

    pub fn into_values(self) -> CVector {
        self.values
    }

    pub fn form(&self) -> PhaseForm {
        self.form
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Phases in `(-π, π]`.
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.arg()).collect()
    }
}

/// Outcome of evaluating one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Jensen upper bound, bit/s/Hz.
    pub upper_bound: f64,
    /// Monte Carlo ergodic rate, bit/s/Hz.
    pub mc_rate: f64,
    pub mc_stderr: f64,
    pub n_samples: usize,
    /// `P₀ E[g₀]`, W.
    pub signal_power: f64,
    /// `P_k g_k` per interferer, W.
    pub interference_powers: Vec<f64>,
    pub noise_power: f64,
    /// Per-sample instantaneous rates, for paired comparisons.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

fn check_len(v: &CVector, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension {
            context: "phase-shift vector",
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// Expected serving power for a given beamformer, averaged over the errors.
pub fn g0(
    v: &PhaseShiftVector,
    w: &Beamformer,
    sample: &CsiSample,
    cascaded_error_variance: f64,
    direct_error_variance: f64,
) -> Result<f64> {
    sample.check_dims(v.len(), w.as_vector().len())?;
    let eq = equivalent_channel(v.values(), sample);
    let n_irs = v.len() as f64;
    Ok(eq.dotc(w.as_vector()).norm_sqr() + direct_error_variance + n_irs * cascaded_error_variance)
}

/// `‖v^H Ḡ_k‖² / (M_k N_k) + α_kr α_r0 M_r N_r (1 - τ_k) + α_k0`.
fn gk_unchecked(v: &CVector, stats: &ChannelStatistics, k: usize) -> f64 {
    let link = &stats.links[k];
    let los = norm_sqr(&link.cascaded_los.ad_mul(v)) / link.antennas as f64;
    los + stats.cascaded_nlos_variance(k) * stats.irs_elements as f64 + link.direct_gain
}

/// Expected received power from interferer `k ≥ 1` under MRT towards its user.
pub fn gk(v: &PhaseShiftVector, stats: &ChannelStatistics, k: usize) -> Result<f64> {
    if k == 0 || k >= stats.links.len() {
        return Err(Error::Contract(format!(
            "interferer index must be in 1..={}, got {k}",
            stats.links.len() - 1
        )));
    }
    if v.form() != PhaseForm::Deployment {
        return Err(Error::Contract("g_k expects deployment-form phase shifts".into()));
    }
    check_len(v.values(), stats.irs_elements)?;
    Ok(gk_unchecked(v.values(), stats, k))
}

/// `Σ_k P_k g_k(v) + σ²`.
pub fn sinr_denominator(v: &PhaseShiftVector, stats: &ChannelStatistics) -> Result<f64> {
    check_len(v.values(), stats.irs_elements)?;
    Ok(interference_terms(v.values(), stats).iter().sum::<f64>() + stats.noise_power)
}

fn interference_terms(v: &CVector, stats: &ChannelStatistics) -> Vec<f64> {
    (1..stats.links.len())
        .map(|k| stats.links[k].power * gk_unchecked(v, stats, k))
        .collect()
}

/// `δ₂² + M_r N_r δ₁²` for the given error variances.
fn error_offset(n_irs: usize, cascaded_error_variance: f64, direct_error_variance: f64) -> f64 {
    direct_error_variance + n_irs as f64 * cascaded_error_variance
}

/// Monte Carlo estimate of the Jensen upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBoundEstimate {
    pub rate: f64,
    /// Sample mean of `‖Ĝ^H v + ĥ‖²`.
    pub signal_mean: f64,
    pub signal_stderr: f64,
    pub n_samples: usize,
}

/// Jensen bound with `E‖Ĝ^H v + ĥ‖²` estimated from `n_samples` draws of the
/// Gaussian CSI model.
pub fn upper_bound_rate<R: rand::Rng + ?Sized>(
    v: &PhaseShiftVector,
    stats: &ChannelStatistics,
    n_samples: usize,
    rng: &mut R,
) -> Result<UpperBoundEstimate> {
    if n_samples == 0 {
        return Err(Error::Contract("n_samples must be at least 1".into()));
    }
    check_len(v.values(), stats.irs_elements)?;
    let model = GaussianCsiModel::from_statistics(stats);
    let powers: Vec<f64> = (0..n_samples)
        .map(|_| norm_sqr(&equivalent_channel(v.values(), &model.sample(rng, false))))
        .collect();
    let (signal_mean, signal_stderr) = mean_and_stderr(&powers);
    let rate = bound_from_signal(v, stats, signal_mean)?;
    Ok(UpperBoundEstimate {
        rate,
        signal_mean,
        signal_stderr,
        n_samples,
    })
}

fn bound_from_signal(v: &PhaseShiftVector, stats: &ChannelStatistics, signal: f64) -> Result<f64> {
    let p0 = stats.serving().power;
    let g0 = signal
        + error_offset(
            stats.irs_elements,
            stats.cascaded_error_variance,
            stats.direct_error_variance,
        );
    Ok((1.0 + p0 * g0 / sinr_denominator(v, stats)?).log2())
}

/// `E‖Ĝ^H v + ĥ‖² = ‖Ḡ^H v‖² + M₀N₀ (‖v‖² (σ_G² - δ₁²) + σ_h² - δ₂²)`.
pub fn expected_signal_power(v: &PhaseShiftVector, stats: &ChannelStatistics) -> f64 {
    GaussianCsiModel::from_statistics(stats).expected_signal_power(v.values())
}

/// Jensen bound evaluated in closed form.
pub fn upper_bound_rate_closed_form(v: &PhaseShiftVector, stats: &ChannelStatistics) -> Result<f64> {
    check_len(v.values(), stats.irs_elements)?;
    bound_from_signal(v, stats, expected_signal_power(v, stats))
}

/// Maps estimated CSI to a unit-norm beamformer for fixed phase shifts.
pub trait BeamformingPolicy: Sync {
    fn beamformer(&self, v: &PhaseShiftVector, sample: &CsiSample) -> Result<Beamformer>;
}

/// The closed-form MRT on the estimated equivalent channel.
#[derive(Debug, Clone, Copy, Default)]
pub struct RobustMrt;

impl BeamformingPolicy for RobustMrt {
    fn beamformer(&self, v: &PhaseShiftVector, sample: &CsiSample) -> Result<Beamformer> {
        robust_beamformer(v, sample)
    }
}

impl<F> BeamformingPolicy for F
where
    F: Fn(&PhaseShiftVector, &CsiSample) -> Result<Beamformer> + Sync,
{
    fn beamformer(&self, v: &PhaseShiftVector, sample: &CsiSample) -> Result<Beamformer> {
        self(v, sample)
    }
}

/// Instantaneous rates of `n_samples` physical slots. Slot `i` uses
/// `phase_sets[i % len]`, so several configurations share one sample budget.
pub fn ergodic_rate_samples<P: BeamformingPolicy>(
    phase_sets: &[PhaseShiftVector],
    policy: &P,
    stats: &ChannelStatistics,
    n_samples: usize,
    streams: &StreamFactory,
) -> Result<Vec<f64>> {
    if phase_sets.is_empty() {
        return Err(Error::Contract("at least one phase-shift vector is required".into()));
    }
    let mut denominators = Vec::with_capacity(phase_sets.len());
    for v in phase_sets {
        if v.form() != PhaseForm::Deployment {
            return Err(Error::Contract("evaluation expects deployment-form phase shifts".into()));
        }
        denominators.push(sinr_denominator(v, stats)?);
    }
    let p0 = stats.serving().power;
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let j = i % phase_sets.len();
            let v = &phase_sets[j];
            let sample = sample_physical_channels(stats, streams, i as u64, false);
            let w = policy.beamformer(v, &sample)?;
            let true_eq: CVector =
                sample.true_cascaded().ad_mul(v.values()) + sample.true_direct();
            let signal = true_eq.dotc(w.as_vector()).norm_sqr();
            Ok((1.0 + p0 * signal / denominators[j]).log2())
        })
        .collect()
}

/// Monte Carlo ergodic rate of one or more phase configurations, alongside the
/// closed-form upper bound (averaged over the configurations).
pub fn ergodic_rate_report<P: BeamformingPolicy>(
    phase_sets: &[PhaseShiftVector],
    policy: &P,
    stats: &ChannelStatistics,
    n_samples: usize,
    streams: &StreamFactory,
) -> Result<RateReport> {
    let samples = ergodic_rate_samples(phase_sets, policy, stats, n_samples, streams)?;
    let (mc_rate, mc_stderr) = mean_and_stderr(&samples);
    let m = phase_sets.len() as f64;
    let mut upper_bound = 0.0;
    let mut signal_power = 0.0;
    let mut interference_powers = vec![0.0; stats.links.len() - 1];
    let offset = error_offset(
        stats.irs_elements,
        stats.cascaded_error_variance,
        stats.direct_error_variance,
    );
    for v in phase_sets {
        upper_bound += upper_bound_rate_closed_form(v, stats)? / m;
        signal_power += stats.serving().power * (expected_signal_power(v, stats) + offset) / m;
        for (acc, p) in interference_powers
            .iter_mut()
            .zip(interference_terms(v.values(), stats))
        {
            *acc += p / m;
        }
    }
    Ok(RateReport {
        upper_bound,
        mc_rate,
        mc_stderr,
        n_samples,
        signal_power,
        interference_powers,
        noise_power: stats.noise_power,
        samples,
    })
}

/// Monte Carlo ergodic rate of a single design.
pub fn ergodic_rate_mc<P: BeamformingPolicy>(
    v: &PhaseShiftVector,
    policy: &P,
    stats: &ChannelStatistics,
    n_samples: usize,
    streams: &StreamFactory,
) -> Result<RateReport> {
    ergodic_rate_report(std::slice::from_ref(v), policy, stats, n_samples, streams)
}

/// The design objective `γ_ub(v; Ĥ)`, a ratio of Hermitian quadratic forms:
///
/// ```text
///            P₀ (‖Ĝ^H v + ĥ‖² + δ₂² + M_r N_r δ₁²)
/// γ_ub = ----------------------------------------------------
///        Σ_k (P_k / M_k N_k) ‖Ḡ_k^H v‖² + Σ_k P_k c_k + σ²
/// ```
///
/// The error and NLoS offsets are constants even for relaxed `v`.
#[derive(Debug, Clone)]
pub struct DesignObjective {
    pub p0: f64,
    pub irs_elements: usize,
    /// `δ₂² + M_r N_r δ₁²` as assumed by the designer.
    pub error_offset: f64,
    /// `(P_k / M_k N_k, Ḡ_k)` for each interferer included in the design.
    pub interference: Vec<(f64, CMatrix)>,
    pub denominator_offset: f64,
}

/// Denominator value and its conjugate Wirtinger gradient `∂D/∂v*`.
#[derive(Debug, Clone)]
pub struct Denominator {
    pub value: f64,
    pub gradient: CVector,
}

impl DesignObjective {
    /// Objective with designer-side error variances and optional interference.
    pub fn new(
        stats: &ChannelStatistics,
        cascaded_error_variance: f64,
        direct_error_variance: f64,
        with_interference: bool,
    ) -> Self {
        let n_irs = stats.irs_elements;
        let mut interference = Vec::new();
        let mut denominator_offset = stats.noise_power;
        if with_interference {
            for k in 1..stats.links.len() {
                let link = &stats.links[k];
                interference.push((link.power / link.antennas as f64, link.cascaded_los.clone()));
                denominator_offset += link.power
                    * (stats.cascaded_nlos_variance(k) * n_irs as f64 + link.direct_gain);
            }
        }
        Self {
            p0: stats.serving().power,
            irs_elements: n_irs,
            error_offset: error_offset(n_irs, cascaded_error_variance, direct_error_variance),
            interference,
            denominator_offset,
        }
    }

    /// The robust, interference-aware objective of the scenario.
    pub fn from_statistics(stats: &ChannelStatistics) -> Self {
        Self::new(
            stats,
            stats.cascaded_error_variance,
            stats.direct_error_variance,
            true,
        )
    }

    pub fn denominator(&self, v: &CVector) -> Denominator {
        let mut value = self.denominator_offset;
        let mut gradient = CVector::zeros(v.len());
        for (weight, g) in &self.interference {
            let proj = g.ad_mul(v);
            value += weight * norm_sqr(&proj);
            gradient += (g * proj) * C64::from(*weight);
        }
        Denominator { value, gradient }
    }

    /// `γ_ub(v; sample)`.
    pub fn value(&self, v: &CVector, sample: &CsiSample) -> f64 {
        let eq = equivalent_channel(v, sample);
        self.p0 * (norm_sqr(&eq) + self.error_offset) / self.denominator(v).value
    }

    /// `(γ_ub, ∂γ_ub/∂v*)` given a precomputed denominator.
    ///
    /// With `N = ‖Ĝ^H v + ĥ‖² + e` and `D` as above,
    /// `∂γ/∂v* = P₀ (Ĝ(Ĝ^H v + ĥ) D - N ∂D/∂v*) / D²`.
    pub fn value_and_ascent(
        &self,
        v: &CVector,
        sample: &CsiSample,
        denom: &Denominator,
    ) -> (f64, CVector) {
        let eq = equivalent_channel(v, sample);
        let num = norm_sqr(&eq) + self.error_offset;
        let d = denom.value;
        let grad_num = &sample.est_cascaded * eq;
        let ascent = (grad_num * C64::from(d) - &denom.gradient * C64::from(num))
            * C64::from(self.p0 / (d * d));
        (self.p0 * num / d, ascent)
    }

    /// Wirtinger derivative `∂γ_ub/∂v_n`, so that
    /// `γ(v + dv) ≈ γ(v) + 2 Re Σ_n (∂γ/∂v_n) dv_n`.
    pub fn gradient(&self, v: &CVector, sample: &CsiSample) -> CVector {
        let denom = self.denominator(v);
        self.value_and_ascent(v, sample, &denom).1.map(|z| z.conj())
    }
}

/// `γ_ub` for the scenario's own objective.
pub fn gamma_ub(v: &PhaseShiftVector, sample: &CsiSample, stats: &ChannelStatistics) -> Result<f64> {
    sample.check_dims(stats.irs_elements, stats.serving_antennas())?;
    check_len(v.values(), stats.irs_elements)?;
    Ok(DesignObjective::from_statistics(stats).value(v.values(), sample))
}

/// `∂γ_ub/∂v_n` for the scenario's own objective.
pub fn gamma_ub_gradient(
    v: &PhaseShiftVector,
    sample: &CsiSample,
    stats: &ChannelStatistics,
) -> Result<CVector> {
    sample.check_dims(stats.irs_elements, stats.serving_antennas())?;
    check_len(v.values(), stats.irs_elements)?;
    Ok(DesignObjective::from_statistics(stats).gradient(v.values(), sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::mrt_equivalent_beamformer;
    use crate::channel::{build_statistics, sample_estimated_csi};
    use crate::rng::Purpose;
    use crate::scenario::fig3_preset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig3_stats() -> ChannelStatistics {
        build_statistics(&fig3_preset()).unwrap()
    }

    #[test]
    fn phase_vector_forms() {
        let v = PhaseShiftVector::from_phases(&[0.0, 1.0]);
        assert_eq!(v.form(), PhaseForm::Deployment);
        assert!(PhaseShiftVector::deployment(CVector::from_element(2, C64::new(0.5, 0.0))).is_err());
        let r = PhaseShiftVector::relaxed(CVector::from_element(2, C64::new(0.5, 0.0))).unwrap();
        assert_eq!(r.form(), PhaseForm::Relaxed);
        assert!(PhaseShiftVector::relaxed(CVector::from_element(2, C64::new(1.5, 0.0))).is_err());
    }

    #[test]
    fn g0_error_terms() {
        let stats = fig3_stats();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_estimated_csi(&stats, &mut rng, false);
        let v = PhaseShiftVector::ones(64);
        let w = mrt_equivalent_beamformer(&v, &s).unwrap();
        let eq = norm_sqr(&equivalent_channel(v.values(), &s));
        let clean = g0(&v, &w, &s, 0.0, 0.0).unwrap();
        assert!((clean - eq).abs() <= 1e-12 * eq);

        // w orthogonal to the equivalent channel keeps only the error floor
        let e = equivalent_channel(v.values(), &s);
        let mut u = CVector::zeros(16);
        u[0] = -e[1].conj();
        u[1] = e[0].conj();
        let u = Beamformer::normalized(u).unwrap();
        let floor = g0(&v, &u, &s, 2e-20, 3e-14).unwrap();
        assert!((floor - (3e-14 + 64.0 * 2e-20)).abs() < 1e-24);
    }

    #[test]
    fn gk_contract() {
        let stats = fig3_stats();
        let v = PhaseShiftVector::ones(64);
        assert!(matches!(gk(&v, &stats, 0), Err(Error::Contract(_))));
        assert!(gk(&v, &stats, 1).unwrap() > 0.0);
        let relaxed = PhaseShiftVector::relaxed(CVector::from_element(64, C64::new(0.5, 0.0))).unwrap();
        assert!(gk(&relaxed, &stats, 1).is_err());
    }

    #[test]
    fn gk_limiting_cases() {
        let mut cfg = fig3_preset();
        cfg.irs_user_rician = 0.0;
        let stats = build_statistics(&cfg).unwrap();
        let v = PhaseShiftVector::ones(64);
        let l = &stats.links[1];
        let expected = l.irs_gain * stats.irs_user_gain * 64.0 + l.direct_gain;
        assert!((gk(&v, &stats, 1).unwrap() / expected - 1.0).abs() < 1e-12);

        let mut cfg = fig3_preset();
        cfg.irs_user_rician = f64::INFINITY;
        cfg.base_stations[1].irs_rician = f64::INFINITY;
        let mut stats = build_statistics(&cfg).unwrap();
        stats.links[1].direct_gain = 0.0;
        let los = norm_sqr(&stats.links[1].cascaded_los.ad_mul(v.values())) / 16.0;
        assert!((gk(&v, &stats, 1).unwrap() / los - 1.0).abs() < 1e-12);
    }

    #[test]
    fn denominator_without_interferers_is_noise() {
        let mut cfg = fig3_preset();
        cfg.base_stations.truncate(1);
        let stats = build_statistics(&cfg).unwrap();
        let v = PhaseShiftVector::ones(64);
        assert_eq!(sinr_denominator(&v, &stats).unwrap(), stats.noise_power);
    }

    #[test]
    fn denominator_increases_with_power() {
        let v = PhaseShiftVector::ones(64);
        let base = sinr_denominator(&v, &fig3_stats()).unwrap();
        let mut cfg = fig3_preset();
        cfg.base_stations[2].power *= 1.5;
        let more = sinr_denominator(&v, &build_statistics(&cfg).unwrap()).unwrap();
        assert!(more > base);
    }

    #[test]
    fn bound_monotone_in_serving_power() {
        let v = PhaseShiftVector::ones(64);
        let lo = upper_bound_rate_closed_form(&v, &fig3_stats()).unwrap();
        let mut cfg = fig3_preset();
        cfg.base_stations[0].power *= 2.0;
        let hi = upper_bound_rate_closed_form(&v, &build_statistics(&cfg).unwrap()).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn mc_bound_matches_closed_form() {
        let stats = fig3_stats();
        let v = PhaseShiftVector::from_phases(&(0..64).map(|i| 0.3 * i as f64).collect::<Vec<_>>());
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let est = upper_bound_rate(&v, &stats, 10_000, &mut rng).unwrap();
        let exact = expected_signal_power(&v, &stats);
        assert!((est.signal_mean - exact).abs() < 3.0 * est.signal_stderr);
    }

    #[test]
    fn deterministic_channel_has_zero_variance() {
        let mut cfg = fig3_preset();
        cfg.csi_error.cascaded = 1.0;
        cfg.csi_error.direct = 1.0;
        let stats = build_statistics(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = upper_bound_rate(&PhaseShiftVector::ones(64), &stats, 50, &mut rng).unwrap();
        assert_eq!(est.signal_stderr, 0.0);
    }

    #[test]
    fn gamma_matches_g0_over_denominator() {
        let stats = fig3_stats();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = sample_estimated_csi(&stats, &mut rng, false);
        let v = PhaseShiftVector::from_phases(&(0..64).map(|i| (i * i) as f64).collect::<Vec<_>>());
        let w = mrt_equivalent_beamformer(&v, &s).unwrap();
        let g = g0(&v, &w, &s, stats.cascaded_error_variance, stats.direct_error_variance).unwrap();
        let expected = stats.serving().power * g / sinr_denominator(&v, &stats).unwrap();
        let got = gamma_ub(&v, &s, &stats).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12);
        assert!(got > 0.0);
    }

    #[test]
    fn scalar_gradient_at_origin() {
        // A = ĝĝ^H real, b = ĝ ĥ real, constant denominator
        let s = CsiSample::from_estimate(
            CMatrix::from_element(1, 1, C64::new(2.0, 0.0)),
            CVector::from_element(1, C64::new(3.0, 0.0)),
        );
        let obj = DesignObjective {
            p0: 1.5,
            irs_elements: 1,
            error_offset: 0.0,
            interference: Vec::new(),
            denominator_offset: 4.0,
        };
        let g = obj.gradient(&CVector::zeros(1), &s);
        let b = 2.0 * 3.0;
        assert!((g[0] - C64::new(1.5 * b / 4.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mc_rate_reproducible() {
        let stats = fig3_stats();
        let v = PhaseShiftVector::ones(64);
        let streams = StreamFactory::new(5, Purpose::Evaluation);
        let a = ergodic_rate_mc(&v, &RobustMrt, &stats, 200, &streams).unwrap();
        let b = ergodic_rate_mc(&v, &RobustMrt, &stats, 200, &streams).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples, b.samples);
        assert!(a.mc_stderr > 0.0);
        assert_eq!(a.interference_powers.len(), 2);
    }

    #[test]
    fn report_serializes_without_samples() {
        let stats = fig3_stats();
        let streams = StreamFactory::new(5, Purpose::Evaluation);
        let r = ergodic_rate_mc(&PhaseShiftVector::ones(64), &RobustMrt, &stats, 20, &streams).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("samples").is_none());
        assert!(json["mc_rate"].as_f64().unwrap() > 0.0);
    }
}
