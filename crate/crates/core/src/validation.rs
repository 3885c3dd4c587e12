//! Independent numerical oracles for the closed forms.
//!
//! Each check recomputes a quantity by brute force (sampling, finite
//! differences or exhaustive search) without going through the closed form
//! it is compared against.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::{equivalent_channel, mrt_equivalent_beamformer, Beamformer};
use crate::channel::{
    build_statistics, sample_physical_channels, Angles, BaseStation, ChannelStatistics,
    CsiErrorConfig, CsiSample, ErrorUnits, GaussianCsiModel, Grid, Point, ScenarioConfig,
};
use crate::error::Result;
use crate::linalg::{gaussian_matrix, gaussian_vector, mean_and_stderr, norm_sqr, CVector, C64};
use crate::rate::{g0, gk, DesignObjective, PhaseShiftVector};
use crate::rng::{Component, Purpose, StreamFactory};
use crate::ssca::SscaState;

/// Small random multi-cell scenario with strong NLoS and LoS parts.
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R) -> ScenarioConfig {
    let angles = |rng: &mut R| Angles::new(rng.random_range(0.0..TAU), rng.random_range(0.0..PI));
    let grid = |rng: &mut R| Grid::new(rng.random_range(1..=3), rng.random_range(1..=3));
    let user = Point::new(rng.random_range(60.0..120.0), rng.random_range(0.0..40.0));
    let irs = Point::new(rng.random_range(20.0..80.0), rng.random_range(5.0..20.0));
    let n_bs = rng.random_range(1..=3);
    let base_stations = (0..n_bs)
        .map(|k| {
            let position = if k == 0 {
                Point::new(0.0, 0.0)
            } else {
                let r = rng.random_range(100.0..300.0);
                let phi = rng.random_range(0.0..TAU);
                Point::new(user.x + r * phi.cos(), user.y + r * phi.sin())
            };
            BaseStation {
                position,
                grid: grid(rng),
                power: rng.random_range(0.1..2.0),
                direct_exponent: rng.random_range(2.5..3.7),
                irs_exponent: rng.random_range(2.0..2.5),
                irs_rician: rng.random_range(0.0..10.0),
                departure: angles(rng),
                arrival: angles(rng),
                own_user_distance: rng.random_range(50.0..150.0),
                own_user_exponent: 3.7,
            }
        })
        .collect();
    ScenarioConfig {
        base_stations,
        user,
        irs,
        irs_grid: grid(rng),
        irs_user_exponent: rng.random_range(2.0..3.0),
        irs_user_rician: rng.random_range(0.0..10.0),
        irs_user_angles: angles(rng),
        element_spacing: 0.5,
        noise_power: 1e-12,
        csi_error: CsiErrorConfig {
            cascaded: rng.random_range(0.0..0.9),
            direct: rng.random_range(0.0..0.9),
            units: ErrorUnits::Normalized,
        },
    }
}

/// Random unit-modulus phase shifts.
pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PhaseShiftVector {
    let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    PhaseShiftVector::from_phases(&p)
}

/// Uniform point of the product of unit disks.
pub fn random_disk_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| {
        C64::from_polar(rng.random::<f64>().sqrt(), rng.random_range(0.0..TAU))
    })
}

/// Closed form against a sampled expectation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Comparison {
    pub closed_form: f64,
    pub sampled: f64,
    pub stderr: f64,
}

impl Comparison {
    pub fn relative_error(&self) -> f64 {
        (self.sampled - self.closed_form).abs() / self.closed_form.abs()
    }
}

/// `E|((Ĝ+ΔG)^H v + ĥ + Δh)^H w|²` over fresh error draws, against `g0`.
pub fn g0_oracle(
    v: &PhaseShiftVector,
    w: &Beamformer,
    sample: &CsiSample,
    stats: &ChannelStatistics,
    draws: usize,
    streams: &StreamFactory,
) -> Result<Comparison> {
    let eg = stats.cascaded_error_variance;
    let eh = stats.direct_error_variance;
    let closed_form = g0(v, w, sample, eg, eh)?;
    let (rows, cols) = sample.est_cascaded.shape();
    let eq = equivalent_channel(v.values(), sample);
    let powers: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(i, Component::CascadedError);
            let dg = gaussian_matrix(&mut rng, rows, cols, eg);
            let dh = gaussian_vector(&mut rng, cols, eh);
            let x = &eq + dg.ad_mul(v.values()) + dh;
            x.dotc(w.as_vector()).norm_sqr()
        })
        .collect();
    let (sampled, stderr) = mean_and_stderr(&powers);
    Ok(Comparison {
        closed_form,
        sampled,
        stderr,
    })
}

/// `E|(G_k^H v + h_k0)^H w_k|²` with `w_k` the MRT towards BS `k`'s own user,
/// sampled from the physical fading, against `g_k`.
pub fn gk_oracle(
    v: &PhaseShiftVector,
    stats: &ChannelStatistics,
    k: usize,
    draws: usize,
    streams: &StreamFactory,
) -> Result<Comparison> {
    let closed_form = gk(v, stats, k)?;
    let powers: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let s = sample_physical_channels(stats, streams, i, true);
            let ch = &s.interference.as_ref().expect("interference drawn")[k - 1];
            let w = ch.own_user.unscale(norm_sqr(&ch.own_user).sqrt());
            let x = ch.cascaded.ad_mul(v.values()) + &ch.direct;
            x.dotc(&w).norm_sqr()
        })
        .collect();
    let (sampled, stderr) = mean_and_stderr(&powers);
    Ok(Comparison {
        closed_form,
        sampled,
        stderr,
    })
}

/// Central-difference estimate of `∂γ/∂v_n = (∂γ/∂x_n - j ∂γ/∂y_n) / 2`.
pub fn finite_difference_gradient(
    objective: &DesignObjective,
    v: &CVector,
    sample: &CsiSample,
    step: f64,
) -> CVector {
    let f = |u: &CVector| objective.value(u, sample);
    CVector::from_fn(v.len(), |n, _| {
        let mut partial = [0.0; 2];
        for (slot, dir) in partial.iter_mut().zip([C64::new(step, 0.0), C64::new(0.0, step)]) {
            let mut plus = v.clone();
            let mut minus = v.clone();
            plus[n] += dir;
            minus[n] -= dir;
            *slot = (f(&plus) - f(&minus)) / (2.0 * step);
        }
        C64::new(partial[0], -partial[1]) * 0.5
    })
}

/// `‖∇_analytic - ∇_fd‖ / ‖∇_analytic‖`.
pub fn gradient_relative_error(
    objective: &DesignObjective,
    v: &CVector,
    sample: &CsiSample,
    step: f64,
) -> f64 {
    let analytic = objective.gradient(v, sample);
    let numeric = finite_difference_gradient(objective, v, sample, step);
    norm_sqr(&(&analytic - &numeric)).sqrt() / norm_sqr(&analytic).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BeamformerCheck {
    /// `|(Ĝ^H v + ĥ)^H w|²` for the closed-form `w`.
    pub closed_form: f64,
    /// `‖Ĝ^H v + ĥ‖²`.
    pub bound: f64,
    pub best_random: f64,
}

impl BeamformerCheck {
    pub fn equality_error(&self) -> f64 {
        (self.closed_form - self.bound).abs() / self.bound
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.equality_error() <= tol && self.best_random <= self.closed_form * (1.0 + tol)
    }
}

pub fn beamformer_check<R: Rng + ?Sized>(
    v: &PhaseShiftVector,
    sample: &CsiSample,
    trials: usize,
    rng: &mut R,
) -> Result<BeamformerCheck> {
    let eq = equivalent_channel(v.values(), sample);
    let w = mrt_equivalent_beamformer(v, sample)?;
    let closed_form = eq.dotc(w.as_vector()).norm_sqr();
    let mut best_random: f64 = 0.0;
    for _ in 0..trials {
        let u = Beamformer::normalized(gaussian_vector(rng, eq.len(), 1.0))?;
        best_random = best_random.max(eq.dotc(u.as_vector()).norm_sqr());
    }
    Ok(BeamformerCheck {
        closed_form,
        bound: norm_sqr(&eq),
        best_random,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurrogateCheck {
    pub at_solution: f64,
    pub best_random: f64,
    /// `max_n ||v̄_n| - 1|`.
    pub modulus_error: f64,
}

impl SurrogateCheck {
    pub fn passes(&self) -> bool {
        let slack = 1e-12 * self.at_solution.abs().max(self.best_random.abs());
        self.best_random <= self.at_solution + slack && self.modulus_error <= 1e-12
    }
}

/// Compares `f^(t)(v̄)` with `f^(t)` at random points of `|u_n| ≤ 1`.
pub fn surrogate_check<R: Rng + ?Sized>(
    state: &SscaState,
    tau: f64,
    trials: usize,
    rng: &mut R,
) -> SurrogateCheck {
    let v_bar = state.solve_surrogate(tau);
    let best_random = (0..trials)
        .map(|_| state.surrogate_value(tau, &random_disk_point(rng, v_bar.len())))
        .fold(f64::NEG_INFINITY, f64::max);
    SurrogateCheck {
        at_solution: state.surrogate_value(tau, &v_bar),
        best_random,
        modulus_error: v_bar.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max),
    }
}

/// Exhaustive search of `γ` over `θ` on `points` equally spaced phases for a
/// single-element IRS. Returns `(θ*, γ(θ*))`.
pub fn scalar_grid_search(objective: &DesignObjective, sample: &CsiSample, points: usize) -> (f64, f64) {
    (0..points)
        .map(|i| {
            let theta = TAU * i as f64 / points as f64;
            let v = CVector::from_element(1, C64::from_polar(1.0, theta));
            (theta, objective.value(&v, sample))
        })
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Wrapped phase difference in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// One line of the oracle report.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    /// Worst observed error.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

/// Runs the closed-form oracles on `scenarios` random scenarios.
pub fn validate_oracles(seed: u64, scenarios: usize, draws: usize) -> Result<Vec<OracleCheck>> {
    let mut rng = StreamFactory::new(seed, Purpose::Validation).sequential();
    let mut g0_worst: f64 = 0.0;
    let mut gk_worst: f64 = 0.0;
    let mut grad_worst: f64 = 0.0;
    let mut bf_worst: f64 = 0.0;
    let mut sur_worst: f64 = 0.0;
    for i in 0..scenarios {
        let stats = build_statistics(&random_scenario(&mut rng))?;
        let streams = StreamFactory::new(seed.wrapping_add(i as u64), Purpose::Validation);
        let v = random_phases(&mut rng, stats.irs_elements);
        let sample = GaussianCsiModel::from_statistics(&stats).sample(&mut rng, false);
        let w = mrt_equivalent_beamformer(&v, &sample)?;
        g0_worst = g0_worst.max(g0_oracle(&v, &w, &sample, &stats, draws, &streams)?.relative_error());
        for k in 1..stats.links.len() {
            gk_worst = gk_worst.max(gk_oracle(&v, &stats, k, draws, &streams)?.relative_error());
        }

        let objective = DesignObjective::from_statistics(&stats);
        let u = random_disk_point(&mut rng, stats.irs_elements);
        grad_worst = grad_worst.max(gradient_relative_error(&objective, &u, &sample, 1e-5));

        let bf = beamformer_check(&v, &sample, 1000, &mut rng)?;
        let bf_err = bf
            .equality_error()
            .max((bf.best_random - bf.closed_form).max(0.0) / bf.closed_form);
        bf_worst = bf_worst.max(bf_err);

        let mut state = SscaState::new(u)?;
        state.update_coefficients(&objective, std::slice::from_ref(&sample), 1.0);
        let tau = 0.01 * state.c1.iter().map(|z| z.norm()).sum::<f64>() / state.c1.len() as f64;
        let sc = surrogate_check(&state, tau.max(f64::MIN_POSITIVE), 1000, &mut rng);
        let sur_err = sc.modulus_error.max((sc.best_random - sc.at_solution).max(0.0) / sc.at_solution.abs());
        sur_worst = sur_worst.max(sur_err);
    }
    Ok(vec![
        OracleCheck::new("g0 vs sampled expectation (relative)", g0_worst, 1e-2),
        OracleCheck::new("gk vs sampled expectation (relative)", gk_worst, 1e-2),
        OracleCheck::new("gradient vs central differences (relative L2)", grad_worst, 1e-5),
        OracleCheck::new("MRT beamformer optimality (relative)", bf_worst, 1e-9),
        OracleCheck::new("surrogate closed form vs random feasible points", sur_worst, 1e-12),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_scenarios_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            build_statistics(&random_scenario(&mut rng)).unwrap();
        }
    }

    #[test]
    fn phase_distance_wraps() {
        assert!((phase_distance(0.05, TAU - 0.05) - 0.1).abs() < 1e-12);
        assert_eq!(phase_distance(1.0, 1.0), 0.0);
    }

    #[test]
    fn disk_points_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(random_disk_point(&mut rng, 100).iter().all(|z| z.norm() <= 1.0));
    }

    #[test]
    fn finite_differences_of_a_quadratic() {
        // With no interference and unit power, γ = ‖Ĝ^H v + ĥ‖² / σ².
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sample = CsiSample::from_estimate(gaussian_matrix(&mut rng, 3, 2, 1.0), gaussian_vector(&mut rng, 2, 1.0));
        let objective = DesignObjective {
            p0: 1.0,
            irs_elements: 3,
            error_offset: 0.0,
            interference: Vec::new(),
            denominator_offset: 1.0,
        };
        let v = random_disk_point(&mut rng, 3);
        let fd = finite_difference_gradient(&objective, &v, &sample, 1e-5);
        // ∂/∂v of (Ĝ^H v + ĥ)^H (Ĝ^H v + ĥ) is conj(Ĝ (Ĝ^H v + ĥ)).
        let exact = (&sample.est_cascaded * equivalent_channel(&v, &sample)).map(|z| z.conj());
        assert!((fd - exact).norm() < 1e-8);
    }

    #[test]
    fn quick_oracle_run_passes() {
        let checks = validate_oracles(5, 3, 20_000).unwrap();
        for c in &checks[2..] {
            assert!(c.passed, "{c:?}");
        }
        assert!(checks[0].worst < 0.05 && checks[1].worst < 0.05, "{checks:?}");
    }
}
