//! Stochastic successive convex approximation for the quasi-static phase
//! shifts.
//!
//! Each iteration draws `L` estimated-CSI samples, refreshes the running
//! averages `c₀` (objective) and `c₁` (gradient), maximizes the strongly
//! concave surrogate
//!
//! ```text
//! f(u) = c₀ + 2 Re Σ_n conj(c₁ₙ) (u_n - v_n) - τ Σ_n |u_n - v_n|²,  |u_n| ≤ 1
//! ```
//!
//! in closed form and moves the iterate towards the maximizer with a
//! diminishing stepsize. `c₁` stores the ascent direction `∂γ/∂v*`, which is
//! the convention under which the maximizer is `(τ v_n + c₁ₙ)/|τ v_n + c₁ₙ|`.

use std::io::Write;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelStatistics, CsiSample, GaussianCsiModel};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CVector, C64};
use crate::rate::{DesignObjective, PhaseShiftVector};
use crate::rng::{Purpose, StreamFactory};

/// Scale of the automatic proximal weight relative to the first gradient.
pub const AUTO_TAU_SCALE: f64 = 1e-2;

/// Which iterate the solver hands back for deployment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalIterate {
    /// `v^(T)` projected onto the unit circle.
    #[default]
    Projected,
    /// The last surrogate maximizer `v̄^(T)`.
    LastSurrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// T.
    pub iterations: usize,
    /// L.
    pub samples_per_iteration: usize,
    /// Proximal weight τ; `None` calibrates it from the first gradients.
    pub tau: Option<f64>,
    /// `ρ_t = t^(-a)`.
    pub rho_exponent: f64,
    /// `ω_t = t^(-b)`, `b > a`.
    pub omega_exponent: f64,
    pub seed: u64,
    /// Fixed-point gap below which the run is declared converged.
    pub tolerance: f64,
    /// Record an upper-bound probe every this many iterations; 0 disables.
    pub probe_every: usize,
    pub output: FinalIterate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            samples_per_iteration: 10,
            tau: None,
            rho_exponent: 0.6,
            omega_exponent: 0.9,
            seed: 0,
            tolerance: 1e-3,
            probe_every: 25,
            output: FinalIterate::Projected,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.samples_per_iteration == 0 {
            return Err(Error::Config("T and L must be at least 1".into()));
        }
        let a = self.rho_exponent;
        let b = self.omega_exponent;
        if !(a > 0.5 && a <= 1.0) {
            return Err(Error::Config(format!(
                "ρ exponent must lie in (0.5, 1] for Σρ² < ∞, got {a}"
            )));
        }
        if !(b > a && b <= 1.0) {
            return Err(Error::Config(format!(
                "ω exponent must lie in (ρ exponent, 1], got {b}"
            )));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::Config(format!("τ must be positive, got {tau}")));
            }
        }
        Ok(())
    }
}

/// `ρ_t = t^(-a)`.
pub fn stepsize_rho(t: usize, a: f64) -> f64 {
    assert!(t >= 1, "stepsizes are defined for t ≥ 1");
    (t as f64).powf(-a)
}

/// `ω_t = t^(-b)`.
pub fn stepsize_omega(t: usize, b: f64) -> f64 {
    assert!(t >= 1, "stepsizes are defined for t ≥ 1");
    (t as f64).powf(-b)
}

/// Source of estimated-CSI samples for the solver.
pub trait CsiSampler {
    fn irs_elements(&self) -> usize;
    fn sample(&self, rng: &mut ChaCha8Rng) -> CsiSample;
    /// `E‖Ĝ^H v + ĥ‖²` under this sampler.
    fn expected_signal_power(&self, v: &CVector) -> f64;
}

impl CsiSampler for GaussianCsiModel {
    fn irs_elements(&self) -> usize {
        GaussianCsiModel::irs_elements(self)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> CsiSample {
        GaussianCsiModel::sample(self, rng, false)
    }

    fn expected_signal_power(&self, v: &CVector) -> f64 {
        GaussianCsiModel::expected_signal_power(self, v)
    }
}

/// Always returns the same estimate.
#[derive(Debug, Clone)]
pub struct FixedCsi(pub CsiSample);

impl CsiSampler for FixedCsi {
    fn irs_elements(&self) -> usize {
        self.0.irs_elements()
    }

    fn sample(&self, _rng: &mut ChaCha8Rng) -> CsiSample {
        self.0.clone()
    }

    fn expected_signal_power(&self, v: &CVector) -> f64 {
        norm_sqr(&crate::beamforming::equivalent_channel(v, &self.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub c0: f64,
    /// `‖v̄^(t) - v^(t-1)‖₂`.
    pub gap: f64,
    /// Jensen bound at the projected iterate, when probed.
    pub probe_ub_rate: Option<f64>,
}

/// Solver iterate and running surrogate coefficients.
#[derive(Debug, Clone)]
pub struct SscaState {
    /// Completed iterations.
    pub t: usize,
    /// `v^(t)`, relaxed form.
    pub v: CVector,
    pub c0: f64,
    /// Running average of `∂γ/∂v*`.
    pub c1: CVector,
    pub trace: Vec<TraceRow>,
}

impl SscaState {
    pub fn new(v0: CVector) -> Result<Self> {
        let v0 = PhaseShiftVector::relaxed(v0)?.into_values();
        let n = v0.len();
        Ok(Self {
            t: 0,
            v: v0,
            c0: 0.0,
            c1: CVector::zeros(n),
            trace: Vec::new(),
        })
    }

    /// Blends the sample averages of `γ_ub` and `∂γ_ub/∂v*` at the current
    /// iterate into `c₀`, `c₁` with weight `ρ`.
    pub fn update_coefficients(&mut self, objective: &DesignObjective, samples: &[CsiSample], rho: f64) {
        assert!(!samples.is_empty(), "at least one sample per iteration");
        let denom = objective.denominator(&self.v);
        let mut value = 0.0;
        let mut grad = CVector::zeros(self.v.len());
        for s in samples {
            let (g, d) = objective.value_and_ascent(&self.v, s, &denom);
            value += g;
            grad += d;
        }
        let inv_l = 1.0 / samples.len() as f64;
        self.c0 = rho * value * inv_l + (1.0 - rho) * self.c0;
        self.c1 = grad * C64::from(rho * inv_l) + &self.c1 * C64::from(1.0 - rho);
    }

    /// Surrogate `f^(t)(u)` around the current iterate.
    pub fn surrogate_value(&self, tau: f64, u: &CVector) -> f64 {
        let mut lin = 0.0;
        let mut prox = 0.0;
        for ((c, un), vn) in self.c1.iter().zip(u.iter()).zip(self.v.iter()) {
            let d = un - vn;
            lin += (c.conj() * d).re;
            prox += d.norm_sqr();
        }
        self.c0 + 2.0 * lin - tau * prox
    }

    /// `v̄_n = (τ v_n + c₁ₙ)/|τ v_n + c₁ₙ|`.
    ///
    /// This maximizes the surrogate over `|u_n| ≤ 1` whenever
    /// `|τ v_n + c₁ₙ| ≥ τ`, which auto-calibrated `τ` makes the typical case.
    /// A zero numerator keeps the phase of `v_n`, or 1 if `v_n = 0`.
    pub fn solve_surrogate(&self, tau: f64) -> CVector {
        assert!(tau > 0.0, "τ must be positive");
        self.v.zip_map(&self.c1, |vn, cn| {
            let z = vn * tau + cn;
            let r = z.norm();
            if r > 0.0 {
                z / r
            } else if vn.norm() > 0.0 {
                vn / vn.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
    }

    /// `v^(t) = (1 - ω) v^(t-1) + ω v̄`.
    pub fn advance_iterate(&mut self, v_bar: &CVector, omega: f64) {
        assert!(omega > 0.0 && omega <= 1.0, "ω must lie in (0, 1]");
        self.v = &self.v * C64::from(1.0 - omega) + v_bar * C64::from(omega);
        self.t += 1;
    }
}

/// `v_n / |v_n|`, zero entries mapped to 1.
pub fn project_unit_modulus(v: &CVector) -> PhaseShiftVector {
    let projected = v.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            C64::new(1.0, 0.0)
        }
    });
    PhaseShiftVector::deployment(projected).expect("projection has unit modulus")
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    /// Deployable phase shifts selected by [`SolverConfig::output`].
    pub phases: PhaseShiftVector,
    /// `v^(T)` before projection.
    pub relaxed: CVector,
    /// `v̄^(T)`.
    pub last_surrogate: CVector,
    pub trace: Vec<TraceRow>,
    /// First iteration whose fixed-point gap fell below the tolerance.
    pub converged_at: Option<usize>,
    /// τ actually used.
    pub tau: f64,
}

/// Runs `T` SSCA iterations from `v^(0) = 1`.
pub fn run<S: CsiSampler>(
    cfg: &SolverConfig,
    objective: &DesignObjective,
    sampler: &S,
) -> Result<SolverOutput> {
    run_from(cfg, objective, sampler, CVector::from_element(sampler.irs_elements(), C64::new(1.0, 0.0)))
}

pub fn run_from<S: CsiSampler>(
    cfg: &SolverConfig,
    objective: &DesignObjective,
    sampler: &S,
    v0: CVector,
) -> Result<SolverOutput> {
    cfg.validate()?;
    if v0.len() != objective.irs_elements || sampler.irs_elements() != objective.irs_elements {
        return Err(Error::Dimension {
            context: "solver initial point",
            expected: objective.irs_elements,
            found: v0.len(),
        });
    }
    let mut rng = StreamFactory::new(cfg.seed, Purpose::Solver).sequential();
    let mut state = SscaState::new(v0)?;
    let mut tau = cfg.tau.unwrap_or(f64::NAN);
    let mut converged_at = None;
    let mut v_bar = state.v.clone();
    let mut samples = Vec::with_capacity(cfg.samples_per_iteration);

    for t in 1..=cfg.iterations {
        samples.clear();
        samples.extend((0..cfg.samples_per_iteration).map(|_| sampler.sample(&mut rng)));
        state.update_coefficients(objective, &samples, stepsize_rho(t, cfg.rho_exponent));
        if tau.is_nan() {
            let scale = state.c1.iter().map(|z| z.norm()).sum::<f64>() / state.c1.len() as f64;
            tau = if scale > 0.0 && scale.is_finite() {
                AUTO_TAU_SCALE * scale
            } else {
                AUTO_TAU_SCALE
            };
            log::debug!("calibrated τ = {tau:e}");
        }
        v_bar = state.solve_surrogate(tau);
        let gap = norm_sqr(&(&v_bar - &state.v)).sqrt();
        if converged_at.is_none() && gap < cfg.tolerance {
            converged_at = Some(t);
        }
        state.advance_iterate(&v_bar, stepsize_omega(t, cfg.omega_exponent));

        let probe = (cfg.probe_every > 0 && (t % cfg.probe_every == 0 || t == cfg.iterations))
            .then(|| probe_rate(objective, sampler, &project_unit_modulus(&state.v)));
        state.trace.push(TraceRow {
            t,
            c0: state.c0,
            gap,
            probe_ub_rate: probe,
        });
    }

    let phases = match cfg.output {
        FinalIterate::Projected => project_unit_modulus(&state.v),
        FinalIterate::LastSurrogate => project_unit_modulus(&v_bar),
    };
    Ok(SolverOutput {
        phases,
        relaxed: state.v,
        last_surrogate: v_bar,
        trace: state.trace,
        converged_at,
        tau,
    })
}

/// Jensen bound of the design objective at deployment-form `v`.
pub fn probe_rate<S: CsiSampler>(objective: &DesignObjective, sampler: &S, v: &PhaseShiftVector) -> f64 {
    let signal = sampler.expected_signal_power(v.values()) + objective.error_offset;
    let d = objective.denominator(v.values()).value;
    (1.0 + objective.p0 * signal / d).log2()
}

/// Robust, interference-aware design for the scenario's own statistics.
pub fn run_for_statistics(cfg: &SolverConfig, stats: &ChannelStatistics) -> Result<SolverOutput> {
    run(
        cfg,
        &DesignObjective::from_statistics(stats),
        &GaussianCsiModel::from_statistics(stats),
    )
}

/// Writes the trace as CSV with header `t,c0,gap,probe_ub_rate`.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "t,c0,gap,probe_ub_rate").map_err(io)?;
    for row in trace {
        let probe = row.probe_ub_rate.map(|p| p.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", row.t, row.c0, row.gap, probe).map_err(io)?;
    }
    w.flush().map_err(io)
}
