//! Simulation and optimization for an IRS-assisted multi-cell downlink.
//!
//! The serving base station adapts a closed-form robust MRT beamformer to the
//! imperfect channel estimate in every slot, while the IRS phase shifts are
//! quasi-static and designed from channel statistics with a stochastic
//! successive convex approximation (SSCA) solver. Designs are evaluated by
//! Monte Carlo estimates of the ergodic rate under the true channel model.
//!
//! Module map:
//!
//! * [`channel`]: scenario geometry, channel statistics and samplers.
//! * [`rate`]: Jensen upper bound, Monte Carlo ergodic rate, the per-sample
//!   design objective and its Wirtinger gradient.
//! * [`beamforming`]: the closed-form robust beamformer.
//! * [`ssca`]: the phase-shift solver.
//! * [`baselines`]: the proposed scheme and the four comparison schemes.
//! * [`scenario`] and [`sweep`]: presets, scenario files and experiment sweeps.

pub mod baselines;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod rate;
pub mod rng;
pub mod scenario;
pub mod ssca;
pub mod sweep;
pub mod validation;

pub use baselines::{design_scheme, evaluate_design, Design, Scheme, SchemeSpec};
pub use beamforming::{mrt_equivalent_beamformer, Beamformer};
pub use channel::{ChannelStatistics, CsiSample, ScenarioConfig};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use rate::{PhaseForm, PhaseShiftVector, RateReport};
pub use scenario::{load_scenario, ScenarioFile};
pub use ssca::{SolverConfig, SolverOutput};
pub use sweep::{run_sweep, SweepParameter, SweepSpec, SweepTable};
