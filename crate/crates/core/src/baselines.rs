//! The proposed scheme and the four comparison schemes.
//!
//! Every scheme uses the closed-form MRT beamformer on the estimated CSI. They
//! differ only in how the phase shifts are designed: whether the designer
//! accounts for the CSI error, whether it accounts for interference, and
//! whether the phases come from the SSCA solver or are drawn at random. All
//! schemes are evaluated against the true error statistics and the full
//! interference.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelStatistics, GaussianCsiModel};
use crate::error::{Error, Result};
use crate::rate::{ergodic_rate_report, DesignObjective, PhaseShiftVector, RateReport, RobustMrt};
use crate::rng::{Purpose, StreamFactory};
use crate::ssca::{self, SolverConfig, SolverOutput};

/// Number of random phase draws averaged by the random-phase baseline.
pub const RANDOM_PHASE_DRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseSource {
    Ssca,
    RandomUniform { draws: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    /// Design with the true error variances instead of assuming perfect CSIT.
    pub robust: bool,
    /// Include `Σ P_k g_k` in the design denominator.
    pub with_interference: bool,
    pub phase_source: PhaseSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Proposed,
    RobustNoIntf,
    RobustWithIntf,
    NonrobustNoIntf,
    NonrobustWithIntf,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::RobustNoIntf,
        Scheme::RobustWithIntf,
        Scheme::NonrobustNoIntf,
        Scheme::NonrobustWithIntf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::RobustNoIntf => "robust-no-intf",
            Scheme::RobustWithIntf => "robust-with-intf",
            Scheme::NonrobustNoIntf => "nonrobust-no-intf",
            Scheme::NonrobustWithIntf => "nonrobust-with-intf",
        }
    }

    pub fn spec(self) -> SchemeSpec {
        let ssca = PhaseSource::Ssca;
        let (robust, with_interference, phase_source) = match self {
            Scheme::Proposed => (true, true, ssca),
            Scheme::RobustNoIntf => (true, false, ssca),
            // Robust MRT without joint phase design.
            Scheme::RobustWithIntf => (
                true,
                true,
                PhaseSource::RandomUniform {
                    draws: RANDOM_PHASE_DRAWS,
                },
            ),
            Scheme::NonrobustNoIntf => (false, false, ssca),
            Scheme::NonrobustWithIntf => (false, true, ssca),
        };
        SchemeSpec {
            robust,
            with_interference,
            phase_source,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme `{s}`; expected one of {}",
                    Scheme::ALL.map(Scheme::name).join(", ")
                ))
            })
    }
}

/// Phase shifts chosen by a scheme. The beamformer is always the robust MRT.
#[derive(Debug, Clone)]
pub struct Design {
    pub spec: SchemeSpec,
    /// One vector for solver designs, several for the random baseline.
    pub phases: Vec<PhaseShiftVector>,
    pub solver: Option<SolverOutput>,
}

pub fn design_scheme(
    spec: &SchemeSpec,
    stats: &ChannelStatistics,
    solver_cfg: &SolverConfig,
) -> Result<Design> {
    match spec.phase_source {
        PhaseSource::Ssca => {
            let (err_g, err_h) = if spec.robust {
                (stats.cascaded_error_variance, stats.direct_error_variance)
            } else {
                (0.0, 0.0)
            };
            let objective = DesignObjective::new(stats, err_g, err_h, spec.with_interference);
            let sampler = GaussianCsiModel::with_error_variances(stats, err_g, err_h);
            let out = ssca::run(solver_cfg, &objective, &sampler)?;
            Ok(Design {
                spec: *spec,
                phases: vec![out.phases.clone()],
                solver: Some(out),
            })
        }
        PhaseSource::RandomUniform { draws } => {
            if draws == 0 {
                return Err(Error::Config("random-phase baseline needs at least one draw".into()));
            }
            let mut rng = StreamFactory::new(solver_cfg.seed, Purpose::Baseline).sequential();
            let phases = (0..draws)
                .map(|_| {
                    let p: Vec<f64> = (0..stats.irs_elements)
                        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                        .collect();
                    PhaseShiftVector::from_phases(&p)
                })
                .collect();
            Ok(Design {
                spec: *spec,
                phases,
                solver: None,
            })
        }
    }
}

/// Evaluates a design under the true model. Multiple phase vectors share the
/// sample budget round-robin, which averages the rate over the draws.
pub fn evaluate_design(
    design: &Design,
    stats: &ChannelStatistics,
    n_samples: usize,
    streams: &StreamFactory,
) -> Result<RateReport> {
    ergodic_rate_report(&design.phases, &RobustMrt, stats, n_samples, streams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_statistics;
    use crate::scenario::fig3_preset;

    fn quick_solver() -> SolverConfig {
        SolverConfig {
            iterations: 30,
            seed: 4,
            ..Default::default()
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("robust".parse::<Scheme>().is_err());
        let proposed = Scheme::Proposed.spec();
        assert!(proposed.robust && proposed.with_interference);
        assert_eq!(proposed.phase_source, PhaseSource::Ssca);
    }

    #[test]
    fn nonrobust_equals_proposed_without_errors() {
        let mut cfg = fig3_preset();
        cfg.csi_error.cascaded = 0.0;
        cfg.csi_error.direct = 0.0;
        let stats = build_statistics(&cfg).unwrap();
        let a = design_scheme(&Scheme::Proposed.spec(), &stats, &quick_solver()).unwrap();
        let b = design_scheme(&Scheme::NonrobustWithIntf.spec(), &stats, &quick_solver()).unwrap();
        assert_eq!(a.phases, b.phases);
    }

    #[test]
    fn interference_flag_irrelevant_without_interferers() {
        let mut cfg = fig3_preset();
        cfg.base_stations.truncate(1);
        let stats = build_statistics(&cfg).unwrap();
        let a = design_scheme(&Scheme::RobustNoIntf.spec(), &stats, &quick_solver()).unwrap();
        let b = design_scheme(&Scheme::Proposed.spec(), &stats, &quick_solver()).unwrap();
        assert_eq!(a.phases, b.phases);
    }

    #[test]
    fn random_baseline_has_ten_draws() {
        let stats = build_statistics(&fig3_preset()).unwrap();
        let d = design_scheme(&Scheme::RobustWithIntf.spec(), &stats, &quick_solver()).unwrap();
        assert_eq!(d.phases.len(), RANDOM_PHASE_DRAWS);
        assert!(d.solver.is_none());
        assert_ne!(d.phases[0], d.phases[1]);
    }
}
