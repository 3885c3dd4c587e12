//! Channel statistics and channel samplers.
//!
//! Links through the IRS are Rician, direct BS-user links are Rayleigh. The
//! cascaded channel of BS `k` towards user 0 is `G_k = diag(h_r0^H) H_kr`,
//! whose line-of-sight part is `Ḡ_k = sqrt(α_kr α_r0 τ_k) diag(h̄_r0^H) H̄_kr`.
//!
//! Two samplers exist on purpose. [`GaussianCsiModel`] draws the estimated CSI
//! from the Gaussian model that the phase-shift solver optimizes against.
//! [`sample_physical_channels`] draws the physical Rician/Rayleigh fading and
//! splits the serving link into an estimate and an independent Gaussian error;
//! it is what the Monte Carlo evaluator uses. The two agree in first and second
//! moments and differ in higher moments.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, gaussian_vector, CMatrix, CVector, C64};
use crate::rng::{Component, StreamFactory};

/// 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Uniform rectangular array of `rows × cols` elements, indexed row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Azimuth and elevation of a line-of-sight path, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Angles {
    pub const fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }
}

/// How the CSI error standard deviations are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorUnits {
    /// δ is in channel-coefficient units; δ² must not exceed the NLoS variance.
    Absolute,
    /// δ is relative to the per-element NLoS standard deviation, δ ∈ [0, 1].
    #[default]
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiErrorConfig {
    /// δ₁, error std-dev of each cascaded-channel element.
    pub cascaded: f64,
    /// δ₂, error std-dev of each direct-channel element.
    pub direct: f64,
    pub units: ErrorUnits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub position: Point,
    pub grid: Grid,
    /// Transmit power in watts.
    pub power: f64,
    /// Path-loss exponent of the direct link to user 0.
    pub direct_exponent: f64,
    /// Path-loss exponent of the link to the IRS.
    pub irs_exponent: f64,
    /// Rician factor `K_{k,r}` of the link to the IRS.
    pub irs_rician: f64,
    /// Departure angles at this BS towards the IRS.
    pub departure: Angles,
    /// Arrival angles at the IRS from this BS.
    pub arrival: Angles,
    /// Distance to the BS's own user; only used for `h_{k,k}`, `k ≥ 1`.
    pub own_user_distance: f64,
    pub own_user_exponent: f64,
}

/// Full experiment input, in linear units and radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Index 0 is the serving BS, the rest are interferers.
    pub base_stations: Vec<BaseStation>,
    pub user: Point,
    pub irs: Point,
    pub irs_grid: Grid,
    pub irs_user_exponent: f64,
    /// Rician factor `K_{r,0}`.
    pub irs_user_rician: f64,
    pub irs_user_angles: Angles,
    /// Element spacing in wavelengths (d/λ).
    pub element_spacing: f64,
    /// Noise power σ² in watts.
    pub noise_power: f64,
    pub csi_error: CsiErrorConfig,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be non-negative, got {x}")))
    }
}

impl ScenarioConfig {
    pub fn serving(&self) -> &BaseStation {
        &self.base_stations[0]
    }

    pub fn interferers(&self) -> &[BaseStation] {
        &self.base_stations[1..]
    }

    pub fn num_interferers(&self) -> usize {
        self.base_stations.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_stations.is_empty() {
            return Err(Error::Config("at least the serving BS is required".into()));
        }
        if self.irs_grid.is_empty() {
            return Err(Error::Config("IRS grid must have at least one element".into()));
        }
        positive("element spacing", self.element_spacing)?;
        positive("noise power", self.noise_power)?;
        positive("IRS-user path-loss exponent", self.irs_user_exponent)?;
        non_negative("K_{r,0}", self.irs_user_rician)?;
        non_negative("δ₁", self.csi_error.cascaded)?;
        non_negative("δ₂", self.csi_error.direct)?;
        if self.csi_error.units == ErrorUnits::Normalized
            && (self.csi_error.cascaded > 1.0 || self.csi_error.direct > 1.0)
        {
            return Err(Error::Config(
                "normalized CSI error std-devs must lie in [0, 1]".into(),
            ));
        }
        positive("IRS-user distance", self.irs.distance(&self.user))?;
        for (k, bs) in self.base_stations.iter().enumerate() {
            if bs.grid.is_empty() {
                return Err(Error::Config(format!("BS {k} antenna grid is empty")));
            }
            positive(&format!("BS {k} power"), bs.power)?;
            positive(&format!("BS {k} direct exponent"), bs.direct_exponent)?;
            positive(&format!("BS {k} IRS exponent"), bs.irs_exponent)?;
            non_negative(&format!("K_{{{k},r}}"), bs.irs_rician)?;
            positive(&format!("BS {k}-user distance"), bs.position.distance(&self.user))?;
            positive(&format!("BS {k}-IRS distance"), bs.position.distance(&self.irs))?;
            if k > 0 {
                positive(&format!("BS {k} own-user distance"), bs.own_user_distance)?;
                positive(&format!("BS {k} own-user exponent"), bs.own_user_exponent)?;
            }
        }
        Ok(())
    }
}

/// Large-scale power gain `1 / (1000 · d^ᾱ)`, i.e. `-30 - 10 ᾱ log10(d)` dB.
pub fn compute_path_loss(distance: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    if !(exponent > 0.0) || !exponent.is_finite() {
        return Err(Error::Domain(format!(
            "path-loss exponent must be positive, got {exponent}"
        )));
    }
    Ok(1.0 / (1000.0 * distance.powf(exponent)))
}

/// LoS and NLoS amplitude weights `(sqrt(K/(K+1)), sqrt(1/(K+1)))`.
fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

fn los_fraction(k: f64) -> f64 {
    if k.is_infinite() {
        1.0
    } else {
        k / (k + 1.0)
    }
}

/// `τ = K_br K_ru / ((K_br + 1)(K_ru + 1))`, the LoS power fraction of a cascade.
pub fn rician_combination_factor(k_br: f64, k_ru: f64) -> Result<f64> {
    if !(k_br >= 0.0) || !(k_ru >= 0.0) {
        return Err(Error::Domain(format!(
            "Rician factors must be non-negative, got ({k_br}, {k_ru})"
        )));
    }
    Ok(los_fraction(k_br) * los_fraction(k_ru))
}

/// URA steering vector with planar-wavefront phases, row-major element order.
pub fn steering_vector(angles: Angles, grid: Grid, spacing: f64) -> CVector {
    let sv = angles.elevation.sin();
    let u = sv * angles.azimuth.cos();
    let w = sv * angles.azimuth.sin();
    CVector::from_fn(grid.len(), |idx, _| {
        let (m, n) = (idx / grid.cols, idx % grid.cols);
        let phase = 2.0 * PI * spacing * (m as f64 * u + n as f64 * w);
        C64::from_polar(1.0, phase)
    })
}

/// Rank-one LoS matrix `a_rx a_tx^H`; every entry has unit modulus.
pub fn los_matrix(
    rx_angles: Angles,
    rx_grid: Grid,
    tx_angles: Angles,
    tx_grid: Grid,
    spacing: f64,
) -> Result<CMatrix> {
    if rx_grid.is_empty() || tx_grid.is_empty() {
        return Err(Error::Domain("array grids must be non-empty".into()));
    }
    if !(spacing > 0.0) {
        return Err(Error::Domain(format!("element spacing must be positive, got {spacing}")));
    }
    let rx = steering_vector(rx_angles, rx_grid, spacing);
    let tx = steering_vector(tx_angles, tx_grid, spacing);
    Ok(&rx * tx.adjoint())
}

/// Statistics of the link between BS `k` and user 0 (direct and via the IRS).
#[derive(Debug, Clone)]
pub struct LinkStatistics {
    pub antennas: usize,
    pub power: f64,
    /// α_{k,0}.
    pub direct_gain: f64,
    /// α_{k,r}.
    pub irs_gain: f64,
    /// α_{k,k}; unused for the serving BS.
    pub own_user_gain: f64,
    /// K_{k,r}.
    pub irs_rician: f64,
    /// τ_k.
    pub tau: f64,
    /// H̄_{k,r}, `M_r N_r × M_k N_k`.
    pub bs_irs_los: CMatrix,
    /// Ḡ_{k,0}, `M_r N_r × M_k N_k`.
    pub cascaded_los: CMatrix,
}

/// Everything the designer knows about the channel: immutable, shareable.
#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    pub links: Vec<LinkStatistics>,
    pub irs_elements: usize,
    /// α_{r,0}.
    pub irs_user_gain: f64,
    /// K_{r,0}.
    pub irs_user_rician: f64,
    /// Entries of the row vector h̄_{r,0}^H.
    pub irs_user_los: CVector,
    /// σ_G², per-element NLoS variance of G_{0,0}.
    pub cascaded_variance: f64,
    /// σ_h², per-element variance of h_{0,0}.
    pub direct_variance: f64,
    /// δ₁² in absolute channel units.
    pub cascaded_error_variance: f64,
    /// δ₂² in absolute channel units.
    pub direct_error_variance: f64,
    pub noise_power: f64,
}

impl ChannelStatistics {
    pub fn serving(&self) -> &LinkStatistics {
        &self.links[0]
    }

    pub fn interferers(&self) -> &[LinkStatistics] {
        &self.links[1..]
    }

    pub fn serving_antennas(&self) -> usize {
        self.links[0].antennas
    }

    /// Per-element variance of the cascaded NLoS term of BS `k`.
    pub fn cascaded_nlos_variance(&self, k: usize) -> f64 {
        let link = &self.links[k];
        link.irs_gain * self.irs_user_gain * (1.0 - link.tau)
    }
}

pub fn build_statistics(cfg: &ScenarioConfig) -> Result<ChannelStatistics> {
    cfg.validate()?;
    let irs_elements = cfg.irs_grid.len();
    let irs_user_gain = compute_path_loss(cfg.irs.distance(&cfg.user), cfg.irs_user_exponent)?;
    let irs_user_los = steering_vector(cfg.irs_user_angles, cfg.irs_grid, cfg.element_spacing)
        .map(|z| z.conj());

    let mut links = Vec::with_capacity(cfg.base_stations.len());
    for (k, bs) in cfg.base_stations.iter().enumerate() {
        let direct_gain = compute_path_loss(bs.position.distance(&cfg.user), bs.direct_exponent)?;
        let irs_gain = compute_path_loss(bs.position.distance(&cfg.irs), bs.irs_exponent)?;
        let own_user_gain = if k == 0 {
            direct_gain
        } else {
            compute_path_loss(bs.own_user_distance, bs.own_user_exponent)?
        };
        let tau = rician_combination_factor(bs.irs_rician, cfg.irs_user_rician)?;
        let bs_irs_los = los_matrix(
            bs.arrival,
            cfg.irs_grid,
            bs.departure,
            bs.grid,
            cfg.element_spacing,
        )?;
        let amp = (irs_gain * irs_user_gain * tau).sqrt();
        let mut cascaded_los = bs_irs_los.clone();
        for (mut row, h) in cascaded_los.row_iter_mut().zip(irs_user_los.iter()) {
            row *= *h * amp;
        }
        links.push(LinkStatistics {
            antennas: bs.grid.len(),
            power: bs.power,
            direct_gain,
            irs_gain,
            own_user_gain,
            irs_rician: bs.irs_rician,
            tau,
            bs_irs_los,
            cascaded_los,
        });
    }

    let serving = &links[0];
    let cascaded_variance = serving.irs_gain * irs_user_gain * (1.0 - serving.tau);
    let direct_variance = serving.direct_gain;
    let err = cfg.csi_error;
    let (cascaded_error_variance, direct_error_variance) = match err.units {
        ErrorUnits::Absolute => (err.cascaded.powi(2), err.direct.powi(2)),
        ErrorUnits::Normalized => (
            err.cascaded.powi(2) * cascaded_variance,
            err.direct.powi(2) * direct_variance,
        ),
    };
    if cascaded_error_variance > cascaded_variance {
        return Err(Error::Config(format!(
            "δ₁² = {cascaded_error_variance:e} exceeds the cascaded NLoS variance {cascaded_variance:e}"
        )));
    }
    if direct_error_variance > direct_variance {
        return Err(Error::Config(format!(
            "δ₂² = {direct_error_variance:e} exceeds the direct-link variance {direct_variance:e}"
        )));
    }

    Ok(ChannelStatistics {
        links,
        irs_elements,
        irs_user_gain,
        irs_user_rician: cfg.irs_user_rician,
        irs_user_los,
        cascaded_variance,
        direct_variance,
        cascaded_error_variance,
        direct_error_variance,
        noise_power: cfg.noise_power,
    })
}

/// True estimation errors of the serving link.
#[derive(Debug, Clone)]
pub struct CsiErrors {
    /// Δh_{0,0}.
    pub direct: CVector,
    /// ΔG_{0,0}.
    pub cascaded: CMatrix,
}

/// Physical channels of interferer `k ≥ 1` towards user 0 and its own user.
#[derive(Debug, Clone)]
pub struct InterferenceChannels {
    /// G_{k,0}.
    pub cascaded: CMatrix,
    /// h_{k,0}.
    pub direct: CVector,
    /// h_{k,k}.
    pub own_user: CVector,
}

/// One slot's channel realization as seen by BS 0.
#[derive(Debug, Clone)]
pub struct CsiSample {
    /// ĥ_{0,0}.
    pub est_direct: CVector,
    /// Ĝ_{0,0}.
    pub est_cascaded: CMatrix,
    pub errors: Option<CsiErrors>,
    /// Indexed by interferer, entry `k - 1` holds BS `k`.
    pub interference: Option<Vec<InterferenceChannels>>,
}

impl CsiSample {
    /// Sample with exact CSI and no interference fields.
    pub fn from_estimate(est_cascaded: CMatrix, est_direct: CVector) -> Self {
        Self {
            est_direct,
            est_cascaded,
            errors: None,
            interference: None,
        }
    }

    pub fn irs_elements(&self) -> usize {
        self.est_cascaded.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.est_direct.len()
    }

    /// G_{0,0} = Ĝ_{0,0} + ΔG_{0,0}; the estimate when no error is attached.
    pub fn true_cascaded(&self) -> CMatrix {
        match &self.errors {
            Some(e) => &self.est_cascaded + &e.cascaded,
            None => self.est_cascaded.clone(),
        }
    }

    /// h_{0,0} = ĥ_{0,0} + Δh_{0,0}.
    pub fn true_direct(&self) -> CVector {
        match &self.errors {
            Some(e) => &self.est_direct + &e.direct,
            None => self.est_direct.clone(),
        }
    }

    pub fn check_dims(&self, irs_elements: usize, antennas: usize) -> Result<()> {
        if self.est_cascaded.nrows() != irs_elements {
            return Err(Error::Dimension {
                context: "cascaded channel rows",
                expected: irs_elements,
                found: self.est_cascaded.nrows(),
            });
        }
        if self.est_cascaded.ncols() != antennas || self.est_direct.len() != antennas {
            return Err(Error::Dimension {
                context: "serving antennas",
                expected: antennas,
                found: self.est_direct.len(),
            });
        }
        Ok(())
    }
}

/// Gaussian model of the estimated CSI: `Ĝ ~ CN(Ḡ, σ_G² - δ₁²)`,
/// `ĥ ~ CN(0, σ_h² - δ₂²)`, errors `CN(0, δ²)`, all entries independent.
#[derive(Debug, Clone)]
pub struct GaussianCsiModel {
    pub mean_cascaded: CMatrix,
    pub cascaded_variance: f64,
    pub direct_variance: f64,
    pub cascaded_error_variance: f64,
    pub direct_error_variance: f64,
}

impl GaussianCsiModel {
    pub fn from_statistics(stats: &ChannelStatistics) -> Self {
        Self::with_error_variances(
            stats,
            stats.cascaded_error_variance,
            stats.direct_error_variance,
        )
    }

    /// Model the designer would use if it believed the errors had the given
    /// variances. Passing zeros gives the perfect-CSIT model.
    pub fn with_error_variances(
        stats: &ChannelStatistics,
        cascaded_error_variance: f64,
        direct_error_variance: f64,
    ) -> Self {
        Self {
            mean_cascaded: stats.serving().cascaded_los.clone(),
            cascaded_variance: (stats.cascaded_variance - cascaded_error_variance).max(0.0),
            direct_variance: (stats.direct_variance - direct_error_variance).max(0.0),
            cascaded_error_variance,
            direct_error_variance,
        }
    }

    pub fn irs_elements(&self) -> usize {
        self.mean_cascaded.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.mean_cascaded.ncols()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, with_errors: bool) -> CsiSample {
        let (rows, cols) = self.mean_cascaded.shape();
        let est_cascaded =
            &self.mean_cascaded + gaussian_matrix(rng, rows, cols, self.cascaded_variance);
        let est_direct = gaussian_vector(rng, cols, self.direct_variance);
        let errors = with_errors.then(|| CsiErrors {
            cascaded: gaussian_matrix(rng, rows, cols, self.cascaded_error_variance),
            direct: gaussian_vector(rng, cols, self.direct_error_variance),
        });
        CsiSample {
            est_direct,
            est_cascaded,
            errors,
            interference: None,
        }
    }

    /// `E‖Ĝ^H v + ĥ‖²` under this model.
    pub fn expected_signal_power(&self, v: &CVector) -> f64 {
        let los = self.mean_cascaded.ad_mul(v);
        let v_norm = crate::linalg::norm_sqr(v);
        crate::linalg::norm_sqr(&los)
            + self.antennas() as f64 * (v_norm * self.cascaded_variance + self.direct_variance)
    }
}

/// Draws estimated CSI from the Gaussian model of `stats`.
pub fn sample_estimated_csi<R: Rng + ?Sized>(
    stats: &ChannelStatistics,
    rng: &mut R,
    with_errors: bool,
) -> CsiSample {
    GaussianCsiModel::from_statistics(stats).sample(rng, with_errors)
}

/// Rician matrix `sqrt(gain) (w_los · los + w_nlos · CN(0,1))`.
fn rician_matrix<R: Rng + ?Sized>(rng: &mut R, gain: f64, k: f64, los: &CMatrix) -> CMatrix {
    let (w_los, w_nlos) = rician_weights(k);
    let nlos = gaussian_matrix(rng, los.nrows(), los.ncols(), 1.0);
    (los * C64::from(w_los) + nlos * C64::from(w_nlos)) * C64::from(gain.sqrt())
}

fn cascade(irs_user_row: &CVector, bs_irs: &CMatrix) -> CMatrix {
    let mut g = bs_irs.clone();
    for (mut row, h) in g.row_iter_mut().zip(irs_user_row.iter()) {
        row *= *h;
    }
    g
}

/// Draws the physical fading of slot `index` and splits the serving link into
/// an estimate and an independent Gaussian error.
///
/// The estimate keeps the LoS mean and a shrunken copy of the physical NLoS
/// term, so its per-element variance is `σ² - δ²` while the reconstructed
/// channel `Ĝ + ΔG` has the physical variance `σ²`. Interference channels are
/// drawn only when `with_interference` is set.
pub fn sample_physical_channels(
    stats: &ChannelStatistics,
    streams: &StreamFactory,
    index: u64,
    with_interference: bool,
) -> CsiSample {
    let n_irs = stats.irs_elements;
    let serving = stats.serving();

    let irs_user_row = {
        let mut rng = streams.stream(index, Component::IrsUser);
        let (w_los, w_nlos) = rician_weights(stats.irs_user_rician);
        let nlos = gaussian_vector(&mut rng, n_irs, 1.0);
        (&stats.irs_user_los * C64::from(w_los) + nlos * C64::from(w_nlos))
            * C64::from(stats.irs_user_gain.sqrt())
    };

    let cascaded = {
        let mut rng = streams.stream(index, Component::BsIrs);
        let h = rician_matrix(&mut rng, serving.irs_gain, serving.irs_rician, &serving.bs_irs_los);
        cascade(&irs_user_row, &h)
    };
    let direct = {
        let mut rng = streams.stream(index, Component::Direct);
        gaussian_vector(&mut rng, serving.antennas, stats.direct_variance)
    };

    let shrink = |var: f64, err: f64| if var > 0.0 { ((var - err) / var).max(0.0).sqrt() } else { 0.0 };
    let s_g = C64::from(shrink(stats.cascaded_variance, stats.cascaded_error_variance));
    let s_h = C64::from(shrink(stats.direct_variance, stats.direct_error_variance));
    let est_cascaded = &serving.cascaded_los + (cascaded - &serving.cascaded_los) * s_g;
    let est_direct = direct * s_h;

    let err_cascaded = {
        let mut rng = streams.stream(index, Component::CascadedError);
        gaussian_matrix(&mut rng, n_irs, serving.antennas, stats.cascaded_error_variance)
    };
    let err_direct = {
        let mut rng = streams.stream(index, Component::DirectError);
        gaussian_vector(&mut rng, serving.antennas, stats.direct_error_variance)
    };

    let interference = with_interference.then(|| {
        let mut rng = streams.stream(index, Component::Interference);
        stats
            .interferers()
            .iter()
            .map(|link| {
                let h = rician_matrix(&mut rng, link.irs_gain, link.irs_rician, &link.bs_irs_los);
                InterferenceChannels {
                    cascaded: cascade(&irs_user_row, &h),
                    direct: gaussian_vector(&mut rng, link.antennas, link.direct_gain),
                    own_user: gaussian_vector(&mut rng, link.antennas, link.own_user_gain),
                }
            })
            .collect()
    });

    CsiSample {
        est_direct,
        est_cascaded,
        errors: Some(CsiErrors {
            direct: err_direct,
            cascaded: err_cascaded,
        }),
        interference,
    }
}
