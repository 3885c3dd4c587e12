//! Scenario files and the built-in preset.
//!
//! Files use meters, dBm and degrees; [`ScenarioConfig`] holds watts and
//! radians. The conversion is lossless up to floating-point rounding.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{
    Angles, BaseStation, CsiErrorConfig, ErrorUnits, Grid, Point, ScenarioConfig,
};
use crate::error::{Error, Result};

pub const FIG3_PRESET: &str = "paper-fig3";
pub const PRESETS: &[&str] = &[FIG3_PRESET];

/// Rician factor used by the preset on every IRS link.
pub const DEFAULT_RICIAN: f64 = 3.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglesDeg {
    pub azimuth: f64,
    pub elevation: f64,
}

impl From<AnglesDeg> for Angles {
    fn from(a: AnglesDeg) -> Self {
        Angles::new(a.azimuth.to_radians(), a.elevation.to_radians())
    }
}

impl From<Angles> for AnglesDeg {
    fn from(a: Angles) -> Self {
        AnglesDeg {
            azimuth: a.azimuth.to_degrees(),
            elevation: a.elevation.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStationFile {
    pub position: Point,
    pub grid: Grid,
    pub power_dbm: f64,
    pub direct_exponent: f64,
    pub irs_exponent: f64,
    pub irs_rician: f64,
    pub departure_deg: AnglesDeg,
    pub arrival_deg: AnglesDeg,
    #[serde(default = "default_own_user_distance")]
    pub own_user_distance: f64,
    #[serde(default = "default_own_user_exponent")]
    pub own_user_exponent: f64,
}

fn default_own_user_distance() -> f64 {
    100.0
}

fn default_own_user_exponent() -> f64 {
    3.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsFile {
    pub position: Point,
    pub grid: Grid,
    pub user_exponent: f64,
    pub user_rician: f64,
    pub user_angles_deg: AnglesDeg,
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub element_spacing: f64,
    pub noise_dbm: f64,
    pub user: Point,
    pub irs: IrsFile,
    pub base_stations: Vec<BaseStationFile>,
    pub csi_error: CsiErrorConfig,
}

impl ScenarioFile {
    pub fn to_config(&self) -> Result<ScenarioConfig> {
        let cfg = ScenarioConfig {
            base_stations: self
                .base_stations
                .iter()
                .map(|b| BaseStation {
                    position: b.position,
                    grid: b.grid,
                    power: dbm_to_watts(b.power_dbm),
                    direct_exponent: b.direct_exponent,
                    irs_exponent: b.irs_exponent,
                    irs_rician: b.irs_rician,
                    departure: b.departure_deg.into(),
                    arrival: b.arrival_deg.into(),
                    own_user_distance: b.own_user_distance,
                    own_user_exponent: b.own_user_exponent,
                })
                .collect(),
            user: self.user,
            irs: self.irs.position,
            irs_grid: self.irs.grid,
            irs_user_exponent: self.irs.user_exponent,
            irs_user_rician: self.irs.user_rician,
            irs_user_angles: self.irs.user_angles_deg.into(),
            element_spacing: self.element_spacing,
            noise_power: dbm_to_watts(self.noise_dbm),
            csi_error: self.csi_error,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_config(cfg: &ScenarioConfig, name: Option<String>) -> Self {
        ScenarioFile {
            name,
            element_spacing: cfg.element_spacing,
            noise_dbm: watts_to_dbm(cfg.noise_power),
            user: cfg.user,
            irs: IrsFile {
                position: cfg.irs,
                grid: cfg.irs_grid,
                user_exponent: cfg.irs_user_exponent,
                user_rician: cfg.irs_user_rician,
                user_angles_deg: cfg.irs_user_angles.into(),
            },
            base_stations: cfg
                .base_stations
                .iter()
                .map(|b| BaseStationFile {
                    position: b.position,
                    grid: b.grid,
                    power_dbm: watts_to_dbm(b.power),
                    direct_exponent: b.direct_exponent,
                    irs_exponent: b.irs_exponent,
                    irs_rician: b.irs_rician,
                    departure_deg: b.departure.into(),
                    arrival_deg: b.arrival.into(),
                    own_user_distance: b.own_user_distance,
                    own_user_exponent: b.own_user_exponent,
                })
                .collect(),
            csi_error: cfg.csi_error,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("scenario serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Where a scenario comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioSource {
    Preset(String),
    File(PathBuf),
}

impl ScenarioSource {
    /// Short identifier used in result rows.
    pub fn id(&self) -> String {
        match self {
            ScenarioSource::Preset(name) => name.clone(),
            ScenarioSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

pub fn preset_file(name: &str) -> Result<ScenarioFile> {
    match name {
        FIG3_PRESET => Ok(ScenarioFile::from_config(&fig3_preset(), Some(FIG3_PRESET.into()))),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

pub fn load_scenario_file(source: &ScenarioSource) -> Result<ScenarioFile> {
    match source {
        ScenarioSource::Preset(name) => preset_file(name),
        ScenarioSource::File(path) => ScenarioFile::read(path),
    }
}

pub fn load_scenario(source: &ScenarioSource) -> Result<ScenarioConfig> {
    match source {
        ScenarioSource::Preset(name) if name == FIG3_PRESET => Ok(fig3_preset()),
        other => load_scenario_file(other)?.to_config(),
    }
}

/// Distance from BS 0 to user 0 in the preset.
pub fn preset_user_distance() -> f64 {
    200.0 * 3f64.sqrt()
}

/// Point on the perpendicular bisector of `a`-`b` at distance `d` from
/// `anchor`, choosing the solution closest to `near`.
pub fn point_on_bisector(a: Point, b: Point, anchor: Point, d: f64, near: Point) -> Result<Point> {
    let mid = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx.hypot(dy);
    if !(len > 0.0) {
        return Err(Error::Config("bisector endpoints coincide".into()));
    }
    let dir = (-dy / len, dx / len);
    // |mid + t dir - anchor|² = d²
    let (ox, oy) = (mid.x - anchor.x, mid.y - anchor.y);
    let bq = ox * dir.0 + oy * dir.1;
    let cq = ox * ox + oy * oy - d * d;
    let disc = bq * bq - cq;
    if disc < 0.0 {
        return Err(Error::Config(format!(
            "no point on the bisector lies {d} m from the anchor"
        )));
    }
    let root = disc.sqrt();
    let candidates = [-bq + root, -bq - root].map(|t| Point::new(mid.x + t * dir.0, mid.y + t * dir.1));
    let best = if candidates[0].distance(&near) <= candidates[1].distance(&near) {
        candidates[0]
    } else {
        candidates[1]
    };
    Ok(best)
}

/// Moves user 0 along the bisector of BS 1 and BS 2 to distance `d` from BS 0.
pub fn place_user_on_bisector(cfg: &mut ScenarioConfig, d: f64) -> Result<()> {
    if cfg.base_stations.len() < 3 {
        return Err(Error::Config(
            "user placement on the bisector needs BS 1 and BS 2".into(),
        ));
    }
    let (bs0, bs1, bs2) = (
        cfg.base_stations[0].position,
        cfg.base_stations[1].position,
        cfg.base_stations[2].position,
    );
    cfg.user = point_on_bisector(bs1, bs2, bs0, d, cfg.user)?;
    Ok(())
}

/// The multi-cell scenario: BS 0 serves user 0 next to an 8×8 IRS while BS 1
/// and BS 2 interfere.
pub fn fig3_preset() -> ScenarioConfig {
    let deg = |x: f64| x.to_radians();
    let s3 = 3f64.sqrt();
    let interferer = |position: Point| BaseStation {
        position,
        grid: Grid::new(4, 4),
        power: dbm_to_watts(30.0),
        direct_exponent: 3.7,
        irs_exponent: 2.0,
        irs_rician: DEFAULT_RICIAN,
        departure: Angles::new(deg(22.5), deg(22.5)),
        arrival: Angles::new(deg(22.5), deg(22.5)),
        own_user_distance: default_own_user_distance(),
        own_user_exponent: default_own_user_exponent(),
    };
    let bs0 = Point::new(0.0, 0.0);
    let bs1 = Point::new(600.0, 0.0);
    let bs2 = Point::new(300.0, 300.0 * s3);
    let user = point_on_bisector(bs1, bs2, bs0, preset_user_distance(), Point::new(300.0, 100.0))
        .expect("preset geometry has a bisector point");
    ScenarioConfig {
        base_stations: vec![
            BaseStation {
                position: bs0,
                grid: Grid::new(4, 4),
                power: dbm_to_watts(30.0),
                direct_exponent: 3.7,
                irs_exponent: 2.0,
                irs_rician: DEFAULT_RICIAN,
                departure: Angles::new(deg(60.0), deg(60.0)),
                arrival: Angles::new(deg(60.0), deg(60.0)),
                own_user_distance: default_own_user_distance(),
                own_user_exponent: default_own_user_exponent(),
            },
            interferer(bs1),
            interferer(bs2),
        ],
        user,
        irs: Point::new(300.0, 20.0),
        irs_grid: Grid::new(8, 8),
        irs_user_exponent: 3.0,
        irs_user_rician: DEFAULT_RICIAN,
        irs_user_angles: Angles::new(deg(30.0), deg(30.0)),
        element_spacing: 0.5,
        noise_power: dbm_to_watts(-90.0),
        csi_error: CsiErrorConfig {
            cascaded: 1e-6,
            direct: 1e-6,
            units: ErrorUnits::Normalized,
        },
    }
}

/// One stated distance of the preset compared against its geometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceCheck {
    pub link: &'static str,
    pub stated: f64,
    pub computed: f64,
}

impl DistanceCheck {
    pub fn residual(&self) -> f64 {
        self.computed - self.stated
    }

    pub fn consistent(&self) -> bool {
        self.residual().abs() <= 0.1
    }
}

/// Compares the preset's positions with the distances quoted alongside it.
///
/// The BS-user distances agree by construction. The quoted IRS-user distance
/// `20 + 100√3` does not follow from the quoted positions (they give
/// `100√3 - 20`); the residual is reported rather than hidden.
pub fn preset_distance_checks(cfg: &ScenarioConfig) -> Vec<DistanceCheck> {
    let s3 = 3f64.sqrt();
    let d = preset_user_distance();
    let mut checks: Vec<DistanceCheck> = cfg
        .base_stations
        .iter()
        .take(3)
        .zip(["d_00", "d_10", "d_20"])
        .map(|(bs, link)| DistanceCheck {
            link,
            stated: d,
            computed: bs.position.distance(&cfg.user),
        })
        .collect();
    checks.push(DistanceCheck {
        link: "d_r0",
        stated: 20.0 + 100.0 * s3,
        computed: cfg.irs.distance(&cfg.user),
    });
    checks
}
