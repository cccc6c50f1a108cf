//! Run configuration, link budget and coherence-interval accounting.
//!
//! A scenario is read from a TOML document whose keys mirror the fields of
//! [`ScenarioConfig`]. Every key is optional; omitted keys take the default
//! network parameters (19 wrapped cells of 1 km radius, 18 users per cell,
//! 100-element arrays, 20 MHz at 1900 MHz). Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::antenna::Pattern;
use crate::channel::Cost231Hata;
use crate::{Error, Result};

/// User-to-array association rule and array hardware.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// One array of `3M` omnidirectional elements at each cell center.
    Omni,
    /// Sectorized arrays; each user joins the nearest of its cell's three arrays.
    SecMD,
    /// Sectorized arrays; each user joins the array with the largest average gain.
    SecMP,
    /// Sectorized arrays; each user is served jointly by all three arrays of its cell.
    CompSec,
    /// Corner sites with `3M` omnidirectional elements, each user served by its cell's three sites.
    CompOmn,
}

impl Setting {
    pub const ALL: [Setting; 5] = [
        Setting::Omni,
        Setting::SecMD,
        Setting::SecMP,
        Setting::CompSec,
        Setting::CompOmn,
    ];

    pub fn is_sectorized(self) -> bool {
        matches!(self, Setting::SecMD | Setting::SecMP | Setting::CompSec)
    }

    pub fn is_comp(self) -> bool {
        matches!(self, Setting::CompSec | Setting::CompOmn)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Omni => "omni",
            Setting::SecMD => "secmd",
            Setting::SecMP => "secmp",
            Setting::CompSec => "compsec",
            Setting::CompOmn => "compomn",
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|v| v.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown setting `{s}`")))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precoder {
    /// Maximum-ratio (conjugate) precoding.
    Mr,
    /// Zero-forcing precoding over the array's served pilot directions.
    Zf,
}

impl Precoder {
    pub fn as_str(self) -> &'static str {
        match self {
            Precoder::Mr => "mr",
            Precoder::Zf => "zf",
        }
    }
}

impl FromStr for Precoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr" => Ok(Precoder::Mr),
            "zf" => Ok(Precoder::Zf),
            _ => Err(Error::Parse(format!("unknown precoder `{s}`"))),
        }
    }
}

impl fmt::Display for Precoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerStrategy {
    #[serde(rename = "upa")]
    Upa,
    #[serde(rename = "cpa-nmf")]
    CpaNmf,
    #[serde(rename = "cpa-pmf")]
    CpaPmf,
    #[serde(rename = "dpa-nmf")]
    DpaNmf,
    #[serde(rename = "dpa-pmf")]
    DpaPmf,
}

impl PowerStrategy {
    pub const ALL: [PowerStrategy; 5] = [
        PowerStrategy::Upa,
        PowerStrategy::CpaNmf,
        PowerStrategy::CpaPmf,
        PowerStrategy::DpaNmf,
        PowerStrategy::DpaPmf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PowerStrategy::Upa => "upa",
            PowerStrategy::CpaNmf => "cpa-nmf",
            PowerStrategy::CpaPmf => "cpa-pmf",
            PowerStrategy::DpaNmf => "dpa-nmf",
            PowerStrategy::DpaPmf => "dpa-pmf",
        }
    }
}

impl FromStr for PowerStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PowerStrategy::ALL
            .into_iter()
            .find(|v| v.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown power strategy `{s}`")))
    }
}

impl fmt::Display for PowerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Antenna-pattern selector as written in configs and on the command line:
/// `irp:THETA:AQ`, `file:PATH` or `omni`.
#[derive(Clone, Debug, PartialEq)]
pub enum PatternSpec {
    Irp { beamwidth_deg: f64, main_gain: f64 },
    File(PathBuf),
    Omni,
}

impl PatternSpec {
    pub fn resolve(&self) -> Result<Pattern> {
        match self {
            PatternSpec::Irp {
                beamwidth_deg,
                main_gain,
            } => Pattern::irp(*beamwidth_deg, *main_gain),
            PatternSpec::File(path) => Pattern::read_csv(path),
            PatternSpec::Omni => Ok(Pattern::omni()),
        }
    }
}

impl Default for PatternSpec {
    fn default() -> Self {
        PatternSpec::Irp {
            beamwidth_deg: 120.0,
            main_gain: 3.0,
        }
    }
}

impl FromStr for PatternSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "bad pattern spec `{s}` (expected irp:THETA:AQ, file:PATH or omni)"
            ))
        };
        if s.eq_ignore_ascii_case("omni") {
            return Ok(PatternSpec::Omni);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad());
            }
            return Ok(PatternSpec::File(PathBuf::from(path)));
        }
        let rest = s.strip_prefix("irp:").ok_or_else(bad)?;
        let (theta, gain) = rest.split_once(':').ok_or_else(bad)?;
        Ok(PatternSpec::Irp {
            beamwidth_deg: theta.trim().parse().map_err(|_| bad())?,
            main_gain: gain.trim().parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternSpec::Irp {
                beamwidth_deg,
                main_gain,
            } => write!(f, "irp:{beamwidth_deg}:{main_gain}"),
            PatternSpec::File(p) => write!(f, "file:{}", p.display()),
            PatternSpec::Omni => f.write_str("omni"),
        }
    }
}

impl Serialize for PatternSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatternSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// COST231-Hata sub-parameters. Carrier frequency comes from the scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossParams {
    pub bs_height_m: f64,
    pub user_height_m: f64,
    /// 0 dB for medium cities and suburbs, 3 dB for metropolitan centers.
    pub city_correction_db: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            bs_height_m: 30.0,
            user_height_m: 1.5,
            city_correction_db: 0.0,
        }
    }
}

/// All run parameters. Field names are the config keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub num_cells: usize,
    pub users_per_cell: usize,
    pub antennas_per_array: usize,
    pub cell_radius_m: f64,
    pub exclusion_radius_m: f64,
    pub pilot_reuse: usize,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub max_bs_power_dbm: f64,
    pub max_user_power_dbm: f64,
    pub coherence_bandwidth_hz: f64,
    pub coherence_time_s: f64,
    /// Downlink-to-uplink data sample ratio.
    pub dl_ul_ratio: f64,
    pub pattern: PatternSpec,
    pub pathloss: PathLossParams,
    pub shadow_sigma_db: f64,
    pub setting: Setting,
    pub precoder: Precoder,
    pub power_strategy: PowerStrategy,
    pub num_drops: usize,
    pub master_seed: u64,
    /// Relative bracket width at which max-min bisection stops.
    pub nmf_tolerance: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            num_cells: 19,
            users_per_cell: 18,
            antennas_per_array: 100,
            cell_radius_m: 1000.0,
            exclusion_radius_m: 50.0,
            pilot_reuse: 1,
            carrier_frequency_hz: 1.9e9,
            bandwidth_hz: 20e6,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            max_bs_power_dbm: 30.0,
            max_user_power_dbm: 23.0,
            coherence_bandwidth_hz: 210e3,
            coherence_time_s: 2e-3,
            dl_ul_ratio: 2.0,
            pattern: PatternSpec::default(),
            pathloss: PathLossParams::default(),
            shadow_sigma_db: 8.0,
            setting: Setting::SecMP,
            precoder: Precoder::Mr,
            power_strategy: PowerStrategy::CpaPmf,
            num_drops: 200,
            master_seed: 1,
            nmf_tolerance: 1e-4,
        }
    }
}

/// Linear SNRs referenced to the receiver noise power over the full band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinkBudget {
    pub noise_dbm: f64,
    pub rho_ul: f64,
    pub rho_dl: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FrameAccounting {
    pub tau_c: usize,
    pub tau_p: usize,
    pub tau_ul: usize,
    pub tau_dl: usize,
}

impl FrameAccounting {
    /// Fraction of the coherence interval carrying downlink data.
    pub fn dl_fraction(&self) -> f64 {
        self.tau_dl as f64 / self.tau_c as f64
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn pilot_length(&self) -> usize {
        self.pilot_reuse * self.users_per_cell
    }

    pub fn coherence_samples(&self) -> usize {
        (self.coherence_time_s * self.coherence_bandwidth_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if ![1, 7, 19].contains(&self.num_cells) {
            return fail(format!(
                "num_cells = {} (supported: 1, 7, 19)",
                self.num_cells
            ));
        }
        if self.users_per_cell == 0 {
            return fail("users_per_cell must be positive".into());
        }
        if self.antennas_per_array == 0 {
            return fail("antennas_per_array must be positive".into());
        }
        if !matches!(self.pilot_reuse, 1 | 3) {
            return fail(format!(
                "pilot_reuse = {} (must be 1 or 3)",
                self.pilot_reuse
            ));
        }
        let positive = [
            ("cell_radius_m", self.cell_radius_m),
            ("exclusion_radius_m", self.exclusion_radius_m),
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("coherence_bandwidth_hz", self.coherence_bandwidth_hz),
            ("coherence_time_s", self.coherence_time_s),
            ("dl_ul_ratio", self.dl_ul_ratio),
            ("nmf_tolerance", self.nmf_tolerance),
            ("pathloss.bs_height_m", self.pathloss.bs_height_m),
            ("pathloss.user_height_m", self.pathloss.user_height_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} = {v} must be positive"));
            }
        }
        for (name, v) in [
            ("max_bs_power_dbm", self.max_bs_power_dbm),
            ("max_user_power_dbm", self.max_user_power_dbm),
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
            ("noise_figure_db", self.noise_figure_db),
            (
                "pathloss.city_correction_db",
                self.pathloss.city_correction_db,
            ),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        if !(self.shadow_sigma_db.is_finite() && self.shadow_sigma_db >= 0.0) {
            return fail("shadow_sigma_db must be non-negative".into());
        }
        if self.exclusion_radius_m >= self.cell_radius_m / 2.0 {
            return fail("exclusion_radius_m must be below half the cell radius".into());
        }
        if self.num_drops == 0 {
            return fail("num_drops must be positive".into());
        }
        let (tau_p, tau_c) = (self.pilot_length(), self.coherence_samples());
        if tau_p >= tau_c {
            return fail(format!(
                "pilot length {tau_p} = pilot_reuse x users_per_cell must be below the {tau_c} samples of a coherence interval"
            ));
        }
        Ok(())
    }

    pub fn link_budget(&self) -> LinkBudget {
        let noise_dbm =
            self.noise_density_dbm_hz + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db;
        LinkBudget {
            noise_dbm,
            rho_ul: db_to_linear(self.max_user_power_dbm - noise_dbm),
            rho_dl: db_to_linear(self.max_bs_power_dbm - noise_dbm),
        }
    }

    /// Splits the coherence interval; the downlink share is floored and the
    /// remainder goes to the uplink.
    pub fn frame(&self) -> Result<FrameAccounting> {
        let tau_c = self.coherence_samples();
        let tau_p = self.pilot_length();
        if tau_p >= tau_c {
            return Err(Error::InfeasibleFrame { tau_p, tau_c });
        }
        let data = (tau_c - tau_p) as f64;
        let tau_dl = (self.dl_ul_ratio * data / (1.0 + self.dl_ul_ratio)).floor() as usize;
        Ok(FrameAccounting {
            tau_c,
            tau_p,
            tau_ul: tau_c - tau_p - tau_dl,
            tau_dl,
        })
    }

    pub fn path_loss(&self) -> Cost231Hata {
        Cost231Hata {
            frequency_mhz: self.carrier_frequency_hz / 1e6,
            bs_height_m: self.pathloss.bs_height_m,
            user_height_m: self.pathloss.user_height_m,
            city_correction_db: self.pathloss.city_correction_db,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_config_gives_table_defaults() {
        let s = Scenario::from_toml_str("").unwrap();
        assert_eq!(s.num_cells, 19);
        assert_eq!(s.users_per_cell, 18);
        assert_eq!(s.antennas_per_array, 100);
        assert_eq!(s.cell_radius_m, 1000.0);
        assert_eq!(s.exclusion_radius_m, 50.0);
        assert_eq!(s.coherence_samples(), 420);
    }

    #[test]
    fn reuse_three_gives_54_pilots() {
        let s = Scenario::from_toml_str("pilot_reuse = 3").unwrap();
        assert_eq!(s.frame().unwrap().tau_p, 54);
    }

    #[test]
    fn too_many_users_is_rejected() {
        let err = Scenario::from_toml_str("users_per_cell = 500").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn bad_reuse_and_unknown_keys_are_rejected() {
        assert!(matches!(
            Scenario::from_toml_str("pilot_reuse = 2"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str("num_cels = 19"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str("[pathloss]\nheight = 3"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str("num_cells = \"many\""),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn selectors_parse_from_config() {
        let s = Scenario::from_toml_str(
            "setting = \"compsec\"\nprecoder = \"zf\"\npower_strategy = \"dpa-nmf\"\npattern = \"irp:100:2.5\"",
        )
        .unwrap();
        assert_eq!(s.setting, Setting::CompSec);
        assert_eq!(s.precoder, Precoder::Zf);
        assert_eq!(s.power_strategy, PowerStrategy::DpaNmf);
        assert_eq!(
            s.pattern,
            PatternSpec::Irp {
                beamwidth_deg: 100.0,
                main_gain: 2.5
            }
        );
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario {
            pattern: PatternSpec::File("pat.csv".into()),
            setting: Setting::CompOmn,
            ..Scenario::default()
        };
        assert_eq!(Scenario::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }

    #[test]
    fn default_link_budget() {
        let lb = Scenario::default().link_budget();
        // -174 + 10 log10(20e6) + 9
        assert!((lb.noise_dbm - (-91.98970004336019)).abs() < 1e-9);
        let expected_dl = 10f64.powf((30.0 + 91.98970004336019) / 10.0);
        assert!((lb.rho_dl / expected_dl - 1.0).abs() < 1e-12);
        assert!((lb.rho_dl / 1.582e12 - 1.0).abs() < 1e-3);
        // 7 dB between BS and user power
        assert!((lb.rho_dl / lb.rho_ul - 10f64.powf(0.7)).abs() < 1e-9);
    }

    #[test]
    fn zero_db_link() {
        let mut s = Scenario::default();
        s.max_bs_power_dbm = s.link_budget().noise_dbm;
        assert!((s.link_budget().rho_dl - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_frames() {
        let f = Scenario::default().frame().unwrap();
        assert_eq!(
            f,
            FrameAccounting {
                tau_c: 420,
                tau_p: 18,
                tau_ul: 134,
                tau_dl: 268
            }
        );
        let s = Scenario {
            pilot_reuse: 3,
            ..Scenario::default()
        };
        let f = s.frame().unwrap();
        assert_eq!((f.tau_p, f.tau_dl, f.tau_ul), (54, 244, 122));
    }

    #[test]
    fn smallest_split() {
        // tau_c = 21, tau_p = 18 leaves three data samples.
        let s = Scenario {
            coherence_time_s: 1e-4,
            ..Scenario::default()
        };
        let f = s.frame().unwrap();
        assert_eq!(f.tau_c, 21);
        assert_eq!((f.tau_dl, f.tau_ul), (2, 1));
    }

    #[test]
    fn infeasible_frame() {
        let s = Scenario {
            users_per_cell: 420,
            ..Scenario::default()
        };
        assert!(matches!(
            s.frame(),
            Err(Error::InfeasibleFrame {
                tau_p: 420,
                tau_c: 420
            })
        ));
    }

    proptest! {
        #[test]
        fn frame_counts_add_up(k in 1usize..60, xi in prop_oneof![Just(1usize), Just(3)],
                               ratio in 0.1f64..8.0, tc in 1e-3f64..1e-2) {
            let s = Scenario { users_per_cell: k, pilot_reuse: xi, dl_ul_ratio: ratio,
                               coherence_time_s: tc, ..Scenario::default() };
            if let Ok(f) = s.frame() {
                prop_assert_eq!(f.tau_c, f.tau_p + f.tau_ul + f.tau_dl);
                prop_assert_eq!(f.tau_p, xi * k);
            }
        }

        #[test]
        fn rho_dl_monotone_in_bs_power(p in -20.0f64..60.0, dp in 0.01f64..10.0) {
            let a = Scenario { max_bs_power_dbm: p, ..Scenario::default() }.link_budget();
            let b = Scenario { max_bs_power_dbm: p + dp, ..Scenario::default() }.link_budget();
            prop_assert!(b.rho_dl > a.rho_dl);
        }
    }
}
