//! Core channel data types.
//!
//! [`BandConfig`] pins the sounding setup of one frequency band, [`Padp`] is
//! the measured (or simulated) power-angular-delay profile of one link,
//! [`Mpc`] is an antenna-deconvolved multipath component, and [`LinkStats`]
//! collects the per-link summary metrics. Cross-band comparisons are only
//! meaningful when the sounding geometry matches; [`validate_comparability`]
//! enforces that.

use serde::{Deserialize, Serialize};

use crate::antenna::{wrap_deg_360, AntennaPattern};
use crate::error::{Error, Result};

/// Relative tolerance for the `delay_resolution == 1/bandwidth` invariant.
const DELAY_RES_REL_TOL: f64 = 1e-9;

// ── Band configuration ──────────────────────────────────────────────────────

/// The two measured frequency bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandLabel {
    #[serde(alias = "b28")]
    B28,
    #[serde(alias = "b140")]
    B140,
}

impl std::fmt::Display for BandLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BandLabel::B28 => write!(f, "B28"),
            BandLabel::B140 => write!(f, "B140"),
        }
    }
}

impl std::str::FromStr for BandLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "B28" => Ok(BandLabel::B28),
            "B140" => Ok(BandLabel::B140),
            other => Err(Error::invalid(
                "band label",
                format!("expected B28 or B140, got {other:?}"),
            )),
        }
    }
}

/// Line-of-sight condition of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LosState {
    Los,
    Nlos,
}

/// Sounding configuration of one band.
///
/// The directional sounder scans the receive horn over a full azimuth circle
/// in fixed steps and records one power-delay profile per pointing; delay
/// resolution is tied to the sounding bandwidth (`1/bandwidth`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub label: BandLabel,
    /// Center frequency [Hz].
    pub center_frequency_hz: f64,
    /// Null-to-null sounding bandwidth [Hz].
    pub bandwidth_hz: f64,
    /// Transmit power [dBm].
    pub tx_power_dbm: f64,
    /// Measurable power-delay-profile dynamic range [dB].
    pub pdp_dynamic_range_db: f64,
    /// Delay bin width [s]; must equal `1/bandwidth_hz`.
    pub delay_resolution_s: f64,
    /// Azimuth scan step [deg]; must divide 360.
    pub azimuth_step_deg: f64,
    /// Receive antenna (scanned horn).
    pub rx_antenna: AntennaPattern,
    /// Transmit antenna (fixed bicone).
    pub tx_antenna: AntennaPattern,
    /// Common Tx/Rx antenna height [m], when recorded.
    pub antenna_height_m: Option<f64>,
}

impl BandConfig {
    /// 28-GHz band configuration: 28.5 GHz center, 4 GHz bandwidth, 2 dBm
    /// transmit power, 123 dB dynamic range, 0.25 ns delay bins, 5° azimuth
    /// steps, 19 dBi horn receive / 0 dBi bicone transmit at 1.9 m height.
    pub fn b28() -> Self {
        BandConfig {
            label: BandLabel::B28,
            center_frequency_hz: 28.5e9,
            bandwidth_hz: 4.0e9,
            tx_power_dbm: 2.0,
            pdp_dynamic_range_db: 123.0,
            delay_resolution_s: 0.25e-9,
            azimuth_step_deg: 5.0,
            rx_antenna: AntennaPattern::horn_19dbi(),
            tx_antenna: AntennaPattern::bicone_0dbi(),
            antenna_height_m: Some(1.9),
        }
    }

    /// 140-GHz band configuration: identical sounding geometry to
    /// [`BandConfig::b28`] at 143.1 GHz center, −7 dBm transmit power, and
    /// 130 dB dynamic range.
    pub fn b140() -> Self {
        BandConfig {
            label: BandLabel::B140,
            center_frequency_hz: 143.1e9,
            tx_power_dbm: -7.0,
            pdp_dynamic_range_db: 130.0,
            ..BandConfig::b28()
        }
    }

    /// Looks up a preset configuration by label.
    pub fn preset(label: BandLabel) -> Self {
        match label {
            BandLabel::B28 => BandConfig::b28(),
            BandLabel::B140 => BandConfig::b140(),
        }
    }

    /// Number of azimuth pointings in a full scan.
    pub fn n_azimuth(&self) -> usize {
        (360.0 / self.azimuth_step_deg).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency_hz > 0.0) {
            return Err(Error::invalid(
                "band config",
                format!("center frequency must be positive, got {}", self.center_frequency_hz),
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid(
                "band config",
                format!("bandwidth must be positive, got {}", self.bandwidth_hz),
            ));
        }
        if !(self.pdp_dynamic_range_db > 0.0) {
            return Err(Error::invalid(
                "band config",
                format!("PDP dynamic range must be positive, got {}", self.pdp_dynamic_range_db),
            ));
        }
        let expected = 1.0 / self.bandwidth_hz;
        if !((self.delay_resolution_s - expected).abs() <= expected * DELAY_RES_REL_TOL) {
            return Err(Error::invalid(
                "band config",
                format!(
                    "delay resolution {} s violates 1/bandwidth = {} s",
                    self.delay_resolution_s, expected
                ),
            ));
        }
        if !(self.azimuth_step_deg > 0.0) || self.azimuth_step_deg > 360.0 {
            return Err(Error::invalid(
                "band config",
                format!("azimuth step must be in (0, 360], got {}", self.azimuth_step_deg),
            ));
        }
        let n = 360.0 / self.azimuth_step_deg;
        if (n - n.round()).abs() > 1e-9 {
            return Err(Error::invalid(
                "band config",
                format!("azimuth step {}° does not divide 360°", self.azimuth_step_deg),
            ));
        }
        if let Some(h) = self.antenna_height_m {
            if !(h > 0.0) {
                return Err(Error::invalid(
                    "band config",
                    format!("antenna height must be positive, got {h}"),
                ));
            }
        }
        self.rx_antenna.validate()?;
        self.tx_antenna.validate()?;
        Ok(())
    }
}

/// Checks that two band configurations were sounded with the same geometry so
/// their channel statistics can be compared: equal bandwidth, equal delay
/// resolution, equal receive beamwidths (azimuth and elevation), equal
/// azimuth step, and equal antenna heights when both record one.
///
/// Transmit power and dynamic range may differ; they affect sensitivity, not
/// the angular/delay measurement geometry.
pub fn validate_comparability(a: &BandConfig, b: &BandConfig) -> Result<()> {
    let mut failures = Vec::new();
    if a.bandwidth_hz != b.bandwidth_hz {
        failures.push(format!(
            "bandwidth: {} Hz vs {} Hz",
            a.bandwidth_hz, b.bandwidth_hz
        ));
    }
    if a.delay_resolution_s != b.delay_resolution_s {
        failures.push(format!(
            "delay resolution: {} s vs {} s",
            a.delay_resolution_s, b.delay_resolution_s
        ));
    }
    if a.rx_antenna.hpbw_az_deg != b.rx_antenna.hpbw_az_deg {
        failures.push(format!(
            "rx azimuth HPBW: {:?}° vs {:?}°",
            a.rx_antenna.hpbw_az_deg, b.rx_antenna.hpbw_az_deg
        ));
    }
    if a.rx_antenna.hpbw_el_deg != b.rx_antenna.hpbw_el_deg {
        failures.push(format!(
            "rx elevation HPBW: {}° vs {}°",
            a.rx_antenna.hpbw_el_deg, b.rx_antenna.hpbw_el_deg
        ));
    }
    if a.azimuth_step_deg != b.azimuth_step_deg {
        failures.push(format!(
            "azimuth step: {}° vs {}°",
            a.azimuth_step_deg, b.azimuth_step_deg
        ));
    }
    if let (Some(ha), Some(hb)) = (a.antenna_height_m, b.antenna_height_m) {
        if ha != hb {
            failures.push(format!("antenna height: {ha} m vs {hb} m"));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::NotComparable { failures })
    }
}

// ── Power-angular-delay profile ─────────────────────────────────────────────

/// Clipping sanity bound: grid cells may not fall more than this far below
/// the stored noise floor (a receiver reports nothing below its dynamic
/// range, so deeper cells indicate a malformed file).
const GRID_FLOOR_MARGIN_DB: f64 = 20.0;

/// Power-angular-delay profile of one link: a dB power grid over azimuth
/// pointings (rows) × delay bins (columns).
///
/// The delay axis is absolute propagation delay on a uniform grid of
/// `band.delay_resolution_s` starting at `delay_start_s`; the azimuth axis is
/// `0°, step, 2·step, …` covering the full circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Padp {
    pub band: BandConfig,
    pub link_id: String,
    /// Tx–Rx ground distance [m].
    pub tx_rx_distance_m: f64,
    pub los: LosState,
    /// Noise floor of the measurement [dB]; stored metadata, never estimated.
    pub noise_floor_db: f64,
    /// First delay bin center [s].
    pub delay_start_s: f64,
    /// Number of delay bins.
    pub n_delay: usize,
    /// Row-major power grid [dB]: `power_db[az_idx * n_delay + delay_idx]`.
    pub power_db: Vec<f64>,
}

impl Padp {
    pub fn n_azimuth(&self) -> usize {
        self.band.n_azimuth()
    }

    /// Azimuth of pointing `az_idx` [deg].
    pub fn azimuth_at(&self, az_idx: usize) -> f64 {
        az_idx as f64 * self.band.azimuth_step_deg
    }

    /// Center delay of bin `delay_idx` [s].
    pub fn delay_at(&self, delay_idx: usize) -> f64 {
        self.delay_start_s + delay_idx as f64 * self.band.delay_resolution_s
    }

    pub fn get(&self, az_idx: usize, delay_idx: usize) -> f64 {
        self.power_db[az_idx * self.n_delay + delay_idx]
    }

    pub fn get_mut(&mut self, az_idx: usize, delay_idx: usize) -> &mut f64 {
        &mut self.power_db[az_idx * self.n_delay + delay_idx]
    }

    /// Largest grid value and its (azimuth, delay) indices; ties resolve to
    /// the smaller delay index, then the smaller azimuth index.
    pub fn global_max(&self) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
        for d in 0..self.n_delay {
            for a in 0..self.n_azimuth() {
                let v = self.get(a, d);
                if v > best.0 {
                    best = (v, a, d);
                }
            }
        }
        (best.0, best.1, best.2)
    }

    pub fn validate(&self) -> Result<()> {
        self.band.validate()?;
        if self.n_delay == 0 {
            return Err(Error::invalid("padp", "grid has zero delay bins".to_string()));
        }
        if !(self.tx_rx_distance_m > 0.0) {
            return Err(Error::invalid(
                "padp",
                format!("tx-rx distance must be positive, got {}", self.tx_rx_distance_m),
            ));
        }
        if self.delay_start_s < 0.0 {
            return Err(Error::invalid(
                "padp",
                format!("delay axis must start at or after 0 s, got {}", self.delay_start_s),
            ));
        }
        let expected = self.n_azimuth() * self.n_delay;
        if self.power_db.len() != expected {
            return Err(Error::invalid(
                "padp",
                format!(
                    "grid has {} cells, expected {} ({} azimuth rows × {} delay bins)",
                    self.power_db.len(),
                    expected,
                    self.n_azimuth(),
                    self.n_delay
                ),
            ));
        }
        let lower = self.noise_floor_db - GRID_FLOOR_MARGIN_DB;
        for (i, &v) in self.power_db.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(
                    "padp",
                    format!("grid cell {i} is not finite ({v})"),
                ));
            }
            if v < lower {
                return Err(Error::invalid(
                    "padp",
                    format!(
                        "grid cell {i} ({v} dB) falls more than {GRID_FLOOR_MARGIN_DB} dB below the noise floor ({} dB)",
                        self.noise_floor_db
                    ),
                ));
            }
        }
        Ok(())
    }
}

// ── Multipath components ────────────────────────────────────────────────────

/// One antenna-deconvolved multipath component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    /// Absolute propagation delay [s], ≥ 0.
    pub delay_s: f64,
    /// Azimuth angle of arrival [deg], normalized to [0°, 360°).
    pub aoa_deg: f64,
    /// Path gain [dB], ≤ 0 (a passive channel never amplifies).
    pub path_gain_db: f64,
}

impl Mpc {
    /// Builds a validated component; the AoA is wrapped into [0°, 360°).
    pub fn new(delay_s: f64, aoa_deg: f64, path_gain_db: f64) -> Result<Self> {
        if !delay_s.is_finite() || delay_s < 0.0 {
            return Err(Error::invalid(
                "mpc",
                format!("delay must be finite and ≥ 0 s, got {delay_s}"),
            ));
        }
        if !aoa_deg.is_finite() {
            return Err(Error::invalid("mpc", format!("AoA must be finite, got {aoa_deg}")));
        }
        if !path_gain_db.is_finite() || path_gain_db > 0.0 {
            return Err(Error::invalid(
                "mpc",
                format!("path gain must be finite and ≤ 0 dB, got {path_gain_db}"),
            ));
        }
        Ok(Mpc {
            delay_s,
            aoa_deg: wrap_deg_360(aoa_deg),
            path_gain_db,
        })
    }

    /// Linear power corresponding to `path_gain_db`.
    pub fn linear_power(&self) -> f64 {
        10f64.powf(self.path_gain_db / 10.0)
    }
}

// ── Per-link summary statistics ─────────────────────────────────────────────

/// Summary metrics of one link, computed from its MPC list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub link_id: String,
    pub band: BandLabel,
    /// Tx–Rx ground distance [m].
    pub distance_m: f64,
    /// Omnidirectional pathloss [dB] over the 30-dB path set.
    pub omni_pathloss_db: f64,
    /// RMS delay spread [s] over the 30-dB path set.
    pub rms_delay_spread_s: f64,
    /// Circular azimuth spread [deg] over the 30-dB path set.
    pub azimuth_spread_deg: f64,
    /// Number of paths within 30 dB of the strongest.
    pub n_paths_30db: usize,
    /// Number of paths within 15 dB of the strongest.
    pub n_paths_15db: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_match_the_sounder_setup() {
        let b28 = BandConfig::b28();
        let b140 = BandConfig::b140();
        b28.validate().unwrap();
        b140.validate().unwrap();
        assert_eq!(b28.center_frequency_hz, 28.5e9);
        assert_eq!(b140.center_frequency_hz, 143.1e9);
        // Shared geometry: 4 GHz bandwidth ⇒ 0.25 ns bins, 72 pointings.
        for b in [&b28, &b140] {
            assert_eq!(b.bandwidth_hz, 4.0e9);
            assert_eq!(b.delay_resolution_s, 0.25e-9);
            assert_eq!(b.n_azimuth(), 72);
        }
        assert_eq!(b28.tx_power_dbm, 2.0);
        assert_eq!(b140.tx_power_dbm, -7.0);
        assert_eq!(b28.pdp_dynamic_range_db, 123.0);
        assert_eq!(b140.pdp_dynamic_range_db, 130.0);
    }

    #[test]
    fn validate_rejects_delay_resolution_not_reciprocal_of_bandwidth() {
        let mut cfg = BandConfig::b28();
        cfg.delay_resolution_s = 0.5e-9;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("1/bandwidth"), "{err}");
    }

    #[test]
    fn validate_rejects_azimuth_step_not_dividing_360() {
        let mut cfg = BandConfig::b28();
        cfg.azimuth_step_deg = 7.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_are_mutually_comparable() {
        validate_comparability(&BandConfig::b28(), &BandConfig::b140()).unwrap();
    }

    #[test]
    fn comparability_is_symmetric() {
        let a = BandConfig::b28();
        let mut b = BandConfig::b140();
        b.azimuth_step_deg = 10.0;
        b.delay_resolution_s = 0.25e-9;
        assert!(validate_comparability(&a, &b).is_err());
        assert!(validate_comparability(&b, &a).is_err());
    }

    #[test]
    fn comparability_error_names_every_failing_criterion() {
        let a = BandConfig::b28();
        let mut b = BandConfig::b140();
        b.bandwidth_hz = 2.0e9;
        b.delay_resolution_s = 0.5e-9;
        b.antenna_height_m = Some(2.5);
        let err = validate_comparability(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bandwidth"), "{msg}");
        assert!(msg.contains("delay resolution"), "{msg}");
        assert!(msg.contains("antenna height"), "{msg}");
    }

    #[test]
    fn comparability_ignores_tx_power_and_dynamic_range() {
        // The presets differ in both and still compare fine; force an extreme
        // difference to make the intent explicit.
        let a = BandConfig::b28();
        let mut b = BandConfig::b28();
        b.tx_power_dbm = -40.0;
        b.pdp_dynamic_range_db = 60.0;
        validate_comparability(&a, &b).unwrap();
    }

    #[test]
    fn comparability_skips_heights_when_one_is_absent() {
        let a = BandConfig::b28();
        let mut b = BandConfig::b140();
        b.antenna_height_m = None;
        validate_comparability(&a, &b).unwrap();
    }

    #[test]
    fn mpc_constructor_validates_and_wraps() {
        assert!(Mpc::new(-1e-9, 0.0, -80.0).is_err(), "negative delay");
        assert!(Mpc::new(50e-9, 0.0, 0.1).is_err(), "positive gain");
        assert!(Mpc::new(f64::NAN, 0.0, -80.0).is_err(), "NaN delay");
        let m = Mpc::new(50e-9, -15.0, -80.0).unwrap();
        assert!((m.aoa_deg - 345.0).abs() < 1e-12);
        let m = Mpc::new(50e-9, 360.0, -80.0).unwrap();
        assert_eq!(m.aoa_deg, 0.0);
    }

    #[test]
    fn padp_validate_checks_grid_dimensions() {
        let band = BandConfig::b28();
        let padp = Padp {
            band: band.clone(),
            link_id: "L1".into(),
            tx_rx_distance_m: 10.0,
            los: LosState::Los,
            noise_floor_db: -130.0,
            delay_start_s: 0.0,
            n_delay: 100,
            power_db: vec![-130.0; 72 * 100],
        };
        padp.validate().unwrap();
        let mut bad = padp.clone();
        bad.power_db.pop();
        let err = bad.validate().unwrap_err();
        assert!(err.to_string().contains("expected 7200"), "{err}");
    }

    #[test]
    fn padp_validate_rejects_cells_far_below_noise_floor() {
        let band = BandConfig::b28();
        let mut padp = Padp {
            band,
            link_id: "L1".into(),
            tx_rx_distance_m: 10.0,
            los: LosState::Los,
            noise_floor_db: -130.0,
            delay_start_s: 0.0,
            n_delay: 10,
            power_db: vec![-130.0; 72 * 10],
        };
        padp.power_db[3] = -151.0;
        assert!(padp.validate().is_err());
        padp.power_db[3] = -149.0;
        assert!(padp.validate().is_ok());
        padp.power_db[3] = f64::NAN;
        assert!(padp.validate().is_err());
        padp.power_db[3] = f64::NEG_INFINITY;
        assert!(padp.validate().is_err());
    }

    #[test]
    fn padp_axes_and_global_max() {
        let band = BandConfig::b28();
        let mut padp = Padp {
            band,
            link_id: "L1".into(),
            tx_rx_distance_m: 10.0,
            los: LosState::Los,
            noise_floor_db: -130.0,
            delay_start_s: 10e-9,
            n_delay: 20,
            power_db: vec![-130.0; 72 * 20],
        };
        assert!((padp.azimuth_at(9) - 45.0).abs() < 1e-12);
        assert!((padp.delay_at(4) - 11e-9).abs() < 1e-21);
        *padp.get_mut(9, 4) = -61.0;
        let (v, a, d) = padp.global_max();
        assert_eq!((a, d), (9, 4));
        assert_eq!(v, -61.0);
    }
}
