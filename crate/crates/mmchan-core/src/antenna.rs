//! Antenna gain patterns.
//!
//! Both sounder antennas are described by the same parabolic (in dB) model:
//! the gain rolls off quadratically from boresight, reaching −12 dB at one
//! half-power beamwidth of offset per axis, and is floored at a constant
//! sidelobe level relative to boresight. A pattern without an azimuth
//! beamwidth is azimuth-omnidirectional (the biconical transmit antenna);
//! its azimuth term is identically zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parabolic-in-dB antenna pattern with a hard sidelobe floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    /// Boresight gain [dBi].
    pub boresight_gain_dbi: f64,
    /// Azimuth half-power beamwidth [deg]; `None` means omnidirectional in
    /// azimuth.
    pub hpbw_az_deg: Option<f64>,
    /// Elevation half-power beamwidth [deg].
    pub hpbw_el_deg: f64,
    /// Sidelobe floor relative to boresight [dB], strictly negative
    /// (e.g. −30 ⇒ gain never drops below boresight − 30 dB).
    pub sidelobe_floor_db: f64,
}

impl AntennaPattern {
    /// 19 dBi receive horn: 10° azimuth and 40° elevation beamwidths, −30 dB
    /// sidelobe floor.
    pub fn horn_19dbi() -> Self {
        AntennaPattern {
            boresight_gain_dbi: 19.0,
            hpbw_az_deg: Some(10.0),
            hpbw_el_deg: 40.0,
            sidelobe_floor_db: -30.0,
        }
    }

    /// 0 dBi biconical transmit antenna: omnidirectional in azimuth, 60°
    /// elevation beamwidth, −20 dB elevation floor.
    pub fn bicone_0dbi() -> Self {
        AntennaPattern {
            boresight_gain_dbi: 0.0,
            hpbw_az_deg: None,
            hpbw_el_deg: 60.0,
            sidelobe_floor_db: -20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(az) = self.hpbw_az_deg {
            if !(az > 0.0) {
                return Err(Error::invalid(
                    "antenna pattern",
                    format!("azimuth HPBW must be positive, got {az}"),
                ));
            }
        }
        if !(self.hpbw_el_deg > 0.0) {
            return Err(Error::invalid(
                "antenna pattern",
                format!("elevation HPBW must be positive, got {}", self.hpbw_el_deg),
            ));
        }
        if !(self.sidelobe_floor_db < 0.0) {
            return Err(Error::invalid(
                "antenna pattern",
                format!(
                    "sidelobe floor must be negative (relative dB), got {}",
                    self.sidelobe_floor_db
                ),
            ));
        }
        Ok(())
    }

    /// Gain [dBi] at the given offsets from boresight. The azimuth offset is
    /// wrapped to (−180°, 180°] before the quadratic term is evaluated.
    pub fn gain_db(&self, az_offset_deg: f64, el_offset_deg: f64) -> f64 {
        let az = wrap_deg_180(az_offset_deg);
        let mut rolloff = 0.0;
        if let Some(hpbw_az) = self.hpbw_az_deg {
            rolloff -= 12.0 * (az / hpbw_az).powi(2);
        }
        rolloff -= 12.0 * (el_offset_deg / self.hpbw_el_deg).powi(2);
        self.boresight_gain_dbi + rolloff.max(self.sidelobe_floor_db)
    }
}

/// Wraps an angle to (−180°, 180°].
pub fn wrap_deg_180(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Wraps an angle to [0°, 360°).
pub fn wrap_deg_360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 when deg is a tiny negative number.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn horn_boresight_gain() {
        let horn = AntennaPattern::horn_19dbi();
        assert!((horn.gain_db(0.0, 0.0) - 19.0).abs() < TOL);
    }

    #[test]
    fn horn_rolls_off_3db_at_half_beamwidth() {
        // 5° offset on a 10° beam: 12·(5/10)² = 3 dB down.
        let horn = AntennaPattern::horn_19dbi();
        assert!((horn.gain_db(5.0, 0.0) - 16.0).abs() < TOL);
    }

    #[test]
    fn horn_back_lobe_hits_floor() {
        // At 180° the quadratic term is far past the −30 dB floor.
        let horn = AntennaPattern::horn_19dbi();
        assert!((horn.gain_db(180.0, 0.0) - (-11.0)).abs() < TOL);
    }

    #[test]
    fn horn_elevation_rolloff_combines_with_azimuth() {
        // 12·(5/10)² + 12·(20/40)² = 3 + 3 = 6 dB down.
        let horn = AntennaPattern::horn_19dbi();
        assert!((horn.gain_db(5.0, 20.0) - 13.0).abs() < TOL);
    }

    #[test]
    fn bicone_is_azimuth_omni() {
        let bicone = AntennaPattern::bicone_0dbi();
        for az in [-180.0, -37.0, 0.0, 90.0, 179.0] {
            assert!((bicone.gain_db(az, 0.0) - 0.0).abs() < TOL);
        }
    }

    #[test]
    fn bicone_elevation_rolloff_and_floor() {
        let bicone = AntennaPattern::bicone_0dbi();
        // 12·(30/60)² = 3 dB down.
        assert!((bicone.gain_db(0.0, 30.0) - (-3.0)).abs() < TOL);
        // 12·(90/60)² = 27 dB, clipped at the −20 dB floor.
        assert!((bicone.gain_db(0.0, 90.0) - (-20.0)).abs() < TOL);
    }

    #[test]
    fn gain_is_symmetric_and_wraps() {
        let horn = AntennaPattern::horn_19dbi();
        assert!((horn.gain_db(7.0, 0.0) - horn.gain_db(-7.0, 0.0)).abs() < TOL);
        // 355° offset is the same direction as −5°.
        assert!((horn.gain_db(355.0, 0.0) - horn.gain_db(-5.0, 0.0)).abs() < TOL);
    }

    #[test]
    fn gain_never_below_floor() {
        let horn = AntennaPattern::horn_19dbi();
        let mut az = -180.0;
        while az <= 180.0 {
            assert!(horn.gain_db(az, 0.0) >= 19.0 - 30.0 - TOL);
            az += 1.0;
        }
    }

    #[test]
    fn validate_rejects_bad_parameters() {
        let mut p = AntennaPattern::horn_19dbi();
        p.hpbw_el_deg = 0.0;
        assert!(p.validate().is_err());
        let mut p = AntennaPattern::horn_19dbi();
        p.sidelobe_floor_db = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn wrap_helpers() {
        assert!((wrap_deg_180(190.0) - (-170.0)).abs() < TOL);
        assert!((wrap_deg_180(-190.0) - 170.0).abs() < TOL);
        assert!((wrap_deg_360(-5.0) - 355.0).abs() < TOL);
        assert_eq!(wrap_deg_360(360.0), 0.0);
    }
}
