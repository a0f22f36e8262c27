//! Per-link channel metrics.
//!
//! All metrics operate on an antenna-deconvolved MPC list and apply the same
//! selection rule first: only paths within `threshold_db` (conventionally
//! 30 dB) of the strongest path enter the statistic. Omnidirectional pathloss
//! sums linear path powers; delay spread is the power-weighted second central
//! moment; azimuth spread is the circular (resultant-length) spread, which is
//! invariant under global rotation of all AoAs.

use crate::error::{Error, Result};
use crate::types::{BandLabel, LinkStats, Mpc};
use crate::SPEED_OF_LIGHT;

/// Azimuth-spread cap [deg], reported when the angular distribution is so
/// dispersed that the mean resultant length reaches 0 (the circular spread
/// √(−2·ln|R|) diverges there): 180°·√(2/π) ≈ 143.62°.
pub const AZIMUTH_SPREAD_CAP_DEG: f64 = 143.61922094451571;

/// Free-space pathloss [dB] at distance `d_m` and frequency `f_hz`:
/// `20·log10(4π·d·f/c)`.
pub fn friis_fspl_db(d_m: f64, f_hz: f64) -> Result<f64> {
    if !(d_m > 0.0) {
        return Err(Error::invalid(
            "fspl",
            format!("distance must be positive, got {d_m} m"),
        ));
    }
    if !(f_hz > 0.0) {
        return Err(Error::invalid(
            "fspl",
            format!("frequency must be positive, got {f_hz} Hz"),
        ));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * d_m * f_hz / SPEED_OF_LIGHT).log10())
}

/// Paths within `threshold_db` of the strongest path.
fn threshold_set<'a>(mpcs: &'a [Mpc], threshold_db: f64) -> Result<Vec<&'a Mpc>> {
    if mpcs.is_empty() {
        return Err(Error::Empty("metric on an empty MPC list".into()));
    }
    if !(threshold_db > 0.0) {
        return Err(Error::invalid(
            "threshold",
            format!("power threshold must be positive, got {threshold_db} dB"),
        ));
    }
    let max_gain = mpcs
        .iter()
        .map(|m| m.path_gain_db)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(mpcs
        .iter()
        .filter(|m| m.path_gain_db >= max_gain - threshold_db)
        .collect())
}

/// Number of paths within `threshold_db` of the strongest. Zero for an empty
/// list (no error: counting nothing is well defined).
pub fn count_within(mpcs: &[Mpc], threshold_db: f64) -> usize {
    if mpcs.is_empty() {
        return 0;
    }
    threshold_set(mpcs, threshold_db).map(|s| s.len()).unwrap_or(0)
}

/// Omnidirectional pathloss [dB]: `−10·log10(Σ 10^(gᵢ/10))` over the
/// threshold set. A single path of gain −80 dB gives exactly 80 dB.
pub fn omni_pathloss_db(mpcs: &[Mpc], threshold_db: f64) -> Result<f64> {
    let set = threshold_set(mpcs, threshold_db)?;
    let total: f64 = set.iter().map(|m| m.linear_power()).sum();
    Ok(-10.0 * total.log10())
}

/// RMS delay spread [s]: power-weighted second central moment of delay over
/// the threshold set.
pub fn rms_delay_spread_s(mpcs: &[Mpc], threshold_db: f64) -> Result<f64> {
    let set = threshold_set(mpcs, threshold_db)?;
    let total: f64 = set.iter().map(|m| m.linear_power()).sum();
    let mean: f64 = set.iter().map(|m| m.linear_power() * m.delay_s).sum::<f64>() / total;
    // Two-pass (centered) variance: the one-pass E[τ²]−μ² form loses most of
    // its precision when the spread is small against the absolute delay.
    let var: f64 = set
        .iter()
        .map(|m| {
            let d = m.delay_s - mean;
            m.linear_power() * d * d
        })
        .sum::<f64>()
        / total;
    Ok(var.sqrt())
}

/// Circular azimuth spread [deg]: `√(−2·ln|R|)` converted to degrees, where
/// `R` is the power-weighted mean resultant of the AoA unit vectors over the
/// threshold set. Capped at [`AZIMUTH_SPREAD_CAP_DEG`] as `|R| → 0`.
pub fn azimuth_spread_deg(mpcs: &[Mpc], threshold_db: f64) -> Result<f64> {
    let set = threshold_set(mpcs, threshold_db)?;
    let total: f64 = set.iter().map(|m| m.linear_power()).sum();
    let (mut x, mut y) = (0.0, 0.0);
    for m in &set {
        let a = m.aoa_deg.to_radians();
        x += m.linear_power() * a.cos();
        y += m.linear_power() * a.sin();
    }
    let r = (x.hypot(y) / total).min(1.0);
    if r <= 0.0 {
        return Ok(AZIMUTH_SPREAD_CAP_DEG);
    }
    // Within rounding error of a perfectly concentrated set: report zero
    // instead of the sqrt-amplified noise (sqrt(-2 ln(1-1e-15)) ≈ 1e-6 deg).
    if 1.0 - r <= 1e-15 {
        return Ok(0.0);
    }
    let spread = (-2.0 * r.ln()).sqrt().to_degrees();
    Ok(spread.min(AZIMUTH_SPREAD_CAP_DEG))
}

/// Computes the full per-link summary: omni pathloss, RMS delay spread, and
/// azimuth spread over the 30-dB set, plus 30-dB and 15-dB path counts.
pub fn link_stats(
    link_id: &str,
    band: BandLabel,
    distance_m: f64,
    mpcs: &[Mpc],
) -> Result<LinkStats> {
    const ANALYSIS_THRESHOLD_DB: f64 = 30.0;
    const COUNT_THRESHOLD_NARROW_DB: f64 = 15.0;
    if !(distance_m > 0.0) {
        return Err(Error::invalid(
            "link stats",
            format!("distance must be positive, got {distance_m} m"),
        ));
    }
    Ok(LinkStats {
        link_id: link_id.to_string(),
        band,
        distance_m,
        omni_pathloss_db: omni_pathloss_db(mpcs, ANALYSIS_THRESHOLD_DB)?,
        rms_delay_spread_s: rms_delay_spread_s(mpcs, ANALYSIS_THRESHOLD_DB)?,
        azimuth_spread_deg: azimuth_spread_deg(mpcs, ANALYSIS_THRESHOLD_DB)?,
        n_paths_30db: count_within(mpcs, ANALYSIS_THRESHOLD_DB),
        n_paths_15db: count_within(mpcs, COUNT_THRESHOLD_NARROW_DB),
    })
}

/// Travel distance [m] corresponding to an absolute delay [s].
pub fn delay_to_distance_m(delay_s: f64) -> f64 {
    SPEED_OF_LIGHT * delay_s
}
