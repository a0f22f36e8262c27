//! Multipath component extraction from power-angular-delay profiles.
//!
//! Extraction inverts the sounder rendering: find cells that look like path
//! responses, refine their sub-cell position, and undo the antenna and pulse
//! shaping to recover `(delay, azimuth, path gain)` triples.
//!
//! The candidate rule is a plateau-aware local maximum.  A cell qualifies
//! when it is
//!
//! 1. within `threshold_db` of the strongest cell of the profile (inclusive),
//! 2. at least `min_snr_db` above the noise floor,
//! 3. no smaller than any of its eight neighbors (azimuth wraps around,
//!    missing delay neighbors at the grid edge are ignored), and
//! 4. *strictly* greater than at least one of its two same-delay azimuth
//!    neighbors.
//!
//! Rule 4 exists because a hard sidelobe floor in the receive pattern makes
//! every far-off pointing of a strong path bit-identical: those cells form a
//! plateau that satisfies rules 1–3 yet carries no angular information.  A
//! genuine response always rolls off in azimuth on at least one side, even
//! when the path falls exactly between two pointings.
//!
//! Refinement fits a three-point parabola through the dB values along delay
//! and along azimuth (exact for the quadratic-dB beam shape), and recovers
//! the path gain from the above-floor energy in the peak pointing within
//! [`PULSE_SUPPORT_BINS`](crate::sounder::PULSE_SUPPORT_BINS) delay bins,
//! corrected for the fraction of pulse energy that window captures at the
//! refined sub-bin offset and for the antenna gains at the refined azimuth.
//! Duplicate candidates closer than one delay bin *and* one azimuth step to
//! a stronger accepted path are suppressed.

use serde::{Deserialize, Serialize};

use crate::antenna::wrap_deg_180;
use crate::error::{Error, Result};
use crate::sounder::PULSE_SUPPORT_BINS;
use crate::types::{Mpc, Padp};

/// Extraction thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractParams {
    /// Keep peaks within this many dB of the strongest cell (inclusive).
    pub threshold_db: f64,
    /// Require peaks at least this many dB above the noise floor.
    pub min_snr_db: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            threshold_db: 30.0,
            min_snr_db: 6.0,
        }
    }
}

impl ExtractParams {
    /// Check that both thresholds are positive and finite.
    pub fn validate(&self) -> Result<()> {
        if !self.threshold_db.is_finite() || self.threshold_db <= 0.0 {
            return Err(Error::invalid(
                "extract params",
                format!("non-positive threshold {}", self.threshold_db),
            ));
        }
        if !self.min_snr_db.is_finite() || self.min_snr_db < 0.0 {
            return Err(Error::invalid(
                "extract params",
                format!("negative minimum SNR {}", self.min_snr_db),
            ));
        }
        Ok(())
    }
}

/// Vertex offset of the parabola through `(-1, left)`, `(0, center)`,
/// `(1, right)`, clamped to half a sample; zero when the points are not
/// strictly concave.
fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom >= -1e-12 {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Fraction of squared-sinc pulse energy captured by the summation window
/// `[-PULSE_SUPPORT_BINS, PULSE_SUPPORT_BINS]` around the nominal bin when
/// the true position sits `frac` bins away from it.
fn window_energy_share(frac: f64) -> f64 {
    let mut s = 0.0;
    for m in -PULSE_SUPPORT_BINS..=PULSE_SUPPORT_BINS {
        let off = m as f64 - frac;
        if off == 0.0 {
            s += 1.0;
        } else {
            let x = std::f64::consts::PI * off;
            let v = x.sin() / x;
            s += v * v;
        }
    }
    s
}

/// Extract multipath components from a power-angular-delay profile.
///
/// Returns the surviving paths sorted by delay (ties by azimuth).  The
/// result for a pure-noise profile is empty.  Raising `threshold_db` can
/// only admit additional, weaker paths; it never removes one.
pub fn extract_mpcs(padp: &Padp, params: &ExtractParams) -> Result<Vec<Mpc>> {
    padp.validate()?;
    params.validate()?;
    let band = &padp.band;
    let n_az = band.n_azimuth();
    let n_delay = padp.n_delay;
    let step = band.delay_resolution_s;
    let floor_lin = 10f64.powf(padp.noise_floor_db / 10.0);

    let (global_max, _, _) = padp.global_max();
    let cut = global_max - params.threshold_db;
    let snr_cut = padp.noise_floor_db + params.min_snr_db;

    let mut candidates: Vec<Mpc> = Vec::new();
    for a in 0..n_az {
        for k in 0..n_delay {
            let v = padp.get(a, k);
            if v < cut || v < snr_cut {
                continue;
            }
            let mut is_max = true;
            for da in [-1i64, 0, 1] {
                for dk in [-1i64, 0, 1] {
                    if da == 0 && dk == 0 {
                        continue;
                    }
                    let kk = k as i64 + dk;
                    if kk < 0 || kk >= n_delay as i64 {
                        continue;
                    }
                    let aa = (a as i64 + da).rem_euclid(n_az as i64) as usize;
                    if v < padp.get(aa, kk as usize) {
                        is_max = false;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let left_az = padp.get((a + n_az - 1) % n_az, k);
            let right_az = padp.get((a + 1) % n_az, k);
            if !(v > left_az || v > right_az) {
                continue; // sidelobe plateau, no azimuth rolloff on either side
            }
            candidates.push(refine(padp, a, k, floor_lin));
        }
    }

    // Strongest first; deterministic tie-break so duplicate suppression and
    // output order never depend on scan order.
    candidates.sort_by(|x, y| {
        y.path_gain_db
            .total_cmp(&x.path_gain_db)
            .then(x.delay_s.total_cmp(&y.delay_s))
            .then(x.aoa_deg.total_cmp(&y.aoa_deg))
    });
    let mut accepted: Vec<Mpc> = Vec::new();
    for c in candidates {
        let dup = accepted.iter().any(|m| {
            (m.delay_s - c.delay_s).abs() < step
                && wrap_deg_180(m.aoa_deg - c.aoa_deg).abs() < band.azimuth_step_deg
        });
        if !dup {
            accepted.push(c);
        }
    }
    accepted.sort_by(|x, y| {
        x.delay_s
            .total_cmp(&y.delay_s)
            .then(x.aoa_deg.total_cmp(&y.aoa_deg))
    });
    Ok(accepted)
}

/// Refine one candidate cell into an [`Mpc`].
fn refine(padp: &Padp, a: usize, k: usize, floor_lin: f64) -> Mpc {
    let band = &padp.band;
    let n_az = band.n_azimuth();
    let step = band.delay_resolution_s;
    let v = padp.get(a, k);

    let delay_frac = if k > 0 && k + 1 < padp.n_delay {
        parabolic_offset(padp.get(a, k - 1), v, padp.get(a, k + 1))
    } else {
        0.0
    };
    let delay_s = padp.delay_start_s + (k as f64 + delay_frac) * step;

    let az_frac = parabolic_offset(
        padp.get((a + n_az - 1) % n_az, k),
        v,
        padp.get((a + 1) % n_az, k),
    );
    let pointing = a as f64 * band.azimuth_step_deg;
    let aoa_deg = pointing + az_frac * band.azimuth_step_deg;

    let lo = k.saturating_sub(PULSE_SUPPORT_BINS as usize);
    let hi = (k + PULSE_SUPPORT_BINS as usize).min(padp.n_delay - 1);
    let mut energy = 0.0;
    for kk in lo..=hi {
        energy += (10f64.powf(padp.get(a, kk) / 10.0) - floor_lin).max(0.0);
    }
    let share = window_energy_share(delay_frac);
    let rx = band
        .rx_antenna
        .gain_db(wrap_deg_180(aoa_deg - pointing), 0.0);
    let tx = band.tx_antenna.gain_db(0.0, 0.0);
    let gain_db = 10.0 * (energy / share).max(1e-300).log10() - rx - tx;

    Mpc::new(delay_s, aoa_deg, gain_db.min(0.0))
        .expect("refined path parameters are finite by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sounder::{synthesize_padp, NoiseModel, Scene, SceneParams};
    use crate::types::{BandConfig, LosState};

    fn render(paths: Vec<Mpc>) -> Padp {
        let scene = Scene {
            band: BandConfig::b28(),
            link_id: "L0".to_string(),
            tx_rx_distance_m: 10.0,
            los: LosState::Nlos,
            paths,
        };
        synthesize_padp(&scene, &NoiseModel::default()).unwrap()
    }

    #[test]
    fn recovers_a_single_on_grid_path_exactly() {
        let padp = render(vec![Mpc::new(100e-9, 45.0, -61.0).unwrap()]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 1, "{out:?}");
        assert!((out[0].delay_s - 100e-9).abs() < 1e-15);
        assert!((out[0].aoa_deg - 45.0).abs() < 1e-9);
        assert!((out[0].path_gain_db + 61.0).abs() < 1e-9);
    }

    #[test]
    fn sidelobe_plateau_of_a_strong_path_is_not_extracted() {
        // The horn's hard sidelobe floor makes every far pointing exactly
        // 30 dB below the peak response: inside the default threshold, well
        // above the noise floor, and flat in azimuth. Only the true path may
        // survive.
        let padp = render(vec![Mpc::new(100e-9, 45.0, -70.0).unwrap()]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 1, "{out:?}");
    }

    #[test]
    fn half_bin_path_is_deduplicated_and_refined_to_the_midpoint() {
        let step = BandConfig::b28().delay_resolution_s;
        let delay = 100e-9 + 0.5 * step;
        let padp = render(vec![Mpc::new(delay, 0.0, -61.0).unwrap()]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 1, "{out:?}");
        // The symmetric three-point parabola lands exactly on the midpoint.
        assert!((out[0].delay_s - delay).abs() < 1e-13 * delay.max(1.0));
        // Energy summation with the window-share correction keeps the
        // amplitude within the truncation budget of the pulse tails.
        assert!((out[0].path_gain_db + 61.0).abs() < 0.05, "{}", out[0].path_gain_db);
    }

    #[test]
    fn between_pointing_azimuth_is_refined_exactly_for_quadratic_beam() {
        // 47 deg sits inside the quadratic part of the pattern for the three
        // rows around the peak, so the dB parabola is exact.
        let padp = render(vec![Mpc::new(100e-9, 47.0, -61.0).unwrap()]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 1, "{out:?}");
        assert!((out[0].aoa_deg - 47.0).abs() < 1e-6, "{}", out[0].aoa_deg);
        assert!((out[0].path_gain_db + 61.0).abs() < 1e-6);
        // Exactly between two pointings both rows tie; still one path out.
        let padp = render(vec![Mpc::new(100e-9, 2.5, -61.0).unwrap()]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 1, "{out:?}");
        assert!((out[0].aoa_deg - 2.5).abs() < 1e-6, "{}", out[0].aoa_deg);
    }

    #[test]
    fn threshold_and_snr_rules_filter_weak_paths() {
        let strong = Mpc::new(100e-9, 0.0, -60.0).unwrap();
        let weak = Mpc::new(140e-9, 90.0, -95.0).unwrap();
        let padp = render(vec![strong, weak]);
        // 35 dB apart: outside the default 30 dB window...
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].path_gain_db + 60.0).abs() < 0.05);
        // ...but inside a 40 dB window.
        let wide = ExtractParams {
            threshold_db: 40.0,
            ..ExtractParams::default()
        };
        let out = extract_mpcs(&padp, &wide).unwrap();
        assert_eq!(out.len(), 2);
        // A lone path whose response clears the floor by less than the
        // minimum SNR is rejected outright.
        let padp = render(vec![Mpc::new(100e-9, 0.0, -151.0).unwrap()]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert!(out.is_empty(), "{out:?}");
    }

    #[test]
    fn resolves_paths_split_in_delay_or_azimuth() {
        let step = BandConfig::b28().delay_resolution_s;
        let padp = render(vec![
            Mpc::new(100e-9, 0.0, -61.0).unwrap(),
            Mpc::new(100e-9 + 8.0 * step, 0.0, -64.0).unwrap(),
        ]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 2, "{out:?}");
        assert!((out[0].delay_s - 100e-9).abs() < 1e-14);
        assert!((out[1].delay_s - (100e-9 + 8.0 * step)).abs() < 1e-14);

        let padp = render(vec![
            Mpc::new(100e-9, 10.0, -61.0).unwrap(),
            Mpc::new(100e-9, 100.0, -63.0).unwrap(),
        ]);
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert_eq!(out.len(), 2, "{out:?}");
        assert!((out[0].aoa_deg - 10.0).abs() < 0.1);
        assert!((out[1].aoa_deg - 100.0).abs() < 0.1);
    }

    #[test]
    fn pure_noise_profile_yields_no_paths() {
        let scene = Scene {
            band: BandConfig::b28(),
            link_id: "L0".to_string(),
            tx_rx_distance_m: 10.0,
            los: LosState::Nlos,
            paths: vec![],
        };
        let padp = synthesize_padp(&scene, &NoiseModel::default()).unwrap();
        let out = extract_mpcs(&padp, &ExtractParams::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn widening_the_threshold_never_drops_paths() {
        let scene = SceneParams::default()
            .sample(&BandConfig::b28(), "L11", 20.0, LosState::Los, 4242)
            .unwrap();
        let padp = synthesize_padp(&scene, &NoiseModel::default()).unwrap();
        let mut last = 0usize;
        for threshold_db in [6.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 60.0] {
            let params = ExtractParams {
                threshold_db,
                min_snr_db: 6.0,
            };
            let n = extract_mpcs(&padp, &params).unwrap().len();
            assert!(n >= last, "count dropped from {last} to {n} at {threshold_db} dB");
            last = n;
        }
    }

    #[test]
    fn recovers_a_randomized_scene_within_tolerances() {
        for seed in [1u64, 2, 3] {
            let scene = SceneParams::default()
                .sample(&BandConfig::b140(), &format!("L{seed}"), 35.0, LosState::Los, seed)
                .unwrap();
            let padp = synthesize_padp(&scene, &NoiseModel::default()).unwrap();
            let params = ExtractParams {
                threshold_db: 30.0,
                min_snr_db: 6.0,
            };
            let out = extract_mpcs(&padp, &params).unwrap();
            // Every planted path inside the extraction window must be found.
            let strongest = scene
                .paths
                .iter()
                .map(|p| p.path_gain_db)
                .fold(f64::NEG_INFINITY, f64::max);
            let step = scene.band.delay_resolution_s;
            for p in &scene.paths {
                if p.path_gain_db < strongest - 28.0 {
                    continue; // near the window edge either outcome is fine
                }
                let hit = out.iter().find(|m| {
                    (m.delay_s - p.delay_s).abs() < 0.5 * step
                        && wrap_deg_180(m.aoa_deg - p.aoa_deg).abs() < 2.5
                });
                let hit = hit.unwrap_or_else(|| panic!("missing planted path {p:?} in {out:?}"));
                assert!(
                    (hit.path_gain_db - p.path_gain_db).abs() < 2.0,
                    "gain {} vs planted {}",
                    hit.path_gain_db,
                    p.path_gain_db
                );
            }
        }
    }
}
