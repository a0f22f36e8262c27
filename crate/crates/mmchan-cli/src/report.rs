//! Combined run report: fitted band statistics plus the raw per-link and
//! per-cluster points the plot-data emitter needs.

use anyhow::{bail, Context, Result};
use mmchan_core::antenna::wrap_deg_180;
use mmchan_core::cluster::{cluster_stats, ClusterSet};
use mmchan_core::fit::{
    fit_cluster_power, fit_pas, fit_pathloss, BandComparison, BandReport, PasModel,
};
use mmchan_core::types::{BandConfig, BandLabel, LinkStats, Mpc};
use mmchan_core::validate::RoundtripReport;
use serde::{Deserialize, Serialize};

/// One pooled power-angular-spectrum sample: a cluster's azimuth offset from
/// its link's mean direction, against its link-normalized linear power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PasPoint {
    pub offset_deg: f64,
    pub value: f64,
}

/// One cluster as a scatter point: travel distance against cluster power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterPoint {
    pub link_id: String,
    pub distance_m: f64,
    pub power_db: f64,
}

/// Fitted statistics of one band plus the pooled samples behind the fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSection {
    pub band: BandLabel,
    pub report: BandReport,
    pub pas_samples: Vec<PasPoint>,
    pub clusters: Vec<ClusterPoint>,
}

/// Everything a full run produced, in one machine-readable file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedReport {
    /// Top-level seed of the run.
    pub seed: u64,
    /// Stages that ran, in execution order.
    pub stages: Vec<String>,
    /// Per-link summary statistics, all bands.
    pub links: Vec<LinkStats>,
    /// Fitted statistics per band, in configured band order.
    pub bands: Vec<BandSection>,
    /// Band-to-band metric deltas, when a compare stage ran.
    pub comparison: Option<BandComparison>,
    /// Generator round-trip reports, when a validate stage ran.
    pub roundtrips: Vec<RoundtripReport>,
    /// True when every declared round-trip check passed (vacuously true
    /// without a validate stage).
    pub all_validations_pass: bool,
}

/// Fit one band's statistics from measured per-link data.
///
/// `stats`, `mpcs_per_link`, and `sets` run parallel: entry `i` of each
/// describes the same link.  The power-angular-spectrum samples pool every
/// cluster's centroid offset about its link's power-weighted mean arrival
/// direction, with powers normalized to the strongest cluster of the link.
pub fn measured_band_section(
    band: BandLabel,
    stats: &[LinkStats],
    mpcs_per_link: &[Vec<Mpc>],
    sets: &[ClusterSet],
    pas_model: PasModel,
) -> Result<BandSection> {
    if stats.len() != mpcs_per_link.len() || stats.len() != sets.len() {
        bail!(
            "per-link inputs disagree: {} stats rows, {} path lists, {} cluster sets",
            stats.len(),
            mpcs_per_link.len(),
            sets.len()
        );
    }
    if stats.len() < 2 {
        bail!("need at least two links per band to fit a pathloss law, got {}", stats.len());
    }

    let distances: Vec<f64> = stats.iter().map(|s| s.distance_m).collect();
    let pathlosses: Vec<f64> = stats.iter().map(|s| s.omni_pathloss_db).collect();
    let pathloss = fit_pathloss(&distances, &pathlosses)
        .with_context(|| format!("pathloss fit over {} links", stats.len()))?;

    let n = stats.len() as f64;
    let mean_ds = stats.iter().map(|s| s.rms_delay_spread_s).sum::<f64>() / n;
    let mean_as = stats.iter().map(|s| s.azimuth_spread_deg).sum::<f64>() / n;

    let cstats = cluster_stats(sets).context("cluster statistics")?;
    let mut cluster_points = Vec::with_capacity(cstats.n_clusters_total);
    for set in sets {
        for c in &set.clusters {
            cluster_points.push(ClusterPoint {
                link_id: set.source_link_id.clone(),
                distance_m: c.distance_m,
                power_db: c.power_db,
            });
        }
    }
    let (cd, cp): (Vec<f64>, Vec<f64>) = cluster_points
        .iter()
        .map(|c| (c.distance_m, c.power_db))
        .unzip();
    let cluster_power = fit_cluster_power(&cd, &cp).context("cluster power-law fit")?;

    let mut pas_samples = Vec::with_capacity(cluster_points.len());
    for (mpcs, set) in mpcs_per_link.iter().zip(sets) {
        let (s, c) = mpcs.iter().fold((0.0, 0.0), |(s, c), m| {
            let w = m.linear_power();
            let r = m.aoa_deg.to_radians();
            (s + w * r.sin(), c + w * r.cos())
        });
        let mean_aoa = s.atan2(c).to_degrees();
        let p_max = set
            .clusters
            .iter()
            .map(|cl| cl.power_db)
            .fold(f64::NEG_INFINITY, f64::max);
        for cl in &set.clusters {
            pas_samples.push(PasPoint {
                offset_deg: wrap_deg_180(cl.centroid_azimuth_deg - mean_aoa),
                value: 10f64.powf((cl.power_db - p_max) / 10.0),
            });
        }
    }
    pas_samples.sort_by(|a, b| {
        (a.offset_deg, a.value)
            .partial_cmp(&(b.offset_deg, b.value))
            .expect("finite samples")
    });
    let offsets: Vec<f64> = pas_samples.iter().map(|p| p.offset_deg).collect();
    let values: Vec<f64> = pas_samples.iter().map(|p| p.value).collect();
    let pas = fit_pas(&offsets, &values, pas_model)
        .with_context(|| format!("angular-shape fit over {} cluster samples", offsets.len()))?;

    let report = BandReport {
        band: BandConfig::preset(band),
        n_links: stats.len(),
        pathloss,
        mean_delay_spread_s: mean_ds,
        mean_azimuth_spread_deg: mean_as,
        cluster_count_mean: cstats.n_clusters_mean,
        cluster_count_std: cstats.n_clusters_std,
        paths_per_cluster_mean: cstats.paths_per_cluster_mean,
        paths_per_cluster_std: cstats.paths_per_cluster_std,
        n_clusters: cstats.n_clusters_total,
        cluster_power,
        pas,
    };
    Ok(BandSection {
        band,
        report,
        pas_samples,
        clusters: cluster_points,
    })
}
