//! Tidy plot-data CSV emission from a combined run report.
//!
//! Every kind produces the same four columns — `band,x,y,series` — so any
//! plotting tool can facet on `band` and color on `series`.  Model lines are
//! sampled at 100 abscissae: log-spaced for distance axes, evenly spaced for
//! angle axes.

use anyhow::{bail, Result};
use std::fmt::Write;

use mmchan_core::fit::evaluate_cluster_power;
use mmchan_core::metrics::friis_fspl_db;

use crate::report::CombinedReport;

/// Number of model-line samples per band.
const LINE_POINTS: usize = 100;

/// The plot-data families a report can be flattened into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Per-link omnidirectional pathloss against distance, plus the
    /// free-space reference line of each band.
    #[value(name = "pathloss_scatter")]
    PathlossScatter,
    /// Pooled power angular spectrum samples plus the fitted shape.
    #[value(name = "pas_fit")]
    PasFit,
    /// Cluster power against travel distance, plus the fitted decay law.
    #[value(name = "cluster_power")]
    ClusterPower,
    /// Ensemble mean delay and azimuth spreads per band, as bar heights.
    #[value(name = "spread_bars")]
    SpreadBars,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::PathlossScatter => "pathloss_scatter",
            PlotKind::PasFit => "pas_fit",
            PlotKind::ClusterPower => "cluster_power",
            PlotKind::SpreadBars => "spread_bars",
        }
    }
}

/// Flatten `report` into the tidy CSV for `kind`.
///
/// Fails rather than emitting an empty or partial series, so a plotting
/// script never silently renders a blank panel.
pub fn emit_plot_data(report: &CombinedReport, kind: PlotKind) -> Result<String> {
    let mut out = String::from("band,x,y,series\n");
    match kind {
        PlotKind::PathlossScatter => pathloss_scatter(report, &mut out)?,
        PlotKind::PasFit => pas_fit(report, &mut out)?,
        PlotKind::ClusterPower => cluster_power(report, &mut out)?,
        PlotKind::SpreadBars => spread_bars(report, &mut out)?,
    }
    Ok(out)
}

fn row(out: &mut String, band: impl std::fmt::Display, x: f64, y: f64, series: &str) {
    let _ = writeln!(out, "{band},{x},{y},{series}");
}

/// 100 log-spaced points over `[lo, hi]`, inclusive of both edges.
fn log_spaced(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let (l, h) = (lo.log10(), hi.log10());
    (0..LINE_POINTS).map(move |i| 10f64.powf(l + (h - l) * i as f64 / (LINE_POINTS - 1) as f64))
}

/// 100 evenly spaced points over `[lo, hi]`, inclusive of both edges.
fn lin_spaced(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..LINE_POINTS).map(move |i| lo + (hi - lo) * i as f64 / (LINE_POINTS - 1) as f64)
}

fn pathloss_scatter(report: &CombinedReport, out: &mut String) -> Result<()> {
    if report.links.is_empty() {
        bail!("report has no per-link statistics to scatter");
    }
    if report.bands.is_empty() {
        bail!("report has no fitted band sections for the free-space reference line");
    }
    for s in &report.links {
        row(out, s.band, s.distance_m, s.omni_pathloss_db, "measured");
    }
    for section in &report.bands {
        let ds: Vec<f64> = report
            .links
            .iter()
            .filter(|s| s.band == section.band)
            .map(|s| s.distance_m)
            .collect();
        let (Some(lo), Some(hi)) = (
            ds.iter().copied().reduce(f64::min),
            ds.iter().copied().reduce(f64::max),
        ) else {
            bail!("band {} has no links for the free-space reference line", section.band);
        };
        let f = section.report.band.center_frequency_hz;
        for d in log_spaced(lo, hi) {
            row(out, section.band, d, friis_fspl_db(d, f)?, "fspl");
        }
    }
    Ok(())
}

fn pas_fit(report: &CombinedReport, out: &mut String) -> Result<()> {
    if report.bands.is_empty() {
        bail!("report has no fitted band sections");
    }
    for section in &report.bands {
        if section.pas_samples.is_empty() {
            bail!("band {} has no angular-spectrum samples", section.band);
        }
        for p in &section.pas_samples {
            row(out, section.band, p.offset_deg, p.value, "measured");
        }
        let lo = section.pas_samples.first().expect("non-empty").offset_deg;
        let hi = section.pas_samples.last().expect("non-empty").offset_deg;
        for x in lin_spaced(lo, hi) {
            row(out, section.band, x, section.report.pas.evaluate(x), "fit");
        }
    }
    Ok(())
}

fn cluster_power(report: &CombinedReport, out: &mut String) -> Result<()> {
    if report.bands.is_empty() {
        bail!("report has no fitted band sections");
    }
    for section in &report.bands {
        if section.clusters.is_empty() {
            bail!("band {} has no cluster points", section.band);
        }
        for c in &section.clusters {
            row(out, section.band, c.distance_m, c.power_db, "measured");
        }
        let lo = section
            .clusters
            .iter()
            .map(|c| c.distance_m)
            .fold(f64::INFINITY, f64::min);
        let hi = section
            .clusters
            .iter()
            .map(|c| c.distance_m)
            .fold(f64::NEG_INFINITY, f64::max);
        for d in log_spaced(lo, hi) {
            row(
                out,
                section.band,
                d,
                evaluate_cluster_power(&section.report.cluster_power, d),
                "model",
            );
        }
    }
    Ok(())
}

fn spread_bars(report: &CombinedReport, out: &mut String) -> Result<()> {
    if report.bands.is_empty() {
        bail!("report has no fitted band sections");
    }
    for section in &report.bands {
        let f_ghz = section.report.band.center_frequency_hz / 1e9;
        row(
            out,
            section.band,
            f_ghz,
            section.report.mean_delay_spread_s * 1e9,
            "delay_spread_ns",
        );
        row(
            out,
            section.band,
            f_ghz,
            section.report.mean_azimuth_spread_deg,
            "azimuth_spread_deg",
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{measured_band_section, PasPoint};
    use mmchan_core::cluster::hierarchical_cluster;
    use mmchan_core::fit::PasModel;
    use mmchan_core::generate::{generate_link, BandModel};
    use mmchan_core::metrics::link_stats;
    use mmchan_core::types::BandLabel;
    use mmchan_core::McdParams;

    fn demo_report(links_per_band: usize) -> CombinedReport {
        let mut links = Vec::new();
        let mut bands = Vec::new();
        for model in [BandModel::b28(), BandModel::b140()] {
            let band = model.band;
            let tag = band.to_string().to_lowercase();
            let mut stats = Vec::new();
            let mut mpcs = Vec::new();
            let mut sets = Vec::new();
            for i in 0..links_per_band {
                let d = 6.0 + 5.0 * i as f64;
                let link = generate_link(&model, i as u64, d, 40 + i as u64).unwrap();
                let id = format!("{tag}_{i:04}");
                stats.push(link_stats(&id, band, d, &link.mpcs).unwrap());
                sets.push(hierarchical_cluster(&link.mpcs, &id, &McdParams::default()).unwrap());
                mpcs.push(link.mpcs);
            }
            let section =
                measured_band_section(band, &stats, &mpcs, &sets, PasModel::Gaussian).unwrap();
            links.extend(stats);
            bands.push(section);
        }
        CombinedReport {
            seed: 1,
            stages: vec!["fit".to_string()],
            links,
            bands,
            comparison: None,
            roundtrips: Vec::new(),
            all_validations_pass: true,
        }
    }

    fn series_count(csv: &str, series: &str) -> usize {
        csv.lines().filter(|l| l.ends_with(&format!(",{series}"))).count()
    }

    #[test]
    fn pathloss_scatter_counts_match_the_contract() {
        let report = demo_report(8);
        let csv = emit_plot_data(&report, PlotKind::PathlossScatter).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "band,x,y,series");
        assert_eq!(series_count(&csv, "measured"), 16);
        assert_eq!(series_count(&csv, "fspl"), 200);
        assert_eq!(csv.lines().count(), 1 + 16 + 200);
    }

    #[test]
    fn pas_fit_curve_matches_the_fitted_shape() {
        let report = demo_report(6);
        let csv = emit_plot_data(&report, PlotKind::PasFit).unwrap();
        for line in csv.lines().skip(1).filter(|l| l.ends_with(",fit")) {
            let cols: Vec<&str> = line.split(',').collect();
            let band: BandLabel = cols[0].parse().unwrap();
            let x: f64 = cols[1].parse().unwrap();
            let y: f64 = cols[2].parse().unwrap();
            let section = report.bands.iter().find(|b| b.band == band).unwrap();
            assert!((y - section.report.pas.evaluate(x)).abs() <= 1e-9);
        }
    }

    #[test]
    fn cluster_power_model_line_is_log_spaced_over_the_data() {
        let report = demo_report(5);
        let csv = emit_plot_data(&report, PlotKind::ClusterPower).unwrap();
        let model_rows = series_count(&csv, "model");
        assert_eq!(model_rows, 200);
        let measured_rows = series_count(&csv, "measured");
        let total_clusters: usize = report.bands.iter().map(|b| b.clusters.len()).sum();
        assert_eq!(measured_rows, total_clusters);
    }

    #[test]
    fn spread_bars_has_two_rows_per_band() {
        let report = demo_report(4);
        let csv = emit_plot_data(&report, PlotKind::SpreadBars).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4);
        assert_eq!(series_count(&csv, "delay_spread_ns"), 2);
        assert_eq!(series_count(&csv, "azimuth_spread_deg"), 2);
    }

    #[test]
    fn empty_series_is_an_error_not_an_empty_file() {
        let mut report = demo_report(4);
        report.links.clear();
        let err = emit_plot_data(&report, PlotKind::PathlossScatter).unwrap_err();
        assert!(err.to_string().contains("no per-link statistics"));

        let mut report = demo_report(4);
        report.bands[1].pas_samples.clear();
        let err = emit_plot_data(&report, PlotKind::PasFit).unwrap_err();
        assert!(err.to_string().contains("B140"));
    }

    #[test]
    fn single_sample_series_still_emits_full_lines() {
        let mut report = demo_report(4);
        report.bands.truncate(1);
        report.bands[0].pas_samples = vec![PasPoint { offset_deg: 3.0, value: 1.0 }];
        let csv = emit_plot_data(&report, PlotKind::PasFit).unwrap();
        assert_eq!(series_count(&csv, "fit"), 100);
    }

    #[test]
    fn emitted_output_is_deterministic() {
        let report = demo_report(5);
        for kind in [
            PlotKind::PathlossScatter,
            PlotKind::PasFit,
            PlotKind::ClusterPower,
            PlotKind::SpreadBars,
        ] {
            let a = emit_plot_data(&report, kind).unwrap();
            let b = emit_plot_data(&report, kind).unwrap();
            assert_eq!(a, b, "kind {}", kind.name());
        }
    }

    #[test]
    fn bands_without_links_fail_the_scatter() {
        let mut report = demo_report(3);
        // Keep the band section but drop its links: the reference line has
        // no distance range to span.
        let band = report.bands[0].band;
        report.links.retain(|s| s.band != band);
        let err = emit_plot_data(&report, PlotKind::PathlossScatter).unwrap_err();
        assert!(err.to_string().contains("has no links"));
    }
}
