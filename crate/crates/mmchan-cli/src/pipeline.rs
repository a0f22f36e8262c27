//! JSON-configured multi-stage runs.
//!
//! A run config declares which stages to execute, in order; each stage reads
//! its inputs from the files the previous stage wrote, so a full run also
//! proves that every format round-trips.  All outputs land under one output
//! directory and never embed absolute paths, so two runs of the same config
//! and seed are byte-identical wherever they are written.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mmchan_core::cluster::{hierarchical_cluster, ClusterSet, McdParams};
use mmchan_core::extract::{extract_mpcs, ExtractParams};
use mmchan_core::fit::{compare_bands, BandComparison, BandReport, CompareThresholds, PasModel};
use mmchan_core::generate::{BandModel, MAX_LINK_DISTANCE_M, MIN_LINK_DISTANCE_M};
use mmchan_core::io::{
    read_link_stats, read_mpcs, read_padp, write_link_stats, write_mpcs, write_padp, write_scene,
};
use mmchan_core::metrics::link_stats;
use mmchan_core::seed;
use mmchan_core::sounder::{synthesize_padp, NoiseModel, SceneParams};
use mmchan_core::types::{BandConfig, BandLabel, LinkStats, LosState};
use mmchan_core::validate::RoundtripReport;

use crate::commands::{
    band_tag, generate_ensemble_files, read_json, render_comparison_table,
    render_roundtrip_table, render_summary_table, summarize_by_band, write_cluster_csv,
    write_json,
};
use crate::report::{measured_band_section, BandSection, CombinedReport};
use crate::table::Table;

// ── configuration ───────────────────────────────────────────────────────────

/// One pipeline stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Synth,
    Extract,
    Analyze,
    Cluster,
    Fit,
    Generate,
    Validate,
    Compare,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Synth => "synth",
            Stage::Extract => "extract",
            Stage::Analyze => "analyze",
            Stage::Cluster => "cluster",
            Stage::Fit => "fit",
            Stage::Generate => "generate",
            Stage::Validate => "validate",
            Stage::Compare => "compare",
        };
        f.write_str(name)
    }
}

/// Externally supplied inputs for runs that skip the synth stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputsConfig {
    /// Rendered profiles to extract from, resolved relative to the config
    /// file's directory.
    pub padp: Vec<PathBuf>,
}

/// Knobs of the generate stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateStageConfig {
    /// Links per band; `links_per_band` when absent.
    pub n_links: Option<usize>,
}

/// Knobs of the validate stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateStageConfig {
    /// Ensemble size per band (at least 100).
    pub n_links: usize,
}

impl Default for ValidateStageConfig {
    fn default() -> Self {
        ValidateStageConfig { n_links: 500 }
    }
}

/// A full run declaration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Top-level seed; the command-line seed applies when absent.
    pub seed: Option<u64>,
    /// Output directory; `--out` overrides, `mmchan-run` is the fallback.
    pub out_dir: Option<PathBuf>,
    /// Bands to process, in order.
    pub bands: Vec<BandLabel>,
    /// Links per band rendered by the synth stage.
    pub links_per_band: usize,
    /// Log-uniform link distance range [m].
    pub distance_range_m: [f64; 2],
    /// Line-of-sight state of every rendered link.
    pub los: bool,
    /// Random-scene knobs for the synth stage.
    pub scene: SceneParams,
    /// Sounder noise; an exponential floor's seed field is replaced by a
    /// per-link derived seed.
    pub noise: NoiseModel,
    /// Path-extraction thresholds.
    pub extract: ExtractParams,
    /// Clustering knobs.
    pub mcd: McdParams,
    /// Angular-shape family the fit stage uses.
    pub pas_model: PasModel,
    /// Stages to execute, in order.
    pub stages: Vec<Stage>,
    /// Externally supplied inputs.
    pub inputs: InputsConfig,
    pub generate: GenerateStageConfig,
    pub validate: ValidateStageConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            out_dir: None,
            bands: vec![BandLabel::B28, BandLabel::B140],
            links_per_band: 8,
            distance_range_m: [5.0, 40.0],
            los: true,
            scene: SceneParams::default(),
            noise: NoiseModel::default(),
            extract: ExtractParams::default(),
            mcd: McdParams::default(),
            pas_model: PasModel::Gaussian,
            stages: vec![
                Stage::Synth,
                Stage::Extract,
                Stage::Analyze,
                Stage::Cluster,
                Stage::Fit,
                Stage::Compare,
            ],
            inputs: InputsConfig::default(),
            generate: GenerateStageConfig::default(),
            validate: ValidateStageConfig::default(),
        }
    }
}

impl PipelineConfig {
    fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            bail!("config declares no bands");
        }
        for (i, b) in self.bands.iter().enumerate() {
            if self.bands[..i].contains(b) {
                bail!("band {b} appears twice in the config");
            }
        }
        if self.stages.is_empty() {
            bail!("config declares no stages");
        }
        let [lo, hi] = self.distance_range_m;
        if !(lo > 0.0) || !(hi > lo) {
            bail!("distance range [{lo}, {hi}] must be increasing and positive");
        }
        let uses_generator = self
            .stages
            .iter()
            .any(|s| matches!(s, Stage::Generate | Stage::Validate));
        if uses_generator && (lo < MIN_LINK_DISTANCE_M || hi > MAX_LINK_DISTANCE_M) {
            bail!(
                "distance range [{lo}, {hi}] exceeds the generator's validity range \
                 [{MIN_LINK_DISTANCE_M}, {MAX_LINK_DISTANCE_M}] m"
            );
        }
        self.extract.validate()?;
        self.mcd.validate()?;
        Ok(())
    }
}

// ── execution ───────────────────────────────────────────────────────────────

/// One link flowing through the measured chain.
struct LinkRecord {
    link_id: String,
    band: BandLabel,
    distance_m: f64,
    mpc_file: PathBuf,
}

#[derive(Default)]
struct PipelineCtx {
    /// Rendered profiles, in band-then-index order.
    padp_files: Vec<PathBuf>,
    /// Extracted links, sorted by link id.
    links: Vec<LinkRecord>,
    /// The analyze stage's CSV, consumed by the fit stage.
    stats_file: Option<PathBuf>,
    link_stats: Vec<LinkStats>,
    /// Cluster-set JSON per link, parallel to `links`.
    cluster_files: Vec<PathBuf>,
    band_sections: Vec<BandSection>,
    /// Per-band fitted reports on disk, consumed by the compare stage.
    band_report_files: Vec<(BandLabel, PathBuf)>,
    comparison: Option<BandComparison>,
    roundtrips: Vec<RoundtripReport>,
}

/// Execute the config at `config_path` and write all outputs plus a combined
/// `report.json` under the resolved output directory.
///
/// Returns an error — after writing the report — when any declared
/// round-trip validation fails, so the process exits nonzero exactly when
/// the run is not fully green.
pub fn run_pipeline(
    config_path: &Path,
    out_override: Option<PathBuf>,
    cli_seed: u64,
) -> Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("cannot read config {}", config_path.display()))?;
    let config: PipelineConfig = serde_json::from_str(&text)
        .with_context(|| format!("config {} is not a valid run declaration", config_path.display()))?;
    config.validate().context("config")?;

    let out_dir = out_override
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("mmchan-run"));
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let config_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let base_seed = config.seed.unwrap_or(cli_seed);

    let mut ctx = PipelineCtx::default();
    for stage in &config.stages {
        match stage {
            Stage::Synth => stage_synth(&config, base_seed, &out_dir, &mut ctx),
            Stage::Extract => stage_extract(&config, config_dir, &out_dir, &mut ctx),
            Stage::Analyze => stage_analyze(&out_dir, &mut ctx),
            Stage::Cluster => stage_cluster(&config, &out_dir, &mut ctx),
            Stage::Fit => stage_fit(&config, &out_dir, &mut ctx),
            Stage::Generate => stage_generate(&config, base_seed, &out_dir),
            Stage::Validate => stage_validate(&config, base_seed, &out_dir, &mut ctx),
            Stage::Compare => stage_compare(&out_dir, &mut ctx),
        }
        .with_context(|| format!("stage {stage}"))?;
    }

    let all_validations_pass = ctx.roundtrips.iter().all(|r| r.all_pass);
    let report = CombinedReport {
        seed: base_seed,
        stages: config.stages.iter().map(|s| s.to_string()).collect(),
        links: ctx.link_stats,
        bands: ctx.band_sections,
        comparison: ctx.comparison,
        roundtrips: ctx.roundtrips,
        all_validations_pass,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    println!("pipeline complete: report.json and stage outputs in {}", out_dir.display());

    if !all_validations_pass {
        let failed: usize = report
            .roundtrips
            .iter()
            .flat_map(|r| r.checks.iter())
            .filter(|c| !c.pass)
            .count();
        bail!("stage validate: {failed} round-trip checks failed");
    }
    Ok(())
}

fn stage_synth(
    config: &PipelineConfig,
    base_seed: u64,
    out_dir: &Path,
    ctx: &mut PipelineCtx,
) -> Result<()> {
    let padp_dir = out_dir.join("padp");
    let scene_dir = out_dir.join("scenes");
    fs::create_dir_all(&padp_dir)?;
    fs::create_dir_all(&scene_dir)?;
    let los = if config.los { LosState::Los } else { LosState::Nlos };
    let [dlo, dhi] = config.distance_range_m;
    let (lo, hi) = (dlo.log10(), dhi.log10());

    for &band in &config.bands {
        let band_cfg = BandConfig::preset(band);
        let tag = band_tag(band);
        let mut rng = ChaCha12Rng::seed_from_u64(seed::derive(
            base_seed,
            &format!("synth.distance.{tag}"),
            0,
        ));
        let jobs: Vec<(String, f64, u64, u64)> = (0..config.links_per_band)
            .map(|i| {
                let d = 10f64.powf(rng.gen_range(lo..hi));
                (
                    format!("{tag}_{i:04}"),
                    d,
                    seed::derive(base_seed, &format!("synth.scene.{tag}"), i as u64),
                    seed::derive(base_seed, &format!("synth.noise.{tag}"), i as u64),
                )
            })
            .collect();
        let rendered: Vec<PathBuf> = jobs
            .par_iter()
            .map(|(link_id, d, scene_seed, noise_seed)| -> Result<PathBuf> {
                let scene = config.scene.sample(&band_cfg, link_id, *d, los, *scene_seed)?;
                let noise = match config.noise {
                    NoiseModel::ConstantFloor { floor_db } => NoiseModel::ConstantFloor { floor_db },
                    NoiseModel::ExponentialFloor { floor_db, .. } => {
                        NoiseModel::ExponentialFloor { floor_db, seed: *noise_seed }
                    }
                };
                let padp = synthesize_padp(&scene, &noise)?;
                write_scene(scene_dir.join(format!("{link_id}.scene")), &scene)?;
                let padp_path = padp_dir.join(format!("{link_id}.padp"));
                write_padp(&padp_path, &padp)?;
                Ok(padp_path)
            })
            .collect::<Result<_>>()?;
        ctx.padp_files.extend(rendered);
    }
    println!(
        "stage synth: rendered {} profiles ({} bands x {} links) under padp/",
        ctx.padp_files.len(),
        config.bands.len(),
        config.links_per_band
    );
    Ok(())
}

fn stage_extract(
    config: &PipelineConfig,
    config_dir: &Path,
    out_dir: &Path,
    ctx: &mut PipelineCtx,
) -> Result<()> {
    if ctx.padp_files.is_empty() {
        ctx.padp_files = config
            .inputs
            .padp
            .iter()
            .map(|p| if p.is_absolute() { p.clone() } else { config_dir.join(p) })
            .collect();
    }
    if ctx.padp_files.is_empty() {
        bail!("no rendered profiles: declare a synth stage or list files under inputs.padp");
    }
    let mpc_dir = out_dir.join("mpc");
    fs::create_dir_all(&mpc_dir)?;
    let mut links: Vec<LinkRecord> = ctx
        .padp_files
        .par_iter()
        .map(|path| -> Result<LinkRecord> {
            let padp = read_padp(path)?;
            let mpcs = extract_mpcs(&padp, &config.extract)?;
            let mpc_file = mpc_dir.join(format!("{}.mpc.csv", padp.link_id));
            write_mpcs(&mpc_file, &mpcs)?;
            Ok(LinkRecord {
                link_id: padp.link_id,
                band: padp.band.label,
                distance_m: padp.tx_rx_distance_m,
                mpc_file,
            })
        })
        .collect::<Result<_>>()?;
    links.sort_by(|a, b| a.link_id.cmp(&b.link_id));
    for (i, l) in links.iter().enumerate() {
        if links[..i].iter().any(|o| o.link_id == l.link_id) {
            bail!("duplicate link id {:?} among the input profiles", l.link_id);
        }
    }
    println!("stage extract: {} path lists under mpc/", links.len());
    ctx.links = links;
    Ok(())
}

fn stage_analyze(out_dir: &Path, ctx: &mut PipelineCtx) -> Result<()> {
    if ctx.links.is_empty() {
        bail!("nothing to analyze: declare an extract stage first");
    }
    let stats: Vec<LinkStats> = ctx
        .links
        .par_iter()
        .map(|l| -> Result<LinkStats> {
            let mpcs = read_mpcs(&l.mpc_file)?;
            Ok(link_stats(&l.link_id, l.band, l.distance_m, &mpcs)?)
        })
        .collect::<Result<_>>()?;
    let stats_file = out_dir.join("links.stats.csv");
    write_link_stats(&stats_file, &stats)?;
    print!("{}", render_summary_table(&summarize_by_band(&stats)));
    println!("stage analyze: {} rows -> links.stats.csv", stats.len());
    ctx.link_stats = stats;
    ctx.stats_file = Some(stats_file);
    Ok(())
}

fn stage_cluster(config: &PipelineConfig, out_dir: &Path, ctx: &mut PipelineCtx) -> Result<()> {
    if ctx.links.is_empty() {
        bail!("nothing to cluster: declare an extract stage first");
    }
    let cluster_dir = out_dir.join("clusters");
    fs::create_dir_all(&cluster_dir)?;
    let files: Vec<PathBuf> = ctx
        .links
        .par_iter()
        .map(|l| -> Result<PathBuf> {
            let mpcs = read_mpcs(&l.mpc_file)?;
            let set = hierarchical_cluster(&mpcs, &l.link_id, &config.mcd)?;
            let json_path = cluster_dir.join(format!("{}.clusters.json", l.link_id));
            write_json(&json_path, &set)?;
            write_cluster_csv(&cluster_dir.join(format!("{}.clusters.csv", l.link_id)), &set)?;
            Ok(json_path)
        })
        .collect::<Result<_>>()?;
    println!("stage cluster: {} cluster sets under clusters/", files.len());
    ctx.cluster_files = files;
    Ok(())
}

fn stage_fit(config: &PipelineConfig, out_dir: &Path, ctx: &mut PipelineCtx) -> Result<()> {
    let Some(stats_file) = &ctx.stats_file else {
        bail!("no link statistics: declare an analyze stage first");
    };
    if ctx.cluster_files.is_empty() {
        bail!("no cluster sets: declare a cluster stage first");
    }
    let stats = read_link_stats(stats_file)?;
    if stats.len() != ctx.links.len() {
        bail!(
            "{} holds {} rows but {} links were extracted",
            stats_file.display(),
            stats.len(),
            ctx.links.len()
        );
    }
    let sets: Vec<ClusterSet> = ctx
        .cluster_files
        .iter()
        .map(|p| read_json::<ClusterSet>(p))
        .collect::<Result<_>>()?;
    let mpcs_per_link: Vec<Vec<mmchan_core::Mpc>> = ctx
        .links
        .par_iter()
        .map(|l| -> Result<Vec<mmchan_core::Mpc>> { Ok(read_mpcs(&l.mpc_file)?) })
        .collect::<Result<_>>()?;

    let mut pathloss_table = Table::new(["band", "exponent", "intercept [dB]", "shadow sigma [dB]"]);
    let mut structure_table = Table::new([
        "band",
        "DS [ns]",
        "AS [deg]",
        "N (mean+-std)",
        "M (mean+-std)",
        "slope [dB/dec]",
        "pas",
        "shape",
    ]);
    for &band in &config.bands {
        let idx: Vec<usize> = ctx
            .links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.band == band)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            bail!("band {band} has no links to fit");
        }
        let band_stats: Vec<LinkStats> = idx.iter().map(|&i| stats[i].clone()).collect();
        let band_mpcs: Vec<Vec<mmchan_core::Mpc>> =
            idx.iter().map(|&i| mpcs_per_link[i].clone()).collect();
        let band_sets: Vec<ClusterSet> = idx.iter().map(|&i| sets[i].clone()).collect();
        let section = measured_band_section(
            band,
            &band_stats,
            &band_mpcs,
            &band_sets,
            config.pas_model,
        )?;
        let report_path = out_dir.join(format!("report_{}.json", band_tag(band)));
        write_json(&report_path, &section.report)?;
        let r = &section.report;
        pathloss_table.row([
            band.to_string(),
            format!("{:.2}", r.pathloss.exponent),
            format!("{:.2}", r.pathloss.intercept_db),
            format!("{:.2}", r.pathloss.shadow_std_db),
        ]);
        structure_table.row([
            band.to_string(),
            format!("{:.2}", r.mean_delay_spread_s * 1e9),
            format!("{:.2}", r.mean_azimuth_spread_deg),
            format!("{:.2}+-{:.2}", r.cluster_count_mean, r.cluster_count_std),
            format!("{:.2}+-{:.2}", r.paths_per_cluster_mean, r.paths_per_cluster_std),
            format!("{:.2}", r.cluster_power.slope_db_per_decade),
            r.pas.model().to_string(),
            format!("{:.2}", r.pas.shape_parameter()),
        ]);
        ctx.band_report_files.push((band, report_path));
        ctx.band_sections.push(section);
    }
    print!("{}", pathloss_table.render());
    print!("{}", structure_table.render());
    println!("stage fit: wrote report_<band>.json per band");
    Ok(())
}

fn stage_generate(config: &PipelineConfig, base_seed: u64, out_dir: &Path) -> Result<()> {
    let n = config.generate.n_links.unwrap_or(config.links_per_band);
    for &band in &config.bands {
        let model = BandModel::preset(band);
        let dir = out_dir.join("generated").join(band_tag(band));
        let manifest =
            generate_ensemble_files(&model, n, config.distance_range_m, base_seed, &dir)?;
        println!(
            "stage generate: {} links ({}) under generated/{}/",
            manifest.n_links,
            band,
            band_tag(band)
        );
    }
    Ok(())
}

fn stage_validate(
    config: &PipelineConfig,
    base_seed: u64,
    out_dir: &Path,
    ctx: &mut PipelineCtx,
) -> Result<()> {
    for &band in &config.bands {
        let report = crate::commands::roundtrip_band(
            band,
            None,
            config.validate.n_links,
            &config.mcd,
            base_seed,
        )?;
        write_json(&out_dir.join(format!("roundtrip_{}.json", band_tag(band))), &report)?;
        print!("{}", render_roundtrip_table(&report));
        println!(
            "stage validate: {} {} of {} checks passed (n={})",
            band,
            report.checks.iter().filter(|c| c.pass).count(),
            report.checks.len(),
            report.n_links
        );
        ctx.roundtrips.push(report);
    }
    Ok(())
}

fn stage_compare(out_dir: &Path, ctx: &mut PipelineCtx) -> Result<()> {
    if ctx.band_report_files.len() < 2 {
        bail!(
            "need fitted reports for at least two bands (got {}): declare a fit stage first",
            ctx.band_report_files.len()
        );
    }
    let a: BandReport = read_json(&ctx.band_report_files[0].1)?;
    let b: BandReport = read_json(&ctx.band_report_files[1].1)?;
    let cmp = compare_bands(&a, &b, &CompareThresholds::default())?;
    print!("{}", render_comparison_table(&cmp));
    write_json(&out_dir.join("comparison.json"), &cmp)?;
    println!(
        "stage compare: {} of {} metrics notable -> comparison.json",
        cmp.n_notable,
        cmp.metrics.len()
    );
    ctx.comparison = Some(cmp);
    Ok(())
}
