//! Implementations of the standalone subcommands and the file helpers the
//! pipeline shares with them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use mmchan_core::cluster::{hierarchical_cluster, ClusterSet, McdParams};
use mmchan_core::fit::{
    compare_bands, evaluate_cluster_power, fit_cluster_power, fit_pas,
    fit_pathloss, BandComparison, BandReport, CompareThresholds, PasModel,
};
use mmchan_core::generate::{generate_ensemble, BandModel};
use mmchan_core::io::{
    read_link_stats, read_mpcs, read_padp, read_scene, write_link_stats, write_mpcs, write_padp,
    write_scene,
};
use mmchan_core::metrics::link_stats;
use mmchan_core::seed;
use mmchan_core::sounder::{synthesize_padp, NoiseModel, SceneParams};
use mmchan_core::types::{BandConfig, BandLabel, LinkStats, LosState};
use mmchan_core::validate::{validate_roundtrip, RoundtripConfig, RoundtripReport};

use crate::table::Table;

// ── shared file helpers ─────────────────────────────────────────────────────

/// Serialize `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serialize to JSON")?;
    text.push('\n');
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Read and deserialize a JSON file, naming the file in every error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} does not hold the expected JSON shape", path.display()))
}

/// Replace a known suffix of `input`'s file name (or append, when the suffix
/// is absent) to derive a default output path in the same directory.
pub fn swap_suffix(input: &Path, strip: &str, add: &str) -> PathBuf {
    let name = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let base = name.strip_suffix(strip).unwrap_or(&name);
    input.with_file_name(format!("{base}{add}"))
}

/// `b28` / `b140`: the lowercase tag used in file names and seed labels.
pub fn band_tag(band: BandLabel) -> String {
    band.to_string().to_lowercase()
}

/// Accept a band either as a label (`b28`, `b140`) or as a path to a
/// sounder-configuration JSON file.
pub fn resolve_band_config(arg: &str) -> Result<BandConfig> {
    if let Ok(label) = arg.parse::<BandLabel>() {
        return Ok(BandConfig::preset(label));
    }
    let path = Path::new(arg);
    if path.exists() {
        let cfg: BandConfig = read_json(path)?;
        cfg.validate()
            .with_context(|| format!("band configuration {}", path.display()))?;
        return Ok(cfg);
    }
    bail!("--band must be b28, b140, or an existing band-config JSON file (got {arg:?})");
}

/// Load a generation model: from a JSON file when given, else the built-in
/// calibrated model of `band`.
pub fn resolve_model(band: BandLabel, params: Option<&Path>) -> Result<BandModel> {
    let model = match params {
        Some(path) => {
            let model: BandModel = read_json(path)?;
            if model.band != band {
                bail!(
                    "model file {} is for {}, but --band asked for {}",
                    path.display(),
                    model.band,
                    band
                );
            }
            model
        }
        None => BandModel::preset(band),
    };
    model.validate()?;
    Ok(model)
}

/// Two-column numeric CSV with an optional one-line header.
pub fn read_xy_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parsed = (|| -> Option<(f64, f64)> {
            let x = cols.next()?.trim().parse().ok()?;
            let y = cols.next()?.trim().parse().ok()?;
            Some((x, y))
        })();
        match parsed {
            Some((x, y)) => {
                xs.push(x);
                ys.push(y);
            }
            None if i == 0 => continue, // header line
            None => bail!(
                "{} line {}: expected two numeric columns, got {line:?}",
                path.display(),
                i + 1
            ),
        }
    }
    if xs.is_empty() {
        bail!("{} holds no numeric samples", path.display());
    }
    Ok((xs, ys))
}

/// Member rows of a cluster set as CSV, tagged with their cluster id.
pub fn write_cluster_csv(path: &Path, set: &ClusterSet) -> Result<()> {
    let mut out = String::from("cluster_id,delay_ns,aoa_deg,path_gain_db\n");
    for (ci, cluster) in set.clusters.iter().enumerate() {
        for m in &cluster.members {
            out.push_str(&format!(
                "{ci},{},{},{}\n",
                m.delay_s * 1e9,
                m.aoa_deg,
                m.path_gain_db
            ));
        }
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

// ── generated-ensemble files (shared by `generate` and the pipeline) ────────

/// Index of one generated ensemble directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub band: BandLabel,
    pub n_links: usize,
    /// Top-level seed the per-link seeds were derived from.
    pub seed: u64,
    pub distance_range_m: [f64; 2],
    /// The model every link was drawn from.
    pub model: BandModel,
    /// One entry per link, in generation order.
    pub links: Vec<ManifestLink>,
}

/// One generated link in an ensemble manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestLink {
    pub link_id: String,
    /// Path-list CSV, relative to the manifest's directory.
    pub file: String,
    pub distance_m: f64,
    pub seed: u64,
    pub n_clusters: usize,
    pub n_paths: usize,
    pub shadowing_db: f64,
}

/// Draw `n` links from `model`, write one path-list CSV per link plus a
/// manifest, and return the manifest.
///
/// Distances are log-uniform over `range`; all randomness derives from
/// `base_seed` via the labels `generate.distance.{band}` and
/// `generate.link.{band}`, so reruns and thread counts cannot change the
/// output.
pub fn generate_ensemble_files(
    model: &BandModel,
    n: usize,
    range: [f64; 2],
    base_seed: u64,
    dir: &Path,
) -> Result<EnsembleManifest> {
    if n == 0 {
        bail!("refusing to generate an empty ensemble");
    }
    if !(range[0] > 0.0) || !(range[1] > range[0]) {
        bail!("distance range [{}, {}] must be increasing and positive", range[0], range[1]);
    }
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let tag = band_tag(model.band);
    let mut rng =
        ChaCha12Rng::seed_from_u64(seed::derive(base_seed, &format!("generate.distance.{tag}"), 0));
    let (lo, hi) = (range[0].log10(), range[1].log10());
    let jobs: Vec<(f64, u64)> = (0..n)
        .map(|i| {
            let d = 10f64.powf(rng.gen_range(lo..hi));
            (d, seed::derive(base_seed, &format!("generate.link.{tag}"), i as u64))
        })
        .collect();
    let links = generate_ensemble(model, &jobs)?;

    let mut entries = Vec::with_capacity(n);
    for link in &links {
        let link_id = format!("{tag}_{:04}", link.link_id);
        let file = format!("{link_id}.mpc.csv");
        write_mpcs(dir.join(&file), &link.mpcs)?;
        entries.push(ManifestLink {
            link_id,
            file,
            distance_m: link.distance_m,
            seed: link.seed,
            n_clusters: link.clusters.len(),
            n_paths: link.mpcs.len(),
            shadowing_db: link.shadowing_db,
        });
    }
    let manifest = EnsembleManifest {
        band: model.band,
        n_links: n,
        seed: base_seed,
        distance_range_m: range,
        model: model.clone(),
        links: entries,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

// ── synth ───────────────────────────────────────────────────────────────────

pub struct SynthArgs {
    pub scene: Option<PathBuf>,
    pub band: Option<String>,
    pub distance: Option<f64>,
    pub n_paths: usize,
    pub nlos: bool,
    pub noise: NoiseKind,
    pub floor_db: f64,
    pub save_scene: Option<PathBuf>,
}

/// Noise families selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum NoiseKind {
    /// Every cell sits exactly at the floor.
    Constant,
    /// Exponentially distributed cell power with the floor as mean.
    Exponential,
}

impl NoiseKind {
    fn to_model(self, floor_db: f64, seed: u64) -> NoiseModel {
        match self {
            NoiseKind::Constant => NoiseModel::ConstantFloor { floor_db },
            NoiseKind::Exponential => NoiseModel::ExponentialFloor { floor_db, seed },
        }
    }
}

pub fn run_synth(args: SynthArgs, base_seed: u64, out: Option<PathBuf>) -> Result<()> {
    let (scene, default_out) = match &args.scene {
        Some(path) => {
            let scene = read_scene(path)?;
            (scene, swap_suffix(path, ".scene", ".padp"))
        }
        None => {
            let (Some(band_arg), Some(distance)) = (&args.band, args.distance) else {
                bail!("either give a scene file, or --band and --distance for a random scene");
            };
            let band = resolve_band_config(band_arg)?;
            let out_path = out.clone().unwrap_or_else(|| PathBuf::from("link.padp"));
            let link_id = out_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "link".to_string())
                .trim_end_matches(".padp")
                .to_string();
            let params = SceneParams {
                n_scattered: args.n_paths,
                ..SceneParams::default()
            };
            let los = if args.nlos { LosState::Nlos } else { LosState::Los };
            let scene = params.sample(
                &band,
                &link_id,
                distance,
                los,
                seed::derive(base_seed, "synth.scene", 0),
            )?;
            (scene, out_path)
        }
    };
    let noise = args
        .noise
        .to_model(args.floor_db, seed::derive(base_seed, "synth.noise", 0));
    let padp = synthesize_padp(&scene, &noise)?;
    let out_path = out.unwrap_or(default_out);
    write_padp(&out_path, &padp)?;
    if let Some(scene_path) = &args.save_scene {
        write_scene(scene_path, &scene)?;
    }
    println!(
        "rendered {} paths of {} ({}) into a {}x{} grid -> {}",
        scene.paths.len(),
        scene.link_id,
        scene.band.label,
        padp.n_azimuth(),
        padp.n_delay,
        out_path.display()
    );
    Ok(())
}

// ── extract ─────────────────────────────────────────────────────────────────

pub fn run_extract(
    input: &Path,
    output: Option<PathBuf>,
    params: &mmchan_core::ExtractParams,
) -> Result<()> {
    let padp = read_padp(input)?;
    let mpcs = mmchan_core::extract_mpcs(&padp, params)?;
    let out_path = output.unwrap_or_else(|| swap_suffix(input, ".padp", ".mpc.csv"));
    write_mpcs(&out_path, &mpcs)?;
    println!(
        "extracted {} paths from {} ({}) -> {}",
        mpcs.len(),
        padp.link_id,
        padp.band.label,
        out_path.display()
    );
    Ok(())
}

// ── analyze ─────────────────────────────────────────────────────────────────

/// Per-band aggregate of link statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub band: BandLabel,
    pub n_links: usize,
    pub mean_omni_pathloss_db: f64,
    pub mean_delay_spread_ns: f64,
    pub mean_azimuth_spread_deg: f64,
    pub mean_n_paths_30db: f64,
    pub mean_n_paths_15db: f64,
}

/// Group per-link rows by band and average each metric.
pub fn summarize_by_band(stats: &[LinkStats]) -> Vec<BandSummary> {
    let mut out = Vec::new();
    for band in [BandLabel::B28, BandLabel::B140] {
        let rows: Vec<&LinkStats> = stats.iter().filter(|s| s.band == band).collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        out.push(BandSummary {
            band,
            n_links: rows.len(),
            mean_omni_pathloss_db: rows.iter().map(|s| s.omni_pathloss_db).sum::<f64>() / n,
            mean_delay_spread_ns: rows.iter().map(|s| s.rms_delay_spread_s).sum::<f64>() / n * 1e9,
            mean_azimuth_spread_deg: rows.iter().map(|s| s.azimuth_spread_deg).sum::<f64>() / n,
            mean_n_paths_30db: rows.iter().map(|s| s.n_paths_30db as f64).sum::<f64>() / n,
            mean_n_paths_15db: rows.iter().map(|s| s.n_paths_15db as f64).sum::<f64>() / n,
        });
    }
    out
}

pub fn render_summary_table(summaries: &[BandSummary]) -> String {
    let mut t = Table::new([
        "band",
        "links",
        "mean PL [dB]",
        "mean DS [ns]",
        "mean AS [deg]",
        "paths/30dB",
        "paths/15dB",
    ]);
    for s in summaries {
        t.row([
            s.band.to_string(),
            s.n_links.to_string(),
            format!("{:.2}", s.mean_omni_pathloss_db),
            format!("{:.2}", s.mean_delay_spread_ns),
            format!("{:.2}", s.mean_azimuth_spread_deg),
            format!("{:.2}", s.mean_n_paths_30db),
            format!("{:.2}", s.mean_n_paths_15db),
        ]);
    }
    t.render()
}

pub struct AnalyzeArgs {
    pub input: PathBuf,
    pub batch: bool,
    pub band: Option<String>,
    pub distance: Option<f64>,
    pub link_id: Option<String>,
}

pub fn run_analyze(args: AnalyzeArgs, out: Option<PathBuf>) -> Result<()> {
    if args.batch {
        let stats = read_link_stats(&args.input)?;
        if stats.is_empty() {
            bail!("{} holds no link rows", args.input.display());
        }
        let summaries = summarize_by_band(&stats);
        print!("{}", render_summary_table(&summaries));
        let out_path = out.unwrap_or_else(|| PathBuf::from("band_summary.json"));
        write_json(&out_path, &summaries)?;
        println!("wrote {}", out_path.display());
        return Ok(());
    }
    let (Some(band_arg), Some(distance)) = (&args.band, args.distance) else {
        bail!("--band and --distance are required unless --batch is given");
    };
    let band = resolve_band_config(band_arg)?;
    let mpcs = read_mpcs(&args.input)?;
    let link_id = args.link_id.clone().unwrap_or_else(|| {
        args.input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "link".to_string())
            .trim_end_matches(".mpc.csv")
            .trim_end_matches(".csv")
            .to_string()
    });
    let stats = link_stats(&link_id, band.label, distance, &mpcs)?;
    let out_path = out.unwrap_or_else(|| swap_suffix(&args.input, ".mpc.csv", ".stats.csv"));
    write_link_stats(&out_path, std::slice::from_ref(&stats))?;
    let mut t = Table::new(["link", "band", "d [m]", "PL [dB]", "DS [ns]", "AS [deg]", "n30", "n15"]);
    t.row([
        stats.link_id.clone(),
        stats.band.to_string(),
        format!("{:.2}", stats.distance_m),
        format!("{:.2}", stats.omni_pathloss_db),
        format!("{:.2}", stats.rms_delay_spread_s * 1e9),
        format!("{:.2}", stats.azimuth_spread_deg),
        stats.n_paths_30db.to_string(),
        stats.n_paths_15db.to_string(),
    ]);
    print!("{}", t.render());
    println!("wrote {}", out_path.display());
    Ok(())
}

// ── cluster ─────────────────────────────────────────────────────────────────

pub fn run_cluster(
    input: &Path,
    params: &McdParams,
    link_id: Option<String>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mpcs = read_mpcs(input)?;
    let id = link_id.unwrap_or_else(|| {
        input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "link".to_string())
            .trim_end_matches(".mpc.csv")
            .trim_end_matches(".csv")
            .to_string()
    });
    let set = hierarchical_cluster(&mpcs, &id, params)?;
    let base = out.unwrap_or_else(|| swap_suffix(input, ".mpc.csv", ""));
    let csv_path = base.with_file_name(format!(
        "{}.clusters.csv",
        base.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    let json_path = base.with_file_name(format!(
        "{}.clusters.json",
        base.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    write_cluster_csv(&csv_path, &set)?;
    write_json(&json_path, &set)?;
    let mut t = Table::new(["cluster", "paths", "power [dB]", "delay [ns]", "azimuth [deg]"]);
    for (ci, c) in set.clusters.iter().enumerate() {
        t.row([
            ci.to_string(),
            c.len().to_string(),
            format!("{:.2}", c.power_db),
            format!("{:.2}", c.centroid_delay_s * 1e9),
            format!("{:.2}", c.centroid_azimuth_deg),
        ]);
    }
    print!("{}", t.render());
    println!(
        "{} clusters over {} paths -> {} + {}",
        set.clusters.len(),
        set.n_paths(),
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

// ── fit ─────────────────────────────────────────────────────────────────────

/// Which law the `fit` subcommand estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FitKind {
    /// Log-distance pathloss: samples are (distance m, pathloss dB).
    Pathloss,
    /// Cluster power decay: samples are (travel distance m, power dB).
    Clusterpower,
    /// Angular shape: samples are (azimuth offset deg, normalized power).
    Pas,
}

/// On-disk record of one fitted law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// `pathloss`, `cluster_power`, `pas_gaussian`, or `pas_von_mises`.
    pub model: String,
    /// Named parameters of the law (ordered alphabetically).
    pub params: BTreeMap<String, f64>,
    /// Residual root-mean-square deviation; for the pathloss law this is the
    /// shadow-fading sigma in dB.
    pub rmse: f64,
    pub n_samples: usize,
}

pub fn run_fit(
    kind: FitKind,
    samples: &Path,
    pas_model: PasModel,
    out: Option<PathBuf>,
) -> Result<()> {
    let (xs, ys) = read_xy_csv(samples)?;
    let n_samples = xs.len();
    let record = match kind {
        FitKind::Pathloss => {
            let fit = fit_pathloss(&xs, &ys)?;
            FitRecord {
                model: "pathloss".to_string(),
                params: BTreeMap::from([
                    ("exponent".to_string(), fit.exponent),
                    ("intercept_db".to_string(), fit.intercept_db),
                ]),
                rmse: fit.shadow_std_db,
                n_samples,
            }
        }
        FitKind::Clusterpower => {
            let fit = fit_cluster_power(&xs, &ys)?;
            let rmse = (xs
                .iter()
                .zip(&ys)
                .map(|(&x, &y)| {
                    let r = y - evaluate_cluster_power(&fit, x);
                    r * r
                })
                .sum::<f64>()
                / n_samples as f64)
                .sqrt();
            FitRecord {
                model: "cluster_power".to_string(),
                params: BTreeMap::from([
                    ("slope_db_per_decade".to_string(), fit.slope_db_per_decade),
                    ("intercept_db".to_string(), fit.intercept_db),
                ]),
                rmse,
                n_samples,
            }
        }
        FitKind::Pas => {
            let fit = fit_pas(&xs, &ys, pas_model)?;
            let (model, param) = match pas_model {
                PasModel::Gaussian => ("pas_gaussian", "sigma_deg"),
                PasModel::VonMises => ("pas_von_mises", "kappa"),
            };
            FitRecord {
                model: model.to_string(),
                params: BTreeMap::from([(param.to_string(), fit.shape_parameter())]),
                rmse: fit.rmse(),
                n_samples,
            }
        }
    };
    let out_path = out.unwrap_or_else(|| PathBuf::from("fit.json"));
    write_json(&out_path, &record)?;
    let mut t = Table::new(["parameter", "value"]);
    for (k, v) in &record.params {
        t.row([k.clone(), format!("{v:.4}")]);
    }
    t.row(["rmse".to_string(), format!("{:.4}", record.rmse)]);
    t.row(["n_samples".to_string(), record.n_samples.to_string()]);
    print!("{}", t.render());
    println!("{} fit -> {}", record.model, out_path.display());
    Ok(())
}

// ── generate ────────────────────────────────────────────────────────────────

pub fn run_generate(
    band: BandLabel,
    params: Option<&Path>,
    n: usize,
    range: [f64; 2],
    base_seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let model = resolve_model(band, params)?;
    let dir = out.unwrap_or_else(|| PathBuf::from("generated"));
    let manifest = generate_ensemble_files(&model, n, range, base_seed, &dir)?;
    println!(
        "generated {} links ({}) -> {} (+ manifest.json)",
        manifest.n_links,
        manifest.band,
        dir.display()
    );
    Ok(())
}

// ── validate ────────────────────────────────────────────────────────────────

pub fn render_roundtrip_table(report: &RoundtripReport) -> String {
    let mut t = Table::new(["check", "target", "recovered", "tolerance", "status"]);
    for c in &report.checks {
        t.row([
            c.name.clone(),
            format!("{:.3}", c.target),
            format!("{:.3}", c.recovered),
            format!("{:.3}", c.tolerance),
            if c.pass { "ok".to_string() } else { "FAIL".to_string() },
        ]);
    }
    t.render()
}

/// Round-trip `model` and return the report; used by both the subcommand and
/// the pipeline stage so the two agree bit for bit.
pub fn roundtrip_band(
    band: BandLabel,
    params: Option<&Path>,
    n: usize,
    mcd: &McdParams,
    base_seed: u64,
) -> Result<RoundtripReport> {
    let model = resolve_model(band, params)?;
    let mut cfg = RoundtripConfig::for_model(&model);
    cfg.n_links = n;
    cfg.mcd = *mcd;
    let stage_seed = seed::derive(base_seed, &format!("validate.{}", band_tag(band)), 0);
    Ok(validate_roundtrip(&model, &cfg, stage_seed)?)
}

pub fn run_validate(
    band: BandLabel,
    params: Option<&Path>,
    n: usize,
    mcd: &McdParams,
    base_seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let report = roundtrip_band(band, params, n, mcd, base_seed)?;
    let out_path =
        out.unwrap_or_else(|| PathBuf::from(format!("roundtrip_{}.json", band_tag(band))));
    write_json(&out_path, &report)?;
    print!("{}", render_roundtrip_table(&report));
    println!("wrote {}", out_path.display());
    if !report.all_pass {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        bail!("{failed} of {} round-trip checks failed for {}", report.checks.len(), band);
    }
    println!("all {} round-trip checks passed for {}", report.checks.len(), band);
    Ok(())
}

// ── compare ─────────────────────────────────────────────────────────────────

pub fn render_comparison_table(cmp: &BandComparison) -> String {
    let mut t = Table::new([
        "metric".to_string(),
        cmp.band_a.to_string(),
        cmp.band_b.to_string(),
        "delta".to_string(),
        "threshold".to_string(),
        "notable".to_string(),
    ]);
    for m in &cmp.metrics {
        t.row([
            m.name.clone(),
            format!("{:.3}", m.value_a),
            format!("{:.3}", m.value_b),
            format!("{:.3}", m.delta),
            format!("{:.3}", m.threshold),
            if m.notable { "yes".to_string() } else { String::new() },
        ]);
    }
    t.render()
}

pub fn run_compare(report_a: &Path, report_b: &Path, out: Option<PathBuf>) -> Result<()> {
    let a: BandReport = read_json(report_a)?;
    let b: BandReport = read_json(report_b)?;
    let cmp = compare_bands(&a, &b, &CompareThresholds::default())?;
    print!("{}", render_comparison_table(&cmp));
    println!(
        "{} of {} metrics differ notably between {} and {}",
        cmp.n_notable,
        cmp.metrics.len(),
        cmp.band_a,
        cmp.band_b
    );
    let out_path = out.unwrap_or_else(|| PathBuf::from("comparison.json"));
    write_json(&out_path, &cmp)?;
    println!("wrote {}", out_path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn suffix_swap_handles_known_and_unknown_names() {
        assert_eq!(
            swap_suffix(Path::new("runs/a.padp"), ".padp", ".mpc.csv"),
            PathBuf::from("runs/a.mpc.csv")
        );
        assert_eq!(
            swap_suffix(Path::new("plain"), ".padp", ".mpc.csv"),
            PathBuf::from("plain.mpc.csv")
        );
    }

    #[test]
    fn xy_csv_reader_skips_one_header_line_only() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "distance_m,pathloss_db\n10,80\n20,90\n").unwrap();
        let (xs, ys) = read_xy_csv(&path).unwrap();
        assert_eq!(xs, vec![10.0, 20.0]);
        assert_eq!(ys, vec![80.0, 90.0]);

        fs::write(&path, "10,80\nbroken,line\n").unwrap();
        let err = read_xy_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn xy_csv_reader_rejects_empty_files() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "x,y\n").unwrap();
        assert!(read_xy_csv(&path).unwrap_err().to_string().contains("no numeric samples"));
    }

    #[test]
    fn band_resolution_accepts_labels_and_files() {
        assert_eq!(resolve_band_config("b28").unwrap().label, BandLabel::B28);
        assert_eq!(resolve_band_config("B140").unwrap().label, BandLabel::B140);
        let dir = tempdir().unwrap();
        let path = dir.path().join("band.json");
        write_json(&path, &BandConfig::preset(BandLabel::B140)).unwrap();
        let cfg = resolve_band_config(path.to_str().unwrap()).unwrap();
        assert_eq!(cfg.label, BandLabel::B140);
        assert!(resolve_band_config("b99").is_err());
    }

    #[test]
    fn model_resolution_rejects_band_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        write_json(&path, &BandModel::b140()).unwrap();
        let err = resolve_model(BandLabel::B28, Some(&path)).unwrap_err();
        assert!(err.to_string().contains("B140"));
        assert_eq!(resolve_model(BandLabel::B28, None).unwrap().band, BandLabel::B28);
    }

    #[test]
    fn generated_ensembles_are_reproducible_on_disk() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let model = BandModel::b28();
        let ma = generate_ensemble_files(&model, 3, [5.0, 40.0], 11, &a).unwrap();
        let mb = generate_ensemble_files(&model, 3, [5.0, 40.0], 11, &b).unwrap();
        assert_eq!(ma, mb);
        for entry in &ma.links {
            let fa = fs::read(a.join(&entry.file)).unwrap();
            let fb = fs::read(b.join(&entry.file)).unwrap();
            assert_eq!(fa, fb, "{}", entry.file);
        }
        assert_eq!(
            fs::read(a.join("manifest.json")).unwrap(),
            fs::read(b.join("manifest.json")).unwrap()
        );
    }

    #[test]
    fn ensemble_manifest_matches_the_files_it_indexes() {
        let dir = tempdir().unwrap();
        let manifest =
            generate_ensemble_files(&BandModel::b140(), 4, [5.0, 30.0], 3, dir.path()).unwrap();
        assert_eq!(manifest.links.len(), 4);
        for entry in &manifest.links {
            let mpcs = read_mpcs(dir.path().join(&entry.file)).unwrap();
            assert_eq!(mpcs.len(), entry.n_paths);
        }
        let back: EnsembleManifest = read_json(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, manifest);
    }

    #[test]
    fn summaries_group_by_band_in_fixed_order() {
        let stats = vec![
            LinkStats {
                link_id: "x".into(),
                band: BandLabel::B140,
                distance_m: 10.0,
                omni_pathloss_db: 100.0,
                rms_delay_spread_s: 10e-9,
                azimuth_spread_deg: 30.0,
                n_paths_30db: 12,
                n_paths_15db: 6,
            },
            LinkStats {
                link_id: "y".into(),
                band: BandLabel::B28,
                distance_m: 12.0,
                omni_pathloss_db: 90.0,
                rms_delay_spread_s: 20e-9,
                azimuth_spread_deg: 40.0,
                n_paths_30db: 20,
                n_paths_15db: 10,
            },
        ];
        let summary = summarize_by_band(&stats);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].band, BandLabel::B28);
        assert_eq!(summary[1].band, BandLabel::B140);
        assert_eq!(summary[0].mean_delay_spread_ns, 20.0);
        assert_eq!(summary[1].mean_n_paths_15db, 6.0);
    }

    #[test]
    fn cluster_csv_tags_members_with_cluster_ids() {
        let mpcs = vec![
            mmchan_core::Mpc::new(10e-9, 10.0, -80.0).unwrap(),
            mmchan_core::Mpc::new(11e-9, 12.0, -82.0).unwrap(),
            mmchan_core::Mpc::new(200e-9, 200.0, -90.0).unwrap(),
        ];
        let set = hierarchical_cluster(&mpcs, "t", &McdParams::default()).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.clusters.csv");
        write_cluster_csv(&path, &set).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "cluster_id,delay_ns,aoa_deg,path_gain_db");
        assert_eq!(text.lines().count(), 1 + 3);
        let ids: Vec<&str> =
            text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert!(ids.iter().all(|&i| i == "0" || i == "1"));
    }
}
