//! `mmchan` — dual-band channel-sounding toolkit front end.
//!
//! One binary wires the whole chain: render sounding profiles from planted
//! scenes, extract multipath components, compute per-link statistics,
//! cluster, fit the channel models, generate synthetic ensembles from them,
//! validate the generator by round trip, compare bands, and flatten reports
//! into plot-ready CSV.  Every subcommand is deterministic in
//! `(inputs, --seed)`, independent of `--threads`.

mod commands;
mod pipeline;
mod plotdata;
mod report;
mod table;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use mmchan_core::cluster::McdParams;
use mmchan_core::extract::ExtractParams;
use mmchan_core::fit::PasModel;
use mmchan_core::generate::{MAX_LINK_DISTANCE_M, MIN_LINK_DISTANCE_M};
use mmchan_core::sounder::DEFAULT_NOISE_FLOOR_DB;
use mmchan_core::types::BandLabel;

use commands::{FitKind, NoiseKind};
use plotdata::PlotKind;

#[derive(Parser)]
#[command(
    name = "mmchan",
    version,
    about = "Dual-band (28/140 GHz) channel sounding simulator, analyzer, and model generator",
    after_help = "All randomness derives from --seed through a documented \
                  per-stage splitting rule; reruns are byte-identical for any \
                  --threads value."
)]
struct Cli {
    /// Top-level seed every stage's randomness derives from.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output file or directory (subcommand-specific default when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run-config JSON for `pipeline`; the MMCHAN_CONFIG environment
    /// variable supplies the path when this flag is absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 = one per core). Never changes any output.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a directional sounding profile from a scene file or a random scene.
    Synth {
        /// Planted-scene file; omit and give --band/--distance for a random scene.
        scene: Option<PathBuf>,
        /// Band label (b28, b140) or band-config JSON (random scenes).
        #[arg(long, conflicts_with = "scene")]
        band: Option<String>,
        /// Link distance in meters (random scenes).
        #[arg(long, conflicts_with = "scene")]
        distance: Option<f64>,
        /// Scattered paths to plant (random scenes).
        #[arg(long, default_value_t = 12, conflicts_with = "scene")]
        n_paths: usize,
        /// Plant no line-of-sight path (random scenes).
        #[arg(long, conflicts_with = "scene")]
        nlos: bool,
        /// Cell-noise family.
        #[arg(long, value_enum, default_value_t = NoiseKind::Constant)]
        noise: NoiseKind,
        /// Noise floor in path-gain dB.
        #[arg(long, default_value_t = DEFAULT_NOISE_FLOOR_DB)]
        floor_db: f64,
        /// Also write the (possibly random) scene to this file.
        #[arg(long)]
        save_scene: Option<PathBuf>,
    },

    /// Recover discrete multipath components from a rendered profile.
    Extract {
        /// Input profile (.padp).
        input: PathBuf,
        /// Output path-list CSV; `<input>.mpc.csv` when omitted.
        output: Option<PathBuf>,
        /// Keep paths within this many dB of the strongest.
        #[arg(long, default_value_t = 30.0)]
        threshold: f64,
        /// Require peaks at least this many dB above the noise floor.
        #[arg(long, default_value_t = 6.0)]
        min_snr: f64,
    },

    /// Summarize a path list into one statistics row, or aggregate rows per band.
    Analyze {
        /// Path-list CSV (or a link-statistics CSV with --batch).
        input: PathBuf,
        /// Aggregate an existing link-statistics CSV per band.
        #[arg(long)]
        batch: bool,
        /// Band label (b28, b140) or band-config JSON.
        #[arg(long, conflicts_with = "batch")]
        band: Option<String>,
        /// Link distance in meters.
        #[arg(long, conflicts_with = "batch")]
        distance: Option<f64>,
        /// Link id for the emitted row; the input file stem when omitted.
        #[arg(long, conflicts_with = "batch")]
        link_id: Option<String>,
    },

    /// Group a path list into clusters by multipath-component distance.
    Cluster {
        /// Path-list CSV.
        input: PathBuf,
        /// Delay-term weight of the distance.
        #[arg(long, default_value_t = 9.0)]
        zeta: f64,
        /// Merge-distance cutoff.
        #[arg(long, default_value_t = 0.25)]
        cutoff: f64,
        /// Id recorded as the clusters' source link.
        #[arg(long)]
        link_id: Option<String>,
    },

    /// Fit a channel law to two-column CSV samples.
    Fit {
        /// Which law to fit.
        #[arg(value_enum)]
        kind: FitKind,
        /// Sample CSV: x,y with an optional header line.
        samples: PathBuf,
        /// Angular-shape family (pas fits only).
        #[arg(long, value_enum, default_value_t = PasModelArg::Gaussian)]
        model: PasModelArg,
    },

    /// Draw a synthetic link ensemble from a band model.
    Generate {
        /// Band whose model to draw from.
        #[arg(long)]
        band: BandLabel,
        /// Band-model JSON; the built-in calibrated model when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Number of links.
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Shortest link distance [m].
        #[arg(long, default_value_t = MIN_LINK_DISTANCE_M)]
        dmin: f64,
        /// Longest link distance [m].
        #[arg(long, default_value_t = MAX_LINK_DISTANCE_M)]
        dmax: f64,
    },

    /// Generate an ensemble and verify that analysis recovers the model.
    Validate {
        /// Band whose model to round-trip.
        #[arg(long)]
        band: BandLabel,
        /// Band-model JSON; the built-in calibrated model when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Ensemble size (at least 100).
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Delay-term weight of the clustering distance.
        #[arg(long, default_value_t = 9.0)]
        zeta: f64,
        /// Clustering merge cutoff.
        #[arg(long, default_value_t = 0.25)]
        cutoff: f64,
    },

    /// Compare two fitted band reports metric by metric.
    Compare {
        /// First fitted band report (JSON).
        report_a: PathBuf,
        /// Second fitted band report (JSON).
        report_b: PathBuf,
    },

    /// Flatten a combined run report into tidy plot CSV.
    Plotdata {
        /// Combined report JSON written by `pipeline`.
        report: PathBuf,
        /// Plot family to emit.
        #[arg(long, value_enum)]
        kind: PlotKind,
    },

    /// Run the staged pipeline declared in a JSON config.
    Pipeline,
}

/// Clap-facing mirror of the angular-shape family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum PasModelArg {
    Gaussian,
    #[value(name = "von_mises")]
    VonMises,
}

impl From<PasModelArg> for PasModel {
    fn from(a: PasModelArg) -> PasModel {
        match a {
            PasModelArg::Gaussian => PasModel::Gaussian,
            PasModelArg::VonMises => PasModel::VonMises,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    match cli.command {
        Command::Synth {
            scene,
            band,
            distance,
            n_paths,
            nlos,
            noise,
            floor_db,
            save_scene,
        } => commands::run_synth(
            commands::SynthArgs {
                scene,
                band,
                distance,
                n_paths,
                nlos,
                noise,
                floor_db,
                save_scene,
            },
            cli.seed,
            cli.out,
        ),
        Command::Extract {
            input,
            output,
            threshold,
            min_snr,
        } => commands::run_extract(
            &input,
            output.or(cli.out),
            &ExtractParams {
                threshold_db: threshold,
                min_snr_db: min_snr,
            },
        ),
        Command::Analyze {
            input,
            batch,
            band,
            distance,
            link_id,
        } => commands::run_analyze(
            commands::AnalyzeArgs {
                input,
                batch,
                band,
                distance,
                link_id,
            },
            cli.out,
        ),
        Command::Cluster {
            input,
            zeta,
            cutoff,
            link_id,
        } => {
            let params = McdParams { zeta, cutoff };
            params.validate()?;
            commands::run_cluster(&input, &params, link_id, cli.out)
        }
        Command::Fit {
            kind,
            samples,
            model,
        } => commands::run_fit(kind, &samples, model.into(), cli.out),
        Command::Generate {
            band,
            params,
            n,
            dmin,
            dmax,
        } => commands::run_generate(band, params.as_deref(), n, [dmin, dmax], cli.seed, cli.out),
        Command::Validate {
            band,
            params,
            n,
            zeta,
            cutoff,
        } => {
            let mcd = McdParams { zeta, cutoff };
            mcd.validate()?;
            commands::run_validate(band, params.as_deref(), n, &mcd, cli.seed, cli.out)
        }
        Command::Compare { report_a, report_b } => {
            commands::run_compare(&report_a, &report_b, cli.out)
        }
        Command::Plotdata { report, kind } => {
            let combined: report::CombinedReport = commands::read_json(&report)?;
            let csv = plotdata::emit_plot_data(&combined, kind)?;
            let out_path = cli
                .out
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", kind.name())));
            std::fs::write(&out_path, &csv)
                .with_context(|| format!("cannot write {}", out_path.display()))?;
            println!(
                "{} rows of {} -> {}",
                csv.lines().count() - 1,
                kind.name(),
                out_path.display()
            );
            Ok(())
        }
        Command::Pipeline => {
            let config_path = cli
                .config
                .or_else(|| std::env::var_os("MMCHAN_CONFIG").map(PathBuf::from))
                .context("no run configuration: pass --config FILE or set MMCHAN_CONFIG")?;
            pipeline::run_pipeline(&config_path, cli.out, cli.seed)
        }
    }
}
