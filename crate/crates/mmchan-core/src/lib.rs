//! Dual-band millimeter-wave channel toolkit.
//!
//! Simulates directional channel sounding of indoor links at 28 and 140 GHz,
//! analyzes the resulting power-angular-delay profiles (PADPs) into multipath
//! components, pathloss, spread, and cluster statistics, and synthesizes new
//! channel realizations from the fitted models. The two bands share a common
//! sounding geometry (equal bandwidth, delay resolution, beamwidths, and scan
//! step) so that their statistics are directly comparable.
//!
//! Pipeline overview:
//!
//! ```text
//! Scene ──synthesize──► Padp ──extract──► Vec<Mpc> ──┬─► LinkStats
//!                                                    ├─► ClusterSet
//!                                                    └─► fits (pathloss / PAS / cluster power)
//! BandModel ──generate──► LinkRealization ──validate──► RoundtripReport
//! ```
//!
//! Every stochastic operation takes an explicit seed and produces identical
//! results on every run, independent of thread count.

pub mod antenna;
pub mod cluster;
pub mod error;
pub mod extract;
pub mod fit;
pub mod generate;
pub mod io;
pub mod metrics;
pub mod seed;
pub mod sounder;
pub mod types;
pub mod validate;

pub use antenna::AntennaPattern;
pub use cluster::{
    cluster_stats, hierarchical_cluster, mcd, Cluster, ClusterSet, ClusterStats, McdParams,
};
pub use error::Error;
pub use extract::{extract_mpcs, ExtractParams};
pub use fit::{
    bessel_i0, bessel_i1, compare_bands, evaluate_cluster_power, evaluate_pathloss,
    fit_cluster_power, fit_cluster_power_fixed_effects, fit_pas, fit_pathloss, gaussian_pas,
    von_mises_pas, BandComparison, BandReport, ClusterPowerFit, CompareThresholds, PasFit,
    PasModel, PathlossFit,
};
pub use generate::{
    generate_ensemble, generate_link, BandModel, GeneratedCluster, LinkRealization, NormalParams,
};
pub use metrics::{
    azimuth_spread_deg, count_within, friis_fspl_db, link_stats, omni_pathloss_db,
    rms_delay_spread_s,
};
pub use sounder::{synthesize_padp, NoiseModel, Scene, SceneParams};
pub use types::{
    validate_comparability, BandConfig, BandLabel, LinkStats, LosState, Mpc, Padp,
};
pub use validate::{
    roundtrip_ensemble, validate_roundtrip, MetricCheck, RoundtripConfig, RoundtripReport,
};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
