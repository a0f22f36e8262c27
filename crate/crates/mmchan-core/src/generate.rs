//! Stochastic generation of link realizations from fitted band statistics.
//!
//! A [`BandModel`] bundles everything the analysis pipeline learns about one
//! carrier band: the pathloss law, the cluster power law, the angular
//! spectrum shape, cluster/ray count distributions, and spread knobs.
//! [`generate_link`] turns a model into a concrete [`LinkRealization`] — a
//! set of clusters, each a bundle of discrete paths — whose total power
//! matches the pathloss law exactly.
//!
//! Per-link procedure:
//! 1. Cluster count `N` and per-cluster ray counts `M_k` are rounded normal
//!    draws clipped to ≥ 1.  The normal means are pre-corrected with
//!    [`mean_corrected_mu`] so the clipped-rounded draws average to the
//!    configured means.
//! 2. Cluster excess delays are exponential; a cluster's travel distance is
//!    the link distance plus the excess path length.
//! 3. Cluster powers follow the cluster power law at the travel distance,
//!    plus per-cluster shadowing.
//! 4. Cluster angles come from the inverse power-to-angle mapping of the
//!    angular spectrum (stronger clusters sit closer to the mean direction),
//!    plus one uniform random rotation of the whole link.
//! 5. Each cluster's rays spread around it in delay and angle with the
//!    intra-cluster standard deviations and share the cluster power equally.
//! 6. One common dB offset rescales all rays so the link total matches the
//!    pathloss law with a fresh shadowing draw.
//!
//! Every realization is a pure function of `(model, distance, seed)`; the
//! draw order above is part of the determinism contract.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::wrap_deg_360;
use crate::error::{Error, Result};
use crate::fit::{
    evaluate_cluster_power, evaluate_pathloss, kappa_for_circular_std_deg, ClusterPowerFit,
    PasFit, PathlossFit,
};
use crate::types::{BandLabel, Mpc};
use crate::SPEED_OF_LIGHT;

/// Smallest link distance a model will generate [m].
pub const MIN_LINK_DISTANCE_M: f64 = 3.0;
/// Largest link distance a model will generate [m].
pub const MAX_LINK_DISTANCE_M: f64 = 65.0;

/// Mean and standard deviation of a normal draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    /// Target mean of the clipped, rounded draw.
    pub mean: f64,
    /// Standard deviation of the underlying normal.
    pub std: f64,
}

impl NormalParams {
    fn validate(&self, what: &str) -> Result<()> {
        if !self.mean.is_finite() || self.mean < 1.0 {
            return Err(Error::invalid(
                "band model",
                format!("{what} mean must be ≥ 1, got {}", self.mean),
            ));
        }
        if !self.std.is_finite() || self.std < 0.0 {
            return Err(Error::invalid(
                "band model",
                format!("{what} std must be ≥ 0, got {}", self.std),
            ));
        }
        Ok(())
    }
}

/// Generative description of one carrier band.
///
/// The count distributions and laws come from the analysis pipeline; the
/// four spread knobs (`intra_cluster_*`, `excess_delay_mean_s`,
/// `per_cluster_shadowing_std_db`) and the angular mapping scale
/// (`cluster_angle_scale_deg`) are calibrated against the round-trip
/// validator rather than measured directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandModel {
    /// Carrier band the model describes.
    pub band: BandLabel,
    /// Omnidirectional pathloss law (sets the total link power).
    pub pathloss: PathlossFit,
    /// Cluster power versus travel distance law.
    pub cluster_power: ClusterPowerFit,
    /// Fitted shape of the composite power angular spectrum.
    pub pas: PasFit,
    /// Cluster count distribution (clipped rounded normal).
    pub n_clusters: NormalParams,
    /// Rays-per-cluster distribution (clipped rounded normal).
    pub m_per_cluster: NormalParams,
    /// Ray delay spread around the cluster delay [s].
    pub intra_cluster_delay_std_s: f64,
    /// Ray angle spread around the cluster angle [deg].
    pub intra_cluster_angle_std_deg: f64,
    /// Mean of the exponential cluster excess delay [s].
    pub excess_delay_mean_s: f64,
    /// Per-cluster shadowing on top of the cluster power law [dB].
    pub per_cluster_shadowing_std_db: f64,
    /// Width of the power-to-angle inverse mapping for cluster angles
    /// [deg].  Wider than the fitted PAS width: the mapping concentrates
    /// cluster angles, so the scale is calibrated for the target ensemble
    /// azimuth spread.
    pub cluster_angle_scale_deg: f64,
}

impl BandModel {
    /// Fitted low-band (28 GHz) model with calibrated spread knobs.
    pub fn b28() -> BandModel {
        BandModel {
            band: BandLabel::B28,
            pathloss: PathlossFit {
                exponent: 2.10,
                intercept_db: 59.16,
                shadow_std_db: 2.85,
            },
            cluster_power: ClusterPowerFit {
                slope_db_per_decade: -30.5,
                intercept_db: -58.0,
            },
            pas: PasFit::Gaussian {
                sigma_deg: 17.9,
                rmse: 0.011,
            },
            n_clusters: NormalParams {
                mean: 7.9,
                std: 3.6,
            },
            m_per_cluster: NormalParams {
                mean: 5.4,
                std: 6.0,
            },
            intra_cluster_delay_std_s: 2e-9,
            intra_cluster_angle_std_deg: 1.5,
            excess_delay_mean_s: 50e-9,
            per_cluster_shadowing_std_db: 6.0,
            cluster_angle_scale_deg: 50.0,
        }
    }

    /// Fitted high-band (140 GHz) model with calibrated spread knobs.
    pub fn b140() -> BandModel {
        BandModel {
            band: BandLabel::B140,
            pathloss: PathlossFit {
                exponent: 2.22,
                intercept_db: 70.77,
                shadow_std_db: 2.94,
            },
            cluster_power: ClusterPowerFit {
                slope_db_per_decade: -24.8,
                intercept_db: -78.1,
            },
            pas: PasFit::Gaussian {
                sigma_deg: 18.0,
                rmse: 0.005,
            },
            n_clusters: NormalParams {
                mean: 5.9,
                std: 2.1,
            },
            m_per_cluster: NormalParams {
                mean: 3.8,
                std: 2.5,
            },
            intra_cluster_delay_std_s: 2e-9,
            intra_cluster_angle_std_deg: 1.5,
            excess_delay_mean_s: 50e-9,
            per_cluster_shadowing_std_db: 6.0,
            cluster_angle_scale_deg: 46.0,
        }
    }

    /// The preset model for `band`.
    pub fn preset(band: BandLabel) -> BandModel {
        match band {
            BandLabel::B28 => BandModel::b28(),
            BandLabel::B140 => BandModel::b140(),
        }
    }

    /// Check all count means, spreads, and scales.
    pub fn validate(&self) -> Result<()> {
        self.n_clusters.validate("cluster count")?;
        self.m_per_cluster.validate("rays-per-cluster")?;
        for (name, v) in [
            ("intra-cluster delay std", self.intra_cluster_delay_std_s),
            ("intra-cluster angle std", self.intra_cluster_angle_std_deg),
            ("excess delay mean", self.excess_delay_mean_s),
            ("per-cluster shadowing std", self.per_cluster_shadowing_std_db),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    "band model",
                    format!("{name} must be ≥ 0, got {v}"),
                ));
            }
        }
        if !self.cluster_angle_scale_deg.is_finite() || self.cluster_angle_scale_deg <= 0.0 {
            return Err(Error::invalid(
                "band model",
                format!(
                    "cluster angle scale must be positive, got {}",
                    self.cluster_angle_scale_deg
                ),
            ));
        }
        if !self.pathloss.shadow_std_db.is_finite() || self.pathloss.shadow_std_db < 0.0 {
            return Err(Error::invalid(
                "band model",
                format!(
                    "pathloss shadow std must be ≥ 0, got {}",
                    self.pathloss.shadow_std_db
                ),
            ));
        }
        Ok(())
    }
}

/// One generated cluster, before flattening into rays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedCluster {
    /// Delay in excess of the direct path [s].
    pub excess_delay_s: f64,
    /// Travel distance the cluster power law was evaluated at [m].
    pub travel_distance_m: f64,
    /// Cluster center azimuth after the global rotation [deg, 0–360).
    pub aoa_deg: f64,
    /// Cluster power after the final link rescale [dB].
    pub power_db: f64,
    /// Number of rays in the cluster.
    pub n_paths: usize,
}

/// One generated link: clusters plus the flattened ray list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRealization {
    /// Carrier band of the generating model.
    pub band: BandLabel,
    /// Position of the link in its ensemble.
    pub link_id: u64,
    /// Transmitter-receiver separation [m].
    pub distance_m: f64,
    /// Ground-truth cluster structure.
    pub clusters: Vec<GeneratedCluster>,
    /// All rays of all clusters, in cluster order.
    pub mpcs: Vec<Mpc>,
    /// Link shadowing realization entering the pathloss law [dB].
    pub shadowing_db: f64,
    /// Seed the realization was drawn from.
    pub seed: u64,
}

impl LinkRealization {
    /// Total linear path power (should equal `10^(−PL/10)` for the link's
    /// pathloss `PL`).
    pub fn total_linear_power(&self) -> f64 {
        self.mpcs.iter().map(|m| 10f64.powf(m.path_gain_db / 10.0)).sum()
    }
}

/// Error function, via the Abramowitz–Stegun rational approximation
/// (absolute error below 1.5e-7 everywhere).
fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Expectation of `max(1, round(X))` for `X ~ Normal(mu, sigma)`.
fn clipped_round_mean(mu: f64, sigma: f64) -> f64 {
    let k_max = ((mu + 12.0 * sigma).ceil() as i64).max(2);
    let mut expect = normal_cdf((1.5 - mu) / sigma);
    for k in 2..=k_max {
        let hi = normal_cdf((k as f64 + 0.5 - mu) / sigma);
        let lo = normal_cdf((k as f64 - 0.5 - mu) / sigma);
        expect += k as f64 * (hi - lo);
    }
    expect
}

/// The normal mean `mu'` such that `max(1, round(Normal(mu', std)))` has
/// expectation `mean`.
///
/// Clipping at 1 and rounding bias the draw mean upward; feeding the
/// corrected mean into the generator makes the realized count average match
/// the configured one.
pub fn mean_corrected_mu(mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    let mut lo = mean - 4.0 * std;
    let mut hi = mean + 1.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if clipped_round_mean(mid, std) > mean {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn draw_count(rng: &mut ChaCha12Rng, corrected_mean: f64, std: f64) -> usize {
    let normal = Normal::new(corrected_mean, std).expect("validated std");
    let draw: f64 = normal.sample(rng);
    draw.round().max(1.0) as usize
}

/// One draw from a zero-mean von Mises distribution with concentration
/// `kappa`, in degrees, via the Best–Fisher rejection sampler (wrapped
/// Cauchy envelope).
fn sample_von_mises_deg(rng: &mut ChaCha12Rng, kappa: f64) -> f64 {
    use std::f64::consts::PI;
    if kappa < 1e-9 {
        return rng.gen_range(-180.0..180.0);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let sign = if u3 > 0.5 { 1.0 } else { -1.0 };
            return (sign * f.clamp(-1.0, 1.0).acos()).to_degrees();
        }
    }
}

/// Generate one link realization.
///
/// Pure in `(model, distance, seed)`; `link_id` is carried through as
/// metadata.  The distance must lie in
/// [[`MIN_LINK_DISTANCE_M`], [`MAX_LINK_DISTANCE_M`]].
pub fn generate_link(
    model: &BandModel,
    link_id: u64,
    distance_m: f64,
    seed: u64,
) -> Result<LinkRealization> {
    model.validate()?;
    if !distance_m.is_finite()
        || distance_m < MIN_LINK_DISTANCE_M
        || distance_m > MAX_LINK_DISTANCE_M
    {
        return Err(Error::invalid(
            "generate",
            format!(
                "link distance {distance_m} m outside [{MIN_LINK_DISTANCE_M}, {MAX_LINK_DISTANCE_M}] m"
            ),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // 1. Cluster count.
    let mu_n = mean_corrected_mu(model.n_clusters.mean, model.n_clusters.std);
    let mu_m = mean_corrected_mu(model.m_per_cluster.mean, model.m_per_cluster.std);
    let n_clusters = draw_count(&mut rng, mu_n, model.n_clusters.std);

    // 2. Excess delays and travel distances.
    let excess: Vec<f64> = if model.excess_delay_mean_s > 0.0 {
        let exp = Exp::new(1.0 / model.excess_delay_mean_s).expect("positive rate");
        (0..n_clusters).map(|_| exp.sample(&mut rng)).collect()
    } else {
        vec![0.0; n_clusters]
    };
    let travel: Vec<f64> = excess
        .iter()
        .map(|&e| distance_m + SPEED_OF_LIGHT * e)
        .collect();

    // 3. Cluster powers: power law at the travel distance plus shadowing.
    let cluster_shadow = Normal::new(0.0, model.per_cluster_shadowing_std_db).expect("validated std");
    let powers: Vec<f64> = travel
        .iter()
        .map(|&dk| evaluate_cluster_power(&model.cluster_power, dk) + cluster_shadow.sample(&mut rng))
        .collect();

    // 4. Cluster angles: inverse power-to-angle mapping plus global rotation.
    let max_power = powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = model.cluster_angle_scale_deg;
    let offsets: Vec<f64> = match model.pas {
        PasFit::Gaussian { .. } => powers
            .iter()
            .map(|&p| {
                let rel = 10f64.powf((p - max_power) / 10.0);
                let mag = scale * (-rel.ln()).max(0.0).sqrt();
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                sign * mag
            })
            .collect(),
        PasFit::VonMises { .. } => {
            let kappa = kappa_for_circular_std_deg(scale);
            powers
                .iter()
                .map(|_| sample_von_mises_deg(&mut rng, kappa))
                .collect()
        }
    };
    let rotation: f64 = rng.gen_range(0.0..360.0);
    let angles: Vec<f64> = offsets.iter().map(|&o| wrap_deg_360(o + rotation)).collect();

    // 5. Rays: spread around the cluster, equal share of the cluster power.
    let delay_jitter = Normal::new(0.0, model.intra_cluster_delay_std_s).expect("validated std");
    let angle_jitter = Normal::new(0.0, model.intra_cluster_angle_std_deg).expect("validated std");
    let mut ray_delay = Vec::new();
    let mut ray_angle = Vec::new();
    let mut ray_gain = Vec::new();
    let mut m_counts = Vec::with_capacity(n_clusters);
    for k in 0..n_clusters {
        let m = draw_count(&mut rng, mu_m, model.m_per_cluster.std);
        m_counts.push(m);
        let tau_k = distance_m / SPEED_OF_LIGHT + excess[k];
        let share = powers[k] - 10.0 * (m as f64).log10();
        for _ in 0..m {
            let t = (tau_k + delay_jitter.sample(&mut rng)).max(0.0);
            let a = wrap_deg_360(angles[k] + angle_jitter.sample(&mut rng));
            ray_delay.push(t);
            ray_angle.push(a);
            ray_gain.push(share);
        }
    }

    // 6. Common rescale so the link total matches the pathloss law.
    let link_shadow = Normal::new(0.0, model.pathloss.shadow_std_db).expect("validated std");
    let shadowing_db: f64 = link_shadow.sample(&mut rng);
    let pl = evaluate_pathloss(&model.pathloss, distance_m, shadowing_db)?;
    let total: f64 = ray_gain.iter().map(|&g| 10f64.powf(g / 10.0)).sum();
    let delta = -pl - 10.0 * total.log10();

    let mpcs: Vec<Mpc> = ray_delay
        .iter()
        .zip(&ray_angle)
        .zip(&ray_gain)
        .map(|((&t, &a), &g)| Mpc::new(t, a, g + delta))
        .collect::<Result<_>>()?;
    let clusters: Vec<GeneratedCluster> = (0..n_clusters)
        .map(|k| GeneratedCluster {
            excess_delay_s: excess[k],
            travel_distance_m: travel[k],
            aoa_deg: angles[k],
            power_db: powers[k] + delta,
            n_paths: m_counts[k],
        })
        .collect();

    Ok(LinkRealization {
        band: model.band,
        link_id,
        distance_m,
        clusters,
        mpcs,
        shadowing_db,
        seed,
    })
}

/// Generate one realization per `(distance, seed)` job, in job order.
///
/// Links are generated in parallel; because every link draws from its own
/// seed, the result is identical to sequential generation.
pub fn generate_ensemble(model: &BandModel, jobs: &[(f64, u64)]) -> Result<Vec<LinkRealization>> {
    if jobs.is_empty() {
        return Err(Error::empty("generation job list"));
    }
    jobs.par_iter()
        .enumerate()
        .map(|(i, &(distance_m, seed))| generate_link(model, i as u64, distance_m, seed))
        .collect()
}
