//! Model fitting: distance power laws, angular power spectrum shapes, and
//! side-by-side band comparison.
//!
//! Three families of estimators live here:
//!
//! * **Pathloss** — ordinary least squares of pathloss in dB against
//!   `10·log10(distance)`, yielding a pathloss exponent, a 1 m intercept, and
//!   the shadow-fading standard deviation of the residuals
//!   ([`fit_pathloss`]).
//! * **Cluster power** — least squares of cluster path gain in dB against
//!   `log10(cluster travel distance)`.  Two estimators are provided: a pooled
//!   fit over all clusters ([`fit_cluster_power`]) and a fixed-effects fit
//!   that removes per-link offsets before pooling
//!   ([`fit_cluster_power_fixed_effects`]).  The fixed-effects variant is the
//!   one used for round-trip validation because per-link power normalization
//!   shifts every cluster of a link by a common offset, which biases the
//!   pooled slope but cancels under within-link centering.
//! * **Power angular spectrum (PAS)** — normalized angular shapes fitted by
//!   minimizing RMSE over a single shape parameter with a coarse scan plus
//!   golden-section refinement ([`fit_pas`]).  Supported shapes are a
//!   unit-peak Gaussian and a von Mises density ([`gaussian_pas`],
//!   [`von_mises_pas`]).
//!
//! The von Mises evaluation needs the modified Bessel function of the first
//! kind; [`bessel_i0`] and [`bessel_i1`] implement it with a power series for
//! small arguments and the large-argument asymptotic expansion above 50,
//! accurate to better than 1e-12 relative error over the domain used here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{validate_comparability, BandConfig, BandLabel};

/// Argument above which the Bessel evaluation switches from the power series
/// to the asymptotic expansion.  The series has all-positive terms, so it is
/// stable up to the switch; at 50 the optimally truncated asymptotic series
/// is already accurate to machine precision.
const BESSEL_SERIES_LIMIT: f64 = 50.0;

/// Modified Bessel function of the first kind, order zero.
///
/// Uses the ascending power series for `|x| < 50` and the large-argument
/// asymptotic expansion otherwise.  Relative accuracy is better than 1e-12
/// everywhere, including the crossover.  Arguments beyond roughly 700
/// overflow `f64` on the asymptotic branch.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < BESSEL_SERIES_LIMIT {
        // I0(x) = sum_k (x^2/4)^k / (k!)^2
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=220u32 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k prod_j (2j-1)^2 / (k! (8x)^k)
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..=40u32 {
            let odd = (2 * k - 1) as f64;
            let next = term * odd * odd / (8.0 * ax * k as f64);
            // The asymptotic series eventually diverges; stop at the
            // smallest term.
            if next >= term {
                break;
            }
            term = next;
            sum += term;
            if term < sum * 1e-16 {
                break;
            }
        }
        ax.exp() / (2.0 * std::f64::consts::PI * ax).sqrt() * sum
    }
}

/// Modified Bessel function of the first kind, order one.
///
/// Same branch structure and accuracy as [`bessel_i0`].  Odd in `x`.
pub fn bessel_i1(x: f64) -> f64 {
    let ax = x.abs();
    let mag = if ax < BESSEL_SERIES_LIMIT {
        // I1(x) = (x/2) sum_k (x^2/4)^k / (k! (k+1)!)
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=220u32 {
            term *= q / ((k * (k + 1)) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        0.5 * ax * sum
    } else {
        // I1(x) ~ e^x / sqrt(2 pi x) * (1 - 3/(8x) - 15/(128 x^2) - ...)
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..=40u32 {
            let odd = (2 * k - 1) as f64;
            let next = term * (odd * odd - 4.0) / (8.0 * ax * k as f64);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum -= term.abs();
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        ax.exp() / (2.0 * std::f64::consts::PI * ax).sqrt() * sum
    };
    if x < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Mean resultant length `I1(kappa) / I0(kappa)` of a von Mises density,
/// valid for arbitrarily large `kappa` (switches to an asymptotic ratio
/// above 500 to avoid overflow).
fn bessel_ratio(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        0.0
    } else if kappa < 500.0 {
        bessel_i1(kappa) / bessel_i0(kappa)
    } else {
        let k = kappa;
        1.0 - 1.0 / (2.0 * k) - 1.0 / (8.0 * k * k) - 1.0 / (8.0 * k * k * k)
    }
}

/// Circular standard deviation in degrees of a von Mises density with
/// concentration `kappa`, defined through the mean resultant length `R` as
/// `sqrt(-2 ln R)`.
pub fn von_mises_circular_std_deg(kappa: f64) -> f64 {
    let r = bessel_ratio(kappa);
    if r <= 0.0 {
        return f64::INFINITY;
    }
    (-2.0 * r.ln()).sqrt().to_degrees()
}

/// Concentration `kappa` of the von Mises density whose circular standard
/// deviation equals `std_deg`.  Solved by bisection on the monotone mean
/// resultant length; the result is clamped to `[0, 1e6]`.
pub fn kappa_for_circular_std_deg(std_deg: f64) -> f64 {
    if !std_deg.is_finite() || std_deg <= 0.0 {
        return 1e6;
    }
    let target = (-0.5 * std_deg.to_radians().powi(2)).exp();
    let (mut lo, mut hi) = (0.0f64, 1e6f64);
    if bessel_ratio(hi) <= target {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unit-peak Gaussian angular shape `exp(-(offset/sigma)^2)`.
///
/// `offset_deg` is the azimuth offset from the spectrum peak and `sigma_deg`
/// the shape width, both in degrees.  Maximum value 1 at zero offset.
pub fn gaussian_pas(offset_deg: f64, sigma_deg: f64) -> f64 {
    let z = offset_deg / sigma_deg;
    (-z * z).exp()
}

/// Von Mises angular density `exp(kappa cos(offset)) / (2 pi I0(kappa))`.
///
/// `offset_deg` is the azimuth offset from the spectrum peak in degrees.
/// Integrates to one over a full turn (in radians); `kappa = 0` gives the
/// uniform density `1/(2 pi)`.
pub fn von_mises_pas(offset_deg: f64, kappa: f64) -> f64 {
    (kappa * offset_deg.to_radians().cos()).exp()
        / (2.0 * std::f64::consts::PI * bessel_i0(kappa))
}

/// Angular-shape family used by [`fit_pas`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PasModel {
    /// Unit-peak Gaussian, parameterized by its width in degrees.
    Gaussian,
    /// Von Mises density, parameterized by its concentration.
    VonMises,
}

impl std::fmt::Display for PasModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PasModel::Gaussian => write!(f, "gaussian"),
            PasModel::VonMises => write!(f, "von_mises"),
        }
    }
}

/// Result of a single-parameter angular-shape fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PasFit {
    /// Best-fit unit-peak Gaussian.
    Gaussian {
        /// Fitted width in degrees.
        sigma_deg: f64,
        /// Root-mean-square residual of the fit.
        rmse: f64,
    },
    /// Best-fit von Mises density.
    VonMises {
        /// Fitted concentration.
        kappa: f64,
        /// Root-mean-square residual of the fit.
        rmse: f64,
    },
}

impl PasFit {
    /// The shape family of this fit.
    pub fn model(&self) -> PasModel {
        match self {
            PasFit::Gaussian { .. } => PasModel::Gaussian,
            PasFit::VonMises { .. } => PasModel::VonMises,
        }
    }

    /// The fitted shape parameter: width in degrees for the Gaussian,
    /// concentration for the von Mises.
    pub fn shape_parameter(&self) -> f64 {
        match self {
            PasFit::Gaussian { sigma_deg, .. } => *sigma_deg,
            PasFit::VonMises { kappa, .. } => *kappa,
        }
    }

    /// Root-mean-square residual of the fit.
    pub fn rmse(&self) -> f64 {
        match self {
            PasFit::Gaussian { rmse, .. } | PasFit::VonMises { rmse, .. } => *rmse,
        }
    }

    /// Evaluate the fitted shape at an azimuth offset in degrees.
    pub fn evaluate(&self, offset_deg: f64) -> f64 {
        match self {
            PasFit::Gaussian { sigma_deg, .. } => gaussian_pas(offset_deg, *sigma_deg),
            PasFit::VonMises { kappa, .. } => von_mises_pas(offset_deg, *kappa),
        }
    }
}

/// Golden-section minimization of `f` on `[lo, hi]`.
fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if hi - lo <= 1e-9 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Minimize `f` over the parameter values in `grid` (assumed ascending):
/// pick the best grid point, then refine with golden-section search between
/// its neighbors.
fn scan_then_golden(grid: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for (i, &p) in grid.iter().enumerate() {
        let v = f(p);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if hi > lo {
        golden_min(lo, hi, f)
    } else {
        grid[best]
    }
}

/// Fit a single-parameter angular shape to sampled spectrum values by
/// minimizing the RMSE.
///
/// `offsets_deg` are azimuth offsets from the spectrum peak (degrees) and
/// `values` the normalized spectrum samples at those offsets.  The Gaussian
/// width is searched over 0.5°..180° and the von Mises concentration over
/// 0.01..500 (log-spaced coarse scan, golden-section refinement).
pub fn fit_pas(offsets_deg: &[f64], values: &[f64], model: PasModel) -> Result<PasFit> {
    if offsets_deg.len() != values.len() {
        return Err(Error::invalid(
            "pas samples",
            format!(
                "offset and value counts differ: {} vs {}",
                offsets_deg.len(),
                values.len()
            ),
        ));
    }
    if offsets_deg.len() < 3 {
        return Err(Error::invalid(
            "pas samples",
            "need at least three samples to fit an angular shape",
        ));
    }
    if offsets_deg.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::invalid("pas samples", "non-finite sample"));
    }
    if offsets_deg.iter().all(|&p| p == offsets_deg[0]) {
        return Err(Error::invalid(
            "pas samples",
            "all samples sit at one angle; the shape is unconstrained",
        ));
    }
    let rmse = |f: &dyn Fn(f64) -> f64| -> f64 {
        let sq: f64 = offsets_deg
            .iter()
            .zip(values)
            .map(|(&p, &y)| {
                let r = f(p) - y;
                r * r
            })
            .sum();
        (sq / offsets_deg.len() as f64).sqrt()
    };
    match model {
        PasModel::Gaussian => {
            let grid: Vec<f64> = (0..128).map(|i| 0.5 + 179.5 * i as f64 / 127.0).collect();
            let sigma = scan_then_golden(&grid, |s| rmse(&|p| gaussian_pas(p, s)));
            Ok(PasFit::Gaussian {
                sigma_deg: sigma,
                rmse: rmse(&|p| gaussian_pas(p, sigma)),
            })
        }
        PasModel::VonMises => {
            let (lo, hi) = (0.01f64, 500.0f64);
            let mut grid = vec![0.0f64];
            grid.extend((0..128).map(|i| lo * (hi / lo).powf(i as f64 / 127.0)));
            let kappa = scan_then_golden(&grid, |k| rmse(&|p| von_mises_pas(p, k)));
            Ok(PasFit::VonMises {
                kappa,
                rmse: rmse(&|p| von_mises_pas(p, kappa)),
            })
        }
    }
}

/// Simple least squares of `y` on `x`; returns `(slope, intercept)`.
fn ols(x: &[f64], y: &[f64], what: &'static str) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&u, &v)| (u - mx) * (v - my)).sum();
    if sxx <= 1e-12 {
        return Err(Error::invalid(
            what,
            "regressor has no spread; need at least two distinct abscissas",
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Distance power law for per-link omnidirectional pathloss: fitted by
/// [`fit_pathloss`], or populated from published parameters when used as a
/// generator input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathlossFit {
    /// Pathloss exponent: dB of loss per factor-of-ten distance is
    /// `10 * exponent`.
    pub exponent: f64,
    /// Pathloss in dB extrapolated to 1 m.
    pub intercept_db: f64,
    /// Population standard deviation of the fit residuals in dB
    /// (shadow fading).
    pub shadow_std_db: f64,
}

/// Fit `pathloss = 10 * exponent * log10(distance) + intercept` by least
/// squares and report the residual standard deviation as shadow fading.
///
/// Requires at least two links at distinct distances; distances must be
/// positive and finite.
pub fn fit_pathloss(distances_m: &[f64], pathloss_db: &[f64]) -> Result<PathlossFit> {
    if distances_m.len() != pathloss_db.len() {
        return Err(Error::invalid(
            "pathloss samples",
            format!(
                "distance and pathloss counts differ: {} vs {}",
                distances_m.len(),
                pathloss_db.len()
            ),
        ));
    }
    if distances_m.len() < 2 {
        return Err(Error::invalid(
            "pathloss samples",
            "need at least two links to fit a distance power law",
        ));
    }
    if distances_m.iter().any(|&d| !d.is_finite() || d <= 0.0) {
        return Err(Error::invalid("pathloss samples", "non-positive distance"));
    }
    if pathloss_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("pathloss samples", "non-finite pathloss"));
    }
    let x: Vec<f64> = distances_m.iter().map(|d| 10.0 * d.log10()).collect();
    let (slope, intercept) = ols(&x, pathloss_db, "pathloss samples")?;
    let var: f64 = x
        .iter()
        .zip(pathloss_db)
        .map(|(&u, &v)| {
            let r = v - (slope * u + intercept);
            r * r
        })
        .sum::<f64>()
        / x.len() as f64;
    Ok(PathlossFit {
        exponent: slope,
        intercept_db: intercept,
        shadow_std_db: var.sqrt(),
    })
}

/// Evaluate a pathloss law at a distance in meters with an explicit shadow
/// fading term: `10 * exponent * log10(d) + intercept + shadowing`.
pub fn evaluate_pathloss(fit: &PathlossFit, distance_m: f64, shadowing_db: f64) -> Result<f64> {
    if !distance_m.is_finite() || distance_m <= 0.0 {
        return Err(Error::invalid(
            "pathloss evaluation",
            format!("non-positive distance {distance_m}"),
        ));
    }
    Ok(10.0 * fit.exponent * distance_m.log10() + fit.intercept_db + shadowing_db)
}

/// Distance power law for cluster path gain versus cluster travel distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterPowerFit {
    /// Gain change in dB per factor-of-ten travel distance (negative for
    /// decaying clusters).
    pub slope_db_per_decade: f64,
    /// Gain in dB extrapolated to 1 m travel distance.
    pub intercept_db: f64,
}

fn check_cluster_points(distances_m: &[f64], power_db: &[f64]) -> Result<()> {
    if distances_m.len() != power_db.len() {
        return Err(Error::invalid(
            "cluster power samples",
            format!(
                "distance and power counts differ: {} vs {}",
                distances_m.len(),
                power_db.len()
            ),
        ));
    }
    if distances_m.iter().any(|&d| !d.is_finite() || d <= 0.0) {
        return Err(Error::invalid(
            "cluster power samples",
            "non-positive cluster travel distance",
        ));
    }
    if power_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cluster power samples", "non-finite power"));
    }
    Ok(())
}

/// Pooled fit of `power = slope * log10(distance) + intercept` over all
/// clusters of all links.
///
/// `distances_m` holds cluster travel distances (link distance plus excess
/// delay converted to meters); `power_db` the cluster path gains.
pub fn fit_cluster_power(distances_m: &[f64], power_db: &[f64]) -> Result<ClusterPowerFit> {
    check_cluster_points(distances_m, power_db)?;
    if distances_m.len() < 2 {
        return Err(Error::invalid(
            "cluster power samples",
            "need at least two clusters to fit a power law",
        ));
    }
    let x: Vec<f64> = distances_m.iter().map(|d| d.log10()).collect();
    let (slope, intercept) = ols(&x, power_db, "cluster power samples")?;
    Ok(ClusterPowerFit {
        slope_db_per_decade: slope,
        intercept_db: intercept,
    })
}

/// Fixed-effects fit of the cluster power law: within-link centering removes
/// each link's common power offset, the slope is estimated from the pooled
/// centered points, and the intercept is recovered from the grand means.
///
/// Each element of `links` holds one link's `(travel distance m, power dB)`
/// cluster points.  Links with a single cluster carry no slope information
/// but still enter the intercept.  Use this instead of
/// [`fit_cluster_power`] whenever cluster powers have been normalized per
/// link, which biases the pooled slope.
pub fn fit_cluster_power_fixed_effects(links: &[Vec<(f64, f64)>]) -> Result<ClusterPowerFit> {
    let mut n = 0usize;
    let (mut gx, mut gy) = (0.0f64, 0.0f64);
    let (mut sxx, mut sxy) = (0.0f64, 0.0f64);
    for link in links {
        if link.is_empty() {
            continue;
        }
        let d: Vec<f64> = link.iter().map(|p| p.0).collect();
        let p: Vec<f64> = link.iter().map(|p| p.1).collect();
        check_cluster_points(&d, &p)?;
        let x: Vec<f64> = d.iter().map(|v| v.log10()).collect();
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let my = p.iter().sum::<f64>() / p.len() as f64;
        for (u, v) in x.iter().zip(&p) {
            sxx += (u - mx) * (u - mx);
            sxy += (u - mx) * (v - my);
            gx += u;
            gy += v;
            n += 1;
        }
    }
    if n < 2 {
        return Err(Error::invalid(
            "cluster power samples",
            "need at least two clusters to fit a power law",
        ));
    }
    if sxx <= 1e-12 {
        return Err(Error::invalid(
            "cluster power samples",
            "no within-link spread in cluster travel distance",
        ));
    }
    let slope = sxy / sxx;
    Ok(ClusterPowerFit {
        slope_db_per_decade: slope,
        intercept_db: gy / n as f64 - slope * gx / n as f64,
    })
}

/// Evaluate a fitted cluster power law at a travel distance in meters.
pub fn evaluate_cluster_power(fit: &ClusterPowerFit, distance_m: f64) -> f64 {
    fit.slope_db_per_decade * distance_m.log10() + fit.intercept_db
}

/// Fitted channel statistics for one band, as produced by the analysis
/// pipeline and consumed by [`compare_bands`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    /// Sounder configuration the statistics were measured under.
    pub band: BandConfig,
    /// Number of links behind the statistics.
    pub n_links: usize,
    /// Omnidirectional pathloss law.
    pub pathloss: PathlossFit,
    /// Ensemble mean RMS delay spread in seconds.
    pub mean_delay_spread_s: f64,
    /// Ensemble mean azimuth spread in degrees.
    pub mean_azimuth_spread_deg: f64,
    /// Ensemble mean and standard deviation of the cluster count per link.
    pub cluster_count_mean: f64,
    /// Standard deviation companion to `cluster_count_mean`.
    pub cluster_count_std: f64,
    /// Ensemble mean and standard deviation of paths per cluster.
    pub paths_per_cluster_mean: f64,
    /// Standard deviation companion to `paths_per_cluster_mean`.
    pub paths_per_cluster_std: f64,
    /// Total clusters across all links.
    pub n_clusters: usize,
    /// Cluster power decay law (pooled fit).
    pub cluster_power: ClusterPowerFit,
    /// Best-fit angular shape of the pooled power angular spectrum.
    pub pas: PasFit,
}

/// Absolute difference thresholds above which a band-to-band metric delta is
/// flagged as notable.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CompareThresholds {
    /// Pathloss exponent difference.
    pub pathloss_exponent: f64,
    /// 1 m pathloss intercept difference in dB.
    pub pathloss_intercept_db: f64,
    /// Shadow fading standard deviation difference in dB.
    pub shadow_std_db: f64,
    /// Mean RMS delay spread difference in nanoseconds.
    pub delay_spread_ns: f64,
    /// Mean azimuth spread difference in degrees.
    pub azimuth_spread_deg: f64,
    /// Mean cluster count difference.
    pub cluster_count: f64,
    /// Mean paths-per-cluster difference.
    pub paths_per_cluster: f64,
    /// Cluster power slope difference in dB per decade.
    pub cluster_power_slope_db: f64,
    /// Angular shape parameter difference (degrees for Gaussian widths,
    /// concentration units for von Mises).
    pub pas_shape: f64,
}

impl Default for CompareThresholds {
    fn default() -> Self {
        CompareThresholds {
            pathloss_exponent: 0.5,
            pathloss_intercept_db: 8.0,
            shadow_std_db: 2.0,
            delay_spread_ns: 5.0,
            azimuth_spread_deg: 5.0,
            cluster_count: 1.0,
            paths_per_cluster: 1.0,
            cluster_power_slope_db: 10.0,
            pas_shape: 5.0,
        }
    }
}

/// One metric row of a band comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    /// Metric name, stable across runs.
    pub name: String,
    /// Value in the first band.
    pub value_a: f64,
    /// Value in the second band.
    pub value_b: f64,
    /// `value_a - value_b`.
    pub delta: f64,
    /// Threshold applied to `|delta|`.
    pub threshold: f64,
    /// True when `|delta|` exceeds the threshold.
    pub notable: bool,
}

/// Side-by-side metric deltas between two bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandComparison {
    /// First band.
    pub band_a: BandLabel,
    /// Second band.
    pub band_b: BandLabel,
    /// Per-metric deltas in a fixed order.
    pub metrics: Vec<MetricDelta>,
    /// Number of rows flagged notable.
    pub n_notable: usize,
}

/// Compare fitted statistics of two bands metric by metric.
///
/// Fails with [`Error::NotComparable`] unless the two sounder configurations
/// agree in bandwidth, delay resolution, azimuth sampling, receive antenna
/// beamwidths, and (when present) antenna heights — the knobs that change
/// what the sounder can resolve.  Transmit power and center frequency may
/// differ; those are what a dual-band comparison is about.
pub fn compare_bands(
    a: &BandReport,
    b: &BandReport,
    thresholds: &CompareThresholds,
) -> Result<BandComparison> {
    validate_comparability(&a.band, &b.band)?;
    let mut metrics = Vec::new();
    let mut row = |name: &str, va: f64, vb: f64, thr: f64| {
        let delta = va - vb;
        metrics.push(MetricDelta {
            name: name.to_string(),
            value_a: va,
            value_b: vb,
            delta,
            threshold: thr,
            notable: delta.abs() > thr,
        });
    };
    row(
        "pathloss_exponent",
        a.pathloss.exponent,
        b.pathloss.exponent,
        thresholds.pathloss_exponent,
    );
    row(
        "pathloss_intercept_db",
        a.pathloss.intercept_db,
        b.pathloss.intercept_db,
        thresholds.pathloss_intercept_db,
    );
    row(
        "shadow_std_db",
        a.pathloss.shadow_std_db,
        b.pathloss.shadow_std_db,
        thresholds.shadow_std_db,
    );
    row(
        "delay_spread_ns",
        a.mean_delay_spread_s * 1e9,
        b.mean_delay_spread_s * 1e9,
        thresholds.delay_spread_ns,
    );
    row(
        "azimuth_spread_deg",
        a.mean_azimuth_spread_deg,
        b.mean_azimuth_spread_deg,
        thresholds.azimuth_spread_deg,
    );
    row(
        "cluster_count_mean",
        a.cluster_count_mean,
        b.cluster_count_mean,
        thresholds.cluster_count,
    );
    row(
        "paths_per_cluster_mean",
        a.paths_per_cluster_mean,
        b.paths_per_cluster_mean,
        thresholds.paths_per_cluster,
    );
    row(
        "cluster_power_slope_db_per_decade",
        a.cluster_power.slope_db_per_decade,
        b.cluster_power.slope_db_per_decade,
        thresholds.cluster_power_slope_db,
    );
    row(
        "pas_shape_parameter",
        a.pas.shape_parameter(),
        b.pas.shape_parameter(),
        thresholds.pas_shape,
    );
    if a.pas.model() != b.pas.model() {
        // Comparing a width in degrees with a concentration is meaningless;
        // surface the mismatch instead of the numeric delta.
        let last = metrics.last_mut().expect("row just pushed");
        last.notable = true;
    }
    let n_notable = metrics.iter().filter(|m| m.notable).count();
    Ok(BandComparison {
        band_a: a.band.label,
        band_b: b.band.label,
        metrics,
        n_notable,
    })
}
