//! Hierarchical clustering of multipath components.
//!
//! Extracted paths are grouped into clusters with agglomerative
//! complete-linkage clustering under the multipath component distance
//! ([`mcd`]): a dimensionless metric that combines angular separation on the
//! unit circle with delay separation scaled by the link's delay statistics.
//! Merging stops once the closest pair of clusters is farther apart than the
//! configured cutoff.
//!
//! Input order never matters: paths are brought into a canonical order
//! before clustering, and ties in the merge order are broken by smallest
//! cluster index, so the same path set always yields the same clusters.

use serde::{Deserialize, Serialize};

use crate::antenna::{wrap_deg_180, wrap_deg_360};
use crate::error::{Error, Result};
use crate::types::Mpc;
use crate::SPEED_OF_LIGHT;

/// Knobs of the multipath-component-distance clustering.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McdParams {
    /// Weight of the delay term relative to the angular term.
    pub zeta: f64,
    /// Complete-linkage distance above which clusters are not merged.
    pub cutoff: f64,
}

impl Default for McdParams {
    fn default() -> Self {
        McdParams {
            zeta: 9.0,
            cutoff: 0.25,
        }
    }
}

impl McdParams {
    /// Check that both knobs are positive and finite.
    pub fn validate(&self) -> Result<()> {
        if !self.zeta.is_finite() || self.zeta <= 0.0 {
            return Err(Error::invalid(
                "mcd params",
                format!("zeta must be positive, got {}", self.zeta),
            ));
        }
        if !self.cutoff.is_finite() || self.cutoff <= 0.0 {
            return Err(Error::invalid(
                "mcd params",
                format!("cutoff must be positive, got {}", self.cutoff),
            ));
        }
        Ok(())
    }
}

/// Multipath component distance between two paths.
///
/// The angular term is half the chord length between the two azimuth unit
/// vectors, `|sin(Δφ/2)|`, which is 0 for equal angles and 1 for opposite
/// ones.  The delay term is `zeta · (|Δτ|/delay_span) · (delay_std/delay_span)`,
/// where `delay_span` and `delay_std` describe the delay range and spread of
/// the whole path set the pair belongs to.  The two terms combine as a
/// Euclidean norm.  A non-positive `delay_span_s` (all paths at one delay)
/// degenerates to the angular term alone.
pub fn mcd(a: &Mpc, b: &Mpc, zeta: f64, delay_span_s: f64, delay_std_s: f64) -> f64 {
    // Subtract in a canonical order so both argument orders run the exact
    // same float operations and the distance is bit-for-bit symmetric.
    let delta_deg = if a.aoa_deg >= b.aoa_deg {
        a.aoa_deg - b.aoa_deg
    } else {
        b.aoa_deg - a.aoa_deg
    };
    let half_angle = 0.5 * wrap_deg_180(delta_deg).to_radians();
    let d_angle = half_angle.sin().abs();
    let d_delay = if delay_span_s > 0.0 {
        zeta * ((a.delay_s - b.delay_s).abs() / delay_span_s) * (delay_std_s / delay_span_s)
    } else {
        0.0
    };
    (d_angle * d_angle + d_delay * d_delay).sqrt()
}

/// One group of multipath components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Member paths, in canonical (delay, azimuth, gain) order.
    pub members: Vec<Mpc>,
    /// Total cluster power: dB of the linear sum of member path gains.
    pub power_db: f64,
    /// Power-weighted mean delay of the members [s].
    pub centroid_delay_s: f64,
    /// Power-weighted circular mean azimuth of the members [deg, 0–360).
    pub centroid_azimuth_deg: f64,
    /// Propagation distance implied by the centroid delay [m].
    pub distance_m: f64,
}

impl Cluster {
    fn from_members(mut members: Vec<Mpc>) -> Cluster {
        members.sort_by(canonical_order);
        let weights: Vec<f64> = members
            .iter()
            .map(|m| 10f64.powf(m.path_gain_db / 10.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let centroid_delay_s = members
            .iter()
            .zip(&weights)
            .map(|(m, w)| w * m.delay_s)
            .sum::<f64>()
            / total;
        let (sin_sum, cos_sum) = members.iter().zip(&weights).fold((0.0, 0.0), |(s, c), (m, w)| {
            let rad = m.aoa_deg.to_radians();
            (s + w * rad.sin(), c + w * rad.cos())
        });
        let centroid_azimuth_deg = wrap_deg_360(sin_sum.atan2(cos_sum).to_degrees());
        Cluster {
            members,
            power_db: 10.0 * total.log10(),
            centroid_delay_s,
            centroid_azimuth_deg,
            distance_m: SPEED_OF_LIGHT * centroid_delay_s,
        }
    }

    /// Number of member paths.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// True when the cluster has no members (never produced by clustering).
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Clustering result for one link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    /// Clusters, sorted by centroid delay then centroid azimuth.
    pub clusters: Vec<Cluster>,
    /// Link the clustered paths came from.
    pub source_link_id: String,
    /// Delay-term weight the set was clustered with.
    pub mcd_zeta: f64,
    /// Merge cutoff the set was clustered with.
    pub mcd_cutoff: f64,
}

impl ClusterSet {
    /// Total number of paths across all clusters.
    pub fn n_paths(&self) -> usize {
        self.clusters.iter().map(Cluster::len).sum()
    }

    /// Check structural invariants: non-empty clusters, centroid delays
    /// inside the member delay range, powers at least the strongest member,
    /// and the delay-to-distance relation.
    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::empty("cluster set"));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.members.is_empty() {
                return Err(Error::invalid("cluster set", format!("cluster {i} is empty")));
            }
            let lo = c.members.iter().map(|m| m.delay_s).fold(f64::INFINITY, f64::min);
            let hi = c.members.iter().map(|m| m.delay_s).fold(f64::NEG_INFINITY, f64::max);
            if c.centroid_delay_s < lo - 1e-15 || c.centroid_delay_s > hi + 1e-15 {
                return Err(Error::invalid(
                    "cluster set",
                    format!("cluster {i} centroid delay outside member range"),
                ));
            }
            let strongest = c
                .members
                .iter()
                .map(|m| m.path_gain_db)
                .fold(f64::NEG_INFINITY, f64::max);
            if c.power_db < strongest - 1e-9 {
                return Err(Error::invalid(
                    "cluster set",
                    format!("cluster {i} power below strongest member"),
                ));
            }
            let expect = SPEED_OF_LIGHT * c.centroid_delay_s;
            if (c.distance_m - expect).abs() > 1e-6 * expect.abs().max(1.0) {
                return Err(Error::invalid(
                    "cluster set",
                    format!("cluster {i} distance inconsistent with centroid delay"),
                ));
            }
        }
        Ok(())
    }
}

fn canonical_order(a: &Mpc, b: &Mpc) -> std::cmp::Ordering {
    a.delay_s
        .total_cmp(&b.delay_s)
        .then(a.aoa_deg.total_cmp(&b.aoa_deg))
        .then(a.path_gain_db.total_cmp(&b.path_gain_db))
}

/// Group `mpcs` into clusters by complete-linkage agglomeration under the
/// multipath component distance.
///
/// The delay span and delay standard deviation entering [`mcd`] are computed
/// over the whole input.  Starting from singletons, the two closest clusters
/// (smallest maximum pairwise distance, ties broken by smallest cluster
/// indices) are merged while that distance is at most `params.cutoff`.  The
/// result is invariant under permutation of the input.
pub fn hierarchical_cluster(mpcs: &[Mpc], link_id: &str, params: &McdParams) -> Result<ClusterSet> {
    params.validate()?;
    if mpcs.is_empty() {
        return Err(Error::empty("clustering input"));
    }
    let mut paths = mpcs.to_vec();
    paths.sort_by(canonical_order);
    let n = paths.len();

    let min_delay = paths.iter().map(|p| p.delay_s).fold(f64::INFINITY, f64::min);
    let max_delay = paths.iter().map(|p| p.delay_s).fold(f64::NEG_INFINITY, f64::max);
    let delay_span = max_delay - min_delay;
    let mean_delay = paths.iter().map(|p| p.delay_s).sum::<f64>() / n as f64;
    let delay_var = paths
        .iter()
        .map(|p| (p.delay_s - mean_delay).powi(2))
        .sum::<f64>()
        / n as f64;
    let delay_std = delay_var.sqrt();

    // Complete-linkage distances between current clusters.  On merging
    // clusters i and j, the distance of the union to any k is
    // max(d(i,k), d(j,k)), so the matrix can be updated in place.
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = mcd(&paths[i], &paths[j], params.zeta, delay_span, delay_std);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut alive = vec![true; n];

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !alive[j] {
                    continue;
                }
                let d = dist[i * n + j];
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let Some((i, j, d)) = best else { break };
        if d > params.cutoff {
            break;
        }
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        alive[j] = false;
        for k in 0..n {
            if k == i || !alive[k] {
                continue;
            }
            let merged = dist[i * n + k].max(dist[j * n + k]);
            dist[i * n + k] = merged;
            dist[k * n + i] = merged;
        }
    }

    let mut clusters: Vec<Cluster> = members
        .into_iter()
        .zip(&alive)
        .filter(|(_, &keep)| keep)
        .map(|(idx, _)| Cluster::from_members(idx.into_iter().map(|k| paths[k].clone()).collect()))
        .collect();
    clusters.sort_by(|a, b| {
        a.centroid_delay_s
            .total_cmp(&b.centroid_delay_s)
            .then(a.centroid_azimuth_deg.total_cmp(&b.centroid_azimuth_deg))
            .then(a.power_db.total_cmp(&b.power_db))
    });

    let set = ClusterSet {
        clusters,
        source_link_id: link_id.to_string(),
        mcd_zeta: params.zeta,
        mcd_cutoff: params.cutoff,
    };
    set.validate()?;
    Ok(set)
}

/// Ensemble statistics of clustering results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Mean cluster count per link.
    pub n_clusters_mean: f64,
    /// Population standard deviation of the cluster count per link.
    pub n_clusters_std: f64,
    /// Mean path count per cluster, pooled over all clusters of all links.
    pub paths_per_cluster_mean: f64,
    /// Population standard deviation of the pooled path count per cluster.
    pub paths_per_cluster_std: f64,
    /// Number of links behind the statistics.
    pub n_links: usize,
    /// Total number of clusters across all links.
    pub n_clusters_total: usize,
}

fn population_mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Cluster-count and cluster-size statistics over a set of links.
///
/// Cluster counts are per link; path counts per cluster are pooled over
/// every cluster of every link.  Both use the population standard deviation.
pub fn cluster_stats(sets: &[ClusterSet]) -> Result<ClusterStats> {
    if sets.is_empty() {
        return Err(Error::empty("cluster statistics input"));
    }
    let counts: Vec<f64> = sets.iter().map(|s| s.clusters.len() as f64).collect();
    let sizes: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.clusters.iter().map(|c| c.len() as f64))
        .collect();
    let (n_mean, n_std) = population_mean_std(&counts);
    let (m_mean, m_std) = population_mean_std(&sizes);
    Ok(ClusterStats {
        n_clusters_mean: n_mean,
        n_clusters_std: n_std,
        paths_per_cluster_mean: m_mean,
        paths_per_cluster_std: m_std,
        n_links: sets.len(),
        n_clusters_total: sizes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mpc(delay_ns: f64, aoa_deg: f64, gain_db: f64) -> Mpc {
        Mpc::new(delay_ns * 1e-9, aoa_deg, gain_db).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn mcd_is_zero_for_identical_paths_and_symmetric() {
        let a = mpc(10.0, 45.0, -80.0);
        let b = mpc(25.0, 190.0, -95.0);
        assert_eq!(mcd(&a, &a, 9.0, 20e-9, 6e-9), 0.0);
        let ab = mcd(&a, &b, 9.0, 20e-9, 6e-9);
        let ba = mcd(&b, &a, 9.0, 20e-9, 6e-9);
        assert_eq!(ab, ba);
        assert!(ab > 0.0);
    }

    #[test]
    fn mcd_angular_term_peaks_at_opposite_azimuths() {
        let a = mpc(10.0, 0.0, -80.0);
        let b = mpc(10.0, 180.0, -80.0);
        assert_close(mcd(&a, &b, 9.0, 50e-9, 15e-9), 1.0, 1e-12);
    }

    #[test]
    fn mcd_delay_term_reaches_one_at_full_span() {
        let a = mpc(0.0, 90.0, -80.0);
        let b = mpc(40.0, 90.0, -80.0);
        // |Δτ| = span, std = span, ζ = 1 → delay term exactly 1.
        assert_close(mcd(&a, &b, 1.0, 40e-9, 40e-9), 1.0, 1e-12);
    }

    #[test]
    fn mcd_degenerates_to_angle_only_without_delay_spread() {
        let a = mpc(10.0, 0.0, -80.0);
        let b = mpc(10.0, 60.0, -80.0);
        let d = mcd(&a, &b, 9.0, 0.0, 0.0);
        assert_close(d, (30f64.to_radians()).sin(), 1e-12);
    }

    fn two_group_scene() -> Vec<Mpc> {
        vec![
            mpc(0.0, 0.0, -75.0),
            mpc(1.0, 2.0, -78.0),
            mpc(2.0, 358.0, -80.0),
            mpc(100.0, 180.0, -90.0),
            mpc(101.0, 183.0, -92.0),
        ]
    }

    #[test]
    fn separated_groups_form_two_clusters_with_correct_membership() {
        let set = hierarchical_cluster(&two_group_scene(), "L7", &McdParams::default()).unwrap();
        assert_eq!(set.clusters.len(), 2);
        assert_eq!(set.source_link_id, "L7");
        assert_eq!(set.clusters[0].len(), 3);
        assert_eq!(set.clusters[1].len(), 2);
        assert!(set.clusters[0].members.iter().all(|m| m.delay_s < 50e-9));
        assert!(set.clusters[1].members.iter().all(|m| m.delay_s > 50e-9));
    }

    #[test]
    fn cutoff_extremes_give_singletons_and_one_cluster() {
        let paths = two_group_scene();
        let tiny = hierarchical_cluster(
            &paths,
            "L0",
            &McdParams {
                zeta: 9.0,
                cutoff: 1e-9,
            },
        )
        .unwrap();
        assert_eq!(tiny.clusters.len(), paths.len());
        assert!(tiny.clusters.iter().all(|c| c.len() == 1));

        let huge = hierarchical_cluster(
            &paths,
            "L0",
            &McdParams {
                zeta: 9.0,
                cutoff: 50.0,
            },
        )
        .unwrap();
        assert_eq!(huge.clusters.len(), 1);
        assert_eq!(huge.clusters[0].len(), paths.len());
    }

    #[test]
    fn cluster_count_is_non_increasing_in_cutoff() {
        let paths = two_group_scene();
        let mut prev = usize::MAX;
        for cutoff in [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 10.0] {
            let set = hierarchical_cluster(
                &paths,
                "L0",
                &McdParams {
                    zeta: 9.0,
                    cutoff,
                },
            )
            .unwrap();
            assert!(set.clusters.len() <= prev);
            prev = set.clusters.len();
        }
    }

    #[test]
    fn complete_linkage_does_not_chain() {
        // Three equally spaced delays at one azimuth.  Adjacent pairs are
        // within the cutoff but the endpoints are not, so single linkage
        // would chain all three into one cluster; complete linkage stops at
        // {first, second} + {third}.
        let paths = vec![
            mpc(0.0, 90.0, -80.0),
            mpc(1.0, 90.0, -80.0),
            mpc(2.0, 90.0, -80.0),
        ];
        // span 2 ns, std sqrt(2/3) ns: adjacent ≈ 0.204, endpoints ≈ 0.408.
        let set = hierarchical_cluster(
            &paths,
            "L0",
            &McdParams {
                zeta: 1.0,
                cutoff: 0.25,
            },
        )
        .unwrap();
        let sizes: Vec<usize> = set.clusters.iter().map(Cluster::len).collect();
        assert_eq!(sizes, vec![2, 1]);
        assert_close(set.clusters[0].members[1].delay_s, 1e-9, 1e-21);
    }

    #[test]
    fn clustering_is_invariant_under_input_permutation() {
        let paths = two_group_scene();
        let mut shuffled = paths.clone();
        shuffled.swap(0, 4);
        shuffled.swap(1, 3);
        shuffled.swap(2, 0);
        let a = hierarchical_cluster(&paths, "L3", &McdParams::default()).unwrap();
        let b = hierarchical_cluster(&shuffled, "L3", &McdParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clusters_partition_the_input() {
        let paths = two_group_scene();
        let set = hierarchical_cluster(&paths, "L0", &McdParams::default()).unwrap();
        assert_eq!(set.n_paths(), paths.len());
        let mut seen: Vec<Mpc> = set
            .clusters
            .iter()
            .flat_map(|c| c.members.iter().cloned())
            .collect();
        seen.sort_by(canonical_order);
        let mut expect = paths;
        expect.sort_by(canonical_order);
        assert_eq!(seen, expect);
    }

    #[test]
    fn cluster_power_matches_brute_force_linear_sum() {
        let paths = two_group_scene();
        let set = hierarchical_cluster(&paths, "L0", &McdParams::default()).unwrap();
        for c in &set.clusters {
            let lin: f64 = c
                .members
                .iter()
                .map(|m| 10f64.powf(m.path_gain_db / 10.0))
                .sum();
            assert_close(c.power_db, 10.0 * lin.log10(), 1e-12);
            let strongest = c
                .members
                .iter()
                .map(|m| m.path_gain_db)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(c.power_db >= strongest);
        }
    }

    #[test]
    fn centroids_are_power_weighted() {
        // Two equal-power paths merge into one cluster; centroids sit at the
        // midpoint, with the azimuth mean taken on the circle.
        let paths = vec![mpc(10.0, 350.0, -80.0), mpc(20.0, 30.0, -80.0)];
        let set = hierarchical_cluster(
            &paths,
            "L0",
            &McdParams {
                zeta: 9.0,
                cutoff: 50.0,
            },
        )
        .unwrap();
        assert_eq!(set.clusters.len(), 1);
        let c = &set.clusters[0];
        assert_close(c.centroid_delay_s, 15e-9, 1e-20);
        assert_close(c.centroid_azimuth_deg, 10.0, 1e-9);
        assert_close(c.power_db, -80.0 + 10.0 * 2f64.log10(), 1e-12);
        assert_close(c.distance_m, SPEED_OF_LIGHT * 15e-9, 1e-9);
    }

    #[test]
    fn centroid_handles_wraparound_at_opposing_weights() {
        let paths = vec![mpc(10.0, 170.0, -80.0), mpc(10.5, 190.0, -80.0)];
        let set = hierarchical_cluster(
            &paths,
            "L0",
            &McdParams {
                zeta: 9.0,
                cutoff: 50.0,
            },
        )
        .unwrap();
        assert_close(set.clusters[0].centroid_azimuth_deg, 180.0, 1e-9);
    }

    #[test]
    fn stats_match_hand_checked_examples() {
        let singleton_set = hierarchical_cluster(
            &[mpc(0.0, 0.0, -70.0), mpc(50.0, 120.0, -80.0), mpc(100.0, 240.0, -90.0)],
            "L0",
            &McdParams {
                zeta: 9.0,
                cutoff: 1e-6,
            },
        )
        .unwrap();
        let stats = cluster_stats(std::slice::from_ref(&singleton_set)).unwrap();
        assert_eq!(stats.n_links, 1);
        assert_eq!(stats.n_clusters_total, 3);
        assert_close(stats.n_clusters_mean, 3.0, 1e-12);
        assert_close(stats.n_clusters_std, 0.0, 1e-12);
        assert_close(stats.paths_per_cluster_mean, 1.0, 1e-12);
        assert_close(stats.paths_per_cluster_std, 0.0, 1e-12);
    }

    #[test]
    fn stats_use_population_std_over_links() {
        // Two links with 4 and 8 singleton clusters respectively.
        let four: Vec<Mpc> = (0..4).map(|k| mpc(k as f64 * 50.0, (k * 80) as f64, -80.0)).collect();
        let eight: Vec<Mpc> = (0..8).map(|k| mpc(k as f64 * 50.0, (k * 40) as f64, -80.0)).collect();
        let p = McdParams {
            zeta: 9.0,
            cutoff: 1e-6,
        };
        let a = hierarchical_cluster(&four, "L0", &p).unwrap();
        let b = hierarchical_cluster(&eight, "L1", &p).unwrap();
        assert_eq!(a.clusters.len(), 4);
        assert_eq!(b.clusters.len(), 8);
        let stats = cluster_stats(&[a, b]).unwrap();
        assert_close(stats.n_clusters_mean, 6.0, 1e-12);
        assert_close(stats.n_clusters_std, 2.0, 1e-12);
        assert_close(stats.paths_per_cluster_mean, 1.0, 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(hierarchical_cluster(&[], "L0", &McdParams::default()).is_err());
        assert!(cluster_stats(&[]).is_err());
        let one = hierarchical_cluster(&[mpc(5.0, 10.0, -80.0)], "L0", &McdParams::default()).unwrap();
        assert_eq!(one.clusters.len(), 1);
        assert_eq!(one.clusters[0].len(), 1);
        let bad = McdParams {
            zeta: 0.0,
            cutoff: 0.25,
        };
        assert!(hierarchical_cluster(&[mpc(5.0, 10.0, -80.0)], "L0", &bad).is_err());
        let bad = McdParams {
            zeta: 9.0,
            cutoff: -1.0,
        };
        assert!(hierarchical_cluster(&[mpc(5.0, 10.0, -80.0)], "L0", &bad).is_err());
    }
}
