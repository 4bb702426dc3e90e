//! Boundary roughness: Minkowski neighbourhood volumes and box counts
//! computed from a dense point sampling of a surface.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::patch::SurfacePatch;
use super::surface::ClosedSurface;
use super::{dot, norm, sub, Vec3};
use crate::error::{Error, Result};
use crate::sum::ordered_map;

/// Points on a surface such that every surface point lies within
/// `spacing` of some sample.
#[derive(Clone, Debug)]
pub struct BoundarySampling {
    points: Vec<Vec3>,
    spacing: f64,
}

impl BoundarySampling {
    pub fn from_points(points: Vec<Vec3>, spacing: f64) -> Self {
        Self { points, spacing }
    }

    /// Samples both patches of `surface`.
    pub fn from_surface(surface: &ClosedSurface, spacing: f64) -> Result<Self> {
        let mut points = sample_patch(surface.patch1(), spacing)?;
        points.extend(sample_patch(surface.patch2(), spacing)?);
        Ok(Self { points, spacing })
    }

    pub fn from_patch(patch: &SurfacePatch, spacing: f64) -> Result<Self> {
        Ok(Self { points: sample_patch(patch, spacing)?, spacing })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Cell-centre samples per piece, with the cell count chosen from a probed
/// bound on the chart tangents (inflated by 1.25) so that the half diagonal
/// of every image cell stays below `spacing`.
fn sample_patch(patch: &SurfacePatch, spacing: f64) -> Result<Vec<Vec3>> {
    if !(spacing > 0.0) {
        return Err(Error::domain(format!("sampling spacing must be positive, got {spacing}")));
    }
    let pieces = patch.pieces();
    let per_piece = ordered_map(pieces.len(), |i| {
        let piece = &pieces[i];
        const PROBE: usize = 9;
        let (mut ls, mut lt) = (0.0f64, 0.0f64);
        for a in 0..PROBE {
            for b in 0..PROBE {
                let (gs, gt) = piece.reference_tangents(a as f64 / (PROBE - 1) as f64, b as f64 / (PROBE - 1) as f64);
                ls = ls.max(norm(gs));
                lt = lt.max(norm(gt));
            }
        }
        let count = |l: f64| ((1.25 * l / (spacing * std::f64::consts::SQRT_2)).ceil() as usize).max(1);
        let (ns, nt) = (count(ls), count(lt));
        let mut out = Vec::with_capacity(ns * nt);
        for i in 0..ns {
            for j in 0..nt {
                let p = piece.chart.point((i as f64 + 0.5) / ns as f64, (j as f64 + 0.5) / nt as f64);
                if !p.iter().all(|c| c.is_finite()) {
                    return Err(Error::numeric(format!("patch '{}' is not finite while sampling", patch.label())));
                }
                out.push(p);
            }
        }
        Ok(out)
    })?;
    Ok(per_piece.into_iter().flatten().collect())
}

type Key = [i64; 3];

fn key(p: Vec3, eps: f64) -> Key {
    [(p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64, (p[2] / eps).floor() as i64]
}

/// Box count: occupied cells of the lattice `eps Z^3`. A ball cover of
/// radius `eps` needs at most this many balls, and this count is at most a
/// fixed dimensional constant (`(2 sqrt 3 + 1)^3` crude) times the minimal ball cover.
pub fn covering_number(sampling: &BoundarySampling, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("covering scale must be positive, got {eps}")));
    }
    if sampling.spacing > eps / 4.0 {
        return Err(Error::domain(format!(
            "sampling spacing {} is coarser than eps/4 = {}",
            sampling.spacing,
            eps / 4.0
        )));
    }
    let mut keys: Vec<Key> = sampling.points.par_iter().map(|&p| key(p, eps)).collect();
    keys.par_sort_unstable();
    keys.dedup();
    Ok(keys.len())
}

/// One entry of a Minkowski ratio series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinkowskiPoint {
    pub epsilon: f64,
    /// `V(eps-neighbourhood) / (2 eps)`.
    pub ratio: f64,
    pub three_sigma: f64,
    pub probes: usize,
}

const PROBE_CHUNK: usize = 4096;

/// Monte-Carlo estimate of `V(dOmega^eps) / (2 eps)` for each `eps`.
///
/// Probes are drawn uniformly from the cells adjacent to occupied cells of
/// the lattice `eps Z^3` (a superset of the neighbourhood); a probe counts
/// when some sample lies within `eps`. Missing the true nearest point by at
/// most `spacing` biases the volume down by roughly `(spacing/eps)^2 / 2`.
pub fn minkowski_content_estimate(
    sampling: &BoundarySampling,
    epsilons: &[f64],
    probes: usize,
    seed: u64,
) -> Result<Vec<MinkowskiPoint>> {
    if epsilons.is_empty() {
        return Ok(Vec::new());
    }
    if probes < 10_000 {
        return Err(Error::domain(format!("at least 10^4 volume probes are required, got {probes}")));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("epsilons must be positive and strictly decreasing"));
    }
    let min_eps = epsilons[epsilons.len() - 1];
    if sampling.spacing > min_eps / 4.0 {
        return Err(Error::domain(format!(
            "boundary sampling spacing {} is coarser than min eps/4 = {}",
            sampling.spacing,
            min_eps / 4.0
        )));
    }
    if sampling.is_empty() {
        return Err(Error::domain("boundary sampling is empty"));
    }
    epsilons
        .iter()
        .enumerate()
        .map(|(level, &eps)| minkowski_at(sampling, eps, probes, seed, level as u64))
        .collect()
}

fn minkowski_at(sampling: &BoundarySampling, eps: f64, probes: usize, seed: u64, level: u64) -> Result<MinkowskiPoint> {
    let mut grid: HashMap<Key, Vec<u32>> = HashMap::new();
    for (i, &p) in sampling.points.iter().enumerate() {
        grid.entry(key(p, eps)).or_default().push(i as u32);
    }
    let mut region: Vec<Key> = Vec::with_capacity(grid.len() * 8);
    for k in grid.keys() {
        for d in neighbours() {
            region.push([k[0] + d[0], k[1] + d[1], k[2] + d[2]]);
        }
    }
    region.par_sort_unstable();
    region.dedup();

    let eps2 = eps * eps;
    let points = &sampling.points;
    let chunks = probes.div_ceil(PROBE_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((level << 40) | c as u64);
            let n = PROBE_CHUNK.min(probes - c * PROBE_CHUNK);
            let mut hits = 0usize;
            for _ in 0..n {
                let cell = region[rng.gen_range(0..region.len())];
                let q = [
                    (cell[0] as f64 + rng.gen::<f64>()) * eps,
                    (cell[1] as f64 + rng.gen::<f64>()) * eps,
                    (cell[2] as f64 + rng.gen::<f64>()) * eps,
                ];
                let home = key(q, eps);
                let near = neighbours().any(|d| {
                    grid.get(&[home[0] + d[0], home[1] + d[1], home[2] + d[2]]).is_some_and(|ids| {
                        ids.iter().any(|&i| {
                            let v = sub(points[i as usize], q);
                            dot(v, v) <= eps2
                        })
                    })
                });
                hits += near as usize;
            }
            hits
        })
        .sum();
    let region_volume = region.len() as f64 * eps * eps * eps;
    let p = hits as f64 / probes as f64;
    let volume = p * region_volume;
    let sigma = region_volume * (p * (1.0 - p) / probes as f64).sqrt();
    Ok(MinkowskiPoint { epsilon: eps, ratio: volume / (2.0 * eps), three_sigma: 3.0 * sigma / (2.0 * eps), probes })
}

fn neighbours() -> impl Iterator<Item = [i64; 3]> {
    (0..27).map(|i| [i / 9 - 1, (i / 3) % 3 - 1, i % 3 - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{flat_square_patch, unit_sphere};

    #[test]
    fn flat_square_box_count() {
        let s = BoundarySampling::from_patch(&flat_square_patch(), 1.0 / 64.0).unwrap();
        assert_eq!(covering_number(&s, 1.0 / 16.0).unwrap(), 256);
    }

    #[test]
    fn single_point() {
        let s = BoundarySampling::from_points(vec![[0.3, 0.2, 0.1]], 0.0);
        for eps in [1.0, 0.1, 1e-3] {
            assert_eq!(covering_number(&s, eps).unwrap(), 1);
        }
    }

    #[test]
    fn covering_errors() {
        let s = BoundarySampling::from_points(vec![[0.0; 3]], 0.1);
        assert!(matches!(covering_number(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(covering_number(&s, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_epsilon_list() {
        let s = BoundarySampling::from_points(vec![[0.0; 3]], 0.0);
        assert!(minkowski_content_estimate(&s, &[], 10_000, 1).unwrap().is_empty());
    }

    #[test]
    fn sampling_spacing_is_honoured() {
        let s = BoundarySampling::from_surface(&unit_sphere(), 0.05).unwrap();
        // every point of a fine reference sampling is within the spacing of the coarse one
        let fine = BoundarySampling::from_surface(&unit_sphere(), 0.01).unwrap();
        let worst = fine
            .points()
            .par_iter()
            .step_by(97)
            .map(|&p| s.points().iter().map(|&q| norm(sub(p, q))).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max);
        assert!(worst <= 0.05, "{worst}");
    }

    #[test]
    fn minkowski_rejects_coarse_sampling() {
        let s = BoundarySampling::from_points(vec![[0.0; 3]], 0.1);
        assert!(matches!(minkowski_content_estimate(&s, &[0.2], 10_000, 1), Err(Error::Domain(_))));
        assert!(matches!(minkowski_content_estimate(&s, &[0.4, 0.5], 10_000, 1), Err(Error::Domain(_))));
        assert!(matches!(minkowski_content_estimate(&s, &[0.4], 100, 1), Err(Error::Domain(_))));
    }
}
