use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use super::patch::SurfacePatch;
use super::{dist, point_segment_distance, Vec3};
use crate::error::{Error, Result};

/// Samples per boundary trace used by the seam check.
pub const SEAM_SAMPLES: usize = 4096;

/// Default allowed gap between the two boundary traces.
pub const DEFAULT_SEAM_TOLERANCE: f64 = 1e-6;

/// Which way the patch normals point relative to the enclosed domain.
///
/// Integrals over a closed surface are `int patch1 - int patch2`, so the
/// default tag yields outward flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Patch1OutwardPatch2Inward,
    Patch1InwardPatch2Outward,
}

/// Two patches over `G` glued along the curve their boundaries share.
#[derive(Clone, Debug)]
pub struct ClosedSurface {
    label: String,
    patch1: SurfacePatch,
    patch2: SurfacePatch,
    seam_tolerance: f64,
    orientation: Orientation,
    gap: OnceLock<f64>,
}

impl ClosedSurface {
    /// The seam is checked lazily, on first use.
    pub fn new(label: impl Into<String>, patch1: SurfacePatch, patch2: SurfacePatch) -> Self {
        Self {
            label: label.into(),
            patch1,
            patch2,
            seam_tolerance: DEFAULT_SEAM_TOLERANCE,
            orientation: Orientation::Patch1OutwardPatch2Inward,
            gap: OnceLock::new(),
        }
    }

    pub fn with_seam_tolerance(mut self, tolerance: f64) -> Self {
        self.seam_tolerance = tolerance;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn patch1(&self) -> &SurfacePatch {
        &self.patch1
    }

    pub fn patch2(&self) -> &SurfacePatch {
        &self.patch2
    }

    pub fn patches(&self) -> [&SurfacePatch; 2] {
        [&self.patch1, &self.patch2]
    }

    pub fn seam_tolerance(&self) -> f64 {
        self.seam_tolerance
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The same surface with patch roles exchanged; every integral changes sign.
    pub fn swapped_roles(&self) -> Self {
        let orientation = match self.orientation {
            Orientation::Patch1OutwardPatch2Inward => Orientation::Patch1InwardPatch2Outward,
            Orientation::Patch1InwardPatch2Outward => Orientation::Patch1OutwardPatch2Inward,
        };
        Self {
            label: format!("{}:reversed", self.label),
            patch1: self.patch2.clone(),
            patch2: self.patch1.clone(),
            seam_tolerance: self.seam_tolerance,
            orientation,
            gap: self.gap.clone(),
        }
    }

    /// Largest distance from a sample of one boundary trace to the other
    /// trace (both directions).
    pub fn seam_gap(&self) -> Result<f64> {
        if let Some(g) = self.gap.get() {
            return Ok(*g);
        }
        let a = self.patch1.boundary_trace(SEAM_SAMPLES)?;
        let b = self.patch2.boundary_trace(SEAM_SAMPLES)?;
        let gap = one_sided_gap(&a, &b).max(one_sided_gap(&b, &a));
        Ok(*self.gap.get_or_init(|| gap))
    }

    /// Fails with a structural error when the traces do not coincide.
    pub fn check_seam(&self) -> Result<()> {
        let gap = self.seam_gap()?;
        if gap > self.seam_tolerance || gap.is_nan() {
            return Err(Error::structural(format!(
                "surface '{}': seam gap {gap:.3e} exceeds tolerance {:.1e}",
                self.label, self.seam_tolerance
            )));
        }
        Ok(())
    }

    /// Inscribed polyline lengths of the seam over `levels` doublings from `segments`.
    pub fn rectifiability(&self, segments: usize, levels: usize, tolerance: f64) -> Result<RectifiabilityReport> {
        let mut counts = Vec::with_capacity(levels);
        let mut lengths = Vec::with_capacity(levels);
        let mut n = segments;
        for _ in 0..levels.max(2) {
            lengths.push(seam_length(self, n)?);
            counts.push(n);
            n *= 2;
        }
        let nondecreasing = lengths.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
        let last = lengths[lengths.len() - 1];
        let prev = lengths[lengths.len() - 2];
        let converged = (last - prev).abs() <= tolerance * last.max(1.0);
        Ok(RectifiabilityReport { segments: counts, lengths, nondecreasing, converged })
    }
}

/// Polyline lengths of the seam over a doubling series.
#[derive(Clone, Debug, Serialize)]
pub struct RectifiabilityReport {
    pub segments: Vec<usize>,
    pub lengths: Vec<f64>,
    pub nondecreasing: bool,
    pub converged: bool,
}

impl RectifiabilityReport {
    pub fn passed(&self) -> bool {
        self.nondecreasing && self.converged
    }
}

fn one_sided_gap(from: &[Vec3], to: &[Vec3]) -> f64 {
    from.par_iter()
        .map(|&p| {
            to.windows(2)
                .map(|w| point_segment_distance(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Length of the polyline inscribed in `f1(dG)` with `segments` equal
/// parameter steps around the boundary of `G`.
pub fn seam_length(surface: &ClosedSurface, segments: usize) -> Result<f64> {
    if segments < 2 {
        return Err(Error::domain(format!("seam length needs at least 2 segments, got {segments}")));
    }
    surface.check_seam()?;
    let trace = surface.patch1.boundary_trace(segments)?;
    let lengths: Vec<f64> = trace.windows(2).map(|w| dist(w[0], w[1])).collect();
    Ok(crate::sum::pairwise_sum(&lengths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{unit_cube, unit_sphere, Affine3};

    #[test]
    fn sphere_seam_is_equator() {
        let s = unit_sphere();
        let len = seam_length(&s, 4096).unwrap();
        assert!((len - 2.0 * std::f64::consts::PI).abs() < 1e-4, "{len}");
    }

    #[test]
    fn cube_seam_is_square() {
        let len = seam_length(&unit_cube(), 64).unwrap();
        assert!((len - 4.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_patch_is_rejected() {
        let c = unit_cube();
        let moved = c.patch2().transformed(&Affine3::translation([0.0, 0.0, 0.1]));
        let bad = ClosedSurface::new("shifted", c.patch1().clone(), moved);
        let gap = bad.seam_gap().unwrap();
        assert!((gap - 0.1).abs() < 1e-9, "{gap}");
        match seam_length(&bad, 128) {
            Err(Error::Structural(msg)) => assert!(msg.contains("seam gap")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_segments() {
        assert!(matches!(seam_length(&unit_cube(), 1), Err(Error::Domain(_))));
    }

    #[test]
    fn rectifiable_seams() {
        let r = unit_sphere().rectifiability(64, 6, 1e-3).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
