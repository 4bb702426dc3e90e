use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::fixtures::{box_surface, sphere, staircase_label, staircase_surface, takagi, takagi_cap_surface};
use super::surface::ClosedSurface;
use super::Vec3;
use crate::error::{Error, Result};

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Aabb {
    pub fn new(lo: Vec3, hi: Vec3) -> Result<Self> {
        if (0..3).any(|k| !(hi[k] >= lo[k]) || !lo[k].is_finite() || !hi[k].is_finite()) {
            return Err(Error::domain(format!("box {lo:?}..{hi:?} is empty or not finite")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: [0.0; 3], hi: [1.0; 3] }
    }

    /// Cube with corner `lo` and side `side`.
    pub fn cube(lo: Vec3, side: f64) -> Self {
        Self { lo, hi: [lo[0] + side, lo[1] + side, lo[2] + side] }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.lo[k] && p[k] <= self.hi[k])
    }

    pub fn extent(&self) -> Vec3 {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1] * e[2]
    }

    pub fn diameter(&self) -> f64 {
        super::norm(self.extent())
    }
}

type Indicator = dyn Fn(Vec3) -> bool + Send + Sync;

/// A bounded closed region given by a membership test.
#[derive(Clone)]
pub struct DomainSpec {
    label: String,
    indicator: Arc<Indicator>,
    bbox: Aabb,
    boundary: Option<ClosedSurface>,
    cell: Option<f64>,
}

impl fmt::Debug for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainSpec")
            .field("label", &self.label)
            .field("bbox", &self.bbox)
            .field("boundary", &self.boundary.as_ref().map(|b| b.label().to_string()))
            .field("cell", &self.cell)
            .finish()
    }
}

impl DomainSpec {
    pub fn new(label: impl Into<String>, bbox: Aabb, indicator: impl Fn(Vec3) -> bool + Send + Sync + 'static) -> Self {
        Self { label: label.into(), indicator: Arc::new(indicator), bbox, boundary: None, cell: None }
    }

    pub fn with_boundary(mut self, boundary: ClosedSurface) -> Self {
        self.boundary = Some(boundary);
        self
    }

    /// Marks the domain as a union of grid cubes of side `cell` aligned at the origin.
    pub fn with_cell_alignment(mut self, cell: f64) -> Self {
        self.cell = Some(cell);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn boundary(&self) -> Option<&ClosedSurface> {
        self.boundary.as_ref()
    }

    pub fn cell_alignment(&self) -> Option<f64> {
        self.cell
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (self.indicator)(p)
    }

    /// The indicator must vanish outside the bounding box; probes a lattice
    /// just outside each face.
    pub fn check_consistency(&self) -> Result<()> {
        let Aabb { lo, hi } = self.bbox;
        let pad = 1e-9 * self.bbox.diameter().max(1.0);
        const N: usize = 9;
        for axis in 0..3 {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [lo[axis] - pad, hi[axis] + pad] {
                for i in 0..N {
                    for j in 0..N {
                        let mut p = [0.0; 3];
                        p[axis] = side;
                        p[a] = lo[a] + (hi[a] - lo[a]) * i as f64 / (N - 1) as f64;
                        p[b] = lo[b] + (hi[b] - lo[b]) * j as f64 / (N - 1) as f64;
                        if self.contains(p) {
                            return Err(Error::structural(format!(
                                "domain '{}' reports {p:?} inside but it lies outside the bounding box",
                                self.label
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Fails with a domain error when a lattice probe of the box finds no inside point.
    pub fn check_nonempty(&self) -> Result<()> {
        const N: usize = 16;
        let e = self.bbox.extent();
        for i in 0..=N {
            for j in 0..=N {
                for k in 0..=N {
                    let t = [i as f64 / N as f64, j as f64 / N as f64, k as f64 / N as f64];
                    let p = [self.bbox.lo[0] + t[0] * e[0], self.bbox.lo[1] + t[1] * e[1], self.bbox.lo[2] + t[2] * e[2]];
                    if self.contains(p) {
                        return Ok(());
                    }
                }
            }
        }
        Err(Error::domain(format!("domain '{}' is empty", self.label)))
    }

    pub fn unit_cube() -> Self {
        Self::cuboid(Aabb::unit()).expect("valid box").relabel("cube").with_cell_alignment(1.0)
    }

    /// The closed box, bounded by its mid-height split surface.
    pub fn cuboid(b: Aabb) -> Result<Self> {
        let surface = box_surface(b.lo, b.hi)?;
        Ok(Self::new("box", b, move |p| b.contains(p)).with_boundary(surface))
    }

    pub fn ball(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::domain(format!("ball radius must be positive, got {radius}")));
        }
        let bbox = Aabb::new(
            [center[0] - radius, center[1] - radius, center[2] - radius],
            [center[0] + radius, center[1] + radius, center[2] + radius],
        )?;
        let r2 = radius * radius;
        Ok(Self::new("ball", bbox, move |p| {
            let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= r2
        })
        .with_boundary(sphere(center, radius)))
    }

    pub fn unit_ball() -> Self {
        Self::ball([0.0; 3], 1.0).expect("valid ball")
    }

    /// `{0 <= x, y <= 1, 0 <= z <= 1 + 0.1 T_K(x)}`.
    pub fn takagi_cap(k: u32) -> Result<Self> {
        let surface = takagi_cap_surface(k)?;
        let bbox = Aabb::new([0.0; 3], [1.0, 1.0, 1.1])?;
        Ok(Self::new(format!("takagi_cap:{k}"), bbox, move |p| {
            Aabb::unit().contains([p[0], p[1], 0.5]) && p[2] >= 0.0 && p[2] <= 1.0 + 0.1 * takagi(k, p[0])
        })
        .with_boundary(surface))
    }

    /// Columns of unit cubes `[j, j+1] x [0, 1] x [0, h_j]`.
    pub fn staircase(heights: &[u32]) -> Result<Self> {
        let surface = staircase_surface(heights)?;
        let top = *heights.iter().max().expect("nonempty") as f64;
        let bbox = Aabb::new([0.0; 3], [heights.len() as f64, 1.0, top])?;
        let h: Vec<f64> = heights.iter().map(|&h| h as f64).collect();
        Ok(Self::new(staircase_label(heights), bbox, move |p| {
            if !bbox.contains(p) {
                return false;
            }
            // closed columns: a point on a shared wall belongs to both
            let j = p[0].floor() as isize;
            let column = |i: isize| if i >= 0 && (i as usize) < h.len() { h[i as usize] } else { f64::NEG_INFINITY };
            let cap = if p[0] == j as f64 { column(j).max(column(j - 1)) } else { column(j) };
            p[2] <= cap
        })
        .with_boundary(surface)
        .with_cell_alignment(1.0))
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        for d in [
            DomainSpec::unit_cube(),
            DomainSpec::unit_ball(),
            DomainSpec::takagi_cap(4).unwrap(),
            DomainSpec::staircase(&[2]).unwrap(),
            DomainSpec::staircase(&[1, 3, 2]).unwrap(),
        ] {
            d.check_consistency().unwrap();
            d.check_nonempty().unwrap();
        }
    }

    #[test]
    fn leaky_indicator_is_structural() {
        let d = DomainSpec::new("leaky", Aabb::unit(), |p| p[0] < 2.0);
        assert!(matches!(d.check_consistency(), Err(Error::Structural(_))));
    }

    #[test]
    fn staircase_membership() {
        let d = DomainSpec::staircase(&[1, 3]).unwrap();
        assert!(d.contains([0.5, 0.5, 1.0]));
        assert!(!d.contains([0.5, 0.5, 1.5]));
        assert!(d.contains([1.0, 0.5, 2.5]));
        assert!(d.contains([1.5, 0.5, 3.0]));
    }

    #[test]
    fn empty_domain() {
        let d = DomainSpec::new("nothing", Aabb::unit(), |_| false);
        assert!(matches!(d.check_nonempty(), Err(Error::Domain(_))));
    }
}
