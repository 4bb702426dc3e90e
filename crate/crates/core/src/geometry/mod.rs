//! Parameterized surfaces in R^3 and the measures taken on them.
//!
//! A surface patch is a continuous map of the unit square `G = [0,1]^2` into
//! space. Internally a patch is a list of pieces: each piece covers a
//! bilinear quadrilateral of `G` and carries a smooth chart from the
//! reference square, so piecewise-smooth (Lipschitz) maps integrate exactly
//! as long as every kink lies on a piece edge.

mod domain;
mod fixtures;
mod patch;
mod roughness;
mod surface;

pub use domain::{Aabb, DomainSpec};
pub use fixtures::{
    box_surface, cube_staple_patch, flat_square_patch, hemisphere_patch, sphere, staircase_surface,
    staple_patch, takagi, takagi_cap_surface, unit_cube, unit_sphere,
};
pub use patch::{
    jacobians, lebesgue_area, AreaResult, BilinearChart, ChartMap, ExprChart, FnChart, HemisphereChart,
    Piece, QuadratureGrid, QuadratureRule, Quad, SurfaceNode, SurfacePatch,
};
pub(crate) use patch::refinement_bound;
pub use roughness::{covering_number, minkowski_content_estimate, BoundarySampling, MinkowskiPoint};
pub use surface::{seam_length, ClosedSurface, Orientation, RectifiabilityReport, DEFAULT_SEAM_TOLERANCE};

/// A point or vector in R^3.
pub type Vec3 = [f64; 3];

/// Affine map `x -> m x + b` of R^3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine3 {
    pub m: [[f64; 3]; 3],
    pub b: Vec3,
}

impl Affine3 {
    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], b: [0.0; 3] }
    }

    pub fn translation(b: Vec3) -> Self {
        Self { b, ..Self::identity() }
    }

    pub fn scaling(s: f64) -> Self {
        Self { m: [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]], b: [0.0; 3] }
    }

    /// Reflection through the plane `z = z0`.
    pub fn reflect_z(z0: f64) -> Self {
        Self { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]], b: [0.0, 0.0, 2.0 * z0] }
    }

    /// Rotation by `angle` about the unit vector `axis` (Rodrigues).
    pub fn rotation(axis: Vec3, angle: f64) -> Self {
        let n = norm(axis);
        let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Self {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
            b: [0.0; 3],
        }
    }

    /// `self` after `inner`.
    pub fn compose(&self, inner: &Affine3) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * inner.m[k][j]).sum();
            }
        }
        Self { m, b: add(self.apply_linear(inner.b), self.b) }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        add(self.apply_linear(p), self.b)
    }

    pub fn apply_linear(&self, v: Vec3) -> Vec3 {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1] + self.m[0][2] * v[2],
            self.m[1][0] * v[0] + self.m[1][1] * v[1] + self.m[1][2] * v[2],
            self.m[2][0] * v[0] + self.m[2][1] * v[1] + self.m[2][2] * v[2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// The Jacobian triple `(A, B, C)` of a pair of tangent vectors: the
/// cross product `f_u x f_v`.
#[inline]
pub fn jacobian_triple(fu: Vec3, fv: Vec3) -> [f64; 3] {
    [
        fu[1] * fv[2] - fv[1] * fu[2],
        fu[2] * fv[0] - fv[2] * fu[0],
        fu[0] * fv[1] - fv[0] * fu[1],
    ]
}

/// Distance from `p` to the segment `[a, b]`.
pub(crate) fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, add(a, scale(ab, t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_orthogonal() {
        let r = Affine3::rotation([1.0, 2.0, -0.5], 0.7);
        assert!((r.determinant() - 1.0).abs() < 1e-14);
        let v = [0.3, -1.2, 2.0];
        assert!((norm(r.apply(v)) - norm(v)).abs() < 1e-14);
    }

    #[test]
    fn reflection_flips_determinant() {
        let r = Affine3::reflect_z(0.5);
        assert_eq!(r.determinant(), -1.0);
        assert_eq!(r.apply([1.0, 2.0, 0.0]), [1.0, 2.0, 1.0]);
    }

    #[test]
    fn compose_applies_inner_first() {
        let a = Affine3::translation([1.0, 0.0, 0.0]);
        let b = Affine3::scaling(2.0);
        assert_eq!(a.compose(&b).apply([1.0, 1.0, 1.0]), [3.0, 2.0, 2.0]);
    }

    #[test]
    fn segment_distance() {
        assert_eq!(point_segment_distance([0.5, 1.0, 0.0], [0.0; 3], [1.0, 0.0, 0.0]), 1.0);
        assert_eq!(point_segment_distance([2.0, 0.0, 0.0], [0.0; 3], [1.0, 0.0, 0.0]), 1.0);
    }
}
