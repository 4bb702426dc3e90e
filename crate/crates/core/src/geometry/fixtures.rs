//! Built-in surfaces.
//!
//! Polyhedral fixtures are assembled from a "staple": a map of `G` onto the
//! top and four side walls of a prism whose top is a polyline profile
//! extruded along `y`. The centre square `[1/4, 3/4]^2` of `G` goes to the
//! top, the four trapezoids between it and `dG` go to the walls, and `dG`
//! itself goes to a horizontal rectangle at the seam height. Every piece is
//! a bilinear chart, so all fixtures here integrate polynomials exactly.

use super::patch::{BilinearChart, HemisphereChart, Piece, Quad, SurfacePatch};
use super::surface::ClosedSurface;
use super::{Affine3, Vec3};
use crate::error::{Error, Result};

/// `f(u, v) = (u, v, 0)`.
pub fn flat_square_patch() -> SurfacePatch {
    rectangle_patch("flat_square", [0.0, 1.0], [0.0, 1.0], 0.0)
}

fn rectangle_patch(label: &str, x: [f64; 2], y: [f64; 2], z: f64) -> SurfacePatch {
    SurfacePatch::from_chart(
        label,
        BilinearChart { corners: [[x[0], y[0], z], [x[1], y[0], z], [x[1], y[1], z], [x[0], y[1], z]] },
    )
}

/// Upper unit hemisphere, normal pointing away from the origin.
pub fn hemisphere_patch() -> SurfacePatch {
    SurfacePatch::from_chart("hemisphere", HemisphereChart)
}

/// Sphere split at its equator: the upper hemisphere (outward) and its
/// mirror image (inward).
pub fn sphere(center: Vec3, radius: f64) -> ClosedSurface {
    let place = Affine3::translation(center).compose(&Affine3::scaling(radius));
    let upper = hemisphere_patch().transformed(&place).with_label("upper_hemisphere");
    let lower = upper.transformed(&Affine3::reflect_z(center[2])).with_label("lower_hemisphere");
    ClosedSurface::new("sphere", upper, lower)
}

pub fn unit_sphere() -> ClosedSurface {
    sphere([0.0; 3], 1.0)
}

/// Staple over `[x0, x1] x [y0, y1]` with top `profile` (points `(x, z)`,
/// `x` nondecreasing from `x0` to `x1`) and seam at height `z_seam` below it.
/// Normals point away from the prism.
pub fn staple_patch(label: &str, profile: &[[f64; 2]], y: [f64; 2], z_seam: f64) -> Result<SurfacePatch> {
    let profile: Vec<[f64; 2]> = profile
        .iter()
        .enumerate()
        .filter(|&(i, p)| i == 0 || *p != profile[i - 1])
        .map(|(_, p)| *p)
        .collect();
    if profile.len() < 2 {
        return Err(Error::structural(format!("staple '{label}' needs a profile of at least two points")));
    }
    if profile.windows(2).any(|w| w[1][0] < w[0][0]) || profile[profile.len() - 1][0] <= profile[0][0] {
        return Err(Error::structural(format!("staple '{label}': profile x must be nondecreasing and span an interval")));
    }
    if profile.iter().any(|p| !(p[1] > z_seam)) || !(y[1] > y[0]) {
        return Err(Error::structural(format!("staple '{label}': profile must lie above the seam and y must span an interval")));
    }
    let l = profile.len() - 1;
    let a = |i: usize| i as f64 / l as f64;
    let top = |p: [f64; 2], y: f64| -> Vec3 { [p[0], y, p[1]] };
    let base = |p: [f64; 2], y: f64| -> Vec3 { [p[0], y, z_seam] };
    let (y0, y1) = (y[0], y[1]);
    let mut pieces = Vec::with_capacity(3 * l + 2);
    let mut push = |region: [[f64; 2]; 4], corners: [Vec3; 4]| {
        pieces.push(Piece::new(Quad { corners: region }, BilinearChart { corners }));
    };
    // front wall y = y0, G strip along v = 0
    let front = |a: f64, t: f64| [t / 4.0 + a * (1.0 - t / 2.0), t / 4.0];
    // back wall y = y1, walked with decreasing profile parameter
    let back = |a: f64, t: f64| [t / 4.0 + a * (1.0 - t / 2.0), 1.0 - t / 4.0];
    for i in 0..l {
        let (p, q) = (profile[i], profile[i + 1]);
        let (ai, aj) = (a(i), a(i + 1));
        push(
            [[0.25 + ai / 2.0, 0.25], [0.25 + aj / 2.0, 0.25], [0.25 + aj / 2.0, 0.75], [0.25 + ai / 2.0, 0.75]],
            [top(p, y0), top(q, y0), top(q, y1), top(p, y1)],
        );
        push(
            [front(ai, 0.0), front(aj, 0.0), front(aj, 1.0), front(ai, 1.0)],
            [base(p, y0), base(q, y0), top(q, y0), top(p, y0)],
        );
        push(
            [back(aj, 0.0), back(ai, 0.0), back(ai, 1.0), back(aj, 1.0)],
            [base(q, y1), base(p, y1), top(p, y1), top(q, y1)],
        );
    }
    let (first, last) = (profile[0], profile[l]);
    push(
        [[0.0, 1.0], [0.0, 0.0], [0.25, 0.25], [0.25, 0.75]],
        [base(first, y1), base(first, y0), top(first, y0), top(first, y1)],
    );
    push(
        [[1.0, 0.0], [1.0, 1.0], [0.75, 0.75], [0.75, 0.25]],
        [base(last, y0), base(last, y1), top(last, y1), top(last, y0)],
    );
    SurfacePatch::new(label, pieces)
}

/// Top face plus the upper halves of the side faces of the unit cube.
pub fn cube_staple_patch() -> SurfacePatch {
    staple_patch("cube_staple", &[[0.0, 1.0], [1.0, 1.0]], [0.0, 1.0], 0.5).expect("valid staple")
}

/// Axis-aligned box split by the horizontal square at mid-height.
pub fn box_surface(lo: Vec3, hi: Vec3) -> Result<ClosedSurface> {
    let mid = 0.5 * (lo[2] + hi[2]);
    let upper = staple_patch("upper_staple", &[[lo[0], hi[2]], [hi[0], hi[2]]], [lo[1], hi[1]], mid)?;
    let lower = upper.transformed(&Affine3::reflect_z(mid)).with_label("lower_staple");
    Ok(ClosedSurface::new("box", upper, lower))
}

pub fn unit_cube() -> ClosedSurface {
    box_surface([0.0; 3], [1.0; 3]).expect("valid box").with_label("cube")
}

/// Prism over `[x0, x1] x [y0, y1]` from `z = 0` up to a profile: a staple
/// with the seam on the base and the flat base (inward normal) as patch2.
fn capped_prism(label: &str, profile: &[[f64; 2]], y: [f64; 2]) -> Result<ClosedSurface> {
    let upper = staple_patch("cap", profile, y, 0.0)?;
    let x = [profile[0][0], profile[profile.len() - 1][0]];
    let base = rectangle_patch("base", x, y, 0.0);
    Ok(ClosedSurface::new(label, upper, base))
}

/// `T_K(x) = sum_{n < K} 2^-n dist(2^n x, Z)`.
pub fn takagi(k: u32, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut scale = 1.0;
    for _ in 0..k {
        let y = x * scale;
        sum += (y - y.round()).abs() / scale;
        scale *= 2.0;
    }
    sum
}

/// Unit cube with its top replaced by `z = 1 + 0.1 T_K(x)`.
pub fn takagi_cap_surface(k: u32) -> Result<ClosedSurface> {
    if k > 20 {
        return Err(Error::domain(format!("takagi_cap:{k} is too fine to tabulate (K <= 20)")));
    }
    let n = 1usize << k;
    let profile: Vec<[f64; 2]> = (0..=n)
        .map(|j| {
            let x = j as f64 / n as f64;
            [x, 1.0 + 0.1 * takagi(k, x)]
        })
        .collect();
    capped_prism(&format!("takagi_cap:{k}"), &profile, [0.0, 1.0])
}

/// Union of unit columns `[j, j+1] x [0, 1] x [0, h_j]`.
pub fn staircase_surface(heights: &[u32]) -> Result<ClosedSurface> {
    if heights.is_empty() || heights.contains(&0) {
        return Err(Error::domain("staircase heights must be a nonempty list of positive integers"));
    }
    let mut profile = Vec::with_capacity(2 * heights.len());
    for (j, &h) in heights.iter().enumerate() {
        profile.push([j as f64, h as f64]);
        profile.push([(j + 1) as f64, h as f64]);
    }
    capped_prism(&staircase_label(heights), &profile, [0.0, 1.0])
}

pub(crate) fn staircase_label(heights: &[u32]) -> String {
    let list: Vec<String> = heights.iter().map(|h| h.to_string()).collect();
    format!("staircase:[{}]", list.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{jacobians, lebesgue_area, QuadratureGrid};

    #[test]
    fn staple_area_is_three() {
        let a = lebesgue_area(&cube_staple_patch(), &QuadratureGrid::gauss3(8)).unwrap();
        assert!((a.value - 3.0).abs() < 1e-13, "{}", a.value);
    }

    #[test]
    fn staple_normals_point_out() {
        let p = cube_staple_patch();
        let cases = [((0.5, 0.5), [0.0, 0.0, 1.0]), ((0.5, 0.1), [0.0, -1.0, 0.0]), ((0.5, 0.9), [0.0, 1.0, 0.0]), ((0.1, 0.5), [-1.0, 0.0, 0.0]), ((0.9, 0.5), [1.0, 0.0, 0.0])];
        for ((u, v), dir) in cases {
            let j = jacobians(&p, u, v).unwrap();
            let d: f64 = (0..3).map(|k| j[k] * dir[k]).sum();
            assert!(d > 0.0, "({u},{v}) -> {j:?}");
        }
    }

    #[test]
    fn staple_is_continuous_across_seams() {
        let p = cube_staple_patch();
        for &(u, v) in &[(0.2, 0.2), (0.25, 0.5), (0.8, 0.8), (0.5, 0.75), (0.1, 0.1), (0.0, 0.3)] {
            let a = p.point(u, v).unwrap();
            let b = p.point(u + 1e-9, v).unwrap();
            assert!(super::super::dist(a, b) < 1e-7);
        }
        assert_eq!(p.point(0.0, 0.0).unwrap(), [0.0, 0.0, 0.5]);
        assert_eq!(p.point(0.5, 0.5).unwrap(), [0.5, 0.5, 1.0]);
    }

    #[test]
    fn hemisphere_area() {
        let a = lebesgue_area(&hemisphere_patch(), &QuadratureGrid::gauss3(64)).unwrap();
        assert!((a.value - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn takagi_values() {
        assert_eq!(takagi(1, 0.5), 0.5);
        assert_eq!(takagi(2, 0.25), 0.25 + 0.25);
        assert_eq!(takagi(4, 0.0), 0.0);
    }

    #[test]
    fn takagi_cap_pieces() {
        let s = takagi_cap_surface(4).unwrap();
        assert_eq!(s.patch1().pieces().len(), 3 * 16 + 2);
        s.check_seam().unwrap();
    }

    #[test]
    fn staircase_area() {
        let s = staircase_surface(&[1, 2]).unwrap();
        s.check_seam().unwrap();
        let g = QuadratureGrid::gauss3(4);
        let a1 = lebesgue_area(s.patch1(), &g).unwrap().value;
        let a2 = lebesgue_area(s.patch2(), &g).unwrap().value;
        // top 2, riser 1, front/back 3 each, ends 1 and 2, base 2
        assert!((a1 + a2 - 14.0).abs() < 1e-12, "{a1} {a2}");
    }
}
