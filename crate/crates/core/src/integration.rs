//! Surface integrals over closed surfaces and volume integrals over domains.
//!
//! A closed-surface integral is `int_G F(f1) J1 - int_G F(f2) J2`, where `J`
//! is one of the Jacobians `A`, `B`, `C`. All sums run through the
//! fixed-order chunked reduction in `sum`, so values do not depend on the
//! number of worker threads.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraSpec, C64};
use crate::error::{Error, Result};
use crate::geometry::{refinement_bound, ClosedSurface, DomainSpec, QuadratureGrid, SurfaceNode, Vec3};
use crate::hyperfun::{HyperFunction, PointE3};
use crate::sum::chunked_row_sum;

/// Default per-axis resolution of the volume midpoint rule.
pub const DEFAULT_VOLUME_RESOLUTION: usize = 64;

/// Sub-samples per axis in cells cut by the domain boundary.
const SUPERSAMPLE: usize = 8;

/// Coordinate plane of a surface integral: `dy dz`, `dz dx` or `dx dy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Yz,
    Zx,
    Xy,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Yz, Plane::Zx, Plane::Xy];

    /// Index of the matching Jacobian in `(A, B, C)`.
    pub fn index(self) -> usize {
        match self {
            Plane::Yz => 0,
            Plane::Zx => 1,
            Plane::Xy => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Plane::Yz => "yz",
            Plane::Zx => "zx",
            Plane::Xy => "xy",
        }
    }
}

/// A complex quadrature value and a bound on its change under grid doubling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarIntegral {
    pub value: C64,
    pub refinement_estimate: f64,
}

fn finite_c(v: C64) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

/// `int_G F(f) J du dv` for all three planes on precomputed nodes.
pub(crate) fn patch_scalar_planes(nodes: &[SurfaceNode], f: &(dyn Fn(Vec3) -> C64 + Sync)) -> Result<[C64; 3]> {
    let sums = chunked_row_sum(nodes.len(), 3, |i, out: &mut [C64]| {
        let n = &nodes[i];
        let v = f(n.point);
        if !finite_c(v) {
            return Err(Error::numeric(format!("integrand is not finite at {:?}", n.point)));
        }
        for p in 0..3 {
            out[p] = v * (n.jac[p] * n.weight);
        }
        Ok(())
    })?;
    Ok([sums[0], sums[1], sums[2]])
}

fn closed_scalar_planes(
    surface: &ClosedSurface,
    grid: &QuadratureGrid,
    f: &(dyn Fn(Vec3) -> C64 + Sync),
) -> Result<[C64; 3]> {
    let a = patch_scalar_planes(&surface.patch1().nodes(grid)?, f)?;
    let b = patch_scalar_planes(&surface.patch2().nodes(grid)?, f)?;
    Ok([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// `int F dydz`, `int F dzdx` and `int F dxdy` over a closed surface.
pub fn scalar_surface_integrals(
    f: &(dyn Fn(Vec3) -> C64 + Sync),
    surface: &ClosedSurface,
    grid: &QuadratureGrid,
) -> Result<[ScalarIntegral; 3]> {
    surface.check_seam()?;
    let coarse = closed_scalar_planes(surface, grid, f)?;
    let fine = closed_scalar_planes(surface, &grid.doubled(), f)?;
    Ok(std::array::from_fn(|p| ScalarIntegral {
        value: coarse[p],
        refinement_estimate: refinement_bound((coarse[p] - fine[p]).norm(), coarse[p].norm()),
    }))
}

/// One plane of [`scalar_surface_integrals`].
pub fn scalar_surface_integral(
    f: &(dyn Fn(Vec3) -> C64 + Sync),
    surface: &ClosedSurface,
    plane: Plane,
    grid: &QuadratureGrid,
) -> Result<ScalarIntegral> {
    Ok(scalar_surface_integrals(f, surface, grid)?[plane.index()])
}

/// `int Psi sigma` together with its per-plane pieces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaIntegralResult {
    pub value: AlgebraElement,
    /// `int Psi dydz`, `int Psi dzdx`, `int Psi dxdy`.
    pub planes: [AlgebraElement; 3],
    pub refinement_estimate: f64,
}

impl SigmaIntegralResult {
    /// `e1 I_yz + e2 I_zx + e3 I_xy`.
    pub fn reassemble(planes: &[AlgebraElement; 3], algebra: &AlgebraSpec) -> AlgebraElement {
        let n = algebra.dimension();
        let mut v = AlgebraElement::zero(n);
        for (j, piece) in planes.iter().enumerate() {
            v += &algebra.mul(&AlgebraElement::basis(n, j), piece);
        }
        v
    }
}

/// Per-plane `int_G Psi(f) J du dv` on one patch's nodes.
pub(crate) fn patch_sigma_planes(nodes: &[SurfaceNode], psi: &HyperFunction) -> Result<[AlgebraElement; 3]> {
    let n = psi.algebra().dimension();
    let sums = chunked_row_sum(nodes.len(), 3 * n, |i, out: &mut [C64]| {
        let node = &nodes[i];
        let v = psi.evaluate(&PointE3::from(node.point))?;
        for p in 0..3 {
            let w = node.jac[p] * node.weight;
            for (k, c) in v.coords().iter().enumerate() {
                out[p * n + k] = c * w;
            }
        }
        Ok(())
    })?;
    Ok(std::array::from_fn(|p| AlgebraElement::new(sums[p * n..(p + 1) * n].to_vec())))
}

/// Closed-surface plane integrals of `psi` on precomputed node sets.
pub(crate) fn closed_sigma_planes(
    nodes1: &[SurfaceNode],
    nodes2: &[SurfaceNode],
    psi: &HyperFunction,
) -> Result<[AlgebraElement; 3]> {
    let a = patch_sigma_planes(nodes1, psi)?;
    let b = patch_sigma_planes(nodes2, psi)?;
    Ok(std::array::from_fn(|p| &a[p] - &b[p]))
}

fn sigma_value(surface: &ClosedSurface, psi: &HyperFunction, grid: &QuadratureGrid) -> Result<[AlgebraElement; 3]> {
    closed_sigma_planes(&surface.patch1().nodes(grid)?, &surface.patch2().nodes(grid)?, psi)
}

/// `int_Gamma Psi sigma` with `sigma = dydz e1 + dzdx e2 + dxdy e3`.
pub fn sigma_integral(psi: &HyperFunction, surface: &ClosedSurface, grid: &QuadratureGrid) -> Result<SigmaIntegralResult> {
    surface.check_seam()?;
    let algebra = psi.algebra().spec();
    let planes = sigma_value(surface, psi, grid)?;
    let value = SigmaIntegralResult::reassemble(&planes, algebra);
    let fine = SigmaIntegralResult::reassemble(&sigma_value(surface, psi, &grid.doubled())?, algebra);
    let refinement_estimate = refinement_bound((&value - &fine).norm(), value.norm());
    Ok(SigmaIntegralResult { value, planes, refinement_estimate })
}

/// How the two patch contributions of the `||sigma||` integral combine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaNormVariant {
    /// Both patches added: the total area measure.
    #[default]
    Sum,
    /// patch1 minus patch2, as the definition is displayed.
    PaperLiteral,
}

pub(crate) fn patch_norm_integral(nodes: &[SurfaceNode], u: &(dyn Fn(Vec3) -> Result<f64> + Sync)) -> Result<f64> {
    let sums = chunked_row_sum(nodes.len(), 1, |i, out: &mut [f64]| {
        let n = &nodes[i];
        let v = u(n.point)?;
        if v.is_nan() || v < 0.0 {
            return Err(Error::domain(format!("measure integrand is negative ({v}) at {:?}", n.point)));
        }
        if !v.is_finite() {
            return Err(Error::numeric(format!("measure integrand is not finite at {:?}", n.point)));
        }
        out[0] = v * n.area_element() * n.weight;
        Ok(())
    })?;
    Ok(sums[0])
}

/// Real quadrature value with refinement bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RealIntegral {
    pub value: f64,
    pub refinement_estimate: f64,
}

fn norm_value(
    u: &(dyn Fn(Vec3) -> Result<f64> + Sync),
    surface: &ClosedSurface,
    grid: &QuadratureGrid,
    variant: SigmaNormVariant,
) -> Result<f64> {
    let a = patch_norm_integral(&surface.patch1().nodes(grid)?, u)?;
    let b = patch_norm_integral(&surface.patch2().nodes(grid)?, u)?;
    Ok(match variant {
        SigmaNormVariant::Sum => a + b,
        SigmaNormVariant::PaperLiteral => a - b,
    })
}

/// `int U ||sigma||` with `||sigma|| = sqrt(A^2 + B^2 + C^2) du dv` on each patch.
pub fn sigma_norm_integral(
    u: &(dyn Fn(Vec3) -> Result<f64> + Sync),
    surface: &ClosedSurface,
    grid: &QuadratureGrid,
    variant: SigmaNormVariant,
) -> Result<RealIntegral> {
    surface.check_seam()?;
    let value = norm_value(u, surface, grid, variant)?;
    let fine = norm_value(u, surface, &grid.doubled(), variant)?;
    Ok(RealIntegral { value, refinement_estimate: refinement_bound((value - fine).abs(), value.abs()) })
}

/// Total area of a closed surface.
pub fn surface_area(surface: &ClosedSurface, grid: &QuadratureGrid) -> Result<RealIntegral> {
    sigma_norm_integral(&|_| Ok(1.0), surface, grid, SigmaNormVariant::Sum)
}

/// Algebra-valued volume integral with refinement bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeIntegral {
    pub value: AlgebraElement,
    pub refinement_estimate: f64,
    pub resolution: usize,
}

/// Midpoint rule over the bounding box masked by the indicator. Cells whose
/// corners and centre disagree about membership are resolved with an
/// `8 x 8 x 8` midpoint sub-grid.
pub(crate) fn volume_field(
    dimension: usize,
    domain: &DomainSpec,
    resolution: usize,
    field: &(dyn Fn(Vec3) -> Result<AlgebraElement> + Sync),
) -> Result<AlgebraElement> {
    let bbox = *domain.bbox();
    let e = bbox.extent();
    let h = [e[0] / resolution as f64, e[1] / resolution as f64, e[2] / resolution as f64];
    let cell_volume = h[0] * h[1] * h[2];
    let n = resolution;
    let sums = chunked_row_sum(n * n * n, dimension, |idx, out: &mut [C64]| {
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        let lo = [bbox.lo[0] + i as f64 * h[0], bbox.lo[1] + j as f64 * h[1], bbox.lo[2] + k as f64 * h[2]];
        let at = |a: f64, b: f64, c: f64| [lo[0] + a * h[0], lo[1] + b * h[1], lo[2] + c * h[2]];
        let centre = at(0.5, 0.5, 0.5);
        let inside_centre = domain.contains(centre);
        let corners_inside = (0..8)
            .filter(|c| domain.contains(at((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64)))
            .count();
        let add = |out: &mut [C64], v: &AlgebraElement, w: f64| -> Result<()> {
            if v.dimension() != dimension {
                return Err(Error::structural("volume integrand has the wrong dimension"));
            }
            for (o, c) in out.iter_mut().zip(v.coords()) {
                *o += c * w;
            }
            Ok(())
        };
        if inside_centre && corners_inside == 8 {
            add(out, &field(centre)?, cell_volume)?;
        } else if inside_centre || corners_inside > 0 {
            let s = SUPERSAMPLE as f64;
            let w = cell_volume / (s * s * s);
            for a in 0..SUPERSAMPLE {
                for b in 0..SUPERSAMPLE {
                    for c in 0..SUPERSAMPLE {
                        let p = at((a as f64 + 0.5) / s, (b as f64 + 0.5) / s, (c as f64 + 0.5) / s);
                        if domain.contains(p) {
                            add(out, &field(p)?, w)?;
                        }
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(AlgebraElement::new(sums))
}

fn volume_integral_of(
    dimension: usize,
    domain: &DomainSpec,
    resolution: usize,
    field: &(dyn Fn(Vec3) -> Result<AlgebraElement> + Sync),
) -> Result<VolumeIntegral> {
    if resolution < 2 {
        return Err(Error::domain(format!("volume resolution must be at least 2, got {resolution}")));
    }
    domain.check_consistency()?;
    let value = volume_field(dimension, domain, resolution, field)?;
    let coarse = volume_field(dimension, domain, resolution / 2, field)?;
    let refinement_estimate = refinement_bound((&value - &coarse).norm(), value.norm());
    Ok(VolumeIntegral { value, refinement_estimate, resolution })
}

/// `int_Omega Psi dV`.
pub fn volume_integral(psi: &HyperFunction, domain: &DomainSpec, resolution: usize) -> Result<VolumeIntegral> {
    volume_integral_of(psi.algebra().dimension(), domain, resolution, &|p| psi.evaluate(&PointE3::from(p)))
}

/// Both sides of the divergence identity
/// `int_dOmega Psi sigma = int_Omega (Psi_x e1 + Psi_y e2 + Psi_z e3) dV`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceResult {
    pub lhs: AlgebraElement,
    pub rhs: AlgebraElement,
    pub gap: f64,
    pub lhs_refinement: f64,
    pub rhs_refinement: f64,
}

pub fn divergence_residual(
    psi: &HyperFunction,
    domain: &DomainSpec,
    grid: &QuadratureGrid,
    resolution: usize,
) -> Result<DivergenceResult> {
    let boundary = domain
        .boundary()
        .ok_or_else(|| Error::structural(format!("domain '{}' has no boundary surface", domain.label())))?;
    let lhs = sigma_integral(psi, boundary, grid)?;
    let rhs = volume_integral_of(psi.algebra().dimension(), domain, resolution, &|p| {
        psi.holomorphy_residual(&PointE3::from(p))
    })?;
    let gap = (&lhs.value - &rhs.value).norm();
    Ok(DivergenceResult {
        lhs: lhs.value,
        rhs: rhs.value,
        gap,
        lhs_refinement: lhs.refinement_estimate,
        rhs_refinement: rhs.refinement_estimate,
    })
}
