use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::{add, jacobian_triple, norm, scale, sub, Affine3, Vec3};
use crate::error::{Error, Result};
use crate::sum::{chunked_row_sum, ordered_map};

/// Default central-difference step for charts without closed-form tangents.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A map from the reference square `[0,1]^2` into R^3.
pub trait ChartMap: Send + Sync {
    fn point(&self, s: f64, t: f64) -> Vec3;

    /// Closed-form tangent vectors `(d/ds, d/dt)`, if the chart has them.
    fn tangents(&self, _s: f64, _t: f64) -> Option<(Vec3, Vec3)> {
        None
    }
}

/// Bilinear interpolation of four corners given in the order
/// `(0,0), (1,0), (1,1), (0,1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearChart {
    pub corners: [Vec3; 4],
}

impl ChartMap for BilinearChart {
    fn point(&self, s: f64, t: f64) -> Vec3 {
        let [p0, p1, p2, p3] = self.corners;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = (1.0 - s) * (1.0 - t) * p0[k] + s * (1.0 - t) * p1[k] + s * t * p2[k] + (1.0 - s) * t * p3[k];
        }
        out
    }

    fn tangents(&self, s: f64, t: f64) -> Option<(Vec3, Vec3)> {
        let [p0, p1, p2, p3] = self.corners;
        let ds = add(scale(sub(p1, p0), 1.0 - t), scale(sub(p2, p3), t));
        let dt = add(scale(sub(p3, p0), 1.0 - s), scale(sub(p2, p1), s));
        Some((ds, dt))
    }
}

/// Upper unit hemisphere with outward normal.
///
/// The square is first sent to the unit disk by the elliptical grid map
/// `(p, q) -> (p sqrt(1 - q^2/2), q sqrt(1 - p^2/2))`, `p = 2s - 1`,
/// `q = 2t - 1`, and the disk is lifted by inverse stereographic projection.
/// Both maps are smooth up to the boundary, so the boundary square goes onto
/// the equator and the area element has no blow-up at the rim.
#[derive(Clone, Copy, Debug, Default)]
pub struct HemisphereChart;

impl HemisphereChart {
    fn disk(s: f64, t: f64) -> (f64, f64) {
        let p = 2.0 * s - 1.0;
        let q = 2.0 * t - 1.0;
        (p * (1.0 - 0.5 * q * q).sqrt(), q * (1.0 - 0.5 * p * p).sqrt())
    }
}

impl ChartMap for HemisphereChart {
    fn point(&self, s: f64, t: f64) -> Vec3 {
        let (x, y) = Self::disk(s, t);
        let r2 = x * x + y * y;
        let d = 1.0 + r2;
        [2.0 * x / d, 2.0 * y / d, (1.0 - r2) / d]
    }

    fn tangents(&self, s: f64, t: f64) -> Option<(Vec3, Vec3)> {
        let p = 2.0 * s - 1.0;
        let q = 2.0 * t - 1.0;
        let sq = (1.0 - 0.5 * q * q).sqrt();
        let sp = (1.0 - 0.5 * p * p).sqrt();
        let (x, y) = (p * sq, q * sp);
        // disk coordinates against (s, t); dp/ds = dq/dt = 2
        let x_s = 2.0 * sq;
        let x_t = 2.0 * p * (-0.5 * q) / sq;
        let y_s = 2.0 * q * (-0.5 * p) / sp;
        let y_t = 2.0 * sp;
        let r2 = x * x + y * y;
        let d = 1.0 + r2;
        let d2 = d * d;
        let sx = [2.0 / d - 4.0 * x * x / d2, -4.0 * x * y / d2, -4.0 * x / d2];
        let sy = [-4.0 * x * y / d2, 2.0 / d - 4.0 * y * y / d2, -4.0 * y / d2];
        Some((add(scale(sx, x_s), scale(sy, y_s)), add(scale(sx, x_t), scale(sy, y_t))))
    }
}

/// Chart composed with an affine map of space.
pub struct TransformedChart {
    inner: Arc<dyn ChartMap>,
    affine: Affine3,
}

impl ChartMap for TransformedChart {
    fn point(&self, s: f64, t: f64) -> Vec3 {
        self.affine.apply(self.inner.point(s, t))
    }

    fn tangents(&self, s: f64, t: f64) -> Option<(Vec3, Vec3)> {
        self.inner
            .tangents(s, t)
            .map(|(a, b)| (self.affine.apply_linear(a), self.affine.apply_linear(b)))
    }
}

/// Chart with its reference arguments exchanged.
pub struct SwappedChart {
    inner: Arc<dyn ChartMap>,
}

impl ChartMap for SwappedChart {
    fn point(&self, s: f64, t: f64) -> Vec3 {
        self.inner.point(t, s)
    }

    fn tangents(&self, s: f64, t: f64) -> Option<(Vec3, Vec3)> {
        self.inner.tangents(t, s).map(|(a, b)| (b, a))
    }
}

type PointFn = dyn Fn(f64, f64) -> Vec3 + Send + Sync;
type TangentFn = dyn Fn(f64, f64) -> (Vec3, Vec3) + Send + Sync;

/// Chart from closures; tangents fall back to finite differences when absent.
pub struct FnChart {
    point: Arc<PointFn>,
    tangents: Option<Arc<TangentFn>>,
}

impl FnChart {
    pub fn new(point: impl Fn(f64, f64) -> Vec3 + Send + Sync + 'static) -> Self {
        Self { point: Arc::new(point), tangents: None }
    }

    pub fn with_tangents(mut self, tangents: impl Fn(f64, f64) -> (Vec3, Vec3) + Send + Sync + 'static) -> Self {
        self.tangents = Some(Arc::new(tangents));
        self
    }
}

impl ChartMap for FnChart {
    fn point(&self, s: f64, t: f64) -> Vec3 {
        (self.point)(s, t)
    }

    fn tangents(&self, s: f64, t: f64) -> Option<(Vec3, Vec3)> {
        self.tangents.as_ref().map(|f| f(s, t))
    }
}

thread_local! {
    static EXPR_CONTEXT: meval::Context<'static> = meval::Context::new();
}

/// Chart given by expression strings for `x(u,v)`, `y(u,v)`, `z(u,v)`.
/// Uses finite-difference tangents.
pub struct ExprChart {
    source: [String; 3],
    exprs: [meval::Expr; 3],
}

impl ExprChart {
    pub fn parse(x: &str, y: &str, z: &str) -> Result<Self> {
        let parse = |src: &str| -> Result<meval::Expr> {
            src.parse::<meval::Expr>()
                .map_err(|e| Error::structural(format!("cannot parse patch expression '{src}': {e}")))
        };
        let chart = Self { source: [x.into(), y.into(), z.into()], exprs: [parse(x)?, parse(y)?, parse(z)?] };
        for (src, expr) in chart.source.iter().zip(&chart.exprs) {
            Self::eval(expr, 0.5, 0.5)
                .map_err(|e| Error::structural(format!("patch expression '{src}': {e}")))?;
        }
        Ok(chart)
    }

    pub fn source(&self) -> &[String; 3] {
        &self.source
    }

    fn eval(expr: &meval::Expr, u: f64, v: f64) -> std::result::Result<f64, meval::Error> {
        EXPR_CONTEXT.with(|ctx| expr.eval_with_context(((("u", u), ("v", v)), ctx)))
    }
}

impl ChartMap for ExprChart {
    fn point(&self, s: f64, t: f64) -> Vec3 {
        let mut out = [f64::NAN; 3];
        for (o, e) in out.iter_mut().zip(&self.exprs) {
            *o = Self::eval(e, s, t).unwrap_or(f64::NAN);
        }
        out
    }
}

/// A convex quadrilateral of the parameter square, parameterized bilinearly
/// from the reference square. Corners in the order `(0,0), (1,0), (1,1), (0,1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub corners: [[f64; 2]; 4],
}

impl Quad {
    pub fn unit() -> Self {
        Self { corners: [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] }
    }

    pub fn map(&self, s: f64, t: f64) -> [f64; 2] {
        let [q0, q1, q2, q3] = self.corners;
        let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
        [
            w[0] * q0[0] + w[1] * q1[0] + w[2] * q2[0] + w[3] * q3[0],
            w[0] * q0[1] + w[1] * q1[1] + w[2] * q2[1] + w[3] * q3[1],
        ]
    }

    /// `(d/ds, d/dt)` of the bilinear map.
    pub fn derivative(&self, s: f64, t: f64) -> ([f64; 2], [f64; 2]) {
        let [q0, q1, q2, q3] = self.corners;
        let ds = [
            (1.0 - t) * (q1[0] - q0[0]) + t * (q2[0] - q3[0]),
            (1.0 - t) * (q1[1] - q0[1]) + t * (q2[1] - q3[1]),
        ];
        let dt = [
            (1.0 - s) * (q3[0] - q0[0]) + s * (q2[0] - q1[0]),
            (1.0 - s) * (q3[1] - q0[1]) + s * (q2[1] - q1[1]),
        ];
        (ds, dt)
    }

    pub fn det(&self, s: f64, t: f64) -> f64 {
        let (ds, dt) = self.derivative(s, t);
        ds[0] * dt[1] - ds[1] * dt[0]
    }

    fn bounds(&self) -> [f64; 4] {
        let xs = self.corners.map(|c| c[0]);
        let ys = self.corners.map(|c| c[1]);
        [
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ]
    }

    /// Reference coordinates of `(u, v)`, if it lies in the quad.
    pub fn invert(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        const SLACK: f64 = 1e-12;
        let [x0, x1, y0, y1] = self.bounds();
        if u < x0 - SLACK || u > x1 + SLACK || v < y0 - SLACK || v > y1 + SLACK {
            return None;
        }
        let (mut s, mut t) = (0.5, 0.5);
        for _ in 0..60 {
            let p = self.map(s, t);
            let r = [p[0] - u, p[1] - v];
            if r[0].abs() + r[1].abs() < 1e-16 {
                break;
            }
            let (ds, dt) = self.derivative(s, t);
            let det = ds[0] * dt[1] - ds[1] * dt[0];
            if det == 0.0 {
                return None;
            }
            s -= (r[0] * dt[1] - r[1] * dt[0]) / det;
            t -= (ds[0] * r[1] - ds[1] * r[0]) / det;
        }
        let tol = 1e-9;
        if (-tol..=1.0 + tol).contains(&s) && (-tol..=1.0 + tol).contains(&t) {
            Some((s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)))
        } else {
            None
        }
    }

    /// Longest edge along the `s` and `t` directions.
    fn extents(&self) -> (f64, f64) {
        let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let [q0, q1, q2, q3] = self.corners;
        (len(q0, q1).max(len(q3, q2)), len(q0, q3).max(len(q1, q2)))
    }

    fn swapped(&self) -> Self {
        let sw = |c: [f64; 2]| [c[1], c[0]];
        let [q0, q1, q2, q3] = self.corners;
        Self { corners: [sw(q0), sw(q3), sw(q2), sw(q1)] }
    }
}

/// One smooth piece of a patch: the chart `g` equals `f` composed with the
/// bilinear parameterization of `region`.
#[derive(Clone)]
pub struct Piece {
    pub region: Quad,
    pub chart: Arc<dyn ChartMap>,
    pub fd_step: f64,
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Piece").field("region", &self.region).field("fd_step", &self.fd_step).finish()
    }
}

impl Piece {
    pub fn new(region: Quad, chart: impl ChartMap + 'static) -> Self {
        Self { region, chart: Arc::new(chart), fd_step: DEFAULT_FD_STEP }
    }

    pub fn from_arc(region: Quad, chart: Arc<dyn ChartMap>) -> Self {
        Self { region, chart, fd_step: DEFAULT_FD_STEP }
    }

    pub fn has_closed_form(&self) -> bool {
        self.chart.tangents(0.5, 0.5).is_some()
    }

    /// Tangents of the chart in reference coordinates.
    pub fn reference_tangents(&self, s: f64, t: f64) -> (Vec3, Vec3) {
        if let Some(tg) = self.chart.tangents(s, t) {
            return tg;
        }
        let h = self.fd_step;
        let diff = |lo: f64, hi: f64, at: &dyn Fn(f64) -> Vec3| -> Vec3 {
            scale(sub(at(hi), at(lo)), 1.0 / (hi - lo))
        };
        let (s0, s1) = stencil(s, h);
        let (t0, t1) = stencil(t, h);
        let ds = diff(s0, s1, &|x| self.chart.point(x, t));
        let dt = diff(t0, t1, &|y| self.chart.point(s, y));
        (ds, dt)
    }
}

fn stencil(x: f64, h: f64) -> (f64, f64) {
    if x - h < 0.0 {
        (x, x + h)
    } else if x + h > 1.0 {
        (x - h, x)
    } else {
        (x - h, x + h)
    }
}

/// A quadrature node on a patch in chart coordinates: `jac` is the
/// Jacobian triple `(A, B, C)` of the chart and `weight` the reference
/// weight, so `sum F(point) * jac[i] * weight` approximates `int_G F A_i du dv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceNode {
    pub point: Vec3,
    pub jac: [f64; 3],
    pub weight: f64,
}

impl SurfaceNode {
    pub fn area_element(&self) -> f64 {
        norm(self.jac)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Midpoint,
    Gauss3,
}

impl QuadratureRule {
    /// Nodes and weights on `[0, 1]`.
    pub fn points(self) -> &'static [(f64, f64)] {
        const MID: [(f64, f64); 1] = [(0.5, 1.0)];
        // 0.5 -+ sqrt(3/5)/2
        const G3: [(f64, f64); 3] = [
            (0.112_701_665_379_258_31, 5.0 / 18.0),
            (0.5, 8.0 / 18.0),
            (0.887_298_334_620_741_7, 5.0 / 18.0),
        ];
        match self {
            QuadratureRule::Midpoint => &MID,
            QuadratureRule::Gauss3 => &G3,
        }
    }
}

/// Tensor-product rule on a uniform grid of cells.
///
/// For a single-piece patch the grid has `cells x cells` cells over `G`.
/// Multi-piece patches give each piece `ceil(cells * extent)` cells per
/// axis, where `extent` is the piece's edge length in `G`, so cell edges
/// always fall on the piece seams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub cells: usize,
    pub rule: QuadratureRule,
}

impl QuadratureGrid {
    pub fn new(cells: usize, rule: QuadratureRule) -> Result<Self> {
        if cells == 0 {
            return Err(Error::domain("quadrature grid needs at least one cell per axis"));
        }
        Ok(Self { cells, rule })
    }

    pub fn gauss3(cells: usize) -> Self {
        Self { cells: cells.max(1), rule: QuadratureRule::Gauss3 }
    }

    pub fn midpoint(cells: usize) -> Self {
        Self { cells: cells.max(1), rule: QuadratureRule::Midpoint }
    }

    pub fn doubled(&self) -> Self {
        Self { cells: self.cells * 2, rule: self.rule }
    }

    fn cells_along(&self, extent: f64) -> usize {
        ((self.cells as f64 * extent - 1e-9).ceil() as usize).max(1)
    }

    /// Nodes the grid places on `patch`.
    pub fn node_count(&self, patch: &SurfacePatch) -> usize {
        let k = self.rule.points().len();
        patch
            .pieces
            .iter()
            .map(|p| {
                let (es, et) = p.region.extents();
                self.cells_along(es) * self.cells_along(et) * k * k
            })
            .sum()
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::gauss3(32)
    }
}

/// A parameterized surface `f: G -> R^3`.
#[derive(Clone, Debug)]
pub struct SurfacePatch {
    label: String,
    pieces: Vec<Piece>,
    index: OnceLock<Arc<PieceIndex>>,
}

/// Uniform bucket grid over `G` listing the pieces whose bounding box meets each bucket.
#[derive(Debug)]
struct PieceIndex {
    side: usize,
    buckets: Vec<Vec<u32>>,
}

impl PieceIndex {
    fn build(pieces: &[Piece]) -> Self {
        let side = ((pieces.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let mut buckets = vec![Vec::new(); side * side];
        let cell = |x: f64| ((x * side as f64).floor().max(0.0) as usize).min(side - 1);
        for (i, p) in pieces.iter().enumerate() {
            let [x0, x1, y0, y1] = p.region.bounds();
            let slack = 1e-12;
            for bx in cell(x0 - slack)..=cell(x1 + slack) {
                for by in cell(y0 - slack)..=cell(y1 + slack) {
                    buckets[bx * side + by].push(i as u32);
                }
            }
        }
        Self { side, buckets }
    }

    fn candidates(&self, u: f64, v: f64) -> &[u32] {
        let cell = |x: f64| ((x * self.side as f64).floor().max(0.0) as usize).min(self.side - 1);
        &self.buckets[cell(u) * self.side + cell(v)]
    }
}

impl SurfacePatch {
    /// Builds a patch; every region must be positively oriented.
    pub fn new(label: impl Into<String>, pieces: Vec<Piece>) -> Result<Self> {
        let label = label.into();
        if pieces.is_empty() {
            return Err(Error::structural(format!("patch '{label}' has no pieces")));
        }
        for (i, p) in pieces.iter().enumerate() {
            let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            if corners.iter().any(|&(s, t)| p.region.det(s, t) <= 0.0) {
                return Err(Error::structural(format!(
                    "piece {i} of patch '{label}' has a degenerate or reversed parameter region"
                )));
            }
        }
        Ok(Self { label, pieces, index: OnceLock::new() })
    }

    /// A patch given by one chart on all of `G`.
    pub fn from_chart(label: impl Into<String>, chart: impl ChartMap + 'static) -> Self {
        Self { label: label.into(), pieces: vec![Piece::new(Quad::unit(), chart)], index: OnceLock::new() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Uses finite differences with step `h` on every piece, ignoring
    /// closed-form tangents.
    pub fn with_finite_differences(&self, h: f64) -> Self {
        struct PointOnly(Arc<dyn ChartMap>);
        impl ChartMap for PointOnly {
            fn point(&self, s: f64, t: f64) -> Vec3 {
                self.0.point(s, t)
            }
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { region: p.region, chart: Arc::new(PointOnly(p.chart.clone())), fd_step: h })
            .collect();
        Self { label: self.label.clone(), pieces, index: OnceLock::new() }
    }

    fn locate(&self, u: f64, v: f64) -> Result<(&Piece, f64, f64)> {
        if !(u.is_finite() && v.is_finite()) || !(-1e-12..=1.0 + 1e-12).contains(&u) || !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::domain(format!("parameter ({u}, {v}) lies outside the unit square")));
        }
        let found = if self.pieces.len() <= 8 {
            self.pieces.iter().find_map(|p| p.region.invert(u, v).map(|(s, t)| (p, s, t)))
        } else {
            let index = self.index.get_or_init(|| Arc::new(PieceIndex::build(&self.pieces)));
            index.candidates(u, v).iter().find_map(|&i| {
                let p = &self.pieces[i as usize];
                p.region.invert(u, v).map(|(s, t)| (p, s, t))
            })
        };
        found.ok_or_else(|| Error::structural(format!("patch '{}' does not cover parameter ({u}, {v})", self.label)))
    }

    /// `f(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> Result<Vec3> {
        let (piece, s, t) = self.locate(u, v)?;
        let p = piece.chart.point(s, t);
        if p.iter().all(|c| c.is_finite()) {
            Ok(p)
        } else {
            Err(Error::numeric(format!("patch '{}' is not finite at ({u}, {v})", self.label)))
        }
    }

    /// `(df/du, df/dv)` at `(u, v)`.
    pub fn tangents(&self, u: f64, v: f64) -> Result<(Vec3, Vec3)> {
        let (piece, s, t) = self.locate(u, v)?;
        let (gs, gt) = piece.reference_tangents(s, t);
        let ([us, vs], [ut, vt]) = piece.region.derivative(s, t);
        let det = us * vt - vs * ut;
        let fu = scale(sub(scale(gs, vt), scale(gt, vs)), 1.0 / det);
        let fv = scale(sub(scale(gt, us), scale(gs, ut)), 1.0 / det);
        Ok((fu, fv))
    }

    /// `f(v, u)`: the same surface with the opposite orientation.
    pub fn swapped(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                region: p.region.swapped(),
                chart: Arc::new(SwappedChart { inner: p.chart.clone() }),
                fd_step: p.fd_step,
            })
            .collect();
        Self { label: format!("{}:swapped", self.label), pieces, index: OnceLock::new() }
    }

    /// The patch moved by an affine map of space.
    pub fn transformed(&self, affine: &Affine3) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                region: p.region,
                chart: Arc::new(TransformedChart { inner: p.chart.clone(), affine: *affine }),
                fd_step: p.fd_step,
            })
            .collect();
        Self { label: self.label.clone(), pieces, index: OnceLock::new() }
    }

    /// Quadrature nodes in deterministic order (piece, cell, rule point).
    pub fn nodes(&self, grid: &QuadratureGrid) -> Result<Vec<SurfaceNode>> {
        let rule = grid.rule.points();
        let per_piece = ordered_map(self.pieces.len(), |i| {
            let piece = &self.pieces[i];
            let (es, et) = piece.region.extents();
            let (ns, nt) = (grid.cells_along(es), grid.cells_along(et));
            let cell_w = 1.0 / (ns * nt) as f64;
            let mut out = Vec::with_capacity(ns * nt * rule.len() * rule.len());
            for ci in 0..ns {
                for cj in 0..nt {
                    for &(a, wa) in rule {
                        for &(b, wb) in rule {
                            let s = (ci as f64 + a) / ns as f64;
                            let t = (cj as f64 + b) / nt as f64;
                            let point = piece.chart.point(s, t);
                            let (gs, gt) = piece.reference_tangents(s, t);
                            let jac = jacobian_triple(gs, gt);
                            if !point.iter().chain(&jac).all(|c| c.is_finite()) {
                                let uv = piece.region.map(s, t);
                                return Err(Error::numeric(format!(
                                    "patch '{}' has a non-finite point or Jacobian at parameter ({}, {})",
                                    self.label, uv[0], uv[1]
                                )));
                            }
                            out.push(SurfaceNode { point, jac, weight: wa * wb * cell_w });
                        }
                    }
                }
            }
            Ok(out)
        })?;
        Ok(per_piece.into_iter().flatten().collect())
    }

    /// Points `f` takes on the boundary of `G`, walked counter-clockwise
    /// with `segments` equal parameter steps (closed: first point repeated).
    pub fn boundary_trace(&self, segments: usize) -> Result<Vec<Vec3>> {
        (0..=segments)
            .map(|k| {
                let tau = 4.0 * k as f64 / segments as f64;
                let (u, v) = perimeter_point(tau);
                self.point(u, v)
            })
            .collect()
    }
}

/// Point of `dG` at perimeter parameter `tau` in `[0, 4]`, counter-clockwise from the origin.
pub(crate) fn perimeter_point(tau: f64) -> (f64, f64) {
    let tau = tau.rem_euclid(4.0);
    match tau {
        t if t < 1.0 => (t, 0.0),
        t if t < 2.0 => (1.0, t - 1.0),
        t if t < 3.0 => (3.0 - t, 1.0),
        t => (0.0, 4.0 - t),
    }
}

/// The Jacobians `(A, B, C)` of `patch` at `(u, v)`.
pub fn jacobians(patch: &SurfacePatch, u: f64, v: f64) -> Result<[f64; 3]> {
    let (fu, fv) = patch.tangents(u, v)?;
    let j = jacobian_triple(fu, fv);
    if j.iter().all(|c| c.is_finite()) {
        Ok(j)
    } else {
        Err(Error::numeric(format!("patch '{}' has non-finite partials at ({u}, {v})", patch.label())))
    }
}

/// Quadrature value together with a refinement bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AreaResult {
    pub value: f64,
    /// Exceeds `|value(grid) - value(2 grid)|`.
    pub refinement_estimate: f64,
}

pub(crate) fn refinement_bound(diff: f64, magnitude: f64) -> f64 {
    2.0 * diff + 16.0 * f64::EPSILON * magnitude + f64::MIN_POSITIVE
}

pub(crate) fn area_on_nodes(nodes: &[SurfaceNode]) -> Result<f64> {
    let sums: Vec<f64> = chunked_row_sum(nodes.len(), 1, |i, out: &mut [f64]| {
        out[0] = nodes[i].area_element() * nodes[i].weight;
        Ok(())
    })?;
    Ok(sums[0])
}

/// `L(patch) = int_G sqrt(A^2 + B^2 + C^2) du dv`.
pub fn lebesgue_area(patch: &SurfacePatch, grid: &QuadratureGrid) -> Result<AreaResult> {
    let value = area_on_nodes(&patch.nodes(grid)?)?;
    let fine = area_on_nodes(&patch.nodes(&grid.doubled())?)?;
    Ok(AreaResult { value, refinement_estimate: refinement_bound((value - fine).abs(), value.abs()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> SurfacePatch {
        SurfacePatch::from_chart("flat", BilinearChart { corners: [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]] })
    }

    #[test]
    fn flat_patch_jacobians() {
        assert_eq!(jacobians(&flat(), 0.3, 0.8).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(jacobians(&flat().swapped(), 0.8, 0.3).unwrap(), [0.0, 0.0, -1.0]);
    }

    #[test]
    fn flat_patch_area() {
        let a = lebesgue_area(&flat(), &QuadratureGrid::gauss3(4)).unwrap();
        assert!((a.value - 1.0).abs() < 1e-15);
        assert!(a.refinement_estimate > 0.0);
    }

    #[test]
    fn hemisphere_center_area_element() {
        // at the center the elliptical map scales by 2 per axis and the
        // stereographic lift by another 2: area element 16, normal +z
        let h = SurfacePatch::from_chart("hemi", HemisphereChart);
        let j = jacobians(&h, 0.5, 0.5).unwrap();
        assert!(j[0].abs() < 1e-15 && j[1].abs() < 1e-15);
        assert!((j[2] - 16.0).abs() < 1e-13);
    }

    #[test]
    fn hemisphere_tangents_match_finite_differences() {
        let closed = SurfacePatch::from_chart("hemi", HemisphereChart);
        let fd = closed.with_finite_differences(1e-6);
        for &(u, v) in &[(0.3, 0.4), (0.9, 0.1), (0.52, 0.77)] {
            let a = jacobians(&closed, u, v).unwrap();
            let b = jacobians(&fd, u, v).unwrap();
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-6 * (1.0 + a[k].abs()), "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn hemisphere_points_lie_on_sphere() {
        let h = SurfacePatch::from_chart("hemi", HemisphereChart);
        for &(u, v) in &[(0.0, 0.0), (0.2, 0.9), (1.0, 0.5), (0.5, 0.5)] {
            let p = h.point(u, v).unwrap();
            assert!((norm(p) - 1.0).abs() < 1e-14);
            assert!(p[2] >= -1e-15);
        }
        let rim = h.point(1.0, 0.3).unwrap();
        assert!(rim[2].abs() < 1e-15);
    }

    #[test]
    fn quad_inverse_round_trip() {
        let q = Quad { corners: [[0.0, 0.0], [1.0, 0.0], [0.75, 0.25], [0.25, 0.25]] };
        for &(s, t) in &[(0.1, 0.2), (0.9, 0.99), (0.5, 0.0)] {
            let [u, v] = q.map(s, t);
            let (s2, t2) = q.invert(u, v).unwrap();
            assert!((s - s2).abs() < 1e-12 && (t - t2).abs() < 1e-12);
        }
        assert!(q.invert(0.5, 0.5).is_none());
    }

    #[test]
    fn reversed_region_is_rejected() {
        let q = Quad { corners: [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]] };
        let piece = Piece::new(q, HemisphereChart);
        assert!(matches!(SurfacePatch::new("bad", vec![piece]), Err(Error::Structural(_))));
    }

    #[test]
    fn node_count_single_piece() {
        let g = QuadratureGrid::gauss3(5);
        assert_eq!(g.node_count(&flat()), 25 * 9);
        assert_eq!(flat().nodes(&g).unwrap().len(), 225);
        let nodes = flat().nodes(&QuadratureGrid::midpoint(3)).unwrap();
        assert!(nodes.iter().all(|n| n.point[0] > 0.0 && n.point[0] < 1.0));
    }

    #[test]
    fn expression_chart() {
        let c = ExprChart::parse("u", "v", "u*v").unwrap();
        let p = SurfacePatch::from_chart("saddle", c);
        let j = jacobians(&p, 0.5, 0.25).unwrap();
        // f_u = (1, 0, v), f_v = (0, 1, u): (A, B, C) = (-v, -u, 1)
        assert!((j[0] + 0.25).abs() < 1e-8 && (j[1] + 0.5).abs() < 1e-8 && (j[2] - 1.0).abs() < 1e-8);
        assert!(ExprChart::parse("u + w", "v", "0").is_err());
        assert!(ExprChart::parse("sin(u", "v", "0").is_err());
    }

    #[test]
    fn outside_parameter_is_domain_error() {
        assert!(matches!(flat().point(1.5, 0.0), Err(Error::Domain(_))));
    }
}
