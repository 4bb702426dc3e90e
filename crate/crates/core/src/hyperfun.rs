//! Algebra-valued fields `Psi(zeta)` on three-space, their partial
//! derivatives, the hyperholomorphy residual and the modulus of continuity.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraElement, C64};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, DomainSpec};

/// Default central-difference step for partial derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default number of point pairs for the modulus of continuity.
pub const DEFAULT_MODULUS_SAMPLES: usize = 100_000;

/// A point `zeta = x e1 + y e2 + z e3` of the span E3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointE3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PointE3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut a = self.as_array();
        a[axis] += h;
        a.into()
    }
}

impl From<[f64; 3]> for PointE3 {
    fn from(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }
}

impl fmt::Display for PointE3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    ClosedForm,
    FiniteDifference,
}

type EvalFn = dyn Fn(&PointE3) -> AlgebraElement + Send + Sync;
type PartialsFn = dyn Fn(&PointE3) -> [AlgebraElement; 3] + Send + Sync;

#[derive(Clone)]
pub enum Partials {
    ClosedForm(Arc<PartialsFn>),
    FiniteDifference { step: f64 },
}

/// An algebra-valued function on E3 with first partial derivatives.
#[derive(Clone)]
pub struct HyperFunction {
    label: String,
    algebra: Algebra,
    eval: Arc<EvalFn>,
    partials: Partials,
    domain: Option<Aabb>,
}

impl fmt::Debug for HyperFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HyperFunction")
            .field("label", &self.label)
            .field("algebra", &self.algebra.label())
            .field("smoothness", &self.smoothness_tag())
            .field("domain", &self.domain)
            .finish()
    }
}

impl HyperFunction {
    /// A function with finite-difference partials.
    pub fn from_fn(
        label: impl Into<String>,
        algebra: Algebra,
        eval: impl Fn(&PointE3) -> AlgebraElement + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            algebra,
            eval: Arc::new(eval),
            partials: Partials::FiniteDifference { step: DEFAULT_FD_STEP },
            domain: None,
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(&PointE3) -> [AlgebraElement; 3] + Send + Sync + 'static,
    ) -> Self {
        self.partials = Partials::ClosedForm(Arc::new(partials));
        self
    }

    /// Drops closed-form partials in favour of central differences with step `h`.
    pub fn with_finite_differences(mut self, h: f64) -> Self {
        self.partials = Partials::FiniteDifference { step: h };
        self
    }

    pub fn with_domain(mut self, domain: Aabb) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn domain(&self) -> Option<&Aabb> {
        self.domain.as_ref()
    }

    pub fn smoothness_tag(&self) -> Smoothness {
        match self.partials {
            Partials::ClosedForm(_) => Smoothness::ClosedForm,
            Partials::FiniteDifference { .. } => Smoothness::FiniteDifference,
        }
    }

    /// `Psi(p)`; non-finite values are numeric errors naming `p`.
    pub fn evaluate(&self, p: &PointE3) -> Result<AlgebraElement> {
        let v = (self.eval)(p);
        self.check_value(&v, p)?;
        Ok(v)
    }

    fn check_value(&self, v: &AlgebraElement, p: &PointE3) -> Result<()> {
        if v.dimension() != self.algebra.dimension() {
            return Err(Error::structural(format!(
                "function '{}' returned {} coordinates, algebra '{}' has {}",
                self.label,
                v.dimension(),
                self.algebra.label(),
                self.algebra.dimension()
            )));
        }
        if !v.is_finite() {
            return Err(Error::numeric(format!("function '{}' is not finite at {p}", self.label)));
        }
        Ok(())
    }

    /// `(dPsi/dx, dPsi/dy, dPsi/dz)` at `p`.
    pub fn partials(&self, p: &PointE3) -> Result<[AlgebraElement; 3]> {
        match &self.partials {
            Partials::ClosedForm(f) => {
                let d = f(p);
                for v in &d {
                    self.check_value(v, p)?;
                }
                Ok(d)
            }
            Partials::FiniteDifference { step } => {
                let mut out: [AlgebraElement; 3] = std::array::from_fn(|_| self.algebra.zero());
                for (axis, slot) in out.iter_mut().enumerate() {
                    *slot = self.difference(p, axis, *step)?;
                }
                Ok(out)
            }
        }
    }

    /// Central difference, or a second-order one-sided difference when the
    /// declared domain box leaves no room on one side.
    fn difference(&self, p: &PointE3, axis: usize, h: f64) -> Result<AlgebraElement> {
        let x = p.as_array()[axis];
        let (below, above) = match &self.domain {
            Some(b) => (x - b.lo[axis], b.hi[axis] - x),
            None => (f64::INFINITY, f64::INFINITY),
        };
        let f = |dx: f64| self.evaluate(&p.shifted(axis, dx));
        if below >= h && above >= h {
            let d = &f(h)? - &f(-h)?;
            return Ok(&d * (0.5 / h));
        }
        let (dir, room) = if above >= below { (1.0, above) } else { (-1.0, below) };
        let h = h.min(room / 2.0);
        if !(h > 1e-12 * (1.0 + x.abs())) {
            return Err(Error::numeric(format!(
                "finite-difference step underflows at {p} on axis {axis} (domain edge)"
            )));
        }
        let f0 = f(0.0)?;
        let f1 = f(dir * h)?;
        let f2 = f(dir * 2.0 * h)?;
        let d = &(&(&f1 * 4.0) - &(&f0 * 3.0)) - &f2;
        Ok(&d * (dir * 0.5 / h))
    }

    /// `(dPsi/dx) e1 + (dPsi/dy) e2 + (dPsi/dz) e3` at `p`.
    pub fn holomorphy_residual(&self, p: &PointE3) -> Result<AlgebraElement> {
        let d = self.partials(p)?;
        let alg = self.algebra.spec();
        let mut r = self.algebra.zero();
        for (k, dk) in d.iter().enumerate() {
            r += &alg.multiply(dk, &self.algebra.basis(k))?;
        }
        Ok(r)
    }

    /// The constant `c`.
    pub fn constant(algebra: &Algebra, c: AlgebraElement) -> Result<Self> {
        check_dimension(algebra, &c)?;
        let zero = algebra.zero();
        let value = c.clone();
        Ok(Self::from_fn("constant", algebra.clone(), move |_| value.clone())
            .with_partials(move |_| [zero.clone(), zero.clone(), zero.clone()]))
    }

    /// `Psi(zeta) = zeta = x e1 + y e2 + z e3`.
    pub fn identity(algebra: &Algebra) -> Self {
        let a = algebra.clone();
        let basis = [algebra.basis(0), algebra.basis(1), algebra.basis(2)];
        Self::from_fn("identity", algebra.clone(), move |p| a.zeta(p.x, p.y, p.z)).with_partials(move |_| basis.clone())
    }

    /// `Psi(zeta) = zeta^2`; `d/dx_j = 2 zeta e_j` by commutativity.
    pub fn square(algebra: &Algebra) -> Self {
        let a = algebra.clone();
        let b = algebra.clone();
        Self::from_fn("square", algebra.clone(), move |p| {
            let z = a.zeta(p.x, p.y, p.z);
            a.mul(&z, &z)
        })
        .with_partials(move |p| {
            let z2 = &b.zeta(p.x, p.y, p.z) * 2.0;
            std::array::from_fn(|j| b.mul(&z2, &b.basis(j)))
        })
    }

    /// `x_axis e_axis`: `x e1`, `y e2` or `z e3`.
    pub fn coordinate(algebra: &Algebra, axis: usize) -> Result<Self> {
        if axis > 2 {
            return Err(Error::domain(format!("coordinate axis must be 0, 1 or 2, got {axis}")));
        }
        let e = algebra.basis(axis);
        let de = e.clone();
        let zero = algebra.zero();
        let label = ["x", "y", "z"][axis];
        Ok(Self::from_fn(format!("coordinate:{label}"), algebra.clone(), move |p| &e * p.as_array()[axis])
            .with_partials(move |_| std::array::from_fn(|j| if j == axis { de.clone() } else { zero.clone() })))
    }

    /// `Psi(zeta) = sum_m c_m zeta^m` with closed-form partials
    /// `dPsi/dx_j = Psi'(zeta) e_j`. Needs `e1` to be the unit.
    pub fn power_function(algebra: &Algebra, coefficients: Vec<AlgebraElement>) -> Result<Self> {
        if algebra.unit_index() != Some(0) {
            return Err(Error::domain(format!(
                "power functions need e1 to be the unit of algebra '{}'",
                algebra.label()
            )));
        }
        for c in &coefficients {
            check_dimension(algebra, c)?;
        }
        let coeffs = Arc::new(coefficients);
        let derivative: Arc<Vec<AlgebraElement>> =
            Arc::new(coeffs.iter().enumerate().skip(1).map(|(m, c)| c * m as f64).collect());
        let (a, b) = (algebra.clone(), algebra.clone());
        let c = coeffs.clone();
        Ok(Self::from_fn("power", algebra.clone(), move |p| horner(&a, &c, &a.zeta(p.x, p.y, p.z)))
            .with_partials(move |p| {
                let d = horner(&b, &derivative, &b.zeta(p.x, p.y, p.z));
                std::array::from_fn(|j| b.mul(&d, &b.basis(j)))
            }))
    }

    /// `sum_i a_i Psi_i` over functions sharing one algebra.
    pub fn linear_combination(terms: &[(C64, &HyperFunction)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::domain("linear combination of no functions"));
        };
        let algebra = first.algebra.clone();
        for (_, f) in terms {
            if f.algebra.spec() != algebra.spec() {
                return Err(Error::structural(format!(
                    "cannot combine functions over algebras '{}' and '{}'",
                    algebra.label(),
                    f.algebra.label()
                )));
            }
        }
        let owned: Arc<Vec<(C64, HyperFunction)>> = Arc::new(terms.iter().map(|(a, f)| (*a, (*f).clone())).collect());
        let labels: Vec<&str> = terms.iter().map(|(_, f)| f.label()).collect();
        let label = format!("combination({})", labels.join(","));
        let n = algebra.dimension();
        let ev = owned.clone();
        let mut out = Self::from_fn(label, algebra, move |p| {
            let mut acc = AlgebraElement::zero(n);
            for (a, f) in ev.iter() {
                acc += &(&(f.eval)(p) * *a);
            }
            acc
        });
        if owned.iter().all(|(_, f)| f.smoothness_tag() == Smoothness::ClosedForm) {
            out = out.with_partials(move |p| {
                let mut acc: [AlgebraElement; 3] = std::array::from_fn(|_| AlgebraElement::zero(n));
                for (a, f) in owned.iter() {
                    if let Partials::ClosedForm(d) = &f.partials {
                        for (slot, v) in acc.iter_mut().zip(d(p)) {
                            *slot += &(&v * *a);
                        }
                    }
                }
                acc
            });
        }
        Ok(out)
    }
}

fn check_dimension(algebra: &Algebra, c: &AlgebraElement) -> Result<()> {
    if c.dimension() != algebra.dimension() {
        return Err(Error::structural(format!(
            "element of dimension {} used with algebra '{}' of dimension {}",
            c.dimension(),
            algebra.label(),
            algebra.dimension()
        )));
    }
    Ok(())
}

fn horner(algebra: &Algebra, coeffs: &[AlgebraElement], z: &AlgebraElement) -> AlgebraElement {
    let mut acc = algebra.zero();
    for c in coeffs.iter().rev() {
        acc = algebra.mul(&acc, z);
        acc += c;
    }
    acc
}

/// Monte-Carlo lower estimate of `omega(Psi, delta)`.
///
/// Each of `samples` pairs has its own random stream derived from `seed`:
/// a base point drawn uniformly from the domain and a uniform direction,
/// with the far end at distance `delta`. If the far end leaves the domain
/// it is pulled back along the segment by bisection. The best pair is then
/// polished by a seeded local search over base point, direction and length.
pub fn modulus_of_continuity(
    f: &HyperFunction,
    domain: &DomainSpec,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::domain(format!("modulus of continuity needs delta > 0, got {delta}")));
    }
    if samples == 0 {
        return Err(Error::domain("modulus of continuity needs at least one sample"));
    }
    domain.check_nonempty()?;
    let pair_value = |a: [f64; 3], dir: [f64; 3], r: f64| -> Result<f64> {
        let b = far_end(domain, a, dir, r);
        Ok((&f.evaluate(&a.into())? - &f.evaluate(&b.into())?).norm())
    };
    let values = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (a, dir) = sample_base(domain, seed, i as u64)
                .ok_or_else(|| Error::domain(format!("could not sample a point of domain '{}'", domain.label())))?;
            Ok((pair_value(a, dir, delta)?, a, dir))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = (0.0f64, [0.0; 3], [1.0, 0.0, 0.0], delta);
    for &(v, a, dir) in &values {
        if v > best.0 {
            best = (v, a, dir, delta);
        }
    }
    if best.0 == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut step = 0.5;
    for _ in 0..POLISH_ROUNDS {
        for _ in 0..POLISH_TRIALS {
            let (_, a0, d0, r0) = best;
            let a: [f64; 3] = std::array::from_fn(|k| a0[k] + step * delta * (2.0 * rng.gen::<f64>() - 1.0));
            let d: [f64; 3] = std::array::from_fn(|k| d0[k] + step * (2.0 * rng.gen::<f64>() - 1.0));
            let r = (r0 + step * delta * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, delta);
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if !domain.contains(a) || !(n > 1e-9) {
                continue;
            }
            let d = [d[0] / n, d[1] / n, d[2] / n];
            let v = pair_value(a, d, r)?;
            if v > best.0 {
                best = (v, a, d, r);
            }
        }
        step *= 0.7;
    }
    Ok(best.0)
}

const POLISH_ROUNDS: usize = 30;
const POLISH_TRIALS: usize = 400;

/// `omega` at each of `deltas` (increasing), made monotone by a running maximum.
pub fn modulus_series(
    f: &HyperFunction,
    domain: &DomainSpec,
    deltas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(deltas.len());
    let mut best = 0.0f64;
    for &d in deltas {
        best = best.max(modulus_of_continuity(f, domain, d, samples, seed)?);
        out.push(best);
    }
    Ok(out)
}

fn sample_base(domain: &DomainSpec, seed: u64, index: u64) -> Option<([f64; 3], [f64; 3])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let bbox = domain.bbox();
    let mut a = None;
    for _ in 0..10_000 {
        let p: [f64; 3] = std::array::from_fn(|k| bbox.lo[k] + rng.gen::<f64>() * (bbox.hi[k] - bbox.lo[k]));
        if domain.contains(p) {
            a = Some(p);
            break;
        }
    }
    let a = a?;
    let dir = loop {
        let d: [f64; 3] = std::array::from_fn(|_| 2.0 * rng.gen::<f64>() - 1.0);
        let n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            break [d[0] / n, d[1] / n, d[2] / n];
        }
    };
    Some((a, dir))
}

/// `a + r dir`, or the last inside point found by bisection along the segment.
fn far_end(domain: &DomainSpec, a: [f64; 3], dir: [f64; 3], r: f64) -> [f64; 3] {
    let at = |t: f64| [a[0] + t * dir[0], a[1] + t * dir[1], a[2] + t * dir[2]];
    if domain.contains(at(r)) {
        return at(r);
    }
    let (mut lo, mut hi) = (0.0, r);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if domain.contains(at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_and_constant() {
        let h3 = Algebra::h3();
        let id = HyperFunction::identity(&h3);
        assert_eq!(id.evaluate(&PointE3::new(1.0, 2.0, 3.0)).unwrap(), AlgebraElement::from_real(&[1.0, 2.0, 3.0]));
        let e1 = HyperFunction::constant(&h3, h3.basis(0)).unwrap();
        assert_eq!(e1.evaluate(&PointE3::new(5.0, -1.0, 0.0)).unwrap(), h3.basis(0));
        assert_eq!(e1.holomorphy_residual(&PointE3::new(0.1, 0.2, 0.3)).unwrap().norm(), 0.0);
    }

    #[test]
    fn square_of_unit() {
        let h3 = Algebra::h3();
        assert_eq!(HyperFunction::square(&h3).evaluate(&PointE3::new(1.0, 0.0, 0.0)).unwrap(), h3.basis(0));
    }

    #[test]
    fn h3_square_at_one_one_zero() {
        let h3 = Algebra::h3();
        let f = HyperFunction::power_function(&h3, vec![h3.zero(), h3.zero(), h3.basis(0)]).unwrap();
        let v = f.evaluate(&PointE3::new(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(v, AlgebraElement::new(vec![c(2.0, 0.0), c(2.0, 2.0), c(0.0, 0.0)]));
    }

    #[test]
    fn x_e1_residual_is_e1() {
        let c3 = Algebra::c3();
        let f = HyperFunction::coordinate(&c3, 0).unwrap();
        assert_eq!(f.holomorphy_residual(&PointE3::new(0.3, 0.1, 0.9)).unwrap(), c3.basis(0));
    }

    #[test]
    fn h3_identity_is_hyperholomorphic() {
        let h3 = Algebra::h3();
        let f = HyperFunction::power_function(&h3, vec![h3.zero(), h3.basis(0)]).unwrap();
        let p = PointE3::new(0.3, -0.2, 0.7);
        assert!(f.holomorphy_residual(&p).unwrap().norm() < 1e-15);
        let fd = f.clone().with_finite_differences(DEFAULT_FD_STEP);
        assert!(fd.holomorphy_residual(&p).unwrap().norm() < 1e-9);
    }

    #[test]
    fn power_function_needs_unit_at_e1() {
        let c3 = Algebra::c3();
        assert!(matches!(HyperFunction::power_function(&c3, vec![c3.basis(0)]), Err(Error::Domain(_))));
        let zero = Algebra::new(AlgebraSpec::zero_products(3)).unwrap();
        assert!(matches!(HyperFunction::power_function(&zero, vec![]), Err(Error::Domain(_))));
    }

    #[test]
    fn one_sided_difference_at_domain_edge() {
        let h3 = Algebra::h3();
        let f = HyperFunction::square(&h3).with_finite_differences(1e-5).with_domain(Aabb::unit());
        let p = PointE3::new(0.0, 1.0, 0.5);
        let closed = HyperFunction::square(&h3).partials(&p).unwrap();
        let fd = f.partials(&p).unwrap();
        for k in 0..3 {
            assert!((&closed[k] - &fd[k]).norm() < 1e-8);
        }
        let thin = HyperFunction::square(&h3)
            .with_finite_differences(1e-5)
            .with_domain(Aabb::new([0.0; 3], [1.0, 1.0, 0.0]).unwrap());
        assert!(matches!(thin.partials(&PointE3::new(0.5, 0.5, 0.0)), Err(Error::Numeric(_))));
    }

    #[test]
    fn non_finite_value_names_the_point() {
        let h3 = Algebra::h3();
        let f = HyperFunction::from_fn("bad", h3.clone(), move |p| AlgebraElement::from_real(&[1.0 / p.x, 0.0, 0.0]));
        match f.evaluate(&PointE3::new(0.0, 2.0, 3.0)) {
            Err(Error::Numeric(m)) => assert!(m.contains("(0, 2, 3)"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn modulus_of_identity_and_constant() {
        let h3 = Algebra::h3();
        let cube = DomainSpec::unit_cube();
        let w = modulus_of_continuity(&HyperFunction::identity(&h3), &cube, 0.1, 20_000, 7).unwrap();
        assert!(w <= 0.1 + 1e-15 && w > 0.099, "{w}");
        let k = HyperFunction::constant(&h3, h3.basis(1)).unwrap();
        assert_eq!(modulus_of_continuity(&k, &cube, 0.3, 1000, 7).unwrap(), 0.0);
    }

    #[test]
    fn modulus_errors() {
        let h3 = Algebra::h3();
        let f = HyperFunction::identity(&h3);
        let cube = DomainSpec::unit_cube();
        assert!(matches!(modulus_of_continuity(&f, &cube, 0.0, 10, 1), Err(Error::Domain(_))));
        assert!(matches!(modulus_of_continuity(&f, &cube, 0.1, 0, 1), Err(Error::Domain(_))));
        let empty = DomainSpec::new("empty", Aabb::unit(), |_| false);
        assert!(matches!(modulus_of_continuity(&f, &empty, 0.1, 10, 1), Err(Error::Domain(_))));
    }
}
