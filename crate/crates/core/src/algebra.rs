//! Finite-dimensional commutative associative algebras over the complex field.
//!
//! An algebra is stored as its structure constants: the coordinates of every
//! basis product `e_m e_s` in the basis `e_1 .. e_n`. Elements are plain
//! complex coordinate vectors; the real and imaginary parts of coordinate `k`
//! play the role of the component pair `(U_k, V_k)` of an algebra-valued field.

use std::ops::{Add, AddAssign, Deref, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance on structure-constant identities.
pub const ALGEBRA_TOLERANCE: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

/// An element given by its complex coordinates in the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    coords: Vec<C64>,
}

impl AlgebraElement {
    pub fn new(coords: Vec<C64>) -> Self {
        Self { coords }
    }

    pub fn zero(dimension: usize) -> Self {
        Self { coords: vec![C64::new(0.0, 0.0); dimension] }
    }

    /// Basis element `e_{k+1}` (zero-based `k`).
    pub fn basis(dimension: usize, k: usize) -> Self {
        let mut e = Self::zero(dimension);
        e.coords[k] = C64::new(1.0, 0.0);
        e
    }

    pub fn from_real(coords: &[f64]) -> Self {
        Self { coords: coords.iter().map(|&r| C64::new(r, 0.0)).collect() }
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [C64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.coords
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean norm `(sum |a_k|^2)^(1/2)` of the coordinate vector.
    pub fn norm(&self) -> f64 {
        // hypot-style accumulation keeps tiny residuals from underflowing
        let scale = self.coords.iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return scale;
        }
        let sum: f64 = self.coords.iter().map(|c| (c / scale).norm_sqr()).sum();
        scale * sum.sqrt()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { coords: self.coords.iter().map(|c| c * factor).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coordinate modulus of `self - other`.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Real parts of the coordinates (the `U_k` components).
    pub fn real_parts(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.re).collect()
    }

    /// Imaginary parts of the coordinates (the `V_k` components).
    pub fn imag_parts(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.im).collect()
    }
}

/// Serialized as a list of `[re, im]` pairs.
impl Serialize for AlgebraElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.coords.len()))?;
        for c in &self.coords {
            seq.serialize_element(&[c.re, c.im])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Ok(Self::new(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect()))
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.dimension(), rhs.dimension(), "dimension mismatch");
        AlgebraElement { coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect() }
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: AlgebraElement) -> AlgebraElement {
        &self + &rhs
    }
}

impl AddAssign<&AlgebraElement> for AlgebraElement {
    fn add_assign(&mut self, rhs: &AlgebraElement) {
        assert_eq!(self.dimension(), rhs.dimension(), "dimension mismatch");
        for (a, b) in self.coords.iter_mut().zip(&rhs.coords) {
            *a += b;
        }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.dimension(), rhs.dimension(), "dimension mismatch");
        AlgebraElement { coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a - b).collect() }
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        &self - &rhs
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement { coords: self.coords.into_iter().map(|c| -c).collect() }
    }
}

impl Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: f64) -> AlgebraElement {
        AlgebraElement { coords: self.coords.iter().map(|c| c * rhs).collect() }
    }
}

impl Mul<C64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: C64) -> AlgebraElement {
        self.scale(rhs)
    }
}

/// Raw multiplication table. Not necessarily commutative or associative;
/// see [`AlgebraSpec::validate`] and [`Algebra`].
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraSpec {
    label: String,
    dimension: usize,
    /// `constants[(m * n + s) * n + k]` is coordinate `k` of `e_m e_s`.
    constants: Vec<C64>,
    unit_index: Option<usize>,
}

/// Outcome of checking the algebra axioms on a table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub commutative: bool,
    pub associative: bool,
    pub has_unit: bool,
    pub commutativity_violation: f64,
    pub associativity_violation: f64,
    pub unit_violation: Option<f64>,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.commutative && self.associative && self.unit_violation.is_none_or(|v| v <= self.tolerance)
    }
}

impl AlgebraSpec {
    /// Builds a table from `table[m][s]` = coordinates of `e_m e_s`.
    /// `unit_index` is zero-based.
    pub fn new(
        label: impl Into<String>,
        dimension: usize,
        table: Vec<Vec<Vec<C64>>>,
        unit_index: Option<usize>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::structural("algebra dimension must be positive"));
        }
        if table.len() != dimension {
            return Err(Error::structural(format!(
                "structure constant table has {} rows, expected {dimension}",
                table.len()
            )));
        }
        let mut constants = Vec::with_capacity(dimension.pow(3));
        for (m, row) in table.into_iter().enumerate() {
            if row.len() != dimension {
                return Err(Error::structural(format!(
                    "row {} of the structure constant table has {} entries, expected {dimension}",
                    m + 1,
                    row.len()
                )));
            }
            for (s, entry) in row.into_iter().enumerate() {
                if entry.len() != dimension {
                    return Err(Error::structural(format!(
                        "product e{}e{} has {} coordinates, expected {dimension}",
                        m + 1,
                        s + 1,
                        entry.len()
                    )));
                }
                constants.extend(entry);
            }
        }
        if let Some(u) = unit_index {
            if u >= dimension {
                return Err(Error::structural(format!(
                    "unit index {} outside basis of size {dimension}",
                    u + 1
                )));
            }
        }
        Ok(Self { label: label.into(), dimension, constants, unit_index })
    }

    /// Builds a table from a closure giving `e_m e_s`.
    pub fn from_fn(
        label: impl Into<String>,
        dimension: usize,
        unit_index: Option<usize>,
        product: impl Fn(usize, usize) -> Vec<C64>,
    ) -> Result<Self> {
        let table = (0..dimension)
            .map(|m| (0..dimension).map(|s| product(m, s)).collect())
            .collect();
        Self::new(label, dimension, table, unit_index)
    }

    /// Componentwise algebra C^3: `e_m e_s = e_m` if `m == s`, else 0.
    pub fn c3() -> Self {
        Self::from_fn("c3", 3, None, |m, s| {
            let mut v = vec![C64::new(0.0, 0.0); 3];
            if m == s {
                v[m] = C64::new(1.0, 0.0);
            }
            v
        })
        .expect("static table")
    }

    /// Truncated polynomial algebra C[t]/(t^3) in the basis
    /// `e1 = 1, e2 = i + (i/2) t^2, e3 = t`, for which `e1 + e2^2 + e3^2 = 0`.
    pub fn h3() -> Self {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        Self::from_fn("h3", 3, Some(0), |m, s| {
            let (a, b) = (m.min(s), m.max(s));
            match (a, b) {
                (0, k) => {
                    let mut v = vec![zero; 3];
                    v[k] = one;
                    v
                }
                (1, 1) => vec![one, 2.0 * I, zero],
                (1, 2) => vec![zero, zero, I],
                (2, 2) => vec![-2.0 * one, -2.0 * I, zero],
                _ => unreachable!(),
            }
        })
        .expect("static table")
    }

    /// The algebra of dimension `n` in which every product vanishes.
    pub fn zero_products(n: usize) -> Self {
        Self::from_fn(format!("zero{n}"), n, None, |_, _| vec![C64::new(0.0, 0.0); n]).expect("static table")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Zero-based index of the basis element declared to be the unit.
    pub fn unit_index(&self) -> Option<usize> {
        self.unit_index
    }

    /// Coordinate `k` of `e_m e_s`.
    #[inline]
    pub fn constant(&self, m: usize, s: usize, k: usize) -> C64 {
        self.constants[(m * self.dimension + s) * self.dimension + k]
    }

    /// `e_m e_s` as an element.
    pub fn basis_product(&self, m: usize, s: usize) -> AlgebraElement {
        let n = self.dimension;
        let start = (m * n + s) * n;
        AlgebraElement::new(self.constants[start..start + n].to_vec())
    }

    /// Returns a copy with `e_m e_s` (one ordered entry only) replaced.
    pub fn with_entry(&self, m: usize, s: usize, value: Vec<C64>) -> Result<Self> {
        if value.len() != self.dimension {
            return Err(Error::structural("replacement entry has wrong length"));
        }
        let mut out = self.clone();
        let n = self.dimension;
        let start = (m * n + s) * n;
        out.constants[start..start + n].copy_from_slice(&value);
        Ok(out)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Checks commutativity, associativity and the declared unit.
    pub fn validate(&self) -> Result<ValidationReport> {
        let n = self.dimension;
        if n < 3 {
            return Err(Error::domain(format!(
                "algebra '{}' has dimension {n}; the construction needs 3 <= n < infinity",
                self.label
            )));
        }
        let mut comm = 0.0_f64;
        for m in 0..n {
            for s in 0..n {
                for k in 0..n {
                    comm = comm.max((self.constant(m, s, k) - self.constant(s, m, k)).norm());
                }
            }
        }
        let mut assoc = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for p in 0..n {
                        let mut left = C64::new(0.0, 0.0);
                        let mut right = C64::new(0.0, 0.0);
                        for l in 0..n {
                            left += self.constant(i, j, l) * self.constant(l, k, p);
                            right += self.constant(j, k, l) * self.constant(i, l, p);
                        }
                        assoc = assoc.max((left - right).norm());
                    }
                }
            }
        }
        let unit_violation = self.unit_index.map(|u| {
            let mut worst = 0.0_f64;
            for k in 0..n {
                for p in 0..n {
                    let expected = if p == k { 1.0 } else { 0.0 };
                    worst = worst
                        .max((self.constant(u, k, p) - expected).norm())
                        .max((self.constant(k, u, p) - expected).norm());
                }
            }
            worst
        });
        let tol = ALGEBRA_TOLERANCE;
        Ok(ValidationReport {
            commutative: comm <= tol,
            associative: assoc <= tol,
            has_unit: unit_violation.is_some_and(|v| v <= tol),
            commutativity_violation: comm,
            associativity_violation: assoc,
            unit_violation,
            tolerance: tol,
        })
    }

    /// Bilinear product `(ab)_k = sum_{m,s} a_m b_s C[m][s][k]`.
    pub fn multiply(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        if a.dimension() != self.dimension || b.dimension() != self.dimension {
            return Err(Error::structural(format!(
                "cannot multiply elements of dimension {} and {} in algebra '{}' of dimension {}",
                a.dimension(),
                b.dimension(),
                self.label,
                self.dimension
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dimension];
        self.product_into(a.coords(), b.coords(), &mut out);
        Ok(AlgebraElement::new(out))
    }

    /// Unchecked product on coordinate slices; all slices must have length n.
    /// Pairs `(m, s)` and `(s, m)` are folded together, so swapping `a` and
    /// `b` gives a bit-identical result.
    #[inline]
    pub(crate) fn product_into(&self, a: &[C64], b: &[C64], out: &mut [C64]) {
        let n = self.dimension;
        let zero = C64::new(0.0, 0.0);
        out.iter_mut().for_each(|o| *o = zero);
        for m in 0..n {
            for s in m..n {
                let w = if s == m { a[m] * b[m] } else { a[m] * b[s] + a[s] * b[m] };
                if w == zero {
                    continue;
                }
                let row = &self.constants[(m * n + s) * n..(m * n + s + 1) * n];
                for (o, c) in out.iter_mut().zip(row) {
                    *o += w * c;
                }
            }
        }
    }

    pub(crate) fn mul(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        let mut out = vec![C64::new(0.0, 0.0); self.dimension];
        self.product_into(a.coords(), b.coords(), &mut out);
        AlgebraElement::new(out)
    }

    /// `M = max_{m,s} ||e_m e_s||`.
    pub fn basis_product_bound(&self) -> f64 {
        let n = self.dimension;
        (0..n)
            .flat_map(|m| (0..n).map(move |s| (m, s)))
            .map(|(m, s)| self.basis_product(m, s).norm())
            .fold(0.0, f64::max)
    }

    /// `e1 + e2 e2 + e3 e3`. Zero means every power of
    /// `zeta = x e1 + y e2 + z e3` satisfies the hyperholomorphy equation.
    pub fn harmonic_residual(&self) -> Result<AlgebraElement> {
        let n = self.dimension;
        if n < 3 {
            return Err(Error::domain(format!("harmonic residual needs n >= 3, got {n}")));
        }
        let mut r = AlgebraElement::basis(n, 0);
        r += &self.basis_product(1, 1);
        r += &self.basis_product(2, 2);
        Ok(r)
    }

    /// Embedding `zeta = x e1 + y e2 + z e3`.
    pub fn zeta(&self, x: f64, y: f64, z: f64) -> AlgebraElement {
        let mut e = AlgebraElement::zero(self.dimension);
        e.coords[0] = C64::new(x, 0.0);
        e.coords[1] = C64::new(y, 0.0);
        e.coords[2] = C64::new(z, 0.0);
        e
    }

    /// Serializes to the algebra file format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&AlgebraFile::from(self)).expect("algebra serializes")
    }

    /// Parses the algebra file format. Shape problems are structural errors;
    /// the axioms are not checked here.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: AlgebraFile = serde_json::from_str(text).map_err(|e| {
            Error::structural(format!("algebra file, line {} column {}: {e}", e.line(), e.column()))
        })?;
        file.try_into()
    }
}

/// On-disk representation: products as `[re, im]` pairs, 1-based unit index.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub dimension: usize,
    pub structure_constants: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_index: Option<usize>,
    #[serde(default)]
    pub label: String,
}

impl From<&AlgebraSpec> for AlgebraFile {
    fn from(spec: &AlgebraSpec) -> Self {
        let n = spec.dimension;
        let structure_constants = (0..n)
            .map(|m| {
                (0..n)
                    .map(|s| (0..n).map(|k| {
                        let c = spec.constant(m, s, k);
                        [c.re, c.im]
                    }).collect())
                    .collect()
            })
            .collect();
        AlgebraFile {
            dimension: n,
            structure_constants,
            unit_index: spec.unit_index.map(|u| u + 1),
            label: spec.label.clone(),
        }
    }
}

impl TryFrom<AlgebraFile> for AlgebraSpec {
    type Error = Error;

    fn try_from(file: AlgebraFile) -> Result<Self> {
        let unit = match file.unit_index {
            Some(0) => return Err(Error::structural("unit_index is 1-based; 0 is not a basis index")),
            Some(u) => Some(u - 1),
            None => None,
        };
        let table = file
            .structure_constants
            .into_iter()
            .map(|row| row.into_iter().map(|e| e.into_iter().map(|[re, im]| C64::new(re, im)).collect()).collect())
            .collect();
        AlgebraSpec::new(file.label, file.dimension, table, unit)
    }
}

/// A table that passed validation. Cheap to clone and share across threads.
#[derive(Clone, Debug)]
pub struct Algebra {
    spec: Arc<AlgebraSpec>,
    report: ValidationReport,
}

impl Algebra {
    /// Validates `spec`; fails unless it is commutative and associative and
    /// any declared unit really is one.
    pub fn new(spec: AlgebraSpec) -> Result<Self> {
        let report = spec.validate()?;
        if !report.commutative {
            return Err(Error::domain(format!(
                "algebra '{}' is not commutative (max deviation {:e})",
                spec.label, report.commutativity_violation
            )));
        }
        if !report.associative {
            return Err(Error::domain(format!(
                "algebra '{}' is not associative (max deviation {:e})",
                spec.label, report.associativity_violation
            )));
        }
        if let Some(v) = report.unit_violation.filter(|v| *v > report.tolerance) {
            return Err(Error::domain(format!(
                "declared unit of algebra '{}' fails the unit law (max deviation {v:e})",
                spec.label
            )));
        }
        Ok(Self { spec: Arc::new(spec), report })
    }

    pub fn c3() -> Self {
        Self::new(AlgebraSpec::c3()).expect("c3 is valid")
    }

    pub fn h3() -> Self {
        Self::new(AlgebraSpec::h3()).expect("h3 is valid")
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.report
    }

    /// The unit element if a basis element is declared as the unit.
    pub fn unit(&self) -> Option<AlgebraElement> {
        self.spec.unit_index.map(|u| AlgebraElement::basis(self.spec.dimension, u))
    }

    pub fn basis(&self, k: usize) -> AlgebraElement {
        AlgebraElement::basis(self.spec.dimension, k)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement::zero(self.spec.dimension)
    }
}

impl Deref for Algebra {
    type Target = AlgebraSpec;
    fn deref(&self) -> &AlgebraSpec {
        &self.spec
    }
}

/// Free-function form of [`AlgebraSpec::validate`].
pub fn validate_algebra(spec: &AlgebraSpec) -> Result<ValidationReport> {
    spec.validate()
}

/// Free-function form of [`AlgebraSpec::multiply`].
pub fn multiply(a: &AlgebraElement, b: &AlgebraElement, spec: &AlgebraSpec) -> Result<AlgebraElement> {
    spec.multiply(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn c3_validates_without_basis_unit() {
        let r = AlgebraSpec::c3().validate().unwrap();
        assert!(r.commutative && r.associative);
        assert!(!r.has_unit);
        assert_eq!(r.unit_violation, None);
        assert!(r.accepted());
    }

    #[test]
    fn h3_validates_with_unit_e1() {
        let r = AlgebraSpec::h3().validate().unwrap();
        assert!(r.commutative && r.associative && r.has_unit);
        assert_eq!(AlgebraSpec::h3().unit_index(), Some(0));
    }

    #[test]
    fn asymmetric_perturbation_is_reported() {
        let spec = AlgebraSpec::c3()
            .with_entry(0, 1, vec![c(1e-6, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let r = spec.validate().unwrap();
        assert!(!r.commutative);
        assert!((r.commutativity_violation - 1e-6).abs() < 1e-18);
        assert!(matches!(Algebra::new(spec), Err(Error::Domain(_))));
    }

    #[test]
    fn dimension_two_is_a_domain_error() {
        let spec = AlgebraSpec::from_fn("c2", 2, None, |m, s| {
            let mut v = vec![c(0.0, 0.0); 2];
            if m == s {
                v[m] = c(1.0, 0.0);
            }
            v
        })
        .unwrap();
        let err = spec.validate().unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(err.to_string().contains("3 <= n"));
    }

    #[test]
    fn ragged_table_is_structural() {
        let table = vec![vec![vec![c(1.0, 0.0); 3]; 3], vec![vec![c(0.0, 0.0); 3]; 2], vec![vec![c(0.0, 0.0); 3]; 3]];
        assert!(matches!(AlgebraSpec::new("bad", 3, table, None), Err(Error::Structural(_))));
    }

    #[test]
    fn componentwise_product() {
        let a = AlgebraElement::from_real(&[1.0, 2.0, 3.0]);
        let b = AlgebraElement::from_real(&[4.0, 5.0, 6.0]);
        assert_eq!(AlgebraSpec::c3().multiply(&a, &b).unwrap(), AlgebraElement::from_real(&[4.0, 10.0, 18.0]));
    }

    #[test]
    fn h3_products() {
        let h = AlgebraSpec::h3();
        let e2e3 = h.multiply(&AlgebraElement::basis(3, 1), &AlgebraElement::basis(3, 2)).unwrap();
        assert_eq!(e2e3.coords(), &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        let a = AlgebraElement::new(vec![c(0.3, -1.0), c(2.0, 0.5), c(-0.7, 0.0)]);
        assert_eq!(h.multiply(&AlgebraElement::basis(3, 0), &a).unwrap(), a);
    }

    #[test]
    fn multiply_dimension_mismatch() {
        let a = AlgebraElement::zero(3);
        let b = AlgebraElement::zero(4);
        assert!(matches!(AlgebraSpec::c3().multiply(&a, &b), Err(Error::Structural(_))));
    }

    #[test]
    fn norms() {
        assert_eq!(AlgebraElement::basis(3, 0).norm(), 1.0);
        assert_eq!(AlgebraElement::from_real(&[3.0, 4.0, 0.0]).norm(), 5.0);
        let e2sq = AlgebraSpec::h3().basis_product(1, 1);
        assert!((e2sq.norm() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(AlgebraElement::zero(3).norm(), 0.0);
    }

    #[test]
    fn basis_product_bounds() {
        assert_eq!(AlgebraSpec::c3().basis_product_bound(), 1.0);
        assert!((AlgebraSpec::h3().basis_product_bound() - 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(AlgebraSpec::zero_products(3).basis_product_bound(), 0.0);
    }

    #[test]
    fn harmonic_residuals() {
        assert_eq!(AlgebraSpec::h3().harmonic_residual().unwrap().norm(), 0.0);
        let r = AlgebraSpec::c3().harmonic_residual().unwrap();
        assert_eq!(r, AlgebraElement::from_real(&[1.0, 1.0, 1.0]));
        assert!((r.norm() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(AlgebraSpec::zero_products(3).harmonic_residual().unwrap(), AlgebraElement::basis(3, 0));
    }

    #[test]
    fn zero_product_algebra_is_valid() {
        assert!(Algebra::new(AlgebraSpec::zero_products(4)).is_ok());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let h = AlgebraSpec::h3();
        let text = h.to_json();
        let back = AlgebraSpec::from_json(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"unit_index\": 1"));
    }

    #[test]
    fn json_rejects_unknown_keys_with_position() {
        let err = AlgebraSpec::from_json("{\"dimension\": 3, \"bogus\": 1}").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
