//! Named fixtures: the strings accepted for algebras, functions, surfaces
//! and domains in configs and on the command line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algebra::{Algebra, AlgebraElement, AlgebraSpec, C64};
use crate::error::{Error, Result};
use crate::geometry::{
    flat_square_patch, staircase_surface, takagi_cap_surface, unit_cube, unit_sphere, BoundarySampling, ClosedSurface,
    DomainSpec, ExprChart, SurfacePatch,
};
use crate::hyperfun::HyperFunction;

/// Staircase used when no heights are given: two unit cubes stacked.
pub const DEFAULT_STAIRCASE: [u32; 1] = [2];

struct Entry {
    name: &'static str,
    kind: &'static str,
    about: &'static str,
}

const BUILTINS: &[Entry] = &[
    Entry { name: "ball", kind: "domain", about: "closed unit ball centred at the origin, bounded by the sphere" },
    Entry { name: "c3", kind: "algebra", about: "C^3 with componentwise product, unit e1+e2+e3" },
    Entry { name: "constant:[..]", kind: "function", about: "constant element, coordinates as numbers or [re, im] pairs" },
    Entry { name: "coordinate:x|y|z", kind: "function", about: "x e1, y e2 or z e3; not hyperholomorphic" },
    Entry { name: "cube", kind: "domain", about: "unit cube [0,1]^3 split at mid-height" },
    Entry { name: "cube_staple", kind: "surface", about: "unit cube: top plus upper side halves against the mirrored lower half" },
    Entry { name: "h3", kind: "algebra", about: "C[t]/(t^3) in the harmonic basis 1, i + (i/2) t^2, t" },
    Entry { name: "identity", kind: "function", about: "zeta = x e1 + y e2 + z e3" },
    Entry { name: "power:[..]", kind: "function", about: "polynomial sum c_m zeta^m; scalars mean multiples of the unit" },
    Entry { name: "sphere", kind: "surface", about: "unit sphere as two hemispheres glued along the equator" },
    Entry { name: "square", kind: "function", about: "zeta^2" },
    Entry { name: "square", kind: "surface", about: "flat unit square in z = 0 (open; roughness measures only)" },
    Entry { name: "staircase", kind: "domain", about: "columns of unit cubes; bare name means two stacked cubes" },
    Entry { name: "staircase:[..]", kind: "surface", about: "boundary of unit-cube columns with the given heights" },
    Entry { name: "takagi_cap:K", kind: "surface", about: "unit cube with top z = 1 + 0.1 T_K(x), T_K the K-term Takagi sum" },
    Entry { name: "zero:N", kind: "algebra", about: "N-dimensional algebra with all products zero" },
];

/// Alphabetized fixture listing, one line per entry; user algebras from
/// `user_dir` (`*.json` algebra files) are merged in by label.
pub fn list_fixtures(user_dir: Option<&Path>) -> String {
    let mut rows: Vec<(String, String, String)> =
        BUILTINS.iter().map(|e| (e.name.to_string(), e.kind.to_string(), e.about.to_string())).collect();
    if let Some(dir) = user_dir {
        for path in algebra_files(dir) {
            let row = match load_algebra_file(&path) {
                Ok(spec) => (
                    spec.label().to_string(),
                    "algebra".to_string(),
                    format!("user algebra of dimension {} from {}", spec.dimension(), file_name(&path)),
                ),
                Err(e) => (file_name(&path), "invalid".to_string(), e.to_string()),
            };
            rows.push(row);
        }
    }
    rows.sort();
    let mut out = String::new();
    for (name, kind, about) in rows {
        out.push_str(&format!("{name:<18} {kind:<9} {about}\n"));
    }
    out
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn algebra_files(dir: &Path) -> Vec<PathBuf> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
}

/// Reads an algebra file; an empty label is replaced by the file stem.
pub fn load_algebra_file(path: &Path) -> Result<AlgebraSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::structural(format!("cannot read algebra file {}: {e}", path.display())))?;
    let spec = AlgebraSpec::from_json(&text)?;
    if spec.label().is_empty() {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(spec.with_label(stem));
    }
    Ok(spec)
}

/// `c3`, `h3`, `zero:N`, a label from `user_dir`, or a path to an algebra file.
pub fn algebra_by_name(name: &str, user_dir: Option<&Path>) -> Result<Algebra> {
    match name {
        "c3" => return Ok(Algebra::c3()),
        "h3" => return Ok(Algebra::h3()),
        _ => {}
    }
    if let Some(n) = name.strip_prefix("zero:") {
        let n: usize = n.parse().map_err(|_| Error::structural(format!("bad algebra dimension in '{name}'")))?;
        return Algebra::new(AlgebraSpec::zero_products(n));
    }
    if let Some(dir) = user_dir {
        for path in algebra_files(dir) {
            if let Ok(spec) = load_algebra_file(&path) {
                if spec.label() == name {
                    return Algebra::new(spec);
                }
            }
        }
    }
    let path = Path::new(name);
    if path.is_file() {
        return Algebra::new(load_algebra_file(path)?);
    }
    Err(Error::structural(format!("unknown algebra '{name}'")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coord {
    Real(f64),
    Complex([f64; 2]),
}

impl Coord {
    fn value(&self) -> C64 {
        match *self {
            Coord::Real(re) => C64::new(re, 0.0),
            Coord::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coefficient {
    Scalar(Coord),
    Element(Vec<Coord>),
}

fn parse_list<T: for<'de> Deserialize<'de>>(name: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::structural(format!("cannot parse the list in '{name}': {e}")))
}

fn element(algebra: &Algebra, coords: &[Coord]) -> Result<AlgebraElement> {
    if coords.len() != algebra.dimension() {
        return Err(Error::structural(format!(
            "element has {} coordinates but algebra '{}' has dimension {}",
            coords.len(),
            algebra.label(),
            algebra.dimension()
        )));
    }
    Ok(AlgebraElement::new(coords.iter().map(Coord::value).collect()))
}

/// `identity`, `square`, `coordinate:x|y|z`, `constant:[..]` or `power:[..]`.
pub fn function_by_name(name: &str, algebra: &Algebra) -> Result<HyperFunction> {
    let f = match name {
        "identity" => HyperFunction::identity(algebra),
        "square" => HyperFunction::square(algebra),
        _ => {
            if let Some(axis) = name.strip_prefix("coordinate:") {
                let k = match axis {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    _ => return Err(Error::structural(format!("unknown coordinate axis in '{name}'"))),
                };
                HyperFunction::coordinate(algebra, k)?
            } else if let Some(list) = name.strip_prefix("constant:") {
                let coords: Vec<Coord> = parse_list(name, list)?;
                HyperFunction::constant(algebra, element(algebra, &coords)?)?
            } else if let Some(list) = name.strip_prefix("power:") {
                let coeffs: Vec<Coefficient> = parse_list(name, list)?;
                let unit = algebra
                    .unit()
                    .ok_or_else(|| Error::domain(format!("algebra '{}' declares no unit", algebra.label())))?;
                let coeffs = coeffs
                    .iter()
                    .map(|c| match c {
                        Coefficient::Scalar(s) => Ok(unit.scale(s.value())),
                        Coefficient::Element(v) => element(algebra, v),
                    })
                    .collect::<Result<Vec<_>>>()?;
                HyperFunction::power_function(algebra, coeffs)?
            } else {
                return Err(Error::structural(format!("unknown function '{name}'")));
            }
        }
    };
    Ok(f.with_label(name))
}

fn staircase_heights(name: &str) -> Result<Option<Vec<u32>>> {
    if name == "staircase" {
        return Ok(Some(DEFAULT_STAIRCASE.to_vec()));
    }
    match name.strip_prefix("staircase:") {
        Some(list) => Ok(Some(parse_list(name, list)?)),
        None => Ok(None),
    }
}

fn takagi_order(name: &str) -> Result<Option<u32>> {
    match name.strip_prefix("takagi_cap:") {
        Some(k) => k.parse().map(Some).map_err(|_| Error::structural(format!("bad Takagi order in '{name}'"))),
        None => Ok(None),
    }
}

/// `sphere`, `cube`, `cube_staple`, `takagi_cap:K`, `staircase[:[..]]`.
pub fn surface_by_name(name: &str) -> Result<ClosedSurface> {
    match name {
        "sphere" => return Ok(unit_sphere()),
        "cube" => return Ok(unit_cube()),
        "cube_staple" => return Ok(unit_cube().with_label("cube_staple")),
        _ => {}
    }
    if let Some(k) = takagi_order(name)? {
        return takagi_cap_surface(k);
    }
    if let Some(h) = staircase_heights(name)? {
        return staircase_surface(&h);
    }
    Err(Error::structural(format!("unknown surface '{name}'")))
}

/// `ball`, `cube`, `takagi_cap:K`, `staircase[:[..]]`; the surface names
/// `sphere` and `cube_staple` stand for the regions they bound.
pub fn domain_by_name(name: &str) -> Result<DomainSpec> {
    match name {
        "ball" | "sphere" => return Ok(DomainSpec::unit_ball()),
        "cube" | "cube_staple" => return Ok(DomainSpec::unit_cube()),
        _ => {}
    }
    if let Some(k) = takagi_order(name)? {
        return DomainSpec::takagi_cap(k);
    }
    if let Some(h) = staircase_heights(name)? {
        return DomainSpec::staircase(&h);
    }
    Err(Error::structural(format!("unknown domain '{name}'")))
}

/// Point sampling of a named surface; `square` is the open unit square.
pub fn sampling_by_name(name: &str, spacing: f64) -> Result<(String, BoundarySampling)> {
    if name == "square" {
        return Ok(("square".to_string(), BoundarySampling::from_patch(&flat_square_patch(), spacing)?));
    }
    let s = surface_by_name(name)?;
    Ok((s.label().to_string(), BoundarySampling::from_surface(&s, spacing)?))
}

/// Closed surface from two expression patches over `[0,1]^2` in `u`, `v`.
pub fn expression_surface(label: &str, patch1: [&str; 3], patch2: [&str; 3]) -> Result<ClosedSurface> {
    let a = SurfacePatch::from_chart("patch1", ExprChart::parse(patch1[0], patch1[1], patch1[2])?);
    let b = SurfacePatch::from_chart("patch2", ExprChart::parse(patch2[0], patch2[1], patch2[2])?);
    Ok(ClosedSurface::new(label, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperfun::PointE3;

    #[test]
    fn listing_is_sorted_and_complete() {
        let text = list_fixtures(None);
        let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for want in ["c3", "h3", "sphere", "cube_staple", "takagi_cap:K", "staircase"] {
            assert!(names.contains(&want), "{want}");
        }
    }

    #[test]
    fn functions_parse() {
        let h3 = Algebra::h3();
        let p = PointE3::new(0.3, -0.2, 0.7);
        let sq = function_by_name("square", &h3).unwrap().evaluate(&p).unwrap();
        let pw = function_by_name("power:[0,0,1]", &h3).unwrap().evaluate(&p).unwrap();
        assert!((&sq - &pw).norm() < 1e-15);
        let c = function_by_name("constant:[1,[0,2],0]", &h3).unwrap().evaluate(&p).unwrap();
        assert_eq!(c.coords()[1], C64::new(0.0, 2.0));
        assert!(function_by_name("constant:[1,2]", &h3).is_err());
        assert!(function_by_name("coordinate:w", &h3).is_err());
        assert!(function_by_name("cube", &h3).is_err());
    }

    #[test]
    fn names_resolve() {
        assert_eq!(surface_by_name("staircase").unwrap().label(), "staircase:[2]");
        assert_eq!(domain_by_name("staircase:[1,2]").unwrap().label(), "staircase:[1,2]");
        assert_eq!(surface_by_name("takagi_cap:8").unwrap().label(), "takagi_cap:8");
        assert_eq!(domain_by_name("sphere").unwrap().label(), "ball");
        assert!(matches!(algebra_by_name("zero:2", None), Err(Error::Domain(_))));
        assert!(algebra_by_name("quaternions", None).is_err());
    }

    #[test]
    fn expression_surface_closes() {
        // both faces of a flat square
        let s = expression_surface("sheet", ["u", "v", "0"], ["v", "u", "0"]).unwrap();
        s.check_seam().unwrap();
    }
}
