//! Config handling and experiment dispatch behind the `hypercauchy` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use hypercauchy::algebra::{Algebra, AlgebraSpec};
use hypercauchy::catalog::{algebra_by_name, domain_by_name, expression_surface, function_by_name, surface_by_name};
use hypercauchy::error::{Error, Result};
use hypercauchy::geometry::{
    flat_square_patch, lebesgue_area, Aabb, BoundarySampling, ClosedSurface, QuadratureGrid, QuadratureRule,
};
use hypercauchy::harness::{self, Theorem2Options, VerificationReport};
use hypercauchy::integration::{sigma_integral, surface_area, SigmaNormVariant};

/// Config schema version; bump when a default changes.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
    Theorem2,
    GaussOstrogradskii,
    Minkowski,
    Covering,
}

/// An algebra fixture name or an inline algebra file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Name(String),
    Inline(serde_json::Value),
}

/// A surface fixture name or two expression patches in `u`, `v`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SurfaceRef {
    Name(String),
    Expressions {
        #[serde(default = "expression_label")]
        label: String,
        patch1: [String; 3],
        patch2: [String; 3],
    },
}

fn expression_label() -> String {
    "expression".to_string()
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Gauss3,
    Midpoint,
}

/// `32` or `{"cells": 32, "rule": "midpoint"}`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Cells(usize),
    Full {
        cells: usize,
        #[serde(default = "default_rule")]
        rule: Rule,
    },
}

fn default_rule() -> Rule {
    Rule::Gauss3
}

impl GridConfig {
    pub fn grid(self) -> Result<QuadratureGrid> {
        let (cells, rule) = match self {
            GridConfig::Cells(c) => (c, Rule::Gauss3),
            GridConfig::Full { cells, rule } => (cells, rule),
        };
        let rule = match rule {
            Rule::Gauss3 => QuadratureRule::Gauss3,
            Rule::Midpoint => QuadratureRule::Midpoint,
        };
        QuadratureGrid::new(cells, rule)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// theorem2: bound on `||int Psi sigma||` and its refinement estimate.
    pub integral: Option<f64>,
    /// gauss_ostrogradskii: bound on `||lhs - rhs||`.
    pub divergence: Option<f64>,
    /// minkowski: relative deviation of the finest ratio from the area.
    pub minkowski: Option<f64>,
    /// covering: allowed factor between `N eps^2` and the area.
    pub covering: Option<f64>,
}

/// Everything an experiment run needs. Unset fields take the defaults
/// listed on [`RunConfig::resolved`]; unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: Option<u32>,
    pub experiment: Option<Experiment>,
    pub algebra: Option<AlgebraRef>,
    pub function: Option<String>,
    pub surface: Option<SurfaceRef>,
    pub domain: Option<String>,
    pub grid: Option<GridConfig>,
    pub epsilons: Option<Vec<f64>>,
    pub depth: Option<u32>,
    pub seed: Option<u64>,
    pub tolerances: Option<Tolerances>,
    /// Volume-integral resolution per axis.
    pub resolution: Option<usize>,
    /// Monte-Carlo probes per epsilon for Minkowski volumes.
    pub probes: Option<usize>,
    /// Point pairs per delta for the modulus of continuity.
    pub modulus_samples: Option<usize>,
    /// Combine the two patch terms of `int ||Psi|| ||sigma||` as patch1 minus
    /// patch2 (the closed-surface convention) instead of adding them.
    pub paper_literal_sigma_norm: Option<bool>,
}

impl RunConfig {
    /// Parses a config document; errors carry the line and column.
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| format!("config error at line {} column {}: {e}", e.line(), e.column()))?;
        if let Some(v) = config.version.filter(|&v| v != CONFIG_VERSION) {
            return Err(format!("config version {v} is not supported (expected {CONFIG_VERSION})"));
        }
        Ok(config)
    }

    pub fn from_path(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    /// Values of `other` that are set win.
    pub fn overridden_by(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f; })* };
        }
        take!(
            version, experiment, algebra, function, surface, domain, grid, epsilons, depth, seed, tolerances,
            resolution, probes, modulus_samples, paper_literal_sigma_norm
        );
        self
    }

    /// Defaults: algebra `h3`, function `square`, surface `sphere`, domain
    /// `cube`, grid 32 cells of gauss3, depth 3, seed 0, resolution 64,
    /// 200000 probes, 20000 modulus samples; epsilons 1/8, 1/16, 1/32
    /// (Minkowski adds 1/64); tolerances 1e-5 integral, 1e-6 divergence,
    /// 0.02 Minkowski, factor 4 covering.
    pub fn resolved(&self) -> std::result::Result<Resolved, String> {
        let experiment = self.experiment.ok_or("no experiment selected")?;
        let t = self.tolerances.clone().unwrap_or_default();
        let default_eps = match experiment {
            Experiment::Minkowski => vec![0.125, 0.0625, 0.03125, 0.015625],
            _ => vec![0.125, 0.0625, 0.03125],
        };
        Ok(Resolved {
            experiment,
            algebra: self.algebra.clone().unwrap_or(AlgebraRef::Name("h3".into())),
            function: self.function.clone(),
            surface: self.surface.clone().unwrap_or(SurfaceRef::Name("sphere".into())),
            domain: self.domain.clone().unwrap_or("cube".into()),
            grid: self.grid.unwrap_or(GridConfig::Cells(32)),
            epsilons: self.epsilons.clone().unwrap_or(default_eps),
            depth: self.depth.unwrap_or(3),
            seed: self.seed.unwrap_or(0),
            resolution: self.resolution.unwrap_or(64),
            probes: self.probes.unwrap_or(200_000),
            modulus_samples: self.modulus_samples.unwrap_or(20_000),
            integral_tolerance: t.integral.unwrap_or(1e-5),
            divergence_tolerance: t.divergence.unwrap_or(1e-6),
            minkowski_tolerance: t.minkowski.unwrap_or(0.02),
            covering_factor: t.covering.unwrap_or(4.0),
            sigma_norm: if self.paper_literal_sigma_norm.unwrap_or(false) {
                SigmaNormVariant::PaperLiteral
            } else {
                SigmaNormVariant::Sum
            },
        })
    }
}

/// A config with every default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub experiment: Experiment,
    pub algebra: AlgebraRef,
    pub function: Option<String>,
    pub surface: SurfaceRef,
    pub domain: String,
    pub grid: GridConfig,
    pub epsilons: Vec<f64>,
    pub depth: u32,
    pub seed: u64,
    pub resolution: usize,
    pub probes: usize,
    pub modulus_samples: usize,
    pub integral_tolerance: f64,
    pub divergence_tolerance: f64,
    pub minkowski_tolerance: f64,
    pub covering_factor: f64,
    pub sigma_norm: SigmaNormVariant,
}

pub fn load_algebra(r: &AlgebraRef, user_dir: Option<&Path>) -> Result<Algebra> {
    match r {
        AlgebraRef::Name(name) => algebra_by_name(name, user_dir),
        AlgebraRef::Inline(value) => Algebra::new(AlgebraSpec::from_json(&value.to_string())?),
    }
}

pub fn load_surface(r: &SurfaceRef) -> Result<ClosedSurface> {
    match r {
        SurfaceRef::Name(name) => surface_by_name(name),
        SurfaceRef::Expressions { label, patch1, patch2 } => expression_surface(
            label,
            [&patch1[0], &patch1[1], &patch1[2]],
            [&patch2[0], &patch2[1], &patch2[2]],
        ),
    }
}

/// Sampling and reference area for the roughness measures.
fn roughness_target(r: &SurfaceRef, spacing: f64, grid: &QuadratureGrid) -> Result<(String, BoundarySampling, f64)> {
    if matches!(r, SurfaceRef::Name(n) if n == "square") {
        let patch = flat_square_patch();
        let area = lebesgue_area(&patch, grid)?.value;
        return Ok(("square".into(), BoundarySampling::from_patch(&patch, spacing)?, area));
    }
    let s = load_surface(r)?;
    let area = surface_area(&s, grid)?.value;
    Ok((s.label().to_string(), BoundarySampling::from_surface(&s, spacing)?, area))
}

/// Runs the selected experiment.
pub fn run(config: &Resolved, user_dir: Option<&Path>) -> Result<VerificationReport> {
    let grid = config.grid.grid()?;
    let algebra = || load_algebra(&config.algebra, user_dir);
    let function = |algebra: &Algebra, default: &str| function_by_name(config.function.as_deref().unwrap_or(default), algebra);
    match config.experiment {
        Experiment::Lemma1 => harness::lemma1_check(&load_surface(&config.surface)?, &grid),
        Experiment::Lemma2 => {
            let a = algebra()?;
            let c = match &config.function {
                Some(name) if name.starts_with("constant:") => function_by_name(name, &a)?,
                Some(name) => return Err(Error::Domain(format!("lemma2 needs a constant function, got '{name}'"))),
                None => {
                    let unit = a.unit().unwrap_or_else(|| a.basis(0));
                    hypercauchy::hyperfun::HyperFunction::constant(&a, unit)?.with_label("constant:unit")
                }
            };
            harness::lemma2_check(&c, &load_surface(&config.surface)?, &grid)
        }
        Experiment::Lemma3 => {
            let a = algebra()?;
            harness::lemma3_check_with(&function(&a, "square")?, &load_surface(&config.surface)?, &grid, config.sigma_norm)
        }
        Experiment::Theorem1 => {
            let a = algebra()?;
            let cube: Aabb = *domain_by_name(&config.domain)?.bbox();
            Ok(harness::theorem1_cascade(&function(&a, "square")?, &cube, config.depth, &grid, config.seed)?.0)
        }
        Experiment::Theorem2 => {
            let a = algebra()?;
            let options = Theorem2Options {
                tolerance: config.integral_tolerance,
                modulus_samples: config.modulus_samples,
                seed: config.seed,
            };
            harness::theorem2_experiment(
                &function(&a, "square")?,
                &domain_by_name(&config.domain)?,
                &config.epsilons,
                &grid,
                &options,
            )
        }
        Experiment::GaussOstrogradskii => {
            let a = algebra()?;
            harness::gauss_ostrogradskii_check(
                &function(&a, "coordinate:x")?,
                &domain_by_name(&config.domain)?,
                &grid,
                config.resolution,
                config.divergence_tolerance,
            )
        }
        Experiment::Minkowski => {
            let spacing = min_epsilon(&config.epsilons)? / 4.0;
            let (label, sampling, area) = roughness_target(&config.surface, spacing, &grid)?;
            harness::minkowski_experiment(
                &label,
                &sampling,
                &config.epsilons,
                config.probes,
                config.seed,
                area,
                config.minkowski_tolerance,
            )
        }
        Experiment::Covering => {
            let spacing = min_epsilon(&config.epsilons)? / 4.0;
            let (label, sampling, area) = roughness_target(&config.surface, spacing, &grid)?;
            harness::covering_experiment(&label, &sampling, &config.epsilons, area, config.covering_factor)
        }
    }
}

fn min_epsilon(eps: &[f64]) -> Result<f64> {
    eps.iter()
        .copied()
        .reduce(f64::min)
        .filter(|e| *e > 0.0)
        .ok_or_else(|| Error::Domain("epsilons must be a nonempty list of positive numbers".into()))
}

/// 17 significant digits, lowercase exponent.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Flat series of a report: `experiment,series,x,norm,bound,ratio`.
pub fn series_csv(report: &VerificationReport) -> String {
    let mut out = String::from("experiment,series,x,norm,bound,ratio\n");
    for r in &report.series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            report.experiment,
            r.label,
            fmt_num(r.x),
            fmt_num(r.norm),
            fmt_num(r.bound),
            fmt_num(r.ratio)
        );
    }
    out
}

/// Integral rows: `label,operation,component,grid,re,im,refinement`.
pub fn integral_csv(surface: &ClosedSurface, psi_label: &str, algebra: &Algebra, grid: &QuadratureGrid) -> Result<String> {
    let psi = function_by_name(psi_label, algebra)?;
    let r = sigma_integral(&psi, surface, grid)?;
    let area = surface_area(surface, grid)?;
    let mut out = String::from("label,operation,component,grid,re,im,refinement\n");
    for (k, c) in r.value.coords().iter().enumerate() {
        let _ = writeln!(
            out,
            "{},sigma:{},e{},{},{},{},{}",
            surface.label(),
            psi.label(),
            k + 1,
            grid.cells,
            fmt_num(c.re),
            fmt_num(c.im),
            fmt_num(r.refinement_estimate)
        );
    }
    let _ = writeln!(
        out,
        "{},area,-,{},{},{},{}",
        surface.label(),
        grid.cells,
        fmt_num(area.value),
        fmt_num(0.0),
        fmt_num(area.refinement_estimate)
    );
    Ok(out)
}

/// Writes `report.json` and `series.csv` into `dir`.
pub fn write_report(dir: &Path, report: &VerificationReport) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    let csv = dir.join("series.csv");
    std::fs::write(&json, report.to_json() + "\n")?;
    std::fs::write(&csv, series_csv(report))?;
    Ok((json, csv))
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Precondition(_) => 2,
        Error::Structural(_) | Error::Numeric(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let e = RunConfig::from_json("{\n  \"experiment\": \"lemma1\",\n  \"gird\": 8\n}").unwrap_err();
        assert!(e.contains("line 3"), "{e}");
        assert!(e.contains("gird"), "{e}");
    }

    #[test]
    fn grid_forms() {
        let c = RunConfig::from_json(r#"{"experiment":"lemma1","grid":{"cells":4,"rule":"midpoint"}}"#).unwrap();
        let g = c.resolved().unwrap().grid.grid().unwrap();
        assert_eq!((g.cells, g.rule), (4, QuadratureRule::Midpoint));
        let c = RunConfig::from_json(r#"{"experiment":"lemma1","grid":8}"#).unwrap();
        assert_eq!(c.resolved().unwrap().grid.grid().unwrap().cells, 8);
    }

    #[test]
    fn overrides_win() {
        let base = RunConfig::from_json(r#"{"experiment":"lemma1","seed":3,"depth":2}"#).unwrap();
        let cli = RunConfig { seed: Some(9), ..Default::default() };
        let r = base.overridden_by(cli).resolved().unwrap();
        assert_eq!((r.seed, r.depth), (9, 2));
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-4.625), "-4.6250000000000000e0");
    }
}
