//! Experiment configuration files.
//!
//! One experiment per file, TOML or JSON (by extension). Unknown keys are
//! rejected. [`ExperimentConfig::resolve`] fills every default so the echo
//! written next to the results re-ingests to the same configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{PairDiagnostic, TargetSpec};
use crate::hypotheses::{FitRange, HypothesisParams, TestFunction};
use crate::maps::{ProductPoint, System, SystemDescriptor};

pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_KS_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub system: SystemDescriptor,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Evt(EvtConfig),
    EnMeasure(EnMeasureConfig),
    Decay(DecayConfig),
    Density(DensityConfig),
    Thresholds(ThresholdsConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Evt(_) => "evt",
            Experiment::EnMeasure(_) => "en-measure",
            Experiment::Decay(_) => "decay",
            Experiment::Density(_) => "density",
            Experiment::Thresholds(_) => "thresholds",
        }
    }
}

/// Either an explicit list or an inclusive arithmetic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VGrid {
    List(Vec<f64>),
    Range(GridRange),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl VGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            VGrid::List(ref v) => Ok(v.clone()),
            VGrid::Range(GridRange { start, stop, step }) => {
                if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(Error::invalid(format!(
                        "v grid range needs start ≤ stop and step > 0 (got {start}..{stop} by {step})"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    Point(ProductPoint),
    Sampled {
        #[serde(default)]
        burn_in: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvtConfig {
    pub n: u64,
    /// Ensemble size.
    pub ensemble: usize,
    #[serde(default)]
    pub burn_in: Option<u64>,
    pub target: TargetConfig,
    pub v_grid: VGrid,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub diagnostic: Option<PairDiagnostic>,
    #[serde(default)]
    pub ks_tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnMeasureConfig {
    pub n_list: Vec<u64>,
    /// `g(n) = ⌈n^{Dγ′}⌉`; exclusive with `g`.
    #[serde(default)]
    pub gamma_prime: Option<f64>,
    /// Fixed horizon.
    #[serde(default)]
    pub g: Option<u64>,
    /// `D` in the horizon; defaults to the system dimension.
    #[serde(default)]
    pub dimension: Option<usize>,
    /// Measure `Ẽ_n` on the full product instead of `E_n` on the base.
    #[serde(default)]
    pub product: bool,
    pub samples: usize,
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub fit_range: Option<FitRange>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub upsilon: TestFunction,
    pub psi: TestFunction,
    pub j_list: Vec<u64>,
    pub samples: usize,
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub fit_range: Option<FitRange>,
    #[serde(default)]
    pub holder_exponent: Option<f64>,
    /// Compare the fitted exponent with the threshold for these parameters.
    #[serde(default)]
    pub conditions: Option<HypothesisParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityTarget {
    pub point: ProductPoint,
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub ensemble: usize,
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub points_per_member: Option<u64>,
    pub targets: Vec<DensityTarget>,
    /// Fit the density against the distance of each target to this point.
    #[serde(default)]
    pub reference: Option<ProductPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub params: HypothesisParams,
    #[serde(default)]
    pub dimension: Option<usize>,
    /// Fiber exponent bound to check; defaults to `α_max` of a Gouëzel system.
    #[serde(default)]
    pub alpha_max: Option<f64>,
}

/// Parse a configuration file; `.json` files are read as JSON, anything
/// else as TOML.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.extension().is_some_and(|e| e == "json"))
}

pub fn parse_config(text: &str, json: bool) -> Result<ExperimentConfig> {
    if json {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

fn reference_burn_in(system: &System) -> u64 {
    if system.preserves_reference() {
        0
    } else {
        system.default_burn_in()
    }
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        self.experiment.kind()
    }

    /// Fill every default. Fails on the first violation; see
    /// [`ExperimentConfig::violations`] for the full list.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let problems = self.violations();
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let system = self.system.build()?;
        let dim = system.dimension();
        let mut out = self.clone();
        out.out_dir.get_or_insert_with(|| PathBuf::from(DEFAULT_OUT_DIR));
        match &mut out.experiment {
            Experiment::Evt(c) => {
                c.burn_in.get_or_insert(system.default_burn_in());
                if let TargetConfig::Sampled { burn_in } = &mut c.target {
                    burn_in.get_or_insert(system.default_burn_in());
                }
                c.v_grid = VGrid::List(c.v_grid.values()?);
                c.ks_tolerance.get_or_insert(DEFAULT_KS_TOLERANCE);
            }
            Experiment::EnMeasure(c) => {
                if c.gamma_prime.is_some() {
                    c.dimension.get_or_insert(dim);
                }
                let sampled = if c.product {
                    system.clone()
                } else {
                    self.system.base_descriptor().build()?
                };
                c.burn_in.get_or_insert(reference_burn_in(&sampled));
            }
            Experiment::Decay(c) => {
                c.burn_in.get_or_insert(reference_burn_in(&system));
                c.holder_exponent.get_or_insert(1.0);
                if let Some(p) = &mut c.conditions {
                    if p.kappa.is_none() {
                        p.kappa = p.kappa();
                    }
                }
            }
            Experiment::Density(c) => {
                c.burn_in.get_or_insert(reference_burn_in(&system));
                c.points_per_member.get_or_insert(1);
                for t in &mut c.targets {
                    t.point = system.normalize(&t.point)?;
                }
                if let Some(r) = &mut c.reference {
                    *r = system.normalize(r)?;
                }
            }
            Experiment::Thresholds(c) => {
                c.dimension.get_or_insert(dim);
                if c.alpha_max.is_none() {
                    if let SystemDescriptor::Gouezel { alpha_max, .. } = self.system {
                        c.alpha_max = Some(alpha_max);
                    }
                }
                if c.params.kappa.is_none() {
                    c.params.kappa = c.params.kappa();
                }
            }
        }
        Ok(out)
    }

    /// Every constraint violation, without running anything.
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.system.violations();
        let system = match self.system.build() {
            Ok(s) => s,
            Err(_) => return v,
        };
        let dim = system.dimension();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        match &self.experiment {
            Experiment::Evt(c) => {
                need(c.ensemble > 0, "evt ensemble must be at least 1".into());
                match c.v_grid.values() {
                    Ok(g) => {
                        need(!g.is_empty(), "v grid is empty".into());
                        need(
                            g.windows(2).all(|w| w[1] > w[0]),
                            "v grid must be strictly increasing".into(),
                        );
                    }
                    Err(e) => need(false, e.to_string()),
                }
                radii_violations(&c.radii, &mut need);
                if let TargetConfig::Point(p) = &c.target {
                    if let Err(e) = system.normalize(p) {
                        need(false, format!("target: {e}"));
                    }
                }
                if let Some(d) = c.diagnostic {
                    need(d.gamma_prime > 0.0, "diagnostic γ′ must be positive".into());
                }
                if let Some(t) = c.ks_tolerance {
                    need(t > 0.0, "ks_tolerance must be positive".into());
                }
            }
            Experiment::EnMeasure(c) => {
                need(
                    !c.n_list.is_empty() && !c.n_list.contains(&0),
                    "n_list must be non-empty with every n ≥ 1".into(),
                );
                match (c.gamma_prime, c.g) {
                    (Some(gp), None) => need(gp > 0.0, format!("γ′ > 0 (got {gp})")),
                    (None, Some(g)) => need(g >= 1, "g must be at least 1".into()),
                    _ => need(false, "exactly one of gamma_prime or g is required".into()),
                }
                need(c.samples > 0, "samples must be at least 1".into());
                need(
                    !c.product || system.geometry().fiber_dim() > 0,
                    "product = true needs a skew product".into(),
                );
                if let Some(d) = c.dimension {
                    need(d > 0, "dimension must be at least 1".into());
                }
            }
            Experiment::Decay(c) => {
                for (name, f) in [("upsilon", &c.upsilon), ("psi", &c.psi)] {
                    if let Err(e) = f.validate(dim) {
                        need(false, format!("{name}: {e}"));
                    }
                }
                need(!c.j_list.is_empty(), "j_list is empty".into());
                need(c.samples >= 2, "samples must be at least 2".into());
                if let Some(a) = c.holder_exponent {
                    need(a > 0.0 && a <= 1.0, format!("0 < α̂ ≤ 1 (got {a})"));
                }
                if let Some(p) = &c.conditions {
                    v.extend(p.violations(dim));
                }
            }
            Experiment::Density(c) => {
                need(c.ensemble > 0, "density ensemble must be at least 1".into());
                need(!c.targets.is_empty(), "at least one density target is required".into());
                if let Some(p) = c.points_per_member {
                    need(p >= 1, "points_per_member must be at least 1".into());
                }
                for (i, t) in c.targets.iter().enumerate() {
                    if let Err(e) = system.normalize(&t.point) {
                        need(false, format!("target {i}: {e}"));
                    }
                    let mut inner = Vec::new();
                    radii_violations(&t.radii, &mut |ok, m| {
                        if !ok {
                            inner.push(m)
                        }
                    });
                    for m in inner {
                        need(false, format!("target {i}: {m}"));
                    }
                }
                if let Some(r) = &c.reference {
                    if let Err(e) = system.normalize(r) {
                        need(false, format!("reference: {e}"));
                    }
                }
            }
            Experiment::Thresholds(c) => {
                let d = c.dimension.unwrap_or(dim);
                need(d > 0, "dimension must be at least 1".into());
                if let Some(a) = c.alpha_max {
                    need(a > 0.0 && a < 1.0, format!("0 < α_max < 1 (got {a})"));
                }
                v.extend(c.params.violations(d));
            }
        }
        v
    }
}

fn radii_violations(radii: &[f64], need: &mut impl FnMut(bool, String)) {
    need(!radii.is_empty(), "at least one radius is required".into());
    need(
        radii.iter().all(|r| *r > 0.0 && r.is_finite()),
        "radii must be positive and finite".into(),
    );
    need(
        radii.windows(2).all(|w| w[1] < w[0]),
        "radii must be strictly decreasing".into(),
    );
}

/// Result of [`validate_config`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub path: PathBuf,
    pub valid: bool,
    pub violations: Vec<String>,
}

/// Parse and check a configuration file, listing every violation.
pub fn validate_config(path: &Path) -> ValidationReport {
    let violations = match load_config(path) {
        Ok(cfg) => cfg.violations(),
        Err(e) => vec![e.to_string()],
    };
    ValidationReport {
        path: path.to_path_buf(),
        valid: violations.is_empty(),
        violations,
    }
}

impl TargetConfig {
    pub(crate) fn to_spec(&self) -> TargetSpec {
        match self {
            TargetConfig::Point(p) => TargetSpec::Point(p.clone()),
            TargetConfig::Sampled { burn_in } => TargetSpec::Sampled {
                burn_in: burn_in.unwrap_or(0),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EVT: &str = r#"
        seed = 7

        [system]
        kind = "circle-extension"
        base = { kind = "linear-expanding", d = 3 }
        cocycle = { form = "trigonometric", amplitude = 0.5 }

        [experiment]
        kind = "evt"
        n = 1000
        ensemble = 100
        target = { sampled = {} }
        v_grid = { start = -1.0, stop = 3.0, step = 0.5 }
        radii = [0.05, 0.02]
    "#;

    #[test]
    fn resolves_defaults() {
        let cfg = parse_config(EVT, false).unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.out_dir, Some(PathBuf::from("out")));
        let Experiment::Evt(e) = &r.experiment else {
            panic!()
        };
        assert_eq!(e.burn_in, Some(1_000));
        assert_eq!(e.target, TargetConfig::Sampled { burn_in: Some(1_000) });
        let VGrid::List(g) = &e.v_grid else { panic!() };
        assert_eq!(g.len(), 9);
        assert_eq!((g[0], g[8]), (-1.0, 3.0));
        assert_eq!(e.ks_tolerance, Some(0.05));
    }

    #[test]
    fn resolved_config_round_trips_through_json() {
        let r = parse_config(EVT, false).unwrap().resolve().unwrap();
        let json = serde_json::to_string_pretty(&r).unwrap();
        let back = parse_config(&json, true).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.resolve().unwrap(), r);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = EVT.replace("radii = [0.05, 0.02]", "radii = [0.05]\nradius = 1");
        assert!(matches!(parse_config(&bad, false), Err(Error::Config(_))));
        let bad = EVT.replace("seed = 7", "seed = 7\ncolour = 1");
        assert!(parse_config(&bad, false).is_err());
    }

    #[test]
    fn violations_are_collected() {
        let src = r#"
            [system]
            kind = "gouezel"
            alpha_min = 0.2
            alpha_max = 0.35

            [experiment]
            kind = "thresholds"
            params = { gamma_prime = 0.6, beta = 1.0, delta = 1.0, kappa = 2.0 }
        "#;
        let v = parse_config(src, false).unwrap().violations();
        assert!(v.iter().any(|m| m.contains("α_max < 1.5·α_min")), "{v:?}");

        let src = r#"
            [system]
            kind = "linear-expanding"
            d = 2

            [experiment]
            kind = "thresholds"
            dimension = 2
            params = { gamma_prime = 0.6, beta = 1.0, delta = 1.0, kappa = 2.0 }
        "#;
        let v = parse_config(src, false).unwrap().violations();
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("γ′ < β/D"));

        let src = src.replace("gamma_prime = 0.6", "gamma_prime = 0.4");
        assert!(parse_config(&src, false).unwrap().violations().is_empty());
    }

    #[test]
    fn en_measure_needs_one_window() {
        let src = r#"
            [system]
            kind = "linear-expanding"
            d = 2

            [experiment]
            kind = "en-measure"
            n_list = [10]
            gamma_prime = 0.2
            g = 3
            samples = 10
        "#;
        let v = parse_config(src, false).unwrap().violations();
        assert!(v[0].contains("exactly one"));
    }
}
