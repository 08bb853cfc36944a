use serde::{Deserialize, Serialize};

use super::zoo::{
    AlphaProfile, CircleExtension, Cocycle, Dynamics, Gouezel, LinearExpanding, Lsv,
    PerturbedExpanding, Viana, VianaParams,
};
use super::{Geometry, ProductPoint};
use crate::error::{Error, Result};

/// A one-dimensional base map usable under a circle extension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseDescriptor {
    LinearExpanding { d: u64 },
    #[serde(rename = "piecewise-c2")]
    PiecewiseC2 { d: u32, eps: f64 },
    Lsv { omega: f64 },
}

/// Serializable description of a system: map kind and every parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemDescriptor {
    LinearExpanding {
        d: u64,
    },
    #[serde(rename = "piecewise-c2")]
    PiecewiseC2 {
        d: u32,
        eps: f64,
    },
    Lsv {
        omega: f64,
    },
    CircleExtension {
        base: BaseDescriptor,
        cocycle: Cocycle,
    },
    Gouezel {
        alpha_min: f64,
        alpha_max: f64,
        #[serde(default)]
        center: f64,
    },
    Viana {
        #[serde(default = "VianaParams::default_d")]
        d: u64,
        #[serde(default = "VianaParams::default_a0")]
        a0: f64,
        #[serde(default = "VianaParams::default_alpha")]
        alpha: f64,
        #[serde(default = "VianaParams::default_interval")]
        interval: [f64; 2],
    },
}

impl From<BaseDescriptor> for SystemDescriptor {
    fn from(b: BaseDescriptor) -> Self {
        match b {
            BaseDescriptor::LinearExpanding { d } => SystemDescriptor::LinearExpanding { d },
            BaseDescriptor::PiecewiseC2 { d, eps } => SystemDescriptor::PiecewiseC2 { d, eps },
            BaseDescriptor::Lsv { omega } => SystemDescriptor::Lsv { omega },
        }
    }
}

impl SystemDescriptor {
    /// The flagship `(3x mod 1, θ + x mod 1)` system.
    pub fn flagship() -> Self {
        SystemDescriptor::CircleExtension {
            base: BaseDescriptor::LinearExpanding { d: 3 },
            cocycle: Cocycle::linear(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SystemDescriptor::LinearExpanding { .. } => "linear-expanding",
            SystemDescriptor::PiecewiseC2 { .. } => "piecewise-c2",
            SystemDescriptor::Lsv { .. } => "lsv",
            SystemDescriptor::CircleExtension { .. } => "circle-extension",
            SystemDescriptor::Gouezel { .. } => "gouezel",
            SystemDescriptor::Viana { .. } => "viana",
        }
    }

    pub fn base_dim(&self) -> usize {
        1
    }

    pub fn fiber_dim(&self) -> usize {
        match self {
            SystemDescriptor::LinearExpanding { .. }
            | SystemDescriptor::PiecewiseC2 { .. }
            | SystemDescriptor::Lsv { .. } => 0,
            _ => 1,
        }
    }

    /// `D = N + M`.
    pub fn dimension(&self) -> usize {
        self.base_dim() + self.fiber_dim()
    }

    /// Descriptor of the base map `T` (the system itself when it has no fiber).
    pub fn base_descriptor(&self) -> SystemDescriptor {
        match self {
            SystemDescriptor::CircleExtension { base, .. } => base.clone().into(),
            SystemDescriptor::Gouezel { .. } => SystemDescriptor::LinearExpanding { d: 4 },
            SystemDescriptor::Viana { d, .. } => SystemDescriptor::LinearExpanding { d: *d },
            other => other.clone(),
        }
    }

    /// Every parameter-constraint violation, without building anything.
    pub fn violations(&self) -> Vec<String> {
        match self.build() {
            Ok(_) => Vec::new(),
            Err(Error::InvalidArgument(msg)) => msg.split("; ").map(str::to_owned).collect(),
            Err(e) => vec![e.to_string()],
        }
    }

    pub fn build(&self) -> Result<System> {
        Ok(match self {
            SystemDescriptor::LinearExpanding { d } => System::Linear(LinearExpanding::new(*d)?),
            SystemDescriptor::PiecewiseC2 { d, eps } => {
                System::PiecewiseC2(PerturbedExpanding::new(*d, *eps)?)
            }
            SystemDescriptor::Lsv { omega } => System::Lsv(Lsv::new(*omega)?),
            SystemDescriptor::CircleExtension { base, cocycle } => match base {
                BaseDescriptor::LinearExpanding { d } => System::ExtLinear(CircleExtension::new(
                    LinearExpanding::new(*d)?,
                    cocycle.clone(),
                )?),
                BaseDescriptor::PiecewiseC2 { d, eps } => System::ExtPiecewiseC2(
                    CircleExtension::new(PerturbedExpanding::new(*d, *eps)?, cocycle.clone())?,
                ),
                BaseDescriptor::Lsv { omega } => {
                    System::ExtLsv(CircleExtension::new(Lsv::new(*omega)?, cocycle.clone())?)
                }
            },
            SystemDescriptor::Gouezel {
                alpha_min,
                alpha_max,
                center,
            } => System::Gouezel(Gouezel::new(AlphaProfile {
                alpha_min: *alpha_min,
                alpha_max: *alpha_max,
                center: *center,
            })?),
            SystemDescriptor::Viana {
                d,
                a0,
                alpha,
                interval,
            } => System::Viana(Viana::new(VianaParams {
                d: *d,
                a0: *a0,
                alpha: *alpha,
                interval: *interval,
            })?),
        })
    }
}

/// A validated, ready-to-iterate system.
#[derive(Clone, Debug)]
pub enum System {
    Linear(LinearExpanding),
    PiecewiseC2(PerturbedExpanding),
    Lsv(Lsv),
    ExtLinear(CircleExtension<LinearExpanding>),
    ExtPiecewiseC2(CircleExtension<PerturbedExpanding>),
    ExtLsv(CircleExtension<Lsv>),
    Gouezel(Gouezel),
    Viana(Viana),
}

/// Evaluate `$body` with `$s` bound to the concrete [`Dynamics`] inside a [`System`].
#[macro_export]
macro_rules! with_dynamics {
    ($sys:expr, $s:ident => $body:expr) => {
        match $sys {
            $crate::maps::System::Linear($s) => $body,
            $crate::maps::System::PiecewiseC2($s) => $body,
            $crate::maps::System::Lsv($s) => $body,
            $crate::maps::System::ExtLinear($s) => $body,
            $crate::maps::System::ExtPiecewiseC2($s) => $body,
            $crate::maps::System::ExtLsv($s) => $body,
            $crate::maps::System::Gouezel($s) => $body,
            $crate::maps::System::Viana($s) => $body,
        }
    };
}

/// Like [`with_dynamics!`] restricted to skew products; evaluates `$none`
/// for systems without a fiber.
#[macro_export]
macro_rules! with_skew {
    ($sys:expr, $s:ident => $body:expr, _ => $none:expr) => {
        match $sys {
            $crate::maps::System::ExtLinear($s) => $body,
            $crate::maps::System::ExtPiecewiseC2($s) => $body,
            $crate::maps::System::ExtLsv($s) => $body,
            $crate::maps::System::Gouezel($s) => $body,
            $crate::maps::System::Viana($s) => $body,
            _ => $none,
        }
    };
}

impl System {
    pub fn from_descriptor(desc: &SystemDescriptor) -> Result<Self> {
        desc.build()
    }

    pub fn geometry(&self) -> Geometry {
        with_dynamics!(self, s => s.geometry())
    }

    pub fn dimension(&self) -> usize {
        self.geometry().dimension()
    }

    /// One step on interchange points.
    pub fn step_point(&self, p: &ProductPoint) -> Result<ProductPoint> {
        with_dynamics!(self, s => {
            let state = s.from_point(p)?;
            let next = s.step(state).map_err(|_| Error::OrbitDiverged { step: 1 })?;
            Ok(s.to_point(&next))
        })
    }

    pub fn default_burn_in(&self) -> u64 {
        with_dynamics!(self, s => s.default_burn_in())
    }

    pub fn preserves_reference(&self) -> bool {
        with_dynamics!(self, s => s.preserves_reference())
    }

    /// Round-trip a point through the internal state (validates it against the phase space).
    pub fn normalize(&self, p: &ProductPoint) -> Result<ProductPoint> {
        with_dynamics!(self, s => Ok(s.to_point(&s.from_point(p)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_parses_from_toml() {
        let src = r#"
            kind = "circle-extension"
            base = { kind = "linear-expanding", d = 3 }
            cocycle = { form = "linear" }
        "#;
        let d: SystemDescriptor = toml::from_str(src).unwrap();
        assert_eq!(d, SystemDescriptor::flagship());
        assert_eq!(d.dimension(), 2);
        assert_eq!(d.base_descriptor(), SystemDescriptor::LinearExpanding { d: 3 });
    }

    #[test]
    fn descriptor_rejects_unknown_keys() {
        let src = r#"
            kind = "lsv"
            omega = 0.5
            colour = "blue"
        "#;
        assert!(toml::from_str::<SystemDescriptor>(src).is_err());
        let src = r#"
            kind = "viana"
            a0 = 1.8
            bogus = 1
        "#;
        assert!(toml::from_str::<SystemDescriptor>(src).is_err());
    }

    #[test]
    fn viana_defaults_fill_in() {
        let d: SystemDescriptor = toml::from_str("kind = \"viana\"").unwrap();
        let p = VianaParams::default();
        assert_eq!(
            d,
            SystemDescriptor::Viana {
                d: p.d,
                a0: p.a0,
                alpha: p.alpha,
                interval: p.interval
            }
        );
        let json = serde_json::to_string(&d).unwrap();
        let back: SystemDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn violations_are_listed() {
        let d = SystemDescriptor::Gouezel {
            alpha_min: 0.2,
            alpha_max: 0.35,
            center: 0.0,
        };
        let v = d.violations();
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("α_max < 1.5·α_min"));
        assert!(SystemDescriptor::Lsv { omega: 0.5 }.violations().is_empty());
    }

    #[test]
    fn step_point_round_trips() {
        let sys = SystemDescriptor::flagship().build().unwrap();
        let p = sys
            .normalize(&ProductPoint::new(
                vec![super::super::Coord::Circle(super::super::CircleCoord::new(0.5))],
                vec![super::super::Coord::Circle(super::super::CircleCoord::new(0.9))],
            ))
            .unwrap();
        let q = sys.step_point(&p).unwrap();
        assert!((q.base[0].value() - 0.5).abs() < 1e-15);
        assert!((q.fiber[0].value() - 0.4).abs() < 1e-15);
    }
}
