//! Phase-space coordinates, the product metric, and the map zoo.
//!
//! Every system lives on a product `X × Y` where each factor is a finite
//! product of circles (`R/Z`, arc-length metric) and closed intervals
//! (Euclidean metric). Distances combine Euclidean-wise across all
//! coordinates.
//!
//! Linear circle maps `x ↦ d·x mod 1` run on [`FixedCircle`], an exact
//! rational representation `k / m`. Everything nonlinear is plain `f64`.

mod system;
mod zoo;

pub use system::{BaseDescriptor, System, SystemDescriptor};
pub use zoo::{
    alpha_profile, lsv_branch, step_base_expanding, step_circle_extension, step_gouezel,
    step_lsv, step_viana, AlphaProfile, CircleExtension, Cocycle, Dynamics,
    Escaped, Gouezel, LinearExpanding, Lsv, PerturbedExpanding, ScalarBase, SkewProduct, Viana,
    VianaParams,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Default modulus of exact circle coordinates, `2^64 - 59` (prime).
pub const MODULUS: u64 = u64::MAX - 58;

/// `2^64 mod MODULUS`.
const FOLD: u128 = 59;

/// Largest `f64` strictly below one.
pub(crate) const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// A point `k / m` of the circle held exactly.
///
/// Random starts use `m = MODULUS`; rational starts such as `1/3` keep their
/// own denominator so short periodic orbits stay periodic.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFixed")]
pub struct FixedCircle {
    num: u64,
    den: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixed {
    num: u64,
    den: u64,
}

impl TryFrom<RawFixed> for FixedCircle {
    type Error = Error;

    fn try_from(r: RawFixed) -> Result<Self> {
        FixedCircle::rational(r.num, r.den)
    }
}

impl FixedCircle {
    pub const ZERO: FixedCircle = FixedCircle {
        num: 0,
        den: MODULUS,
    };

    /// `k / MODULUS`; `k` must be below the modulus.
    pub fn from_residue(k: u64) -> Result<Self> {
        Self::rational(k, MODULUS)
    }

    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("circle denominator must be positive"));
        }
        Ok(FixedCircle {
            num: num % den,
            den,
        })
    }

    /// Nearest `k / MODULUS` to `x mod 1`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("circle coordinate {x} is not finite")));
        }
        let x = x.rem_euclid(1.0);
        let k = (x * MODULUS as f64).round();
        // `as` saturates; values at the top wrap around to zero.
        let k = if k >= MODULUS as f64 { 0 } else { k as u64 };
        Ok(FixedCircle {
            num: k,
            den: MODULUS,
        })
    }

    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        FixedCircle {
            num: rng.gen_range(0..MODULUS),
            den: MODULUS,
        }
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    /// Real value in `[0, 1)`.
    #[inline]
    pub fn value(self) -> f64 {
        let v = self.num as f64 / self.den as f64;
        if v >= 1.0 {
            BELOW_ONE
        } else {
            v
        }
    }

    /// `d·self mod 1`, exact.
    #[inline]
    pub fn times(self, d: u64) -> Self {
        let num = if self.den == MODULUS {
            mul_mod_p(self.num, d)
        } else {
            ((self.num as u128 * d as u128) % self.den as u128) as u64
        };
        FixedCircle { num, den: self.den }
    }

    /// Arc distance; exact up to one final rounding when the denominators agree.
    #[inline]
    pub fn arc(self, other: FixedCircle) -> f64 {
        if self.den == other.den {
            let diff = if self.num >= other.num {
                self.num - other.num
            } else {
                self.num + (self.den - other.num)
            };
            let short = diff.min(self.den - diff);
            short as f64 / self.den as f64
        } else {
            circle_arc(self.value(), other.value())
        }
    }
}

impl fmt::Debug for FixedCircle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} (≈{})", self.num, self.den, self.value())
    }
}

/// `k·d mod MODULUS` for `d < 2^32`, using `2^64 ≡ 59`.
#[inline]
fn mul_mod_p(k: u64, d: u64) -> u64 {
    debug_assert!(d < 1 << 32);
    let prod = k as u128 * d as u128;
    let mut t = (prod as u64) as u128 + (prod >> 64) * FOLD;
    if t >= MODULUS as u128 {
        t -= MODULUS as u128;
    }
    t as u64
}

/// A floating-point circle coordinate in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64")]
pub struct CircleCoord(f64);

impl TryFrom<f64> for CircleCoord {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        if x.is_finite() {
            Ok(CircleCoord::new(x))
        } else {
            Err(Error::invalid(format!("circle coordinate {x} is not finite")))
        }
    }
}

impl CircleCoord {
    pub fn new(x: f64) -> Self {
        CircleCoord(wrap_unit(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A point of a closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct IntervalCoord(f64);

impl IntervalCoord {
    pub fn new(x: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo..=hi).contains(&x) {
            return Err(Error::invalid(format!("{x} outside [{lo}, {hi}]")));
        }
        Ok(IntervalCoord(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Reduce to `[0, 1)`.
#[inline]
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[inline]
pub(crate) fn circle_arc(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "kebab-case")]
pub enum Axis {
    Circle,
    Interval { lo: f64, hi: f64 },
}

/// Coordinate layout of a phase space: base axes then fiber axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub base: Vec<Axis>,
    pub fiber: Vec<Axis>,
}

impl Geometry {
    pub fn base_dim(&self) -> usize {
        self.base.len()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.len()
    }

    /// `D = N + M`.
    pub fn dimension(&self) -> usize {
        self.base.len() + self.fiber.len()
    }

    pub fn axes(&self) -> impl Iterator<Item = &Axis> {
        self.base.iter().chain(self.fiber.iter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coord {
    Fixed(FixedCircle),
    Circle(CircleCoord),
    Interval(IntervalCoord),
}

impl Coord {
    pub fn value(&self) -> f64 {
        match *self {
            Coord::Fixed(c) => c.value(),
            Coord::Circle(c) => c.value(),
            Coord::Interval(c) => c.value(),
        }
    }

    fn fits(&self, axis: &Axis) -> bool {
        matches!(
            (self, axis),
            (Coord::Fixed(_) | Coord::Circle(_), Axis::Circle)
                | (Coord::Interval(_), Axis::Interval { .. })
        )
    }
}

/// A point `(base, fiber)` of the product phase space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub base: Vec<Coord>,
    #[serde(default)]
    pub fiber: Vec<Coord>,
}

impl ProductPoint {
    pub fn new(base: Vec<Coord>, fiber: Vec<Coord>) -> Self {
        ProductPoint { base, fiber }
    }

    pub fn coords(&self) -> impl Iterator<Item = &Coord> {
        self.base.iter().chain(self.fiber.iter())
    }

    /// Drop the fiber.
    pub fn project_base(&self) -> ProductPoint {
        ProductPoint {
            base: self.base.clone(),
            fiber: Vec::new(),
        }
    }

    pub(crate) fn check(&self, geometry: &Geometry) -> Result<()> {
        let shape_ok = self.base.len() == geometry.base.len()
            && self.fiber.len() == geometry.fiber.len()
            && self.coords().zip(geometry.axes()).all(|(c, a)| c.fits(a));
        if shape_ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "point {self:?} does not match geometry {geometry:?}"
            )))
        }
    }
}

fn coord_distance(a: &Coord, b: &Coord) -> Result<f64> {
    Ok(match (a, b) {
        (Coord::Fixed(x), Coord::Fixed(y)) => x.arc(*y),
        (Coord::Fixed(_) | Coord::Circle(_), Coord::Fixed(_) | Coord::Circle(_)) => {
            circle_arc(a.value(), b.value())
        }
        (Coord::Interval(x), Coord::Interval(y)) => (x.value() - y.value()).abs(),
        _ => {
            return Err(Error::invalid(format!(
                "cannot compare circle and interval coordinates {a:?}, {b:?}"
            )))
        }
    })
}

/// Squared distance within one factor (`X` or `Y`).
fn factor_dist_sq(a: &[Coord], b: &[Coord]) -> Result<f64> {
    a.iter().zip(b).try_fold(0.0, |acc, (x, y)| {
        let d = coord_distance(x, y)?;
        Ok(acc + d * d)
    })
}

/// `sqrt(d_X² + d_Y²)`.
pub fn product_metric(p: &ProductPoint, q: &ProductPoint, geometry: &Geometry) -> Result<f64> {
    p.check(geometry)?;
    q.check(geometry)?;
    let dx2 = factor_dist_sq(&p.base, &q.base)?;
    let dy2 = factor_dist_sq(&p.fiber, &q.fiber)?;
    Ok((dx2 + dy2).sqrt())
}

/// Base-only distance `d_X`.
pub fn base_metric(p: &ProductPoint, q: &ProductPoint, geometry: &Geometry) -> Result<f64> {
    p.check(geometry)?;
    q.check(geometry)?;
    Ok(factor_dist_sq(&p.base, &q.base)?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle_geom(fiber: bool) -> Geometry {
        Geometry {
            base: vec![Axis::Circle],
            fiber: if fiber { vec![Axis::Circle] } else { vec![] },
        }
    }

    fn cpt(x: f64, th: Option<f64>) -> ProductPoint {
        ProductPoint::new(
            vec![Coord::Circle(CircleCoord::new(x))],
            th.map(|t| vec![Coord::Circle(CircleCoord::new(t))])
                .unwrap_or_default(),
        )
    }

    #[test]
    fn metric_identity() {
        let g = circle_geom(true);
        let p = cpt(0.37, Some(0.81));
        assert_eq!(product_metric(&p, &p, &g).unwrap(), 0.0);
    }

    #[test]
    fn metric_three_four_five() {
        let g = circle_geom(true);
        let d = product_metric(&cpt(0.0, Some(0.0)), &cpt(0.3, Some(0.4)), &g).unwrap();
        assert!((d - 0.5).abs() < 1e-15, "{d}");
    }

    #[test]
    fn metric_wraps_around() {
        let g = circle_geom(false);
        let d = product_metric(&cpt(0.9, None), &cpt(0.1, None), &g).unwrap();
        assert!((d - 0.2).abs() < 1e-15, "{d}");
    }

    #[test]
    fn metric_rejects_mismatched_geometry() {
        let g = circle_geom(true);
        assert!(product_metric(&cpt(0.1, None), &cpt(0.2, Some(0.3)), &g).is_err());
        let gi = Geometry {
            base: vec![Axis::Interval { lo: 0.0, hi: 1.0 }],
            fiber: vec![],
        };
        assert!(product_metric(&cpt(0.1, None), &cpt(0.2, None), &gi).is_err());
    }

    #[test]
    fn fixed_circle_rational_orbit_is_exact() {
        let third = FixedCircle::rational(1, 3).unwrap();
        let two_thirds = third.times(2);
        assert_eq!(two_thirds, FixedCircle::rational(2, 3).unwrap());
        assert_eq!(two_thirds.times(2), third);
        assert_eq!(third.arc(third), 0.0);
    }

    #[test]
    fn mul_mod_p_matches_u128_reference() {
        let samples = [0, 1, 2, MODULUS - 1, MODULUS / 2, MODULUS / 3 + 7, 1 << 63];
        for &k in &samples {
            for d in [2u64, 3, 4, 16, 1 << 31] {
                let expect = ((k as u128 * d as u128) % MODULUS as u128) as u64;
                assert_eq!(mul_mod_p(k, d), expect, "k={k} d={d}");
            }
        }
    }

    #[test]
    fn value_stays_below_one() {
        let top = FixedCircle::from_residue(MODULUS - 1).unwrap();
        assert!(top.value() < 1.0);
        assert_eq!(wrap_unit(-1e-300), 0.0);
    }

    fn arb_circle_point() -> impl Strategy<Value = ProductPoint> {
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, t)| cpt(x, Some(t)))
    }

    proptest! {
        #[test]
        fn metric_axioms(p in arb_circle_point(), q in arb_circle_point(), r in arb_circle_point()) {
            let g = circle_geom(true);
            let pq = product_metric(&p, &q, &g).unwrap();
            let qp = product_metric(&q, &p, &g).unwrap();
            let pr = product_metric(&p, &r, &g).unwrap();
            let rq = product_metric(&r, &q, &g).unwrap();
            prop_assert_eq!(pq, qp);
            prop_assert!(pq <= pr + rq + 4.0 * f64::EPSILON * (pr + rq).max(f64::MIN_POSITIVE));
            prop_assert_eq!(pq == 0.0, p == q);
        }

        #[test]
        fn fixed_times_matches_float(k in 0..MODULUS, d in 2u64..20) {
            let x = FixedCircle::from_residue(k).unwrap();
            let expect = wrap_unit(d as f64 * x.value());
            let got = x.times(d).value();
            prop_assert!(circle_arc(expect, got) < 1e-14);
        }
    }

    #[test]
    fn deserialized_coordinates_are_validated() {
        let p: ProductPoint =
            serde_json::from_str(r#"{"base":[{"fixed":{"num":4,"den":3}}],"fiber":[{"circle":1.25}]}"#)
                .unwrap();
        assert_eq!(p.base[0], Coord::Fixed(FixedCircle::rational(1, 3).unwrap()));
        assert_eq!(p.fiber[0].value(), 0.25);
        assert!(serde_json::from_str::<FixedCircle>(r#"{"num":1,"den":0}"#).is_err());
        assert!(serde_json::from_str::<FixedCircle>(r#"{"num":1,"den":3,"x":1}"#).is_err());
    }
}
