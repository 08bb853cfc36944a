use std::f64::consts::TAU;
use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    circle_arc, wrap_unit, Axis, CircleCoord, Coord, FixedCircle, Geometry, IntervalCoord,
    ProductPoint,
};
use crate::error::{Error, Result};

/// A fiber coordinate left its trapping interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Escaped;

/// A deterministic map on a product phase space.
///
/// `State` is the compact internal representation iterated in hot loops;
/// [`ProductPoint`] is the interchange form.
pub trait Dynamics: Send + Sync {
    type State: Copy + Send + Sync + Debug;

    fn geometry(&self) -> Geometry;

    fn step(&self, s: Self::State) -> Result<Self::State, Escaped>;

    /// Squared product metric.
    fn dist_sq(&self, a: &Self::State, b: &Self::State) -> f64;

    /// Draw from the reference measure (Lebesgue on every coordinate).
    fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn to_point(&self, s: &Self::State) -> ProductPoint;

    #[allow(clippy::wrong_self_convention)]
    fn from_point(&self, p: &ProductPoint) -> Result<Self::State>;

    /// Real value of coordinate `axis` (base axes first, then fiber axes).
    fn coordinate(&self, s: &Self::State, axis: usize) -> f64;

    /// Burn-in used when sampling the invariant measure.
    fn default_burn_in(&self) -> u64 {
        1_000
    }

    /// True when Lebesgue measure is invariant, so reference samples need no burn-in.
    fn preserves_reference(&self) -> bool {
        false
    }
}

/// A one-dimensional base map whose coordinate can feed a cocycle.
pub trait ScalarBase: Dynamics {
    fn value(&self, s: &Self::State) -> f64;
}

/// A skew product `f(x, θ) = (T x, u(x, θ))` with base map `T`.
pub trait SkewProduct: Dynamics {
    type Base: Dynamics;

    fn base(&self) -> &Self::Base;

    fn project(&self, s: &Self::State) -> <Self::Base as Dynamics>::State;
}

fn single<T>(coords: &[Coord], what: &str, pick: impl Fn(&Coord) -> Option<T>) -> Result<T> {
    match coords {
        [c] => pick(c).ok_or_else(|| Error::invalid(format!("{what}: wrong coordinate kind {c:?}"))),
        _ => Err(Error::invalid(format!(
            "{what}: expected one coordinate, got {}",
            coords.len()
        ))),
    }
}

fn fixed_of(c: &Coord) -> Option<FixedCircle> {
    match *c {
        Coord::Fixed(x) => Some(x),
        Coord::Circle(x) => FixedCircle::from_f64(x.value()).ok(),
        Coord::Interval(_) => None,
    }
}

fn circle_of(c: &Coord) -> Option<f64> {
    match *c {
        Coord::Fixed(x) => Some(x.value()),
        Coord::Circle(x) => Some(x.value()),
        Coord::Interval(_) => None,
    }
}

fn interval_of(c: &Coord) -> Option<f64> {
    match *c {
        Coord::Interval(x) => Some(x.value()),
        _ => None,
    }
}

fn unit_interval(x: f64) -> Coord {
    Coord::Interval(IntervalCoord(x))
}

// ---------------------------------------------------------------------------
// Base maps

/// `x ↦ d·x mod 1` on exact circle coordinates.
pub fn step_base_expanding(x: FixedCircle, d: u64) -> FixedCircle {
    x.times(d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearExpanding {
    d: u64,
}

impl LinearExpanding {
    pub fn new(d: u64) -> Result<Self> {
        if !(2..1 << 32).contains(&d) {
            return Err(Error::invalid(format!("expansion factor {d} not in [2, 2^32)")));
        }
        Ok(LinearExpanding { d })
    }

    pub fn factor(&self) -> u64 {
        self.d
    }
}

impl Dynamics for LinearExpanding {
    type State = FixedCircle;

    fn geometry(&self) -> Geometry {
        Geometry {
            base: vec![Axis::Circle],
            fiber: vec![],
        }
    }

    #[inline]
    fn step(&self, s: FixedCircle) -> Result<FixedCircle, Escaped> {
        Ok(s.times(self.d))
    }

    #[inline]
    fn dist_sq(&self, a: &FixedCircle, b: &FixedCircle) -> f64 {
        let d = a.arc(*b);
        d * d
    }

    fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> FixedCircle {
        FixedCircle::uniform(rng)
    }

    fn to_point(&self, s: &FixedCircle) -> ProductPoint {
        ProductPoint::new(vec![Coord::Fixed(*s)], vec![])
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_point(&self, p: &ProductPoint) -> Result<FixedCircle> {
        p.check(&self.geometry())?;
        single(&p.base, "linear-expanding base", fixed_of)
    }

    fn coordinate(&self, s: &FixedCircle, _axis: usize) -> f64 {
        s.value()
    }

    fn preserves_reference(&self) -> bool {
        true
    }
}

impl ScalarBase for LinearExpanding {
    #[inline]
    fn value(&self, s: &FixedCircle) -> f64 {
        s.value()
    }
}

/// `x ↦ d·x + (ε/2π) sin(2πx) mod 1`, a smooth uniformly expanding circle map
/// for `|ε| < d − 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedExpanding {
    d: u32,
    eps: f64,
}

impl PerturbedExpanding {
    pub fn new(d: u32, eps: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("piecewise-C2 map needs d >= 2"));
        }
        if !(eps.abs() < f64::from(d) - 1.0) {
            return Err(Error::invalid(format!(
                "|eps| = {} must stay below d - 1 = {} to keep the map expanding",
                eps.abs(),
                d - 1
            )));
        }
        Ok(PerturbedExpanding { d, eps })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        wrap_unit(f64::from(self.d) * x + self.eps / TAU * (TAU * x).sin())
    }
}

impl Dynamics for PerturbedExpanding {
    type State = f64;

    fn geometry(&self) -> Geometry {
        Geometry {
            base: vec![Axis::Circle],
            fiber: vec![],
        }
    }

    #[inline]
    fn step(&self, x: f64) -> Result<f64, Escaped> {
        Ok(self.apply(x))
    }

    #[inline]
    fn dist_sq(&self, a: &f64, b: &f64) -> f64 {
        let d = circle_arc(*a, *b);
        d * d
    }

    fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.gen::<f64>()
    }

    fn to_point(&self, s: &f64) -> ProductPoint {
        ProductPoint::new(vec![Coord::Circle(CircleCoord::new(*s))], vec![])
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_point(&self, p: &ProductPoint) -> Result<f64> {
        p.check(&self.geometry())?;
        single(&p.base, "piecewise-C2 base", circle_of)
    }

    fn coordinate(&self, s: &f64, _axis: usize) -> f64 {
        *s
    }
}

impl ScalarBase for PerturbedExpanding {
    #[inline]
    fn value(&self, s: &f64) -> f64 {
        *s
    }
}

/// First (intermittent) branch `x (1 + (2x)^a)` of the LSV family.
#[inline]
pub fn lsv_branch(x: f64, a: f64) -> f64 {
    let t = if a == 0.5 {
        (2.0 * x).sqrt()
    } else {
        (2.0 * x).powf(a)
    };
    x * (1.0 + t)
}

#[inline]
fn lsv_unchecked(x: f64, a: f64) -> f64 {
    if x < 0.5 {
        lsv_branch(x, a)
    } else {
        2.0 * x - 1.0
    }
}

/// One step of the Liverani–Saussol–Vaienti map with exponent `omega`.
pub fn step_lsv(x: f64, omega: f64) -> Result<f64> {
    check_lsv_exponent(omega)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("LSV coordinate {x} outside [0, 1]")));
    }
    Ok(lsv_unchecked(x, omega))
}

fn check_lsv_exponent(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("LSV exponent {omega} not in (0, 1)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lsv {
    omega: f64,
}

impl Lsv {
    pub fn new(omega: f64) -> Result<Self> {
        check_lsv_exponent(omega)?;
        Ok(Lsv { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

impl Dynamics for Lsv {
    type State = f64;

    fn geometry(&self) -> Geometry {
        Geometry {
            base: vec![Axis::Interval { lo: 0.0, hi: 1.0 }],
            fiber: vec![],
        }
    }

    #[inline]
    fn step(&self, x: f64) -> Result<f64, Escaped> {
        Ok(lsv_unchecked(x, self.omega))
    }

    #[inline]
    fn dist_sq(&self, a: &f64, b: &f64) -> f64 {
        let d = a - b;
        d * d
    }

    fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.gen::<f64>()
    }

    fn to_point(&self, s: &f64) -> ProductPoint {
        ProductPoint::new(vec![unit_interval(*s)], vec![])
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_point(&self, p: &ProductPoint) -> Result<f64> {
        p.check(&self.geometry())?;
        let x = single(&p.base, "LSV base", interval_of)?;
        IntervalCoord::new(x, 0.0, 1.0).map(IntervalCoord::value)
    }

    fn coordinate(&self, s: &f64, _axis: usize) -> f64 {
        *s
    }

    fn default_burn_in(&self) -> u64 {
        10_000
    }
}

impl ScalarBase for Lsv {
    #[inline]
    fn value(&self, s: &f64) -> f64 {
        *s
    }
}

// ---------------------------------------------------------------------------
// Cocycles and circle extensions

/// A fiber-rotation cocycle `h: X → S¹` with its declared Hölder exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Cocycle {
    /// `h(x) = scale · x mod 1`; continuous on the circle for integer `scale`.
    Linear {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        holder_exponent: f64,
    },
    /// `h(x) = amplitude · cos(2πx) mod 1`.
    Trigonometric {
        amplitude: f64,
        #[serde(default = "one")]
        holder_exponent: f64,
    },
    /// Periodic piecewise-linear interpolation of `values` at nodes `i / len`.
    Table {
        values: Vec<f64>,
        #[serde(default = "one")]
        holder_exponent: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Cocycle {
    pub fn linear() -> Self {
        Cocycle::Linear {
            scale: 1.0,
            holder_exponent: 1.0,
        }
    }

    pub fn trigonometric(amplitude: f64) -> Self {
        Cocycle::Trigonometric {
            amplitude,
            holder_exponent: 1.0,
        }
    }

    pub fn holder_exponent(&self) -> f64 {
        match *self {
            Cocycle::Linear { holder_exponent, .. }
            | Cocycle::Trigonometric { holder_exponent, .. }
            | Cocycle::Table { holder_exponent, .. } => holder_exponent,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let a = self.holder_exponent();
        if !(a > 0.0 && a <= 1.0) {
            out.push(format!("cocycle Hölder exponent {a} not in (0, 1]"));
        }
        let finite = match self {
            Cocycle::Linear { scale, .. } => scale.is_finite(),
            Cocycle::Trigonometric { amplitude, .. } => amplitude.is_finite(),
            Cocycle::Table { values, .. } => {
                if values.is_empty() {
                    out.push("cocycle table is empty".into());
                }
                values.iter().all(|v| v.is_finite())
            }
        };
        if !finite {
            out.push("cocycle coefficients must be finite".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(v.join("; ")))
        }
    }

    /// `h(x) mod 1`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let raw = match self {
            Cocycle::Linear { scale, .. } => scale * x,
            Cocycle::Trigonometric { amplitude, .. } => amplitude * (TAU * x).cos(),
            Cocycle::Table { values, .. } => {
                let len = values.len();
                let t = wrap_unit(x) * len as f64;
                let i = (t.floor() as usize).min(len - 1);
                let frac = t - i as f64;
                values[i] + frac * (values[(i + 1) % len] - values[i])
            }
        };
        wrap_unit(raw)
    }
}

/// `f(x, θ) = (T x, θ + h(x) mod 1)` with `h` evaluated at the pre-step `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleExtension<B> {
    base: B,
    cocycle: Cocycle,
}

impl<B: ScalarBase> CircleExtension<B> {
    pub fn new(base: B, cocycle: Cocycle) -> Result<Self> {
        cocycle.validate()?;
        Ok(CircleExtension { base, cocycle })
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }
}

/// State-level circle-extension step.
#[inline]
pub fn step_circle_extension<B: ScalarBase>(
    base: &B,
    cocycle: &Cocycle,
    (x, theta): (B::State, f64),
) -> Result<(B::State, f64), Escaped> {
    let shift = cocycle.eval(base.value(&x));
    Ok((base.step(x)?, wrap_unit(theta + shift)))
}

impl<B: ScalarBase> Dynamics for CircleExtension<B> {
    type State = (B::State, f64);

    fn geometry(&self) -> Geometry {
        Geometry {
            base: self.base.geometry().base,
            fiber: vec![Axis::Circle],
        }
    }

    #[inline]
    fn step(&self, s: Self::State) -> Result<Self::State, Escaped> {
        step_circle_extension(&self.base, &self.cocycle, s)
    }

    #[inline]
    fn dist_sq(&self, a: &Self::State, b: &Self::State) -> f64 {
        let dy = circle_arc(a.1, b.1);
        self.base.dist_sq(&a.0, &b.0) + dy * dy
    }

    fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        let x = self.base.sample_reference(rng);
        (x, rng.gen::<f64>())
    }

    fn to_point(&self, s: &Self::State) -> ProductPoint {
        let mut p = self.base.to_point(&s.0);
        p.fiber = vec![Coord::Circle(CircleCoord::new(s.1))];
        p
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_point(&self, p: &ProductPoint) -> Result<Self::State> {
        p.check(&self.geometry())?;
        let x = self.base.from_point(&p.project_base())?;
        let theta = single(&p.fiber, "circle fiber", circle_of)?;
        Ok((x, theta))
    }

    fn coordinate(&self, s: &Self::State, axis: usize) -> f64 {
        if axis == 0 {
            self.base.value(&s.0)
        } else {
            s.1
        }
    }

    fn default_burn_in(&self) -> u64 {
        self.base.default_burn_in()
    }

    fn preserves_reference(&self) -> bool {
        self.base.preserves_reference()
    }
}

impl<B: ScalarBase> SkewProduct for CircleExtension<B> {
    type Base = B;

    fn base(&self) -> &B {
        &self.base
    }

    #[inline]
    fn project(&self, s: &Self::State) -> B::State {
        s.0
    }
}

// ---------------------------------------------------------------------------
// Skew product with a curve of neutral points

/// `α(ω) = α_min + (α_max − α_min)(1 − cos 2π(ω − center)) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaProfile {
    pub alpha_min: f64,
    pub alpha_max: f64,
    #[serde(default)]
    pub center: f64,
}

impl AlphaProfile {
    pub fn new(alpha_min: f64, alpha_max: f64) -> Result<Self> {
        let p = AlphaProfile {
            alpha_min,
            alpha_max,
            center: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// All constraint violations, empty when valid.
    ///
    /// The cosine form is C², and its minimum at `center` is unique with
    /// `α'' = 2π²(α_max − α_min) > 0` whenever `α_min < α_max`, so only the
    /// numeric bounds need checking.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = (self.alpha_min, self.alpha_max);
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            out.push(format!("need 0 < α_min < α_max < 1, got α_min={lo}, α_max={hi}"));
        }
        if !(hi < 1.5 * lo) {
            out.push(format!(
                "need α_max < 1.5·α_min, got α_max={hi} >= {}",
                1.5 * lo
            ));
        }
        if !self.center.is_finite() {
            out.push("profile center must be finite".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(v.join("; ")))
        }
    }

    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        let bump = 0.5 * (1.0 - (TAU * (omega - self.center)).cos());
        // clamp guards the last ulp so the output never leaves [α_min, α_max]
        (self.alpha_min + (self.alpha_max - self.alpha_min) * bump)
            .clamp(self.alpha_min, self.alpha_max)
    }
}

pub fn alpha_profile(omega: f64, profile: &AlphaProfile) -> f64 {
    profile.eval(omega)
}

/// `(ω, x) ↦ (4ω, T_{α(ω)}(x))`.
#[inline]
pub fn step_gouezel(omega: FixedCircle, x: f64, profile: &AlphaProfile) -> (FixedCircle, f64) {
    let a = profile.eval(omega.value());
    (omega.times(4), lsv_unchecked(x, a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gouezel {
    base: LinearExpanding,
    profile: AlphaProfile,
}

impl Gouezel {
    pub fn new(profile: AlphaProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Gouezel {
            base: LinearExpanding { d: 4 },
            profile,
        })
    }

    pub fn profile(&self) -> &AlphaProfile {
        &self.profile
    }
}

impl Dynamics for Gouezel {
    type State = (FixedCircle, f64);

    fn geometry(&self) -> Geometry {
        Geometry {
            base: vec![Axis::Circle],
            fiber: vec![Axis::Interval { lo: 0.0, hi: 1.0 }],
        }
    }

    #[inline]
    fn step(&self, (omega, x): Self::State) -> Result<Self::State, Escaped> {
        Ok(step_gouezel(omega, x, &self.profile))
    }

    #[inline]
    fn dist_sq(&self, a: &Self::State, b: &Self::State) -> f64 {
        let dw = a.0.arc(b.0);
        let dx = a.1 - b.1;
        dw * dw + dx * dx
    }

    fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        (FixedCircle::uniform(rng), rng.gen::<f64>())
    }

    fn to_point(&self, s: &Self::State) -> ProductPoint {
        ProductPoint::new(vec![Coord::Fixed(s.0)], vec![unit_interval(s.1)])
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_point(&self, p: &ProductPoint) -> Result<Self::State> {
        p.check(&self.geometry())?;
        let w = single(&p.base, "Gouëzel base", fixed_of)?;
        let x = single(&p.fiber, "Gouëzel fiber", interval_of)?;
        Ok((w, IntervalCoord::new(x, 0.0, 1.0)?.value()))
    }

    fn coordinate(&self, s: &Self::State, axis: usize) -> f64 {
        if axis == 0 {
            s.0.value()
        } else {
            s.1
        }
    }

    fn default_burn_in(&self) -> u64 {
        10_000
    }
}

impl SkewProduct for Gouezel {
    type Base = LinearExpanding;

    fn base(&self) -> &LinearExpanding {
        &self.base
    }

    #[inline]
    fn project(&self, s: &Self::State) -> FixedCircle {
        s.0
    }
}

// ---------------------------------------------------------------------------
// Viana map

/// Parameters of `(θ, x) ↦ (dθ, a₀ + α sin(2πθ) − x²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VianaParams {
    #[serde(default = "VianaParams::default_d")]
    pub d: u64,
    #[serde(default = "VianaParams::default_a0")]
    pub a0: f64,
    #[serde(default = "VianaParams::default_alpha")]
    pub alpha: f64,
    /// Trapping interval `I`; leaving it is reported as divergence.
    #[serde(default = "VianaParams::default_interval")]
    pub interval: [f64; 2],
}

impl Default for VianaParams {
    fn default() -> Self {
        VianaParams {
            d: Self::default_d(),
            a0: Self::default_a0(),
            alpha: Self::default_alpha(),
            interval: Self::default_interval(),
        }
    }
}

impl VianaParams {
    pub(crate) fn default_d() -> u64 {
        16
    }

    pub(crate) fn default_a0() -> f64 {
        2.0
    }

    pub(crate) fn default_alpha() -> f64 {
        0.01
    }

    pub(crate) fn default_interval() -> [f64; 2] {
        [-2.0, 2.0]
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d < 16 || self.d >= 1 << 32 {
            out.push(format!("Viana base factor d={} must satisfy 16 <= d < 2^32", self.d));
        }
        if !(self.a0.is_finite() && self.alpha.is_finite()) {
            out.push("Viana a0 and alpha must be finite".into());
        }
        let [lo, hi] = self.interval;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            out.push(format!("Viana trapping interval [{lo}, {hi}] is empty"));
        }
        out
    }
}

/// One Viana step; `Escaped` when the new fiber value leaves the trapping interval.
#[inline]
pub fn step_viana(
    theta: FixedCircle,
    x: f64,
    params: &VianaParams,
) -> Result<(FixedCircle, f64), Escaped> {
    let next = params.a0 + params.alpha * (TAU * theta.value()).sin() - x * x;
    let [lo, hi] = params.interval;
    if (lo..=hi).contains(&next) {
        Ok((theta.times(params.d), next))
    } else {
        Err(Escaped)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Viana {
    base: LinearExpanding,
    params: VianaParams,
}

impl Viana {
    pub fn new(params: VianaParams) -> Result<Self> {
        let v = params.violations();
        if !v.is_empty() {
            return Err(Error::invalid(v.join("; ")));
        }
        Ok(Viana {
            base: LinearExpanding { d: params.d },
            params,
        })
    }

    pub fn params(&self) -> &VianaParams {
        &self.params
    }
}

impl Dynamics for Viana {
    type State = (FixedCircle, f64);

    fn geometry(&self) -> Geometry {
        let [lo, hi] = self.params.interval;
        Geometry {
            base: vec![Axis::Circle],
            fiber: vec![Axis::Interval { lo, hi }],
        }
    }

    #[inline]
    fn step(&self, (theta, x): Self::State) -> Result<Self::State, Escaped> {
        step_viana(theta, x, &self.params)
    }

    #[inline]
    fn dist_sq(&self, a: &Self::State, b: &Self::State) -> f64 {
        let dt = a.0.arc(b.0);
        let dx = a.1 - b.1;
        dt * dt + dx * dx
    }

    fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        let [lo, hi] = self.params.interval;
        (FixedCircle::uniform(rng), rng.gen_range(lo..=hi))
    }

    fn to_point(&self, s: &Self::State) -> ProductPoint {
        ProductPoint::new(
            vec![Coord::Fixed(s.0)],
            vec![Coord::Interval(IntervalCoord(s.1))],
        )
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_point(&self, p: &ProductPoint) -> Result<Self::State> {
        p.check(&self.geometry())?;
        let [lo, hi] = self.params.interval;
        let t = single(&p.base, "Viana base", fixed_of)?;
        let x = single(&p.fiber, "Viana fiber", interval_of)?;
        Ok((t, IntervalCoord::new(x, lo, hi)?.value()))
    }

    fn coordinate(&self, s: &Self::State, axis: usize) -> f64 {
        if axis == 0 {
            s.0.value()
        } else {
            s.1
        }
    }
}

impl SkewProduct for Viana {
    type Base = LinearExpanding;

    fn base(&self) -> &LinearExpanding {
        &self.base
    }

    #[inline]
    fn project(&self, s: &Self::State) -> FixedCircle {
        s.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::PI;
    use rand_chacha::ChaCha8Rng;

    // Independent oracle for the intermittent branch: evaluate 2^a x^a via
    // exp/ln in extended steps rather than powf.
    fn lsv_oracle(x: f64, a: f64) -> f64 {
        let two_a = (a * std::f64::consts::LN_2).exp();
        let x_a = (a * x.ln()).exp();
        x * (1.0 + two_a * x_a)
    }

    #[test]
    fn base_expanding_examples() {
        let x = FixedCircle::from_f64(0.3).unwrap();
        assert!((step_base_expanding(x, 4).value() - 0.2).abs() < 1e-15);
        assert_eq!(step_base_expanding(FixedCircle::ZERO, 7), FixedCircle::ZERO);
        let third = FixedCircle::rational(1, 3).unwrap();
        let next = step_base_expanding(third, 2);
        assert_eq!(next, FixedCircle::rational(2, 3).unwrap());
        assert_eq!(step_base_expanding(next, 2), third);
    }

    #[test]
    fn lsv_examples() {
        assert_eq!(step_lsv(0.0, 0.5).unwrap(), 0.0);
        for w in [0.1, 0.5, 0.9] {
            assert_eq!(step_lsv(0.75, w).unwrap(), 0.5);
        }
        // 0.25 (1 + sqrt(2) * 0.5) = 0.4267766952966369
        let got = step_lsv(0.25, 0.5).unwrap();
        assert!((got - 0.426_776_695_296_636_9).abs() < 1e-15, "{got}");
        assert!((got - lsv_oracle(0.25, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn lsv_rejects_bad_exponent() {
        assert!(step_lsv(0.2, 0.0).is_err());
        assert!(step_lsv(0.2, 1.0).is_err());
        assert!(Lsv::new(-0.3).is_err());
        assert!(step_lsv(1.5, 0.5).is_err());
    }

    #[test]
    fn lsv_first_branch_monotone_and_expanding() {
        for &w in &[0.05, 0.3, 0.5, 0.7, 0.95] {
            let mut prev = -1.0;
            for i in 0..5000 {
                let x = i as f64 / 10_000.0;
                let y = lsv_branch(x, w);
                assert!(y > prev, "not increasing at x={x}, w={w}");
                if x > 0.0 {
                    assert!(y > x);
                }
                assert!((0.0..=1.0).contains(&y));
                prev = y;
            }
        }
    }

    #[test]
    fn circle_extension_examples() {
        let ext = CircleExtension::new(LinearExpanding::new(2).unwrap(), Cocycle::linear()).unwrap();
        let (x, t) = ext.step((FixedCircle::ZERO, 0.25)).unwrap();
        assert_eq!((x, t), (FixedCircle::ZERO, 0.25));

        let half = FixedCircle::rational(1, 2).unwrap();
        let (x, t) = ext.step((half, 0.9)).unwrap();
        assert_eq!(x.value(), 0.0);
        assert!((t - 0.4).abs() < 1e-15, "{t}");

        let trig = CircleExtension::new(LinearExpanding::new(3).unwrap(), Cocycle::trigonometric(0.5))
            .unwrap();
        let quarter = FixedCircle::rational(1, 4).unwrap();
        let (x, t) = trig.step((quarter, 0.0)).unwrap();
        assert_eq!(x.value(), 0.75);
        // oracle: 0.5 cos(π/2) evaluated directly is ~3e-17, so θ' is within rounding of 0
        let oracle = (0.5 * (PI / 2.0).cos()).rem_euclid(1.0);
        assert!(circle_arc(t, oracle) < 1e-15);
        assert!(circle_arc(t, 0.0) < 1e-15);
    }

    #[test]
    fn circle_extension_commutes_with_projection() {
        let ext = CircleExtension::new(
            PerturbedExpanding::new(3, 0.4).unwrap(),
            Cocycle::trigonometric(0.37),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let s = ext.sample_reference(&mut rng);
            let stepped = ext.step(s).unwrap();
            assert_eq!(ext.project(&stepped), ext.base().step(ext.project(&s)).unwrap());
        }
    }

    #[test]
    fn cocycle_table_interpolates_periodically() {
        let h = Cocycle::Table {
            values: vec![0.0, 0.5],
            holder_exponent: 1.0,
        };
        assert_eq!(h.eval(0.0), 0.0);
        assert!((h.eval(0.25) - 0.25).abs() < 1e-15);
        assert!((h.eval(0.75) - 0.25).abs() < 1e-15);
        assert!(Cocycle::Table {
            values: vec![],
            holder_exponent: 1.0
        }
        .validate()
        .is_err());
        assert!(Cocycle::Linear {
            scale: 1.0,
            holder_exponent: 1.5
        }
        .validate()
        .is_err());
    }

    #[test]
    fn gouezel_examples() {
        let p = AlphaProfile::new(0.2, 0.25).unwrap();
        assert_eq!(step_gouezel(FixedCircle::ZERO, 0.0, &p), (FixedCircle::ZERO, 0.0));

        let quarter = FixedCircle::rational(1, 4).unwrap();
        let (w, x) = step_gouezel(quarter, 0.75, &p);
        assert_eq!((w.value(), x), (0.0, 0.5));

        let half = FixedCircle::rational(1, 2).unwrap();
        let (w, x) = step_gouezel(half, 0.25, &p);
        assert_eq!(w.value(), 0.0);
        let expect = lsv_oracle(0.25, 0.25);
        assert!((x - expect).abs() < 1e-15, "{x} vs {expect}");
        assert!((x - 0.460_224).abs() < 1e-6, "{x}");
    }

    #[test]
    fn alpha_profile_examples() {
        let p = AlphaProfile::new(0.2, 0.25).unwrap();
        assert_eq!(alpha_profile(0.0, &p), 0.2);
        assert_eq!(alpha_profile(0.5, &p), 0.25);
        assert!((alpha_profile(0.25, &p) - 0.225).abs() < 1e-15);
    }

    #[test]
    fn alpha_profile_validation() {
        let bad = AlphaProfile {
            alpha_min: 0.2,
            alpha_max: 0.35,
            center: 0.0,
        };
        let v = bad.violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("1.5"));
        assert!(AlphaProfile::new(0.3, 0.2).is_err());
        assert!(AlphaProfile::new(0.0, 0.1).is_err());
        assert!(AlphaProfile::new(0.7, 1.0).is_err());
        assert!(Gouezel::new(bad).is_err());
    }

    #[test]
    fn viana_examples() {
        let params = VianaParams::default();
        let (t, x) = step_viana(FixedCircle::ZERO, 0.0, &params).unwrap();
        assert_eq!((t, x), (FixedCircle::ZERO, 2.0));

        let flat = VianaParams {
            alpha: 0.0,
            ..params
        };
        let mut x = 0.0;
        let mut seen = vec![x];
        for _ in 0..3 {
            x = step_viana(FixedCircle::ZERO, x, &flat).unwrap().1;
            seen.push(x);
        }
        assert_eq!(seen, vec![0.0, 2.0, -2.0, -2.0]);

        let quarter = FixedCircle::rational(1, 4).unwrap();
        let (t, x) = step_viana(quarter, 1.0, &params).unwrap();
        assert_eq!(t.value(), 0.0);
        assert!((x - 1.01).abs() < 1e-15);
    }

    #[test]
    fn viana_reports_escape() {
        let params = VianaParams::default();
        // θ = 1/4 pushes 2 + 0.01 above the trapping interval
        let quarter = FixedCircle::rational(1, 4).unwrap();
        assert_eq!(step_viana(quarter, 0.0, &params), Err(Escaped));
        assert!(Viana::new(VianaParams { d: 4, ..params }).is_err());
    }

    #[test]
    fn maps_stay_in_phase_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lsv = Lsv::new(0.6).unwrap();
        let pert = PerturbedExpanding::new(2, 0.9).unwrap();
        let gz = Gouezel::new(AlphaProfile::new(0.1, 0.14).unwrap()).unwrap();
        let vi = Viana::new(VianaParams {
            a0: 1.8,
            ..VianaParams::default()
        })
        .unwrap();
        for _ in 0..1_000_000 {
            let x = lsv.step(lsv.sample_reference(&mut rng)).unwrap();
            assert!((0.0..=1.0).contains(&x));
            let y = pert.step(pert.sample_reference(&mut rng)).unwrap();
            assert!((0.0..1.0).contains(&y));
            let (w, z) = gz.step(gz.sample_reference(&mut rng)).unwrap();
            assert!(w.value() < 1.0 && (0.0..=1.0).contains(&z));
            if let Ok((_, v)) = vi.step(vi.sample_reference(&mut rng)) {
                assert!((-2.0..=2.0).contains(&v));
            }
        }
    }
}
