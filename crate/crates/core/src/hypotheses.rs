//! Empirical checks of the two sufficient conditions for the limit law:
//! decay of the rapidly-returning sets `E_n` and polynomial decay of
//! correlations, plus the exponent thresholds tying them together.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::ceil_pow;
use crate::maps::{Axis, Dynamics, SkewProduct, System};
use crate::orbit::{par_map, sample_member, Ensemble};
use crate::{with_dynamics, with_skew};

const CHUNK: usize = 4096;

/// Stream ids keep the estimators' random draws independent of each other.
pub const EN_STREAM: u64 = 1 << 32;
pub const DECAY_STREAM: u64 = 2 << 32;

/// `−ln(0.05)`: with zero hits in `N` samples the measure is below `3/N`
/// at 95% confidence.
const ZERO_HIT_BOUND: f64 = 2.995_732_273_553_991;

// ---------------------------------------------------------------------------
// Fits

/// Unweighted least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

/// Fit `ln y = a + b ln x` over pairs with positive, finite coordinates.
/// `None` when fewer than two usable pairs remain.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<LogLogFit> {
    let raw: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let pts: Vec<(f64, f64)> = raw.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LogLogFit {
        slope,
        intercept: my - slope * mx,
        x_min: raw.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        x_max: raw.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        points: pts.len(),
    })
}

/// Inclusive range of abscissae admitted to a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRange {
    pub min: f64,
    pub max: f64,
}

impl FitRange {
    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }
}

fn fit_in_range(xs: &[f64], ys: &[f64], range: Option<FitRange>) -> Option<LogLogFit> {
    let (fx, fy): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, _)| range.is_none_or(|r| r.contains(**x)))
        .map(|(x, y)| (*x, *y))
        .unzip();
    loglog_fit(&fx, &fy)
}

// ---------------------------------------------------------------------------
// Rapidly returning sets

/// Return-time horizon `g(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "window", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReturnWindow {
    /// `g(n) = ⌈n^{Dγ′}⌉`.
    Power { gamma_prime: f64, dimension: usize },
    Fixed { g: u64 },
}

impl ReturnWindow {
    pub fn g(&self, n: u64) -> u64 {
        match *self {
            ReturnWindow::Power {
                gamma_prime,
                dimension,
            } => ceil_pow(n, dimension as f64 * gamma_prime),
            ReturnWindow::Fixed { g } => g.max(1),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ReturnWindow::Power {
                gamma_prime,
                dimension,
            } if !(gamma_prime > 0.0) || dimension == 0 => Err(Error::invalid(format!(
                "return window needs γ′ > 0 and D ≥ 1 (got γ′={gamma_prime}, D={dimension})"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnRow {
    pub n: u64,
    pub g: u64,
    pub hits: u64,
    pub samples: u64,
    pub measure: f64,
    pub stderr: f64,
    /// One-sided 95% bound, reported when no sample hit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnReport {
    pub rows: Vec<EnRow>,
    /// `β̂ = −slope`; rows with zero hits are excluded.
    pub beta_hat: Option<f64>,
    pub fit: Option<LogLogFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    /// Burn-in for the starting points; `None` uses the system default,
    /// or none at all when the reference measure is invariant.
    #[serde(default)]
    pub burn_in: Option<u64>,
}

impl MonteCarlo {
    pub fn new(samples: usize, seed: u64) -> Self {
        MonteCarlo {
            samples,
            seed,
            burn_in: None,
        }
    }

    fn burn_in<S: Dynamics>(&self, system: &S) -> u64 {
        self.burn_in.unwrap_or(if system.preserves_reference() {
            0
        } else {
            system.default_burn_in()
        })
    }

    fn ensemble(&self, stream: u64) -> Ensemble {
        Ensemble::new(self.samples, self.seed).with_stream(stream)
    }
}

fn check_n_list(n_list: &[u64]) -> Result<()> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::invalid("n list must be non-empty with every n ≥ 1"));
    }
    Ok(())
}

fn en_rows(n_list: &[u64], window: &ReturnWindow, hits: &[u64], samples: u64) -> Vec<EnRow> {
    n_list
        .iter()
        .zip(hits)
        .map(|(&n, &h)| {
            let p = h as f64 / samples as f64;
            EnRow {
                n,
                g: window.g(n),
                hits: h,
                samples,
                measure: p,
                stderr: (p * (1.0 - p) / samples as f64).sqrt(),
                upper_bound: (h == 0).then(|| ZERO_HIT_BOUND / samples as f64),
            }
        })
        .collect()
}

fn en_report(rows: Vec<EnRow>, range: Option<FitRange>) -> EnReport {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.measure).collect();
    let fit = fit_in_range(&xs, &ys, range);
    EnReport {
        rows,
        beta_hat: fit.as_ref().map(|f| -f.slope),
        fit,
    }
}

/// Closest squared return distance within each horizon, for one orbit.
/// `out[k]` is `min_{1≤j≤horizons[k]} d²(T^j x, x)`; horizons must be sorted.
fn min_returns<S: Dynamics>(
    system: &S,
    x: S::State,
    horizons: &[u64],
    out: &mut [f64],
) -> std::result::Result<(), u64> {
    let mut best = f64::INFINITY;
    let mut s = x;
    let mut k = 0;
    let last = *horizons.last().unwrap_or(&0);
    for j in 1..=last {
        s = system.step(s).map_err(|_| j)?;
        best = best.min(system.dist_sq(&s, &x));
        while k < horizons.len() && horizons[k] == j {
            out[k] = best;
            k += 1;
        }
    }
    Ok(())
}

/// Sorted distinct horizons and, for each `n`, its slot.
fn horizon_slots(n_list: &[u64], window: &ReturnWindow) -> (Vec<u64>, Vec<usize>) {
    let gs: Vec<u64> = n_list.iter().map(|&n| window.g(n)).collect();
    let mut horizons = gs.clone();
    horizons.sort_unstable();
    horizons.dedup();
    let slots = gs
        .iter()
        .map(|g| horizons.binary_search(g).expect("present"))
        .collect();
    (horizons, slots)
}

/// Monte Carlo `μ_X(E_n)` with
/// `E_n = {x : d(T^j x, x) < 1/n for some 1 ≤ j ≤ g(n)}`.
///
/// Every `n` uses the same sample points, so the estimates are exactly
/// monotone in `g(n)`.
pub fn estimate_en_measure(
    system: &System,
    n_list: &[u64],
    window: ReturnWindow,
    sampling: &MonteCarlo,
    fit_range: Option<FitRange>,
    threads: Option<usize>,
) -> Result<EnReport> {
    check_n_list(n_list)?;
    window.validate()?;
    if system.geometry().fiber_dim() != 0 {
        return Err(Error::invalid(
            "E_n measure is defined for a base map; pass the base system",
        ));
    }
    if sampling.samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let (horizons, slots) = horizon_slots(n_list, &window);
    let thresholds: Vec<f64> = n_list.iter().map(|&n| (n as f64).powi(-2)).collect();
    let hits = with_dynamics!(system, s => {
        let ens = sampling.ensemble(EN_STREAM);
        let burn_in = sampling.burn_in(s);
        let count = sampling.samples;
        let partial = par_map(count.div_ceil(CHUNK), threads, |c| -> Result<Vec<u64>> {
            let mut hits = vec![0u64; n_list.len()];
            let mut mins = vec![0.0; horizons.len()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                let x = sample_member(s, &ens, burn_in, i)?;
                min_returns(s, x, &horizons, &mut mins)
                    .map_err(|step| Error::OrbitDiverged { step })?;
                for (k, &slot) in slots.iter().enumerate() {
                    if mins[slot] < thresholds[k] {
                        hits[k] += 1;
                    }
                }
            }
            Ok(hits)
        });
        sum_counts(partial, n_list.len())?
    });
    Ok(en_report(
        en_rows(n_list, &window, &hits, sampling.samples as u64),
        fit_range,
    ))
}

fn sum_counts(partial: Vec<Result<Vec<u64>>>, len: usize) -> Result<Vec<u64>> {
    let mut total = vec![0u64; len];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p?) {
            *t += v;
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductEnReport {
    /// `ν(Ẽ_n)` from the product metric.
    pub product: EnReport,
    /// `ν(E_n^X × Y)` from the base coordinates of the same samples.
    pub base: EnReport,
    /// Samples with a product return and no base return (always zero).
    pub inclusion_violations: u64,
}

/// Monte Carlo `ν(Ẽ_n)` for a skew product, checking sample by sample
/// that every product return projects to a base return.
pub fn estimate_product_en_measure(
    system: &System,
    n_list: &[u64],
    window: ReturnWindow,
    sampling: &MonteCarlo,
    fit_range: Option<FitRange>,
    threads: Option<usize>,
) -> Result<ProductEnReport> {
    check_n_list(n_list)?;
    window.validate()?;
    if sampling.samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let (horizons, slots) = horizon_slots(n_list, &window);
    let thresholds: Vec<f64> = n_list.iter().map(|&n| (n as f64).powi(-2)).collect();
    let len = n_list.len();
    // per chunk: product hits, base hits, violations
    let counts = with_skew!(system, s => {
        let ens = sampling.ensemble(EN_STREAM);
        let burn_in = sampling.burn_in(s);
        let count = sampling.samples;
        let last = *horizons.last().expect("non-empty");
        let partial = par_map(count.div_ceil(CHUNK), threads, |c| -> Result<Vec<u64>> {
            let mut tally = vec![0u64; 2 * len + 1];
            let mut prod_min = vec![0.0; horizons.len()];
            let mut base_min = vec![0.0; horizons.len()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                let p = sample_member(s, &ens, burn_in, i)?;
                let x = s.project(&p);
                let (mut bp, mut bb) = (f64::INFINITY, f64::INFINITY);
                let mut q = p;
                let mut k = 0;
                for j in 1..=last {
                    q = s.step(q).map_err(|_| Error::OrbitDiverged { step: j })?;
                    bp = bp.min(s.dist_sq(&q, &p));
                    bb = bb.min(s.base().dist_sq(&s.project(&q), &x));
                    while k < horizons.len() && horizons[k] == j {
                        prod_min[k] = bp;
                        base_min[k] = bb;
                        k += 1;
                    }
                }
                let mut violated = false;
                for (m, &slot) in slots.iter().enumerate() {
                    let ph = prod_min[slot] < thresholds[m];
                    let bh = base_min[slot] < thresholds[m];
                    tally[m] += u64::from(ph);
                    tally[len + m] += u64::from(bh);
                    violated |= ph && !bh;
                }
                tally[2 * len] += u64::from(violated);
            }
            Ok(tally)
        });
        sum_counts(partial, 2 * len + 1)?
    }, _ => return Err(Error::invalid("product E_n measure needs a skew product")));

    let violations = counts[2 * len];
    if violations > 0 {
        return Err(Error::InclusionViolated { count: violations });
    }
    let samples = sampling.samples as u64;
    Ok(ProductEnReport {
        product: en_report(en_rows(n_list, &window, &counts[..len], samples), fit_range),
        base: en_report(
            en_rows(n_list, &window, &counts[len..2 * len], samples),
            fit_range,
        ),
        inclusion_violations: violations,
    })
}

/// Exponent predicted by `μ_X(E_n) ≤ (g(n)/√n)^{1−ω}` for the LSV base
/// with `g(n) = n^{Dγ′}`.
pub fn lsv_en_prediction(omega: f64, gamma_prime: f64, dimension: usize) -> f64 {
    (1.0 - omega) * (0.5 - dimension as f64 * gamma_prime)
}

// ---------------------------------------------------------------------------
// Correlation decay

/// Built-in Hölder test functions of one phase-space coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// `cos(2π k x)` of coordinate `axis`.
    Cos {
        #[serde(default)]
        axis: usize,
        #[serde(default = "unit_frequency")]
        frequency: u32,
    },
    Sin {
        #[serde(default)]
        axis: usize,
        #[serde(default = "unit_frequency")]
        frequency: u32,
    },
    /// `x − 1/2`.
    Sawtooth {
        #[serde(default)]
        axis: usize,
    },
    /// Tent `max(0, 1 − |x − center| / width)`, circular on circle axes.
    Bump {
        #[serde(default)]
        axis: usize,
        center: f64,
        width: f64,
    },
}

fn unit_frequency() -> u32 {
    1
}

impl TestFunction {
    pub fn cos() -> Self {
        TestFunction::Cos {
            axis: 0,
            frequency: 1,
        }
    }

    pub fn sawtooth() -> Self {
        TestFunction::Sawtooth { axis: 0 }
    }

    fn axis(&self) -> Option<usize> {
        match *self {
            TestFunction::Constant { .. } => None,
            TestFunction::Cos { axis, .. }
            | TestFunction::Sin { axis, .. }
            | TestFunction::Sawtooth { axis }
            | TestFunction::Bump { axis, .. } => Some(axis),
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if let Some(a) = self.axis() {
            if a >= dimension {
                return Err(Error::invalid(format!(
                    "test function axis {a} out of range for dimension {dimension}"
                )));
            }
        }
        match *self {
            TestFunction::Bump { width, .. } if !(width > 0.0) => {
                Err(Error::invalid("bump width must be positive"))
            }
            TestFunction::Constant { value } if !value.is_finite() => {
                Err(Error::invalid("constant test function must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval_coord(&self, x: f64, circular: bool) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Cos { frequency, .. } => (2.0 * PI * frequency as f64 * x).cos(),
            TestFunction::Sin { frequency, .. } => (2.0 * PI * frequency as f64 * x).sin(),
            TestFunction::Sawtooth { .. } => x - 0.5,
            TestFunction::Bump { center, width, .. } => {
                let mut d = (x - center).abs();
                if circular {
                    d = d.min(1.0 - d);
                }
                (1.0 - d / width).max(0.0)
            }
        }
    }

    fn eval<S: Dynamics>(&self, system: &S, s: &S::State, circular: &[bool]) -> f64 {
        match self.axis() {
            None => self.eval_coord(0.0, false),
            Some(a) => self.eval_coord(system.coordinate(s, a), circular[a]),
        }
    }

    /// `‖·‖_∞` over the phase space.
    pub fn sup_norm(&self, axis: Option<&Axis>) -> f64 {
        match *self {
            TestFunction::Constant { value } => value.abs(),
            TestFunction::Cos { .. } | TestFunction::Sin { .. } | TestFunction::Bump { .. } => 1.0,
            TestFunction::Sawtooth { .. } => match axis {
                Some(Axis::Interval { lo, hi }) => (lo - 0.5).abs().max((hi - 0.5).abs()),
                _ => 0.5,
            },
        }
    }

    /// Declared `‖·‖_{C^α̂} = ‖·‖_∞ + Hölder seminorm`; `None` when the
    /// function is discontinuous (the sawtooth on a circle axis).
    pub fn holder_norm(&self, exponent: f64, axis: Option<&Axis>) -> Option<f64> {
        // |φ(a) − φ(b)| ≤ min(osc, L d) ≤ osc^{1−α̂} (L d)^{α̂}
        let (osc, lip) = match *self {
            TestFunction::Constant { .. } => return Some(self.sup_norm(axis)),
            TestFunction::Cos { frequency, .. } | TestFunction::Sin { frequency, .. } => {
                (2.0, 2.0 * PI * frequency as f64)
            }
            TestFunction::Bump { width, .. } => (1.0, 1.0 / width),
            TestFunction::Sawtooth { .. } => match axis {
                Some(Axis::Interval { lo, hi }) => (hi - lo, 1.0),
                _ => return None,
            },
        };
        Some(self.sup_norm(axis) + osc.powf(1.0 - exponent) * lip.powf(exponent))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub j: u64,
    /// `E[Ψ∘f^j Υ] − E[Υ] E[Ψ]`.
    pub correlation: f64,
    pub magnitude: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// `α̂ = −slope` of `log |corr|` against `log j`.
    pub alpha_hat: Option<f64>,
    pub fit: Option<LogLogFit>,
    pub fit_range: Option<FitRange>,
    pub psi_sup_norm: f64,
    pub upsilon_holder_exponent: f64,
    pub upsilon_holder_norm: Option<f64>,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    pub upsilon: TestFunction,
    pub psi: TestFunction,
    pub j_list: Vec<u64>,
    #[serde(default)]
    pub fit_range: Option<FitRange>,
    /// Hölder exponent used for the declared `‖Υ‖_{C^α̂}`.
    #[serde(default = "unit_exponent")]
    pub holder_exponent: f64,
}

fn unit_exponent() -> f64 {
    1.0
}

/// Raw moment sums for one lag.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    psi: f64,
    psi2: f64,
    up_psi: f64,
    up2_psi: f64,
    up_psi2: f64,
    up2_psi2: f64,
}

/// Monte Carlo correlations `|∫ Ψ∘f^j Υ dν − ∫Υ dν ∫Ψ dν|` under the
/// invariant measure, with delta-method standard errors.
pub fn estimate_correlation_decay(
    system: &System,
    spec: &DecaySpec,
    sampling: &MonteCarlo,
    threads: Option<usize>,
) -> Result<DecayReport> {
    let geometry = system.geometry();
    let dim = geometry.dimension();
    spec.upsilon.validate(dim)?;
    spec.psi.validate(dim)?;
    if spec.j_list.is_empty() {
        return Err(Error::invalid("j list is empty"));
    }
    if sampling.samples < 2 {
        return Err(Error::invalid("at least two samples are required"));
    }
    if !(spec.holder_exponent > 0.0 && spec.holder_exponent <= 1.0) {
        return Err(Error::invalid("Hölder exponent must lie in (0, 1]"));
    }
    let axes: Vec<Axis> = geometry.axes().cloned().collect();
    let circular: Vec<bool> = axes.iter().map(|a| matches!(a, Axis::Circle)).collect();
    let mut order: Vec<usize> = (0..spec.j_list.len()).collect();
    order.sort_by_key(|&k| spec.j_list[k]);
    let lags = spec.j_list.len();
    let n = sampling.samples;

    // per chunk: (Σ Υ, Σ Υ², per-lag moments)
    let partial = with_dynamics!(system, s => {
        let ens = sampling.ensemble(DECAY_STREAM);
        let burn_in = sampling.burn_in(s);
        par_map(n.div_ceil(CHUNK), threads, |c| -> Result<(f64, f64, Vec<Moments>)> {
            let (mut su, mut su2) = (0.0, 0.0);
            let mut mom = vec![Moments::default(); lags];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let p = sample_member(s, &ens, burn_in, i)?;
                let u = spec.upsilon.eval(s, &p, &circular);
                su += u;
                su2 += u * u;
                let mut q = p;
                let mut t = 0;
                for &k in &order {
                    let j = spec.j_list[k];
                    while t < j {
                        q = s.step(q).map_err(|_| Error::OrbitDiverged { step: t + 1 })?;
                        t += 1;
                    }
                    let v = spec.psi.eval(s, &q, &circular);
                    let m = &mut mom[k];
                    m.psi += v;
                    m.psi2 += v * v;
                    m.up_psi += u * v;
                    m.up2_psi += u * u * v;
                    m.up_psi2 += u * v * v;
                    m.up2_psi2 += u * u * v * v;
                }
            }
            Ok((su, su2, mom))
        })
    });

    let (mut su, mut su2) = (0.0, 0.0);
    let mut mom = vec![Moments::default(); lags];
    for p in partial {
        let (a, b, m) = p?;
        su += a;
        su2 += b;
        for (t, x) in mom.iter_mut().zip(m) {
            t.psi += x.psi;
            t.psi2 += x.psi2;
            t.up_psi += x.up_psi;
            t.up2_psi += x.up2_psi;
            t.up_psi2 += x.up_psi2;
            t.up2_psi2 += x.up2_psi2;
        }
    }

    let nf = n as f64;
    let constant_upsilon = matches!(spec.upsilon, TestFunction::Constant { .. });
    let rows: Vec<DecayRow> = spec
        .j_list
        .iter()
        .zip(&mom)
        .map(|(&j, m)| {
            if constant_upsilon {
                return DecayRow {
                    j,
                    correlation: 0.0,
                    magnitude: 0.0,
                    stderr: 0.0,
                };
            }
            let a = su / nf;
            let b = m.psi / nf;
            let m11 = m.up_psi / nf;
            let c = m11 - a * b;
            // E[((Υ−a)(Ψ−b))²] expanded in raw moments
            let second = m.up2_psi2 / nf + b * b * su2 / nf + a * a * m.psi2 / nf
                - 2.0 * b * m.up2_psi / nf
                - 2.0 * a * m.up_psi2 / nf
                + 4.0 * a * b * m11
                - 3.0 * a * a * b * b;
            let var = (second - c * c).max(0.0);
            DecayRow {
                j,
                correlation: c,
                magnitude: c.abs(),
                stderr: (var / nf).sqrt(),
            }
        })
        .collect();

    let xs: Vec<f64> = rows.iter().map(|r| r.j as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.magnitude).collect();
    let fit = fit_in_range(&xs, &ys, spec.fit_range);
    let axis_of = |f: &TestFunction| f.axis().and_then(|a| axes.get(a));
    Ok(DecayReport {
        alpha_hat: fit.as_ref().map(|f| -f.slope),
        fit,
        fit_range: spec.fit_range,
        psi_sup_norm: spec.psi.sup_norm(axis_of(&spec.psi)),
        upsilon_holder_exponent: spec.holder_exponent,
        upsilon_holder_norm: spec
            .upsilon
            .holder_norm(spec.holder_exponent, axis_of(&spec.upsilon)),
        samples: n as u64,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Exponent thresholds

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisParams {
    /// Decay exponent of `μ_X(E_n)`.
    #[serde(default)]
    pub beta: Option<f64>,
    pub gamma_prime: f64,
    /// Correlation decay exponent.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Hölder exponent α̂ of the test functions.
    #[serde(default = "unit_exponent")]
    pub holder_exponent: f64,
    /// `H ∈ L^{1+δ}`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Conjugate exponent; derived from `delta` when omitted.
    #[serde(default)]
    pub kappa: Option<f64>,
}

impl HypothesisParams {
    pub fn new(gamma_prime: f64, kappa: f64) -> Self {
        HypothesisParams {
            beta: None,
            gamma_prime,
            alpha: None,
            holder_exponent: 1.0,
            delta: None,
            kappa: Some(kappa),
        }
    }

    /// `κ`, taken as given or computed as `(1+δ)/δ`.
    pub fn kappa(&self) -> Option<f64> {
        self.kappa.or(self.delta.map(|d| (1.0 + d) / d))
    }

    /// Every constraint violation; `dimension` is `D`.
    pub fn violations(&self, dimension: usize) -> Vec<String> {
        let mut v = Vec::new();
        let gp = self.gamma_prime;
        if !(gp > 0.0) {
            v.push(format!("γ′ > 0 (got {gp})"));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0) {
                v.push(format!("β > 0 (got {beta})"));
            } else if dimension > 0 && !(gp < beta / dimension as f64) {
                v.push(format!(
                    "γ′ < β/D (got γ′={gp}, β/D={})",
                    beta / dimension as f64
                ));
            }
        }
        let a = self.holder_exponent;
        if !(a > 0.0 && a <= 1.0) {
            v.push(format!("0 < α̂ ≤ 1 (got {a})"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                v.push(format!("δ > 0 (got {d})"));
            }
        }
        match (self.delta, self.kappa) {
            (Some(d), Some(k)) if d > 0.0 => {
                let conj = 1.0 / (1.0 + d) + 1.0 / k;
                if (conj - 1.0).abs() > 1e-12 {
                    v.push(format!(
                        "1/(1+δ) + 1/κ = 1 (got δ={d}, κ={k}: sum {conj})"
                    ));
                }
            }
            (None, None) => v.push("one of δ or κ is required".into()),
            _ => {}
        }
        if let Some(k) = self.kappa {
            if !(k >= 1.0) {
                v.push(format!("κ ≥ 1 (got {k})"));
            }
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub threshold: f64,
    /// `α > threshold`; false when α is unknown.
    pub satisfied: bool,
}

/// `α > [(1/D)(1 + Dκ(3/2 − 1/κ)) + 3/2] / min{γ′, 1/2}`.
pub fn check_exponent_condition(
    params: &HypothesisParams,
    dimension: usize,
) -> Result<ThresholdVerdict> {
    let gp = params.gamma_prime;
    if !(gp > 0.0) {
        return Err(Error::invalid(format!("γ′ must be positive (got {gp})")));
    }
    if dimension == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let kappa = params
        .kappa()
        .ok_or_else(|| Error::invalid("one of δ or κ is required"))?;
    let d = dimension as f64;
    let numerator = (1.0 / d) * (1.0 + d * kappa * (1.5 - 1.0 / kappa)) + 1.5;
    let threshold = numerator / gp.min(0.5);
    Ok(ThresholdVerdict {
        threshold,
        satisfied: params.alpha.is_some_and(|a| a > threshold),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBound {
    pub bound: f64,
    pub satisfied: bool,
}

/// `α_max < min{γ′, 1/2} / (min{γ′, 1/2} + (1/D)(1 + D/2) + 3/2)`.
pub fn check_gouezel_alpha_condition(alpha_max: f64, gamma_prime: f64, dimension: usize) -> AlphaBound {
    let d = dimension as f64;
    let m = gamma_prime.min(0.5);
    let bound = m / (m + (1.0 / d) * (1.0 + d / 2.0) + 1.5);
    AlphaBound {
        bound,
        satisfied: alpha_max < bound,
    }
}
