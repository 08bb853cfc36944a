//! Block maxima of `Φ(p) = −log d(p, p₀)` and their limit law.
//!
//! With `u_n = v + (1/D) log n`, the fraction of ensemble members whose
//! `Z_n = max(Φ, Φ∘f, …, Φ∘f^n)` stays below `u_n` is compared with the
//! Type I law `G(v) = exp(−H_scale · e^{−Dv})`.
//!
//! `H_scale` is the small-ball mass scale `lim ν(B_r(p₀)) / r^D`. For a
//! density `H = dν/dλ` it equals `c_D · H` with `c_D` the volume of the unit
//! ball of the product metric (2 for `D = 1`, π for `D = 2`); the paper-style
//! display `exp(−H e^{−Dv})` absorbs `c_D` into `H`. [`gumbel_limit`] takes
//! the scale directly, [`EvtResult`] reports both.
//!
//! The paper's printed limit reads `e^{H e^{−Dv}}` without the minus sign;
//! that expression exceeds one and is not a distribution function.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{product_metric, Axis, Dynamics, Geometry, ProductPoint, System};
use crate::orbit::{par_map, sample_member, Ensemble};
use crate::with_dynamics;

/// Stream id reserved for drawing a sampled target point.
pub const TARGET_STREAM: u64 = u64::MAX;

/// An experiment fails when more than this fraction of members diverge.
pub const MAX_DIVERGED_FRACTION: f64 = 0.01;

const CHUNK: usize = 1024;

#[inline]
pub fn phi_from_dist_sq(d2: f64) -> f64 {
    if d2 == 0.0 {
        f64::INFINITY
    } else {
        -0.5 * d2.ln()
    }
}

/// `Φ(p) = −log d(p, p₀)`; `+∞` when `p = p₀`.
pub fn observable_phi(p: &ProductPoint, target: &ProductPoint, geometry: &Geometry) -> Result<f64> {
    let d = product_metric(p, target, geometry)?;
    Ok(if d == 0.0 { f64::INFINITY } else { -d.ln() })
}

/// `u_n = v + (1/D) log n`. A block of length zero is scaled as `n = 1`.
pub fn scaling_un(v: f64, n: u64, dimension: usize) -> f64 {
    v + (n.max(1) as f64).ln() / dimension as f64
}

/// Maximum of observable values; `+∞` propagates.
pub fn block_maximum<I: IntoIterator<Item = f64>>(phis: I) -> Result<f64> {
    phis.into_iter()
        .reduce(f64::max)
        .ok_or_else(|| Error::invalid("block maximum of an empty orbit"))
}

/// `Z_n` of an orbit given as interchange points.
pub fn block_maximum_points(
    orbit: &[ProductPoint],
    target: &ProductPoint,
    geometry: &Geometry,
) -> Result<f64> {
    let phis = orbit
        .iter()
        .map(|p| observable_phi(p, target, geometry))
        .collect::<Result<Vec<_>>>()?;
    block_maximum(phis)
}

/// `exp(−h_scale · e^{−Dv})`.
pub fn gumbel_limit(v: f64, h_scale: f64, dimension: usize) -> f64 {
    (-h_scale * (-(dimension as f64) * v).exp()).exp()
}

/// Supremum distance between two curves sampled on the same grid.
pub fn ks_distance(empirical: &[f64], theoretical: &[f64]) -> f64 {
    assert_eq!(
        empirical.len(),
        theoretical.len(),
        "curves must share a grid"
    );
    empirical
        .iter()
        .zip(theoretical)
        .map(|(e, t)| (e - t).abs())
        .fold(0.0, f64::max)
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Reference-measure volume of `B_r(center)` inside the phase space.
///
/// Circle axes never truncate (for `r <= 1/2`); one interval axis is
/// supported and clipped exactly.
pub fn ball_volume(geometry: &Geometry, center: &ProductPoint, r: f64) -> Result<f64> {
    center.check(geometry)?;
    if !(r > 0.0) {
        return Err(Error::invalid(format!("ball radius {r} must be positive")));
    }
    let dim = geometry.dimension();
    let intervals: Vec<(usize, f64, f64)> = geometry
        .axes()
        .enumerate()
        .filter_map(|(i, a)| match *a {
            Axis::Interval { lo, hi } => Some((i, lo, hi)),
            Axis::Circle => None,
        })
        .collect();
    if r > 0.5 && intervals.len() < dim {
        return Err(Error::invalid(format!(
            "radius {r} wraps around a circle axis"
        )));
    }
    match (dim, intervals.as_slice()) {
        (_, []) => Ok(unit_ball_volume(dim) * r.powi(dim as i32)),
        (1, &[(i, lo, hi)]) => {
            let c = center.coords().nth(i).map(|c| c.value()).unwrap_or(0.0);
            Ok(((c + r).min(hi) - (c - r).max(lo)).max(0.0))
        }
        (2, &[(i, lo, hi)]) => {
            let c = center.coords().nth(i).map(|c| c.value()).unwrap_or(0.0);
            let a = (lo - c).clamp(-r, r);
            let b = (hi - c).clamp(-r, r);
            Ok(disc_slab(r, b) - disc_slab(r, a))
        }
        _ => Err(Error::invalid(format!(
            "ball volume not implemented for geometry {geometry:?}"
        ))),
    }
}

/// `∫_0^y 2 sqrt(r² − t²) dt` for `|y| <= r`.
fn disc_slab(r: f64, y: f64) -> f64 {
    let s = (r * r - y * y).max(0.0).sqrt();
    y * s + r * r * (y / r).clamp(-1.0, 1.0).asin()
}

/// Hit counts of an orbit against a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExceedanceCounts {
    /// `Σ_j 1{Φ∘f^j ≥ u}`.
    pub hits: u64,
    /// `1{Z_k ≥ u}`.
    pub max_exceeds: u64,
    /// `Σ_{l ≠ j} 1{Φ∘f^j ≥ u} 1{Φ∘f^l ≥ u}` over ordered pairs.
    pub ordered_pairs: u64,
}

pub fn exceedance_counts(phis: &[f64], u: f64) -> ExceedanceCounts {
    let hits = phis.iter().filter(|&&p| p >= u).count() as u64;
    ExceedanceCounts {
        hits,
        max_exceeds: u64::from(phis.iter().any(|&p| p >= u)),
        ordered_pairs: hits * hits.saturating_sub(1),
    }
}

// ---------------------------------------------------------------------------
// Orbit scanning

struct Probe<'a> {
    radii_sq: &'a [f64],
    /// Squared radius and look-back window of the pair statistic.
    pair: Option<(f64, u64)>,
}

#[derive(Clone, Debug, Default)]
struct Scan {
    min_d2: f64,
    visits: Vec<u64>,
    pair_visits: u64,
    pairs: u64,
}

/// Walk `steps + 1` points from `start`, recording the closest approach,
/// ball visits and recurrence pairs.
fn scan<S: Dynamics>(
    system: &S,
    start: S::State,
    target: &S::State,
    steps: u64,
    probe: &Probe<'_>,
) -> std::result::Result<Scan, u64> {
    let outer = probe.radii_sq.first().copied().unwrap_or(0.0);
    let (pair_r2, window) = probe.pair.unwrap_or((0.0, 0));
    let mut recent: VecDeque<u64> = VecDeque::new();
    let mut out = Scan {
        min_d2: f64::INFINITY,
        visits: vec![0; probe.radii_sq.len()],
        pair_visits: 0,
        pairs: 0,
    };
    let mut state = start;
    for t in 0..=steps {
        if t > 0 {
            state = system.step(state).map_err(|_| t)?;
        }
        let d2 = system.dist_sq(&state, target);
        if d2 < out.min_d2 {
            out.min_d2 = d2;
        }
        if d2 < outer {
            for (k, &r2) in probe.radii_sq.iter().enumerate() {
                if d2 < r2 {
                    out.visits[k] += 1;
                } else {
                    break;
                }
            }
        }
        if d2 < pair_r2 {
            while recent.front().is_some_and(|&s| t - s > window) {
                recent.pop_front();
            }
            out.pairs += recent.len() as u64;
            out.pair_visits += 1;
            recent.push_back(t);
        }
    }
    Ok(out)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("radii must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("radii must be strictly decreasing"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Local density

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub radius: f64,
    pub visits: u64,
    pub points: u64,
    pub ball_volume: f64,
    /// `ν(B_r) / λ(B_r)`.
    pub density: f64,
    pub stderr: f64,
}

/// Per-radius density estimates at one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDensity {
    pub rows: Vec<DensityRow>,
    /// Estimate at the smallest radius with at least one visit.
    pub h_hat: f64,
    pub h_hat_stderr: f64,
    pub used_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Integer visit tallies across members: `Σ v_i` and `Σ v_i²`.
#[derive(Clone, Debug, Default)]
struct Tally {
    sum: Vec<u64>,
    sum_sq: Vec<u128>,
}

impl Tally {
    fn new(len: usize) -> Self {
        Tally {
            sum: vec![0; len],
            sum_sq: vec![0; len],
        }
    }

    fn add(&mut self, visits: &[u64]) {
        for (k, &v) in visits.iter().enumerate() {
            self.sum[k] += v;
            self.sum_sq[k] += v as u128 * v as u128;
        }
    }

    fn merge(&mut self, other: &Tally) {
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }
}

fn density_from_tally(
    geometry: &Geometry,
    target: &ProductPoint,
    radii: &[f64],
    tally: &Tally,
    offset: usize,
    members: u64,
    points_per_member: u64,
) -> Result<LocalDensity> {
    let m = members as f64;
    let l = points_per_member as f64;
    let mut rows = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let vol = ball_volume(geometry, target, r)?;
        let s = tally.sum[offset + k] as f64;
        let s2 = tally.sum_sq[offset + k] as f64;
        // member fractions f_i = v_i / l; standard error of their mean
        let mean = s / (m * l);
        let var = if members > 1 {
            ((s2 / (l * l) - m * mean * mean) / (m - 1.0)).max(0.0)
        } else {
            f64::NAN
        };
        rows.push(DensityRow {
            radius: r,
            visits: tally.sum[offset + k],
            points: members * points_per_member,
            ball_volume: vol,
            density: mean / vol,
            stderr: (var / m).sqrt() / vol,
        });
    }
    let smallest = rows.last().ok_or_else(|| Error::invalid("no radii given"))?;
    let (used, warning) = if smallest.visits > 0 {
        (smallest, None)
    } else {
        match rows.iter().rev().find(|row| row.visits > 0) {
            Some(row) => (
                row,
                Some(format!(
                    "no visits within r={}; widen the radius (largest usable r={})",
                    smallest.radius, row.radius
                )),
            ),
            None => (
                smallest,
                Some(format!(
                    "no visits within any radius up to r={}; widen the radius",
                    rows[0].radius
                )),
            ),
        }
    };
    Ok(LocalDensity {
        h_hat: used.density,
        h_hat_stderr: used.stderr,
        used_radius: used.radius,
        rows: rows.clone(),
        warning,
    })
}

/// How density samples are produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySampling {
    pub ensemble: Ensemble,
    pub burn_in: u64,
    /// Orbit points used per member (1 = the burnt-in sample only).
    #[serde(default = "one_point")]
    pub points_per_member: u64,
}

fn one_point() -> u64 {
    1
}

/// Lebesgue-differentiation estimates of the invariant density at several
/// targets from one pass over the ensemble.
pub fn estimate_density_profile(
    system: &System,
    sampling: &DensitySampling,
    targets: &[(ProductPoint, Vec<f64>)],
    threads: Option<usize>,
) -> Result<Vec<LocalDensity>> {
    with_dynamics!(system, s => density_profile(s, sampling, targets, threads))
}

pub fn estimate_local_density(
    system: &System,
    sampling: &DensitySampling,
    target: &ProductPoint,
    radii: &[f64],
    threads: Option<usize>,
) -> Result<LocalDensity> {
    let mut out =
        estimate_density_profile(system, sampling, &[(target.clone(), radii.to_vec())], threads)?;
    Ok(out.remove(0))
}

fn density_profile<S: Dynamics>(
    system: &S,
    sampling: &DensitySampling,
    targets: &[(ProductPoint, Vec<f64>)],
    threads: Option<usize>,
) -> Result<Vec<LocalDensity>> {
    sampling.ensemble.validate()?;
    if sampling.points_per_member == 0 {
        return Err(Error::invalid("points_per_member must be at least 1"));
    }
    let mut states = Vec::with_capacity(targets.len());
    let mut offsets = Vec::with_capacity(targets.len());
    let mut all_r2 = Vec::new();
    for (p, radii) in targets {
        check_radii(radii)?;
        states.push(system.from_point(p)?);
        offsets.push(all_r2.len());
        all_r2.extend(radii.iter().map(|r| r * r));
    }
    let total = all_r2.len();
    let count = sampling.ensemble.count;
    let chunks = count.div_ceil(CHUNK);
    let steps = sampling.points_per_member - 1;

    let partial = par_map(chunks, threads, |c| -> Result<Tally> {
        let mut tally = Tally::new(total);
        let mut visits = vec![0u64; total];
        for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
            let start = sample_member(system, &sampling.ensemble, sampling.burn_in, i)?;
            visits.iter_mut().for_each(|v| *v = 0);
            let mut state = start;
            for t in 0..=steps {
                if t > 0 {
                    state = system
                        .step(state)
                        .map_err(|_| Error::OrbitDiverged { step: t })?;
                }
                for (j, target) in states.iter().enumerate() {
                    let d2 = system.dist_sq(&state, target);
                    let base = offsets[j];
                    for (k, r2) in all_r2[base..base + targets[j].1.len()].iter().enumerate() {
                        if d2 < *r2 {
                            visits[base + k] += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
            tally.add(&visits);
        }
        Ok(tally)
    });
    let mut tally = Tally::new(total);
    for t in partial {
        tally.merge(&t?);
    }
    let geometry = system.geometry();
    targets
        .iter()
        .zip(&offsets)
        .map(|((p, radii), &off)| {
            density_from_tally(
                &geometry,
                p,
                radii,
                &tally,
                off,
                count as u64,
                sampling.points_per_member,
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Short-range recurrence

/// `n Σ_{j=1}^{g} ν(Φ > u_n, Φ∘f^j > u_n)` with `g = ⌈n^{γ′}⌉`, estimated
/// from visit pairs along ensemble orbits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStatistic {
    pub value: f64,
    pub window: u64,
    pub radius: f64,
    pub visits: u64,
    pub pairs: u64,
    pub points: u64,
}

/// `⌈n^e⌉`, at least 1. Powers that land within rounding error of an
/// integer (`(10⁵)^{0.4}` evaluates to `100.00000000000001`) count as that
/// integer.
pub fn ceil_pow(n: u64, e: f64) -> u64 {
    let x = (n.max(1) as f64).powf(e);
    let r = x.round();
    let g = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.ceil() };
    (g as u64).max(1)
}

/// Look-back window `⌈n^{γ′}⌉` of the pair statistic.
pub fn pair_window(n: u64, gamma_prime: f64) -> u64 {
    ceil_pow(n, gamma_prime)
}

#[allow(clippy::too_many_arguments)]
pub fn short_range_pair_statistic(
    system: &System,
    target: &ProductPoint,
    n: u64,
    gamma_prime: f64,
    v: f64,
    sampling: &DensitySampling,
    threads: Option<usize>,
) -> Result<PairStatistic> {
    if !(gamma_prime > 0.0) {
        return Err(Error::invalid("γ′ must be positive"));
    }
    sampling.ensemble.validate()?;
    let dim = system.dimension();
    let radius = (-scaling_un(v, n, dim)).exp();
    let window = pair_window(n, gamma_prime);
    with_dynamics!(system, s => {
        let t = s.from_point(target)?;
        let probe = Probe { radii_sq: &[], pair: Some((radius * radius, window)) };
        let steps = sampling.points_per_member.max(1) - 1;
        let scans = par_map(sampling.ensemble.count, threads, |i| -> Result<Scan> {
            let start = sample_member(s, &sampling.ensemble, sampling.burn_in, i)?;
            scan(s, start, &t, steps, &probe).map_err(|step| Error::OrbitDiverged { step })
        });
        let (mut visits, mut pairs) = (0u64, 0u64);
        for sc in scans {
            let sc = sc?;
            visits += sc.pair_visits;
            pairs += sc.pairs;
        }
        let points = sampling.ensemble.count as u64 * (steps + 1);
        Ok(PairStatistic {
            value: n.max(1) as f64 * pairs as f64 / points as f64,
            window,
            radius,
            visits,
            pairs,
            points,
        })
    })
}

// ---------------------------------------------------------------------------
// The experiment

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Point(ProductPoint),
    /// Draw `p₀` from the invariant measure (uniform start plus burn-in).
    Sampled { burn_in: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDiagnostic {
    pub v: f64,
    pub gamma_prime: f64,
}

impl Default for PairDiagnostic {
    fn default() -> Self {
        PairDiagnostic {
            v: 0.0,
            gamma_prime: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvtExperiment {
    /// Block length: `Z_n` uses `n + 1` observations.
    pub n: u64,
    pub ensemble: Ensemble,
    /// Burn-in applied to each ensemble member.
    pub burn_in: u64,
    pub target: TargetSpec,
    pub v_grid: Vec<f64>,
    /// Strictly decreasing radii for the local density estimate.
    pub radii: Vec<f64>,
    #[serde(default)]
    pub diagnostic: Option<PairDiagnostic>,
}

impl EvtExperiment {
    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.v_grid.is_empty() {
            return Err(Error::invalid("v grid is empty"));
        }
        if self.v_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("v grid must be strictly increasing"));
        }
        if self.radii.is_empty() {
            return Err(Error::invalid("at least one density radius is required"));
        }
        check_radii(&self.radii)?;
        if let Some(d) = self.diagnostic {
            if !(d.gamma_prime > 0.0) {
                return Err(Error::invalid("diagnostic γ′ must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvtRow {
    pub v: f64,
    pub u_n: f64,
    pub empirical_cdf: f64,
    pub theoretical_cdf: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvtResult {
    pub rows: Vec<EvtRow>,
    pub ks_distance: f64,
    pub dimension: usize,
    pub n: u64,
    pub target: ProductPoint,
    pub density: LocalDensity,
    /// `c_D · H_hat`, the scale entering the theoretical curve.
    pub h_scale: f64,
    pub members: usize,
    pub diverged: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_statistic: Option<PairStatistic>,
    pub warnings: Vec<String>,
    /// `Z_n` of every surviving member, in member order.
    #[serde(skip)]
    pub maxima: Vec<f64>,
}

impl EvtResult {
    pub fn empirical(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.empirical_cdf).collect()
    }

    /// KS distance of the empirical rows against `exp(−h_scale e^{−Dv})`.
    pub fn ks_against(&self, h_scale: f64) -> f64 {
        let theo: Vec<f64> = self
            .rows
            .iter()
            .map(|r| gumbel_limit(r.v, h_scale, self.dimension))
            .collect();
        ks_distance(&self.empirical(), &theo)
    }
}

/// Fraction of `sorted` values strictly below `u`.
pub fn fraction_below(sorted: &[f64], u: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.partition_point(|&z| z < u) as f64 / sorted.len() as f64
}

pub fn empirical_evt_cdf(
    system: &System,
    experiment: &EvtExperiment,
    threads: Option<usize>,
) -> Result<EvtResult> {
    experiment.validate()?;
    with_dynamics!(system, s => run_evt(s, experiment, threads))
}

fn run_evt<S: Dynamics>(
    system: &S,
    exp: &EvtExperiment,
    threads: Option<usize>,
) -> Result<EvtResult> {
    let geometry = system.geometry();
    let dim = geometry.dimension();
    let target = match &exp.target {
        TargetSpec::Point(p) => system.from_point(p)?,
        TargetSpec::Sampled { burn_in } => {
            let ens = Ensemble::new(1, exp.ensemble.seed).with_stream(TARGET_STREAM);
            sample_member(system, &ens, *burn_in, 0)?
        }
    };
    let target_point = system.to_point(&target);

    let radii_sq: Vec<f64> = exp.radii.iter().map(|r| r * r).collect();
    let pair = exp.diagnostic.map(|d| {
        let r = (-scaling_un(d.v, exp.n, dim)).exp();
        (r * r, pair_window(exp.n, d.gamma_prime))
    });
    let probe = Probe {
        radii_sq: &radii_sq,
        pair,
    };

    let scans = par_map(exp.ensemble.count, threads, |i| {
        let start = sample_member(system, &exp.ensemble, exp.burn_in, i).ok()?;
        scan(system, start, &target, exp.n, &probe).ok()
    });

    let members = scans.len();
    let diverged = scans.iter().filter(|s| s.is_none()).count();
    let limit = (MAX_DIVERGED_FRACTION * members as f64).floor() as usize;
    if diverged > limit {
        return Err(Error::TooManyDiverged {
            diverged,
            total: members,
            limit,
        });
    }
    let survivors: Vec<Scan> = scans.into_iter().flatten().collect();

    let mut tally = Tally::new(radii_sq.len());
    let (mut pair_visits, mut pairs) = (0u64, 0u64);
    let mut maxima = Vec::with_capacity(survivors.len());
    for sc in &survivors {
        tally.add(&sc.visits);
        pair_visits += sc.pair_visits;
        pairs += sc.pairs;
        maxima.push(phi_from_dist_sq(sc.min_d2));
    }
    let points_per_member = exp.n + 1;
    let density = density_from_tally(
        &geometry,
        &target_point,
        &exp.radii,
        &tally,
        0,
        survivors.len() as u64,
        points_per_member,
    )?;
    let h_scale = unit_ball_volume(dim) * density.h_hat;

    let mut sorted = maxima.clone();
    sorted.sort_by(f64::total_cmp);
    let rows: Vec<EvtRow> = exp
        .v_grid
        .iter()
        .map(|&v| {
            let u_n = scaling_un(v, exp.n, dim);
            let empirical_cdf = fraction_below(&sorted, u_n);
            let theoretical_cdf = gumbel_limit(v, h_scale, dim);
            EvtRow {
                v,
                u_n,
                empirical_cdf,
                theoretical_cdf,
                abs_diff: (empirical_cdf - theoretical_cdf).abs(),
            }
        })
        .collect();
    let ks = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);

    let mut warnings = Vec::new();
    if let Some(w) = &density.warning {
        warnings.push(w.clone());
    }
    let smallest = *exp.radii.last().expect("validated non-empty");
    let window = pair_window(exp.n, exp.diagnostic.unwrap_or_default().gamma_prime);
    if let Some(j) = short_return(system, target, window, smallest * smallest) {
        warnings.push(format!(
            "target returns within r={smallest} of itself after {j} steps; \
             the limit law excludes such recurrent targets"
        ));
    }
    if diverged > 0 {
        warnings.push(format!("{diverged} of {members} members diverged and were dropped"));
    }

    let pair_statistic = pair.map(|(r2, window)| {
        let points = survivors.len() as u64 * points_per_member;
        PairStatistic {
            value: exp.n.max(1) as f64 * pairs as f64 / points as f64,
            window,
            radius: r2.sqrt(),
            visits: pair_visits,
            pairs,
            points,
        }
    });

    Ok(EvtResult {
        rows,
        ks_distance: ks,
        dimension: dim,
        n: exp.n,
        target: target_point,
        density,
        h_scale,
        members,
        diverged,
        pair_statistic,
        warnings,
        maxima,
    })
}

/// First `j <= window` with `d(f^j p, p)² < r2`.
fn short_return<S: Dynamics>(system: &S, p: S::State, window: u64, r2: f64) -> Option<u64> {
    let mut s = p;
    for j in 1..=window {
        s = system.step(s).ok()?;
        if system.dist_sq(&s, &p) < r2 {
            return Some(j);
        }
    }
    None
}
