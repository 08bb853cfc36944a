//! Seeded orbit generation and ensemble sampling of the invariant measure.
//!
//! Randomness is counter-based: member `i` of stream `s` under master seed
//! `m` always draws from the same ChaCha stream, whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{Dynamics, ProductPoint, System};
use crate::with_dynamics;

/// Resampling attempts for members whose burn-in diverges.
pub const MAX_RESAMPLE: u32 = 32;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitConfig {
    /// Iterations beyond the initial point.
    pub n: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

/// SplitMix64 finalizer, a bijection on `u64`.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of member `index` in `stream`; injective in `index` for fixed `(master, stream)`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let key = mix64(master ^ mix64(stream.wrapping_add(GOLDEN)));
    mix64(key.wrapping_add(index.wrapping_mul(GOLDEN)))
}

pub fn member_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

/// Map `f` over `0..count` in parallel, preserving index order.
///
/// `threads = None` uses the global rayon pool.
pub fn par_map<T, F>(count: usize, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let run = || (0..count).into_par_iter().map(&f).collect::<Vec<T>>();
    match threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

/// Lazily generated orbit `q, f(q), …, f^n(q)` where `q` is the start
/// advanced by the burn-in. An escape ends the stream with an error.
pub struct Orbit<'a, S: Dynamics> {
    system: &'a S,
    next: Option<Result<S::State>>,
    remaining: u64,
    step: u64,
}

impl<S: Dynamics> Iterator for Orbit<'_, S> {
    type Item = Result<S::State>;

    fn next(&mut self) -> Option<Self::Item> {
        let item = self.next.take()?;
        if let Ok(s) = item {
            if self.remaining > 0 {
                self.remaining -= 1;
                self.step += 1;
                let step = self.step;
                self.next = Some(
                    self.system
                        .step(s)
                        .map_err(|_| Error::OrbitDiverged { step }),
                );
            }
        }
        Some(item)
    }
}

/// Orbit stream of `n + 1` states after burn-in.
pub fn orbit<'a, S: Dynamics>(
    system: &'a S,
    p0: S::State,
    cfg: &OrbitConfig,
) -> Result<Orbit<'a, S>> {
    let start = advance(system, p0, cfg.burn_in)?;
    Ok(Orbit {
        system,
        next: Some(Ok(start)),
        remaining: cfg.n,
        step: cfg.burn_in,
    })
}

/// Advance `state` by `steps`, reporting the failing step index on escape.
pub fn advance<S: Dynamics>(system: &S, mut state: S::State, steps: u64) -> Result<S::State> {
    for i in 0..steps {
        state = system
            .step(state)
            .map_err(|_| Error::OrbitDiverged { step: i + 1 })?;
    }
    Ok(state)
}

/// The `n + 1` orbit points after burn-in, as internal states.
pub fn iterate_states<S: Dynamics>(
    system: &S,
    p0: S::State,
    cfg: &OrbitConfig,
) -> Result<Vec<S::State>> {
    orbit(system, p0, cfg)?.collect()
}

/// `iterate` over interchange points.
pub fn iterate(system: &System, p0: &ProductPoint, cfg: &OrbitConfig) -> Result<Vec<ProductPoint>> {
    with_dynamics!(system, s => {
        let start = s.from_point(p0)?;
        Ok(iterate_states(s, start, cfg)?
            .iter()
            .map(|x| s.to_point(x))
            .collect())
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sampling {
    /// Lebesgue-uniform start advanced by the burn-in.
    #[default]
    LebesgueBurnin,
    /// Fixed starting points (advanced by the burn-in).
    Explicit { points: Vec<ProductPoint> },
}


/// A seeded family of initial points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ensemble {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub sampling: Sampling,
}

impl Ensemble {
    pub fn new(count: usize, seed: u64) -> Self {
        Ensemble {
            count,
            seed,
            stream: 0,
            sampling: Sampling::LebesgueBurnin,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("ensemble count must be at least 1"));
        }
        if let Sampling::Explicit { points } = &self.sampling {
            if points.len() != self.count {
                return Err(Error::invalid(format!(
                    "explicit ensemble lists {} points but count is {}",
                    points.len(),
                    self.count
                )));
            }
        }
        Ok(())
    }
}

/// Draw member `index`: uniform start plus burn-in, resampled on divergence.
pub fn sample_member<S: Dynamics>(
    system: &S,
    ensemble: &Ensemble,
    burn_in: u64,
    index: usize,
) -> Result<S::State> {
    if let Sampling::Explicit { points } = &ensemble.sampling {
        let start = system.from_point(&points[index])?;
        return advance(system, start, burn_in);
    }
    let mut rng = member_rng(ensemble.seed, ensemble.stream, index as u64);
    let mut last = Error::OrbitDiverged { step: 0 };
    for _ in 0..MAX_RESAMPLE {
        let start = system.sample_reference(&mut rng);
        match advance(system, start, burn_in) {
            Ok(s) => return Ok(s),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// `count` approximate draws from the invariant measure.
pub fn sample_invariant_states<S: Dynamics>(
    system: &S,
    ensemble: &Ensemble,
    burn_in: u64,
    threads: Option<usize>,
) -> Result<Vec<S::State>> {
    ensemble.validate()?;
    par_map(ensemble.count, threads, |i| {
        sample_member(system, ensemble, burn_in, i)
    })
    .into_iter()
    .collect()
}

pub fn sample_invariant(
    system: &System,
    ensemble: &Ensemble,
    burn_in: u64,
    threads: Option<usize>,
) -> Result<Vec<ProductPoint>> {
    with_dynamics!(system, s => Ok(sample_invariant_states(s, ensemble, burn_in, threads)?
        .iter()
        .map(|x| s.to_point(x))
        .collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{
        CircleCoord, Coord, FixedCircle, IntervalCoord, LinearExpanding, Lsv, SystemDescriptor,
    };
    use std::collections::HashSet;

    fn fixed_point(num: u64, den: u64) -> ProductPoint {
        ProductPoint::new(
            vec![Coord::Fixed(FixedCircle::rational(num, den).unwrap())],
            vec![],
        )
    }

    fn cfg(n: u64) -> OrbitConfig {
        OrbitConfig {
            n,
            burn_in: 0,
            seed: 0,
            stream_id: 0,
        }
    }

    #[test]
    fn zero_length_orbit_is_the_start() {
        let sys = SystemDescriptor::LinearExpanding { d: 2 }.build().unwrap();
        let p = fixed_point(1, 3);
        assert_eq!(iterate(&sys, &p, &cfg(0)).unwrap(), vec![p]);
    }

    #[test]
    fn doubling_period_two() {
        let sys = SystemDescriptor::LinearExpanding { d: 2 }.build().unwrap();
        let orbit = iterate(&sys, &fixed_point(1, 3), &cfg(3)).unwrap();
        let expect: Vec<_> = [1, 2, 1, 2].iter().map(|&k| fixed_point(k, 3)).collect();
        assert_eq!(orbit, expect);
    }

    #[test]
    fn lsv_first_step() {
        let sys = SystemDescriptor::Lsv { omega: 0.5 }.build().unwrap();
        let p = ProductPoint::new(
            vec![Coord::Interval(IntervalCoord::new(0.25, 0.0, 1.0).unwrap())],
            vec![],
        );
        let orbit = iterate(&sys, &p, &cfg(1)).unwrap();
        assert_eq!(orbit[0].base[0].value(), 0.25);
        assert!((orbit[1].base[0].value() - 0.426_776_695_296_636_9).abs() < 1e-15);
    }

    #[test]
    fn viana_divergence_carries_step() {
        let sys = SystemDescriptor::Viana {
            d: 16,
            a0: 2.0,
            alpha: 0.01,
            interval: [-2.0, 2.0],
        }
        .build()
        .unwrap();
        let p = ProductPoint::new(
            vec![Coord::Fixed(FixedCircle::rational(1, 4).unwrap())],
            vec![Coord::Interval(IntervalCoord::new(0.0, -2.0, 2.0).unwrap())],
        );
        match iterate(&sys, &p, &cfg(5)) {
            Err(Error::OrbitDiverged { step }) => assert_eq!(step, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn single_member_without_burn_in_is_the_uniform_draw() {
        let sys = LinearExpanding::new(3).unwrap();
        let ens = Ensemble::new(1, 99);
        let got = sample_invariant_states(&sys, &ens, 0, Some(1)).unwrap();
        let mut rng = member_rng(99, 0, 0);
        assert_eq!(got, vec![FixedCircle::uniform(&mut rng)]);
    }

    #[test]
    fn sampling_is_thread_count_independent() {
        let sys = Lsv::new(0.4).unwrap();
        let ens = Ensemble::new(2_000, 7);
        let a = sample_invariant_states(&sys, &ens, 200, Some(1)).unwrap();
        let b = sample_invariant_states(&sys, &ens, 200, Some(3)).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn derived_seeds_never_collide() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for i in 0..1_000_000u64 {
            assert!(seen.insert(derive_seed(42, 3, i)), "collision at {i}");
        }
        assert_ne!(derive_seed(42, 0, 5), derive_seed(42, 1, 5));
        assert_ne!(derive_seed(42, 0, 5), derive_seed(43, 0, 5));
    }

    #[test]
    fn tripling_sample_is_uniform() {
        let sys = LinearExpanding::new(3).unwrap();
        let ens = Ensemble::new(100_000, 2024);
        let mut xs: Vec<f64> = sample_invariant_states(&sys, &ens, 100, None)
            .unwrap()
            .iter()
            .map(|x| x.value())
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max((x - (i + 1) as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS {ks}");
    }

    #[test]
    fn lsv_sample_piles_up_near_zero() {
        let sys = Lsv::new(0.3).unwrap();
        let ens = Ensemble::new(100_000, 5);
        let xs = sample_invariant_states(&sys, &ens, 10_000, None).unwrap();
        let mut hist = [0usize; 8];
        for x in xs {
            hist[((x * 8.0) as usize).min(7)] += 1;
        }
        // the invariant density is decreasing, blowing up like x^{-ω} at 0
        assert!(hist.windows(2).all(|w| w[0] > w[1]), "{hist:?}");
    }

    #[test]
    fn exact_tripling_has_long_period() {
        // The orbit of k ≠ 0 under k ↦ 3k mod P has period ord_P(3); check it
        // exceeds 10^9 using the factorisation of P − 1.
        const P: u128 = crate::maps::MODULUS as u128;
        let factors: [(u128, u32); 5] = [(2, 2), (11, 1), (137, 1), (547, 1), (5_594_472_617_641, 1)];
        assert_eq!(factors.iter().map(|&(q, e)| q.pow(e)).product::<u128>(), P - 1);
        let pow = |mut b: u128, mut e: u128| {
            let mut acc = 1u128;
            b %= P;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * b % P;
                }
                b = b * b % P;
                e >>= 1;
            }
            acc
        };
        for d in [2u128, 3, 4, 16] {
            let mut order = P - 1;
            for &(q, _) in &factors {
                while order.is_multiple_of(q) && pow(d, order / q) == 1 {
                    order /= q;
                }
            }
            assert_eq!(pow(d, order), 1);
            assert!(order > 1_000_000_000, "d={d} order {order}");
        }
        // and a sampled orbit does not revisit its start over a short window
        let sys = LinearExpanding::new(3).unwrap();
        let mut rng = member_rng(1, 2, 3);
        let x0 = FixedCircle::uniform(&mut rng);
        let mut x = x0;
        for _ in 0..1_000_000 {
            x = sys.step(x).unwrap();
            assert_ne!(x, x0);
        }
    }

    #[test]
    fn explicit_sampling_uses_given_points() {
        let sys = SystemDescriptor::flagship().build().unwrap();
        let pts = vec![ProductPoint::new(
            vec![Coord::Fixed(FixedCircle::ZERO)],
            vec![Coord::Circle(CircleCoord::new(0.25))],
        )];
        let ens = Ensemble {
            count: 1,
            seed: 0,
            stream: 0,
            sampling: Sampling::Explicit { points: pts.clone() },
        };
        assert_eq!(sample_invariant(&sys, &ens, 10, None).unwrap(), pts);
        let bad = Ensemble { count: 2, ..ens };
        assert!(sample_invariant(&sys, &bad, 0, None).is_err());
    }
}
