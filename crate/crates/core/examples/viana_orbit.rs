//! Viana maps: escape at the default parameter, bounded orbits at a
//! Misiurewicz parameter.

use skewevt::maps::{Coord, FixedCircle, IntervalCoord, ProductPoint, SystemDescriptor};
use skewevt::orbit::{iterate, OrbitConfig};

fn main() -> skewevt::Result<()> {
    let start = ProductPoint::new(
        vec![Coord::Fixed(FixedCircle::rational(1, 7)?)],
        vec![Coord::Interval(IntervalCoord::new(0.3, -2.0, 2.0)?)],
    );
    let cfg = OrbitConfig { n: 5_000, burn_in: 0, seed: 0, stream_id: 0 };

    for a0 in [2.0, 1.543_689_012_7] {
        let system = SystemDescriptor::Viana { d: 16, a0, alpha: 0.01, interval: [-2.0, 2.0] }.build()?;
        match iterate(&system, &start, &cfg) {
            Ok(orbit) => {
                let xs: Vec<f64> = orbit.iter().map(|p| p.fiber[0].value()).collect();
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                println!("a0 = {a0}: {} points, fiber range [{lo:.4}, {hi:.4}]", xs.len());
            }
            Err(e) => println!("a0 = {a0}: {e}"),
        }
    }
    Ok(())
}
