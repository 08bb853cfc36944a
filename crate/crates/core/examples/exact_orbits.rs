//! Exact circle arithmetic: rational orbits stay periodic and random starts
//! never collapse onto a short cycle.

use skewevt::maps::{FixedCircle, MODULUS};

fn main() -> skewevt::Result<()> {
    let third = FixedCircle::rational(1, 3)?;
    let orbit: Vec<f64> = std::iter::successors(Some(third), |x| Some(x.times(2)))
        .take(5)
        .map(FixedCircle::value)
        .collect();
    println!("doubling from 1/3: {orbit:?}");

    let mut x = FixedCircle::from_residue(123_456_789)?;
    let start = x;
    let steps = 10_000_000u64;
    for _ in 0..steps {
        x = x.times(3);
        assert_ne!(x, start, "short cycle");
    }
    println!("tripling k/{MODULUS}: no return within {steps} steps");
    Ok(())
}
