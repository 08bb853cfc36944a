//! The LSV invariant density blows up like `x^{−ω}` at the neutral point.

use skewevt::evt::{estimate_density_profile, DensitySampling};
use skewevt::hypotheses::loglog_fit;
use skewevt::maps::{Coord, IntervalCoord, ProductPoint, SystemDescriptor};
use skewevt::orbit::Ensemble;

fn main() -> skewevt::Result<()> {
    let omega = 0.5;
    let system = SystemDescriptor::Lsv { omega }.build()?;
    let xs: Vec<f64> = (3..=7).map(|k| 0.5f64.powi(k)).collect();
    let targets: Vec<_> = xs
        .iter()
        .map(|&x| {
            let p = ProductPoint::new(vec![Coord::Interval(IntervalCoord::new(x, 0.0, 1.0)?)], vec![]);
            Ok((p, vec![x / 4.0]))
        })
        .collect::<skewevt::Result<_>>()?;

    // one long orbit per member keeps this quick; the acceptance suite uses
    // 10^6 independent members instead
    let sampling = DensitySampling {
        ensemble: Ensemble::new(200, 3),
        burn_in: 10_000,
        points_per_member: 50_000,
    };
    let profile = estimate_density_profile(&system, &sampling, &targets, None)?;
    for (x, d) in xs.iter().zip(&profile) {
        println!("x = {x:<9} density {:>7.3} ± {:.3}", d.h_hat, d.h_hat_stderr);
    }
    let hs: Vec<f64> = profile.iter().map(|d| d.h_hat).collect();
    let fit = loglog_fit(&xs, &hs).expect("positive densities");
    println!("log-log slope {:.3} (expected {})", fit.slope, -omega);
    Ok(())
}
