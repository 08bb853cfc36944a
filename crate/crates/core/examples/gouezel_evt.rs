//! Extreme values for the Gouëzel skew product with fiber exponents in
//! `[0.10, 0.14]`, checked against the admissibility bound first.

use skewevt::evt::{empirical_evt_cdf, EvtExperiment, TargetSpec};
use skewevt::hypotheses::check_gouezel_alpha_condition;
use skewevt::maps::SystemDescriptor;
use skewevt::orbit::Ensemble;

fn main() -> skewevt::Result<()> {
    let desc = SystemDescriptor::Gouezel {
        alpha_min: 0.10,
        alpha_max: 0.14,
        center: 0.0,
    };
    let bound = check_gouezel_alpha_condition(0.14, 0.5, 2);
    println!(
        "α_max = 0.14 against bound {:.5}: {}",
        bound.bound,
        if bound.satisfied { "admissible" } else { "too large" }
    );

    let system = desc.build()?;
    let res = empirical_evt_cdf(
        &system,
        &EvtExperiment {
            n: 20_000,
            ensemble: Ensemble::new(1_000, 5),
            burn_in: system.default_burn_in(),
            target: TargetSpec::Sampled { burn_in: 10_000 },
            v_grid: vec![-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0],
            radii: vec![0.02, 0.01],
            diagnostic: None,
        },
        None,
    )?;
    println!(
        "target fiber x = {:.4}, H_hat = {:.3} ± {:.3}",
        res.target.fiber[0].value(),
        res.density.h_hat,
        res.density.h_hat_stderr
    );
    for r in &res.rows {
        println!("v = {:>4.1}: {:.4} vs {:.4}", r.v, r.empirical_cdf, r.theoretical_cdf);
    }
    println!("KS = {:.4}", res.ks_distance);
    Ok(())
}
