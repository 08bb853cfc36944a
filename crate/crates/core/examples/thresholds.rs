use skewevt::hypotheses::{check_exponent_condition, check_gouezel_alpha_condition, HypothesisParams};

fn main() -> skewevt::Result<()> {
    for (kappa, dim) in [(2.0, 2), (1.0, 2), (2.0, 1)] {
        let v = check_exponent_condition(&HypothesisParams::new(0.5, kappa), dim)?;
        println!("D = {dim}, κ = {kappa}, γ′ = 0.5: α must exceed {}", v.threshold);
    }
    for gp in [0.1, 0.25, 0.5, 0.9] {
        let b = check_gouezel_alpha_condition(0.15, gp, 2);
        println!("γ′ = {gp}: α_max < {:.5}, 0.15 {}", b.bound, if b.satisfied { "ok" } else { "fails" });
    }

    let mut p = HypothesisParams::new(0.6, 2.0);
    p.beta = Some(1.0);
    p.delta = Some(1.0);
    println!("violations: {:?}", p.violations(2));
    Ok(())
}
