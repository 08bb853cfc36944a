use skewevt::hypotheses::{estimate_correlation_decay, DecaySpec, MonteCarlo, TestFunction};
use skewevt::maps::SystemDescriptor;

fn main() -> skewevt::Result<()> {
    let doubling = SystemDescriptor::LinearExpanding { d: 2 }.build()?;
    let mc = MonteCarlo::new(1_000_000, 7);

    let saw = DecaySpec {
        upsilon: TestFunction::sawtooth(),
        psi: TestFunction::sawtooth(),
        j_list: (1..=8).collect(),
        fit_range: None,
        holder_exponent: 1.0,
    };
    let report = estimate_correlation_decay(&doubling, &saw, &mc, None)?;
    println!("sawtooth x − 1/2 (exact 2^-j / 12)");
    for r in &report.rows {
        let exact = 0.5f64.powi(r.j as i32) / 12.0;
        println!("  j = {:>2}  {:+.3e} ± {:.1e}  exact {:.3e}", r.j, r.correlation, r.stderr, exact);
    }

    let cos = DecaySpec {
        upsilon: TestFunction::cos(),
        psi: TestFunction::cos(),
        ..saw
    };
    let report = estimate_correlation_decay(&doubling, &cos, &mc, None)?;
    println!("cos 2πx (exact 0), ‖Υ‖ = {:?}", report.upsilon_holder_norm);
    for r in &report.rows {
        println!("  j = {:>2}  {:+.3e} ± {:.1e}", r.j, r.correlation, r.stderr);
    }
    Ok(())
}
