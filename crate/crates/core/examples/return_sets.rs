//! Measure of the rapidly returning sets `E_n` for the doubling map, and
//! the product version on the flagship system.

use skewevt::hypotheses::{estimate_en_measure, estimate_product_en_measure, MonteCarlo, ReturnWindow};
use skewevt::maps::SystemDescriptor;

fn main() -> skewevt::Result<()> {
    let doubling = SystemDescriptor::LinearExpanding { d: 2 }.build()?;
    let mc = MonteCarlo::new(200_000, 1);

    let single = estimate_en_measure(&doubling, &[10], ReturnWindow::Fixed { g: 1 }, &mc, None, None)?;
    println!("g = 1, n = 10: μ(E_n) = {:.4} (exact 0.2)", single.rows[0].measure);

    let window = ReturnWindow::Power { gamma_prime: 0.2, dimension: 2 };
    let report = estimate_en_measure(&doubling, &[100, 1_000, 10_000, 100_000], window, &mc, None, None)?;
    for r in &report.rows {
        println!("n = {:>6}  g = {:>3}  μ(E_n) = {:.3e} ± {:.1e}", r.n, r.g, r.measure, r.stderr);
    }
    println!("β̂ = {:.3}", report.beta_hat.unwrap_or(f64::NAN));

    let flagship = SystemDescriptor::flagship().build()?;
    let product = estimate_product_en_measure(&flagship, &[10, 100, 1_000], window, &mc, None, None)?;
    println!("flagship, {} inclusion violations", product.inclusion_violations);
    for (p, b) in product.product.rows.iter().zip(&product.base.rows) {
        println!("n = {:>5}  product {:.3e}  base {:.3e}", p.n, p.measure, b.measure);
    }
    Ok(())
}
