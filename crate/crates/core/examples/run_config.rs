//! Drive a bundled configuration file through the same path as the CLI.

use std::path::Path;

use skewevt::config::{load_config, Experiment};
use skewevt::run::run_config;

fn main() -> skewevt::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/doubling_cocycle_evt.toml");
    let mut cfg = load_config(&path)?;
    if let Experiment::Evt(e) = &mut cfg.experiment {
        e.n = 5_000;
        e.ensemble = 1_000;
        e.radii = vec![0.04, 0.02];
    }
    cfg.out_dir = Some(std::env::temp_dir().join("skewevt-example"));

    let out = run_config(&cfg, None)?;
    println!("{}", serde_json::to_string_pretty(&out.summary["verdict"]).unwrap());
    println!("{}", std::fs::read_to_string(&out.csv_path)?);
    Ok(())
}
