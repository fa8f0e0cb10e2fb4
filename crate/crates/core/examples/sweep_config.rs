//! Declarative sweep: parse a TOML config, apply overrides, run it and read
//! back the manifest.
//!
//! cargo run --example sweep_config [output-dir]

use hnwalk::experiment::{run, ExperimentConfig, RunManifest};

const CONFIG: &str = r#"
name = "sweep-example"
initial_state = "same-site"

[params]
L = 30
N = 2
delta = 0.04
F = 0.26

[schedule]
t_max = 24.2
n_snapshots = 243

[observables]
decomposition = true
correlator = true

[[sweep]]
parameter = "U"
values = [0.0, 2.0, 8.0]
"#;

fn main() -> hnwalk::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir()
            .join("hnwalk-sweep-example")
            .display()
            .to_string()
    });
    let config = ExperimentConfig::from_toml_str(CONFIG)?.with_overrides(&[
        format!("output_dir={out:?}"),
        "sweep.delta=0,0.04".to_string(),
    ])?;
    println!("{} sweep points", config.points().len());
    let manifest = run(&config)?;
    for p in &manifest.points {
        let d = &p.diagnostics;
        println!(
            "{:<18} norm^2 drift {:.2e}  doublon period {}",
            p.label,
            d.max_norm_deviation,
            d.doublon_spread_period
                .map(|v| format!("{v:.2}"))
                .unwrap_or("-".into())
        );
    }
    let root = config.output_root();
    let reread = RunManifest::load(&root)?;
    println!(
        "{} files checksum-verified in {}",
        reread.points.iter().map(|p| p.files.len()).sum::<usize>() - reread.verify(&root)?.len(),
        root.display()
    );
    Ok(())
}
