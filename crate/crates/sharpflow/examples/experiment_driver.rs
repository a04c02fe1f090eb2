//! Programmatic use of the experiment driver (the same machinery behind the
//! `sharpflow run` / `sharpflow sweep` binary): build a configuration, run
//! an experiment in memory, and write the three artifacts (manifest.json,
//! results.csv, summary.txt) to a directory.

use sharpflow::cli::{config_hash, run_experiment, write_artifacts, ExperimentConfig};

fn main() -> sharpflow::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = "coefficients".into();
    cfg.cutoff = 15.0;
    cfg.out_dir = std::env::temp_dir()
        .join("sharpflow_example")
        .to_string_lossy()
        .into_owned();

    println!("config hash: {}", config_hash(&cfg));
    let out = run_experiment(&cfg)?;
    for line in &out.summary {
        println!("{line}");
    }
    write_artifacts(&cfg, &out, std::path::Path::new(&cfg.out_dir))?;
    println!("artifacts written to {}", cfg.out_dir);
    Ok(())
}
