//! A complete experiment bundle written to a temporary directory.

use qcrit::pipeline::{run_experiment, ExperimentConfig, ExperimentKind, Model};

fn main() -> qcrit::Result<()> {
    let mut config = ExperimentConfig::new(ExperimentKind::SpinwaveGap, vec![30, 60], 17);
    config.model = Model::PowerLaw;
    config.power = Some(0.9);
    let out = std::env::temp_dir().join("qcrit-example");
    let bundle = run_experiment(&config, Some(&out))?;
    println!("{}", serde_json::to_string_pretty(&bundle.summary)?);
    for c in &bundle.manifest.checks {
        println!("check {}: deviation {:.2e}", c.name, c.deviation);
    }
    for f in &bundle.manifest.files {
        println!("{}  {}", &f.sha256[..12], f.path);
    }
    Ok(())
}
