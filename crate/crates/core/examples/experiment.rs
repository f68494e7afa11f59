//! Drive the workflow from a configuration file, as the command-line tool does.
//!
//! `cargo run --example experiment -- configs/fig4b_high_sensing_region.toml certify`

use std::path::PathBuf;

use aif_dominance::experiment::{Command, Experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fig3a_baseline_simulate.toml"));
    let command = match args.next().as_deref().unwrap_or("simulate") {
        "simulate" => Command::Simulate,
        "spectrum" => Command::Spectrum,
        "nyquist" => Command::Nyquist,
        "rootlocus" => Command::RootLocus,
        "certify" => Command::Certify,
        "robust-certify" => Command::RobustCertify,
        "verify" => Command::Verify { certificate: args.next() },
        other => return Err(format!("unknown command {other}").into()),
    };
    let exp = Experiment::load(&config)?.with_out_dir(std::env::temp_dir().join("aif-experiment"));
    println!("config hash {}", exp.config_hash);
    for path in exp.run(&command)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
