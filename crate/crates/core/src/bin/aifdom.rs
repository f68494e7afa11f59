use std::path::PathBuf;
use std::process::ExitCode;

use aif_dominance::experiment::{Command, Experiment, ExperimentError, Format};
use clap::{Parser, Subcommand, ValueEnum};

/// Dominance analysis of antithetic integral feedback circuits.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized verification points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write only one output format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the model and classify its attractor.
    Simulate,
    /// Jacobian eigenvalues over the region.
    Spectrum,
    /// Shifted Nyquist loci of the frozen loop over the region.
    Nyquist,
    /// Closed-loop poles of the frozen loop over a gain grid.
    Rootlocus,
    /// Solve for a dominance certificate.
    Certify,
    /// Check an existing certificate without solving.
    Verify {
        /// Certificate file, or `table1:baseline|high_sensing|high_conversion`.
        #[arg(long)]
        certificate: Option<String>,
    },
    /// Solve for a certificate valid over the parameter uncertainty box.
    RobustCertify,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Nyquist => Command::Nyquist,
        Cmd::Rootlocus => Command::RootLocus,
        Cmd::Certify => Command::Certify,
        Cmd::Verify { certificate } => Command::Verify { certificate },
        Cmd::RobustCertify => Command::RobustCertify,
    };
    let Some(path) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(1);
    };
    let mut exp = match Experiment::load(&path) {
        Ok(e) => e,
        Err(e) => return fail(None, &command, e),
    };
    if let Some(dir) = cli.out {
        exp = exp.with_out_dir(dir);
    }
    if let Some(seed) = cli.seed {
        exp = exp.with_seed(seed);
    }
    match cli.format {
        Some(FormatArg::Csv) => exp = exp.with_format(Format::Csv),
        Some(FormatArg::Json) => exp = exp.with_format(Format::Json),
        None => {}
    }
    match exp.run(&command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(Some(&exp), &command, e),
    }
}

fn fail(exp: Option<&Experiment>, command: &Command, err: ExperimentError) -> ExitCode {
    eprintln!("error: {err}");
    if let Some(exp) = exp {
        match exp.write_error(command, &err) {
            Ok(path) => eprintln!("diagnostics written to {}", path.display()),
            Err(e) => eprintln!("could not write diagnostics: {e}"),
        }
    }
    ExitCode::from(err.exit_code() as u8)
}
