use std::process::ExitCode;

use anyhow::Context;
use bohm_tunnel::cli::{emit, parse_config, run, Cli, Command};
use bohm_tunnel::oracle::fixtures::write_fixtures;
use bohm_tunnel::verify::VerifyOptions;
use clap::Parser;

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    if let Command::Fixtures { out } = &cli.command {
        write_fixtures(out).with_context(|| format!("writing fixtures to {}", out.display()))?;
        return Ok(ExitCode::SUCCESS);
    }
    let (Some(mode), Some(common)) = (cli.command.mode(), cli.command.common()) else {
        unreachable!("every other subcommand carries common arguments");
    };
    let request = parse_config(mode, common.config.as_deref(), common.settings()).context("invalid configuration")?;
    let options =
        VerifyOptions { flip_j0_sign: matches!(cli.command, Command::Verify { inject_j0_sign_flip: true, .. }) };
    let output = run(&request, options)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    emit(&output.text, request.output_path.as_deref())?;
    Ok(if output.success { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
