use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use vidcast::{commands, io, Output, RunArgs};

/// Restricted flooding and wavelet video coding experiments.
#[derive(Parser)]
#[command(name = "vidcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump every node's neighbor table and forwarding directive as json.
    Discover(RunArgs),
    /// Flood one message and report dissemination counts.
    Flood(RunArgs),
    /// Flood in both modes; adds a ratio column (rrdbfsf / naive).
    Compare(RunArgs),
    /// Encode raw 8-bit video into a bitstream.
    Compress(RunArgs),
    /// Decode a bitstream back to raw 8-bit video.
    Decompress(RunArgs),
    /// Encode, packetize and flood a video; report each node's decode.
    Transmit(RunArgs),
}

type Handler = fn(&RunArgs) -> Result<Output>;

fn run(cli: Cli) -> Result<bool> {
    // compress and decompress write their payload to --out and report on
    // stdout; the rest send their report to --out.
    let (args, handler, report_to_out): (RunArgs, Handler, bool) = match cli.command {
        Command::Discover(a) => (a, commands::discover, true),
        Command::Flood(a) => (a, commands::flood, true),
        Command::Compare(a) => (a, commands::compare, true),
        Command::Compress(a) => (a, commands::compress, false),
        Command::Decompress(a) => (a, commands::decompress, false),
        Command::Transmit(a) => (a, commands::transmit, true),
    };
    let args = args.resolve()?;
    let output = handler(&args)?;
    io::emit(if report_to_out { args.out() } else { None }, &output.bytes)?;
    Ok(output.ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: not every node received and decoded the message");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
