//! `fan`: assemble and inspect plugins, operate the transparency log, and
//! drive the attack and defense simulator.

mod ftl_cmd;
mod plugin_cmd;
mod sim_cmd;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fan", version, about = "Anonymous-network plugin toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble, inspect, load and benchmark plugin bundles
    #[command(subcommand)]
    Plugin(plugin_cmd::PluginCmd),
    /// Operate or query a transparency log
    #[command(subcommand)]
    Ftl(ftl_cmd::FtlCmd),
    /// Run dropmark attack and defense experiments
    #[command(subcommand)]
    Sim(sim_cmd::SimCmd),
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Plugin(cmd) => plugin_cmd::run(cmd),
        Command::Ftl(cmd) => ftl_cmd::run(cmd),
        Command::Sim(cmd) => sim_cmd::run(cmd),
    }
}
