//! Command-line orchestration over `sitr_core`.
//!
//! Every command serializes its resolved arguments to `run_config.json`
//! before doing any work. Errors map to stable exit codes, see [`exit_code`].

mod args;
mod commands;

use std::path::Path;

use serde::Serialize;
use sitr_core::Error;

pub use args::{AblateArgs, Cli, Command, EvalArgs, GenArgs, HeadArgs, ModelArgs, PretrainArgs, ReconstructArgs, RenderArgs};
pub use commands::{ablate, eval_transfer, gen, pretrain, reconstruct, render, Summary};

pub const RUN_CONFIG_FILE: &str = "run_config.json";

/// 2 usage, 3 IO or format, 4 numeric, 5 contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Format { .. } => 3,
        Error::NonFinite { .. } => 4,
        Error::Manifest(_) | Error::Contract(_) | Error::Tensor(_) => 5,
    }
}

#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    command: &'a str,
    global_seed: Option<u64>,
    out_dir: &'a Path,
    log_level: String,
    threads: usize,
    args: &'a A,
}

pub(crate) fn write_run_config<A: Serialize>(
    cli: &Cli,
    command: &str,
    seed: Option<u64>,
    out_dir: &Path,
    args: &A,
) -> sitr_core::Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let cfg = RunConfig {
        command,
        global_seed: seed,
        out_dir,
        log_level: std::env::var("SITR_LOG").unwrap_or_else(|_| "info".into()),
        threads: cli.threads,
        args,
    };
    let p = out_dir.join(RUN_CONFIG_FILE);
    std::fs::write(&p, serde_json::to_string_pretty(&cfg).expect("serializable")).map_err(|e| Error::io(&p, e))
}

/// Runs one parsed invocation.
pub fn run(cli: &Cli) -> sitr_core::Result<()> {
    if cli.threads > 0 {
        // A pool may already exist when several invocations share a process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match &cli.command {
        Command::Gen(a) => gen(cli, a).map(|_| ()),
        Command::Pretrain(a) => pretrain(cli, a).map(|_| ()),
        Command::EvalTransfer(a) => eval_transfer(cli, a).map(|_| ()),
        Command::Render(a) => render(cli, a),
        Command::Reconstruct(a) => reconstruct(cli, a),
        Command::Ablate(a) => ablate(cli, a).map(|_| ()),
    }
}
