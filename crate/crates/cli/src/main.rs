//! `bqsp`: compile, verify and benchmark bosonic QSP gates.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 numeric
//! failure.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Parser, Debug)]
#[command(name = "bqsp", version, about = "Quantum-signal-processing compiler for bosonic gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile a gate spec JSON into a schedule JSON.
    Synth {
        /// Gate spec JSON.
        spec: PathBuf,
        /// Output path for the compiled gate.
        #[arg(short, long, default_value = "compiled_gate.json")]
        out: PathBuf,
    },
    /// Simulate a compiled gate and check it against its target.
    Verify {
        /// Compiled gate JSON.
        gate: PathBuf,
        /// Report output path; printed to stdout only when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Qumode truncation (per mode for two-mode gates).
        #[arg(long)]
        n_trunc: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        max_infidelity: f64,
        #[arg(long, default_value_t = 1e-6)]
        max_leakage: f64,
        /// Bound on each node error.
        #[arg(long, default_value_t = 1e-5)]
        max_node_error: f64,
        #[arg(long, default_value_t = 1e-9)]
        max_defect: f64,
    },
    /// Random SNAP gates: QSP at its fixed gate time against the multi-tone
    /// baseline over a range of gate times.
    Sweep {
        #[arg(long, value_enum, default_value_t = BackendArg::Dispersive)]
        backend: BackendArg,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Number of baseline gate times, evenly spaced up to `t_max`.
        #[arg(long, default_value_t = 8)]
        times: usize,
        /// Longest baseline gate time; defaults to 8π (dispersive) or the
        /// QSP gate time (JC).
        #[arg(long)]
        t_max: Option<f64>,
        /// Largest integration step; lowered automatically to the stability
        /// bound.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// JC kernel powers (both or neither).
        #[arg(long, requires = "s")]
        h: Option<usize>,
        #[arg(long, requires = "h")]
        s: Option<usize>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(short, long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Prepare a k-component cat from a coherent state with a mod-k gate.
    Cat {
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 64)]
        n_trunc: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// Directory for `wigner_input.csv` and `wigner_output.csv`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Noiseless linear amplification on the g branch.
    Nla {
        #[arg(long, default_value_t = 2.0)]
        gain: f64,
        #[arg(long, default_value_t = 7)]
        n_max: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = StateArg::Coherent)]
        state: StateArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        n_trunc: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        /// Directory for `wigner_before.csv` and `wigner_after.csv`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(clap::Args, Debug, Clone, Copy)]
pub struct GridArgs {
    /// Half width of the square phase-space window.
    #[arg(long, default_value_t = 6.0)]
    pub grid_half_width: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 81)]
    pub grid_points: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendArg {
    Dispersive,
    Jc,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateArg {
    Coherent,
    Cat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
