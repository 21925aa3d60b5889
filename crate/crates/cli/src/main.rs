//! `nsmpb`: solve, generate synthetic meshes and check TetGen meshes.
//!
//! Exit status is 0 on success, 1 when a run fails and 2 when the
//! command line, the configuration or the mesh parameters are invalid.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;
mod threads;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsmpb_core::mesh::{BornMeshParams, MeshError};

use crate::config::ConfigErrors;

#[derive(Debug, Parser)]
#[command(name = "nsmpb", version, about = "Nonlocal size-modified Poisson-Boltzmann finite element solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the problem described by a configuration file and write
    /// <prefix>.vtk, <prefix>.trace.csv and <prefix>.report.txt.
    Solve {
        config: PathBuf,
    },
    /// Write a box mesh with a spherical protein region as <out>.node and
    /// <out>.ele.
    GenMesh {
        /// The box is [-L, L]^3.
        #[arg(long, short = 'L', default_value_t = 20.0)]
        half_width: f64,
        /// Radius of the protein sphere at the origin.
        #[arg(long, short = 'a', default_value_t = 5.0)]
        radius: f64,
        /// Cells per box edge.
        #[arg(long, short = 'n', default_value_t = 12)]
        divisions: usize,
        /// Output prefix.
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Load a TetGen mesh and print its region counts and quality checks.
    Validate {
        node: PathBuf,
        ele: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config } => commands::cmd_solve(&config),
        Command::GenMesh {
            half_width,
            radius,
            divisions,
            out,
        } => commands::cmd_gen_mesh(
            BornMeshParams {
                half_width,
                sphere_radius: radius,
                divisions,
            },
            &out,
        ),
        Command::Validate { node, ele } => commands::cmd_validate(&node, &ele),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid_input = e.downcast_ref::<ConfigErrors>().is_some()
                || matches!(e.downcast_ref::<MeshError>(), Some(MeshError::InvalidParameters(_)));
            ExitCode::from(if invalid_input { 2 } else { 1 })
        }
    }
}
