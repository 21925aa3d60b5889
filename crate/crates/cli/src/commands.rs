use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use nsmpb_core::mesh::{gen_born_mesh, load_tetgen, validate, write_tetgen, BornMeshParams, TetMesh};
use nsmpb_core::model::{parse_pqr, Molecule};
use nsmpb_core::post::{write_trace_csv, write_vtk, SolutionBundle};
use nsmpb_core::solver::{solve, NewtonTrace, SolveConfig};

use crate::config::{MeshSource, MoleculeSource, RunConfig};
use crate::report::solve_report;
use crate::threads::init_pool;

/// `prefix` with `suffix` appended to its last component.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Paths of the three artifacts written by a solve.
pub fn artifact_paths(prefix: &Path) -> [PathBuf; 3] {
    [".vtk", ".trace.csv", ".report.txt"].map(|ext| with_suffix(prefix, ext))
}

pub fn cmd_solve(config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    init_pool(cfg.parallel)?;
    for (k, v) in &cfg.overrides {
        log::info!("config {k} = {v}");
    }

    let t = Instant::now();
    let mesh = match &cfg.mesh {
        MeshSource::Born(params) => gen_born_mesh(*params).context("generating the Born mesh")?,
        MeshSource::Tetgen { node, ele } => load_mesh(node, ele)?,
    };
    let mesh_time = t.elapsed();
    let stats = validate(&mesh);
    log::info!("mesh: {} vertices, {} tetrahedra", stats.vertices_total, stats.tets_total);

    let molecule = match &cfg.molecule {
        MoleculeSource::Pqr(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_pqr(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        MoleculeSource::Ion { charge, center } => Molecule::single_ion(*center, *charge, 0.0),
    };

    let [vtk_path, trace_path, report_path] = artifact_paths(&cfg.output_prefix);
    if let Some(dir) = cfg.output_prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    }

    let solve_config = SolveConfig {
        newton: cfg.newton.clone(),
        linear: cfg.linear,
        boundary_g: None,
        mesh_time: Some(mesh_time),
    };
    let solution = match solve(cfg.model, &mesh, &molecule, &cfg.solvent, &solve_config) {
        Ok(s) => s,
        Err(e) => {
            if let Some(trace) = e.trace() {
                write_trace(trace, &trace_path)?;
                log::info!("wrote the failed Newton trace to {}", trace_path.display());
            }
            return Err(e).context("solve failed");
        }
    };
    let bundle = SolutionBundle::new(&mesh, solution);

    write_vtk(&mesh, &bundle.vtk_fields(), &vtk_path)?;
    write_trace(bundle.trace.as_ref().unwrap_or(&NewtonTrace::default()), &trace_path)?;
    let report = solve_report(config_path, &cfg, &stats, &bundle);
    fs::write(&report_path, &report).with_context(|| format!("writing {}", report_path.display()))?;

    if let Some(trace) = &bundle.trace {
        println!(
            "converged in {} Newton iterations (selection {}), residual {:.3e}",
            trace.iterations(),
            trace.selection().unwrap_or(0),
            trace.final_residual().unwrap_or(f64::NAN)
        );
    }
    for p in [&vtk_path, &trace_path, &report_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn write_trace(trace: &NewtonTrace, path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_trace_csv(trace, std::io::BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))
}

fn load_mesh(node: &Path, ele: &Path) -> Result<TetMesh> {
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    load_tetgen(&read(node)?, &read(ele)?)
        .with_context(|| format!("loading {} and {}", node.display(), ele.display()))
}

pub fn cmd_gen_mesh(params: BornMeshParams, out: &Path) -> Result<()> {
    init_pool(true)?;
    let mesh = gen_born_mesh(params)?;
    let files = write_tetgen(&mesh);
    let node = with_suffix(out, ".node");
    let ele = with_suffix(out, ".ele");
    fs::write(&node, &files.node).with_context(|| format!("writing {}", node.display()))?;
    fs::write(&ele, &files.ele).with_context(|| format!("writing {}", ele.display()))?;

    let reloaded = load_mesh(&node, &ele)?;
    if reloaded.vertices() != mesh.vertices() || reloaded.tets() != mesh.tets() || reloaded.labels() != mesh.labels()
    {
        bail!("{} and {} do not reload to the generated mesh", node.display(), ele.display());
    }
    println!("{}", validate(&mesh).to_text().trim_end());
    println!("wrote {}", node.display());
    println!("wrote {}", ele.display());
    Ok(())
}

/// Prints the mesh report. An empty interface is a failure; a surface
/// that is not closed only warns.
pub fn cmd_validate(node: &Path, ele: &Path) -> Result<()> {
    let mesh = load_mesh(node, ele)?;
    let report = validate(&mesh);
    println!("{}", report.to_text().trim_end());
    if report.interface_triangles == 0 {
        bail!("the mesh has no protein-solvent interface");
    }
    if !report.interface_ok() {
        log::warn!("the interface surface is not closed and consistently oriented");
    }
    Ok(())
}
