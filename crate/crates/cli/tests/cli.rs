use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nsmpb_core::mesh::{gen_born_mesh, load_tetgen, write_tetgen, BornMeshParams};

fn nsmpb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsmpb"))
        .args(args)
        .current_dir(dir)
        .env("NSMPB_THREADS", "1")
        .output()
        .expect("run nsmpb")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Text of one POINT_DATA block, from its SCALARS line up to the next one.
fn vtk_block<'a>(vtk: &'a str, name: &str) -> &'a str {
    let start = vtk.find(&format!("SCALARS {name} double 1")).expect("field present");
    let rest = &vtk[start..];
    let end = rest[1..].find("SCALARS").map_or(rest.len(), |i| i + 1);
    &rest[..end]
}

const BORN_12: &str = "molecule.charge = 1.0\nmesh.born.divisions = 12\noutput.prefix = \"out/born\"\n";

#[test]
fn born_solve_writes_artifacts_with_monotone_residuals() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "born.toml", BORN_12);
    let out = nsmpb(&["solve", "born.toml"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));

    let trace = fs::read_to_string(dir.path().join("out/born.trace.csv")).unwrap();
    let mut rows = trace.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (sel, abs, omega) = (col("selection"), col("abs_residual"), col("omega"));
    let rows: Vec<Vec<&str>> = rows.map(|r| r.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r[sel] == "2"), "selection 2 converges without restart");
    let residuals: Vec<f64> = rows.iter().map(|r| r[abs].parse().unwrap()).collect();
    assert!(residuals.len() >= 2);
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
    assert!(rows[1..].iter().all(|r| r[omega].parse::<f64>().unwrap() == 1.0));

    let vtk = fs::read_to_string(dir.path().join("out/born.vtk")).unwrap();
    for name in ["u", "phi_tilde", "zeta", "psi", "c_Cl", "c_NO3", "c_K", "c_Na"] {
        assert!(vtk.contains(&format!("SCALARS {name} double 1")), "missing {name}");
    }
    assert!(vtk.contains("SCALARS region int 1"));

    let report = fs::read_to_string(dir.path().join("out/born.report.txt")).unwrap();
    assert!(report.contains("  mesh.born.divisions = 12"));
    assert!(report.contains("  molecule.charge = 1.0"));
    assert!(report.contains("Number of vertices"));
    assert!(report.contains("2197"), "13^3 vertices in the mesh table");
    assert!(report.contains("Find Psi"));
    assert!(report.contains("converged: yes"));
}

#[test]
fn single_threaded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = "molecule.charge = 1.0\nmesh.born.divisions = 8\nparallel = false\n";
    write_config(dir.path(), "a.toml", text);
    write_config(dir.path(), "b.toml", text);
    for cfg in ["a.toml", "b.toml"] {
        let out = nsmpb(&["solve", cfg], dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    assert_eq!(read("a.vtk"), read("b.vtk"));
    assert_eq!(read("a.trace.csv"), read("b.trace.csv"));
    // The config path line and wall-clock timings differ by construction.
    let stable = |name: &str| {
        let text = String::from_utf8(read(name)).unwrap();
        let body = text.split("Timings").next().unwrap().to_string();
        body.lines().filter(|l| !l.starts_with("config:")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(stable("a.report.txt"), stable("b.report.txt"));
}

#[test]
fn eps_inf_above_eps_s_is_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "bad.toml", &format!("{BORN_12}solvent.eps_inf = 90.0\n"));
    let out = nsmpb(&["solve", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("solvent.eps_inf"), "{err}");
    assert!(err.contains("must not exceed solvent.eps_s"), "{err}");
    assert!(!dir.path().join("out").exists(), "nothing is written");
}

#[test]
fn config_errors_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let text = "model = \"pb\"\nmolecule.pqr = \"missing.pqr\"\nmesh.born.divisions = 8\nnewton.eta = 0.0\nlinar.rel_tol = 1e-6\n";
    write_config(dir.path(), "bad.toml", text);
    let out = nsmpb(&["solve", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for key in ["model:", "molecule.pqr:", "newton:", "linar.rel_tol: unknown key"] {
        assert!(err.contains(key), "missing {key} in {err}");
    }
}

#[test]
fn nmpb_and_zero_volume_nsmpb_give_identical_potentials() {
    let dir = tempfile::tempdir().unwrap();
    let species = "solvent.species = [\n\
        { name = \"Cl\", charge = -1, concentration = 0.1, radius = 0.0 },\n\
        { name = \"NO3\", charge = -1, concentration = 0.1, radius = 0.0 },\n\
        { name = \"K\", charge = 1, concentration = 0.1, radius = 0.0 },\n\
        { name = \"Na\", charge = 1, concentration = 0.1, radius = 0.0 },\n]\n";
    let base = format!("molecule.charge = 1.0\nmesh.born.divisions = 10\nparallel = false\n{species}");
    write_config(dir.path(), "nmpb.toml", &format!("model = \"nmpb\"\n{base}"));
    write_config(dir.path(), "nsmpb.toml", &format!("model = \"nsmpb\"\n{base}"));
    for cfg in ["nmpb.toml", "nsmpb.toml"] {
        let out = nsmpb(&["solve", cfg], dir.path());
        assert!(out.status.success(), "{cfg}: {}", stderr(&out));
    }
    let a = fs::read_to_string(dir.path().join("nmpb.vtk")).unwrap();
    let b = fs::read_to_string(dir.path().join("nsmpb.vtk")).unwrap();
    assert_eq!(vtk_block(&a, "u"), vtk_block(&b, "u"));
}

#[test]
fn linear_model_writes_an_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "lin.toml", "model = \"linear-nsmpb\"\nmolecule.charge = 1.0\nmesh.born.divisions = 6\n");
    let out = nsmpb(&["solve", "lin.toml"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = fs::read_to_string(dir.path().join("lin.trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);
    let report = fs::read_to_string(dir.path().join("lin.report.txt")).unwrap();
    assert!(report.contains("linear model, no Newton iteration"));
}

#[test]
fn solve_on_a_tetgen_mesh_and_pqr_molecule() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_born_mesh(BornMeshParams {
        divisions: 8,
        ..Default::default()
    })
    .unwrap();
    let files = write_tetgen(&mesh);
    fs::write(dir.path().join("m.node"), files.node).unwrap();
    fs::write(dir.path().join("m.ele"), files.ele).unwrap();
    fs::write(dir.path().join("ion.pqr"), "ATOM      1  NA  ION     1       0.100   0.200  -0.300  1.000 2.000\n").unwrap();
    let text = "molecule.pqr = \"ion.pqr\"\nmesh.node = \"m.node\"\nmesh.ele = \"m.ele\"\noutput.prefix = \"r\"\n";
    write_config(dir.path(), "run.toml", text);
    let out = nsmpb(&["solve", "run.toml"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("r.vtk").is_file());
}

#[test]
fn gen_mesh_writes_reloadable_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsmpb(&["gen-mesh", "-L", "20", "-a", "5", "-n", "4", "--out", "born4"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let node = fs::read_to_string(dir.path().join("born4.node")).unwrap();
    let ele = fs::read_to_string(dir.path().join("born4.ele")).unwrap();
    let reloaded = load_tetgen(&node, &ele).unwrap();
    assert_eq!(reloaded.n_vertices(), 125);
    let generated = gen_born_mesh(BornMeshParams {
        half_width: 20.0,
        sphere_radius: 5.0,
        divisions: 4,
    })
    .unwrap();
    assert_eq!(reloaded.vertices(), generated.vertices());
    assert_eq!(reloaded.tets(), generated.tets());
    assert_eq!(reloaded.labels(), generated.labels());
}

#[test]
fn gen_mesh_rejects_a_sphere_wider_than_the_box() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsmpb(&["gen-mesh", "-L", "5", "-a", "5", "-n", "4", "--out", "bad"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sphere_radius"));
    assert!(!dir.path().join("bad.node").exists());
}

#[test]
fn validate_reports_region_counts() {
    let dir = tempfile::tempdir().unwrap();
    let gen = nsmpb(&["gen-mesh", "-n", "6", "--out", "m"], dir.path());
    assert!(gen.status.success(), "{}", stderr(&gen));
    let out = nsmpb(&["validate", "m.node", "m.ele"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Number of vertices"));
    assert!(text.contains("343"), "7^3 vertices: {text}");
    assert!(text.contains("closed yes, orientable yes"));
    assert!(text.contains("orientation repairs: 0"));
}

const CUBE_NODE: &str = "8 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 1 1 0\n4 0 0 1\n5 1 0 1\n6 0 1 1\n7 1 1 1\n";

#[test]
fn validate_fails_without_an_interface() {
    let dir = tempfile::tempdir().unwrap();
    let ele = "6 4 1\n0 0 1 3 7 2\n1 0 1 5 7 2\n2 0 2 3 7 2\n3 0 2 6 7 2\n4 0 4 5 7 2\n5 0 4 6 7 2\n";
    fs::write(dir.path().join("c.node"), CUBE_NODE).unwrap();
    fs::write(dir.path().join("c.ele"), ele).unwrap();
    let out = nsmpb(&["validate", "c.node", "c.ele"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no protein-solvent interface"));
}

#[test]
fn validate_repairs_inverted_tetrahedra() {
    let dir = tempfile::tempdir().unwrap();
    // Two tetrahedra sharing the face (0, 1, 2), listed with both
    // orientations; one of them is inverted.
    let node = "5 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0 0 1\n4 0 0 -1\n";
    let ele = "2 4 1\n0 0 1 2 3 1\n1 0 1 2 4 2\n";
    fs::write(dir.path().join("t.node"), node).unwrap();
    fs::write(dir.path().join("t.ele"), ele).unwrap();
    let out = nsmpb(&["validate", "t.node", "t.ele"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("orientation repairs: 1"), "{}", stdout(&out));
}

#[test]
fn bad_thread_count_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nsmpb"))
        .args(["gen-mesh", "-n", "2", "--out", "m"])
        .current_dir(dir.path())
        .env("NSMPB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("NSMPB_THREADS"));
}
