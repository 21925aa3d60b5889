use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::mesh::test_meshes::{two_tets, unit_cube};
use crate::mesh::{gen_born_mesh, BornMeshParams, RegionLabel, TetMesh};
use crate::model::{build_solvent_model, default_species, DielectricParams, PhysicalConstants, SolventModel};
use crate::solver::{solve, ModelKind, NewtonTrace, SolveConfig};

fn solvent() -> SolventModel {
    build_solvent_model(default_species(), DielectricParams::default(), None, PhysicalConstants::default()).unwrap()
}

fn one_tet() -> TetMesh {
    TetMesh::new(
        vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        vec![[0, 1, 2, 3]],
        vec![RegionLabel::Solvent],
    )
    .unwrap()
}

fn born(n: usize) -> TetMesh {
    gen_born_mesh(BornMeshParams {
        divisions: n,
        ..Default::default()
    })
    .unwrap()
}

fn vtk_string<S: AsRef<str>, F: AsRef<[f64]>>(mesh: &TetMesh, fields: &[(S, F)]) -> String {
    let mut buf = Vec::new();
    write_vtk_to(mesh, fields, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn rest_state_concentrations() {
    let s = solvent();
    let c = concentrations(&[0.0], &s, &[0], 40.0);
    assert_eq!(c.len(), 4);
    for field in &c {
        assert!((field.values[0].unwrap() - 0.095923).abs() < 1e-6);
    }
    assert_eq!(c[0].species, s.species[0].name);
}

#[test]
fn concentrations_absent_off_the_vertex_set() {
    let c = concentrations(&[0.0, 1.0, f64::NAN], &solvent(), &[1, 2], 40.0);
    for field in &c {
        assert_eq!(field.values[0], None);
        assert!(field.values[1].is_some());
        assert_eq!(field.values[2], None);
        assert_eq!(field.defined().count(), 1);
    }
}

#[test]
fn cations_vanish_at_large_potential() {
    let s = solvent();
    let c = concentrations(&[200.0], &s, &[0], 400.0);
    for (field, sp) in c.iter().zip(&s.species) {
        if sp.charge_number > 0 {
            assert!(field.values[0].unwrap() < 1e-80);
        }
    }
}

proptest! {
    #[test]
    fn concentrations_positive_and_saturated(u in -80.0f64..80.0) {
        let s = solvent();
        let c = concentrations(&[u], &s, &[0], 40.0);
        let total: f64 = c.iter().map(|f| f.values[0].unwrap()).sum();
        prop_assert!(c.iter().all(|f| f.values[0].unwrap() > 0.0));
        prop_assert!(s.crowding() * total < 1.0);
    }
}

#[test]
fn one_tet_vtk_matches_golden_file() {
    let golden = include_str!("../../tests/data/one_tet.vtk");
    assert_eq!(vtk_string(&one_tet(), &[("f", [0.0, 1.0, 2.0, 3.0])]), golden);
}

#[test]
fn vtk_rejects_wrong_field_length() {
    let err = write_vtk_to(&one_tet(), &[("f", [0.0, 1.0])], &mut Vec::new()).unwrap_err();
    assert!(matches!(err, PostError::FieldLength { len: 2, expected: 4, .. }));
}

#[test]
fn vtk_region_labels_are_one_and_two() {
    let mesh = two_tets();
    let data = parse_vtk(&vtk_string::<&str, Vec<f64>>(&mesh, &[])).unwrap();
    assert_eq!(data.cell_scalars[0].0, "region");
    assert_eq!(data.cell_scalars[0].1, vec![1.0, 2.0]);
    assert_eq!(data.cell_types, vec![10, 10]);
    assert!(data.point_scalars.is_empty());
}

#[test]
fn vtk_writes_sentinel_for_non_finite_values() {
    let data = parse_vtk(&vtk_string(&one_tet(), &[("u", [f64::NAN, 1.0, f64::INFINITY, 0.5])])).unwrap();
    assert_eq!(data.point_field("u").unwrap(), &[VTK_UNDEFINED, 1.0, VTK_UNDEFINED, 0.5]);
}

#[test]
fn vtk_unwritable_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.vtk");
    let err = write_vtk(&one_tet(), &[("f", [0.0; 4])], &path).unwrap_err();
    assert!(matches!(err, PostError::Write { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn vtk_round_trips_exactly(values in proptest::collection::vec(-1e300f64..1e300, 8), scale in -1e-300f64..1e-300) {
        let mesh = unit_cube(RegionLabel::Solvent);
        let small: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let data = parse_vtk(&vtk_string(&mesh, &[("a", &values), ("b", &small)])).unwrap();
        prop_assert_eq!(data.point_field("a").unwrap(), values.as_slice());
        prop_assert_eq!(data.point_field("b").unwrap(), small.as_slice());
        prop_assert_eq!(&data.points, &mesh.vertices().to_vec());
        let cells: Vec<Vec<usize>> = mesh.tets().iter().map(|t| t.to_vec()).collect();
        prop_assert_eq!(data.cells, cells);
    }
}

#[test]
fn interpolation_at_vertices_is_exact() {
    let mesh = born(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let field: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for (s, f) in interpolate(&mesh, &field, mesh.vertices()).iter().zip(&field) {
        assert!((s.value - f).abs() < 1e-12);
        assert!(!s.extrapolated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn interpolation_reproduces_linear_fields(x in -19.9f64..19.9, y in -19.9f64..19.9, z in -19.9f64..19.9) {
        let mesh = born(6);
        let field: Vec<f64> = mesh.vertices().iter().map(|p| 2.0 * p[0] - p[1] + 0.5 * p[2] + 1.0).collect();
        let s = interpolate(&mesh, &field, &[[x, y, z]])[0];
        prop_assert!(!s.extrapolated);
        prop_assert!((s.value - (2.0 * x - y + 0.5 * z + 1.0)).abs() < 1e-9);
    }
}

#[test]
fn points_outside_are_flagged() {
    let mesh = unit_cube(RegionLabel::Solvent);
    let field: Vec<f64> = mesh.vertices().iter().map(|p| p[0]).collect();
    let s = interpolate(&mesh, &field, &[[1.0 + 1e-6, 0.5, 0.5], [0.5, 0.5, 0.5]]);
    assert!(s[0].extrapolated);
    assert!((s[0].value - (1.0 + 1e-6)).abs() < 1e-9);
    assert!(!s[1].extrapolated);
}

#[test]
fn average_error_of_identical_fields_is_zero() {
    let mesh = born(6);
    let u: Vec<f64> = mesh.vertices().iter().map(|p| p[0].sin() + p[2]).collect();
    assert_eq!(average_error(&mesh, &u, &mesh, &u).unwrap(), 0.0);
}

#[test]
fn average_error_of_linear_interpolant_is_zero() {
    let (coarse, fine) = (born(6), born(10));
    let f = |p: &[f64; 3]| 3.0 * p[0] - 2.0 * p[1] + p[2];
    let uc: Vec<f64> = coarse.vertices().iter().map(f).collect();
    let uf: Vec<f64> = fine.vertices().iter().map(f).collect();
    assert!(average_error(&coarse, &uc, &fine, &uf).unwrap() < 1e-12);
}

#[test]
fn average_error_is_homogeneous_in_the_difference() {
    let (coarse, fine) = (born(6), born(8));
    let uc: Vec<f64> = coarse.vertices().iter().map(|p| (p[0] / 7.0).cos()).collect();
    let uf: Vec<f64> = fine.vertices().iter().map(|p| (p[0] / 7.0).cos()).collect();
    let e = average_error(&coarse, &uc, &fine, &uf).unwrap();
    let uc3: Vec<f64> = uc.iter().map(|v| 3.0 * v).collect();
    let uf3: Vec<f64> = uf.iter().map(|v| 3.0 * v).collect();
    let e3 = average_error(&coarse, &uc3, &fine, &uf3).unwrap();
    assert!(e > 0.0);
    assert!((e3 - 3.0 * e).abs() < 1e-12 * e3);
}

#[test]
fn average_error_divides_by_coarse_vertex_count() {
    let mesh = unit_cube(RegionLabel::Solvent);
    let zero = vec![0.0; 8];
    let one = vec![1.0; 8];
    // ||1||_{L2} over the unit cube is 1.
    let e = average_error(&mesh, &one, &mesh, &zero).unwrap();
    assert!((e - 1.0 / 8.0).abs() < 1e-15);
}

#[test]
fn average_error_rejects_other_domains() {
    let a = unit_cube(RegionLabel::Solvent);
    let b = born(4);
    let err = average_error(&a, &[0.0; 8], &b, &vec![0.0; b.n_vertices()]).unwrap_err();
    assert!(matches!(err, PostError::DomainMismatch(_)));
}

#[test]
fn average_error_rejects_non_finite_values() {
    let a = unit_cube(RegionLabel::Solvent);
    let mut u = vec![0.0; 8];
    u[5] = f64::NAN;
    let err = average_error(&a, &u, &a, &[0.0; 8]).unwrap_err();
    assert!(matches!(err, PostError::NonFinite { which: "coarse", vertex: 5 }));
}

#[test]
fn trace_csv_has_one_row_per_step() {
    let mesh = born(8);
    let sol = solve(
        ModelKind::Nsmpb,
        &mesh,
        &crate::model::Molecule::single_ion([0.0; 3], 1.0, 5.0),
        &solvent(),
        &SolveConfig::default(),
    )
    .unwrap();
    let trace: NewtonTrace = sol.trace.clone().unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("selection,iteration,abs_residual,rel_residual,diff_norm,omega"));
    assert_eq!(lines.len(), 1 + trace.attempts.len() + trace.attempts.iter().map(|a| a.records.len()).sum::<usize>());
    assert!(lines[1].starts_with("2,0,"));

    let bundle = SolutionBundle::new(&mesh, sol);
    let names: Vec<String> = bundle.vtk_fields().into_iter().map(|(n, _)| n).collect();
    assert_eq!(&names[..4], &["u", "phi_tilde", "zeta", "psi"]);
    assert_eq!(names.len(), 8);
    for c in &bundle.concentrations {
        for (v, value) in c.defined() {
            assert!(value > 0.0);
            assert!(!mesh.touches_protein(v));
        }
    }
}
