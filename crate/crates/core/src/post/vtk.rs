use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::PostError;
use crate::geometry::Vec3;
use crate::mesh::TetMesh;

/// Written in place of values that are undefined (concentrations inside
/// the protein) or not finite (the potential at an atom center).
pub const VTK_UNDEFINED: f64 = -1.0e30;

const VTK_TETRA: u8 = 10;

/// Write a legacy ASCII VTK unstructured grid with region labels as cell
/// data (1 protein, 2 solvent) and one point-data scalar per field.
pub fn write_vtk<S: AsRef<str>, F: AsRef<[f64]>>(
    mesh: &TetMesh,
    fields: &[(S, F)],
    path: &Path,
) -> Result<(), PostError> {
    check_lengths(mesh, fields)?;
    let wrap = |source| PostError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    write_vtk_to(mesh, fields, &mut w)?;
    w.flush().map_err(wrap)
}

pub fn write_vtk_to<S: AsRef<str>, F: AsRef<[f64]>, W: Write>(
    mesh: &TetMesh,
    fields: &[(S, F)],
    w: &mut W,
) -> Result<(), PostError> {
    check_lengths(mesh, fields)?;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "nsmpb solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} {}", fmt(p[0]), fmt(p[1]), fmt(p[2]))?;
    }
    let nt = mesh.n_tets();
    writeln!(w, "CELLS {nt} {}", 5 * nt)?;
    for t in mesh.tets() {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "{VTK_TETRA}")?;
    }
    writeln!(w, "CELL_DATA {nt}")?;
    writeln!(w, "SCALARS region int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for l in mesh.labels() {
        writeln!(w, "{}", l.attribute())?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
        for (name, values) in fields {
            writeln!(w, "SCALARS {} double 1", sanitize(name.as_ref()))?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for &v in values.as_ref() {
                writeln!(w, "{}", fmt(if v.is_finite() { v } else { VTK_UNDEFINED }))?;
            }
        }
    }
    Ok(())
}

fn check_lengths<S: AsRef<str>, F: AsRef<[f64]>>(mesh: &TetMesh, fields: &[(S, F)]) -> Result<(), PostError> {
    for (name, values) in fields {
        if values.as_ref().len() != mesh.n_vertices() {
            return Err(PostError::FieldLength {
                name: name.as_ref().to_string(),
                len: values.as_ref().len(),
                expected: mesh.n_vertices(),
            });
        }
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// VTK array names may not contain whitespace.
fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect()
}

/// Contents of a legacy ASCII VTK file as written by [`write_vtk`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkData {
    pub points: Vec<Vec3>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub cell_scalars: Vec<(String, Vec<f64>)>,
    pub point_scalars: Vec<(String, Vec<f64>)>,
}

impl VtkData {
    pub fn point_field(&self, name: &str) -> Option<&[f64]> {
        self.point_scalars.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// Minimal reader for the subset of legacy ASCII VTK that [`write_vtk`]
/// produces: POINTS, CELLS, CELL_TYPES and SCALARS sections.
pub fn parse_vtk(text: &str) -> Result<VtkData, PostError> {
    let mut tokens = text
        .lines()
        .enumerate()
        .skip(3)
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .peekable();
    let mut data = VtkData::default();
    let mut section_len = 0usize;
    let mut in_point_data = false;

    fn next<'a>(it: &mut impl Iterator<Item = (usize, &'a str)>, what: &str) -> Result<(usize, &'a str), PostError> {
        it.next().ok_or_else(|| PostError::Parse {
            line: 0,
            reason: format!("unexpected end of file, expected {what}"),
        })
    }
    fn num<T: std::str::FromStr>((line, t): (usize, &str)) -> Result<T, PostError> {
        t.parse().map_err(|_| PostError::Parse {
            line,
            reason: format!("cannot parse {t:?}"),
        })
    }

    while let Some((line, keyword)) = tokens.next() {
        match keyword {
            "DATASET" => {
                next(&mut tokens, "dataset type")?;
            }
            "POINTS" => {
                let n: usize = num(next(&mut tokens, "point count")?)?;
                next(&mut tokens, "point type")?;
                for _ in 0..n {
                    let mut p = [0.0; 3];
                    for c in &mut p {
                        *c = num(next(&mut tokens, "coordinate")?)?;
                    }
                    data.points.push(p);
                }
            }
            "CELLS" => {
                let n: usize = num(next(&mut tokens, "cell count")?)?;
                next(&mut tokens, "cell list size")?;
                for _ in 0..n {
                    let k: usize = num(next(&mut tokens, "cell size")?)?;
                    let cell = (0..k)
                        .map(|_| next(&mut tokens, "cell index").and_then(num))
                        .collect::<Result<Vec<usize>, _>>()?;
                    data.cells.push(cell);
                }
            }
            "CELL_TYPES" => {
                let n: usize = num(next(&mut tokens, "cell type count")?)?;
                for _ in 0..n {
                    data.cell_types.push(num(next(&mut tokens, "cell type")?)?);
                }
            }
            "CELL_DATA" | "POINT_DATA" => {
                section_len = num(next(&mut tokens, "data count")?)?;
                in_point_data = keyword == "POINT_DATA";
            }
            "SCALARS" => {
                let name = next(&mut tokens, "array name")?.1.to_string();
                next(&mut tokens, "array type")?;
                if tokens.peek().is_some_and(|(_, t)| *t != "LOOKUP_TABLE") {
                    next(&mut tokens, "component count")?;
                }
                if tokens.peek().is_some_and(|(_, t)| *t == "LOOKUP_TABLE") {
                    tokens.next();
                    next(&mut tokens, "lookup table name")?;
                }
                let values = (0..section_len)
                    .map(|_| next(&mut tokens, "scalar value").and_then(num))
                    .collect::<Result<Vec<f64>, _>>()?;
                if in_point_data {
                    data.point_scalars.push((name, values));
                } else {
                    data.cell_scalars.push((name, values));
                }
            }
            other => {
                return Err(PostError::Parse {
                    line,
                    reason: format!("unsupported keyword {other:?}"),
                })
            }
        }
    }
    Ok(data)
}
