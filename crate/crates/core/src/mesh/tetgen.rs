//! TetGen `.node` / `.ele` text files.
//!
//! The node header is `N 3 0 B` (B = 0 or 1 boundary-marker column) and the
//! element header is `M 4 1` with one region attribute per tetrahedron:
//! 1 for protein, 2 for solvent. Indices may start at 0 or 1; the base is
//! taken from the first node index. `#` starts a comment.

use std::fmt::Write as _;

use super::{MeshError, RegionLabel, TetMesh};
use crate::geometry::Vec3;

/// Serialized `.node` and `.ele` contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TetgenFiles {
    pub node: String,
    pub ele: String,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn format_err(file: &'static str, line: usize, reason: impl Into<String>) -> MeshError {
    MeshError::Format {
        file,
        line,
        reason: reason.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    file: &'static str,
    line: usize,
    field: &str,
    what: &str,
) -> Result<T, MeshError> {
    field
        .parse()
        .map_err(|_| format_err(file, line, format!("{what} {field:?} is not valid")))
}

pub fn load_tetgen(node_text: &str, ele_text: &str) -> Result<TetMesh, MeshError> {
    const NODE: &str = "node";
    const ELE: &str = "ele";

    let mut lines = data_lines(node_text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| format_err(NODE, 1, "missing header"))?;
    if header.len() < 4 {
        return Err(format_err(NODE, hline, "header must be `N 3 0 B`"));
    }
    let n: usize = parse_field(NODE, hline, header[0], "vertex count")?;
    let dim: usize = parse_field(NODE, hline, header[1], "dimension")?;
    let n_attr: usize = parse_field(NODE, hline, header[2], "attribute count")?;
    let n_markers: usize = parse_field(NODE, hline, header[3], "boundary marker flag")?;
    if dim != 3 {
        return Err(format_err(NODE, hline, format!("dimension must be 3, got {dim}")));
    }
    if n_markers > 1 {
        return Err(format_err(NODE, hline, "boundary marker flag must be 0 or 1"));
    }

    let mut base = None;
    let mut vertices: Vec<Vec3> = Vec::with_capacity(n);
    for (line, fields) in lines.by_ref().take(n) {
        if fields.len() < 4 + n_attr + n_markers {
            return Err(format_err(NODE, line, "too few fields"));
        }
        let index: usize = parse_field(NODE, line, fields[0], "vertex index")?;
        let b = *base.get_or_insert(index);
        if b > 1 {
            return Err(format_err(NODE, line, "first vertex index must be 0 or 1"));
        }
        if index != vertices.len() + b {
            return Err(format_err(
                NODE,
                line,
                format!("expected vertex index {}, found {index}", vertices.len() + b),
            ));
        }
        let mut p: Vec3 = [0.0; 3];
        for d in 0..3 {
            p[d] = parse_field(NODE, line, fields[1 + d], "coordinate")?;
            if !p[d].is_finite() {
                return Err(format_err(NODE, line, "non-finite coordinate"));
            }
        }
        vertices.push(p);
    }
    if vertices.len() != n {
        return Err(format_err(
            NODE,
            hline,
            format!("header declares {n} vertices, found {}", vertices.len()),
        ));
    }
    let base = base.unwrap_or(0);

    let mut lines = data_lines(ele_text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| format_err(ELE, 1, "missing header"))?;
    if header.len() < 3 {
        return Err(format_err(ELE, hline, "header must be `M 4 1`"));
    }
    let m: usize = parse_field(ELE, hline, header[0], "tetrahedron count")?;
    let per: usize = parse_field(ELE, hline, header[1], "nodes per tetrahedron")?;
    let n_attr: usize = parse_field(ELE, hline, header[2], "attribute count")?;
    if per != 4 {
        return Err(format_err(ELE, hline, format!("expected 4 nodes per tetrahedron, got {per}")));
    }
    if n_attr != 1 {
        return Err(format_err(
            ELE,
            hline,
            format!("expected exactly 1 region attribute, got {n_attr}"),
        ));
    }

    let mut tets = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for (line, fields) in lines.take(m) {
        if fields.len() < 6 {
            return Err(format_err(ELE, line, "too few fields"));
        }
        let mut tet = [0usize; 4];
        for k in 0..4 {
            let idx: usize = parse_field(ELE, line, fields[1 + k], "vertex index")?;
            if idx < base || idx - base >= n {
                return Err(format_err(
                    ELE,
                    line,
                    format!("vertex index {idx} out of range for {n} vertices"),
                ));
            }
            tet[k] = idx - base;
        }
        let attr: f64 = parse_field(ELE, line, fields[5], "region attribute")?;
        let label = (attr.fract() == 0.0 && (1.0..=2.0).contains(&attr))
            .then(|| RegionLabel::from_attribute(attr as u8))
            .flatten()
            .ok_or_else(|| {
                format_err(ELE, line, format!("region attribute {attr} is not 1 or 2"))
            })?;
        tets.push(tet);
        labels.push(label);
    }
    if tets.len() != m {
        return Err(format_err(
            ELE,
            hline,
            format!("header declares {m} tetrahedra, found {}", tets.len()),
        ));
    }
    TetMesh::new(vertices, tets, labels)
}

/// Serialize with 1-based indices and shortest round-trip coordinates.
pub fn write_tetgen(mesh: &TetMesh) -> TetgenFiles {
    let mut node = String::new();
    let _ = writeln!(node, "{} 3 0 1", mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(
            node,
            "{} {:?} {:?} {:?} {}",
            i + 1,
            p[0],
            p[1],
            p[2],
            u8::from(mesh.is_boundary(i))
        );
    }
    let mut ele = String::new();
    let _ = writeln!(ele, "{} 4 1", mesh.n_tets());
    for (t, (tet, label)) in mesh.tets().iter().zip(mesh.labels()).enumerate() {
        let _ = writeln!(
            ele,
            "{} {} {} {} {} {}",
            t + 1,
            tet[0] + 1,
            tet[1] + 1,
            tet[2] + 1,
            tet[3] + 1,
            label.attribute()
        );
    }
    TetgenFiles { node, ele }
}
