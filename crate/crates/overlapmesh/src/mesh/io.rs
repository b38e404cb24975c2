//! Plain-text tetrahedral mesh format.
//!
//! ```text
//! tetmesh <num_vertices> <num_cells>
//! x y z            (one line per vertex, 17 significant digits)
//! v0 v1 v2 v3      (one line per cell, 0-based indices)
//! ```
//!
//! The format is self-describing and diffable; coordinates are written with
//! enough digits that a write/read round trip reproduces every `f64` bit
//! for bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::TetMesh;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the mesh text format. Lines are 1-based in error messages.
/// Cells with negative volume are accepted and orientation-normalized.
pub fn parse_mesh(text: &str) -> Result<TetMesh> {
    let mut lines = text.lines().enumerate();

    let (first_no, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input, expected `tetmesh <nv> <nc>` header"))?;
    let mut header = first.split_whitespace();
    if header.next() != Some("tetmesh") {
        return Err(parse_err(first_no + 1, "expected `tetmesh` magic"));
    }
    let nv: usize = header
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(first_no + 1, "bad vertex count"))?;
    let nc: usize = header
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(first_no + 1, "bad cell count"))?;
    if header.next().is_some() {
        return Err(parse_err(first_no + 1, "trailing tokens in header"));
    }

    // Capacity capped so hostile headers cannot force huge allocations.
    let mut vertices = Vec::with_capacity(nv.min(1 << 20));
    let mut last_line = first_no + 1;
    while vertices.len() < nv {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(last_line, format!("expected {nv} vertex lines")))?;
        last_line = no + 1;
        let mut it = line.split_whitespace();
        let mut coords = [0.0f64; 3];
        for c in coords.iter_mut() {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(no + 1, "vertex line needs 3 coordinates"))?;
            *c = tok
                .parse()
                .map_err(|_| parse_err(no + 1, format!("bad coordinate `{tok}`")))?;
            if !c.is_finite() {
                return Err(parse_err(no + 1, "non-finite coordinate"));
            }
        }
        if it.next().is_some() {
            return Err(parse_err(no + 1, "trailing tokens on vertex line"));
        }
        vertices.push(Point3::new(coords[0], coords[1], coords[2]));
    }

    let mut cells = Vec::with_capacity(nc.min(1 << 20));
    while cells.len() < nc {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(last_line, format!("expected {nc} cell lines")))?;
        last_line = no + 1;
        let mut it = line.split_whitespace();
        let mut cell = [0usize; 4];
        for v in cell.iter_mut() {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(no + 1, "cell line needs 4 vertex indices"))?;
            *v = tok
                .parse()
                .map_err(|_| parse_err(no + 1, format!("bad vertex index `{tok}`")))?;
            if *v >= nv {
                return Err(parse_err(
                    no + 1,
                    format!("vertex index {v} out of range (num vertices {nv})"),
                ));
            }
        }
        if it.next().is_some() {
            return Err(parse_err(no + 1, "trailing tokens on cell line"));
        }
        cells.push(cell);
    }

    for (no, line) in lines {
        if !line.trim().is_empty() {
            return Err(parse_err(no + 1, "unexpected content after last cell"));
        }
    }

    TetMesh::new(vertices, cells)
}

/// Serializes a mesh in the text format.
pub fn mesh_to_string(mesh: &TetMesh) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "tetmesh {} {}",
        mesh.num_vertices(),
        mesh.num_cells()
    )
    .unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).unwrap();
    }
    for c in mesh.cells() {
        writeln!(out, "{} {} {} {}", c[0], c[1], c[2], c[3]).unwrap();
    }
    out
}

pub fn write_mesh(mesh: &TetMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TetMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_cube_mesh;

    #[test]
    fn round_trip_is_identity() {
        let m = unit_cube_mesh(2).unwrap();
        let text = mesh_to_string(&m);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(m.num_vertices(), back.num_vertices());
        assert_eq!(m.cells(), back.cells());
        assert_eq!(m.vertices(), back.vertices());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("overlapmesh-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cube.mesh");
        let m = unit_cube_mesh(2).unwrap();
        write_mesh(&m, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(m.vertices(), back.vertices());
        assert_eq!(m.cells(), back.cells());
    }

    #[test]
    fn out_of_range_index_is_parse_error() {
        let text = "tetmesh 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 9\n";
        match parse_mesh(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn negative_volume_cell_is_normalized() {
        // (0 2 1 3) is the negatively oriented reference tet.
        let text = "tetmesh 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 2 1 3\n";
        let m = parse_mesh(text).unwrap();
        assert!(m.cell_volume(0) > 0.0);
    }

    #[test]
    fn malformed_inputs_are_rejected_with_line_numbers() {
        for (text, line) in [
            ("", 1),
            ("trimesh 1 1", 1),
            ("tetmesh x 1", 1),
            ("tetmesh 4 1\n0 0\n", 2),
            ("tetmesh 4 1\n0 0 zero\n", 2),
            ("tetmesh 1 0\ninf 0 0\n", 2),
            ("tetmesh 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2\n", 6),
            ("tetmesh 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3\nextra\n", 7),
        ] {
            match parse_mesh(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "input {text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }
}
