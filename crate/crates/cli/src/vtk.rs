//! Legacy ASCII VTK polydata: moved triangle geometry with one cell scalar.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use moverfv::{CellState, MeshSnapshot};

use crate::error::{CliError, CliResult};

/// Contents of a polydata file as written by [`write_vtk`].
#[derive(Clone, Debug, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub polygons: Vec<[usize; 3]>,
    /// Cell scalar `u`, absent for geometry-only files.
    pub cell_values: Option<Vec<f64>>,
}

/// Renders the file text. Numbers use 17 significant digits so they read
/// back bit for bit.
pub fn render_vtk(snapshot: &MeshSnapshot, values: Option<&[f64]>, title: &str) -> String {
    let tris = snapshot.mesh().triangles();
    let mut s = String::with_capacity(64 * (snapshot.vertices.len() + tris.len()));
    s.push_str("# vtk DataFile Version 3.0\n");
    let title = title.replace('\n', " ");
    let _ = writeln!(s, "{title}");
    s.push_str("ASCII\nDATASET POLYDATA\n");
    let _ = writeln!(s, "POINTS {} double", snapshot.vertices.len());
    for p in &snapshot.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x(), p.y(), p.z());
    }
    let _ = writeln!(s, "POLYGONS {} {}", tris.len(), 4 * tris.len());
    for [a, b, c] in tris {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    if let Some(values) = values {
        let _ = writeln!(s, "CELL_DATA {}", values.len());
        s.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
        for u in values {
            let _ = writeln!(s, "{u:.16e}");
        }
    }
    s
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes the moved mesh of `snapshot` with the cell values of `state`.
pub fn write_vtk(snapshot: &MeshSnapshot, state: &CellState, path: &Path) -> CliResult<()> {
    if state.values.len() != snapshot.num_cells() {
        return Err(CliError::Core(moverfv::Error::Domain(format!(
            "state has {} values for {} cells",
            state.values.len(),
            snapshot.num_cells()
        ))));
    }
    let title = format!("moverfv t={:.16e} step={}", state.time, state.step_index);
    write_text(path, &render_vtk(snapshot, Some(&state.values), &title))
}

/// Writes the geometry of `snapshot` without cell data.
pub fn write_mesh_vtk(snapshot: &MeshSnapshot, path: &Path) -> CliResult<()> {
    let title = format!("moverfv mesh t={:.16e}", snapshot.time);
    write_text(path, &render_vtk(snapshot, None, &title))
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn bad(&self, message: impl Into<String>) -> CliError {
        CliError::Parse {
            path: self.path.to_path_buf(),
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> CliResult<&'a str> {
        loop {
            match self.inner.next() {
                Some(l) if l.trim().is_empty() => continue,
                Some(l) => return Ok(l.trim()),
                None => return Err(self.bad(format!("unexpected end of file, expected {what}"))),
            }
        }
    }

    fn header(&mut self, keyword: &str) -> CliResult<Vec<&'a str>> {
        let line = self.next(keyword)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.first() != Some(&keyword) {
            return Err(self.bad(format!("expected {keyword}, found '{line}'")));
        }
        Ok(parts)
    }

    fn count(&self, s: Option<&&str>, what: &str) -> CliResult<usize> {
        s.and_then(|x| x.parse().ok())
            .ok_or_else(|| self.bad(format!("bad {what} count")))
    }

    fn float(&self, s: &str) -> CliResult<f64> {
        s.parse().map_err(|_| self.bad(format!("bad number '{s}'")))
    }
}

/// Parses a file produced by [`write_vtk`] or [`write_mesh_vtk`].
pub fn parse_vtk(text: &str, path: &Path) -> CliResult<VtkData> {
    let mut r = Lines {
        path,
        inner: text.lines().peekable(),
    };
    if r.next("header")? != "# vtk DataFile Version 3.0" {
        return Err(r.bad("not a legacy VTK 3.0 file"));
    }
    r.next("title")?;
    if r.next("ASCII")? != "ASCII" {
        return Err(r.bad("only ASCII files are supported"));
    }
    if r.next("DATASET")? != "DATASET POLYDATA" {
        return Err(r.bad("expected DATASET POLYDATA"));
    }
    let h = r.header("POINTS")?;
    let n = r.count(h.get(1), "point")?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let line = r.next("point")?;
        let xs: Vec<&str> = line.split_whitespace().collect();
        if xs.len() != 3 {
            return Err(r.bad(format!("bad point '{line}'")));
        }
        points.push([r.float(xs[0])?, r.float(xs[1])?, r.float(xs[2])?]);
    }
    let h = r.header("POLYGONS")?;
    let m = r.count(h.get(1), "polygon")?;
    if r.count(h.get(2), "polygon size")? != 4 * m {
        return Err(r.bad("only triangles are supported"));
    }
    let mut polygons = Vec::with_capacity(m);
    for _ in 0..m {
        let line = r.next("polygon")?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|x| x.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| r.bad(format!("bad polygon '{line}'")))?;
        if ids.len() != 4 || ids[0] != 3 || ids[1..].iter().any(|&i| i >= n) {
            return Err(r.bad(format!("bad polygon '{line}'")));
        }
        polygons.push([ids[1], ids[2], ids[3]]);
    }
    while r.inner.peek().is_some_and(|l| l.trim().is_empty()) {
        r.inner.next();
    }
    let cell_values = if r.inner.peek().is_some() {
        let h = r.header("CELL_DATA")?;
        if r.count(h.get(1), "cell")? != m {
            return Err(r.bad("CELL_DATA count does not match POLYGONS"));
        }
        if r.next("SCALARS")?.split_whitespace().take(2).collect::<Vec<_>>() != ["SCALARS", "u"] {
            return Err(r.bad("expected SCALARS u"));
        }
        r.header("LOOKUP_TABLE")?;
        let mut values = Vec::with_capacity(m);
        for _ in 0..m {
            let line = r.next("cell value")?;
            values.push(r.float(line)?);
        }
        Some(values)
    } else {
        None
    };
    Ok(VtkData {
        points,
        polygons,
        cell_values,
    })
}

/// Reads a file produced by [`write_vtk`] or [`write_mesh_vtk`].
pub fn read_vtk(path: &Path) -> CliResult<VtkData> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_vtk(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use moverfv::mesh::{build_icosphere, snapshot, ReferenceMesh};
    use moverfv::motion::MotionMap;
    use moverfv::Vec3;
    use std::sync::Arc;

    fn single() -> MeshSnapshot {
        let m = ReferenceMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        snapshot(&Arc::new(m), &MotionMap::identity(), 0.0).unwrap()
    }

    #[test]
    fn single_triangle_layout() {
        let s = single();
        let text = render_vtk(&s, Some(&[2.0]), "t");
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 3 double\n"));
        assert!(text.contains("POLYGONS 1 4\n3 0 1 2\n"));
        assert!(text.contains("CELL_DATA 1\nSCALARS u double 1\nLOOKUP_TABLE default\n2.0000000000000000e0\n"));
        let back = parse_vtk(&text, Path::new("mem")).unwrap();
        assert_eq!(back.cell_values, Some(vec![2.0]));
    }

    #[test]
    fn icosahedron_counts() {
        let m = Arc::new(build_icosphere(0).unwrap());
        let s = snapshot(&m, &MotionMap::identity(), 0.0).unwrap();
        let text = render_vtk(&s, None, "mesh");
        assert!(text.contains("POINTS 12 double\n"));
        assert!(text.contains("POLYGONS 20 80\n"));
        assert!(!text.contains("CELL_DATA"));
        let back = parse_vtk(&text, Path::new("mem")).unwrap();
        assert_eq!(back.polygons.len(), 20);
        assert_eq!(back.cell_values, None);
    }

    #[test]
    fn values_round_trip_bitwise() {
        let m = Arc::new(build_icosphere(1).unwrap());
        let s = snapshot(&m, &MotionMap::shrinking_sphere(), 0.3).unwrap();
        let values: Vec<f64> = (0..s.num_cells()).map(|j| (j as f64 * 0.7).sin() / 3.0 + 1e-300).collect();
        let back = parse_vtk(&render_vtk(&s, Some(&values), "x"), Path::new("mem")).unwrap();
        let got = back.cell_values.unwrap();
        assert!(got.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()));
        for (p, q) in back.points.iter().zip(&s.vertices) {
            assert_eq!(*p, q.0);
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        let s = single();
        let good = render_vtk(&s, Some(&[1.0]), "t");
        for bad in [
            good.replace("Version 3.0", "Version 2.0"),
            good.replace("POLYGONS 1 4", "POLYGONS 1 5"),
            good.replace("3 0 1 2", "3 0 1 7"),
            good.replace("CELL_DATA 1", "CELL_DATA 2"),
            good.replace("1.0000000000000000e0\n", "x\n"),
        ] {
            assert!(parse_vtk(&bad, Path::new("bad")).is_err(), "{bad}");
        }
    }
}
