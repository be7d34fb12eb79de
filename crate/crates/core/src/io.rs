//! VTK snapshots and diagnostics CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{csv_rows, ConservationReport, EnergyReport, CSV_HEADER};
use crate::error::{Error, Result};
use crate::fem::FeContext;
use crate::scheme::TwoFluidState;

const VTK_TRIANGLE: u8 = 5;

/// Renders `state` as a legacy ASCII unstructured grid. Vectors hold the
/// vertex values of the velocities; bubble coefficients are not written.
pub fn vtk_string(ctx: &FeContext, state: &TwoFluidState, title: &str) -> String {
    let mesh = &ctx.mesh;
    let mut s = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
    let [g, l] = &state.phases;
    let scalars: [(&str, &[f64]); 7] = [
        ("alpha_g", &g.alpha),
        ("alpha_l", &l.alpha),
        ("phi_g", &g.phi),
        ("phi_l", &l.phi),
        ("rho_g", &g.rho),
        ("rho_l", &l.rho),
        ("p", &state.p),
    ];
    for (name, data) in scalars {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in data {
            let _ = writeln!(s, "{x:e}");
        }
    }
    for (name, u) in [("u_g", &g.u), ("u_l", &l.u)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in 0..mesh.n_vertices() {
            let w = u.vertex(v);
            let _ = writeln!(s, "{:e} {:e} 0", w[0], w[1]);
        }
    }
    s
}

pub fn write_vtk(ctx: &FeContext, state: &TwoFluidState, path: &Path) -> Result<()> {
    let title = format!("two-fluid state step {} time {:e}", state.step, state.time);
    std::fs::write(path, vtk_string(ctx, state, &title)).map_err(|e| Error::io(path, e))
}

/// Point data of a legacy VTK file written by [`vtk_string`]; vector
/// fields are returned flattened as `x0 y0 z0 x1 …`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkPointData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub fields: BTreeMap<String, Vec<f64>>,
}

pub fn parse_vtk(text: &str) -> Result<VtkPointData> {
    let bad = |msg: String| Error::Config(format!("malformed VTK: {msg}"));
    let mut lines = text.lines().skip(4);
    let mut out = VtkPointData::default();
    let mut n_points = 0;
    let numbers = |lines: &mut std::iter::Skip<std::str::Lines<'_>>, count: usize| -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(count);
        while v.len() < count {
            let line = lines.next().ok_or_else(|| bad("unexpected end of file".into()))?;
            for tok in line.split_whitespace() {
                v.push(tok.parse::<f64>().map_err(|_| bad(format!("bad number '{tok}'")))?);
            }
        }
        Ok(v)
    };
    while let Some(line) = lines.next() {
        let mut tok = line.split_whitespace();
        let parse_n = |t: Option<&str>| -> Result<usize> {
            t.and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(format!("bad header '{line}'")))
        };
        match tok.next() {
            Some("POINTS") => {
                n_points = parse_n(tok.next())?;
                let v = numbers(&mut lines, 3 * n_points)?;
                out.points = v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            }
            Some("CELLS") => {
                let n = parse_n(tok.next())?;
                let size = parse_n(tok.next())?;
                let v = numbers(&mut lines, size)?;
                let mut i = 0;
                for _ in 0..n {
                    let k = v[i] as usize;
                    out.cells
                        .push(v[i + 1..i + 1 + k].iter().map(|x| *x as usize).collect());
                    i += k + 1;
                }
            }
            Some("CELL_TYPES") => {
                let n = parse_n(tok.next())?;
                numbers(&mut lines, n)?;
            }
            Some("SCALARS") => {
                let name = tok.next().ok_or_else(|| bad("unnamed scalar".into()))?;
                lines.next();
                out.fields.insert(name.to_string(), numbers(&mut lines, n_points)?);
            }
            Some("VECTORS") => {
                let name = tok.next().ok_or_else(|| bad("unnamed vector".into()))?;
                out.fields.insert(name.to_string(), numbers(&mut lines, 3 * n_points)?);
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Appends per-step rows to a diagnostics CSV file.
pub struct DiagnosticsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{CSV_HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(DiagnosticsWriter {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn record(&mut self, energy: &EnergyReport, cons: &ConservationReport) -> Result<()> {
        self.out
            .write_all(csv_rows(energy, cons).as_bytes())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes a CSV file with the given header and rows of preformatted fields.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{header}");
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
