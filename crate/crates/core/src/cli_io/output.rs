//! CSV tables, legacy VTK fields, JSON manifests and per-step logs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Field;
use crate::mesh::TriMesh;
use crate::mms_harness::{AdaptiveRow, ErrorPair, ErrorReport, ErrorRow, ERROR_COLUMNS};
use crate::timestepper::StepDiagnostics;

/// Shortest round-trip scientific notation, padded to at least four
/// significant digits (`0.25` prints as `2.500e-1`).
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let digits = mant.chars().filter(char::is_ascii_digit).count();
    if digits >= 4 {
        return s;
    }
    let mut m = mant.to_string();
    if !m.contains('.') {
        m.push('.');
    }
    m.extend(std::iter::repeat('0').take(4 - digits));
    format!("{m}e{exp}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Header of an error table: the size column, then a value and a rate
/// column for each of the eight errors.
pub fn error_table_header(report: &ErrorReport) -> Vec<String> {
    let mut h = vec![report.size_label.clone()];
    for c in ERROR_COLUMNS {
        h.push(c.to_string());
        h.push(format!("{c}_rate"));
    }
    h
}

pub fn write_error_table(report: &ErrorReport, path: &Path) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::InvalidArgument("error report has no rows".into()));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(error_table_header(report))?;
    for (i, row) in report.rows.iter().enumerate() {
        let rates = report.rates(i);
        let mut rec = vec![format_sci(row.size)];
        for (v, r) in row.values().iter().zip(rates) {
            rec.push(format_sci(*v));
            rec.push(r.map(format_sci).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_error_table`]; rates are recomputed
/// from the values, so only the value columns are returned.
pub fn read_error_table(path: &Path) -> Result<ErrorReport> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let label = header.get(0).unwrap_or("h").to_string();
    let mut report = ErrorReport::new(&label);
    let parse = |s: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad number '{s}' in error table: {e}")))
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 17 {
            return Err(Error::InvalidArgument(format!("error table row has {} cells, expected 17", rec.len())));
        }
        let v: Vec<f64> = (0..8).map(|j| parse(&rec[1 + 2 * j])).collect::<Result<_>>()?;
        report.rows.push(ErrorRow {
            size: parse(&rec[0])?,
            u: ErrorPair { l2: v[0], h1: v[4] },
            w: ErrorPair { l2: v[1], h1: v[5] },
            phi: ErrorPair { l2: v[2], h1: v[6] },
            p: ErrorPair { l2: v[3], h1: v[7] },
        });
    }
    Ok(report)
}

/// Writes `fields` as legacy-VTK ASCII point data on the mesh vertices.
/// Two-component fields become `VECTORS` (z = 0), scalar fields
/// `SCALARS`; P2 fields are sampled at the vertices. Field names should
/// be plain ASCII (`phi`, not `φ`).
pub fn write_vtk_fields(mesh: &TriMesh, fields: &[(&str, &Field)], time: f64, path: &Path) -> Result<()> {
    let nv = mesh.num_vertices();
    for (name, f) in fields {
        let fm = f.space().mesh();
        if fm.num_vertices() != nv || fm.num_triangles() != mesh.num_triangles() || fm.vertices != mesh.vertices {
            return Err(Error::SpaceMismatch);
        }
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_graphic()) {
            return Err(Error::InvalidArgument(format!("VTK field name '{name}' must be non-empty printable ASCII")));
        }
    }
    let mut w = create(path)?;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "dlnfem fields t={time}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "FIELD FieldData 1")?;
    writeln!(w, "TIME 1 1 double")?;
    writeln!(w, "{time}")?;
    writeln!(w, "POINTS {nv} double")?;
    for p in &mesh.vertices {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let nt = mesh.num_triangles();
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {nv}")?;
    }
    for (name, f) in fields {
        // Vertices are the first scalar nodes of both P1 and P2 spaces.
        if f.space().components() == 2 {
            writeln!(w, "VECTORS {name} double")?;
            let (a, b) = (f.component(0), f.component(1));
            for i in 0..nv {
                writeln!(w, "{} {} 0", a[i], b[i])?;
            }
        } else {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in &f.component(0)[..nv] {
                writeln!(w, "{v}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON manifest of a run, written before any computation starts.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub program: &'static str,
    pub version: &'static str,
    pub config: &'a C,
    /// Seconds since the Unix epoch; the only field that differs between
    /// identical runs.
    pub created_unix: u64,
}

pub fn write_manifest<C: Serialize>(config: &C, path: &Path) -> Result<()> {
    let created_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let m = Manifest { program: "dlnfem", version: env!("CARGO_PKG_VERSION"), config, created_unix };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &m)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv(diagnostics: &[StepDiagnostics], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", StepDiagnostics::CSV_HEADER)?;
    for d in diagnostics {
        writeln!(w, "{}", d.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_adaptive_table(rows: &[AdaptiveRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["re", "adaptive_steps", "constant_steps", "min_step", "max_step", "t_reached"])?;
    for r in rows {
        w.write_record([
            r.re.to_string(),
            r.adaptive_steps.to_string(),
            r.constant_steps.to_string(),
            format_sci(r.min_step),
            format_sci(r.max_step),
            r.t_reached.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format_round_trips() {
        for x in [0.25, 1.0, 1.281e-5, 3.0e10, -7.5e-3, 0.1 + 0.2, f64::MIN_POSITIVE, 123456.789] {
            let s = format_sci(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let mant = s.split('e').next().unwrap();
            assert!(mant.chars().filter(char::is_ascii_digit).count() >= 4, "{s}");
        }
        assert_eq!(format_sci(0.25), "2.500e-1");
        assert_eq!(format_sci(1.0), "1.000e0");
    }
}
