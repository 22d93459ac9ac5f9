//! Mesh, report and table files.

use std::fs;
use std::path::Path;

use pullvexlab::harmonic::io::{self, MeshIoError};
use pullvexlab::harmonic::TriMesh;
use serde::Serialize;

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Reads an OFF or OBJ mesh; any failure names the file.
pub fn read_mesh(path: &Path) -> Result<TriMesh, CliError> {
    io::read_mesh(path).map_err(|e| match e {
        MeshIoError::Io { source, .. } => CliError::io(path, source),
        other => CliError::ConfigInvalid(format!("mesh file {}: {other}", path.display())),
    })
}

pub fn write_mesh(mesh: &TriMesh, path: &Path) -> Result<(), CliError> {
    io::write_mesh(path, mesh).map_err(|e| match e {
        MeshIoError::Io { source, .. } => CliError::io(path, source),
        other => CliError::Compute(format!("{}: {other}", path.display())),
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_report<T: Serialize + ?Sized>(report: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Compute(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_text(text: &str, path: &Path) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// CSV with the given header and rows of already formatted fields.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let as_io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(as_io)?;
    w.write_record(header).map_err(as_io)?;
    for row in rows {
        w.write_record(row).map_err(as_io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
