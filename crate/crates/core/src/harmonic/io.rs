//! OFF / OBJ mesh files and per-vertex value CSVs
//! (`vertex_index,x1,...,xn`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use thiserror::Error;

use super::mesh::TriMesh;
use super::HarmonicError;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Mesh(#[from] HarmonicError),
}

fn parse_err(line: usize, reason: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { line, reason: reason.into() }
}

fn read_text(path: &Path) -> Result<String, MeshIoError> {
    fs::read_to_string(path).map_err(|source| MeshIoError::Io { path: path.display().to_string(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), MeshIoError> {
    fs::write(path, text).map_err(|source| MeshIoError::Io { path: path.display().to_string(), source })
}

/// Drop a trailing coordinate that is identically zero (planar meshes are
/// stored as `z = 0` in 3-D formats).
fn squash_planar(mut verts: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    if verts.iter().all(|v| v.len() == 3 && v[2] == 0.0) {
        for v in &mut verts {
            *v = v.rows(0, 2).into_owned();
        }
    }
    verts
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshIoError> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))
}

/// Parse an OFF file. Polygons with more than three corners are fanned.
pub fn parse_off(text: &str) -> Result<TriMesh, MeshIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut header_tokens: Vec<&str> = header.split_whitespace().collect();
    if header_tokens.first() != Some(&"OFF") {
        return Err(parse_err(ln, "missing OFF header"));
    }
    header_tokens.remove(0);
    let counts_line;
    let counts: Vec<&str> = if header_tokens.is_empty() {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing element counts"))?;
        counts_line = ln;
        l.split_whitespace().collect()
    } else {
        counts_line = ln;
        header_tokens
    };
    if counts.len() < 2 {
        return Err(parse_err(counts_line, "expected `vertices faces [edges]`"));
    }
    let nv: usize = counts[0].parse().map_err(|_| parse_err(counts_line, "bad vertex count"))?;
    let nf: usize = counts[1].parse().map_err(|_| parse_err(counts_line, "bad face count"))?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(counts_line, "file ends inside the vertex list"))?;
        let coords = l.split_whitespace().map(|t| parse_f64(t, ln)).collect::<Result<Vec<f64>, _>>()?;
        if coords.len() != 3 {
            return Err(parse_err(ln, format!("vertex needs 3 coordinates, found {}", coords.len())));
        }
        verts.push(DVector::from_vec(coords));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(counts_line, "file ends inside the face list"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let k: usize = toks[0].parse().map_err(|_| parse_err(ln, "bad polygon size"))?;
        if k < 3 || toks.len() < k + 1 {
            return Err(parse_err(ln, format!("polygon of size {k} with {} indices", toks.len() - 1)));
        }
        let idx = toks[1..=k]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, format!("bad vertex index `{t}`"))))
            .collect::<Result<Vec<usize>, _>>()?;
        if let Some(bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range (have {nv})")));
        }
        for j in 1..k - 1 {
            faces.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    Ok(TriMesh::new(squash_planar(verts), faces)?)
}

fn coords3(v: &DVector<f64>) -> [f64; 3] {
    [v[0], if v.len() > 1 { v[1] } else { 0.0 }, if v.len() > 2 { v[2] } else { 0.0 }]
}

/// OFF text; planar meshes are written with `z = 0`. Coordinates use the
/// shortest round-trip representation, so write∘read∘write is stable.
pub fn write_off(mesh: &TriMesh) -> String {
    let mut out = format!("OFF\n{} {} 0\n", mesh.vertex_count(), mesh.face_count());
    for v in mesh.vertices() {
        let [x, y, z] = coords3(v);
        let _ = writeln!(out, "{x} {y} {z}");
    }
    for [a, b, c] in mesh.faces() {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    out
}

/// Parse OBJ `v` and `f` records; every other record is skipped with a
/// warning.
pub fn parse_obj(text: &str) -> Result<TriMesh, MeshIoError> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    let mut ignored: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut toks = l.split_whitespace();
        match toks.next() {
            None => {}
            Some("v") => {
                let coords = toks.map(|t| parse_f64(t, ln)).collect::<Result<Vec<f64>, _>>()?;
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(parse_err(ln, format!("vertex needs 3 coordinates, found {}", coords.len())));
                }
                verts.push(DVector::from_column_slice(&coords[..3]));
            }
            Some("f") => {
                let idx = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let k: i64 = head.parse().map_err(|_| parse_err(ln, format!("bad face index `{t}`")))?;
                        let resolved = if k > 0 { k - 1 } else { verts.len() as i64 + k };
                        if k == 0 || resolved < 0 || resolved >= verts.len() as i64 {
                            return Err(parse_err(ln, format!("face index {k} out of range")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                if idx.len() < 3 {
                    return Err(parse_err(ln, "face needs at least 3 vertices"));
                }
                for j in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[j], idx[j + 1]]);
                }
            }
            Some(other) => {
                if !ignored.contains(&other) {
                    log::warn!("OBJ line {ln}: ignoring `{other}` records");
                    ignored.push(other);
                }
            }
        }
    }
    Ok(TriMesh::new(squash_planar(verts), faces)?)
}

pub fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let [x, y, z] = coords3(v);
        let _ = writeln!(out, "v {x} {y} {z}");
    }
    for [a, b, c] in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    out
}

/// Read a mesh, choosing the format from the file extension.
pub fn read_mesh(path: &Path) -> Result<TriMesh, MeshIoError> {
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("obj") => parse_obj(&text),
        _ => parse_off(&text),
    }
}

pub fn write_mesh(path: &Path, mesh: &TriMesh) -> Result<(), MeshIoError> {
    let text = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("obj") => write_obj(mesh),
        _ => write_off(mesh),
    };
    write_text(path, &text)
}

pub fn write_values_csv(values: &[DVector<f64>]) -> String {
    let dim = values.first().map_or(0, |v| v.len());
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> =
        std::iter::once("vertex_index".to_string()).chain((1..=dim).map(|k| format!("x{k}"))).collect();
    wtr.write_record(&header).expect("in-memory write");
    for (i, v) in values.iter().enumerate() {
        let row: Vec<String> = std::iter::once(i.to_string()).chain(v.iter().map(|x| x.to_string())).collect();
        wtr.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Parse a value CSV; rows may come in any order but must cover
/// `0..vertex_count` exactly once.
pub fn parse_values_csv(text: &str, vertex_count: usize) -> Result<Vec<DVector<f64>>, MeshIoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.get(0) != Some("vertex_index") || header.len() < 2 {
        return Err(parse_err(1, "header must be `vertex_index,x1,...,xn`"));
    }
    let dim = header.len() - 1;
    let mut values: Vec<Option<DVector<f64>>> = vec![None; vertex_count];
    for (row, record) in rdr.records().enumerate() {
        let ln = row + 2;
        let record = record.map_err(|e| parse_err(ln, e.to_string()))?;
        if record.len() != dim + 1 {
            return Err(parse_err(ln, format!("expected {} fields, found {}", dim + 1, record.len())));
        }
        let idx: usize = record[0].parse().map_err(|_| parse_err(ln, "bad vertex index"))?;
        if idx >= vertex_count {
            return Err(parse_err(ln, format!("vertex index {idx} out of range (have {vertex_count})")));
        }
        if values[idx].is_some() {
            return Err(parse_err(ln, format!("duplicate vertex index {idx}")));
        }
        let coords = (1..=dim).map(|k| parse_f64(&record[k], ln)).collect::<Result<Vec<f64>, _>>()?;
        values[idx] = Some(DVector::from_vec(coords));
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| parse_err(0, format!("no value for vertex {i}"))))
        .collect()
}

pub fn read_values_csv(path: &Path, vertex_count: usize) -> Result<Vec<DVector<f64>>, MeshIoError> {
    parse_values_csv(&read_text(path)?, vertex_count)
}

pub fn write_values_csv_file(path: &Path, values: &[DVector<f64>]) -> Result<(), MeshIoError> {
    write_text(path, &write_values_csv(values))
}
