//! Artifact formats: JSONL event streams, JSON summaries, CSV series and the vertex-list input.
//!
//! Floats are written in the shortest form that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ballistic_core::anti_ou::{EscapeMethod, EscapeSample};
use ballistic_core::branch::BranchRecord;
use ballistic_core::cluster::AttachmentEvent;
use ballistic_core::geometry::Vec2;
use ballistic_core::polygon_flow::{FlowSample, MergeEvent};
use ballistic_core::vertex::ForkLifetimeSample;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Pretty-printed JSON document with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// One compact JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            source,
        })?;
        writeln!(w).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_events(path: &Path, events: &[AttachmentEvent]) -> Result<(), IoError> {
    write_jsonl(path, events)
}

pub fn write_merges(path: &Path, merges: &[MergeEvent]) -> Result<(), IoError> {
    write_jsonl(path, merges)
}

fn write_csv<R: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<(), IoError> {
    let wrap = |source| IoError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.serialize(row).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

/// `theta,a,T,cause`
pub fn write_lifetimes(path: &Path, samples: &[ForkLifetimeSample]) -> Result<(), IoError> {
    write_csv(path, &["theta", "a", "T", "cause"], samples)
}

/// `n,survival`
pub fn write_survival(path: &Path, curve: &[(f64, f64)]) -> Result<(), IoError> {
    write_csv(path, &["n", "survival"], curve)
}

#[derive(Serialize)]
struct EscapeRow {
    mu: f64,
    sigma: f64,
    a: f64,
    method: &'static str,
    #[serde(rename = "T")]
    t: f64,
    censored: bool,
}

/// `mu,sigma,a,method,T,censored`
pub fn write_escape_samples(
    path: &Path,
    mu: f64,
    sigma: f64,
    a: f64,
    batches: &[(EscapeMethod, &[EscapeSample])],
) -> Result<(), IoError> {
    let rows = batches.iter().flat_map(|(method, samples)| {
        samples.iter().map(move |s| EscapeRow {
            mu,
            sigma,
            a,
            method: method.name(),
            t: s.t,
            censored: s.censored,
        })
    });
    write_csv(path, &["mu", "sigma", "a", "method", "T", "censored"], rows)
}

/// `root,birth,size`
pub fn write_branches(path: &Path, branches: &[BranchRecord]) -> Result<(), IoError> {
    write_csv(
        path,
        &["root", "birth", "size"],
        branches.iter().map(|b| (b.root, b.birth, b.size)),
    )
}

/// `size,ccdf`
pub fn write_ccdf(path: &Path, ccdf: &[(u64, f64)]) -> Result<(), IoError> {
    write_csv(path, &["size", "ccdf"], ccdf)
}

/// `n,vertex_count,angles` with the sorted interior angles space-separated in one field.
pub fn write_trajectory(path: &Path, samples: &[FlowSample]) -> Result<(), IoError> {
    write_csv(
        path,
        &["n", "vertex_count", "angles"],
        samples.iter().map(|s| {
            let angles: Vec<String> = s.interior_angles.iter().map(f64::to_string).collect();
            (s.n, s.vertex_count, angles.join(" "))
        }),
    )
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Vertex list: one `x y` (or `x,y`) pair per line; blank lines and `#` comments are skipped.
pub fn parse_vertices(text: &str, path: &str) -> Result<Vec<Vec2>, IoError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| IoError::Parse {
            path: path.to_string(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(fail(format!(
                "expected two coordinates, found {} field(s) in {line:?}",
                fields.len()
            )));
        }
        let coord = |f: &str| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(format!("not a finite number: {f:?}")))
        };
        out.push(Vec2::new(coord(fields[0])?, coord(fields[1])?));
    }
    if out.is_empty() {
        return Err(IoError::Parse {
            path: path.to_string(),
            line: 0,
            message: "no vertices".to_string(),
        });
    }
    Ok(out)
}

pub fn read_vertices(path: &Path) -> Result<Vec<Vec2>, IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_vertices(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_separators_and_comments() {
        let v = parse_vertices("# triangle\n0 0\n1,0\n\n0.5 0.8 # apex\n", "t").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[2], Vec2::new(0.5, 0.8));
    }

    #[test]
    fn reports_line_of_bad_record() {
        let e = parse_vertices("0 0\n1 0\n1 x\n", "poly.txt").unwrap_err();
        match e {
            IoError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_vertices("0 0 0\n", "p")
            .unwrap_err()
            .to_string()
            .starts_with("p:1:"));
    }
}
