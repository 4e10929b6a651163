//! Plain-text point-set exchange format.
//!
//! ```text
//! rank 2
//! basis 0 1 | 1
//! basis 1 1.618033988749895 | -0.6180339887498948
//! 0 0
//! 1 0
//! ```
//!
//! Header lines give the rank and one `basis` line per basis vector (physical
//! coordinates, optionally `|` and internal coordinates). Every following
//! non-empty line is one point as `rank` integers. Points are written in
//! lexicographic coordinate order. Lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{BoxWindow, Embedding, ModulePoint, PointPatch};
use crate::error::{Error, Result};

/// Parsed contents of a point-set file.
#[derive(Clone, Debug)]
pub struct PointSetFile {
    pub embedding: Arc<Embedding>,
    pub points: Vec<ModulePoint>,
}

impl PointSetFile {
    /// Patch whose window is the bounding box of the points.
    pub fn into_patch(self) -> Result<PointPatch> {
        let dim = self.embedding.dim();
        let positions: Vec<Vec<f64>> = self
            .points
            .iter()
            .map(|p| self.embedding.embed(p))
            .collect::<Result<_>>()?;
        let window = BoxWindow::bounding(dim, positions.iter().map(Vec::as_slice));
        PointPatch::new(self.embedding, self.points, window, 0.0)
    }
}

pub fn write_pointset(patch: &PointPatch) -> String {
    let e = patch.embedding();
    let mut out = String::new();
    writeln!(out, "rank {}", e.rank()).unwrap();
    for i in 0..e.rank() {
        write!(out, "basis {i}").unwrap();
        for x in e.physical_image(i) {
            write!(out, " {x:?}").unwrap();
        }
        if let Some(int) = e.internal_image(i) {
            out.push_str(" |");
            for x in int {
                write!(out, " {x:?}").unwrap();
            }
        }
        out.push('\n');
    }
    for p in patch.points() {
        let line: Vec<String> = p.coords().iter().map(i64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_pointset(text: &str) -> Result<PointSetFile> {
    let err = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let mut rank: Option<usize> = None;
    let mut physical: Vec<Option<Vec<f64>>> = Vec::new();
    let mut internal: Vec<Option<Vec<f64>>> = Vec::new();
    let mut points = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("rank") => {
                if rank.is_some() {
                    return Err(err(ln, "duplicate rank line"));
                }
                let k: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(ln, "rank needs a positive integer"))?;
                if k == 0 || tokens.next().is_some() {
                    return Err(err(ln, "rank needs a single positive integer"));
                }
                rank = Some(k);
                physical = vec![None; k];
                internal = vec![None; k];
            }
            Some("basis") => {
                let k = rank.ok_or_else(|| err(ln, "basis line before rank"))?;
                let i: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(ln, "basis index must be an integer"))?;
                if i >= k {
                    return Err(err(ln, "basis index out of range"));
                }
                if !points.is_empty() {
                    return Err(err(ln, "basis line after points"));
                }
                let rest: Vec<&str> = tokens.collect();
                let mut parts = rest.split(|t| *t == "|");
                let phys = parse_reals(parts.next().unwrap_or(&[]))
                    .ok_or_else(|| err(ln, "invalid physical coordinates"))?;
                let int = match parts.next() {
                    Some(p) => Some(
                        parse_reals(p).ok_or_else(|| err(ln, "invalid internal coordinates"))?,
                    ),
                    None => None,
                };
                if parts.next().is_some() || phys.is_empty() {
                    return Err(err(ln, "malformed basis line"));
                }
                if physical[i].is_some() {
                    return Err(err(ln, "duplicate basis index"));
                }
                physical[i] = Some(phys);
                internal[i] = int;
            }
            Some(_) => {
                let k = rank.ok_or_else(|| err(ln, "point line before rank"))?;
                let coords: Vec<i64> = line
                    .split_whitespace()
                    .map(|t| t.parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(ln, "point coordinates must be integers"))?;
                if coords.len() != k {
                    return Err(err(ln, "point has wrong number of coordinates"));
                }
                points.push(ModulePoint::from(coords));
            }
            None => unreachable!(),
        }
    }

    let k = rank.ok_or_else(|| err(0, "missing rank line"))?;
    let physical: Vec<Vec<f64>> = physical
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| err(0, "missing basis line"))?;
    let n_internal = internal.iter().filter(|x| x.is_some()).count();
    let embedding = if n_internal == 0 {
        Embedding::new(physical)?
    } else if n_internal == k {
        Embedding::with_internal(physical, internal.into_iter().map(Option::unwrap).collect())?
    } else {
        return Err(err(0, "internal images must be given for all basis vectors or none"));
    };
    points.sort_unstable();
    points.dedup();
    Ok(PointSetFile {
        embedding: Arc::new(embedding),
        points,
    })
}

fn parse_reals(tokens: &[&str]) -> Option<Vec<f64>> {
    tokens
        .iter()
        .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect()
}

pub fn read_pointset(path: &Path) -> Result<PointSetFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_pointset(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cut_and_project, fibonacci_scheme};
    use proptest::prelude::*;

    #[test]
    fn fibonacci_file_layout() {
        let patch = cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(0.0, 3.0)).unwrap();
        let text = write_pointset(&patch);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rank 2");
        assert!(lines[1].starts_with("basis 0 1.0 | 1.0"));
        assert_eq!(&lines[3..], &["0 0", "1 0", "1 1"]);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_pointset("basis 0 1\n").is_err());
        assert!(parse_pointset("rank 2\nbasis 0 1\n0 0\n").is_err());
        assert!(parse_pointset("rank 1\nbasis 0 1\n0 x\n").is_err());
        assert!(parse_pointset("rank 1\nbasis 0 1\n1 2\n").is_err());
        assert!(parse_pointset("rank 2\nbasis 0 1 | 1\nbasis 1 2\n").is_err());
    }

    proptest! {
        #[test]
        fn write_parse_roundtrip(hi in 1.0f64..200.0, lo in -200.0f64..0.0) {
            let patch = cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(lo, hi)).unwrap();
            let text = write_pointset(&patch);
            let back = parse_pointset(&text).unwrap();
            prop_assert_eq!(back.embedding.as_ref(), patch.embedding().as_ref());
            prop_assert_eq!(&back.points[..], patch.points());
            prop_assert_eq!(write_pointset(&back.into_patch().unwrap()), text);
        }
    }
}
