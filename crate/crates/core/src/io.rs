//! Line-oriented text formats: trees as `node_id parent_id edge_length`
//! rows (parent `-1` marks the root) and point sets as one
//! whitespace-separated row per point, with an optional leading weight
//! column. Floats are written in shortest round-trip form, so a
//! write/parse cycle reproduces values exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::points::WeightedPointSet;
use crate::tree::{NodeId, Tree};

/// Serializes a tree, one node per line, ids 0-based and contiguous.
pub fn tree_to_text(tree: &Tree) -> String {
    let mut out = String::new();
    for v in tree.node_ids() {
        match tree.parent(v) {
            None => writeln!(out, "{v} -1 0").expect("write to string"),
            Some(p) => {
                writeln!(out, "{v} {p} {}", tree.edge_length(v)).expect("write to string")
            }
        }
    }
    out
}

/// Parses the output of [`tree_to_text`].
pub fn tree_from_text(text: &str) -> Result<Tree> {
    let path = Path::new("<tree text>");
    parse_tree_lines(text, path)
}

pub fn read_tree_file(path: &Path) -> Result<Tree> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tree_lines(&text, path)
}

fn parse_tree_lines(text: &str, path: &Path) -> Result<Tree> {
    let mut rows: Vec<(usize, NodeId, Option<NodeId>, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let id: usize = it
            .next()
            .ok_or_else(|| parse_err("missing node id".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad node id: {e}")))?;
        let parent_tok = it
            .next()
            .ok_or_else(|| parse_err("missing parent id".into()))?;
        let parent = if parent_tok == "-1" {
            None
        } else {
            Some(
                parent_tok
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("bad parent id: {e}")))?,
            )
        };
        let length: f64 = it
            .next()
            .ok_or_else(|| parse_err("missing edge length".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad edge length: {e}")))?;
        if it.next().is_some() {
            return Err(parse_err("trailing tokens".into()));
        }
        rows.push((lineno + 1, id, parent, length));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "no tree rows".into(),
        });
    }
    let n = rows.len();
    let mut parents = vec![Some(usize::MAX); n];
    let mut lengths = vec![0.0; n];
    let mut seen = vec![false; n];
    for (line, id, parent, length) in rows {
        if id >= n || seen[id] {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("node ids must be 0..{} and unique, got {id}", n - 1),
            });
        }
        seen[id] = true;
        parents[id] = parent;
        lengths[id] = length;
    }
    Tree::from_parents(parents, lengths)
}

/// Formats a point set; when `with_weights` is set each row leads with the
/// point's weight.
pub fn points_to_text(set: &WeightedPointSet, with_weights: bool) -> String {
    let mut out = String::new();
    for (p, &w) in set.points().iter().zip(set.weights()) {
        let coords = p
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        if with_weights {
            writeln!(out, "{w} {coords}").expect("write to string");
        } else {
            writeln!(out, "{coords}").expect("write to string");
        }
    }
    out
}

/// Parses a point set; dimension is inferred from the first row. With
/// `weighted` the first column holds raw weights, normalized afterwards;
/// otherwise weights are uniform.
pub fn points_from_text(text: &str, weighted: bool) -> Result<WeightedPointSet> {
    parse_point_lines(text, weighted, Path::new("<points text>"))
}

pub fn read_points_file(path: &Path, weighted: bool) -> Result<WeightedPointSet> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_point_lines(&text, weighted, path)
}

fn parse_point_lines(text: &str, weighted: bool, path: &Path) -> Result<WeightedPointSet> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let mut values = Vec::new();
        for tok in line.split_whitespace() {
            values.push(
                tok.parse::<f64>()
                    .map_err(|e| parse_err(format!("bad number {tok:?}: {e}")))?,
            );
        }
        let (w, coords) = if weighted {
            if values.len() < 2 {
                return Err(parse_err("weighted row needs a weight and a point".into()));
            }
            (values[0], values[1..].to_vec())
        } else {
            (1.0, values)
        };
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(parse_err(format!(
                    "row has {} coordinates, expected {d}",
                    coords.len()
                )));
            }
            _ => {}
        }
        if coords.is_empty() {
            return Err(parse_err("empty point row".into()));
        }
        points.push(coords);
        weights.push(w);
    }
    if points.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "no point rows".into(),
        });
    }
    WeightedPointSet::new(points, weights).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}
