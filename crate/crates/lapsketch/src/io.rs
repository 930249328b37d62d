//! Text formats: edge lists, label maps, query vectors, resistance tables,
//! and the partition debug dump.
//!
//! Edge lists are one edge per line, `u v w`, whitespace separated, with
//! `#` comments. Weights may be integers or decimals; any decimal switches
//! the whole file to the scaling path (multiply by `2^scale_bits`, round,
//! then divide out the common gcd), and the maximum relative rounding
//! error is reported. Arbitrary vertex labels are remapped to dense ids in
//! first-appearance order unless every label is already a dense-friendly
//! integer.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::graph::{GraphConfig, WeightedGraph};
use crate::partition::Partition;
use crate::{Error, Result};

/// Default fixed-point scale for decimal weights: `2^16`.
pub const DEFAULT_SCALE_BITS: u32 = 16;

#[derive(Debug, Clone)]
pub struct IngestReport {
    /// Whether the decimal scaling path ran.
    pub scaled: bool,
    pub scale_bits: u32,
    /// Maximum relative error introduced by rounding scaled weights.
    pub max_rel_rounding_error: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeListData {
    pub graph: WeightedGraph,
    /// Dense id -> original label.
    pub labels: Vec<String>,
    pub report: IngestReport,
}

/// Parse an edge list.
pub fn read_edge_list(reader: impl BufRead) -> Result<EdgeListData> {
    read_edge_list_with_config(reader, GraphConfig::default(), DEFAULT_SCALE_BITS)
}

pub fn read_edge_list_with_config(
    reader: impl BufRead,
    cfg: GraphConfig,
    scale_bits: u32,
) -> Result<EdgeListData> {
    let mut raw: Vec<(String, String, f64, bool)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::Ingest(format!(
                "line {}: expected 'u v w', got {} tokens",
                lineno + 1,
                tokens.len()
            )));
        }
        let w: f64 = tokens[2].parse().map_err(|_| {
            Error::Ingest(format!("line {}: bad weight '{}'", lineno + 1, tokens[2]))
        })?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Ingest(format!(
                "line {}: weight must be positive and finite, got {w}",
                lineno + 1
            )));
        }
        let integral = tokens[2].parse::<u64>().is_ok();
        raw.push((tokens[0].to_string(), tokens[1].to_string(), w, integral));
    }

    // Label remapping: identity when every label is a plain integer.
    let all_integer_labels = raw
        .iter()
        .flat_map(|(u, v, _, _)| [u, v])
        .all(|t| t.parse::<usize>().is_ok());
    let (labels, id_of): (Vec<String>, HashMap<String, usize>) = if all_integer_labels {
        let max_id = raw
            .iter()
            .flat_map(|(u, v, _, _)| [u.parse::<usize>().unwrap(), v.parse::<usize>().unwrap()])
            .max()
            .unwrap_or(0);
        let labels: Vec<String> = (0..=max_id).map(|i| i.to_string()).collect();
        let map = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        (labels, map)
    } else {
        let mut labels = Vec::new();
        let mut map = HashMap::new();
        for (u, v, _, _) in &raw {
            for t in [u, v] {
                if !map.contains_key(t) {
                    map.insert(t.clone(), labels.len());
                    labels.push(t.clone());
                }
            }
        }
        (labels, map)
    };

    let needs_scaling = raw.iter().any(|&(_, _, _, integral)| !integral);
    let mut max_rel_err = 0.0f64;
    let mut edges: Vec<(usize, usize, u64)> = Vec::with_capacity(raw.len());
    if needs_scaling {
        let scale = (1u64 << scale_bits) as f64;
        let mut scaled: Vec<u64> = Vec::with_capacity(raw.len());
        for &(_, _, w, _) in &raw {
            let rounded = (w * scale).round();
            if rounded < 1.0 {
                return Err(Error::Ingest(format!(
                    "weight {w} rounds to zero at scale 2^{scale_bits}"
                )));
            }
            let rel = (rounded - w * scale).abs() / (w * scale);
            max_rel_err = max_rel_err.max(rel);
            scaled.push(rounded as u64);
        }
        let common = scaled.iter().fold(0u64, |acc, &v| gcd(acc, v)).max(1);
        for ((u, v, _, _), s) in raw.iter().zip(scaled) {
            edges.push((id_of[u], id_of[v], s / common));
        }
    } else {
        for (u, v, w, _) in &raw {
            edges.push((id_of[u], id_of[v], *w as u64));
        }
    }

    let n = labels.len();
    let graph = WeightedGraph::with_config(n, &edges, cfg)?;
    Ok(EdgeListData {
        graph,
        labels,
        report: IngestReport {
            scaled: needs_scaling,
            scale_bits,
            max_rel_rounding_error: max_rel_err,
        },
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn write_edge_list(mut w: impl Write, g: &WeightedGraph) -> Result<()> {
    for e in g.edges() {
        writeln!(w, "{} {} {}", e.u, e.v, e.w)?;
    }
    Ok(())
}

/// Two-column label map: dense id, original label.
pub fn write_label_map(mut w: impl Write, labels: &[String]) -> Result<()> {
    for (i, label) in labels.iter().enumerate() {
        writeln!(w, "{i} {label}")?;
    }
    Ok(())
}

/// Whitespace/newline separated floats with `#` comments.
pub fn read_vector(reader: impl BufRead) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        for token in body.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| {
                Error::Ingest(format!("line {}: bad number '{}'", lineno + 1, token))
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn write_vector(mut w: impl Write, v: &[f64]) -> Result<()> {
    for x in v {
        writeln!(w, "{x:.17e}")?;
    }
    Ok(())
}

/// Upper-triangle resistance table: `u v R`, one pair per line, `inf` for
/// cross-component pairs.
pub fn write_resistance_tsv(mut w: impl Write, r: &nalgebra::DMatrix<f64>) -> Result<()> {
    let n = r.nrows();
    for u in 0..n {
        for v in (u + 1)..n {
            let val = r[(u, v)];
            if val.is_infinite() {
                writeln!(w, "{u}\t{v}\tinf")?;
            } else {
                writeln!(w, "{u}\t{v}\t{val:.12e}")?;
            }
        }
    }
    Ok(())
}

/// Debug dump of a partition: `level round component_id : v1 v2 ...`.
pub fn write_partition_debug(mut w: impl Write, p: &Partition) -> Result<()> {
    for (id, entry) in p.entries.iter().enumerate() {
        let verts: Vec<String> = entry.vertices.iter().map(|v| v.to_string()).collect();
        writeln!(
            w,
            "{} {} {} : {}",
            entry.level,
            entry.round,
            id,
            verts.join(" ")
        )?;
    }
    Ok(())
}
