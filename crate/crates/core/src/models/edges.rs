//! Edge-list export.
//!
//! Text format: one header line starting with `#`, then one edge per line,
//! `u v` or `u v multiplicity` (model IV). Vertices of models IV and V are
//! written as 1-based integers, vertices of models I-III as comma-separated
//! coordinates (`3,-1` on the lattice, decimal coordinates for model III).
//! Every edge with at least one window endpoint appears exactly once.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VertexLabel {
    /// 1-based vertex number.
    Index(u64),
    Lattice([i64; 3]),
    Point([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexLabel,
    pub v: VertexLabel,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeList {
    pub dim: usize,
    pub edges: Vec<Edge>,
}

impl EdgeList {
    pub fn new(dim: usize) -> Self {
        Self { dim, edges: Vec::new() }
    }

    pub fn push(&mut self, u: VertexLabel, v: VertexLabel, multiplicity: u32) {
        self.edges.push(Edge { u, v, multiplicity });
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edge count with multiplicities.
    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.multiplicity)).sum()
    }
}

fn write_label<W: Write>(out: &mut W, label: &VertexLabel, dim: usize) -> io::Result<()> {
    match label {
        VertexLabel::Index(i) => write!(out, "{i}"),
        VertexLabel::Lattice(c) => {
            for (k, x) in c[..dim].iter().enumerate() {
                if k > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{x}")?;
            }
            Ok(())
        }
        VertexLabel::Point(c) => {
            for (k, x) in c[..dim].iter().enumerate() {
                if k > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{x}")?;
            }
            Ok(())
        }
    }
}

/// Writes `header` (prefixed with `# `) followed by the edges.
pub fn write_edge_list<W: Write>(
    out: &mut W,
    header: &str,
    edges: &EdgeList,
    multiplicity_column: bool,
) -> io::Result<()> {
    writeln!(out, "# {header}")?;
    let dim = edges.dim.max(1);
    for e in &edges.edges {
        write_label(out, &e.u, dim)?;
        out.write_all(b" ")?;
        write_label(out, &e.v, dim)?;
        if multiplicity_column {
            write!(out, " {}", e.multiplicity)?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
