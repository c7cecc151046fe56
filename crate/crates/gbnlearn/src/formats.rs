//! On-disk formats.
//!
//! Data files are headerless CSV with one sample per row and every value
//! written with 17 significant digits, so `f64` values round-trip exactly.
//!
//! Model files are plain text:
//!
//! ```text
//! # p = 3
//! # sigma2 = 0.8
//! # child,parent,weight
//! 1,0,5.0000000000000000e-1
//! ```
//!
//! Labels are 0-based. `sigma2` is either one value shared by all nodes or
//! `p` comma-separated values. Learned models use the same layout with extra
//! `# key = value` lines (`lambda`, `threshold`, `order`, `ratio_trace`).
//! Unknown comment lines are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gbn_core::learn::LearnedGbn;
use gbn_core::{Gbn, Matrix};

use crate::error::{CliError, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn data_to_csv(x: &Matrix) -> String {
    let mut out = String::with_capacity(x.rows() * x.cols() * 24);
    for r in 0..x.rows() {
        for (j, v) in x.row(r).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_data(path: &Path, x: &Matrix) -> Result<()> {
    std::fs::write(path, data_to_csv(x)).map_err(|e| CliError::io(path, e))
}

/// Parses headerless numeric CSV. Rows and columns in errors are 1-based.
pub fn parse_data(path: &Path, text: &str) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(CliError::Parse {
                    path: path.into(),
                    row,
                    column: record.len().min(c) + 1,
                    message: format!("expected {c} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| CliError::Parse {
                path: path.into(),
                row,
                column: j + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse {
                    path: path.into(),
                    row,
                    column: j + 1,
                    message: "value is not finite".into(),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(Matrix::from_vec(rows, cols, data)?)
}

pub fn read_data(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_data(path, &text)
}

/// Contents of a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub p: usize,
    pub sigma2: Vec<f64>,
    /// `(child, parent, weight)`.
    pub edges: Vec<(usize, usize, f64)>,
    /// Remaining `# key = value` header lines.
    pub extras: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn from_gbn(g: &Gbn) -> Self {
        let sigma2 = if g.is_equal_variance() {
            vec![g.sigma2().first().copied().unwrap_or(1.0)]
        } else {
            g.sigma2().to_vec()
        };
        ModelFile {
            p: g.p(),
            sigma2,
            edges: g.weighted_edges(),
            extras: BTreeMap::new(),
        }
    }

    pub fn from_learned(l: &LearnedGbn) -> Self {
        let mut extras = BTreeMap::new();
        extras.insert("lambda".into(), fmt_f64(l.lambda));
        extras.insert("threshold".into(), fmt_f64(l.threshold));
        let order: Vec<String> = l.order.peel_order().iter().map(|v| v.to_string()).collect();
        extras.insert("order".into(), order.join(","));
        let trace: Vec<String> = l
            .ratio_trace
            .iter()
            .map(|s| {
                let flag = if s.guard_hit { "!" } else { "" };
                format!("{}:{}{flag}", s.node, fmt_f64(s.ratio))
            })
            .collect();
        extras.insert("ratio_trace".into(), trace.join(";"));
        ModelFile {
            p: l.p(),
            sigma2: vec![l.sigma2_hat],
            edges: l.edges.iter().map(|&(c, q)| (c, q, l.b_hat[(c, q)])).collect(),
            extras,
        }
    }

    pub fn sigma2_for(&self, i: usize) -> f64 {
        if self.sigma2.len() == 1 {
            self.sigma2[0]
        } else {
            self.sigma2[i]
        }
    }

    pub fn to_gbn(&self) -> Result<Gbn> {
        let sigma2 = (0..self.p).map(|i| self.sigma2_for(i)).collect();
        Ok(Gbn::from_weights(self.p, &self.edges, sigma2)?)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# p = {}", self.p).unwrap();
        let s: Vec<String> = self.sigma2.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "# sigma2 = {}", s.join(",")).unwrap();
        for (k, v) in &self.extras {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        out.push_str("# child,parent,weight\n");
        for &(c, q, w) in &self.edges {
            writeln!(out, "{c},{q},{}", fmt_f64(w)).unwrap();
        }
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let err = |row: usize, column: usize, message: String| CliError::Parse {
            path: path.into(),
            row,
            column,
            message,
        };
        let mut p = None;
        let mut sigma2 = None;
        let mut edges = Vec::new();
        let mut extras = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let row = k + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let Some((key, value)) = comment.split_once('=') else {
                    continue;
                };
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "p" => {
                        p = Some(
                            value
                                .parse::<usize>()
                                .map_err(|_| err(row, 1, format!("invalid node count {value:?}")))?,
                        )
                    }
                    "sigma2" => {
                        let vals = value
                            .split(',')
                            .enumerate()
                            .map(|(j, v)| {
                                v.trim()
                                    .parse::<f64>()
                                    .map_err(|_| err(row, j + 1, format!("invalid variance {v:?}")))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        sigma2 = Some(vals);
                    }
                    _ => {
                        extras.insert(key.to_string(), value.to_string());
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(
                    row,
                    1,
                    format!("expected child,parent,weight; found {} fields", fields.len()),
                ));
            }
            let c = fields[0]
                .parse()
                .map_err(|_| err(row, 1, format!("invalid child {:?}", fields[0])))?;
            let q = fields[1]
                .parse()
                .map_err(|_| err(row, 2, format!("invalid parent {:?}", fields[1])))?;
            let w = fields[2]
                .parse()
                .map_err(|_| err(row, 3, format!("invalid weight {:?}", fields[2])))?;
            edges.push((c, q, w));
        }
        let p = p.ok_or_else(|| err(1, 1, "missing '# p = ...' header".into()))?;
        let sigma2 = sigma2.unwrap_or_else(|| vec![1.0]);
        if sigma2.len() != 1 && sigma2.len() != p {
            return Err(err(
                1,
                1,
                format!("sigma2 needs 1 or {p} values, found {}", sigma2.len()),
            ));
        }
        Ok(ModelFile {
            p,
            sigma2,
            edges,
            extras,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }

    /// Weight matrix and edge set, without requiring acyclicity.
    pub fn weights(&self) -> Matrix {
        let mut b = Matrix::zeros(self.p, self.p);
        for &(c, q, w) in &self.edges {
            b[(c, q)] = w;
        }
        b
    }
}
