//! CSV, PGM and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cone::CurvePoint;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::NodeKind;
use crate::limit::BranchPoint;
use crate::p_solver::StudyRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "pgm" => Ok(Format::Pgm),
            other => Err(Error::Config {
                key: "format".into(),
                reason: format!("unknown format `{other}`"),
                example: "--format csv,json,pgm".into(),
            }),
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Rows `x[,y],value` for Interior and Boundary nodes in node order.
pub fn field_csv(field: &ScalarField) -> String {
    let d = field.domain();
    let two = d.dim() == 2;
    let mut s = String::from(if two { "x,y,value\n" } else { "x,value\n" });
    for (n, k) in d.kinds().iter().enumerate() {
        if *k == NodeKind::Exterior {
            continue;
        }
        let p = d.position(n);
        if two {
            let _ = writeln!(s, "{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(field.get(n)));
        } else {
            let _ = writeln!(s, "{},{}", fmt_f64(p[0]), fmt_f64(field.get(n)));
        }
    }
    s
}

pub fn write_field_csv(field: &ScalarField, path: &Path) -> Result<()> {
    write_file(path, &field_csv(field))
}

/// Reads a field CSV back onto `domain`, matching rows to nodes by
/// coordinates.
pub fn read_field_csv(domain: &crate::GridDomain, path: &Path) -> Result<ScalarField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = vec![0.0; domain.node_count()];
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        let (x, v) = match (domain.dim(), cols.as_slice()) {
            (1, [x, v]) => ([*x, 0.0], *v),
            (2, [x, y, v]) => ([*x, *y], *v),
            _ => {
                return Err(Error::Parse(format!(
                    "{}:{}: wrong column count",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        let n = domain
            .node_at(x)
            .ok_or_else(|| Error::Parse(format!("{}:{}: point off the grid", path.display(), lineno + 1)))?;
        values[n] = v;
    }
    ScalarField::from_values(domain, values)
}

#[derive(Debug, Serialize)]
struct PgmScaling {
    min: f64,
    max: f64,
    /// Set when `min == max`; every pixel is then 0.
    constant: bool,
    width: usize,
    height: usize,
    h: f64,
}

/// P2 image over the whole grid (top row = largest y) and its scaling
/// record. Values map linearly from `[min, max]` to `[0, 255]`.
pub fn field_pgm(field: &ScalarField) -> (String, String) {
    let d = field.domain();
    let [nx, ny] = d.dims();
    let vals = field.values();
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let constant = hi <= lo;
    let mut s = format!("P2\n{nx} {ny}\n255\n");
    for j in (0..ny).rev() {
        let row: Vec<String> = (0..nx)
            .map(|i| {
                let v = vals[j * nx + i];
                let px = if constant {
                    0
                } else {
                    (255.0 * (v - lo) / (hi - lo)).round() as u8
                };
                px.to_string()
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    let meta = PgmScaling {
        min: lo,
        max: hi,
        constant,
        width: nx,
        height: ny,
        h: d.h(),
    };
    (s, serde_json::to_string_pretty(&meta).expect("plain struct"))
}

#[derive(Serialize)]
struct FieldJson {
    h: f64,
    dim: usize,
    x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<Vec<f64>>,
    value: Vec<f64>,
}

pub fn field_json(field: &ScalarField) -> String {
    let d = field.domain();
    let nodes: Vec<usize> = (0..d.node_count())
        .filter(|&n| d.kind(n) != NodeKind::Exterior)
        .collect();
    let j = FieldJson {
        h: d.h(),
        dim: d.dim(),
        x: nodes.iter().map(|&n| d.position(n)[0]).collect(),
        y: (d.dim() == 2).then(|| nodes.iter().map(|&n| d.position(n)[1]).collect()),
        value: nodes.iter().map(|&n| field.get(n)).collect(),
    };
    serde_json::to_string(&j).expect("plain struct")
}

/// Writes `<stem>.csv`, `<stem>.json`, `<stem>.pgm` (+ `<stem>.pgm.json`)
/// under `dir` as requested.
pub fn emit_field(field: &ScalarField, dir: &Path, stem: &str, formats: &[Format]) -> Result<Vec<PathBuf>> {
    if !field.is_finite() {
        return Err(Error::param("field", "contains non-finite values"));
    }
    let mut out = Vec::new();
    for f in formats {
        match f {
            Format::Csv => {
                let p = dir.join(format!("{stem}.csv"));
                write_field_csv(field, &p)?;
                out.push(p);
            }
            Format::Json => {
                let p = dir.join(format!("{stem}.json"));
                write_file(&p, &field_json(field))?;
                out.push(p);
            }
            Format::Pgm => {
                let (img, meta) = field_pgm(field);
                let p = dir.join(format!("{stem}.pgm"));
                write_file(&p, &img)?;
                let m = dir.join(format!("{stem}.pgm.json"));
                write_file(&m, &meta)?;
                out.push(p);
                out.push(m);
            }
        }
    }
    Ok(out)
}

/// Columns `lambda,sup_norm,status,outer_iters,residual_sup`, plus `p` when
/// any row carries one.
pub fn branch_csv(points: &[BranchPoint]) -> String {
    let with_p = points.iter().any(|b| b.p.is_some());
    let mut s = String::from("lambda,sup_norm,status,outer_iters,residual_sup");
    s.push_str(if with_p { ",p\n" } else { "\n" });
    for b in points {
        let _ = write!(
            s,
            "{},{},{},{},{}",
            fmt_f64(b.lambda),
            fmt_f64(b.sup_norm),
            b.status,
            b.outer_iters,
            fmt_f64(b.residual_sup)
        );
        if with_p {
            let _ = write!(s, ",{}", b.p.map(fmt_f64).unwrap_or_default());
        }
        s.push('\n');
    }
    s
}

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut s = String::from("p,log_lambda_p,sup_error,status\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(r.p),
            fmt_f64(r.log_lambda_p),
            fmt_f64(r.sup_error),
            r.status
        );
    }
    s
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("lambda,sup_norm,branch\n");
    for c in points {
        let _ = writeln!(s, "{},{},{}", fmt_f64(c.lambda), fmt_f64(c.sup_norm), c.branch.as_str());
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &serde_json::to_string_pretty(value)?)
}
