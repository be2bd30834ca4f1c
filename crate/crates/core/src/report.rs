//! Deterministic CSV and JSON rendering of samples, sweeps and traces,
//! plus the `a+bi` complex syntax used on the command line.
//!
//! CSV files start with `#` metadata lines (the first one carries the schema
//! version), then a header row. Floats are written with 17 significant
//! digits in scientific notation.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geodesics::GeodesicTrace;
use crate::hardy::Truncation;
use crate::metrics::MetricSample;
use crate::variation::{LimitRow, SweepRow, SweepSpec};

pub const SCHEMA: u32 = 1;

pub fn schema_line() -> String {
    format!("# annulus-metrics v{} schema={SCHEMA}", env!("CARGO_PKG_VERSION"))
}

/// `{:.16e}`, with `nan`, `inf` and `-inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    let im = fmt_f64(z.im);
    let sign = if im.starts_with('-') { "" } else { "+" };
    format!("{}{sign}{im}i", fmt_f64(z.re))
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` (no spaces; exponents allowed).
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::domain(format!("cannot parse complex number '{text}' (expected a+bi)"));
    let real = |s: &str| -> Result<f64> {
        let v: f64 = s.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let t = text.trim();
    if t.is_empty() || t.contains(char::is_whitespace) {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(real(t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => real(s),
        }
    };
    match split {
        Some(i) => Ok(Complex64::new(real(&body[..i])?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn truncation_lines(tr: &Truncation) -> Vec<String> {
    vec![format!(
        "# n_max={} tail_tol={} n_cap={}",
        tr.n_max,
        fmt_f64(tr.tail_tol),
        tr.n_cap
    )]
}

fn csv_body(header: &[String], records: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InternalConsistency(format!("csv writer: {e}"));
    w.write_record(header).map_err(io)?;
    for rec in records {
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InternalConsistency(format!("csv writer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InternalConsistency(e.to_string()))
}

fn assemble(meta: Vec<String>, body: String) -> String {
    let mut out = String::new();
    for line in meta {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&body);
    out
}

const SAMPLE_COLUMNS: [&str; 8] = ["z", "S", "c", "s", "kappa_c", "kappa_s", "n_used", "tail_bound"];

/// One row per sample. `kappa2` adds the second-order curvature of `c`.
pub fn samples_csv(r: f64, samples: &[MetricSample], kappa2: Option<&[f64]>, tr: &Truncation) -> Result<String> {
    let mut meta = vec![
        schema_line(),
        "# command=eval".to_string(),
        format!("# r={}", fmt_f64(r)),
    ];
    meta.extend(truncation_lines(tr));
    let mut header: Vec<String> = SAMPLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if kappa2.is_some() {
        header.push("kappa2_c".into());
    }
    let records = samples.iter().enumerate().map(|(i, s)| {
        let mut rec = vec![
            fmt_complex(s.z),
            fmt_f64(s.kernel),
            fmt_f64(s.c),
            fmt_f64(s.s),
            fmt_f64(s.kappa_c),
            fmt_f64(s.kappa_s),
            s.n_used.to_string(),
            fmt_f64(s.tail_bound),
        ];
        if let Some(k2) = kappa2 {
            rec.push(fmt_f64(k2[i]));
        }
        rec
    });
    Ok(assemble(meta, csv_body(&header, records)?))
}

fn number(x: f64) -> Value {
    // JSON has no infinities; those become strings
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(fmt_f64(x)), Value::Number)
}

pub fn samples_json(r: f64, samples: &[MetricSample], kappa2: Option<&[f64]>) -> Result<String> {
    let rows: Vec<Value> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut obj = json!({
                "r": number(r),
                "z": fmt_complex(s.z),
                "S": number(s.kernel),
                "c": number(s.c),
                "s": number(s.s),
                "kappa_c": number(s.kappa_c),
                "kappa_s": number(s.kappa_s),
                "n_used": s.n_used,
                "tail_bound": number(s.tail_bound),
            });
            if let Some(k2) = kappa2 {
                obj["kappa2_c"] = number(k2[i]);
            }
            obj
        })
        .collect();
    to_json(&Value::Array(rows))
}

fn to_json(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn limit_line(l: &LimitRow) -> String {
    use crate::variation::Limit;
    let (kind, value) = match l.limit {
        Limit::Finite(v) => ("finite", fmt_f64(v)),
        Limit::PosInf => ("+inf", String::new()),
        Limit::NegInf => ("-inf", String::new()),
        Limit::Undetermined => ("undetermined", String::new()),
    };
    let mut line = format!(
        "# limit quantity={} lambda={} kind={kind}",
        l.quantity,
        fmt_f64(l.lambda)
    );
    if !value.is_empty() {
        line.push_str(&format!(" value={value}"));
    }
    line
}

/// Sweep rows in spec order, with column limits as metadata lines.
pub fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow], limits: &[LimitRow], tr: &Truncation) -> Result<String> {
    let mut meta = vec![schema_line(), "# command=sweep".to_string()];
    meta.extend(truncation_lines(tr));
    meta.extend(limits.iter().map(limit_line));
    let mut header = vec!["r".to_string(), "lambda".to_string()];
    header.extend(spec.quantities.iter().map(|q| q.name().to_string()));
    header.extend(["n_used", "tail_bound", "errors"].map(String::from));
    let records = rows.iter().map(|row| {
        let mut rec = vec![fmt_f64(row.r), fmt_f64(row.lambda)];
        rec.extend(row.values.iter().map(|v| v.map(fmt_f64).unwrap_or_default()));
        rec.push(row.n_used.to_string());
        rec.push(fmt_f64(row.tail_bound));
        let errors: Vec<String> = spec
            .quantities
            .iter()
            .zip(&row.errors)
            .filter_map(|(q, e)| e.as_ref().map(|e| format!("{q}: {e}")))
            .collect();
        rec.push(errors.join("; "));
        rec
    });
    Ok(assemble(meta, csv_body(&header, records)?))
}

pub fn sweep_json(spec: &SweepSpec, rows: &[SweepRow]) -> Result<String> {
    let out: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            obj.insert("r".into(), number(row.r));
            obj.insert("lambda".into(), number(row.lambda));
            let mut errors = Map::new();
            for (i, q) in spec.quantities.iter().enumerate() {
                obj.insert(q.name().into(), row.values[i].map_or(Value::Null, number));
                if let Some(e) = &row.errors[i] {
                    errors.insert(q.name().into(), Value::String(e.clone()));
                }
            }
            obj.insert("n_used".into(), json!(row.n_used));
            obj.insert("tail_bound".into(), number(row.tail_bound));
            obj.insert("errors".into(), Value::Object(errors));
            Value::Object(obj)
        })
        .collect();
    to_json(&Value::Array(out))
}

const TRACE_COLUMNS: [&str; 6] = ["t", "re_z", "im_z", "abs_z", "speed", "winding"];

/// Trace samples; `meta` lines (without the leading `# `) follow the schema line.
pub fn trace_csv(trace: &GeodesicTrace, meta: &[String]) -> Result<String> {
    let mut lines = vec![schema_line(), "# command=geodesic".to_string()];
    lines.extend(meta.iter().map(|m| format!("# {m}")));
    lines.push(format!(
        "# winding={} length={} min_abs={} max_abs={} speed_drift={} angular_drift={}",
        trace.winding,
        fmt_f64(trace.length),
        fmt_f64(trace.min_abs),
        fmt_f64(trace.max_abs),
        fmt_f64(trace.speed_drift),
        fmt_f64(trace.angular_drift)
    ));
    if let Some(e) = trace.escape {
        lines.push(format!("# escape t={} boundary={:?}", fmt_f64(e.t), e.boundary).to_lowercase());
    }
    let header: Vec<String> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let records = trace.samples.iter().map(|s| {
        vec![
            fmt_f64(s.t),
            fmt_f64(s.z.re),
            fmt_f64(s.z.im),
            fmt_f64(s.z.norm()),
            fmt_f64(s.speed),
            s.winding.to_string(),
        ]
    });
    Ok(assemble(lines, csv_body(&header, records)?))
}

pub fn trace_json(trace: &GeodesicTrace) -> Result<String> {
    let rows: Vec<Value> = trace
        .samples
        .iter()
        .map(|s| {
            json!({
                "t": number(s.t),
                "re_z": number(s.z.re),
                "im_z": number(s.z.im),
                "abs_z": number(s.z.norm()),
                "speed": number(s.speed),
                "winding": s.winding,
            })
        })
        .collect();
    to_json(&Value::Array(rows))
}
