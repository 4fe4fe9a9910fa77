//! Deterministic result emission: CSV with a fixed column order and
//! 12-significant-digit decimals, plus a JSON summary carrying the resolved
//! configuration, its hash, and full-precision rows.
//!
//! The determinism contract covers the CSV bytes: identical configs produce
//! identical files regardless of worker count or run. Wall-clock timings are
//! deliberately kept out of the CSV and live only in the JSON summary.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dsbc_core::lindblad::SimTrajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    fn csv_cell(&self) -> String {
        match self {
            ParamValue::Int(v) => v.to_string(),
            ParamValue::Float(v) => fmt_sig(*v),
            ParamValue::Text(v) => v.clone(),
        }
    }
}

/// One sweep-point record. `error` is always the exact f64 complement of
/// `fidelity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub params: Vec<(String, ParamValue)>,
    pub fidelity: f64,
    pub error: f64,
    pub asymptotic_fidelity: Option<f64>,
    pub trace_error: f64,
    /// Wall-clock cost of the point; JSON-only metadata, never emitted to CSV.
    pub wall_time_ms: f64,
}

impl ResultRow {
    pub fn new(params: Vec<(String, ParamValue)>, fidelity: f64, trace_error: f64) -> Self {
        ResultRow {
            params,
            fidelity,
            error: 1.0 - fidelity,
            asymptotic_fidelity: None,
            trace_error,
            wall_time_ms: 0.0,
        }
    }

    pub fn param_f64(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).and_then(|(_, v)| match v {
            ParamValue::Float(x) => Some(*x),
            ParamValue::Int(x) => Some(*x as f64),
            ParamValue::Text(_) => None,
        })
    }

    pub fn param_text(&self, name: &str) -> Option<&str> {
        self.params.iter().find(|(n, _)| n == name).and_then(|(_, v)| match v {
            ParamValue::Text(s) => Some(s.as_str()),
            _ => None,
        })
    }
}

/// 12 significant digits, scientific notation.
pub fn fmt_sig(x: f64) -> String {
    format!("{:.11e}", x)
}

/// Short run hash of the resolved configuration echo.
pub fn config_hash(echo: &[(String, String)]) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in echo {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    hex_prefix(&digest, 12)
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::new();
    for b in bytes {
        s.push_str(&format!("{:02x}", b));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub config_hash: String,
    /// Resolved configuration echo (defaults merged with overrides).
    pub config: Vec<(String, String)>,
    pub rows: Vec<ResultRow>,
    pub wall_time_ms: f64,
}

impl RunSummary {
    pub fn new(experiment: &str, config: Vec<(String, String)>, rows: Vec<ResultRow>) -> Self {
        let config_hash = config_hash(&config);
        RunSummary {
            experiment: experiment.to_string(),
            config_hash,
            config,
            rows,
            wall_time_ms: 0.0,
        }
    }
}

/// Write `<label>.csv` and `<label>.json`; returns the CSV path.
pub fn emit_results(summary: &RunSummary, out_dir: &Path, label: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{}.csv", label));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    write_csv(&summary.rows, &mut f)?;
    f.flush()?;
    let json_path = out_dir.join(format!("{}.json", label));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut f, summary)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(csv_path)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: &mut W) -> std::io::Result<()> {
    if rows.is_empty() {
        writeln!(w, "fidelity,error,trace_error")?;
        return Ok(());
    }
    let with_asym = rows.iter().any(|r| r.asymptotic_fidelity.is_some());
    let mut header: Vec<String> = rows[0].params.iter().map(|(n, _)| n.clone()).collect();
    header.push("fidelity".into());
    header.push("error".into());
    if with_asym {
        header.push("asymptotic_fidelity".into());
    }
    header.push("trace_error".into());
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let mut cells: Vec<String> = row.params.iter().map(|(_, v)| v.csv_cell()).collect();
        cells.push(fmt_sig(row.fidelity));
        cells.push(fmt_sig(row.error));
        if with_asym {
            cells.push(row.asymptotic_fidelity.map(fmt_sig).unwrap_or_default());
        }
        cells.push(fmt_sig(row.trace_error));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Write one trajectory as `<label>.csv` with the standard series columns.
pub fn emit_series(
    traj: &SimTrajectory,
    out_dir: &Path,
    label: &str,
) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{}.csv", label));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    let mut header = vec!["t"];
    if traj.fidelity.is_some() {
        header.push("fidelity");
        header.push("error");
    }
    if traj.boson_occupation.is_some() {
        header.push("boson_occupation");
    }
    if traj.top_level_population.is_some() {
        header.push("top_level_population");
    }
    header.push("trace_error");
    writeln!(f, "{}", header.join(","))?;
    for (k, &t) in traj.times.iter().enumerate() {
        let mut cells = vec![fmt_sig(t)];
        if let Some(fid) = &traj.fidelity {
            cells.push(fmt_sig(fid[k]));
            cells.push(fmt_sig(1.0 - fid[k]));
        }
        if let Some(occ) = &traj.boson_occupation {
            cells.push(fmt_sig(occ[k]));
        }
        if let Some(top) = &traj.top_level_population {
            cells.push(fmt_sig(top[k]));
        }
        cells.push(fmt_sig(traj.trace_error[k]));
        writeln!(f, "{}", cells.join(","))?;
    }
    f.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_format_is_stable() {
        assert_eq!(fmt_sig(std::f64::consts::SQRT_2), "1.41421356237e0");
        assert_eq!(fmt_sig(0.0), "0.00000000000e0");
        assert_eq!(fmt_sig(-1.0 / 3.0e5), "-3.33333333333e-6");
    }

    #[test]
    fn error_is_exact_complement() {
        for f in [0.0, 1e-17, 0.25, 0.5, 0.75, 0.9999, 1.0 - 1e-12, 1.0] {
            let row = ResultRow::new(vec![], f, 0.0);
            assert_eq!(row.fidelity + row.error, 1.0);
        }
    }

    #[test]
    fn csv_round_trip_precision() {
        let rows = vec![ResultRow::new(
            vec![
                ("delta_a".into(), ParamValue::Float(2.0_f64.sqrt())),
                ("n".into(), ParamValue::Int(3)),
            ],
            0.999876543,
            1e-13,
        )];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "delta_a,n,fidelity,error,trace_error");
        let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
        let f: f64 = cells[2].parse().unwrap();
        let e: f64 = cells[3].parse().unwrap();
        assert!((f + e - 1.0).abs() < 1e-11);
        assert!((f - 0.999876543).abs() < 1e-11);
    }

    #[test]
    fn json_round_trips_rows() {
        let mut row = ResultRow::new(
            vec![
                ("zeta".into(), ParamValue::Float(0.2)),
                ("wave".into(), ParamValue::Text("standing".into())),
                ("n_s".into(), ParamValue::Int(2)),
            ],
            0.8123456789,
            3e-14,
        );
        row.asymptotic_fidelity = Some(0.99);
        row.wall_time_ms = 12.5;
        let summary = RunSummary::new("heating", vec![("a".into(), "1".into())], vec![row]);
        let text = serde_json::to_string(&summary).unwrap();
        let back: RunSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back.rows, summary.rows);
        assert_eq!(back.config_hash, summary.config_hash);
    }

    #[test]
    fn hash_tracks_config_content() {
        let a = config_hash(&[("x".into(), "1".into())]);
        let b = config_hash(&[("x".into(), "2".into())]);
        assert_ne!(a, b);
        assert_eq!(a.len(), 12);
    }
}
