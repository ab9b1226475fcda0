//! Deterministic serialization: fixed 17-significant-digit CSV, shortest
//! round-trip JSON, LF endings everywhere.

use std::io::Write;
use std::path::Path;

/// 17 significant digits: exact round trip for every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct TraceTable {
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub kappa_s: Vec<f64>,
    pub kappa_ss: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub const TRACE_HEADER: &str = "s,theta,kappa,kappa_s,kappa_ss,x,y";

impl TraceTable {
    pub fn to_csv(&self) -> String {
        let n = self.s.len();
        let mut out = String::with_capacity(n * 160 + 64);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for i in 0..n {
            for (k, col) in [
                &self.s,
                &self.theta,
                &self.kappa,
                &self.kappa_s,
                &self.kappa_ss,
                &self.x,
                &self.y,
            ]
            .iter()
            .enumerate()
            {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&fmt_f64(col[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        if header.trim() != TRACE_HEADER {
            return Err(format!(
                "unexpected header {header:?}, want {TRACE_HEADER:?}"
            ));
        }
        let mut table = TraceTable {
            s: vec![],
            theta: vec![],
            kappa: vec![],
            kappa_s: vec![],
            kappa_ss: vec![],
            x: vec![],
            y: vec![],
        };
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(format!("row {}: expected 7 fields", ln + 2));
            }
            let mut vals = [0.0f64; 7];
            for (v, f) in vals.iter_mut().zip(&fields) {
                *v = f.parse().map_err(|e| format!("row {}: {e}", ln + 2))?;
            }
            table.s.push(vals[0]);
            table.theta.push(vals[1]);
            table.kappa.push(vals[2]);
            table.kappa_s.push(vals[3]);
            table.kappa_ss.push(vals[4]);
            table.x.push(vals[5]);
            table.y.push(vals[6]);
        }
        Ok(table)
    }
}

/// Write bytes atomically enough for our purposes, LF endings preserved.
pub fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    f.flush()
}

/// Pretty JSON plus a trailing newline.
pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}
