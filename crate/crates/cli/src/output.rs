//! CSV and JSON writers with a provenance stamp.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cdr_core::complex::{Cochain, Complex};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Output {
    dir: PathBuf,
    sha256: String,
}

impl Output {
    pub fn create(dir: &Path, config_text: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("cannot create {}", dir.display()), e))?;
        let digest = Sha256::digest(config_text.as_bytes());
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self { dir: dir.to_path_buf(), sha256 })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_sha256(&self) -> &str {
        &self.sha256
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
        Ok(path)
    }

    /// CSV with a `#` provenance line, a header row and one line per row.
    pub fn csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut body = format!("# cdr {VERSION} config-sha256={}\n{}\n", self.sha256, columns.join(","));
        for r in rows {
            body.push_str(&r.join(","));
            body.push('\n');
        }
        self.write(name, &body)
    }

    /// Pretty JSON with `version` and `config_sha256` fields added.
    pub fn json(&self, name: &str, mut value: Value) -> Result<PathBuf, CliError> {
        if let Value::Object(map) = &mut value {
            map.insert("version".into(), json!(VERSION));
            map.insert("config_sha256".into(), json!(self.sha256));
        }
        let body = serde_json::to_string_pretty(&value).expect("JSON values serialize") + "\n";
        self.write(name, &body)
    }

    pub fn matrix_market(&self, name: &str, op: &cdr_core::complex::BlockOperator) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        op.write_matrix_market(&mut buf).and_then(|_| buf.flush()).map_err(|e| CliError::io("matrix market", e))?;
        fs::write(&path, buf).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
        Ok(path)
    }
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e6)`.
pub fn num(v: f64) -> String {
    let v = v + 0.0;
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `NaN` and infinities become JSON `null`; `-0` becomes `0`.
pub fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v + 0.0)
    } else {
        Value::Null
    }
}

/// One row per cochain entry: block, form degree, parent simplex,
/// simplex barycenter, then one column per cochain.
pub fn cochain_rows(complex: &Complex, fields: &[&Cochain]) -> Vec<Vec<String>> {
    let Some(first) = fields.first() else { return Vec::new() };
    let layout = first.layout();
    let mesh = complex.mesh();
    let mut rows = Vec::with_capacity(layout.dim());
    for (b, block) in layout.blocks().iter().enumerate() {
        let sub = &complex.patch(block).submesh;
        for (i, &s) in sub.dof_map(block.q).iter().enumerate() {
            let x = mesh.barycenter(block.q, s);
            let mut row = vec![block.to_string(), block.q.to_string(), s.to_string(), num(x[0]), num(x[1])];
            row.extend(fields.iter().map(|f| num(f.block(b)[i])));
            rows.push(row);
        }
    }
    rows
}

pub const COCHAIN_COLUMNS: [&str; 5] = ["block", "q", "entity", "x", "y"];
