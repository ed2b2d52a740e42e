//! Versioned model checkpoints shared by the veracity and rumour models.
//!
//! ```text
//! PANACEA-CHECKPOINT 1
//! model nlisan
//! encoding text|binary
//! arch d=64 h=16 m=32 n=10
//! tensors 7
//! tensor w_q 3 16
//! <rows: space-separated decimals, or rows*cols little-endian f64>
//! ...
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

pub const MAGIC: &str = "PANACEA-CHECKPOINT";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    Format(String),
    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    Shape { name: String, expected: (usize, usize), found: (usize, usize) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorEncoding {
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: String,
    /// Architecture constants, written in key order.
    pub arch: BTreeMap<String, String>,
    pub tensors: Vec<(String, Array2<f64>)>,
}

fn format_err(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Format(msg.into())
}

impl Checkpoint {
    pub fn new(model: impl Into<String>) -> Self {
        Checkpoint { model: model.into(), arch: BTreeMap::new(), tensors: Vec::new() }
    }

    pub fn with_arch(mut self, key: &str, value: impl ToString) -> Self {
        self.arch.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, name: &str, tensor: Array2<f64>) {
        self.tensors.push((name.to_string(), tensor));
    }

    pub fn arch_usize(&self, key: &str) -> Result<usize, CheckpointError> {
        self.arch
            .get(key)
            .ok_or_else(|| format_err(format!("missing arch key {key}")))?
            .parse()
            .map_err(|_| format_err(format!("arch key {key} is not an integer")))
    }

    pub fn arch_f64(&self, key: &str) -> Result<f64, CheckpointError> {
        self.arch
            .get(key)
            .ok_or_else(|| format_err(format!("missing arch key {key}")))?
            .parse()
            .map_err(|_| format_err(format!("arch key {key} is not a number")))
    }

    /// The named tensor, checked against the expected shape.
    pub fn tensor(&self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>, CheckpointError> {
        let (_, t) = self
            .tensors
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| format_err(format!("missing tensor {name}")))?;
        if t.dim() != (rows, cols) {
            return Err(CheckpointError::Shape { name: name.into(), expected: (rows, cols), found: t.dim() });
        }
        Ok(t.clone())
    }

    pub fn write_to<W: Write>(&self, mut w: W, encoding: TensorEncoding) -> Result<(), CheckpointError> {
        writeln!(w, "{MAGIC} {VERSION}")?;
        writeln!(w, "model {}", self.model)?;
        writeln!(w, "encoding {}", if encoding == TensorEncoding::Text { "text" } else { "binary" })?;
        let arch: Vec<String> = self.arch.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(w, "arch {}", arch.join(" "))?;
        writeln!(w, "tensors {}", self.tensors.len())?;
        for (name, t) in &self.tensors {
            let (r, c) = t.dim();
            writeln!(w, "tensor {name} {r} {c}")?;
            match encoding {
                TensorEncoding::Text => {
                    for row in t.rows() {
                        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                        writeln!(w, "{}", line.join(" "))?;
                    }
                }
                TensorEncoding::Binary => {
                    for x in t.iter() {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self, CheckpointError> {
        let mut line = String::new();
        let mut next_line = |r: &mut R| -> Result<String, CheckpointError> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(format_err("unexpected end of file"));
            }
            Ok(line.trim_end_matches(['\n', '\r']).to_string())
        };

        let header = next_line(&mut r)?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| format_err("missing magic header"))?;
        if version != VERSION.to_string() {
            return Err(format_err(format!("unsupported version {version}")));
        }
        let model = next_line(&mut r)?
            .strip_prefix("model ")
            .ok_or_else(|| format_err("missing model line"))?
            .to_string();
        let encoding = match next_line(&mut r)?.as_str() {
            "encoding text" => TensorEncoding::Text,
            "encoding binary" => TensorEncoding::Binary,
            other => return Err(format_err(format!("bad encoding line {other:?}"))),
        };
        let arch_line = next_line(&mut r)?;
        let arch_body = arch_line.strip_prefix("arch").ok_or_else(|| format_err("missing arch line"))?;
        let mut arch = BTreeMap::new();
        for kv in arch_body.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| format_err(format!("bad arch entry {kv}")))?;
            arch.insert(k.to_string(), v.to_string());
        }
        let count: usize = next_line(&mut r)?
            .strip_prefix("tensors ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err("missing tensor count"))?;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let head = next_line(&mut r)?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            let [tag, name, rows, cols] = parts[..] else {
                return Err(format_err(format!("bad tensor header {head:?}")));
            };
            if tag != "tensor" {
                return Err(format_err(format!("bad tensor header {head:?}")));
            }
            let rows: usize = rows.parse().map_err(|_| format_err("bad row count"))?;
            let cols: usize = cols.parse().map_err(|_| format_err("bad column count"))?;
            let mut data = Vec::with_capacity(rows * cols);
            match encoding {
                TensorEncoding::Text => {
                    for _ in 0..rows {
                        let row = next_line(&mut r)?;
                        let values: Result<Vec<f64>, _> = row.split_whitespace().map(str::parse::<f64>).collect();
                        let values = values.map_err(|e| format_err(format!("bad number in {name}: {e}")))?;
                        if values.len() != cols {
                            return Err(format_err(format!("row of {name} has {} values, expected {cols}", values.len())));
                        }
                        data.extend(values);
                    }
                }
                TensorEncoding::Binary => {
                    let mut buf = [0u8; 8];
                    for _ in 0..rows * cols {
                        r.read_exact(&mut buf)?;
                        data.push(f64::from_le_bytes(buf));
                    }
                }
            }
            let t = Array2::from_shape_vec((rows, cols), data).map_err(|e| format_err(e.to_string()))?;
            tensors.push((name.to_string(), t));
        }
        Ok(Checkpoint { model, arch, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>, encoding: TensorEncoding) -> Result<(), CheckpointError> {
        self.write_to(BufWriter::new(File::create(path)?), encoding)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
