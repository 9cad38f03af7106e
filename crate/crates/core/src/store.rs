//! Filtered embedding matrix with per-token frequency metadata, and the EGEM
//! on-disk format.
//!
//! A store with prefix `dir/name` occupies three files:
//!
//! * `name.egem.json` – header (`model_name`, `vocab_size`, `dim`, `dtype`,
//!   `layout`, `format_version`)
//! * `name.egem.bin` – `vocab_size × dim` little-endian `f32`, row-major
//! * `name.tokens.tsv` – `token \t frequency \t self_information` per row

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::util::write_atomic;

const HEADER_SUFFIX: &str = ".egem.json";
const PAYLOAD_SUFFIX: &str = ".egem.bin";
const TOKENS_SUFFIX: &str = ".tokens.tsv";
const FORMAT_VERSION: u32 = 1;

/// Relative tolerance for `self_information == -log2(frequency)`.
pub const SELF_INFO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenRecord {
    pub token: String,
    /// Relative corpus frequency, in (0, 1].
    pub frequency: f64,
    /// `-log2(frequency)`, in bits.
    pub self_information: f64,
    pub row_index: usize,
}

impl TokenRecord {
    /// Builds a record whose self-information is derived from `frequency`.
    pub fn new(token: impl Into<String>, frequency: f64, row_index: usize) -> Result<Self> {
        check_frequency(frequency)?;
        Ok(TokenRecord {
            token: token.into(),
            frequency,
            self_information: -frequency.log2(),
            row_index,
        })
    }

    /// Builds a record from stored parts, checking that both columns agree.
    pub fn from_parts(
        token: impl Into<String>,
        frequency: f64,
        self_information: f64,
        row_index: usize,
    ) -> Result<Self> {
        let token = token.into();
        check_frequency(frequency)?;
        let expected = -frequency.log2();
        if !self_information.is_finite()
            || (self_information - expected).abs() > SELF_INFO_TOLERANCE * expected.abs().max(1.0)
        {
            return Err(GeomError::Data(format!(
                "token {token:?}: self_information {self_information} != -log2({frequency}) = {expected}"
            )));
        }
        Ok(TokenRecord {
            token,
            frequency,
            self_information,
            row_index,
        })
    }
}

fn check_frequency(frequency: f64) -> Result<()> {
    if !(frequency > 0.0 && frequency <= 1.0) {
        return Err(GeomError::Data(format!(
            "frequency {frequency} outside (0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    model_name: String,
    vocab_size: usize,
    dim: usize,
    dtype: String,
    layout: String,
    format_version: u32,
}

/// Immutable `V × d` embedding matrix plus token metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    model_name: String,
    dim: usize,
    matrix: Vec<f32>,
    tokens: Vec<TokenRecord>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    /// Validates and assembles a store. `matrix` is row-major with `tokens.len()` rows.
    pub fn new(
        model_name: impl Into<String>,
        dim: usize,
        matrix: Vec<f32>,
        tokens: Vec<TokenRecord>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            index.entry(t.token.clone()).or_insert(i);
        }
        let store = EmbeddingStore {
            model_name: model_name.into(),
            dim,
            matrix,
            tokens,
            index,
        };
        store.validate()?;
        Ok(store)
    }

    /// Convenience constructor from `f64` rows and frequencies; token names are `tok{i}`.
    pub fn from_rows(
        model_name: impl Into<String>,
        rows: &[Vec<f64>],
        frequencies: &[f64],
    ) -> Result<Self> {
        if rows.len() != frequencies.len() {
            return Err(GeomError::Consistency(format!(
                "{} rows but {} frequencies",
                rows.len(),
                frequencies.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut matrix = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(GeomError::Consistency(format!(
                    "row {i} has {} columns, expected {dim}",
                    r.len()
                )));
            }
            matrix.extend(r.iter().map(|&x| x as f32));
        }
        let tokens = frequencies
            .iter()
            .enumerate()
            .map(|(i, &f)| TokenRecord::new(format!("tok{i}"), f, i))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model_name, dim, matrix, tokens)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(GeomError::Consistency("dimension is zero".into()));
        }
        if self.matrix.len() != self.tokens.len() * self.dim {
            return Err(GeomError::Consistency(format!(
                "matrix holds {} values, expected {} rows × {} dims",
                self.matrix.len(),
                self.tokens.len(),
                self.dim
            )));
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.row_index != i {
                return Err(GeomError::Consistency(format!(
                    "token {:?} has row_index {} at position {i}",
                    t.token, t.row_index
                )));
            }
            check_frequency(t.frequency)?;
        }
        for (i, row) in self.matrix.chunks_exact(self.dim).enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(GeomError::Data(format!("row {i} has a non-finite entry")));
            }
            if row.iter().all(|&x| x == 0.0) {
                return Err(GeomError::Data(format!("row {i} is all zeros")));
            }
        }
        Ok(())
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[TokenRecord] {
        &self.tokens
    }

    /// Raw row-major `f32` payload.
    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// Row `i` widened to `f64`.
    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&x| x as f64).collect()
    }

    /// All rows widened to `f64`.
    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        (0..self.vocab_size()).map(|i| self.row_f64(i)).collect()
    }

    pub fn self_information(&self) -> Vec<f64> {
        self.tokens.iter().map(|t| t.self_information).collect()
    }

    /// Row index of an exact token string, if present.
    pub fn find_token(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Euclidean norm of every row, accumulated in `f64`.
    pub fn norms(&self) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.dim)
            .map(|row| {
                row.iter()
                    .map(|&x| {
                        let x = x as f64;
                        x * x
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Copy of this store with every row mapped through `f` (used for
    /// rotation and scaling checks).
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..self.vocab_size()).map(|i| f(&self.row_f64(i))).collect();
        let dim = rows.first().map_or(self.dim, Vec::len);
        let matrix = rows.iter().flatten().map(|&x| x as f32).collect();
        Self::new(self.model_name.clone(), dim, matrix, self.tokens.clone())
    }
}

/// Strips a known EGEM suffix so either the header path or the bare prefix
/// can be passed around.
pub fn store_prefix(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for suffix in [HEADER_SUFFIX, PAYLOAD_SUFFIX, TOKENS_SUFFIX] {
        if let Some(stripped) = s.strip_suffix(suffix) {
            return PathBuf::from(stripped);
        }
    }
    path.to_path_buf()
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Paths of the three EGEM files for a prefix, in header/payload/tokens order.
pub fn store_files(path: &Path) -> [PathBuf; 3] {
    let prefix = store_prefix(path);
    [
        with_suffix(&prefix, HEADER_SUFFIX),
        with_suffix(&prefix, PAYLOAD_SUFFIX),
        with_suffix(&prefix, TOKENS_SUFFIX),
    ]
}

pub fn load_store(path: &Path) -> Result<EmbeddingStore> {
    let [header_path, payload_path, tokens_path] = store_files(path);

    let header_text = fs::read_to_string(&header_path).map_err(|e| GeomError::io(&header_path, e))?;
    let header: Header = serde_json::from_str(&header_text)
        .map_err(|e| GeomError::Format(format!("{}: {e}", header_path.display())))?;
    if header.dtype != "f32le" {
        return Err(GeomError::Format(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.layout != "row-major" {
        return Err(GeomError::Format(format!("unsupported layout {:?}", header.layout)));
    }
    if header.format_version != FORMAT_VERSION {
        return Err(GeomError::Format(format!(
            "unsupported format_version {}",
            header.format_version
        )));
    }
    if header.dim == 0 {
        return Err(GeomError::Format("header declares dim 0".into()));
    }

    let bytes = fs::read(&payload_path).map_err(|e| GeomError::io(&payload_path, e))?;
    let row_bytes = header.dim * 4;
    if bytes.len() % row_bytes != 0 || bytes.len() / row_bytes != header.vocab_size {
        return Err(GeomError::Consistency(format!(
            "header declares {} rows of dim {} but payload holds {} bytes ({} rows)",
            header.vocab_size,
            header.dim,
            bytes.len(),
            bytes.len() as f64 / row_bytes as f64
        )));
    }
    let matrix: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();

    let tsv = fs::read_to_string(&tokens_path).map_err(|e| GeomError::io(&tokens_path, e))?;
    let mut tokens = Vec::with_capacity(header.vocab_size);
    for (i, line) in tsv.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(GeomError::Format(format!(
                "{} line {}: expected 3 tab-separated fields, found {}",
                tokens_path.display(),
                i + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|e| {
                GeomError::Format(format!("{} line {}: bad {what} {s:?}: {e}", tokens_path.display(), i + 1))
            })
        };
        let frequency = parse(fields[1], "frequency")?;
        let info = parse(fields[2], "self_information")?;
        tokens.push(TokenRecord::from_parts(fields[0], frequency, info, i)?);
    }
    if tokens.len() != header.vocab_size {
        return Err(GeomError::Consistency(format!(
            "header declares {} tokens but {} has {} rows",
            header.vocab_size,
            tokens_path.display(),
            tokens.len()
        )));
    }
    EmbeddingStore::new(header.model_name, header.dim, matrix, tokens)
}

pub fn save_store(store: &EmbeddingStore, path: &Path) -> Result<()> {
    store.validate()?;
    for t in &store.tokens {
        if t.token.contains(['\t', '\n', '\r']) {
            return Err(GeomError::Data(format!(
                "token {:?} contains a tab or newline",
                t.token
            )));
        }
    }
    let [header_path, payload_path, tokens_path] = store_files(path);
    let header = Header {
        model_name: store.model_name.clone(),
        vocab_size: store.vocab_size(),
        dim: store.dim,
        dtype: "f32le".into(),
        layout: "row-major".into(),
        format_version: FORMAT_VERSION,
    };
    let mut header_text = serde_json::to_string_pretty(&header)
        .map_err(|e| GeomError::Data(e.to_string()))?;
    header_text.push('\n');

    let mut payload = Vec::with_capacity(store.matrix.len() * 4);
    for x in &store.matrix {
        payload.extend_from_slice(&x.to_le_bytes());
    }

    let mut tsv = String::new();
    for t in &store.tokens {
        tsv.push_str(&format!("{}\t{}\t{}\n", t.token, t.frequency, t.self_information));
    }

    write_atomic(&payload_path, &payload)?;
    write_atomic(&tokens_path, tsv.as_bytes())?;
    write_atomic(&header_path, header_text.as_bytes())
}
