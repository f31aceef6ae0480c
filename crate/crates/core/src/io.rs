//! File formats: embeddings, kernels, masks, labels, game instances and reports.
//!
//! Binary files share one header: the magic bytes `MVNE` and a version byte.
//! All integers and floats are little-endian.
//!
//! Embeddings:
//!
//! ```text
//! "MVNE" | version u8 | n u64 | d u64 | n*d f64 (row-major) | flag u8 | [n u32 labels if flag = 1]
//! ```
//!
//! Kernels:
//!
//! ```text
//! "MVNE" | version u8 | n u64 | n*n f64 (row-major) | kind u8 | bandwidth f64
//! ```
//!
//! with kind 0 linear, 1 rbf, 2 cosine, 3 custom (bandwidth is 0 unless rbf).
//!
//! Text formats use shortest round-trip float formatting, so they also
//! reproduce values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::completion::ObservationMask;
use crate::error::{Error, Result};
use crate::games::{ConstraintSet, PolytopeAmbiguitySet};
use crate::kernels::{EmbeddingMatrix, KernelKind, KernelMatrix};
use crate::spectral::{max_asymmetry, DensityMatrix, EpsilonFloor, SymMatrix};

pub const MAGIC: &[u8; 4] = b"MVNE";
pub const FORMAT_VERSION: u8 = 1;
pub const SCHEMA_VERSION: u32 = 1;
/// Loaded kernels more asymmetric than this carry a warning.
pub const ASYMMETRY_WARN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// `.csv` and `.txt` are text; anything else is binary.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn text(bytes: Vec<u8>, path: &Path) -> Result<String> {
    String::from_utf8(bytes).map_err(|e| {
        Error::parse(
            format!("{} byte {}", path.display(), e.utf8_error().valid_up_to()),
            "invalid UTF-8",
        )
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::parse(
                format!("offset {}", self.pos),
                format!("truncated file reading {what}"),
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn header(&mut self) -> Result<()> {
        if self.take(4, "magic")? != MAGIC {
            return Err(Error::parse("offset 0", "bad magic bytes"));
        }
        let v = self.u8("version")?;
        if v != FORMAT_VERSION {
            return Err(Error::parse("offset 4", format!("unsupported format version {v}")));
        }
        Ok(())
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let at = self.pos;
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| Error::parse(format!("offset {at}"), format!("{what} {v} too large")))
    }

    /// Reads `len` floats after checking that enough bytes remain.
    fn floats(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = len
            .checked_mul(8)
            .ok_or_else(|| Error::parse(format!("offset {}", self.pos), format!("{what} length overflows")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::parse(format!("offset {}", self.pos), "trailing bytes"));
        }
        Ok(())
    }
}

fn is_binary(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

fn parse_f64(tok: &str, line: usize, col: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| {
        Error::parse(
            format!("line {line}, column {col}"),
            format!("not a number: {:?}", tok.trim()),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("line {line}, column {col}")));
    }
    Ok(v)
}

/// Data lines of a text file with their 1-based line numbers, plus the
/// tokens of a leading `#` header line if present.
fn text_lines(src: &str) -> (Vec<String>, Vec<(usize, &str)>) {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(h) = t.strip_prefix('#') {
            if rows.is_empty() && header.is_empty() {
                header = h.split_whitespace().map(str::to_owned).collect();
            }
            continue;
        }
        rows.push((i + 1, t));
    }
    (header, rows)
}

fn header_value<'a>(header: &'a [String], key: &str) -> Option<&'a str> {
    header.iter().find_map(|t| t.strip_prefix(key)?.strip_prefix('='))
}

// ---------------------------------------------------------------- embeddings

/// Reads a binary (detected by magic bytes) or CSV embedding file.
///
/// In CSV a header line `# labels` declares the last column as integer labels.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = read(path)?;
    if is_binary(&bytes) {
        decode_embeddings(&bytes)
    } else {
        parse_embeddings_csv(&text(bytes, path)?)
    }
}

pub fn save_embeddings(path: &Path, emb: &EmbeddingMatrix, format: Format) -> Result<()> {
    match format {
        Format::Binary => write(path, &encode_embeddings(emb)),
        Format::Csv => write(path, embeddings_csv(emb).as_bytes()),
    }
}

pub fn encode_embeddings(emb: &EmbeddingMatrix) -> Vec<u8> {
    let (n, d) = (emb.n(), emb.d());
    let mut out = Vec::with_capacity(22 + 8 * n * d + 4 * n);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    let rows = emb.rows();
    for i in 0..n {
        for j in 0..d {
            out.extend_from_slice(&rows[(i, j)].to_le_bytes());
        }
    }
    match emb.labels() {
        Some(labels) => {
            out.push(1);
            for &l in labels {
                out.extend_from_slice(&l.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    out
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut r = Reader::new(bytes);
    r.header()?;
    let n = r.count("row count")?;
    let d = r.count("column count")?;
    let len = n
        .checked_mul(d)
        .ok_or_else(|| Error::parse("offset 5", "shape overflows"))?;
    let data = r.floats(len, "embedding values")?;
    if let Some(k) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "row {}, column {}",
            k / d.max(1),
            k % d.max(1)
        )));
    }
    let flag_at = r.pos;
    let flag = r.u8("label flag")?;
    let labels = match flag {
        0 => None,
        1 => Some((0..n).map(|_| r.u32("labels")).collect::<Result<Vec<u32>>>()?),
        f => {
            return Err(Error::parse(
                format!("offset {flag_at}"),
                format!("label flag must be 0 or 1, got {f}"),
            ))
        }
    };
    r.finish()?;
    let rows = DMatrix::from_row_slice(n, d, &data);
    match labels {
        Some(l) => EmbeddingMatrix::with_labels(rows, l),
        None => EmbeddingMatrix::new(rows),
    }
}

pub fn parse_embeddings_csv(src: &str) -> Result<EmbeddingMatrix> {
    let (header, lines) = text_lines(src);
    let has_labels = header.iter().any(|t| t == "labels");
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for &(ln, line) in &lines {
        let toks: Vec<&str> = line.split(',').collect();
        if *width.get_or_insert(toks.len()) != toks.len() {
            return Err(Error::parse(
                format!("line {ln}"),
                format!("expected {} fields, found {}", width.unwrap_or(0), toks.len()),
            ));
        }
        let feats = if has_labels {
            let last = toks.len() - 1;
            let l: u32 = toks[last].trim().parse().map_err(|_| {
                Error::parse(
                    format!("line {ln}, column {}", last + 1),
                    "label is not a non-negative integer",
                )
            })?;
            labels.push(l);
            &toks[..last]
        } else {
            &toks[..]
        };
        for (c, tok) in feats.iter().enumerate() {
            values.push(parse_f64(tok, ln, c + 1)?);
        }
    }
    let n = lines.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let d = values.len() / n;
    if d == 0 {
        return Err(Error::parse(format!("line {}", lines[0].0), "no feature columns"));
    }
    let rows = DMatrix::from_row_slice(n, d, &values);
    if has_labels {
        EmbeddingMatrix::with_labels(rows, labels)
    } else {
        EmbeddingMatrix::new(rows)
    }
}

pub fn embeddings_csv(emb: &EmbeddingMatrix) -> String {
    let mut s = String::new();
    if emb.labels().is_some() {
        s.push_str("# labels\n");
    }
    let rows = emb.rows();
    for i in 0..emb.n() {
        let mut fields: Vec<String> = (0..emb.d()).map(|j| rows[(i, j)].to_string()).collect();
        if let Some(l) = emb.labels() {
            fields.push(l[i].to_string());
        }
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

// ------------------------------------------------------------------- kernels

/// A symmetric matrix read from a kernel file before any PSD check.
#[derive(Debug, Clone)]
pub struct LoadedMatrix {
    pub matrix: SymMatrix,
    pub kind: KernelKind,
    /// `max |K_ij - K_ji|` of the stored values.
    pub max_asymmetry: f64,
}

impl LoadedMatrix {
    pub fn warning(&self) -> Option<String> {
        (self.max_asymmetry > ASYMMETRY_WARN).then(|| {
            format!(
                "asymmetry {:e} above {:e}, symmetrized on load",
                self.max_asymmetry, ASYMMETRY_WARN
            )
        })
    }

    pub fn into_kernel(self) -> Result<KernelMatrix> {
        KernelMatrix::new(self.matrix, self.kind)
    }
}

#[derive(Debug, Clone)]
pub struct LoadedKernel {
    pub kernel: KernelMatrix,
    pub max_asymmetry: f64,
    /// Set when the stored matrix was asymmetric beyond [`ASYMMETRY_WARN`].
    pub warning: Option<String>,
}

/// Reads a kernel file and checks that it is PSD.
pub fn load_kernel(path: &Path) -> Result<LoadedKernel> {
    let m = load_matrix(path)?;
    let warning = m.warning();
    let max_asymmetry = m.max_asymmetry;
    Ok(LoadedKernel {
        kernel: m.into_kernel()?,
        max_asymmetry,
        warning,
    })
}

/// Reads a kernel file, symmetrizing without the PSD check.
pub fn load_matrix(path: &Path) -> Result<LoadedMatrix> {
    let bytes = read(path)?;
    if is_binary(&bytes) {
        decode_matrix(&bytes)
    } else {
        parse_matrix_csv(&text(bytes, path)?)
    }
}

pub fn save_kernel(path: &Path, k: &KernelMatrix, format: Format) -> Result<()> {
    match format {
        Format::Binary => write(path, &encode_kernel(k)),
        Format::Csv => write(path, kernel_csv(k).as_bytes()),
    }
}

fn kind_tag(kind: KernelKind) -> (u8, f64) {
    match kind {
        KernelKind::Linear => (0, 0.0),
        KernelKind::Rbf { bandwidth } => (1, bandwidth),
        KernelKind::Cosine => (2, 0.0),
        KernelKind::Custom => (3, 0.0),
    }
}

fn kind_from_tag(tag: u8, bandwidth: f64, at: usize) -> Result<KernelKind> {
    Ok(match tag {
        0 => KernelKind::Linear,
        1 => KernelKind::Rbf { bandwidth },
        2 => KernelKind::Cosine,
        3 => KernelKind::Custom,
        t => return Err(Error::parse(format!("offset {at}"), format!("unknown kernel kind {t}"))),
    })
}

pub fn encode_kernel(k: &KernelMatrix) -> Vec<u8> {
    let n = k.n();
    let m = k.matrix().as_matrix();
    let mut out = Vec::with_capacity(13 + 8 * n * n + 9);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..n {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    let (tag, bw) = kind_tag(k.kind());
    out.push(tag);
    out.extend_from_slice(&bw.to_le_bytes());
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<LoadedMatrix> {
    let mut r = Reader::new(bytes);
    r.header()?;
    let n = r.count("dimension")?;
    let len = n
        .checked_mul(n)
        .ok_or_else(|| Error::parse("offset 5", "dimension overflows"))?;
    let data = r.floats(len, "kernel values")?;
    let at = r.pos;
    let tag = r.u8("kernel kind")?;
    let bw = r.f64("bandwidth")?;
    r.finish()?;
    let kind = kind_from_tag(tag, bw, at)?;
    finish_matrix(DMatrix::from_row_slice(n, n, &data), kind)
}

fn finish_matrix(raw: DMatrix<f64>, kind: KernelKind) -> Result<LoadedMatrix> {
    if raw.nrows() == 0 {
        return Err(Error::Empty);
    }
    if let Some(k) = raw.iter().position(|v| !v.is_finite()) {
        // column-major storage
        return Err(Error::NonFinite(format!(
            "row {}, column {}",
            k % raw.nrows(),
            k / raw.nrows()
        )));
    }
    let max_asymmetry = max_asymmetry(&raw);
    Ok(LoadedMatrix {
        matrix: SymMatrix::new(raw)?,
        kind,
        max_asymmetry,
    })
}

fn parse_kind_header(header: &[String]) -> Result<KernelKind> {
    let bad = |m: String| Error::parse("line 1", m);
    Ok(match header_value(header, "kind") {
        None | Some("custom") => KernelKind::Custom,
        Some("linear") => KernelKind::Linear,
        Some("cosine") => KernelKind::Cosine,
        Some("rbf") => {
            let bw = header_value(header, "bandwidth").ok_or_else(|| bad("rbf kernel without bandwidth".into()))?;
            let bandwidth: f64 = bw.parse().map_err(|_| bad(format!("bad bandwidth {bw:?}")))?;
            KernelKind::Rbf { bandwidth }
        }
        Some(other) => return Err(bad(format!("unknown kernel kind {other:?}"))),
    })
}

/// CSV kernel: `n` rows of `n` values, with an optional header such as
/// `# kind=rbf bandwidth=0.5`.
pub fn parse_matrix_csv(src: &str) -> Result<LoadedMatrix> {
    let (header, lines) = text_lines(src);
    let kind = parse_kind_header(&header)?;
    let n = lines.len();
    let mut values = Vec::with_capacity(n * n);
    for &(ln, line) in &lines {
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != n {
            return Err(Error::parse(
                format!("line {ln}"),
                format!("expected {n} fields, found {}", toks.len()),
            ));
        }
        for (c, tok) in toks.iter().enumerate() {
            values.push(parse_f64(tok, ln, c + 1)?);
        }
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    finish_matrix(DMatrix::from_row_slice(n, n, &values), kind)
}

pub fn kernel_csv(k: &KernelMatrix) -> String {
    let mut s = match k.kind() {
        KernelKind::Linear => "# kind=linear\n".to_owned(),
        KernelKind::Rbf { bandwidth } => format!("# kind=rbf bandwidth={bandwidth}\n"),
        KernelKind::Cosine => "# kind=cosine\n".to_owned(),
        KernelKind::Custom => "# kind=custom\n".to_owned(),
    };
    let m = k.matrix().as_matrix();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(f64::to_string).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

// --------------------------------------------------------------------- masks

/// Mask text: a header `# n=<n> include_diagonal=<bool>` and one
/// `i j value` line per stored pair `i <= j`, sorted.
pub fn mask_text(mask: &ObservationMask) -> String {
    let mut s = format!("# n={} include_diagonal={}\n", mask.n(), mask.include_diagonal());
    for (i, j, v) in mask.entries() {
        let _ = writeln!(s, "{i} {j} {v}");
    }
    s
}

pub fn parse_mask(src: &str) -> Result<ObservationMask> {
    let (header, lines) = text_lines(src);
    let n: usize = header_value(&header, "n")
        .ok_or_else(|| Error::parse("line 1", "missing header n=<size>"))?
        .parse()
        .map_err(|_| Error::parse("line 1", "n is not a non-negative integer"))?;
    let include_diagonal = match header_value(&header, "include_diagonal") {
        Some("true") => true,
        Some("false") | None => false,
        Some(other) => {
            return Err(Error::parse(
                "line 1",
                format!("include_diagonal must be true or false, got {other:?}"),
            ))
        }
    };
    let mut entries = Vec::with_capacity(lines.len());
    for &(ln, line) in &lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(
                format!("line {ln}"),
                format!("expected \"i j value\", found {} fields", toks.len()),
            ));
        }
        let idx = |c: usize| -> Result<usize> {
            toks[c].parse().map_err(|_| {
                Error::parse(
                    format!("line {ln}, column {}", c + 1),
                    "index is not a non-negative integer",
                )
            })
        };
        entries.push((idx(0)?, idx(1)?, parse_f64(toks[2], ln, 3)?));
    }
    ObservationMask::new(n, entries, include_diagonal)
}

pub fn save_mask(path: &Path, mask: &ObservationMask) -> Result<()> {
    write(path, mask_text(mask).as_bytes())
}

pub fn load_mask(path: &Path) -> Result<ObservationMask> {
    parse_mask(&text(read(path)?, path)?)
}

// -------------------------------------------------------------------- labels

/// One non-negative integer per line.
pub fn parse_labels(src: &str) -> Result<Vec<usize>> {
    let (_, lines) = text_lines(src);
    lines
        .iter()
        .map(|&(ln, t)| {
            t.parse()
                .map_err(|_| Error::parse(format!("line {ln}"), format!("not a label: {t:?}")))
        })
        .collect()
}

pub fn labels_text(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels(&text(read(path)?, path)?)
}

pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write(path, labels_text(labels).as_bytes())
}

// ------------------------------------------------------------ game instances

/// JSON game instance. Matrices are arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GameInstance {
    /// Polytope ambiguity set given by its vertex states.
    Polytope { eps: f64, vertices: Vec<Vec<Vec<f64>>> },
    /// Linear constraints `Tr(A_j rho) = tau_j`.
    Gibbs {
        observables: Vec<Vec<Vec<f64>>>,
        targets: Vec<f64>,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<SymMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: bad.len(),
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let raw = DMatrix::from_row_slice(n, n, &flat);
    if max_asymmetry(&raw) > ASYMMETRY_WARN {
        return Err(Error::InvalidArgument(format!("{what} is not symmetric")));
    }
    SymMatrix::new(raw)
}

fn rows_of(m: &SymMatrix) -> Vec<Vec<f64>> {
    m.as_matrix().row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl GameInstance {
    pub fn polytope(gamma: &PolytopeAmbiguitySet) -> Self {
        GameInstance::Polytope {
            eps: gamma.eps().value(),
            vertices: gamma.vertices().iter().map(|v| rows_of(v.matrix())).collect(),
        }
    }

    pub fn gibbs(c: &ConstraintSet) -> Self {
        GameInstance::Gibbs {
            observables: c.observables().iter().map(rows_of).collect(),
            targets: c.targets().to_vec(),
        }
    }

    pub fn to_polytope(&self) -> Result<PolytopeAmbiguitySet> {
        let GameInstance::Polytope { eps, vertices } = self else {
            return Err(Error::InvalidArgument("instance is not a polytope game".into()));
        };
        let states = vertices
            .iter()
            .enumerate()
            .map(|(k, v)| DensityMatrix::new(matrix_from_rows(v, &format!("vertex {k}"))?))
            .collect::<Result<Vec<_>>>()?;
        let n = states.first().map_or(0, |s| s.dim());
        PolytopeAmbiguitySet::new(states, EpsilonFloor::new(*eps, n)?)
    }

    pub fn to_constraints(&self) -> Result<ConstraintSet> {
        let GameInstance::Gibbs { observables, targets } = self else {
            return Err(Error::InvalidArgument("instance is not a Gibbs game".into()));
        };
        let obs = observables
            .iter()
            .enumerate()
            .map(|(k, a)| matrix_from_rows(a, &format!("observable {k}")))
            .collect::<Result<Vec<_>>>()?;
        ConstraintSet::new(obs, targets.clone())
    }
}

pub fn parse_game(src: &str) -> Result<GameInstance> {
    serde_json::from_str(src)
        .map_err(|e| Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string()))
}

pub fn load_game(path: &Path) -> Result<GameInstance> {
    parse_game(&text(read(path)?, path)?)
}

pub fn save_game(path: &Path, game: &GameInstance) -> Result<()> {
    let mut s = serde_json::to_string_pretty(game).expect("instances serialize");
    s.push('\n');
    write(path, s.as_bytes())
}

// ------------------------------------------------------------------- reports

/// Versioned JSON report with sorted keys.
///
/// Every number must be finite; serde_json writes NaN as `null`, so a `null`
/// anywhere in a section is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: Map<String, Value>,
    pub metrics: Map<String, Value>,
    pub traces: Map<String, Value>,
    pub warnings: Vec<String>,
    pub timings: Option<Map<String, Value>>,
}

fn checked<T: Serialize>(key: &str, value: &T) -> Result<Value> {
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidArgument(format!("{key}: {e}")))?;
    if contains_null(&v) {
        return Err(Error::NonFinite(format!("report field {key}")));
    }
    Ok(v)
}

fn contains_null(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.iter().any(contains_null),
        Value::Object(o) => o.values().any(contains_null),
        _ => false,
    }
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            config: Map::new(),
            metrics: Map::new(),
            traces: Map::new(),
            warnings: Vec::new(),
            timings: None,
        }
    }

    /// Unset options (`None`) are left out of the echo.
    pub fn config<T: Serialize>(&mut self, key: &str, value: T) -> Result<&mut Self> {
        let v = serde_json::to_value(&value).map_err(|e| Error::InvalidArgument(format!("{key}: {e}")))?;
        if !v.is_null() {
            self.config.insert(key.to_owned(), checked(key, &v)?);
        }
        Ok(self)
    }

    pub fn metric<T: Serialize>(&mut self, key: &str, value: T) -> Result<&mut Self> {
        self.metrics.insert(key.to_owned(), checked(key, &value)?);
        Ok(self)
    }

    pub fn trace<T: Serialize>(&mut self, key: &str, value: T) -> Result<&mut Self> {
        self.traces.insert(key.to_owned(), checked(key, &value)?);
        Ok(self)
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("schema_version".into(), SCHEMA_VERSION.into());
        root.insert("status".into(), "ok".into());
        root.insert("command".into(), self.command.clone().into());
        root.insert("config".into(), Value::Object(self.config.clone()));
        root.insert("metrics".into(), Value::Object(self.metrics.clone()));
        root.insert("traces".into(), Value::Object(self.traces.clone()));
        root.insert("warnings".into(), self.warnings.clone().into());
        if let Some(t) = &self.timings {
            root.insert("timings".into(), Value::Object(t.clone()));
        }
        Value::Object(root)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Machine-readable error record.
pub fn error_record(command: Option<&str>, kind: &str, message: &str) -> String {
    let v = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "status": "error",
        "command": command,
        "error": { "kind": kind, "message": message },
    });
    let mut s = serde_json::to_string_pretty(&v).expect("records serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_csv() {
        let e = parse_embeddings_csv("1,0\n0,1").unwrap();
        assert_eq!(e.rows(), &DMatrix::identity(2, 2));
        assert!(e.labels().is_none());
    }

    #[test]
    fn csv_labels_column() {
        let e = parse_embeddings_csv("# labels\n0.5,1,2\n1.5,-1,0\n").unwrap();
        assert_eq!(e.d(), 2);
        assert_eq!(e.labels(), Some(&[2u32, 0][..]));
    }

    #[test]
    fn csv_errors_have_locations() {
        let err = parse_embeddings_csv("1,2\n3,x\n").unwrap_err();
        assert_eq!(err.kind(), "ParseError");
        assert!(err.to_string().contains("line 2, column 2"), "{err}");
        assert!(matches!(parse_embeddings_csv("1,nan\n"), Err(Error::NonFinite(_))));
        assert!(parse_embeddings_csv("1,2\n3\n")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
    }

    #[test]
    fn binary_rejects_corruption() {
        let e = parse_embeddings_csv("1,2\n3,4\n").unwrap();
        let bytes = encode_embeddings(&e);
        assert!(matches!(
            decode_embeddings(&bytes[..bytes.len() - 1]),
            Err(Error::Parse { .. })
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_embeddings(&extra), Err(Error::Parse { .. })));
        let mut version = bytes.clone();
        version[4] = 9;
        assert!(decode_embeddings(&version).unwrap_err().to_string().contains("version"));
        let mut nan = bytes;
        nan[21..29].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_embeddings(&nan), Err(Error::NonFinite(_))));
    }

    #[test]
    fn kernel_header_and_asymmetry() {
        let m = parse_matrix_csv("# kind=rbf bandwidth=0.25\n1,0.5\n0.5,1\n").unwrap();
        assert_eq!(m.kind, KernelKind::Rbf { bandwidth: 0.25 });
        assert_eq!(m.max_asymmetry, 0.0);
        assert!(m.warning().is_none());
        let skew = parse_matrix_csv("1,0.5\n0.4,1\n").unwrap();
        assert!((skew.max_asymmetry - 0.1).abs() < 1e-15);
        assert!(skew.warning().is_some());
        assert_eq!(skew.matrix.get(0, 1), 0.45);
        assert!(parse_matrix_csv("1,0\n0\n").is_err());
    }

    #[test]
    fn mask_text_format() {
        let m = ObservationMask::new(3, vec![(2, 0, 0.5), (0, 1, -0.25)], true).unwrap();
        let s = mask_text(&m);
        assert_eq!(
            s,
            "# n=3 include_diagonal=true\n0 0 1\n0 1 -0.25\n0 2 0.5\n1 1 1\n2 2 1\n"
        );
        assert_eq!(parse_mask(&s).unwrap(), m);
        let dup = parse_mask("# n=3\n0 1 0.5\n1 0 0.5\n").unwrap_err();
        assert_eq!(dup, Error::DuplicatePair(0, 1));
        assert_eq!(parse_mask("# n=2\n0 2 0.5\n").unwrap_err(), Error::OutOfRange(0, 2));
    }

    #[test]
    fn labels_format() {
        assert_eq!(parse_labels("0\n2\n\n1\n").unwrap(), vec![0, 2, 1]);
        assert!(parse_labels("0\n-1\n").is_err());
    }

    #[test]
    fn report_rejects_non_finite() {
        let mut r = Report::new("x");
        assert!(matches!(r.metric("bad", f64::NAN), Err(Error::NonFinite(_))));
        assert!(matches!(
            r.trace("bad", vec![1.0, f64::INFINITY]),
            Err(Error::NonFinite(_))
        ));
        r.metric("vne", 1.5).unwrap();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["metrics"]["vne"], 1.5);
    }
}
