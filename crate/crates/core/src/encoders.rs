//! Baseline sentence encoders and embedding ingestion.
//!
//! The built-in encoder is a plain bag of words: raw, unweighted token counts
//! over a first-occurrence vocabulary, no exclusions. Embeddings computed by
//! external models are ingested from files: CSV with an `id,e0,e1,...` header
//! or JSON lines of `{"id": ..., "vec": [...]}`, detected by content.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("empty embedding file")]
    EmptyFile,
    #[error("line {line}: expected {expected} values, got {got}")]
    Shape {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("non-finite value for id {id:?}")]
    NonFinite { id: String },
    #[error("header must start with an `id` column, got {0:?}")]
    BadHeader(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Token vocabulary with dense indices in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }
}

/// Build a vocabulary over every distinct token of the corpus, in order of
/// first occurrence. No tokens are excluded.
pub fn build_vocab<T: AsRef<str>>(sentences: &[Vec<T>]) -> Vocab {
    let mut tokens = Vec::new();
    let mut index = HashMap::new();
    for sentence in sentences {
        for token in sentence {
            let token = token.as_ref();
            if !index.contains_key(token) {
                index.insert(token.to_string(), tokens.len());
                tokens.push(token.to_string());
            }
        }
    }
    Vocab { tokens, index }
}

/// Whitespace tokenization of raw text, lowercased unless disabled.
/// Pre-tokenized input should skip this and go straight to [`bow_encode`].
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let owned;
    let source = if lowercase {
        owned = text.to_lowercase();
        &owned
    } else {
        text
    };
    source.split_whitespace().map(str::to_string).collect()
}

/// Raw token counts over the vocabulary. Tokens absent from the vocabulary
/// are skipped; count them separately with [`count_oov`] when applying a
/// training-corpus vocabulary to new text.
pub fn bow_encode<S: Scalar, T: AsRef<str>>(sentence: &[T], vocab: &Vocab) -> Vec<S> {
    let mut counts = vec![S::zero(); vocab.len()];
    for token in sentence {
        if let Some(i) = vocab.index_of(token.as_ref()) {
            counts[i] = counts[i] + S::one();
        }
    }
    counts
}

/// Number of tokens in `sentence` that the vocabulary does not cover.
pub fn count_oov<T: AsRef<str>>(sentence: &[T], vocab: &Vocab) -> usize {
    sentence
        .iter()
        .filter(|t| vocab.index_of(t.as_ref()).is_none())
        .count()
}

/// Embeddings for a list of items: ids in file order and an `n x dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<S> {
    ids: Vec<String>,
    rows: Array2<S>,
}

impl<S: Scalar> EmbeddingTable<S> {
    pub fn new(ids: Vec<String>, rows: Array2<S>) -> Self {
        debug_assert_eq!(ids.len(), rows.nrows());
        EmbeddingTable { ids, rows }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn rows(&self) -> &Array2<S> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.rows.row(i).to_vec()
    }
}

/// Load an embedding table, accepting either the CSV or the JSON-lines form.
/// The format is detected from the first non-whitespace byte.
pub fn load_embeddings<S: Scalar>(path: impl AsRef<Path>) -> Result<EmbeddingTable<S>, EncoderError> {
    let text = fs::read_to_string(path)?;
    parse_embeddings(&text)
}

/// Parse embeddings from text; see [`load_embeddings`].
pub fn parse_embeddings<S: Scalar>(text: &str) -> Result<EmbeddingTable<S>, EncoderError> {
    match text.trim_start().chars().next() {
        None => Err(EncoderError::EmptyFile),
        Some('{') => parse_embeddings_jsonl(text),
        Some(_) => parse_embeddings_csv(text),
    }
}

fn finish_table<S: Scalar>(
    ids: Vec<String>,
    data: Vec<S>,
    dim: usize,
) -> Result<EmbeddingTable<S>, EncoderError> {
    if ids.is_empty() {
        return Err(EncoderError::EmptyFile);
    }
    for (i, id) in ids.iter().enumerate() {
        if data[i * dim..(i + 1) * dim].iter().any(|v| !v.is_finite()) {
            return Err(EncoderError::NonFinite { id: id.clone() });
        }
    }
    let rows = Array2::from_shape_vec((ids.len(), dim), data).expect("consistent row shapes");
    Ok(EmbeddingTable::new(ids, rows))
}

fn check_duplicate(
    seen: &mut HashMap<String, usize>,
    id: &str,
    line: usize,
) -> Result<(), EncoderError> {
    if seen.insert(id.to_string(), line).is_some() {
        return Err(EncoderError::DuplicateId {
            id: id.to_string(),
            line,
        });
    }
    Ok(())
}

fn parse_embeddings_csv<S: Scalar>(text: &str) -> Result<EmbeddingTable<S>, EncoderError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(EncoderError::EmptyFile)?;
    let mut columns = header.split(',');
    match columns.next() {
        Some("id") => {}
        other => return Err(EncoderError::BadHeader(other.unwrap_or("").to_string())),
    }
    let dim = columns.count();
    if dim == 0 {
        return Err(EncoderError::BadHeader(header.to_string()));
    }

    let mut ids = Vec::new();
    let mut data: Vec<S> = Vec::new();
    let mut seen = HashMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or("").to_string();
        let mut count = 0usize;
        for field in fields {
            count += 1;
            if count > dim {
                break;
            }
            let value: f64 = field.trim().parse().map_err(|_| EncoderError::Parse {
                line: line_no,
                message: format!("non-numeric cell {field:?}"),
            })?;
            data.push(S::from_f64(value).expect("f64 converts to the scalar type"));
        }
        if count != dim {
            return Err(EncoderError::Shape {
                line: line_no,
                expected: dim,
                got: count,
            });
        }
        check_duplicate(&mut seen, &id, line_no)?;
        ids.push(id);
    }
    finish_table(ids, data, dim)
}

#[derive(Deserialize)]
struct JsonlRow {
    id: String,
    vec: Vec<f64>,
}

fn parse_embeddings_jsonl<S: Scalar>(text: &str) -> Result<EmbeddingTable<S>, EncoderError> {
    let mut ids = Vec::new();
    let mut data: Vec<S> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut seen = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(line).map_err(|e| EncoderError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let expected = *dim.get_or_insert(row.vec.len());
        if row.vec.len() != expected {
            return Err(EncoderError::Shape {
                line: line_no,
                expected,
                got: row.vec.len(),
            });
        }
        check_duplicate(&mut seen, &row.id, line_no)?;
        ids.push(row.id);
        data.extend(
            row.vec
                .iter()
                .map(|&v| S::from_f64(v).expect("f64 converts to the scalar type")),
        );
    }
    finish_table(ids, data, dim.unwrap_or(0))
}

/// Write the CSV form with full-precision values; [`load_embeddings`] is its
/// exact inverse.
pub fn write_embeddings_csv<S: Scalar, W: Write>(
    mut w: W,
    table: &EmbeddingTable<S>,
) -> Result<(), EncoderError> {
    write!(w, "id")?;
    for j in 0..table.dim() {
        write!(w, ",e{j}")?;
    }
    writeln!(w)?;
    for (i, id) in table.ids().iter().enumerate() {
        write!(w, "{id}")?;
        for v in table.rows.row(i).iter() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
