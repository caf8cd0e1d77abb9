//! Token embedding input, sentence vector output and the hash-seeded
//! fallback embedder used by tests and the bundled demo.

use std::io::{self, Read, Write};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EncoderError;
use crate::binio::{len_u32, read_f32, read_magic, read_str, read_u32, write_f32, write_magic, write_str, write_u32};
use crate::corpus::ParsedSentence;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";

/// Token vectors of one sentence, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    pub sentence_id: String,
    pub vectors: Array2<f64>,
}

impl TokenEmbeddings {
    pub fn new(sentence_id: impl Into<String>, vectors: Array2<f64>) -> Result<Self, EncoderError> {
        let sentence_id = sentence_id.into();
        if vectors.nrows() == 0 {
            return Err(EncoderError::EmptySentence(sentence_id));
        }
        if !vectors.iter().all(|v| v.is_finite()) {
            return Err(EncoderError::NonFiniteInput(sentence_id));
        }
        Ok(Self { sentence_id, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Checks that the corpus is nonempty and dimension-consistent; returns `d`.
pub fn validate_corpus(corpus: &[TokenEmbeddings]) -> Result<usize, EncoderError> {
    let first = corpus.first().ok_or(EncoderError::EmptyCorpus)?;
    let d = first.dim();
    for e in corpus {
        if e.dim() != d {
            return Err(EncoderError::Shape(format!("sentence {} has width {}, expected {d}", e.sentence_id, e.dim())));
        }
        if e.is_empty() {
            return Err(EncoderError::EmptySentence(e.sentence_id.clone()));
        }
    }
    Ok(d)
}

/// Linguistic sentence vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRep {
    #[serde(rename = "id")]
    pub sentence_id: String,
    #[serde(rename = "vector")]
    pub e_lig: Vec<f64>,
}

/// Deterministic stand-in for a pretrained encoder: every surface form maps
/// to a unit vector drawn from a ChaCha stream seeded by
/// `sha256(seed ‖ surface)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    pub fn embed_token(&self, surface: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(surface.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    pub fn embed_tokens<'a>(&self, id: &str, surfaces: impl IntoIterator<Item = &'a str>) -> Result<TokenEmbeddings, EncoderError> {
        let rows: Vec<Vec<f64>> = surfaces.into_iter().map(|s| self.embed_token(s)).collect();
        let n = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let vectors = Array2::from_shape_vec((n, self.dim), flat).map_err(|e| EncoderError::Shape(e.to_string()))?;
        TokenEmbeddings::new(id, vectors)
    }

    pub fn embed_sentence(&self, s: &ParsedSentence) -> Result<TokenEmbeddings, EncoderError> {
        self.embed_tokens(&s.id, s.surfaces())
    }
}

#[derive(Serialize, Deserialize)]
struct EmbeddingLine {
    id: String,
    vectors: Vec<Vec<f64>>,
}

/// JSON lines of `{"id": ..., "vectors": [[...], ...]}`.
pub fn read_embeddings_jsonl(text: &str) -> Result<Vec<TokenEmbeddings>, crate::Error> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: EmbeddingLine = serde_json::from_str(line).map_err(|source| crate::Error::Json {
            context: format!("embedding line {}", i + 1),
            source,
        })?;
        let n = parsed.vectors.len();
        let d = parsed.vectors.first().map_or(0, Vec::len);
        if parsed.vectors.iter().any(|r| r.len() != d) {
            return Err(EncoderError::Shape(format!("embedding line {}: ragged rows", i + 1)).into());
        }
        let vectors = Array2::from_shape_vec((n, d), parsed.vectors.into_iter().flatten().collect())
            .map_err(|e| EncoderError::Shape(e.to_string()))?;
        out.push(TokenEmbeddings::new(parsed.id, vectors)?);
    }
    Ok(out)
}

pub fn write_embeddings_jsonl(corpus: &[TokenEmbeddings]) -> String {
    let mut out = String::new();
    for e in corpus {
        let line = EmbeddingLine {
            id: e.sentence_id.clone(),
            vectors: e.vectors.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    out
}

/// `EMB1`: magic, `u32` count, then per sentence a length-prefixed id,
/// `u32` rows, `u32` cols and row-major `f32` values.
pub fn write_embeddings_bin<W: Write>(w: &mut W, corpus: &[TokenEmbeddings]) -> io::Result<()> {
    write_magic(w, EMBEDDING_MAGIC)?;
    write_u32(w, len_u32(corpus.len())?)?;
    for e in corpus {
        write_str(w, &e.sentence_id)?;
        write_u32(w, len_u32(e.len())?)?;
        write_u32(w, len_u32(e.dim())?)?;
        for &v in e.vectors.iter() {
            write_f32(w, v as f32)?;
        }
    }
    Ok(())
}

pub fn read_embeddings_bin<R: Read>(r: &mut R) -> io::Result<Vec<TokenEmbeddings>> {
    if !read_magic(r, EMBEDDING_MAGIC)? {
        return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "empty EMB1 file"));
    }
    let count = read_u32(r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let id = read_str(r)?;
        let n = read_u32(r)? as usize;
        let d = read_u32(r)? as usize;
        let flat = (0..n * d).map(|_| read_f32(r).map(f64::from)).collect::<io::Result<Vec<f64>>>()?;
        let vectors = Array2::from_shape_vec((n, d), flat).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        out.push(TokenEmbeddings::new(id, vectors).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?);
    }
    Ok(out)
}

/// JSON lines of `{"id": ..., "vector": [...]}`.
pub fn write_reps_jsonl(reps: &[SentenceRep]) -> String {
    let mut out = String::new();
    for r in reps {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn read_reps_jsonl(text: &str) -> Result<Vec<SentenceRep>, crate::Error> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| crate::Error::Json {
                context: format!("representation line {}", i + 1),
                source,
            })
        })
        .collect()
}
