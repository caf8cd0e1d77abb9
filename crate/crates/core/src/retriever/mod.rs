//! Exact nearest-neighbour search over sentence vectors.
//!
//! The index is a flat brute-force scan. Euclidean results are ordered by
//! ascending distance, cosine results by descending similarity, and equal
//! scores fall back to lexicographic id order so every query is
//! reproducible.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio::{len_u32, read_f64, read_magic, read_str, read_u32, read_u8, write_f64, write_magic, write_str, write_u32, write_u8};
use crate::gat::SentenceRep;

pub const INDEX_MAGIC: &[u8; 4] = b"IDX1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("index needs at least one vector")]
    Empty,
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("vector {id} has dimension {found}, expected {expected}")]
    Dimension { id: String, expected: usize, found: usize },
    #[error("vector {0} has non-finite values")]
    NonFinite(String),
    #[error("k = {k} but only {available} candidates are available")]
    KTooLarge { k: usize, available: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("unknown metric {0}")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    fn code(self) -> u8 {
        match self {
            Metric::Euclidean => 0,
            Metric::Cosine => 1,
        }
    }

    fn from_code(b: u8) -> Option<Self> {
        match b {
            0 => Some(Metric::Euclidean),
            1 => Some(Metric::Cosine),
            _ => None,
        }
    }

    /// Distance or similarity between two equal-length vectors.
    pub fn score(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    0.0
                } else {
                    dot / (na * nb)
                }
            }
        }
    }

    /// Orders scores best-first.
    pub fn compare(self, a: f64, b: f64) -> Ordering {
        match self {
            Metric::Euclidean => a.total_cmp(&b),
            Metric::Cosine => b.total_cmp(&a),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            _ => Err(IndexError::UnknownMetric(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    metric: Metric,
}

pub fn build_index(reps: &[SentenceRep], metric: Metric) -> Result<VectorIndex, IndexError> {
    let dim = reps.first().ok_or(IndexError::Empty)?.e_lig.len();
    let mut seen = HashSet::with_capacity(reps.len());
    let mut ids = Vec::with_capacity(reps.len());
    let mut data = Vec::with_capacity(reps.len() * dim);
    for r in reps {
        if !seen.insert(r.sentence_id.as_str()) {
            return Err(IndexError::DuplicateId(r.sentence_id.clone()));
        }
        if r.e_lig.len() != dim {
            return Err(IndexError::Dimension {
                id: r.sentence_id.clone(),
                expected: dim,
                found: r.e_lig.len(),
            });
        }
        if !r.e_lig.iter().all(|v| v.is_finite()) {
            return Err(IndexError::NonFinite(r.sentence_id.clone()));
        }
        ids.push(r.sentence_id.clone());
        data.extend_from_slice(&r.e_lig);
    }
    Ok(VectorIndex { ids, dim, data, metric })
}

impl VectorIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|x| x == id).map(|i| self.row(i))
    }

    /// Exact top-`k` for `query`, skipping `exclude` when it is stored.
    pub fn nearest(&self, query: &[f64], k: usize, exclude: Option<&str>) -> Result<Vec<Neighbor>, IndexError> {
        if query.len() != self.dim {
            return Err(IndexError::Dimension {
                id: "query".into(),
                expected: self.dim,
                found: query.len(),
            });
        }
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        let excluded = exclude.map_or(0, |x| self.ids.iter().filter(|id| *id == x).count());
        let available = self.len() - excluded;
        if k > available {
            return Err(IndexError::KTooLarge { k, available });
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .into_par_iter()
            .filter(|&i| exclude != Some(self.ids[i].as_str()))
            .map(|i| (self.metric.score(query, self.row(i)), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| {
            self.metric.compare(a.0, b.0).then_with(|| self.ids[a.1].cmp(&self.ids[b.1]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        Ok(scored
            .into_iter()
            .map(|(score, i)| Neighbor {
                id: self.ids[i].clone(),
                score,
            })
            .collect())
    }

    /// Neighbours of a stored sentence, never including itself.
    pub fn nearest_to_id(&self, id: &str, k: usize) -> Result<Vec<Neighbor>, IndexError> {
        let q = self.vector(id).ok_or_else(|| IndexError::UnknownId(id.to_string()))?;
        self.nearest(q, k, Some(id))
    }
}

/// `IDX1`: magic, metric byte, `u32` count, `u32` dim, the ids as
/// length-prefixed strings, then row-major `f64` vectors.
pub fn write_index<W: Write>(w: &mut W, index: &VectorIndex) -> io::Result<()> {
    write_magic(w, INDEX_MAGIC)?;
    write_u8(w, index.metric.code())?;
    write_u32(w, len_u32(index.len())?)?;
    write_u32(w, len_u32(index.dim)?)?;
    for id in &index.ids {
        write_str(w, id)?;
    }
    for &v in &index.data {
        write_f64(w, v)?;
    }
    Ok(())
}

pub fn read_index<R: Read>(r: &mut R) -> io::Result<VectorIndex> {
    let invalid = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    if !read_magic(r, INDEX_MAGIC)? {
        return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "empty IDX1 file"));
    }
    let metric = Metric::from_code(read_u8(r)?).ok_or_else(|| invalid("unknown metric byte".into()))?;
    let n = read_u32(r)? as usize;
    let dim = read_u32(r)? as usize;
    let ids = (0..n).map(|_| read_str(r)).collect::<io::Result<Vec<_>>>()?;
    let data = (0..n * dim).map(|_| read_f64(r)).collect::<io::Result<Vec<_>>>()?;
    let reps: Vec<SentenceRep> = ids
        .into_iter()
        .zip(data.chunks(dim.max(1)))
        .map(|(id, v)| SentenceRep {
            sentence_id: id,
            e_lig: if dim == 0 { Vec::new() } else { v.to_vec() },
        })
        .collect();
    build_index(&reps, metric).map_err(|e| invalid(e.to_string()))
}
