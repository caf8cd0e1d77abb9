use serde::{Deserialize, Serialize};

use super::{FeatureError, Inventory};
use crate::corpus::ParsedSentence;

/// Per-sentence `l × l × 2` feature matrix, stored row-major with 0-based
/// cell indices.
///
/// `pos_plane[i][j] = code(pos_i) * pos_radix + code(pos_j)`, so a cell names
/// the ordered tag pair. `dep_plane[i][j]` is `1 + code(rel)` for the arc
/// between `i` and `j` in either direction and `0` where there is none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    len: usize,
    pos_radix: u32,
    pos_plane: Vec<u32>,
    dep_plane: Vec<u32>,
}

impl FeatureMatrix {
    pub fn from_planes(len: usize, pos_radix: u32, pos_plane: Vec<u32>, dep_plane: Vec<u32>) -> Option<Self> {
        if pos_plane.len() != len * len || dep_plane.len() != len * len || pos_radix == 0 {
            return None;
        }
        Some(Self {
            len,
            pos_radix,
            pos_plane,
            dep_plane,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pos_radix(&self) -> u32 {
        self.pos_radix
    }

    pub fn pos(&self, i: usize, j: usize) -> u32 {
        self.pos_plane[i * self.len + j]
    }

    pub fn dep(&self, i: usize, j: usize) -> u32 {
        self.dep_plane[i * self.len + j]
    }

    pub fn pos_row(&self, i: usize) -> &[u32] {
        &self.pos_plane[i * self.len..(i + 1) * self.len]
    }

    pub fn dep_row(&self, i: usize) -> &[u32] {
        &self.dep_plane[i * self.len..(i + 1) * self.len]
    }

    pub fn pos_plane(&self) -> &[u32] {
        &self.pos_plane
    }

    pub fn dep_plane(&self) -> &[u32] {
        &self.dep_plane
    }

    /// Splits a POS-pair cell back into the two tag codes.
    pub fn decode_pos(&self, cell: u32) -> (u32, u32) {
        (cell / self.pos_radix, cell % self.pos_radix)
    }

    pub fn pos_rows(&self) -> Vec<Vec<u32>> {
        (0..self.len).map(|i| self.pos_row(i).to_vec()).collect()
    }

    pub fn dep_rows(&self) -> Vec<Vec<u32>> {
        (0..self.len).map(|i| self.dep_row(i).to_vec()).collect()
    }
}

/// 1-based positions of the tokens with maximal dependency degree, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CentralWords(pub Vec<usize>);

impl CentralWords {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn build_feature_matrix(
    s: &ParsedSentence,
    pos_inventory: &Inventory,
    rel_inventory: &Inventory,
) -> Result<FeatureMatrix, FeatureError> {
    let len = s.len();
    let radix = pos_inventory.len() as u32;
    let mut pos_codes = Vec::with_capacity(len);
    for t in &s.tokens {
        let code = pos_inventory
            .code(&t.pos_tag)
            .ok_or_else(|| FeatureError::UnregisteredTag {
                sentence: s.id.clone(),
                index: t.index,
                surface: t.surface.clone(),
                tag: t.pos_tag.clone(),
            })?;
        pos_codes.push(code);
    }

    let mut pos_plane = Vec::with_capacity(len * len);
    for &ci in &pos_codes {
        pos_plane.extend(pos_codes.iter().map(|&cj| ci * radix + cj));
    }

    let mut dep_plane = vec![0u32; len * len];
    for t in &s.tokens {
        let rel = rel_inventory
            .code(&t.dep_relation)
            .ok_or_else(|| FeatureError::UnregisteredRelation {
                sentence: s.id.clone(),
                index: t.index,
                surface: t.surface.clone(),
                relation: t.dep_relation.clone(),
            })?;
        if t.head_index == 0 {
            continue;
        }
        let (i, j) = (t.index - 1, t.head_index - 1);
        dep_plane[i * len + j] = rel + 1;
        dep_plane[j * len + i] = rel + 1;
    }

    Ok(FeatureMatrix {
        len,
        pos_radix: radix.max(1),
        pos_plane,
        dep_plane,
    })
}

/// Tokens incident to the most dependency arcs (root pseudo-arc excluded).
pub fn central_words(s: &ParsedSentence) -> CentralWords {
    let mut degree = vec![0usize; s.len()];
    for t in &s.tokens {
        if t.head_index != 0 {
            degree[t.index - 1] += 1;
            degree[t.head_index - 1] += 1;
        }
    }
    let max = degree.iter().copied().max().unwrap_or(0);
    CentralWords(
        degree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == max)
            .map(|(i, _)| i + 1)
            .collect(),
    )
}

/// A sentence's feature matrix together with its central words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceProfile {
    pub id: String,
    pub features: FeatureMatrix,
    pub central: CentralWords,
}

impl SentenceProfile {
    pub fn build(s: &ParsedSentence, pos: &Inventory, rel: &Inventory) -> Result<Self, FeatureError> {
        if s.is_empty() {
            return Err(FeatureError::EmptySentence(s.id.clone()));
        }
        Ok(Self {
            id: s.id.clone(),
            features: build_feature_matrix(s, pos, rel)?,
            central: central_words(s),
        })
    }
}
