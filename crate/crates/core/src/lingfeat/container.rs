//! Binary containers.
//!
//! `LFM1` (one record per sentence, records concatenated):
//! magic, `u32` rows, `u32` cols, `u32` planes (= 2), `u32` POS radix, then
//! the POS plane and the dependency plane as row-major `u32`.
//!
//! `SIM1`: magic, `u32` rows, `u32` cols, then row-major `f32` scores.
//!
//! All integers and floats are little-endian.

use std::io::{self, Read, Write};

use super::{FeatureMatrix, SimilarityMatrix};
use crate::binio::{len_u32, read_f32, read_magic, read_u32, write_f32, write_magic, write_u32};

pub const FEATURE_MAGIC: &[u8; 4] = b"LFM1";
pub const SIMILARITY_MAGIC: &[u8; 4] = b"SIM1";

pub fn write_feature_matrices<W: Write>(w: &mut W, matrices: &[FeatureMatrix]) -> io::Result<()> {
    for f in matrices {
        write_magic(w, FEATURE_MAGIC)?;
        let l = len_u32(f.len())?;
        write_u32(w, l)?;
        write_u32(w, l)?;
        write_u32(w, 2)?;
        write_u32(w, f.pos_radix())?;
        for &v in f.pos_plane().iter().chain(f.dep_plane()) {
            write_u32(w, v)?;
        }
    }
    Ok(())
}

pub fn read_feature_matrices<R: Read>(r: &mut R) -> io::Result<Vec<FeatureMatrix>> {
    let mut out = Vec::new();
    while read_magic(r, FEATURE_MAGIC)? {
        let rows = read_u32(r)? as usize;
        let cols = read_u32(r)? as usize;
        let planes = read_u32(r)?;
        if rows != cols || planes != 2 {
            return Err(invalid(format!("unexpected LFM1 shape {rows}x{cols}x{planes}")));
        }
        let radix = read_u32(r)?;
        let mut read_plane = || (0..rows * cols).map(|_| read_u32(r)).collect::<io::Result<Vec<u32>>>();
        let pos = read_plane()?;
        let dep = read_plane()?;
        let f = FeatureMatrix::from_planes(rows, radix, pos, dep).ok_or_else(|| invalid("bad LFM1 record".into()))?;
        out.push(f);
    }
    Ok(out)
}

pub fn write_similarity_matrix<W: Write>(w: &mut W, m: &SimilarityMatrix) -> io::Result<()> {
    write_magic(w, SIMILARITY_MAGIC)?;
    let n = len_u32(m.n())?;
    write_u32(w, n)?;
    write_u32(w, n)?;
    for &v in m.scores() {
        write_f32(w, v as f32)?;
    }
    Ok(())
}

pub fn read_similarity_matrix<R: Read>(r: &mut R) -> io::Result<SimilarityMatrix> {
    if !read_magic(r, SIMILARITY_MAGIC)? {
        return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "empty SIM1 file"));
    }
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    if rows != cols {
        return Err(invalid(format!("SIM1 matrix must be square, got {rows}x{cols}")));
    }
    let scores = (0..rows * cols)
        .map(|_| read_f32(r).map(f64::from))
        .collect::<io::Result<Vec<f64>>>()?;
    SimilarityMatrix::new(rows, scores).ok_or_else(|| invalid("bad SIM1 payload".into()))
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}
