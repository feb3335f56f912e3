//! Binary index file.
//!
//! All integers little-endian. Layout:
//!
//! ```text
//! "SQTF"                      magic
//! u16                         format version
//! u64                         total file length in bytes
//! u64                         hash seed
//! u64                         bin count B
//! u8 u8                       n-gram lo, hi
//! u8                          unit (0 article, 1 paragraph)
//! [u8; 32]                    analyzer config digest
//! u32 + bytes                 analyzer config (JSON)
//! u64                         row count R
//! u64                         non-zero count Z
//! f64 * B                     idf (0 for bins no document contains)
//! u64 * (R + 1)               row offsets
//! u32 * Z                     column (bin) indices
//! f64 * Z                     weights
//! (u32 + bytes) * R           document ids
//! [u8; 32]                    SHA-256 of everything above
//! ```

use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{IndexError, TfidfIndex, HASH_SEED, MAX_HASH_BITS, MIN_HASH_BITS};
use crate::corpus::{Analyzer, AnalyzerConfig, DocUnit};

pub const MAGIC: &[u8; 4] = b"SQTF";
pub const FORMAT_VERSION: u16 = 1;
const CHECKSUM_LEN: usize = 32;
/// Byte offset of the total-length field.
const LEN_OFFSET: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexWarning {
    /// The index was built with a different analyzer than the caller expects.
    AnalyzerMismatch { expected: [u8; 32], found: [u8; 32] },
}

impl std::fmt::Display for IndexWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IndexWarning::AnalyzerMismatch { expected, found } => write!(
                f,
                "analyzer mismatch: index built with {}, caller expects {}",
                hex8(found),
                hex8(expected)
            ),
        }
    }
}

fn hex8(d: &[u8; 32]) -> String {
    d[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn encode(index: &TfidfIndex) -> Vec<u8> {
    let cfg_json = serde_json::to_vec(index.analyzer_config()).expect("analyzer config serializes");
    let bins = index.hash_bins() as usize;
    let rows = index.len();
    let nnz = index.nnz();
    let mut out =
        Vec::with_capacity(96 + cfg_json.len() + bins * 8 + (rows + 1) * 8 + nnz * 12 + rows * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u64.to_le_bytes());
    out.extend_from_slice(&HASH_SEED.to_le_bytes());
    out.extend_from_slice(&(bins as u64).to_le_bytes());
    let range = index.ngram_range();
    out.push(range.lo as u8);
    out.push(range.hi as u8);
    out.push(index.unit.as_u8());
    out.extend_from_slice(&index.analyzer_config().digest());
    out.extend_from_slice(&(cfg_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg_json);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(nnz as u64).to_le_bytes());
    let mut dense = vec![0f64; bins];
    for (&b, &v) in index.vocab.iter().zip(&index.idf) {
        dense[b as usize] = v;
    }
    for v in dense {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &o in &index.row_offsets {
        out.extend_from_slice(&(o as u64).to_le_bytes());
    }
    for &c in &index.columns {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for &w in &index.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for id in &index.doc_ids {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
    }
    let total = (out.len() + CHECKSUM_LEN) as u64;
    out[LEN_OFFSET..LEN_OFFSET + 8].copy_from_slice(&total.to_le_bytes());
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn save_index(index: &TfidfIndex, path: impl AsRef<Path>) -> Result<(), IndexError> {
    let path = path.as_ref();
    std::fs::write(path, encode(index)).map_err(|source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).ok_or(IndexError::Truncated)?;
        if end > self.buf.len() {
            return Err(IndexError::Truncated);
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, IndexError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self, elem_size: usize) -> Result<usize, IndexError> {
        let n = usize::try_from(self.u64()?)
            .map_err(|_| IndexError::Corrupt("count overflow".into()))?;
        if n.checked_mul(elem_size)
            .is_none_or(|b| b > self.buf.len() - self.pos)
        {
            return Err(IndexError::Corrupt(format!("count {n} exceeds file size")));
        }
        Ok(n)
    }
}

fn decode(buf: &[u8]) -> Result<TfidfIndex, IndexError> {
    let mut r = Reader { buf, pos: 0 };
    if buf.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(buf) {
            IndexError::Truncated
        } else {
            IndexError::BadMagic
        });
    }
    if r.take(4)? != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let total = r.u64()?;
    match (buf.len() as u64).cmp(&total) {
        std::cmp::Ordering::Less => return Err(IndexError::Truncated),
        std::cmp::Ordering::Greater => {
            return Err(IndexError::Corrupt("trailing bytes after checksum".into()))
        }
        std::cmp::Ordering::Equal => {}
    }
    let body = buf
        .len()
        .checked_sub(CHECKSUM_LEN)
        .ok_or(IndexError::Truncated)?;
    if Sha256::digest(&buf[..body]).as_slice() != &buf[body..] {
        return Err(IndexError::ChecksumMismatch);
    }
    let mut r = Reader {
        buf: &buf[..body],
        pos: r.pos,
    };

    let seed = r.u64()?;
    if seed != HASH_SEED {
        return Err(IndexError::Corrupt(format!("unknown hash seed {seed:#x}")));
    }
    let bins = r.u64()?;
    let bits = bins.trailing_zeros();
    if !bins.is_power_of_two() || !(MIN_HASH_BITS..=MAX_HASH_BITS).contains(&bits) {
        return Err(IndexError::Corrupt(format!("bad bin count {bins}")));
    }
    let (lo, hi) = (r.u8()? as usize, r.u8()? as usize);
    let unit = DocUnit::from_u8(r.u8()?).ok_or_else(|| IndexError::Corrupt("bad unit".into()))?;
    let digest: [u8; 32] = r.take(32)?.try_into().unwrap();
    let cfg_len = r.u32()? as usize;
    let cfg: AnalyzerConfig = serde_json::from_slice(r.take(cfg_len)?)
        .map_err(|e| IndexError::Corrupt(format!("analyzer config: {e}")))?;
    if cfg.digest() != digest {
        return Err(IndexError::Corrupt(
            "analyzer digest does not match stored config".into(),
        ));
    }
    if (cfg.ngram_range.lo, cfg.ngram_range.hi) != (lo, hi) {
        return Err(IndexError::Corrupt(
            "n-gram range disagrees with analyzer config".into(),
        ));
    }
    let rows = r.count(8)?;
    let nnz = r.count(12)?;

    let mut vocab = Vec::new();
    let mut idf = Vec::new();
    for b in 0..bins as usize {
        let v = r.f64()?;
        if v != 0.0 {
            vocab.push(b as u32);
            idf.push(v);
        }
    }
    let mut row_offsets = Vec::with_capacity(rows + 1);
    for _ in 0..=rows {
        row_offsets.push(r.u64()? as usize);
    }
    if row_offsets[0] != 0
        || row_offsets[rows] != nnz
        || row_offsets.windows(2).any(|w| w[0] > w[1])
    {
        return Err(IndexError::Corrupt("row offsets".into()));
    }
    let mut columns = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let c = r.u32()?;
        if vocab.binary_search(&c).is_err() {
            return Err(IndexError::Corrupt(format!("column {c} has no idf")));
        }
        columns.push(c);
    }
    let mut weights = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        weights.push(r.f64()?);
    }
    let mut doc_ids = Vec::with_capacity(rows);
    for _ in 0..rows {
        let len = r.u32()? as usize;
        let id = std::str::from_utf8(r.take(len)?)
            .map_err(|_| IndexError::Corrupt("doc id not UTF-8".into()))?;
        doc_ids.push(id.to_string());
    }
    if r.pos != r.buf.len() {
        return Err(IndexError::Corrupt(
            "unexpected bytes before checksum".into(),
        ));
    }
    Ok(TfidfIndex::assemble(
        Arc::new(Analyzer::new(cfg)),
        bits,
        unit,
        doc_ids,
        row_offsets,
        columns,
        weights,
        vocab,
        idf,
    ))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<TfidfIndex, IndexError> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&buf)
}

/// Loads an index and compares its analyzer with `expected`, returning any
/// mismatch as a warning (also logged).
pub fn load_index_checked(
    path: impl AsRef<Path>,
    expected: Option<&AnalyzerConfig>,
) -> Result<(TfidfIndex, Vec<IndexWarning>), IndexError> {
    let index = load_index(path)?;
    let mut warnings = Vec::new();
    if let Some(exp) = expected {
        let (e, f) = (exp.digest(), index.analyzer_config().digest());
        if e != f {
            let w = IndexWarning::AnalyzerMismatch {
                expected: e,
                found: f,
            };
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    Ok((index, warnings))
}
