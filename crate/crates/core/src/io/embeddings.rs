//! `CEMB` binary embeddings format (little-endian).
//!
//! ```text
//! magic   "CEMB"         4 bytes
//! version u32 = 1
//! dim     u32
//! count   u64
//! count × [ id_len u16 | id bytes (UTF-8) | dim × f32 ]
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::bytes::Cursor;
use crate::error::{Error, Result};
use crate::model::EmbeddingMatrix;

pub const MAGIC: &[u8; 4] = b"CEMB";
pub const VERSION: u32 = 1;
const HEADER_SIZE: usize = 4 + 4 + 4 + 8;

fn decode(data: &[u8]) -> Result<EmbeddingMatrix> {
    if data.len() < MAGIC.len() || &data[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected \"CEMB\"".into()));
    }
    let mut cur = Cursor::new(data, 4);
    let version = cur.u32("header")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = cur.u32("header")? as usize;
    if dim == 0 {
        return Err(Error::Format("dim must be positive".into()));
    }
    let count = cur.u64("header")?;
    let mut matrix = EmbeddingMatrix::new(dim)?;
    for i in 0..count {
        let start = cur.pos() as u64;
        let what = format!("record {i}");
        let id_len = cur.u16(&what)? as usize;
        let id = std::str::from_utf8(cur.take(id_len, &what)?).map_err(|_| Error::Corruption {
            offset: start + 2,
            message: format!("record {i}: id is not valid UTF-8"),
        })?;
        let values_at = cur.pos() as u64;
        let vector: Vec<f32> = cur
            .take(dim * 4, &what)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Corruption { offset: values_at, message: format!("record {i}: non-finite value") });
        }
        if matrix.contains(id) {
            return Err(Error::Format(format!("duplicate id `{id}` in record {i}")));
        }
        matrix.insert(id, vector)?;
    }
    if cur.remaining() != 0 {
        return Err(Error::Corruption {
            offset: cur.pos() as u64,
            message: format!("{} trailing bytes after {count} records", cur.remaining()),
        });
    }
    Ok(matrix)
}

pub fn read_embeddings_from<R: Read>(mut reader: R) -> Result<EmbeddingMatrix> {
    let mut data = Vec::new();
    reader.read_to_end(&mut data)?;
    decode(&data)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    read_embeddings_from(File::open(path)?)
}

pub fn write_embeddings_to<W: Write>(matrix: &EmbeddingMatrix, mut writer: W) -> Result<()> {
    let dim = u32::try_from(matrix.dim()).map_err(|_| Error::invalid("dim exceeds u32"))?;
    let mut header = Vec::with_capacity(HEADER_SIZE);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&dim.to_le_bytes());
    header.extend_from_slice(&(matrix.len() as u64).to_le_bytes());
    writer.write_all(&header)?;
    for (id, vector) in matrix.iter() {
        let id_len = u16::try_from(id.len()).map_err(|_| Error::invalid(format!("id `{id}` longer than 65535 bytes")))?;
        writer.write_all(&id_len.to_le_bytes())?;
        writer.write_all(id.as_bytes())?;
        for v in vector {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_embeddings_to(matrix, BufWriter::new(File::create(path)?))
}
