//! P6DF v1 wire format, little-endian throughout.
//!
//! ```text
//! magic "P6DF" | version u8 | column_count u32
//! per column: name_len u16 | name | dtype u8 | row_count u64 | has_nulls u8
//!             | [validity ⌈n/8⌉ bytes] | payload
//! payload: f64/i64 array, or dict_size u32 | (len u16 | utf8)* | u32 codes
//! ```

use super::{Bitmap, Column, ColumnData, DType, DataFrame, FrameError};

pub const MAGIC: [u8; 4] = *b"P6DF";
pub const FORMAT_VERSION: u8 = 1;

pub fn encode_binary(frame: &DataFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + frame.byte_size() + 16 * frame.n_columns());
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(frame.n_columns() as u32).to_le_bytes());
    for col in frame.columns() {
        let name = col.name().as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.push(col.dtype().code());
        out.extend_from_slice(&(col.len() as u64).to_le_bytes());
        match col.validity() {
            Some(mask) => {
                out.push(1);
                out.extend_from_slice(mask.as_bytes());
            }
            None => out.push(0),
        }
        match col.data() {
            ColumnData::Float64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ColumnData::Int64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ColumnData::Categorical { codes, dictionary } => {
                out.extend_from_slice(&(dictionary.len() as u32).to_le_bytes());
                for entry in dictionary {
                    out.extend_from_slice(&(entry.len() as u16).to_le_bytes());
                    out.extend_from_slice(entry.as_bytes());
                }
                codes.iter().for_each(|c| out.extend_from_slice(&c.to_le_bytes()));
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        let end = self.pos.checked_add(n).ok_or(FrameError::TruncatedPayload)?;
        let slice = self.buf.get(self.pos..end).ok_or(FrameError::TruncatedPayload)?;
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FrameError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FrameError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, FrameError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn string(&mut self, len: usize) -> Result<String, FrameError> {
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| FrameError::Corrupt("invalid UTF-8".into()))
    }

    /// Guards allocations against lengths that cannot fit in the remaining input.
    fn remaining_at_least(&self, n: u64) -> Result<usize, FrameError> {
        let left = (self.buf.len() - self.pos) as u64;
        if n > left {
            return Err(FrameError::TruncatedPayload);
        }
        Ok(n as usize)
    }
}

pub fn decode_binary(bytes: &[u8]) -> Result<DataFrame, FrameError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).map_err(|_| FrameError::BadMagic)? != MAGIC {
        return Err(FrameError::BadMagic);
    }
    let version = r.u8()?;
    if version == 0 || version > FORMAT_VERSION {
        return Err(FrameError::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    let mut columns = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = r.string(name_len)?;
        let dtype_code = r.u8()?;
        let dtype = DType::from_code(dtype_code)
            .ok_or_else(|| FrameError::Corrupt(format!("unknown dtype {dtype_code}")))?;
        let rows = r.u64()?;
        let validity = match r.u8()? {
            0 => None,
            1 => {
                let n = r.remaining_at_least(rows.div_ceil(8))?;
                Some(Bitmap::from_bytes(r.take(n)?.to_vec(), rows as usize).unwrap())
            }
            other => return Err(FrameError::Corrupt(format!("has_nulls flag {other}"))),
        };
        let data = match dtype {
            DType::Float64 => {
                let n = r.remaining_at_least(rows.saturating_mul(8))? / 8;
                let raw = r.take(n * 8)?;
                ColumnData::Float64(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
            }
            DType::Int64 => {
                let n = r.remaining_at_least(rows.saturating_mul(8))? / 8;
                let raw = r.take(n * 8)?;
                ColumnData::Int64(raw.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect())
            }
            DType::Categorical => {
                let dict_size = r.u32()? as u64;
                let mut dictionary = Vec::with_capacity(r.remaining_at_least(dict_size.saturating_mul(2))?);
                for _ in 0..dict_size {
                    let len = r.u16()? as usize;
                    dictionary.push(r.string(len)?);
                }
                let n = r.remaining_at_least(rows.saturating_mul(4))? / 4;
                let raw = r.take(n * 4)?;
                let codes = raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
                ColumnData::Categorical { codes, dictionary }
            }
        };
        let col = Column::new(name, data, validity).map_err(|e| FrameError::Corrupt(e.to_string()))?;
        columns.push(col);
    }
    if r.pos != bytes.len() {
        return Err(FrameError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    DataFrame::new(columns).map_err(|e| FrameError::Corrupt(e.to_string()))
}
