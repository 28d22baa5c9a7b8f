/// Validity bitset, LSB-first within each byte; a set bit marks a present value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    bytes: Vec<u8>,
    len: usize,
}

impl Bitmap {
    pub fn all_set(len: usize) -> Self {
        let mut bytes = vec![0xFF; len.div_ceil(8)];
        if !len.is_multiple_of(8) {
            if let Some(last) = bytes.last_mut() {
                *last = (1u8 << (len % 8)) - 1;
            }
        }
        Self { bytes, len }
    }

    pub fn from_bools(present: &[bool]) -> Self {
        let mut bytes = vec![0u8; present.len().div_ceil(8)];
        for (i, &p) in present.iter().enumerate() {
            if p {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        Self {
            bytes,
            len: present.len(),
        }
    }

    /// Takes raw bytes as found on the wire. Padding bits past `len` are kept so
    /// that re-encoding reproduces the input exactly.
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Option<Self> {
        (bytes.len() == len.div_ceil(8)).then_some(Self { bytes, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bytes[i / 8] & (1 << (i % 8)) != 0
    }

    pub fn set(&mut self, i: usize, present: bool) {
        if present {
            self.bytes[i / 8] |= 1 << (i % 8);
        } else {
            self.bytes[i / 8] &= !(1 << (i % 8));
        }
    }

    pub fn count_set(&self) -> usize {
        (0..self.len).filter(|&i| self.get(i)).count()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self {
            bytes: vec![0; indices.len().div_ceil(8)],
            len: indices.len(),
        };
        for (k, &i) in indices.iter().enumerate() {
            if self.get(i) {
                out.set(k, true);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lsb_first_layout() {
        let b = Bitmap::from_bools(&[true, false, false, true, false, false, false, false, true]);
        assert_eq!(b.as_bytes(), &[0b0000_1001, 0b0000_0001]);
        assert!(b.get(3) && !b.get(2) && b.get(8));
        assert_eq!(b.count_set(), 3);
    }

    #[test]
    fn all_set_masks_padding() {
        assert_eq!(Bitmap::all_set(10).as_bytes(), &[0xFF, 0b11]);
        assert_eq!(Bitmap::all_set(0).as_bytes(), &[] as &[u8]);
    }
}
