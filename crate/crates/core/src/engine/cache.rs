use lru::LruCache;
use parking_lot::Mutex;

use super::NodeOutput;

pub const DEFAULT_CACHE_BYTES: usize = 512 * 1024 * 1024;

/// Node results keyed by a hash of the node's snapshot and its inputs'
/// result hashes, evicted least-recently-used past a byte budget.
pub struct ResultCache {
    inner: Mutex<Inner>,
}

struct Inner {
    entries: LruCache<[u8; 32], (NodeOutput, usize)>,
    bytes: usize,
    budget: usize,
    hits: u64,
    misses: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: usize,
    pub hits: u64,
    pub misses: u64,
}

impl Default for ResultCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_BYTES)
    }
}

impl ResultCache {
    pub fn new(budget: usize) -> Self {
        Self {
            inner: Mutex::new(Inner {
                entries: LruCache::unbounded(),
                bytes: 0,
                budget,
                hits: 0,
                misses: 0,
            }),
        }
    }

    pub fn get(&self, key: &[u8; 32]) -> Option<NodeOutput> {
        let mut g = self.inner.lock();
        match g.entries.get(key).map(|(o, _)| o.clone()) {
            Some(o) => {
                g.hits += 1;
                Some(o)
            }
            None => {
                g.misses += 1;
                None
            }
        }
    }

    pub fn put(&self, key: [u8; 32], output: NodeOutput) {
        let size = output.byte_size();
        let mut g = self.inner.lock();
        if size > g.budget {
            return;
        }
        if let Some((_, old)) = g.entries.put(key, (output, size)) {
            g.bytes -= old;
        }
        g.bytes += size;
        while g.bytes > g.budget {
            match g.entries.pop_lru() {
                Some((_, (_, s))) => g.bytes -= s,
                None => break,
            }
        }
    }

    pub fn stats(&self) -> CacheStats {
        let g = self.inner.lock();
        CacheStats {
            entries: g.entries.len(),
            bytes: g.bytes,
            hits: g.hits,
            misses: g.misses,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{Column, DataFrame};

    fn frame(n: usize) -> NodeOutput {
        NodeOutput::Frame(DataFrame::new(vec![Column::float64("x", vec![0.0; n])]).unwrap())
    }

    #[test]
    fn evicts_past_budget() {
        let one = frame(100).byte_size();
        let cache = ResultCache::new(one * 2);
        cache.put([1; 32], frame(100));
        cache.put([2; 32], frame(100));
        assert!(cache.get(&[1; 32]).is_some());
        cache.put([3; 32], frame(100));
        assert!(cache.get(&[2; 32]).is_none(), "least recently used goes first");
        assert!(cache.get(&[1; 32]).is_some());
        let s = cache.stats();
        assert_eq!((s.entries, s.hits, s.misses), (2, 2, 1));
        assert!(s.bytes <= one * 2);
    }
}
