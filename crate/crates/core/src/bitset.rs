//! Fixed-width bit vectors backing class adjacency and subset witnesses.

use std::fmt;

/// A bit vector over `0..nbits`, stored as 64-bit words.
///
/// Unused high bits of the last word are kept zero, so popcounts and
/// equality never need masking.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    nbits: usize,
    words: Vec<u64>,
}

#[inline]
fn word_count(nbits: usize) -> usize {
    nbits.div_ceil(64)
}

impl Bitset {
    pub fn new(nbits: usize) -> Self {
        Bitset {
            nbits,
            words: vec![0; word_count(nbits)],
        }
    }

    /// All bits in `0..nbits` set.
    pub fn full(nbits: usize) -> Self {
        let mut words = vec![u64::MAX; word_count(nbits)];
        let rem = nbits % 64;
        if rem != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << rem) - 1;
            }
        }
        Bitset { nbits, words }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(nbits: usize, indices: I) -> Self {
        let mut bs = Bitset::new(nbits);
        for i in indices {
            bs.set(i);
        }
        bs
    }

    #[inline]
    pub fn nbits(&self) -> usize {
        self.nbits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.nbits);
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.nbits);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn clear(&mut self, i: usize) {
        debug_assert!(i < self.nbits);
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    /// `|self ∩ other|`; both sets must range over the same universe.
    pub fn intersection_count(&self, other: &Bitset) -> usize {
        debug_assert_eq!(self.nbits, other.nbits);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// In-place intersection.
    pub fn and_assign(&mut self, other: &Bitset) {
        debug_assert_eq!(self.nbits, other.nbits);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    /// Overwrite with `src` (same universe).
    pub fn copy_from(&mut self, src: &Bitset) {
        debug_assert_eq!(self.nbits, src.nbits);
        self.words.copy_from_slice(&src.words);
    }

    /// First word; callers use this as a plain `u64` mask when `nbits <= 64`.
    #[inline]
    pub fn word0(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        self.ones().collect()
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl<'a> Iterator for Ones<'a> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
        let tz = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.word_idx * 64 + tz)
    }
}

impl fmt::Debug for Bitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitset{{{}; ", self.nbits)?;
        let mut first = true;
        for i in self.ones() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
            first = false;
        }
        write!(f, "}}")
    }
}
