//! Fixed-width bitsets over target indices and a dense boolean matrix built on them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

pub fn count(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// `|a & !b|`
pub fn count_and_not(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & !y).count_ones() as usize).sum()
}

/// `|a & b & !c|`
pub fn count_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

pub fn count_and_and_not(a: &[u64], b: &[u64], c: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| (x & y & !z).count_ones() as usize)
        .sum()
}

pub fn or_assign(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d |= s;
    }
}

pub fn test(words: &[u64], bit: usize) -> bool {
    words[bit / 64] >> (bit % 64) & 1 == 1
}

pub fn set(words: &mut [u64], bit: usize) {
    words[bit / 64] |= 1 << (bit % 64);
}

pub fn iter_ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * 64 + bit)
        })
    })
}

/// Dense row-major boolean matrix; rows are bitsets.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn filled(rows: usize, cols: usize) -> Self {
        let mut m = Self::new(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, true);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "bit ({r}, {c}) out of range");
        test(self.row(r), c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "bit ({r}, {c}) out of range");
        let word = &mut self.words[r * self.stride + c / 64];
        if value {
            *word |= 1 << (c % 64);
        } else {
            *word &= !(1 << (c % 64));
        }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.words[r * self.stride..(r + 1) * self.stride]
    }

    pub fn count_ones(&self) -> usize {
        count(&self.words)
    }

    pub fn row_count(&self, r: usize) -> usize {
        count(self.row(r))
    }

    pub fn column_count(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    pub fn all(&self) -> bool {
        self.count_ones() == self.rows * self.cols
    }

    /// True if every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BitMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| iter_ones(self.row(r)).map(move |c| (r, c)))
    }

    pub fn row_string(&self, r: usize) -> String {
        (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect()
    }

    /// Parse one row of `0`/`1` characters; the error carries the 0-based column.
    pub fn parse_row(&mut self, r: usize, text: &str) -> std::result::Result<(), (usize, String)> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() != self.cols {
            return Err((
                chars.len().min(self.cols),
                format!("expected {} entries, found {}", self.cols, chars.len()),
            ));
        }
        for (c, ch) in chars.into_iter().enumerate() {
            match ch {
                '0' => self.set(r, c, false),
                '1' => self.set(r, c, true),
                other => return Err((c, format!("unexpected character {other:?}"))),
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row_string(r))?;
        }
        Ok(())
    }
}

impl From<BitMatrix> for Vec<String> {
    fn from(m: BitMatrix) -> Self {
        (0..m.rows).map(|r| m.row_string(r)).collect()
    }
}

impl TryFrom<Vec<String>> for BitMatrix {
    type Error = Error;

    fn try_from(rows: Vec<String>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = BitMatrix::new(rows.len(), cols);
        for (r, text) in rows.iter().enumerate() {
            m.parse_row(r, text)
                .map_err(|(col, msg)| Error::Config(format!("bit matrix row {r}, column {col}: {msg}")))?;
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn set_get_and_counts() {
        let mut m = BitMatrix::new(3, 130);
        m.set(0, 0, true);
        m.set(1, 64, true);
        m.set(2, 129, true);
        m.set(2, 5, true);
        m.set(2, 5, false);
        assert_eq!(m.count_ones(), 3);
        assert!(m.get(1, 64) && !m.get(1, 63));
        assert_eq!(m.iter_ones().collect::<Vec<_>>(), vec![(0, 0), (1, 64), (2, 129)]);
        assert_eq!(m.column_count(64), 1);
    }

    #[test]
    fn serde_round_trip() {
        let mut m = BitMatrix::new(2, 5);
        m.set(1, 3, true);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"["00000","00010"]"#);
        let back: BitMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_row_reports_column() {
        let mut m = BitMatrix::new(1, 4);
        assert_eq!(m.parse_row(0, "01x1").unwrap_err().0, 2);
        assert!(m.parse_row(0, "011").is_err());
    }

    proptest! {
        #[test]
        fn set_operations_match_naive(a in proptest::collection::vec(any::<bool>(), 150), b in proptest::collection::vec(any::<bool>(), 150), c in proptest::collection::vec(any::<bool>(), 150)) {
            let pack = |v: &[bool]| {
                let mut w = vec![0u64; words_for(v.len())];
                for (i, &x) in v.iter().enumerate() { if x { set(&mut w, i); } }
                w
            };
            let (wa, wb, wc) = (pack(&a), pack(&b), pack(&c));
            prop_assert_eq!(count(&wa), a.iter().filter(|&&x| x).count());
            prop_assert_eq!(count_and_not(&wa, &wb), (0..150).filter(|&i| a[i] && !b[i]).count());
            prop_assert_eq!(count_and_and_not(&wa, &wb, &wc), (0..150).filter(|&i| a[i] && b[i] && !c[i]).count());
            prop_assert_eq!(iter_ones(&wa).collect::<Vec<_>>(), (0..150).filter(|&i| a[i]).collect::<Vec<_>>());
        }
    }
}
