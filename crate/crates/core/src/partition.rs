//! Groupings of qubit systems into ordered blocks.
//!
//! Systems are 0-based internally and printed 1-based: `"12|3|4|5|6|7"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates that `blocks` is a disjoint cover of `0..n` by non-empty blocks.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || n > 9 {
            return Err(Error::InvalidPartition(format!("unsupported system count {n}")));
        }
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &s in b {
                if s >= n {
                    return Err(Error::InvalidPartition(format!("system {} out of range", s + 1)));
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::InvalidPartition(format!("system {} appears twice", s + 1)));
                }
            }
        }
        if let Some(s) = seen.iter().position(|x| !x) {
            return Err(Error::InvalidPartition(format!("system {} missing", s + 1)));
        }
        Ok(Partition { n, blocks })
    }

    pub fn singletons(n: usize) -> Self {
        Partition { n, blocks: (0..n).map(|s| vec![s]).collect() }
    }

    /// Singletons except `i` and `j` (0-based), which form one block placed last.
    pub fn merge_pair(n: usize, i: usize, j: usize) -> Result<Self> {
        if i == j || i >= n || j >= n {
            return Err(Error::InvalidPair(i + 1, j + 1));
        }
        let mut blocks: Vec<Vec<usize>> = (0..n).filter(|&s| s != i && s != j).map(|s| vec![s]).collect();
        blocks.push(vec![i, j]);
        Partition::new(n, blocks)
    }

    /// Parses digits `1..=n` grouped by `|`, e.g. `"12|3|4|5|6|7"`.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let mut blocks = Vec::new();
        for part in spec.trim().split('|') {
            let mut b = Vec::new();
            for ch in part.trim().chars() {
                let d = ch
                    .to_digit(10)
                    .filter(|&d| d >= 1)
                    .ok_or_else(|| Error::InvalidPartition(format!("bad character {ch:?} in {spec:?}")))?;
                b.push(d as usize - 1);
            }
            blocks.push(b);
        }
        Partition::new(n, blocks)
    }

    pub fn n_systems(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Qubit dimension `2^|block|` per block.
    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| 1usize << b.len()).collect()
    }

    /// Block sizes in ascending order, e.g. `[1, 1, 1, 1, 3]`.
    pub fn shape(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        s.sort_unstable();
        s
    }

    /// Blocks sorted internally and ordered by their smallest system.
    pub fn canonical(&self) -> Partition {
        let mut blocks = self.blocks.clone();
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort();
        Partition { n: self.n, blocks }
    }

    /// `true` if every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n == coarser.n
            && self.blocks.iter().all(|b| coarser.blocks.iter().any(|c| b.iter().all(|s| c.contains(s))))
    }

    /// All set partitions of `n` systems into exactly `k` blocks, in canonical form.
    pub fn all_with_blocks(n: usize, k: usize) -> Vec<Partition> {
        let mut out = Vec::new();
        if k == 0 || k > n {
            return out;
        }
        let mut rgs = vec![0usize; n];
        fn rec(pos: usize, max: usize, n: usize, k: usize, rgs: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if pos == n {
                if max + 1 == k {
                    let mut blocks = vec![Vec::new(); k];
                    for (s, &b) in rgs.iter().enumerate() {
                        blocks[b].push(s);
                    }
                    out.push(Partition { n, blocks });
                }
                return;
            }
            // not enough systems left to open the remaining blocks
            if k - (max + 1) > n - pos {
                return;
            }
            for b in 0..=(max + 1).min(k - 1) {
                rgs[pos] = b;
                rec(pos + 1, max.max(b), n, k, rgs, out);
            }
        }
        rec(1, 0, n, k, &mut rgs, &mut out);
        out
    }

    /// First partition in [`Partition::all_with_blocks`] order with the given shape.
    pub fn representative(n: usize, shape: &[usize]) -> Result<Partition> {
        let mut want = shape.to_vec();
        want.sort_unstable();
        Partition::all_with_blocks(n, want.len())
            .into_iter()
            .find(|p| p.shape() == want)
            .ok_or_else(|| Error::InvalidPartition(format!("no partition of {n} systems with shape {shape:?}")))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            for s in b {
                write!(f, "{}", s + 1)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().filter(char::is_ascii_digit).count();
        Partition::parse(s, n)
    }
}

impl TryFrom<String> for Partition {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Partition> for String {
    fn from(p: Partition) -> String {
        p.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_roundtrip() {
        let p = Partition::parse("12|3|4|5|6|7", 7).unwrap();
        assert_eq!(p.blocks()[0], vec![0, 1]);
        assert_eq!(p.block_dims(), vec![4, 2, 2, 2, 2, 2]);
        assert_eq!(p.to_string(), "12|3|4|5|6|7");
        let q: Partition = "31|2|4|5|6|7".parse().unwrap();
        assert_eq!(q.blocks()[0], vec![2, 0]);
        assert_eq!(q.canonical().to_string(), "13|2|4|5|6|7");
    }

    #[test]
    fn invalid_partitions_rejected() {
        for bad in ["12|3|4|5|6", "12|2|3|4|5|6|7", "1||234567", "8|1234567", "a|1234567", "0|1234567"] {
            assert!(Partition::parse(bad, 7).is_err(), "{bad}");
        }
    }

    #[test]
    fn merge_pair_puts_block_last() {
        let p = Partition::merge_pair(7, 0, 1).unwrap();
        assert_eq!(p.to_string(), "3|4|5|6|7|12");
        assert_eq!(p.block_dims(), vec![2, 2, 2, 2, 2, 4]);
        assert!(Partition::merge_pair(7, 2, 2).is_err());
        assert!(Partition::merge_pair(7, 0, 7).is_err());
    }

    #[test]
    fn stirling_counts() {
        let counts: Vec<usize> = (1..=7).map(|k| Partition::all_with_blocks(7, k).len()).collect();
        assert_eq!(counts, vec![1, 63, 301, 350, 140, 21, 1]);
        for p in Partition::all_with_blocks(7, 3) {
            assert_eq!(p, p.canonical());
            assert!(Partition::new(7, p.blocks().to_vec()).is_ok());
        }
    }

    #[test]
    fn shapes_and_refinement() {
        let p = Partition::representative(7, &[3, 1, 1, 1, 1]).unwrap();
        assert_eq!(p.shape(), vec![1, 1, 1, 1, 3]);
        assert!(Partition::singletons(7).refines(&p));
        assert!(!p.refines(&Partition::singletons(7)));
        assert!(Partition::representative(7, &[4, 4]).is_err());
    }
}
