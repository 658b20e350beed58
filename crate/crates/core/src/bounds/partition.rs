use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set partition of the parties `0..n`. Blocks are kept sorted internally
/// and ordered by their smallest party.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct PartitionSpec {
    parties: usize,
    blocks: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    parties: usize,
    blocks: Vec<Vec<usize>>,
}

impl TryFrom<PartitionRepr> for PartitionSpec {
    type Error = Error;
    fn try_from(r: PartitionRepr) -> Result<Self> {
        PartitionSpec::new(r.blocks, r.parties)
    }
}

impl From<PartitionSpec> for PartitionRepr {
    fn from(p: PartitionSpec) -> Self {
        PartitionRepr { parties: p.parties, blocks: p.blocks }
    }
}

impl PartitionSpec {
    pub fn new(mut blocks: Vec<Vec<usize>>, parties: usize) -> Result<Self> {
        if parties == 0 {
            return Err(Error::InvalidParameter("a partition needs at least one party".into()));
        }
        let mut seen = vec![false; parties];
        for block in blocks.iter_mut() {
            if block.is_empty() {
                return Err(Error::InvalidParameter("partition blocks must be nonempty".into()));
            }
            block.sort_unstable();
            for &p in block.iter() {
                if p >= parties {
                    return Err(Error::InvalidParameter(format!("party {p} out of range for {parties} parties")));
                }
                if seen[p] {
                    return Err(Error::InvalidParameter(format!("party {p} appears in two blocks")));
                }
                seen[p] = true;
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!("party {p} is not covered")));
        }
        blocks.sort();
        Ok(Self { parties, blocks })
    }

    /// Everything in one block: no separability constraint.
    pub fn single_block(parties: usize) -> Self {
        Self { parties, blocks: vec![(0..parties).collect()] }
    }

    /// Every party on its own: full separability.
    pub fn singletons(parties: usize) -> Self {
        Self { parties, blocks: (0..parties).map(|p| vec![p]).collect() }
    }

    /// Parses the letter form, e.g. `"AB|C"` with `A` as party 0.
    pub fn parse(s: &str, parties: usize) -> Result<Self> {
        let blocks = s
            .split('|')
            .map(|b| {
                b.trim()
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| {
                        if c.is_ascii_uppercase() {
                            Ok((c as u8 - b'A') as usize)
                        } else {
                            Err(Error::InvalidParameter(format!("bad party letter '{c}' in partition {s:?}")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks, parties)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.len() == self.parties
    }

    /// Every block of `self` lies inside some block of `coarser`.
    pub fn refines(&self, coarser: &PartitionSpec) -> bool {
        self.parties == coarser.parties
            && self
                .blocks
                .iter()
                .all(|b| coarser.blocks.iter().any(|c| b.iter().all(|p| c.contains(p))))
    }

    /// All partitions of `0..parties` into exactly `k` blocks.
    pub fn all_with_blocks(parties: usize, k: usize) -> Vec<PartitionSpec> {
        let mut out = Vec::new();
        if k == 0 || k > parties {
            return out;
        }
        // restricted growth strings
        let mut labels = vec![0usize; parties];
        fn rec(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, out: &mut Vec<PartitionSpec>) {
            let n = labels.len();
            if i == n {
                if used == k {
                    let mut blocks = vec![Vec::new(); k];
                    for (p, &l) in labels.iter().enumerate() {
                        blocks[l].push(p);
                    }
                    out.push(PartitionSpec::new(blocks, n).expect("valid by construction"));
                }
                return;
            }
            if k - used > n - i {
                return;
            }
            for l in 0..used.min(k) {
                labels[i] = l;
                rec(i + 1, used, k, labels, out);
            }
            if used < k {
                labels[i] = used;
                rec(i + 1, used + 1, k, labels, out);
            }
        }
        rec(0, 0, k, &mut labels, &mut out);
        out
    }

    pub fn label(&self) -> String {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&p| party_letter(p)).collect::<String>())
            .collect::<Vec<_>>()
            .join("|")
    }
}

pub(crate) fn party_letter(p: usize) -> char {
    if p < 26 {
        (b'A' + p as u8) as char
    } else {
        '?'
    }
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
