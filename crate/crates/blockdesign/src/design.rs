//! Core data model: designs, grouped designs, blocking systems, colourings,
//! and the admissibility arithmetic for (v,k,lambda) parameters.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Point identifier. Generated points use structured labels like "(a,b)" or
/// "inf"; within one design all labels are unique.
pub type Label = String;

/// A (possibly partial) block design: a point set, a multiset of blocks and an
/// index lambda. Whether it is a full BIBD is a verification verdict, not a
/// type distinction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub points: BTreeSet<Label>,
    /// Blocks as sorted label lists; repetition encodes multiset semantics.
    pub blocks: Vec<Vec<Label>>,
    pub lambda: u64,
}

impl Design {
    pub fn new<I, B>(points: I, blocks: B, lambda: u64) -> Self
    where
        I: IntoIterator<Item = Label>,
        B: IntoIterator<Item = Vec<Label>>,
    {
        let points: BTreeSet<Label> = points.into_iter().collect();
        let blocks = blocks
            .into_iter()
            .map(|mut b| {
                b.sort();
                b
            })
            .collect();
        Design { points, blocks, lambda }
    }

    pub fn v(&self) -> usize {
        self.points.len()
    }

    /// Uniform block size, or None for mixed sizes / no blocks.
    pub fn block_size(&self) -> Option<usize> {
        let mut sizes = self.blocks.iter().map(|b| b.len());
        let first = sizes.next()?;
        if sizes.all(|s| s == first) {
            Some(first)
        } else {
            None
        }
    }
}

/// A design together with a partition of its points into groups (GDD/TD).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedDesign {
    pub design: Design,
    /// Pairwise disjoint, nonempty, covering all points (checked by verify).
    pub groups: Vec<BTreeSet<Label>>,
}

impl GroupedDesign {
    pub fn group_type(&self) -> GroupType {
        GroupType::from_sizes(self.groups.iter().map(|g| g.len()))
    }

    /// The group containing a point, if any.
    pub fn group_of(&self, p: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(p))
    }
}

/// Multiset of group sizes of a GDD, written g1^a1 g2^a2 ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupType {
    /// (group size, multiplicity), sizes distinct, sorted descending.
    pub entries: Vec<(usize, usize)>,
}

impl GroupType {
    pub fn from_sizes<I: IntoIterator<Item = usize>>(sizes: I) -> Self {
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for s in sizes {
            *count.entry(s).or_insert(0) += 1;
        }
        let mut entries: Vec<(usize, usize)> = count.into_iter().collect();
        entries.reverse();
        GroupType { entries }
    }

    pub fn total_points(&self) -> usize {
        self.entries.iter().map(|&(s, m)| s * m).sum()
    }
}

impl std::fmt::Display for GroupType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, &(s, m)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}^{}", s, m)?;
        }
        Ok(())
    }
}

/// Ordered list of pairwise-disjoint point sets S1..Sc. Valid for a design
/// when every block meets at least two of the sets (checked by verify).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockingSystem {
    pub sets: Vec<BTreeSet<Label>>,
}

impl BlockingSystem {
    pub fn new(sets: Vec<BTreeSet<Label>>) -> Self {
        BlockingSystem { sets }
    }

    /// True when the sets are pairwise disjoint.
    pub fn pairwise_disjoint(&self) -> bool {
        let mut seen: BTreeSet<&Label> = BTreeSet::new();
        for s in &self.sets {
            for p in s {
                if !seen.insert(p) {
                    return false;
                }
            }
        }
        true
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.len()).collect()
    }
}

/// Total map from points to colour indices in {1..c}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colouring {
    pub assignment: BTreeMap<Label, u32>,
    pub c: u32,
}

/// True iff lambda(v-1) = 0 mod (k-1) and lambda*v*(v-1) = 0 mod k(k-1).
pub fn is_admissible(v: u64, k: u64, lambda: u64) -> bool {
    assert!(k >= 3, "block size must be at least 3");
    assert!(lambda >= 1);
    lambda * (v - 1) % (k - 1) == 0 && lambda * v * (v - 1) % (k * (k - 1)) == 0
}

/// The residues m modulo k(k-1) for which the admissibility congruences hold;
/// computed by testing one large representative per residue class.
pub fn admissible_residues(k: u64, lambda: u64) -> BTreeSet<u64> {
    let modulus = k * (k - 1);
    (0..modulus)
        .filter(|&m| {
            // representative >= k in the class of m
            let v = m + modulus * ((k / modulus) + 1);
            is_admissible(v, k, lambda)
        })
        .collect()
}

/// Repeat every block `factor` times and multiply the index accordingly.
pub fn scale_index(d: &Design, factor: u64) -> Result<Design> {
    if factor == 0 {
        return Err(Error::InvalidArgument("scale factor must be positive".into()));
    }
    let mut blocks = Vec::with_capacity(d.blocks.len() * factor as usize);
    for b in &d.blocks {
        for _ in 0..factor {
            blocks.push(b.clone());
        }
    }
    Ok(Design { points: d.points.clone(), blocks, lambda: d.lambda * factor })
}

/// Deterministic normal form: block labels sorted within each block, blocks
/// sorted lexicographically. Identical inputs (up to block/point ordering)
/// produce byte-identical serializations.
pub fn canonicalize(d: &Design) -> Design {
    let mut blocks: Vec<Vec<Label>> = d
        .blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort();
            b
        })
        .collect();
    blocks.sort();
    Design { points: d.points.clone(), blocks, lambda: d.lambda }
}
