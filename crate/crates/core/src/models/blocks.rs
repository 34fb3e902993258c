//! Block partitions `[n_i, n_{i+1})` of the positive integers and their
//! dyadic overlap counts.

use super::ModelError;

/// Cut points `1 = n_1 < n_2 < ...`. The last listed block is unbounded, so
/// cut points past the horizon still matter for dyadic counts near it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    cut_points: Vec<usize>,
    horizon: usize,
}

/// Blocks meeting `[2^k, 2^{k+1})`: `block_indices` are 1-based positions
/// of the cut points, `intervals` the half-open overlaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicBlockReport {
    pub k: u32,
    pub block_indices: Vec<usize>,
    pub v: usize,
    pub intervals: Vec<(usize, usize)>,
}

fn dyadic_extent(horizon: usize) -> usize {
    // the block containing 2^{k+1} - 1 for the largest k with 2^k <= horizon
    (horizon.max(1).next_power_of_two() << 1).max(2)
}

impl BlockStructure {
    pub fn new(cut_points: Vec<usize>, horizon: usize) -> Result<Self, ModelError> {
        if horizon == 0 {
            return Err(ModelError::EmptyHorizon);
        }
        if cut_points.first() != Some(&1) {
            return Err(ModelError::InvalidBlocks("the first cut point must be 1".into()));
        }
        if cut_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidBlocks(
                "cut points must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            cut_points,
            horizon,
        })
    }

    /// Cut points `1, 2, 4, 8, ...`.
    pub fn powers_of_two(horizon: usize) -> Result<Self, ModelError> {
        let extent = dyadic_extent(horizon);
        let cuts = std::iter::successors(Some(1usize), |c| c.checked_mul(2))
            .take_while(|&c| c <= extent)
            .collect();
        Self::new(cuts, horizon)
    }

    /// Every block has length one.
    pub fn unit(horizon: usize) -> Result<Self, ModelError> {
        Self::new((1..=dyadic_extent(horizon)).collect(), horizon)
    }

    /// Blocks of a fixed length.
    pub fn regular(length: usize, horizon: usize) -> Result<Self, ModelError> {
        if length == 0 {
            return Err(ModelError::InvalidBlocks("block length must be positive".into()));
        }
        Self::new((1..=dyadic_extent(horizon)).step_by(length).collect(), horizon)
    }

    pub fn cut_points(&self) -> &[usize] {
        &self.cut_points
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Blocks clipped to `1..=horizon`, as half-open ranges.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let end = self.horizon + 1;
        let mut out = Vec::new();
        for (i, &start) in self.cut_points.iter().enumerate() {
            if start >= end {
                break;
            }
            let stop = self.cut_points.get(i + 1).copied().unwrap_or(end).min(end);
            out.push((start, stop));
        }
        out
    }

    /// 1-based index of the block containing `n`.
    pub fn block_of(&self, n: usize) -> usize {
        self.cut_points.partition_point(|&c| c <= n)
    }
}

pub fn dyadic_blocks(blocks: &BlockStructure, k: u32) -> Result<DyadicBlockReport, ModelError> {
    let lo = 1usize
        .checked_shl(k)
        .filter(|&p| p <= blocks.horizon)
        .ok_or(ModelError::OutOfHorizon {
            k,
            horizon: blocks.horizon,
        })?;
    let hi = lo * 2;
    let cuts = &blocks.cut_points;
    let mut block_indices = Vec::new();
    let mut intervals = Vec::new();
    let first = blocks.block_of(lo);
    for i in first..=cuts.len() {
        let start = cuts[i - 1].max(lo);
        let stop = cuts.get(i).copied().unwrap_or(usize::MAX).min(hi);
        if start >= hi {
            break;
        }
        if start < stop {
            block_indices.push(i);
            intervals.push((start, stop));
        }
    }
    Ok(DyadicBlockReport {
        k,
        v: block_indices.len(),
        block_indices,
        intervals,
    })
}

/// `Φ(n) = max_{j <= k} v_j` for `n ∈ [2^k, 2^{k+1})`.
pub fn phi(blocks: &BlockStructure, n: usize) -> Result<usize, ModelError> {
    if n == 0 || n > blocks.horizon {
        return Err(ModelError::OutOfHorizon {
            k: if n == 0 { 0 } else { n.ilog2() },
            horizon: blocks.horizon,
        });
    }
    let k = n.ilog2();
    let mut best = 0;
    for j in 0..=k {
        best = best.max(dyadic_blocks(blocks, j)?.v);
    }
    Ok(best)
}

/// `Φ(1..=horizon)` in one pass.
pub fn phi_table(blocks: &BlockStructure) -> Vec<usize> {
    let mut out = Vec::with_capacity(blocks.horizon);
    let mut best = 0;
    let mut k = 0u32;
    for n in 1..=blocks.horizon {
        if n == 1 << k {
            best = best.max(dyadic_blocks(blocks, k).map(|r| r.v).unwrap_or(0));
            k += 1;
        }
        out.push(best);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(BlockStructure::new(vec![2, 3], 4).is_err());
        assert!(BlockStructure::new(vec![1, 3, 3], 4).is_err());
        assert!(BlockStructure::new(vec![1], 0).is_err());
        let b = BlockStructure::new(vec![1, 4, 16, 64], 20).unwrap();
        assert_eq!(b.blocks(), vec![(1, 4), (4, 16), (16, 21)]);
        assert_eq!(b.block_of(3), 1);
        assert_eq!(b.block_of(4), 2);
        assert_eq!(b.block_of(100), 4);
    }

    #[test]
    fn powers_of_two_have_one_block_per_dyadic_range() {
        let b = BlockStructure::powers_of_two(100).unwrap();
        for k in 0..=6 {
            let r = dyadic_blocks(&b, k).unwrap();
            assert_eq!(r.block_indices, vec![k as usize + 1]);
            assert_eq!(r.v, 1);
        }
        assert!(dyadic_blocks(&b, 7).is_err());
        assert!((1..=100).all(|n| phi(&b, n).unwrap() == 1));
    }

    #[test]
    fn unit_blocks() {
        let b = BlockStructure::unit(8).unwrap();
        for k in 0..=3 {
            assert_eq!(dyadic_blocks(&b, k).unwrap().v, 1 << k);
        }
        assert_eq!(phi(&b, 5).unwrap(), 4);
        let b = BlockStructure::unit(4096).unwrap();
        assert_eq!(phi(&b, 4096).unwrap(), 4096);
    }

    #[test]
    fn single_covering_block() {
        let b = BlockStructure::new(vec![1, 64], 64).unwrap();
        for k in 0..=4 {
            let r = dyadic_blocks(&b, k).unwrap();
            assert_eq!(r.block_indices, vec![1]);
        }
        assert_eq!(dyadic_blocks(&b, 5).unwrap().intervals, vec![(32, 64)]);
        assert_eq!(dyadic_blocks(&b, 6).unwrap().intervals, vec![(64, 128)]);
    }

    #[test]
    fn table_matches_pointwise() {
        let b = BlockStructure::new(vec![1, 3, 4, 9, 10, 11, 30], 40).unwrap();
        let t = phi_table(&b);
        for n in 1..=40 {
            assert_eq!(t[n - 1], phi(&b, n).unwrap());
        }
    }
}
