//! Sets of product vectors over a partition of qubit systems.

use nalgebra::DMatrix;

use crate::linalg::{inner, UnitVector, C64};
use crate::partition::Partition;
use crate::{Error, Result};

/// `vectors[i][b]` is the factor of vector `i` on block `b` of `partition`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcreteProductSet {
    partition: Partition,
    vectors: Vec<Vec<UnitVector>>,
}

/// Amplitude index of block-local basis states inside the global canonical index.
fn local_index(global: usize, n: usize, block: &[usize]) -> usize {
    let mut idx = 0;
    for &s in block {
        idx = (idx << 1) | ((global >> (n - 1 - s)) & 1);
    }
    idx
}

impl ConcreteProductSet {
    pub fn new(partition: Partition, vectors: Vec<Vec<UnitVector>>) -> Result<Self> {
        let dims = partition.block_dims();
        for row in &vectors {
            if row.len() != dims.len() {
                return Err(Error::DimensionMismatch { expected: dims.len(), found: row.len() });
            }
            for (f, &d) in row.iter().zip(&dims) {
                if f.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: f.dim() });
                }
            }
        }
        Ok(ConcreteProductSet { partition, vectors })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<UnitVector>] {
        &self.vectors
    }

    pub fn factor(&self, i: usize, block: usize) -> &UnitVector {
        &self.vectors[i][block]
    }

    /// Total Hilbert-space dimension `2^n`.
    pub fn total_dim(&self) -> usize {
        1 << self.partition.n_systems()
    }

    /// Vector `i` in the canonical system order (system 1 slowest).
    pub fn global(&self, i: usize) -> UnitVector {
        let n = self.partition.n_systems();
        let blocks = self.partition.blocks();
        let row = &self.vectors[i];
        let out = (0..1usize << n)
            .map(|g| {
                blocks
                    .iter()
                    .zip(row)
                    .map(|(b, f)| f.entries()[local_index(g, n, b)])
                    .product::<C64>()
            })
            .collect();
        UnitVector::from_unchecked(out)
    }

    pub fn globals(&self) -> Vec<UnitVector> {
        (0..self.len()).map(|i| self.global(i)).collect()
    }

    /// `G[i][j] = ⟨ψᵢ|ψⱼ⟩`, computed factorwise.
    pub fn gram(&self) -> DMatrix<C64> {
        let m = self.len();
        DMatrix::from_fn(m, m, |i, j| {
            self.vectors[i]
                .iter()
                .zip(&self.vectors[j])
                .map(|(a, b)| inner(a.entries(), b.entries()))
                .product()
        })
    }

    /// Largest `|G - I|` entry.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram();
        let m = self.len();
        let mut dev = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        dev
    }

    pub fn check_orthonormal(&self, tol: f64) -> Result<f64> {
        let dev = self.orthonormality_error();
        if dev > tol {
            Err(Error::NotOrthonormal(dev))
        } else {
            Ok(dev)
        }
    }

    /// Largest deviation of any factor norm from 1.
    pub fn factor_norm_error(&self) -> f64 {
        self.vectors.iter().flatten().map(|f| (f.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Regroups factors according to `coarser`, which must be a coarsening of
    /// the current partition. Blocks of `coarser` keep their listed order.
    pub fn merge(&self, coarser: &Partition) -> Result<Self> {
        if !self.partition.refines(coarser) {
            return Err(Error::InvalidPartition(format!(
                "{coarser} is not a coarsening of {}",
                self.partition
            )));
        }
        let old = self.partition.blocks();
        let n = self.partition.n_systems();
        // For each new block: the old blocks inside it and, per local index,
        // the bit positions of each old block's systems.
        let plan: Vec<Vec<(usize, Vec<usize>)>> = coarser
            .blocks()
            .iter()
            .map(|nb| {
                old.iter()
                    .enumerate()
                    .filter(|(_, ob)| ob.iter().all(|s| nb.contains(s)))
                    .map(|(k, ob)| {
                        let pos = ob.iter().map(|s| nb.iter().position(|t| t == s).unwrap()).collect();
                        (k, pos)
                    })
                    .collect()
            })
            .collect();
        let vectors = self
            .vectors
            .iter()
            .map(|row| {
                coarser
                    .blocks()
                    .iter()
                    .zip(&plan)
                    .map(|(nb, parts)| {
                        let len = nb.len();
                        let out = (0..1usize << len)
                            .map(|loc| {
                                parts
                                    .iter()
                                    .map(|(k, pos)| {
                                        let mut idx = 0;
                                        for &p in pos {
                                            idx = (idx << 1) | ((loc >> (len - 1 - p)) & 1);
                                        }
                                        row[*k].entries()[idx]
                                    })
                                    .product::<C64>()
                            })
                            .collect();
                        UnitVector::from_unchecked(out)
                    })
                    .collect()
            })
            .collect();
        debug_assert_eq!(n, coarser.n_systems());
        Ok(ConcreteProductSet { partition: coarser.clone(), vectors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qubit_from_angle, tensor, Angle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(seed: u64, m: usize) -> ConcreteProductSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = (0..m)
            .map(|_| {
                (0..7)
                    .map(|_| {
                        UnitVector::normalized(vec![
                            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                        ])
                        .unwrap()
                    })
                    .collect()
            })
            .collect();
        ConcreteProductSet::new(Partition::singletons(7), vectors).unwrap()
    }

    fn dist(a: &UnitVector, b: &UnitVector) -> f64 {
        a.entries().iter().zip(b.entries()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn global_matches_tensor_for_singletons() {
        let s = random_set(1, 3);
        for i in 0..3 {
            assert!(dist(&s.global(i), &tensor(&s.vectors()[i]).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn merge_preserves_global_vectors() {
        let s = random_set(2, 5);
        for spec in ["12|3|4|5|6|7", "3|4|5|6|7|12", "31|2|4|5|6|7", "17|2|3|4|5|6", "642|1|3|57", "1234567"] {
            let p: Partition = spec.parse().unwrap();
            let m = s.merge(&p).unwrap();
            assert_eq!(m.partition().block_dims(), p.block_dims());
            for i in 0..5 {
                assert!(dist(&s.global(i), &m.global(i)) <= 1e-12, "{spec}");
            }
            // merging again to a coarser partition composes
            let full = m.merge(&Partition::parse("1234567", 7).unwrap()).unwrap();
            assert_eq!(full.vectors()[0][0].dim(), 128);
            assert!(dist(&full.global(0), &s.global(0)) <= 1e-12);
        }
    }

    #[test]
    fn merged_block_factor_is_tensor_in_block_order() {
        let s = random_set(3, 1);
        let m = s.merge(&"3|4|5|6|7|21".parse().unwrap()).unwrap();
        let expect = tensor(&[s.factor(0, 1).clone(), s.factor(0, 0).clone()]).unwrap();
        assert!(dist(m.factor(0, 5), &expect) < 1e-15);
        assert_eq!(m.partition().block_dims(), vec![2, 2, 2, 2, 2, 4]);
    }

    #[test]
    fn merge_rejects_refinement() {
        let s = random_set(4, 1).merge(&"12|3|4|5|6|7".parse().unwrap()).unwrap();
        assert!(s.merge(&Partition::singletons(7)).is_err());
        assert_eq!(s.merge(s.partition()).unwrap(), s);
    }

    #[test]
    fn orthonormality_of_basis_states() {
        let z = qubit_from_angle(Angle::new(0.0).unwrap());
        let o = qubit_from_angle(Angle::new(std::f64::consts::FRAC_PI_2).unwrap());
        let rows = vec![vec![z.clone(), z.clone()], vec![z.clone(), o.clone()], vec![o.clone(), o]];
        let s = ConcreteProductSet::new(Partition::singletons(2), rows).unwrap();
        assert!(s.check_orthonormal(1e-10).unwrap() < 1e-15);
        let bad = ConcreteProductSet::new(Partition::singletons(2), vec![vec![z.clone(), z.clone()]; 2]).unwrap();
        assert!(matches!(bad.check_orthonormal(1e-10), Err(Error::NotOrthonormal(_))));
    }
}
