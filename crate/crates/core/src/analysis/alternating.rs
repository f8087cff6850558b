//! Block-coordinate minimization of `Σᵢ |⟨δ|φᵢ⟩|²` over product vectors `δ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigen, inner, HermitianOperator, UnitVector, C64};
use crate::partition::Partition;
use crate::product::ConcreteProductSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    #[default]
    Complex,
    Real,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternatingConfig {
    pub starts: usize,
    pub seed: u64,
    pub mode: FieldMode,
    pub max_sweeps: usize,
    /// A start stops once one sweep lowers the value by at most this fraction.
    pub rel_tol: f64,
}

impl Default for AlternatingConfig {
    fn default() -> Self {
        AlternatingConfig { starts: 200, seed: 0, mode: FieldMode::Complex, max_sweeps: 2000, rel_tol: 1e-12 }
    }
}

/// A product vector over the blocks of a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    pub blocks: Vec<UnitVector>,
    /// `Σᵢ |⟨δ|φᵢ⟩|²`.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct AlternatingRun {
    pub point: ProductPoint,
    /// Objective after each full sweep.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AlternatingResult {
    pub partition: Partition,
    pub best: ProductPoint,
    pub best_start: usize,
    /// Final value of each start.
    pub start_values: Vec<f64>,
    pub sweeps: usize,
}

/// `⟨δ|φᵢ⟩` for every row `i`.
pub fn overlaps(set: &ConcreteProductSet, blocks: &[UnitVector]) -> Vec<C64> {
    set.vectors()
        .iter()
        .map(|row| row.iter().zip(blocks).map(|(f, w)| inner(w.entries(), f.entries())).product())
        .collect()
}

pub fn objective(set: &ConcreteProductSet, blocks: &[UnitVector]) -> f64 {
    overlaps(set, blocks).iter().map(|z| z.norm_sqr()).sum()
}

fn check_blocks(set: &ConcreteProductSet, blocks: &[UnitVector]) -> Result<()> {
    let dims = set.partition().block_dims();
    if blocks.len() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), found: blocks.len() });
    }
    for (b, &d) in blocks.iter().zip(&dims) {
        if b.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
        }
    }
    Ok(())
}

/// Replaces block `j` by the minimal eigenvector of its environment
/// `E_j = Σᵢ |uᵢ⟩⟨uᵢ|`, `uᵢ = φᵢ,ⱼ · Π_{k≠j} ⟨δ_k|φᵢ,ₖ⟩`. Returns the new value.
fn update_block(set: &ConcreteProductSet, blocks: &mut [UnitVector], j: usize, mode: FieldMode) -> f64 {
    let d = blocks[j].dim();
    let mut env = nalgebra::DMatrix::<C64>::zeros(d, d);
    for row in set.vectors() {
        let c: C64 = row
            .iter()
            .zip(blocks.iter())
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, (f, w))| inner(w.entries(), f.entries()))
            .product();
        let f = row[j].entries();
        for a in 0..d {
            let ua = c * f[a];
            for b in 0..d {
                env[(a, b)] += ua * (c * f[b]).conj();
            }
        }
    }
    if mode == FieldMode::Real {
        env.iter_mut().for_each(|z| z.im = 0.0);
    }
    let eig = hermitian_eigen(&HermitianOperator::from_unchecked(env));
    blocks[j] = eig.vector(0);
    eig.values[0].max(0.0)
}

/// Alternating sweeps from `initial` until the relative decrease per sweep
/// drops to `rel_tol` or `max_sweeps` is reached.
pub fn refine_from(
    set: &ConcreteProductSet,
    initial: Vec<UnitVector>,
    mode: FieldMode,
    max_sweeps: usize,
    rel_tol: f64,
) -> Result<AlternatingRun> {
    check_blocks(set, &initial)?;
    let mut blocks = initial;
    let mut trace = vec![objective(set, &blocks)];
    for _ in 0..max_sweeps {
        let mut val = 0.0;
        for j in 0..blocks.len() {
            val = update_block(set, &mut blocks, j, mode);
        }
        let prev = *trace.last().unwrap();
        trace.push(val);
        if val == 0.0 || prev - val <= rel_tol * prev {
            break;
        }
    }
    let value = objective(set, &blocks);
    Ok(AlternatingRun { point: ProductPoint { blocks, value }, trace })
}

/// Uniform random unit vector (complex or real) of dimension `d`.
pub fn random_unit(rng: &mut ChaCha8Rng, d: usize, mode: FieldMode) -> UnitVector {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = if mode == FieldMode::Complex { StandardNormal.sample(rng) } else { 0.0 };
                C64::new(re, im)
            })
            .collect();
        if let Ok(u) = UnitVector::normalized(v) {
            return u;
        }
    }
}

/// Multistart minimization over product vectors of `p`. Start `k` draws its
/// initial blocks from stream `k` of a ChaCha8 generator seeded with `cfg.seed`.
/// The lowest final value wins; ties go to the lowest start index.
pub fn min_overlap_product(set: &ConcreteProductSet, p: &Partition, cfg: &AlternatingConfig) -> Result<AlternatingResult> {
    if cfg.starts == 0 {
        return Err(Error::InvalidArgument("at least one start required".into()));
    }
    let merged = set.merge(p)?;
    let dims = p.block_dims();
    let runs: Vec<(ProductPoint, usize)> = (0..cfg.starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let init = dims.iter().map(|&d| random_unit(&mut rng, d, cfg.mode)).collect();
            let run = refine_from(&merged, init, cfg.mode, cfg.max_sweeps, cfg.rel_tol)?;
            Ok((run.point, run.trace.len() - 1))
        })
        .collect::<Result<_>>()?;
    let start_values: Vec<f64> = runs.iter().map(|(r, _)| r.value).collect();
    let sweeps = runs.iter().map(|(_, s)| s).sum();
    let best_start = start_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    Ok(AlternatingResult {
        partition: p.clone(),
        best: runs[best_start].0.clone(),
        best_start,
        start_values,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uom::{builtin_a, AngleAssignment};

    fn generic() -> ConcreteProductSet {
        let a = builtin_a();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        a.instantiate(&AngleAssignment::random(&a, &mut rng)).unwrap()
    }

    #[test]
    fn sweeps_never_increase() {
        let s = generic();
        let p: Partition = "12|3|4|5|6|7".parse().unwrap();
        let m = s.merge(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [FieldMode::Complex, FieldMode::Real] {
            for _ in 0..10 {
                let init = p.block_dims().iter().map(|&d| random_unit(&mut rng, d, mode)).collect();
                let run = refine_from(&m, init, mode, 300, 0.0).unwrap();
                for w in run.trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn bipartition_reaches_zero() {
        let s = generic();
        let p: Partition = "123|4567".parse().unwrap();
        let cfg = AlternatingConfig { starts: 8, seed: 1, ..Default::default() };
        let r = min_overlap_product(&s, &p, &cfg).unwrap();
        assert!(r.best.value <= 1e-10, "{}", r.best.value);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = generic();
        let p = Partition::singletons(7);
        let cfg = AlternatingConfig { starts: 6, seed: 9, max_sweeps: 200, ..Default::default() };
        let a = min_overlap_product(&s, &p, &cfg).unwrap();
        let b = min_overlap_product(&s, &p, &cfg).unwrap();
        assert_eq!(a.start_values, b.start_values);
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn real_mode_stays_real() {
        let s = generic();
        let p = Partition::singletons(7);
        let cfg = AlternatingConfig { starts: 3, seed: 2, mode: FieldMode::Real, max_sweeps: 100, ..Default::default() };
        let r = min_overlap_product(&s, &p, &cfg).unwrap();
        assert!(r.best.blocks.iter().all(UnitVector::is_real));
    }

    #[test]
    fn zero_starts_rejected() {
        let cfg = AlternatingConfig { starts: 0, ..Default::default() };
        assert!(min_overlap_product(&generic(), &Partition::singletons(7), &cfg).is_err());
    }
}
