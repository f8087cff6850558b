//! Search for a product vector orthogonal to every member of a product set.
//!
//! A block vector on a qubit block is orthogonal to exactly one class of
//! parallel factors, so each qubit block picks one class. Rows left uncovered
//! are split among the larger blocks; a block of dimension `d` can absorb a
//! row set iff their factors span fewer than `d` dimensions. This search is
//! exhaustive: it finds a witness whenever one exists.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::alternating::{min_overlap_product, AlternatingConfig, FieldMode};
use crate::linalg::{complement, inner, null_space, orthogonal_complement, UnitVector, C64};
use crate::partition::Partition;
use crate::product::ConcreteProductSet;
use crate::tolerance::Tolerances;
use crate::{Error, Result};

/// Default node budget.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMethod {
    Structural,
    Refinement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub partition: Partition,
    pub block_vectors: Vec<UnitVector>,
    /// `|⟨w|φᵢ⟩|` per row.
    pub residuals: Vec<f64>,
    /// Block with the smallest local overlap for each row.
    pub covering_block: Vec<usize>,
    pub method: WitnessMethod,
}

impl Witness {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WitnessOutcome {
    Found(Witness),
    /// The structural search visited every branch without a witness.
    Exhausted { nodes: u64 },
}

impl WitnessOutcome {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            WitnessOutcome::Found(w) => Some(w),
            WitnessOutcome::Exhausted { .. } => None,
        }
    }
}

struct Class {
    rows: u32,
    representative: UnitVector,
}

/// Groups rows whose factors on a qubit block are parallel.
fn parallel_classes(set: &ConcreteProductSet, block: usize, tol: f64) -> Vec<Class> {
    let mut classes: Vec<Class> = Vec::new();
    for i in 0..set.len() {
        let f = set.factor(i, block);
        match classes
            .iter_mut()
            .find(|c| 1.0 - inner(c.representative.entries(), f.entries()).norm() <= tol)
        {
            Some(c) => c.rows |= 1 << i,
            None => classes.push(Class { rows: 1 << i, representative: f.clone() }),
        }
    }
    classes.sort_by(|a, b| b.rows.count_ones().cmp(&a.rows.count_ones()).then(a.rows.cmp(&b.rows)));
    classes
}

struct Search<'a> {
    set: &'a ConcreteProductSet,
    qubit_blocks: Vec<usize>,
    classes: Vec<Vec<Class>>,
    big_blocks: Vec<usize>,
    dims: Vec<usize>,
    all_rows: u32,
    tol: Tolerances,
    budget: u64,
    nodes: u64,
    failed_leaves: HashSet<u32>,
    /// Suffix sums of the largest class size per remaining qubit block.
    reach: Vec<u32>,
}

enum Step {
    Found(Vec<usize>, Vec<u32>),
    NotFound,
    OutOfBudget,
}

impl Search<'_> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.nodes <= self.budget
    }

    fn rows_of(&self, mask: u32, block: usize) -> Vec<Vec<C64>> {
        (0..self.set.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.set.factor(i, block).entries().iter().map(|z| z.conj()).collect())
            .collect()
    }

    fn absorbable(&self, mask: u32, block: usize) -> Result<bool> {
        let d = self.dims[block];
        if (mask.count_ones() as usize) < d {
            return Ok(true);
        }
        Ok(!null_space(&self.rows_of(mask, block), d, self.tol.rank)?.is_empty())
    }

    fn dfs(&mut self, depth: usize, covered: u32, choice: &mut Vec<usize>) -> Result<Step> {
        if !self.tick() {
            return Ok(Step::OutOfBudget);
        }
        let uncovered = self.all_rows & !covered;
        if self.big_blocks.is_empty() && uncovered.count_ones() > self.reach[depth] {
            return Ok(Step::NotFound);
        }
        if depth == self.qubit_blocks.len() {
            if self.failed_leaves.contains(&uncovered) {
                return Ok(Step::NotFound);
            }
            let mut assign = vec![0u32; self.big_blocks.len()];
            let rows: Vec<usize> = (0..self.set.len()).filter(|i| uncovered & (1 << i) != 0).collect();
            return match self.assign(&rows, 0, &mut assign)? {
                Step::Found(..) => Ok(Step::Found(choice.clone(), assign)),
                Step::NotFound => {
                    self.failed_leaves.insert(uncovered);
                    Ok(Step::NotFound)
                }
                Step::OutOfBudget => Ok(Step::OutOfBudget),
            };
        }
        for c in 0..self.classes[depth].len() {
            let rows = self.classes[depth][c].rows;
            choice.push(c);
            let r = self.dfs(depth + 1, covered | rows, choice)?;
            choice.pop();
            match r {
                Step::NotFound => {}
                other => return Ok(other),
            }
        }
        Ok(Step::NotFound)
    }

    /// Distributes `rows[k..]` over the big blocks.
    fn assign(&mut self, rows: &[usize], k: usize, assign: &mut [u32]) -> Result<Step> {
        if !self.tick() {
            return Ok(Step::OutOfBudget);
        }
        if k == rows.len() {
            return Ok(Step::Found(Vec::new(), Vec::new()));
        }
        for b in 0..self.big_blocks.len() {
            let trial = assign[b] | (1 << rows[k]);
            if !self.absorbable(trial, self.big_blocks[b])? {
                continue;
            }
            let saved = assign[b];
            assign[b] = trial;
            match self.assign(rows, k + 1, assign)? {
                Step::NotFound => assign[b] = saved,
                other => return Ok(other),
            }
        }
        Ok(Step::NotFound)
    }
}

fn residuals(set: &ConcreteProductSet, blocks: &[UnitVector]) -> (Vec<f64>, Vec<usize>) {
    let mut res = Vec::with_capacity(set.len());
    let mut cover = Vec::with_capacity(set.len());
    for row in set.vectors() {
        let local: Vec<f64> = row.iter().zip(blocks).map(|(f, w)| inner(w.entries(), f.entries()).norm()).collect();
        res.push(local.iter().product());
        let b = local
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        cover.push(b);
    }
    (res, cover)
}

/// Looks for a product vector over `p` orthogonal to all vectors of `set`.
///
/// Returns `Exhausted` when the structural search completes without a
/// witness. If the node budget runs out first, alternating minimization is
/// tried; `BudgetExhausted` is returned when that also fails.
pub fn find_witness(set: &ConcreteProductSet, p: &Partition, budget: u64, tol: &Tolerances) -> Result<WitnessOutcome> {
    if p.len() < 2 {
        return Err(Error::InvalidPartition(format!("{p} has fewer than two blocks")));
    }
    if set.len() > 32 {
        return Err(Error::InvalidArgument("at most 32 vectors supported".into()));
    }
    let merged = set.merge(p)?;
    let dims = p.block_dims();
    let mut qubit_blocks: Vec<usize> = (0..dims.len()).filter(|&b| dims[b] == 2).collect();
    let big_blocks: Vec<usize> = (0..dims.len()).filter(|&b| dims[b] > 2).collect();
    let mut classes: Vec<Vec<Class>> = qubit_blocks.iter().map(|&b| parallel_classes(&merged, b, tol.parallel)).collect();
    // largest classes first
    let mut order: Vec<usize> = (0..qubit_blocks.len()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(classes[k][0].rows.count_ones()));
    qubit_blocks = order.iter().map(|&k| qubit_blocks[k]).collect();
    let mut sorted = Vec::with_capacity(classes.len());
    for &k in &order {
        sorted.push(std::mem::take(&mut classes[k]));
    }
    let classes = sorted;
    let mut reach = vec![0u32; classes.len() + 1];
    for k in (0..classes.len()).rev() {
        reach[k] = reach[k + 1] + classes[k][0].rows.count_ones();
    }

    let mut search = Search {
        set: &merged,
        qubit_blocks,
        classes,
        big_blocks,
        dims: dims.clone(),
        all_rows: if merged.len() == 32 { u32::MAX } else { (1u32 << merged.len()) - 1 },
        tol: *tol,
        budget,
        nodes: 0,
        failed_leaves: HashSet::new(),
        reach,
    };
    let mut choice = Vec::new();
    match search.dfs(0, 0, &mut choice)? {
        Step::Found(choice, assign) => {
            let mut blocks: Vec<Option<UnitVector>> = vec![None; dims.len()];
            for (k, &b) in search.qubit_blocks.iter().enumerate() {
                blocks[b] = Some(complement(&search.classes[k][choice[k]].representative)?);
            }
            for (k, &b) in search.big_blocks.iter().enumerate() {
                let factors: Vec<&[C64]> = (0..merged.len())
                    .filter(|i| assign[k] & (1 << i) != 0)
                    .map(|i| merged.factor(i, b).entries())
                    .collect();
                let ns = orthogonal_complement(&factors, dims[b], tol.rank)?;
                blocks[b] = Some(ns.into_iter().next().ok_or(Error::ZeroVector)?);
            }
            let block_vectors: Vec<UnitVector> = blocks.into_iter().map(|b| b.expect("every block assigned")).collect();
            let (residuals, covering_block) = residuals(&merged, &block_vectors);
            let w = Witness { partition: p.clone(), block_vectors, residuals, covering_block, method: WitnessMethod::Structural };
            if w.max_residual() > tol.witness {
                return Err(Error::InvalidArgument(format!(
                    "structural witness has residual {:e} above tolerance",
                    w.max_residual()
                )));
            }
            Ok(WitnessOutcome::Found(w))
        }
        Step::NotFound => Ok(WitnessOutcome::Exhausted { nodes: search.nodes }),
        Step::OutOfBudget => {
            let cfg = AlternatingConfig { starts: 32, seed: 0, mode: FieldMode::Complex, max_sweeps: 5000, rel_tol: 0.0 };
            let r = min_overlap_product(set, p, &cfg)?;
            let (residuals, covering_block) = residuals(&merged, &r.best.blocks);
            let w = Witness {
                partition: p.clone(),
                block_vectors: r.best.blocks,
                residuals,
                covering_block,
                method: WitnessMethod::Refinement,
            };
            if w.max_residual() <= tol.witness {
                Ok(WitnessOutcome::Found(w))
            } else {
                Err(Error::BudgetExhausted { budget })
            }
        }
    }
}
