//! Determinants of four-row submatrices on a pair of merged columns.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{complement, det4, qubit_from_angle, Angle};
use crate::uom::{SymbolEntry, SymbolicUom};
use crate::{Error, Result};

/// Two columns of a UOM, kept symbolically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSubmatrix {
    pub source: String,
    /// 0-based column indices.
    pub columns: (usize, usize),
    pub rows: Vec<[SymbolEntry; 2]>,
}

pub fn pair_submatrix(u: &SymbolicUom, cols: (usize, usize)) -> Result<PairSubmatrix> {
    let (i, j) = cols;
    if i == j || i >= u.n_cols() || j >= u.n_cols() {
        return Err(Error::InvalidPair(i + 1, j + 1));
    }
    let rows = (0..u.n_rows()).map(|r| [u.entry(r, i), u.entry(r, j)]).collect();
    Ok(PairSubmatrix { source: u.label().to_string(), columns: cols, rows })
}

/// Angles for the symbols of one column pair; missing symbols are an error.
pub trait PairAngles {
    fn angle(&self, e: &SymbolEntry) -> Result<Angle>;
}

impl PairAngles for crate::uom::AngleAssignment {
    fn angle(&self, e: &SymbolEntry) -> Result<Angle> {
        self.get(e.column, e.symbol)
    }
}

fn entry_vector(e: &SymbolEntry, asg: &impl PairAngles) -> Result<[f64; 2]> {
    let v = qubit_from_angle(asg.angle(e)?);
    let v = if e.primed { complement(&v)? } else { v };
    Ok([v.entries()[0].re, v.entries()[1].re])
}

/// Row `r` of the result is `|x_r⟩⊗|y_r⟩` for the two instantiated entries of row `rows[r]`.
pub fn quadruple_matrix(sub: &PairSubmatrix, rows: [usize; 4], asg: &impl PairAngles) -> Result<[[f64; 4]; 4]> {
    let mut m = [[0.0; 4]; 4];
    for (k, &r) in rows.iter().enumerate() {
        let entry = sub
            .rows
            .get(r)
            .ok_or_else(|| Error::InvalidArgument(format!("row {} out of range", r + 1)))?;
        let x = entry_vector(&entry[0], asg)?;
        let y = entry_vector(&entry[1], asg)?;
        m[k] = [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]];
    }
    Ok(m)
}

/// Determinant of rows 1, 3, 5, 11 on columns 1 and 2 of A, where
/// `a1, a2, a3` parameterize `a_{1,1}, a_{4,1}, a_{9,1}` and `b1, b2`
/// parameterize `a_{1,2}, a_{2,2}`.
pub fn closed_form_determinant(a1: f64, a2: f64, a3: f64, b1: f64, b2: f64) -> f64 {
    -0.25
        * ((2.0 * a1 - a2 - a3).cos()
            + 3.0 * (a2 - a3).cos()
            + 2.0 * (2.0 * (b1 - b2)).cos() * (a1 - a2).sin() * (a1 - a3).sin())
}

/// Grid points used by [`find_b2_roots`] and the figure data.
pub const ROOT_GRID: usize = 10_000;

/// Roots in `b2 ∈ [0, 2π)` from sign changes on a uniform grid of
/// [`ROOT_GRID`] points, refined by bisection to 1e-10.
pub fn find_b2_roots(a1: f64, a2: f64, a3: f64, b1: f64) -> Vec<f64> {
    let f = |b2: f64| closed_form_determinant(a1, a2, a3, b1, b2);
    let h = std::f64::consts::TAU / ROOT_GRID as f64;
    let mut roots = Vec::new();
    let mut x0 = 0.0;
    let mut f0 = f(x0);
    for k in 1..=ROOT_GRID {
        let x1 = k as f64 * h;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots.retain(|&r| r < std::f64::consts::TAU);
    roots
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleClassification {
    /// 0-based column pair.
    pub pair: (usize, usize),
    /// Sorted 0-based row quadruples with `|det| <= tolerance` at every sample.
    pub zero_quadruples: Vec<[usize; 4]>,
    pub sample_count: usize,
    pub tolerance: f64,
    pub scanned: usize,
    pub n_rows: usize,
}

fn quadruples(n: usize) -> Vec<[usize; 4]> {
    let mut v = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    v.push([a, b, c, d]);
                }
            }
        }
    }
    v
}

struct SampleAngles(std::collections::BTreeMap<(u8, u16), Angle>);

impl PairAngles for SampleAngles {
    fn angle(&self, e: &SymbolEntry) -> Result<Angle> {
        self.0.get(&e.key()).copied().ok_or(Error::MissingSymbol { symbol: e.symbol, column: e.column })
    }
}

/// A quadruple is identically zero when `|det| <= tol` at each of `samples`
/// independent uniform assignments of the pair's symbols. Sample `k` uses
/// stream `k` of a ChaCha8 generator seeded with `seed`.
pub fn classify_zero_quadruples(sub: &PairSubmatrix, samples: usize, tol: f64, seed: u64) -> Result<QuadrupleClassification> {
    if samples < 10 {
        return Err(Error::InvalidArgument(format!("at least 10 samples required, got {samples}")));
    }
    let mut keys: Vec<(u8, u16)> = sub.rows.iter().flatten().map(SymbolEntry::key).collect();
    keys.sort_unstable();
    keys.dedup();
    let quads = quadruples(sub.rows.len());

    let zero_per_sample: Vec<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let asg = SampleAngles(
                keys.iter()
                    .map(|&key| (key, Angle::new(rng.random_range(0.0..std::f64::consts::TAU)).expect("finite")))
                    .collect(),
            );
            quads
                .iter()
                .map(|&q| quadruple_matrix(sub, q, &asg).map(|m| det4(&m).abs() <= tol))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;

    let zero_quadruples = quads
        .iter()
        .enumerate()
        .filter(|(i, _)| zero_per_sample.iter().all(|s| s[*i]))
        .map(|(_, q)| *q)
        .collect();
    Ok(QuadrupleClassification {
        pair: sub.columns,
        zero_quadruples,
        sample_count: samples,
        tolerance: tol,
        scanned: quads.len(),
        n_rows: sub.rows.len(),
    })
}

/// Five-row sets all of whose four-row subsets are identically zero.
pub fn zero_quintuples(c: &QuadrupleClassification) -> Vec<[usize; 5]> {
    let zero: BTreeSet<[usize; 4]> = c.zero_quadruples.iter().copied().collect();
    let n = c.n_rows;
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for cc in b + 1..n {
                for d in cc + 1..n {
                    for e in d + 1..n {
                        let q = [a, b, cc, d, e];
                        let all = (0..5).all(|skip| {
                            let mut s = [0; 4];
                            let mut k = 0;
                            for (i, &x) in q.iter().enumerate() {
                                if i != skip {
                                    s[k] = x;
                                    k += 1;
                                }
                            }
                            zero.contains(&s)
                        });
                        if all {
                            out.push(q);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Number of five-row sets checked by [`zero_quintuples`] for `n` rows.
pub fn quintuple_count(n: usize) -> usize {
    if n < 5 {
        return 0;
    }
    n * (n - 1) * (n - 2) * (n - 3) * (n - 4) / 120
}
