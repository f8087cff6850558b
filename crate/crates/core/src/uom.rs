//! Symbolic unextendible orthogonal matrices.
//!
//! An entry `a_{i,j}` names a qubit vector scoped to column `j`; its primed
//! form `a_{i,j}'` is the orthogonal partner. Rows and columns are 0-based in
//! the API and 1-based in text.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{complement, qubit_from_angle, Angle};
use crate::partition::Partition;
use crate::product::ConcreteProductSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolEntry {
    /// Column (system) that scopes the symbol, 1-based as in `a_{i,j}`.
    pub column: u8,
    pub symbol: u16,
    pub primed: bool,
}

impl SymbolEntry {
    pub fn key(&self) -> (u8, u16) {
        (self.column, self.symbol)
    }

    /// Same symbol with opposite prime.
    pub fn clashes_with(&self, other: &SymbolEntry) -> bool {
        self.key() == other.key() && self.primed != other.primed
    }
}

impl fmt::Display for SymbolEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{},{}{}", self.symbol, self.column, if self.primed { "'" } else { "" })
    }
}

impl FromStr for SymbolEntry {
    type Err = String;
    fn from_str(tok: &str) -> std::result::Result<Self, String> {
        let body = tok.strip_prefix('a').ok_or_else(|| format!("entry {tok:?} must start with 'a'"))?;
        let (body, primed) = match body.strip_suffix('\'') {
            Some(b) => (b, true),
            None => (body, false),
        };
        let (sym, col) = body.split_once(',').ok_or_else(|| format!("entry {tok:?} lacks ','"))?;
        let symbol: u16 = sym.parse().map_err(|_| format!("bad symbol index in {tok:?}"))?;
        let column: u8 = col.parse().map_err(|_| format!("bad column in {tok:?}"))?;
        if column == 0 {
            return Err(format!("column must be >= 1 in {tok:?}"));
        }
        Ok(SymbolEntry { column, symbol, primed })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicUom {
    rows: Vec<Vec<SymbolEntry>>,
    label: String,
}

const A_TEXT: &str = "\
a1,1 a1,2 a1,3 a1,4 a1,5 a1,6 a1,7
a1,1 a2,2 a2,3 a2,4 a1,5' a2,6 a2,7
a1,1' a2,2 a1,3 a3,4 a3,5 a3,6 a3,7
a1,1' a1,2 a2,3 a4,4 a4,5 a4,6 a3,7'
a4,1 a1,2' a5,3 a2,4' a5,5 a3,6' a5,7
a4,1 a1,2' a1,3 a3,4' a6,5 a2,6' a5,7'
a4,1' a7,2 a2,3' a7,4 a3,5' a1,6' a7,7
a4,1' a7,2' a2,3' a3,4' a6,5 a8,6 a1,7'
a9,1 a7,2' a1,3' a4,4' a5,5' a8,6' a2,7'
a9,1 a7,2 a1,3' a7,4' a4,5' a2,6' a5,7'
a9,1' a2,2' a5,3' a1,4' a6,5' a4,6' a7,7'
";

const A_TILDE_TEXT: &str = "\
a1,3 a1,1 a1,2 a1,4 a1,5 a1,6 a1,7
a1,3 a1,1' a2,2 a3,4 a3,5 a3,6 a3,7
a1,3 a4,1 a1,2' a3,4' a6,5 a2,6' a5,7'
a1,3' a9,1 a7,2' a4,4' a5,5' a8,6' a2,7'
a1,3' a9,1 a7,2 a7,4' a4,5' a2,6' a5,7'
a2,3 a1,1' a1,2 a4,4 a4,5 a4,6 a3,7'
a2,3 a1,1 a2,2 a2,4 a1,5' a2,6 a2,7
a2,3' a4,1' a7,2 a7,4 a3,5' a1,6' a7,7
a2,3' a4,1' a7,2' a3,4' a6,5 a8,6 a1,7'
a5,3 a4,1 a1,2' a2,4' a5,5 a3,6' a5,7
a5,3' a9,1' a2,2' a1,4' a6,5' a4,6' a7,7'
";

/// Column order of Ã in terms of A's columns (1-based).
pub const A_TILDE_COLUMNS: [usize; 7] = [3, 1, 2, 4, 5, 6, 7];
/// Row `k` of Ã is row `A_TILDE_ROWS[k]` of A (1-based).
pub const A_TILDE_ROWS: [usize; 11] = [1, 3, 6, 9, 10, 4, 2, 7, 8, 5, 11];

pub fn builtin_a() -> SymbolicUom {
    SymbolicUom::parse(A_TEXT, "A").expect("built-in grid")
}

pub fn builtin_a_tilde() -> SymbolicUom {
    SymbolicUom::parse(A_TILDE_TEXT, "A-tilde").expect("built-in grid")
}

impl SymbolicUom {
    /// Rows must have equal length and each column must use a single scope.
    pub fn new(rows: Vec<Vec<SymbolEntry>>, label: impl Into<String>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width == 0 {
            return Err(Error::Parse { line: 0, message: "empty matrix".into() });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::Parse { line: i + 1, message: format!("expected {width} entries, found {}", r.len()) });
            }
            for (j, e) in r.iter().enumerate() {
                if e.column != rows[0][j].column {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("entry {e} in a column scoped to {}", rows[0][j].column),
                    });
                }
            }
        }
        Ok(SymbolicUom { rows, label: label.into() })
    }

    /// Whitespace-separated entries, one row per line; `#` starts a comment.
    pub fn parse(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut rows = Vec::new();
        let mut first_line = 0;
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if rows.is_empty() {
                first_line = ln;
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<SymbolEntry>().map_err(|message| Error::Parse { line: ln + 1, message }))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        SymbolicUom::new(rows, label).map_err(|e| match e {
            Error::Parse { line, message } if line > 0 => Error::Parse { line: line + first_line, message },
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(ToString::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rows(&self) -> &[Vec<SymbolEntry>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn entry(&self, row: usize, col: usize) -> SymbolEntry {
        self.rows[row][col]
    }

    /// Reorders columns and rows; `cols[k]` and `rows[k]` are 0-based source indices.
    pub fn permuted(&self, cols: &[usize], rows: &[usize], label: impl Into<String>) -> Result<Self> {
        let grid = rows
            .iter()
            .map(|&r| cols.iter().map(|&c| self.rows[r][c]).collect())
            .collect();
        SymbolicUom::new(grid, label)
    }

    /// Every distinct `(column, symbol)` key.
    pub fn symbols(&self) -> Vec<(u8, u16)> {
        let mut v: Vec<_> = self.rows.iter().flatten().map(SymbolEntry::key).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Rows of each signed symbol in column `col`.
    pub fn multiplicity_profile(&self, col: usize) -> Result<BTreeMap<(u16, bool), Vec<usize>>> {
        if col >= self.n_cols() {
            return Err(Error::InvalidArgument(format!("column {} out of range", col + 1)));
        }
        let mut m: BTreeMap<(u16, bool), Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            m.entry((r[col].symbol, r[col].primed)).or_default().push(i);
        }
        Ok(m)
    }

    /// Row pairs without a clashing column. Empty for a valid UOM.
    pub fn verify_symbolic_orthogonality(&self) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for i in 0..self.n_rows() {
            for j in i + 1..self.n_rows() {
                if !self.rows[i].iter().zip(&self.rows[j]).any(|(a, b)| a.clashes_with(b)) {
                    bad.push((i, j));
                }
            }
        }
        bad
    }

    /// Product vectors over singleton blocks, one per column in positional order.
    pub fn instantiate(&self, asg: &AngleAssignment) -> Result<ConcreteProductSet> {
        let mut vectors = Vec::with_capacity(self.n_rows());
        for r in &self.rows {
            let mut row = Vec::with_capacity(r.len());
            for e in r {
                let t = asg.get(e.column, e.symbol)?;
                let v = qubit_from_angle(t);
                row.push(if e.primed { complement(&v)? } else { v });
            }
            vectors.push(row);
        }
        ConcreteProductSet::new(Partition::singletons(self.n_cols()), vectors)
    }
}

impl fmt::Display for SymbolicUom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Angles for the symbols of a UOM, keyed by `(column, symbol)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AngleAssignment {
    angles: BTreeMap<(u8, u16), Angle>,
}

impl AngleAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Uniform angles on `[0, 2π)` for every symbol of `u`, drawn in key order.
    pub fn random<R: Rng + ?Sized>(u: &SymbolicUom, rng: &mut R) -> Self {
        let mut asg = Self::new();
        for (c, s) in u.symbols() {
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            asg.angles.insert((c, s), Angle::new(t).expect("finite"));
        }
        asg
    }

    pub fn constant(u: &SymbolicUom, t: Angle) -> Self {
        AngleAssignment { angles: u.symbols().into_iter().map(|k| (k, t)).collect() }
    }

    pub fn set(&mut self, column: u8, symbol: u16, t: Angle) -> &mut Self {
        self.angles.insert((column, symbol), t);
        self
    }

    pub fn get(&self, column: u8, symbol: u16) -> Result<Angle> {
        self.angles.get(&(column, symbol)).copied().ok_or(Error::MissingSymbol { symbol, column })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// All unordered pairs `(i, j)`, `i < j`, of `n` systems.
pub fn enumerate_merge_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            v.push((i, j));
        }
    }
    v
}
