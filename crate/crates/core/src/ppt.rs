//! The concrete 7-qubit product basis, its complementary state and
//! partial-transpose diagnostics.
//!
//! Global index convention: system `A₁` is the most significant bit, so
//! system `s` (0-based) of `n` lives at bit `n - 1 - s`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{hermitian_eigenvalues, HermitianOperator, UnitVector, C64};
use crate::partition::Partition;
use crate::product::ConcreteProductSet;
use crate::{Error, Result};

/// `(c0·√r0 |0⟩ + c1·√r1 |1⟩) / √s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactQubit {
    pub c0: i32,
    pub r0: u32,
    pub c1: i32,
    pub r1: u32,
    pub s: u32,
}

impl ExactQubit {
    const fn new(c0: i32, r0: u32, c1: i32, r1: u32, s: u32) -> Self {
        ExactQubit { c0, r0, c1, r1, s }
    }

    pub fn to_vector(self) -> UnitVector {
        let s = (self.s as f64).sqrt();
        let a = self.c0 as f64 * (self.r0 as f64).sqrt() / s;
        let b = self.c1 as f64 * (self.r1 as f64).sqrt() / s;
        UnitVector::from_real(&[a, b]).expect("nonzero amplitude")
    }

    /// Exact squared norm as a rational `num / s`; equals 1 for every table entry.
    pub fn norm_sqr_num(self) -> (u64, u64) {
        let num = (self.c0 * self.c0) as u64 * self.r0 as u64 + (self.c1 * self.c1) as u64 * self.r1 as u64;
        (num, self.s as u64)
    }
}

const Z: ExactQubit = ExactQubit::new(1, 1, 0, 1, 1);
const O: ExactQubit = ExactQubit::new(0, 1, 1, 1, 1);
const P: ExactQubit = ExactQubit::new(1, 1, 1, 1, 2);
const M: ExactQubit = ExactQubit::new(1, 1, -1, 1, 2);
const R3A: ExactQubit = ExactQubit::new(1, 1, 1, 2, 3);
const R3B: ExactQubit = ExactQubit::new(1, 2, -1, 1, 3);
const H3A: ExactQubit = ExactQubit::new(1, 1, 1, 3, 4);
const H3B: ExactQubit = ExactQubit::new(1, 3, -1, 1, 4);
const F5A: ExactQubit = ExactQubit::new(1, 1, 2, 1, 5);
const F5B: ExactQubit = ExactQubit::new(2, 1, -1, 1, 5);

/// Factors of the eleven product vectors, one row per vector.
pub const UPB_TABLE: [[ExactQubit; 7]; 11] = [
    [Z, Z, Z, Z, Z, Z, Z],
    [Z, P, P, P, O, P, P],
    [O, P, Z, R3A, P, R3A, R3A],
    [O, Z, P, H3A, R3A, H3A, R3B],
    [P, O, R3A, M, H3A, R3B, H3A],
    [P, O, Z, R3B, F5A, M, H3B],
    [M, R3A, M, F5A, M, O, F5A],
    [M, R3B, M, R3B, F5A, F5A, O],
    [R3A, R3B, O, H3B, H3B, F5B, M],
    [R3A, R3A, O, F5B, R3B, M, H3B],
    [R3B, M, R3B, O, F5B, H3B, F5B],
];

/// The 7-qubit orthonormal product set of size 11 over singleton blocks.
pub fn builtin_upb() -> ConcreteProductSet {
    let vectors = UPB_TABLE.iter().map(|row| row.iter().map(|q| q.to_vector()).collect()).collect();
    ConcreteProductSet::new(Partition::singletons(7), vectors).expect("qubit factors")
}

fn outer_sum(vectors: &[UnitVector], d: usize) -> DMatrix<C64> {
    let mut q = DMatrix::<C64>::zeros(d, d);
    for v in vectors {
        let e = v.entries();
        for i in 0..d {
            if e[i] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                q[(i, j)] += e[i] * e[j].conj();
            }
        }
    }
    q
}

/// `Q = Σᵢ |ψᵢ⟩⟨ψᵢ|` for an orthonormal set.
pub fn projector_from_set(set: &ConcreteProductSet, orth_tol: f64) -> Result<HermitianOperator> {
    set.check_orthonormal(orth_tol)?;
    let q = outer_sum(&set.globals(), set.total_dim());
    Ok(HermitianOperator::from_unchecked(q))
}

/// Hermitian, unit-trace, positive semidefinite operator on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
    n_systems: usize,
}

impl DensityOperator {
    /// Validates trace (1e-12), Hermiticity (`herm_tol`) and `λ_min ≥ -psd_tol`.
    pub fn new(m: DMatrix<C64>, n_systems: usize, herm_tol: f64, psd_tol: f64) -> Result<Self> {
        if m.nrows() != 1 << n_systems {
            return Err(Error::DimensionMismatch { expected: 1 << n_systems, found: m.nrows() });
        }
        let op = HermitianOperator::new(m, herm_tol)?;
        let tr = op.trace();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let lmin = hermitian_eigenvalues(&op)[0];
        if lmin < -psd_tol {
            return Err(Error::InvalidDensity(format!("minimum eigenvalue {lmin:e}")));
        }
        Ok(DensityOperator { op, n_systems })
    }

    pub fn maximally_mixed(n_systems: usize) -> Self {
        let d = 1 << n_systems;
        let m = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
        DensityOperator { op: HermitianOperator::from_unchecked(m), n_systems }
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn n_systems(&self) -> usize {
        self.n_systems
    }

    pub fn trace(&self) -> f64 {
        self.op.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.op)
    }
}

/// `(I - Q) / (d - m)` for an orthonormal product set of `m` vectors in dimension `d`.
pub fn build_state(set: &ConcreteProductSet, orth_tol: f64) -> Result<DensityOperator> {
    let d = set.total_dim();
    let m = set.len();
    if m >= d {
        return Err(Error::TooManyVectors { m, d });
    }
    let q = projector_from_set(set, orth_tol)?;
    let scale = 1.0 / (d - m) as f64;
    let rho = (DMatrix::<C64>::identity(d, d) - q.into_matrix()) * C64::new(scale, 0.0);
    Ok(DensityOperator { op: HermitianOperator::from_unchecked(rho), n_systems: set.partition().n_systems() })
}

/// Subset of systems whose indices are transposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BipartitionCut {
    /// Bit `s` set when system `s` (0-based) is in the subset.
    systems: u32,
    n: usize,
}

impl BipartitionCut {
    pub fn new(systems: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &s in systems {
            if s >= n {
                return Err(Error::InvalidCut(format!("system {} out of range", s + 1)));
            }
            mask |= 1 << s;
        }
        Self::from_mask(mask, n)
    }

    pub fn from_mask(systems: u32, n: usize) -> Result<Self> {
        let full = (1u32 << n) - 1;
        if systems == 0 || systems & full == full || systems & !full != 0 {
            return Err(Error::InvalidCut(format!("subset {systems:#b} must be a non-empty proper subset")));
        }
        Ok(BipartitionCut { systems, n })
    }

    /// The side containing system 1.
    pub fn canonical(self) -> Self {
        if self.systems & 1 == 1 {
            self
        } else {
            BipartitionCut { systems: ((1u32 << self.n) - 1) & !self.systems, n: self.n }
        }
    }

    /// The `2^(n-1) - 1` proper subsets containing system 1.
    pub fn all_canonical(n: usize) -> Vec<Self> {
        (0..1u32 << (n - 1))
            .map(|rest| (rest << 1) | 1)
            .filter(|&m| m != (1u32 << n) - 1)
            .map(|systems| BipartitionCut { systems, n })
            .collect()
    }

    pub fn systems(&self) -> Vec<usize> {
        (0..self.n).filter(|s| self.systems & (1 << s) != 0).collect()
    }

    /// Mask over global index bits.
    fn index_mask(&self) -> usize {
        self.systems().iter().map(|s| 1usize << (self.n - 1 - s)).sum()
    }
}

impl std::fmt::Display for BipartitionCut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in self.systems() {
            write!(f, "{}", s + 1)?;
        }
        Ok(())
    }
}

impl Serialize for BipartitionCut {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Transposes the tensor indices of the systems in `cut`.
pub fn partial_transpose(rho: &DMatrix<C64>, n: usize, cut: BipartitionCut) -> Result<DMatrix<C64>> {
    if cut.n != n || rho.nrows() != 1 << n || rho.ncols() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: rho.nrows() });
    }
    let m = cut.index_mask();
    let d = 1usize << n;
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let i2 = (i & !m) | (j & m);
        let j2 = (j & !m) | (i & m);
        rho[(i2, j2)]
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct CutResult {
    pub cut: BipartitionCut,
    pub lambda_min: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PptReport {
    pub cuts: Vec<CutResult>,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub ppt: bool,
}

/// Minimum eigenvalue of `ρ^Γ` on every canonical cut.
pub fn is_ppt(rho: &DensityOperator, tol: f64) -> Result<PptReport> {
    let n = rho.n_systems();
    let cuts: Vec<CutResult> = BipartitionCut::all_canonical(n)
        .into_par_iter()
        .map(|cut| {
            let pt = partial_transpose(rho.matrix(), n, cut)?;
            let lambda_min = hermitian_eigenvalues(&HermitianOperator::from_unchecked(pt))[0];
            Ok(CutResult { cut, lambda_min })
        })
        .collect::<Result<_>>()?;
    let min_eigenvalue = cuts.iter().map(|c| c.lambda_min).fold(f64::INFINITY, f64::min);
    Ok(PptReport { ppt: min_eigenvalue >= -tol, min_eigenvalue, tolerance: tol, cuts })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub zero_count: usize,
    pub nonzero_count: usize,
    pub nonzero_min: f64,
    pub nonzero_max: f64,
    /// Largest deviation of a sorted eigenvalue from `{0^m, (1/(d-m))^(d-m)}`.
    pub max_deviation_from_ideal: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StateDiagnostics {
    pub trace: f64,
    pub rank: usize,
    pub spectrum_summary: SpectrumSummary,
}

/// Trace, numerical rank (eigenvalues above `rank_tol`) and spectrum summary,
/// compared against `m` zeros and `d - m` copies of `1/(d - m)`.
pub fn diagnostics(rho: &DensityOperator, m: usize, rank_tol: f64) -> StateDiagnostics {
    let ev = rho.eigenvalues();
    let d = ev.len();
    let nonzero: Vec<f64> = ev.iter().copied().filter(|&x| x > rank_tol).collect();
    let level = 1.0 / (d - m.min(d - 1)) as f64;
    let dev = ev
        .iter()
        .enumerate()
        .map(|(k, &x)| if k < m { x.abs() } else { (x - level).abs() })
        .fold(0.0, f64::max);
    StateDiagnostics {
        trace: rho.trace(),
        rank: nonzero.len(),
        spectrum_summary: SpectrumSummary {
            zero_count: d - nonzero.len(),
            nonzero_count: nonzero.len(),
            nonzero_min: nonzero.iter().copied().fold(f64::INFINITY, f64::min),
            nonzero_max: nonzero.iter().copied().fold(0.0, f64::max),
            max_deviation_from_ideal: dev,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;

    fn alpha() -> DensityOperator {
        build_state(&builtin_upb(), 1e-10).unwrap()
    }

    #[test]
    fn table_entries_are_exactly_normalized() {
        for row in UPB_TABLE {
            for q in row {
                let (num, den) = q.norm_sqr_num();
                assert_eq!(num, den);
            }
        }
    }

    #[test]
    fn table_entries() {
        let s = builtin_upb();
        assert_eq!(s.global(0), UnitVector::basis(128, 0).unwrap());
        assert_eq!(s.factor(10, 3), &UnitVector::basis(2, 1).unwrap());
        assert!(s.orthonormality_error() <= 1e-10);
        assert!(s.factor_norm_error() <= 1e-12);
        let r3a = s.factor(2, 3).entries();
        assert!((r3a[0].re - 1.0 / 3f64.sqrt()).abs() <= 1e-15);
        assert!((r3a[1].re - (2.0f64 / 3.0).sqrt()).abs() <= 1e-15);
    }

    #[test]
    fn projector_properties() {
        let s = builtin_upb();
        let q = projector_from_set(&s, 1e-10).unwrap();
        assert!((q.trace() - 11.0).abs() <= 1e-10);
        let qm = q.matrix();
        let err = (qm * qm - qm).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-10);
        let phi3 = s.global(2);
        let v = nalgebra::DVector::from_column_slice(phi3.entries());
        let diff = (qm * &v - &v).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-10);
    }

    #[test]
    fn projector_rejects_non_orthonormal() {
        let s = builtin_upb();
        let mut rows = s.vectors().to_vec();
        rows[1] = rows[0].clone();
        let bad = ConcreteProductSet::new(Partition::singletons(7), rows).unwrap();
        assert!(matches!(projector_from_set(&bad, 1e-10), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn alpha_spectrum() {
        let a = alpha();
        assert!((a.trace() - 1.0).abs() <= 1e-12);
        let d = diagnostics(&a, 11, 1e-9);
        assert_eq!(d.rank, 117);
        assert!(d.spectrum_summary.max_deviation_from_ideal <= 1e-12);
        let phi5 = builtin_upb().global(4);
        let v = nalgebra::DVector::from_column_slice(phi5.entries());
        assert!((a.matrix() * v).iter().all(|z| z.norm() <= 1e-10));
    }

    #[test]
    fn too_many_vectors() {
        let z = UnitVector::basis(2, 0).unwrap();
        let o = UnitVector::basis(2, 1).unwrap();
        let s = ConcreteProductSet::new(Partition::singletons(1), vec![vec![z], vec![o]]).unwrap();
        assert!(matches!(build_state(&s, 1e-10), Err(Error::TooManyVectors { m: 2, d: 2 })));
    }

    #[test]
    fn partial_transpose_is_an_involution() {
        let a = alpha();
        for cut in [BipartitionCut::new(&[0], 7).unwrap(), BipartitionCut::new(&[1, 4, 6], 7).unwrap()] {
            let once = partial_transpose(a.matrix(), 7, cut).unwrap();
            let twice = partial_transpose(&once, 7, cut).unwrap();
            assert_eq!(&twice, a.matrix());
            let tr: f64 = once.diagonal().iter().map(|z| z.re).sum();
            assert!((tr - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn partial_transpose_of_product_state() {
        // σ_A ⊗ σ_B on one qubit each, with complex σ_A
        let sa = DMatrix::from_row_slice(2, 2, &[C64::new(0.6, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.4, 0.0)]);
        let sb = DMatrix::from_row_slice(2, 2, &[C64::new(0.3, 0.0), C64::new(0.0, 0.1), C64::new(0.0, -0.1), C64::new(0.7, 0.0)]);
        let rho = sa.kronecker(&sb);
        let pt = partial_transpose(&rho, 2, BipartitionCut::new(&[0], 2).unwrap()).unwrap();
        assert_eq!(pt, sa.transpose().kronecker(&sb));
        let ev = hermitian_eigen(&HermitianOperator::new(pt, 1e-12).unwrap()).values;
        assert!(ev[0] >= -1e-12);
    }

    #[test]
    fn cuts() {
        assert_eq!(BipartitionCut::all_canonical(7).len(), 63);
        assert!(BipartitionCut::new(&[], 7).is_err());
        assert!(BipartitionCut::new(&[0, 1, 2, 3, 4, 5, 6], 7).is_err());
        let c = BipartitionCut::new(&[1, 2], 7).unwrap().canonical();
        assert_eq!(c.to_string(), "14567");
    }

    #[test]
    fn maximally_mixed_is_ppt() {
        let r = is_ppt(&DensityOperator::maximally_mixed(7), 1e-10).unwrap();
        assert!(r.ppt);
        assert!(r.cuts.iter().all(|c| (c.lambda_min - 1.0 / 128.0).abs() < 1e-15));
    }

    #[test]
    fn bell_state_is_npt() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = UnitVector::from_real(&[h, 0.0, 0.0, h]).unwrap();
        let b = HermitianOperator::projector(&bell).into_matrix();
        let rest = DMatrix::<C64>::identity(32, 32) / C64::new(32.0, 0.0);
        let rho = DensityOperator::new(b.kronecker(&rest), 7, 1e-12, 1e-10).unwrap();
        let r = is_ppt(&rho, 1e-10).unwrap();
        assert!(!r.ppt);
        let first = r.cuts.iter().find(|c| c.cut.to_string() == "1").unwrap();
        assert!((first.lambda_min + 0.5 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_is_ppt() {
        let r = is_ppt(&alpha(), 1e-10).unwrap();
        assert_eq!(r.cuts.len(), 63);
        assert!(r.ppt, "{}", r.min_eigenvalue);
    }
}
