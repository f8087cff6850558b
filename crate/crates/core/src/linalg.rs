//! Small dense linear algebra over `Complex64`.
//!
//! Index convention for tensor products: the first factor is the slowest
//! (most significant) index, so `|a⟩⊗|b⟩` has entry `a[i]·b[j]` at `i·dim(b)+j`.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;

const NORM_TOL: f64 = 1e-12;

/// Real angle in radians, reduced into `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFiniteAngle(value));
        }
        let mut v = value.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs.
        if v >= TAU {
            v = 0.0;
        }
        Ok(Angle(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Angle::new(v)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Normalized complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector {
    entries: Vec<C64>,
}

impl UnitVector {
    /// Accepts `entries` only if their norm is 1 within 1e-12.
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let n = norm(&entries);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(UnitVector { entries })
    }

    /// Rescales `entries` to unit norm.
    pub fn normalized(mut entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let n = norm(&entries);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        for z in &mut entries {
            *z /= n;
        }
        Ok(UnitVector { entries })
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::normalized(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Standard basis vector `e_index` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index + 1 });
        }
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[index] = C64::new(1.0, 0.0);
        Ok(UnitVector { entries: e })
    }

    pub(crate) fn from_unchecked(entries: Vec<C64>) -> Self {
        UnitVector { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &UnitVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(inner(&self.entries, &other.entries))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector { entries: self.entries.iter().map(|z| -z).collect() }
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// `(sin t, cos t)`.
pub fn qubit_from_angle(t: Angle) -> UnitVector {
    let (s, c) = t.value().sin_cos();
    UnitVector { entries: vec![C64::new(s, 0.0), C64::new(c, 0.0)] }
}

/// Orthogonal partner of a qubit vector: `(a, b) ↦ (−b*, a*)`.
pub fn complement(v: &UnitVector) -> Result<UnitVector> {
    if v.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: v.dim() });
    }
    let (a, b) = (v.entries[0], v.entries[1]);
    Ok(UnitVector { entries: vec![-b.conj(), a.conj()] })
}

pub fn tensor(factors: &[UnitVector]) -> Result<UnitVector> {
    let (first, rest) = factors.split_first().ok_or(Error::EmptyProduct)?;
    let mut acc = first.entries.clone();
    for f in rest {
        acc = kron(&acc, &f.entries);
    }
    Ok(UnitVector { entries: acc })
}

/// Square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates Hermiticity within `tol` and symmetrizes the stored copy.
    pub fn new(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        let dev = hermitian_deviation(&m)?;
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        let adj = m.adjoint();
        let sym = (m + adj) * C64::new(0.5, 0.0);
        Ok(HermitianOperator { m: sym })
    }

    pub(crate) fn from_unchecked(m: DMatrix<C64>) -> Self {
        HermitianOperator { m }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator { m: DMatrix::identity(dim, dim) }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &UnitVector) -> Self {
        let d = v.dim();
        let e = v.entries();
        HermitianOperator { m: DMatrix::from_fn(d, d, |i, j| e[i] * e[j].conj()) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == 0.0)
    }

    /// `⟨v|H|v⟩`, real for Hermitian `H`.
    pub fn expectation(&self, v: &UnitVector) -> Result<f64> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.dim() });
        }
        let e = v.entries();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..e.len() {
            let mut row = C64::new(0.0, 0.0);
            for (j, ej) in e.iter().enumerate() {
                row += self.m[(i, j)] * ej;
            }
            acc += e[i].conj() * row;
        }
        Ok(acc.re)
    }
}

/// Max-norm distance between `m` and its conjugate transpose.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    Ok(dev)
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> UnitVector {
        UnitVector::from_unchecked(self.vectors.column(k).iter().copied().collect())
    }
}

pub fn hermitian_eigen(h: &HermitianOperator) -> Eigen {
    let (values, vectors) = if h.is_real() {
        let re = h.m.map(|z| z.re);
        let se = SymmetricEigen::new(re);
        (se.eigenvalues.iter().copied().collect::<Vec<_>>(), se.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let se = SymmetricEigen::new(h.m.clone());
        (se.eigenvalues.iter().copied().collect::<Vec<_>>(), se.eigenvectors)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps the solver's order among exact ties.
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let n = values.len();
    let sorted = order.iter().map(|&k| values[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Eigen { values: sorted, vectors: vecs }
}

/// Ascending eigenvalues without eigenvectors.
pub fn hermitian_eigenvalues(h: &HermitianOperator) -> Vec<f64> {
    let mut v: Vec<f64> = if h.is_real() {
        h.m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        h.m.symmetric_eigenvalues().iter().copied().collect()
    };
    v.sort_by(f64::total_cmp);
    v
}

fn det3(m: &[[f64; 4]; 4], r: [usize; 3], c: [usize; 3]) -> f64 {
    let a = |i: usize, j: usize| m[r[i]][c[j]];
    a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
}

/// Determinant by cofactor expansion along the first row.
pub fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let rows = [1, 2, 3];
    let cols = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    let mut d = 0.0;
    for (j, c) in cols.iter().enumerate() {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        d += s * m[0][j] * det3(m, rows, *c);
    }
    d
}

/// Orthonormal basis of `{x : M x = 0}` for the `k × d` matrix whose rows are `rows`.
///
/// A singular value counts as zero when it is at most `rank_tol · max(1, σ_max)`.
pub fn null_space(rows: &[Vec<C64>], d: usize, rank_tol: f64) -> Result<Vec<UnitVector>> {
    if d == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    for r in rows {
        if r.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: r.len() });
        }
    }
    if rows.is_empty() {
        return (0..d).map(|i| UnitVector::basis(d, i)).collect();
    }
    // Pad to at least d rows so the SVD returns a full d×d V†.
    let k = rows.len().max(d);
    let m = DMatrix::from_fn(k, d, |i, j| if i < rows.len() { rows[i][j] } else { C64::new(0.0, 0.0) });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("SVD requested V^T");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = rank_tol * smax.max(1.0);
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cut {
            let v: Vec<C64> = vt.row(i).iter().map(|z| z.conj()).collect();
            out.push(UnitVector::normalized(v)?);
        }
    }
    Ok(out)
}

/// Orthonormal basis of the vectors `w` with `⟨v|w⟩ = 0` for every `v` in `vectors`.
pub fn orthogonal_complement(vectors: &[&[C64]], d: usize, rank_tol: f64) -> Result<Vec<UnitVector>> {
    let rows: Vec<Vec<C64>> = vectors.iter().map(|v| v.iter().map(|z| z.conj()).collect()).collect();
    null_space(&rows, d, rank_tol)
}

/// Numerical rank of the row set, using the same threshold as [`null_space`].
pub fn rank(rows: &[Vec<C64>], d: usize, rank_tol: f64) -> Result<usize> {
    Ok(d - null_space(rows, d, rank_tol)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> UnitVector {
        let v: Vec<C64> = (0..d).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        UnitVector::normalized(v).unwrap()
    }

    fn a(t: f64) -> Angle {
        Angle::new(t).unwrap()
    }

    #[test]
    fn angle_canonicalizes() {
        assert_eq!(a(0.0).value(), 0.0);
        assert!((a(-1.0).value() - (TAU - 1.0)).abs() < 1e-15);
        assert!((a(7.0).value() - (7.0 - TAU)).abs() < 1e-15);
        assert!(a(-1e-300).value() < TAU);
        assert!(Angle::new(f64::NAN).is_err());
        assert!(Angle::new(f64::INFINITY).is_err());
    }

    #[test]
    fn qubit_examples() {
        let v = qubit_from_angle(a(0.0));
        assert_eq!(v.entries(), &[c(0.0), c(1.0)]);
        let v = qubit_from_angle(a(std::f64::consts::FRAC_PI_2));
        assert!((v.entries()[0] - c(1.0)).norm() < 1e-16);
        assert!(v.entries()[1].norm() < 1e-16);
        let v = qubit_from_angle(a(2.4));
        assert_eq!(v.entries(), &[c(2.4f64.sin()), c(2.4f64.cos())]);
    }

    #[test]
    fn complement_examples() {
        let e = UnitVector::from_real(&[0.0, 1.0]).unwrap();
        assert_eq!(complement(&e).unwrap().entries(), &[c(-1.0), c(0.0)]);
        let t = 1.3f64;
        let v = qubit_from_angle(a(t));
        let w = complement(&v).unwrap();
        assert_eq!(w.entries(), &[c(-t.cos()), c(t.sin())]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unit(&mut rng, 2);
        assert_eq!(complement(&complement(&u).unwrap()).unwrap(), u.neg());
        assert!(complement(&UnitVector::basis(4, 0).unwrap()).is_err());
    }

    #[test]
    fn tensor_examples() {
        let z = UnitVector::basis(2, 0).unwrap();
        assert_eq!(tensor(&[z.clone(), z.clone()]).unwrap(), UnitVector::basis(4, 0).unwrap());
        let t = tensor(&vec![z.clone(); 7]).unwrap();
        assert_eq!(t.dim(), 128);
        assert_eq!(t, UnitVector::basis(128, 0).unwrap());
        assert!(matches!(tensor(&[]), Err(Error::EmptyProduct)));
        // first factor is the slowest index
        let o = UnitVector::basis(2, 1).unwrap();
        assert_eq!(tensor(&[o, z]).unwrap(), UnitVector::basis(4, 2).unwrap());
    }

    #[test]
    fn eigen_examples() {
        let e = hermitian_eigen(&HermitianOperator::identity(4));
        assert_eq!(e.values, vec![1.0; 4]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_unit(&mut rng, 5);
        let e = hermitian_eigen(&HermitianOperator::projector(&v));
        assert!((e.values[4] - 1.0).abs() < 1e-12);
        for x in &e.values[..4] {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [1usize, 2, 7, 16, 33] {
            let r = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let h = HermitianOperator::new(&r + r.adjoint(), 1e-12).unwrap();
            let e = hermitian_eigen(&h);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, e.values.iter().map(|&x| c(x))));
            let rec = &e.vectors * lam * e.vectors.adjoint();
            let err = (rec - h.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-9 * d as f64, "d={d} err={err}");
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = DMatrix::<C64>::identity(3, 3);
        m[(0, 1)] = c(0.5);
        assert!(matches!(HermitianOperator::new(m, 1e-12), Err(Error::NotHermitian(_))));
        assert!(matches!(
            HermitianOperator::new(DMatrix::<C64>::zeros(2, 3), 1e-12),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn det4_examples() {
        let mut id = [[0.0; 4]; 4];
        for (i, r) in id.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        assert_eq!(det4(&id), 1.0);
        let m = [[1.0, 2.0, 3.0, 4.0], [0.5, -1.0, 2.0, 0.0], [1.0, 2.0, 3.0, 4.0], [9.0, 1.0, 1.0, 1.0]];
        assert_eq!(det4(&m), 0.0);
    }

    fn det_by_permutations(m: &[[f64; 4]; 4]) -> f64 {
        let mut total = 0.0;
        let idx = [0usize, 1, 2, 3];
        for p0 in idx {
            for p1 in idx {
                for p2 in idx {
                    for p3 in idx {
                        let p = [p0, p1, p2, p3];
                        let mut seen = [false; 4];
                        if p.iter().any(|&x| std::mem::replace(&mut seen[x], true)) {
                            continue;
                        }
                        let mut inv = 0;
                        for i in 0..4 {
                            for j in i + 1..4 {
                                if p[i] > p[j] {
                                    inv += 1;
                                }
                            }
                        }
                        let s = if inv % 2 == 0 { 1.0 } else { -1.0 };
                        total += s * m[0][p[0]] * m[1][p[1]] * m[2][p[2]] * m[3][p[3]];
                    }
                }
            }
        }
        total
    }

    #[test]
    fn det4_matches_permutation_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let mut m = [[0.0; 4]; 4];
            for r in m.iter_mut() {
                for x in r.iter_mut() {
                    *x = rng.random_range(-2.0..2.0);
                }
            }
            let (a, b) = (det4(&m), det_by_permutations(&m));
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn null_space_examples() {
        let ns = null_space(&[], 5, 1e-9).unwrap();
        assert_eq!(ns.len(), 5);
        assert_eq!(ns[3], UnitVector::basis(5, 3).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<C64>> = (0..3).map(|_| random_unit(&mut rng, 4).into_entries()).collect();
        let ns = null_space(&rows, 4, 1e-9).unwrap();
        assert_eq!(ns.len(), 1);
        for r in &rows {
            let mx: C64 = r.iter().zip(ns[0].entries()).map(|(a, b)| a * b).sum();
            assert!(mx.norm() < 1e-10);
        }
        let refs: Vec<&[C64]> = rows.iter().map(|r| r.as_slice()).collect();
        let oc = orthogonal_complement(&refs, 4, 1e-9).unwrap();
        assert_eq!(oc.len(), 1);
        for r in &rows {
            assert!(inner(r, oc[0].entries()).norm() < 1e-10);
        }

        // rank-deficient: duplicated row
        let rows2 = vec![rows[0].clone(), rows[0].clone(), rows[1].clone()];
        assert_eq!(null_space(&rows2, 4, 1e-9).unwrap().len(), 2);
        assert_eq!(rank(&rows2, 4, 1e-9).unwrap(), 2);

        // more rows than columns
        let rows3: Vec<Vec<C64>> = (0..6).map(|_| random_unit(&mut rng, 4).into_entries()).collect();
        assert!(null_space(&rows3, 4, 1e-9).unwrap().is_empty());
        assert!(null_space(&[vec![c(1.0)]], 2, 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn qubit_complement_orthogonal(t in -100.0f64..100.0) {
            let v = qubit_from_angle(a(t));
            let w = complement(&v).unwrap();
            prop_assert!(v.inner(&w).unwrap().norm() <= 1e-15);
        }

        #[test]
        fn tensor_norm_multiplicative(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut raw = Vec::new();
            let mut expect = 1.0;
            for _ in 0..n {
                let d = rng.random_range(1..4usize);
                let v: Vec<C64> = (0..d).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                expect *= norm(&v);
                raw.push(v);
            }
            let mut acc = raw[0].clone();
            for v in &raw[1..] {
                acc = kron(&acc, v);
            }
            prop_assert!((norm(&acc) - expect).abs() <= 1e-12 * expect.max(1.0));
        }

        #[test]
        fn projector_spectrum_is_binary(seed in any::<u64>(), d in 2usize..9, k in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = k.min(d);
            let cols: Vec<Vec<C64>> = (0..d).map(|_| random_unit(&mut rng, d).into_entries()).collect();
            let m = DMatrix::from_fn(d, d, |i, j| cols[j][i]);
            let q = m.qr().q();
            let mut p = DMatrix::<C64>::zeros(d, d);
            for j in 0..k {
                let v = q.column(j);
                p += v * v.adjoint();
            }
            let e = hermitian_eigen(&HermitianOperator::new(p, 1e-12).unwrap());
            for x in e.values {
                prop_assert!(x.abs() <= 1e-9 || (x - 1.0).abs() <= 1e-9);
            }
        }
    }
}
