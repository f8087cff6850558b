//! Geometric measure of entanglement of the state `(I - Q)/(d - m)`.
//!
//! Minimizing `⟨δ|Q|δ⟩` over product vectors `δ = δ₁⊗…⊗δₙ` with
//! `δₛ = (sin υₛ, cos υₛ)` gives `q*`, and `G = -log₂((1 - q*)/(d - m))`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::alternating::{min_overlap_product, AlternatingConfig};
use crate::linalg::{Angle, HermitianOperator, UnitVector, C64};
use crate::partition::Partition;
use crate::product::ConcreteProductSet;
use crate::{Error, Result};

/// How product vectors are parameterized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    /// `(sin υ, cos υ)` per qubit; `n` parameters.
    #[default]
    Real,
    /// `(sin υ, e^{iθ} cos υ)` per qubit; parameters `[υ₁..υₙ, θ₁..θₙ]`.
    ComplexPhase,
}

#[derive(Clone, Debug)]
enum Source {
    /// `rows[i][s]` is factor `s` of product vector `i`.
    Factored(Vec<Vec<[C64; 2]>>),
    Dense(DMatrix<C64>),
}

/// `x ↦ ⟨δ(x)|Q|δ(x)⟩` for qubit product vectors `δ(x)`.
#[derive(Clone, Debug)]
pub struct ProductObjective {
    source: Source,
    n: usize,
    param: Parameterization,
}

fn factor(x: &[f64], s: usize, n: usize, param: Parameterization) -> [C64; 2] {
    let (sn, cs) = x[s].sin_cos();
    match param {
        Parameterization::Real => [C64::new(sn, 0.0), C64::new(cs, 0.0)],
        Parameterization::ComplexPhase => [C64::new(sn, 0.0), C64::from_polar(cs, x[n + s])],
    }
}

/// Derivative of factor `s` with respect to parameter `k` (which belongs to `s`).
fn dfactor(x: &[f64], s: usize, n: usize, param: Parameterization, phase: bool) -> [C64; 2] {
    let (sn, cs) = x[s].sin_cos();
    match (param, phase) {
        (Parameterization::Real, _) => [C64::new(cs, 0.0), C64::new(-sn, 0.0)],
        (Parameterization::ComplexPhase, false) => [C64::new(cs, 0.0), C64::from_polar(-sn, x[n + s])],
        (Parameterization::ComplexPhase, true) => {
            [C64::new(0.0, 0.0), C64::from_polar(cs, x[n + s]) * C64::new(0.0, 1.0)]
        }
    }
}

fn dot2(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn kron_all(fs: &[[C64; 2]]) -> Vec<C64> {
    let mut acc = vec![C64::new(1.0, 0.0)];
    for f in fs {
        let mut next = Vec::with_capacity(acc.len() * 2);
        for a in &acc {
            next.push(a * f[0]);
            next.push(a * f[1]);
        }
        acc = next;
    }
    acc
}

impl ProductObjective {
    /// Evaluates through the factors of a qubit product set.
    pub fn from_set(set: &ConcreteProductSet, param: Parameterization) -> Result<Self> {
        if set.partition().block_dims().iter().any(|&d| d != 2) {
            return Err(Error::InvalidPartition(format!("{} is not a qubit partition", set.partition())));
        }
        let canon = set.merge(&Partition::singletons(set.partition().n_systems()))?;
        let rows = canon
            .vectors()
            .iter()
            .map(|r| r.iter().map(|f| [f.entries()[0], f.entries()[1]]).collect())
            .collect();
        Ok(ProductObjective { source: Source::Factored(rows), n: set.partition().n_systems(), param })
    }

    /// Evaluates through a dense operator on `n` qubits.
    pub fn from_operator(q: &HermitianOperator, n: usize, param: Parameterization) -> Result<Self> {
        if q.dim() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: q.dim() });
        }
        Ok(ProductObjective { source: Source::Dense(q.matrix().clone()), n, param })
    }

    pub fn n_systems(&self) -> usize {
        self.n
    }

    pub fn parameterization(&self) -> Parameterization {
        self.param
    }

    pub fn n_params(&self) -> usize {
        match self.param {
            Parameterization::Real => self.n,
            Parameterization::ComplexPhase => 2 * self.n,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), found: x.len() });
        }
        Ok(())
    }

    fn factors(&self, x: &[f64]) -> Vec<[C64; 2]> {
        (0..self.n).map(|s| factor(x, s, self.n, self.param)).collect()
    }

    /// The product vector `δ(x)` in the global basis.
    pub fn product_vector(&self, x: &[f64]) -> Result<UnitVector> {
        self.check(x)?;
        UnitVector::normalized(kron_all(&self.factors(x)))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let fs = self.factors(x);
        Ok(match &self.source {
            Source::Factored(rows) => rows
                .iter()
                .map(|r| r.iter().zip(&fs).map(|(p, d)| dot2(p, d)).product::<C64>().norm_sqr())
                .sum(),
            Source::Dense(q) => {
                let v = nalgebra::DVector::from_vec(kron_all(&fs));
                (v.adjoint() * q * &v)[(0, 0)].re
            }
        })
    }

    /// Exact gradient of [`ProductObjective::value`].
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let n = self.n;
        let fs = self.factors(x);
        let np = self.n_params();
        let mut g = vec![0.0; np];
        match &self.source {
            Source::Factored(rows) => {
                for r in rows {
                    let o: Vec<C64> = r.iter().zip(&fs).map(|(p, d)| dot2(p, d)).collect();
                    // prefix/suffix products avoid dividing by small overlaps
                    let mut pre = vec![C64::new(1.0, 0.0); n + 1];
                    for s in 0..n {
                        pre[s + 1] = pre[s] * o[s];
                    }
                    let mut suf = vec![C64::new(1.0, 0.0); n + 1];
                    for s in (0..n).rev() {
                        suf[s] = suf[s + 1] * o[s];
                    }
                    let c = pre[n];
                    for (k, gk) in g.iter_mut().enumerate() {
                        let (s, phase) = if k < n { (k, false) } else { (k - n, true) };
                        let dd = dfactor(x, s, n, self.param, phase);
                        let dc = pre[s] * suf[s + 1] * dot2(&r[s], &dd);
                        *gk += 2.0 * (c.conj() * dc).re;
                    }
                }
            }
            Source::Dense(q) => {
                let v = nalgebra::DVector::from_vec(kron_all(&fs));
                let qv = q * &v;
                for (k, gk) in g.iter_mut().enumerate() {
                    let (s, phase) = if k < n { (k, false) } else { (k - n, true) };
                    let mut f2 = fs.clone();
                    f2[s] = dfactor(x, s, n, self.param, phase);
                    let dv = nalgebra::DVector::from_vec(kron_all(&f2));
                    *gk = 2.0 * (dv.adjoint() * &qv)[(0, 0)].re;
                }
            }
        }
        Ok(g)
    }

    /// Descent direction `Mᵀ Q δ`, where the columns of `M` are `∂δ/∂xₖ`;
    /// equal to half the gradient.
    pub fn direction(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.gradient(x)?.into_iter().map(|v| 0.5 * v).collect())
    }
}

/// Step acceptance rule for [`steepest_descent`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineSearch {
    /// Accept `y = x - a·g` when `f(y) < f(x) + gᵀ(y - x) + (a/2)‖y - x‖²`,
    /// otherwise halve `a`. The step carries over and never grows.
    #[default]
    QuadraticModel,
    /// Armijo condition `f(y) ≤ f(x) - 1e-4·a‖g‖²` with halving; the step
    /// doubles after an immediate acceptance. Never increases `f`.
    Backtracking,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub step0: f64,
    /// Stop once `‖g‖₂ ≤ gtol` for the direction `g` of [`ProductObjective::direction`].
    pub gtol: f64,
    pub max_iter: usize,
    pub line_search: LineSearch,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig { step0: 10.0, gtol: 1e-4, max_iter: 10_000, line_search: LineSearch::QuadraticModel }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub iter: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub step: f64,
}

impl OptimizerState {
    pub fn grad_norm(&self) -> f64 {
        self.g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Descent,
    Sampling,
    Alternating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub method: Method,
    pub q_star: f64,
    #[serde(rename = "G_ebits")]
    pub g_ebits: f64,
    /// Minimizing angles in `[0, 2π)`, when the method works on angles.
    pub angles: Option<Vec<f64>>,
    pub iterations: Option<usize>,
    pub grad_norm: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct DescentRun {
    pub trace: Vec<OptimizerState>,
    pub result: MeasureResult,
    pub converged: bool,
}

/// `-log₂((1 - q)/(d - m))`.
pub fn to_ebits(q_star: f64, d: usize, m: usize) -> Result<f64> {
    if m >= d {
        return Err(Error::TooManyVectors { m, d });
    }
    if !(0.0..=1.0).contains(&q_star) {
        return Err(Error::InvalidArgument(format!("overlap {q_star} outside [0, 1]")));
    }
    if q_star == 1.0 {
        return Err(Error::InfiniteMeasure);
    }
    Ok(-((1.0 - q_star) / (d - m) as f64).log2())
}

fn canonical_angles(x: &[f64]) -> Result<Vec<f64>> {
    x.iter().map(|&v| Angle::new(v).map(Angle::value)).collect()
}

/// Overlap clamped into `[0, 1]` against rounding.
fn clamp01(q: f64) -> f64 {
    q.clamp(0.0, 1.0)
}

/// Steepest descent `x ← x - a·g`. Running out of iterations is not an
/// error: the run reports `converged = false` and keeps its trace.
pub fn steepest_descent(obj: &ProductObjective, x0: &[f64], cfg: &DescentConfig, d: usize, m: usize) -> Result<DescentRun> {
    if !cfg.step0.is_finite() || cfg.step0 <= 0.0 {
        return Err(Error::InvalidArgument(format!("initial step must be positive, got {}", cfg.step0)));
    }
    let mut x = x0.to_vec();
    let mut f = obj.value(&x)?;
    let mut g = obj.direction(&x)?;
    let mut a = cfg.step0;
    let mut trace = vec![OptimizerState { iter: 0, x: x.clone(), f, g: g.clone(), step: a }];
    let mut converged = false;
    for it in 1..=cfg.max_iter {
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() <= cfg.gtol {
            converged = true;
            break;
        }
        let mut first_try = true;
        let (y, fy) = loop {
            let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - a * gi).collect();
            let fy = obj.value(&y)?;
            let ok = match cfg.line_search {
                LineSearch::QuadraticModel => {
                    let s2: f64 = y.iter().zip(&x).map(|(yi, xi)| (yi - xi) * (yi - xi)).sum();
                    let lin: f64 = g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
                    fy < f + lin + 0.5 * a * s2
                }
                LineSearch::Backtracking => fy <= f - 1e-4 * a * gg,
            };
            if ok {
                break (y, fy);
            }
            a *= 0.5;
            first_try = false;
            if a < 1e-300 {
                return Err(Error::InvalidArgument("line search step underflow".into()));
            }
        };
        x = y;
        f = fy;
        g = obj.direction(&x)?;
        trace.push(OptimizerState { iter: it, x: x.clone(), f, g: g.clone(), step: a });
        if cfg.line_search == LineSearch::Backtracking && first_try {
            a *= 2.0;
        }
    }
    if !converged {
        converged = g.iter().map(|v| v * v).sum::<f64>().sqrt() <= cfg.gtol;
    }
    let last = trace.last().unwrap();
    let q = clamp01(last.f);
    let result = MeasureResult {
        method: Method::Descent,
        q_star: q,
        g_ebits: to_ebits(q, d, m)?,
        angles: Some(canonical_angles(&last.x)?),
        iterations: Some(last.iter),
        grad_norm: Some(last.grad_norm()),
        seed: None,
    };
    Ok(DescentRun { trace, result, converged })
}

#[derive(Clone, Debug)]
pub struct SamplingRun {
    pub result: MeasureResult,
    /// `G` of every sample, in sample order, when requested.
    pub values: Option<Vec<f64>>,
}

/// Samples per random stream in [`random_sampling`].
pub const SAMPLING_CHUNK: usize = 4096;

/// Draws `n` parameter vectors uniformly from `[0, 2π)^k` and keeps the
/// smallest objective. Chunk `c` of [`SAMPLING_CHUNK`] samples uses stream `c`
/// of a ChaCha8 generator seeded with `seed`, so results do not depend on the
/// thread count.
pub fn random_sampling(obj: &ProductObjective, n: usize, seed: u64, keep_values: bool, d: usize, m: usize) -> Result<SamplingRun> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one sample required".into()));
    }
    let np = obj.n_params();
    let chunks = n.div_ceil(SAMPLING_CHUNK);
    let per_chunk: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = SAMPLING_CHUNK.min(n - c * SAMPLING_CHUNK);
            let mut best = (f64::INFINITY, Vec::new());
            let mut vals = Vec::with_capacity(if keep_values { len } else { 0 });
            for _ in 0..len {
                let x: Vec<f64> = (0..np).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                let f = obj.value(&x)?;
                if keep_values {
                    vals.push(to_ebits(clamp01(f), d, m)?);
                }
                if f < best.0 {
                    best = (f, x);
                }
            }
            Ok((best.0, best.1, vals))
        })
        .collect::<Result<_>>()?;
    let (mut bf, mut bx) = (f64::INFINITY, Vec::new());
    for (f, x, _) in &per_chunk {
        if *f < bf {
            bf = *f;
            bx = x.clone();
        }
    }
    let values = keep_values.then(|| per_chunk.iter().flat_map(|(_, _, v)| v.iter().copied()).collect());
    let q = clamp01(bf);
    Ok(SamplingRun {
        result: MeasureResult {
            method: Method::Sampling,
            q_star: q,
            g_ebits: to_ebits(q, d, m)?,
            angles: Some(canonical_angles(&bx)?),
            iterations: Some(n),
            grad_norm: None,
            seed: Some(seed),
        },
        values,
    })
}

/// Minimal overlap over product vectors of `p` by alternating minimization,
/// converted with the dimension and size of the full set.
pub fn merged_measure(set: &ConcreteProductSet, p: &Partition, cfg: &AlternatingConfig) -> Result<MeasureResult> {
    let r = min_overlap_product(set, p, cfg)?;
    let q = clamp01(r.best.value);
    Ok(MeasureResult {
        method: Method::Alternating,
        q_star: q,
        g_ebits: to_ebits(q, set.total_dim(), set.len())?,
        angles: None,
        iterations: Some(r.sweeps),
        grad_norm: None,
        seed: Some(cfg.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppt::{builtin_upb, projector_from_set};
    use proptest::{prop_assert, prop_assume, proptest};

    const REF_X: [f64; 7] = [2.35414, 2.83365, 3.14800, 0.615284, 3.92691, 2.35162, 3.61857];

    fn obj() -> ProductObjective {
        ProductObjective::from_set(&builtin_upb(), Parameterization::Real).unwrap()
    }

    fn direct(x: &[f64]) -> f64 {
        let s = builtin_upb();
        let delta: Vec<[f64; 2]> = x.iter().map(|t| [t.sin(), t.cos()]).collect();
        (0..11)
            .map(|i| {
                let mut o = 1.0;
                for (k, d) in delta.iter().enumerate() {
                    let f = s.factor(i, k).entries();
                    o *= f[0].re * d[0] + f[1].re * d[1];
                }
                o * o
            })
            .sum()
    }

    #[test]
    fn objective_at_origin_is_direct_sum() {
        let x = [0.0; 7];
        assert!((obj().value(&x).unwrap() - direct(&x)).abs() <= 1e-15);
    }

    #[test]
    fn objective_at_reference_point() {
        let v = obj().value(&REF_X).unwrap();
        assert!((v - 3.18624e-5).abs() <= 1e-8, "{v:e}");
        let g = obj().direction(&REF_X).unwrap();
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(gn <= 1e-4, "{gn:e}");
    }

    #[test]
    fn dense_and_factored_agree() {
        let s = builtin_upb();
        let q = projector_from_set(&s, 1e-10).unwrap();
        for param in [Parameterization::Real, Parameterization::ComplexPhase] {
            let a = ProductObjective::from_set(&s, param).unwrap();
            let b = ProductObjective::from_operator(&q, 7, param).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..20 {
                let x: Vec<f64> = (0..a.n_params()).map(|_| rng.random_range(0.0..6.3)).collect();
                assert!((a.value(&x).unwrap() - b.value(&x).unwrap()).abs() <= 1e-12);
                let ga = a.gradient(&x).unwrap();
                let gb = b.gradient(&x).unwrap();
                for (u, v) in ga.iter().zip(&gb) {
                    assert!((u - v).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradient_of_identity_is_zero() {
        let id = HermitianOperator::identity(128);
        let o = ProductObjective::from_operator(&id, 7, Parameterization::Real).unwrap();
        let x = [std::f64::consts::FRAC_PI_2; 7];
        assert!((o.value(&x).unwrap() - 1.0).abs() <= 1e-15);
        assert!(o.gradient(&x).unwrap().iter().all(|g| g.abs() <= 1e-15));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for param in [Parameterization::Real, Parameterization::ComplexPhase] {
            let o = ProductObjective::from_set(&builtin_upb(), param).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..o.n_params()).map(|_| rng.random_range(0.0..6.3)).collect();
                let g = o.gradient(&x).unwrap();
                for k in 0..x.len() {
                    let h = 1e-6;
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (o.value(&xp).unwrap() - o.value(&xm).unwrap()) / (2.0 * h);
                    assert!((g[k] - fd).abs() <= 1e-7f64.max(1e-5 * fd.abs()), "{} vs {fd}", g[k]);
                }
            }
        }
    }

    #[test]
    fn descent_from_origin() {
        let run = steepest_descent(&obj(), &[0.0; 7], &DescentConfig::default(), 128, 11).unwrap();
        assert!(run.converged);
        assert!((run.result.g_ebits - 6.87041).abs() <= 0.01);
        assert!((run.result.q_star - 3.18624e-5).abs() <= 1e-5);
        assert!(run.result.grad_norm.unwrap() <= 1e-4);
    }

    #[test]
    fn backtracking_is_monotone() {
        let cfg = DescentConfig { line_search: LineSearch::Backtracking, ..Default::default() };
        let run = steepest_descent(&obj(), &[0.0; 7], &cfg, 128, 11).unwrap();
        for w in run.trace.windows(2) {
            assert!(w[1].f <= w[0].f);
        }
        assert!(run.converged);
        assert!(run.trace.last().unwrap().grad_norm() <= 1e-4);
    }

    #[test]
    fn max_iter_reports_non_convergence() {
        let cfg = DescentConfig { max_iter: 3, ..Default::default() };
        let run = steepest_descent(&obj(), &[0.0; 7], &cfg, 128, 11).unwrap();
        assert!(!run.converged);
        assert_eq!(run.trace.len(), 4);
        let bad = DescentConfig { step0: 0.0, ..Default::default() };
        assert!(steepest_descent(&obj(), &[0.0; 7], &bad, 128, 11).is_err());
    }

    #[test]
    fn ebits_examples() {
        assert!((to_ebits(3.18624e-5, 128, 11).unwrap() - 6.87041).abs() < 5e-6);
        assert!((to_ebits(0.0, 128, 11).unwrap() - 117f64.log2()).abs() < 1e-15);
        assert_eq!(to_ebits(0.0, 2, 1).unwrap(), 0.0);
        assert!(matches!(to_ebits(1.0, 128, 11), Err(Error::InfiniteMeasure)));
        assert!(to_ebits(-0.1, 128, 11).is_err());
        assert!(to_ebits(0.5, 11, 11).is_err());
    }

    #[test]
    fn single_sample_equals_objective() {
        let o = obj();
        let r = random_sampling(&o, 1, 5, true, 128, 11).unwrap();
        let x = r.result.angles.clone().unwrap();
        assert!((o.value(&x).unwrap() - r.result.q_star).abs() <= 1e-15);
        assert_eq!(r.values.unwrap().len(), 1);
    }

    #[test]
    fn sampling_is_deterministic() {
        let o = obj();
        let a = random_sampling(&o, 10_000, 3, true, 128, 11).unwrap();
        let b = random_sampling(&o, 10_000, 3, true, 128, 11).unwrap();
        assert_eq!(a.result, b.result);
        assert_eq!(a.values, b.values);
        assert_eq!(a.values.unwrap().len(), 10_000);
    }

    proptest! {
        #[test]
        fn objective_in_unit_interval(x in proptest::collection::vec(-10.0f64..10.0, 7)) {
            let v = obj().value(&x).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - direct(&x)).abs() <= 1e-12);
        }

        #[test]
        fn ebits_increasing(a in 0.0f64..0.999, b in 0.0f64..0.999) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-12);
            prop_assert!(to_ebits(lo, 128, 11).unwrap() < to_ebits(hi, 128, 11).unwrap());
        }
    }
}
