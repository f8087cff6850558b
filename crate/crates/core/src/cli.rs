//! Command-line front end. Every command builds a JSON [`Report`], writes it
//! with its data files to the output directory, and prints a summary rendered
//! from the report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::alternating::{AlternatingConfig, FieldMode};
use crate::analysis::quadruple::{
    classify_zero_quadruples, closed_form_determinant, find_b2_roots, pair_submatrix, quintuple_count, zero_quintuples, ROOT_GRID,
};
use crate::analysis::witness::{find_witness, WitnessOutcome, DEFAULT_BUDGET};
use crate::geometric::{
    merged_measure, random_sampling, steepest_descent, DescentConfig, LineSearch, MeasureResult, Parameterization,
    ProductObjective,
};
use crate::partition::Partition;
use crate::ppt::{builtin_upb, build_state, diagnostics, is_ppt};
use crate::product::ConcreteProductSet;
use crate::uom::{builtin_a, builtin_a_tilde, enumerate_merge_pairs, AngleAssignment, SymbolicUom};
use crate::{Error, Tolerances};

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "UPBFORGE_OUT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "upbforge", version, about = "Seven-qubit unextendible product basis toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random choice of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (overridden by UPBFORGE_OUT).
    #[arg(long, global = true, default_value = "upbforge-out")]
    pub out: PathBuf,
    /// Symbolic matrix: A, A-tilde, or a path to a text grid.
    #[arg(long, global = true, default_value = "A")]
    pub uom: String,
    /// Product set analysed by `partitions`: a seeded instantiation of the
    /// symbolic matrix, or the fixed 11-vector table.
    #[arg(long, global = true, value_enum, default_value_t = Instance::Generic)]
    pub instance: Instance,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_orthogonality: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_psd: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_witness: f64,
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub tol_gradient: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_rank: f64,
    /// Print the JSON report instead of the summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write artifacts without printing anything on success.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Instance {
    Generic,
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Symbolic orthogonality of the matrix and orthonormality of the 11-vector table.
    VerifyUpb,
    /// Identically vanishing 4x4 determinants on a pair of columns.
    Classify(ClassifyArgs),
    /// Witness vectors showing that merged partitions are not UPBs.
    Partitions(PartitionsArgs),
    /// The normalized complementary projector and its partial transposes.
    State,
    /// Geometric measure of entanglement.
    Measure(MeasureArgs),
    /// The closed-form determinant as a function of b2.
    Fig1(Fig1Args),
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    /// Column pair, 1-based, e.g. "1,2".
    #[arg(long, default_value = "1,2")]
    pub pair: String,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_det: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Pairs,
    AllN,
}

#[derive(Args, Debug, Serialize)]
pub struct PartitionsArgs {
    #[arg(long, value_enum, default_value_t = Scope::Pairs)]
    pub scope: Scope,
    /// Number of blocks for `--scope all-n`.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Check a single partition instead of a scope, e.g. "12|3|4|5|6|7".
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Alternating-minimization starts for partitions without a witness.
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureMethod {
    Descent,
    Sampling,
    Alternating,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineSearchArg {
    QuadraticModel,
    Backtracking,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Complex,
    Real,
}

#[derive(Args, Debug, Serialize)]
pub struct MeasureArgs {
    #[arg(long, value_enum, default_value_t = MeasureMethod::All)]
    pub method: MeasureMethod,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    /// Partition for alternating minimization; singletons by default.
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Complex)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10.0)]
    pub step0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = LineSearchArg::QuadraticModel)]
    pub line_search: LineSearchArg,
}

#[derive(Args, Debug, Serialize)]
pub struct Fig1Args {
    #[arg(long, default_value_t = 2.4, allow_negative_numbers = true)]
    pub a1: f64,
    #[arg(long, default_value_t = 1.8, allow_negative_numbers = true)]
    pub a2: f64,
    #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
    pub a3: f64,
    #[arg(long, default_value_t = 4.7, allow_negative_numbers = true)]
    pub b1: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub inputs: Value,
    pub results: Value,
    pub passed: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidPair(..)
            | Error::InvalidPartition(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::MissingSymbol { .. } => CliError::Usage(e.to_string()),
            other => CliError::Run(other),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Ctx {
    global: GlobalArgs,
    tol: Tolerances,
    out: PathBuf,
}

impl Ctx {
    fn uom(&self) -> CliResult<SymbolicUom> {
        match self.global.uom.as_str() {
            "A" => Ok(builtin_a()),
            "A-tilde" => Ok(builtin_a_tilde()),
            path => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
                Ok(SymbolicUom::parse(&text, path)?)
            }
        }
    }

    fn instance(&self) -> CliResult<ConcreteProductSet> {
        match self.global.instance {
            Instance::Table => Ok(builtin_upb()),
            Instance::Generic => {
                let u = self.uom()?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.global.seed);
                Ok(u.instantiate(&AngleAssignment::random(&u, &mut rng))?)
            }
        }
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        fs::create_dir_all(&self.out).map_err(Error::from)?;
        fs::write(self.out.join(name), contents).map_err(Error::from)?;
        Ok(())
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
        fs::create_dir_all(&self.out).map_err(Error::from)?;
        let mut w = csv::Writer::from_path(self.out.join(name)).map_err(Error::from)?;
        if !header.is_empty() {
            w.write_record(header).map_err(Error::from)?;
        }
        for r in rows {
            w.write_record(&r).map_err(Error::from)?;
        }
        w.flush().map_err(Error::from)?;
        Ok(())
    }
}

/// Output directory: `UPBFORGE_OUT` when set and non-empty, else `--out`.
pub fn resolve_out(flag: &Path) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.to_path_buf(),
    }
}

/// Parses "i,j" (1-based, distinct, within `n`) into a 0-based pair.
pub fn parse_pair(s: &str, n: usize) -> crate::Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("pair must look like \"1,2\", got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i == j || i == 0 || j == 0 || i > n || j > n {
        return Err(Error::InvalidPair(i, j));
    }
    Ok((i.min(j) - 1, i.max(j) - 1))
}

fn tolerances(g: &GlobalArgs) -> CliResult<Tolerances> {
    let t = Tolerances {
        orthogonality: g.tol_orthogonality,
        psd: g.tol_psd,
        witness: g.tol_witness,
        gradient: g.tol_gradient,
        rank: g.tol_rank,
        ..Tolerances::default()
    };
    t.validate()?;
    Ok(t)
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn report(command: &str, inputs: Value, results: Value, passed: bool) -> Report {
    Report {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: timestamp(),
        inputs,
        results,
        passed,
    }
}

fn inputs(ctx: &Ctx, extra: Value) -> Value {
    let mut v = serde_json::to_value(&ctx.global).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.remove("out");
        m.remove("json");
        m.remove("quiet");
        if let Value::Object(e) = extra {
            m.extend(e);
        }
    }
    v
}

fn cmd_verify_upb(ctx: &Ctx) -> CliResult<Report> {
    let mut matrices = Vec::new();
    let mut all = true;
    let custom = !matches!(ctx.global.uom.as_str(), "A" | "A-tilde");
    let mut uoms = vec![builtin_a(), builtin_a_tilde()];
    if custom {
        uoms = vec![ctx.uom()?];
    }
    for u in &uoms {
        let n = u.n_rows();
        let failing = u.verify_symbolic_orthogonality();
        let total = n * (n - 1) / 2;
        all &= failing.is_empty();
        matrices.push(json!({
            "label": u.label(),
            "pairs_total": total,
            "pairs_orthogonal": total - failing.len(),
            "failing_pairs": failing.iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>(),
        }));
    }
    let s = builtin_upb();
    let orth = s.orthonormality_error();
    let norm = s.factor_norm_error();
    let table_ok = orth <= ctx.tol.orthogonality && norm <= 1e-12;
    all &= table_ok;
    let results = json!({
        "symbolic": matrices,
        "table": {
            "vectors": s.len(),
            "max_overlap": orth,
            "max_factor_norm_error": norm,
            "passed": table_ok,
        }
    });
    Ok(report("verify-upb", inputs(ctx, json!({})), results, all))
}

/// Known quadruple and quintuple counts of the built-in matrix A.
fn expected_counts(label: &str, pair: (usize, usize)) -> Option<(usize, usize)> {
    match (label, pair) {
        ("A", (0, 1)) => Some((44, 0)),
        ("A", (1, 2)) => Some((23, 2)),
        _ => None,
    }
}

fn cmd_classify(ctx: &Ctx, a: &ClassifyArgs) -> CliResult<Report> {
    let u = ctx.uom()?;
    let pair = parse_pair(&a.pair, u.n_cols())?;
    let sub = pair_submatrix(&u, pair)?;
    let c = classify_zero_quadruples(&sub, a.samples, a.tol_det, ctx.global.seed)?;
    let quints = zero_quintuples(&c);
    let one = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
    let expected = expected_counts(u.label(), pair);
    let passed = expected.is_none_or(|(q, p)| c.zero_quadruples.len() == q && quints.len() == p);
    let results = json!({
        "pair": [pair.0 + 1, pair.1 + 1],
        "samples": c.sample_count,
        "tol": c.tolerance,
        "quadruples_scanned": c.scanned,
        "zero_quadruples": c.zero_quadruples.iter().map(|q| one(q)).collect::<Vec<_>>(),
        "zero_quadruple_count": c.zero_quadruples.len(),
        "quintuples_scanned": quintuple_count(c.n_rows),
        "zero_quintuples": quints.iter().map(|q| one(q)).collect::<Vec<_>>(),
        "zero_quintuple_count": quints.len(),
        "expected": expected.map(|(q, p)| json!({"zero_quadruples": q, "zero_quintuples": p})),
    });
    let r = report("classify", inputs(ctx, serde_json::to_value(a).unwrap_or_default()), results, passed);
    ctx.write(&format!("classify-{}{}.json", pair.0 + 1, pair.1 + 1), &to_json(&r)?)?;
    Ok(r)
}

fn partition_entry(ctx: &Ctx, set: &ConcreteProductSet, p: &Partition, a: &PartitionsArgs) -> CliResult<(Value, bool)> {
    match find_witness(set, p, a.budget, &ctx.tol) {
        Ok(WitnessOutcome::Found(w)) => {
            let min_overlap: f64 = w.residuals.iter().map(|r| r * r).sum();
            Ok((
                json!({
                    "partition": p.to_string(),
                    "verdict": "witness",
                    "method": w.method,
                    "max_residual": w.max_residual(),
                    "residuals": w.residuals,
                    "covering_block": w.covering_block,
                    "min_overlap": min_overlap,
                }),
                w.max_residual() <= ctx.tol.witness,
            ))
        }
        Ok(WitnessOutcome::Exhausted { nodes }) => {
            let cfg = AlternatingConfig { starts: a.starts, seed: ctx.global.seed, ..Default::default() };
            let r = crate::analysis::alternating::min_overlap_product(set, p, &cfg)?;
            Ok((
                json!({
                    "partition": p.to_string(),
                    "verdict": "no witness",
                    "nodes": nodes,
                    "min_overlap": r.best.value,
                    "starts": a.starts,
                }),
                false,
            ))
        }
        Err(Error::BudgetExhausted { budget }) => Ok((
            json!({"partition": p.to_string(), "verdict": "budget exhausted", "budget": budget}),
            false,
        )),
        Err(e) => Err(e.into()),
    }
}

fn cmd_partitions(ctx: &Ctx, a: &PartitionsArgs) -> CliResult<Report> {
    let set = ctx.instance()?;
    let n = set.partition().n_systems();
    let parts: Vec<Partition> = match (&a.partition, a.scope) {
        (Some(spec), _) => vec![Partition::parse(spec, n)?],
        (None, Scope::Pairs) => enumerate_merge_pairs(n)
            .into_iter()
            .map(|(i, j)| Partition::merge_pair(n, i, j))
            .collect::<crate::Result<_>>()?,
        (None, Scope::AllN) => {
            if !(2..n).contains(&a.n) {
                return Err(CliError::Usage(format!("--n must lie in 2..={}, got {}", n - 1, a.n)));
            }
            Partition::all_with_blocks(n, a.n)
        }
    };
    let mut entries = Vec::new();
    let mut witnessed = Vec::new();
    let mut unresolved = Vec::new();
    for p in &parts {
        let (v, ok) = partition_entry(ctx, &set, p, a)?;
        if ok { &mut witnessed } else { &mut unresolved }.push(p.to_string());
        entries.push(v);
    }
    // merging columns 1,2 or 2,3 of A is expected to leave a UPB
    let expected: Option<Vec<String>> = match (&a.partition, a.scope, ctx.global.uom.as_str()) {
        (None, Scope::Pairs, "A") => Some(vec!["3|4|5|6|7|12".into(), "1|4|5|6|7|23".into()]),
        (None, Scope::AllN, "A") => Some(vec![]),
        _ => None,
    };
    let passed = match &expected {
        Some(e) => {
            let mut u = unresolved.clone();
            u.sort();
            let mut e = e.clone();
            e.sort();
            u == e
        }
        None => true,
    };
    let results = json!({
        "partitions": entries,
        "witness_count": witnessed.len(),
        "no_witness": unresolved,
        "expected_no_witness": expected,
    });
    let r = report("partitions", inputs(ctx, serde_json::to_value(a).unwrap_or_default()), results, passed);
    ctx.write("partitions.json", &to_json(&r)?)?;
    Ok(r)
}

fn cmd_state(ctx: &Ctx) -> CliResult<Report> {
    let s = builtin_upb();
    let rho = build_state(&s, ctx.tol.orthogonality)?;
    let diag = diagnostics(&rho, s.len(), ctx.tol.rank);
    let ppt = is_ppt(&rho, ctx.tol.psd)?;
    let m = rho.matrix();
    let max_im = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let expected_rank = s.total_dim() - s.len();
    let passed = (diag.trace - 1.0).abs() <= 1e-12 && diag.rank == expected_rank && ppt.ppt;
    let results = json!({
        "dimension": s.total_dim(),
        "diagnostics": diag,
        "expected_rank": expected_rank,
        "eigenvalues": rho.eigenvalues(),
        "max_imaginary_part": max_im,
        "ppt": ppt,
    });
    ctx.write_csv(
        "alpha.csv",
        &[],
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)].re)).collect()),
    )?;
    let r = report("state", inputs(ctx, json!({})), results, passed);
    ctx.write("state.json", &to_json(&r)?)?;
    Ok(r)
}

fn cmd_measure(ctx: &Ctx, a: &MeasureArgs) -> CliResult<Report> {
    let s = builtin_upb();
    let (d, m) = (s.total_dim(), s.len());
    let obj = ProductObjective::from_set(&s, Parameterization::Real)?;
    let mut results = serde_json::Map::new();
    let mut passed = true;
    let run_all = a.method == MeasureMethod::All;
    let mut descent: Option<MeasureResult> = None;
    let mut sampling: Option<MeasureResult> = None;
    let mut alternating: Option<MeasureResult> = None;

    if run_all || a.method == MeasureMethod::Descent {
        let cfg = DescentConfig {
            step0: a.step0,
            gtol: ctx.tol.gradient,
            max_iter: a.max_iter,
            line_search: match a.line_search {
                LineSearchArg::QuadraticModel => LineSearch::QuadraticModel,
                LineSearchArg::Backtracking => LineSearch::Backtracking,
            },
        };
        let x0 = vec![0.0; obj.n_params()];
        let run = steepest_descent(&obj, &x0, &cfg, d, m)?;
        ctx.write_csv(
            "fig2.csv",
            &["iteration", "objective", "G_ebits", "grad_norm", "step"],
            run.trace.iter().map(|st| {
                let g = crate::geometric::to_ebits(st.f.clamp(0.0, 1.0), d, m).unwrap_or(f64::NAN);
                vec![st.iter.to_string(), format!("{:e}", st.f), format!("{g}"), format!("{:e}", st.grad_norm()), format!("{}", st.step)]
            }),
        )?;
        passed &= run.converged;
        results.insert("descent".into(), json!({"result": run.result, "converged": run.converged}));
        descent = Some(run.result);
    }
    if run_all || a.method == MeasureMethod::Sampling {
        let run = random_sampling(&obj, a.samples, ctx.global.seed, true, d, m)?;
        if let Some(values) = &run.values {
            ctx.write_csv(
                "fig3.csv",
                &["sample", "G_ebits"],
                values.iter().enumerate().map(|(k, g)| vec![(k + 1).to_string(), format!("{g}")]),
            )?;
        }
        results.insert("sampling".into(), json!({"result": run.result}));
        sampling = Some(run.result);
    }
    if run_all || a.method == MeasureMethod::Alternating {
        let p = match &a.partition {
            Some(spec) => Partition::parse(spec, 7)?,
            None => Partition::singletons(7),
        };
        let cfg = AlternatingConfig {
            starts: a.starts,
            seed: ctx.global.seed,
            mode: match a.mode {
                ModeArg::Complex => FieldMode::Complex,
                ModeArg::Real => FieldMode::Real,
            },
            ..Default::default()
        };
        let r = merged_measure(&s, &p, &cfg)?;
        passed &= r.g_ebits > 0.0;
        results.insert("alternating".into(), json!({"partition": p.to_string(), "result": r}));
        alternating = Some(r);
    }
    if run_all {
        let (de, sa, al) = (descent.unwrap(), sampling.unwrap(), alternating.unwrap());
        let sampling_ok = sa.q_star >= de.q_star - 1e-9 && (sa.g_ebits - de.g_ebits).abs() <= 0.02;
        let alternating_ok = al.q_star <= de.q_star + 1e-9;
        let best = [&de, &sa, &al].into_iter().min_by(|x, y| x.q_star.total_cmp(&y.q_star)).unwrap();
        passed &= sampling_ok && alternating_ok;
        results.insert(
            "consistency".into(),
            json!({
                "sampling_within_0.02_of_descent": sampling_ok,
                "alternating_not_above_descent": alternating_ok,
                "best_method": best.method,
                "best_q_star": best.q_star,
                "best_G_ebits": best.g_ebits,
            }),
        );
    }
    let r = report("measure", inputs(ctx, serde_json::to_value(a).unwrap_or_default()), Value::Object(results), passed);
    ctx.write("measure.json", &to_json(&r)?)?;
    Ok(r)
}

fn cmd_fig1(ctx: &Ctx, a: &Fig1Args) -> CliResult<Report> {
    for v in [a.a1, a.a2, a.a3, a.b1] {
        if !v.is_finite() {
            return Err(Error::NonFiniteAngle(v).into());
        }
    }
    let h = std::f64::consts::TAU / ROOT_GRID as f64;
    ctx.write_csv(
        "fig1.csv",
        &["b2", "det"],
        (0..ROOT_GRID).map(|k| {
            let b2 = k as f64 * h;
            vec![format!("{b2}"), format!("{:e}", closed_form_determinant(a.a1, a.a2, a.a3, a.b1, b2))]
        }),
    )?;
    let roots = find_b2_roots(a.a1, a.a2, a.a3, a.b1);
    let results = json!({"grid_points": ROOT_GRID, "roots": roots, "root_count": roots.len()});
    let r = report("fig1", inputs(ctx, serde_json::to_value(a).unwrap_or_default()), results, true);
    ctx.write("fig1.json", &to_json(&r)?)?;
    Ok(r)
}

fn to_json(r: &Report) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(r).map_err(Error::from)? + "\n")
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Array(a) if a.len() > 8 => format!("[{} items]", a.len()),
        Value::Object(_) | Value::Array(_) => serde_json::to_string(v).unwrap_or_default(),
        other => other.to_string(),
    }
}

/// Flattened `key: value` lines of the results, with long arrays elided.
pub fn render_summary(r: &Report) -> String {
    let mut out = format!("upbforge {} {}\n", r.command, r.version);
    fn walk(prefix: &str, v: &Value, out: &mut String, depth: usize) {
        match v {
            Value::Object(m) if depth < 2 => {
                for (k, v) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out, depth + 1);
                }
            }
            _ => out.push_str(&format!("  {prefix}: {}\n", fmt_value(v))),
        }
    }
    walk("", &r.results, &mut out, 0);
    out.push_str(if r.passed { "PASS\n" } else { "FAIL\n" });
    out
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let tol = match tolerances(&cli.global) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    let ctx = Ctx { out: resolve_out(&cli.global.out), global: cli.global, tol };
    let result = match &cli.command {
        Command::VerifyUpb => cmd_verify_upb(&ctx).and_then(|r| {
            ctx.write("verify-upb.json", &to_json(&r)?)?;
            Ok(r)
        }),
        Command::Classify(a) => cmd_classify(&ctx, a),
        Command::Partitions(a) => cmd_partitions(&ctx, a),
        Command::State => cmd_state(&ctx),
        Command::Measure(a) => cmd_measure(&ctx, a),
        Command::Fig1(a) => cmd_fig1(&ctx, a),
    };
    match result {
        Ok(r) => {
            if ctx.global.quiet {
            } else if ctx.global.json {
                print!("{}", to_json(&r).unwrap_or_default());
            } else {
                print!("{}", render_summary(&r));
            }
            if r.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e @ CliError::Usage(_)) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_FAIL
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_parse() {
        assert_eq!(parse_pair("1,2", 7).unwrap(), (0, 1));
        assert_eq!(parse_pair(" 3 , 2", 7).unwrap(), (1, 2));
        assert!(matches!(parse_pair("1,1", 7), Err(Error::InvalidPair(1, 1))));
        assert!(parse_pair("0,2", 7).is_err());
        assert!(parse_pair("1,8", 7).is_err());
        assert!(parse_pair("12", 7).is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(main_with_args(["upbforge", "--out", out, "classify", "--pair", "1,1"]), EXIT_USAGE);
        assert_eq!(main_with_args(["upbforge", "--out", out, "nonsense"]), EXIT_USAGE);
        assert_eq!(main_with_args(["upbforge", "--out", out, "--tol-psd", "0", "state"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["upbforge", "--out", out, "partitions", "--partition", "12|3"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn verify_upb_passes_on_builtins() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(main_with_args(["upbforge", "--out", out, "verify-upb"]), EXIT_PASS);
        let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify-upb.json")).unwrap()).unwrap();
        assert_eq!(v["results"]["symbolic"][0]["pairs_orthogonal"], 55);
        assert_eq!(main_with_args(["upbforge", "--out", out, "--uom", "A-tilde", "verify-upb"]), EXIT_PASS);
    }

    #[test]
    fn corrupted_uom_fails_with_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let text = builtin_a().to_text();
        // drop the prime from the first primed entry
        let pos = text.find('\'').unwrap();
        let mut bad = text.clone();
        bad.remove(pos);
        let path = dir.path().join("bad.txt");
        fs::write(&path, bad).unwrap();
        let out = dir.path().join("out");
        let code = main_with_args([
            "upbforge",
            "--out",
            out.to_str().unwrap(),
            "--uom",
            path.to_str().unwrap(),
            "verify-upb",
        ]);
        assert_eq!(code, EXIT_FAIL);
        let v: Value = serde_json::from_str(&fs::read_to_string(out.join("verify-upb.json")).unwrap()).unwrap();
        assert!(!v["results"]["symbolic"][0]["failing_pairs"].as_array().unwrap().is_empty());
    }

    #[test]
    fn root_scan_csv() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(main_with_args(["upbforge", "--out", out, "fig1"]), EXIT_PASS);
        let mut rd = csv::Reader::from_path(dir.path().join("fig1.csv")).unwrap();
        let rows: Vec<(f64, f64)> = rd
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].parse().unwrap(), r[1].parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), ROOT_GRID);
        assert!(rows.windows(2).all(|w| w[1].0 > w[0].0));
        let changes = rows.windows(2).filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0)).count();
        let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fig1.json")).unwrap()).unwrap();
        assert_eq!(v["results"]["root_count"], changes);
        let r0 = v["results"]["roots"][0].as_f64().unwrap();
        assert!((0.9453..=0.9454).contains(&r0));
    }

    #[test]
    fn summary_lists_results() {
        let r = report("x", json!({}), json!({"a": 1, "b": {"c": [1, 2]}}), true);
        let s = render_summary(&r);
        assert!(s.contains("a: 1"));
        assert!(s.contains("b.c: [1,2]"));
        assert!(s.ends_with("PASS\n"));
    }
}
