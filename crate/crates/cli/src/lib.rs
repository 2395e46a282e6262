//! Command-line surface. `run` parses arguments, computes, and renders the
//! report; the binary only forwards bytes and the exit code.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use specialcycles::density::{
    alpha, alpha_prime, check_functional_equation, check_recursion_star, closed_form_gu3, f_poly, shifted_poly,
    DensityError,
};
use specialcycles::exactpoly::{rat_to_report, Rational};
use specialcycles::intersect::{
    check_case_consistency, dtriple_closed, dtriple_raw, kr_sides, ztriple, CaseFormula, DivisorPattern,
    IntersectError, ValuationTriple,
};
use specialcycles::localgeom::{
    degree_zero_report, special_fiber_divisor, CycleDescriptor, GeomError, Placement, TreeWindow,
    DEFAULT_NODE_BUDGET,
};
use specialcycles::oracle::{
    alpha_hat_rank1, beta_hat_rank1, count_representations, stabilization_check, CountResult, OracleError,
};
use specialcycles::padic::{is_odd_prime, HermMatrix, PadicError};
use specialcycles::{ExponentVector, RingParams};

pub const SCHEMA: &str = "1";
pub const REPORT_FIELDS: [&str; 6] = ["check", "p", "input", "lhs", "rhs", "pass"];

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Resource(_) => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<PadicError> for CliError {
    fn from(e: PadicError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<IntersectError> for CliError {
    fn from(e: IntersectError) -> Self {
        match e {
            IntersectError::Density(d) => d.into(),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => CliError::Resource(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::BudgetExceeded { .. } | GeomError::WindowTooSmall { .. } | GeomError::UnboundedShell => {
                CliError::Resource(e.to_string())
            }
            e => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "specialcycles", version, about = "Densities, intersection numbers and their cross-checks")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Node budget for tree windows.
    #[arg(long, global = true, env = "SPECIALCYCLES_NODE_BUDGET")]
    pub budget: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Density polynomials and their values.
    Density(DensityArgs),
    /// Brute-force counting oracles.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Intersection numbers and difference-divisor triples.
    Intersect(IntersectArgs),
    /// Tree window, reduced loci and divisor checks.
    Tree(TreeArgs),
    /// Batch verification sweeps.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[arg(long)]
    pub p: u64,
    /// Exponents of T = diag(p^a_i), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub exponents: Vec<u32>,
    /// Evaluate F at X = (-p)^(-s).
    #[arg(long, conflicts_with_all = ["shifted", "closed_form", "derivative"])]
    pub eval_at_s: Option<u32>,
    /// Shift by S = 1_3 (rank 3 only).
    #[arg(long, conflicts_with = "closed_form")]
    pub shifted: bool,
    /// Closed form of the shifted polynomial (rank 3, odd sum).
    #[arg(long)]
    pub closed_form: bool,
    /// Value of −dF(S,T;X)/dX at X = 1 (rank 3, odd sum).
    #[arg(long, conflicts_with_all = ["shifted", "closed_form"])]
    pub derivative: bool,
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Rank-one count for S = 1_s, T = (p^a).
    Rank1 {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        a: u32,
        /// Count only x that are nonzero mod p.
        #[arg(long)]
        beta: bool,
    },
    /// Full enumeration for S = diag(p^e), T = diag(p^f).
    Full {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        s_diag: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        t_diag: Vec<u32>,
    },
    /// Whether normalized counts agree for all k in [k_lo, k_hi].
    Stabilize {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        s_diag: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        t_diag: Vec<u32>,
        #[arg(long)]
        k_lo: u32,
        #[arg(long)]
        k_hi: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IntersectMode {
    Closed,
    InclExcl,
    KrCheck,
}

#[derive(Args, Debug)]
pub struct IntersectArgs {
    #[arg(long)]
    pub p: u64,
    /// Valuations a1,a2,a3; negative entries denote empty cycles.
    #[arg(long, value_delimiter = ',', num_args = 1, required = true, allow_hyphen_values = true)]
    pub triple: Vec<i64>,
    #[arg(long, value_enum, default_value_t = IntersectMode::Closed)]
    pub mode: IntersectMode,
    /// Which factors are difference divisors, e.g. 111 or 011 (incl-excl mode).
    #[arg(long, default_value = "111")]
    pub pattern: String,
    /// Evaluate a printed case formula, e.g. all-odd/2 or one-odd/5 (closed mode).
    #[arg(long)]
    pub case: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeEmit {
    Locus,
    Divisor,
    Checks,
    Dot,
}

#[derive(Args, Debug)]
pub struct TreeArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub radius: u32,
    /// Valuation of a cycle; repeat for several. Odd cycles share the root
    /// curve with disjoint marked sets, even cycles are centered at the first
    /// root point.
    #[arg(long = "cycle")]
    pub cycles: Vec<u32>,
    #[arg(long, value_enum, default_value_t = TreeEmit::Checks)]
    pub emit: TreeEmit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    KrIdentity,
    Cases,
    ClosedForm,
    Identities,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub kind: VerifyKind,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7,11")]
    pub p_list: Vec<u64>,
    #[arg(long, default_value_t = 7)]
    pub max_a3: u32,
    /// Bound on Σa for the functional equation and recursion checks.
    #[arg(long, default_value_t = 9)]
    pub max_sum: u32,
}

pub struct RunOutput {
    pub code: u8,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

enum Rendered {
    Json(Value),
    Text(String),
}

struct Computed {
    body: Rendered,
    mismatch: bool,
}

impl Computed {
    fn ok(v: Value) -> Self {
        Self {
            body: Rendered::Json(v),
            mismatch: false,
        }
    }
}

pub fn run<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                RunOutput {
                    code,
                    stdout: text.into_bytes(),
                    stderr: String::new(),
                }
            } else {
                RunOutput {
                    code,
                    stdout: Vec::new(),
                    stderr: text,
                }
            };
        }
    };
    match execute(&cli) {
        Ok((bytes, mismatch)) => {
            let code = if mismatch { EXIT_MISMATCH } else { EXIT_OK };
            match &cli.output {
                Some(path) => match std::fs::write(path, &bytes) {
                    Ok(()) => RunOutput {
                        code,
                        stdout: Vec::new(),
                        stderr: String::new(),
                    },
                    Err(e) => failure(CliError::Io(e)),
                },
                None => RunOutput {
                    code,
                    stdout: bytes,
                    stderr: String::new(),
                },
            }
        }
        Err(e) => failure(e),
    }
}

fn failure(e: CliError) -> RunOutput {
    RunOutput {
        code: e.code(),
        stdout: Vec::new(),
        stderr: format!("error: {e}\n"),
    }
}

fn execute(cli: &Cli) -> Result<(Vec<u8>, bool), CliError> {
    if cli.budget == Some(0) {
        return Err(CliError::Usage("budget must be positive".into()));
    }
    let c = match &cli.command {
        Command::Density(a) => density(a)?,
        Command::Oracle(o) => oracle(o)?,
        Command::Intersect(a) => intersect(a)?,
        Command::Tree(a) => tree(a, cli.budget.unwrap_or(DEFAULT_NODE_BUDGET))?,
        Command::Verify(a) => verify(a)?,
    };
    let bytes = match (&c.body, cli.format) {
        (Rendered::Text(t), _) => t.clone().into_bytes(),
        (Rendered::Json(v), Format::Json) => {
            let mut s = serde_json::to_string_pretty(v).expect("values serialize");
            s.push('\n');
            s.into_bytes()
        }
        (Rendered::Json(v), Format::Csv) => to_csv(v)?,
    };
    Ok((bytes, c.mismatch))
}

fn check_prime(p: u64) -> Result<(), CliError> {
    if is_odd_prime(p) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("p = {p} is not an odd prime")))
    }
}

fn int_value(n: &BigInt) -> Value {
    serde_json::from_str(&n.to_string()).expect("integers parse as JSON numbers")
}

fn rat_value(r: &Rational) -> Value {
    Value::String(rat_to_report(r))
}

fn count_value(c: &CountResult) -> Value {
    json!({
        "raw_count": c.raw_count.to_string(),
        "k": c.k,
        "normalized": rat_value(&c.normalized),
    })
}

fn triple_of(exps: &[u32]) -> Result<ValuationTriple, CliError> {
    match exps {
        [a, b, c] => Ok(ValuationTriple::sorted([*a, *b, *c])),
        _ => Err(CliError::Usage(format!("expected three exponents, got {}", exps.len()))),
    }
}

fn density(a: &DensityArgs) -> Result<Computed, CliError> {
    check_prime(a.p)?;
    let ev = ExponentVector::new(a.exponents.clone());
    if let Some(s) = a.eval_at_s {
        return Ok(Computed::ok(json!({ "value": rat_value(&alpha(a.p, s, &ev)?) })));
    }
    if a.derivative {
        triple_of(&a.exponents)?;
        return Ok(Computed::ok(json!({ "value": rat_value(&alpha_prime(a.p, &ev)?) })));
    }
    let (kind, poly) = if a.closed_form {
        ("closed-form", closed_form_gu3(a.p, &ev)?.poly)
    } else if a.shifted {
        ("shifted", shifted_poly(&f_poly(a.p, &ev)?)?.poly)
    } else {
        ("density", f_poly(a.p, &ev)?.poly)
    };
    Ok(Computed::ok(json!({
        "p": a.p,
        "exponents": ev.as_slice(),
        "kind": kind,
        "display": poly.to_string(),
        "poly": poly.to_json(),
    })))
}

fn diag_matrix(p: u64, k: u32, exps: &[u32]) -> Result<HermMatrix, CliError> {
    Ok(HermMatrix::diag_powers(RingParams::new(p, k)?, exps))
}

fn oracle(o: &OracleCommand) -> Result<Computed, CliError> {
    match o {
        OracleCommand::Rank1 { p, k, s, a, beta } => {
            check_prime(*p)?;
            let c = if *beta {
                beta_hat_rank1(*p, *k, *s, *a)?
            } else {
                alpha_hat_rank1(*p, *k, *s, *a)?
            };
            Ok(Computed::ok(count_value(&c)))
        }
        OracleCommand::Full { p, k, s_diag, t_diag } => {
            check_prime(*p)?;
            let c = count_representations(&diag_matrix(*p, *k, s_diag)?, &diag_matrix(*p, *k, t_diag)?)?;
            Ok(Computed::ok(count_value(&c)))
        }
        OracleCommand::Stabilize {
            p,
            s_diag,
            t_diag,
            k_lo,
            k_hi,
        } => {
            check_prime(*p)?;
            if k_lo > k_hi || *k_lo == 0 {
                return Err(CliError::Usage("need 1 <= k_lo <= k_hi".into()));
            }
            let stable = stabilization_check(
                &diag_matrix(*p, *k_hi, s_diag)?,
                &diag_matrix(*p, *k_hi, t_diag)?,
                *k_lo,
                *k_hi,
            )?;
            Ok(Computed::ok(json!({ "value": stable })))
        }
    }
}

fn parse_pattern(s: &str) -> Result<DivisorPattern, CliError> {
    let bits: Vec<bool> = s
        .chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(CliError::Usage(format!("bad pattern {s:?}"))),
        })
        .collect::<Result<_, _>>()?;
    match bits[..] {
        [a, b, c] => Ok(DivisorPattern([a, b, c])),
        _ => Err(CliError::Usage(format!("pattern {s:?} must have three digits"))),
    }
}

fn intersect(a: &IntersectArgs) -> Result<Computed, CliError> {
    check_prime(a.p)?;
    let t: [i64; 3] = a
        .triple
        .clone()
        .try_into()
        .map_err(|_| CliError::Usage("--triple needs exactly three values".into()))?;
    if t.iter().sum::<i64>().rem_euclid(2) == 0 && t.iter().all(|&x| x >= 0) {
        return Err(IntersectError::OddSumRequired(ValuationTriple::sorted(t.map(|x| x as u32))).into());
    }
    let nonneg = || -> Result<ValuationTriple, CliError> {
        if t.iter().any(|&x| x < 0) {
            Err(CliError::Usage("this mode needs nonnegative valuations".into()))
        } else {
            Ok(ValuationTriple::sorted(t.map(|x| x as u32)))
        }
    };
    match a.mode {
        IntersectMode::Closed => match &a.case {
            None => Ok(Computed::ok(json!({ "value": int_value(&ztriple(a.p, t)?) }))),
            Some(name) => {
                let case = CaseFormula::parse(name).ok_or_else(|| CliError::Usage(format!("unknown case {name:?}")))?;
                let vt = nonneg()?;
                let value = dtriple_closed(a.p, &vt, case)?;
                let pairing = case.pairing(a.p, &vt)?;
                Ok(Computed {
                    mismatch: value != pairing,
                    body: Rendered::Json(json!({
                        "case": case.name(),
                        "value": int_value(&value),
                        "pairing": int_value(&pairing),
                        "pass": value == pairing,
                    })),
                })
            }
        },
        IntersectMode::InclExcl => {
            let v = dtriple_raw(a.p, t, parse_pattern(&a.pattern)?)?;
            Ok(Computed::ok(json!({ "value": int_value(&v) })))
        }
        IntersectMode::KrCheck => {
            let (l, r) = kr_sides(a.p, &nonneg()?)?;
            Ok(Computed {
                mismatch: l != r,
                body: Rendered::Json(json!({ "lhs": rat_value(&l), "rhs": rat_value(&r), "pass": l == r })),
            })
        }
    }
}

fn placement<'w>(w: &'w TreeWindow, vals: &[u32]) -> Result<Placement<'w>, CliError> {
    let n = w.p() as u32 + 1;
    let mut cycles = Vec::new();
    let mut odd_seen = 0;
    for &v in vals {
        if v % 2 == 1 {
            cycles.push(CycleDescriptor::odd(v, (odd_seen * n..(odd_seen + 1) * n).collect()));
            odd_seen += 1;
        } else {
            cycles.push(CycleDescriptor::even(v, w.root_point(0)));
        }
    }
    if odd_seen as u64 * (w.p() + 1) > w.p().pow(3) + 1 {
        return Err(CliError::Usage("too many odd cycles for disjoint marked sets".into()));
    }
    Ok(Placement::new(w, cycles)?)
}

fn tree(a: &TreeArgs, budget: u64) -> Result<Computed, CliError> {
    let w = TreeWindow::build(a.p, a.radius, budget)?;
    let pl = placement(&w, &a.cycles)?;
    let body = match a.emit {
        TreeEmit::Dot => Rendered::Text(w.to_dot(Some(&pl), 5000)?),
        TreeEmit::Locus => {
            let mut loci = Vec::new();
            for c in &pl.cycles {
                let locus = specialcycles::localgeom::reduced_locus(&w, c)?;
                let curves: Vec<Value> = locus
                    .into_iter()
                    .map(|(n, b)| json!({ "node": w.node_id(n), "b": b }))
                    .collect();
                loci.push(json!({ "valuation": c.valuation, "curves": curves }));
            }
            Rendered::Json(json!({ "p": a.p, "radius": a.radius, "loci": loci }))
        }
        TreeEmit::Divisor => {
            let mut out = Vec::new();
            for c in &pl.cycles {
                let d = special_fiber_divisor(&w, c)?;
                let vertical: Vec<Value> = d
                    .vertical
                    .iter()
                    .map(|(n, m)| json!({ "node": w.node_id(*n), "multiplicity": m.to_string() }))
                    .collect();
                let horizontal: Vec<Value> = d
                    .horizontal
                    .iter()
                    .map(|h| {
                        json!({
                            "anchor": w.node_id(h.anchor),
                            "weight": h.weight.to_string(),
                            "incidence": h.incidence.iter()
                                .map(|(n, m)| json!({ "node": w.node_id(*n), "multiplicity": m.to_string() }))
                                .collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                out.push(json!({ "valuation": c.valuation, "vertical": vertical, "horizontal": horizontal }));
            }
            Rendered::Json(json!({ "p": a.p, "radius": a.radius, "divisors": out }))
        }
        TreeEmit::Checks => {
            let audit = w.audit();
            let mut mismatch = audit.is_err();
            let mut checks = Vec::new();
            for c in pl.cycles.iter().filter(|c| c.is_odd()) {
                let r = degree_zero_report(&w, c)?;
                mismatch |= !r.pass();
                checks.push(json!({
                    "valuation": c.valuation,
                    "checked": r.checked,
                    "pass": r.pass(),
                    "failures": r.failures,
                }));
            }
            return Ok(Computed {
                mismatch,
                body: Rendered::Json(json!({
                    "p": a.p,
                    "radius": a.radius,
                    "nodes": w.len(),
                    "curves": w.curve_count(),
                    "points": w.point_count(),
                    "audit": audit.is_ok(),
                    "degree_zero": checks,
                })),
            });
        }
    };
    Ok(Computed { body, mismatch: false })
}

#[derive(Clone, Debug)]
struct ReportEntry {
    check: String,
    p: u64,
    input: Vec<u32>,
    lhs: Value,
    rhs: Value,
    pass: bool,
}

impl ReportEntry {
    fn to_value(&self) -> Value {
        let input = self.input.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut m = Map::new();
        m.insert("check".into(), json!(self.check));
        m.insert("p".into(), json!(self.p));
        m.insert("input".into(), json!(input));
        m.insert("lhs".into(), self.lhs.clone());
        m.insert("rhs".into(), self.rhs.clone());
        m.insert("pass".into(), json!(self.pass));
        Value::Object(m)
    }
}

fn exponent_vectors(n: usize, max_sum: u32) -> Vec<Vec<u32>> {
    fn go(n: usize, min: u32, budget: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let mut a = min;
        while a * (n - cur.len()) as u32 <= budget {
            cur.push(a);
            go(n, a, budget - a, cur, out);
            cur.pop();
            a += 1;
        }
    }
    let mut out = Vec::new();
    go(n, 0, max_sum, &mut Vec::new(), &mut out);
    out
}

fn kr_entries(p: u64, max_a3: u32) -> Result<Vec<ReportEntry>, CliError> {
    ValuationTriple::enumerate_odd(0, max_a3)
        .par_iter()
        .map(|t| {
            let (l, r) = kr_sides(p, t)?;
            Ok(ReportEntry {
                check: "kr-identity".into(),
                p,
                input: t.as_array().to_vec(),
                pass: l == r,
                lhs: rat_value(&l),
                rhs: rat_value(&r),
            })
        })
        .collect()
}

fn case_entries(p: u64, max_a3: u32) -> Result<Vec<ReportEntry>, CliError> {
    Ok(check_case_consistency(p, max_a3)?
        .into_iter()
        .map(|c| ReportEntry {
            check: format!("case:{}", c.case),
            p,
            input: c.triple.as_array().to_vec(),
            lhs: json!(c.lhs.to_string()),
            rhs: json!(c.rhs.to_string()),
            pass: c.pass,
        })
        .collect())
}

fn closed_form_entries(p: u64, max_a3: u32) -> Result<Vec<ReportEntry>, CliError> {
    ValuationTriple::enumerate_odd(0, max_a3)
        .par_iter()
        .map(|t| {
            let ev = t.to_exponents();
            let l = closed_form_gu3(p, &ev)?.poly;
            let r = shifted_poly(&f_poly(p, &ev)?)?.poly;
            Ok(ReportEntry {
                check: "closed-form".into(),
                p,
                input: t.as_array().to_vec(),
                pass: l == r,
                lhs: json!(l.to_string()),
                rhs: json!(r.to_string()),
            })
        })
        .collect()
}

fn identity_entries(p: u64, max_sum: u32) -> Result<Vec<ReportEntry>, CliError> {
    let vectors: Vec<Vec<u32>> = (1..=3).flat_map(|n| exponent_vectors(n, max_sum)).collect();
    let nested: Vec<Vec<ReportEntry>> = vectors
        .par_iter()
        .map(|e| {
            let ev = ExponentVector::new(e.clone());
            let mut out = vec![ReportEntry {
                check: "functional-equation".into(),
                p,
                input: e.clone(),
                lhs: Value::Null,
                rhs: Value::Null,
                pass: check_functional_equation(p, &ev)?,
            }];
            if ev.sum() + 2 <= max_sum {
                out.push(ReportEntry {
                    check: "recursion".into(),
                    p,
                    input: e.clone(),
                    lhs: Value::Null,
                    rhs: Value::Null,
                    pass: check_recursion_star(p, &ev)?,
                });
            }
            Ok(out)
        })
        .collect::<Result<_, CliError>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn verify(a: &VerifyArgs) -> Result<Computed, CliError> {
    if a.p_list.is_empty() {
        return Err(CliError::Usage("--p-list is empty".into()));
    }
    for &p in &a.p_list {
        check_prime(p)?;
    }
    let kinds: Vec<VerifyKind> = match a.kind {
        VerifyKind::All => vec![
            VerifyKind::KrIdentity,
            VerifyKind::Cases,
            VerifyKind::ClosedForm,
            VerifyKind::Identities,
        ],
        k => vec![k],
    };
    let mut entries = Vec::new();
    for &p in &a.p_list {
        for k in &kinds {
            entries.extend(match k {
                VerifyKind::KrIdentity => kr_entries(p, a.max_a3)?,
                VerifyKind::Cases => case_entries(p, a.max_a3)?,
                VerifyKind::ClosedForm => closed_form_entries(p, a.max_a3)?,
                VerifyKind::Identities => identity_entries(p, a.max_sum)?,
                VerifyKind::All => unreachable!(),
            });
        }
    }
    entries.sort_by(|x, y| (&x.check, x.p, &x.input).cmp(&(&y.check, y.p, &y.input)));
    let mismatch = entries.iter().any(|e| !e.pass);
    Ok(Computed {
        mismatch,
        body: Rendered::Json(emit_report(entries.iter().map(ReportEntry::to_value).collect())),
    })
}

/// `{"schema": "1", "results": [...]}`.
pub fn emit_report(results: Vec<Value>) -> Value {
    json!({ "schema": SCHEMA, "results": results })
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Reports become one row per result; other objects a single row.
pub fn to_csv(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match v.get("results").and_then(Value::as_array) {
        Some(rows) => {
            let header: Vec<String> = match rows.first().and_then(Value::as_object) {
                Some(o) => o.keys().cloned().collect(),
                None => REPORT_FIELDS.iter().map(|s| s.to_string()).collect(),
            };
            w.write_record(&header)?;
            for r in rows {
                w.write_record(header.iter().map(|h| cell(r.get(h).unwrap_or(&Value::Null))))?;
            }
        }
        None => {
            let obj = v
                .as_object()
                .ok_or_else(|| CliError::Usage("csv output needs an object".into()))?;
            w.write_record(obj.keys())?;
            w.write_record(obj.values().map(cell))?;
        }
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}
