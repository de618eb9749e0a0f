use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use msic_core::bounds::{clique_cover_upper, complement_clique_lower, CliqueCover, CoverMode};
use msic_core::codec::{code_from_fitting, code_length, verify_code, CodecError, LinearCode, VerifyMode};
use msic_core::oracle::{optimal_linear_code_bruteforce, OracleError, GUARD_MAX_LENGTH};
use msic_core::solver::{complexity_exponents, solve, SolveOptions, SolveReport, SolverError};
use msic_core::{Instance, InstanceError};
use serde_json::{json, Value};

use crate::report::{digest, millis, write_file};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVALID_CODE: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::CapExceeded { .. } => EXIT_CAP,
            SolverError::NotSingleSender => EXIT_INFEASIBLE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        let code = if e.is_infeasibility() { EXIT_INFEASIBLE } else { EXIT_INPUT };
        Self::new(code, e.to_string())
    }
}

/// What a command produced, before formatting.
pub struct Outcome {
    pub human: String,
    pub results: Value,
    pub digest: Option<String>,
    pub timings: BTreeMap<String, f64>,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(inst: Option<&Instance>, human: String, results: Value) -> Self {
        Self { human, results, digest: inst.map(digest), timings: BTreeMap::new(), exit_code: EXIT_OK }
    }

    fn timed(mut self, phase: &str, start: Instant) -> Self {
        self.timings.insert(phase.into(), millis(start.elapsed()));
        self
    }
}

pub fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
    Instance::parse(&text).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn load_code(path: &Path, inst: &Instance) -> Result<LinearCode, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
    LinearCode::parse(&text, inst).map_err(|e| {
        let code = if matches!(e, CodecError::SupportViolation { .. }) { EXIT_INVALID_CODE } else { EXIT_INPUT };
        CliError::new(code, format!("{}: {e}", path.display()))
    })
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|&i| i + 1).collect()
}

fn set(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn code_json(code: &LinearCode) -> Value {
    serde_json::from_str(&code.to_json()).expect("code JSON is valid")
}

fn code_lines(code: &LinearCode) -> String {
    let mut out = String::new();
    for (n, rows) in code.describe().iter().enumerate() {
        let shown = if rows.is_empty() { "(silent)".to_string() } else { rows.join("; ") };
        let _ = writeln!(out, "  sender {}: {shown}", n + 1);
    }
    out
}

pub struct SolveArgs {
    pub options: SolveOptions,
    pub emit_code: Option<PathBuf>,
    pub witness: bool,
}

fn run_solver(inst: &Instance, options: &SolveOptions) -> Result<SolveReport, CliError> {
    Ok(solve(inst, options)?)
}

pub fn cmd_solve(path: &Path, args: &SolveArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let inst = load_instance(path)?;
    let report = run_solver(&inst, &args.options)?;
    let code = code_from_fitting(&report.witness, &inst).expect("solver witnesses are fittings");
    let space = complexity_exponents(&inst).search;

    let mut human = format!("hyperminrank = {}\n", report.hyperminrank);
    let _ = writeln!(
        human,
        "search space: 2^{} candidates enumerated, {} examined",
        space.enumerated_exponent, report.candidates_examined
    );
    if args.witness {
        let _ = writeln!(human, "witness fitting [A_1 ... A_N]:\n{}", report.witness.to_string().trim_end());
        let edges: Vec<String> = report.witness_choice.edges().iter().map(ToString::to_string).collect();
        let _ = writeln!(human, "witness edges: {}", edges.join(" "));
        let _ = write!(human, "derived code:\n{}", code_lines(&code));
    }
    if let Some(out) = &args.emit_code {
        write_file(out, &(code.to_json() + "\n"))
            .map_err(|e| CliError::new(EXIT_INPUT, format!("cannot write {}: {e}", out.display())))?;
        let _ = writeln!(human, "code of length {} written to {}", code_length(&code), out.display());
    }

    let results = json!({
        "hyperminrank": report.hyperminrank,
        "candidates_examined": report.candidates_examined.to_string(),
        "search_space": space,
        "witness": {
            "fitting": report.witness.to_rows(),
            "edges": report.witness_choice.edges().iter().map(ToString::to_string).collect::<Vec<_>>(),
            "code": code_json(&code)["code"],
        },
        "emitted_code": args.emit_code.as_ref().map(|p| p.display().to_string()),
    });
    let mut outcome = Outcome::ok(Some(&inst), human, results).timed("total", start);
    outcome.timings.insert("search".into(), millis(report.elapsed));
    Ok(outcome)
}

fn cover_json(cover: &CliqueCover) -> Value {
    json!({
        "m": cover.m(),
        "exact": cover.exact,
        "fell_back": cover.fell_back,
        "certified": cover.certified,
        "cliques": cover.cliques.iter().map(|c| json!({
            "receivers": one_based(&c.receivers),
            "sender": c.sender + 1,
        })).collect::<Vec<_>>(),
    })
}

pub fn cmd_bounds(path: &Path, mode: CoverMode, with_exact_solve: bool, options: &SolveOptions) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let inst = load_instance(path)?;
    let (lower, witness) = complement_clique_lower(&inst);
    let cover = clique_cover_upper(&inst, mode);
    let mode_name = if mode == CoverMode::Exact { "exact" } else { "greedy" };

    let mut human = format!("lower = {lower}\n");
    if let Some(w) = &witness {
        let _ = writeln!(human, "  complement clique {} at sender {}", set(&w.vertices), w.sender + 1);
    }
    let _ = writeln!(human, "upper = {} ({mode_name}{})", cover.m(), if cover.fell_back { ", node cap hit" } else { "" });
    let cliques: Vec<String> = cover.cliques.iter().map(|c| format!("{}@{}", set(&c.receivers), c.sender + 1)).collect();
    let _ = writeln!(human, "  cover {}", cliques.join(" "));
    let _ = writeln!(human, "  induced code verified: {}", cover.certified);

    let mut exact_value = None;
    let mut timings = BTreeMap::new();
    if with_exact_solve {
        let t = Instant::now();
        let h = run_solver(&inst, options)?.hyperminrank;
        timings.insert("solve".to_string(), millis(t.elapsed()));
        let ok = lower <= h && h <= cover.m();
        let _ = writeln!(human, "hyperminrank = {h}");
        let _ = writeln!(human, "sandwich {lower} <= {h} <= {}: {}", cover.m(), if ok { "OK" } else { "VIOLATED" });
        exact_value = Some((h, ok));
    }

    let results = json!({
        "lower": lower,
        "lower_witness": witness.map(|w| json!({
            "vertices": one_based(&w.vertices),
            "sender": w.sender + 1,
            "full_at": one_based(&w.full_at),
            "loopless_at": one_based(&w.loopless_at),
        })),
        "upper": cover.m(),
        "mode": mode_name,
        "cover": cover_json(&cover),
        "hyperminrank": exact_value.map(|(h, _)| h),
        "sandwich": exact_value.map(|(_, ok)| ok),
    });
    let mut outcome = Outcome::ok(Some(&inst), human, results);
    outcome.timings = timings;
    Ok(outcome.timed("total", start))
}

pub fn cmd_verify(path: &Path, code_path: &Path) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let inst = load_instance(path)?;
    let code = load_code(code_path, &inst)?;
    let verdict = verify_code(&code, &inst, VerifyMode::Both).map_err(|e| CliError::new(EXIT_INVALID_CODE, e.to_string()))?;
    let valid = verdict.valid && verdict.algebraic == Some(true) && verdict.simulated == Some(true);

    let mut human = format!("code length = {}\n{}", code_length(&code), code_lines(&code));
    let _ = writeln!(
        human,
        "algebraic: {}, simulated: {}",
        verdict.algebraic.unwrap_or(false),
        verdict.simulated.unwrap_or(false)
    );
    if !verdict.undecodable.is_empty() {
        let _ = writeln!(human, "undecodable receivers: {}", set(&verdict.undecodable));
    }
    let _ = writeln!(human, "valid = {valid}");

    let results = json!({
        "valid": valid,
        "length": code_length(&code),
        "algebraic": verdict.algebraic,
        "simulated": verdict.simulated,
        "undecodable": one_based(&verdict.undecodable),
    });
    let mut outcome = Outcome::ok(Some(&inst), human, results).timed("total", start);
    if !valid {
        outcome.exit_code = EXIT_INVALID_CODE;
    }
    Ok(outcome)
}

pub fn cmd_oracle(path: &Path, max_length: Option<usize>, force: bool, options: &SolveOptions) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let inst = load_instance(path)?;
    let max_length = max_length.unwrap_or(inst.k().min(GUARD_MAX_LENGTH));
    let report = optimal_linear_code_bruteforce(&inst, max_length, force).map_err(|e| {
        let code = match e {
            OracleError::BeyondGuard => EXIT_CAP,
            OracleError::LengthAboveK { .. } => EXIT_INFEASIBLE,
            OracleError::TooManyMessages => EXIT_CAP,
        };
        let hint = if code == EXIT_CAP { " (pass --force to run anyway)" } else { "" };
        CliError::new(code, format!("{e}{hint}"))
    })?;
    let oracle_time = start.elapsed();
    let h = run_solver(&inst, options)?.hyperminrank;
    // when nothing up to max_length decodes, agreement means the solver also exceeds it
    let agreement = match report.optimal_length {
        Some(l) => l == h,
        None => h > max_length,
    };

    let mut human = match report.optimal_length {
        Some(l) => format!("oracle optimal length = {l}\n"),
        None => format!("oracle: no linear code of length <= {max_length}\n"),
    };
    let _ = writeln!(human, "configurations checked: {}", report.configurations_checked);
    let _ = writeln!(human, "solver hyperminrank = {h}");
    let _ = writeln!(human, "agreement = {agreement}");

    let results = json!({
        "optimal_length": report.optimal_length,
        "max_length": max_length,
        "configurations_checked": report.configurations_checked.to_string(),
        "witness_code": report.witness_code.as_ref().map(|c| code_json(c)["code"].clone()),
        "solver_hyperminrank": h,
        "agreement": agreement,
    });
    let mut outcome = Outcome::ok(Some(&inst), human, results).timed("total", start);
    outcome.timings.insert("oracle".into(), millis(oracle_time));
    Ok(outcome)
}

pub fn cmd_complexity(path: &Path) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let inst = load_instance(path)?;
    let p = complexity_exponents(&inst);
    let t = &p.threshold;

    let mut human = format!("E1 = {}\nE2 = {}\nE3 = {}\n", p.e1, p.e2, p.e3);
    let _ = writeln!(
        human,
        "S = 2^{} = {} (closed form), 2^{} = {} enumerated",
        p.search.e1, p.search.formula_size, p.search.enumerated_exponent, p.search.enumerated_size
    );
    if let Some(e) = p.e_embedded {
        let _ = writeln!(human, "E_embedded = {e}");
    }
    let _ = writeln!(
        human,
        "replication threshold: r0/K + delta = {}/{} {} (1+delta)^2/(2N) = {}/{}: {}",
        t.lhs.0,
        t.lhs.1,
        if t.holds { "<=" } else { ">" },
        t.rhs.0,
        t.rhs.1,
        if t.holds { "holds" } else { "fails" }
    );

    let results = json!({
        "e1": p.e1,
        "e2": p.e2,
        "e3": p.e3,
        "e_embedded": p.e_embedded,
        "total_load": p.total_load,
        "search_space": p.search,
        "threshold": {
            "holds": t.holds,
            "lhs": [t.lhs.0, t.lhs.1],
            "rhs": [t.rhs.0, t.rhs.1],
            "lhs_value": t.lhs_f64(),
            "rhs_value": t.rhs_f64(),
        },
    });
    Ok(Outcome::ok(Some(&inst), human, results).timed("total", start))
}

pub struct GenArgs {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub r0: usize,
    pub seed: u64,
    pub embedded: bool,
    pub out: Option<PathBuf>,
}

pub fn cmd_gen(args: &GenArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let inst = if args.embedded {
        Instance::generate_embedded(args.k, args.seed)?
    } else {
        Instance::generate_random(args.k, args.n, args.delta, args.r0, args.seed)?
    };
    let text = inst.serialize() + "\n";
    let human = match &args.out {
        Some(out) => {
            write_file(out, &text).map_err(|e| CliError::new(EXIT_INPUT, format!("cannot write {}: {e}", out.display())))?;
            format!("instance with K = {}, N = {} written to {}\n", inst.k(), inst.n(), out.display())
        }
        None => text,
    };
    let stats = inst.derive_stats();
    let results = json!({
        "path": args.out.as_ref().map(|p| p.display().to_string()),
        "k": inst.k(),
        "n": inst.n(),
        "total_load": stats.total_load,
        "max_side_info": stats.max_side_info,
        "embedded": inst.is_embedded(),
        "seed": args.seed,
    });
    Ok(Outcome::ok(Some(&inst), human, results).timed("total", start))
}
