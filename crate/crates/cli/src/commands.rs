//! Subcommand implementations.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use mkz_core::analysis::{bound_prefactor, modulus, rate_fit};
use mkz_core::verify::{self, SweepSpec, VerificationReport, AXIOMS_NOTE, LEMMA_4_3_NOTE};
use mkz_core::{
    eval_classical_mkz, eval_max_product_mkz, grid_point, sup_error, sup_error_classical, Degree, NodeConvention,
    SmoothingExponent, TestFunction, DEFAULT_MODULUS_GRID,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    check_alpha_cap, init_threads, AlphaList, DegreeList, ExperimentConfig, FunctionList, OutputFormat, Threads,
};
use crate::error::{CliError, CliResult};
use crate::registry;

/// Whether every selected check passed.
pub type Verdict = bool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Operator {
    Maxprod,
    Classical,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Builtin name or piecewise-linear file
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long, value_enum, default_value = "maxprod")]
    pub op: Operator,
    /// Node convention of the classical operator
    #[arg(long, default_value = "mkz_classic")]
    pub nodes: NodeConvention,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub y: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Serialize)]
struct EvalRecord<'a> {
    function: &'a str,
    operator: &'static str,
    nodes: Option<NodeConvention>,
    m: u64,
    y: f64,
    tol: f64,
    value: f64,
    r_max_used: u64,
    tail_bound: f64,
}

pub fn run_eval(args: &EvalArgs) -> CliResult<Verdict> {
    let g = registry::resolve(&args.function)?;
    let m = Degree::new(args.m)?;
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::usage(format!("tol must be positive, got {}", args.tol)));
    }
    let (result, operator, nodes) = match args.op {
        Operator::Maxprod => (eval_max_product_mkz(&g, m, args.y, args.tol)?, "maxprod", None),
        Operator::Classical => (
            eval_classical_mkz(&g, m, args.y, args.tol, args.nodes)?,
            "classical",
            Some(args.nodes),
        ),
    };
    println!("value       {:?}", result.value);
    println!("r_max_used  {}", result.r_max_used);
    println!("tail_bound  {:e}", result.tail_bound);
    let record = EvalRecord {
        function: g.name(),
        operator,
        nodes,
        m: m.get(),
        y: args.y,
        tol: args.tol,
        value: result.value,
        r_max_used: result.r_max_used,
        tail_bound: result.tail_bound,
    };
    println!("{}", serde_json::to_string(&record).expect("record serializes"));
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Lemma41,
    Lemma42,
    Lemma43,
    Eq42,
    Axioms,
    Corollary22,
    Theorem51,
    All,
}

impl Check {
    const ORDER: [Check; 7] = [
        Check::Lemma41,
        Check::Lemma42,
        Check::Lemma43,
        Check::Eq42,
        Check::Axioms,
        Check::Corollary22,
        Check::Theorem51,
    ];

    fn expand(self) -> Vec<Check> {
        match self {
            Check::All => Self::ORDER.to_vec(),
            c => vec![c],
        }
    }

    fn needs_theorem_range(self) -> bool {
        matches!(self, Check::Lemma43 | Check::Eq42 | Check::Corollary22 | Check::Theorem51)
    }

    fn file_stem(self) -> &'static str {
        match self {
            Check::Lemma41 => "lemma_4_1",
            Check::Lemma42 => "lemma_4_2",
            Check::Lemma43 => "lemma_4_3",
            Check::Eq42 => "distance_bound",
            Check::Axioms => "axioms",
            Check::Corollary22 => "corollary_2_2",
            Check::Theorem51 => "theorem_5_1",
            Check::All => "all",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub which: Check,
    /// Degrees, e.g. `4,8,16` or `4-256/4`
    #[arg(long)]
    pub m_values: Option<DegreeList>,
    /// Smoothing exponents, e.g. `2-8`
    #[arg(long)]
    pub alphas: Option<AlphaList>,
    #[arg(long)]
    pub s_max: Option<u64>,
    #[arg(long)]
    pub r_max: Option<u64>,
    #[arg(long)]
    pub y_per_interval: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Functions for the bound checks; defaults to the builtins with a known modulus
    #[arg(long = "fn")]
    pub functions: Option<FunctionList>,
    /// Random piecewise-linear pairs for the axiom check
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    #[arg(long, default_value_t = 17)]
    pub seed: u64,
    /// Directory for one JSON document per check
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<Threads>,
}

#[derive(Debug, Serialize)]
struct CheckDocument<'a> {
    check: &'static str,
    notes: Vec<&'static str>,
    passed: bool,
    reports: &'a [VerificationReport],
}

impl VerifyArgs {
    fn lemma_spec(&self) -> SweepSpec {
        self.apply(SweepSpec::default())
    }

    fn theorem_spec(&self) -> SweepSpec {
        self.apply(SweepSpec::theorem_default())
    }

    fn apply(&self, mut spec: SweepSpec) -> SweepSpec {
        if let Some(DegreeList(ms)) = &self.m_values {
            spec.m_values = ms.clone();
        }
        if let Some(AlphaList(alphas)) = &self.alphas {
            spec.alphas = alphas.clone();
        }
        spec.s_max = self.s_max.unwrap_or(spec.s_max);
        spec.r_max = self.r_max.unwrap_or(spec.r_max);
        spec.y_per_interval = self.y_per_interval.unwrap_or(spec.y_per_interval);
        spec.tol = self.tol.unwrap_or(spec.tol);
        spec
    }

    fn bound_functions(&self) -> CliResult<Vec<TestFunction<f64>>> {
        match &self.functions {
            Some(FunctionList(refs)) => registry::resolve_all(refs),
            None => Ok(registry::analytic_builtins()),
        }
    }
}

pub fn run_verify(args: &VerifyArgs) -> CliResult<Verdict> {
    init_threads(args.threads.unwrap_or_default())?;
    let checks = args.which.expand();
    if let Some(DegreeList(ms)) = &args.m_values {
        if let Some(small) = ms.iter().find(|m| m.get() < Degree::THEOREM_MIN) {
            if let Some(c) = checks.iter().find(|c| c.needs_theorem_range()) {
                return Err(CliError::usage(format!(
                    "{} requires m >= {}, got m = {}",
                    c.file_stem(),
                    Degree::THEOREM_MIN,
                    small
                )));
            }
        }
    }
    if let Some(tol) = args.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::usage(format!("tol must be positive, got {tol}")));
        }
    }
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let mut all_passed = true;
    for check in checks {
        let started = std::time::Instant::now();
        let (reports, notes) = run_check(check, args)?;
        let passed = reports.iter().all(VerificationReport::passed);
        all_passed &= passed;
        for r in &reports {
            println!(
                "{:<24} cases {:>10}  failed {:>8}  worst_margin {:>12.4e}  {}",
                r.check_name,
                r.cases_total,
                r.cases_failed,
                r.worst_margin,
                if r.passed() { "PASS" } else { "FAIL" }
            );
        }
        eprintln!("{} finished in {:.2?}", check.file_stem(), started.elapsed());
        if let Some(dir) = &args.out_dir {
            let doc = CheckDocument {
                check: check.file_stem(),
                notes,
                passed,
                reports: &reports,
            };
            write_json(&dir.join(format!("{}.json", check.file_stem())), &doc)?;
        }
    }
    Ok(all_passed)
}

fn run_check(check: Check, args: &VerifyArgs) -> CliResult<(Vec<VerificationReport>, Vec<&'static str>)> {
    let grid = |default: usize| args.grid_n.unwrap_or(default);
    Ok(match check {
        Check::Lemma41 => (vec![verify::check_lemma_4_1(&args.lemma_spec())?], vec![]),
        Check::Lemma42 => (vec![verify::check_lemma_4_2(&args.lemma_spec())?], vec![]),
        Check::Lemma43 => (vec![verify::check_lemma_4_3(&args.lemma_spec())?], vec![LEMMA_4_3_NOTE]),
        Check::Eq42 => (vec![verify::check_distance_bound(&args.theorem_spec(), grid(1025))?], vec![]),
        Check::Axioms => {
            let ms = match &args.m_values {
                Some(DegreeList(ms)) => ms.clone(),
                None => [4, 8, 16, 32].map(|m| Degree::new(m).unwrap()).to_vec(),
            };
            let tol = args.tol.unwrap_or(1e-10);
            let pairs = verify::seeded_pairs(args.seed, args.pairs);
            let mut parts = Vec::with_capacity(pairs.len() * ms.len());
            for (i, (g, h)) in pairs.iter().enumerate() {
                for &m in &ms {
                    let mut r = verify::check_axioms(g, h, m, grid(257), tol)?;
                    r.tag_witnesses("pair", i as f64);
                    parts.push(r);
                }
            }
            (vec![VerificationReport::combine("axioms", parts)], vec![AXIOMS_NOTE])
        }
        Check::Corollary22 => {
            let spec = args.theorem_spec();
            let reports = args
                .bound_functions()?
                .iter()
                .map(|g| verify::check_corollary_2_2_sweep(g, &spec, grid(1025)))
                .collect::<Result<Vec<_>, _>>()?;
            (reports, vec![])
        }
        Check::Theorem51 => {
            let spec = args.theorem_spec();
            let mut reports = Vec::new();
            for g in args.bound_functions()? {
                let bounds = verify::check_theorem_5_1(&g, &spec, grid(1025))?;
                reports.push(verify::summarize_bound_reports(&format!("theorem_5_1/{}", g.name()), &bounds));
            }
            (reports, vec![])
        }
        Check::All => unreachable!("expanded before dispatch"),
    })
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// JSON experiment configuration; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin names or piecewise-linear files, comma separated
    #[arg(long = "fn")]
    pub functions: Option<FunctionList>,
    #[arg(long)]
    pub m_values: Option<DegreeList>,
    #[arg(long)]
    pub alphas: Option<AlphaList>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<Threads>,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(FunctionList(f)) = &self.functions {
            cfg.functions = f.clone();
        }
        if let Some(DegreeList(ms)) = &self.m_values {
            cfg.m_values = ms.clone();
        }
        if let Some(AlphaList(a)) = &self.alphas {
            cfg.alphas = a.clone();
        }
        cfg.grid_n = self.grid_n.unwrap_or(cfg.grid_n);
        cfg.tol = self.tol.unwrap_or(cfg.tol);
        cfg.output_format = self.format.unwrap_or(cfg.output_format);
        if self.out.is_some() {
            cfg.output_path = self.out.clone();
        }
        cfg.threads = self.threads.unwrap_or(cfg.threads);
        cfg.normalize()?;
        check_alpha_cap(&cfg.alphas)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub g_name: String,
    pub m: u64,
    pub sup_error: f64,
    pub argmax_y: f64,
    pub bound_alpha2: Option<f64>,
    pub bound_best: Option<f64>,
    pub best_alpha: Option<u32>,
    pub fitted_slope_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub g_name: String,
    pub slope: Option<f64>,
    pub points: usize,
}

/// `max_i (1 + 8 (1-y_i) y_i^(1/alpha))` over the grid.
fn max_prefactor(alpha: SmoothingExponent, grid_n: usize) -> f64 {
    (0..grid_n)
        .map(|i| bound_prefactor(alpha, grid_point::<f64>(i, grid_n)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Grid supremum of the bound for one exponent, when the hypotheses hold.
fn sup_bound(g: &TestFunction<f64>, m: Degree, alpha: SmoothingExponent, prefactor: f64) -> CliResult<Option<f64>> {
    if m.get() < Degree::THEOREM_MIN || !g.has_analytic_modulus() {
        return Ok(None);
    }
    let omega = modulus(g, alpha.delta::<f64>(m), DEFAULT_MODULUS_GRID)?;
    Ok(Some(prefactor * omega.value))
}

pub fn convergence_rows(cfg: &ExperimentConfig) -> CliResult<(Vec<ConvergenceRow>, Vec<RateSummary>)> {
    let functions = registry::resolve_all(&cfg.functions)?;
    let alpha2 = SmoothingExponent::new(2).unwrap();
    let mut alphas = cfg.alphas.clone();
    if !alphas.contains(&alpha2) {
        alphas.insert(0, alpha2);
    }
    let prefactors: Vec<(SmoothingExponent, f64)> =
        alphas.iter().map(|&a| (a, max_prefactor(a, cfg.grid_n))).collect();

    let mut rows = Vec::new();
    let mut rates = Vec::new();
    for g in &functions {
        let computed = cfg
            .m_values
            .par_iter()
            .map(|&m| -> CliResult<ConvergenceRow> {
                let (sup, argmax_y) = sup_error(g, m, cfg.grid_n, cfg.tol)?;
                let mut bound_alpha2 = None;
                let mut best: Option<(u32, f64)> = None;
                for &(alpha, pre) in &prefactors {
                    let Some(b) = sup_bound(g, m, alpha, pre)? else { continue };
                    if alpha == alpha2 {
                        bound_alpha2 = Some(b);
                    }
                    if cfg.alphas.contains(&alpha) && best.is_none_or(|(_, cur)| b < cur) {
                        best = Some((alpha.get(), b));
                    }
                }
                Ok(ConvergenceRow {
                    g_name: g.name().to_owned(),
                    m: m.get(),
                    sup_error: sup,
                    argmax_y,
                    bound_alpha2,
                    bound_best: best.map(|b| b.1),
                    best_alpha: best.map(|b| b.0),
                    fitted_slope_so_far: None,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut points = Vec::new();
        for mut row in computed {
            if row.sup_error > 0.0 {
                points.push((row.m, row.sup_error));
            }
            row.fitted_slope_so_far = rate_fit(&points).ok();
            rows.push(row);
        }
        rates.push(RateSummary {
            g_name: g.name().to_owned(),
            slope: rate_fit(&points).ok(),
            points: points.len(),
        });
    }
    Ok((rows, rates))
}

pub fn run_converge(args: &ExperimentArgs) -> CliResult<Verdict> {
    let cfg = args.resolve()?;
    init_threads(cfg.threads)?;
    let (rows, rates) = convergence_rows(&cfg)?;
    let header = [
        "g_name",
        "m",
        "sup_error",
        "argmax_y",
        "bound_alpha2",
        "bound_best",
        "best_alpha",
        "fitted_slope_so_far",
    ];
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.g_name.clone(),
                r.m.to_string(),
                fmt_f64(r.sup_error),
                fmt_f64(r.argmax_y),
                fmt_opt(r.bound_alpha2),
                fmt_opt(r.bound_best),
                r.best_alpha.map(|a| a.to_string()).unwrap_or_default(),
                fmt_opt(r.fitted_slope_so_far),
            ]
        })
        .collect();
    #[derive(Serialize)]
    struct Doc<'a> {
        rows: &'a [ConvergenceRow],
        rates: &'a [RateSummary],
    }
    emit(&cfg, &header, &records, &Doc { rows: &rows, rates: &rates })?;
    let summary: Vec<String> = rates
        .iter()
        .map(|r| match r.slope {
            Some(s) => format!("rate {}: log-log slope {:.6} over {} points", r.g_name, s, r.points),
            None => format!("rate {}: no fit ({} positive errors)", r.g_name, r.points),
        })
        .collect();
    print_summary(&cfg, &summary);
    Ok(true)
}

#[derive(Debug, Args, Default)]
pub struct CompareArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Node convention of the classical operator
    #[arg(long, default_value = "mkz_classic")]
    pub nodes: NodeConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub g_name: String,
    pub m: u64,
    pub sup_err_maxprod: f64,
    pub sup_err_classical: f64,
    pub ratio: Option<f64>,
}

pub fn compare_rows(cfg: &ExperimentConfig, nodes: NodeConvention) -> CliResult<Vec<CompareRow>> {
    let functions = registry::resolve_all(&cfg.functions)?;
    let mut rows = Vec::new();
    for g in &functions {
        let part = cfg
            .m_values
            .par_iter()
            .map(|&m| -> CliResult<CompareRow> {
                let (maxprod, _) = sup_error(g, m, cfg.grid_n, cfg.tol)?;
                let (classical, _) = sup_error_classical(g, m, cfg.grid_n, cfg.tol, nodes)?;
                Ok(CompareRow {
                    g_name: g.name().to_owned(),
                    m: m.get(),
                    sup_err_maxprod: maxprod,
                    sup_err_classical: classical,
                    ratio: (classical > 0.0).then(|| maxprod / classical),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        rows.extend(part);
    }
    Ok(rows)
}

pub fn run_compare(args: &CompareArgs) -> CliResult<Verdict> {
    let cfg = args.experiment.resolve()?;
    init_threads(cfg.threads)?;
    let rows = compare_rows(&cfg, args.nodes)?;
    let header = ["g_name", "m", "sup_err_maxprod", "sup_err_classical", "ratio"];
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.g_name.clone(),
                r.m.to_string(),
                fmt_f64(r.sup_err_maxprod),
                fmt_f64(r.sup_err_classical),
                fmt_opt(r.ratio),
            ]
        })
        .collect();
    emit(&cfg, &header, &records, &rows)?;
    Ok(true)
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn emit<S: Serialize + ?Sized>(
    cfg: &ExperimentConfig,
    header: &[&str],
    records: &[Vec<String>],
    doc: &S,
) -> CliResult<()> {
    let sink: Box<dyn Write> = match &cfg.output_path {
        Some(path) => Box::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    match cfg.output_format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(header).context("writing CSV header")?;
            for r in records {
                w.write_record(r).context("writing CSV row")?;
            }
            w.flush().context("flushing CSV")?;
        }
        OutputFormat::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, doc).context("writing JSON")?;
            writeln!(sink).context("writing JSON")?;
        }
    }
    Ok(())
}

/// Summary lines go to stdout unless the data itself went there.
fn print_summary(cfg: &ExperimentConfig, lines: &[String]) {
    for line in lines {
        if cfg.output_path.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
