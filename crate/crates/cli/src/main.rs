use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use optde::boxexp::{box_expectation_reduced, box_expectation_tensor, BoxProblem, TensorVariant};
use optde::catalog::{CatalogId, DomainSpec, PointSpec, ProblemFile, ProblemSpec};
use optde::hilbert::{benjamin_ono_transforms, error_grid, solve_lorentzian, LorentzianSum};
use optde::optimizer::{optimize_map, OptimizerOptions, SingularitySet};
use optde::quadrature::{convergence_study, optimal_step, LabeledTransform, StudyRow};
use optde::sinc::adaptive::{adaptive_integrate, AdaptiveOptions};
use optde::sinc::pade::{central_samples, degree_schedule, fit_sinc_pade, pade_poles};

#[derive(Parser)]
#[command(name = "optde", version, about = "Optimized double-exponential quadrature and Sinc methods")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    /// Rule size n (2n+1 nodes).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Variable transformation.
    #[arg(long, global = true, value_enum)]
    transform: Option<TransformArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformArg {
    Se,
    De,
    Opt,
    Adaptive,
}

impl TransformArg {
    fn label(self) -> &'static str {
        match self {
            TransformArg::Se => "se",
            TransformArg::De => "de",
            TransformArg::Opt => "opt",
            TransformArg::Adaptive => "adaptive",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a problem.
    Integrate {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Target relative error of the adaptive method.
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
    },
    /// Solve the parameter program for a set of singularities.
    OptimizeMap(MapArgs),
    /// Relative error against the reference for several n and transforms.
    Convergence {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Comma-separated rule sizes.
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
    },
    /// Sinc-Padé pole estimates from the central nodes.
    PadePoles {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Number of conjugate pairs to report.
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Traveling wave of the forced Benjamin-Ono equation for the
    /// three-Lorentzian solution.
    BoSolve {
        /// Wave speed.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        speed: f64,
    },
    /// Exponential box expectation over [0,1]^m.
    Box {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, value_enum, default_value_t = BoxMethod::Reduced)]
        method: BoxMethod,
        #[arg(long, default_value = "optimized")]
        variant: TensorVariant,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoxMethod {
    Reduced,
    Tensor,
    Both,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["problem", "catalog", "expr"])))]
struct ProblemArgs {
    /// JSON problem file.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Built-in problem: ex1..ex5, tanh, bo.
    #[arg(long)]
    catalog: Option<CatalogId>,
    /// Integrand expression in x.
    #[arg(long, requires = "domain", allow_hyphen_values = true)]
    expr: Option<String>,
    /// finite:a,b | infinite | semi_log | semi_exp
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<DomainSpec>,
    /// Singularity as re,im (repeatable).
    #[arg(long = "singularity", value_parser = parse_point, allow_hyphen_values = true)]
    singularities: Vec<Complex64>,
    /// Reference value of the integral.
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<f64>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["problem", "catalog", "domain"])))]
struct MapArgs {
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<CatalogId>,
    #[arg(long, requires = "singularities", allow_hyphen_values = true)]
    domain: Option<DomainSpec>,
    #[arg(long = "singularity", value_parser = parse_point, allow_hyphen_values = true)]
    singularities: Vec<Complex64>,
}

fn parse_point(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im, got '{s}'"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    Ok(Complex64::new(p(re)?, p(im)?))
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<optde::Error> for CliError {
    fn from(e: optde::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

impl ProblemArgs {
    fn resolve(&self) -> CliResult<ProblemSpec> {
        let mut spec = if let Some(path) = &self.problem {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            ProblemFile::from_json(&text)?.into_spec()?
        } else if let Some(id) = self.catalog {
            ProblemSpec::catalog(id)
        } else {
            let expr = self.expr.as_deref().expect("source group is required");
            let domain = self.domain.expect("--expr requires --domain");
            ProblemSpec::from_expression(expr, domain.outer()?)?
        };
        if !self.singularities.is_empty() {
            spec.singularities = Some(SingularitySet::new(self.singularities.iter().copied())?);
        }
        if self.reference.is_some() {
            spec.reference = self.reference;
        }
        Ok(spec)
    }
}

fn write_json(v: &impl Serialize) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn rel_error(value: f64, reference: Option<f64>) -> Option<f64> {
    reference.map(|r| ((value - r) / r).abs())
}

fn points(z: &[Complex64]) -> Vec<PointSpec> {
    z.iter().map(|p| PointSpec { re: p.re, im: p.im }).collect()
}

fn joined(v: impl IntoIterator<Item = String>) -> String {
    v.into_iter().collect::<Vec<_>>().join(";")
}

fn fixed_transform(spec: &ProblemSpec, t: TransformArg, opts: &OptimizerOptions) -> CliResult<LabeledTransform> {
    if t == TransformArg::Adaptive {
        return usage("this subcommand does not support --transform adaptive");
    }
    Ok(spec.transform(t.label(), opts)?)
}

fn default_transform(spec: &ProblemSpec) -> TransformArg {
    if spec.singularities.is_some() {
        TransformArg::Opt
    } else {
        TransformArg::De
    }
}

#[derive(Serialize)]
struct IntegrateReport {
    transform: String,
    n: usize,
    step: f64,
    evaluations: usize,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_error: Option<f64>,
}

#[derive(Serialize)]
struct IterationReport {
    iteration: usize,
    phase: u8,
    n: usize,
    value: f64,
    estimate: Option<f64>,
    u0: f64,
    u: Vec<f64>,
    poles: Vec<PointSpec>,
    fallback: bool,
}

#[derive(Serialize)]
struct AdaptiveReport {
    transform: &'static str,
    n: usize,
    evaluations: usize,
    value: f64,
    estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_error: Option<f64>,
    iterations: Vec<IterationReport>,
}

fn integrate(cli: &Cli, problem: &ProblemArgs, eps: f64) -> CliResult<()> {
    let spec = problem.resolve()?;
    let opts = OptimizerOptions::default();
    let t = cli.transform.unwrap_or_else(|| default_transform(&spec));
    if t == TransformArg::Adaptive {
        let aopts = AdaptiveOptions {
            eps,
            max_n: cli.n.unwrap_or(AdaptiveOptions::default().max_n),
            ..Default::default()
        };
        let r = adaptive_integrate(&spec.integrand, spec.domain, &aopts)?;
        let iterations: Vec<IterationReport> = r
            .iterations
            .iter()
            .map(|i| IterationReport {
                iteration: i.iteration,
                phase: i.phase,
                n: i.n,
                value: i.value,
                estimate: i.estimate,
                u0: i.map.u0,
                u: i.map.u.clone(),
                poles: points(&i.poles),
                fallback: i.fallback,
            })
            .collect();
        let report = AdaptiveReport {
            transform: "adaptive",
            n: r.n,
            evaluations: iterations.iter().map(|i| 2 * i.n + 1).sum(),
            value: r.value,
            estimate: r.estimate,
            reference: spec.reference,
            rel_error: rel_error(r.value, spec.reference),
            iterations,
        };
        return match cli.out {
            OutFormat::Json => write_json(&report),
            OutFormat::Csv => write_csv(
                &["iteration", "phase", "n", "value", "estimate", "u0", "u", "poles", "fallback"],
                report.iterations.iter().map(|i| {
                    vec![
                        i.iteration.to_string(),
                        i.phase.to_string(),
                        i.n.to_string(),
                        num(i.value),
                        opt_num(i.estimate),
                        num(i.u0),
                        joined(i.u.iter().map(|&v| num(v))),
                        joined(i.poles.iter().map(|p| format!("{:?}{:+?}i", p.re, p.im))),
                        i.fallback.to_string(),
                    ]
                }),
            ),
        };
    }
    let lt = fixed_transform(&spec, t, &opts)?;
    let n = cli.n.unwrap_or(64);
    let value = lt.integrate(&spec.integrand, n)?;
    let report = IntegrateReport {
        transform: lt.label.clone(),
        n,
        step: optimal_step(&lt.params, n, false)?,
        evaluations: 2 * n + 1,
        value,
        reference: spec.reference,
        rel_error: rel_error(value, spec.reference),
    };
    match cli.out {
        OutFormat::Json => write_json(&report),
        OutFormat::Csv => write_csv(
            &["transform", "n", "step", "evaluations", "value", "reference", "rel_error"],
            [vec![
                report.transform.clone(),
                n.to_string(),
                num(report.step),
                report.evaluations.to_string(),
                num(value),
                opt_num(report.reference),
                opt_num(report.rel_error),
            ]],
        ),
    }
}

#[derive(Serialize)]
struct MapReport {
    u0: f64,
    u: Vec<f64>,
    x: Vec<f64>,
    residual: f64,
}

fn optimize(cli: &Cli, args: &MapArgs) -> CliResult<()> {
    let (domain, set) = if let Some(path) = &args.problem {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let spec = ProblemFile::from_json(&text)?.into_spec()?;
        (spec.domain, spec.singularities)
    } else if let Some(id) = args.catalog {
        let spec = ProblemSpec::catalog(id);
        (spec.domain, spec.singularities)
    } else {
        let domain = args.domain.expect("source group is required").outer()?;
        (domain, None)
    };
    let set = match (set, args.singularities.is_empty()) {
        (_, false) => SingularitySet::new(args.singularities.iter().copied())?,
        (Some(s), true) => s,
        (None, true) => return usage("no singularities given"),
    };
    let sol = optimize_map(&set, &domain, &OptimizerOptions::default())?;
    let report = MapReport {
        u0: sol.map.u0,
        u: sol.map.u.clone(),
        x: sol.map.abscissas.clone(),
        residual: sol.constraint_residual,
    };
    match cli.out {
        OutFormat::Json => write_json(&report),
        OutFormat::Csv => {
            let mut rows = vec![vec!["u0".to_string(), num(report.u0)]];
            rows.extend(report.u.iter().enumerate().map(|(j, v)| vec![format!("u{}", j + 1), num(*v)]));
            rows.extend(report.x.iter().enumerate().map(|(k, v)| vec![format!("x{}", k + 1), num(*v)]));
            rows.push(vec!["residual".into(), num(report.residual)]);
            write_csv(&["key", "value"], rows)
        }
    }
}

fn convergence(cli: &Cli, problem: &ProblemArgs, ns: &[usize]) -> CliResult<()> {
    let spec = problem.resolve()?;
    let opts = OptimizerOptions::default();
    let transforms = match cli.transform {
        Some(t) => vec![fixed_transform(&spec, t, &opts)?],
        None => spec.suite(&opts)?,
    };
    let ns: Vec<usize> = if !ns.is_empty() {
        ns.to_vec()
    } else {
        let top = cli.n.unwrap_or(128);
        std::iter::successors(Some(8usize), |n| Some(n * 2)).take_while(|&n| n <= top.max(8)).collect()
    };
    let rows: Vec<StudyRow> = convergence_study(&spec.integrand, spec.reference, &transforms, &ns)?;
    match cli.out {
        OutFormat::Json => write_json(&rows),
        OutFormat::Csv => {
            print!("{}", optde::quadrature::study_to_csv(&rows));
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct PoleReport {
    transform: String,
    n: usize,
    r: usize,
    s: usize,
    condition: f64,
    rank: usize,
    shortfall: bool,
    poles: Vec<PointSpec>,
}

fn poles(cli: &Cli, problem: &ProblemArgs, count: usize) -> CliResult<()> {
    let spec = problem.resolve()?;
    let lt = fixed_transform(&spec, cli.transform.unwrap_or(TransformArg::De), &OptimizerOptions::default())?;
    let n = cli.n.unwrap_or(128);
    let (r, s) = degree_schedule(n)?;
    let step = optimal_step(&lt.params, n, false)?;
    let samples = central_samples(&spec.integrand, &lt.transform, step, r, s);
    let fit = fit_sinc_pade(&samples, r, s)?;
    let est = pade_poles(&fit, count)?;
    let report = PoleReport {
        transform: lt.label.clone(),
        n,
        r,
        s,
        condition: fit.condition,
        rank: fit.rank,
        shortfall: est.shortfall,
        poles: points(&est.pairs),
    };
    match cli.out {
        OutFormat::Json => write_json(&report),
        OutFormat::Csv => write_csv(&["re", "im"], report.poles.iter().map(|p| vec![num(p.re), num(p.im)])),
    }
}

#[derive(Serialize)]
struct BoSummary {
    n: usize,
    transform: String,
    sup_rel_error: f64,
    newton_iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct BoGridPoint {
    x: f64,
    y_exact: f64,
    y_computed: f64,
}

fn bo_solve(cli: &Cli, speed: f64) -> CliResult<()> {
    let t = cli.transform.unwrap_or(TransformArg::Opt);
    if t == TransformArg::Adaptive {
        return usage("bo-solve supports se, de and opt");
    }
    let sol = LorentzianSum::reference();
    let lts = benjamin_ono_transforms(&sol, &OptimizerOptions::default())?;
    let lt = lts.iter().find(|l| l.label == t.label()).expect("all three transforms are built");
    let n = cli.n.unwrap_or(32);
    let report = solve_lorentzian(&sol, speed, lt, n)?;
    let e = &report.solution.expansion;
    let grid = error_grid()
        .into_iter()
        .map(|x| {
            Ok(BoGridPoint {
                x,
                y_exact: sol.value(x),
                y_computed: e.eval(x)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let summary = BoSummary {
        n,
        transform: report.transform.clone(),
        sup_rel_error: report.sup_rel_error,
        newton_iterations: report.newton_iterations,
        converged: report.converged,
    };
    match cli.out {
        OutFormat::Json => {
            #[derive(Serialize)]
            struct Full<'a> {
                summary: &'a BoSummary,
                grid: &'a [BoGridPoint],
            }
            write_json(&Full {
                summary: &summary,
                grid: &grid,
            })?;
        }
        OutFormat::Csv => {
            write_csv(
                &["x", "y_exact", "y_computed"],
                grid.iter().map(|g| vec![num(g.x), num(g.y_exact), num(g.y_computed)]),
            )?;
            eprintln!("{}", serde_json::to_string(&summary).expect("plain struct"));
        }
    }
    if !report.converged {
        return Err(CliError::Numerical(format!(
            "Newton iteration stopped at residual {:e}",
            report.solution.residual
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct BoxReport {
    m: usize,
    kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tensor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<TensorVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrepancy: Option<f64>,
}

fn box_cmd(cli: &Cli, m: usize, kappa: f64, method: BoxMethod, variant: TensorVariant) -> CliResult<()> {
    let p = BoxProblem::new(m, kappa)?;
    let reduced = match method {
        BoxMethod::Reduced | BoxMethod::Both => {
            let n = if method == BoxMethod::Reduced { cli.n.unwrap_or(64) } else { 64 };
            Some(box_expectation_reduced(p, n)?)
        }
        BoxMethod::Tensor => None,
    };
    let tensor = match method {
        BoxMethod::Tensor | BoxMethod::Both => Some(box_expectation_tensor(p, cli.n.unwrap_or(24), variant)?),
        BoxMethod::Reduced => None,
    };
    let report = BoxReport {
        m,
        kappa,
        reduced,
        tensor,
        variant: tensor.map(|_| variant),
        discrepancy: reduced.zip(tensor).map(|(a, b)| (a - b).abs()),
    };
    match cli.out {
        OutFormat::Json => write_json(&report),
        OutFormat::Csv => {
            let mut rows = vec![vec!["m".into(), m.to_string()], vec!["kappa".into(), num(kappa)]];
            if let Some(v) = reduced {
                rows.push(vec!["reduced".into(), num(v)]);
            }
            if let Some(v) = tensor {
                rows.push(vec![format!("tensor_{variant}"), num(v)]);
            }
            if let Some(d) = report.discrepancy {
                rows.push(vec!["discrepancy".into(), num(d)]);
            }
            write_csv(&["key", "value"], rows)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Integrate { problem, eps } => integrate(cli, problem, *eps),
        Command::OptimizeMap(args) => optimize(cli, args),
        Command::Convergence { problem, ns } => convergence(cli, problem, ns),
        Command::PadePoles { problem, count } => poles(cli, problem, *count),
        Command::BoSolve { speed } => bo_solve(cli, *speed),
        Command::Box {
            m,
            kappa,
            method,
            variant,
        } => box_cmd(cli, *m, *kappa, *method, *variant),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
