use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use bellcomm::comm::{facet_rewrite_bounds, min_comm, Mode};
use bellcomm::decomposition::{simulate, UNIFORM_INPUTS};
use bellcomm::inequalities::BellInequality;
use bellcomm::io;
use bellcomm::polytope::{enumerate_facets, trivial_split, violated_facets, Facet, VertexSet};
use bellcomm::quantum::{
    chsh_optimal_settings, cglmp_optimal, cglmp_settings, correlations, qutrit_example_settings, BipartiteState, Entanglement,
};
use bellcomm::scenario::{build_constraints, validate};
use bellcomm::strategies::CostModel;
use bellcomm::Error;
use bellcomm_cli::reproduce;

#[derive(Parser)]
#[command(name = "bellcomm", version, about = "Communication cost of nonlocal correlations")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    ChshOptimal,
    CglmpMe,
    CglmpNme,
    /// Maximally entangled qutrits at the fixed three-outcome settings.
    #[value(name = "sec5-example", alias = "qutrit-example")]
    QutritExample,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Enumerate,
    Lazy,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Enumerate => Mode::Enumerate,
            ModeArg::Lazy => Mode::Lazy,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a quantum correlation file (plus a `.meta.json` sidecar when --out is given)
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        /// Outcomes per side (CGLMP kinds only)
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal average communication of a correlation file
    Cost {
        input: PathBuf,
        /// Class costs c0,c1,c2,c3 (`inf` forbids a class)
        #[arg(long, default_value = "0,1,1.5,2")]
        cost: String,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Prefix for `<out>.decomposition.json` and `<out>.inequality.json`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Communication bound implied by one inequality
    Bound {
        input: PathBuf,
        /// `chsh`, `cglmp`, or an inequality file
        #[arg(long)]
        inequality: String,
        #[arg(long, default_value = "0,1,1.5,2")]
        cost: String,
    },
    /// Enumerate local-polytope facets (JSON lines)
    Facets {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best rewriting bound over the facets violated by a correlation file
    FacetBound {
        input: PathBuf,
        /// Facet list from `facets`; enumerated on the fly when omitted
        #[arg(long)]
        facets: Option<PathBuf>,
        #[arg(long, default_value = "0,1,1.5,2")]
        cost: String,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Monte-Carlo run of a decomposition file
    Simulate {
        input: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input distribution p(00),p(01),p(10),p(11)
        #[arg(long)]
        inputs: Option<String>,
    },
    /// Normalization, no-signalling and range check of a correlation file
    Validate { input: PathBuf },
    /// Recompute the published numbers
    Reproduce {
        /// Single target to run
        #[arg(long)]
        only: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Add the d = 3..8 CGLMP saturation checks
        #[arg(long)]
        full: bool,
        /// Also write the CSV table here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Shape { .. } | Error::Scenario(_) | Error::CostModel(_) | Error::Json(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cost_model(s: &str) -> Result<CostModel, Failure> {
    s.parse().map_err(|e: Error| Failure::Usage(e.to_string()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn generate(kind: Kind, d: Option<usize>, out: Option<&Path>) -> Outcome {
    let (name, state, settings) = match kind {
        Kind::ChshOptimal | Kind::QutritExample => {
            let (name, dim, settings) = match kind {
                Kind::ChshOptimal => ("chsh-optimal", 2, chsh_optimal_settings()),
                _ => ("sec5-example", 3, qutrit_example_settings()),
            };
            if d.is_some_and(|d| d != dim) {
                return Err(Failure::Usage(format!("{name} is defined for d = {dim} only")));
            }
            (name, BipartiteState::maximally_entangled(dim)?, settings)
        }
        Kind::CglmpMe | Kind::CglmpNme => {
            let d = d.ok_or_else(|| Failure::Usage("--d is required for CGLMP correlations".into()))?;
            if !(2..=bellcomm::quantum::MAX_CGLMP_DIM).contains(&d) {
                return Err(Failure::Usage(format!("CGLMP correlations need 2 <= d <= 8, got {d}")));
            }
            let (name, ent) = match kind {
                Kind::CglmpMe => ("cglmp-me", Entanglement::Maximal),
                _ => ("cglmp-nme", Entanglement::Optimized),
            };
            (name, cglmp_optimal(d, ent)?.1, cglmp_settings(d))
        }
    };
    let p = correlations(&state, &settings)?;
    let dim = state.dim();
    let cglmp = BellInequality::cglmp(dim)?.evaluate(&p)?;
    let chsh = BellInequality::chsh(dim)?.evaluate(&p)?;
    let meta = json!({
        "kind": name,
        "d": dim,
        "schmidt": state.coefficients(),
        "settings": settings,
        "cglmp_value": cglmp,
        "chsh_value": chsh,
    });
    write_or_print(out, &(io::correlation_to_json(&p) + "\n"))?;
    match out {
        Some(path) => {
            let meta_path = with_suffix(path, ".meta.json");
            fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("serializes") + "\n")?;
            eprintln!("wrote {} and {}", path.display(), meta_path.display());
            eprintln!("CGLMP value {cglmp:.6}, CHSH value {chsh:.6}");
        }
        None => eprintln!("{}", serde_json::to_string(&meta).expect("serializes")),
    }
    Ok(())
}

fn cost(input: &Path, cost: &str, mode: Option<ModeArg>, out: Option<&Path>) -> Outcome {
    let p = io::parse_correlation(&read(input)?)?;
    let model = cost_model(cost)?;
    let mode = mode.map(Mode::from).unwrap_or_else(|| Mode::auto(p.scenario()));
    let r = min_comm(&p, &model, mode)?;
    println!("C = {:.6} bits", r.value);
    println!("duality gap {:.3e}, {} support strategies, {} columns", r.duality_gap, r.decomposition.terms().len(), r.columns);
    let w = r.decomposition.class_weights();
    println!("class weights D0 {:.6}  D1 {:.6}  D2 {:.6}  D3 {:.6}", w[0], w[1], w[2], w[3]);
    if let Some(prefix) = out {
        let dp = with_suffix(prefix, ".decomposition.json");
        let ip = with_suffix(prefix, ".inequality.json");
        fs::write(&dp, io::decomposition_to_json(&r.decomposition) + "\n")?;
        fs::write(&ip, io::inequality_to_json(&r.inequality, Some(r.inequality.local_bound())) + "\n")?;
        eprintln!("wrote {} and {}", dp.display(), ip.display());
    }
    Ok(())
}

fn bound(input: &Path, which: &str, cost: &str) -> Outcome {
    let p = io::parse_correlation(&read(input)?)?;
    let model = cost_model(cost)?;
    let d = p.scenario().outcomes_a();
    let b = match which {
        "chsh" => BellInequality::chsh(d)?,
        "cglmp" => {
            if p.scenario().outcomes_b() != d {
                return Err(Failure::Usage("CGLMP needs equal outcome counts".into()));
            }
            BellInequality::cglmp(d)?
        }
        path => io::parse_inequality(&read(Path::new(path))?)?.inequality,
    };
    let r = b.comm_bound(&p, &model)?;
    let cb = b.class_bounds();
    println!("B(p) = {:.6}", r.bell_value);
    println!("class bounds B0 {:.6}  B1 {:.6}  B2 {:.6}  B3 {:.6}", cb[0], cb[1], cb[2], cb[3]);
    match r.j_star {
        Some(j) => println!("j* = {j}, ratio {:.6}", r.ratio),
        None => println!("no nonlocal class is affordable"),
    }
    println!("C >= {:.6} bits", r.value);
    if r.exceeds {
        println!("note: B(p) exceeds B_j*; mixing classes may give a stronger bound");
    }
    Ok(())
}

fn facets(d: usize, out: Option<&Path>) -> Outcome {
    if d > 3 {
        return Err(Failure::Usage(format!("facet enumeration supports d <= 3, got {d}")));
    }
    let s = bellcomm::scenario::Scenario::symmetric(d)?;
    let f = enumerate_facets(&s)?;
    let (t, nt) = trivial_split(&f, &VertexSet::local(&s));
    eprintln!("{} facets ({t} positivity, {nt} other)", f.len());
    write_or_print(out, &io::facets_to_jsonl(&s, &f))
}

fn facet_bound(input: &Path, facet_file: Option<&Path>, cost: &str, mode: Option<ModeArg>) -> Outcome {
    let p = io::parse_correlation(&read(input)?)?;
    let s = *p.scenario();
    let model = cost_model(cost)?;
    let facets: Vec<Facet> = match facet_file {
        Some(path) => {
            let (fs, recs) = io::parse_facet_export(&read(path)?)?;
            if fs != s {
                return Err(Failure::Usage("facet file scenario differs from the correlations".into()));
            }
            recs.into_iter()
                .map(|r| {
                    let bound = r.local_bound.unwrap_or_else(|| r.inequality.local_bound());
                    let to_int = |v: f64| {
                        (v.fract() == 0.0 && v.abs() < 1e15)
                            .then_some(v as i64)
                            .ok_or_else(|| Failure::Usage("facet coefficients must be integers".into()))
                    };
                    Ok(Facet { coeffs: r.inequality.coeffs().iter().map(|&c| to_int(c)).collect::<Result<_, _>>()?, bound: to_int(bound)? })
                })
                .collect::<Result<_, Failure>>()?
        }
        None => {
            if s.outcomes_a() > 3 || s.outcomes_b() > 3 {
                return Err(Failure::Usage("facet enumeration supports d <= 3; pass --facets".into()));
            }
            enumerate_facets(&s)?
        }
    };
    let violated = violated_facets(&p, &facets);
    println!("{} of {} facets violated", violated.len(), facets.len());
    if violated.is_empty() {
        return Ok(());
    }
    let ineqs = violated.iter().map(|&(i, _)| facets[i].to_inequality(&s)).collect::<Result<Vec<_>, _>>()?;
    let mode = mode.map(Mode::from).unwrap_or_else(|| Mode::auto(&s));
    let bounds = facet_rewrite_bounds(&ineqs, &p, &model, &build_constraints(&s), mode)?;
    println!("{:>6} {:>12} {:>12} {:>10}", "facet", "violation", "bound", "mu0");
    let mut best = f64::NEG_INFINITY;
    for (&(i, v), b) in violated.iter().zip(&bounds) {
        println!("{i:>6} {v:>12.6} {:>12.6} {:>10.6}", b.value, b.mu0);
        best = best.max(b.value);
    }
    println!("best facet bound: C >= {best:.6} bits");
    Ok(())
}

fn parse_inputs(s: &str) -> Result<[f64; 4], Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("bad --inputs: {e}")))?;
    v.try_into().map_err(|_| Failure::Usage("--inputs needs four probabilities".into()))
}

fn simulate_cmd(input: &Path, runs: u64, seed: u64, inputs: Option<&str>) -> Outcome {
    let dec = io::parse_decomposition(&read(input)?)?;
    let dist = inputs.map(parse_inputs).transpose()?.unwrap_or(UNIFORM_INPUTS);
    let r = simulate(&dec, &dist, runs, seed)?;
    let summary = json!({
        "runs": r.runs,
        "empirical_cost": r.empirical_cost,
        "stderr": r.stderr,
        "uniform_cost": r.uniform_cost,
        "uniform_stderr": r.uniform_stderr,
        "entry_max_dev": r.entry_max_dev,
        "analytic_cost": dec.avg_cost(&CostModel::default()),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializes"));
    Ok(())
}

fn validate_cmd(input: &Path) -> Outcome {
    let p = io::parse_correlation(&read(input)?)?;
    let r = validate(&p);
    println!("normalized:     {} (max residual {:.3e})", r.normalized, r.max_normalization_residual());
    println!("no-signalling:  {} (max residual {:.3e})", r.no_signalling_ok, r.max_no_signalling_residual());
    println!("within [0, 1]:  {}", r.within_range);
    for v in r.violations() {
        println!("  {}: {:.3e}", v.kind, v.value);
    }
    for o in &r.out_of_range {
        println!("  p{:?} = {}", o.index, o.value);
    }
    if r.is_valid() && r.no_signalling_ok {
        Ok(())
    } else {
        Err(Failure::Numeric("correlations are not a valid no-signalling probability table".into()))
    }
}

fn reproduce_cmd(only: Option<&str>, format: Format, full: bool, out: Option<&Path>) -> Outcome {
    let targets: Vec<String> = match only {
        Some(t) if reproduce::is_known(t) => vec![t.to_string()],
        Some(t) => return Err(Failure::Usage(format!("unknown target `{t}`; known: {}", reproduce::TARGETS.join(", ")))),
        None => {
            let mut v: Vec<String> = reproduce::TARGETS.iter().map(|t| t.to_string()).collect();
            if full {
                v.extend(reproduce::full_targets());
            }
            v
        }
    };
    let rows = reproduce::run(&targets);
    let csv_text = || -> Result<String, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["target", "paper_value", "computed", "tolerance", "pass"])?;
        for r in &rows {
            w.write_record([
                r.target.clone(),
                r.reference.to_string(),
                r.computed.to_string(),
                r.tolerance.to_string(),
                r.pass.to_string(),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?).expect("utf-8"))
    };
    match format {
        Format::Csv => print!("{}", csv_text()?),
        Format::Text => {
            println!("{:<22} {:>14} {:>14} {:>10}  result", "target", "published", "computed", "tolerance");
            for r in &rows {
                let tol = if r.tolerance == 0.0 { "exact".to_string() } else { format!("{:.0e}", r.tolerance) };
                println!(
                    "{:<22} {:>14.6} {:>14.6} {:>10}  {}",
                    r.target,
                    r.reference,
                    r.computed,
                    tol,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
        }
    }
    if let Some(path) = out {
        fs::write(path, csv_text()?)?;
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.target.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("{} target(s) outside tolerance: {}", failed.len(), failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Generate { kind, d, out } => generate(*kind, *d, out.as_deref()),
        Command::Cost { input, cost: c, mode, out } => cost(input, c, *mode, out.as_deref()),
        Command::Bound { input, inequality, cost: c } => bound(input, inequality, c),
        Command::Facets { d, out } => facets(*d, out.as_deref()),
        Command::FacetBound { input, facets: f, cost: c, mode } => facet_bound(input, f.as_deref(), c, *mode),
        Command::Simulate { input, runs, seed, inputs } => simulate_cmd(input, *runs, *seed, inputs.as_deref()),
        Command::Validate { input } => validate_cmd(input),
        Command::Reproduce { only, format, full, out } => reproduce_cmd(only.as_deref(), *format, *full, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
