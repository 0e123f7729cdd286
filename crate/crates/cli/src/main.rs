//! Command-line front end: `check`, `oracle`, `gen` and `spec`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperbmc_core::driver::{render_text, render_witness_file};
use hyperbmc_core::models::BUILTIN_SPECS;
use hyperbmc_core::qbf::QbfError;
use hyperbmc_core::{
    builtin_spec, check, check_bounded, gen_bakery, gen_nonrepudiation, parse_formula,
    parse_grid_map, parse_kripke, CheckConfig, DriverError, HyperFormula, Interpretation,
    KripkeStructure, Mode, ModelMap, NonrepVariant, Report, Semantics, SolverChoice, Unrolling,
};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_UNAVAILABLE: u8 = 69;
const EX_SOFTWARE: u8 = 70;
const EX_CANTCREAT: u8 = 73;
const EX_IOERR: u8 = 74;
const EX_TEMPFAIL: u8 = 75;

#[derive(Parser)]
#[command(name = "hyperbmc", version, about = "Bounded model checking of HyperLTL via QBF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate bounds and report HOLDS, FAILS or UNKNOWN.
    Check(CheckArgs),
    /// Evaluate the formula at one bound by explicit enumeration.
    Oracle(OracleArgs),
    /// Write a generated model in `.kr` format.
    Gen {
        #[command(subcommand)]
        model: GenCommand,
    },
    /// Print a builtin formula, or list them all.
    Spec { name: Option<String> },
}

#[derive(Args)]
struct Inputs {
    /// Formula file.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    formula: Option<PathBuf>,
    /// Builtin formula by name instead of a file.
    #[arg(long)]
    spec: Option<String>,
    /// Model for one trace variable, as VAR=PATH.
    #[arg(long = "model", value_name = "VAR=PATH")]
    models: Vec<String>,
    /// Model for every trace variable without an explicit one.
    #[arg(long, value_name = "PATH")]
    model_default: Option<PathBuf>,
    /// Use the literal release rule at the bound for the halting semantics.
    #[arg(long)]
    paper_literal: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Largest bound to try.
    #[arg(short = 'k', long = "bound")]
    k: usize,
    /// First bound to try.
    #[arg(long, default_value_t = 0)]
    from: usize,
    #[arg(long)]
    semantics: Option<Semantics>,
    #[arg(long, default_value = "falsify")]
    mode: Mode,
    /// `builtin` or `external:"CMD {file}"`.
    #[arg(long, env = "HYPERBMC_SOLVER", default_value = "builtin")]
    solver: SolverChoice,
    /// Write each bound's QCIR here; `{k}` is replaced by the bound.
    #[arg(long, value_name = "PATH")]
    emit_qcir: Option<PathBuf>,
    /// Write the witness letters here.
    #[arg(long, value_name = "PATH")]
    witness: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Circuit size limit for the builtin solver.
    #[arg(long)]
    node_cap: Option<usize>,
    /// Per-bound time limit for an external solver, in seconds.
    #[arg(long)]
    timeout: Option<u64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(short = 'k', long = "bound")]
    k: usize,
    #[arg(long, default_value = "pes")]
    semantics: Semantics,
}

#[derive(Subcommand)]
enum GenCommand {
    Bakery {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Grid {
        /// Map with `.` free, `#` obstacle, `I` initial and `G` goal cells.
        #[arg(long)]
        map: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Nonrep {
        #[arg(long, default_value = "correct")]
        variant: NonrepVariant,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }
}

impl From<DriverError> for Failure {
    fn from(e: DriverError) -> Self {
        let code = match &e {
            DriverError::Config(_) => EX_USAGE,
            DriverError::NoHaltStates(_) | DriverError::Encode(_) => EX_DATAERR,
            DriverError::Solver(q) => match q {
                QbfError::ResourceLimit(_) | QbfError::Timeout(_) => EX_TEMPFAIL,
                QbfError::SolverNotFound(_) => EX_UNAVAILABLE,
                QbfError::MissingPlaceholder => EX_USAGE,
                QbfError::Io(_) => EX_IOERR,
                QbfError::UnparsableOutput(_) | QbfError::Qcir { .. } => EX_SOFTWARE,
            },
            DriverError::InvalidWitness(_) | DriverError::WitnessRejected(_) => EX_SOFTWARE,
            DriverError::Io { .. } => EX_CANTCREAT,
        };
        Failure::new(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EX_NOINPUT, format!("reading {}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::new(EX_CANTCREAT, format!("writing {}: {e}", p.display()))),
        None => {
            emit(text);
            Ok(())
        }
    }
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn load_model(path: &Path) -> Result<KripkeStructure, Failure> {
    parse_kripke(&read(path)?).map_err(|e| Failure::new(EX_DATAERR, format!("{}: {e}", path.display())))
}

fn load_inputs(inputs: &Inputs) -> Result<(HyperFormula, ModelMap), Failure> {
    let text = match (&inputs.formula, &inputs.spec) {
        (Some(path), _) => read(path)?,
        (None, Some(name)) => {
            builtin_spec(name).map_err(|e| Failure::new(EX_USAGE, e.to_string()))?.formula
        }
        (None, None) => return Err(Failure::new(EX_USAGE, "no formula given")),
    };
    let formula = parse_formula(&text).map_err(|e| Failure::new(EX_DATAERR, e.to_string()))?;

    let mut explicit = HashMap::new();
    for m in &inputs.models {
        let (var, path) = m
            .split_once('=')
            .ok_or_else(|| Failure::new(EX_USAGE, format!("--model expects VAR=PATH, got `{m}`")))?;
        if formula.quantifier_of(var).is_none() {
            return Err(Failure::new(EX_USAGE, format!("`{var}` is not a trace variable of the formula")));
        }
        explicit.insert(var.to_string(), PathBuf::from(path));
    }

    let mut cache: HashMap<PathBuf, Arc<KripkeStructure>> = HashMap::new();
    let mut models = ModelMap::new();
    for var in formula.vars() {
        let path = match explicit.get(var).or(inputs.model_default.as_ref()) {
            Some(p) => p.clone(),
            None => return Err(Failure::new(EX_USAGE, format!("no model for trace variable `{var}`"))),
        };
        let model = match cache.get(&path) {
            Some(m) => m.clone(),
            None => {
                let m = Arc::new(load_model(&path)?);
                cache.insert(path, m.clone());
                m
            }
        };
        models.insert(var, model);
    }
    Ok((formula, models))
}

fn run_check(args: CheckArgs) -> Result<u8, Failure> {
    let (formula, models) = load_inputs(&args.inputs)?;
    let mut cfg = CheckConfig::new(formula, models, args.k, args.mode).from(args.from);
    if let Some(sem) = args.semantics {
        cfg = cfg.semantics(sem);
    }
    cfg.paper_literal = args.inputs.paper_literal;
    cfg.solver = args.solver;
    cfg.emit_qcir = args.emit_qcir;
    if let Some(cap) = args.node_cap {
        cfg.node_cap = cap;
    }
    cfg.timeout = args.timeout.map(Duration::from_secs);

    let verdict = check(&cfg)?;
    match args.format {
        Format::Text => emit(&render_text(&cfg, &verdict)),
        Format::Json => {
            let report = Report::new(&cfg, &verdict);
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Failure::new(EX_SOFTWARE, e.to_string()))?;
            emit(&format!("{json}\n"));
        }
    }
    if let (Some(path), Some(w)) = (&args.witness, &verdict.witness) {
        write_out(Some(path), &render_witness_file(w))?;
    }
    Ok(match verdict.interpretation {
        Interpretation::Holds => 0,
        Interpretation::Fails => 1,
        Interpretation::Unknown => 2,
    })
}

fn run_oracle(args: OracleArgs) -> Result<u8, Failure> {
    let (formula, models) = load_inputs(&args.inputs)?;
    let un = Unrolling::new(args.k, args.semantics).paper_literal(args.inputs.paper_literal);
    let value = check_bounded(&models, &formula, un).map_err(|e| Failure::new(EX_DATAERR, e.to_string()))?;
    println!("{}", if value { "TRUE" } else { "FALSE" });
    Ok(0)
}

fn run_gen(cmd: GenCommand) -> Result<u8, Failure> {
    let data = |e: hyperbmc_core::ModelError| Failure::new(EX_DATAERR, e.to_string());
    let (model, output) = match cmd {
        GenCommand::Bakery { n, output } => {
            (gen_bakery(n).map_err(|e| Failure::new(EX_USAGE, e.to_string()))?, output)
        }
        GenCommand::Grid { map, output } => {
            let map = parse_grid_map(&read(&map)?).map_err(data)?;
            (map.to_kripke().map_err(data)?, output)
        }
        GenCommand::Nonrep { variant, output } => (gen_nonrepudiation(variant).map_err(data)?, output),
    };
    write_out(output.as_deref(), &model.render())?;
    Ok(0)
}

fn run_spec(name: Option<String>) -> Result<u8, Failure> {
    match name {
        None => {
            for n in BUILTIN_SPECS {
                println!("{n}");
            }
        }
        Some(n) => {
            let e = builtin_spec(&n).map_err(|e| Failure::new(EX_USAGE, e.to_string()))?;
            println!("{}", e.formula);
            eprintln!("roles: {}", e.roles.join(", "));
            eprintln!("{}", e.notes);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EX_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Check(args) => run_check(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Gen { model } => run_gen(model),
        Command::Spec { name } => run_spec(name),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
