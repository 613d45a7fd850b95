//! `rcml`: batch command line for the component-and-connector modeling
//! toolkit. Machine-readable output (JSON reports, traces, tables) goes to
//! the requested file or stdout; human diagnostics go to stderr.
//!
//! Exit codes: 0 success, refinement holds, or no findings; 1 findings,
//! violations, or aborted runs (with the report on stdout); 2 usage or
//! I/O errors; 3 exploration budget exceeded.

use clap::{Parser, Subcommand, ValueEnum};
use rcml_core::codegen::{self, template::Template};
use rcml_core::refine::{self, AutomatonSide, ExploreConfig};
use rcml_core::sim::{self, bundle::StreamBundle, Completion, SimConfig, Strategy};
use rcml_core::{ast, checks, model::ResolvedModel, parser, printer, resolve};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rcml",
    version,
    about = "Modeling toolkit for component architectures with embedded automata"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CompletionArg {
    Chaos,
    Ignore,
    Error,
}

impl From<CompletionArg> for Completion {
    fn from(c: CompletionArg) -> Completion {
        match c {
            CompletionArg::Chaos => Completion::Chaos,
            CompletionArg::Ignore => Completion::Ignore,
            CompletionArg::Error => Completion::Error,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    First,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model file and report syntax errors.
    Parse {
        file: PathBuf,
        /// Print the canonical form to stdout.
        #[arg(long)]
        print: bool,
    },
    /// Run the well-formedness rules and print the findings.
    Check {
        file: PathBuf,
        /// Emit the findings as a JSON array.
        #[arg(long)]
        json: bool,
    },
    /// Execute a model over an input bundle.
    Simulate {
        file: PathBuf,
        /// Main component to elaborate.
        #[arg(long)]
        main: String,
        /// Input stream bundle (JSON).
        #[arg(long)]
        inputs: PathBuf,
        /// Maximum number of rounds.
        #[arg(long)]
        rounds: usize,
        #[arg(long, value_enum, default_value = "ignore")]
        completion: CompletionArg,
        #[arg(long, value_enum, default_value = "first")]
        strategy: StrategyArg,
        /// Seed for --strategy random.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSONL event trace here instead of stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check bounded refinement between two automata.
    Refine {
        file: PathBuf,
        /// Abstract side as COMPONENT.AUTOMATON.
        #[arg(long = "abstract")]
        abstract_side: String,
        /// Concrete side as COMPONENT.AUTOMATON.
        #[arg(long)]
        concrete: String,
        /// Round bound k.
        #[arg(long)]
        bound: usize,
        #[arg(long, value_enum, default_value = "chaos")]
        completion_abstract: CompletionArg,
        #[arg(long, value_enum, default_value = "ignore")]
        completion_concrete: CompletionArg,
        /// Emit the verdict as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate a machine table (atomic component) or a connector
    /// manifest (decomposed component).
    Generate {
        file: PathBuf,
        /// Component to generate for.
        #[arg(long)]
        component: String,
        /// Template file; defaults to the built-in JSON table template.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Output path; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rcml: {}", e.message);
            e.code
        }
    };
    ExitCode::from(code)
}

struct CmdError {
    message: String,
    code: u8,
}

impl CmdError {
    fn usage(message: impl Into<String>) -> CmdError {
        CmdError {
            message: message.into(),
            code: 2,
        }
    }

    fn failed(message: impl Into<String>) -> CmdError {
        CmdError {
            message: message.into(),
            code: 1,
        }
    }

    fn budget(message: impl Into<String>) -> CmdError {
        CmdError {
            message: message.into(),
            code: 3,
        }
    }
}

fn read_file(path: &Path) -> Result<String, CmdError> {
    std::fs::read_to_string(path).map_err(|e| CmdError::usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<(ast::Model, ResolvedModel), CmdError> {
    let text = read_file(path)?;
    let name = path.to_string_lossy();
    let parsed = parser::parse(&text, &name).map_err(|diags| {
        for d in &diags {
            eprintln!("{d}");
        }
        CmdError::failed(format!("{} syntax error(s)", diags.len()))
    })?;
    let resolved = resolve(&parsed).map_err(|errors| {
        for e in &errors {
            eprintln!("{e}");
        }
        CmdError::failed(format!("{} resolution error(s)", errors.len()))
    })?;
    Ok((parsed, resolved))
}

fn explore_config() -> ExploreConfig {
    let mut config = ExploreConfig::default();
    if let Ok(value) = std::env::var("RCML_NODE_BUDGET") {
        match value.parse::<u64>() {
            Ok(budget) if budget > 0 => config.node_budget = budget,
            _ => eprintln!("rcml: ignoring invalid RCML_NODE_BUDGET `{value}`"),
        }
    }
    config
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CmdError> {
    match path {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CmdError::usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CmdError> {
    match cli.command {
        Command::Parse { file, print } => {
            let (parsed, _) = load_model(&file)?;
            if print {
                print!("{}", printer::pretty_print(&parsed));
            }
            Ok(0)
        }
        Command::Check { file, json } => {
            let (_, resolved) = load_model(&file)?;
            let report = checks::check(&resolved);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report.to_json()).unwrap()
                );
            } else {
                print!("{report}");
            }
            Ok(if report.is_empty() { 0 } else { 1 })
        }
        Command::Simulate {
            file,
            main,
            inputs,
            rounds,
            completion,
            strategy,
            seed,
            trace,
        } => {
            if rounds == 0 {
                return Err(CmdError::usage("--rounds must be at least 1"));
            }
            let (_, resolved) = load_model(&file)?;
            let main_id = resolved
                .component_by_name(&main)
                .ok_or_else(|| CmdError::usage(format!("unknown component `{main}`")))?;
            let report = checks::check(&resolved);
            if report.has_errors() {
                eprint!("{report}");
                return Err(CmdError::failed("model has check errors; not simulating"));
            }
            let bundle_text = read_file(&inputs)?;
            let bundle = StreamBundle::from_json(&resolved, &bundle_text)
                .map_err(|e| CmdError::usage(e.to_string()))?;
            let config = SimConfig {
                completion: completion.into(),
                strategy: match strategy {
                    StrategyArg::First => Strategy::First,
                    StrategyArg::Random => Strategy::Random { seed },
                },
                max_rounds: rounds,
            };
            let result = sim::simulate(&resolved, main_id, &bundle, &config)
                .map_err(|e| CmdError::failed(e.to_string()))?;
            let jsonl = result.to_jsonl(&resolved);
            match &trace {
                Some(path) => {
                    write_output(Some(path), &jsonl)?;
                    println!(
                        "{}",
                        serde_json::to_string(&result.outputs.to_json(&resolved)).unwrap()
                    );
                }
                None => print!("{jsonl}"),
            }
            let mut violations = 0;
            for verdict in &result.monitor_verdicts {
                match verdict.violation {
                    Some(round) => {
                        violations += 1;
                        eprintln!(
                            "monitor {} on `{}`: violation at round {round}",
                            verdict.monitor, verdict.instance
                        );
                    }
                    None => eprintln!(
                        "monitor {} on `{}`: no violation in {} round(s)",
                        verdict.monitor, verdict.instance, result.rounds
                    ),
                }
            }
            Ok(if violations > 0 { 1 } else { 0 })
        }
        Command::Refine {
            file,
            abstract_side,
            concrete,
            bound,
            completion_abstract,
            completion_concrete,
            json,
        } => {
            let (_, resolved) = load_model(&file)?;
            let parse_ref = |s: &str| -> Result<(String, String), CmdError> {
                s.split_once('.')
                    .map(|(c, a)| (c.to_string(), a.to_string()))
                    .ok_or_else(|| {
                        CmdError::usage(format!("`{s}` is not of the form COMPONENT.AUTOMATON"))
                    })
            };
            let (abs_comp, abs_aut) = parse_ref(&abstract_side)?;
            let (conc_comp, conc_aut) = parse_ref(&concrete)?;
            let abs =
                AutomatonSide::new(&resolved, &abs_comp, &abs_aut, completion_abstract.into())
                    .map_err(|e| CmdError::usage(e.to_string()))?;
            let conc =
                AutomatonSide::new(&resolved, &conc_comp, &conc_aut, completion_concrete.into())
                    .map_err(|e| CmdError::usage(e.to_string()))?;
            let config = explore_config();
            let verdict =
                refine::check_refinement(&abs, &conc, None, bound, &config).map_err(
                    |e| match e {
                        refine::ExploreError::BoundTooLarge(_) => CmdError::budget(e.to_string()),
                        refine::ExploreError::BadQuery(_) => CmdError::usage(e.to_string()),
                    },
                )?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&verdict.to_json(&resolved)).unwrap()
                );
            } else if verdict.refines() {
                println!("refines-up-to-bound (k = {bound})");
            } else {
                let ce = verdict
                    .counterexample
                    .as_ref()
                    .expect("violation has witness");
                println!("violation at round {}", ce.divergence_round);
                println!(
                    "{}",
                    serde_json::to_string(&verdict.to_json(&resolved)).unwrap()
                );
            }
            Ok(if verdict.refines() { 0 } else { 1 })
        }
        Command::Generate {
            file,
            component,
            template,
            out,
        } => {
            let (_, resolved) = load_model(&file)?;
            let comp_id = resolved
                .component_by_name(&component)
                .ok_or_else(|| CmdError::usage(format!("unknown component `{component}`")))?;
            let comp = resolved.component(comp_id);
            if !comp.is_atomic() {
                let manifest = codegen::connector_manifest(&resolved, comp_id);
                let text = format!("{}\n", serde_json::to_string_pretty(&manifest).unwrap());
                write_output(out.as_deref(), &text)?;
                return Ok(0);
            }
            let table = codegen::flatten(&resolved, comp_id, Completion::Ignore)
                .map_err(|e| CmdError::failed(e.to_string()))?;
            let parsed_template = match &template {
                Some(path) => {
                    let text = read_file(path)?;
                    Template::parse(&text, &path.to_string_lossy())
                        .map_err(|e| CmdError::failed(e.to_string()))?
                }
                None => Template::parse(codegen::TABLE_JSON_TEMPLATE, "table.json.tmpl")
                    .expect("built-in template parses"),
            };
            let rendered = codegen::template::render(&table, &parsed_template)
                .map_err(|e| CmdError::failed(e.to_string()))?;
            write_output(out.as_deref(), &rendered)?;
            Ok(0)
        }
    }
}
