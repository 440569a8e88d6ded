use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use atomforge::automata::{run_gluing_query, Coding, GluingAutomaton, Verdict};
use atomforge::config::RunConfig;
use atomforge::export::{export, export_all, write_manifest, ExportKind};
use atomforge::pipeline::{load_stages, run_pipeline, Overrides};

#[derive(Parser)]
#[command(name = "atomforge", version, about = "Trees of atoms and gluing automata for hyperbolic graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct Tuning {
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    lambda: Option<u32>,
    #[arg(long = "lambda-e")]
    lambda_e: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build every stage and write all exports plus manifest.json.
    Run(Common),
    /// Decide whether two codings are glued.
    Glue {
        /// Run configuration whose cached gluing automaton is queried.
        #[arg(long, required_unless_present = "automaton")]
        config: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
        /// Gluing automaton JSON written by `run`.
        #[arg(long, conflicts_with = "config")]
        automaton: Option<PathBuf>,
        /// Coding such as `3,C1,C2` or `3,C1[C2,C2]` (bracket = period).
        u: String,
        v: String,
    },
    /// Write one export from the cached stages.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        what: ExportKind,
        #[arg(long)]
        level: Option<u32>,
    },
}

impl Tuning {
    fn load(&self, path: &Path) -> Result<(RunConfig, Overrides), String> {
        let mut cfg = RunConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let ov = Overrides { radius: self.radius, levels: self.levels, lambda: self.lambda, lambda_e: self.lambda_e, seed: self.seed };
        ov.apply(&mut cfg);
        Ok((cfg, ov))
    }
}

impl Common {
    fn load(&self) -> Result<(RunConfig, Overrides), String> {
        self.tuning.load(&self.config)
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, ov) = common.load()?;
            let stages = run_pipeline(&cfg, &ov).map_err(|e| e.to_string())?;
            let artifacts = export_all(&stages, &cfg.output).map_err(|e| e.to_string())?;
            let manifest = write_manifest(&stages, artifacts, &cfg.output).map_err(|e| e.to_string())?;
            println!("{}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Glue { config, tuning, automaton, u, v } => {
            let m: GluingAutomaton = match (automaton, config) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
                }
                (None, Some(path)) => {
                    let (cfg, ov) = tuning.load(&path)?;
                    let stages = load_stages(&cfg, &ov).map_err(|e| e.to_string())?;
                    stages.analysis.automata.ok_or("the source has no group labelling, so no gluing automaton exists")?.gluing
                }
                (None, None) => unreachable!("clap requires --config or --automaton"),
            };
            if let Err(e) = m.require_closed() {
                eprintln!("warning: {e}");
            }
            let u = Coding::parse(&u, &m.symbols).map_err(|e| format!("u: {e}"))?;
            let v = Coding::parse(&v, &m.symbols).map_err(|e| format!("v: {e}"))?;
            match run_gluing_query(&m, &u, &v).map_err(|e| e.to_string())? {
                Verdict::Accept => {
                    println!("accept");
                    Ok(ExitCode::SUCCESS)
                }
                Verdict::Reject { level } => {
                    println!("reject at level {level}");
                    Ok(ExitCode::from(1))
                }
                Verdict::Undetermined { level } => {
                    Err(format!("undetermined at level {level}: the automaton is not closed; raise `levels` and `radius`"))
                }
            }
        }
        Command::Export { common, what, level } => {
            let (cfg, ov) = common.load()?;
            let stages = load_stages(&cfg, &ov).map_err(|e| e.to_string())?;
            for name in export(&stages, what, level, &cfg.output).map_err(|e| e.to_string())? {
                println!("{}", cfg.output.join(name).display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
