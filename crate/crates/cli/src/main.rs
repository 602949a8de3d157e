use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqlrefine_cli::{
    cmd_detect, cmd_eval, cmd_introspect, cmd_refine, cmd_run, cmd_synth, cmd_taxonomy_export, CliError, RunConfig,
};

#[derive(Parser)]
#[command(name = "sqlrefine", version, about = "Detect and repair errors in predicted SQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    db_root: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Compare result rows in order for every sample.
    #[arg(long)]
    order_sensitive: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(&self.config)?;
        let cwd = std::env::current_dir().map_err(|e| CliError::Io(e.to_string()))?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(p) = &self.db_root {
            c.db_root = cwd.join(p);
        }
        if let Some(p) = &self.out {
            c.out_dir = cwd.join(p);
        }
        if self.jobs.is_some() {
            c.jobs = self.jobs;
        }
        c.eval.order_sensitive |= self.order_sensitive;
        c.check_paths()?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a database's schema.
    Introspect {
        db_path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build a labelled dataset from the corpus.
    Synth(Common),
    /// Detect errors in every sample.
    Detect(Common),
    /// Refine flagged samples of an earlier detection run.
    Refine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        detections: Option<PathBuf>,
    },
    /// Detect, refine and evaluate.
    Run(Common),
    /// Score an earlier refinement run.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Taxonomy resources.
    Taxonomy {
        #[command(subcommand)]
        action: TaxonomyAction,
    },
}

#[derive(Subcommand)]
enum TaxonomyAction {
    /// Write the taxonomy, external mapping and templates as JSON.
    Export {
        #[arg(long, default_value = "taxonomy")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Introspect { db_path, json } => print!("{}", cmd_introspect(&db_path, json)?),
        Command::Synth(c) => {
            let r = cmd_synth(&c.load()?)?;
            println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
        }
        Command::Detect(c) => {
            let r = cmd_detect(&c.load()?)?;
            let flagged = r.iter().filter(|d| d.flagged).count();
            println!("{} samples, {flagged} flagged", r.len());
        }
        Command::Refine { common, detections } => {
            let r = cmd_refine(&common.load()?, detections.as_deref())?;
            let changed = r.iter().filter(|x| x.refined_sql != x.original_sql).count();
            println!("{} samples, {changed} rewritten", r.len());
        }
        Command::Run(c) => print!("{}", cmd_run(&c.load()?)?.summary),
        Command::Eval { common, records } => print!("{}", cmd_eval(&common.load()?, records.as_deref())?.1),
        Command::Taxonomy {
            action: TaxonomyAction::Export { out },
        } => {
            for p in cmd_taxonomy_export(&out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
