use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tfmn::pipeline::cdf_table;
use tfmn::{Config, Error, Pipeline, Stage};
use tfmn_core::features::FeatureSubset;

/// Textual forma mentis network pipeline.
///
/// Config keys can be overridden with environment variables named
/// TFMN_<SECTION>__<KEY>, e.g. TFMN_NETWORK__K=3 or TFMN_SEED=7. Exit status
/// is 0 on success, 2 for configuration errors and 3 when a stage fails.
#[derive(Debug, Parser)]
#[command(name = "tfmn", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "tfmn.toml")]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run only this stage.
    #[arg(long, global = true, value_enum)]
    stage: Option<Stage>,
    /// Model only this feature subset.
    #[arg(long, global = true, value_parser = parse_subset)]
    subset: Option<FeatureSubset>,
    /// Number of shuffled-target repetitions.
    #[arg(long, global = true)]
    permute: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every stage in order (the default).
    Run,
    /// Parse the CoNLL-U corpus.
    Ingest,
    /// Build one network per transcript.
    Build,
    /// Compute graph metrics.
    Metrics,
    /// Compute emotion z-scores.
    Emotions,
    /// Screen features and grid-search the models.
    Train,
    /// SHAP values, feature elimination and the permutation baseline.
    Explain,
    /// Summary tables.
    Report,
    /// Print the cumulative distribution of syntactic distances.
    Cdf,
}

fn parse_subset(s: &str) -> Result<FeatureSubset, String> {
    FeatureSubset::parse(s).ok_or_else(|| format!("expected combined, network or emotion, got {s:?}"))
}

fn load(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = Config::load_with_process_env(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(s) = cli.subset {
        cfg.features.subsets = vec![s];
    }
    if let Some(n) = cli.permute {
        cfg.model.n_perm = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stages(cli: &Cli) -> Result<Option<Vec<Stage>>, Error> {
    let from_command = match cli.command {
        None | Some(Command::Run) => None,
        Some(Command::Cdf) => return Ok(None),
        Some(Command::Ingest) => Some(Stage::Ingest),
        Some(Command::Build) => Some(Stage::Build),
        Some(Command::Metrics) => Some(Stage::Metrics),
        Some(Command::Emotions) => Some(Stage::Emotions),
        Some(Command::Train) => Some(Stage::Train),
        Some(Command::Explain) => Some(Stage::Explain),
        Some(Command::Report) => Some(Stage::Report),
    };
    match (from_command, cli.stage) {
        (Some(a), Some(b)) if a != b => Err(tfmn::ConfigError::Invalid {
            field: "--stage".into(),
            message: format!("conflicts with the {} subcommand", a.name()),
        }
        .into()),
        (Some(s), _) | (None, Some(s)) => Ok(Some(vec![s])),
        (None, None) => Ok(Some(Stage::ALL.to_vec())),
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load(cli)?;
    let Some(stages) = stages(cli)? else {
        print!("{}", cdf_table(&cfg)?);
        return Ok(());
    };
    let pipeline = Pipeline::new(cfg);
    for s in stages {
        let m = pipeline.run(s)?;
        eprintln!("{}: {} files", s.name(), m.outputs.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
