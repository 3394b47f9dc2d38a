use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use graph_fkt::eval::synth::{generate_synthetic, synthetic_atlas, SyntheticSpec};
use graph_fkt::eval::{self, FittedPipeline, Method};
use graph_fkt::io::cohort::{cohort_text, load_cohort, load_dataset, write_dataset, CohortEntry};
use graph_fkt::io::config::{load_config, RunConfig};
use graph_fkt::io::phenotype::{filter_records, load_phenotypes, ColumnMap, Criteria};
use graph_fkt::io::report::{eval_summary_tsv, export_mode_report, export_node_file, DEFAULT_MULTIPLIER};
use graph_fkt::io::{atomic_write, fmt_f64, matrix_text};
use graph_fkt::{build_graph, gft_basis, BasisSource, Error, GraphKind, Label, RoiAtlas, SubjectRecord};

#[derive(Parser)]
#[command(
    name = "graph-fkt",
    version,
    about = "Graph-spectral FKT features and decision-tree classification of ROI time-series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an anatomical graph and dump its adjacency and GFT basis.
    BuildGraph(BuildGraphArgs),
    /// Select subjects from a phenotype table into a cohort file.
    Filter(FilterArgs),
    /// Fit the full pipeline on a cohort and write the model JSON.
    Fit(FitArgs),
    /// Run a repeated-split or leave-one-out evaluation.
    Evaluate(EvaluateArgs),
    /// Export discriminative GFT modes and node files from a fitted model.
    Report(ReportArgs),
    /// Write a synthetic dataset with planted spectral structure.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Knn,
    Wfc,
    Uc,
    Randwfc,
}

#[derive(Args)]
struct GraphOpts {
    /// Atlas file (`index name x y z` per line); the built-in AAL90 by default.
    #[arg(long)]
    atlas: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "knn")]
    graph: GraphArg,
    /// Neighbours per ROI for the knn graph.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Seed of the random-weight graph.
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
}

impl GraphOpts {
    fn kind(&self) -> GraphKind {
        match self.graph {
            GraphArg::Knn => GraphKind::Knn { k: self.k },
            GraphArg::Wfc => GraphKind::Wfc,
            GraphArg::Uc => GraphKind::Uc,
            GraphArg::Randwfc => GraphKind::RandWfc { seed: self.graph_seed },
        }
    }
}

#[derive(Args)]
struct BuildGraphArgs {
    #[command(flatten)]
    graph: GraphOpts,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Adolescents,
    Adults,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum Eyes {
    Open,
    Closed,
    Any,
}

#[derive(Args)]
struct FilterArgs {
    /// Comma-separated phenotype table with a header row.
    #[arg(long)]
    phenotypes: PathBuf,
    #[arg(long, value_enum, default_value = "adolescents")]
    preset: Preset,
    #[arg(long, value_enum)]
    eyes: Option<Eyes>,
    /// Keep subjects strictly older than this (years).
    #[arg(long)]
    min_age: Option<f64>,
    /// Keep subjects strictly younger than this (years).
    #[arg(long)]
    max_age: Option<f64>,
    /// Keep subjects with mean framewise displacement strictly below this (mm).
    #[arg(long)]
    max_fd: Option<f64>,
    /// Column-map override, `key=value` (e.g. `fd=meanFD`).
    #[arg(long = "column", value_name = "KEY=VALUE")]
    columns: Vec<String>,
    /// Cohort file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigOpts {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key, `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    config: ConfigOpts,
    /// Model JSON to write; the configured output by default.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the fitted tree.
    #[arg(long)]
    dump_tree: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigOpts,
    /// Report JSON to write; the configured output, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a tab-separated summary.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Atlas file the model was fitted with; the built-in AAL90 by default.
    #[arg(long)]
    atlas: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MULTIPLIER)]
    multiplier: f64,
    /// Extra 1-based modes to export as node files, comma-separated.
    #[arg(long, value_delimiter = ',')]
    modes: Vec<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Planted {
    Strong,
    Weak,
    None,
}

impl Planted {
    fn strength(self) -> f64 {
        match self {
            Planted::Strong => 10.0,
            Planted::Weak => 1.0,
            Planted::None => 0.0,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "strong")]
    planted: Planted,
    /// Number of ROIs.
    #[arg(long, default_value_t = 20)]
    r: usize,
    #[arg(long, default_value_t = 200)]
    subjects: usize,
    #[arg(long, default_value_t = 100)]
    time_points: usize,
    /// 1-based GFT mode carrying the ASD spike.
    #[arg(long, default_value_t = 3)]
    asd_mode: usize,
    /// 1-based GFT mode carrying the NT spike.
    #[arg(long, default_value_t = 7)]
    nt_mode: usize,
    /// Standard deviation of node-domain noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// knn graph degree used for the planted basis.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::BuildGraph(a) => build_graph_cmd(a),
        Command::Filter(a) => filter_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Report(a) => report_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_atlas(path: Option<&Path>) -> CliResult<RoiAtlas> {
    Ok(match path {
        Some(p) => RoiAtlas::load(p)?,
        None => RoiAtlas::aal90(),
    })
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| {
        Failure::Data(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn build_graph_cmd(a: BuildGraphArgs) -> CliResult {
    let atlas = load_atlas(a.graph.atlas.as_deref())?;
    let graph = build_graph(&atlas, a.graph.kind())?;
    let basis = gft_basis(&graph)?;
    create_dir(&a.out)?;
    atomic_write(a.out.join("adjacency.txt"), matrix_text(graph.adjacency()).as_bytes())?;
    atomic_write(
        a.out.join("eigenvectors.txt"),
        matrix_text(basis.eigenvectors()).as_bytes(),
    )?;
    let mut values = String::new();
    for v in basis.eigenvalues().iter() {
        let _ = writeln!(values, "{}", fmt_f64(*v));
    }
    atomic_write(a.out.join("eigenvalues.txt"), values.as_bytes())?;
    println!(
        "{} ROIs, graph {}, {} component(s), atlas sha256 {}",
        atlas.len(),
        graph.kind(),
        graph.components().len(),
        atlas.checksum()
    );
    Ok(())
}

fn filter_cmd(a: FilterArgs) -> CliResult {
    let mut map = ColumnMap::default();
    for c in &a.columns {
        let (k, v) = c
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--column `{c}` is not key=value")))?;
        map.set(k.trim(), v.trim()).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut criteria = match a.preset {
        Preset::Adolescents => Criteria::adolescents(),
        Preset::Adults => Criteria::adults(),
        Preset::None => Criteria {
            eyes_open: None,
            min_age: None,
            max_age: None,
            max_fd: None,
        },
    };
    if let Some(eyes) = a.eyes {
        criteria.eyes_open = match eyes {
            Eyes::Open => Some(true),
            Eyes::Closed => Some(false),
            Eyes::Any => None,
        };
    }
    criteria.min_age = a.min_age.or(criteria.min_age);
    criteria.max_age = a.max_age.or(criteria.max_age);
    criteria.max_fd = a.max_fd.or(criteria.max_fd);

    let table = load_phenotypes(&a.phenotypes, &map)?;
    let kept: Vec<CohortEntry> = filter_records(&table.records, &criteria)
        .into_iter()
        .map(|r| CohortEntry {
            id: r.subject_id.clone(),
            label: r.diagnosis,
        })
        .collect();
    atomic_write(&a.out, cohort_text(&kept).as_bytes())?;
    let asd = kept.iter().filter(|e| e.label == Label::Asd).count();
    eprintln!(
        "kept {} subjects ({asd} ASD, {} NT); {} row(s) skipped for missing fields",
        kept.len(),
        kept.len() - asd,
        table.skipped.len()
    );
    Ok(())
}

fn run_config(opts: &ConfigOpts) -> CliResult<RunConfig> {
    let mut cfg = load_config(&opts.config)?;
    for o in &opts.overrides {
        cfg.apply_override(o).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dataset_for(cfg: &RunConfig, atlas: &RoiAtlas) -> CliResult<Vec<SubjectRecord>> {
    let cohort_path = cfg
        .cohort
        .as_ref()
        .ok_or_else(|| Failure::Usage("configuration has no `cohort`".into()))?;
    let layout = cfg
        .layout()
        .ok_or_else(|| Failure::Usage("configuration has no `timeseries_dir`".into()))?;
    let cohort = load_cohort(cohort_path)?;
    Ok(load_dataset(&cohort, &layout, atlas.len())?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => atomic_write(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn fit_cmd(a: FitArgs) -> CliResult {
    let cfg = run_config(&a.config)?;
    let atlas = load_atlas(cfg.atlas.as_deref())?;
    let dataset = dataset_for(&cfg, &atlas)?;
    let fitted = eval::fit_experiment(&cfg.experiment(), &dataset, &atlas)?;
    let out = a
        .out
        .or(cfg.output.clone())
        .ok_or_else(|| Failure::Usage("no output path: pass --out or set `output`".into()))?;
    atomic_write(&out, fitted.to_json()?.as_bytes())?;
    if a.dump_tree {
        print!("{}", fitted.tree.render());
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> CliResult {
    let cfg = run_config(&a.config)?;
    let atlas = load_atlas(cfg.atlas.as_deref())?;
    let dataset = dataset_for(&cfg, &atlas)?;
    let experiment = cfg.experiment();
    let mut report = eval::run_experiment(&experiment, &dataset, &atlas)?;
    let mut others = Vec::new();
    for &name in &cfg.compare {
        let other = eval::run_experiment(&experiment.with_method(cfg.method_for(name)), &dataset, &atlas)?;
        report.compare_with(&other)?;
        others.push(other);
    }
    let out = a.out.or(cfg.output.clone());
    write_or_print(out.as_deref(), &(report.to_json()? + "\n"))?;
    if let Some(p) = a.summary {
        let mut all = vec![report];
        all.extend(others);
        atomic_write(p, eval_summary_tsv(&all).as_bytes())?;
    }
    Ok(())
}

fn report_cmd(a: ReportArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.model).map_err(|e| Error::Io {
        path: a.model.clone(),
        source: e,
    })?;
    let fitted = FittedPipeline::from_json(&text)?;
    let (Some(model), Some(dims)) = (fitted.fkt_model()?, fitted.dims.as_ref()) else {
        return Err(Error::InvalidInput(format!("{} models carry no projection to report", fitted.method)).into());
    };
    let node_basis = match fitted.method {
        Method::Ours { graph } => {
            let atlas = load_atlas(a.atlas.as_deref())?;
            if let Some(sum) = &model.provenance.atlas_checksum {
                if *sum != atlas.checksum() {
                    return Err(Error::InvalidInput("model was fitted with a different atlas".into()).into());
                }
            }
            if let Some(BasisSource::Graph { graph: fitted_graph }) = model.provenance.basis {
                if fitted_graph != graph {
                    return Err(Error::InvalidInput("model provenance disagrees with its method graph".into()).into());
                }
            }
            let basis = gft_basis(&build_graph(&atlas, graph)?)?;
            Some((atlas, basis))
        }
        _ if !a.modes.is_empty() => {
            return Err(Error::InvalidInput("node files need a graph basis; this model has none".into()).into());
        }
        _ => None,
    };

    let report = export_mode_report(&model, dims, a.multiplier)?;
    create_dir(&a.out)?;
    atomic_write(a.out.join("modes.tsv"), report.to_tsv().as_bytes())?;
    atomic_write(a.out.join("modes.json"), (report.to_json()? + "\n").as_bytes())?;
    println!("ASD-dominant rows flag modes {:?}", report.flagged_for(Label::Asd));
    println!("NT-dominant rows flag modes {:?}", report.flagged_for(Label::Nt));

    if let Some((atlas, basis)) = node_basis {
        let mut modes: Vec<usize> = report
            .flagged_for(Label::Asd)
            .into_iter()
            .chain(report.flagged_for(Label::Nt))
            .chain(a.modes.iter().copied())
            .collect();
        modes.sort_unstable();
        modes.dedup();
        for mode in modes {
            export_node_file(&atlas, &basis, mode, a.out.join(format!("mode-{mode:03}.node")))?;
        }
    }
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> CliResult {
    for (name, mode) in [("--asd-mode", a.asd_mode), ("--nt-mode", a.nt_mode)] {
        if mode < 2 || mode > a.r {
            return Err(Failure::Usage(format!("{name} {mode} out of range 2..={}", a.r)));
        }
    }
    let atlas = synthetic_atlas(a.r, a.seed)?;
    let basis = gft_basis(&build_graph(&atlas, GraphKind::Knn { k: a.k })?)?;
    let mut spec = SyntheticSpec::planted(
        a.r,
        a.subjects,
        a.time_points,
        a.asd_mode - 1,
        a.nt_mode - 1,
        a.planted.strength(),
        a.seed,
    );
    spec.noise = a.noise;
    let subjects = generate_synthetic(&spec, &basis)?;
    create_dir(&a.out)?;
    write_dataset(&a.out, &subjects)?;
    atomic_write(a.out.join("atlas.txt"), atlas.to_text().as_bytes())?;
    let cfg = format!(
        "atlas = atlas.txt\ncohort = cohort.tsv\ntimeseries_dir = timeseries\ngraph = knn\nk = {}\n",
        a.k
    );
    atomic_write(a.out.join("run.cfg"), cfg.as_bytes())?;
    Ok(())
}
