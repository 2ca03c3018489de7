use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_gnn::harness::{
    ablate_kernel, ablate_representation, ablate_truncation, audit_splits, emit_report,
    read_records, run_validation, truncation_factors, write_records, ExperimentPlan, GridPoint,
    ReportFormat, RunManifest, RunRecord, Workspace,
};
use spectral_gnn::splits::{generate_splits, load_splits_for, save_splits, SplitFile};
use spectral_gnn::{
    generate_sbm, load_dataset, spectral, write_dataset, Dataset, Error, FeatureMode, KernelKind,
    KernelSpec, ModelKind, ReprKind, Result, SbmConfig, SplitKind, SplitSet,
};

#[derive(Parser)]
#[command(
    name = "spectral-gnn",
    version,
    about = "Spectral-filter linear GNNs for node classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a single configuration on one split.
    Train(TrainArgs),
    /// Grid search selected on mean validation accuracy.
    Validate(GridArgs),
    /// Kernel, representation, or truncation ablation.
    Ablate {
        #[arg(value_enum)]
        what: AblateKind,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Fixed-hyperparameter XW / AXW probes under each split convention.
    AuditSplits(AuditArgs),
    /// Split files.
    Splits {
        #[command(subcommand)]
        command: SplitsCmd,
    },
    /// Spectral-system cache files.
    Spectral {
        #[command(subcommand)]
        command: SpectralCmd,
    },
    /// Summarize a results CSV.
    Report(ReportArgs),
    /// Write a stochastic-block-model dataset.
    GenSbm(SbmArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AblateKind {
    Kernel,
    Repr,
    Trunc,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "kernel")]
    model: ModelKind,
    #[arg(long, default_value = "adj")]
    repr: ReprKind,
    #[arg(long, default_value = "id")]
    kernel: KernelKind,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    trunc: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    wd: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value = "balanced")]
    split: SplitKind,
    /// Split JSON file; overrides --split.
    #[arg(long)]
    splits: Option<PathBuf>,
    #[arg(long)]
    row_normalize: bool,
    /// Results CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Comma-separated lists select grids; omitted lists use the defaults.
#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "kernel")]
    model: ModelKind,
    #[arg(long, value_delimiter = ',')]
    repr: Vec<ReprKind>,
    #[arg(long, value_delimiter = ',')]
    kernel: Vec<KernelKind>,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    trunc: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    lr: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    wd: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value = "balanced")]
    split: SplitKind,
    /// Split JSON file; overrides --split and --seeds.
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Number of seeds, 0..N.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    row_normalize: bool,
    /// Directory for spectral cache files.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Results CSV of every run.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary table CSV (ablations).
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Dataset directories.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "sparse,public,dense,balanced"
    )]
    kinds: Vec<SplitKind>,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SplitsCmd {
    /// Generate split JSON for one convention.
    Gen {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "balanced")]
        split: SplitKind,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SpectralCmd {
    /// Decompose one representation and write its cache file.
    Cache {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "adj")]
        repr: ReprKind,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Results CSV produced by train/validate/ablate/audit-splits.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SbmArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,50")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 0.01)]
    q: f64,
    #[arg(long, default_value_t = 8)]
    features: usize,
    #[arg(long, default_value = "block-means")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let argv: Vec<String> = std::env::args().collect();
    match cli.command {
        Cmd::Train(a) => train(a, argv, started),
        Cmd::Validate(g) => validate(g, argv, started),
        Cmd::Ablate { what, grid } => ablate(what, grid, argv, started),
        Cmd::AuditSplits(a) => audit(a, argv, started),
        Cmd::Splits {
            command:
                SplitsCmd::Gen {
                    data,
                    split,
                    seeds,
                    out,
                },
        } => {
            let ds = load_dataset(&data)?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let splits = generate_splits(&ds, split, &seeds)?;
            save_splits(&out, &SplitFile::new(ds.name.clone(), split, &splits))?;
            println!(
                "wrote {} {} split(s) to {}",
                splits.len(),
                split,
                out.display()
            );
            Ok(())
        }
        Cmd::Spectral {
            command: SpectralCmd::Cache { data, repr, out },
        } => {
            let ds = load_dataset(&data)?;
            let sys = spectral::decompose(&spectral_gnn::build_representation(&ds, repr))?;
            spectral::save_cache(&sys, &out)?;
            println!(
                "{} {repr}: n={} rank={} -> {}",
                ds.name,
                sys.n(),
                sys.rank(),
                out.display()
            );
            Ok(())
        }
        Cmd::Report(a) => {
            let records = read_records(&a.results)?;
            let text = emit_report(&records, a.format)?;
            emit(a.out.as_deref(), &text)
        }
        Cmd::GenSbm(a) => {
            let mode = match a.mode.as_str() {
                "noise" => FeatureMode::Noise,
                "block-means" => FeatureMode::BlockMeans,
                m => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown feature mode {m:?}"
                    )))
                }
            };
            let ds = generate_sbm(&SbmConfig {
                block_sizes: a.sizes,
                intra_p: a.p,
                inter_q: a.q,
                feature_mode: mode,
                feature_dim: a.features,
                seed: a.seed,
            })?;
            write_dataset(&ds, &a.out)?;
            let s = ds.summary();
            println!(
                "sbm: {} nodes, {} edges, {} features, {} classes -> {}",
                s.nodes,
                s.edges,
                s.features,
                s.classes,
                a.out.display()
            );
            Ok(())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish_records(
    out: Option<&Path>,
    records: &[RunRecord],
    argv: Vec<String>,
    started: Instant,
) -> Result<()> {
    if let Some(path) = out {
        write_records(path, records)?;
        let manifest = RunManifest::new(argv, records, started.elapsed().as_millis() as u64);
        manifest.save(path.with_extension("manifest.json"))?;
    }
    Ok(())
}

fn load_splits(
    ds: &Dataset,
    file: Option<&Path>,
    kind: SplitKind,
    seeds: &[u64],
) -> Result<Vec<SplitSet>> {
    match file {
        Some(p) => load_splits_for(p, ds),
        None => generate_splits(ds, kind, seeds),
    }
}

fn train(a: TrainArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let split = {
        let all = load_splits(&ds, a.splits.as_deref(), a.split, &[a.seed])?;
        let found = all.iter().find(|s| s.seed == a.seed).or(all.first());
        found
            .cloned()
            .ok_or_else(|| Error::Split("split file holds no splits".into()))?
    };
    let kernel = if a.model.is_spectral() {
        Some(KernelSpec::new(a.kernel, a.gamma)?)
    } else {
        None
    };
    let plan = ExperimentPlan {
        reprs: vec![a.repr],
        kernels: vec![a.kernel],
        gammas: a.gamma.into_iter().collect(),
        truncs: vec![a.trunc],
        betas: vec![a.beta],
        lrs: vec![a.lr],
        wds: vec![a.wd],
        hiddens: vec![a.hidden],
        split: split.kind,
        seeds: vec![split.seed],
        epochs: a.epochs,
        row_normalize: a.row_normalize,
        ..ExperimentPlan::new(ds.name.clone(), a.model)
    };
    let point = GridPoint {
        repr: a.model.uses_graph().then_some(a.repr),
        kernel,
        trunc: if a.model == ModelKind::LrKernel {
            a.trunc
        } else {
            0.0
        },
        beta: if a.model.uses_graph() { a.beta } else { 0.0 },
        lr: a.lr,
        wd: a.wd,
        hidden: (a.model == ModelKind::Mlp2).then_some(a.hidden),
    };
    let mut ws = Workspace::new(&ds);
    let records = ws.run_point(&plan, &point, std::slice::from_ref(&split))?;
    let r = &records[0];
    println!(
        "{} {} [{point}] split={} seed={}: test={:.4} val={} best_epoch={}",
        ds.name,
        a.model,
        r.split,
        r.seed,
        r.test_acc,
        r.val_acc
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into()),
        r.best_epoch
    );
    finish_records(a.out.as_deref(), &records, argv, started)
}

fn plan_from(g: &GridArgs, ds: &Dataset) -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(ds.name.clone(), g.model);
    macro_rules! set {
        ($field:ident, $arg:ident) => {
            if !g.$arg.is_empty() {
                plan.$field = g.$arg.clone();
            }
        };
    }
    set!(reprs, repr);
    set!(kernels, kernel);
    set!(gammas, gamma);
    set!(truncs, trunc);
    set!(betas, beta);
    set!(lrs, lr);
    set!(wds, wd);
    set!(hiddens, hidden);
    plan.split = g.split;
    plan.seeds = (g.seed..g.seed + g.seeds).collect();
    plan.epochs = g.epochs;
    plan.row_normalize = g.row_normalize;
    plan
}

fn workspace<'a>(g: &GridArgs, ds: &'a Dataset) -> Workspace<'a> {
    let ws = Workspace::new(ds);
    match &g.cache_dir {
        Some(d) => ws.with_cache_dir(d),
        None => ws,
    }
}

fn validate(g: GridArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let ds = load_dataset(&g.data)?;
    let plan = plan_from(&g, &ds);
    let splits = load_splits(&ds, g.splits.as_deref(), plan.split, &plan.seeds)?;
    let mut ws = workspace(&g, &ds);
    let out = run_validation(&mut ws, &plan, &splits)?;
    let b = &out.best;
    println!(
        "{} {}: {} grid point(s) x {} split(s); selected [{}] val={} test={}",
        ds.name,
        plan.model,
        out.points.len(),
        splits.len(),
        b.point,
        b.val_mean
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into()),
        spectral_gnn::harness::format_cell(b.test_mean, b.test_std),
    );
    finish_records(g.out.as_deref(), &out.records, argv, started)
}

fn ablate(what: AblateKind, g: GridArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let ds = load_dataset(&g.data)?;
    let mut plan = plan_from(&g, &ds);
    let splits = load_splits(&ds, g.splits.as_deref(), plan.split, &plan.seeds)?;
    let mut ws = workspace(&g, &ds);
    let (table, records) = match what {
        AblateKind::Kernel => {
            let a = ablate_kernel(&mut ws, &plan, &splits)?;
            for r in &a.rows {
                println!(
                    "{:>5} {}{}",
                    r.kernel.as_str(),
                    spectral_gnn::harness::format_cell(r.result.test_mean, r.result.test_std),
                    if r.selected { " *" } else { "" }
                );
            }
            (a.to_csv()?, a.records)
        }
        AblateKind::Repr => {
            let (first, second) = match plan.reprs.as_slice() {
                [a, b] => (*a, *b),
                _ => (ReprKind::Adjacency, ReprKind::Laplacian),
            };
            let a = ablate_representation(&mut ws, &plan, &splits, first, second)?;
            println!("{}: {first} - {second} = {:+.4}", ds.name, a.difference);
            (a.to_csv()?, a.records)
        }
        AblateKind::Trunc => {
            plan.model = ModelKind::LrKernel;
            let factors = if g.trunc.is_empty() {
                truncation_factors()
            } else {
                g.trunc.clone()
            };
            let c = ablate_truncation(&mut ws, &plan, &splits, &factors)?;
            for p in &c.points {
                println!(
                    "factor={:.2} rank={} test={:.4} ratio={:.3}",
                    p.factor, p.rank, p.result.test_mean, p.ratio
                );
            }
            (c.to_csv()?, c.records)
        }
    };
    if let Some(t) = &g.table {
        emit(Some(t), &table)?;
    }
    finish_records(g.out.as_deref(), &records, argv, started)
}

fn audit(a: AuditArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let datasets = a
        .data
        .iter()
        .map(load_dataset)
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Dataset> = datasets.iter().collect();
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let report = audit_splits(&refs, &a.kinds, &seeds, a.epochs)?;
    for r in &report.rows {
        println!(
            "{:<12} {:<6} {:<8} {}",
            r.dataset,
            r.probe.as_str(),
            r.split.as_str(),
            spectral_gnn::harness::format_cell(r.mean, r.std)
        );
    }
    for s in &report.skipped {
        println!("{:<12} skipped {}: {}", s.dataset, s.split, s.reason);
    }
    if let Some(t) = &a.table {
        emit(Some(t), &report.to_csv()?)?;
    }
    finish_records(a.out.as_deref(), &report.records, argv, started)
}
