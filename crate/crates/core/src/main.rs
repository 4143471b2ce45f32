use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use repgeom::archive::read_archive;
use repgeom::corpus::{validate_manifest, CorpusManifest, LabelKey};
use repgeom::pipeline::{
    analyze, project_layers, AnalysisConfig, AnalysisReport, EmbedMethod, EmbeddingSet,
    EMBEDDINGS_FILE, MANIFEST_FILE, METRICS_FILE, REPORT_FILE,
};
use repgeom::render::{metrics_csv, render, RenderOptions};
use repgeom::{Error, Result};

#[derive(Parser)]
#[command(name = "repgeom", version)]
#[command(about = "Per-block cluster structure of transformer CLS activations")]
struct Cli {
    /// Histogram bins for EDD
    #[arg(long, global = true, default_value_t = 100)]
    bins: usize,

    /// Isotropic reference draws for EDD
    #[arg(long, global = true, default_value_t = 20)]
    ref_draws: usize,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// SMACOF iteration cap
    #[arg(long, global = true, default_value_t = 300)]
    max_iter: usize,

    /// SMACOF relative stress tolerance
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps: f64,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Which labels to color and group figures by
    #[arg(long, global = true, value_enum, default_value_t = KeyArg::Both)]
    label_key: KeyArg,

    /// 1-based blocks that get an ellipse figure
    #[arg(long, global = true, value_delimiter = ',', default_values_t = [1usize, 4, 12])]
    ellipse_blocks: Vec<usize>,

    /// Only draw ellipses for these class ids
    #[arg(long, global = true, value_delimiter = ',')]
    ellipse_classes: Option<Vec<u32>>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an archive and its manifest
    Validate { archive: PathBuf },
    /// Per-block EDD, GDV and mean distance
    Analyze {
        archive: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// 2-D MDS projection of every block
    Embed {
        archive: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Smacof)]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw figures from a directory written by analyze/embed
    Render { reportdir: PathBuf },
    /// analyze + embed + render into one directory
    Report {
        archive: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Smacof)]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KeyArg {
    Narrative,
    Style,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Classical,
    Smacof,
}

impl Cli {
    fn config(&self, method: Option<MethodArg>) -> AnalysisConfig {
        AnalysisConfig {
            bins: self.bins,
            ref_draws: self.ref_draws,
            seed: self.seed,
            max_iter: self.max_iter,
            eps: self.eps,
            method: match method {
                Some(MethodArg::Classical) => EmbedMethod::Classical,
                _ => EmbedMethod::Smacof,
            },
            threads: self.threads,
        }
    }

    fn render_options(&self) -> RenderOptions {
        RenderOptions {
            label_keys: match self.label_key {
                KeyArg::Narrative => vec![LabelKey::Narrative],
                KeyArg::Style => vec![LabelKey::Style],
                KeyArg::Both => LabelKey::ALL.to_vec(),
            },
            ellipse_blocks: self.ellipse_blocks.clone(),
            ellipse_classes: self.ellipse_classes.clone(),
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn print_report_summary(report: &AnalysisReport) {
    println!("block  edd       gdv_narrative  gdv_style   mean_distance");
    for m in &report.per_layer {
        println!(
            "{:>5}  {:.5}  {:>13.6}  {:>10.6}  {:.4}",
            m.block, m.edd.value, m.gdv_narrative.value, m.gdv_style.value, m.mean_distance
        );
    }
    println!(
        "argmin GDV: narrative block {}, style block {}",
        report.argmin_gdv_narrative, report.argmin_gdv_style
    );
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Validate { archive } => {
            let archive = read_archive(archive)?;
            let report = validate_manifest(archive.manifest());
            println!(
                "archive: N={} L={} H={}",
                archive.num_samples(),
                archive.num_layers(),
                archive.hidden_dim()
            );
            println!("grid_complete: {}", report.grid_complete);
            for w in report.warnings() {
                eprintln!("warning: {w}");
            }
            for v in &report.violations {
                println!("violation: {v}");
            }
            if report.is_valid() {
                println!("ok");
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Command::Analyze { archive, out } => {
            let archive = read_archive(archive)?;
            let report = analyze(&archive, &cli.config(None))?;
            create_dir(out)?;
            report.save(&out.join(REPORT_FILE))?;
            std::fs::write(out.join(METRICS_FILE), metrics_csv(&report)).map_err(|e| {
                Error::Io {
                    path: out.join(METRICS_FILE),
                    source: e,
                }
            })?;
            archive.manifest().save(&out.join(MANIFEST_FILE))?;
            print_report_summary(&report);
            Ok(0)
        }
        Command::Embed {
            archive,
            method,
            out,
        } => {
            let archive = read_archive(archive)?;
            let config = cli.config(Some(*method));
            let embeddings = project_layers(&archive, &config)?;
            create_dir(out)?;
            EmbeddingSet::from_embeddings(&embeddings, &config).save(&out.join(EMBEDDINGS_FILE))?;
            archive.manifest().save(&out.join(MANIFEST_FILE))?;
            for (l, e) in embeddings.iter().enumerate() {
                println!(
                    "block {:>2}: normalized stress {:.5}, {} iterations{}",
                    l + 1,
                    e.normalized_stress,
                    e.iterations,
                    if e.converged { "" } else { " (not converged)" }
                );
            }
            Ok(0)
        }
        Command::Render { reportdir } => {
            let report = AnalysisReport::load(&reportdir.join(REPORT_FILE))?;
            let manifest = CorpusManifest::load(&reportdir.join(MANIFEST_FILE))?;
            let emb_path = reportdir.join(EMBEDDINGS_FILE);
            let embeddings = if emb_path.exists() {
                Some(EmbeddingSet::load(&emb_path)?)
            } else {
                log::warn!(
                    "{} not found; skipping scatter and ellipse figures",
                    emb_path.display()
                );
                None
            };
            let written = render(
                &report,
                embeddings.as_ref(),
                &manifest,
                reportdir,
                &cli.render_options(),
            )?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Command::Report {
            archive,
            method,
            out,
        } => {
            let archive = read_archive(archive)?;
            let config = cli.config(Some(*method));
            let report = analyze(&archive, &config)?;
            let embeddings = project_layers(&archive, &config)?;
            let set = EmbeddingSet::from_embeddings(&embeddings, &config);
            create_dir(out)?;
            set.save(&out.join(EMBEDDINGS_FILE))?;
            archive.manifest().save(&out.join(MANIFEST_FILE))?;
            render(
                &report,
                Some(&set),
                archive.manifest(),
                out,
                &cli.render_options(),
            )?;
            print_report_summary(&report);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
