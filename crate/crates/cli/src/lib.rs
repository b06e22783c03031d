//! `corrpf` command line: synthesize, track, evaluate and compare.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use corrpf::config::RunConfig;
use corrpf::eval::{compare_proposals, curves_csv, ope_from_boxes, run_ope};
use corrpf::pfilter::run_tracker;
use corrpf::sequences::{
    generate_synthetic, load_results, load_sequence, save_overlays, save_results, save_sequence,
    save_weight_summary, Sequence, SynthSpec,
};
use corrpf::{BoundingBox, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "corrpf",
    version,
    about = "Particle-filter tracking over correlation-filter responses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track a sequence directory or a synth spec file (generated with seed 0).
    Track {
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `pf.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write frames with the estimate drawn on them.
        #[arg(long)]
        overlays: bool,
    },
    /// One-pass evaluation: prints precision@20 and success AUC.
    Eval {
        seq_dir: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Score an existing results CSV instead of tracking.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Directory for `curves.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a synth spec into a sequence directory.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Likelihood proposal vs transition proposal on every sequence under a directory.
    Compare {
        dir: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Directory for `compare.csv` and `diffs.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn execute(cmd: Command) -> corrpf::Result<()> {
    match cmd {
        Command::Track {
            input,
            config,
            out,
            seed,
            overlays,
        } => track(&input, &config, &out, seed, overlays),
        Command::Eval {
            seq_dir,
            config,
            results,
            out,
        } => eval(&seq_dir, &config, results.as_deref(), out.as_deref()),
        Command::Synth { spec, out, seed } => {
            let seq = synthesize(&spec, seed)?;
            save_sequence(&out, &seq)?;
            println!("wrote {} frames to {}", seq.len(), out.display());
            Ok(())
        }
        Command::Compare {
            dir,
            config,
            seeds,
            out,
        } => compare(&dir, &config, &seeds, out.as_deref()),
    }
}

fn synthesize(spec_path: &Path, seed: u64) -> corrpf::Result<Sequence> {
    if !spec_path.is_file() {
        return Err(Error::MissingFile(spec_path.to_path_buf()));
    }
    let text = fs::read_to_string(spec_path).map_err(|e| Error::io(spec_path, e))?;
    generate_synthetic(&SynthSpec::parse(&text)?, seed)
}

fn load_input(input: &Path) -> corrpf::Result<Sequence> {
    if input.is_dir() {
        load_sequence(input)
    } else {
        synthesize(input, 0)
    }
}

fn create_dir(dir: &Path) -> corrpf::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn track(
    input: &Path,
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    overlays: bool,
) -> corrpf::Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.tracker.pf.seed = seed;
    }
    let seq = load_input(input)?;
    let truth = seq.ground_truth.as_ref().ok_or(Error::MissingGroundTruth)?;
    let source = cfg.feature_source()?;
    let reports = run_tracker(&seq.frames, truth[0], &cfg.tracker, &source)?;
    create_dir(out)?;
    save_results(&out.join("results.csv"), &reports)?;
    save_weight_summary(&out.join("weights.csv"), &reports)?;
    if overlays {
        let boxes: Vec<BoundingBox> = reports.iter().map(|r| r.estimate).collect();
        save_overlays(&out.join("overlays"), &seq, &boxes)?;
    }
    println!(
        "tracked {} frames of {} into {}",
        reports.len(),
        seq.name,
        out.display()
    );
    Ok(())
}

fn eval(
    seq_dir: &Path,
    config: &Path,
    results: Option<&Path>,
    out: Option<&Path>,
) -> corrpf::Result<()> {
    let cfg = RunConfig::load(config)?;
    let seq = load_input(seq_dir)?;
    let ope = match results {
        Some(path) => {
            let truth = seq.ground_truth.as_ref().ok_or(Error::MissingGroundTruth)?;
            let boxes: Vec<BoundingBox> = load_results(path)?.iter().map(|r| r.bbox).collect();
            ope_from_boxes(&boxes, truth, cfg.skip_first_frame)?
        }
        None => {
            run_ope(
                &cfg.tracker,
                &seq,
                &cfg.feature_source()?,
                cfg.skip_first_frame,
            )?
            .0
        }
    };
    println!("sequence {}", seq.name);
    println!("frames {}", ope.frames);
    println!("precision@20 {:.4}", ope.precision_at_20);
    println!("success AUC {:.4}", ope.auc);
    println!("mean center error {:.3}", ope.mean_center_error);
    if let Some(dir) = out {
        create_dir(dir)?;
        let p = dir.join("curves.csv");
        fs::write(&p, curves_csv(&ope)).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

/// Sequence directories (those holding `img/`) directly under `dir`, by name.
fn sequence_dirs(dir: &Path) -> corrpf::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.join("img").is_dir() {
            dirs.push(p);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::MissingFile(dir.join("*/img")));
    }
    Ok(dirs)
}

fn compare(dir: &Path, config: &Path, seeds: &[u64], out: Option<&Path>) -> corrpf::Result<()> {
    let cfg = RunConfig::load(config)?;
    let sequences = sequence_dirs(dir)?
        .iter()
        .map(|d| load_sequence(d))
        .collect::<corrpf::Result<Vec<_>>>()?;
    let report = compare_proposals(
        &cfg.tracker,
        &sequences,
        seeds,
        &cfg.feature_source()?,
        cfg.skip_first_frame,
    )?;
    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}\n{}", report.table(), report.to_csv());
    if let Some(dir) = out {
        create_dir(dir)?;
        for (name, text) in [
            ("compare.csv", report.to_csv()),
            ("diffs.csv", report.diffs_csv()),
        ] {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}
