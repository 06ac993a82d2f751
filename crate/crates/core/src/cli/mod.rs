//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and maps the outcome to a process exit code.

mod ablate;

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{export_error_map, export_weight_maps};
use crate::baselines::bi_baseline;
use crate::data::{
    generate_with_srf, load_dataset, load_hsi, save_hsi, split_dataset, write_dataset, Dataset, Pair,
    RgbImage, SpectralResponseMatrix, SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, DEFAULT_SCALE};
use crate::network::Network;
use crate::settings::{parse_entries, parse_entry, Settings};
use crate::training::{
    format_train_log, load_checkpoint, save_checkpoint, train, Checkpoint, EpochLog, TrainState,
    TRAIN_LOG_HEADER,
};

pub use ablate::{run_ablation, AblationRow, ABLATION_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "FMNET_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fmnet", version, about = "RGB to hyperspectral reconstruction with function-mixture networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset of paired HSI/RGB containers and a split manifest.
    SynthData(SynthDataArgs),
    /// Train a network and write a checkpoint plus a CSV log.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the test split.
    Eval(EvalArgs),
    /// Reconstruct one RGB image.
    Infer(InferArgs),
    /// Train and evaluate the ablation grid.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct SynthDataArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 31)]
    pub bands: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Training pairs; defaults to 80% of `count`, leaving at least one test pair.
    #[arg(long)]
    pub train: Option<usize>,
    /// Response matrix CSV (`B` rows of `r,g,b`); defaults to built-in curves.
    #[arg(long)]
    pub srf: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SettingsArgs {
    /// File of `key=value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one setting; may be repeated and wins over the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// CSV log path; defaults to the checkpoint path with a `.csv` extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Also evaluate the interpolation baseline into `<report stem>_bi.csv`.
    #[arg(long)]
    pub with_bi: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// RGB image stored as a 3-band container.
    #[arg(long)]
    pub rgb: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for `weights_<block>_<basis>.pgm` images.
    #[arg(long)]
    pub export_weights: Option<PathBuf>,
    /// Ground-truth cube; writes `<out stem>_error.pgm` and `<out stem>_error.hsc`.
    #[arg(long, value_name = "GT")]
    pub error_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Usage(_) => EXIT_USAGE,
        Error::Input(_) | Error::Format { .. } | Error::Io { .. } => EXIT_DATA,
        Error::Numerical { .. } => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Errors are reported on stderr.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("fmnet: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::SynthData(a) => synth_data(a),
        Command::Train(a) => train_command(a),
        Command::Eval(a) => eval_command(a),
        Command::Infer(a) => infer_command(a),
        Command::Ablate(a) => ablate_command(a),
    }
}

fn default_train_count(count: usize) -> usize {
    (count * 4 / 5).min(count.saturating_sub(1))
}

fn synth_data(a: &SynthDataArgs) -> Result<()> {
    if a.count == 0 {
        return Err(Error::Usage("--count must be at least 1".into()));
    }
    let n_train = a.train.unwrap_or_else(|| default_train_count(a.count));
    if n_train > a.count {
        return Err(Error::Usage(format!("--train {n_train} exceeds --count {}", a.count)));
    }
    let srf = match &a.srf {
        Some(path) => SpectralResponseMatrix::load_csv(path)?,
        None => SpectralResponseMatrix::synthetic(a.bands)?,
    };
    let pairs = generate_with_srf(&SyntheticConfig::new(a.bands, a.size), &srf, a.count, a.seed)?;
    let ids: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
    let split = split_dataset(&ids, n_train, a.seed)?;
    write_dataset(&a.out, &pairs, &split)?;
    println!(
        "wrote {} pairs ({} train, {} test) to {}",
        a.count,
        split.train.len(),
        split.test.len(),
        a.out.display()
    );
    Ok(())
}

/// Collects entries from the config file, then `--set` flags, in precedence order.
pub fn collect_entries(args: &SettingsArgs) -> Result<Vec<(String, String)>> {
    let mut entries = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    for item in &args.set {
        entries.push(parse_entry(item)?);
    }
    Ok(entries)
}

/// Resolves settings and pins the band count to the dataset's.
fn settings_for_data(mut entries: Vec<(String, String)>, dataset: &Dataset, base: &[(String, String)]) -> Result<Settings> {
    let bands = dataset
        .bands()
        .ok_or_else(|| Error::input("dataset has no pairs"))?;
    let explicit = entries.iter().rev().find(|(k, _)| k == "bands").map(|(_, v)| v.clone());
    if let Some(v) = explicit {
        if v.parse::<usize>().ok() != Some(bands) {
            return Err(Error::config(format!("bands={v} but the dataset has {bands} bands")));
        }
    }
    let mut all = base.to_vec();
    all.push(("bands".into(), bands.to_string()));
    all.append(&mut entries);
    Settings::from_entries(&all)
}

fn default_log_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("csv")
}

fn train_command(a: &TrainArgs) -> Result<()> {
    let entries = collect_entries(&a.settings)?;
    let dataset = load_dataset(&a.data)?;
    // a resumed run starts from the checkpoint's own settings
    let resume = a.resume.as_deref().map(load_checkpoint).transpose()?;
    let base = match &resume {
        Some(ckpt) => parse_entries(&ckpt.settings().to_lines().join("\n"))?,
        None => Vec::new(),
    };
    let settings = settings_for_data(entries, &dataset, &base)?;
    settings.network.validate()?;
    settings.train.validate()?;

    let state = match resume {
        Some(ckpt) => {
            ckpt.check_compatible(&settings.network)?;
            ckpt.into_state(&settings.train)?
        }
        None => {
            let net = Network::<f32>::build(settings.network.clone(), settings.train.seed)?;
            TrainState::new(net, &settings.train)
        }
    };
    let log_path = a.log.clone().unwrap_or_else(|| default_log_path(&a.out));
    let mut log_file = open_log(&log_path, a.resume.is_some())?;
    let mut write_err = None;
    let (state, _) = train(state, &dataset.train, &settings.train, |row: &EpochLog| {
        eprintln!(
            "epoch {:>4}  lr {:.3e}  loss {:.6}  {:.1}s",
            row.epoch, row.lr, row.train_loss, row.wall_seconds
        );
        // keep only the data line of the formatted log
        let line = format_train_log(std::slice::from_ref(row));
        let line = line.lines().nth(1).unwrap_or_default();
        if let Err(e) = writeln!(log_file, "{line}") {
            write_err.get_or_insert(Error::io(&log_path, e));
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    save_checkpoint(&Checkpoint::from_state(&state, &settings.train), &a.out)?;
    println!("saved checkpoint after epoch {} to {}", state.epoch, a.out.display());
    Ok(())
}

fn open_log(path: &Path, append: bool) -> Result<std::fs::File> {
    let exists = path.exists();
    let mut file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    if !append || !exists {
        writeln!(file, "{TRAIN_LOG_HEADER}").map_err(|e| Error::io(path, e))?;
    }
    Ok(file)
}

/// Metrics of `predict` on every test pair.
fn evaluate_pairs<F>(pairs: &[Pair], predict: F) -> Result<MetricsReport>
where
    F: Fn(&RgbImage) -> Result<crate::data::SpectralImage>,
{
    let preds = pairs
        .iter()
        .map(|p| predict(&p.rgb))
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::evaluate(
        pairs.iter().zip(&preds).map(|(p, y)| (p.id.as_str(), y, &p.hsi)),
        DEFAULT_SCALE,
    )
}

pub fn bi_report_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    report.with_file_name(format!("{stem}_bi.csv"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn eval_command(a: &EvalArgs) -> Result<()> {
    let net = load_checkpoint(&a.ckpt)?.network()?;
    let dataset = load_dataset(&a.data)?;
    if dataset.test.is_empty() {
        return Err(Error::input("dataset has no test pairs"));
    }
    let report = evaluate_pairs(&dataset.test, |rgb| net.predict(rgb))?;
    write_text(&a.report, &report.to_csv())?;
    println!(
        "model: rmse {:.4}  psnr {:.3}  sam {:.4}  ssim {:.5}",
        report.rmse, report.psnr, report.sam, report.ssim
    );
    if a.with_bi {
        let bands = net.config().bands;
        let bi = evaluate_pairs(&dataset.test, |rgb| bi_baseline(rgb, bands))?;
        write_text(&bi_report_path(&a.report), &bi.to_csv())?;
        println!(
            "bi:    rmse {:.4}  psnr {:.3}  sam {:.4}  ssim {:.5}",
            bi.rmse, bi.psnr, bi.sam, bi.ssim
        );
    }
    Ok(())
}

pub fn error_map_paths(out: &Path) -> (PathBuf, PathBuf) {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let pgm = out.with_file_name(format!("{stem}_error.pgm"));
    let raw = crate::analysis::raw_error_map_path(&pgm);
    (pgm, raw)
}

fn infer_command(a: &InferArgs) -> Result<()> {
    if let Some(gt) = &a.error_map {
        if !gt.is_file() {
            return Err(Error::Usage(format!(
                "--error-map needs an existing ground-truth file, got {}",
                gt.display()
            )));
        }
    }
    let net = load_checkpoint(&a.ckpt)?.network()?;
    let rgb = RgbImage::from_spectral(load_hsi(&a.rgb)?)?;
    let pred = net.predict(&rgb)?;
    save_hsi(&pred, &a.out)?;
    println!("wrote {}", a.out.display());
    if let Some(dir) = &a.export_weights {
        let files = export_weight_maps(&net, &rgb, dir)?;
        println!("wrote {} weight maps to {}", files.len(), dir.display());
    }
    if let Some(gt) = &a.error_map {
        let gt = load_hsi(gt)?;
        let (pgm, _) = error_map_paths(&a.out);
        export_error_map(&pred, &gt, &pgm)?;
        println!("wrote {}", pgm.display());
    }
    Ok(())
}

fn ablate_command(a: &AblateArgs) -> Result<()> {
    if a.seeds.is_empty() {
        return Err(Error::Usage("--seeds needs at least one value".into()));
    }
    let entries = collect_entries(&a.settings)?;
    let dataset = load_dataset(&a.data)?;
    let base = [("preset".to_string(), "desk".to_string())];
    let settings = settings_for_data(entries, &dataset, &base)?;
    let rows = run_ablation(&settings, &dataset, &a.seeds, |row| {
        eprintln!("{:<16} seed {:>3}  rmse {:.4}", row.variant, row.seed, row.metrics.rmse);
    })?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_text(&a.out.join("ablation.csv"), &ablate::rows_csv(&rows))?;
    write_text(&a.out.join("ablation_summary.csv"), &ablate::summary_csv(&rows))?;
    println!("wrote {} rows to {}", rows.len(), a.out.join("ablation.csv").display());
    Ok(())
}
