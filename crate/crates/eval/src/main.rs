use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stress_backbone::{pretrain_toy_backbone, LayeredAsr, PretrainConfig, ToyBackbone};
use stress_datagen::{generate_dataset, GenerationConfig};
use stress_eval::{
    evaluate_baseline, evaluate_stress_head, train_baseline, AlignSource, BaselineTrainOptions, BlstmTagger,
    Comparison, EvalError, EvalReport,
};
use stress_head::{layer_sweep, predict, train_head, HeadConfig, StressHead, TrainOptions};
use stress_probe::{probe_report, ProbeTarget};

#[derive(Parser)]
#[command(name = "stress", version, about = "Sentence-stress detection on top of a frozen recognizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    #[value(name = "whistress")]
    StressHead,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum Align {
    Gt,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic stressed-speech corpus.
    Datagen {
        /// JSON generation config; a 1200-sentence toy corpus when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the toy recognizer and freeze it into a checkpoint.
    PretrainBackbone {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a stress head on a frozen backbone.
    TrainHead {
        #[arg(long)]
        backbone: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Input layer index, or `auto` for three quarters of the depth.
        #[arg(long, default_value = "auto")]
        layer: String,
        #[arg(long, default_value_t = 4)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transcribe a WAV file and mark stressed words with asterisks.
    Transcribe {
        #[arg(long)]
        backbone: PathBuf,
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        audio: PathBuf,
        /// Token-score sidecar; defaults to `<audio>.stress.json`.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Train one head per input layer and tabulate test scores.
    LayerSweep {
        #[arg(long)]
        backbone: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated indices, or `all`.
        #[arg(long, default_value = "all")]
        layers: String,
        #[arg(long, default_value_t = 4)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probe each layer for pitch, energy and duration.
    Probe {
        #[arg(long)]
        backbone: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "f0,rms,duration")]
        targets: String,
        #[arg(long, default_value = "all")]
        layers: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one system on a test manifest.
    Evaluate {
        #[arg(long, value_enum)]
        system: System,
        #[arg(long)]
        backbone: Option<PathBuf>,
        #[arg(long)]
        head: Option<PathBuf>,
        /// Baseline checkpoint.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Word boundaries for the baseline.
        #[arg(long, value_enum, default_value = "gt")]
        align: Align,
        #[arg(long)]
        alignments: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the recurrent prosodic-feature baseline.
    TrainBaseline {
        #[arg(long, value_enum, default_value = "gt")]
        align: Align,
        /// CSV of `id,word,start_s,end_s` rows, required with `--align csv`.
        #[arg(long)]
        alignments: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

type Result<T> = std::result::Result<T, EvalError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| EvalError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| EvalError::io(path, e))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn parse_layers(spec: &str) -> Result<Option<Vec<usize>>> {
    if spec.trim() == "all" {
        return Ok(None);
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| EvalError::Config(format!("bad layer {s:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn align_source(align: Align, alignments: Option<PathBuf>) -> Result<AlignSource> {
    match (align, alignments) {
        (Align::Gt, _) => Ok(AlignSource::Gt),
        (Align::Csv, Some(path)) => Ok(AlignSource::Csv { path }),
        (Align::Csv, None) => Err(EvalError::Config("--align csv needs --alignments <file>".into())),
    }
}

fn load_backbone(path: &Path) -> Result<ToyBackbone<f32>> {
    Ok(ToyBackbone::load(path)?)
}

fn head_config(backbone: &ToyBackbone<f32>, layer: Option<usize>) -> Result<HeadConfig> {
    let c = backbone.config();
    Ok(HeadConfig::for_backbone(
        c.d_model,
        c.n_heads,
        c.ffn_dim,
        c.n_encoder_layers,
        c.n_decoder_layers,
        layer,
    )?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Datagen { config, seed, out } => {
            let mut cfg = match config {
                Some(path) => GenerationConfig::load(&path)?,
                None => GenerationConfig::toy(1200, seed, &out),
            };
            cfg.seed = seed;
            cfg.out_dir = out;
            let data = generate_dataset(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&data.report)?);
            println!("train: {}", data.train_manifest.display());
            println!("test: {}", data.test_manifest.display());
        }
        Command::PretrainBackbone { config, data, seed, out } => {
            let cfg = match config {
                Some(path) => PretrainConfig::load(&path)?,
                None => PretrainConfig::default(),
            };
            let (model, report) = pretrain_toy_backbone::<f32>(&data, &cfg, seed)?;
            model.save(&out)?;
            write_json(&sidecar(&out, ".report.json"), &report)?;
            println!(
                "held-out word accuracy {:.4}, digest {}",
                report.final_heldout_word_accuracy, report.digest
            );
        }
        Command::TrainHead {
            backbone,
            data,
            layer,
            epochs,
            seed,
            out,
        } => {
            let backbone = load_backbone(&backbone)?;
            let layer = match layer.as_str() {
                "auto" => None,
                s => Some(s.parse().map_err(|_| EvalError::Config(format!("bad layer {s:?}")))?),
            };
            let cfg = head_config(&backbone, layer)?;
            let opts = TrainOptions {
                epochs,
                seed,
                ..TrainOptions::default()
            };
            let (head, report) = train_head(&backbone, &data, cfg, &opts)?;
            head.save(&out)?;
            write_json(&sidecar(&out, ".report.json"), &report)?;
            println!(
                "trained on {} of {} samples ({} rejected), {} parameters",
                report.used, report.samples, report.rejected, report.parameters
            );
        }
        Command::Transcribe {
            backbone,
            head,
            audio,
            json,
        } => {
            let backbone = load_backbone(&backbone)?;
            let head = StressHead::<f32>::load(&head)?;
            let (wav, sr) = stress_core::audio::read_wav(&audio)?;
            if sr != 16_000 {
                return Err(EvalError::Config(format!("{}: sample rate {sr}, expected 16000", audio.display())));
            }
            let t = predict(&backbone, &head, &wav)?;
            write_json(&json.unwrap_or_else(|| sidecar(&audio, ".stress.json")), &t)?;
            println!("{}", t.marked_text());
        }
        Command::LayerSweep {
            backbone,
            train,
            test,
            layers,
            epochs,
            seed,
            out,
        } => {
            let backbone = load_backbone(&backbone)?;
            let layers = parse_layers(&layers)?.unwrap_or_else(|| {
                (1..=backbone.n_encoder_layers().min(backbone.n_decoder_layers())).collect()
            });
            let opts = TrainOptions {
                epochs,
                seed,
                ..TrainOptions::default()
            };
            let base = head_config(&backbone, None)?;
            let table = layer_sweep(&backbone, &train, &test, &base, &layers, &opts)?;
            std::fs::create_dir_all(&out).map_err(|e| EvalError::io(&out, e))?;
            write_text(&out.join("sweep.md"), &table.to_markdown())?;
            write_text(&out.join("sweep.csv"), &table.to_csv())?;
            write_json(&out.join("sweep.json"), &table)?;
            print!("{}", table.to_markdown());
        }
        Command::Probe {
            backbone,
            data,
            targets,
            layers,
            seed,
            out,
        } => {
            let backbone = load_backbone(&backbone)?;
            let targets: Vec<ProbeTarget> = targets
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()?;
            let layers = parse_layers(&layers)?;
            let report = probe_report(&backbone, &data, layers.as_deref(), &targets, seed)?;
            report.write(&out)?;
            print!("{}", report.to_csv()?);
        }
        Command::Evaluate {
            system,
            backbone,
            head,
            baseline,
            align,
            alignments,
            data,
            out,
        } => {
            let report = match system {
                System::StressHead => {
                    let (Some(b), Some(h)) = (backbone, head) else {
                        return Err(EvalError::Config("whistress needs --backbone and --head".into()));
                    };
                    evaluate_stress_head(&load_backbone(&b)?, &StressHead::load(&h)?, &data)?
                }
                System::Baseline => {
                    let path = baseline.ok_or_else(|| EvalError::Config("baseline needs --baseline <ckpt>".into()))?;
                    let model = BlstmTagger::<f32>::load(&path)?;
                    evaluate_baseline(&model, &data, &align_source(align, alignments)?)?
                }
            };
            report.write(&out, &report.system)?;
            print!("{}", report.to_markdown());
            // Once both systems have been scored into one directory, the
            // side-by-side table is refreshed.
            let other = if report.system == "whistress" { "baseline" } else { "whistress" };
            let other_path = out.join(format!("{other}.json"));
            if other_path.exists() {
                let other = EvalReport::load(&other_path)?;
                let mut reports = vec![report, other];
                reports.sort_by(|a, b| b.system.cmp(&a.system));
                match Comparison::new(reports) {
                    Ok(c) => {
                        write_text(&out.join("comparison.md"), &c.to_markdown())?;
                        write_json(&out.join("comparison.json"), &c)?;
                    }
                    Err(e) => log::warn!("no comparison written: {e}"),
                }
            }
        }
        Command::TrainBaseline {
            align,
            alignments,
            data,
            seed,
            epochs,
            out,
        } => {
            let defaults = BaselineTrainOptions::default();
            let opts = BaselineTrainOptions {
                seed,
                epochs: epochs.unwrap_or(defaults.epochs),
                ..defaults
            };
            let (model, report) = train_baseline(&data, &align_source(align, alignments)?, &opts)?;
            model.save(&out)?;
            write_json(&sidecar(&out, ".report.json"), &report)?;
            println!("trained on {} of {} samples, digest {}", report.used, report.samples, report.digest);
        }
    }
    Ok(())
}
