use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emokit::io::Split;
use emokit::pipeline::{EncodingKind, Pipeline, PipelineConfig, SynthKind, ZslMethod};
use emokit::Error;

/// Video emotion recognition, zero-shot transfer, attribution and summarization.
#[derive(Debug, Parser)]
#[command(name = "emokit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the emotion dictionary on the auxiliary image features.
    BuildDict(Common),
    /// Encode train and test videos.
    Encode(Common),
    /// Train the supervised recognizer.
    Train(Common),
    /// Predict test labels with the trained recognizer.
    Predict(Common),
    /// Predict and score the test split.
    Eval(Common),
    /// Zero-shot recognition of unseen classes.
    Zsl(Common),
    /// Per-frame and per-clip emotion attribution.
    Attribute(Common),
    /// Emotion-oriented key-frame summaries.
    Summarize(Common),
    /// Generate a synthetic dataset with planted structure.
    Synth(SynthArgs),
    /// Gather the metrics written so far into one report.
    Report(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncodingArg {
    Ite,
    Avgp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    T1s,
    Dap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKindArg {
    Supervised,
    ZeroShot,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; relative paths inside it start at its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads (defaults to EMOKIT_WORKERS, then 1).
    #[arg(long)]
    workers: Option<usize>,
    /// Dictionary size D.
    #[arg(long)]
    clusters: Option<usize>,
    /// Nearest centers K per frame.
    #[arg(long)]
    neighbors: Option<usize>,
    /// SVM or SVR regularization.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    encoding: Option<EncodingArg>,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Representativeness weight in the summary objective.
    #[arg(long)]
    lambda: Option<f64>,
    /// Key frames per summary.
    #[arg(long)]
    budget: Option<usize>,
    /// Neighbours used to smooth each zero-shot prototype.
    #[arg(long)]
    k_t1s: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: Option<SynthKindArg>,
    /// Directory for the generated dataset.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn pipeline(&self) -> emokit::Result<Pipeline> {
        let (mut config, base) = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => (PipelineConfig::default(), PathBuf::from(".")),
        };
        self.apply(&mut config);
        Pipeline::new(config, base)
    }

    fn apply(&self, c: &mut PipelineConfig) {
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.output_dir {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.workers {
            c.workers = Some(v);
        }
        if let Some(v) = self.clusters {
            c.dictionary.clusters = v;
        }
        if let Some(v) = self.neighbors {
            c.encoding.neighbors = Some(v);
        }
        if let Some(v) = self.c {
            c.svm.c = v;
            c.zsl.c = v;
        }
        if let Some(v) = self.method {
            c.zsl.method = match v {
                MethodArg::T1s => ZslMethod::T1s,
                MethodArg::Dap => ZslMethod::Dap,
            };
        }
        if let Some(v) = self.encoding {
            let kind = match v {
                EncodingArg::Ite => EncodingKind::Ite,
                EncodingArg::Avgp => EncodingKind::Avgp,
            };
            c.encoding.kind = kind;
            c.zsl.encoding = kind;
        }
        if let Some(v) = self.lambda {
            c.summary.lambda = v;
        }
        if let Some(v) = self.budget {
            c.summary.budget = Some(v);
        }
        if let Some(v) = self.k_t1s {
            c.zsl.k_t1s = Some(v);
        }
    }

    fn split(&self) -> Split {
        match self.split {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

fn run(cli: Cli) -> emokit::Result<serde_json::Value> {
    let out = match &cli.command {
        Command::BuildDict(a) => a.pipeline()?.cmd_build_dict()?,
        Command::Encode(a) => a.pipeline()?.cmd_encode()?,
        Command::Train(a) => a.pipeline()?.cmd_train()?,
        Command::Predict(a) => a.pipeline()?.cmd_predict()?,
        Command::Eval(a) => a.pipeline()?.cmd_eval()?,
        Command::Zsl(a) => a.pipeline()?.cmd_zsl()?,
        Command::Attribute(a) => a.pipeline()?.cmd_attribute(a.split())?,
        Command::Summarize(a) => a.pipeline()?.cmd_summarize(a.split())?,
        Command::Report(a) => a.pipeline()?.cmd_report()?,
        Command::Synth(s) => {
            let (mut config, base) = match &s.common.config {
                Some(p) => PipelineConfig::load(p)?,
                None => (PipelineConfig::default(), PathBuf::from(".")),
            };
            s.common.apply(&mut config);
            if let Some(k) = s.kind {
                config.synth.kind = match k {
                    SynthKindArg::Supervised => SynthKind::Supervised,
                    SynthKindArg::ZeroShot => SynthKind::ZeroShot,
                };
            }
            if let Some(o) = &s.output {
                config.synth.output = Some(o.clone());
            }
            Pipeline::new(config, base)?.cmd_synth()?
        }
    };
    Ok(serde_json::to_value(out).expect("command output serializes"))
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

fn report_error(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_error("usage", e.to_string().trim(), 2),
    };
    match run(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => report_error(e.kind(), &e.to_string(), exit_code(&e)),
    }
}
