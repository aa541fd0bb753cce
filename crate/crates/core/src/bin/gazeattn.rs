use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gazeattn::attention::{AlignMode, Orientation};
use gazeattn::gaze::Weighting;
use gazeattn::report::{self, Config, InputPaths, ReportError, Server, SortKey};
use gazeattn::stats::{LogBase, DEFAULT_EPSILON};
use gazeattn::synth::{SynthConfig, SynthCorpus};
use gazeattn::Family;

#[derive(Parser)]
#[command(
    name = "gazeattn",
    version,
    about = "Human gaze versus model attention over reading stimuli"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-document KL between human and family attention (compare.csv, entropy.csv)
    Compare {
        #[command(flatten)]
        common: Common,
        /// Sort rows by ascending KL of this family (default LSTM)
        #[arg(long, value_name = "NAME")]
        sort_family: Option<Family>,
        /// Sort rows by the sum of KL over families instead
        #[arg(long, value_enum, conflicts_with = "sort_family")]
        sort: Option<SortChoice>,
    },
    /// Spearman correlation of KL with model correctness (correlate.csv)
    Correlate {
        #[command(flatten)]
        common: Common,
        /// Read per-document KL from an existing compare.csv
        #[arg(long, value_name = "FILE")]
        compare: Option<PathBuf>,
    },
    /// Tukey-adjusted contrasts of average KL between families (family_kl.csv, pairwise.csv)
    Pairwise {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        compare: Option<PathBuf>,
        /// Also run a permutation cross-check with this many shuffles
        #[arg(long, default_value_t = 0)]
        permutations: usize,
        #[arg(long, value_name = "HEX", value_parser = parse_hex, default_value = "0xC0FFEE")]
        seed: u64,
    },
    /// Antecedent versus pronoun saliency (coref.csv)
    Coref {
        #[command(flatten)]
        common: Common,
    },
    /// Answer agreement and accuracy per study group (agreement.csv)
    Agreement {
        #[command(flatten)]
        common: Common,
    },
    /// Viewer bundles under viz/
    ExportViz {
        #[command(flatten)]
        common: Common,
        /// Export only this document (repeatable)
        #[arg(long = "doc", value_name = "ID")]
        docs: Vec<String>,
    },
    /// Serve viewer assets and viz/ bundles over HTTP
    Serve {
        /// Directory holding viz/ (the --out of export-viz)
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Built viewer assets served at /
        #[arg(long)]
        assets: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Write a deterministic synthetic corpus
    Synth {
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        docs: usize,
        #[arg(long, default_value_t = 15)]
        participants: usize,
        #[arg(long, default_value_t = 9)]
        models: usize,
        #[arg(long, value_name = "HEX", value_parser = parse_hex, default_value = "0x5EED")]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SortChoice {
    SumKl,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "DIR")]
    stimuli: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    gaze: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    attention: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    outcomes: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    coref: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    answers: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Additive smoothing applied to both distributions before KL
    #[arg(long, default_value_t = DEFAULT_EPSILON, value_parser = parse_epsilon)]
    epsilon: f64,
    #[arg(long, default_value = "duration")]
    weighting: Weighting,
    /// Snap fixations within this many pixels to the nearest word
    #[arg(long, default_value_t = 0.0)]
    snap: f64,
    #[arg(long, default_value = "sum")]
    align: AlignMode,
    /// Read matrix attention from columns instead of rows
    #[arg(long)]
    transpose: bool,
    #[arg(long, default_value = "e")]
    log_base: LogBase,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> Config {
        let inputs = InputPaths {
            stimuli: self.stimuli.clone(),
            gaze: self.gaze.clone(),
            attention: self.attention.clone(),
            outcomes: self.outcomes.clone(),
            coref: self.coref.clone(),
            answers: self.answers.clone(),
        };
        let mut cfg = Config::new(inputs, &self.out);
        cfg.options.epsilon = self.epsilon;
        cfg.options.weighting = self.weighting;
        cfg.options.snap = self.snap;
        cfg.options.align = self.align;
        cfg.options.orientation = if self.transpose {
            Orientation::Columns
        } else {
            Orientation::Rows
        };
        cfg.options.log_base = self.log_base;
        cfg
    }
}

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| format!("invalid hex seed `{s}`: {e}"))
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("epsilon must be a finite non-negative number, got `{s}`")),
    }
}

fn run(cli: Cli) -> Result<(), ReportError> {
    match cli.command {
        Command::Compare {
            common,
            sort_family,
            sort,
        } => {
            let mut cfg = common.config();
            cfg.sort = match (sort, sort_family) {
                (Some(SortChoice::SumKl), _) => Some(SortKey::SumKl),
                (None, Some(f)) => Some(SortKey::Family(f)),
                (None, None) => None,
            };
            report::with_threads(common.threads, || report::cmd_compare(&cfg)).map(drop)
        }
        Command::Correlate { common, compare } => {
            let mut cfg = common.config();
            cfg.compare = compare;
            report::with_threads(common.threads, || report::cmd_correlate(&cfg)).map(drop)
        }
        Command::Pairwise {
            common,
            compare,
            permutations,
            seed,
        } => {
            let mut cfg = common.config();
            cfg.compare = compare;
            cfg.permutations = permutations;
            cfg.seed = seed;
            report::with_threads(common.threads, || report::cmd_pairwise(&cfg)).map(drop)
        }
        Command::Coref { common } => {
            let cfg = common.config();
            report::with_threads(common.threads, || report::cmd_coref(&cfg)).map(drop)
        }
        Command::Agreement { common } => report::cmd_agreement(&common.config()).map(drop),
        Command::ExportViz { common, docs } => {
            let mut cfg = common.config();
            cfg.doc_ids = docs;
            report::with_threads(common.threads, || report::cmd_export_viz(&cfg)).map(drop)
        }
        Command::Serve {
            out,
            assets,
            host,
            port,
        } => {
            let server = Server::bind((host.as_str(), port), out.join("viz"), assets).map_err(|e| ReportError::Io {
                path: out.clone(),
                source: e,
            })?;
            if let Ok(addr) = server.local_addr() {
                eprintln!("serving on http://{addr}/");
            }
            server
                .serve_forever()
                .map_err(|e| ReportError::Io { path: out, source: e })
        }
        Command::Synth {
            out,
            docs,
            participants,
            models,
            seed,
        } => {
            let cfg = SynthConfig {
                n_docs: docs,
                n_participants: participants,
                models_per_family: models,
                seed,
                ..SynthConfig::default()
            };
            SynthCorpus::generate(&cfg)
                .write(&out)
                .map(drop)
                .map_err(|e| ReportError::Io { path: out, source: e })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
