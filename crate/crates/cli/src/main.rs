//! `ctcbias`: runs every stage of the personalization pipeline from a JSON
//! experiment config. Artifacts go under `--out`; a one-line JSON summary
//! goes to stdout; failures print an error object to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use ctcbias::eval::{evaluate, report_tsv};
use ctcbias::jointseq::{read_training_pairs, write_joint};
use ctcbias::ngram::{histogram_tsv, prior_histogram, prior_table, train_ngram, write_arpa, TrainConfig};
use ctcbias::pipeline::{
    build_desk, build_graph, build_user_biases, ladder_systems, run_system, train_joint_model, Desk,
    ExperimentConfig, SystemSpec, TokenizerKind, Tokenizers,
};
use ctcbias::simulate::Corpus;
use ctcbias::tokenize::{lexicon_is_class_name, WordpieceModel};
use ctcbias::wfst::write_text;

#[derive(Parser)]
#[command(name = "ctcbias", version, about = "Contextual biasing for CTC wordpiece recognizers")]
struct Cli {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the world, corpus and noise seeds (N, N+1, N+2).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Tokenizations per pronunciation from the P2WP model for bias FSTs.
    /// Without it, entities are tokenized by spelling only.
    #[arg(long, global = true)]
    p2wp_nbest: Option<usize>,
    /// Subtract the wordpiece prior in T.
    #[arg(long, global = true)]
    normalize: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sentences (one per line) to wordpieces.
    Tokenize {
        /// Text to tokenize; defaults to the simulated LM text.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Wordpiece inventory, one piece per line.
        #[arg(long)]
        inventory: Option<PathBuf>,
    },
    /// Word n-gram LM in ARPA format.
    TrainNgram {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Defaults to `lm_order` of the config.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Joint-sequence model (P2WP, or G2P with `--g2p`).
    TrainJoint {
        /// `word<TAB>freq<TAB>inputs[<TAB>outputs]` lines.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        g2p: bool,
    },
    /// Wordpiece prior table and cost histogram.
    Prior {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        bin_width: f64,
    },
    /// The decoding graph T∘L∘G_uni in text form.
    BuildGraph {
        /// Include the contact class region.
        #[arg(long)]
        personalized: bool,
    },
    /// Per-user bias FSTs.
    BuildBias,
    /// Simulated world, corpus and emissions.
    Simulate,
    /// Decodes the simulated corpus to hypotheses JSONL.
    Decode {
        /// Decode without class regions and bias FSTs.
        #[arg(long)]
        no_bias: bool,
    },
    /// WER / WER-A / WER-B / CEER report for a hypotheses file.
    Evaluate {
        #[arg(long)]
        hyps: PathBuf,
        /// Reference corpus JSONL; defaults to the simulated corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "system")]
        system: String,
    },
    /// Baseline plus the four personalization systems.
    Ladder,
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Tokenize { .. } => "tokenize",
            Command::TrainNgram { .. } => "train-ngram",
            Command::TrainJoint { .. } => "train-joint",
            Command::Prior { .. } => "prior",
            Command::BuildGraph { .. } => "build-graph",
            Command::BuildBias => "build-bias",
            Command::Simulate => "simulate",
            Command::Decode { .. } => "decode",
            Command::Evaluate { .. } => "evaluate",
            Command::Ladder => "ladder",
        }
    }
}

enum Failure {
    /// Bad flags, paths or config values. Exit 2.
    Validation { field: String, message: String },
    /// A stage ran and failed. Exit 1.
    Stage(String),
}

impl From<ctcbias::Error> for Failure {
    fn from(e: ctcbias::Error) -> Self {
        Failure::Stage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Stage(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn invalid(field: &str, message: impl Into<String>) -> Failure {
    Failure::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn read_input(field: &str, path: &Path) -> Outcome<String> {
    if !path.is_file() {
        return Err(invalid(field, format!("{} does not exist", path.display())));
    }
    Ok(fs::read_to_string(path)?)
}

fn load_config(cli: &Cli) -> Outcome<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = read_input("config", p)?;
            serde_json::from_str(&text).map_err(|e| invalid("config", e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.world.seed = s;
        cfg.corpus.seed = s.wrapping_add(1);
        cfg.noise.seed = s.wrapping_add(2);
    }
    if cli.p2wp_nbest == Some(0) {
        return Err(invalid("p2wp-nbest", "must be at least 1"));
    }
    cfg.validate().map_err(|e| invalid("config", e.to_string()))?;
    Ok(cfg)
}

fn lines_of(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|l| !l.is_empty())
        .collect()
}

struct Run<'a> {
    cli: &'a Cli,
    cfg: ExperimentConfig,
    written: Vec<String>,
}

impl Run<'_> {
    fn write(&mut self, name: &str, data: impl AsRef<[u8]>) -> Outcome<()> {
        let path = self.cli.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, data)?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    fn desk(&self) -> Outcome<Desk> {
        Ok(build_desk(&self.cfg)?)
    }

    fn tokenizer(&self) -> TokenizerKind {
        self.cli.p2wp_nbest.map_or(TokenizerKind::Spelling, TokenizerKind::P2wp)
    }

    fn execute(&mut self) -> Outcome<Value> {
        let cli = self.cli;
        match &cli.command {
            Command::Tokenize { input, inventory } => {
                let (wp, text) = match (inventory, input) {
                    (Some(inv), Some(inp)) => (
                        WordpieceModel::from_inventory_text(&read_input("inventory", inv)?)?,
                        lines_of(&read_input("input", inp)?),
                    ),
                    _ => {
                        let desk = self.desk()?;
                        let text = match input {
                            Some(p) => lines_of(&read_input("input", p)?),
                            None => desk.lm_text.clone(),
                        };
                        let wp = match inventory {
                            Some(p) => WordpieceModel::from_inventory_text(&read_input("inventory", p)?)?,
                            None => desk.world.wp,
                        };
                        (wp, text)
                    }
                };
                let mut out = String::new();
                for sent in &text {
                    let mut pieces = Vec::new();
                    for w in sent {
                        // Class placeholders stand for entities, not pieces.
                        if lexicon_is_class_name(w) {
                            pieces.push(w.clone());
                        } else {
                            pieces.extend(wp.tokenize_word_str(w)?);
                        }
                    }
                    out.push_str(&pieces.join(" "));
                    out.push('\n');
                }
                self.write("tokens.txt", out)?;
                Ok(json!({ "sentences": text.len() }))
            }
            Command::TrainNgram { input, order } => {
                let text = match input {
                    Some(p) => lines_of(&read_input("input", p)?),
                    None => self.desk()?.lm_text,
                };
                let order = order.unwrap_or(self.cfg.lm_order);
                if order < 1 {
                    return Err(invalid("order", "must be at least 1"));
                }
                let model = train_ngram(&text, &TrainConfig::new(order))?;
                self.write("lm.arpa", write_arpa(&model))?;
                Ok(json!({ "order": order, "entries": model.num_entries() }))
            }
            Command::TrainJoint { pairs, g2p } => {
                let desk = self.desk()?;
                let pairs = match pairs {
                    Some(p) => {
                        let wp = if *g2p { None } else { Some(&desk.world.wp) };
                        read_training_pairs(&read_input("pairs", p)?, wp)?
                    }
                    None if *g2p => desk.world.g2p_pairs(),
                    None => desk.world.p2wp_pairs()?,
                };
                let trained = train_joint_model(&pairs, &self.cfg.p2wp)?;
                let name = if *g2p { "g2p.joint" } else { "p2wp.joint" };
                self.write(name, write_joint(&trained.model))?;
                Ok(json!({
                    "pairs": pairs.len(),
                    "skipped": trained.skipped,
                    "entries": trained.model.num_entries(),
                    "unpruned_entries": trained.unpruned_entries,
                }))
            }
            Command::Prior { input, bin_width } => {
                if !(*bin_width > 0.0 && bin_width.is_finite()) {
                    return Err(invalid("bin-width", "must be a positive number"));
                }
                let desk = self.desk()?;
                let prior = match input {
                    Some(p) => prior_table(&lines_of(&read_input("input", p)?), &desk.world.wp)?,
                    None => desk.prior.clone(),
                };
                let hist = prior_histogram(&prior, *bin_width)?;
                self.write("prior.tsv", prior.to_tsv())?;
                self.write("prior_hist.tsv", histogram_tsv(&hist))?;
                Ok(json!({ "pieces": prior.len(), "bins": hist.len() }))
            }
            Command::BuildGraph { personalized } => {
                let desk = self.desk()?;
                let graph = build_graph(&desk, *personalized, cli.normalize)?;
                self.write("graph.fst", write_text(&graph.fst))?;
                Ok(json!({ "states": graph.fst.num_states(), "arcs": graph.fst.num_arcs() }))
            }
            Command::BuildBias => {
                let desk = self.desk()?;
                let tok = Tokenizers::train(&desk, false)?;
                let biases = build_user_biases(&desk, &tok, self.tokenizer())?;
                for (user, b) in &biases {
                    let (fst, words, meta) = b.to_texts();
                    self.write(&format!("bias/{user}.fst"), fst)?;
                    self.write(&format!("bias/{user}.words"), words)?;
                    self.write(&format!("bias/{user}.meta"), meta)?;
                }
                Ok(json!({ "users": biases.len() }))
            }
            Command::Simulate => {
                let desk = self.desk()?;
                self.write("inventory.txt", desk.world.wp.to_inventory_text())?;
                self.write("corpus.jsonl", desk.corpus.to_jsonl()?)?;
                self.write("users.json", serde_json::to_string_pretty(&desk.corpus.users).map_err(|e| Failure::Stage(e.to_string()))?)?;
                let lm: String = desk.lm_text.iter().map(|s| s.join(" ") + "\n").collect();
                self.write("lm_text.txt", lm)?;
                let mut bin = Vec::new();
                for em in &desk.emissions {
                    em.write_binary(&mut bin)?;
                }
                self.write("emissions.bin", bin)?;
                Ok(json!({
                    "utterances": desk.corpus.utterances.len(),
                    "users": desk.corpus.users.len(),
                    "pieces": desk.world.wp.num_pieces(),
                }))
            }
            Command::Decode { no_bias } => {
                let desk = self.desk()?;
                let tok = Tokenizers::train(&desk, false)?;
                let spec = SystemSpec {
                    name: "decode".into(),
                    personalized: !no_bias,
                    tokenizer: self.tokenizer(),
                    normalize: cli.normalize,
                };
                let run = run_system(&desk, &tok, &spec)?;
                let mut out = String::new();
                for u in &desk.corpus.utterances {
                    let h = &run.hyps[&u.id];
                    let line = json!({ "id": u.id, "words": h.words, "pieces": h.pieces, "cost": h.cost });
                    out.push_str(&line.to_string());
                    out.push('\n');
                }
                self.write("hyps.jsonl", out)?;
                Ok(json!({ "utterances": run.hyps.len(), "ceer": run.report.ceer }))
            }
            Command::Evaluate { hyps, corpus, system } => {
                let hyp_text = read_input("hyps", hyps)?;
                let corpus = match corpus {
                    Some(p) => Corpus::from_jsonl(&read_input("corpus", p)?, &self.cfg.corpus.class)?,
                    None => self.desk()?.corpus,
                };
                let mut words = BTreeMap::new();
                for (n, line) in hyp_text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let v: Value = serde_json::from_str(line)
                        .map_err(|e| invalid("hyps", format!("line {}: {e}", n + 1)))?;
                    let id = v["id"].as_str().ok_or_else(|| invalid("hyps", format!("line {}: no id", n + 1)))?;
                    let ws: Vec<String> = v["words"]
                        .as_array()
                        .ok_or_else(|| invalid("hyps", format!("line {}: no words", n + 1)))?
                        .iter()
                        .map(|w| w.as_str().unwrap_or_default().to_string())
                        .collect();
                    words.insert(id.to_string(), ws);
                }
                let report = evaluate(&corpus, &words)?;
                let tsv = report_tsv(&[(system.clone(), report.clone())]);
                self.write("report.tsv", &tsv)?;
                print!("{tsv}");
                Ok(json!({ "ceer": report.ceer, "wer": report.wer_all.wer() }))
            }
            Command::Ladder => {
                let desk = self.desk()?;
                let tok = Tokenizers::train(&desk, false)?;
                let mut rows = Vec::new();
                for spec in ladder_systems() {
                    let run = run_system(&desk, &tok, &spec)?;
                    rows.push((spec.name, run.report));
                }
                let tsv = report_tsv(&rows);
                self.write("ladder.tsv", &tsv)?;
                print!("{tsv}");
                Ok(json!({ "systems": rows.len() }))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stage = cli.command.stage();
    let result = load_config(&cli).and_then(|cfg| {
        let mut run = Run {
            cli: &cli,
            cfg,
            written: Vec::new(),
        };
        let summary = run.execute()?;
        Ok((summary, run.written))
    });
    match result {
        Ok((summary, written)) => {
            let line = json!({ "stage": stage, "outputs": written, "summary": summary });
            // Reports already went to stdout; keep the summary on stderr
            // for them so the TSV stays clean.
            if matches!(cli.command, Command::Evaluate { .. } | Command::Ladder) {
                eprintln!("{line}");
            } else {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Validation { field, message }) => {
            eprintln!("{}", json!({ "error": "validation", "stage": stage, "field": field, "message": message }));
            ExitCode::from(2)
        }
        Err(Failure::Stage(message)) => {
            eprintln!("{}", json!({ "error": "stage", "stage": stage, "message": message }));
            ExitCode::from(1)
        }
    }
}
