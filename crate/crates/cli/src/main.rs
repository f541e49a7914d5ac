use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bridging_core::corpus_eval::{
    ablation_run, candidate_coverage, format_reports, load_corpus, score,
    standard_ablation_subsets, Preset,
};
use bridging_core::embedding_store::{load_table, nearest_neighbors, write_table, EmbeddingTable};
use bridging_core::fusion::{fuse, FusionSpec, DEFAULT_FILLER};
use bridging_core::np_semantics::{extract_noun_pairs, ModifierKinds, NpStructure, SuffixPolicy};
use bridging_core::relsim::{rank_relation, PairLookup, RelationDataset};
use bridging_core::resolver::{
    read_predictions, resolve_corpus, write_predictions, RepresentationMode, ResolutionConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

const PRESET_HELP: &str = "\
Preset defaults (window / first sentence / suffix policy / representation):
  isnotes_head    2 / yes / isnotes / head_only
  isnotes_full    2 / yes / isnotes / head_plus_modifiers
  isnotes_mixed   2 / yes / isnotes / mixed_anaphor_full_candidate_head
  bashi           2 / no  / bashi   / head_plus_modifiers
  arrau_rst       10 / no / arrau   / head_plus_modifiers
All presets use every modifier kind, the of-postmodifier, time and anaphor
exclusion, entity expansion and unsuffixed fallback.";

#[derive(Parser)]
#[command(
    name = "bridging",
    version,
    about = "Bridging anaphora resolution with word embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Concatenate two embedding tables over the union of their vocabularies.
    Fuse {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Value used for the side a token is missing from.
        #[arg(long, default_value_t = DEFAULT_FILLER)]
        filler: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the k nearest neighbours of a word by cosine similarity.
    Neighbors {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Resolve every gold anaphor of a corpus and write predictions as TSV.
    #[command(after_help = PRESET_HELP)]
    Resolve {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score predictions against the gold links of a corpus.
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Rank candidate word pairs by relational similarity to prototypes.
    Relsim {
        #[arg(long)]
        embeddings: PathBuf,
        /// Relation dataset file; repeat for several relations.
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        /// Look up the second word of each pair without the _PP suffix.
        #[arg(long)]
        no_suffix_second: bool,
        /// Do not retry missing _PP forms without the suffix.
        #[arg(long)]
        no_fallback: bool,
        /// Also print the ranked candidates.
        #[arg(long)]
        verbose: bool,
    },
    /// Turn NP structures ("head prep object" or "possessor 's head"), one per
    /// line, into tab-separated noun pairs.
    ExtractPairs {
        /// Input file; stdin when omitted.
        input: Option<PathBuf>,
    },
    /// Accuracy for each modifier subset.
    #[command(after_help = PRESET_HELP)]
    Ablate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Preset plus per-field overrides.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value = "isnotes_full")]
    preset: Preset,
    /// Sentences searched before the anaphor's own sentence.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    include_first_sentence: Option<bool>,
    /// isnotes, bashi or arrau.
    #[arg(long)]
    suffix_policy: Option<SuffixPolicy>,
    /// head_only, head_plus_modifiers or mixed_anaphor_full_candidate_head.
    #[arg(long)]
    representation: Option<RepresentationMode>,
    /// Comma-separated subset of noun, adjective, ed, ing (or all / none).
    #[arg(long)]
    modifiers: Option<ModifierKinds>,
    #[arg(long)]
    include_of_postmodifier: Option<bool>,
    #[arg(long)]
    exclude_time_candidates: Option<bool>,
    #[arg(long)]
    exclude_anaphor_candidates: Option<bool>,
    #[arg(long)]
    entity_expansion: Option<bool>,
    #[arg(long)]
    fallback_unsuffixed: Option<bool>,
}

impl ConfigArgs {
    fn resolve(&self) -> ResolutionConfig {
        let mut c = self.preset.config();
        if let Some(v) = self.window {
            c.window_sentences = v;
        }
        if let Some(v) = self.include_first_sentence {
            c.include_first_sentence = v;
        }
        if let Some(v) = self.suffix_policy {
            c.suffix_policy = v;
        }
        if let Some(v) = self.representation {
            c.representation_mode = v;
        }
        if let Some(v) = self.modifiers {
            c.modifier_kinds = v;
        }
        if let Some(v) = self.include_of_postmodifier {
            c.include_of_postmodifier = v;
        }
        if let Some(v) = self.exclude_time_candidates {
            c.exclude_time_candidates = v;
        }
        if let Some(v) = self.exclude_anaphor_candidates {
            c.exclude_bridging_anaphor_candidates = v;
        }
        if let Some(v) = self.entity_expansion {
            c.entity_expansion = v;
        }
        if let Some(v) = self.fallback_unsuffixed {
            c.fallback_unsuffixed = v;
        }
        c
    }
}

fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let (table, report) =
        load_table(path, None).with_context(|| format!("loading {}", path.display()))?;
    if report.duplicates > 0 {
        eprintln!(
            "{}: ignored {} duplicate rows",
            path.display(),
            report.duplicates
        );
    }
    Ok(table)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fuse {
            left,
            right,
            filler,
            out,
        } => {
            let l = load_embeddings(&left)?;
            let r = load_embeddings(&right)?;
            let fused = fuse(&FusionSpec::new(&l, &r).with_filler(filler))?;
            write_table(&fused, &out)?;
            eprintln!("wrote {} vectors of dimension {}", fused.len(), fused.dim());
        }
        Command::Neighbors {
            embeddings,
            word,
            k,
        } => {
            let table = load_embeddings(&embeddings)?;
            let mut out = output(None)?;
            for n in nearest_neighbors(&table, &word, k)? {
                writeln!(out, "{}\t{:.4}", n.word, n.similarity)?;
            }
            out.flush()?;
        }
        Command::Resolve {
            embeddings,
            corpus,
            config,
            out,
            jobs,
        } => {
            let cfg = config.resolve();
            let table = load_embeddings(&embeddings)?;
            let docs = load_corpus(&corpus)?;
            let cov = candidate_coverage(&docs, &cfg)?;
            eprintln!("config: {cfg}");
            eprintln!(
                "candidate coverage: {}/{} ({:.2}%)",
                cov.covered,
                cov.total,
                cov.fraction() * 100.0
            );
            let preds = resolve_corpus(&docs, &table, &cfg, jobs)?;
            let mut w = output(out.as_deref())?;
            write_predictions(&mut w, &preds)?;
            w.flush()?;
        }
        Command::Score {
            corpus,
            predictions,
            format,
        } => {
            let docs = load_corpus(&corpus)?;
            let file = File::open(&predictions)
                .with_context(|| format!("opening {}", predictions.display()))?;
            let preds = read_predictions(BufReader::new(file))?;
            let report = score(&preds, &docs, &predictions.display().to_string())?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Text => {
                    println!(
                        "accuracy: {:.2}% ({}/{})",
                        report.accuracy_percent(),
                        report.resolved_count,
                        report.total_anaphors
                    );
                    for (rel, acc) in report.per_relation_accuracy.iter().flatten() {
                        println!("  {rel}: {:.2}%", acc * 100.0);
                    }
                }
            }
        }
        Command::Relsim {
            embeddings,
            dataset,
            no_suffix_second,
            no_fallback,
            verbose,
        } => {
            let table = load_embeddings(&embeddings)?;
            let lookup = PairLookup {
                suffix_second: !no_suffix_second,
                fallback_unsuffixed: !no_fallback,
            };
            for path in &dataset {
                let ds = RelationDataset::load(path)
                    .with_context(|| format!("loading {}", path.display()))?;
                let r = rank_relation(&ds, &table, lookup)
                    .with_context(|| format!("ranking {}", ds.relation_name))?;
                println!(
                    "{}\trho={:.4}\tscored={}\tdropped={}",
                    r.relation_name,
                    r.rho,
                    r.ranked.len(),
                    r.dropped.len()
                );
                if verbose {
                    for (pair, s) in &r.ranked {
                        println!("  {}:{}\t{s:.4}", pair.first, pair.second);
                    }
                    for (pair, why) in &r.dropped {
                        println!("  {}:{}\tdropped ({why})", pair.first, pair.second);
                    }
                }
            }
        }
        Command::ExtractPairs { input } => {
            let reader: Box<dyn BufRead> = match &input {
                Some(p) => Box::new(BufReader::new(
                    File::open(p).with_context(|| format!("opening {}", p.display()))?,
                )),
                None => Box::new(io::stdin().lock()),
            };
            let mut out = output(None)?;
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let np: NpStructure = match line.parse() {
                    Ok(np) => np,
                    Err(e) => bail!("line {}: {e}", i + 1),
                };
                if let Some(pair) = extract_noun_pairs(&np) {
                    writeln!(out, "{pair}")?;
                }
            }
            out.flush()?;
        }
        Command::Ablate {
            embeddings,
            corpus,
            config,
            jobs,
            format,
        } => {
            let base = config.resolve();
            let table = load_embeddings(&embeddings)?;
            let docs = load_corpus(&corpus)?;
            let subsets = standard_ablation_subsets();
            let kinds: Vec<ModifierKinds> = subsets.iter().map(|(_, k)| *k).collect();
            let reports = ablation_run(&docs, &table, &base, &kinds, jobs)?;
            let rows: Vec<(String, _)> = subsets
                .iter()
                .map(|(l, _)| l.to_string())
                .zip(reports)
                .collect();
            match format {
                Format::Text => print!("{}", format_reports(&rows)),
                Format::Json => {
                    let map: serde_json::Map<String, serde_json::Value> = rows
                        .into_iter()
                        .map(|(l, r)| Ok((l, serde_json::to_value(r)?)))
                        .collect::<Result<_>>()?;
                    println!("{}", serde_json::to_string_pretty(&map)?);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
