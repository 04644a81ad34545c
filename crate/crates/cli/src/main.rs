//! Command-line pipeline for spoken-to-written text conversion.
//!
//! Data flows through line-oriented files: plain text (one sentence per
//! line), the tag-column format (`words<TAB>itn<TAB>punct<TAB>cap<TAB>disf`),
//! and JSON for manifests and evaluation reports.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use s2w::bpe::{train_bpe, BpeModel, DEFAULT_VOCAB_SIZE};
use s2w::datapipe::{
    clean_record, corpus_stats, generate_example, split_dataset, AlignedExample,
};
use s2w::eval::{render_report, score, EvalRecord};
use s2w::tagapply::apply_tags;
use s2w::tagger::{
    predict, prepare_token_examples, train_joint, train_single, JointModel, TrainConfig,
    DEFAULT_FEATURE_DIM,
};
use s2w::tags::{parse_tag_record, serialize_tag_record, TagRecord, TagSet, Task};
use s2w::GrammarSet;

const VERSION_LINE: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (grammar format v1, tagger model format v1, bpe format v1)"
);

#[derive(Parser)]
#[command(name = "s2w", version = VERSION_LINE, about = "Spoken-to-written text conversion")]
struct Cli {
    /// Number of worker threads for record-parallel commands.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile grammar rule files into a binary archive.
    CompileGrammars {
        /// Directory containing .rules files.
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean a written corpus, derive gold tags, and split train/validation.
    Prepare {
        /// Input corpus: plain text lines or JSON lines {"id":..., "text":...}.
        #[arg(long)]
        input: PathBuf,
        /// Output prefix; writes <prefix>.train.tags, <prefix>.val.tags,
        /// <prefix>.manifest.json and <prefix>.quarantine.txt.
        #[arg(long)]
        out_prefix: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grammar archive; bundled grammars when omitted.
        #[arg(long)]
        grammars: Option<PathBuf>,
    },
    /// Train the tagger (and its subword model) on a tag-column file.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Where to write the subword model trained alongside.
        #[arg(long)]
        bpe: PathBuf,
        /// Train a single head instead of the joint model.
        #[arg(long)]
        task: Option<String>,
        #[arg(long, default_value_t = DEFAULT_FEATURE_DIM)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f32,
        #[arg(long, default_value_t = 0.0)]
        l2: f32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
        vocab_size: usize,
        /// Per-epoch loss log (JSON lines); stderr summary otherwise.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Tag spoken-form sentences, producing a tag-column file.
    Tag {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        bpe: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply tags from a tag-column file, producing written text.
    Apply {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        grammars: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// End-to-end conversion: tag each line, then apply the tags.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        bpe: Option<PathBuf>,
        /// Bypass the model and read tags from this tag-column file.
        #[arg(long)]
        tags: Option<PathBuf>,
        #[arg(long)]
        grammars: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Side JSON report listing unparsed entity spans per line.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a prediction file against a gold file (both tag-column).
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Exact unrounded report as JSON; the rendered table goes to stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Corpus statistics for a tag-column file, as JSON on stdout.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build_global()
        .ok();
    match cli.command {
        Command::CompileGrammars { rules, out } => cmd_compile_grammars(&rules, &out),
        Command::Prepare {
            input,
            out_prefix,
            seed,
            grammars,
        } => cmd_prepare(&input, &out_prefix, seed, grammars.as_deref()),
        Command::Train {
            input,
            model,
            bpe,
            task,
            dim,
            epochs,
            learning_rate,
            l2,
            seed,
            vocab_size,
            log,
        } => {
            let config = TrainConfig {
                dim,
                learning_rate,
                epochs,
                l2,
                seed,
                heads: [true; 4],
            };
            cmd_train(
                &input,
                &model,
                &bpe,
                task.as_deref(),
                config,
                vocab_size,
                log.as_deref(),
            )
        }
        Command::Tag {
            input,
            model,
            bpe,
            out,
        } => cmd_tag(&input, &model, &bpe, &out),
        Command::Apply { tags, grammars, out } => cmd_apply(&tags, grammars.as_deref(), &out),
        Command::Convert {
            input,
            model,
            bpe,
            tags,
            grammars,
            out,
            report,
        } => cmd_convert(
            &input,
            model.as_deref(),
            bpe.as_deref(),
            tags.as_deref(),
            grammars.as_deref(),
            &out,
            report.as_deref(),
        ),
        Command::Eval { pred, gold, json } => cmd_eval(&pred, &gold, json.as_deref()),
        Command::Stats { input } => cmd_stats(&input),
    }
}

fn load_grammars(path: Option<&Path>) -> Result<GrammarSet> {
    match path {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            GrammarSet::load(BufReader::new(file))
                .with_context(|| format!("loading grammar archive {}", p.display()))
        }
        None => Ok(GrammarSet::builtin()),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .with_context(|| format!("reading {}", path.display()))
}

fn read_tag_records(path: &Path) -> Result<Vec<TagRecord>> {
    let lines = read_lines(path)?;
    lines
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_tag_record(l, i + 1).with_context(|| format!("in {}", path.display()))
        })
        .collect()
}

fn cmd_compile_grammars(rules_dir: &Path, out: &Path) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(rules_dir)
        .with_context(|| format!("reading {}", rules_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "rules"))
        .collect();
    if paths.is_empty() {
        bail!("no .rules files in {}", rules_dir.display());
    }
    paths.sort();
    let mut sources = Vec::new();
    for p in &paths {
        sources.push(
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        );
    }
    let grammars = GrammarSet::compile(sources.iter().map(|s| s.as_str()))?;
    let mut w = BufWriter::new(
        File::create(out).with_context(|| format!("creating {}", out.display()))?,
    );
    grammars.save(&mut w)?;
    w.flush()?;
    eprintln!(
        "compiled {} rule files into {}",
        paths.len(),
        out.display()
    );
    Ok(())
}

fn cmd_prepare(input: &Path, out_prefix: &str, seed: u64, grammars: Option<&Path>) -> Result<()> {
    let grammars = load_grammars(grammars)?;
    let lines = read_lines(input)?;
    if lines.iter().all(|l| l.trim().is_empty()) {
        bail!("empty corpus: {}", input.display());
    }

    // parse (id, text) pairs; JSON lines carry their own ids
    let mut raw = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('{') {
            let v: serde_json::Value =
                serde_json::from_str(line).with_context(|| format!("line {}", i + 1))?;
            let id = v
                .get("id")
                .map(|x| x.to_string().trim_matches('"').to_string())
                .unwrap_or_else(|| format!("line-{}", i + 1));
            let text = v
                .get("text")
                .and_then(|x| x.as_str())
                .with_context(|| format!("line {}: missing \"text\"", i + 1))?
                .to_string();
            raw.push((id, text));
        } else {
            raw.push((format!("line-{}", i + 1), line.to_string()));
        }
    }

    let mut rejected = 0usize;
    let mut quarantined: Vec<String> = Vec::new();
    let results: Vec<Option<Result<AlignedExample, String>>> = raw
        .par_iter()
        .map(|(id, text)| {
            let cleaned = clean_record(text)?;
            Some(generate_example(id, &cleaned, &grammars).map_err(|e| e.to_string()))
        })
        .collect();
    let mut examples = Vec::new();
    for r in results {
        match r {
            None => rejected += 1,
            Some(Err(diag)) => quarantined.push(diag),
            Some(Ok(ex)) => examples.push(ex),
        }
    }
    if examples.is_empty() {
        bail!("no usable records in {}", input.display());
    }

    let quarantine_path = format!("{out_prefix}.quarantine.txt");
    std::fs::write(&quarantine_path, quarantined.join("\n"))?;

    let stats = corpus_stats(&examples);
    let (train, val) = split_dataset(examples, seed);
    write_tag_file(Path::new(&format!("{out_prefix}.train.tags")), &train)?;
    write_tag_file(Path::new(&format!("{out_prefix}.val.tags")), &val)?;

    let manifest = serde_json::json!({
        "seed": seed,
        "train_records": train.len(),
        "validation_records": val.len(),
        "rejected_records": rejected,
        "quarantined_records": quarantined.len(),
        "stats": stats,
    });
    std::fs::write(
        format!("{out_prefix}.manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    eprintln!(
        "prepared {} train / {} validation records ({} rejected, {} quarantined)",
        train.len(),
        val.len(),
        rejected,
        quarantined.len()
    );
    Ok(())
}

fn write_tag_file(path: &Path, examples: &[AlignedExample]) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for ex in examples {
        let record = TagRecord {
            words: ex.spoken_words.clone(),
            tags: ex.tags.clone(),
        };
        writeln!(w, "{}", serialize_tag_record(&record))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_task(name: &str) -> Result<Task> {
    Task::ALL
        .into_iter()
        .find(|t| t.name() == name)
        .with_context(|| format!("unknown task {name:?}; expected itn, punct, cap, or disf"))
}

fn cmd_train(
    input: &Path,
    model_path: &Path,
    bpe_path: &Path,
    task: Option<&str>,
    config: TrainConfig,
    vocab_size: usize,
    log: Option<&Path>,
) -> Result<()> {
    let records = read_tag_records(input)?;
    if records.is_empty() {
        bail!("no records in {}", input.display());
    }
    let sentences: Vec<String> = records.iter().map(|r| r.words.join(" ")).collect();
    let bpe = train_bpe(sentences.iter().map(|s| s.as_str()), vocab_size)?;

    let examples: Vec<AlignedExample> = records
        .into_iter()
        .enumerate()
        .map(|(i, r)| AlignedExample {
            source_id: format!("record-{}", i + 1),
            written_text: String::new(),
            spoken_words: r.words,
            tags: r.tags,
        })
        .collect();
    let token_examples = prepare_token_examples(&examples, &bpe)?;

    let (model, logs) = match task {
        Some(name) => train_single(&token_examples, parse_task(name)?, &config)?,
        None => train_joint(&token_examples, &config)?,
    };

    if let Some(log_path) = log {
        let mut w = BufWriter::new(File::create(log_path)?);
        for entry in &logs {
            writeln!(w, "{}", serde_json::to_string(entry)?)?;
        }
        w.flush()?;
    }
    for entry in &logs {
        eprintln!(
            "epoch {}: ce_joint {:.4} (itn {:.4} punct {:.4} cap {:.4} disf {:.4})",
            entry.epoch,
            entry.loss.ce_joint,
            entry.loss.ce_i,
            entry.loss.ce_p,
            entry.loss.ce_c,
            entry.loss.ce_d
        );
    }

    let mut w = BufWriter::new(File::create(model_path)?);
    model.save(&mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(bpe_path)?);
    bpe.save(&mut w)?;
    w.flush()?;
    Ok(())
}

fn load_model(path: &Path) -> Result<JointModel> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(JointModel::load(BufReader::new(file))?)
}

fn load_bpe(path: &Path) -> Result<BpeModel> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BpeModel::load(BufReader::new(file))?)
}

fn split_words(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

fn cmd_tag(input: &Path, model: &Path, bpe: &Path, out: &Path) -> Result<()> {
    let model = load_model(model)?;
    let bpe = load_bpe(bpe)?;
    let lines = read_lines(input)?;
    let records: Vec<String> = lines
        .par_iter()
        .map(|line| {
            let words = split_words(line);
            if words.is_empty() {
                return String::new();
            }
            let tags = predict(&words, &model, &bpe);
            serialize_tag_record(&TagRecord { words, tags })
        })
        .collect();
    let mut w = BufWriter::new(File::create(out)?);
    for r in records {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_apply(tags: &Path, grammars: Option<&Path>, out: &Path) -> Result<()> {
    let grammars = load_grammars(grammars)?;
    let records = read_tag_records(tags)?;
    let mut w = BufWriter::new(File::create(out)?);
    for (i, rec) in records.iter().enumerate() {
        let formatted = apply_tags(&rec.words, &rec.tags, &grammars)
            .with_context(|| format!("record {}", i + 1))?;
        writeln!(w, "{}", formatted.text)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_convert(
    input: &Path,
    model: Option<&Path>,
    bpe: Option<&Path>,
    tags: Option<&Path>,
    grammars: Option<&Path>,
    out: &Path,
    report: Option<&Path>,
) -> Result<()> {
    let grammars = load_grammars(grammars)?;
    let lines = read_lines(input)?;

    // each line gets a TagSet: from the bypass file when given, else the model
    let tagsets: Vec<(Vec<String>, TagSet)> = match tags {
        Some(tag_path) => {
            let records = read_tag_records(tag_path)?;
            let mut by_line = Vec::new();
            let mut iter = records.into_iter();
            for line in &lines {
                let words = split_words(line);
                if words.is_empty() {
                    by_line.push((words, TagSet::all_o(0)));
                    continue;
                }
                let rec = iter
                    .next()
                    .context("tags file has fewer records than non-empty input lines")?;
                if rec.words != words {
                    bail!(
                        "tags file words {:?} do not match input line {:?}",
                        rec.words,
                        words
                    );
                }
                by_line.push((words, rec.tags));
            }
            by_line
        }
        None => {
            let model_path = model.context("either --model or --tags is required")?;
            let bpe_path = bpe.context("--bpe is required with --model")?;
            let model = load_model(model_path)?;
            let bpe = load_bpe(bpe_path)?;
            lines
                .par_iter()
                .map(|line| {
                    let words = split_words(line);
                    let tags = if words.is_empty() {
                        TagSet::all_o(0)
                    } else {
                        predict(&words, &model, &bpe)
                    };
                    (words, tags)
                })
                .collect()
        }
    };

    let mut w = BufWriter::new(File::create(out)?);
    let mut report_entries = Vec::new();
    for (i, (words, tags)) in tagsets.iter().enumerate() {
        if words.is_empty() {
            writeln!(w)?;
            continue;
        }
        let formatted =
            apply_tags(words, tags, &grammars).with_context(|| format!("line {}", i + 1))?;
        writeln!(w, "{}", formatted.text)?;
        if !formatted.unparsed_spans.is_empty() {
            report_entries.push(serde_json::json!({
                "line": i + 1,
                "unparsed_spans": formatted
                    .unparsed_spans
                    .iter()
                    .map(|s| serde_json::json!({
                        "entity": s.entity_type.name(),
                        "start": s.start,
                        "end": s.end,
                        "words": words[s.start..s.end].to_vec(),
                    }))
                    .collect::<Vec<_>>(),
            }));
        }
    }
    w.flush()?;
    if let Some(report_path) = report {
        std::fs::write(
            report_path,
            serde_json::to_string_pretty(&report_entries)?,
        )?;
    }
    Ok(())
}

fn cmd_eval(pred: &Path, gold: &Path, json: Option<&Path>) -> Result<()> {
    let pred_records = read_tag_records(pred)?;
    let gold_records = read_tag_records(gold)?;
    if pred_records.len() != gold_records.len() {
        bail!(
            "prediction file has {} records but gold has {}",
            pred_records.len(),
            gold_records.len()
        );
    }
    let records: Vec<EvalRecord> = pred_records
        .into_iter()
        .zip(gold_records)
        .enumerate()
        .map(|(i, (p, g))| EvalRecord {
            id: format!("record-{}", i + 1),
            words: g.words,
            pred: p.tags,
            gold: g.tags,
        })
        .collect();
    let report = score(&records)?;
    print!("{}", render_report(&report));
    if let Some(json_path) = json {
        std::fs::write(json_path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_stats(input: &Path) -> Result<()> {
    let records = read_tag_records(input)?;
    let examples: Vec<AlignedExample> = records
        .into_iter()
        .enumerate()
        .map(|(i, r)| AlignedExample {
            source_id: format!("record-{}", i + 1),
            written_text: String::new(),
            spoken_words: r.words,
            tags: r.tags,
        })
        .collect();
    let stats = corpus_stats(&examples);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}
