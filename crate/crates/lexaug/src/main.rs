//! Command-line front end: data augmentation, training, decoding,
//! evaluation, experiment orchestration, and toy-task generation.
//!
//! Output goes to stdout as tab-separated `key<TAB>value` lines (or TSV
//! tables), so results are easy to grep and diff; all randomness is
//! seeded through flags, so every command is reproducible.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lexaug::augment::{augment_bt, augment_copy, augment_wow, OovMode, TieMode, WowPolicy};
use lexaug::corpus::{
    build_vocab, load_monolingual, load_parallel, Corpus, LoadOptions, ParallelPair, Sentence,
};
use lexaug::experiment::{
    generate_toy_task, render_markdown, run_experiment, write_toy_task, ExperimentConfig,
    ToyTaskSpec,
};
use lexaug::lexicon::load_lexicon;
use lexaug::metrics::{bleu, vocab_coverage, Side, Smoothing};
use lexaug::nmt::{
    init_model, load_checkpoint, save_checkpoint, train, DecodeConfig, ModelConfig, TrainConfig,
    Translator,
};

#[derive(Parser)]
#[command(
    name = "lexaug",
    version,
    about = "Dictionary-based data augmentation and a small neural-translation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the shape of a bilingual lexicon file
    LexiconStats(LexiconStatsArgs),
    /// Build synthetic parallel data from monolingual target text
    Augment(AugmentArgs),
    /// Train a translation model and save the best checkpoint
    Train(TrainArgs),
    /// Decode a text file through a trained checkpoint
    Translate(TranslateArgs),
    /// Score hypotheses against references with corpus BLEU-4
    Bleu(BleuArgs),
    /// Measure how much of a corpus a vocabulary covers
    Coverage(CoverageArgs),
    /// Run a full multi-arm, multi-seed experiment from a config file
    Experiment(ExperimentArgs),
    /// Generate the self-checking synthetic integer-language dataset
    Toygen(ToygenArgs),
}

#[derive(Args)]
struct LexiconStatsArgs {
    /// Lexicon file: one `headword translation` pair per line
    #[arg(long)]
    lexicon: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Wow,
    Copy,
    Bt,
}

#[derive(Clone, Copy, ValueEnum)]
enum OovModeArg {
    /// Keep uncovered tokens verbatim
    CopyThrough,
    /// Delete uncovered tokens
    Drop,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieModeArg {
    /// Always take the first listed translation
    First,
    /// Sample uniformly among alternatives, seeded per sentence
    SeededRandom,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothingArg {
    None,
    AddOne,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Source,
    Target,
}

#[derive(Args)]
struct DecodeFlags {
    /// Beam width (1 = greedy)
    #[arg(long, default_value_t = 5)]
    beam_width: usize,
    /// Hard cap on emitted tokens per sentence [default: 2*source_len+5]
    #[arg(long)]
    max_len: Option<usize>,
    /// Rank finished hypotheses by total log-probability instead of
    /// length-normalized log-probability
    #[arg(long)]
    no_length_normalize: bool,
}

impl DecodeFlags {
    fn config(&self) -> DecodeConfig {
        DecodeConfig {
            beam_width: self.beam_width,
            max_len: self.max_len,
            length_normalize: !self.no_length_normalize,
        }
    }
}

#[derive(Args)]
struct AugmentArgs {
    /// Augmentation method
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Monolingual target-language text, one sentence per line
    #[arg(long)]
    mono: PathBuf,
    /// Output file for the synthetic source side
    #[arg(long)]
    out_src: PathBuf,
    /// Output file for the target side (kept sentences, aligned)
    #[arg(long)]
    out_tgt: PathBuf,
    /// Bilingual lexicon (required for --method wow)
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Reverse-direction model checkpoint (required for --method bt)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// What to do with tokens the lexicon does not cover
    #[arg(long, value_enum, default_value_t = OovModeArg::CopyThrough)]
    oov_mode: OovModeArg,
    /// How to choose among multiple translations of a headword
    #[arg(long, value_enum, default_value_t = TieModeArg::First)]
    tie_mode: TieModeArg,
    /// Seed for --tie-mode seeded-random
    #[arg(long, default_value_t = 0)]
    tie_seed: u64,
    /// Lowercase input text
    #[arg(long)]
    lowercase: bool,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Args)]
struct ModelFlags {
    /// Embedding dimension
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,
    /// Recurrent state dimension
    #[arg(long, default_value_t = 64)]
    hidden_dim: usize,
    /// Cap the source vocabulary at this many entries (reserved included)
    #[arg(long)]
    src_vocab_max: Option<usize>,
    /// Cap the target vocabulary at this many entries (reserved included)
    #[arg(long)]
    tgt_vocab_max: Option<usize>,
    /// Keep only tokens seen at least this often
    #[arg(long, default_value_t = 1)]
    min_freq: usize,
    /// Seed for parameter initialization
    #[arg(long, default_value_t = 0)]
    init_seed: u64,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Initial learning rate (cosine-annealed to 0 over the run)
    #[arg(long, default_value_t = 0.001)]
    lr_init: f64,
    #[arg(long, default_value_t = 0.9)]
    adam_beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    adam_beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    adam_eps: f64,
    /// Clip gradients to this global L2 norm
    #[arg(long, default_value_t = 5.0)]
    grad_clip_norm: f64,
    /// Evaluate on dev every this many epochs (the last epoch always is)
    #[arg(long, default_value_t = 1)]
    eval_every: usize,
    /// Seed for the per-epoch shuffle
    #[arg(long, default_value_t = 0)]
    shuffle_seed: u64,
}

impl TrainFlags {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            lr_init: self.lr_init,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            grad_clip_norm: self.grad_clip_norm,
            eval_every: self.eval_every,
            shuffle_seed: self.shuffle_seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train_src: PathBuf,
    #[arg(long)]
    train_tgt: PathBuf,
    #[arg(long)]
    dev_src: PathBuf,
    #[arg(long)]
    dev_tgt: PathBuf,
    /// Where to save the best checkpoint (by dev BLEU)
    #[arg(long)]
    checkpoint: PathBuf,
    /// Lowercase input text
    #[arg(long)]
    lowercase: bool,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Input text, one sentence per line (blank lines are dropped)
    #[arg(long)]
    input: PathBuf,
    /// Output file, one translation per kept input line
    #[arg(long)]
    output: PathBuf,
    /// Lowercase input text
    #[arg(long)]
    lowercase: bool,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Args)]
struct BleuArgs {
    /// Hypothesis file, line-aligned with --reference
    #[arg(long)]
    hyp: PathBuf,
    /// Reference file
    #[arg(long, name = "reference")]
    reference: PathBuf,
    #[arg(long, value_enum, default_value_t = SmoothingArg::None)]
    smoothing: SmoothingArg,
    /// Lowercase both sides
    #[arg(long)]
    lowercase: bool,
}

#[derive(Args)]
struct CoverageArgs {
    /// Corpus whose tokens are tested against the vocabulary
    #[arg(long)]
    corpus: PathBuf,
    /// Which side the corpus represents (recorded in the report)
    #[arg(long, value_enum)]
    side: SideArg,
    /// Build the vocabulary from this text file...
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    vocab_from: Option<PathBuf>,
    /// ...or take it from a trained checkpoint (side picks which one)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Vocabulary cap when building from text
    #[arg(long)]
    vocab_max: Option<usize>,
    /// Minimum frequency when building from text
    #[arg(long, default_value_t = 1)]
    min_freq: usize,
    /// Lowercase input text
    #[arg(long)]
    lowercase: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment description (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; completed replicates found here are reused
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ToygenArgs {
    /// Output directory for train/dev/test/mono files and the lexicon
    #[arg(long)]
    out: PathBuf,
    /// Distinct words per language
    #[arg(long, default_value_t = 200)]
    vocab_size: usize,
    #[arg(long, default_value_t = 1000)]
    train_sentences: usize,
    #[arg(long, default_value_t = 200)]
    dev_sentences: usize,
    #[arg(long, default_value_t = 200)]
    test_sentences: usize,
    #[arg(long, default_value_t = 4000)]
    mono_sentences: usize,
    #[arg(long, default_value_t = 3)]
    min_len: usize,
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    /// Word-order divergence: blocks of this size + 1 are reversed
    #[arg(long, default_value_t = 1)]
    reorder_window: usize,
    /// Zipf exponent for word frequencies (larger = more skewed)
    #[arg(long, default_value_t = 1.3)]
    zipf_exponent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::LexiconStats(args) => cmd_lexicon_stats(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Train(args) => cmd_train(args),
        Command::Translate(args) => cmd_translate(args),
        Command::Bleu(args) => cmd_bleu(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Toygen(args) => cmd_toygen(args),
    }
}

fn cmd_lexicon_stats(args: LexiconStatsArgs) -> Result<()> {
    let lexicon = load_lexicon(&args.lexicon, "from", "to")?;
    let stats = lexicon.stats();
    println!("headwords\t{}", stats.headwords);
    println!("mean_translations\t{}", stats.mean_translations);
    println!("max_translations\t{}", stats.max_translations);
    println!("malformed_lines\t{}", lexicon.malformed_lines());
    Ok(())
}

fn cmd_augment(args: AugmentArgs) -> Result<()> {
    let opts = LoadOptions {
        lowercase: args.lowercase,
    };
    let mono = load_monolingual(&args.mono, opts)?;
    let (pairs, discarded) = match args.method {
        MethodArg::Wow => {
            let Some(lex_path) = &args.lexicon else {
                bail!("--method wow requires --lexicon");
            };
            let lexicon = load_lexicon(lex_path, "target", "source")?;
            let policy = WowPolicy {
                oov_mode: match args.oov_mode {
                    OovModeArg::CopyThrough => OovMode::CopyThrough,
                    OovModeArg::Drop => OovMode::Drop,
                },
                tie_mode: match args.tie_mode {
                    TieModeArg::First => TieMode::First,
                    TieModeArg::SeededRandom => TieMode::SeededRandom {
                        seed: args.tie_seed,
                    },
                },
            };
            let outcome = augment_wow(&lexicon, &mono, policy);
            (outcome.pairs, outcome.discarded)
        }
        MethodArg::Copy => (augment_copy(&mono), 0),
        MethodArg::Bt => {
            let Some(ckpt) = &args.checkpoint else {
                bail!("--method bt requires --checkpoint (a reverse-direction model)");
            };
            let reverse = load_checkpoint(ckpt)?;
            let outcome = augment_bt(&reverse, &mono, &args.decode.config());
            (outcome.pairs, outcome.discarded)
        }
    };
    write_pair_files(&pairs, &args.out_src, &args.out_tgt)?;
    println!("pairs\t{}", pairs.len());
    println!("discarded\t{discarded}");
    Ok(())
}

fn write_pair_files(pairs: &[ParallelPair], out_src: &Path, out_tgt: &Path) -> Result<()> {
    let sources = Corpus::new(pairs.iter().map(|p| p.source.clone()).collect());
    let targets = Corpus::new(pairs.iter().map(|p| p.target.clone()).collect());
    sources.write(out_src)?;
    targets.write(out_tgt)?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let opts = LoadOptions {
        lowercase: args.lowercase,
    };
    let train_data = load_parallel(&args.train_src, &args.train_tgt, opts)?;
    let dev_data = load_parallel(&args.dev_src, &args.dev_tgt, opts)?;
    if train_data.dropped > 0 {
        eprintln!("note: dropped {} blank-sided training pairs", train_data.dropped);
    }

    let sources: Vec<Sentence> = train_data.pairs.iter().map(|p| p.source.clone()).collect();
    let targets: Vec<Sentence> = train_data.pairs.iter().map(|p| p.target.clone()).collect();
    let src_vocab = build_vocab(&sources, args.model.src_vocab_max, args.model.min_freq);
    let tgt_vocab = build_vocab(&targets, args.model.tgt_vocab_max, args.model.min_freq);
    println!("train_pairs\t{}", train_data.pairs.len());
    println!("src_vocab\t{}", src_vocab.len());
    println!("tgt_vocab\t{}", tgt_vocab.len());

    let model = init_model(&ModelConfig {
        embed_dim: args.model.embed_dim,
        hidden_dim: args.model.hidden_dim,
        src_vocab_size: src_vocab.len(),
        tgt_vocab_size: tgt_vocab.len(),
        init_seed: args.model.init_seed,
    });
    let (best, report) = train(
        model,
        &train_data.pairs,
        &dev_data.pairs,
        &src_vocab,
        &tgt_vocab,
        &args.train.config(),
        &args.decode.config(),
    )?;

    for (i, loss) in report.epoch_losses.iter().enumerate() {
        match report.evals.iter().find(|e| e.epoch == i + 1) {
            Some(eval) => println!("epoch\t{}\tloss\t{loss}\tdev_bleu\t{}", i + 1, eval.bleu),
            None => println!("epoch\t{}\tloss\t{loss}", i + 1),
        }
    }
    let selected = report.evals[report.selected];
    println!("selected_epoch\t{}", selected.epoch);
    println!("selected_dev_bleu\t{}", selected.bleu);

    let translator = Translator {
        model: best,
        src_vocab,
        tgt_vocab,
    };
    save_checkpoint(&args.checkpoint, &translator)?;
    println!("checkpoint\t{}", args.checkpoint.display());
    Ok(())
}

fn cmd_translate(args: TranslateArgs) -> Result<()> {
    let translator = load_checkpoint(&args.checkpoint)?;
    let opts = LoadOptions {
        lowercase: args.lowercase,
    };
    let input = load_monolingual(&args.input, opts)?;
    let output = translator.translate_corpus(&input, &args.decode.config());
    output.write(&args.output)?;
    println!("translated\t{}", output.len());
    println!("output\t{}", args.output.display());
    Ok(())
}

fn cmd_bleu(args: BleuArgs) -> Result<()> {
    let opts = LoadOptions {
        lowercase: args.lowercase,
    };
    let hyp = load_monolingual(&args.hyp, opts)?;
    let reference = load_monolingual(&args.reference, opts)?;
    let smoothing = match args.smoothing {
        SmoothingArg::None => Smoothing::None,
        SmoothingArg::AddOne => Smoothing::AddOne,
    };
    let report = bleu(&hyp, &reference, smoothing)
        .context("hypothesis and reference files must have the same number of sentences")?;
    println!("bleu\t{}", report.bleu);
    for (i, p) in report.precisions.iter().enumerate() {
        println!("precision{}\t{p}", i + 1);
    }
    println!("brevity_penalty\t{}", report.brevity_penalty);
    println!("hyp_length\t{}", report.hyp_length);
    println!("ref_length\t{}", report.ref_length);
    println!("smoothing\t{}", report.smoothing.as_str());
    Ok(())
}

fn cmd_coverage(args: CoverageArgs) -> Result<()> {
    let opts = LoadOptions {
        lowercase: args.lowercase,
    };
    let side = match args.side {
        SideArg::Source => Side::Source,
        SideArg::Target => Side::Target,
    };
    let vocab = match (&args.vocab_from, &args.checkpoint) {
        (Some(text), None) => {
            let corpus = load_monolingual(text, opts)?;
            build_vocab(corpus.sentences(), args.vocab_max, args.min_freq)
        }
        (None, Some(ckpt)) => {
            let translator = load_checkpoint(ckpt)?;
            match side {
                Side::Source => translator.src_vocab,
                Side::Target => translator.tgt_vocab,
            }
        }
        // clap enforces exactly one of the two.
        _ => unreachable!("exactly one vocabulary source"),
    };
    let corpus = load_monolingual(&args.corpus, opts)?;
    let report = vocab_coverage(&vocab, &corpus, side)?;
    println!("vocab_size\t{}", vocab.len());
    println!("token_coverage\t{}", report.token_coverage);
    println!("type_coverage\t{}", report.type_coverage);
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let table = run_experiment(&config, &args.out)?;
    print!("{}", render_markdown(&table));
    println!();
    println!("report\t{}", args.out.join("report.tsv").display());
    Ok(())
}

fn cmd_toygen(args: ToygenArgs) -> Result<()> {
    if args.max_len < args.min_len {
        bail!("--max-len must be >= --min-len");
    }
    if args.vocab_size == 0 || args.min_len == 0 {
        bail!("--vocab-size and --min-len must be >= 1");
    }
    if args.zipf_exponent.is_nan() || args.zipf_exponent <= 0.0 {
        bail!("--zipf-exponent must be positive");
    }
    let spec = ToyTaskSpec {
        vocab_size: args.vocab_size,
        train_sentences: args.train_sentences,
        dev_sentences: args.dev_sentences,
        test_sentences: args.test_sentences,
        mono_sentences: args.mono_sentences,
        min_len: args.min_len,
        max_len: args.max_len,
        reorder_window: args.reorder_window,
        zipf_exponent: args.zipf_exponent,
        seed: args.seed,
    };
    let task = generate_toy_task(&spec);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_toy_task(&task, &args.out)?;
    println!("train\t{}", task.train.len());
    println!("dev\t{}", task.dev.len());
    println!("test\t{}", task.test.len());
    println!("mono\t{}", task.mono.len());
    println!("lexicon_headwords\t{}", task.lexicon.headword_count());
    println!("out\t{}", args.out.display());
    Ok(())
}
