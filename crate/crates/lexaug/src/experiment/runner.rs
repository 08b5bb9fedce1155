//! Executes every (arm, seed) replicate of an experiment and assembles
//! the result table.
//!
//! Layout under the output directory:
//!
//! ```text
//! out/
//!   report.tsv          # full table, written last
//!   report.md           # human summary of the same table
//!   <arm>/<seed>/
//!     checkpoint        # best model by dev BLEU
//!     dev.hyp           # decoded dev set, one sentence per line
//!     test.hyp          # decoded test set
//!     train_log.tsv     # per-epoch loss and dev-BLEU curve
//!     report.tsv        # this replicate's row (written last: the
//!                       # commit marker for resuming)
//! ```
//!
//! A rerun over an existing output directory reuses every replicate
//! whose artifacts are complete and consistent, so an interrupted
//! experiment picks up where it stopped. A replicate's work is a pure
//! function of (config, data, seed): rerunning from scratch reproduces
//! every artifact byte for byte.
//!
//! One replicate failing (e.g. training diverges) marks its whole arm
//! failed in the table; remaining arms still run.

use std::fs;
use std::path::{Path, PathBuf};

use crate::augment::{augment_bt, augment_copy, augment_wow, mix, MixPlan};
use crate::corpus::{
    build_vocab, load_monolingual, load_parallel, Corpus, LoadOptions, Origin, ParallelPair,
    Sentence,
};
use crate::lexicon::{load_lexicon, Lexicon};
use crate::metrics::{bleu, vocab_coverage, Side, Smoothing};
use crate::nmt::{init_model, load_checkpoint, save_checkpoint, ModelConfig, Translator};

use super::config::{Arm, AugMethod, ExperimentConfig, SeedPlan, seed_plan};
use super::table::{
    mean_of, render_markdown, render_tsv, ArmReport, ArmResult, ReportTable, SeedRow,
};
use super::ExperimentError;

/// The corpora an experiment reads, loaded once and shared across arms.
struct Inputs {
    train: Vec<ParallelPair>,
    dev: Vec<ParallelPair>,
    mono: Corpus,
    lexicon: Lexicon,
    dev_src: Corpus,
    dev_refs: Corpus,
    test_src: Corpus,
    test_refs: Corpus,
}

fn side_corpus(pairs: &[ParallelPair], source: bool) -> Corpus {
    Corpus::new(
        pairs
            .iter()
            .map(|p| if source { p.source.clone() } else { p.target.clone() })
            .collect(),
    )
}

impl Inputs {
    fn load(config: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let opts = LoadOptions {
            lowercase: config.data.lowercase,
        };
        let d = &config.data;
        let train = load_parallel(&d.train_src, &d.train_tgt, opts)?.pairs;
        let dev = load_parallel(&d.dev_src, &d.dev_tgt, opts)?.pairs;
        let test = load_parallel(&d.test_src, &d.test_tgt, opts)?.pairs;
        let mono = load_monolingual(&d.mono_tgt, opts)?;
        let lexicon = load_lexicon(&d.lexicon, "target", "source")?;
        if train.is_empty() {
            return Err(ExperimentError::Config(
                "training data is empty after loading".to_string(),
            ));
        }
        if dev.is_empty() || test.is_empty() {
            return Err(ExperimentError::Config(
                "dev and test sets must be non-empty".to_string(),
            ));
        }
        Ok(Inputs {
            dev_src: side_corpus(&dev, true),
            dev_refs: side_corpus(&dev, false),
            test_src: side_corpus(&test, true),
            test_refs: side_corpus(&test, false),
            train,
            dev,
            mono,
            lexicon,
        })
    }
}

/// Runs the whole experiment, writing artifacts under `out_dir`, and
/// returns the assembled table (also written as `report.tsv`/`report.md`).
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ReportTable, ExperimentError> {
    let inputs = Inputs::load(config)?;
    fs::create_dir_all(out_dir).map_err(|source| ExperimentError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut arms = Vec::with_capacity(config.arms.len());
    for arm in &config.arms {
        let result = match run_arm(config, &inputs, arm, out_dir) {
            Ok(seeds) => ArmResult::Done {
                mean: mean_of(&seeds),
                seeds,
            },
            Err(e) => ArmResult::Failed(e.to_string()),
        };
        arms.push(ArmReport {
            label: arm.label(),
            synthetic_size: arm.synthetic_size,
            result,
        });
    }
    let table = ReportTable { arms };
    write_text(&out_dir.join("report.tsv"), &render_tsv(&table))?;
    write_text(&out_dir.join("report.md"), &render_markdown(&table))?;
    Ok(table)
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_arm(
    config: &ExperimentConfig,
    inputs: &Inputs,
    arm: &Arm,
    out_dir: &Path,
) -> Result<Vec<SeedRow>, ExperimentError> {
    if arm.synthetic_size > inputs.mono.len() {
        return Err(ExperimentError::Config(format!(
            "arm `{}` needs {} monolingual sentences but only {} are available",
            arm.label(),
            arm.synthetic_size,
            inputs.mono.len()
        )));
    }
    let mut rows = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let dir = out_dir.join(arm.label()).join(seed.to_string());
        if let Some(row) = resume_replicate(inputs, arm, seed, &dir) {
            rows.push(row);
            continue;
        }
        rows.push(run_replicate(config, inputs, arm, seed, &dir)?);
    }
    Ok(rows)
}

/// Reuses a completed replicate: its per-seed report must parse, match
/// this (arm, seed), and sit alongside intact artifacts. Anything off
/// means the directory is stale and the replicate reruns.
fn resume_replicate(inputs: &Inputs, arm: &Arm, seed: u64, dir: &Path) -> Option<SeedRow> {
    let report_path = dir.join("report.tsv");
    let text = fs::read_to_string(&report_path).ok()?;
    let table = super::table::parse_tsv(&text).ok()?;
    let [arm_report] = table.arms.as_slice() else {
        return None;
    };
    if arm_report.label != arm.label() || arm_report.synthetic_size != arm.synthetic_size {
        return None;
    }
    let [row] = arm_report.seed_rows() else {
        return None;
    };
    if row.seed != seed || row.parallel_pairs != inputs.train.len() {
        return None;
    }
    for name in ["dev.hyp", "test.hyp"] {
        if !dir.join(name).is_file() {
            return None;
        }
    }
    // A checkpoint that fails validation (truncated write, corruption)
    // disqualifies the replicate from being reused.
    load_checkpoint(&dir.join("checkpoint")).ok()?;
    Some(row.clone())
}

fn run_replicate(
    config: &ExperimentConfig,
    inputs: &Inputs,
    arm: &Arm,
    seed: u64,
    dir: &Path,
) -> Result<SeedRow, ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let plan = seed_plan(seed);
    let decode = config.decode.decode_config();

    // Each method consumes its budget from the front of the monolingual
    // corpus, in arm order, so smaller budgets are prefixes of larger ones.
    let mut batches = Vec::new();
    let mut discarded = 0usize;
    let mut start = 0usize;
    for (&method, budget) in arm.methods.iter().zip(arm.budgets()) {
        let slice = Corpus::new(inputs.mono.sentences()[start..start + budget].to_vec());
        start += budget;
        match method {
            AugMethod::Wow => {
                let outcome = augment_wow(
                    &inputs.lexicon,
                    &slice,
                    config.augment.wow_policy(plan.wow_ties),
                );
                discarded += outcome.discarded;
                batches.push(outcome.pairs);
            }
            AugMethod::Copy => batches.push(augment_copy(&slice)),
            AugMethod::Bt => {
                let reverse = train_reverse(config, inputs, &plan)?;
                let outcome = augment_bt(&reverse, &slice, &decode);
                discarded += outcome.discarded;
                batches.push(outcome.pairs);
            }
        }
    }

    let mixed = mix(MixPlan {
        parallel: inputs.train.clone(),
        synthetic_batches: batches,
        shuffle_seed: plan.mix,
    });
    let synthetic_pairs = mixed.len() - inputs.train.len();

    let (src_vocab, tgt_vocab) = build_vocabs(config, &mixed);
    let model = init_model(&ModelConfig {
        embed_dim: config.model.embed_dim,
        hidden_dim: config.model.hidden_dim,
        src_vocab_size: src_vocab.len(),
        tgt_vocab_size: tgt_vocab.len(),
        init_seed: plan.init,
    });
    let (best, report) = crate::nmt::train(
        model,
        &mixed,
        &inputs.dev,
        &src_vocab,
        &tgt_vocab,
        &config.train.train_config(plan.shuffle),
        &decode,
    )?;

    let translator = Translator {
        model: best,
        src_vocab,
        tgt_vocab,
    };
    let dev_hyp = translator.translate_corpus(&inputs.dev_src, &decode);
    let test_hyp = translator.translate_corpus(&inputs.test_src, &decode);
    dev_hyp.write(&dir.join("dev.hyp"))?;
    test_hyp.write(&dir.join("test.hyp"))?;

    let dev_bleu = bleu(&dev_hyp, &inputs.dev_refs, Smoothing::AddOne)?.bleu;
    let test_bleu = bleu(&test_hyp, &inputs.test_refs, Smoothing::AddOne)?.bleu;
    let src_cov = vocab_coverage(&translator.src_vocab, &inputs.dev_src, Side::Source)?;
    let tgt_cov = vocab_coverage(&translator.tgt_vocab, &inputs.dev_refs, Side::Target)?;

    save_checkpoint(&dir.join("checkpoint"), &translator)?;
    write_text(&dir.join("train_log.tsv"), &train_log(&report))?;

    let row = SeedRow {
        seed,
        parallel_pairs: inputs.train.len(),
        synthetic_pairs,
        discarded,
        dev_bleu,
        test_bleu,
        src_token_coverage: src_cov.token_coverage,
        tgt_token_coverage: tgt_cov.token_coverage,
    };
    // Written last: its presence marks the replicate complete.
    let seed_table = ReportTable {
        arms: vec![ArmReport {
            label: arm.label(),
            synthetic_size: arm.synthetic_size,
            result: ArmResult::Done {
                mean: mean_of(std::slice::from_ref(&row)),
                seeds: vec![row.clone()],
            },
        }],
    };
    write_text(&dir.join("report.tsv"), &render_tsv(&seed_table))?;
    Ok(row)
}

fn build_vocabs(
    config: &ExperimentConfig,
    pairs: &[ParallelPair],
) -> (crate::corpus::Vocab, crate::corpus::Vocab) {
    let sources: Vec<Sentence> = pairs.iter().map(|p| p.source.clone()).collect();
    let targets: Vec<Sentence> = pairs.iter().map(|p| p.target.clone()).collect();
    (
        build_vocab(&sources, config.model.src_vocab_max, config.model.min_freq),
        build_vocab(&targets, config.model.tgt_vocab_max, config.model.min_freq),
    )
}

/// Trains the target-to-source model that back-translation decodes
/// through, on the swapped genuine parallel data only.
fn train_reverse(
    config: &ExperimentConfig,
    inputs: &Inputs,
    plan: &SeedPlan,
) -> Result<Translator, ExperimentError> {
    let swap = |pairs: &[ParallelPair]| -> Vec<ParallelPair> {
        pairs
            .iter()
            .map(|p| ParallelPair {
                source: p.target.clone(),
                target: p.source.clone(),
                origin: Origin::Parallel,
            })
            .collect()
    };
    let rev_train = swap(&inputs.train);
    let rev_dev = swap(&inputs.dev);
    let (src_vocab, tgt_vocab) = build_vocabs(config, &rev_train);
    let model = init_model(&ModelConfig {
        embed_dim: config.model.embed_dim,
        hidden_dim: config.model.hidden_dim,
        src_vocab_size: src_vocab.len(),
        tgt_vocab_size: tgt_vocab.len(),
        init_seed: plan.reverse_init,
    });
    let (best, _) = crate::nmt::train(
        model,
        &rev_train,
        &rev_dev,
        &src_vocab,
        &tgt_vocab,
        &config.train.train_config(plan.reverse_shuffle),
        &config.decode.decode_config(),
    )?;
    Ok(Translator {
        model: best,
        src_vocab,
        tgt_vocab,
    })
}

fn train_log(report: &crate::nmt::TrainReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("epoch\tloss\tdev_bleu\n");
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        let epoch = i + 1;
        let bleu = report
            .evals
            .iter()
            .find(|e| e.epoch == epoch)
            .map(|e| e.bleu.to_string())
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(out, "{epoch}\t{loss}\t{bleu}");
    }
    let _ = writeln!(
        out,
        "# selected epoch {}",
        report.evals[report.selected].epoch
    );
    out
}

/// Absolute path of a replicate's directory: `out/<arm label>/<seed>`.
pub fn replicate_dir(out_dir: &Path, arm: &Arm, seed: u64) -> PathBuf {
    out_dir.join(arm.label()).join(seed.to_string())
}
