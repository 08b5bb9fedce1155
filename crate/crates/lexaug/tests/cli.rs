//! End-to-end checks of the `lexaug` binary: every subcommand runs
//! against a generated toy dataset, outputs parse, and failure modes
//! exit nonzero with a useful message.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn lexaug(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexaug"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = lexaug(dir, args);
    assert!(
        out.status.success(),
        "lexaug {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

/// Value of a `key<TAB>value` line in a command's stdout.
fn kv<'a>(stdout: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key}\t");
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` line in:\n{stdout}"))
}

fn toygen(dir: &Path) {
    let stdout = run_ok(
        dir,
        &[
            "toygen",
            "--out",
            "toy",
            "--vocab-size",
            "30",
            "--train-sentences",
            "80",
            "--dev-sentences",
            "15",
            "--test-sentences",
            "15",
            "--mono-sentences",
            "60",
            "--min-len",
            "2",
            "--max-len",
            "6",
            "--reorder-window",
            "0",
            "--seed",
            "5",
        ],
    );
    assert_eq!(kv(&stdout, "train"), "80");
    assert_eq!(kv(&stdout, "lexicon_headwords"), "30");
}

#[test]
fn pipeline_from_generation_to_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    toygen(dir);

    let stats = run_ok(dir, &["lexicon-stats", "--lexicon", "toy/lexicon.txt"]);
    assert_eq!(kv(&stats, "headwords"), "30");
    assert_eq!(kv(&stats, "malformed_lines"), "0");

    let wow = run_ok(
        dir,
        &[
            "augment",
            "--method",
            "wow",
            "--mono",
            "toy/mono.tgt",
            "--lexicon",
            "toy/lexicon.txt",
            "--out-src",
            "wow.src",
            "--out-tgt",
            "wow.tgt",
        ],
    );
    assert_eq!(kv(&wow, "pairs"), "60");
    // The exact toy lexicon covers everything: nothing discarded, and the
    // target side is the monolingual corpus verbatim.
    assert_eq!(kv(&wow, "discarded"), "0");
    assert_eq!(
        fs::read_to_string(dir.join("wow.tgt")).unwrap(),
        fs::read_to_string(dir.join("toy/mono.tgt")).unwrap()
    );

    let copy = run_ok(
        dir,
        &[
            "augment",
            "--method",
            "copy",
            "--mono",
            "toy/mono.tgt",
            "--out-src",
            "copy.src",
            "--out-tgt",
            "copy.tgt",
        ],
    );
    assert_eq!(kv(&copy, "pairs"), "60");
    assert_eq!(
        fs::read(dir.join("copy.src")).unwrap(),
        fs::read(dir.join("copy.tgt")).unwrap()
    );

    let train = run_ok(
        dir,
        &[
            "train",
            "--train-src",
            "toy/train.src",
            "--train-tgt",
            "toy/train.tgt",
            "--dev-src",
            "toy/dev.src",
            "--dev-tgt",
            "toy/dev.tgt",
            "--checkpoint",
            "model.ckpt",
            "--embed-dim",
            "12",
            "--hidden-dim",
            "12",
            "--epochs",
            "6",
            "--lr-init",
            "0.01",
            "--batch-size",
            "16",
            "--eval-every",
            "3",
            "--beam-width",
            "2",
        ],
    );
    assert_eq!(kv(&train, "train_pairs"), "80");
    let selected: usize = kv(&train, "selected_epoch").parse().unwrap();
    assert!((1..=6).contains(&selected));
    assert!(dir.join("model.ckpt").is_file());

    let translate = run_ok(
        dir,
        &[
            "translate",
            "--checkpoint",
            "model.ckpt",
            "--input",
            "toy/test.src",
            "--output",
            "test.hyp",
            "--beam-width",
            "2",
        ],
    );
    assert_eq!(kv(&translate, "translated"), "15");

    let bleu = run_ok(
        dir,
        &[
            "bleu",
            "--hyp",
            "test.hyp",
            "--reference",
            "toy/test.tgt",
            "--smoothing",
            "add-one",
        ],
    );
    let score: f64 = kv(&bleu, "bleu").parse().unwrap();
    assert!((0.0..=1.0).contains(&score));
    assert_eq!(kv(&bleu, "smoothing"), "add_one");

    // Back-translation through a checkpoint (direction is the caller's
    // responsibility; mechanically any checkpoint decodes).
    let bt = run_ok(
        dir,
        &[
            "augment",
            "--method",
            "bt",
            "--mono",
            "toy/mono.tgt",
            "--checkpoint",
            "model.ckpt",
            "--out-src",
            "bt.src",
            "--out-tgt",
            "bt.tgt",
            "--beam-width",
            "2",
            "--max-len",
            "8",
        ],
    );
    let kept: usize = kv(&bt, "pairs").parse().unwrap();
    let discarded: usize = kv(&bt, "discarded").parse().unwrap();
    assert_eq!(kept + discarded, 60);

    let cov_text = run_ok(
        dir,
        &[
            "coverage",
            "--corpus",
            "toy/dev.src",
            "--side",
            "source",
            "--vocab-from",
            "toy/train.src",
        ],
    );
    let token_cov: f64 = kv(&cov_text, "token_coverage").parse().unwrap();
    assert!(token_cov > 0.5 && token_cov <= 1.0);

    let cov_ckpt = run_ok(
        dir,
        &[
            "coverage",
            "--corpus",
            "toy/dev.src",
            "--side",
            "source",
            "--checkpoint",
            "model.ckpt",
        ],
    );
    // The checkpoint's source vocabulary was built from the same training
    // text, so both routes agree.
    assert_eq!(kv(&cov_ckpt, "token_coverage"), kv(&cov_text, "token_coverage"));
}

#[test]
fn bleu_matches_worked_example() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("hyp.txt"), "a b c d e\n").unwrap();
    fs::write(tmp.path().join("ref.txt"), "a b c d f\n").unwrap();
    // Unsmoothed: (4/5 * 3/4 * 2/3 * 1/2)^(1/4), brevity penalty 1.
    let out = run_ok(
        tmp.path(),
        &["bleu", "--hyp", "hyp.txt", "--reference", "ref.txt"],
    );
    let score: f64 = kv(&out, "bleu").parse().unwrap();
    assert!((score - 0.6687).abs() < 1e-4, "bleu {score}");
    assert_eq!(kv(&out, "hyp_length"), "5");
    assert_eq!(kv(&out, "brevity_penalty"), "1");
    assert_eq!(kv(&out, "smoothing"), "none");

    // Add-one smoothing lifts the n >= 2 precisions to 4/5, 3/4, 2/3.
    let smoothed = run_ok(
        tmp.path(),
        &[
            "bleu",
            "--hyp",
            "hyp.txt",
            "--reference",
            "ref.txt",
            "--smoothing",
            "add-one",
        ],
    );
    let smoothed_score: f64 = kv(&smoothed, "bleu").parse().unwrap();
    let expected = (0.8f64 * 0.8 * 0.75 * (2.0 / 3.0)).powf(0.25);
    assert!((smoothed_score - expected).abs() < 1e-9, "bleu {smoothed_score}");
}

#[test]
fn experiment_runs_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    toygen(dir);
    fs::write(
        dir.join("exp.toml"),
        r#"
arms = ["none", "wow@40"]
seeds = [3]

[data]
train_src = "toy/train.src"
train_tgt = "toy/train.tgt"
dev_src = "toy/dev.src"
dev_tgt = "toy/dev.tgt"
test_src = "toy/test.src"
test_tgt = "toy/test.tgt"
mono_tgt = "toy/mono.tgt"
lexicon = "toy/lexicon.txt"

[model]
embed_dim = 12
hidden_dim = 12

[train]
batch_size = 16
epochs = 4
lr_init = 0.01
eval_every = 4

[decode]
beam_width = 2
max_len = 8
"#,
    )
    .unwrap();

    let first = run_ok(dir, &["experiment", "--config", "exp.toml", "--out", "run"]);
    assert!(first.contains("| none | 0 | 1 |"), "{first}");
    assert!(first.contains("| wow@40 | 40 | 1 |"), "{first}");
    let report = fs::read(dir.join("run/report.tsv")).unwrap();

    let started = Instant::now();
    let second = run_ok(dir, &["experiment", "--config", "exp.toml", "--out", "run"]);
    assert!(started.elapsed().as_secs_f64() < 5.0);
    assert_eq!(first, second);
    assert_eq!(fs::read(dir.join("run/report.tsv")).unwrap(), report);
}

#[test]
fn missing_method_flags_fail_clearly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("mono.tgt"), "a b\n").unwrap();

    let wow = lexaug(
        dir,
        &[
            "augment", "--method", "wow", "--mono", "mono.tgt", "--out-src", "s", "--out-tgt",
            "t",
        ],
    );
    assert!(!wow.status.success());
    assert!(String::from_utf8_lossy(&wow.stderr).contains("--lexicon"));

    let bt = lexaug(
        dir,
        &[
            "augment", "--method", "bt", "--mono", "mono.tgt", "--out-src", "s", "--out-tgt",
            "t",
        ],
    );
    assert!(!bt.status.success());
    assert!(String::from_utf8_lossy(&bt.stderr).contains("--checkpoint"));

    let cov = lexaug(dir, &["coverage", "--corpus", "mono.tgt", "--side", "source"]);
    assert!(!cov.status.success());

    let nonsense = lexaug(dir, &["frobnicate"]);
    assert!(!nonsense.status.success());
}
