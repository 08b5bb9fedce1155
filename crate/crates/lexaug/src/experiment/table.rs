//! The experiment's result table: one block of rows per arm (one row per
//! seed plus a mean row), or a single `failed` row for arms that errored.
//!
//! The TSV rendering is the machine-readable artifact: floats print via
//! Rust's shortest-round-trip `Display`, so parsing a rendered table
//! reconstructs it exactly, bit for bit. The markdown rendering is a
//! human summary (one line per arm, means only, BLEU x100).

use std::fmt::Write as _;

use super::ExperimentError;

/// Metrics for one completed replicate.
///
/// `parallel_pairs + synthetic_pairs` is the exact training-set size;
/// `discarded` counts monolingual sentences the augmenter dropped (e.g.
/// sentences that became empty under OOV-drop), already excluded from
/// `synthetic_pairs`. BLEU and coverage are fractions in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRow {
    pub seed: u64,
    pub parallel_pairs: usize,
    pub synthetic_pairs: usize,
    pub discarded: usize,
    pub dev_bleu: f64,
    pub test_bleu: f64,
    pub src_token_coverage: f64,
    pub tgt_token_coverage: f64,
}

/// Per-arm averages over its seed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub dev_bleu: f64,
    pub test_bleu: f64,
    pub src_token_coverage: f64,
    pub tgt_token_coverage: f64,
}

pub fn mean_of(seeds: &[SeedRow]) -> MeanRow {
    assert!(!seeds.is_empty(), "mean of zero seed rows");
    let n = seeds.len() as f64;
    MeanRow {
        dev_bleu: seeds.iter().map(|s| s.dev_bleu).sum::<f64>() / n,
        test_bleu: seeds.iter().map(|s| s.test_bleu).sum::<f64>() / n,
        src_token_coverage: seeds.iter().map(|s| s.src_token_coverage).sum::<f64>() / n,
        tgt_token_coverage: seeds.iter().map(|s| s.tgt_token_coverage).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArmResult {
    Done { seeds: Vec<SeedRow>, mean: MeanRow },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmReport {
    pub label: String,
    pub synthetic_size: usize,
    pub result: ArmResult,
}

impl ArmReport {
    pub fn mean(&self) -> Option<&MeanRow> {
        match &self.result {
            ArmResult::Done { mean, .. } => Some(mean),
            ArmResult::Failed(_) => None,
        }
    }

    pub fn seed_rows(&self) -> &[SeedRow] {
        match &self.result {
            ArmResult::Done { seeds, .. } => seeds,
            ArmResult::Failed(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportTable {
    pub arms: Vec<ArmReport>,
}

impl ReportTable {
    pub fn arm(&self, label: &str) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.label == label)
    }
}

pub const TSV_HEADER: &str = "arm\tsynthetic_size\tseed\tparallel_pairs\tsynthetic_pairs\t\
discarded\tdev_bleu\ttest_bleu\tsrc_token_coverage\ttgt_token_coverage\tstatus";

const TSV_COLUMNS: usize = 11;

/// Renders the lossless tab-separated form.
pub fn render_tsv(table: &ReportTable) -> String {
    let mut out = String::new();
    out.push_str(TSV_HEADER);
    out.push('\n');
    for arm in &table.arms {
        match &arm.result {
            ArmResult::Done { seeds, mean } => {
                for s in seeds {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\tok",
                        arm.label,
                        arm.synthetic_size,
                        s.seed,
                        s.parallel_pairs,
                        s.synthetic_pairs,
                        s.discarded,
                        s.dev_bleu,
                        s.test_bleu,
                        s.src_token_coverage,
                        s.tgt_token_coverage,
                    );
                }
                let _ = writeln!(
                    out,
                    "{}\t{}\tmean\t-\t-\t-\t{}\t{}\t{}\t{}\tok",
                    arm.label,
                    arm.synthetic_size,
                    mean.dev_bleu,
                    mean.test_bleu,
                    mean.src_token_coverage,
                    mean.tgt_token_coverage,
                );
            }
            ArmResult::Failed(msg) => {
                let clean: String = msg
                    .chars()
                    .map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c })
                    .collect();
                let _ = writeln!(
                    out,
                    "{}\t{}\t-\t-\t-\t-\t-\t-\t-\t-\tfailed: {clean}",
                    arm.label, arm.synthetic_size,
                );
            }
        }
    }
    out
}

fn parse_err(line_no: usize, why: impl Into<String>) -> ExperimentError {
    ExperimentError::Table(format!("line {line_no}: {}", why.into()))
}

fn field<T: std::str::FromStr>(
    text: &str,
    name: &str,
    line_no: usize,
) -> Result<T, ExperimentError> {
    text.parse()
        .map_err(|_| parse_err(line_no, format!("bad {name} `{text}`")))
}

/// Parses a table rendered by [`render_tsv`], validating its shape: each
/// arm is either seed rows closed by exactly one mean row, or a single
/// failed row, and no arm appears twice.
pub fn parse_tsv(text: &str) -> Result<ReportTable, ExperimentError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TSV_HEADER => {}
        Some((_, other)) => {
            return Err(parse_err(1, format!("unexpected header `{other}`")));
        }
        None => return Err(parse_err(1, "empty table")),
    }

    let mut table = ReportTable::default();
    // Arm currently being accumulated: rows seen, not yet closed by mean.
    let mut open: Option<ArmReport> = None;

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != TSV_COLUMNS {
            return Err(parse_err(
                line_no,
                format!("expected {TSV_COLUMNS} columns, found {}", cols.len()),
            ));
        }
        let label = cols[0];
        let synthetic_size: usize = field(cols[1], "synthetic_size", line_no)?;

        let matches_open = open
            .as_ref()
            .is_some_and(|a| a.label == label && a.synthetic_size == synthetic_size);
        if !matches_open {
            if let Some(unclosed) = open.take() {
                return Err(parse_err(
                    line_no,
                    format!("arm `{}` has no mean row", unclosed.label),
                ));
            }
            if table.arm(label).is_some() {
                return Err(parse_err(line_no, format!("arm `{label}` appears twice")));
            }
        }

        if let Some(msg) = cols[10].strip_prefix("failed: ") {
            if matches_open {
                return Err(parse_err(
                    line_no,
                    format!("failed row inside arm `{label}`"),
                ));
            }
            table.arms.push(ArmReport {
                label: label.to_string(),
                synthetic_size,
                result: ArmResult::Failed(msg.to_string()),
            });
            continue;
        }
        if cols[10] != "ok" {
            return Err(parse_err(line_no, format!("bad status `{}`", cols[10])));
        }

        if cols[2] == "mean" {
            let Some(arm) = open.take() else {
                return Err(parse_err(
                    line_no,
                    format!("mean row for arm `{label}` with no seed rows"),
                ));
            };
            let ArmResult::Done { seeds, .. } = arm.result else {
                unreachable!("open arm is always Done");
            };
            let mean = MeanRow {
                dev_bleu: field(cols[6], "dev_bleu", line_no)?,
                test_bleu: field(cols[7], "test_bleu", line_no)?,
                src_token_coverage: field(cols[8], "src_token_coverage", line_no)?,
                tgt_token_coverage: field(cols[9], "tgt_token_coverage", line_no)?,
            };
            table.arms.push(ArmReport {
                label: label.to_string(),
                synthetic_size,
                result: ArmResult::Done { seeds, mean },
            });
            continue;
        }

        let row = SeedRow {
            seed: field(cols[2], "seed", line_no)?,
            parallel_pairs: field(cols[3], "parallel_pairs", line_no)?,
            synthetic_pairs: field(cols[4], "synthetic_pairs", line_no)?,
            discarded: field(cols[5], "discarded", line_no)?,
            dev_bleu: field(cols[6], "dev_bleu", line_no)?,
            test_bleu: field(cols[7], "test_bleu", line_no)?,
            src_token_coverage: field(cols[8], "src_token_coverage", line_no)?,
            tgt_token_coverage: field(cols[9], "tgt_token_coverage", line_no)?,
        };
        match &mut open {
            Some(arm) => {
                let ArmResult::Done { seeds, .. } = &mut arm.result else {
                    unreachable!("open arm is always Done");
                };
                seeds.push(row);
            }
            None => {
                open = Some(ArmReport {
                    label: label.to_string(),
                    synthetic_size,
                    result: ArmResult::Done {
                        seeds: vec![row],
                        mean: MeanRow {
                            dev_bleu: 0.0,
                            test_bleu: 0.0,
                            src_token_coverage: 0.0,
                            tgt_token_coverage: 0.0,
                        },
                    },
                });
            }
        }
    }
    if let Some(unclosed) = open {
        return Err(ExperimentError::Table(format!(
            "arm `{}` has no mean row",
            unclosed.label
        )));
    }
    Ok(table)
}

/// Renders the human summary: one line per arm showing seed count and
/// mean metrics, BLEU scaled x100, coverage as a percentage.
pub fn render_markdown(table: &ReportTable) -> String {
    let mut out = String::new();
    out.push_str("| arm | synthetic | seeds | dev BLEU | test BLEU | src coverage | tgt coverage | note |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|---|\n");
    for arm in &table.arms {
        match &arm.result {
            ArmResult::Done { seeds, mean } => {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.2} | {:.2} | {:.1}% | {:.1}% | |",
                    arm.label,
                    arm.synthetic_size,
                    seeds.len(),
                    mean.dev_bleu * 100.0,
                    mean.test_bleu * 100.0,
                    mean.src_token_coverage * 100.0,
                    mean.tgt_token_coverage * 100.0,
                );
            }
            ArmResult::Failed(msg) => {
                let clean = msg.replace('|', "/").replace(['\t', '\n', '\r'], " ");
                let _ = writeln!(
                    out,
                    "| {} | {} | - | - | - | - | - | failed: {clean} |",
                    arm.label, arm.synthetic_size,
                );
            }
        }
    }
    out
}
