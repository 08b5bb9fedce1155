//! Corpus-level BLEU-4 and vocabulary-coverage measurement.

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::{Corpus, Vocab};
use crate::fmath;

pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("hypothesis/reference sentence count mismatch {hyp} vs {reference}")]
    CountMismatch { hyp: usize, reference: usize },
    #[error("coverage of an empty corpus is undefined")]
    EmptyCorpus,
}

/// Precision smoothing for BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    None,
    /// Adds 1 to numerator and denominator of the n >= 2 precisions.
    AddOne,
}

impl Smoothing {
    pub fn as_str(self) -> &'static str {
        match self {
            Smoothing::None => "none",
            Smoothing::AddOne => "add_one",
        }
    }
}

/// Corpus-level BLEU with its components. `bleu` is in [0, 1]; tables
/// usually render `100 * bleu`.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuReport {
    pub bleu: f64,
    pub precisions: [f64; MAX_NGRAM],
    pub brevity_penalty: f64,
    pub hyp_length: usize,
    pub ref_length: usize,
    pub smoothing: Smoothing,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU-4 against a single reference per hypothesis: clipped
/// n-gram matches summed over the corpus, geometric mean of the four
/// precisions, and a brevity penalty of exp(1 - r/h) when h < r.
/// Without smoothing, any zero precision zeroes the whole score.
pub fn bleu(
    hypotheses: &Corpus,
    references: &Corpus,
    smoothing: Smoothing,
) -> Result<BleuReport, MetricsError> {
    if hypotheses.len() != references.len() {
        return Err(MetricsError::CountMismatch {
            hyp: hypotheses.len(),
            reference: references.len(),
        });
    }
    let mut matched = [0usize; MAX_NGRAM];
    let mut total = [0usize; MAX_NGRAM];
    let mut hyp_length = 0usize;
    let mut ref_length = 0usize;
    for (hyp, reference) in hypotheses.iter().zip(references) {
        hyp_length += hyp.len();
        ref_length += reference.len();
        for n in 1..=MAX_NGRAM {
            let ref_counts = ngram_counts(reference.tokens(), n);
            for (gram, count) in ngram_counts(hyp.tokens(), n) {
                let clip = ref_counts.get(gram).copied().unwrap_or(0);
                matched[n - 1] += count.min(clip);
            }
            total[n - 1] += hyp.len().saturating_sub(n - 1);
        }
    }

    let mut precisions = [0.0f64; MAX_NGRAM];
    for n in 1..=MAX_NGRAM {
        let (num, den) = match smoothing {
            Smoothing::AddOne if n >= 2 => (matched[n - 1] + 1, total[n - 1] + 1),
            _ => (matched[n - 1], total[n - 1]),
        };
        precisions[n - 1] = if den == 0 { 0.0 } else { num as f64 / den as f64 };
    }

    let brevity_penalty = if hyp_length == 0 {
        0.0
    } else if hyp_length < ref_length {
        fmath::exp(1.0 - ref_length as f64 / hyp_length as f64)
    } else {
        1.0
    };

    let bleu = if precisions.contains(&0.0) {
        0.0
    } else {
        let mean_log = precisions.iter().map(|&p| fmath::ln(p)).sum::<f64>() / MAX_NGRAM as f64;
        brevity_penalty * fmath::exp(mean_log)
    };

    Ok(BleuReport {
        bleu,
        precisions,
        brevity_penalty,
        hyp_length,
        ref_length,
        smoothing,
    })
}

/// Which corpus side a coverage number was measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
        }
    }
}

/// Fractions of a corpus's token occurrences and distinct types present in
/// a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub token_coverage: f64,
    pub type_coverage: f64,
    pub side: Side,
}

/// Measures how much of `corpus` the vocabulary covers, by running tokens
/// and by distinct types. An empty corpus has no defined coverage.
pub fn vocab_coverage(
    vocab: &Vocab,
    corpus: &Corpus,
    side: Side,
) -> Result<CoverageReport, MetricsError> {
    let mut total_tokens = 0usize;
    let mut covered_tokens = 0usize;
    let mut types: HashMap<&str, bool> = HashMap::new();
    for sentence in corpus {
        for token in sentence.tokens() {
            total_tokens += 1;
            let covered = vocab.contains(token);
            if covered {
                covered_tokens += 1;
            }
            types.entry(token).or_insert(covered);
        }
    }
    if total_tokens == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    let covered_types = types.values().filter(|&&c| c).count();
    Ok(CoverageReport {
        token_coverage: covered_tokens as f64 / total_tokens as f64,
        type_coverage: covered_types as f64 / types.len() as f64,
        side,
    })
}
