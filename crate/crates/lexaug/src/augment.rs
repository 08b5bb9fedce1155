//! Synthetic parallel data from target-side monolingual text.
//!
//! Three augmentation methods produce pairs whose target side is always a
//! verbatim monolingual sentence:
//! - word-on-word (`wow`): each target token is replaced by a dictionary
//!   translation to form the source side;
//! - `copy`: the target sentence doubles as its own source;
//! - `bt`: the source side is decoded from a reverse-direction model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Origin, ParallelPair, Sentence};
use crate::lexicon::Lexicon;
use crate::nmt::{DecodeConfig, Translator};

/// What to emit for a token the lexicon does not cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OovMode {
    /// Emit the token unchanged.
    CopyThrough,
    /// Omit the token.
    Drop,
}

/// How to choose among multiple translations of one headword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieMode {
    /// Always take the head of the translation list.
    First,
    /// Uniform choice from a stream keyed by (seed, sentence index), so the
    /// result is independent of call order.
    SeededRandom { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WowPolicy {
    pub oov_mode: OovMode,
    pub tie_mode: TieMode,
}

impl Default for WowPolicy {
    fn default() -> Self {
        WowPolicy {
            oov_mode: OovMode::CopyThrough,
            tie_mode: TieMode::First,
        }
    }
}

/// Synthetic pairs plus the count of candidates discarded because their
/// synthetic source came out empty.
#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub pairs: Vec<ParallelPair>,
    pub discarded: usize,
}

/// Translates a target sentence word by word. Covered tokens emit one
/// translation chosen by `tie_mode`; uncovered tokens follow `oov_mode`.
/// Output order follows input order.
pub fn wow_translate(lexicon: &Lexicon, sentence: &Sentence, policy: WowPolicy) -> Sentence {
    wow_translate_indexed(lexicon, sentence, policy, 0)
}

/// As [`wow_translate`], with the sentence index that keys the
/// `SeededRandom` tie stream. Index 0 matches the plain call.
pub fn wow_translate_indexed(
    lexicon: &Lexicon,
    sentence: &Sentence,
    policy: WowPolicy,
    sentence_index: u64,
) -> Sentence {
    let mut rng = match policy.tie_mode {
        TieMode::First => None,
        TieMode::SeededRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(sentence_index);
            Some(rng)
        }
    };
    let mut out: Vec<String> = Vec::with_capacity(sentence.len());
    for token in sentence.tokens() {
        match lexicon.lookup(token) {
            Some(translations) => {
                let idx = match rng.as_mut() {
                    None => 0,
                    Some(rng) => rng.gen_range(0..translations.len()),
                };
                out.push(translations[idx].clone());
            }
            None => match policy.oov_mode {
                OovMode::CopyThrough => out.push(token.clone()),
                OovMode::Drop => {}
            },
        }
    }
    Sentence::from_tokens(out).expect("translations and copied tokens are valid tokens")
}

/// One wow pair per monolingual sentence: synthetic source, verbatim target.
/// Pairs whose source comes out empty (drop mode on fully-uncovered input)
/// are discarded and counted.
pub fn augment_wow(lexicon: &Lexicon, mono: &Corpus, policy: WowPolicy) -> AugmentOutcome {
    let mut pairs = Vec::with_capacity(mono.len());
    let mut discarded = 0;
    for (i, sentence) in mono.iter().enumerate() {
        let source = wow_translate_indexed(lexicon, sentence, policy, i as u64);
        if source.is_empty() {
            discarded += 1;
            continue;
        }
        pairs.push(ParallelPair {
            source,
            target: sentence.clone(),
            origin: Origin::Wow,
        });
    }
    AugmentOutcome { pairs, discarded }
}

/// Copies each target sentence to the source side unchanged.
pub fn augment_copy(mono: &Corpus) -> Vec<ParallelPair> {
    mono.iter()
        .map(|sentence| ParallelPair {
            source: sentence.clone(),
            target: sentence.clone(),
            origin: Origin::Copy,
        })
        .collect()
}

/// Back-translation: decodes each monolingual sentence through a model
/// trained in the reverse direction. Empty hypotheses are discarded and
/// counted.
pub fn augment_bt(
    reverse_model: &Translator,
    mono: &Corpus,
    decode_config: &DecodeConfig,
) -> AugmentOutcome {
    let mut pairs = Vec::with_capacity(mono.len());
    let mut discarded = 0;
    for sentence in mono {
        let source = reverse_model.translate(sentence, decode_config);
        if source.is_empty() {
            discarded += 1;
            continue;
        }
        pairs.push(ParallelPair {
            source,
            target: sentence.clone(),
            origin: Origin::Bt,
        });
    }
    AugmentOutcome { pairs, discarded }
}

/// Genuine parallel data plus synthetic batches to combine into one
/// training set with a seeded uniform shuffle.
#[derive(Debug, Clone)]
pub struct MixPlan {
    pub parallel: Vec<ParallelPair>,
    pub synthetic_batches: Vec<Vec<ParallelPair>>,
    pub shuffle_seed: u64,
}

/// Concatenates all inputs and applies a seeded Fisher-Yates shuffle.
/// The output is a permutation of the inputs, deterministic per seed.
pub fn mix(plan: MixPlan) -> Vec<ParallelPair> {
    let mut all = plan.parallel;
    for batch in plan.synthetic_batches {
        all.extend(batch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.shuffle_seed);
    for i in (1..all.len()).rev() {
        let j = rng.gen_range(0..=i);
        all.swap(i, j);
    }
    all
}
