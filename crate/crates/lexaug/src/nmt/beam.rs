//! Beam-search and greedy decoding, plus the [`Translator`] bundle that
//! ties a model to its vocabularies for sentence-level translation.

use crate::corpus::{Corpus, Sentence, Vocab, BOS_ID, EOS_ID};

use super::forward::{attention_step, encode, softmax_in_place};
use super::linalg::add_assign;
use super::model::Model;
use super::NmtError;
use crate::fmath;

/// Decoding settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Number of hypotheses kept per step; 1 reproduces greedy decoding.
    pub beam_width: usize,
    /// Hard cap on decoder steps; no hypothesis ever carries more than
    /// this many tokens. `None` derives the cap from the source:
    /// `2 * source_len + 5`.
    pub max_len: Option<usize>,
    /// Rank final hypotheses by score divided by emission count instead of
    /// raw cumulative log-probability.
    pub length_normalize: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_width: 5,
            max_len: None,
            length_normalize: true,
        }
    }
}

impl DecodeConfig {
    pub fn effective_max_len(&self, source_len: usize) -> usize {
        self.max_len.unwrap_or(2 * source_len + 5)
    }
}

/// A live (unfinished) hypothesis: emitted tokens, the token the next GRU
/// step will consume, the decoder state that step will start from, and the
/// cumulative log-probability.
struct Partial {
    tokens: Vec<u32>,
    prev_token: u32,
    state: Vec<f64>,
    score: f64,
}

/// A hypothesis closed by the end marker (or by the length cap).
struct Finished {
    tokens: Vec<u32>,
    score: f64,
    /// Emission count that produced `score`: tokens plus the end marker
    /// when one was emitted.
    emissions: usize,
}

fn log_softmax_in_place(v: &mut [f64]) {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x -= mx;
        sum += fmath::exp(*x);
    }
    let ln_sum = fmath::ln(sum);
    for x in v {
        *x -= ln_sum;
    }
}

/// One decoder step from `state` after consuming `prev_token`: returns the
/// post-step state and the log-probabilities of the next emission.
fn step_scores(
    model: &Model,
    enc_states: &[Vec<f64>],
    prev_token: u32,
    state: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let params = &model.params;
    let (context, _) = attention_step(&params.attention, state, enc_states);
    let mut input = Vec::with_capacity(model.config.embed_dim + model.config.hidden_dim);
    input.extend_from_slice(params.tgt_embed.row(prev_token as usize));
    input.extend_from_slice(&context);

    // Inline GRU step (forward only, no trace needed at decode time).
    let dh = model.config.hidden_dim;
    let cell = &params.decoder;
    let mut z = vec![0.0; dh];
    cell.w_z.matvec(&input, &mut z);
    cell.u_z.matvec_acc(state, &mut z);
    add_assign(&mut z, cell.b_z.data());
    for v in &mut z {
        *v = fmath::sigmoid(*v);
    }
    let mut r = vec![0.0; dh];
    cell.w_r.matvec(&input, &mut r);
    cell.u_r.matvec_acc(state, &mut r);
    add_assign(&mut r, cell.b_r.data());
    for v in &mut r {
        *v = fmath::sigmoid(*v);
    }
    let gated: Vec<f64> = r.iter().zip(state).map(|(ri, hi)| ri * hi).collect();
    let mut cand = vec![0.0; dh];
    cell.w_h.matvec(&input, &mut cand);
    cell.u_h.matvec_acc(&gated, &mut cand);
    add_assign(&mut cand, cell.b_h.data());
    for v in &mut cand {
        *v = fmath::tanh(*v);
    }
    let new_state: Vec<f64> = z
        .iter()
        .zip(&cand)
        .zip(state)
        .map(|((zi, ci), hi)| (1.0 - zi) * hi + zi * ci)
        .collect();

    let mut logits = vec![0.0; params.out_proj.rows()];
    params.out_proj.matvec(&new_state, &mut logits);
    add_assign(&mut logits, params.out_bias.data());
    log_softmax_in_place(&mut logits);
    (new_state, logits)
}

fn normalized(score: f64, emissions: usize, length_normalize: bool) -> f64 {
    if length_normalize {
        score / emissions.max(1) as f64
    } else {
        score
    }
}

/// `true` when `a` outranks `b` under the final ranking: higher normalized
/// score first, then fewer emissions, then lexicographically smaller ids.
fn better(a: &Finished, b: &Finished, length_normalize: bool) -> bool {
    let na = normalized(a.score, a.emissions, length_normalize);
    let nb = normalized(b.score, b.emissions, length_normalize);
    if na != nb {
        return na > nb;
    }
    if a.emissions != b.emissions {
        return a.emissions < b.emissions;
    }
    a.tokens < b.tokens
}

/// Beam search over target ids. Hypotheses that emit the end marker leave
/// the beam (consuming the slot they won that step), so the beam shrinks as
/// hypotheses finish and `beam_width == 1` reproduces greedy decoding
/// exactly. Returns the best hypothesis without begin/end markers; an
/// empty source decodes to an empty hypothesis.
pub fn beam_search(
    model: &Model,
    source: &[u32],
    config: &DecodeConfig,
) -> Result<Vec<u32>, NmtError> {
    assert!(config.beam_width >= 1, "beam_width must be >= 1");
    if source.is_empty() {
        return Ok(Vec::new());
    }
    let max_len = config.effective_max_len(source.len());
    assert!(max_len >= 1, "max_len must be >= 1");
    let enc_states = encode(model, source)?;

    let mut beam = vec![Partial {
        tokens: Vec::new(),
        prev_token: BOS_ID,
        state: enc_states[enc_states.len() - 1].clone(),
        score: 0.0,
    }];
    let mut finished: Vec<Finished> = Vec::new();

    for _ in 0..max_len {
        if beam.is_empty() {
            break;
        }
        // (candidate score, beam index, token, post-step state shared per hyp)
        let mut expansions: Vec<(f64, usize, u32)> = Vec::new();
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(beam.len());
        for (hi, hyp) in beam.iter().enumerate() {
            let (state, logps) = step_scores(model, &enc_states, hyp.prev_token, &hyp.state);
            for (tok, lp) in logps.iter().enumerate() {
                expansions.push((hyp.score + lp, hi, tok as u32));
            }
            states.push(state);
        }
        // Deterministic top-k: score descending, then beam order, then id.
        expansions.sort_unstable_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        expansions.truncate(config.beam_width);

        let mut next = Vec::with_capacity(expansions.len());
        for (score, hi, tok) in expansions {
            if tok == EOS_ID {
                finished.push(Finished {
                    tokens: beam[hi].tokens.clone(),
                    score,
                    emissions: beam[hi].tokens.len() + 1,
                });
            } else {
                let mut tokens = beam[hi].tokens.clone();
                tokens.push(tok);
                next.push(Partial {
                    tokens,
                    prev_token: tok,
                    state: states[hi].clone(),
                    score,
                });
            }
        }
        beam = next;
    }

    // Length-capped survivors compete only when nothing finished cleanly.
    if finished.is_empty() {
        finished = beam
            .into_iter()
            .map(|p| Finished {
                emissions: p.tokens.len(),
                tokens: p.tokens,
                score: p.score,
            })
            .collect();
    }
    let mut best: Option<Finished> = None;
    for cand in finished {
        if best
            .as_ref()
            .is_none_or(|b| better(&cand, b, config.length_normalize))
        {
            best = Some(cand);
        }
    }
    Ok(best.map(|b| b.tokens).unwrap_or_default())
}

/// Greedy decoding: at every step emit the highest-probability token (ties
/// to the lowest id), stopping at the end marker or after `max_len` tokens.
pub fn greedy_decode(
    model: &Model,
    source: &[u32],
    max_len: usize,
) -> Result<Vec<u32>, NmtError> {
    if source.is_empty() {
        return Ok(Vec::new());
    }
    let enc_states = encode(model, source)?;
    let mut state = enc_states[enc_states.len() - 1].clone();
    let mut prev = BOS_ID;
    let mut tokens = Vec::new();
    for _ in 0..max_len {
        let (new_state, logps) = step_scores(model, &enc_states, prev, &state);
        let mut arg = 0u32;
        let mut best = f64::NEG_INFINITY;
        for (tok, &lp) in logps.iter().enumerate() {
            if lp > best {
                best = lp;
                arg = tok as u32;
            }
        }
        if arg == EOS_ID {
            break;
        }
        tokens.push(arg);
        state = new_state;
        prev = arg;
    }
    Ok(tokens)
}

/// A model bound to the vocabularies it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Translator {
    pub model: Model,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
}

impl Translator {
    /// Translates one sentence. Unknown source tokens map to the unknown
    /// id; an empty sentence translates to an empty sentence.
    pub fn translate(&self, sentence: &Sentence, config: &DecodeConfig) -> Sentence {
        let ids = self.src_vocab.encode(sentence);
        // Ids come from this translator's own vocabulary, so the search
        // cannot fail on range.
        let out = beam_search(&self.model, &ids, config).expect("vocabulary-encoded ids in range");
        self.tgt_vocab.decode(&out)
    }

    /// Translates every sentence in order.
    pub fn translate_corpus(&self, corpus: &Corpus, config: &DecodeConfig) -> Corpus {
        Corpus::new(
            corpus
                .iter()
                .map(|s| self.translate(s, config))
                .collect(),
        )
    }
}

/// Softmax over raw scores; exposed for decode-side diagnostics.
#[allow(dead_code)]
pub(crate) fn probabilities(mut logits: Vec<f64>) -> Vec<f64> {
    softmax_in_place(&mut logits);
    logits
}
