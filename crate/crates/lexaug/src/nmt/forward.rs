//! Forward pass and exact reverse-mode gradients.
//!
//! Loss is mean per-token negative log-likelihood under teacher forcing:
//! every decoder step is fed the gold previous token, and every target
//! sentence contributes `len + 1` prediction steps (each token plus a
//! closing end-of-sentence emission). `backward` differentiates the exact
//! same computation as `forward_loss`; the two agree on the loss to the
//! last bit because they share one code path.

use crate::corpus::{BOS_ID, EOS_ID};
use crate::fmath;

use super::linalg::{add_assign, axpy, dot};
use super::model::{AttentionParams, GruCell, Model, Params};
use super::NmtError;

/// One sentence pair already mapped to vocabulary ids (no bos/eos markers;
/// those are implicit in the decoder loop).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIds {
    pub source: Vec<u32>,
    pub target: Vec<u32>,
}

/// Loss plus gradients for every parameter, in the same shapes as the
/// parameters themselves.
#[derive(Debug)]
pub struct Backward {
    /// Mean per-token loss over the batch, identical to `forward_loss`.
    pub loss: f64,
    /// Number of prediction steps the mean runs over.
    pub token_count: usize,
    pub grads: Params,
}

/// Activations of one GRU step, kept for the backward pass.
#[derive(Debug, Clone)]
struct GruActs {
    z: Vec<f64>,
    r: Vec<f64>,
    cand: Vec<f64>,
    state: Vec<f64>,
}

fn sigmoid_in_place(v: &mut [f64]) {
    for x in v {
        *x = fmath::sigmoid(*x);
    }
}

fn tanh_in_place(v: &mut [f64]) {
    for x in v {
        *x = fmath::tanh(*x);
    }
}

fn gru_forward(cell: &GruCell, x: &[f64], h_prev: &[f64]) -> GruActs {
    let dh = h_prev.len();
    let mut z = vec![0.0; dh];
    cell.w_z.matvec(x, &mut z);
    cell.u_z.matvec_acc(h_prev, &mut z);
    add_assign(&mut z, cell.b_z.data());
    sigmoid_in_place(&mut z);

    let mut r = vec![0.0; dh];
    cell.w_r.matvec(x, &mut r);
    cell.u_r.matvec_acc(h_prev, &mut r);
    add_assign(&mut r, cell.b_r.data());
    sigmoid_in_place(&mut r);

    let gated: Vec<f64> = r.iter().zip(h_prev).map(|(ri, hi)| ri * hi).collect();
    let mut cand = vec![0.0; dh];
    cell.w_h.matvec(x, &mut cand);
    cell.u_h.matvec_acc(&gated, &mut cand);
    add_assign(&mut cand, cell.b_h.data());
    tanh_in_place(&mut cand);

    let state: Vec<f64> = z
        .iter()
        .zip(&cand)
        .zip(h_prev)
        .map(|((zi, ci), hi)| (1.0 - zi) * hi + zi * ci)
        .collect();
    GruActs { z, r, cand, state }
}

/// Backward through one GRU step. `d_state` is the loss gradient at the
/// step's output; gradients are accumulated into `grads`, `dx`, `dh_prev`.
#[allow(clippy::too_many_arguments)]
fn gru_backward(
    cell: &GruCell,
    grads: &mut GruCell,
    x: &[f64],
    h_prev: &[f64],
    acts: &GruActs,
    d_state: &[f64],
    dx: &mut [f64],
    dh_prev: &mut [f64],
) {
    let dh = h_prev.len();
    let mut d_cand_pre = vec![0.0; dh]; // grad at tanh pre-activation
    let mut d_z_pre = vec![0.0; dh];
    let mut dr = vec![0.0; dh];
    for i in 0..dh {
        let ds = d_state[i];
        let z = acts.z[i];
        let c = acts.cand[i];
        dh_prev[i] += ds * (1.0 - z);
        d_cand_pre[i] = ds * z * (1.0 - c * c);
        let dz = ds * (c - h_prev[i]);
        d_z_pre[i] = dz * z * (1.0 - z);
    }

    // Candidate path: pre = w_h x + u_h (r*h_prev) + b_h.
    grads.w_h.outer_acc(&d_cand_pre, x);
    add_assign(grads.b_h.data_mut(), &d_cand_pre);
    cell.w_h.matvec_t_acc(&d_cand_pre, dx);
    let gated: Vec<f64> = acts.r.iter().zip(h_prev).map(|(ri, hi)| ri * hi).collect();
    grads.u_h.outer_acc(&d_cand_pre, &gated);
    let mut d_gated = vec![0.0; dh];
    cell.u_h.matvec_t_acc(&d_cand_pre, &mut d_gated);
    for i in 0..dh {
        dr[i] = d_gated[i] * h_prev[i];
        dh_prev[i] += d_gated[i] * acts.r[i];
    }

    // Update gate.
    grads.w_z.outer_acc(&d_z_pre, x);
    grads.u_z.outer_acc(&d_z_pre, h_prev);
    add_assign(grads.b_z.data_mut(), &d_z_pre);
    cell.w_z.matvec_t_acc(&d_z_pre, dx);
    cell.u_z.matvec_t_acc(&d_z_pre, dh_prev);

    // Reset gate.
    let mut d_r_pre = vec![0.0; dh];
    for i in 0..dh {
        d_r_pre[i] = dr[i] * acts.r[i] * (1.0 - acts.r[i]);
    }
    grads.w_r.outer_acc(&d_r_pre, x);
    grads.u_r.outer_acc(&d_r_pre, h_prev);
    add_assign(grads.b_r.data_mut(), &d_r_pre);
    cell.w_r.matvec_t_acc(&d_r_pre, dx);
    cell.u_r.matvec_t_acc(&d_r_pre, dh_prev);
}

fn check_ids(ids: &[u32], vocab_size: usize) -> Result<(), NmtError> {
    for &id in ids {
        if id as usize >= vocab_size {
            return Err(NmtError::TokenIdOutOfRange { id, vocab_size });
        }
    }
    Ok(())
}

/// Runs the encoder over a source sentence and returns one hidden state per
/// token, in order. The initial hidden state is zero.
pub fn encode(model: &Model, source: &[u32]) -> Result<Vec<Vec<f64>>, NmtError> {
    check_ids(source, model.config.src_vocab_size)?;
    let (states, _) = encode_traced(&model.params, model.config.hidden_dim, source);
    Ok(states)
}

fn encode_traced(params: &Params, dh: usize, source: &[u32]) -> (Vec<Vec<f64>>, Vec<GruActs>) {
    let mut states = Vec::with_capacity(source.len());
    let mut acts = Vec::with_capacity(source.len());
    let mut h = vec![0.0; dh];
    for &id in source {
        let x = params.src_embed.row(id as usize);
        let step = gru_forward(&params.encoder, x, &h);
        h.copy_from_slice(&step.state);
        states.push(step.state.clone());
        acts.push(step);
    }
    (states, acts)
}

/// Projected encoder keys, shared across decoder steps of one sentence.
fn attention_keys(att: &AttentionParams, enc_states: &[Vec<f64>]) -> Vec<Vec<f64>> {
    enc_states
        .iter()
        .map(|h| {
            let mut k = vec![0.0; att.key_proj.rows()];
            att.key_proj.matvec(h, &mut k);
            k
        })
        .collect()
}

/// Additive attention with precomputed keys. Returns per-position scored
/// tanh activations, the softmax weights, and the context vector.
fn attention_forward(
    att: &AttentionParams,
    query: &[f64],
    enc_states: &[Vec<f64>],
    keys: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let da = att.query_proj.rows();
    let mut wq = vec![0.0; da];
    att.query_proj.matvec(query, &mut wq);
    let mut scores = Vec::with_capacity(keys.len());
    let mut tanhs = Vec::with_capacity(keys.len());
    for k in keys {
        let mut g: Vec<f64> = wq.iter().zip(k).map(|(a, b)| a + b).collect();
        tanh_in_place(&mut g);
        scores.push(dot(att.score_v.data(), &g));
        tanhs.push(g);
    }
    softmax_in_place(&mut scores);
    let mut context = vec![0.0; enc_states[0].len()];
    for (alpha, h) in scores.iter().zip(enc_states) {
        axpy(&mut context, *alpha, h);
    }
    (tanhs, scores, context)
}

/// One attention application: weights over `encoder_states` for `query`,
/// and the weighted-sum context. Weights are a probability distribution
/// (non-negative, summing to 1) for any finite inputs.
///
/// Panics if `encoder_states` is empty.
pub fn attention_step(
    att: &AttentionParams,
    query: &[f64],
    encoder_states: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>) {
    assert!(
        !encoder_states.is_empty(),
        "attention requires at least one encoder state"
    );
    let keys = attention_keys(att, encoder_states);
    let (_, weights, context) = attention_forward(att, query, encoder_states, &keys);
    (context, weights)
}

#[allow(clippy::too_many_arguments)]
fn attention_backward(
    att: &AttentionParams,
    grads: &mut AttentionParams,
    query: &[f64],
    enc_states: &[Vec<f64>],
    tanhs: &[Vec<f64>],
    alpha: &[f64],
    d_context: &[f64],
    d_query: &mut [f64],
    d_enc: &mut [Vec<f64>],
) {
    let n = enc_states.len();
    let da = att.query_proj.rows();
    // Through the weighted sum.
    let mut d_alpha = vec![0.0; n];
    for i in 0..n {
        d_alpha[i] = dot(d_context, &enc_states[i]);
        axpy(&mut d_enc[i], alpha[i], d_context);
    }
    // Through the softmax.
    let mix: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    let mut d_wq = vec![0.0; da];
    for i in 0..n {
        let d_score = alpha[i] * (d_alpha[i] - mix);
        axpy(grads.score_v.data_mut(), d_score, &tanhs[i]);
        // Through tanh(wq + key_i).
        let mut d_pre = vec![0.0; da];
        for j in 0..da {
            let g = tanhs[i][j];
            d_pre[j] = d_score * att.score_v.data()[j] * (1.0 - g * g);
        }
        add_assign(&mut d_wq, &d_pre);
        grads.key_proj.outer_acc(&d_pre, &enc_states[i]);
        att.key_proj.matvec_t_acc(&d_pre, &mut d_enc[i]);
    }
    grads.query_proj.outer_acc(&d_wq, query);
    att.query_proj.matvec_t_acc(&d_wq, d_query);
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = fmath::exp(*x - mx);
        sum += *x;
    }
    for x in v {
        *x /= sum;
    }
}

/// Everything one decoder step must remember for the backward pass.
struct DecStep {
    prev_token: usize,
    gold: usize,
    tanhs: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    input: Vec<f64>,
    acts: GruActs,
    probs: Vec<f64>,
}

struct SentenceTrace {
    enc_states: Vec<Vec<f64>>,
    enc_acts: Vec<GruActs>,
    dec_states: Vec<Vec<f64>>,
    steps: Vec<DecStep>,
    sum_loss: f64,
}

/// Teacher-forced forward over one pair. Returns the full activation trace
/// and the summed (not yet averaged) loss over `target.len() + 1` steps.
fn run_sentence(params: &Params, dh: usize, pair: &PairIds) -> SentenceTrace {
    let de = params.tgt_embed.cols();
    let (enc_states, enc_acts) = encode_traced(params, dh, &pair.source);
    let keys = attention_keys(&params.attention, &enc_states);

    let m = pair.target.len();
    let mut dec_states = Vec::with_capacity(m + 2);
    dec_states.push(enc_states[enc_states.len() - 1].clone());
    let mut steps = Vec::with_capacity(m + 1);
    let mut sum_loss = 0.0;
    for t in 0..=m {
        let prev_token = if t == 0 {
            BOS_ID as usize
        } else {
            pair.target[t - 1] as usize
        };
        let gold = if t < m {
            pair.target[t] as usize
        } else {
            EOS_ID as usize
        };
        let query = &dec_states[t];
        let (tanhs, alpha, context) = attention_forward(&params.attention, query, &enc_states, &keys);
        let mut input = Vec::with_capacity(de + dh);
        input.extend_from_slice(params.tgt_embed.row(prev_token));
        input.extend_from_slice(&context);
        let acts = gru_forward(&params.decoder, &input, query);

        let mut logits = vec![0.0; params.out_proj.rows()];
        params.out_proj.matvec(&acts.state, &mut logits);
        add_assign(&mut logits, params.out_bias.data());
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let mut probs = vec![0.0; logits.len()];
        for (p, &l) in probs.iter_mut().zip(&logits) {
            *p = fmath::exp(l - mx);
            sum += *p;
        }
        sum_loss += fmath::ln(sum) + mx - logits[gold];
        for p in &mut probs {
            *p /= sum;
        }

        dec_states.push(acts.state.clone());
        steps.push(DecStep {
            prev_token,
            gold,
            tanhs,
            alpha,
            input,
            acts,
            probs,
        });
    }

    SentenceTrace {
        enc_states,
        enc_acts,
        dec_states,
        steps,
        sum_loss,
    }
}

/// Backprop through one traced sentence, accumulating unscaled (sum-loss)
/// gradients into `grads`.
fn backward_sentence(params: &Params, dh: usize, pair: &PairIds, trace: &SentenceTrace, grads: &mut Params) {
    let de = params.tgt_embed.cols();
    let n = trace.enc_states.len();
    let mut d_enc: Vec<Vec<f64>> = vec![vec![0.0; dh]; n];
    let mut d_state = vec![0.0; dh];

    for (t, step) in trace.steps.iter().enumerate().rev() {
        // Output layer.
        let mut d_logits = step.probs.clone();
        d_logits[step.gold] -= 1.0;
        grads.out_proj.outer_acc(&d_logits, &step.acts.state);
        add_assign(grads.out_bias.data_mut(), &d_logits);
        params.out_proj.matvec_t_acc(&d_logits, &mut d_state);

        // Decoder GRU.
        let mut d_input = vec![0.0; de + dh];
        let mut d_query = vec![0.0; dh];
        gru_backward(
            &params.decoder,
            &mut grads.decoder,
            &step.input,
            &trace.dec_states[t],
            &step.acts,
            &d_state,
            &mut d_input,
            &mut d_query,
        );
        add_assign(grads.tgt_embed.row_mut(step.prev_token), &d_input[..de]);

        // Attention (context is the tail of the decoder input).
        attention_backward(
            &params.attention,
            &mut grads.attention,
            &trace.dec_states[t],
            &trace.enc_states,
            &step.tanhs,
            &step.alpha,
            &d_input[de..],
            &mut d_query,
            &mut d_enc,
        );
        d_state = d_query;
    }

    // The decoder start state is the last encoder state.
    add_assign(&mut d_enc[n - 1], &d_state);

    // Encoder, right to left. The zero initial state absorbs the final
    // carried gradient.
    let zero = vec![0.0; dh];
    let mut carried = vec![0.0; dh];
    for i in (0..n).rev() {
        add_assign(&mut d_enc[i], &carried);
        let h_prev = if i == 0 {
            &zero
        } else {
            &trace.enc_states[i - 1]
        };
        let mut dx = vec![0.0; params.src_embed.cols()];
        let mut dh_prev = vec![0.0; dh];
        gru_backward(
            &params.encoder,
            &mut grads.encoder,
            params.src_embed.row(pair.source[i] as usize),
            h_prev,
            &trace.enc_acts[i],
            &d_enc[i],
            &mut dx,
            &mut dh_prev,
        );
        add_assign(grads.src_embed.row_mut(pair.source[i] as usize), &dx);
        carried = dh_prev;
    }
}

fn validate_batch(model: &Model, batch: &[PairIds]) -> Result<usize, NmtError> {
    if batch.is_empty() {
        return Err(NmtError::EmptyBatch);
    }
    let mut tokens = 0;
    for pair in batch {
        if pair.source.is_empty() || pair.target.is_empty() {
            return Err(NmtError::EmptySentence);
        }
        check_ids(&pair.source, model.config.src_vocab_size)?;
        check_ids(&pair.target, model.config.tgt_vocab_size)?;
        tokens += pair.target.len() + 1;
    }
    Ok(tokens)
}

/// Mean per-token teacher-forced negative log-likelihood over a batch.
pub fn forward_loss(model: &Model, batch: &[PairIds]) -> Result<f64, NmtError> {
    let tokens = validate_batch(model, batch)?;
    let mut sum = 0.0;
    for pair in batch {
        sum += run_sentence(&model.params, model.config.hidden_dim, pair).sum_loss;
    }
    Ok(sum / tokens as f64)
}

/// Loss and exact gradients of the mean per-token loss for a batch.
pub fn backward(model: &Model, batch: &[PairIds]) -> Result<Backward, NmtError> {
    let tokens = validate_batch(model, batch)?;
    let dh = model.config.hidden_dim;
    let mut grads = Params::zeros(&model.config);
    let mut sum = 0.0;
    for pair in batch {
        let trace = run_sentence(&model.params, dh, pair);
        sum += trace.sum_loss;
        backward_sentence(&model.params, dh, pair, &trace, &mut grads);
    }
    let scale = 1.0 / tokens as f64;
    for t in grads.tensors_mut() {
        for v in t.data_mut() {
            *v *= scale;
        }
    }
    Ok(Backward {
        loss: sum * scale,
        token_count: tokens,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmt::model::{init_model, ModelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_config(seed: u64) -> ModelConfig {
        ModelConfig {
            embed_dim: 3,
            hidden_dim: 4,
            src_vocab_size: 7,
            tgt_vocab_size: 8,
            init_seed: seed,
        }
    }

    fn tiny_batch() -> Vec<PairIds> {
        vec![
            PairIds {
                source: vec![4, 5, 6],
                target: vec![4, 7],
            },
            PairIds {
                source: vec![6, 4],
                target: vec![5, 6, 4],
            },
        ]
    }

    #[test]
    fn zero_params_give_uniform_loss() {
        let cfg = tiny_config(1);
        let model = Model {
            config: cfg,
            params: Params::zeros(&cfg),
        };
        let loss = forward_loss(&model, &tiny_batch()).unwrap();
        let expected = fmath::ln(cfg.tgt_vocab_size as f64);
        assert!((loss - expected).abs() < 1e-12, "{loss} vs {expected}");
    }

    #[test]
    fn encode_yields_one_state_per_token() {
        let model = init_model(&tiny_config(2));
        let states = encode(&model, &[1, 2, 3, 4]).unwrap();
        assert_eq!(states.len(), 4);
        assert!(states.iter().all(|s| s.len() == 4));
        // GRU states are convex mixes of tanh values, hence within (-1, 1).
        assert!(states
            .iter()
            .flatten()
            .all(|&v| v.is_finite() && v.abs() < 1.0));
    }

    #[test]
    fn encode_rejects_out_of_range_id() {
        let model = init_model(&tiny_config(2));
        let err = encode(&model, &[7]).unwrap_err();
        assert!(matches!(
            err,
            NmtError::TokenIdOutOfRange { id: 7, vocab_size: 7 }
        ));
    }

    #[test]
    fn attention_weights_normalize() {
        let model = init_model(&tiny_config(3));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..6 {
            let states: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let query: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (context, weights) = attention_step(&model.params.attention, &query, &states);
            assert_eq!(weights.len(), n);
            assert_eq!(context.len(), 4);
            assert!(weights.iter().all(|&w| w >= 0.0));
            let sum: f64 = weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_state_attention_is_identity() {
        let model = init_model(&tiny_config(4));
        let state = vec![0.3, -0.2, 0.5, 0.1];
        let (context, weights) =
            attention_step(&model.params.attention, &[0.0; 4], std::slice::from_ref(&state));
        assert_eq!(weights, vec![1.0]);
        assert_eq!(context, state);
    }

    #[test]
    fn backward_loss_matches_forward_loss() {
        let model = init_model(&tiny_config(5));
        let batch = tiny_batch();
        let fwd = forward_loss(&model, &batch).unwrap();
        let back = backward(&model, &batch).unwrap();
        assert_eq!(back.loss, fwd);
        assert_eq!(back.token_count, 3 + 4);
    }

    #[test]
    fn empty_batch_and_empty_sentence_rejected() {
        let model = init_model(&tiny_config(6));
        assert!(matches!(
            forward_loss(&model, &[]),
            Err(NmtError::EmptyBatch)
        ));
        let bad = vec![PairIds {
            source: vec![],
            target: vec![4],
        }];
        assert!(matches!(
            forward_loss(&model, &bad),
            Err(NmtError::EmptySentence)
        ));
    }

    /// Central-difference check of every coordinate of every gradient
    /// tensor on a tiny model.
    #[test]
    fn gradients_match_finite_differences() {
        let model = init_model(&tiny_config(42));
        let batch = tiny_batch();
        let analytic = backward(&model, &batch).unwrap().grads;
        let h = 1e-5;
        for ti in 0..crate::nmt::model::NUM_TENSORS {
            let coords = analytic.tensors()[ti].data().len();
            for ci in 0..coords {
                let mut plus = model.clone();
                plus.params.tensors_mut()[ti].data_mut()[ci] += h;
                let mut minus = model.clone();
                minus.params.tensors_mut()[ti].data_mut()[ci] -= h;
                let fd = (forward_loss(&plus, &batch).unwrap()
                    - forward_loss(&minus, &batch).unwrap())
                    / (2.0 * h);
                let g = analytic.tensors()[ti].data()[ci];
                let diff = (g - fd).abs();
                let rel = diff / g.abs().max(fd.abs()).max(1e-8);
                assert!(
                    diff <= 1e-9 || rel <= 1e-3,
                    "tensor {} coord {ci}: analytic {g} vs fd {fd}",
                    Params::TENSOR_NAMES[ti]
                );
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let model = init_model(&tiny_config(11));
        let batch = tiny_batch();
        let a = forward_loss(&model, &batch).unwrap();
        let b = forward_loss(&model, &batch).unwrap();
        assert_eq!(a, b);
    }
}
