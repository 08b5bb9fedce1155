//! Training: seeded minibatch shuffling, Adam with bias correction,
//! cosine-annealed learning rate, global-norm gradient clipping, periodic
//! dev-set BLEU evaluation, and best-checkpoint selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, ParallelPair, Vocab};
use crate::fmath;
use crate::metrics::{bleu, Smoothing};

use super::beam::{DecodeConfig, Translator};
use super::forward::{backward, PairIds};
use super::model::{Model, Params};
use super::NmtError;

/// Optimizer and schedule settings. Defaults follow the training recipe
/// this crate reproduces; `epochs` and `batch_size` are the usual knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_init: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub grad_clip_norm: f64,
    /// Evaluate dev BLEU every this many epochs. The final epoch is always
    /// evaluated so checkpoint selection is well-defined.
    pub eval_every: usize,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 50,
            lr_init: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            grad_clip_norm: 5.0,
            eval_every: 1,
            shuffle_seed: 0,
        }
    }
}

/// One dev evaluation: the 1-based epoch it followed and the BLEU score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub epoch: usize,
    pub bleu: f64,
}

/// What training did: per-epoch mean loss, every dev evaluation, and which
/// evaluation's checkpoint was returned (highest BLEU, earliest on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub evals: Vec<EvalPoint>,
    pub selected: usize,
}

/// Cosine annealing from `lr_init` at step 0 toward 0 at step `total`.
pub fn cosine_lr(lr_init: f64, step: usize, total: usize) -> f64 {
    debug_assert!(step < total);
    lr_init * 0.5 * (1.0 + fmath::cos(std::f64::consts::PI * step as f64 / total as f64))
}

/// Scales gradients in place so their global L2 norm is at most `max_norm`.
fn clip_global_norm(grads: &mut Params, max_norm: f64) {
    let mut sq = 0.0;
    for t in grads.tensors() {
        for &v in t.data() {
            sq += v * v;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for t in grads.tensors_mut() {
            for v in t.data_mut() {
                *v *= scale;
            }
        }
    }
}

struct Adam {
    m: Params,
    v: Params,
    beta1: f64,
    beta2: f64,
    eps: f64,
    beta1_pow: f64,
    beta2_pow: f64,
}

impl Adam {
    fn new(model: &Model, cfg: &TrainConfig) -> Self {
        Adam {
            m: Params::zeros(&model.config),
            v: Params::zeros(&model.config),
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        }
    }

    fn step(&mut self, params: &mut Params, grads: &Params, lr: f64) {
        self.beta1_pow *= self.beta1;
        self.beta2_pow *= self.beta2;
        let bc1 = 1.0 - self.beta1_pow;
        let bc2 = 1.0 - self.beta2_pow;
        let m_t = self.m.tensors_mut();
        let v_t = self.v.tensors_mut();
        let p_t = params.tensors_mut();
        let g_t = grads.tensors();
        for (((m, v), p), g) in m_t.into_iter().zip(v_t).zip(p_t).zip(g_t) {
            let md = m.data_mut();
            let vd = v.data_mut();
            let pd = p.data_mut();
            let gd = g.data();
            for i in 0..gd.len() {
                let grad = gd[i];
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * grad;
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * grad * grad;
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                pd[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

fn encode_pairs(pairs: &[ParallelPair], src: &Vocab, tgt: &Vocab) -> Vec<PairIds> {
    pairs
        .iter()
        .map(|p| PairIds {
            source: src.encode(&p.source),
            target: tgt.encode(&p.target),
        })
        .collect()
}

fn dev_bleu(
    translator: &Translator,
    dev: &[ParallelPair],
    decode: &DecodeConfig,
) -> f64 {
    let hyps = Corpus::new(
        dev.iter()
            .map(|p| translator.translate(&p.source, decode))
            .collect(),
    );
    let refs = Corpus::new(dev.iter().map(|p| p.target.clone()).collect());
    // Counts match by construction and dev is non-empty.
    bleu(&hyps, &refs, Smoothing::AddOne).expect("aligned dev corpora").bleu
}

/// Trains `model` on `train_pairs`, evaluating on `dev_pairs`, and returns
/// the checkpoint with the best dev BLEU together with the full report.
///
/// Each epoch visits every pair once in a seeded-shuffled order, in
/// minibatches of `batch_size` (the last batch may be short). The learning
/// rate follows `cosine_lr` over the total step count. Gradients are
/// clipped to `grad_clip_norm` before each Adam update. The run is a pure
/// function of (model, data, configs): re-running it reproduces every
/// parameter byte and every reported number.
pub fn train(
    model: Model,
    train_pairs: &[ParallelPair],
    dev_pairs: &[ParallelPair],
    src_vocab: &Vocab,
    tgt_vocab: &Vocab,
    train_config: &TrainConfig,
    decode_config: &DecodeConfig,
) -> Result<(Model, TrainReport), NmtError> {
    assert!(train_config.batch_size >= 1, "batch_size must be >= 1");
    assert!(train_config.epochs >= 1, "epochs must be >= 1");
    assert!(train_config.eval_every >= 1, "eval_every must be >= 1");
    assert!(
        0.0 < train_config.adam_beta1 && train_config.adam_beta1 < 1.0,
        "adam_beta1 must lie in (0, 1)"
    );
    assert!(
        0.0 < train_config.adam_beta2 && train_config.adam_beta2 < 1.0,
        "adam_beta2 must lie in (0, 1)"
    );
    assert!(train_config.adam_eps > 0.0, "adam_eps must be positive");
    assert!(
        train_config.grad_clip_norm > 0.0,
        "grad_clip_norm must be positive"
    );
    if train_pairs.is_empty() {
        return Err(NmtError::EmptyTrainingSet);
    }
    if dev_pairs.is_empty() {
        return Err(NmtError::EmptyDevSet);
    }

    let train_ids = encode_pairs(train_pairs, src_vocab, tgt_vocab);
    let batches_per_epoch = train_ids.len().div_ceil(train_config.batch_size);
    let total_steps = train_config.epochs * batches_per_epoch;

    // The evaluation path needs a Translator; keep the evolving model
    // inside one and mutate its params through it.
    let mut translator = Translator {
        model,
        src_vocab: src_vocab.clone(),
        tgt_vocab: tgt_vocab.clone(),
    };
    let mut adam = Adam::new(&translator.model, train_config);
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.shuffle_seed);
    let mut order: Vec<usize> = (0..train_ids.len()).collect();

    let mut epoch_losses = Vec::with_capacity(train_config.epochs);
    let mut evals: Vec<EvalPoint> = Vec::new();
    let mut best: Option<(usize, Params)> = None;
    let mut step = 0usize;

    for epoch in 0..train_config.epochs {
        // Fisher-Yates with the run's own RNG stream.
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut loss_sum = 0.0;
        let mut token_sum = 0usize;
        for chunk in order.chunks(train_config.batch_size) {
            let batch: Vec<PairIds> = chunk.iter().map(|&i| train_ids[i].clone()).collect();
            let out = backward(&translator.model, &batch)?;
            if !out.loss.is_finite() {
                return Err(NmtError::NonFiniteLoss {
                    epoch: epoch + 1,
                    step: step + 1,
                });
            }
            let mut grads = out.grads;
            clip_global_norm(&mut grads, train_config.grad_clip_norm);
            let lr = cosine_lr(train_config.lr_init, step, total_steps);
            adam.step(&mut translator.model.params, &grads, lr);
            loss_sum += out.loss * out.token_count as f64;
            token_sum += out.token_count;
            step += 1;
        }
        epoch_losses.push(loss_sum / token_sum as f64);

        let last_epoch = epoch + 1 == train_config.epochs;
        if (epoch + 1) % train_config.eval_every == 0 || last_epoch {
            let score = dev_bleu(&translator, dev_pairs, decode_config);
            evals.push(EvalPoint {
                epoch: epoch + 1,
                bleu: score,
            });
            let improved = match &best {
                None => true,
                Some((idx, _)) => score > evals[*idx].bleu,
            };
            if improved {
                best = Some((evals.len() - 1, translator.model.params.clone()));
            }
        }
    }

    let (selected, params) = best.expect("final epoch is always evaluated");
    let config = translator.model.config;
    Ok((
        Model { config, params },
        TrainReport {
            epoch_losses,
            evals,
            selected,
        },
    ))
}
