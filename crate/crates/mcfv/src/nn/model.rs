//! Dense MLP inference with Z-score input normalization.
//!
//! Two execution modes share one accumulation kernel: fp32 keeps every
//! value single precision; mixed-fp16 stores weights and activations as
//! IEEE binary16 (cached as their exact f32 expansions for speed), rounds
//! activations between layers and evaluates GeLU through the fp16 table,
//! while matrix products always accumulate in fp32.

use super::gelu::{build_gelu_table, gelu_exact_f32, CoeffPrecision, GeluTable};
use crate::{Error, Result};
use half::f16;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Fp32,
    MixedFp16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Exact,
    Table,
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major rows×cols. For mixed models this is the exact f32
    /// expansion of the f16 truth.
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
    /// Binary16 truth, empty in fp32 mode.
    pub weights_f16: Vec<f16>,
    pub biases_f16: Vec<f16>,
}

#[derive(Debug, Clone)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Layer>,
    pub norm_mean: Vec<f32>,
    pub norm_std: Vec<f32>,
    pub precision: Precision,
    pub activation: Activation,
    table: GeluTable,
}

/// How many samples a weight row is reused for before moving to the next
/// row; bounds the working set of activations.
const BATCH_BLOCK: usize = 32;

impl MlpModel {
    pub fn new(
        layer_dims: Vec<usize>,
        weights: Vec<Vec<f32>>,
        biases: Vec<Vec<f32>>,
        norm_mean: Vec<f32>,
        norm_std: Vec<f32>,
        precision: Precision,
        activation: Activation,
    ) -> Result<MlpModel> {
        if layer_dims.len() < 2 {
            return Err(Error::Model("need at least input and output dims".into()));
        }
        let n_layers = layer_dims.len() - 1;
        if weights.len() != n_layers || biases.len() != n_layers {
            return Err(Error::Model(format!(
                "expected {n_layers} weight/bias sets, got {}/{}",
                weights.len(),
                biases.len()
            )));
        }
        if norm_mean.len() != layer_dims[0] || norm_std.len() != layer_dims[0] {
            return Err(Error::Model("norm stats must match the input width".into()));
        }
        if norm_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Model("norm stddevs must be strictly positive".into()));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (cols, rows) = (layer_dims[l], layer_dims[l + 1]);
            if weights[l].len() != rows * cols || biases[l].len() != rows {
                return Err(Error::Model(format!(
                    "layer {l}: weight shape {}x{} inconsistent with payload",
                    rows, cols
                )));
            }
            let mut layer = Layer {
                rows,
                cols,
                weights: weights[l].clone(),
                biases: biases[l].clone(),
                weights_f16: Vec::new(),
                biases_f16: Vec::new(),
            };
            if precision == Precision::MixedFp16 {
                layer.weights_f16 = layer.weights.iter().map(|&w| f16::from_f32(w)).collect();
                layer.biases_f16 = layer.biases.iter().map(|&b| f16::from_f32(b)).collect();
                layer.weights = layer.weights_f16.iter().map(|w| w.to_f32()).collect();
                layer.biases = layer.biases_f16.iter().map(|b| b.to_f32()).collect();
            }
            layers.push(layer);
        }
        let table = build_gelu_table(match precision {
            Precision::Fp32 => CoeffPrecision::Fp32,
            Precision::MixedFp16 => CoeffPrecision::Fp16,
        });
        Ok(MlpModel {
            layer_dims,
            layers,
            norm_mean,
            norm_std,
            precision,
            activation,
            table,
        })
    }

    /// Seeded random model: uniform weights with variance 1/fan_in per
    /// layer, random normalization stats.
    pub fn random(
        layer_dims: &[usize],
        seed: u64,
        precision: Precision,
        activation: Activation,
    ) -> Result<MlpModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_dims.len() - 1 {
            let (cols, rows) = (layer_dims[l], layer_dims[l + 1]);
            let s = (3.0 / cols as f64).sqrt() as f32;
            weights.push((0..rows * cols).map(|_| rng.gen_range(-s..s)).collect());
            biases.push((0..rows).map(|_| rng.gen_range(-0.1..0.1f32)).collect());
        }
        let norm_mean = (0..layer_dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm_std = (0..layer_dims[0]).map(|_| rng.gen_range(0.5..2.0)).collect();
        MlpModel::new(
            layer_dims.to_vec(),
            weights,
            biases,
            norm_mean,
            norm_std,
            precision,
            activation,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    /// Effective FLOPs per inferred sample: multiply + add per weight.
    pub fn flops_per_sample(&self) -> u64 {
        self.layers.iter().map(|l| 2 * (l.rows * l.cols) as u64).sum()
    }

    /// Z-score normalization, always fp32.
    pub fn normalize(&self, sample: &[f32]) -> Vec<f32> {
        sample
            .iter()
            .zip(self.norm_mean.iter().zip(&self.norm_std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// Flat row-major batch in, flat row-major batch out.
    pub fn infer(&self, inputs: &[f32]) -> Result<Vec<f32>> {
        let d0 = self.input_dim();
        if d0 == 0 || inputs.len() % d0 != 0 {
            return Err(Error::DimensionMismatch {
                expected: d0,
                got: inputs.len(),
            });
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite input".into()));
        }
        let n_samples = inputs.len() / d0;
        let d_out = self.output_dim();
        let mut outputs = vec![0.0f32; n_samples * d_out];

        for (block_id, block) in inputs.chunks(BATCH_BLOCK * d0).enumerate() {
            let bs = block.len() / d0;
            // Normalize, then round activations to fp16 in mixed mode.
            let mut act: Vec<f32> = Vec::with_capacity(bs * d0);
            for sample in block.chunks(d0) {
                let mut z = self.normalize(sample);
                if self.precision == Precision::MixedFp16 {
                    for v in &mut z {
                        *v = f16::from_f32(*v).to_f32();
                    }
                }
                act.extend_from_slice(&z);
            }

            for (li, layer) in self.layers.iter().enumerate() {
                let last = li + 1 == self.layers.len();
                let mut next = vec![0.0f32; bs * layer.rows];
                for r in 0..layer.rows {
                    let w_row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                    for s in 0..bs {
                        let x = &act[s * layer.cols..(s + 1) * layer.cols];
                        let mut y = dot_f32(w_row, x) + layer.biases[r];
                        if !last {
                            y = self.activate(y);
                        } else if self.precision == Precision::MixedFp16 {
                            y = f16::from_f32(y).to_f32();
                        }
                        next[s * layer.rows + r] = y;
                    }
                }
                act = next;
            }
            let base = block_id * BATCH_BLOCK * d_out;
            outputs[base..base + bs * d_out].copy_from_slice(&act);
        }
        Ok(outputs)
    }

    fn activate(&self, y: f32) -> f32 {
        match (self.precision, self.activation) {
            (Precision::Fp32, Activation::Exact) => gelu_exact_f32(y),
            (Precision::Fp32, Activation::Table) => self.table.eval_f32(y),
            (Precision::MixedFp16, Activation::Exact) => {
                f16::from_f32(gelu_exact_f32(f16::from_f32(y).to_f32())).to_f32()
            }
            (Precision::MixedFp16, Activation::Table) => {
                self.table.eval_f16(f16::from_f32(y)).to_f32()
            }
        }
    }
}

/// Fixed-order dot product: four independent accumulators over chunks of
/// four, then a deterministic final reduction. Identical for every batch
/// composition and precision mode.
fn dot_f32(w: &[f32], x: &[f32]) -> f32 {
    let mut acc = [0.0f32; 4];
    let chunks = w.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += w[i] * x[i];
        acc[1] += w[i + 1] * x[i + 1];
        acc[2] += w[i + 2] * x[i + 2];
        acc[3] += w[i + 3] * x[i + 3];
    }
    let mut tail = 0.0f32;
    for i in 4 * chunks..w.len() {
        tail += w[i] * x[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Per-sample relative error of `test` against `reference` (both flat
/// batches of `d_out`-wide outputs): each component's deviation is scaled
/// by the sample's max-norm. Returns (max, mean).
pub fn relative_output_error(reference: &[f32], test: &[f32], d_out: usize) -> (f64, f64) {
    assert_eq!(reference.len(), test.len());
    assert!(d_out > 0 && reference.len() % d_out == 0);
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (r, t) in reference.chunks(d_out).zip(test.chunks(d_out)) {
        let denom = r
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs() as f64))
            .max(1e-12);
        for (ri, ti) in r.iter().zip(t) {
            let e = (*ri as f64 - *ti as f64).abs() / denom;
            max = max.max(e);
            sum += e;
            count += 1;
        }
    }
    (max, sum / count as f64)
}
