//! MLP inference: Z-score normalization, exact and tabulated GeLU, fp32
//! and mixed-fp16 execution, and the binary model format.

mod format;
mod gelu;
mod model;

pub use format::{load_model, save_model};
pub use gelu::{
    build_gelu_table, gelu_exact, gelu_exact_f32, CoeffPrecision, GeluTable, GELU_HI,
    GELU_INTERVALS, GELU_LO, GELU_STEP,
};
pub use model::{relative_output_error, Activation, Layer, MlpModel, Precision};

use crate::fvm::CellSource;
use crate::Result;

/// Adapts an MLP into a per-cell transport source: the cell scalar is
/// broadcast across the model's input features and output feature 0 is
/// taken as the source density.
pub struct ScalarSourceModel(pub MlpModel);

impl CellSource for ScalarSourceModel {
    fn eval(&self, state: &[f64]) -> Result<(Vec<f64>, u64)> {
        let d0 = self.0.input_dim();
        let d_out = self.0.output_dim();
        let mut inputs = Vec::with_capacity(state.len() * d0);
        for &psi in state {
            inputs.extend(std::iter::repeat(psi as f32).take(d0));
        }
        let out = self.0.infer(&inputs)?;
        let source = out.chunks(d_out).map(|c| c[0] as f64).collect();
        Ok((source, state.len() as u64 * self.0.flops_per_sample()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvm::CellSource;

    #[test]
    fn scalar_source_shapes_and_flops() {
        let m = MlpModel::random(&[4, 8, 2], 77, Precision::Fp32, Activation::Exact).unwrap();
        let per_sample = m.flops_per_sample();
        let src = ScalarSourceModel(m);
        let (s, flops) = src.eval(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(flops, 3 * per_sample);
    }
}
