//! Exact and tabulated GeLU.
//!
//! The reference is the tanh form 0.5x(1+tanh(√(2/π)(x+0.044715x³)))
//! evaluated in double precision. The table covers [-3, 3] in 600
//! intervals of 0.01, each carrying a quadratic fitted through the exact
//! values at the interval's left end, midpoint and right end; below -3
//! the function is clamped to 0, above +3 to x.

use half::f16;

pub const GELU_LO: f64 = -3.0;
pub const GELU_HI: f64 = 3.0;
pub const GELU_STEP: f64 = 0.01;
pub const GELU_INTERVALS: usize = 600;

pub fn gelu_exact(x: f64) -> f64 {
    let k = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (k * (x + 0.044715 * x * x * x)).tanh())
}

/// Single-precision evaluation of the same tanh form, for the all-fp32
/// pipeline.
pub fn gelu_exact_f32(x: f32) -> f32 {
    let k = (2.0f32 / std::f32::consts::PI).sqrt();
    0.5 * x * (1.0 + (k * (x + 0.044715 * x * x * x)).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffPrecision {
    Fp32,
    Fp16,
}

#[derive(Debug, Clone)]
pub struct GeluTable {
    pub precision: CoeffPrecision,
    /// Per-interval (a, b, c) for a·u² + b·u + c, u = x - left knot. For
    /// fp16 tables these are the exact f32 expansions of the rounded f16
    /// coefficients.
    coeffs: Vec<[f32; 3]>,
}

pub fn build_gelu_table(precision: CoeffPrecision) -> GeluTable {
    let h = GELU_STEP;
    let mut coeffs = Vec::with_capacity(GELU_INTERVALS);
    for k in 0..GELU_INTERVALS {
        let x0 = GELU_LO + k as f64 * h;
        let y0 = gelu_exact(x0);
        let ym = gelu_exact(x0 + 0.5 * h);
        let y1 = gelu_exact(x0 + h);
        let c = y0;
        let b = (4.0 * ym - 3.0 * y0 - y1) / h;
        let a = 2.0 * (y0 + y1 - 2.0 * ym) / (h * h);
        let round = |v: f64| match precision {
            CoeffPrecision::Fp32 => v as f32,
            CoeffPrecision::Fp16 => f16::from_f64(v).to_f32(),
        };
        coeffs.push([round(a), round(b), round(c)]);
    }
    GeluTable { precision, coeffs }
}

impl GeluTable {
    pub fn n_intervals(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval_f32(&self, x: f32) -> f32 {
        let xd = x as f64;
        if xd < GELU_LO {
            return 0.0;
        }
        if xd > GELU_HI {
            return x;
        }
        let k = (((xd - GELU_LO) / GELU_STEP) as usize).min(GELU_INTERVALS - 1);
        let u = (xd - (GELU_LO + k as f64 * GELU_STEP)) as f32;
        let [a, b, c] = self.coeffs[k];
        (a * u + b) * u + c
    }

    pub fn eval_f16(&self, x: f16) -> f16 {
        f16::from_f32(self.eval_f32(x.to_f32()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_reference_points() {
        assert_eq!(gelu_exact(0.0), 0.0);
        assert!((gelu_exact(1.0) - 0.841192).abs() <= 1e-6);
        // gelu(x) - gelu(-x) = x for the tanh form.
        for i in 0..100 {
            let x = -5.0 + 0.1 * i as f64;
            assert!((gelu_exact(x) - gelu_exact(-x) - x).abs() <= 1e-14);
        }
    }

    #[test]
    fn knots_match_exact_up_to_rounding() {
        // Worst case is one half-ulp from rounding the constant
        // coefficient plus one from the f32 evaluation, about 2.4e-7 for
        // values near gelu(3) ≈ 3.
        let t = build_gelu_table(CoeffPrecision::Fp32);
        for k in 0..=GELU_INTERVALS {
            let x = (GELU_LO + k as f64 * GELU_STEP) as f32;
            let err = (t.eval_f32(x) as f64 - gelu_exact(x as f64)).abs();
            assert!(err <= 2.5e-7, "knot {k}: err {err}");
        }
    }

    #[test]
    fn fp32_table_error_bound_in_range() {
        let t = build_gelu_table(CoeffPrecision::Fp32);
        let mut max_err = 0.0f64;
        for i in 0..100_000 {
            let x = GELU_LO + 6.0 * (i as f64 + 0.5) / 100_000.0;
            max_err = max_err.max((t.eval_f32(x as f32) as f64 - gelu_exact(x)).abs());
        }
        assert!(max_err <= 1e-5, "max err {max_err}");
    }

    #[test]
    fn clamp_rules() {
        let t = build_gelu_table(CoeffPrecision::Fp32);
        assert_eq!(t.eval_f32(-3.0001), 0.0);
        assert_eq!(t.eval_f32(3.0001), 3.0001);
        assert_eq!(t.eval_f32(-10.0), 0.0);
        assert_eq!(t.eval_f32(25.0), 25.0);
        // Clamp-region error peaks just below -3; the tanh form gives
        // |gelu(-3)| ≈ 3.64e-3 (the x·Φ(x) form would give 4.05e-3).
        let err = gelu_exact(-3.0).abs();
        assert!(err <= 5e-3 && err >= 3e-3);
    }

    #[test]
    fn fp16_table_coarser_but_sane() {
        let t = build_gelu_table(CoeffPrecision::Fp16);
        assert_eq!(t.n_intervals(), GELU_INTERVALS);
        let mut max_err = 0.0f64;
        for i in 0..10_000 {
            let x = GELU_LO + 6.0 * (i as f64 + 0.5) / 10_000.0;
            let y = t.eval_f16(f16::from_f64(x)).to_f64();
            max_err = max_err.max((y - gelu_exact(x)).abs());
        }
        assert!(max_err <= 5e-3, "max err {max_err}");
    }
}
