//! Preconditioned conjugate gradient on block-CSR matrices.

use super::kernels::{
    gauss_seidel_sweep_dir, gs_sweep_flops, spmv, spmv_flops, SweepDirection,
};
use super::BlockCsrMatrix;
use crate::registry::Registry;
use crate::{Error, Result};

pub trait Preconditioner: Send + Sync {
    fn name(&self) -> &'static str;
    /// z = M^-1 r.
    fn apply(&self, mat: &BlockCsrMatrix, r: &[f64], z: &mut [f64]) -> Result<()>;
    fn flops_per_apply(&self, mat: &BlockCsrMatrix) -> u64;
}

/// No preconditioning: z = r.
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn name(&self) -> &'static str {
        "none"
    }
    fn apply(&self, _mat: &BlockCsrMatrix, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
    fn flops_per_apply(&self, _mat: &BlockCsrMatrix) -> u64 {
        0
    }
}

/// Jacobi: z = r / diag(A).
pub struct DiagonalPrecond;

impl Preconditioner for DiagonalPrecond {
    fn name(&self) -> &'static str {
        "diagonal"
    }
    fn apply(&self, mat: &BlockCsrMatrix, r: &[f64], z: &mut [f64]) -> Result<()> {
        let diag = mat.diagonal();
        for (c, &d) in diag.iter().enumerate() {
            if d == 0.0 {
                return Err(Error::ZeroDiagonal(c));
            }
            z[c] = r[c] / d;
        }
        Ok(())
    }
    fn flops_per_apply(&self, mat: &BlockCsrMatrix) -> u64 {
        mat.n as u64
    }
}

/// k symmetric hybrid Gauss-Seidel sweeps from a zero initial guess.
pub struct GsPrecond {
    pub sweeps: usize,
}

impl Preconditioner for GsPrecond {
    fn name(&self) -> &'static str {
        "gs"
    }
    fn apply(&self, mat: &BlockCsrMatrix, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.fill(0.0);
        gauss_seidel_sweep_dir(mat, r, z, self.sweeps, SweepDirection::Symmetric)
    }
    fn flops_per_apply(&self, mat: &BlockCsrMatrix) -> u64 {
        2 * self.sweeps as u64 * gs_sweep_flops(mat)
    }
}

pub static PRECONDITIONERS: Registry<dyn Preconditioner> = Registry::new(
    "preconditioner",
    &[
        ("none", || Box::new(IdentityPrecond)),
        ("diagonal", || Box::new(DiagonalPrecond)),
        ("gs", || Box::new(GsPrecond { sweeps: 1 })),
    ],
);

/// Parse "none" | "diagonal" | "gs" | "gs:<k>".
pub fn parse_preconditioner(spec: &str) -> Result<Box<dyn Preconditioner>> {
    if let Some(k) = spec.strip_prefix("gs:") {
        let sweeps: usize = k
            .parse()
            .map_err(|_| Error::Config(format!("bad gs sweep count {k:?}")))?;
        if sweeps == 0 {
            return Err(Error::Config("gs sweep count must be >= 1".into()));
        }
        return Ok(Box::new(GsPrecond { sweeps }));
    }
    PRECONDITIONERS.create(spec)
}

#[derive(Debug, Clone)]
pub struct PcgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    /// Relative to ||b|| (absolute when b = 0).
    pub converged: bool,
    pub flops: u64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve A x = b for SPD A. Stops at ||b - A x|| / ||b|| <= tol, or at
/// `max_iter` with `converged = false` (not an error). Non-finite iterates
/// raise a divergence error.
pub fn pcg_solve(
    mat: &BlockCsrMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    precond: &dyn Preconditioner,
) -> Result<PcgResult> {
    let n = mat.n;
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len().min(x0.len()),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol must be > 0, got {tol}")));
    }
    let mut flops: u64 = 0;
    let b_norm = dot(b, b).sqrt();
    flops += 2 * n as u64;
    // Zero RHS: tolerance becomes absolute.
    let threshold = if b_norm > 0.0 { tol * b_norm } else { tol };

    let mut x = x0.to_vec();
    let ax = spmv(mat, &x)?;
    flops += spmv_flops(mat);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    flops += n as u64;
    let mut r_norm = dot(&r, &r).sqrt();
    flops += 2 * n as u64;
    if r_norm <= threshold {
        return Ok(PcgResult {
            x,
            iterations: 0,
            final_residual: r_norm,
            converged: true,
            flops,
        });
    }

    let mut z = vec![0.0; n];
    precond.apply(mat, &r, &mut z)?;
    flops += precond.flops_per_apply(mat);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    flops += 2 * n as u64;

    for it in 1..=max_iter {
        let ap = spmv(mat, &p)?;
        flops += spmv_flops(mat);
        let p_ap = dot(&p, &ap);
        flops += 2 * n as u64;
        let alpha = rz / p_ap;
        flops += 1;
        if !alpha.is_finite() {
            return Err(Error::SolverDiverged(it));
        }
        for c in 0..n {
            x[c] += alpha * p[c];
            r[c] -= alpha * ap[c];
        }
        flops += 4 * n as u64;
        r_norm = dot(&r, &r).sqrt();
        flops += 2 * n as u64;
        if !r_norm.is_finite() {
            return Err(Error::SolverDiverged(it));
        }
        if r_norm <= threshold {
            return Ok(PcgResult {
                x,
                iterations: it,
                final_residual: r_norm,
                converged: true,
                flops,
            });
        }
        precond.apply(mat, &r, &mut z)?;
        flops += precond.flops_per_apply(mat);
        let rz_new = dot(&r, &z);
        flops += 2 * n as u64;
        let beta = rz_new / rz;
        flops += 1;
        rz = rz_new;
        for c in 0..n {
            p[c] = z[c] + beta * p[c];
        }
        flops += 2 * n as u64;
    }
    Ok(PcgResult {
        x,
        iterations: max_iter,
        final_residual: r_norm,
        converged: false,
        flops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use crate::sparse::{build_block_map, refresh_values, LduMatrix};
    use rand::{Rng, SeedableRng};

    fn fv_laplacian(n: usize, t: usize) -> BlockCsrMatrix {
        let mesh = build_box_mesh(n, n, n, [1.0; 3]).unwrap();
        let mut ldu = LduMatrix::zeros_like(&mesh);
        for f in 0..ldu.lower.len() {
            ldu.lower[f] = -1.0;
            ldu.upper[f] = -1.0;
            ldu.diag[ldu.owner[f]] += 1.0;
            ldu.diag[ldu.neighbour[f]] += 1.0;
        }
        for d in &mut ldu.diag {
            *d += 0.5; // Dirichlet-like shift, makes it SPD
        }
        let nc = ldu.n_cells;
        let ranges: Vec<_> = (0..t).map(|i| (i * nc / t)..((i + 1) * nc / t)).collect();
        let (mut m, map) = build_block_map(&ldu, &ranges).unwrap();
        refresh_values(&ldu, &map, &mut m).unwrap();
        m
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let mesh = build_box_mesh(3, 3, 1, [1.0; 3]).unwrap();
        let mut ldu = LduMatrix::zeros_like(&mesh);
        ldu.diag.iter_mut().for_each(|d| *d = 1.0);
        let (mut m, map) = build_block_map(&ldu, &[0..9]).unwrap();
        refresh_values(&ldu, &map, &mut m).unwrap();
        let b: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
        let res = pcg_solve(&m, &b, &vec![0.0; 9], 1e-12, 50, &IdentityPrecond).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        for (xi, bi) in res.x.iter().zip(&b) {
            assert!((xi - bi).abs() <= 1e-12);
        }
    }

    #[test]
    fn laplacian_solution_verified_by_residual() {
        let m = fv_laplacian(8, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let b: Vec<f64> = (0..m.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let res = pcg_solve(&m, &b, &vec![0.0; m.n], 1e-10, 2000, &DiagonalPrecond).unwrap();
        assert!(res.converged);
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(super::super::residual_norm(&m, &res.x, &b).unwrap() <= 1e-10 * b_norm);
    }

    #[test]
    fn diagonal_precond_no_worse_than_none() {
        let m = fv_laplacian(8, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let b: Vec<f64> = (0..m.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let plain = pcg_solve(&m, &b, &vec![0.0; m.n], 1e-10, 5000, &IdentityPrecond).unwrap();
        let jacobi = pcg_solve(&m, &b, &vec![0.0; m.n], 1e-10, 5000, &DiagonalPrecond).unwrap();
        assert!(jacobi.iterations <= plain.iterations);
    }

    #[test]
    fn thread_count_independence() {
        let mut reference: Option<Vec<f64>> = None;
        for t in [1usize, 2, 4, 8] {
            let m = fv_laplacian(8, t);
            let b: Vec<f64> = (0..m.n).map(|i| ((i * 31 % 17) as f64) - 8.0).collect();
            let res = pcg_solve(&m, &b, &vec![0.0; m.n], 1e-12, 5000, &DiagonalPrecond).unwrap();
            assert!(res.converged);
            match &reference {
                None => reference = Some(res.x),
                Some(r) => {
                    let scale = r.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
                    for (a, b) in res.x.iter().zip(r) {
                        assert!((a - b).abs() <= 1e-10 * scale, "t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_rhs_uses_absolute_tolerance() {
        let m = fv_laplacian(4, 2);
        let res = pcg_solve(&m, &vec![0.0; m.n], &vec![0.0; m.n], 1e-12, 10, &IdentityPrecond)
            .unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn max_iter_flagged_not_error() {
        let m = fv_laplacian(8, 1);
        let b: Vec<f64> = (0..m.n).map(|i| i as f64).collect();
        let res = pcg_solve(&m, &b, &vec![0.0; m.n], 1e-14, 2, &IdentityPrecond).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 2);
    }

    #[test]
    fn gs_precond_parse() {
        assert_eq!(parse_preconditioner("gs:3").unwrap().name(), "gs");
        assert_eq!(parse_preconditioner("diagonal").unwrap().name(), "diagonal");
        assert!(parse_preconditioner("gs:0").is_err());
        assert!(parse_preconditioner("ilu").is_err());
    }
}
