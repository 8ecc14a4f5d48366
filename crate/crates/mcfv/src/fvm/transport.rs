//! Implicit scalar advection-diffusion-reaction time stepping.
//!
//! Each step assembles [V/Δt + div(φ) - ∇·Γ∇], adds an optional
//! NN-evaluated source explicitly, refreshes the static block-CSR map and
//! solves: PCG for the symmetric pure-diffusion case, hybrid Gauss-Seidel
//! fixed point otherwise. Wall time is split into the construction /
//! solving / DNN / other phases.

use super::assemble::{assemble_divergence, assemble_laplacian, uniform_velocity_flux, DivScheme};
use super::field::ScalarField;
use super::schedule::FaceSchedule;
use crate::mesh::{MeshGeometry, UnstructuredMesh};
use crate::sparse::{
    build_block_map, gauss_seidel_sweep_dir, gs_sweep_flops, pcg_solve, refresh_values,
    residual_norm, spmv_flops, DiagonalPrecond, SweepDirection,
};
use crate::{Error, Result};
use std::time::Instant;

/// Per-cell source density s(Ψ); returns the densities and the FLOPs
/// spent. Implemented by nn models and by test stubs.
pub trait CellSource {
    fn eval(&self, state: &[f64]) -> Result<(Vec<f64>, u64)>;
}

#[derive(Debug, Clone)]
pub struct TransportConfig {
    pub dt: f64,
    pub steps: usize,
    pub velocity: [f64; 3],
    pub diffusivity: f64,
    pub scheme: DivScheme,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            dt: 1e-3,
            steps: 1,
            velocity: [0.0; 3],
            diffusivity: 1e-3,
            scheme: DivScheme::Upwind,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// One row of the per-phase breakdown report.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: usize,
    pub construction_s: f64,
    pub solving_s: f64,
    pub dnn_s: f64,
    pub other_s: f64,
    pub flops: u64,
}

pub fn advance_scalar_transport(
    mesh: &UnstructuredMesh,
    geom: &MeshGeometry,
    schedule: &FaceSchedule,
    field: &ScalarField,
    cfg: &TransportConfig,
    source: Option<&dyn CellSource>,
) -> Result<(ScalarField, Vec<StepReport>)> {
    field.validate(mesh)?;
    if !(cfg.dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {}", cfg.dt)));
    }
    let n = mesh.n_cells;
    let gamma = vec![cfg.diffusivity; mesh.n_faces()];
    let flux = uniform_velocity_flux(geom, cfg.velocity);
    let convecting = cfg.velocity != [0.0; 3];

    let mut state = field.clone();
    let mut reports = Vec::with_capacity(cfg.steps);
    // LDU sparsity is mesh-fixed, so the scatter map is built once and the
    // block values refreshed per step.
    let (mut blocked, map) =
        build_block_map(&crate::sparse::LduMatrix::zeros_like(mesh), &schedule.ranges)?;

    for step in 0..cfg.steps {
        let t0 = Instant::now();
        let mut flops: u64 = 0;

        // Construction: operators + time derivative.
        let (lap, lap_rhs) = assemble_laplacian(mesh, geom, &gamma, &state.bcs, schedule)?;
        let mut sys = lap;
        let mut rhs = lap_rhs;
        if convecting {
            let (div, div_rhs) =
                assemble_divergence(mesh, geom, &flux, cfg.scheme, &state.bcs, schedule)?;
            for f in 0..sys.lower.len() {
                sys.lower[f] += div.lower[f];
                sys.upper[f] += div.upper[f];
            }
            for c in 0..n {
                sys.diag[c] += div.diag[c];
                rhs[c] += div_rhs[c];
            }
        }
        for c in 0..n {
            let vdt = geom.cell_volumes[c] / cfg.dt;
            sys.diag[c] += vdt;
            rhs[c] += vdt * state.values[c];
        }
        refresh_values(&sys, &map, &mut blocked)?;
        let construction_s = t0.elapsed().as_secs_f64();

        // DNN: explicit source density, integrated over the cell volume.
        let t1 = Instant::now();
        if let Some(model) = source {
            let (s, fl) = model.eval(&state.values)?;
            if s.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.len() });
            }
            for c in 0..n {
                rhs[c] += s[c] * geom.cell_volumes[c];
            }
            flops += fl;
        }
        let dnn_s = t1.elapsed().as_secs_f64();

        // Solving.
        let t2 = Instant::now();
        if !convecting {
            let res = pcg_solve(&blocked, &rhs, &state.values, cfg.tol, cfg.max_iter, &DiagonalPrecond)?;
            if !res.converged {
                return Err(Error::SolverDiverged(res.iterations));
            }
            flops += res.flops;
            state.values = res.x;
        } else {
            let b_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            flops += 2 * n as u64;
            let threshold = if b_norm > 0.0 { cfg.tol * b_norm } else { cfg.tol };
            let mut converged = false;
            for sweep in 1..=cfg.max_iter {
                gauss_seidel_sweep_dir(&blocked, &rhs, &mut state.values, 1, SweepDirection::Symmetric)?;
                flops += 2 * gs_sweep_flops(&blocked);
                let r = residual_norm(&blocked, &state.values, &rhs)?;
                flops += spmv_flops(&blocked) + 3 * n as u64;
                if !r.is_finite() {
                    return Err(Error::SolverDiverged(sweep));
                }
                if r <= threshold {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::SolverDiverged(cfg.max_iter));
            }
        }
        let solving_s = t2.elapsed().as_secs_f64();

        let total = t0.elapsed().as_secs_f64();
        reports.push(StepReport {
            step,
            construction_s,
            solving_s,
            dnn_s,
            other_s: (total - construction_s - solving_s - dnn_s).max(0.0),
            flops,
        });
    }
    Ok((state, reports))
}
