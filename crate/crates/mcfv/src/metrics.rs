//! FLOP accounting and performance reporting: time-to-solution
//! (s/DoF/cycle), effective FLOP rate, and the per-step phase-breakdown
//! CSV shared with the simulate command.

use crate::fvm::StepReport;
use crate::{Error, Result};
use std::io::Write;

#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimes {
    pub dnn: f64,
    pub construction: f64,
    pub solving: f64,
    pub other: f64,
}

impl PhaseTimes {
    pub fn sum(&self) -> f64 {
        self.dnn + self.construction + self.solving + self.other
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// Wall time of one time step.
    pub loop_time_s: f64,
    /// Effective FLOPs per step (NN inference + sparse solve only).
    pub flops_total: u64,
    /// Cells × transported variables.
    pub dof: u64,
    /// Characteristic flow time advanced per loop, a configured scalar.
    pub flow_cycle: f64,
    pub phases: PhaseTimes,
}

impl RunReport {
    /// Phase times must account for the loop within a 5% slack for
    /// unattributed time.
    pub fn validate(&self) -> Result<()> {
        if self.phases.sum() > self.loop_time_s * 1.05 {
            return Err(Error::Config(format!(
                "phase times {:.3e}s exceed loop time {:.3e}s by more than 5%",
                self.phases.sum(),
                self.loop_time_s
            )));
        }
        Ok(())
    }
}

/// loop time / (DoF × flow cycles per loop), in s/DoF/cycle.
pub fn time_to_solution(report: &RunReport) -> Result<f64> {
    if report.dof == 0 || !(report.flow_cycle > 0.0) {
        return Err(Error::Config(
            "time_to_solution needs dof > 0 and flow_cycle > 0".into(),
        ));
    }
    Ok(report.loop_time_s / (report.dof as f64 * report.flow_cycle))
}

/// total FLOPs / loop time, in Flop/s.
pub fn flops_rate(report: &RunReport) -> Result<f64> {
    if !(report.loop_time_s > 0.0) {
        return Err(Error::Config("flops_rate needs loop_time > 0".into()));
    }
    Ok(report.flops_total as f64 / report.loop_time_s)
}

/// Mean-per-step aggregation of a simulate run.
pub fn aggregate_steps(steps: &[StepReport], dof: u64, flow_cycle: f64) -> Result<RunReport> {
    if steps.is_empty() {
        return Err(Error::Config("no steps to aggregate".into()));
    }
    let n = steps.len() as f64;
    let phases = PhaseTimes {
        dnn: steps.iter().map(|s| s.dnn_s).sum::<f64>() / n,
        construction: steps.iter().map(|s| s.construction_s).sum::<f64>() / n,
        solving: steps.iter().map(|s| s.solving_s).sum::<f64>() / n,
        other: steps.iter().map(|s| s.other_s).sum::<f64>() / n,
    };
    Ok(RunReport {
        loop_time_s: phases.sum(),
        flops_total: (steps.iter().map(|s| s.flops).sum::<u64>() as f64 / n).round() as u64,
        dof,
        flow_cycle,
        phases,
    })
}

pub const STEP_CSV_HEADER: &str = "step,construction_s,solving_s,dnn_s,other_s,flops";

pub fn write_step_csv<W: Write>(mut w: W, steps: &[StepReport]) -> std::io::Result<()> {
    writeln!(w, "{STEP_CSV_HEADER}")?;
    for s in steps {
        writeln!(
            w,
            "{},{:.9},{:.9},{:.9},{:.9},{}",
            s.step, s.construction_s, s.solving_s, s.dnn_s, s.other_s, s.flops
        )?;
    }
    Ok(())
}
