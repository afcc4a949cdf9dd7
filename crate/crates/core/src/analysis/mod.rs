//! Gain-condition checks and trace-level measurements.

mod metrics;
mod residual;
mod stability;

use std::fmt;

pub use metrics::{
    classify_drift, estimate_bounds, manipulability_probe, reflection_ratio, sync_metrics, EstimateBound,
    Manipulability, ManipulabilityVerdict, ReflectionEstimate, SyncMetrics, RAMP_FIT_TOLERANCE,
    SATURATION_EPS, SLOPE_FLOOR, SYNC_THRESHOLD, TORQUE_FLOOR,
};
pub use residual::{
    closed_loop_residual, CommandHold, ResidualContext, ResidualMode, ResidualReport, RobotResidual,
};
pub use stability::{
    check_cubic_stability, check_gain_condition, check_point_mass_pid, cubic_roots, JointMargin,
    StabilityReport,
};

/// Ordered `key=value` lines, one per measured quantity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
