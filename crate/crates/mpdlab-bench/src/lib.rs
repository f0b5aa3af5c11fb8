//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use mpdlab::fields::{AutomorphicBumps, BumpSpec};
use mpdlab::{FuchsianGroup, MetricField};

pub fn octagon() -> Arc<FuchsianGroup> {
    Arc::new(FuchsianGroup::genus2_octagon())
}

/// Conformal perturbation by one small bump near the polygon center.
pub fn bumped_metric(group: &Arc<FuchsianGroup>) -> MetricField {
    let bump = BumpSpec {
        center: [0.1, 1.1],
        radius: 0.8,
        amplitude: 0.05,
    };
    let phi = AutomorphicBumps::new(group.clone(), vec![bump], 4).expect("bump field");
    MetricField::conformal(group.clone(), Arc::new(phi))
}
