//! Shared fixtures for the benchmarks in `benches/`.

use dpm_core::diffnet::init_params;
use dpm_core::pdes::{PdeId, PdeSpec};
use dpm_core::sampling::{build_train_set, TrainSet};
use dpm_core::{InputMap, LayerSpec, NetworkParams};

/// A residual network of the default size for `pde`, inputs scaled to the domain.
pub fn network(pde: PdeId, width: usize, depth: usize) -> NetworkParams {
    let spec = PdeSpec::get(pde);
    init_params(LayerSpec::new(width, depth, spec.output_channels, true), 7)
        .expect("valid layer spec")
        .with_input_map(InputMap::unit_box((spec.x_min, spec.x_max), (0.0, spec.final_time)))
}

pub fn train_set(pde: PdeId, n_f: usize) -> TrainSet {
    build_train_set(&PdeSpec::get(pde), 100, n_f, 7).expect("valid sampling sizes")
}
