#![allow(dead_code)]

use dispersal_harvest::dynamics::{CompetitionModel, PopulationState, SimulationConfig};
use dispersal_harvest::grid::SpatialGrid;
use dispersal_harvest::profiles::ProfileSet;
use dispersal_harvest::sweep::SweepConfig;

pub const LENGTH: f64 = 4.0;

pub fn model(set: ProfileSet, n: usize) -> CompetitionModel<f64> {
    let g = SpatialGrid::new(LENGTH, n).unwrap();
    CompetitionModel::new(set.build(&g).unwrap()).unwrap()
}

pub fn sweep_cfg(m: &CompetitionModel<f64>, sim: SimulationConfig<f64>) -> SweepConfig<f64> {
    SweepConfig::new(sim, PopulationState::constant(m.grid(), 2.1, 2.1).unwrap())
}

pub fn default_sweep_cfg(m: &CompetitionModel<f64>) -> SweepConfig<f64> {
    sweep_cfg(m, SimulationConfig::default())
}
