//! Fixtures, random request generation and the Monte-Carlo driver.

mod fixtures;
mod generator;
mod simulation;

pub use fixtures::{example_fixture, simulation_substrate};
pub use generator::{generate_request, random_mesh_substrate, GeneratorConfig, IntRange};
pub use simulation::{
    iteration_pool, mean_and_stddev, run_simulation, run_simulation_with, Execution, LinkUsageRow, Metric,
    NodeUsageRow, RawRow, SimulationConfig, SimulationResults, SubstrateFixture, SummaryRow,
};
