//! Sinkless sandpile simulation on friend approximation networks.
//!
//! The crate covers the whole pipeline: roster ingestion and network
//! construction ([`roster`]), graphs ([`graph`]), degree-power capacities
//! ([`capacity`]), the cascade engine ([`engine`]), centrality and
//! correlation ([`metrics`]), Monte Carlo sweeps ([`experiments`]), and the
//! `sinkless` command line ([`cli`]).

pub mod capacity;
pub mod cli;
pub mod engine;
pub mod experiments;
pub mod graph;
pub mod metrics;
pub mod numeric;
pub mod roster;

pub use capacity::{capacities, closed_form_min_k, validate_capacities, CapacityVector};
pub use engine::{simulate, Arithmetic, Mode, SimulationConfig, SimulationResult};
pub use graph::{degree_sequence, grid_graph, grid_with_border_sinks, load_graph, Graph, NodeId};
pub use numeric::Dissipation;
pub use roster::{build_fan, generate_synthetic_roster, letter_grade, parse_roster, Roster, RosterSpec};
