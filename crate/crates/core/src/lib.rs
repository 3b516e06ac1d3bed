//! Dynamic routing and wavelength assignment for wavelength-continuous WDM
//! networks, solved per request by a mutation-only evolutionary search and
//! evaluated with a discrete-event loss simulator.

pub mod cli;
pub mod clock;
pub mod ep_router;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod topology;
pub mod traffic;
pub mod wavelength;

pub use clock::Clock;
pub use ep_router::{Chromosome, EpConfig, EpRouter, RouteDecision, RouteOutcome, SetupTiming};
pub use sim::{replicate, run, sweep_generations, RunConfig, RunMetrics};
pub use topology::{load_topology, LinkId, NodeId, Topology};
pub use traffic::{HoldingModel, LightpathRequest, TrafficConfig};
pub use wavelength::{AssignmentStrategy, StrategyKind, WavelengthDatabase};
