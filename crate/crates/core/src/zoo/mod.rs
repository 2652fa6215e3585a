//! Constructors for the standard example families.

mod birth_death;
mod examples;
mod graph;
mod stick;

pub use birth_death::{
    constant_rate_bd, detailed_balance_residual, general_bd, random_band_bd, random_constant_rates, BandFlags,
    BirthDeathSpec, SiteRates,
};
pub use examples::{nonreversible_four_state, parity_sequence, small_example, SmallExample};
pub use graph::{
    complete_with_loops, graph_kernel, lazy_stick, metropolis_reweight, random_regular, random_weights,
    Reweighting, WeightedGraph,
};
pub use stick::{circle_order, closed_form_invariant, perturbed_stick_pair, StickPair};
