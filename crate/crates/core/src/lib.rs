//! Decision-support engine for community policy making.
//!
//! The slow deliberative loop covers impact evaluation on logic models
//! ([`impact`]), multi-agent policy simulation with ternary value
//! normalization ([`policy`]) and consensus building ([`consensus`]). The
//! fast operational loop covers social value orientation scoring ([`svo`])
//! and cooperation-rate interventions ([`behavior`]). [`mediator`] maps
//! session state to avatar motions and [`project`] persists everything.

pub mod consensus;
pub mod graph;
pub mod impact;
pub mod policy;
pub mod svo;
pub mod behavior;
pub mod mediator;
pub mod project;
pub mod store;
pub mod fixtures;
