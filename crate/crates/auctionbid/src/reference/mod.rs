//! Reference-scale scaffolding used to validate the production policy:
//! explicit bracket enumeration for 1-Lipschitz bidding strategies, the
//! chained expert tree built on those brackets, and the single-level
//! product-expert policy.

pub mod bracket;
pub mod chew;
pub mod product;

pub use bracket::{build_bracket, LipschitzBracket, PwLinear};
pub use chew::{ChewPolicy, ChewTree};
pub use product::{EtaMode, ProductExpertState};
