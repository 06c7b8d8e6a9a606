//! Independent oracles and the acceptance criteria built on them.

pub mod criteria;
pub mod oracles;

pub use criteria::{run_all, run_selected, Outcome, Suite};
