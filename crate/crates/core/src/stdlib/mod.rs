//! Prelude and host implementations of external functions.

pub mod prelude;
