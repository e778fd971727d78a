/// File name under which the prelude can be included.
pub const MCORE_NAME: &str = "mcore.m";

/// Source of the prelude shipped with the compiler.
pub const MCORE_SOURCE: &str = include_str!("mcore.m");
