//! Lexing, parsing and include resolution.

pub mod ast;
pub mod include;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod timespan;
pub mod token;

pub use include::{load_file, load_source, LoadOptions, LoadedUnit};
pub use parser::{parse_expression, parse_source};
pub use timespan::{parse_timespan, TimeUnit, TimespanComponents};
