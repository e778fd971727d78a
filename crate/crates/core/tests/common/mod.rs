#![allow(dead_code)]

pub mod rebeca;
pub mod rules;
