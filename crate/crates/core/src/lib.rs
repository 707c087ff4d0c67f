pub mod aut;
pub mod casestudies;
pub mod cli;
pub mod equivalence;
pub mod hml;
pub mod parser;
pub mod semantics;
pub mod terms;
