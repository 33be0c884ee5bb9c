//! Verification toolkit for asynchronous multiparty session types with
//! multi-participant choices.

pub mod congruence;
pub mod semantics;
pub mod subtyping;
pub mod syntax;
pub mod typing;
pub mod graph;
pub mod envcheck;
pub mod verdict;
pub mod sessioncheck;
pub mod flgen;
pub mod random;
