//! Resource-aware deep Q-learning under time and memory budgets.

pub mod envs;
pub mod replay;
pub mod tinynet;
pub mod coordinator;
pub mod feedback;
pub mod harness;
