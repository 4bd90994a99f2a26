//! Library for LLM-assisted technical service work: text correction,
//! target-length summarization, and retrieval-augmented question answering
//! over historical incidents, plus the evaluation harness used to validate
//! all three offline.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod generation;
pub mod index;
pub mod net;
pub mod tasks;
pub mod vectors;
