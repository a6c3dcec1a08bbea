//! Social-media signals aligned with epidemic case counts.
//!
//! The pipeline runs in stages:
//!
//! 1. [`corpus`]: read tweet JSONL and case-count CSVs, run the filter chain.
//! 2. [`features`]: build one feature vector per day (tweet frequency,
//!    keyword counts, pooled sentence embeddings).
//! 3. [`regress`]: epsilon-SVR trained with an SMO dual solver.
//! 4. [`experiment`]: Spearman rank correlation, the named train/test time
//!    settings, domestic and cross-country runs, and report tables.

pub mod corpus;
pub mod dates;
pub mod experiment;
pub mod features;
pub mod regress;
pub mod synthetic;

pub use dates::{DateRange, DayOffset};
