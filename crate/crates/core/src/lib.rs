pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod diversity;
pub mod filters;
pub mod llm;
pub mod manifest;
pub mod metamorph;
pub mod metrics;
pub mod prompt;
pub mod review;
pub mod scoring;
