pub mod analytics;
pub mod attribution;
pub mod model;
pub mod synthetic;
pub mod tokenizer;
mod tsv;
