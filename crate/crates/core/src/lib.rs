pub mod engine;
pub mod frame;
pub mod ingest;
pub mod spec;
pub mod testkit;
pub mod transform;
pub mod vis;

mod par;
