pub mod cluster;
pub mod evalmetrics;
pub mod ingest;
pub mod pipeline;
pub mod pysyntax;
pub mod stylefeat;
pub mod surrogate;
pub mod transforms;
