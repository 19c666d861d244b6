//! File formats, multi-threaded pipelines, benchmarking and the command-line
//! interface on top of `berrri-core`.

pub mod bench;
pub mod cli;
pub mod io;
pub mod pipeline;
pub mod results;

/// Version tag written into every output file.
pub const FORMAT_VERSION: u32 = 1;
