//! Monte-Carlo simulation, sweeps and latency reports.

mod config;
mod latency;
mod sim;
pub mod stats;
mod sweep;

pub use config::{CodeParams, DecoderSpec, ExperimentConfig};
pub use latency::{LatencyReport, LatencyRow};
pub use sim::{generate_frame, point_seed, Decoder, DecoderFactory, FerPoint, FrameDecoder, FrameRecord, PointSetup, StopRule};
pub use sweep::{config_text_from_csv, csv_string, read_csv_points, sweep, sweep_with_progress, write_csv, Sweep};
