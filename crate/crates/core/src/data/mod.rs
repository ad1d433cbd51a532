//! Traffic series ingestion, interpolation, normalization, windowing, and
//! the synthetic generator.

pub mod io;
pub mod series;
pub mod synth;
pub mod window;

pub use io::{read_adjacency, read_series, write_adjacency, write_series};
pub use series::{interpolate_missing, zscore, NormStats, TrafficSeries};
pub use synth::synth_traffic;
pub use window::{window_and_split, window_count, SplitDatasets, SplitTag, WindowedDataset};
