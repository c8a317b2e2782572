//! Rank-collapse simulations, operator spectra and accuracy grids.

mod bench;
pub mod hp_table;
mod rank;
mod spectrum;

pub use bench::{benchmark_grid, BenchCell, BenchOptions};
pub use hp_table::{lookup, HpRow, TableArch, Validation, HP_TABLE};
pub use rank::{rank_experiment, rank_inputs, rank_repetition, RankExperiment, RankTrace};
pub use spectrum::{
    histogram, spectrum_experiment, SpectrumOptions, SpectrumResult, HISTOGRAM_BINS, UNIT_EIGENVALUE_TOL,
};
