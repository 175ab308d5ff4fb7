//! Shared fixtures for the benchmarks.

use stochsym_core::catalog::{self, CatalogEntry};
use stochsym_core::McConfig;

pub fn model(name: &str) -> CatalogEntry {
    catalog::load(name).expect("catalog model")
}

/// The model's Monte Carlo defaults with a smaller path count.
pub fn mc_config(e: &CatalogEntry, n_paths: usize) -> McConfig {
    McConfig {
        n_paths,
        ..e.model.mc.clone().unwrap_or_default()
    }
}
