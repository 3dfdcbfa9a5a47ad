//! The shipped benchmark scenes (`benchmarks/` at the workspace root) and the
//! run configuration used with them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use mvalign_core::association::AssociationParams;
use mvalign_core::objective::ObjectiveWeights;
use mvalign_core::synth::SynthSpec;

pub const BENCHMARK_CONFIG: &str = "benchmark.toml";

pub fn benchmarks_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

/// `(name, spec)` of every `*.json` scene spec, sorted by name.
pub fn bench_specs() -> std::io::Result<Vec<(String, SynthSpec)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(benchmarks_dir())?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let spec = serde_json::from_str(&fs::read_to_string(p)?)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", p.display())))?;
            Ok((name, spec))
        })
        .collect()
}

/// The sections of the run configuration the benchmark file sets.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub weights: ObjectiveWeights,
    pub association: AssociationParams,
}

pub fn bench_config() -> std::io::Result<BenchConfig> {
    let text = fs::read_to_string(benchmarks_dir().join(BENCHMARK_CONFIG))?;
    toml::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}
