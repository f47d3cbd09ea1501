use std::path::PathBuf;
use std::str::FromStr;

use beamforge_core::channel::{build_channel_tensor, ChannelError};
use beamforge_core::scenario::{generate_synthetic_scenario, load_multipath, ScenarioError, SynthWorld};
use beamforge_core::{ChannelTensor, Scenario, SynthParams};
use thiserror::Error;

/// Where a scenario comes from: a multipath file or `synth:<seed>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioSource {
    Synthetic(u64),
    File(PathBuf),
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("bad synthetic seed in {0:?}")]
    Seed(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

impl FromStr for ScenarioSource {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("synth:") {
            Some(seed) => seed.parse().map(ScenarioSource::Synthetic).map_err(|_| SourceError::Seed(s.to_string())),
            None => Ok(ScenarioSource::File(PathBuf::from(s))),
        }
    }
}

/// A loaded scenario with its channel tensor. `world` is present only for
/// synthetic scenarios, which are the only ones that can be probed off-site.
#[derive(Debug, Clone)]
pub struct Backend {
    pub scenario: Scenario,
    pub tensor: ChannelTensor,
    pub world: Option<SynthWorld>,
}

impl Backend {
    pub fn load(source: &ScenarioSource) -> Result<Backend, SourceError> {
        match source {
            ScenarioSource::Synthetic(seed) => Backend::synthetic(SynthParams::reference(), *seed),
            ScenarioSource::File(path) => {
                let (scenario, records) = load_multipath(path)?;
                let tensor = build_channel_tensor(&scenario, &records, None)?;
                Ok(Backend { scenario, tensor, world: None })
            }
        }
    }

    pub fn synthetic(params: SynthParams, seed: u64) -> Result<Backend, SourceError> {
        let (scenario, records) = generate_synthetic_scenario(&params, seed)?;
        let tensor = build_channel_tensor(&scenario, &records, None)?;
        Ok(Backend { scenario, tensor, world: Some(SynthWorld::new(params, seed)) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sources() {
        assert_eq!("synth:42".parse::<ScenarioSource>().unwrap(), ScenarioSource::Synthetic(42));
        assert_eq!("a/b.jsonl".parse::<ScenarioSource>().unwrap(), ScenarioSource::File("a/b.jsonl".into()));
        assert!("synth:x".parse::<ScenarioSource>().is_err());
    }
}
