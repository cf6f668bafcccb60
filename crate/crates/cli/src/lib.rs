//! Stage runner behind the `newsprobe` binary.

pub mod config;
pub mod stages;

use std::path::PathBuf;

use anyhow::Result;

pub use config::PipelineConfig;
pub use stages::{fingerprints, run_stage, Stage, StageContext, StageRecord};

/// Parsed command line.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: PathBuf,
    pub stage: Stage,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mock_rewriter: bool,
}

pub fn run(inv: &Invocation) -> Result<()> {
    let cfg = PipelineConfig::load(&inv.config, inv.seed)?;
    let out = inv.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let ctx = StageContext {
        cfg: &cfg,
        fingerprints: fingerprints(&cfg)?,
        out,
        force_mock: inv.mock_rewriter,
    };
    run_stage(&ctx, inv.stage)
}
