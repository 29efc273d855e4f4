//! Subcommand implementations. Each command takes the resolved global
//! context plus its own arguments and writes files or prints to stdout.

pub mod eval;
pub mod fuse;
pub mod inspect;
pub mod loo;
pub mod score;
pub mod synth;
pub mod sweep;
pub mod train;

use std::fs;
use std::path::PathBuf;

use anyhow::Context;

use seizdet_core::arch::{self, NetworkSpec};
use seizdet_core::train::{prepare_subject, SubjectWindows};

use crate::config::ExperimentConfig;
use crate::{fail, io};

/// Global options after merging the config file with command-line
/// overrides.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

impl Ctx {
    pub fn ensure_out_dir(&self) -> anyhow::Result<()> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(())
    }
}

/// Builds the named network architecture. The baseline is not a network,
/// so it is rejected here; callers that accept it handle the name first.
pub fn network_spec(arch: &str) -> anyhow::Result<NetworkSpec> {
    match arch {
        "cnn11" => Ok(arch::build_cnn11()),
        "cnn6" => Ok(arch::build_cnn6()),
        other => Err(fail::usage(format!(
            "unknown architecture {other:?}; expected \"cnn11\" or \"cnn6\""
        ))),
    }
}

/// Loads and windows every subject in the data directory, in id order,
/// optionally truncated to the first `limit` subjects.
pub fn load_subjects(ctx: &Ctx, limit: Option<usize>) -> anyhow::Result<Vec<SubjectWindows>> {
    let mut ids = io::list_subjects(&ctx.data_dir)?;
    if ids.is_empty() {
        return Err(fail::data(format!(
            "no subjects in {} (expected <id>.eeg + <id>.json pairs)",
            ctx.data_dir.display()
        )));
    }
    if let Some(n) = limit {
        if n == 0 {
            return Err(fail::usage("subject limit must be at least 1"));
        }
        ids.truncate(n);
    }
    let pre = ctx.cfg.preprocess.to_core();
    ids.iter()
        .map(|id| {
            let rec = io::read_recording(&ctx.data_dir, id)?;
            let track = io::read_labels(&ctx.data_dir, id)?;
            prepare_subject(&rec, &track, &pre).with_context(|| format!("subject {id}"))
        })
        .collect()
}
