//! Generates a synthetic dataset: one `.eeg`/`.json`/`.labels.csv` triple
//! per subject, written into the data directory.

use std::fs;

use anyhow::Context;

use seizdet_core::rng::{derive_seed, hash_str};
use seizdet_core::synth::synth_subject;

use super::Ctx;
use crate::{fail, io};

pub fn run(ctx: &Ctx, subjects: Option<usize>) -> anyhow::Result<()> {
    let n = subjects.unwrap_or(ctx.cfg.synth.subjects);
    if n == 0 {
        return Err(fail::usage("subjects must be at least 1"));
    }
    fs::create_dir_all(&ctx.data_dir)
        .with_context(|| format!("creating {}", ctx.data_dir.display()))?;

    println!("writing {n} subjects to {}", ctx.data_dir.display());
    for i in 0..n {
        let id = format!("s{:02}", i + 1);
        // Each subject's stream depends only on (master seed, id), so
        // adding subjects later leaves existing files identical.
        let seed = derive_seed(ctx.seed, hash_str(&id));
        let cfg = ctx.cfg.synth.subject_config(id.clone(), seed);
        let (rec, track) = synth_subject(&cfg)?;
        io::write_recording(&ctx.data_dir, &rec)?;
        io::write_labels(&ctx.data_dir, &track)?;
        println!(
            "  {id}: {:.0} s, {} channels, {} seizure seconds",
            rec.duration_s(),
            rec.n_channels(),
            track.seizure_seconds()
        );
    }
    Ok(())
}
