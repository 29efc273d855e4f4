//! Prints an architecture summary: per-layer output shape, receptive
//! field, jump, and parameter count, plus the totals.

use seizdet_core::arch::{self, LayerSpec};
use seizdet_core::shallow::{FEATURE_COUNT, FEATURE_NAMES};

use super::network_spec;
use crate::fail;

pub fn run(arch_name: &str, input_len: Option<usize>) -> anyhow::Result<()> {
    if arch_name == "baseline" {
        println!("baseline: logistic model over {FEATURE_COUNT} window features");
        for name in FEATURE_NAMES {
            println!("  {name}");
        }
        println!("stored values: {}", 3 * FEATURE_COUNT + 2);
        return Ok(());
    }

    let mut spec = network_spec(arch_name)?;
    if let Some(len) = input_len {
        spec.input_len = len;
    }
    let report = arch::report(&spec)
        .map_err(|e| fail::usage(format!("{arch_name} with input length {}: {e}", spec.input_len)))?;

    println!("{arch_name}: input {} x {}", spec.input_channels, spec.input_len);
    println!("{:<5} {:<16} {:>12} {:>6} {:>6} {:>8}", "layer", "op", "shape", "rf", "jump", "params");
    for (i, row) in report.rows.iter().enumerate() {
        println!(
            "{:<5} {:<16} {:>12} {:>6} {:>6} {:>8}",
            i + 1,
            row.name,
            format!("{} x {}", row.channels, row.len),
            row.receptive_field,
            row.jump,
            row.params
        );
    }
    println!("total params: {}", report.total_params);
    if let Some(last) = arch::last_conv_index(&spec) {
        println!(
            "receptive field at last conv: {}",
            arch::receptive_field(&spec, last).expect("index came from last_conv_index")
        );
    }
    let convs = spec.layers.iter().filter(|l| matches!(l, LayerSpec::Conv { .. })).count();
    println!("conv layers: {convs}");
    Ok(())
}
