//! k-fold cross-validation of one model variant with per-fold, mean and
//! pooled metrics.
//!
//! cargo run --release --example cross_validation -- ammdnn 5

use teaching_style::eval::{cross_validate, CvOptions};
use teaching_style::features::{synth_dataset, GroupingConfig};
use teaching_style::model::{ModelConfig, Variant};

fn main() -> teaching_style::Result<()> {
    let mut args = std::env::args().skip(1);
    let variant: Variant = args.next().as_deref().unwrap_or("ammdnn").parse()?;
    let folds = args.next().and_then(|f| f.parse().ok()).unwrap_or(5);

    let grouping = GroupingConfig::desk_default();
    let data = synth_dataset(500, &grouping, 0.1, 7)?;
    let config = ModelConfig::with_variant(variant);
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(folds);
    let out = cross_validate(
        &data,
        &config,
        &grouping,
        CvOptions {
            folds,
            seed: 1,
            threads,
        },
    )?;
    print!("{}", out.report.to_csv()?);
    Ok(())
}
