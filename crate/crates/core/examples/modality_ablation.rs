//! Contribution of each modality: A, A+V, A+V+T and A+V+T with attention,
//! on data whose labels depend on all three modalities.
//!
//! cargo run --release --example modality_ablation

use teaching_style::eval::{ablation, CvOptions};
use teaching_style::features::{synth_dataset, GroupingConfig};
use teaching_style::model::ModelConfig;

fn main() -> teaching_style::Result<()> {
    let grouping = GroupingConfig::desk_default();
    let data = synth_dataset(400, &grouping, 0.0, 5)?;
    // narrower layers than the default so the 20 trainings finish quickly
    let mut config = ModelConfig {
        epochs: 30,
        hidden: vec![64, 64],
        global_hidden: vec![64, 64],
        ..Default::default()
    };
    config.adam.learning_rate = 1e-3;
    let rows = ablation(
        &data,
        &grouping,
        &config,
        CvOptions {
            folds: 5,
            seed: 0,
            threads: 1,
        },
    )?;
    println!("{:<10} {:>7} {:>7}", "features", "P CCC", "A CCC");
    for r in rows {
        println!("{:<10} {:>7.3} {:>7.3}", r.feature_set, r.p_ccc, r.a_ccc);
    }
    Ok(())
}
