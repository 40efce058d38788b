//! Train an attention-fused multi-task model on synthetic data, predict,
//! and round-trip it through a checkpoint.
//!
//! cargo run --release --example train_model

use teaching_style::eval::ccc;
use teaching_style::features::{synth_dataset, GroupingConfig};
use teaching_style::model::{train, AmmdnnModel, ModelConfig, Variant};

fn main() -> teaching_style::Result<()> {
    let grouping = GroupingConfig::desk_default();
    let data = synth_dataset(600, &grouping, 0.0, 3)?;
    let (train_set, test_set) = data.split_at(500);

    let config = ModelConfig::with_variant(Variant::Ammdnn);
    let (model, log) = train(train_set, &config, &grouping, 11)?;
    for e in log.epochs.iter().step_by(3) {
        println!("epoch {:>2}: loss {:.4}", e.epoch, e.train_loss);
    }

    let refs: Vec<_> = test_set.iter().collect();
    let preds = model.predict_many(&refs)?;
    let truth: Vec<_> = test_set
        .iter()
        .map(|r| r.label.expect("synthetic data is labeled"))
        .collect();
    let col = |f: fn(&teaching_style::space::PaCoordinate) -> f64,
               v: &[teaching_style::space::PaCoordinate]| {
        v.iter().map(f).collect::<Vec<f64>>()
    };
    println!(
        "held-out CCC pleasure {:.3}, arousal {:.3}",
        ccc(&col(|c| c.pleasure, &truth), &col(|c| c.pleasure, &preds))?,
        ccc(&col(|c| c.arousal, &truth), &col(|c| c.arousal, &preds))?
    );

    let json = model.to_checkpoint_json();
    let restored = AmmdnnModel::from_checkpoint_json(&json)?;
    assert_eq!(restored.predict_many(&refs)?, preds);
    println!(
        "checkpoint of {} bytes restores identical predictions",
        json.len()
    );

    let alpha = model
        .forward_record(
            &test_set[0],
            teaching_style::nn::Mode::Infer,
            &mut rand::thread_rng(),
        )?
        .alpha;
    if let Some(a) = alpha {
        let top = a.iter().cloned().fold(f64::MIN, f64::max);
        println!("attention over {} dims, largest weight {top:.2e}", a.len());
    }
    Ok(())
}
