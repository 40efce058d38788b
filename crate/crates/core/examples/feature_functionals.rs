//! Frame-level descriptors summarized into fixed-length utterance vectors
//! and split into model paths.
//!
//! cargo run --example feature_functionals

use teaching_style::features::{
    functionals, group_features, GroupingConfig, LldSequence, Modality, ModalityDims,
    FUNCTIONAL_NAMES,
};

fn main() -> teaching_style::Result<()> {
    // 50 frames of a 2-dim acoustic descriptor: a rising pitch and a noisy energy
    let frames: Vec<Vec<f64>> = (0..50)
        .map(|t| {
            let t = t as f64;
            vec![100.0 + 2.0 * t, (t * 0.7).sin()]
        })
        .collect();
    let acoustic = functionals(&LldSequence::new(Modality::Acoustic, frames)?)?;
    for (name, v) in FUNCTIONAL_NAMES.iter().zip(&acoustic) {
        println!("pitch {name:>9}: {v:.3}");
    }

    let visual = functionals(&LldSequence::new(
        Modality::Visual,
        vec![vec![0.2], vec![0.4], vec![0.9]],
    )?)?;
    let textual = vec![0.5; 4];
    let dims = ModalityDims {
        acoustic: acoustic.len(),
        visual: visual.len(),
        textual: textual.len(),
    };
    let grouping = GroupingConfig::default_paths(dims, 4)?;
    let groups = group_features(&acoustic, &visual, &textual, &grouping)?;
    println!("{} paths of sizes {:?}", groups.len(), grouping.path_dims());
    println!("grouping hash {}", grouping.hash());
    Ok(())
}
