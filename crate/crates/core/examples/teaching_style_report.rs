//! Teacher-level style words and the course timeline: mean prediction per
//! teacher and per fifth of a lesson, each mapped to its nearest adjectives.
//!
//! cargo run --release --example teaching_style_report

use teaching_style::analysis::{segment_course, style_by_key, TimedPrediction, DEFAULT_SEGMENTS};
use teaching_style::features::{synth_dataset, GroupingConfig};
use teaching_style::model::{train, ModelConfig};
use teaching_style::space::{nearest_adjectives, AdjectiveLexicon};

fn main() -> teaching_style::Result<()> {
    let grouping = GroupingConfig::desk_default();
    let data = synth_dataset(480, &grouping, 0.1, 9)?;
    let config = ModelConfig {
        epochs: 6,
        ..Default::default()
    };
    let (model, _) = train(&data, &config, &grouping, 2)?;
    let refs: Vec<_> = data.iter().collect();
    let preds = model.predict_many(&refs)?;
    let lexicon = AdjectiveLexicon::builtin();

    let keyed: Vec<(String, _)> = data
        .iter()
        .zip(&preds)
        .map(|(r, p)| (r.teacher.clone().unwrap_or_default(), *p))
        .collect();
    for (teacher, summary) in style_by_key(&keyed, &lexicon)? {
        let words: Vec<&str> = summary.top3.iter().map(|w| w.label.as_str()).collect();
        println!(
            "{teacher}: ({:+.2}, {:+.2}) {}",
            summary.centroid.pleasure,
            summary.centroid.arousal,
            words.join(", ")
        );
    }

    let lesson: Vec<TimedPrediction> = data
        .iter()
        .zip(&preds)
        .filter(|(r, _)| r.lesson.as_deref() == Some("lesson0"))
        .map(|(r, p)| TimedPrediction {
            id: r.id.clone(),
            time: r.time,
            coord: *p,
        })
        .collect();
    for seg in segment_course(&lesson, DEFAULT_SEGMENTS, None)? {
        let word = match seg.centroid {
            Some(c) => nearest_adjectives(c, &lexicon, 1)?[0].0.label.clone(),
            None => "(empty)".into(),
        };
        println!(
            "segment {} [{:>5.0}s, {:>5.0}s): {:>2} utterances, {word}",
            seg.index,
            seg.start,
            seg.end,
            seg.members.len()
        );
    }
    Ok(())
}
