//! Questionnaire answers to z-scored pleasure-arousal labels, rater
//! reliability, and an adjective lexicon built from agreement votes.
//!
//! cargo run --example annotate_labels

use std::collections::BTreeMap;

use teaching_style::annotate::{
    aggregate_labels, build_lexicon, cronbach_alpha, score_response, synth_annotations,
    LexiconOptions, QuestionnaireResponse,
};
use teaching_style::space::adjective_catalog;

fn main() -> teaching_style::Result<()> {
    // q2/q3 probe pleasure, q1/q4 probe arousal
    let r = QuestionnaireResponse::new(-1, -2, 2, 1)?;
    let (p, a) = score_response(&r)?;
    println!("answers {r:?} score pleasure {p}, arousal {a}");

    let catalog = adjective_catalog();
    let records = synth_annotations(&catalog, 4, 7);
    println!(
        "{} annotation records over {} adjectives",
        records.len(),
        catalog.len()
    );

    // utterances × annotators table of raw pleasure scores
    let mut table: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for rec in &records {
        table
            .entry(&rec.utterance_id)
            .or_default()
            .push(score_response(&rec.response)?.0);
    }
    let rows: Vec<Vec<f64>> = table.into_values().collect();
    println!("cronbach alpha (pleasure): {:.3}", cronbach_alpha(&rows)?);

    let labels = aggregate_labels(&records)?;
    for (id, c) in labels.iter().take(3) {
        println!(
            "{id}: pleasure {:+.3}, arousal {:+.3}",
            c.pleasure, c.arousal
        );
    }

    for threshold in [3, LexiconOptions::STRICT_THRESHOLD] {
        let opts = LexiconOptions {
            agreement_threshold: threshold,
            ..Default::default()
        };
        let lexicon = build_lexicon(&records, &labels, &catalog, opts)?;
        println!("threshold {threshold}: {} adjectives placed", lexicon.len());
    }
    Ok(())
}
