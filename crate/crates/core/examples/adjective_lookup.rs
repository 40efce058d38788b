//! Nearest teaching-style adjectives for points in the pleasure-arousal
//! plane, using the bundled lexicon.
//!
//! cargo run --example adjective_lookup -- 0.8 -0.4

use teaching_style::space::{nearest_adjectives, AdjectiveLexicon, PaCoordinate};

fn main() -> teaching_style::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let queries = match args.as_slice() {
        [p, a] => vec![PaCoordinate::new(*p, *a)?],
        _ => vec![
            PaCoordinate::new(1.0, 1.0)?,
            PaCoordinate::new(1.0, -1.0)?,
            PaCoordinate::new(-1.0, 1.0)?,
            PaCoordinate::new(-1.0, -1.0)?,
        ],
    };
    let lexicon = AdjectiveLexicon::builtin();
    for q in queries {
        let words: Vec<String> = nearest_adjectives(q, &lexicon, 3)?
            .into_iter()
            .map(|(e, d)| format!("{} ({}, {d:.2})", e.label, e.category))
            .collect();
        println!(
            "({:+.2}, {:+.2}) -> {}",
            q.pleasure,
            q.arousal,
            words.join(", ")
        );
    }
    Ok(())
}
