//! Locate the teacher from students' sight lines and sort students into
//! attention categories.
//!
//! cargo run --example classroom_gaze

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use teaching_style::analysis::{
    attention_report, estimate_teacher_position, synth_scene, Polarity,
};

fn main() -> teaching_style::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let teacher = (1.0, -0.5);
    let frames = (0..10)
        .map(|_| synth_scene(14, teacher, 0.05, &mut rng))
        .collect::<teaching_style::Result<Vec<_>>>()?;
    let (x, y) = estimate_teacher_position(&frames[0])?;
    println!("planted teacher {teacher:?}, estimated ({x:.3}, {y:.3})");

    // one distracted student stares sideways in every frame
    let mut frames = frames;
    for f in &mut frames {
        let s = &mut f.students[3];
        (s.dx, s.dy) = (1.0, 0.0);
    }
    for row in attention_report(&frames, Polarity::Geometric)? {
        println!(
            "{} mean distance {:.3} -> {}",
            row.student_id, row.mean_distance, row.category
        );
    }
    Ok(())
}
