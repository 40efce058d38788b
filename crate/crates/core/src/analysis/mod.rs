//! Case-study analytics: style summaries over predictions, temporal
//! segmentation of a lesson, and gaze-based attention estimates.

mod gaze;
mod style;

pub use gaze::{
    attention_report, attention_scores, categorize_attention, estimate_teacher_position,
    point_line_distance, sight_intersections, synth_scene, trimmed_mean, AttentionCategory,
    AttentionRow, GazeFrame, Polarity, StudentGaze,
};
pub use style::{
    segment_course, style_by_key, teacher_style, Segment, StyleSummary, StyleWord, TimedPrediction,
    DEFAULT_SEGMENTS,
};
