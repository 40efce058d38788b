use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Cross products below this magnitude mark a pair of sight lines as parallel.
const PARALLEL_TOL: f64 = 1e-12;

/// A student's head position and sight direction on the projected floor plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentGaze {
    pub student_id: String,
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GazeFrame {
    pub students: Vec<StudentGaze>,
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Intersection points of every non-parallel pair of sight lines, in pair
/// order (i < j).
pub fn sight_intersections(frame: &GazeFrame) -> Vec<(f64, f64)> {
    let s = &frame.students;
    let mut out = Vec::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let (a, b) = (&s[i], &s[j]);
            let den = cross(a.dx, a.dy, b.dx, b.dy);
            if den.abs() < PARALLEL_TOL {
                continue;
            }
            let t = cross(b.x - a.x, b.y - a.y, b.dx, b.dy) / den;
            out.push((a.x + t * a.dx, a.y + t * a.dy));
        }
    }
    out
}

/// Mean after dropping the ⌊n/4⌋ smallest and ⌊n/4⌋ largest values.
pub fn trimmed_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("trimmed mean of no values"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let cut = v.len() / 4;
    let kept = &v[cut..v.len() - cut];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Robust teacher location: trimmed mean of all sight-line intersections,
/// each coordinate trimmed independently.
pub fn estimate_teacher_position(frame: &GazeFrame) -> Result<(f64, f64)> {
    if frame.students.len() < 2 {
        return Err(invalid("need at least two students to locate the teacher"));
    }
    for s in &frame.students {
        check_student(s)?;
    }
    let pts = sight_intersections(frame);
    if pts.is_empty() {
        return Err(Error::NoIntersections);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Ok((trimmed_mean(&xs)?, trimmed_mean(&ys)?))
}

fn check_student(s: &StudentGaze) -> Result<()> {
    if ![s.x, s.y, s.dx, s.dy].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(format!("student {}", s.student_id)));
    }
    if s.dx == 0.0 && s.dy == 0.0 {
        return Err(invalid(format!(
            "student {} has a zero sight direction",
            s.student_id
        )));
    }
    Ok(())
}

/// Perpendicular distance from `point` to the infinite line through the
/// student's head along their sight direction.
pub fn point_line_distance(s: &StudentGaze, point: (f64, f64)) -> Result<f64> {
    check_student(s)?;
    let c = cross(s.dx, s.dy, point.0 - s.x, point.1 - s.y);
    Ok(c.abs() / s.dx.hypot(s.dy))
}

pub fn attention_scores(frame: &GazeFrame, teacher: (f64, f64)) -> Result<Vec<f64>> {
    frame
        .students
        .iter()
        .map(|s| point_line_distance(s, teacher))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttentionCategory {
    /// Low attention.
    I,
    /// High attention.
    II,
    /// In between.
    III,
}

impl fmt::Display for AttentionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttentionCategory::I => "I",
            AttentionCategory::II => "II",
            AttentionCategory::III => "III",
        })
    }
}

/// How distances map to categories. `Geometric` treats a small distance
/// (looking at the teacher) as high attention; `Literal` puts values under
/// half the mean into category I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    #[default]
    Geometric,
    Literal,
}

impl FromStr for Polarity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Polarity::Geometric),
            "literal" => Ok(Polarity::Literal),
            _ => Err(invalid(format!(
                "unknown polarity {s:?} (expected geometric or literal)"
            ))),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Geometric => "geometric",
            Polarity::Literal => "literal",
        })
    }
}

/// Bucket distances against half and twice their mean.
pub fn categorize_attention(
    distances: &[f64],
    polarity: Polarity,
) -> Result<Vec<AttentionCategory>> {
    if distances.is_empty() {
        return Err(invalid("no distances to categorize"));
    }
    crate::error::ensure_finite(distances, "distance")?;
    if let Some(d) = distances.iter().find(|&&d| d < 0.0) {
        return Err(invalid(format!("negative distance {d}")));
    }
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    let (near, far) = match polarity {
        Polarity::Geometric => (AttentionCategory::II, AttentionCategory::I),
        Polarity::Literal => (AttentionCategory::I, AttentionCategory::II),
    };
    Ok(distances
        .iter()
        .map(|&d| {
            if d <= 0.5 * mean {
                near
            } else if d >= 2.0 * mean {
                far
            } else {
                AttentionCategory::III
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionRow {
    pub student_id: String,
    pub mean_distance: f64,
    pub category: AttentionCategory,
}

/// Locate the teacher in each frame, average every student's distance over
/// the window, then categorize the averages. Rows are sorted by student id.
pub fn attention_report(frames: &[GazeFrame], polarity: Polarity) -> Result<Vec<AttentionRow>> {
    if frames.is_empty() {
        return Err(invalid("no gaze frames"));
    }
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (i, frame) in frames.iter().enumerate() {
        let ctx = |e: Error| invalid(format!("frame {i}: {e}"));
        let teacher = estimate_teacher_position(frame).map_err(ctx)?;
        let d = attention_scores(frame, teacher).map_err(ctx)?;
        for (s, d) in frame.students.iter().zip(d) {
            let e = acc.entry(s.student_id.as_str()).or_insert((0.0, 0));
            e.0 += d;
            e.1 += 1;
        }
    }
    let means: Vec<(String, f64)> = acc
        .into_iter()
        .map(|(k, (s, n))| (k.to_string(), s / n as f64))
        .collect();
    let values: Vec<f64> = means.iter().map(|m| m.1).collect();
    let cats = categorize_attention(&values, polarity)?;
    Ok(means
        .into_iter()
        .zip(cats)
        .map(|((student_id, mean_distance), category)| AttentionRow {
            student_id,
            mean_distance,
            category,
        })
        .collect())
}

/// A classroom scene: `students` heads scattered uniformly over a 6 × 2
/// block of seats between 1 and 3 units in front of `teacher`, each sight
/// direction rotated by Gaussian noise of `angle_sd` radians.
pub fn synth_scene<R: Rng>(
    students: usize,
    teacher: (f64, f64),
    angle_sd: f64,
    rng: &mut R,
) -> Result<GazeFrame> {
    let noise = Normal::new(0.0, angle_sd).map_err(|e| invalid(e.to_string()))?;
    let students = (0..students)
        .map(|i| {
            let x = teacher.0 + rng.gen_range(-3.0..3.0);
            let y = teacher.1 + rng.gen_range(1.0..3.0);
            let angle = (teacher.1 - y).atan2(teacher.0 - x) + noise.sample(rng);
            StudentGaze {
                student_id: format!("s{i:02}"),
                x,
                y,
                dx: angle.cos(),
                dy: angle.sin(),
            }
        })
        .collect();
    Ok(GazeFrame { students })
}
