use std::io::{BufRead, Write};

use nalgebra::Vector3;

use super::IngestError;
use crate::geometry::{Pose, Rotation};

const QUATERNION_NORM_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    /// Seconds on the common timeline.
    pub t: f64,
    pub pose: Pose,
}

impl TrajectorySample {
    pub fn new(t: f64, pose: Pose) -> Self {
        Self { t, pose }
    }
}

/// Timestamped poses with strictly increasing times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Fails on non-finite, duplicate or decreasing timestamps. Line numbers
    /// in the error are 1-based sample indices.
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, IngestError> {
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() {
                return Err(IngestError::Malformed {
                    line: i + 1,
                    message: format!("non-finite timestamp {}", s.t),
                });
            }
            if i > 0 {
                check_order(samples[i - 1].t, s.t, i + 1)?;
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<TrajectorySample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TrajectorySample> {
        self.samples.iter()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose> + '_ {
        self.samples.iter().map(|s| &s.pose)
    }

    /// `(first, last)` timestamp, if any.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.t, self.samples.last()?.t))
    }

    /// Median of consecutive timestamp differences.
    pub fn median_spacing(&self) -> Option<f64> {
        let mut dts: Vec<f64> = self.samples.windows(2).map(|w| w[1].t - w[0].t).collect();
        if dts.is_empty() {
            return None;
        }
        dts.sort_by(f64::total_cmp);
        let m = dts.len() / 2;
        Some(if dts.len() % 2 == 1 {
            dts[m]
        } else {
            0.5 * (dts[m - 1] + dts[m])
        })
    }

    /// Applies `f` to every timestamp. `f` must be strictly increasing.
    pub(crate) fn map_times(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample::new(f(s.t), s.pose))
                .collect(),
        }
    }

    pub(crate) fn map_poses(&self, f: impl Fn(&Pose) -> Pose) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample::new(s.t, f(&s.pose)))
                .collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Trajectory {
    type Item = &'a TrajectorySample;
    type IntoIter = std::slice::Iter<'a, TrajectorySample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

fn check_order(prev: f64, t: f64, line: usize) -> Result<(), IngestError> {
    if t == prev {
        Err(IngestError::DuplicateTimestamp { line, t })
    } else if t < prev {
        Err(IngestError::Unsorted { line, t })
    } else {
        Ok(())
    }
}

/// Parses TUM text: `t tx ty tz qx qy qz qw` per line, `#` comments.
pub fn parse_trajectory<R: BufRead>(reader: R) -> Result<Trajectory, IngestError> {
    let mut samples: Vec<TrajectorySample> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(IngestError::Malformed {
                line: line_no,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0f64; 8];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| IngestError::Malformed {
                    line: line_no,
                    message: format!("invalid number {field:?}"),
                })?;
        }
        let [t, tx, ty, tz, qx, qy, qz, qw] = v;
        let norm = (qx * qx + qy * qy + qz * qz + qw * qw).sqrt();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOL {
            return Err(IngestError::NonUnitQuaternion {
                line: line_no,
                norm,
            });
        }
        if let Some(prev) = samples.last() {
            check_order(prev.t, t, line_no)?;
        }
        let rotation = Rotation::from_wxyz(qw, qx, qy, qz).map_err(|e| IngestError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        samples.push(TrajectorySample::new(
            t,
            Pose::new(rotation, Vector3::new(tx, ty, tz)),
        ));
    }
    Ok(Trajectory { samples })
}

/// Writes TUM text using shortest round-trip float formatting.
pub fn write_trajectory<W: Write>(traj: &Trajectory, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# t tx ty tz qx qy qz qw")?;
    for s in traj {
        let p = &s.pose.translation;
        let [qw, qx, qy, qz] = s.pose.rotation.wxyz();
        writeln!(
            w,
            "{} {} {} {} {} {} {} {}",
            s.t, p.x, p.y, p.z, qx, qy, qz, qw
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<Trajectory, IngestError> {
        parse_trajectory(s.as_bytes())
    }

    #[test]
    fn parses_single_line() {
        let traj = parse("0.0 1 2 3 0 0 0 1").unwrap();
        assert_eq!(traj.len(), 1);
        let s = traj.samples()[0];
        assert_eq!(s.t, 0.0);
        assert_eq!(s.pose.translation, Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(s.pose.rotation, Rotation::identity());
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let traj = parse("# header\n\n0 0 0 0 0 0 0 1\n  # more\n1 0 0 0 0 0 0 1\n").unwrap();
        assert_eq!(traj.len(), 2);
    }

    #[test]
    fn seven_fields_is_malformed_on_line_one() {
        match parse("0.0 1 2 3 0 0 0") {
            Err(IngestError::Malformed { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_names_line() {
        match parse("0 0 0 0 0 0 0 1\n1 0 x 0 0 0 0 1") {
            Err(IngestError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_timestamp_is_rejected() {
        let err = parse("1.0 0 0 0 0 0 0 1\n1.0 0 0 0 0 0 0 1").unwrap_err();
        assert!(matches!(err, IngestError::DuplicateTimestamp { line: 2, .. }));
    }

    #[test]
    fn unsorted_input_is_rejected() {
        let err = parse("2.0 0 0 0 0 0 0 1\n1.0 0 0 0 0 0 0 1").unwrap_err();
        assert!(matches!(err, IngestError::Unsorted { line: 2, .. }));
    }

    #[test]
    fn quaternion_norm_tolerance() {
        let ok = parse("0 0 0 0 0 0 0 1.0005").unwrap();
        let [w, ..] = ok.samples()[0].pose.rotation.wxyz();
        assert_eq!(w, 1.0);
        let err = parse("0 0 0 0 0 0 0 1.01").unwrap_err();
        assert!(matches!(err, IngestError::NonUnitQuaternion { line: 1, .. }));
    }

    #[test]
    fn constructor_checks_order() {
        let s = |t| TrajectorySample::new(t, Pose::identity());
        assert!(Trajectory::new(vec![s(0.0), s(1.0)]).is_ok());
        assert!(Trajectory::new(vec![s(1.0), s(1.0)]).is_err());
        assert!(Trajectory::new(vec![s(f64::NAN)]).is_err());
    }

    #[test]
    fn median_spacing_of_regular_grid() {
        let samples = (0..11)
            .map(|i| TrajectorySample::new(i as f64 * 0.01, Pose::identity()))
            .collect();
        let traj = Trajectory::new(samples).unwrap();
        assert!((traj.median_spacing().unwrap() - 0.01).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn write_parse_round_trip(
            rows in proptest::collection::vec(
                (0.0001..1.0f64, -100.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64,
                 -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64),
                1..40)
        ) {
            let mut t = 0.0;
            let samples: Vec<_> = rows.iter().map(|&(dt, x, y, z, a, b, c, w)| {
                t += dt;
                TrajectorySample::new(t, Pose::new(
                    Rotation::from_wxyz(w, a, b, c).unwrap(),
                    Vector3::new(x, y, z),
                ))
            }).collect();
            let traj = Trajectory::new(samples).unwrap();
            let mut buf = Vec::new();
            write_trajectory(&traj, &mut buf).unwrap();
            let back = parse_trajectory(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), traj.len());
            for (a, b) in back.iter().zip(traj.iter()) {
                prop_assert_eq!(a.t, b.t);
                prop_assert_eq!(a.pose.translation, b.pose.translation);
                let qa = a.pose.rotation.wxyz();
                let qb = b.pose.rotation.wxyz();
                for k in 0..4 {
                    prop_assert!((qa[k] - qb[k]).abs() < 1e-15);
                }
            }
        }
    }
}
