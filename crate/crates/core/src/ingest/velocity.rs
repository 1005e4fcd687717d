use std::io::{BufRead, Write};

use nalgebra::Vector3;

use super::IngestError;
use crate::metrics::VelocitySample;

/// Parses `t vx vy vz [wx wy wz]` per line, `#` comments. Every line must
/// agree on whether angular velocity is present.
pub fn parse_velocities<R: BufRead>(reader: R) -> Result<Vec<VelocitySample>, IngestError> {
    let mut out: Vec<VelocitySample> = Vec::new();
    let mut width = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 && fields.len() != 7 {
            return Err(IngestError::Malformed {
                line: line_no,
                message: format!("expected 4 or 7 fields, found {}", fields.len()),
            });
        }
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(IngestError::Malformed {
                line: line_no,
                message: "angular velocity present on some lines only".into(),
            });
        }
        let v: Vec<f64> = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| IngestError::Malformed {
                        line: line_no,
                        message: format!("invalid number {f:?}"),
                    })
            })
            .collect::<Result<_, _>>()?;
        let t = v[0];
        if let Some(prev) = out.last() {
            if t == prev.t {
                return Err(IngestError::DuplicateTimestamp { line: line_no, t });
            }
            if t < prev.t {
                return Err(IngestError::Unsorted { line: line_no, t });
            }
        }
        let omega = (v.len() == 7).then(|| Vector3::new(v[4], v[5], v[6]));
        out.push(VelocitySample::new(t, Vector3::new(v[1], v[2], v[3]), omega));
    }
    Ok(out)
}

pub fn write_velocities<W: Write>(samples: &[VelocitySample], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# t vx vy vz [wx wy wz]")?;
    for s in samples {
        write!(w, "{} {} {} {}", s.t, s.v.x, s.v.y, s.v.z)?;
        if let Some(o) = s.omega {
            write!(w, " {} {} {}", o.x, o.y, o.z)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_widths() {
        let a = parse_velocities("0 1 2 3\n1 1 2 3\n".as_bytes()).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a[0].omega.is_none());
        let b = parse_velocities("# c\n0 1 2 3 0 0 1\n".as_bytes()).unwrap();
        assert_eq!(b[0].omega, Some(Vector3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn rejects_mixed_and_unsorted() {
        assert!(parse_velocities("0 1 2 3\n1 1 2 3 0 0 1\n".as_bytes()).is_err());
        assert!(parse_velocities("1 1 2 3\n0 1 2 3\n".as_bytes()).is_err());
        assert!(parse_velocities("0 1 2\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip() {
        let s = vec![
            VelocitySample::new(0.1, Vector3::new(1.5, -2.0, 0.3), Some(Vector3::new(0.1, 0.2, 0.3))),
            VelocitySample::new(0.2, Vector3::new(1.0 / 3.0, 0.0, 1e-9), Some(Vector3::zeros())),
        ];
        let mut buf = Vec::new();
        write_velocities(&s, &mut buf).unwrap();
        assert_eq!(parse_velocities(buf.as_slice()).unwrap(), s);
    }
}
