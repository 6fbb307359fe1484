//! Plain-text bundle adjustment files: a header line with camera, point and
//! observation counts, one `<camera> <point> <x> <y>` line per observation,
//! then one value per line, nine per camera followed by three per point.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::ObjectiveFunction;

use super::bundle::{bundle_objective, Observation, CAMERA_PARAMS, POINT_PARAMS};

/// Parsed file contents.
#[derive(Clone, Debug, PartialEq)]
pub struct BalData {
    pub cameras: usize,
    pub points: usize,
    pub observations: Vec<Observation>,
    /// Camera parameters then point coordinates, in variable order.
    pub state: Vec<f64>,
}

pub fn write_bal<W: Write>(
    mut out: W,
    cameras: usize,
    points: usize,
    observations: &[Observation],
    state: &[f64],
) -> Result<()> {
    let n = cameras * CAMERA_PARAMS + points * POINT_PARAMS;
    if state.len() != n {
        return Err(Error::Spec(format!("state has {} values, expected {n}", state.len())));
    }
    writeln!(out, "{cameras} {points} {}", observations.len())?;
    for o in observations {
        writeln!(out, "{} {} {:e} {:e}", o.camera, o.point, o.x, o.y)?;
    }
    for v in state {
        writeln!(out, "{v:e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_bal<R: Read>(input: R) -> Result<BalData> {
    let mut lines = BufReader::new(input).lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let mut last = 0;
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((no, Ok(s))) => {
                last = no;
                Ok((no, s))
            }
            Some((no, Err(e))) => Err(Error::Bal {
                line: no,
                message: e.to_string(),
            }),
            None => Err(Error::Bal {
                line: last + 1,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    };

    let (no, header) = next("header")?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Bal {
            line: no,
            message: format!("bad header: {e}"),
        })?;
    let [cameras, points, nobs] = counts[..] else {
        return Err(Error::Bal {
            line: no,
            message: "header must hold three counts".into(),
        });
    };

    let mut observations = Vec::with_capacity(nobs);
    for k in 0..nobs {
        let (no, s) = next(&format!("observation {} of {nobs}", k + 1))?;
        let f: Vec<&str> = s.split_whitespace().collect();
        let bad = |m: String| Error::Bal { line: no, message: m };
        if f.len() != 4 {
            return Err(bad(format!("observation needs 4 fields, found {}", f.len())));
        }
        let camera: usize = f[0].parse().map_err(|e| bad(format!("camera index: {e}")))?;
        let point: usize = f[1].parse().map_err(|e| bad(format!("point index: {e}")))?;
        if camera >= cameras || point >= points {
            return Err(bad(format!("camera {camera} / point {point} out of range")));
        }
        let x: f64 = f[2].parse().map_err(|e| bad(format!("x: {e}")))?;
        let y: f64 = f[3].parse().map_err(|e| bad(format!("y: {e}")))?;
        observations.push(Observation { camera, point, x, y });
    }

    let n = cameras * CAMERA_PARAMS + points * POINT_PARAMS;
    let mut state = Vec::with_capacity(n);
    for i in 0..n {
        let what = if i < cameras * CAMERA_PARAMS {
            format!("camera {} parameter {}", i / CAMERA_PARAMS, i % CAMERA_PARAMS)
        } else {
            let j = i - cameras * CAMERA_PARAMS;
            format!("point {} coordinate {}", j / POINT_PARAMS, j % POINT_PARAMS)
        };
        let (no, s) = next(&what)?;
        let v: f64 = s.trim().parse().map_err(|e| Error::Bal {
            line: no,
            message: format!("{what}: {e}"),
        })?;
        state.push(v);
    }
    Ok(BalData {
        cameras,
        points,
        observations,
        state,
    })
}

/// Loads a file as a sum of squared reprojection residuals together with
/// the parameter values stored in it.
pub fn load_bal(path: impl AsRef<Path>) -> Result<(ObjectiveFunction<f64>, Vec<f64>)> {
    let data = read_bal(std::fs::File::open(path)?)?;
    let f = bundle_objective(data.cameras, data.points, &data.observations)?;
    Ok((f, data.state))
}
