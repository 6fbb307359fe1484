//! Synthetic bundle adjustment. Each camera has nine parameters (rotation
//! vector, translation, focal length, two radial distortion coefficients)
//! and each point three coordinates; camera variables come first.
//!
//! A world point `X` maps to `P = R(w) X + t`, then `p = -P_xy / P_z`, and
//! the image position is `f * (1 + k1 |p|^2 + k2 |p|^4) * p`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::expr::{ExprNode, ObjectiveFunction, Scratch, Tape, Variable};
use crate::optim::RngStream;

type E = ExprNode<f64>;

pub const CAMERA_PARAMS: usize = 9;
pub const POINT_PARAMS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct BundleSpec {
    pub cameras: usize,
    pub points: usize,
    /// Probability that a camera observes a given point; every point is
    /// observed by at least two cameras regardless.
    pub density: f64,
    /// Standard deviation of the Gaussian noise added to observations.
    pub observation_noise: f64,
    /// Standard deviation of the Gaussian perturbation of the start state.
    pub parameter_noise: f64,
    pub seed: u64,
}

impl BundleSpec {
    pub fn new(cameras: usize, points: usize) -> Self {
        BundleSpec {
            cameras,
            points,
            density: 0.75,
            observation_noise: 0.0,
            parameter_noise: 1e-3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cameras < 2 || self.points == 0 {
            return Err(Error::Spec("bundle needs at least two cameras and one point".into()));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Spec("density must lie in [0, 1]".into()));
        }
        if !(self.observation_noise >= 0.0 && self.parameter_noise >= 0.0) {
            return Err(Error::Spec("noise levels must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub camera: usize,
    pub point: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug)]
pub struct Bundle {
    pub function: ObjectiveFunction<f64>,
    pub cameras: usize,
    pub points: usize,
    pub observations: Vec<Observation>,
    pub truth: Vec<f64>,
    pub start: Vec<f64>,
}

pub fn camera_var(camera: usize, k: usize) -> usize {
    camera * CAMERA_PARAMS + k
}

pub fn point_var(cameras: usize, point: usize, k: usize) -> usize {
    cameras * CAMERA_PARAMS + point * POINT_PARAMS + k
}

/// Image coordinates of `point` seen by `camera`, as expressions.
pub fn projection(cameras: usize, camera: usize, point: usize) -> (E, E) {
    let w: Vec<E> = (0..3).map(|k| E::var(camera_var(camera, k))).collect();
    let t: Vec<E> = (3..6).map(|k| E::var(camera_var(camera, k))).collect();
    let (f, k1, k2) = (
        E::var(camera_var(camera, 6)),
        E::var(camera_var(camera, 7)),
        E::var(camera_var(camera, 8)),
    );
    let x: Vec<E> = (0..3).map(|k| E::var(point_var(cameras, point, k))).collect();

    let theta2 = E::sum(w.iter().map(|c| c.clone().powi(2)));
    let theta = theta2.clone().sqrt();
    let cos = theta.clone().cos();
    let a = theta.clone().sin() / theta;
    let b = (E::constant(1.0) - cos.clone()) / theta2;
    let dot = E::sum((0..3).map(|k| w[k].clone() * x[k].clone()));
    let cross = |i: usize, j: usize| w[i].clone() * x[j].clone() - w[j].clone() * x[i].clone();
    let cr = [cross(1, 2), cross(2, 0), cross(0, 1)];
    let cam: Vec<E> = (0..3)
        .map(|k| {
            x[k].clone() * cos.clone()
                + a.clone() * cr[k].clone()
                + b.clone() * w[k].clone() * dot.clone()
                + t[k].clone()
        })
        .collect();
    let px = -(cam[0].clone() / cam[2].clone());
    let py = -(cam[1].clone() / cam[2].clone());
    let r2 = px.clone().powi(2) + py.clone().powi(2);
    let scale = f * (E::constant(1.0) + k1 * r2.clone() + k2 * r2.powi(2));
    (scale.clone() * px, scale * py)
}

/// Sum of squared reprojection residuals for the given observations.
pub fn bundle_objective(cameras: usize, points: usize, observations: &[Observation]) -> Result<ObjectiveFunction<f64>> {
    let mut variables = Vec::with_capacity(cameras * CAMERA_PARAMS + points * POINT_PARAMS);
    const CAM_NAMES: [&str; 9] = ["w0", "w1", "w2", "t0", "t1", "t2", "f", "k1", "k2"];
    for c in 0..cameras {
        for name in CAM_NAMES {
            let i = variables.len();
            variables.push(Variable::new(
                i,
                format!("c{c}_{name}"),
                f64::NEG_INFINITY,
                f64::INFINITY,
            )?);
        }
    }
    for p in 0..points {
        for name in ["x", "y", "z"] {
            let i = variables.len();
            variables.push(Variable::new(
                i,
                format!("p{p}_{name}"),
                f64::NEG_INFINITY,
                f64::INFINITY,
            )?);
        }
    }
    let mut exprs = Vec::with_capacity(2 * observations.len());
    for o in observations {
        if o.camera >= cameras || o.point >= points {
            return Err(Error::Spec(format!(
                "observation refers to camera {} / point {} out of range",
                o.camera, o.point
            )));
        }
        let (u, v) = projection(cameras, o.camera, o.point);
        exprs.push((u - E::constant(o.x)).powi(2));
        exprs.push((v - E::constant(o.y)).powi(2));
    }
    ObjectiveFunction::new(variables, exprs)
}

/// Rotation vector of a rotation matrix given by rows.
pub fn rotation_vector(r: [[f64; 3]; 3]) -> [f64; 3] {
    let tr = r[0][0] + r[1][1] + r[2][2];
    let cos = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let v = [r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]];
    if theta < 1e-8 {
        return [v[0] / 2.0, v[1] / 2.0, v[2] / 2.0];
    }
    if std::f64::consts::PI - theta < 1e-6 {
        // axis from the largest diagonal entry of (R + I) / 2
        let i = (0..3)
            .max_by(|&a, &b| r[a][a].partial_cmp(&r[b][b]).expect("finite"))
            .expect("three entries");
        let mut axis = [0.0; 3];
        for k in 0..3 {
            axis[k] = (r[k][i] + if k == i { 1.0 } else { 0.0 }) / 2.0;
        }
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        return [axis[0] / n * theta, axis[1] / n * theta, axis[2] / n * theta];
    }
    let s = theta / (2.0 * theta.sin());
    [v[0] * s, v[1] * s, v[2] * s]
}

fn look_at(center: [f64; 3]) -> [[f64; 3]; 3] {
    let norm = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    // the camera looks down its negative z axis
    let z = norm(center);
    let x = norm(cross([0.0, 0.0, 1.0], z));
    let y = cross(z, x);
    [x, y, z]
}

/// Generates a scene with cameras on a ring looking at a cloud of points
/// near the origin. With zero observation noise every residual vanishes at
/// `truth`; `start` is `truth` plus parameter noise.
pub fn make_bundle(spec: &BundleSpec, rng: &mut RngStream) -> Result<Bundle> {
    spec.validate()?;
    let (nc, np) = (spec.cameras, spec.points);
    let n = nc * CAMERA_PARAMS + np * POINT_PARAMS;
    let mut truth = vec![0.0; n];
    for c in 0..nc {
        let phi = 2.0 * std::f64::consts::PI * c as f64 / nc as f64;
        let center = [8.0 * phi.cos(), 8.0 * phi.sin(), 1.0 + rng.uniform(-0.5, 0.5)];
        let r = look_at(center);
        let w = rotation_vector(r);
        let t: Vec<f64> = (0..3)
            .map(|i| -(r[i][0] * center[0] + r[i][1] * center[1] + r[i][2] * center[2]))
            .collect();
        let params = [
            w[0],
            w[1],
            w[2],
            t[0],
            t[1],
            t[2],
            500.0 + rng.uniform(-20.0, 20.0),
            -0.05,
            0.01,
        ];
        truth[camera_var(c, 0)..camera_var(c, 0) + CAMERA_PARAMS].copy_from_slice(&params);
    }
    for p in 0..np {
        for k in 0..3 {
            truth[point_var(nc, p, k)] = rng.uniform(-1.0, 1.0);
        }
    }

    let mut pairs = Vec::new();
    for p in 0..np {
        let mut seen: Vec<usize> = (0..nc).filter(|_| rng.inner().gen_bool(spec.density)).collect();
        while seen.len() < 2 {
            let c = rng.below(nc);
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        seen.sort_unstable();
        pairs.extend(seen.into_iter().map(|c| (c, p)));
    }

    let obs_noise =
        Normal::new(0.0, spec.observation_noise.max(f64::MIN_POSITIVE)).map_err(|e| Error::Spec(e.to_string()))?;
    let mut scratch = Scratch::default();
    let mut observations = Vec::with_capacity(pairs.len());
    for (c, p) in pairs {
        let (u, v) = projection(nc, c, p);
        let mut ox = Tape::compile(&u).eval(&truth, &mut scratch)?;
        let mut oy = Tape::compile(&v).eval(&truth, &mut scratch)?;
        if spec.observation_noise > 0.0 {
            ox += obs_noise.sample(rng.inner());
            oy += obs_noise.sample(rng.inner());
        }
        observations.push(Observation {
            camera: c,
            point: p,
            x: ox,
            y: oy,
        });
    }

    let function = bundle_objective(nc, np, &observations)?;
    let mut start = truth.clone();
    if spec.parameter_noise > 0.0 {
        let noise = Normal::new(0.0, spec.parameter_noise).map_err(|e| Error::Spec(e.to_string()))?;
        for v in start.iter_mut() {
            *v += noise.sample(rng.inner());
        }
    }
    Ok(Bundle {
        function,
        cameras: nc,
        points: np,
        observations,
        truth,
        start,
    })
}

/// One block per camera followed by one block per point.
pub fn bundle_blocks(cameras: usize, points: usize) -> Vec<Vec<usize>> {
    (0..cameras)
        .map(|c| (camera_var(c, 0)..camera_var(c, 0) + CAMERA_PARAMS).collect())
        .chain((0..points).map(|p| (point_var(cameras, p, 0)..point_var(cameras, p, 0) + POINT_PARAMS).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotate(w: [f64; 3], x: [f64; 3]) -> [f64; 3] {
        let th = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let k = [w[0] / th, w[1] / th, w[2] / th];
        let kx = [
            k[1] * x[2] - k[2] * x[1],
            k[2] * x[0] - k[0] * x[2],
            k[0] * x[1] - k[1] * x[0],
        ];
        let kd = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
        let (s, c) = th.sin_cos();
        [0, 1, 2].map(|i| x[i] * c + kx[i] * s + k[i] * kd * (1.0 - c))
    }

    #[test]
    fn rotation_vector_inverts_rodrigues() {
        for center in [[8.0, 0.0, 1.0], [-3.0, 7.0, 0.5], [0.1, -8.0, 1.4], [-8.0, 0.01, 1.0]] {
            let r = look_at(center);
            let w = rotation_vector(r);
            let x = [0.3, -1.2, 2.5];
            let a = rotate(w, x);
            for i in 0..3 {
                let b = r[i][0] * x[0] + r[i][1] * x[1] + r[i][2] * x[2];
                assert!((a[i] - b).abs() < 1e-12, "{center:?}");
            }
        }
    }

    #[test]
    fn residuals_vanish_at_truth() {
        let spec = BundleSpec {
            parameter_noise: 0.0,
            ..BundleSpec::new(4, 20)
        };
        let b = make_bundle(&spec, &mut RngStream::new(5)).unwrap();
        assert_eq!(b.function.num_variables(), 96);
        assert_eq!(b.function.num_terms(), 2 * b.observations.len());
        assert!(b.function.evaluate(&b.truth).unwrap() <= 1e-18);
        assert_eq!(b.start, b.truth);
    }

    #[test]
    fn every_point_seen_twice_and_in_front() {
        let spec = BundleSpec {
            density: 0.0,
            ..BundleSpec::new(5, 30)
        };
        let b = make_bundle(&spec, &mut RngStream::new(1)).unwrap();
        for p in 0..30 {
            assert_eq!(b.observations.iter().filter(|o| o.point == p).count(), 2);
        }
    }

    #[test]
    fn terms_pair_one_camera_with_one_point() {
        let b = make_bundle(&BundleSpec::new(3, 10), &mut RngStream::new(2)).unwrap();
        for (t, o) in b
            .function
            .terms()
            .iter()
            .zip(b.observations.iter().flat_map(|o| [o, o]))
        {
            let cam: Vec<usize> = (0..9).map(|k| camera_var(o.camera, k)).collect();
            let pt: Vec<usize> = (0..3).map(|k| point_var(3, o.point, k)).collect();
            assert_eq!(t.scope(), [cam, pt].concat().as_slice());
        }
    }
}
