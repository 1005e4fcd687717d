//! Temporal association and spatial registration of estimates against
//! ground truth, plus AX = XB hand-eye calibration.

use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{interpolate_pose, pose_norm, Pose, Rotation};
use crate::ingest::Trajectory;

/// Relative threshold on singular values below which geometry counts as
/// degenerate.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignmentError {
    #[error("no temporal overlap between estimate and ground truth")]
    NoOverlap,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("max_dt must be non-negative and finite, got {0}")]
    InvalidMaxDt(f64),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("translation of the hand-eye transform is unobservable: {0}")]
    UnobservableTranslation(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociatedPair {
    /// Estimate timestamp, seconds.
    pub t: f64,
    pub pose_gt: Pose,
    pub pose_est: Pose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMode {
    /// Ground-truth sample closest in time.
    Nearest,
    /// Ground truth interpolated at the estimate timestamp.
    #[default]
    Interpolate,
}

/// Default association tolerance: 1.5× the median ground-truth spacing.
pub fn default_max_dt(gt: &Trajectory) -> Option<f64> {
    gt.median_spacing().map(|dt| 1.5 * dt)
}

/// Pairs every estimate sample with ground truth at (or near) its timestamp.
///
/// In interpolate mode both bracketing ground-truth samples must lie within
/// `max_dt` of the estimate; estimates outside the ground-truth span are
/// dropped. In nearest mode the closest sample must lie within `max_dt`.
pub fn associate(
    est: &Trajectory,
    gt: &Trajectory,
    max_dt: f64,
    mode: AssociationMode,
) -> Result<Vec<AssociatedPair>, AlignmentError> {
    if est.is_empty() || gt.is_empty() {
        return Err(AlignmentError::EmptyTrajectory);
    }
    if !(max_dt >= 0.0 && max_dt.is_finite()) {
        return Err(AlignmentError::InvalidMaxDt(max_dt));
    }
    let g = gt.samples();
    let mut pairs = Vec::with_capacity(est.len());
    for s in est {
        let t = s.t;
        let idx = g.partition_point(|x| x.t <= t);
        let pose_gt = match mode {
            AssociationMode::Nearest => {
                let lower = idx.checked_sub(1).map(|i| &g[i]);
                let upper = g.get(idx);
                let best = match (lower, upper) {
                    (Some(a), Some(b)) => {
                        if (t - a.t) <= (b.t - t) {
                            a
                        } else {
                            b
                        }
                    }
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => unreachable!("gt is non-empty"),
                };
                ((best.t - t).abs() <= max_dt).then_some(best.pose)
            }
            AssociationMode::Interpolate => {
                if idx == 0 {
                    None
                } else if g[idx - 1].t == t {
                    Some(g[idx - 1].pose)
                } else if idx == g.len() {
                    None
                } else {
                    let (a, b) = (&g[idx - 1], &g[idx]);
                    if t - a.t <= max_dt && b.t - t <= max_dt {
                        let alpha = (t - a.t) / (b.t - a.t);
                        Some(
                            interpolate_pose(&a.pose, &b.pose, alpha)
                                .expect("alpha within [0, 1] by bracketing"),
                        )
                    } else {
                        None
                    }
                }
            }
        };
        if let Some(pose_gt) = pose_gt {
            pairs.push(AssociatedPair {
                t,
                pose_gt,
                pose_est: s.pose,
            });
        }
    }
    if pairs.is_empty() {
        return Err(AlignmentError::NoOverlap);
    }
    Ok(pairs)
}

/// `x ↦ s·R·x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub pose: Pose,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            pose: Pose::identity(),
        }
    }

    pub fn new(scale: f64, pose: Pose) -> Self {
        assert!(scale > 0.0, "similarity scale must be positive");
        Self { scale, pose }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.pose.rotation.rotate(p) * self.scale + self.pose.translation
    }

    /// Maps a pose expressed in the source frame into the target frame.
    pub fn apply_pose(&self, p: &Pose) -> Pose {
        Pose::new(self.pose.rotation * p.rotation, self.apply_point(&p.translation))
    }

    pub fn inverse(&self) -> Self {
        let r_inv = self.pose.rotation.inverse();
        let s_inv = 1.0 / self.scale;
        Self {
            scale: s_inv,
            pose: Pose::new(r_inv, -r_inv.rotate(&self.pose.translation) * s_inv),
        }
    }

    pub fn compose(&self, other: &SimilarityTransform) -> Self {
        Self {
            scale: self.scale * other.scale,
            pose: Pose::new(
                self.pose.rotation * other.pose.rotation,
                self.apply_point(&other.pose.translation),
            ),
        }
    }
}

/// Closed-form least-squares similarity (Umeyama) mapping estimated
/// positions onto ground-truth positions.
pub fn umeyama_align(
    pairs: &[AssociatedPair],
    with_scale: bool,
) -> Result<SimilarityTransform, AlignmentError> {
    let n = pairs.len();
    if n < 3 {
        return Err(AlignmentError::DegenerateGeometry(format!(
            "need at least 3 pairs, got {n}"
        )));
    }
    let inv_n = 1.0 / n as f64;
    let mu_est = pairs
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.pose_est.translation)
        * inv_n;
    let mu_gt = pairs
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.pose_gt.translation)
        * inv_n;

    let mut cross = Matrix3::zeros();
    let mut cov_gt = Matrix3::zeros();
    let mut cov_est = Matrix3::zeros();
    for p in pairs {
        let e = p.pose_est.translation - mu_est;
        let g = p.pose_gt.translation - mu_gt;
        cross += g * e.transpose();
        cov_gt += g * g.transpose();
        cov_est += e * e.transpose();
    }
    cross *= inv_n;
    cov_gt *= inv_n;
    cov_est *= inv_n;

    for (name, cov) in [("ground-truth", &cov_gt), ("estimated", &cov_est)] {
        let mut ev: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        if ev[0] <= 0.0 || ev[1] <= RANK_TOL * ev[0] {
            return Err(AlignmentError::DegenerateGeometry(format!(
                "{name} positions are collinear or coincident"
            )));
        }
    }

    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut sign = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        // reflection: flip the axis of the smallest singular value
        let (k, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("3 singular values");
        sign[(k, k)] = -1.0;
    }
    let r = u * sign * v_t;
    let scale = if with_scale {
        let var_est = cov_est.trace();
        (Matrix3::from_diagonal(&svd.singular_values) * sign).trace() / var_est
    } else {
        1.0
    };
    let rotation = Rotation::from_unit_quaternion(nalgebra::UnitQuaternion::from_matrix(&r));
    let translation = mu_gt - rotation.rotate(&mu_est) * scale;
    Ok(SimilarityTransform::new(scale, Pose::new(rotation, translation)))
}

/// Root-mean-square position residual of `sim` applied to the estimates.
pub fn alignment_rmse(pairs: &[AssociatedPair], sim: &SimilarityTransform) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let sum: f64 = pairs
        .iter()
        .map(|p| (p.pose_gt.translation - sim.apply_point(&p.pose_est.translation)).norm_squared())
        .sum();
    (sum / pairs.len() as f64).sqrt()
}

/// Applies `sim` to the estimate side of every pair.
pub fn align_pairs(pairs: &[AssociatedPair], sim: &SimilarityTransform) -> Vec<AssociatedPair> {
    pairs
        .iter()
        .map(|p| AssociatedPair {
            t: p.t,
            pose_gt: p.pose_gt,
            pose_est: sim.apply_pose(&p.pose_est),
        })
        .collect()
}

pub fn transform_trajectory(traj: &Trajectory, sim: &SimilarityTransform) -> Trajectory {
    traj.map_poses(|p| sim.apply_pose(p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandEyeSolution {
    pub x: Pose,
    /// `Σ pose_norm((A_i X)⁻¹ X B_i)²`.
    pub residual: f64,
}

/// Relative motions `(A_i, B_i)` between consecutive absolute poses of the
/// tracked body (`hand`, body in world) and the sensor (`eye`, sensor in a
/// fixed frame).
pub fn motion_pairs_from_poses(hand: &[Pose], eye: &[Pose]) -> Vec<(Pose, Pose)> {
    hand.windows(2)
        .zip(eye.windows(2))
        .map(|(h, e)| (h[0].between(&h[1]), e[0].between(&e[1])))
        .collect()
}

fn quat_mul(a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
    // (w, x, y, z)
    Vector4::new(
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    )
}

fn quat_conj(q: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(q[0], -q[1], -q[2], -q[3])
}

/// Unit dual quaternion `(real, dual)` of a pose, `dual = ½ t ⊗ real`.
fn dual_quaternion(p: &Pose) -> (Vector4<f64>, Vector4<f64>) {
    let [w, x, y, z] = p.rotation.wxyz();
    let real = Vector4::new(w, x, y, z);
    let t = &p.translation;
    let dual = quat_mul(&Vector4::new(0.0, t.x, t.y, t.z), &real) * 0.5;
    (real, dual)
}

fn check_axis_spread(motion_pairs: &[(Pose, Pose)]) -> Result<(), AlignmentError> {
    let mut scatter = Matrix3::zeros();
    let mut used = 0;
    for (a, _) in motion_pairs {
        let phi = a.rotation.log();
        let angle = phi.norm();
        if angle > 1e-9 {
            let axis = phi / angle;
            scatter += axis * axis.transpose();
            used += 1;
        }
    }
    if used < 2 {
        return Err(AlignmentError::UnobservableTranslation(format!(
            "{used} motion(s) with non-zero rotation"
        )));
    }
    let mut ev: Vec<f64> = scatter.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[1] <= 1e-8 * ev[0] {
        return Err(AlignmentError::UnobservableTranslation(
            "all rotation axes are parallel".into(),
        ));
    }
    Ok(())
}

/// Solves `A_i X = X B_i` with the linear dual-quaternion method: stack the
/// 6×8 constraint blocks, take the two-dimensional null space and pick the
/// combination satisfying the unit and orthogonality constraints.
pub fn solve_hand_eye(motion_pairs: &[(Pose, Pose)]) -> Result<HandEyeSolution, AlignmentError> {
    if motion_pairs.len() < 2 {
        return Err(AlignmentError::UnobservableTranslation(format!(
            "need at least 2 motion pairs, got {}",
            motion_pairs.len()
        )));
    }
    check_axis_spread(motion_pairs)?;

    let rows = 6 * motion_pairs.len();
    let mut t = DMatrix::<f64>::zeros(rows, 8);
    for (i, (a, b)) in motion_pairs.iter().enumerate() {
        let (ar, ad) = dual_quaternion(a);
        let (mut br, mut bd) = dual_quaternion(b);
        // A and B share a rotation angle; align quaternion hemispheres.
        if ar[0] * br[0] < 0.0 {
            br = -br;
            bd = -bd;
        }
        let av = ar.fixed_rows::<3>(1).into_owned();
        let bv = br.fixed_rows::<3>(1).into_owned();
        let adv = ad.fixed_rows::<3>(1).into_owned();
        let bdv = bd.fixed_rows::<3>(1).into_owned();
        let r0 = 6 * i;
        let diff = av - bv;
        let sum_skew = crate::geometry::skew(&(av + bv));
        let ddiff = adv - bdv;
        let dsum_skew = crate::geometry::skew(&(adv + bdv));
        for r in 0..3 {
            t[(r0 + r, 0)] = diff[r];
            t[(r0 + 3 + r, 0)] = ddiff[r];
            t[(r0 + 3 + r, 4)] = diff[r];
            for c in 0..3 {
                t[(r0 + r, 1 + c)] = sum_skew[(r, c)];
                t[(r0 + 3 + r, 1 + c)] = dsum_skew[(r, c)];
                t[(r0 + 3 + r, 5 + c)] = sum_skew[(r, c)];
            }
        }
    }

    let svd = t.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = |k: usize| svd.singular_values[order[k]];
    if sv(5) <= RANK_TOL * sv(0).max(f64::MIN_POSITIVE) {
        return Err(AlignmentError::UnobservableTranslation(
            "constraint matrix has a null space larger than two".into(),
        ));
    }
    let null1 = v_t.row(order[6]).transpose();
    let null2 = v_t.row(order[7]).transpose();
    let (u1, v1) = (null1.fixed_rows::<4>(0), null1.fixed_rows::<4>(4));
    let (u2, v2) = (null2.fixed_rows::<4>(0), null2.fixed_rows::<4>(4));

    // λ1, λ2 with  λᵀ Q λ = 0  (q ⊥ q')  and  λᵀ P λ = 1  (|q| = 1)
    let q_mat = Matrix2::new(
        u1.dot(&v1),
        0.5 * (u1.dot(&v2) + u2.dot(&v1)),
        0.5 * (u1.dot(&v2) + u2.dot(&v1)),
        u2.dot(&v2),
    );
    let p_mat = Matrix2::new(u1.dot(&u1), u1.dot(&u2), u1.dot(&u2), u2.dot(&u2));
    let eig = SymmetricEigen::new(q_mat);
    let (hi, lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let (e_hi, e_lo) = (eig.eigenvalues[hi], eig.eigenvalues[lo]);
    let p_hi = eig.eigenvectors.column(hi).into_owned();
    let p_lo = eig.eigenvectors.column(lo).into_owned();
    let candidates = if e_hi >= 0.0 && e_lo <= 0.0 && e_hi - e_lo > 0.0 {
        // cos²φ e_hi + sin²φ e_lo = 0
        let phi = (e_hi / (e_hi - e_lo)).sqrt().asin();
        vec![
            p_hi * phi.cos() + p_lo * phi.sin(),
            p_hi * phi.cos() - p_lo * phi.sin(),
        ]
    } else if e_hi < 0.0 {
        vec![p_hi]
    } else {
        vec![p_lo]
    };
    let lambda = candidates
        .into_iter()
        .map(|l| {
            let norm2 = (l.transpose() * p_mat * l)[(0, 0)];
            (l, norm2)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(l, n2)| l / n2.sqrt())
        .expect("at least one candidate");

    let real = u1 * lambda[0] + u2 * lambda[1];
    let dual = v1 * lambda[0] + v2 * lambda[1];
    let n = real.norm();
    let (real, dual) = (real / n, dual / n);
    let t_quat = quat_mul(&dual, &quat_conj(&real)) * 2.0;
    let rotation = Rotation::from_wxyz(real[0], real[1], real[2], real[3])
        .map_err(|e| AlignmentError::DegenerateGeometry(e.to_string()))?;
    let x = Pose::new(rotation, Vector3::new(t_quat[1], t_quat[2], t_quat[3]));
    Ok(HandEyeSolution {
        x,
        residual: hand_eye_residual(motion_pairs, &x),
    })
}

pub fn hand_eye_residual(motion_pairs: &[(Pose, Pose)], x: &Pose) -> f64 {
    motion_pairs
        .iter()
        .map(|(a, b)| pose_norm(&((*a * *x).inverse() * (*x * *b))).powi(2))
        .sum()
}
