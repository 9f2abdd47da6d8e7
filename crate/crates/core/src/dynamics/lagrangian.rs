//! Closed-form Lagrangian terms for three uniform rods.
//!
//! With link centre of mass `c_k = Σ_{l<k} L_l e(Θ_l) + (L_k/2) e(Θ_k)` the
//! kinetic energy gives
//!
//! ```text
//! M_ij = Σ_{a≥i} Σ_{b≥j} A_ab cos(Θ_a − Θ_b) + Σ_{k≥max(i,j)} I_k
//! A_ab = Σ_{k≥max(a,b)} m_k r_ka r_kb,   r_ka = L_a (a<k), L_k/2 (a=k)
//! ```
//!
//! The relative angles are `q_2`, `q_3` and `q_2 + q_3`, so
//! `M = M0 + cos q_2 K2 + cos q_3 K3 + cos(q_2+q_3) K23` with constant
//! matrices, and the only non-zero partials are with respect to `q_2` and
//! `q_3`. The potential is `V = g Σ_a B_a sin Θ_a` with `B_a = Σ_{k≥a} m_k r_ka`.
//! The Coriolis matrix is built from Christoffel symbols of these analytic
//! partials, so `Ṁ − 2C` is skew-symmetric by construction.

use crate::error::{Error, Result};
use crate::scalar::{cholesky3, cholesky_solve3, dot3, mat_vec, Mat3, Scalar, Vec3};

use super::kinematics::absolute_angles;
use super::{ArmParams, JointState, TorqueVector};

/// Configuration-independent coefficients of the arm's Lagrangian.
///
/// The variable part of `M` has a fixed sparsity pattern:
/// `K2 = α [[2,1,0],[1,0,0],[0,0,0]]`, `K3 = β [[2,2,1],[2,2,1],[1,1,0]]`,
/// `K23 = γ [[2,1,1],[1,0,0],[1,0,0]]` with `α = A_01`, `β = A_12`, `γ = A_02`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsModel<T> {
    constant: Mat3<T>,
    alpha: T,
    beta: T,
    gamma: T,
    /// g·B_a
    gravity_lever: Vec3<T>,
    friction: Vec3<T>,
}

/// Trigonometry of one configuration.
struct Angles<T> {
    s2: T,
    c2: T,
    s3: T,
    c3: T,
    s23: T,
    c23: T,
    /// cos Θ_a
    cos_abs: Vec3<T>,
}

impl<T: Scalar> Angles<T> {
    #[inline]
    fn new(q: &Vec3<T>) -> Self {
        let (s1, c1) = q[0].sin_cos();
        let (s2, c2) = q[1].sin_cos();
        let (s3, c3) = q[2].sin_cos();
        let s23 = s2 * c3 + c2 * s3;
        let c23 = c2 * c3 - s2 * s3;
        // Θ_2 = q_1 + q_2, Θ_3 = Θ_2 + q_3
        let s12 = s1 * c2 + c1 * s2;
        let c12 = c1 * c2 - s1 * s2;
        let c123 = c12 * c3 - s12 * s3;
        Self {
            s2,
            c2,
            s3,
            c3,
            s23,
            c23,
            cos_abs: [c1, c12, c123],
        }
    }
}

/// `K2 v / α`, `K3 v / β`, `K23 v / γ`.
#[inline]
fn pattern_products<T: Scalar>(v: &Vec3<T>) -> [Vec3<T>; 3] {
    let two = T::two();
    let k3 = two * (v[0] + v[1]) + v[2];
    [
        [two * v[0] + v[1], v[0], T::zero()],
        [k3, k3, v[0] + v[1]],
        [two * v[0] + v[1] + v[2], v[0], v[0]],
    ]
}

fn pattern_matrices<T: Scalar>() -> [Mat3<T>; 3] {
    let (z, o, t) = (T::zero(), T::one(), T::two());
    [
        [[t, o, z], [o, z, z], [z, z, z]],
        [[t, t, o], [t, t, o], [o, o, z]],
        [[t, o, o], [o, z, z], [o, z, z]],
    ]
}

impl<T: Scalar> DynamicsModel<T> {
    pub fn new(params: &ArmParams<T>) -> Self {
        let l = params.link_lengths;
        let m = params.link_masses;
        let lever = |k: usize, a: usize| if a < k { l[a] } else { l[k] * T::half() };
        let mut pair = [[T::zero(); 3]; 3];
        for (a, row) in pair.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                for k in a.max(b)..3 {
                    *entry = *entry + m[k] * lever(k, a) * lever(k, b);
                }
            }
        }
        let twelve = T::lit(12.0);
        let mut inertia_tail = [T::zero(); 3];
        let mut acc = T::zero();
        for k in (0..3).rev() {
            acc = acc + m[k] * l[k] * l[k] / twelve;
            inertia_tail[k] = acc;
        }
        let mut constant = [[T::zero(); 3]; 3];
        for (i, row) in constant.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = inertia_tail[i.max(j)];
                for a in i.max(j)..3 {
                    *entry = *entry + pair[a][a];
                }
            }
        }
        let mut gravity_lever = [T::zero(); 3];
        for (a, gl) in gravity_lever.iter_mut().enumerate() {
            for k in a..3 {
                *gl = *gl + m[k] * lever(k, a);
            }
            *gl = *gl * params.gravity_accel;
        }
        Self {
            constant,
            alpha: pair[0][1],
            beta: pair[1][2],
            gamma: pair[0][2],
            gravity_lever,
            friction: params.joint_viscous_friction,
        }
    }

    #[inline]
    fn mass(&self, a: &Angles<T>) -> Mat3<T> {
        let [p2, p3, p23] = pattern_matrices::<T>();
        let (w2, w3, w23) = (a.c2 * self.alpha, a.c3 * self.beta, a.c23 * self.gamma);
        let mut m = self.constant;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = m[i][j] + w2 * p2[i][j] + w3 * p3[i][j] + w23 * p23[i][j];
            }
        }
        m
    }

    #[inline]
    fn mass_times(&self, a: &Angles<T>, v: &Vec3<T>) -> Vec3<T> {
        let [k2, k3, k23] = pattern_products(v);
        let (w2, w3, w23) = (a.c2 * self.alpha, a.c3 * self.beta, a.c23 * self.gamma);
        let base = mat_vec(&self.constant, v);
        let mut out = [T::zero(); 3];
        for i in 0..3 {
            out[i] = base[i] + w2 * k2[i] + w3 * k3[i] + w23 * k23[i];
        }
        out
    }

    /// `[∂M/∂q_1, ∂M/∂q_2, ∂M/∂q_3]`.
    fn partials(&self, a: &Angles<T>) -> [Mat3<T>; 3] {
        let [p2, p3, p23] = pattern_matrices::<T>();
        let mut d = [[[T::zero(); 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let shared = -a.s23 * self.gamma * p23[i][j];
                d[1][i][j] = -a.s2 * self.alpha * p2[i][j] + shared;
                d[2][i][j] = -a.s3 * self.beta * p3[i][j] + shared;
            }
        }
        d
    }

    #[inline]
    fn gravity(&self, a: &Angles<T>) -> Vec3<T> {
        let g2 = self.gravity_lever[2] * a.cos_abs[2];
        let g1 = g2 + self.gravity_lever[1] * a.cos_abs[1];
        let g0 = g1 + self.gravity_lever[0] * a.cos_abs[0];
        [g0, g1, g2]
    }

    /// C(q, q̇) q̇ = Ṁ q̇ − ½ ∇_q(q̇ᵀ M q̇).
    #[inline]
    fn velocity_terms(&self, a: &Angles<T>, u: &Vec3<T>) -> Vec3<T> {
        let [k2, k3, k23] = pattern_products(u);
        let quad2 = self.alpha * (u[0] * k2[0] + u[1] * k2[1]);
        let quad3 = self.beta * (u[0] * k3[0] + u[1] * k3[1] + u[2] * k3[2]);
        let quad23 = self.gamma * (u[0] * k23[0] + u[1] * k23[1] + u[2] * k23[2]);
        let w2 = -a.s2 * u[1] * self.alpha;
        let w3 = -a.s3 * u[2] * self.beta;
        let w23 = -a.s23 * (u[1] + u[2]) * self.gamma;
        let mut h = [T::zero(); 3];
        for i in 0..3 {
            h[i] = w2 * k2[i] + w3 * k3[i] + w23 * k23[i];
        }
        let half = T::half();
        h[1] = h[1] + half * (a.s2 * quad2 + a.s23 * quad23);
        h[2] = h[2] + half * (a.s3 * quad3 + a.s23 * quad23);
        h
    }

    pub fn mass_matrix(&self, q: &Vec3<T>) -> Mat3<T> {
        self.mass(&Angles::new(q))
    }

    pub fn mass_matrix_partials(&self, q: &Vec3<T>) -> [Mat3<T>; 3] {
        self.partials(&Angles::new(q))
    }

    pub fn coriolis_matrix(&self, q: &Vec3<T>, qdot: &Vec3<T>) -> Mat3<T> {
        let d = self.partials(&Angles::new(q));
        let mut c = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut v = T::zero();
                for k in 0..3 {
                    let christoffel = d[k][i][j] + d[j][i][k] - d[i][j][k];
                    v = v + christoffel * qdot[k];
                }
                c[i][j] = v * T::half();
            }
        }
        c
    }

    pub fn gravity_vector(&self, q: &Vec3<T>) -> Vec3<T> {
        self.gravity(&Angles::new(q))
    }

    pub fn potential_energy(&self, q: &Vec3<T>) -> T {
        let theta = absolute_angles(q);
        (0..3).fold(T::zero(), |acc, a| acc + self.gravity_lever[a] * theta[a].sin())
    }

    /// τ = M q̈ + C q̇ + g + b q̇.
    #[inline]
    pub fn inverse_dynamics(&self, state: &JointState<T>) -> TorqueVector<T> {
        let a = Angles::new(&state.q);
        let inertial = self.mass_times(&a, &state.qddot);
        let velocity = self.velocity_terms(&a, &state.qdot);
        let g = self.gravity(&a);
        let mut tau = [T::zero(); 3];
        for i in 0..3 {
            tau[i] = inertial[i] + velocity[i] + g[i] + self.friction[i] * state.qdot[i];
        }
        TorqueVector::new(tau)
    }

    pub fn forward_dynamics(
        &self,
        q: &Vec3<T>,
        qdot: &Vec3<T>,
        tau: &TorqueVector<T>,
    ) -> Result<Vec3<T>> {
        let a = Angles::new(q);
        let velocity = self.velocity_terms(&a, qdot);
        let g = self.gravity(&a);
        let mut rhs = [T::zero(); 3];
        for i in 0..3 {
            rhs[i] = tau.tau[i] - velocity[i] - g[i] - self.friction[i] * qdot[i];
        }
        let l = cholesky3(&self.mass(&a)).ok_or(Error::SingularMassMatrix)?;
        Ok(cholesky_solve3(&l, &rhs))
    }
}

pub fn mass_matrix<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> Mat3<T> {
    DynamicsModel::new(params).mass_matrix(q)
}

/// Analytic partial derivatives of the mass matrix, indexed `[s][i][j]`.
pub fn mass_matrix_partials<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> [Mat3<T>; 3] {
    DynamicsModel::new(params).mass_matrix_partials(q)
}

pub fn coriolis_matrix<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>, qdot: &Vec3<T>) -> Mat3<T> {
    DynamicsModel::new(params).coriolis_matrix(q, qdot)
}

pub fn gravity_vector<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> Vec3<T> {
    DynamicsModel::new(params).gravity_vector(q)
}

pub fn potential_energy<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>) -> T {
    DynamicsModel::new(params).potential_energy(q)
}

pub fn kinetic_energy<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>, qdot: &Vec3<T>) -> T {
    T::half() * dot3(qdot, &mat_vec(&mass_matrix(params, q), qdot))
}

pub fn mechanical_energy<T: Scalar>(params: &ArmParams<T>, q: &Vec3<T>, qdot: &Vec3<T>) -> T {
    kinetic_energy(params, q, qdot) + potential_energy(params, q)
}

pub fn inverse_dynamics<T: Scalar>(params: &ArmParams<T>, state: &JointState<T>) -> TorqueVector<T> {
    DynamicsModel::new(params).inverse_dynamics(state)
}

/// q̈ = M⁻¹ (τ − C q̇ − g − b q̇), solved through a Cholesky factorization.
pub fn forward_dynamics<T: Scalar>(
    params: &ArmParams<T>,
    q: &Vec3<T>,
    qdot: &Vec3<T>,
    tau: &TorqueVector<T>,
) -> Result<Vec3<T>> {
    DynamicsModel::new(params).forward_dynamics(q, qdot, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::forward_kinematics;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_mass_arm() -> ArmParams<f64> {
        let mut arm = ArmParams::<f64>::canonical();
        arm.link_masses = [1.0; 3];
        arm
    }

    fn random_vec(rng: &mut ChaCha8Rng, span: f64) -> [f64; 3] {
        [rng.gen_range(-span..span), rng.gen_range(-span..span), rng.gen_range(-span..span)]
    }

    #[test]
    fn static_gravity_at_zero_configuration() {
        let g = gravity_vector(&unit_mass_arm(), &[0.0; 3]);
        // moment arms of the link centres about joints 1, 2, 3
        let expected = [9.81 * (0.5 + 1.4 + 2.1), 9.81 * (0.4 + 1.1), 9.81 * 0.3];
        for (a, b) in g.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((g[0] - 39.24).abs() < 1e-12);
    }

    #[test]
    fn no_gravity_moment_when_pointing_up() {
        let g = gravity_vector(&unit_mass_arm(), &[FRAC_PI_2, 0.0, 0.0]);
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn coriolis_vanishes_at_rest_and_is_homogeneous() {
        let arm = ArmParams::<f64>::canonical();
        let q = [0.2, -0.4, 0.9];
        let c0 = coriolis_matrix(&arm, &q, &[0.0; 3]);
        assert!(c0.iter().flatten().all(|v| *v == 0.0));
        let qdot = [0.3, -1.2, 0.5];
        let c1 = coriolis_matrix(&arm, &q, &qdot);
        let c2 = coriolis_matrix(&arm, &q, &qdot.map(|v| 2.5 * v));
        for i in 0..3 {
            for j in 0..3 {
                assert!((2.5 * c1[i][j] - c2[i][j]).abs() < 1e-12);
            }
        }
    }

    /// ½ Σ m_k |ċ_k|² + ½ I_k ω_k² from link centre velocities.
    fn per_link_kinetic_energy(arm: &ArmParams<f64>, q: &[f64; 3], qdot: &[f64; 3]) -> f64 {
        let theta = [q[0], q[0] + q[1], q[0] + q[1] + q[2]];
        let omega = [qdot[0], qdot[0] + qdot[1], qdot[0] + qdot[1] + qdot[2]];
        let mut energy = 0.0;
        let mut joint_vel = [0.0, 0.0];
        for k in 0..3 {
            let (l, m) = (arm.link_lengths[k], arm.link_masses[k]);
            let com_vel = [
                joint_vel[0] - 0.5 * l * theta[k].sin() * omega[k],
                joint_vel[1] + 0.5 * l * theta[k].cos() * omega[k],
            ];
            energy += 0.5 * m * (com_vel[0].powi(2) + com_vel[1].powi(2));
            energy += 0.5 * (m * l * l / 12.0) * omega[k].powi(2);
            joint_vel[0] -= l * theta[k].sin() * omega[k];
            joint_vel[1] += l * theta[k].cos() * omega[k];
        }
        energy
    }

    #[test]
    fn mass_matrix_matches_per_link_energy() {
        let arm = ArmParams::<f64>::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let q = random_vec(&mut rng, PI);
            let qdot = random_vec(&mut rng, 3.0);
            let m = mass_matrix(&arm, &q);
            let quad = dot3(&qdot, &mat_vec(&m, &qdot));
            let oracle = 2.0 * per_link_kinetic_energy(&arm, &q, &qdot);
            assert!((quad - oracle).abs() <= 1e-10 * oracle.abs().max(1e-12));
        }
    }

    #[test]
    fn potential_matches_com_heights() {
        let arm = ArmParams::<f64>::canonical();
        let q = [0.4, -1.0, 0.3];
        let p = forward_kinematics(&arm, &q).points;
        let com_y: Vec<f64> = (0..3).map(|k| 0.5 * (p[k][1] + p[k + 1][1])).collect();
        let expected: f64 = (0..3).map(|k| arm.link_masses[k] * 9.81 * com_y[k]).sum();
        assert!((potential_energy(&arm, &q) - expected).abs() < 1e-12);
    }

    #[test]
    fn mass_partials_match_finite_differences() {
        let arm = ArmParams::<f64>::canonical();
        let q = [0.7, -0.3, 1.9];
        let d = mass_matrix_partials(&arm, &q);
        let h = 1e-6;
        for s in 0..3 {
            let (mut qp, mut qm) = (q, q);
            qp[s] += h;
            qm[s] -= h;
            let (mp, mm) = (mass_matrix(&arm, &qp), mass_matrix(&arm, &qm));
            for i in 0..3 {
                for j in 0..3 {
                    let fd = (mp[i][j] - mm[i][j]) / (2.0 * h);
                    assert!((fd - d[s][i][j]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn inverse_dynamics_matches_explicit_terms() {
        let arm = ArmParams::<f64>::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let state = JointState::new(random_vec(&mut rng, PI), random_vec(&mut rng, 2.0), random_vec(&mut rng, 2.0));
            let m = mass_matrix(&arm, &state.q);
            let c = coriolis_matrix(&arm, &state.q, &state.qdot);
            let g = gravity_vector(&arm, &state.q);
            let (mq, cq) = (mat_vec(&m, &state.qddot), mat_vec(&c, &state.qdot));
            let tau = inverse_dynamics(&arm, &state).tau;
            for i in 0..3 {
                assert!((tau[i] - (mq[i] + cq[i] + g[i])).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn equilibrium_torque_gives_zero_acceleration() {
        let arm = ArmParams::<f64>::canonical();
        let q = [0.3, 0.5, -0.8];
        let tau = TorqueVector::new(gravity_vector(&arm, &q));
        let qddot = forward_dynamics(&arm, &q, &[0.0; 3], &tau).unwrap();
        assert!(qddot.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn zero_gravity_zero_motion_needs_no_torque() {
        let mut arm = ArmParams::<f64>::canonical();
        arm.gravity_accel = 0.0;
        let tau = inverse_dynamics(&arm, &JointState::at_rest([0.3, 0.1, 0.2]));
        assert_eq!(tau.tau, [0.0; 3]);
    }

    #[test]
    fn friction_adds_viscous_torque() {
        let mut arm = ArmParams::<f64>::canonical();
        arm.gravity_accel = 0.0;
        let state = JointState::new([0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]);
        let base = inverse_dynamics(&arm, &state).tau;
        arm.joint_viscous_friction = [0.5, 0.0, 0.0];
        let with_friction = inverse_dynamics(&arm, &state).tau;
        assert!((with_friction[0] - base[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f32_inverse_dynamics_tracks_f64() {
        let state64 = JointState::new([0.3, -0.2, 0.9], [0.5, 0.1, -0.4], [1.0, -2.0, 0.5]);
        let state32 = JointState::new(
            state64.q.map(|v| v as f32),
            state64.qdot.map(|v| v as f32),
            state64.qddot.map(|v| v as f32),
        );
        let t64 = inverse_dynamics(&ArmParams::<f64>::canonical(), &state64).tau;
        let t32 = inverse_dynamics(&ArmParams::<f32>::canonical(), &state32).tau;
        for (a, b) in t64.iter().zip(t32) {
            assert!((a - b as f64).abs() < 1e-3 * a.abs().max(1.0));
        }
    }
}
