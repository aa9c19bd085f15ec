//! Full-order explicit MPM: state containers and the transfer kernels.
//!
//! One timestep is P2G → grid force assembly → grid update (with boundary
//! projection) → G2P with APIC affine updates and per-particle return
//! mapping, in symplectic-Euler order.

mod solver;

pub use solver::{
    bspline_weights, g2p, g2p_kinematic_subset, g2p_subset, grid_forces, grid_forces_subset,
    grid_update, p2g, p2g_subset, step, step_subset, steps_taken, total_angular_momentum, Stencil,
    StencilNode, StepStats,
};

use crate::constitutive::{ElasticParams, Elasticity, PlasticParams};
use crate::{Error, Mat3, Result, Vec3};

/// Per-particle state of one simulation, stored struct-of-arrays.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    /// Reference (material) positions X_p.
    pub ref_pos: Vec<Vec3>,
    /// Current positions x_p.
    pub pos: Vec<Vec3>,
    /// Velocities v_p.
    pub vel: Vec<Vec3>,
    /// Masses m_p.
    pub mass: Vec<f64>,
    /// Initial volumes V⁰_p.
    pub volume0: Vec<f64>,
    /// Elastic deformation gradients F^E_p.
    pub def_grad: Vec<Mat3>,
    /// APIC affine momenta C_p.
    pub affine: Vec<Mat3>,
    /// Kirchhoff stresses τ_p.
    pub stress: Vec<Mat3>,
    /// Current yield stress per particle (von Mises hardening/softening).
    pub yield_stress: Vec<f64>,
    /// Damage flags; a damaged particle carries zero Lamé moduli.
    pub damaged: Vec<bool>,
    /// Per-particle elastic moduli (weak elements vary them spatially).
    pub elastic: Vec<ElasticParams>,
    /// Hyperelastic law used when no plastic model is active.
    pub elasticity: Elasticity,
    /// Shared plasticity parameters.
    pub plastic: PlasticParams,
}

impl ParticleSystem {
    pub fn new(elasticity: Elasticity, plastic: PlasticParams) -> Self {
        ParticleSystem {
            ref_pos: Vec::new(),
            pos: Vec::new(),
            vel: Vec::new(),
            mass: Vec::new(),
            volume0: Vec::new(),
            def_grad: Vec::new(),
            affine: Vec::new(),
            stress: Vec::new(),
            yield_stress: Vec::new(),
            damaged: Vec::new(),
            elastic: Vec::new(),
            elasticity,
            plastic,
        }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Adds a particle at rest state (F = I, C = 0, τ = 0).
    pub fn push(
        &mut self,
        position: Vec3,
        velocity: Vec3,
        mass: f64,
        volume0: f64,
        elastic: ElasticParams,
    ) {
        debug_assert!(mass > 0.0 && volume0 > 0.0);
        self.ref_pos.push(position);
        self.pos.push(position);
        self.vel.push(velocity);
        self.mass.push(mass);
        self.volume0.push(volume0);
        self.def_grad.push(Mat3::identity());
        self.affine.push(Mat3::zeros());
        self.stress.push(Mat3::zeros());
        self.yield_stress.push(self.plastic.yield_stress);
        self.damaged.push(false);
        self.elastic.push(elastic);
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Total linear momentum Σ m_p v_p.
    pub fn linear_momentum(&self) -> Vec3 {
        self.mass
            .iter()
            .zip(&self.vel)
            .fold(Vec3::zeros(), |acc, (&m, v)| acc + v * m)
    }

    /// Analytic size in bytes of the live particle state.
    pub fn state_bytes(&self) -> usize {
        let n = self.len();
        // three Mat3, four Vec3, three f64, one bool, one ElasticParams
        n * (3 * 72 + 4 * 24 + 3 * 8 + 1 + 5 * 8)
    }
}

/// Boundary behavior of a half-space collider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Grid velocity set to the collider velocity.
    Sticky,
    /// Inward normal component relative to the collider removed.
    Slip,
}

/// A half-space collider applied to grid nodes. The half-space
/// `(x − point)·normal ≤ 0` is inside the collider; `point` advances with
/// the prescribed velocity, supporting moving grips and presses.
#[derive(Debug, Clone, Copy)]
pub struct GridBoundary {
    pub kind: BoundaryKind,
    pub point: Vec3,
    /// Unit normal pointing out of the collider toward the material.
    pub normal: Vec3,
    /// Prescribed collider velocity.
    pub velocity: Vec3,
}

impl GridBoundary {
    pub fn half_space(kind: BoundaryKind, point: Vec3, normal: Vec3) -> Self {
        GridBoundary {
            kind,
            point,
            normal: normal.normalize(),
            velocity: Vec3::zeros(),
        }
    }

    pub fn with_velocity(mut self, velocity: Vec3) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (x - self.point).dot(&self.normal) <= 0.0
    }

    /// Projects a grid velocity according to the boundary kind.
    pub fn project(&self, v: Vec3) -> Vec3 {
        match self.kind {
            BoundaryKind::Sticky => self.velocity,
            BoundaryKind::Slip => {
                let rel = v - self.velocity;
                let vn = rel.dot(&self.normal);
                if vn < 0.0 {
                    self.velocity + rel - self.normal * vn
                } else {
                    v
                }
            }
        }
    }

    pub fn advance(&mut self, dt: f64) {
        self.point += self.velocity * dt;
    }
}

/// Uniform background Eulerian grid with node mass, velocity and force.
#[derive(Debug, Clone)]
pub struct Grid {
    pub origin: Vec3,
    /// Node spacing Δx.
    pub dx: f64,
    /// Node counts per axis.
    pub dims: [usize; 3],
    pub mass: Vec<f64>,
    pub velocity: Vec<Vec3>,
    pub force: Vec<Vec3>,
    pub boundaries: Vec<GridBoundary>,
    /// Nodes below this mass are inactive; set by P2G from the total
    /// transferred mass.
    pub mass_epsilon: f64,
    touched: Vec<usize>,
    stamp: Vec<u64>,
    stamp_value: u64,
}

impl Grid {
    pub fn new(origin: Vec3, dx: f64, dims: [usize; 3]) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::Config(format!(
                "grid spacing must be positive, got {dx}"
            )));
        }
        if dims.iter().any(|&d| d < 5) {
            return Err(Error::Config(format!(
                "grid needs at least 5 nodes per axis so stencils never touch the outer layer, got {dims:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(Grid {
            origin,
            dx,
            dims,
            mass: vec![0.0; n],
            velocity: vec![Vec3::zeros(); n],
            force: vec![Vec3::zeros(); n],
            boundaries: Vec::new(),
            mass_epsilon: 0.0,
            touched: Vec::new(),
            stamp: vec![0; n],
            stamp_value: 0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn node_position(&self, index: usize) -> Vec3 {
        let k = index % self.dims[2];
        let j = (index / self.dims[2]) % self.dims[1];
        let i = index / (self.dims[1] * self.dims[2]);
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.dx
    }

    /// Nodes written by the last P2G, ascending.
    pub fn touched_nodes(&self) -> &[usize] {
        &self.touched
    }

    /// Zeroes transfer state on previously touched nodes and starts a new
    /// touch epoch.
    pub(crate) fn begin_transfer(&mut self) {
        for &idx in &self.touched {
            self.mass[idx] = 0.0;
            self.velocity[idx] = Vec3::zeros();
            self.force[idx] = Vec3::zeros();
        }
        self.touched.clear();
        self.stamp_value += 1;
    }

    #[inline]
    pub(crate) fn touch(&mut self, idx: usize) {
        if self.stamp[idx] != self.stamp_value {
            self.stamp[idx] = self.stamp_value;
            self.touched.push(idx);
        }
    }

    pub(crate) fn sort_touched(&mut self) {
        self.touched.sort_unstable();
    }

    /// Analytic size in bytes of the live grid state.
    pub fn state_bytes(&self) -> usize {
        self.node_count() * (8 + 24 + 24)
    }
}

/// Particle-grid transfer scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferScheme {
    Pic,
    Apic,
}

/// Timestep configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub gravity: Vec3,
    pub scheme: TransferScheme,
    /// B-spline degree; fixed at 2 (quadratic stencils).
    pub bspline_degree: u32,
    /// Generalized problem parameter μ of the scene, kept for bookkeeping
    /// and optional stress-decoder conditioning.
    pub mu: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            gravity: Vec3::zeros(),
            scheme: TransferScheme::Apic,
            bspline_degree: 2,
            mu: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.bspline_degree != 2 {
            return Err(Error::Config(format!(
                "only quadratic B-splines are supported, got degree {}",
                self.bspline_degree
            )));
        }
        Ok(())
    }
}
