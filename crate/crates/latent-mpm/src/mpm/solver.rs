//! Transfer kernels of the explicit MPM step.
//!
//! Every kernel has a `_subset` variant that operates on an ascending list
//! of particle indices; the reduced-order runtime advances only its
//! integration particles through the same code path, so a subset that
//! happens to be the whole system reproduces the full-order step bitwise.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::constitutive::{
    self, kirchhoff_fixed_corotated_lenient, kirchhoff_stvk_from_svd, svd3, Elasticity,
    PlasticModel, PlasticParams, SIGMA_CLAMP,
};
use crate::{Error, Mat3, Result, Vec3};

use super::{Grid, ParticleSystem, SimConfig, TransferScheme};

static STEP_COUNT: AtomicU64 = AtomicU64::new(0);

/// Process-wide count of MPM steps taken (full-order and reduced).
pub fn steps_taken() -> u64 {
    STEP_COUNT.load(Ordering::Relaxed)
}

/// One node of a quadratic B-spline stencil.
#[derive(Debug, Clone, Copy)]
pub struct StencilNode {
    pub index: usize,
    pub weight: f64,
    pub grad: Vec3,
}

/// The 3×3×3 stencil of a particle: node indices, weights and weight
/// gradients. Weights sum to one and gradients sum to zero.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub nodes: [StencilNode; 27],
}

#[inline]
fn bspline_value(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.5 {
        0.75 - a * a
    } else if a < 1.5 {
        let t = 1.5 - a;
        0.5 * t * t
    } else {
        0.0
    }
}

#[inline]
fn bspline_deriv(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.5 {
        -2.0 * x
    } else if a < 1.5 {
        (a - 1.5) * x.signum()
    } else {
        0.0
    }
}

/// Quadratic B-spline weights and gradients of a particle over its 27-node
/// stencil. Errors when the position is less than 1.5Δx inside the grid
/// bounds (the stencil would touch the outermost node layer).
pub fn bspline_weights(x: &Vec3, grid: &Grid, particle: usize) -> Result<Stencil> {
    let inv_dx = 1.0 / grid.dx;
    let mut base = [0usize; 3];
    let mut w = [[0.0f64; 3]; 3];
    let mut dw = [[0.0f64; 3]; 3];
    for axis in 0..3 {
        let u = (x[axis] - grid.origin[axis]) * inv_dx;
        let hi = (grid.dims[axis] - 1) as f64 - 1.5;
        if !(u >= 1.5 && u <= hi) {
            return Err(Error::OutOfDomain {
                particle,
                position: [x[0], x[1], x[2]],
            });
        }
        let b = (u - 0.5).floor();
        base[axis] = b as usize;
        let fx = u - b;
        for o in 0..3 {
            let d = fx - o as f64;
            w[axis][o] = bspline_value(d);
            dw[axis][o] = bspline_deriv(d) * inv_dx;
        }
    }
    let mut nodes = [StencilNode {
        index: 0,
        weight: 0.0,
        grad: Vec3::zeros(),
    }; 27];
    let mut n = 0;
    for oi in 0..3 {
        for oj in 0..3 {
            for ok in 0..3 {
                let index = grid.node_index(base[0] + oi, base[1] + oj, base[2] + ok);
                nodes[n] = StencilNode {
                    index,
                    weight: w[0][oi] * w[1][oj] * w[2][ok],
                    grad: Vec3::new(
                        dw[0][oi] * w[1][oj] * w[2][ok],
                        w[0][oi] * dw[1][oj] * w[2][ok],
                        w[0][oi] * w[1][oj] * dw[2][ok],
                    ),
                };
                n += 1;
            }
        }
    }
    Ok(Stencil { nodes })
}

/// Particle-to-grid transfer of mass and momentum over all particles.
pub fn p2g(ps: &ParticleSystem, grid: &mut Grid, cfg: &SimConfig) -> Result<()> {
    let all: Vec<usize> = (0..ps.len()).collect();
    p2g_subset(ps, grid, cfg, &all)
}

/// Particle-to-grid transfer over a subset of particle indices.
///
/// After the call, active nodes hold `v_i = Σ w m (v + C(x_i − x_p)) / m_i`
/// (APIC) or the PIC equivalent, and `grid.mass_epsilon` reflects the
/// transferred mass.
pub fn p2g_subset(
    ps: &ParticleSystem,
    grid: &mut Grid,
    cfg: &SimConfig,
    particles: &[usize],
) -> Result<()> {
    grid.begin_transfer();
    let mut total_mass = 0.0;
    for &p in particles {
        let st = bspline_weights(&ps.pos[p], grid, p)?;
        let m = ps.mass[p];
        total_mass += m;
        let v = ps.vel[p];
        let c = ps.affine[p];
        let xp = ps.pos[p];
        for node in &st.nodes {
            grid.touch(node.index);
            grid.mass[node.index] += node.weight * m;
            let momentum = match cfg.scheme {
                TransferScheme::Pic => v * (node.weight * m),
                TransferScheme::Apic => {
                    let xi = grid.node_position(node.index);
                    (v + c * (xi - xp)) * (node.weight * m)
                }
            };
            // velocity temporarily accumulates momentum
            grid.velocity[node.index] += momentum;
        }
    }
    grid.sort_touched();
    grid.mass_epsilon = 1e-12 * total_mass / grid.node_count() as f64;
    let eps = grid.mass_epsilon;
    for i in 0..grid.touched_nodes().len() {
        let idx = grid.touched_nodes()[i];
        if grid.mass[idx] > eps {
            grid.velocity[idx] /= grid.mass[idx];
        } else {
            grid.velocity[idx] = Vec3::zeros();
        }
    }
    Ok(())
}

/// Internal force assembly `f_i = −Σ_p τ_p ∇w_ip V⁰_p` over all particles.
pub fn grid_forces(ps: &ParticleSystem, grid: &mut Grid) -> Result<()> {
    let all: Vec<usize> = (0..ps.len()).collect();
    grid_forces_subset(ps, grid, &all)
}

/// Force assembly over a subset of particle indices.
pub fn grid_forces_subset(ps: &ParticleSystem, grid: &mut Grid, particles: &[usize]) -> Result<()> {
    for &p in particles {
        let st = bspline_weights(&ps.pos[p], grid, p)?;
        let tau_v0 = ps.stress[p] * ps.volume0[p];
        for node in &st.nodes {
            grid.force[node.index] -= tau_v0 * node.grad;
        }
    }
    Ok(())
}

/// Symplectic-Euler grid velocity update with gravity, followed by
/// boundary projection on every active node.
pub fn grid_update(grid: &mut Grid, cfg: &SimConfig) {
    let eps = grid.mass_epsilon;
    let dt = cfg.dt;
    let g = cfg.gravity;
    for i in 0..grid.touched.len() {
        let idx = grid.touched[i];
        let m = grid.mass[idx];
        if m <= eps {
            continue;
        }
        let mut v = grid.velocity[idx] + grid.force[idx] * (dt / m) + g * dt;
        if !grid.boundaries.is_empty() {
            let x = grid.node_position(idx);
            for b in &grid.boundaries {
                if b.contains(&x) {
                    v = b.project(v);
                }
            }
        }
        grid.velocity[idx] = v;
    }
}

/// Outcome of the grid-to-particle phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    /// Largest particle speed after the update.
    pub max_speed: f64,
    /// True when Δt·max speed reached Δx (CFL guard; a warning, not an
    /// abort).
    pub cfl_exceeded: bool,
}

/// Grid-to-particle transfer with advection, APIC affine update,
/// deformation-gradient evolution and per-particle return mapping.
pub fn g2p(ps: &mut ParticleSystem, grid: &Grid, cfg: &SimConfig) -> Result<StepStats> {
    let all: Vec<usize> = (0..ps.len()).collect();
    g2p_subset(ps, grid, cfg, &all)
}

/// Full G2P over a subset of particle indices.
pub fn g2p_subset(
    ps: &mut ParticleSystem,
    grid: &Grid,
    cfg: &SimConfig,
    particles: &[usize],
) -> Result<StepStats> {
    g2p_impl(ps, grid, cfg, particles, true)
}

/// Kinematic G2P: velocities and positions only. The reduced-order runtime
/// uses this variant because stresses and affine momenta of the next step
/// come from the neural fields, so deformation gradients and return maps
/// need not be evolved.
pub fn g2p_kinematic_subset(
    ps: &mut ParticleSystem,
    grid: &Grid,
    cfg: &SimConfig,
    particles: &[usize],
) -> Result<StepStats> {
    g2p_impl(ps, grid, cfg, particles, false)
}

fn g2p_impl(
    ps: &mut ParticleSystem,
    grid: &Grid,
    cfg: &SimConfig,
    particles: &[usize],
    constitutive_update: bool,
) -> Result<StepStats> {
    let dt = cfg.dt;
    let c_prefactor = 4.0 / (grid.dx * grid.dx); // 12 / (Δx² (b+1)) at b = 2
    let mut max_speed: f64 = 0.0;
    for &p in particles {
        let xp = ps.pos[p];
        let st = bspline_weights(&xp, grid, p)?;
        let mut v_new = Vec3::zeros();
        let mut grad_v = Mat3::zeros();
        let mut c_new = Mat3::zeros();
        for node in &st.nodes {
            let vi = grid.velocity[node.index];
            v_new += vi * node.weight;
            grad_v += vi * node.grad.transpose();
            if matches!(cfg.scheme, TransferScheme::Apic) {
                let xi = grid.node_position(node.index);
                c_new += (vi * (xi - xp).transpose()) * node.weight;
            }
        }
        ps.vel[p] = v_new;
        ps.pos[p] = xp + v_new * dt;
        ps.affine[p] = match cfg.scheme {
            TransferScheme::Apic => c_new * c_prefactor,
            TransferScheme::Pic => Mat3::zeros(),
        };
        max_speed = max_speed.max(v_new.norm());

        if constitutive_update {
            let f_trial = (Mat3::identity() + grad_v * dt) * ps.def_grad[p];
            update_particle_state(ps, p, &f_trial, dt)?;
        }
    }
    Ok(StepStats {
        max_speed,
        cfl_exceeded: dt * max_speed >= grid.dx,
    })
}

/// Return mapping and stress update for one particle given its trial
/// deformation gradient.
fn update_particle_state(ps: &mut ParticleSystem, p: usize, f_trial: &Mat3, dt: f64) -> Result<()> {
    let ep = if ps.damaged[p] {
        ps.elastic[p].damaged()
    } else {
        ps.elastic[p]
    };
    match ps.plastic.model {
        PlasticModel::None => {
            ps.def_grad[p] = *f_trial;
            ps.stress[p] = match ps.elasticity {
                Elasticity::FixedCorotated => kirchhoff_fixed_corotated_lenient(f_trial, &ep)?,
                Elasticity::StVenantKirchhoff => {
                    kirchhoff_stvk_from_svd(&svd3(f_trial)?, &ep, SIGMA_CLAMP)
                }
            };
        }
        PlasticModel::DruckerPrager => {
            let f_e = constitutive::return_map_drucker_prager(f_trial, &ep, &ps.plastic)?;
            ps.def_grad[p] = f_e;
            ps.stress[p] = kirchhoff_stvk_from_svd(&svd3(&f_e)?, &ep, SIGMA_CLAMP);
        }
        PlasticModel::VonMises => {
            let pp = PlasticParams {
                yield_stress: ps.yield_stress[p],
                ..ps.plastic
            };
            let (f_e, dgamma) = constitutive::return_map_von_mises(f_trial, &ep, &pp)?;
            // ‖ε − proj(ε)‖ of the von Mises projection equals δγ.
            let updated = constitutive::update_yield(ps.yield_stress[p], dgamma, dgamma, &ep, &pp);
            ps.yield_stress[p] = updated;
            let ep = if updated <= 0.0 && (ps.plastic.softening > 0.0 || ps.plastic.hardening < 0.0)
            {
                ps.damaged[p] = true;
                ps.elastic[p].damaged()
            } else {
                ep
            };
            ps.def_grad[p] = f_e;
            ps.stress[p] = kirchhoff_stvk_from_svd(&svd3(&f_e)?, &ep, SIGMA_CLAMP);
        }
        PlasticModel::HerschelBulkley => {
            let (f_e, tau) =
                constitutive::herschel_bulkley_from_svd(&svd3(f_trial)?, &ep, &ps.plastic, dt);
            ps.def_grad[p] = f_e;
            ps.stress[p] = tau;
        }
    }
    Ok(())
}

/// One full-order explicit MPM step: P2G → forces → grid update → G2P,
/// then collider advance. Deterministic in serial mode.
pub fn step(ps: &mut ParticleSystem, grid: &mut Grid, cfg: &SimConfig) -> Result<StepStats> {
    let all: Vec<usize> = (0..ps.len()).collect();
    step_subset(ps, grid, cfg, &all, true)
}

/// One MPM step over a subset of particles. With `constitutive_update`
/// false the G2P phase is kinematic only (reduced-order path).
pub fn step_subset(
    ps: &mut ParticleSystem,
    grid: &mut Grid,
    cfg: &SimConfig,
    particles: &[usize],
    constitutive_update: bool,
) -> Result<StepStats> {
    p2g_subset(ps, grid, cfg, particles)?;
    grid_forces_subset(ps, grid, particles)?;
    grid_update(grid, cfg);
    let stats = if constitutive_update {
        g2p_subset(ps, grid, cfg, particles)?
    } else {
        g2p_kinematic_subset(ps, grid, cfg, particles)?
    };
    for b in &mut grid.boundaries {
        b.advance(cfg.dt);
    }
    STEP_COUNT.fetch_add(1, Ordering::Relaxed);
    Ok(stats)
}

/// Total angular momentum about the origin, including the APIC affine
/// contribution `m_p axial(C_p D_p)` with `D_p = (Δx²/4) I` for quadratic
/// B-splines.
pub fn total_angular_momentum(ps: &ParticleSystem, dx: f64) -> Vec3 {
    let d = dx * dx / 4.0;
    let mut l = Vec3::zeros();
    for p in 0..ps.len() {
        let m = ps.mass[p];
        l += ps.pos[p].cross(&ps.vel[p]) * m;
        let c = &ps.affine[p];
        l += Vec3::new(
            c[(2, 1)] - c[(1, 2)],
            c[(0, 2)] - c[(2, 0)],
            c[(1, 0)] - c[(0, 1)],
        ) * (m * d);
    }
    l
}
