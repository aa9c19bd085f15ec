//! Desk-scale scene catalog: geometry seeding, materials, boundaries and
//! full-order dataset generation.
//!
//! Every scene interprets the scalar problem parameter μ differently
//! (documented on [`SceneKind`]); everything else comes from the scene
//! configuration file.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constitutive::{lame_from_e_nu, ElasticParams, Elasticity, PlasticModel, PlasticParams};
use crate::io::dataset::{frame_from_particles, write_dataset, TrajectoryDataset};
use crate::mpm::{
    step, BoundaryKind, Grid, GridBoundary, ParticleSystem, SimConfig, TransferScheme,
};
use crate::{Error, Result, Vec3};

/// The scene catalog. The problem parameter μ means:
///
/// * `CubeDrop` — Young's modulus E of the cube
/// * `CubeWallCollision` — initial speed toward the wall
/// * `SandColumn` — friction angle φ_f in degrees
/// * `BreadTear` — Young's modulus E (weak elements seed the tear)
/// * `MetalSqueeze` — hardening coefficient ξ
/// * `Toothpaste` — floor inclination in degrees
/// * `InclinedBall` — plane inclination in degrees
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    CubeDrop,
    CubeWallCollision,
    SandColumn,
    BreadTear,
    MetalSqueeze,
    Toothpaste,
    InclinedBall,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSection {
    pub kind: SceneKind,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub dx: f64,
    pub dims: [usize; 3],
    #[serde(default)]
    pub origin: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSection {
    pub dt: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialSection {
    #[serde(default)]
    pub elasticity: Elasticity,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct PlasticitySection {
    #[serde(default)]
    pub model: PlasticModel,
    #[serde(default)]
    pub friction_angle_deg: f64,
    #[serde(default)]
    pub yield_stress: f64,
    #[serde(default)]
    pub hardening: f64,
    #[serde(default)]
    pub softening: f64,
    #[serde(default)]
    pub viscosity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferSection {
    #[serde(default = "default_scheme")]
    pub scheme: TransferScheme,
    pub gravity: [f64; 3],
}

fn default_scheme() -> TransferScheme {
    TransferScheme::Apic
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSection {
    /// Problem parameters, all distinct; the split reserves `test_count`
    /// of them for testing.
    pub mu_values: Vec<f64>,
    pub test_count: usize,
    #[serde(default)]
    pub split_seed: u64,
}

/// Axis-aligned box of weakened material: Young's modulus scaled by
/// `scale` inside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakSection {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometrySection {
    /// Lower corner of the object (box scenes) or of its bounding box
    /// (ball scenes).
    pub object_min: [f64; 3],
    pub object_size: [f64; 3],
    /// Collider speed for scenes with a moving press or grips.
    #[serde(default)]
    pub collider_speed: f64,
}

/// Full description of one scene family (geometry, material, sweep).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneConfig {
    pub scene: SceneSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub material: MaterialSection,
    #[serde(default)]
    pub plasticity: PlasticitySection,
    pub transfer: TransferSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub weak: Option<WeakSection>,
    pub geometry: GeometrySection,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid.dx > 0.0) {
            return Err(Error::Config("grid dx must be positive".into()));
        }
        if !(self.time.dt > 0.0) || self.time.frames == 0 {
            return Err(Error::Config("need positive dt and frame count".into()));
        }
        if !(self.material.density > 0.0) {
            return Err(Error::Config("density must be positive".into()));
        }
        if self.sweep.mu_values.is_empty() {
            return Err(Error::Config("sweep needs at least one mu value".into()));
        }
        for (i, a) in self.sweep.mu_values.iter().enumerate() {
            if self.sweep.mu_values[i + 1..].contains(a) {
                return Err(Error::Config(format!(
                    "duplicate mu value {a}; train/test split would overlap"
                )));
            }
        }
        if self.sweep.test_count >= self.sweep.mu_values.len() {
            return Err(Error::Config(
                "test_count must leave at least one training mu".into(),
            ));
        }
        Ok(())
    }

    /// Seeded train/test split over the μ list; returns (train, test)
    /// indices, each ascending.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.sweep.mu_values.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.sweep.split_seed);
        let mut indices: Vec<usize> = (0..n).collect();
        // partial Fisher-Yates: the first test_count entries become the test set
        for i in 0..self.sweep.test_count.min(n) {
            let j = i + rng.gen_range(0..n - i);
            indices.swap(i, j);
        }
        let mut test: Vec<usize> = indices[..self.sweep.test_count].to_vec();
        let mut train: Vec<usize> = indices[self.sweep.test_count..].to_vec();
        test.sort_unstable();
        train.sort_unstable();
        (train, test)
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Seeds particles on a jittered 8-per-cell lattice inside an acceptance
/// predicate, with `m_p = ρ₀ Δx³/8`.
#[allow(clippy::too_many_arguments)]
fn seed_particles<F: Fn(&Vec3) -> bool>(
    ps: &mut ParticleSystem,
    grid: &Grid,
    region_min: Vec3,
    region_max: Vec3,
    inside: F,
    density: f64,
    velocity_of: impl Fn(&Vec3) -> Vec3,
    elastic_of: impl Fn(&Vec3) -> ElasticParams,
    rng: &mut ChaCha8Rng,
) {
    let dx = grid.dx;
    let volume = dx * dx * dx / 8.0;
    let mass = density * volume;
    let lo = (region_min - grid.origin) / dx;
    let hi = (region_max - grid.origin) / dx;
    let cell_lo: [i64; 3] = [
        lo[0].floor() as i64,
        lo[1].floor() as i64,
        lo[2].floor() as i64,
    ];
    let cell_hi: [i64; 3] = [hi[0].ceil() as i64, hi[1].ceil() as i64, hi[2].ceil() as i64];
    for ci in cell_lo[0]..cell_hi[0] {
        for cj in cell_lo[1]..cell_hi[1] {
            for ck in cell_lo[2]..cell_hi[2] {
                for si in 0..2 {
                    for sj in 0..2 {
                        for sk in 0..2 {
                            let jitter = Vec3::new(
                                (rng.gen::<f64>() - 0.5) * 0.2,
                                (rng.gen::<f64>() - 0.5) * 0.2,
                                (rng.gen::<f64>() - 0.5) * 0.2,
                            );
                            let p = grid.origin
                                + Vec3::new(
                                    ci as f64 + 0.25 + 0.5 * si as f64 + jitter[0],
                                    cj as f64 + 0.25 + 0.5 * sj as f64 + jitter[1],
                                    ck as f64 + 0.25 + 0.5 * sk as f64 + jitter[2],
                                ) * dx;
                            if p[0] < region_min[0]
                                || p[1] < region_min[1]
                                || p[2] < region_min[2]
                                || p[0] >= region_max[0]
                                || p[1] >= region_max[1]
                                || p[2] >= region_max[2]
                                || !inside(&p)
                            {
                                continue;
                            }
                            ps.push(p, velocity_of(&p), mass, volume, elastic_of(&p));
                        }
                    }
                }
            }
        }
    }
}

/// Builds the particle system, grid and step configuration of one scene
/// at problem parameter μ. Deterministic per scene seed.
pub fn build_scene(cfg: &SceneConfig, mu: f64) -> Result<(ParticleSystem, Grid, SimConfig)> {
    cfg.validate()?;
    let kind = cfg.scene.kind;

    let youngs = match kind {
        SceneKind::CubeDrop | SceneKind::BreadTear => mu,
        _ => cfg.material.youngs_modulus,
    };
    let base_elastic = lame_from_e_nu(youngs, cfg.material.poisson_ratio)?;

    let mut plastic = PlasticParams {
        model: cfg.plasticity.model,
        friction_angle: cfg.plasticity.friction_angle_deg.to_radians(),
        yield_stress: cfg.plasticity.yield_stress,
        hardening: cfg.plasticity.hardening,
        softening: cfg.plasticity.softening,
        viscosity: cfg.plasticity.viscosity,
    };
    match kind {
        SceneKind::SandColumn => {
            plastic.model = PlasticModel::DruckerPrager;
            plastic.friction_angle = mu.to_radians();
        }
        SceneKind::MetalSqueeze => {
            plastic.model = PlasticModel::VonMises;
            plastic.hardening = mu;
        }
        SceneKind::Toothpaste => {
            plastic.model = PlasticModel::HerschelBulkley;
        }
        _ => {}
    }
    plastic.validate()?;

    let mut grid = Grid::new(vec3(cfg.grid.origin), cfg.grid.dx, cfg.grid.dims)?;
    let dx = grid.dx;
    let floor_y = grid.origin[1] + 3.0 * dx;
    let up = Vec3::new(0.0, 1.0, 0.0);

    let obj_min = vec3(cfg.geometry.object_min);
    let obj_max = obj_min + vec3(cfg.geometry.object_size);
    let center = 0.5 * (obj_min + obj_max);
    let radius = 0.5 * cfg.geometry.object_size[0];

    let mut ps = ParticleSystem::new(cfg.material.elasticity, plastic);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.scene.seed);

    let weak = cfg.weak.clone();
    let weak_elastic = if let Some(w) = &weak {
        Some(lame_from_e_nu(youngs * w.scale, cfg.material.poisson_ratio)?)
    } else {
        None
    };
    let elastic_of = |p: &Vec3| -> ElasticParams {
        if let (Some(w), Some(we)) = (&weak, &weak_elastic) {
            let lo = vec3(w.min);
            let hi = vec3(w.max);
            if (0..3).all(|i| p[i] >= lo[i] && p[i] <= hi[i]) {
                return *we;
            }
        }
        base_elastic
    };

    let initial_velocity = match kind {
        SceneKind::CubeWallCollision => Vec3::new(mu, 0.0, 0.0),
        _ => Vec3::zeros(),
    };

    match kind {
        SceneKind::InclinedBall => {
            seed_particles(
                &mut ps,
                &grid,
                obj_min,
                obj_max,
                |p| (p - center).norm() <= radius,
                cfg.material.density,
                |_| initial_velocity,
                elastic_of,
                &mut rng,
            );
        }
        _ => {
            seed_particles(
                &mut ps,
                &grid,
                obj_min,
                obj_max,
                |_| true,
                cfg.material.density,
                |_| initial_velocity,
                elastic_of,
                &mut rng,
            );
        }
    }
    if ps.is_empty() {
        return Err(Error::Config(format!(
            "scene {} seeded zero particles; check geometry against the grid",
            cfg.scene.name
        )));
    }

    match kind {
        SceneKind::CubeDrop
        | SceneKind::MetalSqueeze
        | SceneKind::SandColumn
        | SceneKind::BreadTear => {
            grid.boundaries.push(GridBoundary::half_space(
                BoundaryKind::Sticky,
                Vec3::new(grid.origin[0], floor_y, grid.origin[2]),
                up,
            ));
        }
        SceneKind::CubeWallCollision => {
            grid.boundaries.push(GridBoundary::half_space(
                BoundaryKind::Slip,
                Vec3::new(grid.origin[0], floor_y, grid.origin[2]),
                up,
            ));
            let wall_x = grid.origin[0] + (grid.dims[0] as f64 - 4.0) * dx;
            grid.boundaries.push(GridBoundary::half_space(
                BoundaryKind::Sticky,
                Vec3::new(wall_x, grid.origin[1], grid.origin[2]),
                Vec3::new(-1.0, 0.0, 0.0),
            ));
        }
        SceneKind::Toothpaste | SceneKind::InclinedBall => {
            // inclined slip plane through the floor midpoint, tilted about z
            let angle = mu.to_radians();
            let normal = Vec3::new(-angle.sin(), angle.cos(), 0.0);
            let mid_x = grid.origin[0] + 0.5 * (grid.dims[0] as f64 - 1.0) * dx;
            grid.boundaries.push(GridBoundary::half_space(
                BoundaryKind::Slip,
                Vec3::new(mid_x, floor_y, grid.origin[2]),
                normal,
            ));
        }
    }
    match kind {
        SceneKind::MetalSqueeze => {
            // press descending from just above the slab
            let press_y = obj_max[1] + dx;
            grid.boundaries.push(
                GridBoundary::half_space(
                    BoundaryKind::Sticky,
                    Vec3::new(grid.origin[0], press_y, grid.origin[2]),
                    Vec3::new(0.0, -1.0, 0.0),
                )
                .with_velocity(Vec3::new(0.0, -cfg.geometry.collider_speed, 0.0)),
            );
        }
        SceneKind::BreadTear => {
            // grips on both ends pulling apart along x
            let speed = cfg.geometry.collider_speed;
            let grip = 1.5 * dx;
            grid.boundaries.push(
                GridBoundary::half_space(
                    BoundaryKind::Sticky,
                    Vec3::new(obj_min[0] + grip, grid.origin[1], grid.origin[2]),
                    Vec3::new(1.0, 0.0, 0.0),
                )
                .with_velocity(Vec3::new(-speed, 0.0, 0.0)),
            );
            grid.boundaries.push(
                GridBoundary::half_space(
                    BoundaryKind::Sticky,
                    Vec3::new(obj_max[0] - grip, grid.origin[1], grid.origin[2]),
                    Vec3::new(-1.0, 0.0, 0.0),
                )
                .with_velocity(Vec3::new(speed, 0.0, 0.0)),
            );
        }
        _ => {}
    }

    let sim = SimConfig {
        dt: cfg.time.dt,
        gravity: vec3(cfg.transfer.gravity),
        scheme: cfg.transfer.scheme,
        bspline_degree: 2,
        mu: vec![mu],
    };
    sim.validate()?;
    Ok((ps, grid, sim))
}

/// Runs the full-order solver for one μ and returns the recorded
/// trajectory (frame 0 is the initial state) plus the number of CFL
/// warnings.
pub fn simulate_trajectory(cfg: &SceneConfig, mu: f64) -> Result<(TrajectoryDataset, usize)> {
    let (mut ps, mut grid, sim) = build_scene(cfg, mu)?;
    let mut frames = Vec::with_capacity(cfg.time.frames + 1);
    frames.push(frame_from_particles(&ps));
    let mut cfl_warnings = 0usize;
    for _ in 0..cfg.time.frames {
        let stats = step(&mut ps, &mut grid, &sim)?;
        if stats.cfl_exceeded {
            cfl_warnings += 1;
        }
        frames.push(frame_from_particles(&ps));
    }
    Ok((
        TrajectoryDataset {
            ref_pos: ps.ref_pos.clone(),
            frames,
            mu: vec![mu],
            dt: sim.dt,
            dx: grid.dx,
        },
        cfl_warnings,
    ))
}

/// Train/test dataset manifest, one `.nsfd` file per μ.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub scene: String,
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        for t in &self.train {
            if self.test.contains(t) {
                return Err(Error::Config(format!(
                    "manifest lists {} as both train and test",
                    t.display()
                )));
            }
        }
        Ok(())
    }
}

/// Generates one dataset file per μ with a seeded train/test split and
/// writes `manifest.txt` into `out_dir`. Re-running with the same
/// configuration produces bitwise-identical files.
pub fn generate_dataset(cfg: &SceneConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let (train_idx, test_idx) = cfg.split();
    let mut manifest = DatasetManifest {
        scene: cfg.scene.name.clone(),
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, &mu) in cfg.sweep.mu_values.iter().enumerate() {
        let file = out_dir.join(format!("{}_mu{:03}.nsfd", cfg.scene.name, i));
        let ds = match simulate_trajectory(cfg, mu) {
            Ok((ds, _)) => ds,
            Err(e) => {
                // partial-output cleanup on solver failure
                for written in manifest.train.iter().chain(&manifest.test) {
                    let _ = std::fs::remove_file(written);
                }
                return Err(e);
            }
        };
        write_dataset(&file, &ds)?;
        if train_idx.contains(&i) {
            manifest.train.push(file);
        } else {
            debug_assert!(test_idx.contains(&i));
            manifest.test.push(file);
        }
    }
    crate::io::config::write_manifest(&out_dir.join("manifest.txt"), &manifest)?;
    Ok(manifest)
}

/// A ready-to-run cube-drop scene used by tests and examples.
pub fn desk_cube_drop(cells_per_side: usize, frames: usize) -> SceneConfig {
    let dx = 1.0 / 32.0;
    let cube = cells_per_side as f64 * dx;
    SceneConfig {
        scene: SceneSection {
            kind: SceneKind::CubeDrop,
            name: "cube-drop-desk".into(),
            seed: 1,
        },
        grid: GridSection {
            dx,
            dims: [
                cells_per_side + 12,
                cells_per_side + 16,
                cells_per_side + 12,
            ],
            origin: [0.0, 0.0, 0.0],
        },
        time: TimeSection { dt: 2e-3, frames },
        material: MaterialSection {
            elasticity: Elasticity::FixedCorotated,
            youngs_modulus: 10.0,
            poisson_ratio: 0.3,
            density: 1.0,
        },
        plasticity: PlasticitySection::default(),
        transfer: TransferSection {
            scheme: TransferScheme::Apic,
            gravity: [0.0, -9.8, 0.0],
        },
        sweep: SweepSection {
            mu_values: vec![6.0, 8.0, 12.0, 14.0, 10.0],
            test_count: 1,
            split_seed: 400,
        },
        weak: None,
        geometry: GeometrySection {
            object_min: [6.0 * dx, 5.0 * dx, 6.0 * dx],
            object_size: [cube, cube, cube],
            collider_speed: 0.0,
        },
    }
}
