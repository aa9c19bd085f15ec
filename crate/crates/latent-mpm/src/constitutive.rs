//! Finite-strain hyperelasticity and elastoplastic return mappings.
//!
//! Stresses are Kirchhoff stresses τ. All return mappings operate in the
//! principal frame of the trial elastic deformation gradient: given
//! `F = U Σ Vᵀ` and principal logarithmic strains `ε = log(Σ)`, the
//! admissible elastic state is `F_E = U Z(Σ) Vᵀ` for a model-specific
//! projection `Z`.

use crate::{Error, Mat3, Result, Vec3};

/// Isotropic elastic moduli derived from Young's modulus and Poisson's ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    /// Young's modulus E.
    pub youngs_modulus: f64,
    /// Poisson's ratio ν.
    pub poisson_ratio: f64,
    /// Shear modulus μ̂ = E / (2(1+ν)).
    pub shear_modulus: f64,
    /// Lamé modulus λ = Eν / ((1+ν)(1−2ν)).
    pub lame_modulus: f64,
    /// Bulk modulus κ = E / (3(1−2ν)).
    pub bulk_modulus: f64,
}

impl ElasticParams {
    /// Moduli with μ̂ and λ zeroed; used for fully damaged material.
    pub fn damaged(&self) -> Self {
        ElasticParams {
            shear_modulus: 0.0,
            lame_modulus: 0.0,
            bulk_modulus: 0.0,
            ..*self
        }
    }
}

/// Computes the derived moduli from `(E, ν)`.
///
/// Requires `E > 0` and `0 ≤ ν < 0.5`.
pub fn lame_from_e_nu(youngs_modulus: f64, poisson_ratio: f64) -> Result<ElasticParams> {
    if !(youngs_modulus > 0.0) {
        return Err(Error::ParamDomain(format!(
            "Young's modulus must be positive, got {youngs_modulus}"
        )));
    }
    if !(0.0..0.5).contains(&poisson_ratio) {
        return Err(Error::ParamDomain(format!(
            "Poisson's ratio must lie in [0, 0.5), got {poisson_ratio}"
        )));
    }
    let e = youngs_modulus;
    let nu = poisson_ratio;
    Ok(ElasticParams {
        youngs_modulus: e,
        poisson_ratio: nu,
        shear_modulus: e / (2.0 * (1.0 + nu)),
        lame_modulus: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        bulk_modulus: e / (3.0 * (1.0 - 2.0 * nu)),
    })
}

/// Which yield surface, if any, constrains the elastic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlasticModel {
    #[default]
    None,
    DruckerPrager,
    VonMises,
    HerschelBulkley,
}

/// Hyperelastic stress law used for purely elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elasticity {
    #[default]
    FixedCorotated,
    StVenantKirchhoff,
}

/// Plasticity parameters shared by every return mapping.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct PlasticParams {
    pub model: PlasticModel,
    /// Friction angle φ_f in radians (Drucker-Prager).
    pub friction_angle: f64,
    /// Initial yield stress τ_Y (von Mises) or σ_Y (Herschel-Bulkley).
    pub yield_stress: f64,
    /// Hardening coefficient ξ.
    pub hardening: f64,
    /// Softening coefficient θ.
    pub softening: f64,
    /// Viscosity η (Herschel-Bulkley).
    pub viscosity: f64,
}

impl Default for PlasticParams {
    fn default() -> Self {
        PlasticParams {
            model: PlasticModel::None,
            friction_angle: 0.0,
            yield_stress: 0.0,
            hardening: 0.0,
            softening: 0.0,
            viscosity: 0.0,
        }
    }
}

impl PlasticParams {
    pub fn validate(&self) -> Result<()> {
        if self.model == PlasticModel::DruckerPrager
            && !(self.friction_angle > 0.0 && self.friction_angle < std::f64::consts::FRAC_PI_2)
        {
            return Err(Error::ParamDomain(format!(
                "friction angle must lie in (0, pi/2), got {}",
                self.friction_angle
            )));
        }
        if self.yield_stress < 0.0 {
            return Err(Error::ParamDomain(format!(
                "yield stress must be non-negative, got {}",
                self.yield_stress
            )));
        }
        if self.viscosity < 0.0 {
            return Err(Error::ParamDomain(format!(
                "viscosity must be non-negative, got {}",
                self.viscosity
            )));
        }
        Ok(())
    }
}

/// Rotation-safe singular value decomposition of a 3×3 matrix.
///
/// `det(u) = det(v) = +1`; a negative determinant of the input is folded
/// into the sign of the last (smallest-magnitude) singular value.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub u: Mat3,
    /// Singular values, descending by magnitude; only the last entry may be
    /// negative.
    pub sigma: Vec3,
    pub v: Mat3,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> Mat3 {
        self.u * Mat3::from_diagonal(&self.sigma) * self.v.transpose()
    }

    /// The rotation R = U Vᵀ of the polar decomposition.
    pub fn rotation(&self) -> Mat3 {
        self.u * self.v.transpose()
    }
}

/// Singular value decomposition with the rotation-safe sign convention.
pub fn svd3(m: &Mat3) -> Result<SvdTriple> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("svd3 input"));
    }
    let svd = m.svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut v_t = svd.v_t.expect("v_t requested");
    let mut sigma = Vec3::new(
        svd.singular_values[0],
        svd.singular_values[1],
        svd.singular_values[2],
    );
    if u.determinant() < 0.0 {
        for r in 0..3 {
            u[(r, 2)] = -u[(r, 2)];
        }
        sigma[2] = -sigma[2];
    }
    if v_t.determinant() < 0.0 {
        for c in 0..3 {
            v_t[(2, c)] = -v_t[(2, c)];
        }
        sigma[2] = -sigma[2];
    }
    Ok(SvdTriple {
        u,
        sigma,
        v: v_t.transpose(),
    })
}

fn deviatoric(eps: &Vec3) -> Vec3 {
    let mean = (eps[0] + eps[1] + eps[2]) / 3.0;
    Vec3::new(eps[0] - mean, eps[1] - mean, eps[2] - mean)
}

/// Principal log strains of a decomposed deformation gradient, with the
/// singular values clamped to `min_sigma` before the logarithm.
fn log_strains_clamped(sigma: &Vec3, min_sigma: f64) -> Vec3 {
    Vec3::new(
        sigma[0].max(min_sigma).ln(),
        sigma[1].max(min_sigma).ln(),
        sigma[2].max(min_sigma).ln(),
    )
}

/// Clamp floor applied to singular values inside the solver before taking
/// logarithms, so near-inverted elements stay finite.
pub const SIGMA_CLAMP: f64 = 1e-4;

/// Kirchhoff stress of the fixed corotated model,
/// `τ = 2μ̂ (F_E − R) F_Eᵀ + λ (J − 1) J I` with `R = U Vᵀ`.
pub fn kirchhoff_fixed_corotated(f_e: &Mat3, p: &ElasticParams) -> Result<Mat3> {
    let j = f_e.determinant();
    if j <= 0.0 {
        return Err(Error::InvertedElement { det: j });
    }
    kirchhoff_fixed_corotated_lenient(f_e, p)
}

/// Same stress formula without the `det(F) > 0` guard; the rotation-safe
/// SVD keeps R a proper rotation even for inverted elements.
pub(crate) fn kirchhoff_fixed_corotated_lenient(f_e: &Mat3, p: &ElasticParams) -> Result<Mat3> {
    let j = f_e.determinant();
    let svd = svd3(f_e)?;
    let r = svd.rotation();
    Ok(2.0 * p.shear_modulus * (f_e - r) * f_e.transpose()
        + Mat3::identity() * (p.lame_modulus * (j - 1.0) * j))
}

/// Kirchhoff stress of the St. Venant-Kirchhoff model on Hencky strains:
/// in the principal frame τ = 2μ̂ ε + λ sum(ε) 1 with ε = log(Σ), rotated
/// back with U on both sides so the output is symmetric for any input.
pub fn kirchhoff_stvk(f_e: &Mat3, p: &ElasticParams) -> Result<Mat3> {
    let svd = svd3(f_e)?;
    if svd.sigma.iter().any(|&s| s <= 0.0) {
        return Err(Error::LogDomain(svd.sigma[2]));
    }
    Ok(kirchhoff_stvk_from_svd(&svd, p, 0.0))
}

pub(crate) fn kirchhoff_stvk_from_svd(svd: &SvdTriple, p: &ElasticParams, clamp: f64) -> Mat3 {
    let eps = log_strains_clamped(&svd.sigma, clamp.max(f64::MIN_POSITIVE));
    let trace = eps[0] + eps[1] + eps[2];
    let diag = Vec3::new(
        2.0 * p.shear_modulus * eps[0] + p.lame_modulus * trace,
        2.0 * p.shear_modulus * eps[1] + p.lame_modulus * trace,
        2.0 * p.shear_modulus * eps[2] + p.lame_modulus * trace,
    );
    svd.u * Mat3::from_diagonal(&diag) * svd.u.transpose()
}

/// Drucker-Prager return mapping for granular material.
///
/// Projects the trial principal log strains onto the friction cone:
///
/// * `sum(ε) > 0` — free expansion, all stress released (`Z = 1`)
/// * `δγ ≤ 0` and `sum(ε) ≤ 0` — elastic, trial state kept
/// * otherwise — `Z = exp(ε − δγ ε̂ / ‖ε̂‖)`
///
/// with `δγ = ‖ε̂‖ + α (dλ + 2μ̂) sum(ε) / (2μ̂)`, `d = 3`,
/// `α = √(2/3) · 2 sin φ_f / (3 − sin φ_f)` and `ε̂ = dev(ε)`.
pub fn return_map_drucker_prager(
    f_trial: &Mat3,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<Mat3> {
    let det = f_trial.determinant();
    if det <= 0.0 {
        return Err(Error::InvertedElement { det });
    }
    let svd = svd3(f_trial)?;
    let eps = log_strains_clamped(&svd.sigma, SIGMA_CLAMP);
    let trace = eps[0] + eps[1] + eps[2];
    if trace > 0.0 {
        return Ok(svd.rotation());
    }
    let dev = deviatoric(&eps);
    let dev_norm = dev.norm();
    let sin_phi = pp.friction_angle.sin();
    let alpha = (2.0f64 / 3.0).sqrt() * 2.0 * sin_phi / (3.0 - sin_phi);
    let dgamma = dev_norm
        + alpha * (3.0 * ep.lame_modulus + 2.0 * ep.shear_modulus) * trace
            / (2.0 * ep.shear_modulus);
    if dgamma <= 0.0 || dev_norm == 0.0 {
        return Ok(*f_trial);
    }
    let projected = eps - dev * (dgamma / dev_norm);
    let sigma_new = Vec3::new(projected[0].exp(), projected[1].exp(), projected[2].exp());
    Ok(svd.u * Mat3::from_diagonal(&sigma_new) * svd.v.transpose())
}

/// Von Mises return mapping. Returns the projected elastic deformation
/// gradient and the plastic flow increment δγ (zero when the trial state
/// is admissible) for hardening/softening bookkeeping.
///
/// The caller supplies the current yield stress through
/// `pp.yield_stress`.
pub fn return_map_von_mises(
    f_trial: &Mat3,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<(Mat3, f64)> {
    let det = f_trial.determinant();
    if det <= 0.0 {
        return Err(Error::InvertedElement { det });
    }
    if ep.shear_modulus <= 0.0 {
        // Fully damaged material carries no deviatoric stress to project.
        return Ok((*f_trial, 0.0));
    }
    let svd = svd3(f_trial)?;
    let eps = log_strains_clamped(&svd.sigma, SIGMA_CLAMP);
    let dev = deviatoric(&eps);
    let dev_norm = dev.norm();
    // ‖dev τ‖ = 2μ̂ ‖ε̂‖ in the principal frame, so the yield test
    // ‖τ − sum(τ)/3‖ − τ_Y ≤ 0 is equivalent to δγ ≤ 0.
    let dgamma = dev_norm - pp.yield_stress / (2.0 * ep.shear_modulus);
    if dgamma <= 0.0 {
        return Ok((*f_trial, 0.0));
    }
    let projected = eps - dev * (dgamma / dev_norm);
    let sigma_new = Vec3::new(projected[0].exp(), projected[1].exp(), projected[2].exp());
    Ok((
        svd.u * Mat3::from_diagonal(&sigma_new) * svd.v.transpose(),
        dgamma,
    ))
}

/// Yield stress update after a von Mises projection.
///
/// Hardening grows the surface by `2μ̂ ξ δγ`; softening shrinks it by
/// `θ ‖ε − proj(ε)‖`. The result is clamped at zero; a zero yield stress
/// means the particle is damaged and the caller must zero its Lamé
/// parameters.
pub fn update_yield(
    tau_y: f64,
    dgamma: f64,
    eps_excess_norm: f64,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> f64 {
    let hardened = tau_y + 2.0 * ep.shear_modulus * pp.hardening * dgamma;
    let softened = hardened - pp.softening * eps_excess_norm;
    softened.max(0.0)
}

/// Scalar Herschel-Bulkley relaxation of the deviatoric stress magnitude
/// (h = 1): overstress beyond the yield radius decays by the viscous
/// factor `1 / (1 + η / (2μ̂ Δt))`.
pub fn herschel_bulkley_relax(
    s_trial: f64,
    radius: f64,
    eta: f64,
    shear_modulus: f64,
    dt: f64,
) -> f64 {
    s_trial - (s_trial - radius) / (1.0 + eta / (2.0 * shear_modulus * dt))
}

/// Herschel-Bulkley return mapping (h = 1).
///
/// The trial deviatoric Kirchhoff stress comes from
/// `τ = κ/2 (J² − 1) I + μ̂ dev[det(bᴱ)^{-1/3} bᴱ]` with `bᴱ = F_E F_Eᵀ`.
/// If `‖dev τ‖ > √(2/3) σ_Y` its magnitude relaxes viscously and the
/// elastic state is rebuilt from the shrunk deviator; the returned stress
/// is re-evaluated from that projected state.
pub fn return_map_herschel_bulkley(
    f_trial: &Mat3,
    ep: &ElasticParams,
    pp: &PlasticParams,
    dt: f64,
) -> Result<(Mat3, Mat3)> {
    let det = f_trial.determinant();
    if det <= 0.0 {
        return Err(Error::InvertedElement { det });
    }
    if !(dt > 0.0) {
        return Err(Error::ParamDomain(format!(
            "timestep must be positive, got {dt}"
        )));
    }
    let svd = svd3(f_trial)?;
    let (f_e, tau) = herschel_bulkley_from_svd(&svd, ep, pp, dt);
    Ok((f_e, tau))
}

pub(crate) fn herschel_bulkley_from_svd(
    svd: &SvdTriple,
    ep: &ElasticParams,
    pp: &PlasticParams,
    dt: f64,
) -> (Mat3, Mat3) {
    let sigma = Vec3::new(
        svd.sigma[0].max(SIGMA_CLAMP),
        svd.sigma[1].max(SIGMA_CLAMP),
        svd.sigma[2].max(SIGMA_CLAMP),
    );
    let j = sigma[0] * sigma[1] * sigma[2];
    // Principal values of the volume-normalized left Cauchy-Green tensor.
    let scale = j.powf(-2.0 / 3.0);
    let bbar = Vec3::new(
        scale * sigma[0] * sigma[0],
        scale * sigma[1] * sigma[1],
        scale * sigma[2] * sigma[2],
    );
    let radius = (2.0f64 / 3.0).sqrt() * pp.yield_stress;

    let tau_of = |bbar: &Vec3, j: f64| -> (Vec3, f64) {
        let mean = (bbar[0] + bbar[1] + bbar[2]) / 3.0;
        let s = Vec3::new(
            ep.shear_modulus * (bbar[0] - mean),
            ep.shear_modulus * (bbar[1] - mean),
            ep.shear_modulus * (bbar[2] - mean),
        );
        let vol = 0.5 * ep.bulk_modulus * (j * j - 1.0);
        (s, vol)
    };

    let (s_trial, _) = tau_of(&bbar, j);
    let s_norm = s_trial.norm();

    let bbar_new = if s_norm - radius > 0.0 && ep.shear_modulus > 0.0 {
        let s_new = herschel_bulkley_relax(s_norm, radius, pp.viscosity, ep.shear_modulus, dt);
        let shrink = s_new / s_norm;
        let mean = (bbar[0] + bbar[1] + bbar[2]) / 3.0;
        let shrunk = Vec3::new(
            mean + shrink * (bbar[0] - mean),
            mean + shrink * (bbar[1] - mean),
            mean + shrink * (bbar[2] - mean),
        );
        // Shrinking the deviator inflates det(b̄ᴱ) above one; renormalize so
        // the plastic flow stays isochoric and det(F_E) = J exactly.
        shrunk * (shrunk[0] * shrunk[1] * shrunk[2]).powf(-1.0 / 3.0)
    } else {
        bbar
    };

    let j23 = j.powf(2.0 / 3.0);
    let sigma_e = Vec3::new(
        (j23 * bbar_new[0]).sqrt(),
        (j23 * bbar_new[1]).sqrt(),
        (j23 * bbar_new[2]).sqrt(),
    );
    let f_e = svd.u * Mat3::from_diagonal(&sigma_e) * svd.v.transpose();

    // Stress re-evaluated from the projected elastic state; det(b̄ᴱ) = 1
    // holds by construction so b̄ᴱ of the new state is bbar_new itself.
    let (s_reval, vol) = tau_of(&bbar_new, j);
    let tau = svd.u
        * Mat3::from_diagonal(&Vec3::new(
            s_reval[0] + vol,
            s_reval[1] + vol,
            s_reval[2] + vol,
        ))
        * svd.u.transpose();
    (f_e, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, spread: f64) -> Mat3 {
        Mat3::from_fn(|i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            base + spread * (rng.gen::<f64>() * 2.0 - 1.0)
        })
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
        let axis = Vec3::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        )
        .normalize();
        let angle = rng.gen::<f64>() * std::f64::consts::TAU;
        *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
            .matrix()
    }

    fn max_abs(m: &Mat3) -> f64 {
        m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    #[test]
    fn lame_nu_zero_degeneracy() {
        let p = lame_from_e_nu(1.0, 0.0).unwrap();
        assert_relative_eq!(p.shear_modulus, 0.5);
        assert_relative_eq!(p.lame_modulus, 0.0);
        assert_relative_eq!(p.bulk_modulus, 1.0 / 3.0);
    }

    #[test]
    fn lame_standard_values() {
        let p = lame_from_e_nu(1.0, 0.3).unwrap();
        assert_relative_eq!(p.shear_modulus, 1.0 / 2.6, epsilon = 1e-15);
        assert_relative_eq!(p.lame_modulus, 0.3 / (1.3 * 0.4), epsilon = 1e-15);
        assert_relative_eq!(p.bulk_modulus, 1.0 / 1.2, epsilon = 1e-15);
        // linear scaling in E
        let q = lame_from_e_nu(40.0, 0.3).unwrap();
        assert_relative_eq!(q.shear_modulus, 40.0 / 2.6, epsilon = 1e-12);
    }

    #[test]
    fn lame_domain_errors() {
        assert!(lame_from_e_nu(0.0, 0.3).is_err());
        assert!(lame_from_e_nu(-1.0, 0.3).is_err());
        assert!(lame_from_e_nu(1.0, 0.5).is_err());
        assert!(lame_from_e_nu(1.0, -0.1).is_err());
    }

    #[test]
    fn svd3_identity_and_diagonal() {
        let t = svd3(&Mat3::identity()).unwrap();
        assert_relative_eq!(t.sigma[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(t.sigma[2], 1.0, epsilon = 1e-14);
        assert!(max_abs(&(t.reconstruct() - Mat3::identity())) < 1e-13);

        let m = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        let t = svd3(&m).unwrap();
        assert_relative_eq!(t.sigma[0], 2.0, epsilon = 1e-13);
        assert_relative_eq!(t.sigma[1], 1.0, epsilon = 1e-13);
        assert_relative_eq!(t.sigma[2], 1.0, epsilon = 1e-13);
        assert!(max_abs(&(t.reconstruct() - m)) < 1e-13);
    }

    #[test]
    fn svd3_negative_determinant_convention() {
        let m = Mat3::from_diagonal(&Vec3::new(-2.0, 1.0, 1.0));
        let t = svd3(&m).unwrap();
        assert_relative_eq!(t.sigma[0], 2.0, epsilon = 1e-13);
        assert_relative_eq!(t.sigma[1], 1.0, epsilon = 1e-13);
        assert_relative_eq!(t.sigma[2], -1.0, epsilon = 1e-13);
        assert_relative_eq!(t.u.determinant(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.v.determinant(), 1.0, epsilon = 1e-12);
        assert!(max_abs(&(t.reconstruct() - m)) < 1e-12);
    }

    #[test]
    fn svd3_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let m = random_matrix(&mut rng, 1.5);
            let t = svd3(&m).unwrap();
            let scale = max_abs(&m).max(1.0);
            assert!(max_abs(&(t.reconstruct() - m)) < 1e-10 * scale);
            assert_relative_eq!(t.u.determinant(), 1.0, epsilon = 1e-10);
            assert_relative_eq!(t.v.determinant(), 1.0, epsilon = 1e-10);
            assert!(t.sigma[0] >= t.sigma[1].abs() && t.sigma[1] >= t.sigma[2].abs());
        }
    }

    #[test]
    fn svd3_rejects_non_finite() {
        let mut m = Mat3::identity();
        m[(1, 1)] = f64::NAN;
        assert!(matches!(svd3(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn fixed_corotated_rest_and_rotation() {
        let p = lame_from_e_nu(1.0, 0.3).unwrap();
        let tau = kirchhoff_fixed_corotated(&Mat3::identity(), &p).unwrap();
        assert!(max_abs(&tau) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            let tau = kirchhoff_fixed_corotated(&r, &p).unwrap();
            assert!(max_abs(&tau) < 1e-12);
        }
    }

    #[test]
    fn fixed_corotated_uniaxial_stretch() {
        // F = diag(2,1,1), μ̂ = λ = 1:
        // 2(F−R)Fᵀ = 2 diag(1,0,0) diag(2,1,1) = diag(4,0,0); (J−1)J = 2.
        let p = ElasticParams {
            youngs_modulus: 1.0,
            poisson_ratio: 0.0,
            shear_modulus: 1.0,
            lame_modulus: 1.0,
            bulk_modulus: 1.0,
        };
        let f = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        let tau = kirchhoff_fixed_corotated(&f, &p).unwrap();
        let expect = Mat3::from_diagonal(&Vec3::new(6.0, 2.0, 2.0));
        assert!(max_abs(&(tau - expect)) < 1e-12);
    }

    #[test]
    fn fixed_corotated_rejects_inverted() {
        let p = lame_from_e_nu(1.0, 0.3).unwrap();
        let f = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(matches!(
            kirchhoff_fixed_corotated(&f, &p),
            Err(Error::InvertedElement { .. })
        ));
    }

    #[test]
    fn fixed_corotated_rotation_equivariance() {
        let p = lame_from_e_nu(3.0, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let f = random_matrix(&mut rng, 0.4);
            if f.determinant() <= 0.05 {
                continue;
            }
            let r = random_rotation(&mut rng);
            let tau = kirchhoff_fixed_corotated(&f, &p).unwrap();
            let tau_rot = kirchhoff_fixed_corotated(&(r * f), &p).unwrap();
            let expect = r * tau * r.transpose();
            assert!(max_abs(&(tau_rot - expect)) < 1e-9 * max_abs(&expect).max(1.0));
        }
    }

    #[test]
    fn stvk_examples() {
        let zero = kirchhoff_stvk(&Mat3::identity(), &lame_from_e_nu(2.0, 0.2).unwrap()).unwrap();
        assert!(max_abs(&zero) < 1e-14);

        let p = ElasticParams {
            youngs_modulus: 1.0,
            poisson_ratio: 0.0,
            shear_modulus: 1.0,
            lame_modulus: 0.0,
            bulk_modulus: 0.0,
        };
        let f = Mat3::from_diagonal(&Vec3::new(std::f64::consts::E, 1.0, 1.0));
        let tau = kirchhoff_stvk(&f, &p).unwrap();
        assert!(max_abs(&(tau - Mat3::from_diagonal(&Vec3::new(2.0, 0.0, 0.0)))) < 1e-12);

        let p = ElasticParams {
            youngs_modulus: 1.0,
            poisson_ratio: 0.0,
            shear_modulus: 0.0,
            lame_modulus: 1.0,
            bulk_modulus: 0.0,
        };
        let e = std::f64::consts::E;
        let f = Mat3::from_diagonal(&Vec3::new(e, e, e));
        let tau = kirchhoff_stvk(&f, &p).unwrap();
        assert!(max_abs(&(tau - Mat3::identity() * 3.0)) < 1e-12);
    }

    #[test]
    fn stvk_symmetric_for_general_input() {
        let p = lame_from_e_nu(2.0, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let f = random_matrix(&mut rng, 0.5);
            if f.determinant() <= 0.05 {
                continue;
            }
            let tau = kirchhoff_stvk(&f, &p).unwrap();
            assert!(max_abs(&(tau - tau.transpose())) < 1e-10 * max_abs(&tau).max(1.0));
        }
    }

    #[test]
    fn stvk_zero_singular_value_is_log_domain_error() {
        let p = lame_from_e_nu(1.0, 0.3).unwrap();
        let f = Mat3::from_diagonal(&Vec3::new(0.0, 1.0, 1.0));
        assert!(matches!(kirchhoff_stvk(&f, &p), Err(Error::LogDomain(_))));
    }

    fn sand_params() -> (ElasticParams, PlasticParams) {
        let ep = lame_from_e_nu(1.0, 0.3).unwrap();
        let pp = PlasticParams {
            model: PlasticModel::DruckerPrager,
            friction_angle: 30.0f64.to_radians(),
            ..Default::default()
        };
        (ep, pp)
    }

    #[test]
    fn drucker_prager_expansion_releases_stress() {
        let (ep, pp) = sand_params();
        let f = Mat3::from_diagonal(&Vec3::new(2.0, 2.0, 2.0));
        let fe = return_map_drucker_prager(&f, &ep, &pp).unwrap();
        assert!(max_abs(&(fe - Mat3::identity())) < 1e-12);
    }

    #[test]
    fn drucker_prager_identity_unchanged() {
        let (ep, pp) = sand_params();
        let fe = return_map_drucker_prager(&Mat3::identity(), &ep, &pp).unwrap();
        assert!(max_abs(&(fe - Mat3::identity())) < 1e-14);
    }

    /// Independent scalar oracle over principal strains for the isochoric
    /// shear case, checking the projected deviatoric magnitude.
    #[test]
    fn drucker_prager_scalar_oracle() {
        let (ep, pp) = sand_params();
        let f = Mat3::from_diagonal(&Vec3::new(1.2, 1.0 / 1.2, 1.0));
        let fe = return_map_drucker_prager(&f, &ep, &pp).unwrap();

        // scalar route: strains (ln 1.2, -ln 1.2, 0), trace 0
        let e0 = 1.2f64.ln();
        let eps = [e0, -e0, 0.0];
        let trace: f64 = eps.iter().sum();
        let mean = trace / 3.0;
        let dev: Vec<f64> = eps.iter().map(|e| e - mean).collect();
        let dev_norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        let sin_phi = pp.friction_angle.sin();
        let alpha = (2.0f64 / 3.0).sqrt() * 2.0 * sin_phi / (3.0 - sin_phi);
        let dgamma = dev_norm
            + alpha * (3.0 * ep.lame_modulus + 2.0 * ep.shear_modulus) * trace
                / (2.0 * ep.shear_modulus);
        assert!(dgamma > 0.0);
        let expected_dev_norm = dev_norm - dgamma;

        let svd = svd3(&fe).unwrap();
        let eps_e = Vec3::new(svd.sigma[0].ln(), svd.sigma[1].ln(), svd.sigma[2].ln());
        let got = deviatoric(&eps_e).norm();
        assert_relative_eq!(got, expected_dev_norm.max(0.0), epsilon = 1e-12);
    }

    #[test]
    fn von_mises_inside_yield_is_identity() {
        let ep = lame_from_e_nu(1.0, 0.3).unwrap();
        let pp = PlasticParams {
            model: PlasticModel::VonMises,
            yield_stress: 10.0,
            ..Default::default()
        };
        let f = Mat3::from_diagonal(&Vec3::new(1.01, 1.0, 0.995));
        let (fe, dg) = return_map_von_mises(&f, &ep, &pp).unwrap();
        assert_eq!(dg, 0.0);
        assert!(max_abs(&(fe - f)) == 0.0);
    }

    #[test]
    fn von_mises_zero_radius_projects_to_hydrostatic() {
        let ep = lame_from_e_nu(1.0, 0.3).unwrap();
        let pp = PlasticParams {
            model: PlasticModel::VonMises,
            yield_stress: 0.0,
            ..Default::default()
        };
        let f = Mat3::from_diagonal(&Vec3::new(1.4, 0.9, 0.85));
        let (fe, _) = return_map_von_mises(&f, &ep, &pp).unwrap();
        let svd = svd3(&fe).unwrap();
        let eps = Vec3::new(svd.sigma[0].ln(), svd.sigma[1].ln(), svd.sigma[2].ln());
        assert!(deviatoric(&eps).norm() < 1e-12);
        // volume preserved by the deviatoric projection
        assert_relative_eq!(fe.determinant(), f.determinant(), epsilon = 1e-12);
    }

    #[test]
    fn von_mises_shear_case() {
        let ep = ElasticParams {
            youngs_modulus: 1.0,
            poisson_ratio: 0.0,
            shear_modulus: 1.0,
            lame_modulus: 0.0,
            bulk_modulus: 0.0,
        };
        let pp = PlasticParams {
            model: PlasticModel::VonMises,
            yield_stress: 0.1,
            ..Default::default()
        };
        let f = Mat3::from_diagonal(&Vec3::new(1.5, 1.0 / 1.5, 1.0));
        let (fe, dg) = return_map_von_mises(&f, &ep, &pp).unwrap();
        let e0 = 1.5f64.ln();
        let dev_norm = (2.0 * e0 * e0).sqrt();
        assert_relative_eq!(dg, dev_norm - 0.05, epsilon = 1e-12);
        // post-map stress sits on the yield surface
        let tau = kirchhoff_stvk(&fe, &ep).unwrap();
        let mean = tau.trace() / 3.0;
        let dev_stress = tau - Mat3::identity() * mean;
        assert_relative_eq!(dev_stress.norm(), pp.yield_stress, epsilon = 1e-10);
    }

    #[test]
    fn yield_update_examples() {
        let ep = ElasticParams {
            youngs_modulus: 1.0,
            poisson_ratio: 0.0,
            shear_modulus: 1.0,
            lame_modulus: 0.0,
            bulk_modulus: 0.0,
        };
        let pp = PlasticParams {
            model: PlasticModel::VonMises,
            hardening: 0.2,
            ..Default::default()
        };
        assert_relative_eq!(update_yield(0.05, 0.0, 0.0, &ep, &pp), 0.05);
        assert_relative_eq!(update_yield(0.05, 0.1, 0.0, &ep, &pp), 0.09, epsilon = 1e-15);

        let soft = PlasticParams {
            model: PlasticModel::VonMises,
            softening: 1.0,
            ..Default::default()
        };
        assert_eq!(update_yield(0.05, 0.0, 0.2, &ep, &soft), 0.0);
    }

    #[test]
    fn herschel_bulkley_inside_yield_unmodified() {
        let ep = lame_from_e_nu(1.0, 0.3).unwrap();
        let pp = PlasticParams {
            model: PlasticModel::HerschelBulkley,
            yield_stress: 10.0,
            viscosity: 0.1,
            ..Default::default()
        };
        let f = Mat3::from_diagonal(&Vec3::new(1.05, 0.98, 1.0));
        let (fe, _) = return_map_herschel_bulkley(&f, &ep, &pp, 1e-3).unwrap();
        assert!(max_abs(&(fe - f)) < 1e-12);
    }

    #[test]
    fn herschel_bulkley_relaxation_limits() {
        // full projection at η = 0
        assert_relative_eq!(herschel_bulkley_relax(2.0, 1.0, 0.0, 1.0, 1e-3), 1.0);
        // no relaxation as η → ∞
        let s = herschel_bulkley_relax(2.0, 1.0, 1e18, 1.0, 1e-3);
        assert_relative_eq!(s, 2.0, epsilon = 1e-12);
        let radius = (2.0f64 / 3.0).sqrt() * 0.3;
        assert_relative_eq!(
            herschel_bulkley_relax(2.0 * radius, radius, 0.0, 0.7, 0.01),
            radius
        );
    }

    #[test]
    fn herschel_bulkley_rigid_projection_admissible() {
        let ep = lame_from_e_nu(1.0, 0.3).unwrap();
        let pp = PlasticParams {
            model: PlasticModel::HerschelBulkley,
            yield_stress: 0.05,
            viscosity: 0.0,
            ..Default::default()
        };
        let f = Mat3::from_diagonal(&Vec3::new(1.3, 0.8, 1.0));
        let (fe, tau) = return_map_herschel_bulkley(&f, &ep, &pp, 1e-3).unwrap();
        let radius = (2.0f64 / 3.0).sqrt() * pp.yield_stress;
        let mean = tau.trace() / 3.0;
        let dev = tau - Mat3::identity() * mean;
        assert!(dev.norm() <= radius + 1e-10);
        // plastic flow is isochoric: volume of the trial state carried over
        assert_relative_eq!(fe.determinant(), f.determinant(), epsilon = 1e-12);
        // idempotent: reapplying does nothing
        let (fe2, _) = return_map_herschel_bulkley(&fe, &ep, &pp, 1e-3).unwrap();
        assert!(max_abs(&(fe2 - fe)) < 1e-10);
    }

    #[test]
    fn return_maps_idempotent_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let ep = lame_from_e_nu(2.0, 0.3).unwrap();
        let dp = PlasticParams {
            model: PlasticModel::DruckerPrager,
            friction_angle: 0.6,
            ..Default::default()
        };
        let vm = PlasticParams {
            model: PlasticModel::VonMises,
            yield_stress: 0.08,
            ..Default::default()
        };
        for _ in 0..300 {
            let f = random_matrix(&mut rng, 0.5);
            if f.determinant() <= 0.05 {
                continue;
            }
            let fe1 = return_map_drucker_prager(&f, &ep, &dp).unwrap();
            let fe2 = return_map_drucker_prager(&fe1, &ep, &dp).unwrap();
            assert!(max_abs(&(fe2 - fe1)) < 1e-10);

            let (ve1, _) = return_map_von_mises(&f, &ep, &vm).unwrap();
            let (ve2, dg2) = return_map_von_mises(&ve1, &ep, &vm).unwrap();
            assert!(max_abs(&(ve2 - ve1)) < 1e-10);
            assert!(dg2 < 1e-10);
        }
    }
}
