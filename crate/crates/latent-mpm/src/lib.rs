//! Reduced-order elastoplasticity and fracture toolkit.
//!
//! The crate has three layers:
//!
//! 1. **Full-order simulation** ([`mpm`], [`constitutive`]): an explicit
//!    material point method solver with quadratic B-spline transfers
//!    (PIC/APIC), finite-strain hyperelasticity, and elastoplastic return
//!    mappings (Drucker-Prager, von Mises with hardening/softening,
//!    Herschel-Bulkley).
//! 2. **Neural compression** ([`neural`]): from-scratch MLP decoders and a
//!    1-D convolutional encoder that embed a whole simulation frame —
//!    positions, Kirchhoff stresses, and APIC affine momenta — into one
//!    r-dimensional latent vector.
//! 3. **Latent runtime** ([`rom`], [`metrics`]): after training, new
//!    simulations evolve entirely in latent space: decode state on a small
//!    set of integration particles, advance them with one exact MPM step,
//!    and project back onto the latent manifold with Gauss-Newton.
//!
//! [`scene`] provides the desk-scale scene catalog and dataset generation,
//! [`io`] the binary dataset/checkpoint/latent file formats, and [`cli`]
//! the `simulate`/`train`/`deploy`/`eval`/`bench` command surface.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod constitutive;
pub mod io;
pub mod metrics;
pub mod mpm;
pub mod neural;
pub mod rom;
pub mod scene;

/// 3×3 matrix of `f64`, the working type for deformation gradients,
/// stresses and affine momenta.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// 3-vector of `f64`.
pub type Vec3 = nalgebra::Vector3<f64>;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
///
/// Exit-code mapping in the CLI: configuration, format and dependency
/// errors are usage errors (exit 1); the numerical variants map to exit 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("inverted element: det(F) = {det}")]
    InvertedElement { det: f64 },

    #[error("log-strain undefined: singular value {0} is not positive")]
    LogDomain(f64),

    #[error("particle {particle} outside the safe grid region at ({:.6}, {:.6}, {:.6})", position[0], position[1], position[2])]
    OutOfDomain { particle: usize, position: [f64; 3] },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("encoder input too short: need at least {min} particles, got {got}")]
    Architecture { min: usize, got: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("model produced non-finite output: {0}")]
    ModelCorruption(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("pipeline dependency missing: {0}")]
    Dependency(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad numerics rather than bad usage.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::InvertedElement { .. }
                | Error::LogDomain(_)
                | Error::OutOfDomain { .. }
                | Error::Divergence(_)
                | Error::ModelCorruption(_)
                | Error::UndefinedMetric(_)
        )
    }
}
