//! Precomputed radiance transfer with spherical-harmonics lighting, Oren-Nayar +
//! GGX transport, a least-squares residual term and a Monte Carlo reference
//! renderer. Everything numeric is generic over [`Real`] (`f32` or `f64`).

pub mod brdf;
pub mod config;
pub mod envlight;
pub mod error;
pub mod geometry;
pub mod hdr;
pub mod image;
pub mod metrics;
pub mod obj;
pub mod oracle;
pub mod parallel;
pub mod pipeline;
pub mod pfm;
pub mod png_io;
pub mod procedural;
pub mod relight;
pub mod residual;
pub mod scalar;
pub mod sh;
pub mod shc;
pub mod transport;
pub mod vector;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ShVectorF64 = sh::ShVector<f64>;
pub type ShVectorF32 = sh::ShVector<f32>;
pub type LightCoeffsF64 = envlight::LightCoeffs<f64>;
pub type LightCoeffsF32 = envlight::LightCoeffs<f32>;
pub type EnvironmentMapF64 = envlight::EnvironmentMap<f64>;
pub type EnvironmentMapF32 = envlight::EnvironmentMap<f32>;
pub type TriSceneF64 = geometry::TriScene<f64>;
pub type TriSceneF32 = geometry::TriScene<f32>;
pub type DecomposedSceneF64 = relight::DecomposedScene<f64>;
pub type DecomposedSceneF32 = relight::DecomposedScene<f32>;
pub type ImageF64 = image::RgbImage<f64>;
pub type ImageF32 = image::RgbImage<f32>;
