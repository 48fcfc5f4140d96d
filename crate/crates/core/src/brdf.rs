//! White-material reflectance: an Oren-Nayar diffuse lobe plus a GGX specular
//! lobe (height-correlated Smith masking, Schlick Fresnel).
//!
//! All lobes return 0 when either direction is at or below the horizon.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::vector::Direction;

/// GGX widths below this are an ideal mirror. A delta lobe has no density, so
/// [`ggx_eval`] returns 0 for them.
pub const MIN_ALPHA: f64 = 1e-3;

/// Surface reflectance parameters, every field in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material<T> {
    pub albedo: [T; 3],
    pub roughness: T,
    pub metallic: T,
    pub transparency: T,
}

impl<T: Real> Material<T> {
    /// Clamps every field into `[0, 1]`; NaN becomes 0.
    pub fn new(albedo: [T; 3], roughness: T, metallic: T, transparency: T) -> Self {
        let c = |v: T| if v.is_nan() { T::zero() } else { v.max(T::zero()).min(T::one()) };
        Self {
            albedo: albedo.map(c),
            roughness: c(roughness),
            metallic: c(metallic),
            transparency: c(transparency),
        }
    }

    /// White Lambertian: roughness 0, dielectric, opaque.
    pub fn lambertian(albedo: [T; 3]) -> Self {
        Self::new(albedo, T::zero(), T::zero(), T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lobe {
    Diffuse,
    Specular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfSample<T> {
    pub value: T,
    pub lobe: Lobe,
}

/// Oren-Nayar `A`, `B` terms for `σ = roughness·π/2` radians.
pub fn oren_nayar_ab<T: Real>(roughness: T) -> (T, T) {
    let sigma = roughness * T::FRAC_PI_2();
    let s2 = sigma * sigma;
    let a = T::one() - T::lit(0.5) * s2 / (s2 + T::lit(0.33));
    let b = T::lit(0.45) * s2 / (s2 + T::lit(0.09));
    (a, b)
}

/// White-albedo Oren-Nayar value (sr⁻¹). Equals `1/π` at roughness 0.
pub fn oren_nayar_eval<T: Real>(roughness: T, wi: Direction<T>, wo: Direction<T>, n: Direction<T>) -> T {
    let cos_i = wi.dot(n);
    let cos_o = wo.dot(n);
    if cos_i <= T::zero() || cos_o <= T::zero() {
        return T::zero();
    }
    let (a, b) = oren_nayar_ab(roughness);
    if b == T::zero() {
        return a * T::FRAC_1_PI();
    }
    let sin_i = (T::one() - cos_i * cos_i).max(T::zero()).sqrt();
    let sin_o = (T::one() - cos_o * cos_o).max(T::zero()).sqrt();
    // cos(φi - φo) from the tangent-plane projections
    let cos_dphi = if sin_i > T::lit(1e-6) && sin_o > T::lit(1e-6) {
        let pi = wi.vec() - n.vec() * cos_i;
        let po = wo.vec() - n.vec() * cos_o;
        (pi.dot(po) / (sin_i * sin_o)).max(T::zero())
    } else {
        T::zero()
    };
    // α = max(θi, θo), β = min(θi, θo)
    let (sin_alpha, tan_beta) = if cos_i > cos_o {
        (sin_o, sin_i / cos_i)
    } else {
        (sin_i, sin_o / cos_o)
    };
    (a + b * cos_dphi * sin_alpha * tan_beta) * T::FRAC_1_PI()
}

/// GGX width `α = roughness²`.
#[inline]
pub fn ggx_alpha<T: Real>(roughness: T) -> T {
    roughness * roughness
}

/// GGX normal distribution `D(h)` given `cos θ_h`.
#[inline]
pub fn ggx_distribution<T: Real>(alpha: T, cos_h: T) -> T {
    if cos_h <= T::zero() {
        return T::zero();
    }
    let a2 = alpha * alpha;
    let d = cos_h * cos_h * (a2 - T::one()) + T::one();
    a2 / (T::PI() * d * d)
}

/// Smith `Λ` for GGX.
#[inline]
pub fn smith_lambda<T: Real>(alpha: T, cos_theta: T) -> T {
    let c2 = cos_theta * cos_theta;
    let tan2 = (T::one() - c2).max(T::zero()) / c2;
    ((T::one() + alpha * alpha * tan2).sqrt() - T::one()) * T::lit(0.5)
}

/// Height-correlated masking-shadowing `G₂ = 1 / (1 + Λ(wi) + Λ(wo))`.
#[inline]
pub fn smith_g2<T: Real>(alpha: T, cos_i: T, cos_o: T) -> T {
    T::one() / (T::one() + smith_lambda(alpha, cos_i) + smith_lambda(alpha, cos_o))
}

#[inline]
pub fn schlick_fresnel<T: Real>(f0: T, cos: T) -> T {
    let m = (T::one() - cos).max(T::zero()).min(T::one());
    let m2 = m * m;
    f0 + (T::one() - f0) * m2 * m2 * m
}

/// Normal-incidence reflectance `F0 = 0.04 + 0.96·metallic`.
#[inline]
pub fn fresnel_f0<T: Real>(metallic: T) -> T {
    T::lit(0.04) + T::lit(0.96) * metallic
}

/// White GGX specular value `D·G·F / (4 (n·wi)(n·wo))`. Zero when
/// `α < MIN_ALPHA`.
pub fn ggx_eval<T: Real>(roughness: T, metallic: T, wi: Direction<T>, wo: Direction<T>, n: Direction<T>) -> T {
    let alpha = ggx_alpha(roughness);
    if alpha < T::lit(MIN_ALPHA) {
        return T::zero();
    }
    let cos_i = wi.dot(n);
    let cos_o = wo.dot(n);
    if cos_i <= T::zero() || cos_o <= T::zero() {
        return T::zero();
    }
    let Some(h) = (wi.vec() + wo.vec()).normalized() else {
        return T::zero();
    };
    let d = ggx_distribution(alpha, h.dot(n.vec()));
    let g = smith_g2(alpha, cos_i, cos_o);
    let f = schlick_fresnel(fresnel_f0(metallic), wi.vec().dot(h));
    d * g * f / (T::lit(4.0) * cos_i * cos_o)
}

/// Both lobes separately: `(1 − metallic)·Oren-Nayar` and GGX.
pub fn material_lobes<T: Real>(m: &Material<T>, wi: Direction<T>, wo: Direction<T>, n: Direction<T>) -> [BrdfSample<T>; 2] {
    let diffuse = if m.metallic >= T::one() {
        T::zero()
    } else {
        (T::one() - m.metallic) * oren_nayar_eval(m.roughness, wi, wo, n)
    };
    [
        BrdfSample { value: diffuse, lobe: Lobe::Diffuse },
        BrdfSample { value: ggx_eval(m.roughness, m.metallic, wi, wo, n), lobe: Lobe::Specular },
    ]
}

/// White-material reflectance `(1 − metallic)·ON + GGX`. Transparency does not
/// enter; it is coverage handled by the mask.
pub fn material_eval<T: Real>(m: &Material<T>, wi: Direction<T>, wo: Direction<T>, n: Direction<T>) -> T {
    let [d, s] = material_lobes(m, wi, wo, n);
    d.value + s.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::Vec3;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn d(x: f64, y: f64, z: f64) -> Direction<f64> {
        Direction::new(Vec3::new(x, y, z)).unwrap()
    }

    fn n() -> Direction<f64> {
        d(0.0, 0.0, 1.0)
    }

    /// Scalar Oren-Nayar written from the angles directly.
    fn oren_nayar_oracle(roughness: f64, ti: f64, pi: f64, to: f64, po: f64) -> f64 {
        let s = roughness * PI / 2.0;
        let s2 = s * s;
        let a = 1.0 - 0.5 * s2 / (s2 + 0.33);
        let b = 0.45 * s2 / (s2 + 0.09);
        let alpha = ti.max(to);
        let beta = ti.min(to);
        (a + b * (pi - po).cos().max(0.0) * alpha.sin() * beta.tan()) / PI
    }

    #[test]
    fn oren_nayar_examples() {
        let wi = d(0.3, 0.2, 0.8);
        let wo = d(-0.5, 0.1, 0.6);
        assert_relative_eq!(oren_nayar_eval(0.0, wi, wo, n()), 0.3183099, epsilon = 1e-7);
        assert_eq!(oren_nayar_eval(0.5, d(0.0, 0.3, -1.0), wo, n()), 0.0);
        // normal incidence: A(σ)/π with σ = π/4
        let s2: f64 = (PI / 4.0).powi(2);
        let expected = (1.0 - 0.5 * s2 / (s2 + 0.33)) / PI;
        assert_relative_eq!(oren_nayar_eval(0.5, n(), n(), n()), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 0.21462, epsilon = 1e-5);
    }

    #[test]
    fn oren_nayar_matches_angle_oracle() {
        for (ti, pi, to, po, r) in [(0.4, 0.3, 1.1, 2.0, 0.7), (1.2, 0.0, 0.2, 0.5, 0.3), (0.9, 1.0, 0.9, 1.2, 1.0)] {
            let wi = Direction::from_spherical(ti, pi);
            let wo = Direction::from_spherical(to, po);
            assert_relative_eq!(oren_nayar_eval(r, wi, wo, n()), oren_nayar_oracle(r, ti, pi, to, po), epsilon = 1e-12);
        }
    }

    #[test]
    fn ggx_normal_incidence_oracle() {
        // D(0) = 1/(πα²), G = 1, F = 0.04
        let alpha: f64 = 0.4 * 0.4;
        let expected = (1.0 / (PI * alpha * alpha)) * 1.0 * 0.04 / 4.0;
        assert_relative_eq!(ggx_eval(0.4, 0.0, n(), n(), n()), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 0.124340, epsilon = 1e-5);
    }

    #[test]
    fn ggx_sharpens_as_roughness_drops() {
        let wo = d(0.5, 0.0, 0.8);
        let wi = d(-0.5, 0.0, 0.8); // mirror of wo about n
        let v: Vec<f64> = [0.5, 0.3, 0.1].iter().map(|&r| ggx_eval(r, 0.0, wi, wo, n())).collect();
        assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
        assert_eq!(ggx_eval(0.3, 0.0, d(0.1, 0.0, -0.5), wo, n()), 0.0);
        assert_eq!(ggx_eval(0.3, 0.0, wi, d(0.1, 0.0, 0.0), n()), 0.0);
    }

    #[test]
    fn material_examples() {
        let wi = d(0.3, 0.2, 0.8);
        let wo = d(-0.5, 0.1, 0.6);
        let m = Material::new([0.5; 3], 0.0, 0.0, 0.0);
        assert!(material_eval(&m, wi, wo, n()) >= 1.0 / PI);
        let metal = Material::new([0.5; 3], 0.4, 1.0, 0.0);
        assert_eq!(material_lobes(&metal, wi, wo, n())[0].value, 0.0);
        let mixed = Material::new([0.2, 0.9, 0.4], 0.3, 0.5, 0.7);
        let expected = 0.5 * oren_nayar_eval(0.3, wi, wo, n()) + ggx_eval(0.3, 0.5, wi, wo, n());
        assert_relative_eq!(material_eval(&mixed, wi, wo, n()), expected, epsilon = 1e-15);
        // transparency has no effect on reflectance
        let opaque = Material::new([0.2, 0.9, 0.4], 0.3, 0.5, 0.0);
        assert_eq!(material_eval(&mixed, wi, wo, n()), material_eval(&opaque, wi, wo, n()));
    }

    #[test]
    fn material_clamps_fields() {
        let m = Material::new([1.5, -0.2, f64::NAN], 2.0, -1.0, 0.5);
        assert_eq!(m.albedo, [1.0, 0.0, 0.0]);
        assert_eq!((m.roughness, m.metallic, m.transparency), (1.0, 0.0, 0.5));
    }

    fn arb_upper() -> impl Strategy<Value = Direction<f64>> {
        (0.0..1.5f64, 0.0..std::f64::consts::TAU).prop_map(|(t, p)| Direction::from_spherical(t, p))
    }

    proptest! {
        #[test]
        fn ggx_is_reciprocal(wi in arb_upper(), wo in arb_upper(), r in 0.05..1.0f64, m in 0.0..1.0f64) {
            let a = ggx_eval(r, m, wi, wo, n());
            let b = ggx_eval(r, m, wo, wi, n());
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300));
        }

        #[test]
        fn values_are_nonnegative_and_finite(wi in arb_upper(), wo in arb_upper(), r in 0.0..1.0f64, m in 0.0..1.0f64) {
            let v = material_eval(&Material::new([1.0; 3], r, m, 0.0), wi, wo, n());
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
