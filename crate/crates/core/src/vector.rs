//! Small fixed-size linear algebra: 3-vectors, unit directions and rotations.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]))
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> T {
        self.length_squared().sqrt()
    }

    /// Unit vector in the same direction; `None` for zero or non-finite input.
    pub fn normalized(self) -> Option<Self> {
        let len = self.length();
        if len > T::zero() && len.is_finite() {
            Some(self / len)
        } else {
            None
        }
    }

    #[inline]
    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

impl<T: Real> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Unit-length direction on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T>(Vec3<T>);

impl<T: Real> Direction<T> {
    /// Normalizes `v`; fails on zero or non-finite vectors.
    pub fn new(v: Vec3<T>) -> Result<Self> {
        v.normalized()
            .map(Direction)
            .ok_or_else(|| Error::argument("direction must be a finite non-zero vector"))
    }

    /// Wraps a vector the caller guarantees to be unit length.
    #[inline]
    pub fn new_unchecked(v: Vec3<T>) -> Self {
        debug_assert!((v.length() - T::one()).abs() < T::lit(1e-3));
        Direction(v)
    }

    /// Direction from polar angle `theta` (from +z) and azimuth `phi` (from +x toward +y).
    pub fn from_spherical(theta: T, phi: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Direction(Vec3::new(st * cp, st * sp, ct))
    }

    /// Uniform sphere sample from two numbers in `[0, 1)`.
    pub fn uniform_sphere(u1: T, u2: T) -> Self {
        let z = T::one() - (u1 + u1);
        let r = (T::one() - z * z).max(T::zero()).sqrt();
        let phi = T::TAU() * u2;
        let (sp, cp) = phi.sin_cos();
        Direction(Vec3::new(r * cp, r * sp, z))
    }

    pub fn up() -> Self {
        Direction(Vec3::new(T::zero(), T::zero(), T::one()))
    }

    #[inline]
    pub fn vec(self) -> Vec3<T> {
        self.0
    }

    #[inline]
    pub fn x(self) -> T {
        self.0.x
    }

    #[inline]
    pub fn y(self) -> T {
        self.0.y
    }

    #[inline]
    pub fn z(self) -> T {
        self.0.z
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.0.dot(o.0)
    }

    /// Polar angle from +z and azimuth in `[0, 2π)`.
    pub fn to_spherical(self) -> (T, T) {
        let theta = self.0.z.max(-T::one()).min(T::one()).acos();
        let mut phi = self.0.y.atan2(self.0.x);
        if phi < T::zero() {
            phi = phi + T::TAU();
        }
        (theta, phi)
    }
}

impl<T: Real> Neg for Direction<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Direction(-self.0)
    }
}

/// Orthonormal frame whose `z` axis is a given normal.
#[derive(Debug, Clone, Copy)]
pub struct Frame<T> {
    pub t: Vec3<T>,
    pub b: Vec3<T>,
    pub n: Vec3<T>,
}

impl<T: Real> Frame<T> {
    /// Branchless construction (Duff et al. 2017).
    pub fn from_normal(n: Vec3<T>) -> Self {
        let sign = T::one().copysign(n.z);
        let a = -T::one() / (sign + n.z);
        let b = n.x * n.y * a;
        let t = Vec3::new(T::one() + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let bt = Vec3::new(b, sign + n.y * n.y * a, -n.y);
        Self { t, b: bt, n }
    }

    #[inline]
    pub fn to_world(&self, local: Vec3<T>) -> Vec3<T> {
        self.t * local.x + self.b * local.y + self.n * local.z
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { m: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    pub fn transpose(&self) -> Self {
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[j][i];
            }
        }
        Self { m }
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let r = |i: usize| self.m[i][0] * v.x + self.m[i][1] * v.y + self.m[i][2] * v.z;
        Vec3::new(r(0), r(1), r(2))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut m = [[T::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Self { m }
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Proper rotation of 3-space (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3<T> {
    matrix: Mat3<T>,
}

impl<T: Real> Rotation3<T> {
    /// Validates orthonormality and handedness within `1e-6`.
    pub fn from_matrix(matrix: Mat3<T>) -> Result<Self> {
        let tol = 1e-6;
        let mtm = matrix.transpose().mul_mat(&matrix);
        let id = Mat3::<T>::identity();
        for i in 0..3 {
            for j in 0..3 {
                let d = (mtm.m[i][j] - id.m[i][j]).abs().to_f64_lossy();
                if !(d <= tol) {
                    return Err(Error::argument(format!(
                        "rotation matrix is not orthonormal (MᵀM[{i}][{j}] off by {d:e})"
                    )));
                }
            }
        }
        let det = matrix.determinant().to_f64_lossy();
        if !((det - 1.0).abs() <= tol) {
            return Err(Error::argument(format!("rotation determinant is {det}, expected +1")));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: Mat3::identity() }
    }

    /// Right-handed rotation by `angle` radians about `axis`.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Result<Self> {
        let a = axis
            .normalized()
            .ok_or_else(|| Error::argument("rotation axis must be non-zero"))?;
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        let m = [
            [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
            [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
            [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
        ];
        Ok(Self { matrix: Mat3 { m } })
    }

    /// Yaw about world +z, then pitch about world +y, then roll about world +x (degrees).
    pub fn from_yaw_pitch_roll_degrees(yaw: T, pitch: T, roll: T) -> Self {
        let ax = |x: f64, y: f64, z: f64, deg: T| {
            Self::from_axis_angle(Vec3::from_f64([x, y, z]), deg.to_radians())
                .expect("unit axis")
        };
        let rz = ax(0.0, 0.0, 1.0, yaw);
        let ry = ax(0.0, 1.0, 0.0, pitch);
        let rx = ax(1.0, 0.0, 0.0, roll);
        rx.compose(&ry.compose(&rz))
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3<T> {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &Self) -> Self {
        Self { matrix: self.matrix.mul_mat(&first.matrix) }
    }

    #[inline]
    pub fn apply(&self, v: Vec3<T>) -> Vec3<T> {
        self.matrix.mul_vec(v)
    }

    #[inline]
    pub fn apply_dir(&self, d: Direction<T>) -> Direction<T> {
        Direction::new_unchecked(self.apply(d.vec()))
    }
}
