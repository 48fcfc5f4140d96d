//! Built-in meshes so scenes can be assembled without external assets.

use crate::geometry::TriMesh;
use crate::scalar::Real;
use crate::vector::Vec3;

/// Latitude/longitude sphere with analytic normals; material id 0.
pub fn uv_sphere<T: Real>(center: Vec3<T>, radius: T, rings: usize, segments: usize) -> TriMesh<T> {
    let rings = rings.max(2);
    let segments = segments.max(3);
    let mut m = TriMesh::default();
    for i in 0..=rings {
        let v = T::from_count(i) / T::from_count(rings);
        let theta = v * T::PI();
        for j in 0..=segments {
            let u = T::from_count(j) / T::from_count(segments);
            let phi = u * T::TAU();
            let n = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            m.positions.push(center + n * radius);
            m.normals.push(n);
            m.uvs.push([u, T::one() - v]);
        }
    }
    let row = segments as u32 + 1;
    for i in 0..rings as u32 {
        for j in 0..segments as u32 {
            let a = i * row + j;
            let b = a + row;
            if i != 0 {
                m.triangles.push([a, b, a + 1]);
            }
            if i + 1 != rings as u32 {
                m.triangles.push([a + 1, b, b + 1]);
            }
        }
    }
    m.set_material(0);
    m
}

/// Square in the plane `z = center.z`, facing +z, side `2·half_size`.
pub fn quad_plane<T: Real>(center: Vec3<T>, half_size: T) -> TriMesh<T> {
    let mut m = TriMesh::default();
    let n = Vec3::new(T::zero(), T::zero(), T::one());
    for (dx, dy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
        m.positions.push(center + Vec3::new(T::lit(dx) * half_size, T::lit(dy) * half_size, T::zero()));
        m.normals.push(n);
        m.uvs.push([T::lit((dx + 1.0) / 2.0), T::lit((dy + 1.0) / 2.0)]);
    }
    m.triangles = vec![[0, 1, 2], [0, 2, 3]];
    m.set_material(0);
    m
}

/// Closed axis-aligned box with outward flat normals.
pub fn closed_box<T: Real>(center: Vec3<T>, half: Vec3<T>) -> TriMesh<T> {
    let mut m = TriMesh::default();
    let faces: [([f64; 3], [f64; 3], [f64; 3]); 6] = [
        ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
        ([-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]),
        ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
        ([0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        ([0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]),
    ];
    for (n, a, b) in faces {
        let (n, a, b) = (Vec3::<T>::from_f64(n), Vec3::<T>::from_f64(a), Vec3::<T>::from_f64(b));
        let scale = |v: Vec3<T>| Vec3::new(v.x * half.x, v.y * half.y, v.z * half.z);
        let base = m.positions.len() as u32;
        for (s, t) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let p = n + a * T::lit(s) + b * T::lit(t);
            m.positions.push(center + scale(p));
            m.normals.push(n);
            m.uvs.push([T::lit((s + 1.0) / 2.0), T::lit((t + 1.0) / 2.0)]);
        }
        m.triangles.push([base, base + 1, base + 2]);
        m.triangles.push([base, base + 2, base + 3]);
    }
    m.set_material(0);
    m
}

/// Cylinder of `radius` between `a` and `b` capped by hemispheres.
pub fn capsule<T: Real>(a: Vec3<T>, b: Vec3<T>, radius: T, rings: usize, segments: usize) -> TriMesh<T> {
    let axis = (b - a).normalized().unwrap_or(Vec3::new(T::zero(), T::zero(), T::one()));
    let frame = crate::vector::Frame::from_normal(axis);
    let half = rings.max(2) / 2;
    let segments = segments.max(3);
    let mut m = TriMesh::default();
    // ring k: k in 0..=2*half; first half around `a`, second around `b`
    let total = 2 * half + 1;
    for k in 0..=total {
        let (theta, base) = if k <= half {
            (T::PI() - T::FRAC_PI_2() * T::from_count(k) / T::from_count(half), a)
        } else {
            (T::FRAC_PI_2() - T::FRAC_PI_2() * T::from_count(k - half - 1) / T::from_count(half), b)
        };
        for j in 0..=segments {
            let phi = T::TAU() * T::from_count(j) / T::from_count(segments);
            let local = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let n = frame.to_world(local);
            m.positions.push(base + n * radius);
            m.normals.push(n);
            m.uvs.push([T::from_count(j) / T::from_count(segments), T::from_count(k) / T::from_count(total)]);
        }
    }
    let row = segments as u32 + 1;
    for k in 0..total as u32 {
        for j in 0..segments as u32 {
            let p = k * row + j;
            let q = p + row;
            if k != 0 {
                m.triangles.push([p, p + 1, q]);
            }
            if k + 1 != total as u32 {
                m.triangles.push([p + 1, q + 1, q]);
            }
        }
    }
    m.set_material(0);
    m
}

/// Stylized standing figure of roughly `height` units built from capsules and a
/// head sphere, feet at `base`. Material ids: 0 skin, 1 clothing.
pub fn capsule_person<T: Real>(base: Vec3<T>, height: T) -> TriMesh<T> {
    let h = |f: f64| height * T::lit(f);
    let p = |x: f64, y: f64, z: f64| base + Vec3::new(h(x), h(y), h(z));
    let mut m = TriMesh::default();
    let mut add = |part: TriMesh<T>, mat: u32| {
        let mut part = part;
        part.set_material(0);
        m.append(&part, mat);
    };
    add(uv_sphere(p(0.0, 0.0, 0.90), h(0.07), 16, 24), 0);
    add(capsule(p(0.0, 0.0, 0.52), p(0.0, 0.0, 0.76), h(0.11), 8, 24), 1);
    add(capsule(p(-0.06, 0.0, 0.06), p(-0.06, 0.0, 0.45), h(0.045), 6, 16), 1);
    add(capsule(p(0.06, 0.0, 0.06), p(0.06, 0.0, 0.45), h(0.045), 6, 16), 1);
    add(capsule(p(-0.16, 0.0, 0.45), p(-0.15, 0.0, 0.76), h(0.035), 6, 16), 0);
    add(capsule(p(0.16, 0.0, 0.45), p(0.15, 0.0, 0.76), h(0.035), 6, 16), 0);
    m
}
