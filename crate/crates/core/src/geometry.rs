//! Triangle scenes, BVH ray casting, visibility and primary camera hits.

use std::sync::Arc;

use crate::brdf::Material;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::{Direction, Vec3};

/// Leaf size at which BVH construction stops splitting.
const LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    pub dir: Vec3<T>,
}

impl<T: Real> Ray<T> {
    pub fn new(origin: Vec3<T>, dir: Direction<T>) -> Self {
        Self { origin, dir: dir.vec() }
    }

    #[inline]
    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        Self { min: Vec3::splat(T::infinity()), max: Vec3::splat(T::neg_infinity()) }
    }

    pub fn grow(&mut self, p: Vec3<T>) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(&self, o: &Self) -> Self {
        Self { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    pub fn contains(&self, o: &Self) -> bool {
        self.min.x <= o.min.x
            && self.min.y <= o.min.y
            && self.min.z <= o.min.z
            && self.max.x >= o.max.x
            && self.max.y >= o.max.y
            && self.max.z >= o.max.z
    }

    pub fn diagonal(&self) -> T {
        (self.max - self.min).length()
    }

    fn surface_area(&self) -> T {
        let d = self.max - self.min;
        if d.x < T::zero() {
            return T::zero();
        }
        (d.x * d.y + d.y * d.z + d.z * d.x) * T::lit(2.0)
    }

    /// Slab test; returns the entry distance when the box is hit within `(0, t_max)`.
    #[inline]
    fn hit(&self, origin: Vec3<T>, inv_dir: Vec3<T>, t_max: T) -> Option<T> {
        let mut t0 = T::zero();
        let mut t1 = t_max;
        for a in 0..3 {
            let lo = (self.min[a] - origin[a]) * inv_dir[a];
            let hi = (self.max[a] - origin[a]) * inv_dir[a];
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            // NaN from 0·∞ leaves the interval untouched
            if lo > t0 {
                t0 = lo;
            }
            if hi < t1 {
                t1 = hi;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// RGB texture in linear space, sampled bilinearly with wrap-around; `v = 0` is the bottom row.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture<T> {
    pub width: usize,
    pub height: usize,
    pub texels: Vec<[T; 3]>,
}

impl<T: Real> Texture<T> {
    pub fn sample(&self, u: T, v: T) -> [T; 3] {
        let fx = (u - u.floor()) * T::from_count(self.width) - T::lit(0.5);
        let fy = (T::one() - (v - v.floor())) * T::from_count(self.height) - T::lit(0.5);
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let wrap = |i: i64, n: usize| i.rem_euclid(n as i64) as usize;
        let x0 = x0.to_i64().unwrap_or(0);
        let y0 = y0.to_i64().unwrap_or(0);
        let at = |x: i64, y: i64| self.texels[wrap(y, self.height) * self.width + wrap(x, self.width)];
        let (a, b, c, d) = (at(x0, y0), at(x0 + 1, y0), at(x0, y0 + 1), at(x0 + 1, y0 + 1));
        let mut out = [T::zero(); 3];
        for k in 0..3 {
            let top = a[k] + (b[k] - a[k]) * tx;
            let bot = c[k] + (d[k] - c[k]) * tx;
            out[k] = top + (bot - top) * ty;
        }
        out
    }
}

/// Material assigned to a group of triangles, optionally modulated by an albedo texture.
#[derive(Debug, Clone)]
pub struct MaterialSlot<T> {
    pub material: Material<T>,
    pub albedo_texture: Option<Arc<Texture<T>>>,
}

impl<T: Real> MaterialSlot<T> {
    pub fn constant(material: Material<T>) -> Self {
        Self { material, albedo_texture: None }
    }

    pub fn at(&self, uv: [T; 2]) -> Material<T> {
        match &self.albedo_texture {
            None => self.material,
            Some(tex) => {
                let t = tex.sample(uv[0], uv[1]);
                let a = self.material.albedo;
                Material::new([a[0] * t[0], a[1] * t[1], a[2] * t[2]], self.material.roughness, self.material.metallic, self.material.transparency)
            }
        }
    }
}

/// Indexed triangle mesh before acceleration.
#[derive(Debug, Clone, Default)]
pub struct TriMesh<T> {
    pub positions: Vec<Vec3<T>>,
    pub normals: Vec<Vec3<T>>,
    pub uvs: Vec<[T; 2]>,
    pub triangles: Vec<[u32; 3]>,
    /// Index into the scene's material list, one per triangle.
    pub material_ids: Vec<u32>,
}

impl<T: Real> TriMesh<T> {
    /// Appends `other`, offsetting its indices and material ids. When only
    /// one side has UVs the other is padded with `(0, 0)`.
    pub fn append(&mut self, other: &TriMesh<T>, material_offset: u32) {
        let base = self.positions.len() as u32;
        let pad_self = self.uvs.is_empty() && !other.uvs.is_empty();
        let pad_other = !self.uvs.is_empty() && other.uvs.is_empty();
        if pad_self {
            self.uvs = vec![[T::zero(); 2]; self.positions.len()];
        }
        self.positions.extend_from_slice(&other.positions);
        self.normals.extend_from_slice(&other.normals);
        if pad_other {
            self.uvs.extend(std::iter::repeat_n([T::zero(); 2], other.positions.len()));
        } else {
            self.uvs.extend_from_slice(&other.uvs);
        }
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        self.material_ids.extend(other.material_ids.iter().map(|m| m + material_offset));
    }

    pub fn set_material(&mut self, id: u32) {
        self.material_ids = vec![id; self.triangles.len()];
    }

    /// Fills missing normals with area-weighted vertex normals.
    pub fn ensure_normals(&mut self) {
        if self.normals.len() == self.positions.len() {
            return;
        }
        let mut acc = vec![Vec3::zero(); self.positions.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.positions[i as usize]);
            let n = (b - a).cross(c - a);
            for &i in t {
                acc[i as usize] += n;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| n.normalized().unwrap_or(Vec3::new(T::zero(), T::zero(), T::one())))
            .collect();
    }
}

/// Infinite plane `z = height` that blocks shadow rays but is never seen by the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccluderPlane<T> {
    pub height: T,
}

#[derive(Debug, Clone, Copy)]
struct Node<T> {
    bounds: Aabb<T>,
    /// Leaf: first primitive; interior: index of the right child (left is `self + 1`).
    offset: u32,
    /// Primitive count; 0 for interior nodes.
    count: u32,
    axis: u8,
}

#[derive(Debug, Clone)]
struct Bvh<T> {
    nodes: Vec<Node<T>>,
    /// Triangle indices in leaf order.
    order: Vec<u32>,
}

/// Precomputed triangle edges for Möller–Trumbore.
#[derive(Debug, Clone, Copy)]
struct TriGeom<T> {
    v0: Vec3<T>,
    e1: Vec3<T>,
    e2: Vec3<T>,
    degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<T> {
    pub t: T,
    pub triangle: u32,
    /// Barycentric weights of vertices 1 and 2.
    pub u: T,
    pub v: T,
}

/// Immutable triangle scene with a BVH over its triangles.
#[derive(Debug, Clone)]
pub struct TriScene<T> {
    mesh: TriMesh<T>,
    materials: Vec<MaterialSlot<T>>,
    geoms: Vec<TriGeom<T>>,
    bvh: Bvh<T>,
    bounds: Aabb<T>,
    occluder: Option<OccluderPlane<T>>,
    shadow_epsilon: T,
}

impl<T: Real> TriScene<T> {
    /// Validates the mesh and builds the BVH.
    pub fn build(mut mesh: TriMesh<T>, materials: Vec<MaterialSlot<T>>, occluder: Option<OccluderPlane<T>>) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::argument("scene has no triangles"));
        }
        if materials.is_empty() {
            return Err(Error::argument("scene has no materials"));
        }
        let nv = mesh.positions.len();
        if mesh.material_ids.is_empty() {
            mesh.material_ids = vec![0; mesh.triangles.len()];
        }
        if mesh.material_ids.len() != mesh.triangles.len() {
            return Err(Error::argument("material id count does not match triangle count"));
        }
        for (i, t) in mesh.triangles.iter().enumerate() {
            if t.iter().any(|&v| v as usize >= nv) {
                return Err(Error::argument(format!("triangle {i} references a vertex out of range")));
            }
            if mesh.material_ids[i] as usize >= materials.len() {
                return Err(Error::argument(format!("triangle {i} references a missing material")));
            }
        }
        if !mesh.uvs.is_empty() && mesh.uvs.len() != nv {
            return Err(Error::argument("uv count does not match vertex count"));
        }
        if !mesh.normals.is_empty() && mesh.normals.len() != nv {
            return Err(Error::argument("normal count does not match vertex count"));
        }
        mesh.ensure_normals();
        for n in mesh.normals.iter_mut() {
            *n = n.normalized().unwrap_or(Vec3::new(T::zero(), T::zero(), T::one()));
        }
        if mesh.positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::argument("vertex positions must be finite"));
        }
        let geoms: Vec<TriGeom<T>> = mesh
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| mesh.positions[i as usize]);
                let e1 = b - a;
                let e2 = c - a;
                TriGeom { v0: a, e1, e2, degenerate: e1.cross(e2).length_squared() == T::zero() }
            })
            .collect();
        let mut bounds = Aabb::empty();
        for p in &mesh.positions {
            bounds.grow(*p);
        }
        let bvh = Bvh::build(&mesh, &geoms);
        let shadow_epsilon = (bounds.diagonal() * T::lit(1e-4)).max(T::lit(1e-7));
        Ok(Self { mesh, materials, geoms, bvh, bounds, occluder, shadow_epsilon })
    }

    pub fn mesh(&self) -> &TriMesh<T> {
        &self.mesh
    }

    pub fn materials(&self) -> &[MaterialSlot<T>] {
        &self.materials
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.bounds
    }

    pub fn occluder(&self) -> Option<OccluderPlane<T>> {
        self.occluder
    }

    /// Self-intersection offset: `1e-4 ×` bounding-box diagonal.
    pub fn shadow_epsilon(&self) -> T {
        self.shadow_epsilon
    }

    pub fn triangle_count(&self) -> usize {
        self.mesh.triangles.len()
    }

    #[inline]
    fn intersect_triangle(&self, idx: usize, ray: &Ray<T>, t_max: T) -> Option<(T, T, T)> {
        let g = &self.geoms[idx];
        if g.degenerate {
            return None;
        }
        let p = ray.dir.cross(g.e2);
        let det = g.e1.dot(p);
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let inv = T::one() / det;
        let s = ray.origin - g.v0;
        let u = s.dot(p) * inv;
        if u < T::zero() || u > T::one() {
            return None;
        }
        let q = s.cross(g.e1);
        let v = ray.dir.dot(q) * inv;
        if v < T::zero() || u + v > T::one() {
            return None;
        }
        let t = g.e2.dot(q) * inv;
        if t > T::zero() && t < t_max {
            Some((t, u, v))
        } else {
            None
        }
    }

    /// Nearest mesh hit in `(0, t_max)`; ties resolve to the lower triangle index.
    pub fn intersect(&self, ray: &Ray<T>, t_max: T) -> Option<Hit<T>> {
        let inv = Vec3::new(T::one() / ray.dir.x, T::one() / ray.dir.y, T::one() / ray.dir.z);
        let mut best: Option<Hit<T>> = None;
        let mut limit = t_max;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        let mut node_idx = 0usize;
        loop {
            let node = &self.bvh.nodes[node_idx];
            // `limit` is inclusive so equal-t hits with lower indices are still found.
            let visit = node.bounds.hit(ray.origin, inv, limit * (T::one() + T::epsilon())).is_some();
            if visit {
                if node.count > 0 {
                    let first = node.offset as usize;
                    for &tri in &self.bvh.order[first..first + node.count as usize] {
                        let probe = limit * (T::one() + T::epsilon());
                        if let Some((t, u, v)) = self.intersect_triangle(tri as usize, ray, probe) {
                            let better = match best {
                                None => t < t_max,
                                Some(b) => t < b.t || (t == b.t && tri < b.triangle),
                            };
                            if better {
                                best = Some(Hit { t, triangle: tri, u, v });
                                limit = t;
                            }
                        }
                    }
                } else {
                    let (near, far) = if ray.dir[node.axis as usize] < T::zero() {
                        (node.offset as usize, node_idx + 1)
                    } else {
                        (node_idx + 1, node.offset as usize)
                    };
                    stack[sp] = far as u32;
                    sp += 1;
                    node_idx = near;
                    continue;
                }
            }
            if sp == 0 {
                break;
            }
            sp -= 1;
            node_idx = stack[sp] as usize;
        }
        best
    }

    /// Reference nearest hit by testing every triangle.
    pub fn intersect_brute_force(&self, ray: &Ray<T>, t_max: T) -> Option<Hit<T>> {
        let mut best: Option<Hit<T>> = None;
        for i in 0..self.geoms.len() {
            if let Some((t, u, v)) = self.intersect_triangle(i, ray, t_max) {
                if best.is_none_or(|b| t < b.t) {
                    best = Some(Hit { t, triangle: i as u32, u, v });
                }
            }
        }
        best
    }

    /// True when anything (mesh or occluder plane) blocks the ray within `(0, t_max)`.
    pub fn occluded(&self, ray: &Ray<T>, t_max: T) -> bool {
        if let Some(plane) = self.occluder {
            if ray.dir.z != T::zero() {
                let t = (plane.height - ray.origin.z) / ray.dir.z;
                if t > T::zero() && t < t_max {
                    return true;
                }
            }
        }
        let inv = Vec3::new(T::one() / ray.dir.x, T::one() / ray.dir.y, T::one() / ray.dir.z);
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        let mut node_idx = 0usize;
        loop {
            let node = &self.bvh.nodes[node_idx];
            if node.bounds.hit(ray.origin, inv, t_max).is_some() {
                if node.count > 0 {
                    let first = node.offset as usize;
                    for &tri in &self.bvh.order[first..first + node.count as usize] {
                        if self.intersect_triangle(tri as usize, ray, t_max).is_some() {
                            return true;
                        }
                    }
                } else {
                    stack[sp] = node.offset;
                    sp += 1;
                    node_idx += 1;
                    continue;
                }
            }
            if sp == 0 {
                return false;
            }
            sp -= 1;
            node_idx = stack[sp] as usize;
        }
    }

    /// Visibility term: 1 when nothing blocks `x + ε·n` toward `wi`, else 0.
    pub fn visibility(&self, x: Vec3<T>, n: Vec3<T>, wi: Direction<T>) -> T {
        let ray = Ray::new(x + n * self.shadow_epsilon, wi);
        if self.occluded(&ray, T::infinity()) {
            T::zero()
        } else {
            T::one()
        }
    }

    /// Surface attributes at a hit, with normals oriented toward `-ray.dir`.
    pub fn surface_point(&self, ray: &Ray<T>, hit: &Hit<T>) -> SurfacePoint<T> {
        let tri = self.mesh.triangles[hit.triangle as usize];
        let w0 = T::one() - hit.u - hit.v;
        let g = &self.geoms[hit.triangle as usize];
        let mut geo = g.e1.cross(g.e2).normalized().unwrap_or(Vec3::new(T::zero(), T::zero(), T::one()));
        let [n0, n1, n2] = tri.map(|i| self.mesh.normals[i as usize]);
        let mut shading = (n0 * w0 + n1 * hit.u + n2 * hit.v).normalized().unwrap_or(geo);
        // two-sided surfaces: face the incoming ray
        if geo.dot(ray.dir) > T::zero() {
            geo = -geo;
            shading = -shading;
        }
        let uv = if self.mesh.uvs.is_empty() {
            [T::zero(); 2]
        } else {
            let [a, b, c] = tri.map(|i| self.mesh.uvs[i as usize]);
            [a[0] * w0 + b[0] * hit.u + c[0] * hit.v, a[1] * w0 + b[1] * hit.u + c[1] * hit.v]
        };
        let slot = &self.materials[self.mesh.material_ids[hit.triangle as usize] as usize];
        SurfacePoint {
            position: ray.at(hit.t),
            normal: Direction::new_unchecked(shading),
            geometric_normal: Direction::new_unchecked(geo),
            uv,
            material: slot.at(uv),
            triangle: hit.triangle,
        }
    }

    /// One camera ray per pixel center; `None` where the ray misses the mesh.
    pub fn primary_hits(&self, cam: &Camera<T>) -> Vec<Option<SurfacePoint<T>>> {
        (0..cam.height)
            .flat_map(|py| (0..cam.width).map(move |px| (px, py)))
            .map(|(px, py)| {
                let ray = cam.ray(px, py);
                self.intersect(&ray, T::infinity()).map(|h| self.surface_point(&ray, &h))
            })
            .collect()
    }
}

impl<T: Real> Bvh<T> {
    fn build(mesh: &TriMesh<T>, geoms: &[TriGeom<T>]) -> Self {
        let n = mesh.triangles.len();
        let mut boxes = Vec::with_capacity(n);
        let mut centroids = Vec::with_capacity(n);
        for g in geoms {
            let mut b = Aabb::empty();
            b.grow(g.v0);
            b.grow(g.v0 + g.e1);
            b.grow(g.v0 + g.e2);
            centroids.push((b.min + b.max) * T::lit(0.5));
            boxes.push(b);
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_node(&mut nodes, &mut order, 0, n, &boxes, &centroids);
        Self { nodes, order }
    }
}

fn build_node<T: Real>(
    nodes: &mut Vec<Node<T>>,
    order: &mut [u32],
    start: usize,
    end: usize,
    boxes: &[Aabb<T>],
    centroids: &[Vec3<T>],
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in &order[start..end] {
        bounds = bounds.union(&boxes[i as usize]);
        cbounds.grow(centroids[i as usize]);
    }
    let idx = nodes.len();
    nodes.push(Node { bounds, offset: start as u32, count: (end - start) as u32, axis: 0 });
    let count = end - start;
    if count <= LEAF_SIZE {
        return idx;
    }
    let extent = cbounds.max - cbounds.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= T::zero() {
        return idx;
    }
    // binned SAH along the widest centroid axis
    let bin_of = |c: Vec3<T>| -> usize {
        let f = (c[axis] - cbounds.min[axis]) / extent[axis] * T::from_count(SAH_BINS);
        f.to_usize().unwrap_or(0).min(SAH_BINS - 1)
    };
    let mut bin_boxes = [Aabb::<T>::empty(); SAH_BINS];
    let mut bin_counts = [0usize; SAH_BINS];
    for &i in &order[start..end] {
        let b = bin_of(centroids[i as usize]);
        bin_counts[b] += 1;
        bin_boxes[b] = bin_boxes[b].union(&boxes[i as usize]);
    }
    let mut best_cost = T::infinity();
    let mut best_split = SAH_BINS / 2;
    for split in 1..SAH_BINS {
        let (mut lb, mut rb) = (Aabb::empty(), Aabb::empty());
        let (mut lc, mut rc) = (0usize, 0usize);
        for b in 0..split {
            lb = lb.union(&bin_boxes[b]);
            lc += bin_counts[b];
        }
        for b in split..SAH_BINS {
            rb = rb.union(&bin_boxes[b]);
            rc += bin_counts[b];
        }
        if lc == 0 || rc == 0 {
            continue;
        }
        let cost = lb.surface_area() * T::from_count(lc) + rb.surface_area() * T::from_count(rc);
        if cost < best_cost {
            best_cost = cost;
            best_split = split;
        }
    }
    let slice = &mut order[start..end];
    let mut mid = partition(slice, |&i| bin_of(centroids[i as usize]) < best_split);
    if mid == 0 || mid == count {
        // all centroids in one bin: fall back to a median split
        slice.sort_by(|&a, &b| {
            centroids[a as usize][axis]
                .partial_cmp(&centroids[b as usize][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        mid = count / 2;
    }
    build_node(nodes, order, start, start + mid, boxes, centroids);
    let right = build_node(nodes, order, start + mid, end, boxes, centroids);
    nodes[idx].offset = right as u32;
    nodes[idx].count = 0;
    nodes[idx].axis = axis as u8;
    idx
}

fn partition<F: Fn(&u32) -> bool>(slice: &mut [u32], pred: F) -> usize {
    let mut i = 0;
    for j in 0..slice.len() {
        if pred(&slice[j]) {
            slice.swap(i, j);
            i += 1;
        }
    }
    i
}

/// Pinhole camera. Pixel `(0, 0)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera<T> {
    pub origin: Vec3<T>,
    forward: Vec3<T>,
    right: Vec3<T>,
    up: Vec3<T>,
    pub vfov_degrees: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> Camera<T> {
    pub fn look_at(origin: Vec3<T>, target: Vec3<T>, up: Vec3<T>, vfov_degrees: T, width: usize, height: usize) -> Result<Self> {
        if !(vfov_degrees > T::zero() && vfov_degrees < T::lit(180.0)) {
            return Err(Error::argument("camera field of view must be in (0, 180) degrees"));
        }
        if width == 0 || height == 0 {
            return Err(Error::argument("camera image must be at least 1×1"));
        }
        let forward = (target - origin)
            .normalized()
            .ok_or_else(|| Error::argument("camera target coincides with origin"))?;
        let right = forward
            .cross(up)
            .normalized()
            .ok_or_else(|| Error::argument("camera up vector is parallel to the view direction"))?;
        let up = right.cross(forward);
        Ok(Self { origin, forward, right, up, vfov_degrees, width, height })
    }

    pub fn forward(&self) -> Vec3<T> {
        self.forward
    }

    pub fn ray(&self, px: usize, py: usize) -> Ray<T> {
        let half = (self.vfov_degrees.to_radians() * T::lit(0.5)).tan();
        let aspect = T::from_count(self.width) / T::from_count(self.height);
        let sx = ((T::from_count(px) + T::lit(0.5)) / T::from_count(self.width) * T::lit(2.0) - T::one()) * half * aspect;
        let sy = (T::one() - (T::from_count(py) + T::lit(0.5)) / T::from_count(self.height) * T::lit(2.0)) * half;
        let dir = (self.forward + self.right * sx + self.up * sy).normalized().expect("finite camera ray");
        Ray { origin: self.origin, dir }
    }

    /// Projects a world point to continuous pixel coordinates (`None` if behind the camera).
    pub fn project(&self, p: Vec3<T>) -> Option<(T, T)> {
        let d = p - self.origin;
        let z = d.dot(self.forward);
        if z <= T::zero() {
            return None;
        }
        let half = (self.vfov_degrees.to_radians() * T::lit(0.5)).tan();
        let aspect = T::from_count(self.width) / T::from_count(self.height);
        let sx = d.dot(self.right) / z / (half * aspect);
        let sy = d.dot(self.up) / z / half;
        let px = (sx + T::one()) * T::lit(0.5) * T::from_count(self.width);
        let py = (T::one() - sy) * T::lit(0.5) * T::from_count(self.height);
        Some((px, py))
    }
}

/// Surface attributes at a primary hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint<T> {
    pub position: Vec3<T>,
    /// Interpolated shading normal facing the viewer side.
    pub normal: Direction<T>,
    pub geometric_normal: Direction<T>,
    pub uv: [T; 2],
    pub material: Material<T>,
    pub triangle: u32,
}

impl<T: Real> SurfacePoint<T> {
    /// Normal and view direction used for shading. When the interpolated normal
    /// faces away from the viewer, the geometric normal is used instead.
    pub fn shading_frame(&self, wo: Direction<T>) -> Direction<T> {
        if self.normal.dot(wo) > T::zero() {
            self.normal
        } else {
            self.geometric_normal
        }
    }
}
