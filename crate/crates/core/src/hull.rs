//! Euclidean projection onto the convex hull of a vertex set, hull membership
//! and signed distance to the hull boundary.
//!
//! Projection solves `min_{λ ∈ Δ} ½‖Vλ − q‖²` with Frank–Wolfe plus away
//! steps. The hull stores its Gram matrix so that every iteration costs
//! `O(m)` for `m` vertices; only the final reconstruction of `Vλ` touches the
//! coordinates. Facets are never enumerated, which keeps this usable in
//! embedding dimensions where facet enumeration is hopeless.
//!
//! Outside the hull the signed distance is the projection distance. Inside,
//! the boundary distance is estimated from supporting hyperplanes: for a unit
//! direction `u` the gap `max_i u·v_i − u·q` is the distance from `q` to the
//! supporting hyperplane with normal `u`, which is never below the true
//! boundary distance. The estimate is the smallest gap over a deterministic
//! direction set, refined locally by descent on the sphere.

use crate::embedding::dot;
use crate::error::{Error, Result};

/// Solver and classification settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullOptions {
    /// Stop once the Frank–Wolfe duality gap is at most `tol²`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 · (vertices + dim)`.
    pub max_iter: Option<usize>,
    /// Distance at or below which a point counts as contained.
    pub eps: f64,
    /// Quasi-random directions used by the interior-depth estimator.
    pub directions: usize,
}

impl Default for HullOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: None,
            eps: 1e-6,
            directions: 256,
        }
    }
}

/// A nonempty set of points sharing one dimension, with cached centroid and
/// Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HullVertices {
    coords: Vec<f64>,
    dim: usize,
    count: usize,
    centroid: Vec<f64>,
    gram: Vec<f64>,
}

impl HullVertices {
    pub fn new<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyHull)?;
        let dim = first.as_ref().len();
        let count = points.len();
        let mut coords = Vec::with_capacity(count * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            coords.extend_from_slice(p);
        }
        let mut centroid = vec![0.0; dim];
        for p in coords.chunks(dim.max(1)) {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= count as f64);
        let mut gram = vec![0.0; count * count];
        for i in 0..count {
            for j in i..count {
                let g = dot(&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim]);
                gram[i * count + j] = g;
                gram[j * count + i] = g;
            }
        }
        Ok(Self { coords, dim, count, centroid, gram })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.count).map(move |i| self.vertex(i))
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    #[inline]
    fn gram_row(&self, i: usize) -> &[f64] {
        &self.gram[i * self.count..(i + 1) * self.count]
    }

    fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: query.len() });
        }
        if query.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn project(&self, query: &[f64]) -> Result<HullProjection> {
        let o = HullOptions::default();
        project_onto_hull(self, query, o.tol, o.max_iter.unwrap_or(self.default_max_iter()))
    }

    pub fn default_max_iter(&self) -> usize {
        10 * (self.count + self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullProjection {
    pub weights: Vec<f64>,
    pub projected_point: Vec<f64>,
    pub distance: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Frank–Wolfe duality gap at the returned weights.
    pub gap: f64,
}

/// Projects `query` onto the hull of `vertices`.
///
/// Starts from the nearest vertex; each iteration compares the Frank–Wolfe
/// direction (towards the best vertex) with the away direction (from the
/// worst active vertex), takes the better one with exact line search, and
/// stops when the duality gap drops to `tol²`.
pub fn project_onto_hull(
    vertices: &HullVertices,
    query: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<HullProjection> {
    vertices.check_query(query)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("projection tolerance must be positive".into()));
    }
    let m = vertices.count;
    let b: Vec<f64> = vertices.vertices().map(|v| dot(v, query)).collect();

    let start = (0..m)
        .map(|i| (i, vertices.gram_row(i)[i] - 2.0 * b[i]))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
        .expect("hull is nonempty");
    let mut lambda = vec![0.0; m];
    lambda[start] = 1.0;
    // gl = G·λ
    let mut gl = vertices.gram_row(start).to_vec();
    let threshold = tol * tol;
    let mut converged = false;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut support_changed = true;
    let mut scratch = KktScratch::default();

    while iterations <= max_iter {
        if iterations > 0 && iterations % 64 == 0 {
            recompute_gl(vertices, &lambda, &mut gl);
        }
        // Gradient of ½‖Vλ − q‖² in λ is G·λ − b.
        let mut lgl = 0.0;
        let mut lg = 0.0;
        let (mut s, mut g_s) = (0, f64::INFINITY);
        let (mut a, mut g_a) = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..m {
            let g = gl[i] - b[i];
            if g < g_s {
                s = i;
                g_s = g;
            }
            if lambda[i] > 0.0 {
                lgl += lambda[i] * gl[i];
                lg += lambda[i] * g;
                if g > g_a {
                    a = i;
                    g_a = g;
                }
            }
        }
        gap = lg - g_s;
        if gap <= threshold {
            converged = true;
            break;
        }
        if iterations == max_iter {
            break;
        }
        iterations += 1;

        // While the active face is unchanged, jump towards the minimiser over
        // its affine hull (clipped to stay in the simplex).
        if !support_changed && correct_on_support(vertices, &b, &mut lambda, &mut scratch) {
            recompute_gl(vertices, &lambda, &mut gl);
            // A blocked move shrinks the face, so correct again; otherwise the
            // face optimum is reached and the next move must leave the face.
            support_changed = lambda.iter().filter(|&&l| l > 0.0).count() == scratch.support.len();
            continue;
        }

        let away_gap = g_a - lg;
        if gap >= away_gap || lambda[a] >= 1.0 {
            // d = v_s − x
            let slope = g_s - lg;
            let curvature = vertices.gram_row(s)[s] - 2.0 * gl[s] + lgl;
            let step = line_search(slope, curvature, 1.0);
            let row = vertices.gram_row(s);
            support_changed = lambda[s] == 0.0 && step > 0.0;
            if step >= 1.0 {
                lambda.iter_mut().for_each(|l| *l = 0.0);
                lambda[s] = 1.0;
                gl.copy_from_slice(row);
                support_changed = true;
            } else {
                for i in 0..m {
                    lambda[i] *= 1.0 - step;
                    gl[i] = (1.0 - step) * gl[i] + step * row[i];
                }
                lambda[s] += step;
            }
        } else {
            // d = x − v_a
            let slope = lg - g_a;
            let curvature = lgl - 2.0 * gl[a] + vertices.gram_row(a)[a];
            let max_step = lambda[a] / (1.0 - lambda[a]);
            let step = line_search(slope, curvature, max_step);
            let row = vertices.gram_row(a);
            for i in 0..m {
                lambda[i] *= 1.0 + step;
                gl[i] = (1.0 + step) * gl[i] - step * row[i];
            }
            lambda[a] -= step;
            support_changed = false;
            if step >= max_step || lambda[a] <= 0.0 {
                lambda[a] = 0.0;
                let z: f64 = lambda.iter().sum();
                lambda.iter_mut().for_each(|l| *l /= z);
                recompute_gl(vertices, &lambda, &mut gl);
                support_changed = true;
            }
        }
    }

    let mut projected = vec![0.0; vertices.dim];
    for (i, &l) in lambda.iter().enumerate() {
        if l != 0.0 {
            for (p, v) in projected.iter_mut().zip(vertices.vertex(i)) {
                *p += l * v;
            }
        }
    }
    let distance = projected
        .iter()
        .zip(query)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    if !distance.is_finite() {
        return Err(Error::Numeric("projection produced a non-finite distance".into()));
    }
    Ok(HullProjection {
        weights: lambda,
        projected_point: projected,
        distance,
        converged,
        iterations,
        gap,
    })
}

/// Minimiser of `slope·γ + ½·curvature·γ²` on `[0, max_step]`.
#[inline]
fn line_search(slope: f64, curvature: f64, max_step: f64) -> f64 {
    if curvature <= 0.0 {
        return if slope < 0.0 { max_step } else { 0.0 };
    }
    (-slope / curvature).clamp(0.0, max_step)
}

#[derive(Default)]
struct KktScratch {
    support: Vec<usize>,
    system: Vec<f64>,
    rhs: Vec<f64>,
}

/// Minimises over the affine hull of the current support, moving `lambda`
/// along the segment towards that minimiser as far as the simplex allows.
/// An affinely dependent support is first thinned without moving the point.
/// Returns false when nothing could be done.
fn correct_on_support(vertices: &HullVertices, b: &[f64], lambda: &mut [f64], scratch: &mut KktScratch) -> bool {
    const MAX_SUPPORT: usize = 256;
    scratch.support.clear();
    scratch.support.extend((0..lambda.len()).filter(|&i| lambda[i] > 0.0));
    let k = scratch.support.len();
    if !(2..=MAX_SUPPORT).contains(&k) {
        return false;
    }
    // [G_S 1; 1ᵀ 0] [μ; ν] = [b_S; 1]
    let n = k + 1;
    scratch.system.clear();
    scratch.system.resize(n * n, 0.0);
    scratch.rhs.clear();
    scratch.rhs.resize(n, 0.0);
    for (r, &i) in scratch.support.iter().enumerate() {
        let row = vertices.gram_row(i);
        for (c, &j) in scratch.support.iter().enumerate() {
            scratch.system[r * n + c] = row[j];
        }
        scratch.system[r * n + k] = 1.0;
        scratch.system[k * n + r] = 1.0;
        scratch.rhs[r] = b[i];
    }
    scratch.rhs[k] = 1.0;
    if !solve_in_place(&mut scratch.system, &mut scratch.rhs, n) {
        return drop_dependent_vertex(vertices, lambda, &scratch.support);
    }
    let mut t: f64 = 1.0;
    let mut blocking = None;
    for (r, &i) in scratch.support.iter().enumerate() {
        let delta = scratch.rhs[r] - lambda[i];
        if delta < 0.0 {
            let limit = lambda[i] / -delta;
            if limit < t {
                t = limit;
                blocking = Some(i);
            }
        }
    }
    if t <= 0.0 {
        return false;
    }
    for (r, &i) in scratch.support.iter().enumerate() {
        lambda[i] += t * (scratch.rhs[r] - lambda[i]);
        if lambda[i] < 0.0 {
            lambda[i] = 0.0;
        }
    }
    if let Some(i) = blocking {
        lambda[i] = 0.0;
    }
    let z: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= z);
    true
}

/// Carathéodory step: finds `μ ≠ 0` with `Σ μ_i v_i = 0` and `Σ μ_i = 0` over
/// `support`, then moves `λ` along `−μ` until one weight reaches zero. The
/// represented point does not change.
fn drop_dependent_vertex(vertices: &HullVertices, lambda: &mut [f64], support: &[usize]) -> bool {
    let rows = vertices.dim + 1;
    let k = support.len();
    // column c holds (v_c, 1)
    let mut a = vec![0.0; rows * k];
    for (c, &i) in support.iter().enumerate() {
        for (r, x) in vertices.vertex(i).iter().enumerate() {
            a[r * k + c] = *x;
        }
        a[vertices.dim * k + c] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut free = None;
    for col in 0..k {
        let row = pivots.len();
        let best = (row..rows).max_by(|&x, &y| a[x * k + col].abs().total_cmp(&a[y * k + col].abs()));
        match best {
            Some(p) if a[p * k + col].abs() > 1e-9 * scale => {
                for c in 0..k {
                    a.swap(row * k + c, p * k + c);
                }
                let inv = 1.0 / a[row * k + col];
                for c in 0..k {
                    a[row * k + c] *= inv;
                }
                for r in 0..rows {
                    let f = a[r * k + col];
                    if r != row && f != 0.0 {
                        for c in 0..k {
                            a[r * k + c] -= f * a[row * k + c];
                        }
                    }
                }
                pivots.push((row, col));
            }
            _ => {
                free = Some(col);
                break;
            }
        }
    }
    let Some(free) = free else {
        return false;
    };
    let mut mu = vec![0.0; k];
    mu[free] = 1.0;
    for &(row, col) in &pivots {
        mu[col] = -a[row * k + free];
    }
    let mut t = f64::INFINITY;
    let mut blocking = None;
    for (c, &i) in support.iter().enumerate() {
        if mu[c] > 0.0 && lambda[i] / mu[c] < t {
            t = lambda[i] / mu[c];
            blocking = Some(i);
        }
    }
    let Some(blocking) = blocking else {
        return false;
    };
    for (c, &i) in support.iter().enumerate() {
        lambda[i] = (lambda[i] - t * mu[c]).max(0.0);
    }
    lambda[blocking] = 0.0;
    let z: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= z);
    true
}

/// Gaussian elimination with partial pivoting; solution left in `rhs`.
/// Returns false on a (numerically) singular system.
fn solve_in_place(a: &mut [f64], rhs: &mut [f64], n: usize) -> bool {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .expect("nonempty range");
        if a[pivot * n + col].abs() <= 1e-11 * scale {
            return false;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            rhs.swap(col, pivot);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for c in col + 1..n {
            acc -= a[col * n + c] * rhs[c];
        }
        rhs[col] = acc / a[col * n + col];
    }
    rhs.iter().all(|x| x.is_finite())
}

fn recompute_gl(vertices: &HullVertices, lambda: &[f64], gl: &mut [f64]) {
    gl.iter_mut().for_each(|x| *x = 0.0);
    for (j, &l) in lambda.iter().enumerate() {
        if l != 0.0 {
            for (x, g) in gl.iter_mut().zip(vertices.gram_row(j)) {
                *x += l * g;
            }
        }
    }
}

/// True when the projection distance is at most `eps`.
pub fn contains(vertices: &HullVertices, query: &[f64], eps: f64) -> Result<bool> {
    Ok(vertices.project(query)?.distance <= eps)
}

/// Deterministic, low-discrepancy unit directions in `dim` dimensions.
///
/// Points of the additive recurrence `frac(0.5 + n·α)` with
/// `α_j = φ_d^{-j}` (φ_d the plastic-type constant of the dimension) are
/// pushed through Box–Muller and normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    dirs: Vec<f64>,
}

impl DirectionSet {
    pub fn new(dim: usize, count: usize) -> Self {
        let coords = dim + dim % 2;
        // Unique positive root of x^{k+1} = x + 1.
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (coords as f64 + 1.0));
        }
        let alpha: Vec<f64> = (1..=coords).map(|j| phi.powi(-(j as i32)).fract()).collect();
        let mut dirs = Vec::with_capacity(count * dim);
        let mut z = vec![0.0; coords];
        let mut n = 0u64;
        while dirs.len() < count * dim {
            n += 1;
            for (zj, aj) in z.iter_mut().zip(&alpha) {
                *zj = (0.5 + n as f64 * aj).fract();
            }
            let mut g = Vec::with_capacity(coords);
            for pair in z.chunks(2) {
                let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
                let t = std::f64::consts::TAU * pair[1];
                g.push(r * t.cos());
                g.push(r * t.sin());
            }
            g.truncate(dim);
            let norm = dot(&g, &g).sqrt();
            if norm < 1e-12 {
                continue;
            }
            dirs.extend(g.iter().map(|x| x / norm));
        }
        Self { dim, dirs }
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.dirs.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.dirs.chunks(self.dim.max(1))
    }
}

/// Support gap `max_i u·v_i − u·q` and the index attaining the max.
fn support_gap(vertices: &HullVertices, query: &[f64], u: &[f64]) -> (f64, usize) {
    let uq = dot(u, query);
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in vertices.vertices().enumerate() {
        let s = dot(u, v);
        if s > best.0 {
            best = (s, i);
        }
    }
    (best.0 - uq, best.1)
}

/// Estimated distance from an interior `query` to the hull boundary.
pub fn interior_depth(vertices: &HullVertices, query: &[f64], directions: usize) -> Result<f64> {
    let set = DirectionSet::new(vertices.dim, directions);
    interior_depth_with(vertices, query, &set, HullOptions::default().eps)
}

/// [`interior_depth`] with a prebuilt direction set.
pub fn interior_depth_with(vertices: &HullVertices, query: &[f64], set: &DirectionSet, eps: f64) -> Result<f64> {
    vertices.check_query(query)?;
    if set.dim != vertices.dim && !set.is_empty() {
        return Err(Error::DimensionMismatch { expected: vertices.dim, got: set.dim });
    }
    let distance = vertices.project(query)?.distance;
    if distance > eps {
        return Err(Error::NotInterior(distance));
    }
    Ok(depth_estimate(vertices, query, set))
}

fn depth_estimate(vertices: &HullVertices, query: &[f64], set: &DirectionSet) -> f64 {
    let dim = vertices.dim;
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let mut push_normalized = |v: Vec<f64>| {
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            candidates.push(v.into_iter().map(|x| x / n).collect());
        }
    };
    for v in vertices.vertices() {
        push_normalized(v.iter().zip(query).map(|(a, b)| a - b).collect());
    }
    push_normalized(query.iter().zip(&vertices.centroid).map(|(a, b)| a - b).collect());
    let mut scored: Vec<(f64, usize, Vec<f64>)> = candidates
        .into_iter()
        .chain(set.iter().map(<[f64]>::to_vec))
        .map(|u| {
            let (gap, arg) = support_gap(vertices, query, &u);
            (gap, arg, u)
        })
        .collect();
    if scored.is_empty() {
        return 0.0;
    }
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = scored[0].0.max(0.0);
    if best == 0.0 || dim < 2 {
        return best;
    }
    // Local descent on the sphere from the few best directions. Every
    // evaluated direction yields a valid supporting hyperplane, so the running
    // minimum stays an upper bound on the true depth.
    for (mut gap, mut arg, mut u) in scored.into_iter().take(4) {
        let mut eta = 0.25;
        let mut trial = vec![0.0; dim];
        for _ in 0..200 {
            if eta < 1e-10 || gap <= 0.0 {
                break;
            }
            let w: Vec<f64> = vertices.vertex(arg).iter().zip(query).map(|(a, b)| a - b).collect();
            let radial = dot(&w, &u);
            let mut tnorm = 0.0;
            for k in 0..dim {
                trial[k] = w[k] - radial * u[k];
                tnorm += trial[k] * trial[k];
            }
            let tnorm = tnorm.sqrt();
            if tnorm < 1e-15 {
                break;
            }
            for k in 0..dim {
                trial[k] = u[k] - eta * trial[k] / tnorm;
            }
            let n = dot(&trial, &trial).sqrt();
            trial.iter_mut().for_each(|x| *x /= n);
            let (g2, a2) = support_gap(vertices, query, &trial);
            if g2 < gap {
                gap = g2;
                arg = a2;
                u.copy_from_slice(&trial);
            } else {
                eta *= 0.5;
            }
        }
        best = best.min(gap.max(0.0));
    }
    best
}

/// Signed distance: positive outside, minus the interior depth inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedDistance {
    pub value: f64,
    pub interior: bool,
}

pub fn signed_unexpectedness(vertices: &HullVertices, item: &[f64]) -> Result<SignedDistance> {
    let opts = HullOptions::default();
    let set = DirectionSet::new(vertices.dim, opts.directions);
    signed_unexpectedness_with(vertices, item, &opts, &set)
}

/// [`signed_unexpectedness`] with explicit options and a reusable direction
/// set.
pub fn signed_unexpectedness_with(
    vertices: &HullVertices,
    item: &[f64],
    opts: &HullOptions,
    set: &DirectionSet,
) -> Result<SignedDistance> {
    vertices.check_query(item)?;
    let max_iter = opts.max_iter.unwrap_or(vertices.default_max_iter());
    let proj = project_onto_hull(vertices, item, opts.tol, max_iter)?;
    if proj.distance > opts.eps {
        return Ok(SignedDistance { value: proj.distance, interior: false });
    }
    let depth = depth_estimate(vertices, item, set);
    Ok(SignedDistance { value: -depth, interior: true })
}
