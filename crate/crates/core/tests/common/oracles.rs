//! Reference computations that share no code with the library paths they
//! check.

use nalgebra::{DMatrix, DVector};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn combine(vertices: &[Vec<f64>], idx: &[usize], weights: &[f64]) -> Vec<f64> {
    let d = vertices[0].len();
    let mut x = vec![0.0; d];
    for (&i, &w) in idx.iter().zip(weights) {
        for k in 0..d {
            x[k] += w * vertices[i][k];
        }
    }
    x
}

/// Exact distance from `q` to the hull of `vertices` by enumerating every
/// vertex subset, solving the equality-constrained least squares on its
/// affine hull, and keeping feasible (non-negative) solutions.
///
/// Some optimal support is affinely independent, so the minimum over the
/// feasible subsets is the true distance.
pub fn exact_qp_distance(vertices: &[Vec<f64>], q: &[f64]) -> f64 {
    let m = vertices.len();
    assert!(m <= 16, "subset enumeration is exponential");
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[(r, c)] = vertices[i].iter().zip(&vertices[j]).map(|(x, y)| x * y).sum();
            }
            a[(r, k)] = 1.0;
            a[(k, r)] = 1.0;
            rhs[r] = vertices[i].iter().zip(q).map(|(x, y)| x * y).sum();
        }
        rhs[k] = 1.0;
        let Some(sol) = a.clone().lu().solve(&rhs) else {
            continue;
        };
        // reject ill-posed (affinely dependent) subsets
        if (&a * &sol - &rhs).amax() > 1e-9 {
            continue;
        }
        let w: Vec<f64> = (0..k).map(|r| sol[r]).collect();
        if w.iter().any(|&x| x < -1e-10) {
            continue;
        }
        let w: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
        let z: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / z).collect();
        best = best.min(dist(&combine(vertices, &idx, &w), q));
    }
    best
}

fn lattice(parts: usize, n: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if cur.len() + 1 == parts {
        let used: usize = cur.iter().sum();
        let mut p = cur.clone();
        p.push(n - used);
        out.push(p);
        return;
    }
    let used: usize = cur.iter().sum();
    for x in 0..=(n - used) {
        cur.push(x);
        lattice(parts, n, out, cur);
        cur.pop();
    }
}

/// Simplex-grid search for the hull distance.
///
/// Level 0 evaluates every weight vector on the lattice `{j/K}` of the
/// simplex (K chosen so the lattice stays small). Each later level halves
/// the step and evaluates every lattice point within two coarse steps of the
/// incumbent, until the step is at most 1/200.
pub fn grid_distance(vertices: &[Vec<f64>], q: &[f64]) -> f64 {
    let m = vertices.len();
    if m == 1 {
        return dist(&vertices[0], q);
    }
    let idx: Vec<usize> = (0..m).collect();
    let eval = |w: &[f64]| dist(&combine(vertices, &idx, w), q);
    let mut k0 = 8usize;
    if m <= 3 {
        k0 = 256;
    } else if m == 4 {
        k0 = 32;
    }
    let mut pts = Vec::new();
    lattice(m, k0, &mut pts, &mut Vec::new());
    let mut best_w: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    for p in &pts {
        let w: Vec<f64> = p.iter().map(|&x| x as f64 / k0 as f64).collect();
        let d = eval(&w);
        if d < best {
            best = d;
            best_w = w;
        }
    }
    let mut k = k0;
    while k < 200 {
        k *= 2;
        let center: Vec<i64> = best_w.iter().map(|w| (w * k as f64).round() as i64).collect();
        let radius = 4i64;
        // enumerate offsets in [-r, r]^(m-1); the last coordinate closes the sum
        let mut offsets = vec![-radius; m - 1];
        loop {
            let mut p: Vec<i64> = center[..m - 1].iter().zip(&offsets).map(|(c, o)| c + o).collect();
            let used: i64 = p.iter().sum();
            let last = k as i64 - used;
            if p.iter().all(|&x| x >= 0) && last >= 0 {
                p.push(last);
                let w: Vec<f64> = p.iter().map(|&x| x as f64 / k as f64).collect();
                let d = eval(&w);
                if d < best {
                    best = d;
                    best_w = w;
                }
            }
            let mut j = 0;
            while j < m - 1 {
                offsets[j] += 1;
                if offsets[j] <= radius {
                    break;
                }
                offsets[j] = -radius;
                j += 1;
            }
            if j == m - 1 {
                break;
            }
        }
    }
    best
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull (Andrew's monotone chain).
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &x in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], x) <= 0.0 {
            lower.pop();
        }
        lower.push(x);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &x in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], x) <= 0.0 {
            upper.pop();
        }
        upper.push(x);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
}

/// Exact signed distance to a planar convex polygon (at least 3 hull
/// vertices) by facet enumeration: negative inside, positive outside.
pub fn signed_distance_2d(points: &[[f64; 2]], q: [f64; 2]) -> f64 {
    let hull = convex_hull_2d(points);
    assert!(hull.len() >= 3, "degenerate polygon");
    let n = hull.len();
    let inside = (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], q) >= 0.0);
    let boundary = (0..n)
        .map(|i| point_segment(q, hull[i], hull[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if inside {
        -boundary
    } else {
        boundary
    }
}

/// Point-in-convex-polygon for a CCW hull.
pub fn inside_polygon(hull: &[[f64; 2]], q: [f64; 2]) -> bool {
    let n = hull.len();
    (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], q) >= 0.0)
}
