//! Incremental Bowyer-Watson Delaunay triangulation in 2D.
//!
//! Points are inserted in lexicographic order inside a far-away bounding
//! triangle; each insertion removes every triangle whose circumcircle
//! strictly contains the new point and re-fans the cavity boundary.
//! Cocircular configurations are not flipped, so ties resolve
//! deterministically from the insertion order.

/// Triangulate a point set; returns triangles as index triples into
/// `points`. Fewer than three distinct points, or an all-collinear set,
/// yields an empty list. Exact duplicate points are ignored (first
/// occurrence wins).
pub fn delaunay(points: &[(f64, f64)]) -> Vec<[usize; 3]> {
    if points.len() < 3 {
        return Vec::new();
    }

    // Lexicographic insertion order, duplicates dropped.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
    });
    order.dedup_by(|&mut a, &mut b| points[a] == points[b]);
    if order.len() < 3 {
        return Vec::new();
    }

    // A super-triangle comfortably outside any circumcircle the input can
    // produce. Its corners use virtual indices >= points.len().
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &i in &order {
        min_x = min_x.min(points[i].0);
        min_y = min_y.min(points[i].1);
        max_x = max_x.max(points[i].0);
        max_y = max_y.max(points[i].1);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1.0);
    let cx = 0.5 * (min_x + max_x);
    let cy = 0.5 * (min_y + max_y);
    let m = 1e5 * span;
    let super_a = (cx - 20.0 * m, cy - m);
    let super_b = (cx + 20.0 * m, cy - m);
    let super_c = (cx, cy + 20.0 * m);
    let n = points.len();
    let coord = |i: usize| -> (f64, f64) {
        match i.checked_sub(n) {
            None => points[i],
            Some(0) => super_a,
            Some(1) => super_b,
            Some(2) => super_c,
            _ => unreachable!(),
        }
    };

    let mut triangles: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    let mut bad: Vec<usize> = Vec::new();
    let mut boundary: Vec<(usize, usize)> = Vec::new();

    for &pi in &order {
        let p = points[pi];
        bad.clear();
        for (ti, tri) in triangles.iter().enumerate() {
            if in_circumcircle(coord(tri[0]), coord(tri[1]), coord(tri[2]), p) {
                bad.push(ti);
            }
        }
        // Cavity boundary: edges of bad triangles that appear exactly once.
        boundary.clear();
        for &ti in &bad {
            let t = triangles[ti];
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if let Some(pos) = boundary.iter().position(|&(u, v)| (u, v) == (b, a) || (u, v) == (a, b)) {
                    boundary.swap_remove(pos);
                } else {
                    boundary.push((a, b));
                }
            }
        }
        // Remove the cavity (descending order keeps indices valid).
        for &ti in bad.iter().rev() {
            triangles.swap_remove(ti);
        }
        for &(a, b) in &boundary {
            triangles.push([a, b, pi]);
        }
    }

    let mut out: Vec<[usize; 3]> = triangles
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .map(|t| orient_ccw(points, t))
        .collect();
    out.sort();
    out
}

fn orient_ccw(points: &[(f64, f64)], t: [usize; 3]) -> [usize; 3] {
    // Canonical form: smallest index first, counterclockwise winding.
    let mut t = t;
    if orient2d(points[t[0]], points[t[1]], points[t[2]]) < 0.0 {
        t.swap(1, 2);
    }
    let min_pos = (0..3).min_by_key(|&i| t[i]).unwrap();
    t.rotate_left(min_pos);
    t
}

/// Twice the signed area of (a, b, c); positive when counterclockwise.
#[inline]
fn orient2d(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Strict in-circumcircle test; cocircular points count as outside.
fn in_circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64), p: (f64, f64)) -> bool {
    let ax = a.0 - p.0;
    let ay = a.1 - p.1;
    let bx = b.0 - p.0;
    let by = b.1 - p.1;
    let cx = c.0 - p.0;
    let cy = c.1 - p.1;
    let det = (ax * ax + ay * ay) * (bx * cy - by * cx)
        - (bx * bx + by * by) * (ax * cy - ay * cx)
        + (cx * cx + cy * cy) * (ax * by - ay * bx);
    if orient2d(a, b, c) > 0.0 {
        det > 0.0
    } else {
        det < 0.0
    }
}

/// Circumcircle (center, radius) of a triangle; `None` when degenerate.
pub fn circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<((f64, f64), f64)> {
    let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
    if d.abs() < 1e-30 {
        return None;
    }
    let a2 = a.0 * a.0 + a.1 * a.1;
    let b2 = b.0 * b.0 + b.1 * b.1;
    let c2 = c.0 * c.0 + c.1 * c.1;
    let ux = (a2 * (b.1 - c.1) + b2 * (c.1 - a.1) + c2 * (a.1 - b.1)) / d;
    let uy = (a2 * (c.0 - b.0) + b2 * (a.0 - c.0) + c2 * (b.0 - a.0)) / d;
    let r = ((a.0 - ux).powi(2) + (a.1 - uy).powi(2)).sqrt();
    Some(((ux, uy), r))
}
