use super::{Cube, LinearMap};

type Pt = [f64; 2];

fn clip_half_plane(poly: &[Pt], inside: impl Fn(&Pt) -> f64) -> Vec<Pt> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for (i, cur) in poly.iter().enumerate() {
        let prev = &poly[(i + poly.len() - 1) % poly.len()];
        let (dc, dp) = (inside(cur), inside(prev));
        if dc >= 0.0 {
            if dp < 0.0 {
                let t = dp / (dp - dc);
                out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
            out.push(*cur);
        } else if dp >= 0.0 {
            let t = dp / (dp - dc);
            out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
        }
    }
    out
}

fn shoelace(poly: &[Pt]) -> f64 {
    let mut acc = 0.0;
    for (i, a) in poly.iter().enumerate() {
        let b = &poly[(i + 1) % poly.len()];
        acc += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * acc.abs()
}

/// Area of a convex polygon clipped to the box `[lo, hi]`.
pub fn clipped_area(poly: &[Pt], lo: Pt, hi: Pt) -> f64 {
    let mut p = poly.to_vec();
    p = clip_half_plane(&p, |q| q[0] - lo[0]);
    p = clip_half_plane(&p, |q| hi[0] - q[0]);
    p = clip_half_plane(&p, |q| q[1] - lo[1]);
    p = clip_half_plane(&p, |q| hi[1] - q[1]);
    if p.len() < 3 {
        0.0
    } else {
        shoelace(&p)
    }
}

/// `|AQ ∩ Q|`, with `AQ` the image parallelogram (an interval when `n = 1`).
pub fn cube_image_intersection_volume(a: &LinearMap, q: &Cube) -> f64 {
    let lo: Vec<f64> = q.corner().iter().map(|c| c.to_f64()).collect();
    let s = q.side().to_f64();
    match q.dim() {
        1 => {
            let e = a.entries_f64()[0];
            let (u, v) = (e * lo[0], e * (lo[0] + s));
            let (u, v) = (u.min(v), u.max(v));
            (v.min(lo[0] + s) - u.max(lo[0])).max(0.0)
        }
        _ => {
            let corners = [
                [lo[0], lo[1]],
                [lo[0] + s, lo[1]],
                [lo[0] + s, lo[1] + s],
                [lo[0], lo[1] + s],
            ];
            let image: Vec<Pt> = corners
                .iter()
                .map(|c| {
                    let y = a.apply_f64(c);
                    [y[0], y[1]]
                })
                .collect();
            clipped_area(&image, [lo[0], lo[1]], [lo[0] + s, lo[1] + s])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interval_cases() {
        let q = Cube::from_ints(&[0], 1).unwrap();
        assert_eq!(cube_image_intersection_volume(&LinearMap::identity(1).unwrap(), &q), 1.0);
        assert_eq!(cube_image_intersection_volume(&LinearMap::scalar(1, 2, 1).unwrap(), &q), 1.0);
        assert_eq!(cube_image_intersection_volume(&LinearMap::scalar(1, -1, 1).unwrap(), &q), 0.0);
    }

    #[test]
    fn rotation_of_centered_square() {
        // 90 degree rotation fixes the centred square
        let q = Cube::new(
            vec![super::super::DyadicRational::from_int(-1); 2],
            super::super::DyadicRational::from_int(2),
        )
        .unwrap();
        let r = LinearMap::from_pairs(2, &[(0, 1), (-1, 1), (1, 1), (0, 1)]).unwrap();
        assert_abs_diff_eq!(cube_image_intersection_volume(&r, &q), 4.0, epsilon = 1e-12);
        // shear keeps area, each row y overlaps in length 2 - |y|
        let sh = LinearMap::from_pairs(2, &[(1, 1), (1, 1), (0, 1), (1, 1)]).unwrap();
        assert_abs_diff_eq!(cube_image_intersection_volume(&sh, &q), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_in_plane() {
        let q = Cube::from_ints(&[0, 0], 1).unwrap();
        let d = LinearMap::diag(&[(1, 2), (3, 1)]).unwrap();
        assert_abs_diff_eq!(cube_image_intersection_volume(&d, &q), 0.5, epsilon = 1e-12);
    }
}
