//! Base tongue arc and its deformation basis.

use crate::contour::{CONTOUR_DIM, CONTOUR_POINTS};

/// Norm of each deformation vector, in pixels.
pub const BASIS_SCALE: f64 = 60.0;

const CENTRE: [f64; 2] = [68.0, 75.0];
const RADIUS: f64 = 30.0;
/// Jaw rotation pivot, above and behind the tongue.
const PIVOT: [f64; 2] = [110.0, 20.0];

/// Arc position of point `i`, from root (0) to tip (1).
fn arc(i: usize) -> f64 {
    i as f64 / (CONTOUR_POINTS - 1) as f64
}

fn angle(s: f64) -> f64 {
    (-30.0 + 240.0 * s).to_radians()
}

fn bump(s: f64, centre: f64, width: f64) -> f64 {
    (-0.5 * ((s - centre) / width).powi(2)).exp()
}

/// Circular arc, flattened as all X then all Y.
pub fn base_contour() -> Vec<f64> {
    let mut out = vec![0.0; CONTOUR_DIM];
    for i in 0..CONTOUR_POINTS {
        let a = angle(arc(i));
        out[i] = CENTRE[0] + RADIUS * a.cos();
        out[CONTOUR_POINTS + i] = CENTRE[1] - RADIUS * a.sin();
    }
    out
}

/// Jaw-like rotation, front-back shift, dorsum bump and tip bump,
/// orthogonalized in that order and scaled to norm [`BASIS_SCALE`].
pub fn deformation_basis() -> Vec<Vec<f64>> {
    let base = base_contour();
    let field = |f: &dyn Fn(usize, [f64; 2]) -> [f64; 2]| {
        let mut v = vec![0.0; CONTOUR_DIM];
        for i in 0..CONTOUR_POINTS {
            let d = f(i, [base[i], base[CONTOUR_POINTS + i]]);
            v[i] = d[0];
            v[CONTOUR_POINTS + i] = d[1];
        }
        v
    };
    let normal = |i: usize| {
        let a = angle(arc(i));
        [a.cos(), -a.sin()]
    };
    let raw = [
        field(&|_, p| [-(p[1] - PIVOT[1]), p[0] - PIVOT[0]]),
        field(&|i, _| {
            let w = 0.3 + 0.7 * bump(arc(i), 0.4, 0.35);
            [w, 0.2 * w]
        }),
        field(&|i, _| {
            let n = normal(i);
            let b = bump(arc(i), 0.5, 0.15);
            [b * n[0], b * n[1]]
        }),
        field(&|i, _| {
            let n = normal(i);
            let b = bump(arc(i), 0.9, 0.1);
            [b * n[0], b * n[1]]
        }),
    ];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in raw {
        for u in &basis {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    basis
        .into_iter()
        .map(|v| v.into_iter().map(|a| a * BASIS_SCALE).collect())
        .collect()
}
