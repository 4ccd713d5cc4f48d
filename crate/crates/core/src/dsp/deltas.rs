/// Regression deltas over `halfwidth` neighbours on each side, with edge
/// frames replicated; the second output applies the same operator again.
pub fn compute_deltas(frames: &[Vec<f64>], halfwidth: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let delta = regression_delta(frames, halfwidth);
    let delta2 = regression_delta(&delta, halfwidth);
    (delta, delta2)
}

fn regression_delta(frames: &[Vec<f64>], halfwidth: usize) -> Vec<Vec<f64>> {
    let n = frames.len();
    if n == 0 {
        return Vec::new();
    }
    let dim = frames[0].len();
    if halfwidth == 0 {
        return vec![vec![0.0; dim]; n];
    }
    let denom = 2.0 * (1..=halfwidth).map(|k| (k * k) as f64).sum::<f64>();
    let at = |i: isize| &frames[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|t| {
            let mut d = vec![0.0; dim];
            for k in 1..=halfwidth as isize {
                let (fwd, back) = (at(t + k), at(t - k));
                for (di, (a, b)) in d.iter_mut().zip(fwd.iter().zip(back)) {
                    *di += k as f64 * (a - b);
                }
            }
            d.iter_mut().for_each(|v| *v /= denom);
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_has_zero_deltas() {
        let frames = vec![vec![1.5, -2.0, 3.0]; 9];
        let (d, dd) = compute_deltas(&frames, 2);
        assert!(d.iter().flatten().chain(dd.iter().flatten()).all(|&v| v == 0.0));
    }

    #[test]
    fn linear_ramp_has_unit_delta_inside() {
        let frames: Vec<Vec<f64>> = (0..10).map(|t| vec![t as f64]).collect();
        let (d, _) = compute_deltas(&frames, 2);
        for t in 2..8 {
            assert!((d[t][0] - 1.0).abs() < 1e-12);
        }
        // replicated edge: (1*(1-0) + 2*(2-0)) / 10 = 0.5
        assert!((d[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_frame_has_zero_deltas() {
        let (d, dd) = compute_deltas(&[vec![4.0, 5.0]], 2);
        assert_eq!(d, vec![vec![0.0, 0.0]]);
        assert_eq!(dd, vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn deltas_preserve_length() {
        let frames: Vec<Vec<f64>> = (0..7).map(|t| vec![(t * t) as f64; 13]).collect();
        let (d, dd) = compute_deltas(&frames, 2);
        assert_eq!(d.len(), 7);
        assert_eq!(dd.len(), 7);
        assert!(d.iter().all(|r| r.len() == 13));
    }
}
