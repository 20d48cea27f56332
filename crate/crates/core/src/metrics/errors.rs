use crate::error::{Error, Result};
use crate::surrogates::WssSeries;

fn check_pair(pred: &WssSeries, truth: &WssSeries) -> Result<()> {
    if pred.num_frames() != truth.num_frames() || pred.num_nodes() != truth.num_nodes() {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, truth is {}x{}",
            pred.num_frames(),
            pred.num_nodes(),
            truth.num_frames(),
            truth.num_nodes()
        )));
    }
    Ok(())
}

fn check_sets(pred: &[WssSeries], truth: &[WssSeries]) -> Result<()> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Shape(format!("{} predictions for {} cases", pred.len(), truth.len())));
    }
    pred.iter().zip(truth).try_for_each(|(p, t)| check_pair(p, t))
}

fn frame_err_sq(pred: &WssSeries, truth: &WssSeries, t: usize) -> f64 {
    pred.frame(t)
        .values
        .iter()
        .zip(&truth.frame(t).values)
        .map(|(a, b)| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>())
        .sum()
}

fn frame_norm_sq(s: &WssSeries, t: usize) -> f64 {
    s.frame(t).values.iter().flatten().map(|x| x * x).sum()
}

/// Mean over cases, frames and nodes of the squared error vector norm.
pub fn mse(pred: &[WssSeries], truth: &[WssSeries]) -> Result<f64> {
    check_sets(pred, truth)?;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        for f in 0..t.num_frames() {
            acc += frame_err_sq(p, t, f);
        }
        count += t.num_frames() * t.num_nodes();
    }
    Ok(acc / count as f64)
}

/// Relative error in percent with the number of all-zero truth frames skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rl2 {
    pub percent: f64,
    pub skipped: usize,
}

/// Mean over cases and frames of `||err(t)||_F / ||true(t)||_F`, in percent.
pub fn rl2(pred: &[WssSeries], truth: &[WssSeries]) -> Result<Rl2> {
    check_sets(pred, truth)?;
    let mut acc = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        for f in 0..t.num_frames() {
            let den = frame_norm_sq(t, f).sqrt();
            if den == 0.0 {
                skipped += 1;
                continue;
            }
            acc += frame_err_sq(p, t, f).sqrt() / den;
            used += 1;
        }
    }
    if skipped > 0 {
        log::warn!("rl2: skipped {skipped} all-zero truth frames");
    }
    if used == 0 {
        return Err(Error::Invalid("every truth frame is zero".into()));
    }
    Ok(Rl2 {
        percent: 100.0 * acc / used as f64,
        skipped,
    })
}

/// Largest frame norm of a case over the cycle.
pub fn max_frame_norm(truth: &WssSeries) -> f64 {
    (0..truth.num_frames())
        .map(|f| frame_norm_sq(truth, f).sqrt())
        .fold(0.0, f64::max)
}

/// Per-frame `||err(t)||_F / max_s ||true(s)||_F` in percent, averaged over
/// cases. All cases must share the frame count.
pub fn rl2_star_curve(pred: &[WssSeries], truth: &[WssSeries]) -> Result<Vec<f64>> {
    check_sets(pred, truth)?;
    let t = truth[0].num_frames();
    if truth.iter().any(|s| s.num_frames() != t) {
        return Err(Error::Shape("cases differ in frame count".into()));
    }
    let mut curve = vec![0.0; t];
    for (p, s) in pred.iter().zip(truth) {
        let den = max_frame_norm(s);
        if den == 0.0 {
            return Err(Error::Invalid("truth is identically zero".into()));
        }
        for (f, c) in curve.iter_mut().enumerate() {
            *c += 100.0 * frame_err_sq(p, s, f).sqrt() / den;
        }
    }
    curve.iter_mut().for_each(|c| *c /= pred.len() as f64);
    Ok(curve)
}

/// Mean over cases and frames of the per-frame `rl2*`, in percent.
pub fn rl2_star(pred: &[WssSeries], truth: &[WssSeries]) -> Result<f64> {
    check_sets(pred, truth)?;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (p, s) in pred.iter().zip(truth) {
        let den = max_frame_norm(s);
        if den == 0.0 {
            return Err(Error::Invalid("truth is identically zero".into()));
        }
        for f in 0..s.num_frames() {
            acc += 100.0 * frame_err_sq(p, s, f).sqrt() / den;
        }
        count += s.num_frames();
    }
    Ok(acc / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::VectorField;

    fn series(frames: Vec<Vec<[f64; 3]>>) -> WssSeries {
        let t = frames.len();
        WssSeries::new(frames.into_iter().map(VectorField::new).collect(), (0..t).map(|i| i as f64).collect()).unwrap()
    }

    fn random_series(seed: u64, t: usize, n: usize) -> WssSeries {
        let r = crate::autograd::check::random_tensor(t * n, 3, seed);
        WssSeries::from_flat(t, n, r.data(), 1.0).unwrap()
    }

    #[test]
    fn identical_series_score_zero() {
        let s = random_series(1, 3, 5);
        assert_eq!(mse(&[s.clone()], &[s.clone()]).unwrap(), 0.0);
        assert_eq!(rl2(&[s.clone()], &[s.clone()]).unwrap().percent, 0.0);
        assert_eq!(rl2_star(&[s.clone()], &[s]).unwrap(), 0.0);
    }

    #[test]
    fn unit_error_vector_gives_unit_mse() {
        let t = random_series(2, 3, 5);
        let p = t.map(|v| [v[0] + 1.0, v[1], v[2]]).unwrap();
        assert!((mse(&[p], &[t]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_prediction_has_ten_percent_rl2() {
        let t = random_series(3, 4, 6);
        let p = t.map(|v| v.map(|x| 1.1 * x)).unwrap();
        assert!((rl2(&[p], &[t]).unwrap().percent - 10.0).abs() < 1e-9);
    }

    #[test]
    fn hand_evaluated_two_node_case() {
        let t = series(vec![vec![[3.0, 0.0, 0.0], [4.0, 0.0, 0.0]]]);
        let p = series(vec![vec![[3.0, 0.0, 0.0], [3.0, 0.0, 0.0]]]);
        assert!((rl2(&[p.clone()], &[t.clone()]).unwrap().percent - 20.0).abs() < 1e-12);
        // the denominator is the largest frame norm over the cycle, here ||(3,4)|| = 5
        assert!((rl2_star(&[p], &[t]).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn max_norm_denominator_uses_the_loudest_frame() {
        let t = series(vec![vec![[3.0, 0.0, 0.0], [4.0, 0.0, 0.0]], vec![[0.3, 0.0, 0.0], [0.4, 0.0, 0.0]]]);
        let p = series(vec![vec![[3.0, 0.0, 0.0], [4.0, 0.0, 0.0]], vec![[0.3, 0.0, 0.0], [0.9, 0.0, 0.0]]]);
        let curve = rl2_star_curve(&[p.clone()], &[t.clone()]).unwrap();
        assert_eq!(curve[0], 0.0);
        assert!((curve[1] - 10.0).abs() < 1e-12);
        assert!((rl2_star(&[p.clone()], &[t.clone()]).unwrap() - 5.0).abs() < 1e-12);
        assert!((rl2(&[p], &[t]).unwrap().percent - 50.0).abs() < 1e-9);
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let t = random_series(4, 3, 5);
        let p = random_series(5, 3, 5);
        let (tf, pf) = (t.flat(), p.flat());
        let mut sq = 0.0;
        let mut rl = 0.0;
        let mut frame_norms = Vec::new();
        let mut frame_errs = Vec::new();
        for f in 0..3 {
            let mut e = 0.0;
            let mut d = 0.0;
            for v in 0..5 {
                for k in 0..3 {
                    let i = (f * 5 + v) * 3 + k;
                    e += (pf[i] - tf[i]).powi(2);
                    d += tf[i] * tf[i];
                }
            }
            sq += e;
            rl += e.sqrt() / d.sqrt();
            frame_norms.push(d.sqrt());
            frame_errs.push(e.sqrt());
        }
        let mx = frame_norms.iter().cloned().fold(0.0, f64::max);
        let star: f64 = frame_errs.iter().map(|e| 100.0 * e / mx).sum::<f64>() / 3.0;
        assert!((mse(&[p.clone()], &[t.clone()]).unwrap() - sq / 15.0).abs() < 1e-12);
        assert!((rl2(&[p.clone()], &[t.clone()]).unwrap().percent - 100.0 * rl / 3.0).abs() < 1e-12);
        assert!((rl2_star(&[p], &[t]).unwrap() - star).abs() < 1e-12);
    }

    #[test]
    fn zero_frames_are_skipped_and_counted() {
        let t = series(vec![vec![[0.0; 3]], vec![[1.0, 0.0, 0.0]]]);
        let p = series(vec![vec![[0.5, 0.0, 0.0]], vec![[1.0, 0.0, 0.0]]]);
        let r = rl2(&[p.clone()], &[t.clone()]).unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.percent, 0.0);
        assert!(rl2_star(&[p], &[t]).unwrap().is_finite());
        let z = series(vec![vec![[0.0; 3]]]);
        assert!(rl2_star(&[z.clone()], &[z]).is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = random_series(1, 3, 5);
        let b = random_series(1, 2, 5);
        assert!(mse(&[a.clone()], &[b]).is_err());
        assert!(mse(&[a.clone()], &[]).is_err());
    }
}
