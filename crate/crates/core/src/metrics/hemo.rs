use crate::error::{Error, Result};
use crate::mesh::vec3::norm;
use crate::mesh::ScalarField;
use crate::surrogates::WssSeries;

/// Cap applied to RRT where `(1 - 2 OSI) * TAWSS` vanishes.
pub const RRT_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct HemoFields {
    pub tawss: ScalarField,
    pub osi: ScalarField,
    pub rrt: ScalarField,
    /// Nodes whose RRT hit [`RRT_MAX`].
    pub rrt_clamped: Vec<bool>,
}

impl HemoFields {
    pub fn num_clamped(&self) -> usize {
        self.rrt_clamped.iter().filter(|&&c| c).count()
    }
}

/// TAWSS, OSI and RRT over one periodic cycle sampled at uniform frames.
///
/// With periodic closure the trapezoid rule weights every frame by `dt`, so
/// the cycle averages reduce to frame means.
pub fn derive_hemo(series: &WssSeries) -> Result<HemoFields> {
    let t = series.num_frames();
    if t < 2 {
        return Err(Error::Invalid(format!("need at least 2 frames, got {t}")));
    }
    let times = series.times();
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::Invalid("frames must be uniformly spaced".into()));
    }
    let n = series.num_nodes();
    let mut tawss = vec![0.0; n];
    let mut mean = vec![[0.0; 3]; n];
    for f in series.frames() {
        for (i, w) in f.values.iter().enumerate() {
            tawss[i] += norm(*w) / t as f64;
            for k in 0..3 {
                mean[i][k] += w[k] / t as f64;
            }
        }
    }
    let mut osi = vec![0.0; n];
    let mut rrt = vec![RRT_MAX; n];
    let mut clamped = vec![true; n];
    for i in 0..n {
        if tawss[i] > 0.0 {
            osi[i] = (0.5 * (1.0 - norm(mean[i]) / tawss[i])).clamp(0.0, 0.5);
        }
        let den = (1.0 - 2.0 * osi[i]) * tawss[i];
        if den > 1.0 / RRT_MAX {
            rrt[i] = 1.0 / den;
            clamped[i] = false;
        }
    }
    Ok(HemoFields {
        tawss: ScalarField::from_scalars(&tawss),
        osi: ScalarField::from_scalars(&osi),
        rrt: ScalarField::from_scalars(&rrt),
        rrt_clamped: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::VectorField;
    use crate::synth::{make_canonical, oracle_wss, OracleParams, Resolution};
    use proptest::prelude::*;

    fn series(frames: Vec<Vec<[f64; 3]>>) -> WssSeries {
        let t = frames.len();
        WssSeries::new(
            frames.into_iter().map(VectorField::new).collect(),
            (0..t).map(|i| i as f64 / t as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_vector() {
        let h = derive_hemo(&series(vec![vec![[3.0, 4.0, 0.0]]; 5])).unwrap();
        assert!((h.tawss.values[0][0] - 5.0).abs() < 1e-12);
        assert_eq!(h.osi.values[0][0], 0.0);
        assert!((h.rrt.values[0][0] - 0.2).abs() < 1e-12);
        assert_eq!(h.num_clamped(), 0);
    }

    #[test]
    fn perfect_oscillation_hits_the_sentinel() {
        let c = [1.0, -2.0, 0.5];
        let neg = c.map(|x| -x);
        let h = derive_hemo(&series(vec![vec![c], vec![neg], vec![c], vec![neg]])).unwrap();
        assert!((h.osi.values[0][0] - 0.5).abs() < 1e-12);
        assert_eq!(h.rrt.values[0][0], RRT_MAX);
        assert!(h.rrt_clamped[0]);
    }

    #[test]
    fn zero_wall_shear_is_flagged_not_fatal() {
        let h = derive_hemo(&series(vec![vec![[0.0; 3]]; 3])).unwrap();
        assert_eq!(h.osi.values[0][0], 0.0);
        assert!(h.rrt_clamped[0]);
    }

    #[test]
    fn rejects_single_frame_and_uneven_spacing() {
        assert!(derive_hemo(&series(vec![vec![[1.0; 3]]])).is_err());
        let s = WssSeries::new(vec![VectorField::new(vec![[1.0; 3]]); 3], vec![0.0, 0.1, 0.3]).unwrap();
        assert!(derive_hemo(&s).is_err());
    }

    fn rel(a: &ScalarField, b: &ScalarField) -> f64 {
        let d: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x[0] - y[0]).powi(2)).sum();
        d.sqrt() / b.l2_norm()
    }

    #[test]
    fn oracle_indices_converge_by_64_frames() {
        let mesh = make_canonical(Resolution::Coarse);
        let p = OracleParams::default();
        let coarse = derive_hemo(&oracle_wss(&mesh, &p.template.sample(64).unwrap(), &p).unwrap()).unwrap();
        let fine = derive_hemo(&oracle_wss(&mesh, &p.template.sample(4096).unwrap(), &p).unwrap()).unwrap();
        assert!(rel(&coarse.tawss, &fine.tawss) < 5e-3);
        assert!(rel(&coarse.osi, &fine.osi) < 5e-3);
        assert!(rel(&coarse.rrt, &fine.rrt) < 5e-3);
        // regression bound: the default oracle has visibly oscillating regions
        let busy = fine.osi.values.iter().filter(|v| v[0] > 0.05).count();
        assert!(busy * 20 >= mesh.num_vertices(), "{busy}");
    }

    proptest! {
        #[test]
        fn osi_bounds_and_scale_invariance(
            data in prop::collection::vec(-3.0f64..3.0, 4 * 6 * 3),
            alpha in 0.1f64..10.0,
        ) {
            let s = WssSeries::from_flat(6, 4, &data, 0.1).unwrap();
            let h = derive_hemo(&s).unwrap();
            let hs = derive_hemo(&s.map(|v| v.map(|x| alpha * x)).unwrap()).unwrap();
            for i in 0..4 {
                let o = h.osi.values[i][0];
                prop_assert!((0.0..=0.5).contains(&o));
                prop_assert!(h.tawss.values[i][0] >= 0.0);
                prop_assert!(h.rrt.values[i][0] > 0.0);
                prop_assert!((hs.tawss.values[i][0] - alpha * h.tawss.values[i][0]).abs() < 1e-9 * alpha.max(1.0));
                prop_assert!((hs.osi.values[i][0] - o).abs() < 1e-9);
            }
        }
    }
}
