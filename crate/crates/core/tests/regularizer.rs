use conerepair::Regularizer;
use proptest::prelude::*;

fn objective(r: &Regularizer, scale: f64, theta: &[f64], v: &[f64]) -> f64 {
    let d: f64 = theta.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    scale * r.eval(theta) + 0.5 * d
}

/// One distance atom per coordinate (L1 or squared L2, chosen by `kinds`)
/// plus a box that always contains the center.
fn build(kinds: &[bool], weights: &[f64], center: &[f64], lo: &[f64], hi: &[f64]) -> Regularizer {
    let k = kinds.len();
    let mut l1w = vec![0.0; k];
    let mut l2w = vec![0.0; k];
    for i in 0..k {
        if kinds[i] {
            l1w[i] = weights[i];
        } else {
            l2w[i] = weights[i];
        }
    }
    let lower: Vec<f64> = (0..k).map(|i| center[i] - lo[i]).collect();
    let upper: Vec<f64> = (0..k).map(|i| center[i] + hi[i]).collect();
    Regularizer::sum(vec![
        Regularizer::l1(l1w, center.to_vec()).unwrap(),
        Regularizer::l2_squared(l2w, center.to_vec()).unwrap(),
        Regularizer::bounds(lower, upper).unwrap(),
    ])
}

fn instance() -> impl Strategy<Value = (Regularizer, f64, Vec<f64>, Vec<Vec<f64>>)> {
    (1usize..5).prop_flat_map(|k| {
        (
            prop::collection::vec(any::<bool>(), k),
            prop::collection::vec(0.0f64..3.0, k),
            prop::collection::vec(-5.0f64..5.0, k),
            prop::collection::vec(0.0f64..4.0, k),
            prop::collection::vec(0.0f64..4.0, k),
            0.01f64..5.0,
            prop::collection::vec(-10.0f64..10.0, k),
            prop::collection::vec(prop::collection::vec(-12.0f64..12.0, k), 1000),
        )
            .prop_map(|(kinds, w, c, lo, hi, scale, v, cands)| (build(&kinds, &w, &c, &lo, &hi), scale, v, {
                let mut cands = cands;
                cands.push(c.clone());
                cands
            }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_beats_every_candidate((r, scale, v, cands) in instance()) {
        let p = r.prox(scale, &v).unwrap();
        let best = objective(&r, scale, &p, &v);
        prop_assert!(best.is_finite());
        for cand in cands.iter().chain(std::iter::once(&v)) {
            prop_assert!(best <= objective(&r, scale, cand, &v) + 1e-9);
        }
    }

    #[test]
    fn prox_is_nonexpansive((r, scale, u, cands) in instance()) {
        let w = &cands[0];
        let pu = r.prox(scale, &u).unwrap();
        let pw = r.prox(scale, w).unwrap();
        let d_in: f64 = u.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let d_out: f64 = pu.iter().zip(&pw).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d_out <= d_in + 1e-12);
    }

    #[test]
    fn box_violation_is_infinite(x in -3.0f64..3.0) {
        let r = Regularizer::bounds(vec![-1.0], vec![1.0]).unwrap();
        prop_assert_eq!(r.eval(&[x]).is_infinite(), !(-1.0..=1.0).contains(&x));
    }
}

#[test]
fn relative_metric_with_mass_floor_matches_grid() {
    let r = Regularizer::sum(vec![
        Regularizer::relative_l1(vec![12.0]).unwrap(),
        Regularizer::bounds(vec![9.0], vec![f64::INFINITY]).unwrap(),
    ]);
    let (scale, v) = (12.0, 8.0);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=200_000 {
        let t = 9.0 + i as f64 * 1e-4;
        let f = objective(&r, scale, &[t], &[v]);
        if f < best.0 {
            best = (f, t);
        }
    }
    let p = r.prox(scale, &[v]).unwrap();
    assert!((p[0] - best.1).abs() <= 1e-4, "{} vs grid {}", p[0], best.1);
    assert_eq!(p[0], 9.0);
}

#[test]
fn spacecraft_style_metric_at_reported_point() {
    let theta0 = vec![12.0, 200.0, 50.0, 0.5];
    let r = Regularizer::sum(vec![
        Regularizer::relative_l1(theta0.clone()).unwrap(),
        Regularizer::bounds(vec![9.0, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], vec![f64::INFINITY; 4])
            .unwrap(),
    ]);
    assert_eq!(r.eval(&theta0), 0.0);
    let v = r.eval(&[9.03, 271.35, 67.16, 0.5]);
    assert!((v - 0.948).abs() <= 0.005, "{v}");
}
