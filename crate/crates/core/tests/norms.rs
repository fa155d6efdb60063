use gravfield::metrics::{
    centroid_error_norms, choose_m, error_norms, fit_convergence_rate, fit_norm_rates, AnalyticReference,
    DiscreteFieldView, NormReport,
};
use gravfield::{build_synthetic_scene, PhysicalConstants, SyntheticScene};
use proptest::prelude::*;

fn reference() -> AnalyticReference {
    AnalyticReference::new(vec![SyntheticScene::default().anomaly()], PhysicalConstants::default())
}

fn zero_field_norms(cells: usize, m: usize) -> NormReport {
    let scene = build_synthetic_scene(cells).unwrap();
    let zero = DiscreteFieldView::PiecewiseConstant(vec![0.0; scene.grid().cell_count()]);
    error_norms(&zero, scene.grid(), &reference(), m).unwrap()
}

#[test]
fn analytic_field_norms_by_subdivision() {
    // (cells, m, |gz|_1, |gz|_2, max |gz| over the quadrature points)
    let table = [
        (12, 3, 2.686359587701e2, 3.461398542186e-2, 3.381867068310e-5),
        (12, 4, 2.686359587702e2, 3.461399254307e-2, 3.403021478492e-5),
        (12, 6, 2.686359587701e2, 3.461399525775e-2, 3.424175549691e-5),
        (24, 2, 2.686359587702e2, 3.461399254307e-2, 3.403021478492e-5),
        (48, 1, 2.686359587702e2, 3.461399254307e-2, 3.403021478492e-5),
    ];
    for (cells, m, e1, e2, einf) in table {
        let r = zero_field_norms(cells, m);
        assert_eq!(r.m, Some(m));
        assert!(((r.e1 - e1) / e1).abs() < 1e-9, "{cells}/{m}: {}", r.e1);
        assert!(((r.e2 - e2) / e2).abs() < 1e-9, "{cells}/{m}: {}", r.e2);
        assert!(((r.einf - einf) / einf).abs() < 1e-6, "{cells}/{m}: {}", r.einf);
    }
}

#[test]
fn equal_subbox_sizes_give_equal_norms() {
    // 12 cells with m = 4 and 24 cells with m = 2 place the same points.
    let a = zero_field_norms(12, 4);
    let b = zero_field_norms(24, 2);
    assert!(((a.e2 - b.e2) / a.e2).abs() < 1e-12);
    assert!(((a.einf - b.einf) / a.einf).abs() < 1e-12);
    assert_eq!(choose_m(24), 4);
}

#[test]
fn centroid_rule_of_the_zero_field() {
    let scene = build_synthetic_scene(12).unwrap();
    let zero = DiscreteFieldView::PiecewiseConstant(vec![0.0; scene.grid().cell_count()]);
    let r = centroid_error_norms(&zero, scene.grid(), &reference()).unwrap();
    assert_eq!(r.m, None);
    // One sample per 50 m cell roughly resolves the field's integral.
    assert!((r.e1 / 2.686359587701e2 - 1.0).abs() < 0.05);
    let centroids = scene.grid().cell_centers();
    let max = centroids.iter().map(|&p| reference().gz(p).abs()).fold(0.0, f64::max);
    assert_eq!(r.einf, max);
}

#[test]
fn rate_fit_of_noisy_sequences() {
    let h = [50.0, 25.0, 12.5, 6.25];
    let e: Vec<f64> = h.iter().zip([1.0, 1.1, 0.9, 1.05]).map(|(h, n)| n * 3.0 * h * h).collect();
    let fit = fit_convergence_rate(&e, &h).unwrap();
    assert!((fit.slope - 2.0).abs() < 0.1);
    assert!(fit.residual > 0.0);
    let reports: Vec<NormReport> = h
        .iter()
        .map(|&h| NormReport { e1: h, e2: h * h, einf: h.sqrt(), m: None, cells_per_axis: 1 })
        .collect();
    let rates = fit_norm_rates(&reports, &h).unwrap();
    assert!((rates.e1.slope - 1.0).abs() < 1e-12);
    assert!((rates.e2.slope - 2.0).abs() < 1e-12);
    assert!((rates.einf.slope - 0.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_fit_recovers_power_laws(rate in -1.0f64..4.0, c in 1e-8f64..1e3, h0 in 0.5f64..80.0, n in 3usize..7) {
        let h: Vec<f64> = (0..n).map(|i| h0 / 2f64.powi(i as i32)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(rate)).collect();
        let fit = fit_convergence_rate(&e, &h).unwrap();
        prop_assert!((fit.slope - rate).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
        // Scaling every error leaves the slope alone.
        let scaled: Vec<f64> = e.iter().map(|v| 7.5 * v).collect();
        prop_assert!((fit_convergence_rate(&scaled, &h).unwrap().slope - rate).abs() < 1e-9);
    }
}
