use facedepth_core::metrics::{
    aggregate_report, align_prediction, compute_metrics, evaluate, fit_alignment,
    inverse_depth_residual, AlignmentFit, ClipRange,
};
use facedepth_core::{Aggregation, Alignment, DepthMap, Mask, MetricReport};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

/// Literal per-pixel implementation of the seven statistics.
fn brute_force(gt: &[f64], pred: &[f64]) -> [f64; 7] {
    let n = gt.len() as f64;
    let mut out = [0.0; 7];
    for i in 0..gt.len() {
        let (d, p) = (gt[i], pred[i]);
        out[0] += (p - d).abs() / d;
        out[1] += (p - d).powi(2) / d;
        out[2] += (p - d).powi(2);
        out[3] += (p.ln() - d.ln()).powi(2);
        let ratio = f64::max(p / d, d / p);
        for k in 0..3 {
            if ratio < 1.25f64.powi(k as i32 + 1) {
                out[4 + k] += 1.0;
            }
        }
    }
    [
        out[0] / n,
        out[1] / n,
        (out[2] / n).sqrt(),
        (out[3] / n).sqrt(),
        out[4] / n,
        out[5] / n,
        out[6] / n,
    ]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}

fn map(w: u32, h: u32, v: Vec<f64>) -> DepthMap {
    DepthMap::from_vec(w, h, v).unwrap()
}

fn random_pair(rng: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let gt: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..5.0)).collect();
    let pred = gt.iter().map(|g| g * rng.random_range(0.4..2.5)).collect();
    (gt, pred)
}

#[test]
fn matches_brute_force_on_random_maps() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (gt, pred) = random_pair(&mut rng, 64);
        let r = compute_metrics(
            &map(8, 8, gt.clone()),
            &map(8, 8, pred.clone()),
            &Mask::filled(8, 8, true),
        )
        .unwrap();
        let oracle = brute_force(&gt, &pred);
        for (a, b) in r.values().iter().zip(oracle) {
            assert!(close(*a, b, 1e-12), "{a} vs {b}");
        }
        assert_eq!(r.valid_pixel_count, 64);
    }
}

#[test]
fn pooled_aggregate_matches_concatenation() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (mut all_gt, mut all_pred, mut reports) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..5 {
        let (w, h) = (rng.random_range(2..7), rng.random_range(2..7));
        let (gt, pred) = random_pair(&mut rng, (w * h) as usize);
        reports.push(
            compute_metrics(
                &map(w, h, gt.clone()),
                &map(w, h, pred.clone()),
                &Mask::filled(w, h, true),
            )
            .unwrap(),
        );
        all_gt.extend(gt);
        all_pred.extend(pred);
    }
    let agg = aggregate_report(&reports, Aggregation::PixelWeighted).unwrap();
    let oracle = brute_force(&all_gt, &all_pred);
    for (a, b) in agg.values().iter().zip(oracle) {
        assert!(close(*a, b, 1e-12), "{a} vs {b}");
    }
    assert_eq!(agg.valid_pixel_count, all_gt.len() as u64);
}

#[test]
fn affine_fit_matches_normal_equations() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let (gt, _) = random_pair(&mut rng, 200);
    let pred: Vec<f64> = gt
        .iter()
        .map(|g| (1.0 / g) * rng.random_range(0.8..1.2) + 0.1)
        .collect();
    // Solve [Σp² Σp; Σp n] [a b]ᵀ = [Σpq; Σq] by Cramer's rule.
    let (mut spp, mut sp, mut spq, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for (g, p) in gt.iter().zip(&pred) {
        let q = 1.0 / g;
        spp += p * p;
        sp += p;
        spq += p * q;
        sq += q;
    }
    let n = gt.len() as f64;
    let det = spp * n - sp * sp;
    let (a0, b0) = ((spq * n - sp * sq) / det, (spp * sq - sp * spq) / det);
    let (g, p) = (map(200, 1, gt), map(200, 1, pred));
    let AlignmentFit::AffineInverse { a, b } = fit_alignment(
        &g,
        &p,
        &Mask::filled(200, 1, true),
        Alignment::AffineInverseDepth,
    )
    .unwrap() else {
        panic!()
    };
    assert!((a - a0).abs() < 1e-9 * a0.abs() && (b - b0).abs() < 1e-9);
}

#[test]
fn exact_affine_corruption_is_recovered() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let gt: Vec<f64> = (0..4096).map(|_| rng.random_range(0.7..1.2)).collect();
    let pred: Vec<f64> = gt.iter().map(|g| (1.0 / g - 0.3) / 2.0).collect();
    let (g, p) = (map(64, 64, gt), map(64, 64, pred));
    let mask = Mask::filled(64, 64, true);
    let AlignmentFit::AffineInverse { a, b } =
        fit_alignment(&g, &p, &mask, Alignment::AffineInverseDepth).unwrap()
    else {
        panic!()
    };
    assert!((a - 2.0).abs() < 1e-9 && (b - 0.3).abs() < 1e-9);
    let r = evaluate(&g, &p, Alignment::AffineInverseDepth, ClipRange::default()).unwrap();
    assert!(r.abs_rel < 1e-9);
    assert_eq!(r.alignment, Alignment::AffineInverseDepth);
}

#[test]
fn median_scale_of_doubled_prediction() {
    let gt = map(3, 2, vec![0.8, 0.9, 1.0, 1.2, 2.0, 3.5]);
    let pred = map(3, 2, gt.values().iter().map(|g| 2.0 * g).collect());
    let mask = Mask::filled(3, 2, true);
    assert_eq!(
        fit_alignment(&gt, &pred, &mask, Alignment::MedianScale).unwrap(),
        AlignmentFit::Scale { s: 0.5 }
    );
    let r = evaluate(&gt, &pred, Alignment::MedianScale, ClipRange::default()).unwrap();
    assert_eq!(r.abs_rel, 0.0);
}

#[test]
fn none_alignment_is_bitwise_identity() {
    let pred = map(4, 1, vec![0.5, f64::NAN, 0.0, 3.25]);
    let gt = map(4, 1, vec![1.0; 4]);
    let out = align_prediction(&gt, &pred, &Mask::filled(4, 1, true), Alignment::None).unwrap();
    let bits = |m: &DepthMap| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&out), bits(&pred));
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((0.05f64..5.0, 0.2f64..5.0), 1..80)
        .prop_map(|v| v.into_iter().map(|(g, r)| (g, g * r)).unzip())
}

fn report(gt: &[f64], pred: &[f64]) -> MetricReport {
    let n = gt.len() as u32;
    compute_metrics(
        &map(n, 1, gt.to_vec()),
        &map(n, 1, pred.to_vec()),
        &Mask::filled(n, 1, true),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn delta_is_monotone((gt, pred) in pair()) {
        let r = report(&gt, &pred);
        prop_assert!(0.0 <= r.delta1 && r.delta1 <= r.delta2 && r.delta2 <= r.delta3 && r.delta3 <= 1.0);
        prop_assert!(r.abs_rel >= 0.0 && r.sq_rel >= 0.0 && r.rmse >= 0.0 && r.rmse_log >= 0.0);
    }

    #[test]
    fn delta_is_swap_symmetric((gt, pred) in pair()) {
        let (a, b) = (report(&gt, &pred), report(&pred, &gt));
        prop_assert_eq!((a.delta1, a.delta2, a.delta3), (b.delta1, b.delta2, b.delta3));
        prop_assert!(close(a.rmse_log, b.rmse_log, 1e-12));
    }

    #[test]
    fn scale_covariance((gt, pred) in pair(), c in 0.01f64..100.0) {
        let a = report(&gt, &pred);
        let sg: Vec<f64> = gt.iter().map(|v| v * c).collect();
        let sp: Vec<f64> = pred.iter().map(|v| v * c).collect();
        let b = report(&sg, &sp);
        prop_assert!(close(a.abs_rel, b.abs_rel, 1e-9));
        prop_assert!((a.rmse_log - b.rmse_log).abs() < 1e-9);
        prop_assert!(close(a.rmse * c, b.rmse, 1e-9));
        prop_assert!(close(a.sq_rel * c, b.sq_rel, 1e-9));
        prop_assert_eq!((a.delta1, a.delta2, a.delta3), (b.delta1, b.delta2, b.delta3));
    }

    #[test]
    fn affine_alignment_never_increases_residual(
        gt in prop::collection::vec(0.3f64..4.0, 3..60),
        noise in prop::collection::vec(0.5f64..2.0, 60),
    ) {
        let n = gt.len() as u32;
        let pred: Vec<f64> = gt.iter().zip(&noise).map(|(g, e)| e / g).collect();
        let (g, p) = (map(n, 1, gt), map(n, 1, pred));
        let mask = Mask::filled(n, 1, true);
        let before = inverse_depth_residual(&g, &p, &mask, 1.0, 0.0);
        if let Ok(AlignmentFit::AffineInverse { a, b }) =
            fit_alignment(&g, &p, &mask, Alignment::AffineInverseDepth)
        {
            let after = inverse_depth_residual(&g, &p, &mask, a, b);
            prop_assert!(after <= before * (1.0 + 1e-12) + 1e-12);
        }
    }
}
