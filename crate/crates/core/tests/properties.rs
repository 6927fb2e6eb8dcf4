use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ramanscope_core::cwt::{cwt, cwt_direct, cwt_fft, scales_grid};
use ramanscope_core::dcnn::{Dcnn, DcnnConfig, Optimizer};
use ramanscope_core::eval::{confusion, metrics};
use ramanscope_core::noise::awgn;
use ramanscope_core::spectrum::{resample, uniform_grid};
use ramanscope_core::{ScalogramImage, Spectrum};

fn spectrum(ys: Vec<f64>) -> Spectrum {
    Spectrum::new(uniform_grid(200.0, 1200.0, ys.len()), ys, None, "p").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalized_lies_in_unit_interval(ys in prop::collection::vec(-1e3f64..1e3, 16..200)) {
        let s = spectrum(ys);
        let n = s.normalized();
        prop_assert!(n.intensities().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(n.peak_index(), s.peak_index());
        prop_assert_eq!(n.wavenumbers(), s.wavenumbers());
    }

    #[test]
    fn resample_keeps_span_and_length(ys in prop::collection::vec(0f64..10.0, 16..120), n in 16usize..300) {
        let s = spectrum(ys);
        let r = resample(&s, n).unwrap();
        prop_assert_eq!(r.len(), n);
        prop_assert!((r.span() - s.span()).abs() < 1e-9);
        let (lo, hi) = s.min_max();
        prop_assert!(r.intensities().iter().all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9));
    }

    #[test]
    fn cwt_is_linear(
        x in prop::collection::vec(-1f64..1.0, 64),
        y in prop::collection::vec(-1f64..1.0, 64),
        a in -3f64..3.0,
    ) {
        let scales = scales_grid(6, 1.0, 16.0).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let (sx, sy, sm) = (cwt(&x, &scales, 1.0).unwrap(), cwt(&y, &scales, 1.0).unwrap(), cwt(&mix, &scales, 1.0).unwrap());
        for ((cx, cy), cm) in sx.coefficients().iter().zip(sy.coefficients()).zip(sm.coefficients()) {
            prop_assert!((cx * a + cy - cm).norm() < 1e-9);
        }
    }

    #[test]
    fn fft_and_direct_transforms_agree(x in prop::collection::vec(-1f64..1.0, 32..96)) {
        let scales = scales_grid(5, 1.0, (x.len() / 4) as f64).unwrap();
        let d = cwt_direct(&x, &scales, 1.0).unwrap();
        let f = cwt_fft(&x, &scales, 1.0).unwrap();
        let worst = d.coefficients().iter().zip(f.coefficients()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-8, "max difference {worst}");
    }

    #[test]
    fn awgn_is_reproducible_and_keeps_the_axis(seed in any::<u64>(), snr in -5f64..60.0) {
        let s = spectrum((0..128).map(|i| (i as f64 * 0.2).sin() + 1.5).collect());
        let a = awgn(&s, snr, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = awgn(&s, snr, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.noisy.wavenumbers(), s.wavenumbers());
        prop_assert!(a.measured_snr_db.unwrap().is_finite());
    }

    #[test]
    fn metrics_are_equivariant_under_relabeling(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..80),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let (actual, predicted): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let base = metrics(&confusion(&actual, &predicted, 4).unwrap());
        let ra: Vec<usize> = actual.iter().map(|&c| perm[c]).collect();
        let rp: Vec<usize> = predicted.iter().map(|&c| perm[c]).collect();
        let cm = confusion(&ra, &rp, 4).unwrap();
        prop_assert_eq!(&cm, &base.confusion.permuted(&perm));
        let moved = metrics(&cm);
        prop_assert_eq!(moved.accuracy, base.accuracy);
        for (c, &to) in perm.iter().enumerate() {
            prop_assert_eq!(moved.per_class[to], base.per_class[c]);
        }
        prop_assert!((moved.macro_f1 - base.macro_f1).abs() < 1e-12);
    }
}

#[test]
fn full_batch_loss_does_not_increase() {
    let cfg = DcnnConfig { input_side: 16, filters: 4, fc_widths: [16, 8], ..Default::default() };
    let mut net = Dcnn::<f64>::new(cfg.clone(), 3, [0.5; 3]).unwrap();
    let images: Vec<ScalogramImage> = (0..12u8)
        .map(|i| {
            let c = i % 3;
            ScalogramImage::new(16, (0..16 * 16 * 3).map(|p| (p as u8).wrapping_mul(7 + c) ^ (40 * c + i)).collect())
        })
        .collect();
    let refs: Vec<&ScalogramImage> = images.iter().collect();
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let mut opt = Optimizer::new(cfg.optimizer);
    let mut losses = Vec::new();
    for _ in 0..10 {
        let x = net.input_tensor(&refs).unwrap();
        losses.push(net.train_step(&mut opt, x, &labels, 1.0).unwrap().loss);
    }
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "loss rose: {losses:?}");
    }
    assert!(losses[9] < losses[0]);
}
