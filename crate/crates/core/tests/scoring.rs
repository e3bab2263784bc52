mod common;

use common::OracleLabel;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rltrack::scoring::{
    classify_streamlines, coverage, score, write_scores_csv, Classification, GroundTruth, DEFAULT_MAX_LENGTH,
    DEFAULT_MIN_LENGTH, SCORES_CSV_HEADER,
};
use rltrack::volume::{generate_phantom, Phantom, PhantomSpec};
use rltrack::Vec3;

fn desk() -> (Phantom, GroundTruth) {
    let ph = generate_phantom(&PhantomSpec::desk()).unwrap();
    let gt = GroundTruth::from_phantom(&ph, DEFAULT_MIN_LENGTH, DEFAULT_MAX_LENGTH).unwrap();
    (ph, gt)
}

fn as_oracle(c: Classification) -> OracleLabel {
    match c {
        Classification::Discarded => OracleLabel::Dropped,
        Classification::Valid(b) => OracleLabel::Vc(b),
        Classification::Invalid((a, b)) => OracleLabel::Ic(a, b),
        Classification::NoConnection => OracleLabel::Nc,
    }
}

#[test]
fn matches_set_oracle_on_random_toys() {
    let (ph, gt) = desk();
    let mut totals = [0usize; 3];
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::toy_tractogram(&ph, &mut rng, 60);
        let want = common::score(&ph, &t, DEFAULT_MIN_LENGTH, DEFAULT_MAX_LENGTH);
        let got: Vec<_> = classify_streamlines(&t, &gt).into_iter().map(as_oracle).collect();
        assert_eq!(got, want.labels, "seed {seed}");
        let r = score(&t, &gt).unwrap();
        assert_eq!((r.n_kept, r.n_vc, r.n_ic, r.n_nc, r.vb, r.ib), (want.kept, want.vc, want.ic, want.nc, want.vb, want.ib));
        for (b, (n, ol, or, f1)) in r.bundles.iter().zip(&want.coverage) {
            assert_eq!((b.streamlines, b.ol, b.or_, b.f1), (*n, *ol, *or, *f1), "seed {seed} bundle {}", b.name);
        }
        totals[0] += want.vc;
        totals[1] += want.ic;
        totals[2] += want.nc;
    }
    assert!(totals.iter().all(|t| *t > 20), "toy mix too narrow: {totals:?}");
}

#[test]
fn five_streamline_hand_count() {
    let (_, gt) = desk();
    let line = |a: [f64; 3], b: [f64; 3]| -> Vec<Vec3> {
        (0..=40).map(|t| Vec3::from(a).lerp(&Vec3::from(b), t as f64 / 40.0)).collect()
    };
    let t = vec![
        line([3.0, 21.0, 3.0], [66.0, 21.0, 3.0]),
        line([21.0, 66.0, 3.0], [21.0, 3.0, 3.0]),
        line([3.0, 21.0, 3.0], [21.0, 66.0, 3.0]),
        line([3.0, 21.0, 3.0], [40.0, 40.0, 3.0]),
        line([3.0, 21.0, 3.0], [3.0, 30.0, 3.0]),
    ];
    let r = score(&t, &gt).unwrap();
    assert_eq!((r.n_input, r.n_kept, r.n_vc, r.n_ic, r.n_nc), (5, 4, 2, 1, 1));
    assert_eq!((r.vb, r.ib), (2, 1));
    assert_eq!((r.vc_rate, r.ic_rate, r.nc_rate), (0.5, 0.25, 0.25));
    assert_eq!(r.bundles[2].streamlines, 0);
    assert_eq!(r.bundles[2].ol, 0.0);
}

#[test]
fn reentry_into_the_same_roi_is_no_connection() {
    let (_, gt) = desk();
    let s = vec![Vec3::new(3.0, 21.0, 3.0), Vec3::new(30.0, 21.0, 3.0), Vec3::new(3.0, 24.0, 3.0)];
    assert_eq!(gt.classify(&s), Classification::NoConnection);
}

#[test]
fn reports_serialize() {
    let (ph, gt) = desk();
    let r = score(&ph.centerline_streamlines(1.0), &gt).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert_eq!(serde_json::from_str::<rltrack::scoring::ScoreReport>(&json).unwrap(), r);
    let mut csv = Vec::new();
    write_scores_csv(&mut csv, &r).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], SCORES_CSV_HEADER);
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("global,"));
    let cols = SCORES_CSV_HEADER.split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == cols));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn report_is_order_invariant_and_consistent(seed in any::<u64>()) {
        let (ph, gt) = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = common::toy_tractogram(&ph, &mut rng, 30);
        t.extend(ph.centerline_streamlines(1.5));
        let a = score(&t, &gt).unwrap();
        t.shuffle(&mut rng);
        let b = score(&t, &gt).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.n_vc + a.n_ic + a.n_nc, a.n_kept);
        prop_assert!((a.vc_rate + a.ic_rate + a.nc_rate - 1.0).abs() < 1e-9);
        for x in &a.bundles {
            for f in [x.ol, x.f1, a.vc_rate, a.ic_rate, a.nc_rate] {
                prop_assert!((0.0..=1.0).contains(&f));
            }
            prop_assert!(x.or_ >= 0.0);
            let visited = x.ol + x.or_;
            let p = if visited > 0.0 { x.ol / visited } else { 0.0 };
            let f1 = if p + x.ol > 0.0 { 2.0 * p * x.ol / (p + x.ol) } else { 0.0 };
            prop_assert!((f1 - x.f1).abs() < 1e-12);
        }
    }

    #[test]
    fn adding_a_valid_streamline_never_lowers_overlap(seed in any::<u64>()) {
        let (ph, gt) = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool: Vec<Vec<Vec3>> = common::toy_tractogram(&ph, &mut rng, 80)
            .into_iter()
            .filter(|s| gt.classify(s) == Classification::Valid(0))
            .collect();
        let mask = &gt.bundles()[0].mask;
        let mut prev = 0.0;
        for n in 0..=pool.len() {
            let refs: Vec<&[Vec3]> = pool[..n].iter().map(|s| s.as_slice()).collect();
            let ol = coverage(&refs, mask).unwrap().ol;
            prop_assert!(ol >= prev);
            prev = ol;
        }
    }
}
