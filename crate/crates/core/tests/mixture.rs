use proptest::prelude::*;
use revdiff_core::{Component, ForwardProcess, GaussianMixture, LinearSde};

fn two_component(w: f64, m0: f64, m1: f64, s0: f64, s1: f64) -> GaussianMixture {
    GaussianMixture::new(vec![
        Component {
            weight: w,
            mean: vec![m0, -m1],
            std: s0,
        },
        Component {
            weight: 1.0 - w,
            mean: vec![m1, m0],
            std: s1,
        },
    ])
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_is_gradient_of_log_density(
        w in 0.05f64..0.95, m0 in -2.0f64..2.0, m1 in -2.0f64..2.0,
        s0 in 0.1f64..1.5, s1 in 0.1f64..1.5, x0 in -3.0f64..3.0, x1 in -3.0f64..3.0,
    ) {
        let m = two_component(w, m0, m1, s0, s1);
        let x = [x0, x1];
        let s = m.score(&x);
        let h = 1e-5;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (m.log_density(&xp) - m.log_density(&xm)) / (2.0 * h);
            prop_assert!((fd - s[k]).abs() < 1e-5 * (1.0 + s[k].abs()), "axis {}: {} vs {}", k, fd, s[k]);
        }
    }

    #[test]
    fn diffused_moments_follow_scale_and_sigma(t in 0.01f64..3.0, w in 0.05f64..0.95) {
        let m = two_component(w, 0.5, -1.0, 0.3, 0.7);
        for p in [ForwardProcess::edm(), ForwardProcess::ve(), ForwardProcess::vp(19.9, 0.1).unwrap()] {
            let d = m.diffuse(&p, t);
            let (s, sig) = (p.scale(t), p.sigma(t));
            for k in 0..2 {
                prop_assert!((d.mean()[k] - s * m.mean()[k]).abs() < 1e-12);
                let want = s * s * (m.variance()[k] + sig * sig);
                prop_assert!((d.variance()[k] - want).abs() < 1e-10 * want);
            }
        }
    }
}

#[test]
fn samples_match_moments() {
    let m = GaussianMixture::default_dataset();
    let pop = m.sample(200_000, 3).unwrap();
    let (mean, var) = (pop.mean()[0], pop.variance()[0]);
    let se = (m.variance()[0] / 200_000.0).sqrt();
    assert!((mean - m.mean()[0]).abs() < 5.0 * se, "{mean} vs {}", m.mean()[0]);
    assert!((var / m.variance()[0] - 1.0).abs() < 0.02);
}

#[test]
fn score_far_in_tail_follows_wider_component() {
    let m = GaussianMixture::default_dataset();
    // at x = 50 the 0.2-wide component dominates the density
    let s = m.score(&[50.0])[0];
    assert!(((s - (-1.0 - 50.0) / 0.04) / s).abs() < 1e-12, "{s}");
}
