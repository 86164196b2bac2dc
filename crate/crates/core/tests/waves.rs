use agnr::quadrature::{GaussRule, RectRule};
use agnr::spectrum::{self, RibbonGeometry};
use agnr::waves::*;
use agnr::{Error, C64};

const I: C64 = C64::new(0.0, 1.0);
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ribbon() -> RibbonGeometry {
    RibbonGeometry::new(1.33, 6.0).unwrap()
}

fn max_residual(w: &SpinorField, rng: &mut ChaCha8Rng, n: usize) -> f64 {
    let l = w.geom.width;
    (0..n)
        .map(|_| {
            let (x, y) = (rng.gen_range(-3.0..3.0), rng.gen_range(0.0..l));
            norm_max(&w.residual(x, y))
        })
        .fold(0.0, f64::max)
}

fn all_families(g: &RibbonGeometry, n: usize, eps: f64) -> Vec<SpinorField> {
    let mut out = Vec::new();
    let near = Regime::Near { n, eps };
    for j in 1..n {
        for tau in Tau::both() {
            for f in [Family::Oscillatory, Family::OscillatoryNormalized] {
                out.push(make_wave(WaveLabel::new(f, j, Some(tau)), g, near).unwrap());
            }
        }
    }
    for f in [Family::Threshold0, Family::Threshold1] {
        out.push(make_wave(WaveLabel::new(f, n, None), g, Regime::Near { n, eps: 0.0 }).unwrap());
    }
    for tau in Tau::both() {
        for f in Family::ALL[4..].iter() {
            out.push(make_wave(WaveLabel::new(*f, n, Some(tau)), g, near).unwrap());
        }
    }
    out
}

#[test]
fn threshold_wave_at_origin() {
    let g = ribbon();
    let w = make_wave(
        WaveLabel::new(Family::Threshold0, 2, None),
        &g,
        Regime::Near { n: 2, eps: 0.0 },
    )
    .unwrap();
    let v = w.eval(0.0, 0.0);
    let s = -1.0; // κ_2 < 0
    let want = [C64::new(1.0, 0.0), -I * s, -I, C64::new(s, 0.0)];
    for k in 0..4 {
        assert!((v[k] - want[k]).norm() < 1e-15);
    }
}

#[test]
fn free_families_solve_the_system() {
    let g = ribbon();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<f64> = (0..20).map(|i| -3.0 + 0.3 * i as f64).collect();
    for w in all_families(&g, 2, 0.01) {
        assert!(max_residual(&w, &mut rng, 100) < 1e-10, "{:?}", w.label);
        assert!(w.bc_residual(&xs) < 1e-12, "{:?}", w.label);
    }
}

#[test]
fn regime_mismatch_detected() {
    let g = ribbon();
    let r = make_wave(WaveLabel::new(Family::Threshold0, 2, None), &g, Regime::Omega(1.5));
    assert!(matches!(r, Err(Error::RegimeMismatch(_))));
    let r = make_wave(
        WaveLabel::new(Family::NearExpRaw, 2, Some(Tau::Plus)),
        &g,
        Regime::Omega(1.5),
    );
    assert!(matches!(r, Err(Error::RegimeMismatch(_))));
    let w2 = spectrum::threshold(&g, 2).unwrap().omega;
    assert!(make_wave(WaveLabel::new(Family::Threshold1, 2, None), &g, Regime::Omega(w2)).is_ok());
}

#[test]
fn oscillatory_exponent() {
    let g = ribbon();
    let w = make_wave(
        WaveLabel::new(Family::Oscillatory, 1, Some(Tau::Plus)),
        &g,
        Regime::Omega(1.57261),
    )
    .unwrap();
    let t = w.terms().unwrap()[0];
    assert!((t.lambda.re - 1.365830519884524).abs() < 1e-12);
    assert_eq!(t.lambda.im, 0.0);
}

#[test]
fn corrupted_field_violates_bc() {
    let g = ribbon();
    let w = make_wave(
        WaveLabel::new(Family::Oscillatory, 1, Some(Tau::Plus)),
        &g,
        Regime::Omega(1.57261),
    )
    .unwrap();
    let bad = SpinorField::from_fn(
        move |x, y| {
            let s = w.eval(x, y);
            [s[0], s[1], -s[2], s[3]]
        },
        1.57261,
        g,
    );
    assert!(bad.bc_residual(&[0.0, 0.5, 1.0]) >= 1.0);
}

#[test]
fn finite_differences_match_analytic() {
    let g = ribbon();
    let w = make_wave(
        WaveLabel::new(Family::Oscillatory, 1, Some(Tau::Plus)),
        &g,
        Regime::Omega(1.57261),
    )
    .unwrap();
    let c = w.as_composite();
    for &(x, y) in &[(0.3, 0.2), (-1.1, 1.0), (2.0, 0.7)] {
        let a = w.apply_dirac(x, y);
        let b = c.apply_dirac(x, y);
        assert!(norm_max(&sub(a, b)) < 1e-8);
    }
}

#[test]
fn normalized_pair_approaches_threshold_combination() {
    let g = ribbon();
    let th = Regime::Near { n: 2, eps: 0.0 };
    let w0 = make_wave(WaveLabel::new(Family::Threshold0, 2, None), &g, th).unwrap();
    let w1 = make_wave(WaveLabel::new(Family::Threshold1, 2, None), &g, th).unwrap();
    let gap = |eps: f64, tau: Tau| {
        let nt = spectrum::near_threshold(&g, 2, eps).unwrap();
        let w = make_wave(
            WaveLabel::new(Family::NearExpNormalized, 2, Some(tau)),
            &g,
            Regime::Near { n: 2, eps },
        )
        .unwrap();
        let c = C64::new(1.0 / nt.cal_n, 0.0);
        let r = SpinorField::combine(&[(c, &w0), (c * I * tau.sign(), &w1)]);
        let mut worst: f64 = 0.0;
        for i in 0..21 {
            let x = -1.0 + 0.1 * i as f64;
            for y in [0.0, 0.4, 1.0] {
                worst = worst.max(norm_max(&sub(w.eval(x, y), r.eval(x, y))));
            }
        }
        worst
    };
    for tau in Tau::both() {
        let (a, b) = (gap(1e-2, tau), gap(1e-3, tau));
        assert!(a < 5e-2, "{a}");
        assert!(b < 0.15 * a, "{a} {b}");
    }
}

#[test]
fn analytic_combinations_converge_linearly() {
    let g = ribbon();
    let th = Regime::Near { n: 2, eps: 0.0 };
    let w0 = make_wave(WaveLabel::new(Family::Threshold0, 2, None), &g, th).unwrap();
    let w1 = make_wave(WaveLabel::new(Family::Threshold1, 2, None), &g, th).unwrap();
    let errs: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let r = Regime::Near { n: 2, eps };
            let p = make_wave(WaveLabel::new(Family::NearExpAnalyticPlus, 2, None), &g, r).unwrap();
            let m = make_wave(WaveLabel::new(Family::NearExpAnalyticMinus, 2, None), &g, r).unwrap();
            let mut e: (f64, f64) = (0.0, 0.0);
            for i in 0..21 {
                let x = -1.0 + 0.1 * i as f64;
                for k in 0..5 {
                    let y = 1.33 * k as f64 / 4.0;
                    e.0 = e.0.max(norm_max(&sub(p.eval(x, y), w0.eval(x, y))));
                    e.1 = e.1.max(norm_max(&sub(m.eval(x, y), scale(I, w1.eval(x, y)))));
                }
            }
            e
        })
        .collect();
    for k in 0..2 {
        let pick = |e: &(f64, f64)| if k == 0 { e.0 } else { e.1 };
        let slope = (pick(&errs[0]).ln() - pick(&errs[2]).ln()) / (1e-2f64.ln() - 1e-4f64.ln());
        assert!(slope >= 0.95, "slope {slope}");
    }
}

#[test]
fn t1_and_t3_act_on_normalized_waves() {
    let g = ribbon();
    let basis = normalized_basis(&g, 2, 0.01).unwrap();
    for (j, tau, w) in &basis {
        let other = &basis.iter().find(|(k, t, _)| k == j && *t == tau.flip()).unwrap().2;
        let kappa = w.terms().unwrap()[0].kappa;
        let t1 = w.t1();
        let t3 = w.t3();
        let e3 = C64::from_polar(1.0, kappa * g.width);
        for &(x, y) in &[(0.0, 0.0), (0.7, 0.3), (-1.4, 1.2), (2.5, 0.9)] {
            let a = other.eval(x, y);
            assert!(norm_max(&sub(t1.eval(x, y), scale(I, a))) < 1e-12);
            assert!(norm_max(&sub(t3.eval(x, y), scale(e3, a))) < 1e-12);
        }
    }
}

#[test]
fn negative_energy_map() {
    let g = ribbon();
    let w = make_wave(
        WaveLabel::new(Family::Oscillatory, 1, Some(Tau::Minus)),
        &g,
        Regime::Omega(2.0),
    )
    .unwrap();
    let n = w.negate_energy();
    assert_eq!(n.omega, -2.0);
    assert!(norm_max(&n.residual(0.3, 0.4)) < 1e-12);
    assert!(n.bc_residual(&[0.0, 1.0]) < 1e-12);
}

#[test]
fn norm_identity_zero_and_single_wave() {
    let g = ribbon();
    let z = SpinorField::zero(1.0, g);
    let r = norm_identity_gap(&z, -1.0, 1.0, 32, 32);
    assert_eq!((r.lhs, r.rhs, r.gap), (0.0, 0.0, 0.0));
    // One x-period of a propagating wave: both sides equal ω²·∫|w|².
    let w = make_wave(
        WaveLabel::new(Family::Oscillatory, 1, Some(Tau::Plus)),
        &g,
        Regime::Omega(1.57261),
    )
    .unwrap();
    let lam = w.terms().unwrap()[0].lambda.re;
    let period = 2.0 * std::f64::consts::PI / lam;
    let r = norm_identity_gap(&w, 0.0, period, 64, 64);
    let l2 = RectRule::new(GaussRule::new(64, 0.0, period), GaussRule::new(64, 0.0, g.width))
        .integrate(|x, y| norm_sqr(&w.eval(x, y)));
    let w2 = 1.57261f64.powi(2);
    assert!((r.lhs - w2 * l2).abs() < 1e-10 * r.lhs);
    assert!((r.rhs - w2 * l2).abs() < 1e-10 * r.lhs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn residuals_over_random_regimes(l in 0.4f64..4.0, n in 1usize..4, frac in 0.01f64..1.0, seed in 0u64..1000) {
        let two_l = 2.0 * l;
        prop_assume!((two_l - two_l.round()).abs() > 1e-3);
        let g = RibbonGeometry::new(l, 2.0).unwrap();
        let eps = frac * spectrum::eps0(&g, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in all_families(&g, n, eps) {
            let scale = 1.0 + norm_max(&w.eval(3.0, 0.0)) + norm_max(&w.eval(-3.0, 0.0));
            prop_assert!(max_residual(&w, &mut rng, 40) < 1e-10 * scale);
            prop_assert!(w.bc_residual(&[-2.0, 0.0, 1.5]) < 1e-12 * scale);
        }
    }
}
