use agnr::spectrum::RibbonGeometry;
use agnr::symplectic::*;
use agnr::waves::{make_wave, normalized_basis, Family, Regime, SpinorField, Tau, WaveLabel};
use agnr::C64;

const I: C64 = C64::new(0.0, 1.0);
use proptest::prelude::*;

fn ribbon() -> RibbonGeometry {
    RibbonGeometry::new(1.33, 3.0).unwrap()
}

#[test]
fn raw_propagating_value() {
    let g = ribbon();
    let w = make_wave(
        WaveLabel::new(Family::Oscillatory, 1, Some(Tau::Plus)),
        &g,
        Regime::Omega(1.57261),
    )
    .unwrap();
    let v = q(&w, &w, 0.0);
    let lam = (1.57261f64.powi(2) - (std::f64::consts::PI * 0.33 / 1.33).powi(2)).sqrt();
    assert!((v - I * (4.0 * 1.33 * lam / 1.57261)).norm() < 1e-12);
    assert!((v.im - 4.6204).abs() < 1e-3);
}

#[test]
fn threshold_pair_value() {
    let g = ribbon();
    let th = Regime::Near { n: 2, eps: 0.0 };
    let w0 = make_wave(WaveLabel::new(Family::Threshold0, 2, None), &g, th).unwrap();
    let w1 = make_wave(WaveLabel::new(Family::Threshold1, 2, None), &g, th).unwrap();
    let v = q(&w0, &w1, 1.3);
    assert!((v.re + 1.68077).abs() < 1e-4 && v.im.abs() < 1e-13);
    assert!(energy_flux(&w0, 0.0).abs() < 1e-13);
}

#[test]
fn full_tables_reference_ribbon() {
    let g = ribbon();
    for n in [1, 2, 3] {
        let rep = biorthogonality_table(&g, Regime::Near { n, eps: 0.01 }, 128).unwrap();
        let worst = rep
            .entries
            .iter()
            .max_by(|a, b| a.deviation.partial_cmp(&b.deviation).unwrap())
            .unwrap();
        assert!(rep.max_deviation < 1e-9, "N={n}: {worst:?}");
    }
    let rep = biorthogonality_table(&g, Regime::Omega(3.5), 128).unwrap();
    assert!(rep.max_deviation < 1e-10);
    assert_eq!(rep.entries.len(), 3 * 2 + 36);
}

#[test]
fn exponential_pair_section_independence() {
    let g = ribbon();
    let r = Regime::Near { n: 2, eps: 0.01 };
    let a = make_wave(WaveLabel::new(Family::NearExpNormalized, 2, Some(Tau::Plus)), &g, r).unwrap();
    let b = make_wave(WaveLabel::new(Family::NearExpNormalized, 2, Some(Tau::Minus)), &g, r).unwrap();
    assert!(q_section_independence(&a, &b, &[-2.0, 0.0, 3.7], 128) < 1e-9);
    assert!(q_section_independence(&a, &a, &[-2.0, 0.0, 3.7], 128) < 1e-9);
}

#[test]
fn flux_signs() {
    let g = ribbon();
    let r = Regime::Near { n: 2, eps: 0.01 };
    let om = 1.582606825 - 0.01;
    for tau in Tau::both() {
        let w = make_wave(WaveLabel::new(Family::OscillatoryNormalized, 1, Some(tau)), &g, r).unwrap();
        assert!((energy_flux(&w, 0.0) - tau.sign() * om * om).abs() < 1e-8);
    }
}

#[test]
fn cutoff_shape() {
    assert_eq!(chi(Tau::Plus, 2.0, 1.9).0, 0.0);
    assert_eq!(chi(Tau::Plus, 2.0, 3.1).0, 1.0);
    assert!((chi(Tau::Plus, 2.0, 2.5).0 - 0.5).abs() < 1e-15);
    assert_eq!(chi(Tau::Minus, 2.0, -3.5).0, 1.0);
    let h = 1e-6;
    for &x in &[2.2, 2.5, 2.9, -2.3] {
        for side in Tau::both() {
            let fd = (chi(side, 2.0, x + h).0 - chi(side, 2.0, x - h).0) / (2.0 * h);
            assert!((fd - chi(side, 2.0, x).1).abs() < 1e-6);
        }
    }
    assert!(QR(
        &SpinorField::zero(1.0, ribbon()),
        &SpinorField::zero(1.0, ribbon()),
        3.5
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn anti_hermitian(j in 0usize..4, k in 0usize..4, a in -3.0f64..3.0) {
        let g = ribbon();
        let b = normalized_basis(&g, 2, 0.02).unwrap();
        let x = &b[j].2;
        let y = &b[k].2;
        prop_assert!((q(x, y, a) + q(y, x, a).conj()).norm() < 1e-12 * (1.0 + q(x, y, a).norm()));
    }

    #[test]
    fn quadrature_converged(j in 0usize..4, k in 0usize..4) {
        let g = ribbon();
        let b = normalized_basis(&g, 2, 0.02).unwrap();
        let v1 = qform(&b[j].2, &b[k].2, 0.4, 64).value;
        let v2 = qform(&b[j].2, &b[k].2, 0.4, 128).value;
        prop_assert!((v1 - v2).norm() < 1e-12);
    }
}
