use agnr::scattering::criterion::*;
use agnr::scattering::solver::CMat;
use agnr::spectrum::{self, RibbonGeometry};
use agnr::C64;

#[test]
fn free_criterion_is_one_minus_d_squared() {
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    let nt = spectrum::near_threshold(&g, 2, 0.01).unwrap();
    let (smin, det) = criterion_of_block(&CMat::identity(2, 2), nt.d);
    let expected = 1.0 - nt.d * nt.d;
    assert!((det - expected).norm() < 1e-14);
    assert!(det.norm() > 0.5);
    assert!(smin > 0.0);
}

#[test]
fn constructed_degeneracy() {
    for d in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)] {
        // S_†† = −dΥ cancels the added term exactly.
        let mut b = CMat::zeros(2, 2);
        b[(0, 1)] = -d;
        b[(1, 0)] = -d;
        assert!(criterion_of_block(&b, d).0 < 1e-15);
    }
}

#[test]
fn golden_section_finds_parabola_minimum() {
    let (x, f) = golden_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 60);
    assert!((x - 0.3).abs() < 1e-8 && f < 1e-15);
}
