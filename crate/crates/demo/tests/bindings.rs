use agnr::scattering::PotentialSpec;
use agnr::spectrum;
use agnr::waves::{make_wave, Family, Regime, Tau, WaveLabel};
use agnr::RibbonGeometry;
use agnr_demo::*;
use serde_json::Value;

#[test]
fn thresholds_match_library() {
    let v: Value = serde_json::from_str(&thresholds(1.33, 4).unwrap()).unwrap();
    let g = RibbonGeometry::new(1.33, 1.0).unwrap();
    for (i, row) in v.as_array().unwrap().iter().enumerate() {
        let t = spectrum::threshold(&g, i + 1).unwrap();
        assert_eq!(row["omega"].as_f64().unwrap(), t.omega);
    }
    assert!(thresholds(1.5, 3).is_err());
}

#[test]
fn dispersion_branches_bottom_out_at_thresholds() {
    let v: Value = serde_json::from_str(&dispersion(1.33, 2.0, 41, 3).unwrap()).unwrap();
    let branches = v["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 3);
    let g = RibbonGeometry::new(1.33, 1.0).unwrap();
    for (k, b) in branches.iter().enumerate() {
        let om: Vec<f64> = b["omega"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert_eq!(om.len(), 41);
        // λ = 0 sits in the middle of the symmetric grid.
        assert!((om[20] - spectrum::threshold(&g, k + 1).unwrap().omega).abs() < 1e-14);
    }
}

#[test]
fn wave_field_samples_the_library_wave() {
    let (nx, ny) = (7, 5);
    let vals = wave_field(1.33, 2, 0.01, "near_exp_normalized", 2, 1, nx, ny, -1.0, 1.0, "density").unwrap();
    assert_eq!(vals.len(), nx * ny);
    let g = RibbonGeometry::new(1.33, 1.0).unwrap();
    let w = make_wave(
        WaveLabel::new(Family::NearExpNormalized, 2, Some(Tau::Plus)),
        &g,
        Regime::Near { n: 2, eps: 0.01 },
    )
    .unwrap();
    let (x, y) = (-1.0 + 2.0 * 3.0 / 6.0, 1.33 * 2.0 / 4.0);
    let want: f64 = w.eval(x, y).iter().map(|c| c.norm_sqr()).sum();
    assert!((vals[2 * nx + 3] - want).abs() < 1e-14 * want.max(1.0));
    assert!(wave_field(1.33, 2, 0.01, "nope", 2, 1, nx, ny, -1.0, 1.0, "density").is_err());
    assert!(wave_field(1.33, 2, 0.01, "near_exp_normalized", 2, 1, nx, ny, -1.0, 1.0, "phase").is_err());
}

#[test]
fn bundled_potential_is_stable_json() {
    let p = PotentialSpec::from_json(BUNDLED_POTENTIAL).unwrap();
    assert_eq!(p.to_json(), BUNDLED_POTENTIAL);
    assert_eq!(p.width, 1.33);
}

#[test]
fn bundled_potential_traps_at_design_energy() {
    let v: Value =
        serde_json::from_str(&criterion_scan(BUNDLED_POTENTIAL, 2, 0.01, 0.01, 1, false, true).unwrap()).unwrap();
    let s = v["sigma_min"][0].as_f64().unwrap();
    assert!(s < 1e-8, "sigma_min = {s}");
    let v: Value =
        serde_json::from_str(&criterion_scan(BUNDLED_POTENTIAL, 2, 0.004, 0.03, 9, true, true).unwrap()).unwrap();
    assert_eq!(v["dips"], 1);
    assert!(criterion_scan(BUNDLED_POTENTIAL, 2, 0.01, 5.0, 3, false, true).is_err());
}
