use agnr::quadrature::*;

#[test]
fn integrates_polynomials_exactly() {
    let r = GaussRule::new(4, 0.0, 2.0);
    let v = r.integrate(|x| x.powi(7));
    assert!((v - 2f64.powi(8) / 8.0).abs() < 1e-12);
}

#[test]
fn composite_matches_single_on_smooth() {
    let a = GaussRule::composite(8, 8, -1.0, 3.0).integrate(|x| (-x * x).exp());
    let b = GaussRule::new(64, -1.0, 3.0).integrate(|x| (-x * x).exp());
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn rectangle_area() {
    let r = RectRule::new(GaussRule::new(3, 0.0, 2.0), GaussRule::new(2, 1.0, 4.0));
    assert!((r.integrate(|_, _| 1.0) - 6.0).abs() < 1e-13);
    assert_eq!(r.len(), 6);
}
