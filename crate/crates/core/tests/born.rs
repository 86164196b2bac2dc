use agnr::scattering::born::{born_overlap, born_smatrix, overlap};
use agnr::scattering::potential::{GaussianTerm, PotentialSpec};
use agnr::synthesis::paper_example_potential;
use agnr::waves::normalized_basis;
use agnr::{RibbonGeometry, C64};

fn max_abs(m: impl Iterator<Item = C64>) -> f64 {
    m.map(|z| z.norm()).fold(0.0, f64::max)
}

// Composite Simpson over the whole support box, evaluated independently of
// the library's Gauss rules and its overlap loop.
fn simpson_overlap(p: &PotentialSpec, g: &RibbonGeometry, n: usize, eps: f64, nx: usize, ny: usize) -> Vec<Vec<C64>> {
    let waves = normalized_basis(g, n, eps).unwrap();
    let (x0, x1) = (-p.r0, p.r0);
    let hx = (x1 - x0) / nx as f64;
    let hy = g.width / ny as f64;
    let wt = |i: usize, n: usize| {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let k = waves.len();
    let mut m = vec![vec![C64::new(0.0, 0.0); k]; k];
    for i in 0..=nx {
        let x = x0 + hx * i as f64;
        for j in 0..=ny {
            let y = hy * j as f64;
            let pv = p.eval(x, y);
            if pv == 0.0 {
                continue;
            }
            let w = wt(i, nx) * wt(j, ny) * hx * hy / 9.0 * pv;
            let vals: Vec<_> = waves.iter().map(|(_, _, f)| f.eval(x, y)).collect();
            for a in 0..k {
                for b in 0..k {
                    let dot: C64 = (0..4).map(|c| vals[a][c] * vals[b][c].conj()).sum();
                    m[a][b] += dot * w;
                }
            }
        }
    }
    m
}

#[test]
fn zero_potential_gives_zero_matrix() {
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    let s = born_smatrix(&PotentialSpec::zero(&g), &g, 2, 1e-2).unwrap();
    assert_eq!(s.shape(), (4, 4));
    assert_eq!(max_abs(s.iter().copied()), 0.0);
}

#[test]
fn linear_in_the_potential_and_independent_of_delta() {
    let p = paper_example_potential();
    let g = p.geometry().unwrap();
    let s1 = born_smatrix(&p, &g, 2, 1e-2).unwrap();
    let s2 = born_smatrix(&p.scaled(2.0), &g, 2, 1e-2).unwrap();
    let s3 = born_smatrix(&p.with_delta(0.3), &g, 2, 1e-2).unwrap();
    assert!(max_abs((s2 - &s1 * C64::new(2.0, 0.0)).iter().copied()) < 1e-13);
    assert!(max_abs((s3 - &s1).iter().copied()) == 0.0);
}

#[test]
fn hermitian_on_the_reference_potential() {
    let p = paper_example_potential();
    let g = p.geometry().unwrap();
    let s = born_smatrix(&p, &g, 2, 1e-2).unwrap();
    assert!(max_abs((&s - s.adjoint()).iter().copied()) < 1e-9);
    assert!(max_abs(s.iter().copied()) > 1e-3);
}

#[test]
fn matches_independent_simpson_quadrature() {
    let p = paper_example_potential();
    let g = p.geometry().unwrap();
    let m = born_overlap(&p, &g, 2, 1e-2).unwrap();
    let oracle = simpson_overlap(&p, &g, 2, 1e-2, 2400, 400);
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            worst = worst.max((m[(a, b)] - oracle[a][b]).norm());
        }
    }
    assert!(worst < 1e-8, "Born vs Simpson: {worst:.3e}");
}

#[test]
fn doubling_panels_is_converged() {
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    let t = GaussianTerm {
        amp: 0.7,
        x0: 0.4,
        sx: 0.3,
        y0: 0.5,
        sy: 0.25,
    };
    let p = PotentialSpec::new(&g, 1e-3, vec![t]);
    let a = overlap(&p, &g, 3, 1e-3, 4).unwrap();
    let b = overlap(&p, &g, 3, 1e-3, 8).unwrap();
    assert_eq!(a.shape(), (6, 6));
    assert!(max_abs((a - b).iter().copied()) < 1e-10);
}
