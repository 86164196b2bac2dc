use agnr::scattering::potential::PotentialSpec;
use agnr::scattering::solver::*;
use agnr::spectrum::RibbonGeometry;

fn ribbon() -> RibbonGeometry {
    RibbonGeometry::new(1.33, 6.0).unwrap()
}

#[test]
fn star_identity_and_free_composition() {
    let g = ribbon();
    let b = ModeBasis::near_threshold(&g, 2, 0.01, 10).unwrap();
    let part = Partition::mixed(&b);
    let a = SBlock::free(&part, 0.3);
    let c = SBlock::free(&part, 0.5);
    let ac = a.star(&c);
    let d = SBlock::free(&part, 0.8);
    assert!((&ac.s11 - &d.s11).norm() < 1e-13);
    assert!((&ac.s22 - &d.s22).norm() < 1e-13);
    let id = SBlock::identity(part.nf(), part.nb());
    assert!((&a.star(&id).s11 - &a.s11).norm() < 1e-15);
}

#[test]
fn basis_layout() {
    let g = ribbon();
    let b = ModeBasis::near_threshold(&g, 2, 0.01, 10).unwrap();
    assert_eq!(b.len(), 21);
    assert_eq!(b.open.len(), 2);
    let c1 = &b.channels[b.open[0]];
    let c2 = &b.channels[b.open[1]];
    assert_eq!((c1.m, c1.kind, c1.j), (-1, ChannelKind::Propagating, Some(1)));
    assert_eq!((c2.m, c2.kind, c2.j), (-2, ChannelKind::Exponential, Some(2)));
    assert!(ModeBasis::at_energy(&g, 1.6, 10).unwrap().open.len() == 2);
}

#[test]
fn free_problem_identity() {
    let g = ribbon();
    let p = PotentialSpec::zero(&g);
    let b = ModeBasis::near_threshold(&g, 2, 0.01, 10).unwrap();
    let sol = solve_basis(&p, b, &SolverConfig::default()).unwrap();
    assert!((&sol.s - CMat::identity(4, 4)).norm() < 1e-12);
}
