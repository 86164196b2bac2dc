//! Acceptance run: one PASS/FAIL line per criterion, written straight to stdout
//! (in criterion order, also if a criterion panics) so that it shows up without
//! `--nocapture`.

use agnr::scattering::born::born_smatrix;
use agnr::scattering::criterion::{count_dips, trap_scan, trapped_criterion, DeltaRule, DETECT_TOL};
use agnr::scattering::potential::{GaussianTerm, PotentialSpec};
use agnr::scattering::solver::{solve_scattering, AugmentedScatteringMatrix, CMat, SolverConfig};
use agnr::symplectic::biorthogonality_table;
use agnr::synthesis::{
    closed_form, gram_matrix, paper_example_potential, synthesize, upsilon, IndexEntry, SynthesisConfig, Xi,
};
use agnr::waves::{make_wave, norm_identity_gap, norm_max, Family, ModeTerm, Regime, SpinorField, Tau, WaveLabel};
use agnr::{spectrum, RibbonGeometry, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        self.lines.push((id, pass, detail));
    }
}

impl Drop for Report {
    fn drop(&mut self) {
        self.lines.sort_by_key(|l| l.0);
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out);
        for (id, pass, detail) in &self.lines {
            let tag = if *pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "criterion {id:2} [{tag}] {detail}");
        }
        let _ = out.flush();
    }
}

fn non_integer_two_l(l: f64) -> bool {
    (2.0 * l - (2.0 * l).round()).abs() > 1e-6
}

fn brute_thresholds(l: f64, count: usize) -> Vec<f64> {
    let jmax = (l * (count as f64 + 2.0)).ceil() as i64 + 5;
    let mut v: Vec<f64> = (-jmax..=jmax).map(|j| (PI + PI * j as f64 / l).abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v.truncate(count);
    v
}

fn families(g: &RibbonGeometry, n: usize, eps: f64) -> Vec<SpinorField> {
    let near = Regime::Near { n, eps };
    let mut out = Vec::new();
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
        for f in [Family::NearExpRaw, Family::NearExpNormalized] {
            out.push(make_wave(WaveLabel::new(f, n, Some(tau)), g, near).unwrap());
        }
    }
    for f in [Family::NearExpAnalyticPlus, Family::NearExpAnalyticMinus] {
        out.push(make_wave(WaveLabel::new(f, n, None), g, near).unwrap());
    }
    out
}

fn random_geometry(rng: &mut ChaCha8Rng, lo: f64, hi: f64, r0: f64) -> RibbonGeometry {
    loop {
        let l = rng.gen_range(lo..hi);
        if non_integer_two_l(l) && (2.0 * l - (2.0 * l).round()).abs() > 0.05 {
            return RibbonGeometry::new(l, r0).unwrap();
        }
    }
}

fn random_potential(g: &RibbonGeometry, rng: &mut ChaCha8Rng, delta: f64) -> PotentialSpec {
    let terms = (0..3)
        .map(|_| GaussianTerm {
            amp: rng.gen_range(-1.0..1.0),
            x0: rng.gen_range(-1.0..1.0),
            sx: rng.gen_range(0.2..0.6),
            y0: rng.gen_range(0.2..(g.width - 0.2)),
            sy: rng.gen_range(0.15..0.5),
        })
        .collect();
    PotentialSpec::new(g, delta, terms).normalized()
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn criterion_1(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut spacing_ok, mut tried) = (0.0f64, true, 0);
    while tried < 20 {
        let l = rng.gen_range(0.3..10.0);
        if !non_integer_two_l(l) {
            continue;
        }
        tried += 1;
        let g = RibbonGeometry::new(l, 1.0).unwrap();
        let t = spectrum::thresholds(&g, 25).unwrap();
        for (e, b) in t.entries.iter().zip(brute_thresholds(l, 25)) {
            worst = worst.max((e.omega - b).abs());
        }
        for w in t.entries.windows(2) {
            let gap = w[1].omega - w[0].omega;
            spacing_ok &= gap >= t.d_star - 1e-12 && gap <= PI / l + 1e-12;
        }
    }
    rep.record(
        1,
        worst < 1e-10 && spacing_ok,
        format!("thresholds vs enumeration on 20 random L: max diff {worst:.1e}; d* <= gap <= pi/L: {spacing_ok}"),
    );
}

fn criterion_2(rep: &mut Report) {
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    let w2 = spectrum::threshold(&g, 2).unwrap().omega;
    let two_digits = format!("{:.2}", w2) == "1.58" && (w2 - 1.57).abs() < 0.05;
    rep.record(
        2,
        (w2 - 1.5826).abs() < 1e-3 && two_digits,
        format!("L = 1.33: omega_2 = {w2:.6} (stated value 1.57)"),
    );
}

fn criterion_3(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Residuals are scaled by the local field size max(1, |w|): the raw
    // exponential families reach ~1e4 at |x| = 2 in wide windows, where the
    // absolute floating-point floor alone is ~1e-12.
    let (mut dirac, mut bc) = (0.0f64, 0.0f64);
    let (mut dirac_abs, mut bc_abs) = (0.0f64, 0.0f64);
    let mut count = 0;
    for _ in 0..10 {
        let g = random_geometry(&mut rng, 0.5, 4.0, 2.0);
        let n = rng.gen_range(1..=4);
        let eps = rng.gen_range(0.05..1.0) * spectrum::eps0(&g, n).unwrap();
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.0..g.width)))
            .collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        for w in families(&g, n, eps) {
            count += 1;
            for &(x, y) in &pts {
                let r = norm_max(&w.residual(x, y));
                dirac_abs = dirac_abs.max(r);
                dirac = dirac.max(r / norm_max(&w.eval(x, y)).max(1.0));
            }
            for &x in &xs {
                let r = w.bc_residual(&[x]);
                let size = norm_max(&w.eval(x, 0.0)).max(norm_max(&w.eval(x, g.width))).max(1.0);
                bc_abs = bc_abs.max(r);
                bc = bc.max(r / size);
            }
        }
    }
    rep.record(
        3,
        dirac < 1e-10 && bc < 1e-12,
        format!(
            "{count} wave fields over 10 regimes, 200 points each: Dirac residual {dirac:.1e}, edge residual {bc:.1e} \
             (relative to max(1, |w|); absolute {dirac_abs:.1e}, {bc_abs:.1e})"
        ),
    );
}

fn criterion_4(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut regimes: Vec<(RibbonGeometry, Regime)> = Vec::new();
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    for n in 1..=3 {
        regimes.push((g, Regime::Near { n, eps: 0.01 }));
    }
    regimes.push((g, Regime::Omega(3.5)));
    for _ in 0..3 {
        let gr = random_geometry(&mut rng, 0.6, 3.0, 2.0);
        let n = rng.gen_range(1..=3);
        let eps = rng.gen_range(0.05..0.9) * spectrum::eps0(&gr, n).unwrap();
        regimes.push((gr, Regime::Near { n, eps }));
    }
    let (mut worst, mut entries) = (0.0f64, 0);
    let mut have_pair = true;
    for (geom, regime) in &regimes {
        let r = biorthogonality_table(geom, *regime, 128).unwrap();
        worst = worst.max(r.max_deviation);
        entries += r.entries.len();
        if let Regime::Near { .. } = regime {
            have_pair &= r.entries.iter().any(|e| e.name == "q(w_N^0, w_N^1)")
                && r.entries.iter().any(|e| e.name.starts_with("Q(W_"))
                && r.entries.iter().any(|e| e.name.starts_with("Q(V_"));
        }
    }
    rep.record(
        4,
        worst < 1e-9 && have_pair,
        format!(
            "{entries} q / Q_R table entries over {} regimes at 128 nodes: max deviation {worst:.1e}",
            regimes.len()
        ),
    );
}

fn criterion_5(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let terms: Vec<ModeTerm> = (0..4)
            .map(|_| {
                let m = rng.gen_range(-4i64..=3);
                let c = |r: &mut ChaCha8Rng| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                let lambda = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3));
                ModeTerm::transverse(g.kappa(m), lambda, c(&mut rng), c(&mut rng))
            })
            .collect();
        let (x0, s) = (rng.gen_range(-0.5..0.5), rng.gen_range(0.4..0.8));
        let w = SpinorField::from_terms(terms, 1.0, g).with_envelope(move |x| {
            let t = (x - x0) / s;
            let e = (-t * t).exp();
            (e, -2.0 * t / s * e)
        });
        let r = norm_identity_gap(&w, -6.0, 6.0, 256, 256);
        worst = worst.max(r.gap);
        scale = scale.max(r.lhs);
    }
    rep.record(
        5,
        worst < 1e-6,
        format!("norm identity on 10 random enveloped mode sums, 256x256 nodes: gap {worst:.1e} (integrals up to {scale:.1e})"),
    );
}

fn criterion_6(rep: &mut Report, computed: &mut Vec<AugmentedScatteringMatrix>) {
    let t0 = Instant::now();
    let p = paper_example_potential();
    let g = p.geometry().unwrap();
    let eps = 1e-2;
    let s1 = born_smatrix(&p, &g, 2, eps).unwrap();
    let deltas = [1e-2, 3e-3, 1e-3];
    let mut errs = Vec::new();
    for &d in &deltas {
        let s = solve_scattering(&p.with_delta(d), &g, 2, eps, &SolverConfig::default())
            .unwrap()
            .matrix(d);
        errs.push(max_abs(&(s.matrix() - CMat::identity(4, 4) - &s1 * C64::new(0.0, d))));
        computed.push(s);
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = deltas.iter().zip(&errs).map(|(d, e)| (d.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / 3.0;
    let my = ly.iter().sum::<f64>() / 3.0;
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    rep.record(
        6,
        (slope - 2.0).abs() <= 0.2,
        format!(
            "Born limit on the reference potential, eps = 1e-2: errors {:.2e} {:.2e} {:.2e}, slope {slope:.3} ({:.1?})",
            errs[0],
            errs[1],
            errs[2],
            t0.elapsed()
        ),
    );
}

fn criterion_7(rep: &mut Report, computed: &mut Vec<AugmentedScatteringMatrix>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    for _ in 0..4 {
        let delta = rng.gen_range(0.01..0.2);
        let p = random_potential(&g, &mut rng, delta);
        let n = rng.gen_range(1..=3);
        let eps = rng.gen_range(0.02..0.9) * spectrum::eps0(&g, n).unwrap();
        computed.push(
            solve_scattering(&p, &g, n, eps, &SolverConfig::default())
                .unwrap()
                .matrix(p.delta),
        );
    }
    let mut sym = paper_example_potential().with_delta(0.05);
    for t in &mut sym.terms {
        t.y0 = sym.width / 2.0;
    }
    let gs = sym.geometry().unwrap();
    let mut t3: f64 = 0.0;
    for n in [2, 3] {
        let s = solve_scattering(&sym, &gs, n, 1e-2, &SolverConfig::default())
            .unwrap()
            .matrix(sym.delta);
        t3 = t3.max(s.t3_defect());
        computed.push(s);
    }
    let unit = computed.iter().map(|s| s.unitarity_defect()).fold(0.0, f64::max);
    let t1 = computed.iter().map(|s| s.t1_defect()).fold(0.0, f64::max);
    rep.record(
        7,
        unit < 1e-6 && t1 < 1e-6 && t3 < 1e-6,
        format!(
            "{} matrices: unitarity {unit:.1e}, T1 {t1:.1e}; T3 zeros (y-symmetric) {t3:.1e}",
            computed.len()
        ),
    );
}

fn criteria_8_9(rep: &mut Report, computed: &mut Vec<AugmentedScatteringMatrix>) {
    let t0 = Instant::now();
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    let (n, eps) = (2, 1e-3);
    let res = match synthesize(&g, n, eps, &SynthesisConfig::default()) {
        Ok(r) => r,
        Err(e) => {
            rep.record(8, false, format!("synthesis failed: {e}"));
            rep.record(9, false, "no synthesized potential to scan".into());
            return;
        }
    };
    let omega_n = spectrum::threshold(&g, n).unwrap().omega;
    let ratio = res.delta / (eps.sqrt() * 2.0 * (2.0 * omega_n).sqrt());
    // Independent re-solve of the returned potential.
    let nt = spectrum::near_threshold(&g, n, eps).unwrap();
    let s = solve_scattering(&res.potential, &g, n, eps, &SolverConfig::default())
        .unwrap()
        .matrix(res.potential.delta);
    let (smin, _) = trapped_criterion(&s, &nt);
    computed.push(s);
    rep.record(
        8,
        res.iterations <= 20 && smin < DETECT_TOL && (ratio - 1.0).abs() < 0.2,
        format!(
            "L = 1.33, N = 2, eps = 1e-3: {} iterations, sigma_min {smin:.2e}, delta/(sqrt(eps)*2sqrt(2 omega_N)) = {ratio:.4} ({:.1?})",
            res.iterations,
            t0.elapsed()
        ),
    );

    let t0 = Instant::now();
    let e0 = spectrum::eps0(&g, n).unwrap();
    let cfg = SolverConfig::default();
    let below: Vec<f64> = (0..40).map(|i| 1e-4 * (e0 / 1e-4f64).powf(i as f64 / 39.0)).collect();
    let rows = trap_scan(&res.potential, &g, n, &below, DeltaRule::Fixed, &cfg, DETECT_TOL).unwrap();
    let dips = count_dips(&rows);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut above_dips = 0;
    let mut above_min = f64::INFINITY;
    for n in [2, 3] {
        let tab = spectrum::thresholds(&g, n + 1).unwrap();
        let room = (tab.entries[n].omega - tab.entries[n - 1].omega).min(spectrum::eps0(&g, n).unwrap());
        let above: Vec<f64> = (1..=12).map(|i| -room * i as f64 / 14.0).collect();
        for _ in 0..2 {
            let p = random_potential(&g, &mut rng, 1e-3);
            let r = trap_scan(&p, &g, n, &above, DeltaRule::Fixed, &cfg, DETECT_TOL).unwrap();
            above_dips += count_dips(&r);
            above_min = above_min.min(r.iter().map(|x| x.sigma_min).fold(f64::INFINITY, f64::min));
        }
    }
    rep.record(
        9,
        dips == 1 && above_dips == 0,
        format!(
            "synthesized potential: {dips} dip(s) over {} eps in [1e-4, eps0]; random delta = 1e-3 potentials above N = 2, 3: {above_dips} dips, min sigma {above_min:.2} ({:.1?})",
            below.len(),
            t0.elapsed()
        ),
    );
}

fn criterion_10(rep: &mut Report) {
    let g = RibbonGeometry::new(1.33, 3.0).unwrap();
    let mut mins = Vec::new();
    for n in [2, 3, 4] {
        let ev = [1e-2, 1e-3]
            .iter()
            .map(|&e| gram_matrix(&g, n, e).unwrap().1[0])
            .fold(f64::INFINITY, f64::min);
        mins.push(ev);
    }
    let a = IndexEntry {
        j: 2,
        tau: Tau::Plus,
        xi: Xi::Re,
    };
    let u = upsilon(a, &g, 2, 0.0).unwrap();
    let mut ratios = Vec::new();
    for i in 0..=20 {
        let x = -g.r0 + 2.0 * g.r0 * i as f64 / 20.0;
        for k in 0..=6 {
            let y = g.width * k as f64 / 6.0;
            ratios.push(closed_form(a, &g, 2, x, y).unwrap() / u.eval(x, y));
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep.record(
        10,
        mins.iter().all(|&m| m > 0.0) && hi - lo < 1e-8,
        format!(
            "Gram min eigenvalue N = 2, 3, 4: {:.2e} {:.2e} {:.2e}; closed-form/direct |w_N^+|^2 ratio in [{lo:.10}, {hi:.10}]",
            mins[0], mins[1], mins[2]
        ),
    );
}

#[test]
fn acceptance() {
    let mut rep = Report { lines: Vec::new() };
    let mut computed = Vec::new();
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep, &mut computed);
    criteria_8_9(&mut rep, &mut computed);
    criterion_7(&mut rep, &mut computed);
    criterion_10(&mut rep);
    let failed: Vec<usize> = rep.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert_eq!(rep.lines.len(), 10);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
