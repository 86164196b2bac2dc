//! Subcommand handlers.

use crate::config::{read_potential, Resolved, RunConfig};
use crate::error::CliError;
use crate::range;
use crate::{Command, Geometry, ARTIFACT_SCHEMA};
use agnr::scattering::born::{overlap, BORN_QUAD_TOL};
use agnr::scattering::criterion::{count_dips, DETECT_TOL};
use agnr::scattering::solver::{extraction_check, extraction_x, CMat};
use agnr::scattering::{solve_scattering, trap_scan, AugmentedScatteringMatrix, DeltaRule};
use agnr::spectrum;
use agnr::symplectic::{biorthogonality_table, energy_flux, BiorthogonalityReport};
use agnr::synthesis::{synthesize, SynthesisConfig};
use agnr::waves::{
    make_wave, norm_identity_gap, norm_max, normalized_basis, Family, ModeTerm, Regime, SpinorField, Tau, WaveLabel,
};
use agnr::{RibbonGeometry, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Thresholds { geom, count, out } => thresholds(&geom, count, out),
        Command::Dispersion {
            geom,
            lambda,
            branches,
            out,
        } => dispersion(&geom, &lambda, branches, out),
        Command::Wave {
            geom,
            omega,
            n,
            eps,
            family,
            j,
            tau,
            grid,
            x,
            out,
        } => wave(&geom, omega, n, eps, &family, j, tau.as_deref(), &grid, &x, out),
        Command::Qcheck {
            geom,
            omega,
            eps,
            n,
            n_quad,
            out,
        } => qcheck(&geom, omega, eps, n, n_quad, out),
        Command::Born { config, out } => born(&config, out),
        Command::Smatrix { config, out } => smatrix(&config, out),
        Command::Trapscan {
            config,
            eps,
            log,
            potential,
            delta_rule,
            out,
        } => trapscan(&config, &eps, log, potential, &delta_rule, out),
        Command::Synthesize {
            geom,
            n,
            eps,
            bumps,
            out,
            report,
        } => synthesize_cmd(&geom, n, eps, bumps, &out, report),
        Command::VerifyIdentities {
            geom,
            n,
            eps,
            n_quad,
            out,
        } => verify(&geom, n, eps, n_quad, out),
    }
}

fn ribbon(g: &Geometry) -> Result<RibbonGeometry, CliError> {
    Ok(RibbonGeometry::new(g.width, g.r0)?)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => {
            Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| {
                CliError::Validation(format!("cannot write {}: {e}", p.display()))
            })?))
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(out, &text)
}

fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    Ok(csv::Writer::from_writer(sink(out)?))
}

fn thresholds(g: &Geometry, count: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    let table = spectrum::thresholds(&ribbon(g)?, count)?;
    let mut w = csv_writer(out.as_deref())?;
    w.write_record(["k", "omega", "kappa", "j"])?;
    for t in &table.entries {
        w.write_record([t.k.to_string(), fmt(t.omega), fmt(t.kappa), t.j.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same f64.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn dispersion(g: &Geometry, lambda: &str, branches: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    if branches == 0 {
        return Err(CliError::Validation("--branches must be at least 1".into()));
    }
    let grid = range::stepped(lambda, "--lambda")?;
    let rows = spectrum::dispersion_curves(&ribbon(g)?, &grid, branches)?;
    let mut w = csv_writer(out.as_deref())?;
    w.write_record(["j", "kappa_sign", "lambda", "omega"])?;
    for r in rows {
        w.write_record([r.j.to_string(), r.kappa_sign.to_string(), fmt(r.lambda), fmt(r.omega)])?;
    }
    w.flush()?;
    Ok(())
}

fn regime(omega: Option<f64>, n: Option<usize>, eps: Option<f64>) -> Result<Regime, CliError> {
    match (omega, n, eps) {
        (Some(w), None, None) => Ok(Regime::Omega(w)),
        (None, Some(n), Some(eps)) => Ok(Regime::Near { n, eps }),
        _ => Err(CliError::Validation(
            "give either --omega, or both --N and --eps".into(),
        )),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Validation(format!("--grid must look like 41x21, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (nx, ny) = (
        a.trim().parse::<usize>().map_err(|_| bad())?,
        b.trim().parse::<usize>().map_err(|_| bad())?,
    );
    if nx < 2 || ny < 2 || nx * ny > 4_000_000 {
        return Err(bad());
    }
    Ok((nx, ny))
}

#[allow(clippy::too_many_arguments)]
fn wave(
    g: &Geometry,
    omega: Option<f64>,
    n: Option<usize>,
    eps: Option<f64>,
    family: &str,
    j: usize,
    tau: Option<&str>,
    grid: &str,
    x: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let geom = ribbon(g)?;
    let family: Family = family.parse()?;
    let tau = tau.map(str::parse::<Tau>).transpose()?;
    let (nx, ny) = parse_grid(grid)?;
    let (x0, x1) = range::interval(x, "--x")?;
    let w = make_wave(WaveLabel::new(family, j, tau), &geom, regime(omega, n, eps)?)?;
    let mut out = csv_writer(out.as_deref())?;
    out.write_record([
        "x", "y", "Re_u", "Im_u", "Re_v", "Im_v", "Re_up", "Im_up", "Re_vp", "Im_vp",
    ])?;
    for ix in 0..nx {
        let xv = x0 + (x1 - x0) * ix as f64 / (nx - 1) as f64;
        for iy in 0..ny {
            let yv = geom.width * iy as f64 / (ny - 1) as f64;
            let z = w.eval(xv, yv);
            let mut rec = vec![fmt(xv), fmt(yv)];
            for c in z {
                rec.push(fmt(c.re));
                rec.push(fmt(c.im));
            }
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn qcheck(
    g: &Geometry,
    omega: Option<f64>,
    eps: Option<f64>,
    n: Option<usize>,
    n_quad: usize,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    if n_quad < 8 {
        return Err(CliError::Validation("--n-quad must be at least 8".into()));
    }
    let report = biorthogonality_table(&ribbon(g)?, regime(omega, n, eps)?, n_quad)?;
    write_json(
        out.as_deref(),
        &Versioned {
            schema: ARTIFACT_SCHEMA,
            body: report,
        },
    )
}

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    schema: u32,
    #[serde(flatten)]
    body: T,
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn rows(m: &CMat) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn energy(r: &Resolved) -> f64 {
    r.eps.expect("configs for solves are loaded with an energy")
}

fn or_config(out: Option<PathBuf>, fallback: &Option<PathBuf>, config: &Path) -> Option<PathBuf> {
    out.or_else(|| {
        fallback.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                config.parent().unwrap_or(Path::new(".")).join(p)
            }
        })
    })
}

#[derive(Serialize)]
struct BornReport {
    schema: u32,
    #[serde(rename = "N")]
    n: usize,
    eps: f64,
    omega: f64,
    delta: f64,
    /// `S ≈ I + iδ s1`; rows incoming `(k, τ)`, columns outgoing `(j, θ)`.
    s1: Vec<Vec<C64>>,
    panels_per_unit: usize,
    quadrature_change: f64,
    hermiticity_defect: f64,
}

fn born(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let r = RunConfig::load(config, true)?;
    let eps = energy(&r);
    let panels = r.config.quadrature.panels.unwrap_or(4);
    if panels == 0 {
        return Err(CliError::Validation("quadrature.panels must be positive".into()));
    }
    let coarse = overlap(&r.potential, &r.geom, r.n, eps, panels)?;
    let fine = overlap(&r.potential, &r.geom, r.n, eps, 2 * panels)?;
    let change = max_abs(&(&fine - &coarse)) / max_abs(&fine).max(1.0);
    if change > BORN_QUAD_TOL {
        return Err(agnr::Error::QuadratureNotConverged { change }.into());
    }
    let s1 = -fine;
    let report = BornReport {
        schema: ARTIFACT_SCHEMA,
        n: r.n,
        eps,
        omega: spectrum::threshold(&r.geom, r.n)?.omega - eps,
        delta: r.potential.delta,
        hermiticity_defect: max_abs(&(&s1 - s1.adjoint())),
        s1: rows(&s1),
        panels_per_unit: 2 * panels,
        quadrature_change: change,
    };
    write_json(or_config(out, &r.config.outputs.born, config).as_deref(), &report)
}

#[derive(Serialize)]
struct SmatrixReport {
    schema: u32,
    #[serde(flatten)]
    matrix: AugmentedScatteringMatrix,
    unitarity_defect: f64,
    t1_defect: f64,
    t3_defect: f64,
    condition_number: f64,
    extraction_x: f64,
    /// Change in S when extracting 0.5 closer to the support.
    extraction_change: f64,
}

fn smatrix(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let r = RunConfig::load(config, true)?;
    let sol = solve_scattering(&r.potential, &r.geom, r.n, energy(&r), &r.solver)?;
    let m = sol.matrix(r.potential.delta);
    let x = extraction_x(&sol, &r.solver);
    let report = SmatrixReport {
        schema: ARTIFACT_SCHEMA,
        unitarity_defect: m.unitarity_defect(),
        t1_defect: m.t1_defect(),
        t3_defect: m.t3_defect(),
        condition_number: sol.cond,
        extraction_x: x,
        extraction_change: extraction_check(&sol, x)?,
        matrix: m,
    };
    write_json(or_config(out, &r.config.outputs.smatrix, config).as_deref(), &report)
}

fn trapscan(
    config: &Path,
    eps: &str,
    log: bool,
    potential: Option<PathBuf>,
    delta_rule: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut r = RunConfig::load(config, false)?;
    if let Some(p) = potential {
        let mut pot = read_potential(&p)?;
        if (pot.width - r.geom.width).abs() > 1e-12 || pot.r0 > r.geom.r0 + 1e-12 {
            return Err(CliError::Validation(format!(
                "potential (L = {}, R0 = {}) does not fit config (L = {}, R0 = {})",
                pot.width, pot.r0, r.geom.width, r.geom.r0
            )));
        }
        if let Some(d) = r.config.delta {
            pot.delta = d;
        }
        r.potential = pot;
    }
    let rule = match delta_rule {
        "fixed" => DeltaRule::Fixed,
        "sin_sigma" => DeltaRule::SinSigma,
        other => {
            return Err(CliError::Validation(format!(
                "--delta-rule must be fixed or sin_sigma, got {other:?}"
            )))
        }
    };
    let grid = range::counted(eps, log, "--eps")?;
    let eps0 = spectrum::eps0(&r.geom, r.n)?;
    let omega_n = spectrum::threshold(&r.geom, r.n)?.omega;
    let next = spectrum::threshold(&r.geom, r.n + 1)?.omega;
    for &e in &grid {
        if e == 0.0 || e > eps0 || omega_n - e >= next {
            return Err(CliError::Validation(format!(
                "eps = {e} outside the scan window: need 0 < eps <= {eps0} or omega_N + |eps| below omega_(N+1) = {next}"
            )));
        }
    }
    let rows = trap_scan(&r.potential, &r.geom, r.n, &grid, rule, &r.solver, DETECT_TOL)?;
    let mut w = csv_writer(or_config(out, &r.config.outputs.scan, config).as_deref())?;
    w.write_record(["eps", "delta", "sigma_min", "detect"])?;
    for row in &rows {
        w.write_record([fmt(row.eps), fmt(row.delta), fmt(row.sigma_min), row.detect.to_string()])?;
    }
    w.flush()?;
    eprintln!(
        "agnr: {} trapped-mode candidate(s) over {} points",
        count_dips(&rows),
        rows.len()
    );
    Ok(())
}

fn synthesize_cmd(
    g: &Geometry,
    n: usize,
    eps: f64,
    bumps: Option<usize>,
    out: &Path,
    report: Option<PathBuf>,
) -> Result<(), CliError> {
    let geom = ribbon(g)?;
    let cfg = SynthesisConfig {
        bumps,
        ..SynthesisConfig::default()
    };
    let res = synthesize(&geom, n, eps, &cfg)?;
    write_text(Some(out), &res.potential.to_json())?;
    if let Some(path) = report {
        write_json(
            Some(&path),
            &Versioned {
                schema: ARTIFACT_SCHEMA,
                body: &res,
            },
        )?;
    }
    eprintln!(
        "agnr: delta = {:.6e}, sigma_min = {:.3e} after {} iterations",
        res.delta, res.final_sigma_min, res.iterations
    );
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
    pass: bool,
    detail: String,
}

impl Check {
    fn new(name: &'static str, value: f64, tol: f64, detail: String) -> Self {
        Check {
            name,
            value,
            tol,
            pass: value < tol,
            detail,
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    schema: u32,
    #[serde(rename = "L")]
    width: f64,
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "N")]
    n: usize,
    eps: f64,
    checks: Vec<Check>,
    pass: bool,
    tables: Vec<BiorthogonalityReport>,
}

fn free_waves(g: &RibbonGeometry, n: usize, eps: f64) -> Result<Vec<SpinorField>, CliError> {
    let near = Regime::Near { n, eps };
    let mk = |f, j, tau| make_wave(WaveLabel::new(f, j, tau), g, near);
    let mut out = Vec::new();
    for j in 1..n {
        for tau in Tau::both() {
            out.push(mk(Family::Oscillatory, j, Some(tau))?);
            out.push(mk(Family::OscillatoryNormalized, j, Some(tau))?);
        }
    }
    for tau in Tau::both() {
        out.push(mk(Family::NearExpRaw, n, Some(tau))?);
        out.push(mk(Family::NearExpNormalized, n, Some(tau))?);
    }
    out.push(mk(Family::NearExpAnalyticPlus, n, None)?);
    out.push(mk(Family::NearExpAnalyticMinus, n, None)?);
    for f in [Family::Threshold0, Family::Threshold1] {
        out.push(make_wave(WaveLabel::new(f, n, None), g, Regime::Near { n, eps: 0.0 })?);
    }
    Ok(out)
}

fn verify(g: &Geometry, n: usize, eps: f64, n_quad: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    let geom = ribbon(g)?;
    if n_quad < 8 {
        return Err(CliError::Validation("--n-quad must be at least 8".into()));
    }
    spectrum::near_threshold(&geom, n, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checks = Vec::new();

    // Norm identity on compactly enveloped sums of transverse modes.
    let mut gap = 0.0f64;
    for _ in 0..6 {
        let terms: Vec<ModeTerm> = (0..4)
            .map(|_| {
                let m = rng.gen_range(-4i64..=3);
                let c = |r: &mut ChaCha8Rng| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                let lambda = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3));
                ModeTerm::transverse(geom.kappa(m), lambda, c(&mut rng), c(&mut rng))
            })
            .collect();
        let (x0, s) = (rng.gen_range(-0.5..0.5), rng.gen_range(0.4..0.8));
        let w = SpinorField::from_terms(terms, 1.0, geom).with_envelope(move |x| {
            let t = (x - x0) / s;
            let e = (-t * t).exp();
            (e, -2.0 * t / s * e)
        });
        let r = norm_identity_gap(&w, -6.0, 6.0, 192, 192);
        gap = gap.max(r.gap / r.lhs.max(1.0));
    }
    checks.push(Check::new(
        "norm_identity",
        gap,
        1e-8,
        "6 enveloped mode sums, relative gap".into(),
    ));

    // Flux of each normalised wave: Re(−iω² q(𝐰, 𝐰)) = τω².
    let basis = normalized_basis(&geom, n, eps)?;
    let mut flux = 0.0f64;
    for (_, tau, w) in &basis {
        let w2 = w.omega * w.omega;
        flux = flux.max((energy_flux(w, 0.37) - tau.sign() * w2).abs() / w2);
    }
    checks.push(Check::new(
        "flux_directions",
        flux,
        1e-9,
        format!("{} normalised waves, relative to omega^2", basis.len()),
    ));

    // Dirac equation and edge condition for every family, relative to the field size.
    let (mut dirac, mut edge) = (0.0f64, 0.0f64);
    let waves = free_waves(&geom, n, eps)?;
    for w in &waves {
        for _ in 0..100 {
            let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.0..geom.width));
            dirac = dirac.max(norm_max(&w.residual(x, y)) / norm_max(&w.eval(x, y)).max(1.0));
            let size = norm_max(&w.eval(x, 0.0)).max(norm_max(&w.eval(x, geom.width))).max(1.0);
            edge = edge.max(w.bc_residual(&[x]) / size);
        }
    }
    let count = waves.len();
    checks.push(Check::new(
        "dirac_residual",
        dirac,
        1e-10,
        format!("{count} waves, 100 points each"),
    ));
    checks.push(Check::new(
        "edge_residual",
        edge,
        1e-12,
        format!("{count} waves, 100 sections each"),
    ));

    let omega_n = spectrum::threshold(&geom, n)?.omega;
    let above = 0.5 * (omega_n + spectrum::threshold(&geom, n + 1)?.omega);
    let mut tables = Vec::new();
    for (name, reg) in [
        ("q_tables_near", Regime::Near { n, eps }),
        ("q_tables_between", Regime::Omega(above)),
    ] {
        let t = biorthogonality_table(&geom, reg, n_quad)?;
        checks.push(Check::new(
            name,
            t.max_deviation,
            1e-9,
            format!("{} entries at {n_quad} nodes", t.entries.len()),
        ));
        tables.push(t);
    }

    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let report = VerifyReport {
        schema: ARTIFACT_SCHEMA,
        width: geom.width,
        r0: geom.r0,
        n,
        eps,
        pass: failed.is_empty(),
        checks,
        tables,
    };
    write_json(out.as_deref(), &report)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "identity checks failed: {}",
            failed.join(", ")
        )))
    }
}
