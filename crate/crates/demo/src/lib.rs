//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export returns plain data (JSON text or a flat `f64` array) and
//! reports bad input as an error string, so the same functions are usable and
//! testable from native Rust.

use agnr::scattering::criterion::{count_dips, DETECT_TOL};
use agnr::scattering::{trap_scan, DeltaRule, PotentialSpec, SolverConfig};
use agnr::spectrum;
use agnr::waves::{make_wave, Family, Regime, Tau, WaveLabel};
use agnr::RibbonGeometry;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Designed potential for `L = 1.33`, `N = 2`, trapped mode at `ω_2 − 0.01`.
pub const BUNDLED_POTENTIAL: &str = include_str!("../www/trap_potential.json");

fn geometry(width: f64) -> Result<RibbonGeometry, String> {
    RibbonGeometry::new(width, 1.0).map_err(|e| e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn library_version() -> String {
    agnr::VERSION.to_string()
}

#[wasm_bindgen]
pub fn bundled_potential() -> String {
    BUNDLED_POTENTIAL.to_string()
}

#[derive(Serialize)]
struct ThresholdRow {
    k: usize,
    omega: f64,
    eps0: f64,
}

/// `[{k, omega, eps0}, …]` for the first `count` thresholds.
#[wasm_bindgen]
pub fn thresholds(width: f64, count: usize) -> Result<String, String> {
    let t = spectrum::thresholds(&geometry(width)?, count).map_err(|e| e.to_string())?;
    json(
        &t.entries
            .iter()
            .map(|e| ThresholdRow {
                k: e.k,
                omega: e.omega,
                eps0: e.eps0,
            })
            .collect::<Vec<_>>(),
    )
}

#[derive(Serialize)]
struct Branch {
    j: i64,
    kappa: f64,
    omega: Vec<f64>,
}

#[derive(Serialize)]
struct Dispersion {
    lambda: Vec<f64>,
    branches: Vec<Branch>,
}

/// Positive-energy branches on `points` values of λ in `[−lambda_max, lambda_max]`;
/// the negative branches are their mirror images.
#[wasm_bindgen]
pub fn dispersion(width: f64, lambda_max: f64, points: usize, branches: usize) -> Result<String, String> {
    if lambda_max.is_nan() || lambda_max <= 0.0 || points < 2 {
        return Err("need lambda_max > 0 and at least 2 points".into());
    }
    let g = geometry(width)?;
    let lambda: Vec<f64> = (0..points)
        .map(|i| -lambda_max + 2.0 * lambda_max * i as f64 / (points - 1) as f64)
        .collect();
    let rows = spectrum::dispersion_curves(&g, &lambda, branches).map_err(|e| e.to_string())?;
    let mut out: Vec<Branch> = Vec::new();
    for r in rows.iter().filter(|r| r.omega >= 0.0) {
        match out.last_mut() {
            Some(b) if b.j == r.j => b.omega.push(r.omega),
            _ => out.push(Branch {
                j: r.j,
                kappa: g.kappa(r.j),
                omega: vec![r.omega],
            }),
        }
    }
    json(&Dispersion { lambda, branches: out })
}

/// Wave on an `nx × ny` grid over `[x0, x1] × [0, L]`, row-major in y.
///
/// `quantity` is `density` (`Σ|w_k|²`), or `re_u`, `im_u`, `re_v`, `im_v`.
/// A negative `tau` selects `−`, zero means no direction label.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn wave_field(
    width: f64,
    n: usize,
    eps: f64,
    family: &str,
    j: usize,
    tau: i32,
    nx: usize,
    ny: usize,
    x0: f64,
    x1: f64,
    quantity: &str,
) -> Result<Vec<f64>, String> {
    if nx < 2 || ny < 2 || nx * ny > 1 << 20 || x0.is_nan() || x1.is_nan() || x1 <= x0 {
        return Err("grid must be at least 2 x 2 with x1 > x0".into());
    }
    let g = geometry(width)?;
    let family: Family = family.parse().map_err(|e: agnr::Error| e.to_string())?;
    let tau = match tau {
        0 => None,
        t if t > 0 => Some(Tau::Plus),
        _ => Some(Tau::Minus),
    };
    let pick: fn(&[agnr::C64; 4]) -> f64 = match quantity {
        "density" => |z| z.iter().map(|c| c.norm_sqr()).sum(),
        "re_u" => |z| z[0].re,
        "im_u" => |z| z[0].im,
        "re_v" => |z| z[1].re,
        "im_v" => |z| z[1].im,
        other => return Err(format!("unknown quantity {other:?}")),
    };
    let w = make_wave(WaveLabel::new(family, j, tau), &g, Regime::Near { n, eps }).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        let y = width * iy as f64 / (ny - 1) as f64;
        for ix in 0..nx {
            let x = x0 + (x1 - x0) * ix as f64 / (nx - 1) as f64;
            out.push(pick(&w.eval(x, y)));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Scan {
    eps: Vec<f64>,
    delta: Vec<f64>,
    sigma_min: Vec<f64>,
    detect: Vec<bool>,
    dips: usize,
}

/// Trapped-mode criterion of `potential_json` on `steps` values of ε between
/// `eps_min` and `eps_max` (logarithmic when `log`), below threshold `n`.
/// `sin_sigma` couples δ to ε as in the design; otherwise the stored δ is used.
#[wasm_bindgen]
pub fn criterion_scan(
    potential_json: &str,
    n: usize,
    eps_min: f64,
    eps_max: f64,
    steps: usize,
    log: bool,
    sin_sigma: bool,
) -> Result<String, String> {
    let p = PotentialSpec::from_json(potential_json).map_err(|e| e.to_string())?;
    let g = p.geometry().map_err(|e| e.to_string())?;
    let eps0 = spectrum::eps0(&g, n).map_err(|e| e.to_string())?;
    if !(eps_min > 0.0 && eps_min <= eps_max && eps_max <= eps0) || steps == 0 || steps > 400 {
        return Err(format!("need 0 < eps_min <= eps_max <= {eps0:.6} and 1..=400 steps"));
    }
    let grid: Vec<f64> = (0..steps)
        .map(|i| {
            let t = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
            if log {
                (eps_min.ln() + t * (eps_max / eps_min).ln()).exp()
            } else {
                eps_min + t * (eps_max - eps_min)
            }
        })
        .collect();
    let rule = if sin_sigma {
        DeltaRule::SinSigma
    } else {
        DeltaRule::Fixed
    };
    let rows = trap_scan(&p, &g, n, &grid, rule, &SolverConfig::default(), DETECT_TOL).map_err(|e| e.to_string())?;
    json(&Scan {
        eps: rows.iter().map(|r| r.eps).collect(),
        delta: rows.iter().map(|r| r.delta).collect(),
        sigma_min: rows.iter().map(|r| r.sigma_min).collect(),
        detect: rows.iter().map(|r| r.detect).collect(),
        dips: count_dips(&rows),
    })
}
