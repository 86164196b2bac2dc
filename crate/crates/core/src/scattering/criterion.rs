//! Trapped-mode criterion and ε-scans.

use super::potential::PotentialSpec;
use super::solver::{bound_state_sigma, solve_scattering, AugmentedScatteringMatrix, CMat, ModeBasis, SolverConfig};
use crate::spectrum::{self, NearThresholdData, RibbonGeometry};
use crate::{Result, C64};
use serde::{Deserialize, Serialize};

/// Default detection threshold for `σ_min`.
pub const DETECT_TOL: f64 = 1e-4;

/// `(σ_min, det)` of `S_†† + dΥ`.
pub fn trapped_criterion(s: &AugmentedScatteringMatrix, ntd: &NearThresholdData) -> (f64, C64) {
    criterion_of_block(&s.dagger_block(), ntd.d)
}

pub fn criterion_of_block(block: &CMat, d: C64) -> (f64, C64) {
    let mut m = block.clone();
    m[(0, 1)] += d;
    m[(1, 0)] += d;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let sv = m.svd(false, false).singular_values;
    (sv.min(), det)
}

/// How δ depends on ε during a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    /// Use the potential's own δ.
    Fixed,
    /// `δ = sin σ(ε)` on the trap side; the potential's δ above threshold.
    SinSigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    pub delta: f64,
    pub sigma_min: f64,
    pub detect: bool,
}

/// Criterion value at one grid point. For `ε > 0` this is `σ_min(S_†† + dΥ)` at
/// `ω_N − ε`; for `ε < 0` it is the smallest singular value of the homogeneous
/// matching system at `ω_N + |ε|`.
pub fn scan_point(
    p: &PotentialSpec,
    geom: &RibbonGeometry,
    n: usize,
    eps: f64,
    rule: DeltaRule,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if eps > 0.0 {
        let nt = spectrum::near_threshold(geom, n, eps)?;
        let delta = match rule {
            DeltaRule::Fixed => p.delta,
            DeltaRule::SinSigma => nt.delta_sin,
        };
        let sol = solve_scattering(&p.with_delta(delta), geom, n, eps, cfg)?;
        Ok((delta, trapped_criterion(&sol.matrix(delta), &nt).0))
    } else {
        let omega = spectrum::threshold(geom, n)?.omega - eps;
        let basis = ModeBasis::at_energy(geom, omega, cfg.modes_for(n))?;
        Ok((p.delta, bound_state_sigma(p, &basis, cfg)))
    }
}

pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Criterion over an ε grid. Interior local minima of the grid values are refined
/// by golden-section search between their neighbours, and a row is flagged when
/// the refined minimum falls below `tol`.
pub fn trap_scan(
    p: &PotentialSpec,
    geom: &RibbonGeometry,
    n: usize,
    eps_grid: &[f64],
    rule: DeltaRule,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    let eval = |e: f64| scan_point(p, geom, n, e, rule, cfg);
    #[cfg(feature = "parallel")]
    let vals: Vec<Result<(f64, f64)>> = {
        use rayon::prelude::*;
        eps_grid.par_iter().map(|&e| eval(e)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let vals: Vec<Result<(f64, f64)>> = eps_grid.iter().map(|&e| eval(e)).collect();
    let mut rows = Vec::with_capacity(eps_grid.len());
    for (&eps, v) in eps_grid.iter().zip(vals) {
        let (delta, sigma_min) = v?;
        rows.push(ScanRow {
            eps,
            delta,
            sigma_min,
            detect: sigma_min < tol,
        });
    }
    for i in 1..rows.len().saturating_sub(1) {
        let (l, c, r) = (rows[i - 1], rows[i], rows[i + 1]);
        // Refine only within a single regime.
        if c.sigma_min > l.sigma_min || c.sigma_min > r.sigma_min || l.eps.signum() != r.eps.signum() || c.detect {
            continue;
        }
        let (lo, hi) = if l.eps < r.eps { (l.eps, r.eps) } else { (r.eps, l.eps) };
        let (_, best) = golden_min(|e| eval(e).map(|v| v.1).unwrap_or(f64::INFINITY), lo, hi, 40);
        rows[i].detect = best < tol;
    }
    Ok(rows)
}

/// Number of separate detection runs in a scan.
pub fn count_dips(rows: &[ScanRow]) -> usize {
    let mut count = 0;
    let mut prev = false;
    for r in rows {
        if r.detect && !prev {
            count += 1;
        }
        prev = r.detect;
    }
    count
}
