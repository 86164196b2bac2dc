//! Transverse quantisation, thresholds, dispersion branches and
//! near-threshold quantities of the armchair ribbon.
//!
//! Transverse numbers are `κ_m = π + π m / L` for integer `m`. The thresholds
//! `ω_k` are the distinct values of `|κ_m|` in increasing order; they are
//! distinct exactly when `2L` is not an integer.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance used to decide that `2L` is an integer.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Tolerance used to decide that an energy sits on a threshold.
pub const THRESHOLD_TOL: f64 = 1e-12;

/// Conversion of the dimensionless energy to eV is `2t/√3` with `t` the
/// hopping energy. Kept as metadata only.
pub const ENERGY_UNIT_NOTE: &str = "omega * 2t/sqrt(3) = energy in eV";

/// Strip `(0, L) × ℝ` together with the half-width `R0` of the potential support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RibbonGeometry {
    #[serde(rename = "L")]
    pub width: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
}

impl RibbonGeometry {
    pub fn new(width: f64, r0: f64) -> Result<Self> {
        let g = RibbonGeometry { width, r0 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ribbon width L must be positive, got {}",
                self.width
            )));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "support half-width R0 must be positive, got {}",
                self.r0
            )));
        }
        let two_l = 2.0 * self.width;
        if (two_l - two_l.round()).abs() < DEGENERACY_TOL {
            return Err(Error::UnsupportedGeometry { two_l });
        }
        Ok(())
    }

    /// Transverse number `κ_m = π + π m / L`.
    pub fn kappa(&self, m: i64) -> f64 {
        PI + PI * m as f64 / self.width
    }

    /// Quasi-periodic phase `e^{i2πL}` of the folded transverse functions.
    pub fn fold_phase(&self) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * self.width)
    }

    /// Lower bound `d* = (π/L)·dist(2L, ℤ)` on threshold spacing.
    pub fn d_star(&self) -> f64 {
        let two_l = 2.0 * self.width;
        PI / self.width * (two_l - two_l.round()).abs()
    }

    /// Transverse integers ordered by `|κ_m|`, the first `count` of them.
    pub fn labels_by_abs_kappa(&self, count: usize) -> Vec<i64> {
        // |κ_m| = (π/L)|m + L|, so nearest-to-(−L) integers come first.
        let centre = (-self.width).round() as i64;
        let reach = count as i64 + 2;
        let mut ms: Vec<i64> = (centre - reach..=centre + reach).collect();
        ms.sort_by(|a, b| self.kappa(*a).abs().partial_cmp(&self.kappa(*b).abs()).unwrap());
        ms.truncate(count);
        ms
    }
}

/// One threshold `ω_k = |κ_k|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub k: usize,
    pub omega: f64,
    pub kappa: f64,
    pub j: i64,
    /// Admissible near-threshold window for `N = k`.
    pub eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub entries: Vec<Threshold>,
    pub d_star: f64,
}

impl ThresholdTable {
    /// Threshold `ω_n`, `n ≥ 1`.
    pub fn get(&self, n: usize) -> Option<&Threshold> {
        n.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// First `count` thresholds.
pub fn thresholds(geom: &RibbonGeometry, count: usize) -> Result<ThresholdTable> {
    geom.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("threshold count must be ≥ 1".into()));
    }
    let d_star = geom.d_star();
    let labels = geom.labels_by_abs_kappa(count);
    let mut entries = Vec::with_capacity(count);
    let mut prev = 0.0;
    for (i, &m) in labels.iter().enumerate() {
        let kappa = geom.kappa(m);
        let omega = kappa.abs();
        let eps0 = ((1.0 + 2f64.sqrt()) / 2.0 * d_star).min(0.9 * (omega - prev));
        entries.push(Threshold {
            k: i + 1,
            omega,
            kappa,
            j: m,
            eps0,
        });
        prev = omega;
    }
    Ok(ThresholdTable { entries, d_star })
}

/// Threshold `N` alone.
pub fn threshold(geom: &RibbonGeometry, n: usize) -> Result<Threshold> {
    if n == 0 {
        return Err(Error::InvalidParameter("threshold index N must be ≥ 1".into()));
    }
    Ok(thresholds(geom, n)?.entries[n - 1])
}

/// Near-threshold window `ε₀` for threshold `N`.
pub fn eps0(geom: &RibbonGeometry, n: usize) -> Result<f64> {
    Ok(threshold(geom, n)?.eps0)
}

/// A propagating channel at a fixed energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Position in the ascending-κ enumeration, starting at 1.
    pub j: usize,
    /// Transverse integer `m` with `κ = π + π m / L`.
    pub m: i64,
    pub kappa: f64,
    pub lambda: f64,
    pub omega: f64,
}

/// Number of thresholds strictly below `omega`.
pub fn count_below(geom: &RibbonGeometry, omega: f64) -> usize {
    let reach = (geom.width * (omega.abs() / PI + 1.0)).ceil() as usize + 2;
    geom.labels_by_abs_kappa(2 * reach + 1)
        .into_iter()
        .filter(|&m| geom.kappa(m).abs() < omega)
        .count()
}

/// Propagating modes at energy `omega`, ascending in κ.
pub fn propagating_modes(geom: &RibbonGeometry, omega: f64) -> Result<Vec<ModeSpec>> {
    geom.validate()?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("energy must be positive, got {omega}")));
    }
    let reach = (geom.width * (omega / PI + 1.0)).ceil() as usize + 2;
    let labels = geom.labels_by_abs_kappa(2 * reach + 1);
    for (i, &m) in labels.iter().enumerate() {
        let t = geom.kappa(m).abs();
        if (t - omega).abs() <= THRESHOLD_TOL * omega.max(1.0) {
            return Err(Error::ThresholdCollision {
                omega,
                k: i + 1,
                threshold: t,
            });
        }
    }
    let mut ms: Vec<i64> = labels.into_iter().filter(|&m| geom.kappa(m).abs() < omega).collect();
    ms.sort_by(|a, b| geom.kappa(*a).partial_cmp(&geom.kappa(*b)).unwrap());
    Ok(ms
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let kappa = geom.kappa(m);
            ModeSpec {
                j: i + 1,
                m,
                kappa,
                lambda: ((omega - kappa) * (omega + kappa)).sqrt(),
                omega,
            }
        })
        .collect())
}

/// Quantities attached to `ω_ε = ω_N − ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearThresholdData {
    pub n: usize,
    pub eps: f64,
    pub omega_n: f64,
    pub kappa_n: f64,
    pub m_n: i64,
    pub omega_eps: f64,
    /// Purely imaginary root `λ_ε = i√ε√(2ω_N − ε)`.
    pub lambda_eps: C64,
    pub d: C64,
    pub sigma: f64,
    pub delta_sin: f64,
    /// Normalisation `𝒩 = 2√(L/ω_ε)`.
    pub cal_n: f64,
}

/// Near-threshold data for threshold `n` at offset `eps ∈ (0, ε₀]`.
pub fn near_threshold(geom: &RibbonGeometry, n: usize, eps: f64) -> Result<NearThresholdData> {
    let t = threshold(geom, n)?;
    if !(eps > 0.0 && eps <= t.eps0) {
        return Err(Error::EpsOutOfRange { eps, eps0: t.eps0, n });
    }
    Ok(near_threshold_unchecked(geom, &t, eps))
}

pub(crate) fn near_threshold_unchecked(geom: &RibbonGeometry, t: &Threshold, eps: f64) -> NearThresholdData {
    let a = eps.sqrt() * (2.0 * t.omega - eps).sqrt();
    let lambda_eps = C64::new(0.0, a);
    let one = C64::new(1.0, 0.0);
    let d = (lambda_eps + one) / (lambda_eps - one);
    let sigma = 2.0 * a.atan();
    let omega_eps = t.omega - eps;
    NearThresholdData {
        n: t.k,
        eps,
        omega_n: t.omega,
        kappa_n: t.kappa,
        m_n: t.j,
        omega_eps,
        lambda_eps,
        d,
        sigma,
        delta_sin: sigma.sin(),
        cal_n: 2.0 * (geom.width / omega_eps).sqrt(),
    }
}

/// Half-width `γ_N` of the strip holding the `2(N−1)` real and the two
/// imaginary wavenumbers at `ω_N − ε`.
pub fn strip_gamma(geom: &RibbonGeometry, n: usize, eps: f64) -> Result<f64> {
    let tab = thresholds(geom, n + 1)?;
    let t = tab.entries[n - 1];
    if !(eps >= 0.0 && eps <= t.eps0) {
        return Err(Error::EpsOutOfRange { eps, eps0: t.eps0, n });
    }
    let omega = t.omega - eps;
    let im_n = (eps * (2.0 * t.omega - eps)).sqrt();
    let next = tab.entries[n].omega;
    let im_next = ((next - omega) * (next + omega)).sqrt();
    Ok(0.5 * (im_n + (im_next - im_n)))
}

/// Row of a dispersion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub j: i64,
    pub kappa_sign: i8,
    pub lambda: f64,
    pub omega: f64,
}

/// Branches `ω = ±√(κ² + λ²)` for the `branch_count` lowest thresholds.
pub fn dispersion_curves(
    geom: &RibbonGeometry,
    lambda_grid: &[f64],
    branch_count: usize,
) -> Result<Vec<DispersionPoint>> {
    geom.validate()?;
    let mut rows = Vec::with_capacity(2 * lambda_grid.len() * branch_count);
    for m in geom.labels_by_abs_kappa(branch_count) {
        let kappa = geom.kappa(m);
        let sign = if kappa > 0.0 { 1 } else { -1 };
        for s in [1.0, -1.0] {
            for &lambda in lambda_grid {
                rows.push(DispersionPoint {
                    j: m,
                    kappa_sign: sign,
                    lambda,
                    omega: s * kappa.hypot(lambda),
                });
            }
        }
    }
    Ok(rows)
}
