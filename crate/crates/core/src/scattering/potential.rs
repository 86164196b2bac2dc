//! Separable Gaussian potentials with tail truncation.

use crate::quadrature::GaussRule;
use crate::spectrum::RibbonGeometry;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// `amp · e^{−((x−x0)/sx)²} · e^{−((y−y0)/sy)²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amp: f64,
    pub x0: f64,
    pub sx: f64,
    pub y0: f64,
    pub sy: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TRUNCATION_TOL
}

/// Real potential `P = Σ terms`, entering the operator as `δ·P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(rename = "L")]
    pub width: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub delta: f64,
    pub terms: Vec<GaussianTerm>,
    #[serde(skip, default = "default_tol")]
    pub truncation_tol: f64,
}

impl PotentialSpec {
    pub fn new(geom: &RibbonGeometry, delta: f64, terms: Vec<GaussianTerm>) -> Self {
        PotentialSpec {
            width: geom.width,
            r0: geom.r0,
            delta,
            terms,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
        }
    }

    pub fn zero(geom: &RibbonGeometry) -> Self {
        Self::new(geom, 0.0, Vec::new())
    }

    pub fn geometry(&self) -> Result<RibbonGeometry> {
        RibbonGeometry::new(self.width, self.r0)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be finite".into()));
        }
        for t in &self.terms {
            if !(t.sx > 0.0 && t.sy > 0.0) || ![t.amp, t.x0, t.y0].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidParameter(format!("bad potential term {t:?}")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: PotentialSpec = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("potential serialises")
    }

    /// Number of widths beyond which a Gaussian factor is below the tolerance.
    pub fn cut(&self) -> f64 {
        (1.0 / self.truncation_tol).ln().sqrt()
    }

    /// x-factor of term `t`, including truncation and the `|x| ≤ R0` clip.
    pub fn x_factor(&self, t: &GaussianTerm, x: f64) -> f64 {
        let s = (x - t.x0) / t.sx;
        if x.abs() > self.r0 || s.abs() > self.cut() {
            0.0
        } else {
            (-s * s).exp()
        }
    }

    /// y-range `[a, b] ⊂ [0, L]` where the y-factor of `t` is kept.
    pub fn y_range(&self, t: &GaussianTerm) -> Option<(f64, f64)> {
        let c = self.cut() * t.sy;
        let a = (t.y0 - c).max(0.0);
        let b = (t.y0 + c).min(self.width);
        (a < b).then_some((a, b))
    }

    pub fn y_factor(&self, t: &GaussianTerm, y: f64) -> f64 {
        match self.y_range(t) {
            Some((a, b)) if y >= a && y <= b => {
                let s = (y - t.y0) / t.sy;
                (-s * s).exp()
            }
            _ => 0.0,
        }
    }

    /// `P(x, y)` (without the factor δ).
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amp * self.x_factor(t, x) * self.y_factor(t, y))
            .sum()
    }

    /// x-interval outside of which `P` vanishes identically.
    pub fn x_support(&self) -> Option<(f64, f64)> {
        let c = self.cut();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in self.terms.iter().filter(|t| t.amp != 0.0 && self.y_range(t).is_some()) {
            lo = lo.min((t.x0 - c * t.sx).max(-self.r0));
            hi = hi.max((t.x0 + c * t.sx).min(self.r0));
        }
        (lo < hi).then_some((lo, hi))
    }

    pub fn is_zero(&self) -> bool {
        self.delta == 0.0 || self.x_support().is_none()
    }

    /// `(1/L)∫₀ᴸ e^{−((y−y0)/sy)²} cos(πΔy/L) dy` over the kept y-range.
    pub fn transverse_coefficient(&self, t: &GaussianTerm, dm: i64) -> f64 {
        let Some((a, b)) = self.y_range(t) else {
            return 0.0;
        };
        let k = std::f64::consts::PI * dm as f64 / self.width;
        let rule = GaussRule::composite(16, 16, a, b);
        rule.integrate(|y| {
            let s = (y - t.y0) / t.sy;
            (-s * s).exp() * (k * y).cos()
        }) / self.width
    }

    /// Grid estimate of `sup|P|` over the support box.
    pub fn sup_norm(&self) -> f64 {
        let Some((lo, hi)) = self.x_support() else {
            return 0.0;
        };
        let (nx, ny) = (400, 120);
        let mut m: f64 = 0.0;
        for i in 0..=nx {
            let x = lo + (hi - lo) * i as f64 / nx as f64;
            for j in 0..=ny {
                m = m.max(self.eval(x, self.width * j as f64 / ny as f64).abs());
            }
        }
        // Include term centres, where maxima of well-separated bumps sit.
        for t in &self.terms {
            m = m.max(self.eval(t.x0, t.y0.clamp(0.0, self.width)).abs());
        }
        m
    }

    /// Rescale so that `sup|P| ≤ 1`, folding the factor into δ.
    pub fn normalized(&self) -> Self {
        let s = self.sup_norm();
        let mut out = self.clone();
        if s > 1.0 {
            for t in &mut out.terms {
                t.amp /= s;
            }
            out.delta *= s;
        }
        out
    }

    /// `P(x, L − y) = P(x, y)` holds to `tol` on a sample grid.
    pub fn y_asymmetry(&self) -> f64 {
        let Some((lo, hi)) = self.x_support() else {
            return 0.0;
        };
        let mut m: f64 = 0.0;
        for i in 0..=50 {
            let x = lo + (hi - lo) * i as f64 / 50.0;
            for j in 0..=40 {
                let y = self.width * j as f64 / 40.0;
                m = m.max((self.eval(x, y) - self.eval(x, self.width - y)).abs());
            }
        }
        m
    }

    /// Same potential with a different δ.
    pub fn with_delta(&self, delta: f64) -> Self {
        PotentialSpec { delta, ..self.clone() }
    }

    /// Multiply every amplitude by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.amp *= c;
        }
        out
    }
}
