//! Free wave families of the Dirac system on the strip and the operator itself.
//!
//! A field here is a 4-spinor `(u, v, u', v')` of `(x, y)`. Every wave family
//! is a finite sum of [`ModeTerm`]s, each of the form
//! `e^{iλx}(c0 + x·c1)` multiplied componentwise by
//! `(e^{iκy}, e^{iκy}, e^{−iκy}, e^{−iκy})`, so values and derivatives are
//! available in closed form.

use crate::quadrature::{GaussRule, RectRule};
use crate::spectrum::{self, NearThresholdData, RibbonGeometry};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub type Spinor = [C64; 4];

pub const ZERO: Spinor = [C64::new(0.0, 0.0); 4];
const I: C64 = C64::new(0.0, 1.0);

/// Finite-difference step for fields without closed-form derivatives.
pub const FD_STEP: f64 = 1e-5;

pub fn add(a: Spinor, b: Spinor) -> Spinor {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn sub(a: Spinor, b: Spinor) -> Spinor {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn scale(c: C64, a: Spinor) -> Spinor {
    [c * a[0], c * a[1], c * a[2], c * a[3]]
}

pub fn norm_max(a: &Spinor) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm_sqr(a: &Spinor) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Direction label `τ = ±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tau {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Tau {
    pub fn sign(self) -> f64 {
        match self {
            Tau::Plus => 1.0,
            Tau::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Tau {
        match self {
            Tau::Plus => Tau::Minus,
            Tau::Minus => Tau::Plus,
        }
    }

    pub fn both() -> [Tau; 2] {
        [Tau::Plus, Tau::Minus]
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tau::Plus => "+",
            Tau::Minus => "-",
        })
    }
}

impl std::str::FromStr for Tau {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "p" => Ok(Tau::Plus),
            "-" | "minus" | "m" => Ok(Tau::Minus),
            _ => Err(Error::InvalidParameter(format!("direction must be + or -, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `w_j^τ`, real `λ_j`.
    Oscillatory,
    /// `𝐰_j^τ = √ω / (2√(L λ_j)) · w_j^τ`.
    OscillatoryNormalized,
    /// `w_N^0` at `ω = ω_N`.
    Threshold0,
    /// `w_N^1 = x·w_N^0 + ω_N^{-1}(0, i e^{iκy}, 0, −e^{−iκy})`.
    Threshold1,
    /// `w_N^±` with `λ = ±λ_ε` at `ω_ε = ω_N − ε`.
    NearExpRaw,
    /// `(w_N^+ + w_N^−)/2`.
    NearExpAnalyticPlus,
    /// `(w_N^+ − w_N^−)/(2λ_ε)`.
    NearExpAnalyticMinus,
    /// `𝐰_N^± = (w^{ε+} ± w^{ε−}) / 𝒩`.
    NearExpNormalized,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Oscillatory,
        Family::OscillatoryNormalized,
        Family::Threshold0,
        Family::Threshold1,
        Family::NearExpRaw,
        Family::NearExpAnalyticPlus,
        Family::NearExpAnalyticMinus,
        Family::NearExpNormalized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Oscillatory => "oscillatory",
            Family::OscillatoryNormalized => "oscillatory_normalized",
            Family::Threshold0 => "threshold0",
            Family::Threshold1 => "threshold1",
            Family::NearExpRaw => "near_exp_raw",
            Family::NearExpAnalyticPlus => "near_exp_analytic_plus",
            Family::NearExpAnalyticMinus => "near_exp_analytic_minus",
            Family::NearExpNormalized => "near_exp_normalized",
        }
    }

    fn needs_tau(self) -> bool {
        matches!(
            self,
            Family::Oscillatory | Family::OscillatoryNormalized | Family::NearExpRaw | Family::NearExpNormalized
        )
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown wave family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveLabel {
    pub family: Family,
    pub j: usize,
    pub tau: Option<Tau>,
}

impl WaveLabel {
    pub fn new(family: Family, j: usize, tau: Option<Tau>) -> Self {
        WaveLabel { family, j, tau }
    }
}

/// Energy regime a wave is built in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    /// Fixed energy `ω`.
    Omega(f64),
    /// `ω_ε = ω_N − ε`; `ε = 0` means exactly on threshold `N`.
    Near { n: usize, eps: f64 },
}

/// `e^{iλx}(c0 + x c1) ⊙ (e^{iκy}, e^{iκy}, e^{−iκy}, e^{−iκy})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTerm {
    pub lambda: C64,
    pub kappa: f64,
    pub c0: Spinor,
    pub c1: Spinor,
}

impl ModeTerm {
    /// Transverse profile of a free wave with longitudinal number `λ` at energy `ω`.
    pub fn free(kappa: f64, lambda: C64, omega: f64) -> Self {
        let r = -(lambda + I * kappa) / omega;
        ModeTerm {
            lambda,
            kappa,
            c0: [C64::new(1.0, 0.0), r, -I, I * r],
            c1: ZERO,
        }
    }

    /// A profile with `u`-amplitude `a` and `v`-amplitude `b` satisfying the
    /// edge conditions (`c3 = −i a`, `c4 = i b`).
    pub fn transverse(kappa: f64, lambda: C64, a: C64, b: C64) -> Self {
        ModeTerm {
            lambda,
            kappa,
            c0: [a, b, -I * a, I * b],
            c1: ZERO,
        }
    }

    fn phases(&self, x: f64, y: f64) -> (C64, C64, C64) {
        let ex = (I * self.lambda * x).exp();
        let ey = C64::from_polar(1.0, self.kappa * y);
        (ex, ey, ey.conj())
    }

    pub fn eval(&self, x: f64, y: f64) -> Spinor {
        let (ex, ep, em) = self.phases(x, y);
        let f = |k: usize| self.c0[k] + self.c1[k] * x;
        [ex * ep * f(0), ex * ep * f(1), ex * em * f(2), ex * em * f(3)]
    }

    pub fn dx(&self, x: f64, y: f64) -> Spinor {
        let (ex, ep, em) = self.phases(x, y);
        let il = I * self.lambda;
        let f = |k: usize| il * (self.c0[k] + self.c1[k] * x) + self.c1[k];
        [ex * ep * f(0), ex * ep * f(1), ex * em * f(2), ex * em * f(3)]
    }

    pub fn dy(&self, x: f64, y: f64) -> Spinor {
        let v = self.eval(x, y);
        let ik = I * self.kappa;
        [ik * v[0], ik * v[1], -ik * v[2], -ik * v[3]]
    }

    pub fn scaled(mut self, c: C64) -> Self {
        self.c0 = scale(c, self.c0);
        self.c1 = scale(c, self.c1);
        self
    }

    /// Image under `(u, v, u', v') ↦ (ū', v̄', ū, v̄)`.
    pub fn t1(&self) -> Self {
        let c = |s: &Spinor| [s[2].conj(), s[3].conj(), s[0].conj(), s[1].conj()];
        ModeTerm {
            lambda: -self.lambda.conj(),
            kappa: self.kappa,
            c0: c(&self.c0),
            c1: c(&self.c1),
        }
    }

    /// Image under `(u, v, u', v') ↦ (e^{i2πL}ū, −e^{i2πL}v̄, −ū', v̄')` at `L − y`.
    pub fn t3(&self, width: f64) -> Self {
        let p = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * width - self.kappa * width);
        let q = C64::from_polar(1.0, self.kappa * width);
        let c = |s: &Spinor| [p * s[0].conj(), -p * s[1].conj(), -q * s[2].conj(), q * s[3].conj()];
        ModeTerm {
            lambda: -self.lambda.conj(),
            kappa: self.kappa,
            c0: c(&self.c0),
            c1: c(&self.c1),
        }
    }

    /// Image under `(u, v, u', v') ↦ (u, −v, u', −v')`, which maps `ω` to `−ω`.
    pub fn negate_energy(&self) -> Self {
        let c = |s: &Spinor| [s[0], -s[1], s[2], -s[3]];
        ModeTerm {
            c0: c(&self.c0),
            c1: c(&self.c1),
            ..*self
        }
    }
}

type Envelope = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;
type PointFn = Arc<dyn Fn(f64, f64) -> Spinor + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Terms(Vec<ModeTerm>),
    /// `g(x)·Σ terms`; the envelope returns `(g, g')`.
    Enveloped(Envelope, Vec<ModeTerm>),
    Composite(PointFn),
}

/// A 4-spinor field on the strip.
#[derive(Clone)]
pub struct SpinorField {
    repr: Repr,
    pub omega: f64,
    pub geom: RibbonGeometry,
    pub label: Option<WaveLabel>,
}

impl fmt::Debug for SpinorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Terms(t) => format!("terms({})", t.len()),
            Repr::Enveloped(_, t) => format!("enveloped({})", t.len()),
            Repr::Composite(_) => "composite".to_string(),
        };
        f.debug_struct("SpinorField")
            .field("repr", &kind)
            .field("omega", &self.omega)
            .field("label", &self.label)
            .finish()
    }
}

fn sum_terms(terms: &[ModeTerm], f: impl Fn(&ModeTerm) -> Spinor) -> Spinor {
    terms.iter().fold(ZERO, |acc, t| add(acc, f(t)))
}

fn fd<F: Fn(f64) -> Spinor>(f: F, t: f64, h: f64) -> Spinor {
    let (a, b, c, d) = (f(t + 2.0 * h), f(t + h), f(t - h), f(t - 2.0 * h));
    let mut out = ZERO;
    for k in 0..4 {
        out[k] = (-a[k] + 8.0 * b[k] - 8.0 * c[k] + d[k]) / (12.0 * h);
    }
    out
}

impl SpinorField {
    pub fn from_terms(terms: Vec<ModeTerm>, omega: f64, geom: RibbonGeometry) -> Self {
        SpinorField {
            repr: Repr::Terms(terms),
            omega,
            geom,
            label: None,
        }
    }

    /// Arbitrary field; derivatives by 4th-order central differences.
    pub fn from_fn<F>(f: F, omega: f64, geom: RibbonGeometry) -> Self
    where
        F: Fn(f64, f64) -> Spinor + Send + Sync + 'static,
    {
        SpinorField {
            repr: Repr::Composite(Arc::new(f)),
            omega,
            geom,
            label: None,
        }
    }

    pub fn zero(omega: f64, geom: RibbonGeometry) -> Self {
        Self::from_terms(Vec::new(), omega, geom)
    }

    /// Multiply a term-based field by an x-envelope `g` given as `x ↦ (g, g')`.
    pub fn with_envelope<G>(&self, g: G) -> Self
    where
        G: Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    {
        let repr = match &self.repr {
            Repr::Terms(t) => Repr::Enveloped(Arc::new(g), t.clone()),
            Repr::Enveloped(h, t) => {
                let h = h.clone();
                Repr::Enveloped(
                    Arc::new(move |x| {
                        let (a, da) = g(x);
                        let (b, db) = h(x);
                        (a * b, da * b + a * db)
                    }),
                    t.clone(),
                )
            }
            Repr::Composite(f) => {
                let f = f.clone();
                Repr::Composite(Arc::new(move |x, y| scale(C64::new(g(x).0, 0.0), f(x, y))))
            }
        };
        SpinorField {
            repr,
            omega: self.omega,
            geom: self.geom,
            label: None,
        }
    }

    pub fn terms(&self) -> Option<&[ModeTerm]> {
        match &self.repr {
            Repr::Terms(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.repr, Repr::Composite(_))
    }

    pub fn eval(&self, x: f64, y: f64) -> Spinor {
        match &self.repr {
            Repr::Terms(t) => sum_terms(t, |m| m.eval(x, y)),
            Repr::Enveloped(g, t) => scale(C64::new(g(x).0, 0.0), sum_terms(t, |m| m.eval(x, y))),
            Repr::Composite(f) => f(x, y),
        }
    }

    pub fn dx(&self, x: f64, y: f64) -> Spinor {
        match &self.repr {
            Repr::Terms(t) => sum_terms(t, |m| m.dx(x, y)),
            Repr::Enveloped(g, t) => {
                let (g0, g1) = g(x);
                let v = sum_terms(t, |m| m.eval(x, y));
                let d = sum_terms(t, |m| m.dx(x, y));
                add(scale(C64::new(g1, 0.0), v), scale(C64::new(g0, 0.0), d))
            }
            Repr::Composite(f) => fd(|s| f(s, y), x, FD_STEP),
        }
    }

    pub fn dy(&self, x: f64, y: f64) -> Spinor {
        match &self.repr {
            Repr::Terms(t) => sum_terms(t, |m| m.dy(x, y)),
            Repr::Enveloped(g, t) => scale(C64::new(g(x).0, 0.0), sum_terms(t, |m| m.dy(x, y))),
            Repr::Composite(f) => fd(|s| f(x, s), y, FD_STEP),
        }
    }

    /// Same field with derivatives forced through finite differences.
    pub fn as_composite(&self) -> Self {
        let me = self.clone();
        Self::from_fn(move |x, y| me.eval(x, y), self.omega, self.geom)
    }

    /// `𝒟w` at a point.
    pub fn apply_dirac(&self, x: f64, y: f64) -> Spinor {
        dirac_from_derivatives(&self.dx(x, y), &self.dy(x, y))
    }

    /// `(𝒟 − ω)w` at a point.
    pub fn residual(&self, x: f64, y: f64) -> Spinor {
        sub(
            self.apply_dirac(x, y),
            scale(C64::new(self.omega, 0.0), self.eval(x, y)),
        )
    }

    /// Max modulus of the four edge-condition expressions over `x_samples`.
    pub fn bc_residual(&self, x_samples: &[f64]) -> f64 {
        bc_residual(self, x_samples)
    }

    /// `Σ c_k w_k`; stays term-based when every input is.
    pub fn combine(parts: &[(C64, &SpinorField)]) -> Self {
        let first = parts.first().expect("at least one field");
        let (omega, geom) = (first.1.omega, first.1.geom);
        if parts.iter().all(|(_, f)| f.terms().is_some()) {
            let terms = parts
                .iter()
                .flat_map(|(c, f)| f.terms().unwrap().iter().map(move |t| t.scaled(*c)))
                .collect();
            return Self::from_terms(terms, omega, geom);
        }
        let owned: Vec<(C64, SpinorField)> = parts.iter().map(|(c, f)| (*c, (*f).clone())).collect();
        Self::from_fn(
            move |x, y| owned.iter().fold(ZERO, |acc, (c, f)| add(acc, scale(*c, f.eval(x, y)))),
            omega,
            geom,
        )
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = Self::combine(&[(c, self)]);
        out.label = self.label;
        out
    }

    fn map_terms(
        &self,
        f: impl Fn(&ModeTerm) -> ModeTerm,
        p: impl Fn(Spinor, f64, f64) -> Spinor + Send + Sync + 'static,
        omega: f64,
    ) -> Self {
        match &self.repr {
            Repr::Terms(t) => Self::from_terms(t.iter().map(f).collect(), omega, self.geom),
            _ => {
                let me = self.clone();
                Self::from_fn(move |x, y| p(me.eval(x, y), x, y), omega, self.geom)
            }
        }
    }

    /// `T1 w = (ū', v̄', ū, v̄)`.
    pub fn t1(&self) -> Self {
        match &self.repr {
            Repr::Terms(_) => self.map_terms(ModeTerm::t1, |s, _, _| s, self.omega),
            _ => {
                let me = self.clone();
                Self::from_fn(
                    move |x, y| {
                        let s = me.eval(x, y);
                        [s[2].conj(), s[3].conj(), s[0].conj(), s[1].conj()]
                    },
                    self.omega,
                    self.geom,
                )
            }
        }
    }

    /// `T3 w = (e^{i2πL}ū, −e^{i2πL}v̄, −ū', v̄')(x, L − y)`.
    pub fn t3(&self) -> Self {
        let l = self.geom.width;
        match &self.repr {
            Repr::Terms(_) => self.map_terms(|t| t.t3(l), |s, _, _| s, self.omega),
            _ => {
                let me = self.clone();
                let p = self.geom.fold_phase();
                Self::from_fn(
                    move |x, y| {
                        let s = me.eval(x, l - y);
                        [p * s[0].conj(), -p * s[1].conj(), -s[2].conj(), s[3].conj()]
                    },
                    self.omega,
                    self.geom,
                )
            }
        }
    }

    /// Solution at `−ω` obtained from `(u, −v, u', −v')`.
    pub fn negate_energy(&self) -> Self {
        self.map_terms(
            ModeTerm::negate_energy,
            |s, _, _| [s[0], -s[1], s[2], -s[3]],
            -self.omega,
        )
    }
}

/// `𝒟w` from the first derivatives of `w`.
pub fn dirac_from_derivatives(dx: &Spinor, dy: &Spinor) -> Spinor {
    [
        I * dx[1] + dy[1],
        I * dx[0] - dy[0],
        -I * dx[3] + dy[3],
        -I * dx[2] - dy[2],
    ]
}

/// Max modulus of the edge conditions
/// `u − iu' = 0`, `−iv + v' = 0` at `y = 0` and
/// `e^{−i2πL}u − iu' = 0`, `−ie^{−i2πL}v + v' = 0` at `y = L`.
pub fn bc_residual(w: &SpinorField, x_samples: &[f64]) -> f64 {
    let l = w.geom.width;
    let ph = w.geom.fold_phase().conj();
    let mut worst: f64 = 0.0;
    for &x in x_samples {
        let a = w.eval(x, 0.0);
        let b = w.eval(x, l);
        let r = [
            a[0] - I * a[2],
            -I * a[1] + a[3],
            ph * b[0] - I * b[2],
            -I * ph * b[1] + b[3],
        ];
        worst = worst.max(norm_max(&r));
    }
    worst
}

/// Normalisation `√ω / (2√(L|λ|))` of a propagating wave.
pub fn oscillatory_norm(width: f64, lambda: f64, omega: f64) -> f64 {
    omega.abs().sqrt() / (2.0 * (width * lambda.abs()).sqrt())
}

/// Weights `(p, m)` with `𝐰_N^+ = p·w_N^+ + m·w_N^−` and `𝐰_N^− = m·w_N^+ + p·w_N^−`.
pub fn near_exp_weights(nt: &NearThresholdData) -> (C64, C64) {
    let inv = C64::new(1.0, 0.0) / nt.lambda_eps;
    let c = 0.5 / nt.cal_n;
    ((1.0 + inv) * c, (1.0 - inv) * c)
}

fn mismatch(msg: String) -> Error {
    Error::RegimeMismatch(msg)
}

/// Build a wave of the given family.
pub fn make_wave(label: WaveLabel, geom: &RibbonGeometry, regime: Regime) -> Result<SpinorField> {
    geom.validate()?;
    if label.family.needs_tau() && label.tau.is_none() {
        return Err(Error::InvalidParameter(format!(
            "family {} needs a direction",
            label.family.name()
        )));
    }
    let tau = label.tau.unwrap_or(Tau::Plus);
    let terms: Vec<ModeTerm>;
    let omega;
    match label.family {
        Family::Oscillatory | Family::OscillatoryNormalized => {
            omega = match regime {
                Regime::Omega(w) => w,
                Regime::Near { n, eps } => spectrum::threshold(geom, n)?.omega - eps,
            };
            let modes = spectrum::propagating_modes(geom, omega)?;
            let m = modes.get(label.j.wrapping_sub(1)).ok_or_else(|| {
                mismatch(format!(
                    "no propagating mode j = {} at omega = {omega} ({} available)",
                    label.j,
                    modes.len()
                ))
            })?;
            let mut t = ModeTerm::free(m.kappa, C64::new(tau.sign() * m.lambda, 0.0), omega);
            if label.family == Family::OscillatoryNormalized {
                t = t.scaled(C64::new(oscillatory_norm(geom.width, m.lambda, omega), 0.0));
            }
            terms = vec![t];
        }
        Family::Threshold0 | Family::Threshold1 => {
            let n = match regime {
                Regime::Near { n, eps } if eps == 0.0 => n,
                Regime::Near { eps, .. } => return Err(mismatch(format!("threshold waves need eps = 0, got {eps}"))),
                Regime::Omega(w) => {
                    let tab = spectrum::thresholds(geom, spectrum::count_below(geom, w) + 1)?;
                    let t = tab.entries.last().unwrap();
                    if (t.omega - w).abs() > spectrum::THRESHOLD_TOL * w.max(1.0) {
                        return Err(mismatch(format!("omega = {w} is not a threshold")));
                    }
                    t.k
                }
            };
            if label.j != n && label.j != 0 {
                return Err(mismatch(format!("threshold waves exist only for j = N = {n}")));
            }
            let t = spectrum::threshold(geom, n)?;
            omega = t.omega;
            let s = t.kappa.signum();
            let w0 = ModeTerm {
                lambda: C64::new(0.0, 0.0),
                kappa: t.kappa,
                c0: [C64::new(1.0, 0.0), -I * s, -I, C64::new(s, 0.0)],
                c1: ZERO,
            };
            terms = if label.family == Family::Threshold0 {
                vec![w0]
            } else {
                let inv = 1.0 / t.omega;
                vec![ModeTerm {
                    c0: [C64::new(0.0, 0.0), I * inv, C64::new(0.0, 0.0), C64::new(-inv, 0.0)],
                    c1: w0.c0,
                    ..w0
                }]
            };
        }
        _ => {
            let (n, eps) = match regime {
                Regime::Near { n, eps } if eps > 0.0 => (n, eps),
                _ => {
                    return Err(mismatch(format!(
                        "family {} needs a near-threshold regime with eps > 0",
                        label.family.name()
                    )))
                }
            };
            if label.j != n && label.j != 0 {
                return Err(mismatch(format!("exponential waves exist only for j = N = {n}")));
            }
            let t = spectrum::threshold(geom, n)?;
            let nt = spectrum::near_threshold_unchecked(geom, &t, eps);
            omega = nt.omega_eps;
            let wp = ModeTerm::free(t.kappa, nt.lambda_eps, omega);
            let wm = ModeTerm::free(t.kappa, -nt.lambda_eps, omega);
            let half = C64::new(0.5, 0.0);
            let inv = half / nt.lambda_eps;
            terms = match label.family {
                Family::NearExpRaw => vec![if tau == Tau::Plus { wp } else { wm }],
                Family::NearExpAnalyticPlus => vec![wp.scaled(half), wm.scaled(half)],
                Family::NearExpAnalyticMinus => vec![wp.scaled(inv), wm.scaled(-inv)],
                _ => {
                    let (p, m) = near_exp_weights(&nt);
                    match tau {
                        Tau::Plus => vec![wp.scaled(p), wm.scaled(m)],
                        Tau::Minus => vec![wp.scaled(m), wm.scaled(p)],
                    }
                }
            };
        }
    }
    let mut f = SpinorField::from_terms(terms, omega, *geom);
    f.label = Some(label);
    Ok(f)
}

/// The `2N` normalised waves at `ω_N − ε` in the order `(1,+), (1,−), …, (N,+), (N,−)`.
pub fn normalized_basis(geom: &RibbonGeometry, n: usize, eps: f64) -> Result<Vec<(usize, Tau, SpinorField)>> {
    spectrum::near_threshold(geom, n, eps)?;
    let regime = Regime::Near { n, eps };
    let mut out = Vec::with_capacity(2 * n);
    for j in 1..=n {
        let family = if j < n {
            Family::OscillatoryNormalized
        } else {
            Family::NearExpNormalized
        };
        for tau in Tau::both() {
            out.push((j, tau, make_wave(WaveLabel::new(family, j, Some(tau)), geom, regime)?));
        }
    }
    Ok(out)
}

/// Result of the norm identity check `∫|𝒟w|² = ∫Σ|∇w_k|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of the norm identity over `[x0, x1] × [0, L]` by Gauss–Legendre
/// quadrature with `nx × ny` nodes.
pub fn norm_identity_gap(w: &SpinorField, x0: f64, x1: f64, nx: usize, ny: usize) -> NormIdentity {
    let panels = |n: usize| (n / 16).max(1);
    let rule = RectRule::new(
        GaussRule::composite(panels(nx), nx / panels(nx), x0, x1),
        GaussRule::composite(panels(ny), ny / panels(ny), 0.0, w.geom.width),
    );
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (x, y, wt) in rule.points() {
        let dx = w.dx(x, y);
        let dy = w.dy(x, y);
        lhs += wt * norm_sqr(&dirac_from_derivatives(&dx, &dy));
        rhs += wt * (norm_sqr(&dx) + norm_sqr(&dy));
    }
    NormIdentity {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    }
}
