//! SDE families with superlinear drift and diffusion.
//!
//! Every family has the scalar form `dx = a(t, x) dt + b(t, x) dW` on `[0, T]`:
//!
//! | family          | drift `a(t, x)`            | diffusion `b(t, x)`      |
//! |-----------------|----------------------------|--------------------------|
//! | `ExampleI`      | `k1 x - k2 x^2`            | `k3 x^{3/2} phi(x)`      |
//! | `ExampleII`     | `k1 x - k2 x^{2r-1}`       | `k3 x^r`                 |
//! | `ExampleIII`    | `k1 x - k2 x^q`            | `k3 x^r phi(x)`          |
//! | `Heston32Const` | `k1 x - k2 x^2`            | `k3 x^{3/2}`             |
//!
//! Fractional powers of a negative state are evaluated as `sign(x) |x|^p`. Only
//! the baseline schemes ever hand a negative state to these functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Shared scalar function used for user-supplied coefficient and `phi` hooks.
pub type Hook = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `sign(x) * |x|^p`.
#[inline]
pub fn signed_pow(x: f64, p: f64) -> f64 {
    if x < 0.0 {
        -(-x).powf(p)
    } else {
        x.powf(p)
    }
}

/// Time-dependent coefficient `k_i(t)`.
#[derive(Clone)]
pub enum CoefficientFn {
    Constant(f64),
    /// Piecewise-constant, left-continuous: `values[i]` holds on `(knots[i], knots[i+1]]`,
    /// `values[0]` also at and before `knots[0]`, the last value after the last knot.
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
    /// Arbitrary function of time. Bounds are supplied by the caller and used only
    /// for parameter validation.
    Hook {
        f: Hook,
        min: f64,
        max: f64,
    },
}

impl CoefficientFn {
    pub fn constant(value: f64) -> Self {
        CoefficientFn::Constant(value)
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::usage(
                "tabulated coefficient needs equally many knots and values (at least one)",
            ));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage(
                "tabulated coefficient knots must be strictly increasing",
            ));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::usage(
                "tabulated coefficient contains a non-finite entry",
            ));
        }
        Ok(CoefficientFn::Tabulated { knots, values })
    }

    pub fn hook(f: impl Fn(f64) -> f64 + Send + Sync + 'static, min: f64, max: f64) -> Self {
        CoefficientFn::Hook {
            f: Arc::new(f),
            min,
            max,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CoefficientFn::Constant(v) => *v,
            CoefficientFn::Tabulated { knots, values } => {
                let idx = knots.partition_point(|&k| k < t).saturating_sub(1);
                values[idx]
            }
            CoefficientFn::Hook { f, .. } => f(t),
        }
    }

    /// `(min, max)` over `[0, T]`; exact for constants and tables.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            CoefficientFn::Constant(v) => (*v, *v),
            CoefficientFn::Tabulated { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
            CoefficientFn::Hook { min, max, .. } => (*min, *max),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoefficientFn::Constant(v) => Some(*v),
            _ => None,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            CoefficientFn::Constant(v) => CoefficientFn::Constant(c * v),
            CoefficientFn::Tabulated { knots, values } => CoefficientFn::Tabulated {
                knots: knots.clone(),
                values: values.iter().map(|v| c * v).collect(),
            },
            CoefficientFn::Hook { f, min, max } => {
                let f = Arc::clone(f);
                let (lo, hi) = if c >= 0.0 {
                    (c * min, c * max)
                } else {
                    (c * max, c * min)
                };
                CoefficientFn::hook(move |t| c * f(t), lo, hi)
            }
        }
    }

    /// Pointwise `combine(self(t), other(t))`. Tables on identical knots stay tables;
    /// mixed representations fall back to a hook carrying `bounds`.
    fn zip_with(
        &self,
        other: &CoefficientFn,
        combine: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        bounds: (f64, f64),
    ) -> CoefficientFn {
        match (self, other) {
            (CoefficientFn::Constant(a), CoefficientFn::Constant(b)) => {
                CoefficientFn::Constant(combine(*a, *b))
            }
            (
                CoefficientFn::Tabulated {
                    knots: ka,
                    values: va,
                },
                CoefficientFn::Tabulated {
                    knots: kb,
                    values: vb,
                },
            ) if ka == kb => CoefficientFn::Tabulated {
                knots: ka.clone(),
                values: va.iter().zip(vb).map(|(a, b)| combine(*a, *b)).collect(),
            },
            _ => {
                let (a, b) = (self.clone(), other.clone());
                CoefficientFn::hook(move |t| combine(a.eval(t), b.eval(t)), bounds.0, bounds.1)
            }
        }
    }
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientFn::Constant(v) => write!(f, "Constant({v})"),
            CoefficientFn::Tabulated { knots, values } => f
                .debug_struct("Tabulated")
                .field("knots", knots)
                .field("values", values)
                .finish(),
            CoefficientFn::Hook { min, max, .. } => write!(f, "Hook(min = {min}, max = {max})"),
        }
    }
}

#[derive(Clone)]
pub enum PhiKind {
    One,
    Sin,
    Hook(Hook),
}

/// Bounded state modulation `phi(x)` in the diffusion of Examples I and III.
#[derive(Clone)]
pub struct PhiFn {
    pub kind: PhiKind,
    /// Global bound `K_phi` on `|phi|`, supplied by the caller.
    pub bound: f64,
    pub lipschitz_hint: Option<f64>,
}

impl PhiFn {
    pub fn one() -> Self {
        PhiFn {
            kind: PhiKind::One,
            bound: 1.0,
            lipschitz_hint: Some(0.0),
        }
    }

    pub fn sin() -> Self {
        PhiFn {
            kind: PhiKind::Sin,
            bound: 1.0,
            lipschitz_hint: Some(1.0),
        }
    }

    pub fn hook(f: impl Fn(f64) -> f64 + Send + Sync + 'static, bound: f64) -> Self {
        PhiFn {
            kind: PhiKind::Hook(Arc::new(f)),
            bound,
            lipschitz_hint: None,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            PhiKind::One => 1.0,
            PhiKind::Sin => x.sin(),
            PhiKind::Hook(f) => f(x),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self.kind, PhiKind::One)
    }
}

impl fmt::Debug for PhiFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            PhiKind::One => "one",
            PhiKind::Sin => "sin",
            PhiKind::Hook(_) => "hook",
        };
        f.debug_struct("PhiFn")
            .field("kind", &kind)
            .field("bound", &self.bound)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    ExampleI,
    ExampleII,
    ExampleIII,
    Heston32Const,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::ExampleI,
        Family::ExampleII,
        Family::ExampleIII,
        Family::Heston32Const,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ExampleI => "example1",
            Family::ExampleII => "example2",
            Family::ExampleIII => "example3",
            Family::Heston32Const => "heston32",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// An immutable SDE instance: family, coefficients, exponents, initial value and horizon.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    family: Family,
    pub k1: CoefficientFn,
    pub k2: CoefficientFn,
    pub k3: CoefficientFn,
    pub phi: PhiFn,
    /// Diffusion exponent of Examples II and III; 1.5 otherwise.
    pub r: f64,
    /// Drift exponent of Example III; 2 otherwise.
    pub q: i32,
    pub x0: f64,
    pub horizon: f64,
}

fn check_start(x0: f64, horizon: f64) -> Result<()> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::usage(format!(
            "x0 must be a positive finite real, got {x0}"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::usage(format!(
            "T must be a positive finite real, got {horizon}"
        )));
    }
    Ok(())
}

impl ModelSpec {
    /// Heston 3/2-model with constant coefficients.
    pub fn heston32(k1: f64, k2: f64, k3: f64, x0: f64, horizon: f64) -> Result<Self> {
        check_start(x0, horizon)?;
        if ![k1, k2, k3].iter().all(|k| k.is_finite()) {
            return Err(Error::usage("heston32 coefficients must be finite"));
        }
        Ok(ModelSpec {
            family: Family::Heston32Const,
            k1: CoefficientFn::Constant(k1),
            k2: CoefficientFn::Constant(k2),
            k3: CoefficientFn::Constant(k3),
            phi: PhiFn::one(),
            r: 1.5,
            q: 2,
            x0,
            horizon,
        })
    }

    pub fn example1(
        k1: CoefficientFn,
        k2: CoefficientFn,
        k3: CoefficientFn,
        phi: PhiFn,
        x0: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_start(x0, horizon)?;
        Ok(ModelSpec {
            family: Family::ExampleI,
            k1,
            k2,
            k3,
            phi,
            r: 1.5,
            q: 2,
            x0,
            horizon,
        })
    }

    /// Requires `1 < r < 3/2`.
    pub fn example2(
        k1: CoefficientFn,
        k2: CoefficientFn,
        k3: CoefficientFn,
        r: f64,
        x0: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_start(x0, horizon)?;
        if !(r > 1.0 && r < 1.5) {
            return Err(Error::usage(format!(
                "example2 requires 1 < r < 3/2, got r = {r}"
            )));
        }
        Ok(ModelSpec {
            family: Family::ExampleII,
            k1,
            k2,
            k3,
            phi: PhiFn::one(),
            r,
            q: 2,
            x0,
            horizon,
        })
    }

    /// Requires `3/2 < r < 2` and `q` odd.
    #[allow(clippy::too_many_arguments)]
    pub fn example3(
        k1: CoefficientFn,
        k2: CoefficientFn,
        k3: CoefficientFn,
        phi: PhiFn,
        r: f64,
        q: i32,
        x0: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_start(x0, horizon)?;
        if !(r > 1.5 && r < 2.0) {
            return Err(Error::usage(format!(
                "example3 requires 3/2 < r < 2, got r = {r}"
            )));
        }
        if q.rem_euclid(2) != 1 {
            return Err(Error::usage(format!(
                "example3 requires an odd q, got q = {q}"
            )));
        }
        Ok(ModelSpec {
            family: Family::ExampleIII,
            k1,
            k2,
            k3,
            phi,
            r,
            q,
            x0,
            horizon,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// `(k1, k2, k3)` when the model is the constant-coefficient 3/2 process
    /// (Heston32Const, or Example I with constant coefficients and `phi = 1`).
    pub fn heston_constants(&self) -> Option<(f64, f64, f64)> {
        let shaped = match self.family {
            Family::Heston32Const => true,
            Family::ExampleI => self.phi.is_one(),
            _ => false,
        };
        if !shaped {
            return None;
        }
        Some((
            self.k1.as_constant()?,
            self.k2.as_constant()?,
            self.k3.as_constant()?,
        ))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.horizon * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )))
        }
    }

    #[inline]
    pub(crate) fn drift_unchecked(&self, t: f64, x: f64) -> f64 {
        let (k1, k2) = (self.k1.eval(t), self.k2.eval(t));
        match self.family {
            Family::ExampleI | Family::Heston32Const => k1 * x - k2 * x * x,
            Family::ExampleII => k1 * x - k2 * signed_pow(x, 2.0 * self.r - 1.0),
            Family::ExampleIII => k1 * x - k2 * x.powi(self.q),
        }
    }

    #[inline]
    pub(crate) fn diffusion_unchecked(&self, t: f64, x: f64) -> f64 {
        let k3 = self.k3.eval(t);
        match self.family {
            Family::Heston32Const => k3 * signed_pow(x, 1.5),
            Family::ExampleI => k3 * signed_pow(x, 1.5) * self.phi.eval(x),
            Family::ExampleII => k3 * signed_pow(x, self.r),
            Family::ExampleIII => k3 * signed_pow(x, self.r) * self.phi.eval(x),
        }
    }

    /// Drift `a(t, x)`.
    pub fn eval_drift(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        let a = self.drift_unchecked(t, x);
        if a.is_finite() {
            Ok(a)
        } else {
            Err(Error::Overflow { t, x })
        }
    }

    /// Diffusion `b(t, x)`.
    pub fn eval_diffusion(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        let b = self.diffusion_unchecked(t, x);
        if b.is_finite() {
            Ok(b)
        } else {
            Err(Error::Overflow { t, x })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Ok,
    Warning,
    Violation,
}

/// One checked inequality `lhs > rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub condition: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub status: Severity,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.status == Severity::Ok
    }

    pub fn problems(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity != Severity::Ok)
    }
}

/// Relative margin under which a satisfied condition is reported as a warning.
pub const NEAR_BOUNDARY: f64 = 0.05;

fn strict_greater(condition: &'static str, lhs: f64, rhs: f64, what: &str) -> Finding {
    let severity = if !(lhs > rhs) {
        Severity::Violation
    } else if lhs - rhs < NEAR_BOUNDARY * rhs.abs() {
        Severity::Warning
    } else {
        Severity::Ok
    };
    let message = match severity {
        Severity::Ok => format!("{what}: {lhs} > {rhs}"),
        Severity::Warning => format!("{what}: {lhs} > {rhs} holds only within 5% of the boundary"),
        Severity::Violation => format!("{what}: {lhs} > {rhs} fails"),
    };
    Finding {
        condition,
        lhs,
        rhs,
        severity,
        message,
    }
}

fn abs_max(k: &CoefficientFn) -> f64 {
    let (lo, hi) = k.bounds();
    lo.abs().max(hi.abs())
}

/// Checks the parameter conditions under which the semi-discrete scheme's convergence
/// guarantees hold. Report-only: a violation never prevents simulation.
pub fn validate_parameters(model: &ModelSpec) -> ValidationReport {
    let k2_min = model.k2.bounds().0;
    let k3_max = abs_max(&model.k3);
    let mut findings = Vec::new();
    match model.family {
        Family::ExampleI | Family::Heston32Const => {
            let k_phi = if model.family == Family::Heston32Const {
                1.0
            } else {
                model.phi.bound
            };
            let rhs = 3.5 * (k_phi * k3_max).powi(2);
            findings.push(strict_greater(
                "k2_min > 7/2 (K_phi k3_max)^2",
                k2_min,
                rhs,
                "drift dominance",
            ));
        }
        Family::ExampleII => {
            let r = model.r;
            findings.push(strict_greater("r > 1", r, 1.0, "exponent lower bound"));
            findings.push(strict_greater("r < 3/2", 1.5, r, "exponent upper bound"));
            let rhs = (25.0 - 9.0 * r) / (r - 1.0) * k3_max * k3_max;
            findings.push(strict_greater(
                "2 k2_min > (25 - 9r)/(r - 1) k3_max^2",
                2.0 * k2_min,
                rhs,
                "drift dominance",
            ));
        }
        Family::ExampleIII => {
            let (r, q) = (model.r, model.q);
            findings.push(strict_greater("r > 3/2", r, 1.5, "exponent lower bound"));
            findings.push(strict_greater("r < 2", 2.0, r, "exponent upper bound"));
            let parity = f64::from(q.rem_euclid(2));
            findings.push(Finding {
                condition: "q odd",
                lhs: parity,
                rhs: 1.0,
                severity: if parity == 1.0 {
                    Severity::Ok
                } else {
                    Severity::Violation
                },
                message: format!("q = {q} must be odd"),
            });
            findings.push(strict_greater(
                "q > 2r - 1",
                f64::from(q),
                2.0 * r - 1.0,
                "drift exponent",
            ));
        }
    }
    let status = findings
        .iter()
        .map(|f| f.severity)
        .max()
        .unwrap_or(Severity::Ok);
    ValidationReport { status, findings }
}

/// Change of variables `z = x^{2r-2}` that maps an Example II model onto an
/// Example I model with `phi = 1`.
pub fn transform_example2(model: &ModelSpec) -> Result<ModelSpec> {
    if model.family != Family::ExampleII {
        return Err(Error::usage(format!(
            "transform_example2 needs an example2 model, got {}",
            model.family
        )));
    }
    let p = 2.0 * model.r - 2.0;
    // -(2r-2)(2r-3)/2, positive on 1 < r < 3/2
    let ito = -p * (p - 1.0) / 2.0;

    let (k2_lo, k2_hi) = model.k2.bounds();
    let (k3_lo, k3_hi) = model.k3.bounds();
    let k3_sq_min = if k3_lo <= 0.0 && k3_hi >= 0.0 {
        0.0
    } else {
        k3_lo.abs().min(k3_hi.abs()).powi(2)
    };
    let k3_sq_max = k3_lo.abs().max(k3_hi.abs()).powi(2);
    let big_k2 = model.k2.zip_with(
        &model.k3,
        move |k2, k3| p * k2 + ito * k3 * k3,
        (p * k2_lo + ito * k3_sq_min, p * k2_hi + ito * k3_sq_max),
    );

    Ok(ModelSpec {
        family: Family::ExampleI,
        k1: model.k1.scaled(p),
        k2: big_k2,
        k3: model.k3.scaled(p),
        phi: PhiFn::one(),
        r: 1.5,
        q: 2,
        x0: model.x0.powf(p),
        horizon: model.horizon,
    })
}

/// Maps a transformed state back: `z^{1/(2r-2)}`.
pub fn inverse_transform(z: f64, r: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!(
            "inverse transform needs z > 0, got {z}"
        )));
    }
    if !(r > 1.0 && r < 1.5) {
        return Err(Error::domain(format!(
            "inverse transform needs 1 < r < 3/2, got {r}"
        )));
    }
    Ok(z.powf(1.0 / (2.0 * r - 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    fn c(v: f64) -> CoefficientFn {
        CoefficientFn::constant(v)
    }

    #[test]
    fn heston_drift_examples() {
        let m = ModelSpec::heston32(1.0, 1000.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.eval_drift(0.0, 1.0).unwrap(), -999.0);
        assert_eq!(m.eval_drift(0.3, 0.0).unwrap(), 0.0);
        assert_eq!(m.eval_diffusion(0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn example2_drift_uses_2r_minus_1() {
        let m = ModelSpec::example2(c(1.0), c(1.0), c(1.0), 1.25, 1.0, 1.0).unwrap();
        let a = m.eval_drift(0.0, 2.0).unwrap();
        assert!((a - (2.0 - 2f64.powf(1.5))).abs() < 1e-15);
        assert!((a + 0.828427).abs() < 1e-6);
    }

    #[test]
    fn diffusion_examples() {
        let m = ModelSpec::heston32(0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.eval_diffusion(0.0, 4.0).unwrap(), 8.0);

        let m = ModelSpec::example1(c(1.0), c(10.0), c(1.0), PhiFn::sin(), 1.0, 1.0).unwrap();
        assert!((m.eval_diffusion(0.0, 1.0).unwrap() - 0.841471).abs() < 1e-6);
    }

    #[test]
    fn negative_state_uses_signed_power() {
        let m = ModelSpec::heston32(0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.eval_diffusion(0.0, -4.0).unwrap(), -8.0);
    }

    #[test]
    fn overflow_is_reported_with_location() {
        let m = ModelSpec::heston32(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let err = m.eval_drift(0.5, 1e200).unwrap_err();
        assert_eq!(err, Error::Overflow { t: 0.5, x: 1e200 });
    }

    #[test]
    fn time_outside_horizon_is_rejected() {
        let m = ModelSpec::heston32(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(m.eval_drift(1.5, 1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn tabulated_is_left_continuous() {
        let k = CoefficientFn::tabulated(vec![0.0, 0.5], vec![1.0, 2.0]).unwrap();
        assert_eq!(k.eval(0.0), 1.0);
        assert_eq!(k.eval(0.5), 1.0);
        assert_eq!(k.eval(0.5000001), 2.0);
        assert_eq!(k.eval(1.0), 2.0);
        assert_eq!(k.bounds(), (1.0, 2.0));
        assert!(CoefficientFn::tabulated(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn validate_heston_lambda_700_ok() {
        let m = ModelSpec::heston32(0.1, 70.0, 0.2f64.sqrt(), 1.0, 1.0).unwrap();
        assert!(validate_parameters(&m).is_ok());
    }

    #[test]
    fn validate_heston_lambda_7_flags_boundary() {
        let m = ModelSpec::heston32(0.1, 0.7, 0.2f64.sqrt(), 1.0, 1.0).unwrap();
        let report = validate_parameters(&m);
        assert_ne!(report.status, Severity::Ok);
    }

    #[test]
    fn validate_example2_violation() {
        let m = ModelSpec::example2(c(1.0), c(10.0), c(1.0), 1.25, 1.0, 1.0).unwrap();
        let report = validate_parameters(&m);
        assert_eq!(report.status, Severity::Violation);
        let f = report
            .findings
            .iter()
            .find(|f| f.condition.starts_with("2 k2_min"))
            .unwrap();
        assert_eq!(f.lhs, 20.0);
        assert!((f.rhs - 55.0).abs() < 1e-12);
    }

    #[test]
    fn validate_example3_conditions() {
        let m =
            ModelSpec::example3(c(1.0), c(1.0), c(1.0), PhiFn::one(), 1.75, 3, 1.0, 1.0).unwrap();
        assert!(validate_parameters(&m).is_ok());
        let m =
            ModelSpec::example3(c(1.0), c(1.0), c(1.0), PhiFn::one(), 1.75, 1, 1.0, 1.0).unwrap();
        assert_eq!(validate_parameters(&m).status, Severity::Violation);
        assert!(
            ModelSpec::example3(c(1.0), c(1.0), c(1.0), PhiFn::one(), 1.75, 4, 1.0, 1.0).is_err()
        );
    }

    #[test]
    fn validate_uses_phi_bound() {
        let weak = ModelSpec::example1(c(1.0), c(4.0), c(1.0), PhiFn::sin(), 1.0, 1.0).unwrap();
        assert!(validate_parameters(&weak).is_ok());
        let strong = ModelSpec::example1(
            c(1.0),
            c(4.0),
            c(1.0),
            PhiFn::hook(|x| 2.0 * x.cos(), 2.0),
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(validate_parameters(&strong).status, Severity::Violation);
    }

    #[test]
    fn transform_constants() {
        let m = ModelSpec::example2(c(1.0), c(10.0), c(1.0), 1.25, 4.0, 1.0).unwrap();
        let z = transform_example2(&m).unwrap();
        assert_eq!(z.family(), Family::ExampleI);
        assert_eq!(z.k1.as_constant(), Some(0.5));
        assert!((z.k2.as_constant().unwrap() - 5.125).abs() < 1e-15);
        assert_eq!(z.k3.as_constant(), Some(0.5));
        assert_eq!(z.x0, 2.0);
        assert!(z.phi.is_one());
    }

    #[test]
    fn transform_near_three_halves_keeps_k2() {
        let m = ModelSpec::example2(c(1.0), c(10.0), c(7.0), 1.5 - 1e-12, 1.0, 1.0).unwrap();
        let z = transform_example2(&m).unwrap();
        let p = 2.0 * m.r - 2.0;
        assert!(close(z.k2.as_constant().unwrap() / p, 10.0, 1e-9));
    }

    #[test]
    fn transform_rejects_other_families() {
        let m = ModelSpec::heston32(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(transform_example2(&m), Err(Error::Usage(_))));
    }

    #[test]
    fn transform_of_tables_on_shared_knots_stays_tabulated() {
        let knots = vec![0.0, 0.5];
        let m = ModelSpec::example2(
            CoefficientFn::tabulated(knots.clone(), vec![1.0, 2.0]).unwrap(),
            CoefficientFn::tabulated(knots.clone(), vec![10.0, 20.0]).unwrap(),
            CoefficientFn::tabulated(knots, vec![1.0, 1.0]).unwrap(),
            1.25,
            1.0,
            1.0,
        )
        .unwrap();
        let z = transform_example2(&m).unwrap();
        assert!(matches!(z.k2, CoefficientFn::Tabulated { .. }));
        assert!((z.k2.eval(0.9) - (0.5 * 20.0 + 0.125)).abs() < 1e-14);
    }

    #[test]
    fn inverse_transform_examples() {
        assert_eq!(inverse_transform(2.0, 1.25).unwrap(), 4.0);
        assert_eq!(inverse_transform(1.0, 1.37).unwrap(), 1.0);
        let x: f64 = 3.7;
        let back = inverse_transform(x.powf(0.4), 1.2).unwrap();
        assert!(close(back, x, 1e-14));
        assert!(matches!(
            inverse_transform(0.0, 1.25),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            inverse_transform(-1.0, 1.25),
            Err(Error::Domain(_))
        ));
    }
}
