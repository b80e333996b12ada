//! One-step update rules and the path simulator.
//!
//! * `SD`: semi-discrete exponential update. The coefficients of the within-step linear
//!   SDE are frozen at the left endpoint, giving
//!   `y_{n+1} = y_n exp{(k1 - k2 g(y_n) - sigma_n^2 / 2) dt + sigma_n dW}` with
//!   `sigma_n = k3 h(y_n) phi(y_n)`; `g(y) = y, h(y) = sqrt(y)` for the 3/2 families and
//!   `g(y) = y^{q-1}, h(y) = y^{r-1}` for Example III.
//! * `TAMED`: `y + (a dt + b dW) / max{1, dt |a dt + b dW|}`.
//! * `HMS`: implicit Milstein for the constant-coefficient 3/2 model with a closed-form
//!   positive root.
//! * `EM`: explicit Euler-Maruyama.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{inverse_transform, transform_example2, Family, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Sd,
    Tamed,
    Hms,
    Em,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Sd,
        SchemeKind::Tamed,
        SchemeKind::Hms,
        SchemeKind::Em,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Sd => "SD",
            SchemeKind::Tamed => "TAMED",
            SchemeKind::Hms => "HMS",
            SchemeKind::Em => "EM",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::usage(format!(
                    "unknown scheme {s:?}; expected one of SD, TAMED, HMS, EM"
                ))
            })
    }
}

/// How the SD exponent integrates time-varying coefficients over a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum CoefficientMode {
    /// `k_i(t_n)`, the fully discretized scheme.
    #[default]
    LeftPoint,
    /// Midpoint rule for the integrals of `k_i(s)` over `[t_n, t_n + dt]`.
    Midpoint,
}

/// A stepper together with its options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub sd_mode: CoefficientMode,
}

impl Scheme {
    /// Usage error when the scheme is not defined for `model`; HMS needs the
    /// constant-coefficient 3/2 model.
    pub fn check_model(&self, model: &ModelSpec) -> Result<()> {
        if self.kind == SchemeKind::Hms && model.heston_constants().is_none() {
            return Err(Error::usage(format!(
                "HMS is defined only for the constant-coefficient 3/2 model, not {}",
                model.family()
            )));
        }
        Ok(())
    }
}

impl From<SchemeKind> for Scheme {
    fn from(kind: SchemeKind) -> Self {
        Scheme {
            kind,
            sd_mode: CoefficientMode::LeftPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInput {
    pub t: f64,
    pub y: f64,
    pub dt: f64,
    pub dw: f64,
}

impl StepInput {
    pub fn new(t: f64, y: f64, dt: f64, dw: f64) -> Self {
        StepInput { t, y, dt, dw }
    }
}

/// Exponents beyond this magnitude are clamped before exponentiation.
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Saturation {
    #[default]
    None,
    Overflow,
    Underflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdStep {
    pub value: f64,
    pub saturation: Saturation,
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!(
            "step size must be positive, got {dt}"
        )))
    }
}

/// Semi-discrete step; the result is strictly positive.
pub fn sd_step(model: &ModelSpec, s: StepInput, mode: CoefficientMode) -> Result<SdStep> {
    check_dt(s.dt)?;
    if !(s.y > 0.0) {
        return Err(Error::usage(format!("SD step needs y_n > 0, got {}", s.y)));
    }
    let tc = match mode {
        CoefficientMode::LeftPoint => s.t,
        CoefficientMode::Midpoint => s.t + 0.5 * s.dt,
    };
    let (k1, k2, k3) = (model.k1.eval(tc), model.k2.eval(tc), model.k3.eval(tc));
    let y = s.y;
    let (damping, sigma) = match model.family() {
        Family::Heston32Const => (k2 * y, k3 * y.sqrt()),
        Family::ExampleI => (k2 * y, k3 * y.sqrt() * model.phi.eval(y)),
        Family::ExampleIII => (
            k2 * y.powi(model.q - 1),
            k3 * y.powf(model.r - 1.0) * model.phi.eval(y),
        ),
        Family::ExampleII => {
            return Err(Error::usage(
                "SD steps act on the transformed example2 model; see transform_example2",
            ))
        }
    };
    let rate = k1 - damping - 0.5 * sigma * sigma;
    let exponent = rate * s.dt + sigma * s.dw;
    if exponent.is_nan() {
        return Err(Error::Overflow { t: s.t, x: y });
    }
    let mut saturation = Saturation::None;
    let clamped = if exponent > EXPONENT_LIMIT {
        saturation = Saturation::Overflow;
        EXPONENT_LIMIT
    } else if exponent < -EXPONENT_LIMIT {
        saturation = Saturation::Underflow;
        -EXPONENT_LIMIT
    } else {
        exponent
    };
    let mut value = y * clamped.exp();
    if !value.is_finite() {
        value = f64::MAX;
        saturation = Saturation::Overflow;
    } else if value < f64::MIN_POSITIVE {
        value = f64::MIN_POSITIVE;
        saturation = Saturation::Underflow;
    }
    Ok(SdStep { value, saturation })
}

/// Tamed Euler step; the increment has magnitude at most `1 / dt`.
pub fn tamed_step(model: &ModelSpec, s: StepInput) -> Result<f64> {
    check_dt(s.dt)?;
    let a = model.drift_unchecked(s.t, s.y);
    let b = model.diffusion_unchecked(s.t, s.y);
    let increment = a * s.dt + b * s.dw;
    if !increment.is_finite() {
        return Err(Error::Overflow { t: s.t, x: s.y });
    }
    let next = s.y + increment / (s.dt * increment.abs()).max(1.0);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Overflow { t: s.t, x: s.y })
    }
}

#[inline]
fn hms_update(k1: f64, k2: f64, k3: f64, y: f64, dt: f64, dw: f64) -> f64 {
    let c = k2 + 0.75 * k3 * k3;
    let alpha = 1.0 - k1 * dt;
    let u = k3 * y.sqrt() * dw;
    let rhs = y * (1.0 + u + 0.75 * u * u);
    // Positive root of c dt z^2 + alpha z - rhs = 0, in the cancellation-free form.
    2.0 * rhs / (alpha + (alpha * alpha + 4.0 * c * dt * rhs).sqrt())
}

fn hms_constants(model: &ModelSpec, dt: f64) -> Result<(f64, f64, f64)> {
    let (k1, k2, k3) = model.heston_constants().ok_or_else(|| {
        Error::usage("HMS is defined only for the constant-coefficient 3/2 model")
    })?;
    if !(1.0 - k1 * dt > 0.0) {
        return Err(Error::usage(format!(
            "HMS needs dt < 1/k1 (k1 = {k1}, dt = {dt})"
        )));
    }
    if !(k2 + 0.75 * k3 * k3 >= 0.0) {
        return Err(Error::usage("HMS needs k2 + 3/4 k3^2 >= 0"));
    }
    Ok((k1, k2, k3))
}

/// Implicit Milstein step; strictly positive for `y_n > 0`.
pub fn hms_step(model: &ModelSpec, s: StepInput) -> Result<f64> {
    check_dt(s.dt)?;
    let (k1, k2, k3) = hms_constants(model, s.dt)?;
    if !(s.y > 0.0) {
        return Err(Error::usage(format!("HMS step needs y_n > 0, got {}", s.y)));
    }
    let next = hms_update(k1, k2, k3, s.y, s.dt, s.dw);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Overflow { t: s.t, x: s.y })
    }
}

/// Residual of the quadratic defining the HMS step, relative to its right-hand side.
pub fn hms_relative_residual(model: &ModelSpec, s: StepInput, next: f64) -> Result<f64> {
    let (k1, k2, k3) = hms_constants(model, s.dt)?;
    let c = k2 + 0.75 * k3 * k3;
    let rhs = s.y + k3 * s.y.powf(1.5) * s.dw + 0.75 * k3 * k3 * s.y * s.y * s.dw * s.dw;
    let lhs = c * s.dt * next * next + (1.0 - k1 * s.dt) * next;
    Ok((lhs - rhs).abs() / rhs.abs())
}

pub fn em_step(model: &ModelSpec, s: StepInput) -> Result<f64> {
    check_dt(s.dt)?;
    let a = model.drift_unchecked(s.t, s.y);
    let b = model.diffusion_unchecked(s.t, s.y);
    let next = s.y + a * s.dt + b * s.dw;
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Overflow { t: s.t, x: s.y })
    }
}

/// Terminal value and positivity diagnostics of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// NaN when the path overflowed.
    pub terminal: f64,
    /// 1-based index of the first step that produced a negative iterate.
    pub first_negative_step: Option<usize>,
    pub first_negative_value: Option<f64>,
    pub overflowed: bool,
    pub underflowed_to_zero: bool,
    pub min_iterate: f64,
    /// `|phi(y)|` exceeded the declared bound `K_phi` somewhere along the path.
    pub phi_bound_exceeded: bool,
    /// Steps actually taken (fewer than requested after an overflow).
    pub steps: usize,
}

impl PathResult {
    fn start(x0: f64) -> Self {
        PathResult {
            terminal: x0,
            first_negative_step: None,
            first_negative_value: None,
            overflowed: false,
            underflowed_to_zero: false,
            min_iterate: x0,
            phi_bound_exceeded: false,
            steps: 0,
        }
    }

    pub fn went_negative(&self) -> bool {
        self.first_negative_step.is_some()
    }

    fn record(&mut self, step: usize, y: f64) {
        self.steps = step;
        self.terminal = y;
        if y < self.min_iterate {
            self.min_iterate = y;
        }
        if y < 0.0 && self.first_negative_step.is_none() {
            self.first_negative_step = Some(step);
            self.first_negative_value = Some(y);
        }
        if y == 0.0 {
            self.underflowed_to_zero = true;
        }
    }

    fn overflow(&mut self, step: usize) {
        self.steps = step;
        self.terminal = f64::NAN;
        self.overflowed = true;
    }
}

/// Runs `scheme` from `model.x0` over `increments` with step `dt`, optionally
/// recording every iterate (including `x0`) into `trajectory`.
pub fn simulate_path_with(
    scheme: impl Into<Scheme>,
    model: &ModelSpec,
    increments: &[f64],
    dt: f64,
    mut trajectory: Option<&mut Vec<f64>>,
) -> Result<PathResult> {
    let scheme = scheme.into();
    if increments.is_empty() {
        return Err(Error::usage("simulate_path needs at least one increment"));
    }
    check_dt(dt)?;
    if increments.len() as f64 * dt > model.horizon * (1.0 + 1e-9) {
        return Err(Error::usage(format!(
            "{} steps of {dt} exceed the horizon {}",
            increments.len(),
            model.horizon
        )));
    }

    if scheme.kind == SchemeKind::Sd && model.family() == Family::ExampleII {
        let transformed = transform_example2(model)?;
        let mut inner = trajectory
            .as_mut()
            .map(|_| Vec::with_capacity(increments.len() + 1));
        let mut result = simulate_path_with(scheme, &transformed, increments, dt, inner.as_mut())?;
        let back = |z: f64| inverse_transform(z, model.r);
        if !result.overflowed {
            result.terminal = back(result.terminal)?;
        }
        result.min_iterate = back(result.min_iterate)?;
        if let (Some(out), Some(zs)) = (trajectory, inner) {
            for z in zs {
                out.push(back(z)?);
            }
        }
        return Ok(result);
    }

    let hms = match scheme.kind {
        SchemeKind::Hms => Some(hms_constants(model, dt)?),
        _ => None,
    };
    let check_phi =
        matches!(model.family(), Family::ExampleI | Family::ExampleIII) && !model.phi.is_one();

    let mut result = PathResult::start(model.x0);
    if let Some(out) = trajectory.as_mut() {
        out.push(model.x0);
    }
    let mut y = model.x0;
    for (n, &dw) in increments.iter().enumerate() {
        if check_phi && model.phi.eval(y).abs() > model.phi.bound {
            result.phi_bound_exceeded = true;
        }
        let input = StepInput::new(n as f64 * dt, y, dt, dw);
        let step = match scheme.kind {
            SchemeKind::Sd => sd_step(model, input, scheme.sd_mode).map(|s| {
                match s.saturation {
                    Saturation::Overflow => result.overflowed = true,
                    Saturation::Underflow => result.underflowed_to_zero = true,
                    Saturation::None => {}
                }
                s.value
            }),
            SchemeKind::Tamed => tamed_step(model, input),
            SchemeKind::Em => em_step(model, input),
            SchemeKind::Hms => {
                let (k1, k2, k3) = hms.expect("checked above");
                if y > 0.0 {
                    let next = hms_update(k1, k2, k3, y, dt, dw);
                    if next.is_finite() {
                        Ok(next)
                    } else {
                        Err(Error::Overflow { t: input.t, x: y })
                    }
                } else {
                    Err(Error::usage(format!("HMS step needs y_n > 0, got {y}")))
                }
            }
        };
        match step {
            Ok(next) => {
                y = next;
                result.record(n + 1, y);
                if let Some(out) = trajectory.as_mut() {
                    out.push(y);
                }
            }
            Err(Error::Overflow { .. }) => {
                result.overflow(n + 1);
                break;
            }
            Err(e) => {
                return Err(Error::AtStep {
                    step: n + 1,
                    source: Box::new(e),
                })
            }
        }
        if result.overflowed {
            // SD saturated at the largest representable value; the terminal is meaningless.
            result.terminal = f64::NAN;
            break;
        }
    }
    Ok(result)
}

pub fn simulate_path(
    scheme: impl Into<Scheme>,
    model: &ModelSpec,
    increments: &[f64],
    dt: f64,
) -> Result<PathResult> {
    simulate_path_with(scheme, model, increments, dt, None)
}
