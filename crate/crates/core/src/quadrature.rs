//! Numerical integration used by every functional.
//!
//! Two rules are registered: `simpson` (composite Simpson on a fixed grid) and
//! `adaptive` (recursive adaptive Simpson with Richardson error estimate).
//! Both also integrate over parameter rectangles with a tensor-product
//! Simpson rule, which is how worldsheet areas are computed.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::registry::Registry;

/// Physical dimension of a functional value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Units {
    /// Bare integral with no physical unit attached.
    Raw,
    Action,
    Area,
    Length,
}

impl Units {
    pub fn si_symbol(self) -> &'static str {
        match self {
            Units::Raw => "1",
            Units::Action => "J*s",
            Units::Area => "m^2",
            Units::Length => "m",
        }
    }
}

/// Value of an integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalResult {
    pub value: f64,
    /// Always non-negative.
    pub abs_error_estimate: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
    /// False when the rule ran out of depth before meeting its tolerance.
    pub converged: bool,
    pub units: Units,
}

impl FunctionalResult {
    /// Multiplies value and error estimate by `k` and tags the result with `units`.
    pub fn scaled(self, k: f64, units: Units) -> Self {
        FunctionalResult {
            value: self.value * k,
            abs_error_estimate: self.abs_error_estimate * k.abs(),
            units,
            ..self
        }
    }
}

/// A rectangle in the worldsheet parameter plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub tau: (f64, f64),
    pub sigma: (f64, f64),
}

impl Rect {
    pub fn new(tau: (f64, f64), sigma: (f64, f64)) -> Result<Self> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok(tau) || !ok(sigma) {
            return Err(Error::InvalidQuadrature(format!(
                "rectangle needs positive extent, got tau {tau:?} sigma {sigma:?}"
            )));
        }
        Ok(Rect { tau, sigma })
    }
}

pub type Integrand<'a> = &'a dyn Fn(f64) -> Result<f64>;
pub type Integrand2d<'a> = &'a dyn Fn(f64, f64) -> Result<f64>;

/// An integration rule.
pub trait Quadrature: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// The settings this rule was built from.
    fn spec(&self) -> QuadratureSpec;

    /// Integrates `f` over `[a, b]`, `a < b`.
    fn integrate(&self, f: Integrand<'_>, a: f64, b: f64) -> Result<FunctionalResult>;

    fn integrate_2d(&self, f: Integrand2d<'_>, rect: &Rect) -> Result<FunctionalResult>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureSpec {
    CompositeSimpson {
        intervals: usize,
    },
    AdaptiveSimpson {
        abs_tol: f64,
        rel_tol: f64,
        max_depth: usize,
    },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::AdaptiveSimpson {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 40,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::CompositeSimpson { intervals } => {
                if intervals < 2 || intervals % 2 != 0 {
                    return Err(Error::InvalidQuadrature(format!(
                        "Simpson needs an even interval count >= 2, got {intervals}"
                    )));
                }
            }
            QuadratureSpec::AdaptiveSimpson {
                abs_tol,
                rel_tol,
                max_depth,
            } => {
                if !(abs_tol > 0.0 && rel_tol > 0.0 && abs_tol.is_finite() && rel_tol.is_finite()) {
                    return Err(Error::InvalidQuadrature(format!(
                        "tolerances must be positive, got abs {abs_tol} rel {rel_tol}"
                    )));
                }
                if max_depth < 1 {
                    return Err(Error::InvalidQuadrature("max_depth must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn rule(&self) -> Result<Box<dyn Quadrature>> {
        self.validate()?;
        Ok(match *self {
            QuadratureSpec::CompositeSimpson { intervals } => {
                Box::new(CompositeSimpson { intervals })
            }
            QuadratureSpec::AdaptiveSimpson {
                abs_tol,
                rel_tol,
                max_depth,
            } => Box::new(AdaptiveSimpson {
                abs_tol,
                rel_tol,
                max_depth,
            }),
        })
    }
}

impl fmt::Display for QuadratureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureSpec::CompositeSimpson { intervals } => write!(f, "simpson:{intervals}"),
            QuadratureSpec::AdaptiveSimpson {
                abs_tol,
                rel_tol,
                max_depth,
            } => write!(f, "adaptive:{abs_tol:e},{rel_tol:e},{max_depth}"),
        }
    }
}

impl FromStr for QuadratureSpec {
    type Err = Error;

    /// Accepts `simpson:N` or `adaptive[:abs,rel[,max_depth]]`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(registry().create_from_spec(s)?.spec())
    }
}

/// Built-in rules keyed by their command-line name.
pub fn registry() -> Registry<dyn Quadrature> {
    let mut r: Registry<dyn Quadrature> = Registry::new("quadrature rule");
    r.register("simpson", |args| {
        let intervals = args
            .parse::<usize>()
            .map_err(|_| Error::InvalidQuadrature(format!("bad interval count {args:?}")))?;
        QuadratureSpec::CompositeSimpson { intervals }.rule()
    });
    r.register("adaptive", |args| {
        let mut spec = QuadratureSpec::default();
        if !args.is_empty() {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            let bad = || Error::InvalidQuadrature(format!("bad adaptive settings {args:?}"));
            if !(2..=3).contains(&parts.len()) {
                return Err(bad());
            }
            let QuadratureSpec::AdaptiveSimpson {
                abs_tol,
                rel_tol,
                max_depth,
            } = &mut spec
            else {
                unreachable!()
            };
            *abs_tol = parts[0].parse().map_err(|_| bad())?;
            *rel_tol = parts[1].parse().map_err(|_| bad())?;
            if let Some(d) = parts.get(2) {
                *max_depth = d.parse().map_err(|_| bad())?;
            }
        }
        spec.rule()
    });
    r
}

pub fn integrate_1d(
    f: Integrand<'_>,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<FunctionalResult> {
    spec.rule()?.integrate(f, a, b)
}

pub fn integrate_2d(
    f: Integrand2d<'_>,
    rect: &Rect,
    spec: &QuadratureSpec,
) -> Result<FunctionalResult> {
    spec.rule()?.integrate_2d(f, rect)
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidQuadrature(format!(
            "integration interval [{a}, {b}] must satisfy a < b"
        )));
    }
    Ok(())
}

fn sample(f: Integrand<'_>, t: f64) -> Result<f64> {
    let v = f(t)?;
    if !v.is_finite() {
        return Err(Error::NonFiniteIntegrand { t, value: v });
    }
    Ok(v)
}

fn sample_2d(f: Integrand2d<'_>, tau: f64, sigma: f64) -> Result<f64> {
    let v = f(tau, sigma)?;
    if !v.is_finite() {
        return Err(Error::NonFiniteIntegrand2d {
            tau,
            sigma,
            value: v,
        });
    }
    Ok(v)
}

/// Node `k` of `n` uniform intervals on `[a, b]`; the last node is `b` exactly.
fn node(a: f64, b: f64, n: usize, k: usize) -> f64 {
    if k == n {
        b
    } else {
        a + (b - a) * (k as f64 / n as f64)
    }
}

fn simpson_weight(n: usize, k: usize) -> f64 {
    if k == 0 || k == n {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

fn composite_1d(f: Integrand<'_>, a: f64, b: f64, n: usize) -> Result<f64> {
    let mut sum = 0.0;
    for k in 0..=n {
        sum += simpson_weight(n, k) * sample(f, node(a, b, n, k))?;
    }
    Ok(sum * (b - a) / (3.0 * n as f64))
}

fn tensor_2d(f: Integrand2d<'_>, rect: &Rect, n: usize) -> Result<f64> {
    let (t0, t1) = rect.tau;
    let (s0, s1) = rect.sigma;
    let mut sum = 0.0;
    for i in 0..=n {
        let tau = node(t0, t1, n, i);
        let wi = simpson_weight(n, i);
        let mut row = 0.0;
        for j in 0..=n {
            row += simpson_weight(n, j) * sample_2d(f, tau, node(s0, s1, n, j))?;
        }
        sum += wi * row;
    }
    Ok(sum * ((t1 - t0) * (s1 - s0)) / (9.0 * (n * n) as f64))
}

/// True when `delta` is indistinguishable from rounding noise in `scale`.
fn at_roundoff(delta: f64, scale: f64) -> bool {
    delta.abs() <= 64.0 * f64::EPSILON * scale.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeSimpson {
    pub intervals: usize,
}

impl Quadrature for CompositeSimpson {
    fn name(&self) -> &'static str {
        "simpson"
    }

    fn spec(&self) -> QuadratureSpec {
        QuadratureSpec::CompositeSimpson {
            intervals: self.intervals,
        }
    }

    /// Returns the `n`-interval value; the error estimate compares against `2n`.
    fn integrate(&self, f: Integrand<'_>, a: f64, b: f64) -> Result<FunctionalResult> {
        check_interval(a, b)?;
        let n = self.intervals;
        let coarse = composite_1d(f, a, b, n)?;
        let fine = composite_1d(f, a, b, 2 * n)?;
        Ok(FunctionalResult {
            value: coarse,
            abs_error_estimate: (fine - coarse).abs() * 16.0 / 15.0,
            evaluations: (n + 1) + (2 * n + 1),
            converged: true,
            units: Units::Raw,
        })
    }

    fn integrate_2d(&self, f: Integrand2d<'_>, rect: &Rect) -> Result<FunctionalResult> {
        let n = self.intervals;
        let coarse = tensor_2d(f, rect, n)?;
        let fine = tensor_2d(f, rect, 2 * n)?;
        Ok(FunctionalResult {
            value: coarse,
            abs_error_estimate: (fine - coarse).abs() * 16.0 / 15.0,
            evaluations: (n + 1).pow(2) + (2 * n + 1).pow(2),
            converged: true,
            units: Units::Raw,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveSimpson {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: usize,
}

/// Initial uniform panels before adaptive refinement starts.
const INITIAL_PANELS: usize = 4;
/// Cap on grid doublings for the 2-D rule (2^10 intervals per side).
const MAX_2D_LEVELS: usize = 10;

struct Accumulator {
    value: f64,
    error: f64,
    evaluations: usize,
    converged: bool,
}

impl AdaptiveSimpson {
    fn tolerance(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude.abs())
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        f: Integrand<'_>,
        (a, b): (f64, f64),
        (fa, fm, fb): (f64, f64, f64),
        whole: f64,
        tol: f64,
        depth: usize,
        acc: &mut Accumulator,
    ) -> Result<()> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = sample(f, lm)?;
        let frm = sample(f, rm)?;
        acc.evaluations += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        let ok = delta.abs() <= 15.0 * tol || at_roundoff(delta, left.abs() + right.abs());
        if ok || depth + 1 >= self.max_depth || lm <= a || rm >= b {
            acc.value += left + right + delta / 15.0;
            acc.error += delta.abs() / 15.0;
            acc.converged &= ok;
            return Ok(());
        }
        self.refine(f, (a, m), (fa, flm, fm), left, 0.5 * tol, depth + 1, acc)?;
        self.refine(f, (m, b), (fm, frm, fb), right, 0.5 * tol, depth + 1, acc)
    }
}

impl Quadrature for AdaptiveSimpson {
    fn name(&self) -> &'static str {
        "adaptive"
    }

    fn spec(&self) -> QuadratureSpec {
        QuadratureSpec::AdaptiveSimpson {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_depth: self.max_depth,
        }
    }

    fn integrate(&self, f: Integrand<'_>, a: f64, b: f64) -> Result<FunctionalResult> {
        check_interval(a, b)?;
        let n = 2 * INITIAL_PANELS;
        let values = (0..=n)
            .map(|k| sample(f, node(a, b, n, k)))
            .collect::<Result<Vec<_>>>()?;
        let h = (b - a) / n as f64;
        let panel = |p: usize| {
            let (fa, fm, fb) = (values[2 * p], values[2 * p + 1], values[2 * p + 2]);
            (fa, fm, fb, h / 3.0 * (fa + 4.0 * fm + fb))
        };
        let estimate: f64 = (0..INITIAL_PANELS).map(|p| panel(p).3).sum();
        let tol = self.tolerance(estimate) / INITIAL_PANELS as f64;
        let mut acc = Accumulator {
            value: 0.0,
            error: 0.0,
            evaluations: n + 1,
            converged: true,
        };
        for p in 0..INITIAL_PANELS {
            let (fa, fm, fb, whole) = panel(p);
            let lo = node(a, b, n, 2 * p);
            let hi = node(a, b, n, 2 * p + 2);
            self.refine(f, (lo, hi), (fa, fm, fb), whole, tol, 0, &mut acc)?;
        }
        Ok(FunctionalResult {
            value: acc.value,
            abs_error_estimate: acc.error,
            evaluations: acc.evaluations,
            converged: acc.converged,
            units: Units::Raw,
        })
    }

    /// Doubles a tensor Simpson grid until successive levels agree.
    fn integrate_2d(&self, f: Integrand2d<'_>, rect: &Rect) -> Result<FunctionalResult> {
        let mut n = 4;
        let mut coarse = tensor_2d(f, rect, n)?;
        let mut evaluations = (n + 1) * (n + 1);
        let levels = self.max_depth.min(MAX_2D_LEVELS);
        let mut last = (coarse, f64::INFINITY);
        for _ in 0..levels {
            n *= 2;
            let fine = tensor_2d(f, rect, n)?;
            evaluations += (n + 1) * (n + 1);
            let delta = fine - coarse;
            let extrapolated = fine + delta / 15.0;
            let err = delta.abs() / 15.0;
            if err <= self.tolerance(fine) || at_roundoff(delta, fine) {
                return Ok(FunctionalResult {
                    value: extrapolated,
                    abs_error_estimate: err,
                    evaluations,
                    converged: true,
                    units: Units::Raw,
                });
            }
            last = (extrapolated, err);
            coarse = fine;
        }
        Ok(FunctionalResult {
            value: last.0,
            abs_error_estimate: last.1,
            evaluations,
            converged: false,
            units: Units::Raw,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn adaptive() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn constant_has_zero_error() {
        let r = integrate_1d(&|_| Ok(1.0), 0.0, 1.0, &adaptive()).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.abs_error_estimate, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn sine_over_half_period() {
        let r = integrate_1d(&|t| Ok(t.sin()), 0.0, PI, &adaptive()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
        // a full period would fool a single-panel start
        let r = integrate_1d(&|t| Ok(t.sin().powi(2)), 0.0, 2.0 * PI, &adaptive()).unwrap();
        assert!((r.value - PI).abs() < 1e-10);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let spec = QuadratureSpec::CompositeSimpson { intervals: 2 };
        let r = integrate_1d(&|t| Ok(t * t * t), 0.0, 1.0, &spec).unwrap();
        assert_eq!(r.value, 0.25);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = adaptive();
        assert!(integrate_1d(&|_| Ok(1.0), 1.0, 1.0, &spec).is_err());
        assert!(integrate_1d(&|_| Ok(1.0), 2.0, 1.0, &spec).is_err());
        for bad in [
            QuadratureSpec::CompositeSimpson { intervals: 3 },
            QuadratureSpec::CompositeSimpson { intervals: 0 },
            QuadratureSpec::AdaptiveSimpson {
                abs_tol: 0.0,
                rel_tol: 1e-3,
                max_depth: 4,
            },
            QuadratureSpec::AdaptiveSimpson {
                abs_tol: 1e-3,
                rel_tol: 1e-3,
                max_depth: 0,
            },
        ] {
            assert!(bad.rule().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn non_finite_integrand_reports_abscissa() {
        let err = integrate_1d(
            &|t| Ok(if t == 0.5 { f64::NAN } else { t }),
            0.0,
            1.0,
            &adaptive(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { t, .. } if t == 0.5));
    }

    #[test]
    fn depth_exhaustion_is_flagged_not_thrown() {
        let spec = QuadratureSpec::AdaptiveSimpson {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_depth: 2,
        };
        let r = integrate_1d(&|t| Ok(t.sqrt()), 0.0, 1.0, &spec).unwrap();
        assert!(!r.converged);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-2);
    }

    #[test]
    fn two_dimensional_examples() {
        let rect = Rect::new((0.0, 2.0), (0.0, 3.0)).unwrap();
        let r = integrate_2d(&|_, _| Ok(1.0), &rect, &adaptive()).unwrap();
        assert_eq!(r.value, 6.0);
        let unit = Rect::new((0.0, 1.0), (0.0, 1.0)).unwrap();
        let r = integrate_2d(&|a, b| Ok(a * b), &unit, &adaptive()).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
        let r = integrate_2d(
            &|a, b| {
                Ok(if a == 0.5 && b == 0.25 {
                    f64::INFINITY
                } else {
                    1.0
                })
            },
            &unit,
            &adaptive(),
        );
        assert!(matches!(
            r,
            Err(Error::NonFiniteIntegrand2d { tau, sigma, .. }) if tau == 0.5 && sigma == 0.25
        ));
        assert!(Rect::new((0.0, 0.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn deterministic() {
        let f = |t: f64| Ok((t * 3.0).exp() * t.cos());
        let a = integrate_1d(&f, 0.0, 2.0, &adaptive()).unwrap();
        let b = integrate_1d(&f, 0.0, 2.0, &adaptive()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn spec_round_trips_through_text() {
        for s in ["simpson:64", "adaptive:1e-12,1e-10,40"] {
            let spec: QuadratureSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<QuadratureSpec>().unwrap(), spec);
        }
        assert_eq!("adaptive".parse::<QuadratureSpec>().unwrap(), adaptive());
        assert!("gauss:5".parse::<QuadratureSpec>().is_err());
        assert!("simpson:x".parse::<QuadratureSpec>().is_err());
        assert!("adaptive:1e-3".parse::<QuadratureSpec>().is_err());
    }
}
