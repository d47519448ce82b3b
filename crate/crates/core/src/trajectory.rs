//! One-dimensional world lines `x(t)`.
//!
//! A [`Trajectory`] is either analytic (an [`Expr`] in `t` together with its
//! exact derivative) or sampled (a table of `(t, x)` pairs interpolated by a
//! monotone cubic Hermite spline). Every constructor checks the speed limit on
//! a dense collocation grid.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::quantities::UnitSystem;

/// Default number of collocation points for speed and monotonicity checks.
pub const DEFAULT_COLLOCATION: usize = 1024;

/// Relative slack accepted on `|v| = c` for paths that touch the light cone.
const LIGHTLIKE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPath {
    position: Expr,
    velocity: Expr,
}

impl AnalyticPath {
    pub fn new(position: Expr) -> Self {
        let velocity = position.differentiate();
        AnalyticPath { position, velocity }
    }

    pub fn position(&self) -> &Expr {
        &self.position
    }

    pub fn velocity(&self) -> &Expr {
        &self.velocity
    }
}

/// Tabulated path with node slopes for cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    t: Vec<f64>,
    x: Vec<f64>,
    slope: Vec<f64>,
}

impl SampledPath {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidTrajectory(format!(
                "a sampled trajectory needs at least 3 points, got {}",
                points.len()
            )));
        }
        let (t, x): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if let Some(i) = t.iter().chain(&x).position(|v| !v.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "non-finite sample value at entry {}",
                i % t.len()
            )));
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTrajectory(format!(
                "sample times must be strictly increasing (rows {} and {})",
                i,
                i + 1
            )));
        }
        let mut slope = three_point_slopes(&t, &x);
        limit_monotone(&t, &x, &mut slope);
        Ok(SampledPath { t, x, slope })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.x.iter().copied())
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.t.partition_point(|&tk| tk <= t);
        k.saturating_sub(1).min(self.t.len() - 2)
    }

    fn position(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.x[k]
            + (s3 - 2.0 * s2 + s) * h * self.slope[k]
            + (-2.0 * s3 + 3.0 * s2) * self.x[k + 1]
            + (s3 - s2) * h * self.slope[k + 1]
    }

    fn velocity(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let s2 = s * s;
        (6.0 * s2 - 6.0 * s) * (self.x[k] - self.x[k + 1]) / h
            + (3.0 * s2 - 4.0 * s + 1.0) * self.slope[k]
            + (3.0 * s2 - 2.0 * s) * self.slope[k + 1]
    }
}

/// Second-order node derivatives on a possibly non-uniform grid: centered
/// three-point formula inside, one-sided three-point formula at both ends.
pub(crate) fn three_point_slopes(t: &[f64], x: &[f64]) -> Vec<f64> {
    let n = t.len();
    debug_assert!(n >= 3 && x.len() == n);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = t[i] - t[i - 1];
        let h1 = t[i + 1] - t[i];
        d[i] = -h1 / (h0 * (h0 + h1)) * x[i - 1]
            + (h1 - h0) / (h0 * h1) * x[i]
            + h0 / (h1 * (h0 + h1)) * x[i + 1];
    }
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * x[0] + (h0 + h1) / (h0 * h1) * x[1]
        - h0 / (h1 * (h0 + h1)) * x[2];
    let (h0, h1) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
    d[n - 1] = h1 / (h0 * (h0 + h1)) * x[n - 3] - (h0 + h1) / (h0 * h1) * x[n - 2]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * x[n - 1];
    d
}

/// Fritsch-Carlson limiter: keeps the Hermite interpolant monotone on every
/// interval where the data are monotone.
fn limit_monotone(t: &[f64], x: &[f64], m: &mut [f64]) {
    for k in 0..t.len() - 1 {
        let delta = (x[k + 1] - x[k]) / (t[k + 1] - t[k]);
        if delta == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        if m[k] * delta < 0.0 {
            m[k] = 0.0;
        }
        if m[k + 1] * delta < 0.0 {
            m[k + 1] = 0.0;
        }
        let a = m[k] / delta;
        let b = m[k + 1] / delta;
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            m[k] = tau * a * delta;
            m[k + 1] = tau * b * delta;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Analytic(AnalyticPath),
    Sampled(SampledPath),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    source: Source,
    t_start: f64,
    t_end: f64,
    units: UnitSystem,
    /// Uniform resampling grid attached to an analytic source.
    grid: Option<usize>,
}

impl Trajectory {
    pub fn analytic(position: Expr, t_start: f64, t_end: f64, units: UnitSystem) -> Result<Self> {
        let tr = Self::analytic_unchecked(position, t_start, t_end, units)?;
        tr.check_speed_limit(false)?;
        Ok(tr)
    }

    /// Parses `text` as an expression in `t` and builds an analytic trajectory.
    pub fn from_expression(
        text: &str,
        t_start: f64,
        t_end: f64,
        units: UnitSystem,
    ) -> Result<Self> {
        Self::analytic(expr::parse(text)?, t_start, t_end, units)
    }

    /// Analytic trajectory that may touch `|v| = c` (to round-off) but not exceed it.
    pub fn analytic_lightlike(
        position: Expr,
        t_start: f64,
        t_end: f64,
        units: UnitSystem,
    ) -> Result<Self> {
        let tr = Self::analytic_unchecked(position, t_start, t_end, units)?;
        tr.check_speed_limit(true)?;
        Ok(tr)
    }

    fn analytic_unchecked(
        position: Expr,
        t_start: f64,
        t_end: f64,
        units: UnitSystem,
    ) -> Result<Self> {
        check_domain(t_start, t_end)?;
        Ok(Trajectory {
            source: Source::Analytic(AnalyticPath::new(position)),
            t_start,
            t_end,
            units,
            grid: None,
        })
    }

    /// Builds a sampled trajectory from `(t, x)` pairs with strictly increasing `t`.
    pub fn sampled(points: &[(f64, f64)], units: UnitSystem) -> Result<Self> {
        let path = SampledPath::new(points)?;
        let t_start = path.t[0];
        let t_end = *path.t.last().unwrap();
        let tr = Trajectory {
            source: Source::Sampled(path),
            t_start,
            t_end,
            units,
            grid: None,
        };
        tr.check_speed_limit(false)?;
        Ok(tr)
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn units(&self) -> &UnitSystem {
        &self.units
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.source, Source::Analytic(_))
    }

    fn clamp(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * (self.t_end - self.t_start);
        if !(t >= self.t_start - slack && t <= self.t_end + slack) {
            return Err(Error::OutOfDomain {
                t,
                start: self.t_start,
                end: self.t_end,
            });
        }
        Ok(t.clamp(self.t_start, self.t_end))
    }

    pub fn position_at(&self, t: f64) -> Result<f64> {
        let t = self.clamp(t)?;
        match &self.source {
            Source::Analytic(a) => a.position.evaluate(t, &self.units),
            Source::Sampled(s) => Ok(s.position(t)),
        }
    }

    /// `dx/dt` at `t`: exact for analytic sources, Hermite derivative for sampled ones.
    pub fn velocity_at(&self, t: f64) -> Result<f64> {
        let t = self.clamp(t)?;
        match &self.source {
            Source::Analytic(a) => a.velocity.evaluate(t, &self.units),
            Source::Sampled(s) => Ok(s.velocity(t)),
        }
    }

    /// `n` uniform collocation times on `[t_start, t_end]`, endpoints included.
    pub fn collocation(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        (0..n).map(move |k| {
            if k == n - 1 {
                self.t_end
            } else {
                self.t_start + (self.t_end - self.t_start) * (k as f64 / (n - 1) as f64)
            }
        })
    }

    fn check_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.collocation(DEFAULT_COLLOCATION).collect();
        if let Source::Sampled(s) = &self.source {
            ts.extend_from_slice(&s.t);
        }
        ts
    }

    fn check_speed_limit(&self, allow_lightlike: bool) -> Result<()> {
        let c = self.units.c();
        let limit = if allow_lightlike {
            c * (1.0 + LIGHTLIKE_SLACK)
        } else {
            c
        };
        for t in self.check_times() {
            let v = self.velocity_at(t)?;
            self.position_at(t)?;
            let over = if allow_lightlike {
                v.abs() > limit
            } else {
                v.abs() >= limit
            };
            if over {
                return Err(Error::SpeedLimit { speed: v.abs(), c });
            }
        }
        Ok(())
    }

    /// Smallest and largest `|v|` over a collocation grid of `n` points.
    pub fn speed_range(&self, n: usize) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for t in self.collocation(n) {
            let v = self.velocity_at(t)?.abs();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }

    pub fn is_monotone(&self) -> bool {
        self.is_monotone_with(DEFAULT_COLLOCATION)
    }

    /// True iff `v` keeps one strict sign on every collocation point.
    pub fn is_monotone_with(&self, n: usize) -> bool {
        let mut sign = 0.0;
        for t in self.collocation(n) {
            let Ok(v) = self.velocity_at(t) else {
                return false;
            };
            if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
                return false;
            }
            sign = v.signum();
        }
        true
    }

    /// Uniform grid of `n` points. Analytic sources keep their expression and
    /// gain the grid; sampled sources are re-tabulated by interpolation.
    pub fn resample(&self, n: usize) -> Result<Trajectory> {
        if n < 3 {
            return Err(Error::InvalidTrajectory(format!(
                "resampling needs at least 3 points, got {n}"
            )));
        }
        match &self.source {
            Source::Analytic(_) => Ok(Trajectory {
                grid: Some(n),
                ..self.clone()
            }),
            Source::Sampled(_) => {
                let points = self
                    .collocation(n)
                    .map(|t| Ok((t, self.position_at(t)?)))
                    .collect::<Result<Vec<_>>>()?;
                Trajectory::sampled(&points, self.units)
            }
        }
    }

    /// Tabulated nodes: the samples of a sampled source, the resampling grid
    /// of an analytic one, or `None` for a bare analytic trajectory.
    pub fn nodes(&self) -> Option<Result<Vec<(f64, f64)>>> {
        match (&self.source, self.grid) {
            (Source::Sampled(s), _) => Some(Ok(s.points().collect())),
            (Source::Analytic(_), Some(n)) => Some(
                self.collocation(n)
                    .map(|t| Ok((t, self.position_at(t)?)))
                    .collect(),
            ),
            (Source::Analytic(_), None) => None,
        }
    }

    /// Nodes if present, otherwise `n` uniform samples.
    pub fn samples(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        match self.nodes() {
            Some(nodes) => nodes,
            None => self
                .collocation(n)
                .map(|t| Ok((t, self.position_at(t)?)))
                .collect(),
        }
    }

    /// Inverts a monotone `x(t)`: returns `t` with `x(t) = x`.
    pub fn time_at_position(&self, x: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.t_start, self.t_end);
        let x_lo = self.position_at(lo)?;
        let x_hi = self.position_at(hi)?;
        let increasing = x_hi > x_lo;
        let (min, max) = if increasing {
            (x_lo, x_hi)
        } else {
            (x_hi, x_lo)
        };
        let slack = 1e-12 * (max - min).abs().max(f64::MIN_POSITIVE);
        if !(x >= min - slack && x <= max + slack) {
            return Err(Error::InvalidTrajectory(format!(
                "position {x} is outside the range [{min}, {max}]"
            )));
        }
        if x <= min {
            return Ok(if increasing { lo } else { hi });
        }
        if x >= max {
            return Ok(if increasing { hi } else { lo });
        }
        // Safeguarded Newton on g(t) = x(t) - x, bracketed by [lo, hi].
        let g = |t: f64| -> Result<f64> {
            let d = self.position_at(t)? - x;
            Ok(if increasing { d } else { -d })
        };
        let mut t = lo + (hi - lo) * ((x - x_lo) / (x_hi - x_lo));
        for _ in 0..200 {
            let gt = g(t)?;
            if gt == 0.0 {
                return Ok(t);
            }
            if gt < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let v = self.velocity_at(t)?;
            let slope = if increasing { v } else { -v };
            let newton = t - gt / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - t).abs() <= 2.0 * f64::EPSILON * t.abs().max(hi - lo) || hi - lo <= 0.0 {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }

    pub fn read_csv<R: Read>(reader: R, units: UnitSystem) -> Result<Trajectory> {
        let points = read_points(reader)?;
        Trajectory::sampled(&points, units)
    }

    pub fn read_csv_path(path: &Path, units: UnitSystem) -> Result<Trajectory> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Trajectory::read_csv(file, units)
    }

    /// Writes the nodes (or `n` uniform samples) as `t,x` CSV.
    pub fn write_csv<W: Write>(&self, writer: W, n: usize) -> Result<()> {
        write_points(writer, &self.samples(n)?)
    }
}

fn check_domain(t_start: f64, t_end: f64) -> Result<()> {
    if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
        return Err(Error::InvalidTrajectory(format!(
            "time domain [{t_start}, {t_end}] must satisfy t_start < t_end"
        )));
    }
    Ok(())
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads `t,x` CSV (header required).
pub fn read_points<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "t" || &header[1] != "x" {
        return Err(Error::Csv(format!(
            "expected header `t,x`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| Error::Csv(format!("line {}: bad number {:?}", i + 2, &rec[j])))
        };
        out.push((field(0)?, field(1)?));
    }
    Ok(out)
}

pub fn write_points<W: Write>(mut w: W, points: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "t,x")?;
    for &(t, x) in points {
        writeln!(w, "{},{}", full_precision(t), full_precision(x))?;
    }
    w.flush()?;
    Ok(())
}
