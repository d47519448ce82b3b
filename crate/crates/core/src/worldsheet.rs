//! Worldsheets `X(tau, sigma)` in flat space-time with signature (+,-,-,-).
//!
//! Analytic sheets implement [`Embedding`], which must supply both tangent
//! vectors. Tabulated sheets ([`GridSheet`]) take tangents from second-order
//! finite differences on the grid.

use std::fmt;
use std::io::Read;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::Rect;
use crate::registry::Registry;
use crate::trajectory::three_point_slopes;

pub type FourVector = [f64; 4];

/// Minkowski inner product, signature (+,-,-,-).
pub fn minkowski_dot(a: &FourVector, b: &FourVector) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

/// Nambu-Goto radicand `(Xdot . X')^2 - Xdot^2 X'^2`, non-negative on timelike sheets.
pub fn radicand(x_dot: &FourVector, x_prime: &FourVector) -> f64 {
    let cross = minkowski_dot(x_dot, x_prime);
    cross * cross - minkowski_dot(x_dot, x_dot) * minkowski_dot(x_prime, x_prime)
}

/// An analytic worldsheet embedding.
pub trait Embedding: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn domain(&self) -> Rect;

    fn position(&self, tau: f64, sigma: f64) -> FourVector;

    /// `(dX/dtau, dX/dsigma)`.
    fn tangents(&self, tau: f64, sigma: f64) -> (FourVector, FourVector);
}

/// Straight string of length `L` at rest for a duration `T`: `X = (tau, sigma, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticString {
    pub length: f64,
    pub duration: f64,
}

impl Embedding for StaticString {
    fn name(&self) -> &str {
        "static-string"
    }

    fn domain(&self) -> Rect {
        Rect {
            tau: (0.0, self.duration),
            sigma: (0.0, self.length),
        }
    }

    fn position(&self, tau: f64, sigma: f64) -> FourVector {
        [tau, sigma, 0.0, 0.0]
    }

    fn tangents(&self, _: f64, _: f64) -> (FourVector, FourVector) {
        ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0])
    }
}

/// A string shrunk to a point: `X = (tau, 0, 0, 0)`. Its area is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsedString {
    pub length: f64,
    pub duration: f64,
}

impl Embedding for CollapsedString {
    fn name(&self) -> &str {
        "collapsed-string"
    }

    fn domain(&self) -> Rect {
        Rect {
            tau: (0.0, self.duration),
            sigma: (0.0, self.length),
        }
    }

    fn position(&self, tau: f64, _: f64) -> FourVector {
        [tau, 0.0, 0.0, 0.0]
    }

    fn tangents(&self, _: f64, _: f64) -> (FourVector, FourVector) {
        ([1.0, 0.0, 0.0, 0.0], [0.0; 4])
    }
}

/// The static string with parameters remapped by `tau = u^2/T`, `sigma = s^3/L^2`.
/// Same surface, so the same area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReparameterizedString {
    pub length: f64,
    pub duration: f64,
}

impl Embedding for ReparameterizedString {
    fn name(&self) -> &str {
        "reparam-string"
    }

    fn domain(&self) -> Rect {
        Rect {
            tau: (0.0, self.duration),
            sigma: (0.0, self.length),
        }
    }

    fn position(&self, u: f64, s: f64) -> FourVector {
        let l2 = self.length * self.length;
        [u * u / self.duration, s * s * s / l2, 0.0, 0.0]
    }

    fn tangents(&self, u: f64, s: f64) -> (FourVector, FourVector) {
        let l2 = self.length * self.length;
        (
            [2.0 * u / self.duration, 0.0, 0.0, 0.0],
            [0.0, 3.0 * s * s / l2, 0.0, 0.0],
        )
    }
}

/// Parses `key=value` pairs separated by commas into `(length, duration)`.
fn length_duration(args: &str) -> Result<(f64, f64)> {
    let mut length = 1.0;
    let mut duration = 1.0;
    for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidWorldsheet(format!("expected key=value, got {part:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidWorldsheet(format!("bad number in {part:?}")))?;
        match k.trim() {
            "length" => length = v,
            "duration" => duration = v,
            other => {
                return Err(Error::InvalidWorldsheet(format!(
                    "unknown preset option {other:?}"
                )))
            }
        }
    }
    if !(length.is_finite() && length > 0.0 && duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidWorldsheet(format!(
            "length and duration must be positive, got {length} and {duration}"
        )));
    }
    Ok((length, duration))
}

/// Worldsheet presets, each taking `length=L,duration=T`.
pub fn presets() -> Registry<dyn Embedding> {
    let mut r: Registry<dyn Embedding> = Registry::new("worldsheet preset");
    r.register("static-string", |args| {
        let (length, duration) = length_duration(args)?;
        Ok(Box::new(StaticString { length, duration }))
    });
    r.register("collapsed-string", |args| {
        let (length, duration) = length_duration(args)?;
        Ok(Box::new(CollapsedString { length, duration }))
    });
    r.register("reparam-string", |args| {
        let (length, duration) = length_duration(args)?;
        Ok(Box::new(ReparameterizedString { length, duration }))
    });
    r
}

/// A worldsheet sampled on a rectangular `(tau, sigma)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSheet {
    tau: Vec<f64>,
    sigma: Vec<f64>,
    /// Row-major: `points[i * sigma.len() + j]` is `X(tau[i], sigma[j])`.
    points: Vec<FourVector>,
}

impl GridSheet {
    pub fn new(tau: Vec<f64>, sigma: Vec<f64>, points: Vec<FourVector>) -> Result<Self> {
        if tau.len() < 3 || sigma.len() < 3 {
            return Err(Error::InvalidWorldsheet(format!(
                "grid needs at least 3x3 nodes, got {}x{}",
                tau.len(),
                sigma.len()
            )));
        }
        if points.len() != tau.len() * sigma.len() {
            return Err(Error::InvalidWorldsheet("grid is not rectangular".into()));
        }
        for axis in [&tau, &sigma] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidWorldsheet(
                    "grid coordinates must be strictly increasing".into(),
                ));
            }
            let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
            if axis
                .windows(2)
                .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h)
            {
                return Err(Error::InvalidWorldsheet(
                    "grid spacing must be uniform".into(),
                ));
            }
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWorldsheet(
                "non-finite grid coordinate".into(),
            ));
        }
        Ok(GridSheet { tau, sigma, points })
    }

    /// Samples an embedding on an `n_tau x n_sigma` uniform grid.
    pub fn from_embedding(e: &dyn Embedding, n_tau: usize, n_sigma: usize) -> Result<Self> {
        let d = e.domain();
        let axis = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| a + (b - a) * k as f64 / (n.max(2) - 1) as f64)
                .collect()
        };
        let tau = axis(d.tau, n_tau);
        let sigma = axis(d.sigma, n_sigma);
        let mut points = Vec::with_capacity(tau.len() * sigma.len());
        for &t in &tau {
            for &s in &sigma {
                points.push(e.position(t, s));
            }
        }
        GridSheet::new(tau, sigma, points)
    }

    /// Reads CSV with header `tau,sigma,x0,x1,x2,x3`; rows may come in any order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let expected = ["tau", "sigma", "x0", "x1", "x2", "x3"];
        let header = rdr.headers()?.clone();
        if header.iter().ne(expected.iter().copied()) {
            return Err(Error::Csv(format!(
                "expected header `{}`",
                expected.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut vals = [0.0; 6];
            for (j, v) in vals.iter_mut().enumerate() {
                *v = rec[j]
                    .parse()
                    .map_err(|_| Error::Csv(format!("line {}: bad number {:?}", i + 2, &rec[j])))?;
            }
            rows.push(vals);
        }
        let axis = |k: usize| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let tau = axis(0);
        let sigma = axis(1);
        if rows.len() != tau.len() * sigma.len() {
            return Err(Error::InvalidWorldsheet("grid is not rectangular".into()));
        }
        let mut points = vec![[f64::NAN; 4]; rows.len()];
        for r in &rows {
            let i = tau.partition_point(|&v| v < r[0]);
            let j = sigma.partition_point(|&v| v < r[1]);
            points[i * sigma.len() + j] = [r[2], r[3], r[4], r[5]];
        }
        GridSheet::new(tau, sigma, points)
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn point(&self, i: usize, j: usize) -> FourVector {
        self.points[i * self.sigma.len() + j]
    }

    /// Tangent vectors at every node, same layout as the points.
    pub fn tangents(&self) -> Vec<(FourVector, FourVector)> {
        let (nt, ns) = (self.tau.len(), self.sigma.len());
        let mut out = vec![([0.0; 4], [0.0; 4]); nt * ns];
        for mu in 0..4 {
            for j in 0..ns {
                let col: Vec<f64> = (0..nt).map(|i| self.point(i, j)[mu]).collect();
                for (i, d) in three_point_slopes(&self.tau, &col).into_iter().enumerate() {
                    out[i * ns + j].0[mu] = d;
                }
            }
            for i in 0..nt {
                let row: Vec<f64> = (0..ns).map(|j| self.point(i, j)[mu]).collect();
                for (j, d) in three_point_slopes(&self.sigma, &row)
                    .into_iter()
                    .enumerate()
                {
                    out[i * ns + j].1[mu] = d;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum Worldsheet {
    Analytic(Arc<dyn Embedding>),
    Grid(GridSheet),
}

impl Worldsheet {
    pub fn analytic<E: Embedding + 'static>(e: E) -> Result<Self> {
        Self::from_embedding(Arc::new(e))
    }

    pub fn from_embedding(e: Arc<dyn Embedding>) -> Result<Self> {
        let d = e.domain();
        Rect::new(d.tau, d.sigma)
            .map_err(|_| Error::InvalidWorldsheet(format!("empty parameter domain {d:?}")))?;
        Ok(Worldsheet::Analytic(e))
    }

    /// Builds a preset from `name` and `key=value` arguments.
    pub fn preset(name: &str, args: &str) -> Result<Self> {
        Self::from_embedding(Arc::from(presets().create(name, args)?))
    }

    pub fn domain(&self) -> Rect {
        match self {
            Worldsheet::Analytic(e) => e.domain(),
            Worldsheet::Grid(g) => Rect {
                tau: (g.tau[0], *g.tau.last().unwrap()),
                sigma: (g.sigma[0], *g.sigma.last().unwrap()),
            },
        }
    }
}
