//! Action, swept area and worldsheet area functionals.
//!
//! For a particle moving along `x` with speed `v(t)`:
//!
//! * De Broglie radius `Lambda_B = h / (2 pi m v)` with `m` the relativistic mass.
//! * Swept area, spatial form: `A = int h / (m |v|) dx` over the covered `x` range.
//! * Swept area, temporal form: `A = (h / m0) int sqrt(1 - v^2/c^2) dt`.
//! * Action: `S = -m0 c^2 int sqrt(1 - v^2/c^2) dt`.
//! * World-line length: `L = c int sqrt(1 - v^2/c^2) dt`, so `S = -m0 c L`.
//!
//! Hence `|S| = (m0^2 c^2 / h) A`. The action is negative while the area is
//! not, so the identity is stated on magnitudes and `S` keeps its sign.
//!
//! All one-dimensional integrals run over a normalized parameter `s` in
//! `[0, 1]` so quadrature tolerances do not depend on the unit mode.

use crate::error::{Error, Result};
use crate::quadrature::{FunctionalResult, QuadratureSpec, Rect, Units};
use crate::quantities::{
    compton_length, proportionality_constant, relativistic_mass, Particle, UnitSystem,
};
use crate::trajectory::{full_precision, Trajectory, DEFAULT_COLLOCATION};
use crate::worldsheet::{radicand, Worldsheet};

/// Minimum `|v| / c` accepted by the spatial swept-area form.
pub const DEFAULT_V_FLOOR_FRACTION: f64 = 1e-3;

/// Nambu-Goto radicands above `-RADICAND_CLAMP` are treated as round-off and clamped to zero.
pub const RADICAND_CLAMP: f64 = 1e-12;

/// De Broglie length `h / (2 pi m v)` with relativistic mass `m`.
pub fn de_broglie_length(p: &Particle, v: f64, u: &UnitSystem) -> Result<f64> {
    if v == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    let m = relativistic_mass(p, v, u)?;
    Ok(u.h() / (2.0 * std::f64::consts::PI * m * v.abs()))
}

fn same_units(tr: &Trajectory, u: &UnitSystem) -> Result<()> {
    if tr.units() != u {
        return Err(Error::UnitMismatch);
    }
    Ok(())
}

/// `sqrt(1 - v^2/c^2)`, clamped at zero for paths touching the light cone.
fn rate(tr: &Trajectory, u: &UnitSystem, t: f64) -> Result<f64> {
    let beta = tr.velocity_at(t)?.abs() / u.c();
    Ok(((1.0 - beta) * (1.0 + beta)).max(0.0).sqrt())
}

/// `int sqrt(1 - v^2/c^2) dt` over the trajectory domain.
fn proper_time(tr: &Trajectory, u: &UnitSystem, q: &QuadratureSpec) -> Result<FunctionalResult> {
    same_units(tr, u)?;
    let (t0, t1) = (tr.t_start(), tr.t_end());
    let span = t1 - t0;
    let integrand = |s: f64| rate(tr, u, t0 + span * s);
    let r = q.rule()?.integrate(&integrand, 0.0, 1.0)?;
    Ok(r.scaled(span, Units::Raw))
}

/// Temporal swept area `(h / m0) int sqrt(1 - v^2/c^2) dt`. The canonical evaluator.
pub fn swept_area_temporal(
    tr: &Trajectory,
    p: &Particle,
    u: &UnitSystem,
    q: &QuadratureSpec,
) -> Result<FunctionalResult> {
    Ok(proper_time(tr, u, q)?.scaled(u.h() / p.rest_mass(), Units::Area))
}

/// Relativistic action `-m0 c^2 int sqrt(1 - v^2/c^2) dt`.
pub fn relativistic_action(
    tr: &Trajectory,
    p: &Particle,
    u: &UnitSystem,
    q: &QuadratureSpec,
) -> Result<FunctionalResult> {
    let c = u.c();
    Ok(proper_time(tr, u, q)?.scaled(-p.rest_mass() * c * c, Units::Action))
}

/// Minkowski length of the world line, `c int sqrt(1 - v^2/c^2) dt`.
pub fn worldline_length(
    tr: &Trajectory,
    u: &UnitSystem,
    q: &QuadratureSpec,
) -> Result<FunctionalResult> {
    Ok(proper_time(tr, u, q)?.scaled(u.c(), Units::Length))
}

/// Spatial swept area with the default velocity floor of `1e-3 c`.
pub fn swept_area_spatial(
    tr: &Trajectory,
    p: &Particle,
    u: &UnitSystem,
    q: &QuadratureSpec,
) -> Result<FunctionalResult> {
    swept_area_spatial_with_floor(tr, p, u, q, DEFAULT_V_FLOOR_FRACTION * u.c())
}

/// Spatial swept area `int 2 pi Lambda_B dx`, integrated from `x_i` to `x_f`.
///
/// Requires a monotone trajectory whose speed never drops below `v_floor`
/// (absolute speed). Each integrand evaluation inverts `x(t)`.
pub fn swept_area_spatial_with_floor(
    tr: &Trajectory,
    p: &Particle,
    u: &UnitSystem,
    q: &QuadratureSpec,
    v_floor: f64,
) -> Result<FunctionalResult> {
    same_units(tr, u)?;
    if !tr.is_monotone() {
        return Err(Error::NonMonotone);
    }
    let (slowest, _) = tr.speed_range(DEFAULT_COLLOCATION)?;
    if slowest < v_floor {
        return Err(Error::BelowVelocityFloor {
            speed: slowest,
            floor: v_floor,
        });
    }
    let x_i = tr.position_at(tr.t_start())?;
    let x_f = tr.position_at(tr.t_end())?;
    let (lo, hi) = if x_f > x_i { (x_i, x_f) } else { (x_f, x_i) };
    let width = hi - lo;
    // h / (m |v|) = (h / (m0 c)) * sqrt(1 - beta^2) / beta
    let integrand = |s: f64| -> Result<f64> {
        let x = if s >= 1.0 { hi } else { lo + width * s };
        let t = tr.time_at_position(x)?;
        let beta = tr.velocity_at(t)?.abs() / u.c();
        Ok(((1.0 - beta) * (1.0 + beta)).sqrt() / beta)
    };
    let r = q.rule()?.integrate(&integrand, 0.0, 1.0)?;
    Ok(r.scaled(compton_length(p, u) * width, Units::Area))
}

/// Nambu-Goto area `int sqrt((Xdot . X')^2 - Xdot^2 X'^2) dtau dsigma`.
pub fn nambu_goto_area(ws: &Worldsheet, q: &QuadratureSpec) -> Result<FunctionalResult> {
    let element = |tau: f64, sigma: f64, r: f64| -> Result<f64> {
        if r < -RADICAND_CLAMP {
            return Err(Error::NegativeRadicand {
                tau,
                sigma,
                value: r,
            });
        }
        Ok(r.max(0.0).sqrt())
    };
    let r = match ws {
        Worldsheet::Analytic(e) => {
            let integrand = |tau: f64, sigma: f64| {
                let (xd, xp) = e.tangents(tau, sigma);
                element(tau, sigma, radicand(&xd, &xp))
            };
            let d = e.domain();
            q.rule()?
                .integrate_2d(&integrand, &Rect::new(d.tau, d.sigma)?)?
        }
        Worldsheet::Grid(g) => {
            let tangents = g.tangents();
            let ns = g.sigma().len();
            let mut values = Vec::with_capacity(tangents.len());
            for (k, (xd, xp)) in tangents.iter().enumerate() {
                let (tau, sigma) = (g.tau()[k / ns], g.sigma()[k % ns]);
                values.push(element(tau, sigma, radicand(xd, xp))?);
            }
            grid_integral(g.tau(), g.sigma(), &values)
        }
    };
    Ok(FunctionalResult {
        units: Units::Area,
        ..r
    })
}

/// Node weights for a uniform grid: Simpson for even interval counts,
/// Simpson plus a closing 3/8 panel for odd ones.
fn node_weights(n_nodes: usize, h: f64) -> Vec<f64> {
    let n = n_nodes - 1;
    let mut w = vec![0.0; n_nodes];
    let simpson_end = if n.is_multiple_of(2) { n } else { n - 3 };
    for k in (0..simpson_end).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if simpson_end < n {
        let k = simpson_end;
        for (o, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[k + o] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

fn trapezoid_weights(n_nodes: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n_nodes];
    w[0] = 0.5 * h;
    w[n_nodes - 1] = 0.5 * h;
    w
}

/// Integrates tabulated values; the error estimate is the Simpson-trapezoid gap.
fn grid_integral(tau: &[f64], sigma: &[f64], values: &[f64]) -> FunctionalResult {
    let step = |a: &[f64]| (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64;
    let (ht, hs) = (step(tau), step(sigma));
    let apply = |wt: &[f64], ws: &[f64]| -> f64 {
        wt.iter()
            .enumerate()
            .map(|(i, a)| {
                a * ws
                    .iter()
                    .enumerate()
                    .map(|(j, b)| b * values[i * sigma.len() + j])
                    .sum::<f64>()
            })
            .sum()
    };
    let high = apply(&node_weights(tau.len(), ht), &node_weights(sigma.len(), hs));
    let low = apply(
        &trapezoid_weights(tau.len(), ht),
        &trapezoid_weights(sigma.len(), hs),
    );
    FunctionalResult {
        value: high,
        abs_error_estimate: (high - low).abs(),
        evaluations: values.len(),
        converged: true,
        units: Units::Area,
    }
}

/// Nambu-Goto action `T * area`.
pub fn nambu_goto_action(
    ws: &Worldsheet,
    tension: f64,
    q: &QuadratureSpec,
) -> Result<FunctionalResult> {
    if !(tension.is_finite() && tension > 0.0) {
        return Err(Error::InvalidTension(tension));
    }
    Ok(nambu_goto_area(ws, q)?.scaled(tension, Units::Action))
}

/// Action, swept area and their ratio for one trajectory and particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionReport {
    /// Signed action, never positive.
    pub action_s: FunctionalResult,
    pub area_a: FunctionalResult,
    /// `m0^2 c^2 / h`.
    pub constant_k: f64,
    /// `| |S| / (k A) - 1 |`, or `None` when `A = 0` (lightlike path).
    pub identity_residual: Option<f64>,
    pub worldline_length_l: FunctionalResult,
}

impl ActionReport {
    pub fn converged(&self) -> bool {
        self.action_s.converged && self.area_a.converged && self.worldline_length_l.converged
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let residual = self
            .identity_residual
            .map(full_precision)
            .unwrap_or_else(|| "undefined".into());
        format!(
            "action_S={}\narea_A={}\nconstant_k={}\nidentity_residual={}\nworldline_length_L={}\n",
            full_precision(self.action_s.value),
            full_precision(self.area_a.value),
            full_precision(self.constant_k),
            residual,
            full_precision(self.worldline_length_l.value),
        )
    }

    pub const CSV_HEADER: &'static str = "id,mass,S,A,k,kA,residual,status";

    pub fn to_csv_row(&self, id: &str, mass: f64) -> String {
        let (residual, status) = match self.identity_residual {
            Some(r) => (full_precision(r), "ok"),
            None => ("undefined".to_string(), "A=0: residual undefined"),
        };
        format!(
            "{id},{},{},{},{},{},{residual},{status}",
            full_precision(mass),
            full_precision(self.action_s.value),
            full_precision(self.area_a.value),
            full_precision(self.constant_k),
            full_precision(self.constant_k * self.area_a.value),
        )
    }
}

/// Evaluates `S`, `A`, `k` and `L` and checks `|S| = k A`.
pub fn verify_identity(
    tr: &Trajectory,
    p: &Particle,
    u: &UnitSystem,
    q: &QuadratureSpec,
) -> Result<ActionReport> {
    let action_s = relativistic_action(tr, p, u, q)?;
    let area_a = swept_area_temporal(tr, p, u, q)?;
    let worldline_length_l = worldline_length(tr, u, q)?;
    let constant_k = proportionality_constant(p, u);
    let identity_residual = (area_a.value > 0.0)
        .then(|| (action_s.value.abs() / area_a.value / constant_k - 1.0).abs());
    Ok(ActionReport {
        action_s,
        area_a,
        constant_k,
        identity_residual,
        worldline_length_l,
    })
}
