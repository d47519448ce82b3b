//! Fixed-endpoint path optimization on a uniform time grid.
//!
//! A path is a vector of node positions `x_0..x_N` at times `t_k = t_i + k dt`,
//! moving with constant velocity `u_j = (x_{j+1} - x_j) / dt` on each segment.
//! Both discrete objectives are multiples of the same discrete proper time
//!
//! ```text
//! tau(x) = sum_j dt * sqrt(1 - u_j^2 / c^2)
//! S(x)   = -m0 c^2 tau(x)        (action, minimized)
//! A(x)   = (h / m0) tau(x)       (swept area, maximized)
//! ```
//!
//! so they share stationary points exactly. The optimizer minimizes `S` or
//! `-A` by steepest descent with Armijo backtracking.

use std::fmt;

use crate::error::{Error, Result};
use crate::quantities::{Particle, UnitSystem};
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq)]
pub struct PathVariable {
    t_start: f64,
    t_end: f64,
    nodes: Vec<f64>,
    v_max: f64,
}

impl PathVariable {
    /// `nodes` includes both endpoints; `N = nodes.len() - 1` must be at least 4.
    pub fn new(t_start: f64, t_end: f64, nodes: Vec<f64>, v_max: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(Error::InvalidPath(format!(
                "time range [{t_start}, {t_end}] must satisfy t_i < t_f"
            )));
        }
        if nodes.len() < 5 {
            return Err(Error::InvalidPath(format!(
                "need at least 4 intervals, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPath("non-finite node position".into()));
        }
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidPath(format!(
                "v_max must be positive, got {v_max}"
            )));
        }
        let pv = PathVariable {
            t_start,
            t_end,
            nodes,
            v_max,
        };
        pv.check_feasible()?;
        Ok(pv)
    }

    /// Straight line between the endpoints.
    pub fn straight(
        (t_start, x_start): (f64, f64),
        (t_end, x_end): (f64, f64),
        intervals: usize,
        v_max: f64,
    ) -> Result<Self> {
        Self::new(t_start, t_end, line_nodes(x_start, x_end, intervals), v_max)
    }

    /// Straight line with interior nodes displaced alternately by `+-amplitude`.
    pub fn zigzag(
        start: (f64, f64),
        end: (f64, f64),
        intervals: usize,
        amplitude: f64,
        v_max: f64,
    ) -> Result<Self> {
        let mut nodes = line_nodes(start.1, end.1, intervals);
        let n = intervals.max(1);
        for (k, x) in nodes.iter_mut().enumerate().take(n).skip(1) {
            *x += if k % 2 == 1 { amplitude } else { -amplitude };
        }
        Self::new(start.0, end.0, nodes, v_max)
    }

    /// Amplitude giving interior segment speeds `v_line +- (v_max - |v_line|) / 2`.
    pub fn default_zigzag_amplitude(
        start: (f64, f64),
        end: (f64, f64),
        intervals: usize,
        v_max: f64,
    ) -> f64 {
        let dt = (end.0 - start.0) / intervals as f64;
        let v_line = ((end.1 - start.1) / (end.0 - start.0)).abs();
        0.25 * (v_max - v_line).max(0.0) * dt
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.intervals() as f64
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interior(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn time(&self, k: usize) -> f64 {
        let n = self.intervals();
        if k == n {
            self.t_end
        } else {
            self.t_start + (self.t_end - self.t_start) * (k as f64 / n as f64)
        }
    }

    /// `(t_k, x_k)` for every node.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, &x)| (self.time(k), x))
            .collect()
    }

    pub fn segment_velocities(&self) -> Vec<f64> {
        let dt = self.dt();
        self.nodes.windows(2).map(|w| (w[1] - w[0]) / dt).collect()
    }

    /// Same endpoints and grid, new interior nodes.
    pub fn with_interior(&self, interior: &[f64]) -> Result<Self> {
        if interior.len() != self.intervals() - 1 {
            return Err(Error::InvalidPath(format!(
                "expected {} interior nodes, got {}",
                self.intervals() - 1,
                interior.len()
            )));
        }
        let mut nodes = self.nodes.clone();
        let n = nodes.len();
        nodes[1..n - 1].copy_from_slice(interior);
        Self::new(self.t_start, self.t_end, nodes, self.v_max)
    }

    fn first_violation(&self) -> Option<(usize, f64)> {
        self.segment_velocities()
            .into_iter()
            .enumerate()
            .find(|(_, u)| !(u.abs() < self.v_max))
            .map(|(j, u)| (j, u.abs()))
    }

    fn check_feasible(&self) -> Result<()> {
        match self.first_violation() {
            Some((segment, speed)) => Err(Error::Infeasible {
                segment,
                speed,
                bound: self.v_max,
            }),
            None => Ok(()),
        }
    }
}

fn line_nodes(x_start: f64, x_end: f64, intervals: usize) -> Vec<f64> {
    let n = intervals.max(1);
    (0..=n)
        .map(|k| match k {
            0 => x_start,
            k if k == n => x_end,
            k => x_start + (x_end - x_start) * (k as f64 / n as f64),
        })
        .collect()
}

/// Discrete proper time `sum dt sqrt(1 - u^2/c^2)`.
fn proper_time(pv: &PathVariable, u: &UnitSystem) -> Result<f64> {
    pv.check_feasible()?;
    let dt = pv.dt();
    pv.segment_velocities()
        .into_iter()
        .map(|v| Ok(dt * u.proper_time_rate(v)?))
        .sum()
}

/// Gradient of the discrete proper time with respect to the interior nodes.
fn proper_time_gradient(pv: &PathVariable, u: &UnitSystem) -> Result<Vec<f64>> {
    pv.check_feasible()?;
    let c2 = u.c() * u.c();
    // w(u) = (u / c^2) / sqrt(1 - u^2/c^2) = -d/du sqrt(1 - u^2/c^2)
    let w = pv
        .segment_velocities()
        .into_iter()
        .map(|v| Ok(v / c2 / u.proper_time_rate(v)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(w.windows(2).map(|p| p[1] - p[0]).collect())
}

/// `tau(x + d) - tau(x)` for an interior displacement `d`, without cancellation.
fn proper_time_change(pv: &PathVariable, d: &[f64], u: &UnitSystem) -> Result<f64> {
    let dt = pv.dt();
    let c2 = u.c() * u.c();
    let n = pv.intervals();
    let disp = |k: usize| if k == 0 || k == n { 0.0 } else { d[k - 1] };
    let mut total = 0.0;
    for (j, v) in pv.segment_velocities().into_iter().enumerate() {
        let dv = (disp(j + 1) - disp(j)) / dt;
        if dv == 0.0 {
            continue;
        }
        let r0 = u.proper_time_rate(v)?;
        let r1 = u.proper_time_rate(v + dv)?;
        // sqrt(1 - (v+dv)^2/c^2) - sqrt(1 - v^2/c^2)
        total += dt * (-dv * (2.0 * v + dv) / c2) / (r0 + r1);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    ActionS,
    AreaA,
}

/// A discrete path functional, a constant multiple of the proper time.
pub trait PathObjective: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn kind(&self) -> ObjectiveKind;

    /// Factor multiplying the discrete proper time.
    fn coefficient(&self, p: &Particle, u: &UnitSystem) -> f64;

    /// `+1` if the optimizer minimizes the value, `-1` if it maximizes it.
    fn orientation(&self) -> f64;

    fn value(&self, pv: &PathVariable, p: &Particle, u: &UnitSystem) -> Result<f64> {
        Ok(self.coefficient(p, u) * proper_time(pv, u)?)
    }

    fn gradient(&self, pv: &PathVariable, p: &Particle, u: &UnitSystem) -> Result<Vec<f64>> {
        let k = self.coefficient(p, u);
        Ok(proper_time_gradient(pv, u)?
            .into_iter()
            .map(|g| k * g)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ActionObjective;

impl PathObjective for ActionObjective {
    fn name(&self) -> &'static str {
        "action"
    }

    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::ActionS
    }

    fn coefficient(&self, p: &Particle, u: &UnitSystem) -> f64 {
        -p.rest_mass() * u.c() * u.c()
    }

    fn orientation(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AreaObjective;

impl PathObjective for AreaObjective {
    fn name(&self) -> &'static str {
        "area"
    }

    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::AreaA
    }

    fn coefficient(&self, p: &Particle, u: &UnitSystem) -> f64 {
        u.h() / p.rest_mass()
    }

    fn orientation(&self) -> f64 {
        -1.0
    }
}

impl ObjectiveKind {
    pub fn objective(self) -> Box<dyn PathObjective> {
        match self {
            ObjectiveKind::ActionS => Box::new(ActionObjective),
            ObjectiveKind::AreaA => Box::new(AreaObjective),
        }
    }
}

/// Objectives keyed by command-line name (`action`, `area`).
pub fn objectives() -> Registry<dyn PathObjective> {
    let mut r: Registry<dyn PathObjective> = Registry::new("objective");
    r.register("action", |_| Ok(Box::new(ActionObjective)));
    r.register("area", |_| Ok(Box::new(AreaObjective)));
    r
}

/// Discrete `S` (never positive) or `A` (never negative).
pub fn discrete_objective(
    pv: &PathVariable,
    which: ObjectiveKind,
    p: &Particle,
    u: &UnitSystem,
) -> Result<f64> {
    which.objective().value(pv, p, u)
}

/// Gradient of [`discrete_objective`] with respect to the `N - 1` interior nodes.
pub fn gradient(
    pv: &PathVariable,
    which: ObjectiveKind,
    p: &Particle,
    u: &UnitSystem,
) -> Result<Vec<f64>> {
    which.objective().gradient(pv, p, u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeSettings {
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// First trial step; later iterations start from twice the last accepted step.
    pub initial_step: f64,
    pub record_trace: bool,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            grad_tol: 1e-10,
            max_iter: 100_000,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub path: PathVariable,
    /// Value of the objective (not its negative) at the returned path.
    pub objective: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Minimized quantity after each accepted step, when requested. Built from the
    /// initial value plus the round-off-free per-step changes.
    pub trace: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Steepest descent on `orientation * objective` with Armijo backtracking.
///
/// Trial points that leave the feasible region are treated like failed Armijo
/// tests: the step shrinks until the iterate lies strictly inside the speed bound.
pub fn optimize(
    initial: &PathVariable,
    objective: &dyn PathObjective,
    p: &Particle,
    u: &UnitSystem,
    settings: &OptimizeSettings,
) -> Result<OptimizeResult> {
    let sign = objective.orientation();
    let k = sign * objective.coefficient(p, u);
    let mut path = initial.clone();
    let mut grad: Vec<f64> = objective
        .gradient(&path, p, u)?
        .into_iter()
        .map(|g| sign * g)
        .collect();
    let mut gnorm = norm(&grad);
    let mut step = settings.initial_step;
    let mut trace = Vec::new();
    let mut iterations = 0;

    if settings.record_trace {
        trace.push(sign * objective.value(&path, p, u)?);
    }
    while gnorm > settings.grad_tol && iterations < settings.max_iter {
        let mut accepted = None;
        for _ in 0..1100 {
            let d: Vec<f64> = grad.iter().map(|g| -step * g).collect();
            let trial: Vec<f64> = path
                .interior()
                .iter()
                .zip(&d)
                .map(|(x, dx)| x + dx)
                .collect();
            if let Ok(candidate) = path.with_interior(&trial) {
                let change = k * proper_time_change(&path, &d, u)?;
                if change <= -settings.armijo * step * gnorm * gnorm {
                    accepted = Some((candidate, change));
                    break;
                }
            }
            step *= settings.shrink;
            if step == 0.0 {
                break;
            }
        }
        // no representable step decreases the objective: stop with what we have
        let Some((next, change)) = accepted else {
            break;
        };
        path = next;
        grad = objective
            .gradient(&path, p, u)?
            .into_iter()
            .map(|g| sign * g)
            .collect();
        gnorm = norm(&grad);
        iterations += 1;
        step /= settings.shrink;
        if let Some(&last) = trace.last() {
            trace.push(last + change);
        }
    }
    Ok(OptimizeResult {
        objective: objective.value(&path, p, u)?,
        converged: gnorm <= settings.grad_tol,
        path,
        iterations,
        gradient_norm: gnorm,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat() -> UnitSystem {
        UnitSystem::natural()
    }

    fn p1() -> Particle {
        Particle::new(1.0).unwrap()
    }

    fn line(n: usize) -> PathVariable {
        PathVariable::straight((0.0, 0.0), (10.0, 6.0), n, 0.99).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(PathVariable::straight((0.0, 0.0), (10.0, 6.0), 3, 0.99).is_err());
        assert!(PathVariable::straight((0.0, 0.0), (1.0, 0.0), 4, 0.99).is_ok());
        assert!(matches!(
            PathVariable::straight((0.0, 0.0), (10.0, 10.0), 8, 0.99),
            Err(Error::Infeasible { .. })
        ));
        assert!(PathVariable::new(1.0, 0.0, vec![0.0; 5], 0.99).is_err());
        let pv = line(8);
        assert!(pv.with_interior(&[0.0; 3]).is_err());
    }

    #[test]
    fn objective_examples() {
        let pv = line(10);
        let s = discrete_objective(&pv, ObjectiveKind::ActionS, &p1(), &nat()).unwrap();
        let a = discrete_objective(&pv, ObjectiveKind::AreaA, &p1(), &nat()).unwrap();
        assert!((s + 8.0).abs() < 1e-12);
        assert!((a - 8.0).abs() < 1e-12);
        let rest = PathVariable::straight((0.0, 1.0), (5.0, 1.0), 6, 0.99).unwrap();
        assert_eq!(
            discrete_objective(&rest, ObjectiveKind::ActionS, &p1(), &nat()).unwrap(),
            -5.0
        );
        let p = Particle::new(3.0).unwrap();
        let s = discrete_objective(&pv, ObjectiveKind::ActionS, &p, &nat()).unwrap();
        let a = discrete_objective(&pv, ObjectiveKind::AreaA, &p, &nat()).unwrap();
        assert!((s + 9.0 * a).abs() < 1e-12);
    }

    #[test]
    fn straight_line_is_stationary() {
        let g = gradient(&line(32), ObjectiveKind::ActionS, &p1(), &nat()).unwrap();
        assert_eq!(g.len(), 31);
        assert!(norm(&g) < 1e-12);
    }

    #[test]
    fn perturbed_node_is_pushed_back() {
        let pv = line(16);
        let mut interior = pv.interior().to_vec();
        interior[7] += 0.05;
        let bumped = pv.with_interior(&interior).unwrap();
        for which in [ObjectiveKind::ActionS, ObjectiveKind::AreaA] {
            let obj = which.objective();
            let g = obj.gradient(&bumped, &p1(), &nat()).unwrap();
            // descent direction of the minimized quantity points back toward the line
            assert!(-obj.orientation() * g[7] < 0.0, "{which:?}");
        }
    }

    #[test]
    fn change_matches_direct_difference() {
        let pv = PathVariable::zigzag((0.0, 0.0), (10.0, 6.0), 12, 0.05, 0.99).unwrap();
        let d: Vec<f64> = (0..11).map(|k| 0.01 * (k as f64).sin()).collect();
        let moved: Vec<f64> = pv.interior().iter().zip(&d).map(|(a, b)| a + b).collect();
        let next = pv.with_interior(&moved).unwrap();
        let direct = proper_time(&next, &nat()).unwrap() - proper_time(&pv, &nat()).unwrap();
        let stable = proper_time_change(&pv, &d, &nat()).unwrap();
        assert!((direct - stable).abs() < 1e-14);
    }

    #[test]
    fn segment_on_bound_is_reported() {
        let pv = line(8);
        let mut interior = pv.interior().to_vec();
        let dt = pv.dt();
        interior[0] = 0.99 * dt;
        assert!(matches!(
            pv.with_interior(&interior),
            Err(Error::Infeasible { segment: 0, .. })
        ));
    }

    #[test]
    fn straight_start_converges_immediately() {
        let pv = line(32);
        let r = optimize(
            &pv,
            &ActionObjective,
            &p1(),
            &nat(),
            &OptimizeSettings::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        for (a, b) in r.path.nodes().iter().zip(pv.nodes()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn descent_is_monotone_and_endpoints_pinned() {
        let amp = PathVariable::default_zigzag_amplitude((0.0, 0.0), (10.0, 6.0), 16, 0.99);
        let pv = PathVariable::zigzag((0.0, 0.0), (10.0, 6.0), 16, amp, 0.99).unwrap();
        let settings = OptimizeSettings {
            record_trace: true,
            ..Default::default()
        };
        for obj in [&ActionObjective as &dyn PathObjective, &AreaObjective] {
            let r = optimize(&pv, obj, &p1(), &nat(), &settings).unwrap();
            assert!(r.converged);
            for w in r.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15 * w[0].abs(), "{} > {}", w[1], w[0]);
            }
            assert_eq!(r.path.nodes()[0].to_bits(), pv.nodes()[0].to_bits());
            assert_eq!(r.path.nodes()[16].to_bits(), pv.nodes()[16].to_bits());
        }
    }

    #[test]
    fn budget_exhaustion_returns_best_so_far() {
        let pv = PathVariable::zigzag((0.0, 0.0), (10.0, 6.0), 16, 0.05, 0.99).unwrap();
        let settings = OptimizeSettings {
            max_iter: 3,
            ..Default::default()
        };
        let r = optimize(&pv, &ActionObjective, &p1(), &nat(), &settings).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        let start = discrete_objective(&pv, ObjectiveKind::ActionS, &p1(), &nat()).unwrap();
        assert!(r.objective < start);
    }

    #[test]
    fn converged_objective_is_grid_independent() {
        let mut values = Vec::new();
        for n in [8, 16, 32] {
            let amp = PathVariable::default_zigzag_amplitude((0.0, 0.0), (10.0, 6.0), n, 0.99);
            let pv = PathVariable::zigzag((0.0, 0.0), (10.0, 6.0), n, amp, 0.99).unwrap();
            let r = optimize(&pv, &ActionObjective, &p1(), &nat(), &Default::default()).unwrap();
            assert!(r.converged);
            values.push(r.objective);
        }
        // the free-particle discrete optimum is exact, so refinement changes nothing
        for w in values.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn registry_names() {
        let r = objectives();
        assert_eq!(r.names().collect::<Vec<_>>(), ["action", "area"]);
        assert_eq!(r.create("area", "").unwrap().kind(), ObjectiveKind::AreaA);
    }
}
