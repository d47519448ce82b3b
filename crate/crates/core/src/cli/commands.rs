use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{
    parse_range, CliError, CliResult, EvalArgs, InitArg, NambuGotoArgs, OptimizeArgs, SweepArgs,
    TrajectoryArgs, VerifyArgs,
};
use crate::error::Error;
use crate::expr::{self, Expr};
use crate::functionals::{
    de_broglie_length, nambu_goto_area, swept_area_spatial_with_floor, verify_identity,
    ActionReport,
};
use crate::quadrature::{QuadratureSpec, Units};
use crate::quantities::{Particle, UnitSystem};
use crate::trajectory::{full_precision, write_points, Trajectory};
use crate::variational::{objectives, optimize, OptimizeSettings, PathVariable};
use crate::worldsheet::{GridSheet, Worldsheet};

fn unconverged() -> CliError {
    CliError::numerical("quadrature did not converge")
}

/// Writes `body` to `--out` when given, otherwise to `out`.
fn emit(path: Option<&Path>, out: &mut dyn Write, body: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(
                File::create(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
            );
            f.write_all(body.as_bytes())?;
            f.flush()?;
        }
        None => {
            if !body.is_empty() {
                writeln!(out)?;
            }
            out.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn load_trajectory(a: &TrajectoryArgs, u: &UnitSystem) -> CliResult<Trajectory> {
    match (&a.expr, &a.csv) {
        (Some(text), None) => Ok(Trajectory::from_expression(text, a.t0, a.t1, *u)?),
        (None, Some(path)) => Ok(Trajectory::read_csv_path(path, *u)?),
        _ => Err(CliError::input(
            "exactly one of --expr or --csv is required",
        )),
    }
}

fn sample_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        1 => vec![t0],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * (i as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let u = a.common.units()?;
    let p = a.common.particle()?;
    let q = a.common.quadrature()?;
    if a.samples == 0 {
        return Err(CliError::input("--samples must be at least 1"));
    }
    if !(a.v_floor.is_finite() && a.v_floor > 0.0 && a.v_floor < 1.0) {
        return Err(CliError::input("--v-floor must lie in (0, 1)"));
    }
    let tr = load_trajectory(&a.trajectory, &u)?;
    let report = verify_identity(&tr, &p, &u, &q)?;

    let spatial = match swept_area_spatial_with_floor(&tr, &p, &u, &q, a.v_floor * u.c()) {
        Ok(r) => full_precision(r.value),
        Err(Error::NonMonotone | Error::BelowVelocityFloor { .. }) => "undefined".into(),
        Err(e) => return Err(e.into()),
    };

    let mut table = String::from("t,x,v,lambda_B\n");
    for t in sample_times(tr.t_start(), tr.t_end(), a.samples) {
        let x = tr.position_at(t)?;
        let v = tr.velocity_at(t)?;
        let lambda = match de_broglie_length(&p, v, &u) {
            Ok(l) => full_precision(l),
            Err(Error::ZeroVelocity) => "undefined".into(),
            Err(e) => return Err(e.into()),
        };
        table.push_str(&format!(
            "{},{},{},{lambda}\n",
            full_precision(t),
            full_precision(x),
            full_precision(v)
        ));
    }

    write!(
        out,
        "units={}\nmass={}\n{}area_A_spatial={spatial}\naction_S_error={}\narea_A_error={}\nconverged={}\n",
        u.mode(),
        full_precision(p.rest_mass()),
        report.to_key_value(),
        full_precision(report.action_s.abs_error_estimate),
        full_precision(report.area_a.abs_error_estimate),
        report.converged(),
    )?;
    emit(a.common.out.as_deref(), out, &table)?;
    if !report.converged() {
        return Err(unconverged());
    }
    Ok(())
}

/// Analytic member that may be lightlike; superluminal members are rejected.
fn analytic_member(e: Expr, t0: f64, t1: f64, u: &UnitSystem) -> CliResult<Trajectory> {
    match Trajectory::analytic(e.clone(), t0, t1, *u) {
        Ok(tr) => Ok(tr),
        Err(Error::SpeedLimit { .. }) => Ok(Trajectory::analytic_lightlike(e, t0, t1, *u)?),
        Err(e) => Err(e.into()),
    }
}

fn csv_files(path: &Path) -> CliResult<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::input(format!(
            "no .csv files in {}",
            path.display()
        )));
    }
    Ok(files)
}

/// Shortest decimal of `v` rounded to 12 significant digits.
fn label(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn verify_members(a: &VerifyArgs, u: &UnitSystem) -> CliResult<Vec<(String, Trajectory)>> {
    let t = &a.trajectory;
    match (&t.expr, &t.csv, &a.param) {
        (Some(text), None, None) => Ok(vec![(
            "expr".to_string(),
            analytic_member(expr::parse(text)?, t.t0, t.t1, u)?,
        )]),
        (Some(text), None, Some(spec)) => {
            let (name, values) = parse_range(spec)?;
            let family = expr::parse_with_params(text, &[name.as_str()])?;
            values
                .into_iter()
                .map(|v| {
                    let member = family.substitute(&name, v);
                    Ok((
                        format!("{name}={}", label(v)),
                        analytic_member(member, t.t0, t.t1, u)?,
                    ))
                })
                .collect()
        }
        (None, Some(path), None) => csv_files(path)?
            .into_iter()
            .map(|f| {
                let id = f
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Ok((id, Trajectory::read_csv_path(&f, *u)?))
            })
            .collect(),
        (None, Some(_), Some(_)) => Err(CliError::input("--param requires --expr")),
        _ => Err(CliError::input(
            "exactly one of --expr or --csv is required",
        )),
    }
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let u = a.common.units()?;
    let masses = a.common.masses()?;
    let q = a.common.quadrature()?;
    if !(a.threshold.is_finite() && a.threshold > 0.0) {
        return Err(CliError::input("--threshold must be positive"));
    }
    let members = verify_members(a, &u)?;
    let jobs: Vec<(&str, &Trajectory, Particle)> = members
        .iter()
        .flat_map(|(id, tr)| masses.iter().map(move |p| (id.as_str(), tr, *p)))
        .collect();
    let reports: Vec<(String, ActionReport)> = jobs
        .par_iter()
        .map(|&(id, tr, p)| -> Result<_, Error> {
            let r = verify_identity(tr, &p, &u, &q)?;
            Ok((r.to_csv_row(id, p.rest_mass()), r))
        })
        .collect::<Result<_, _>>()?;

    let mut body = format!("{}\n", ActionReport::CSV_HEADER);
    for (row, _) in &reports {
        body.push_str(row);
        body.push('\n');
    }
    let max_residual = reports
        .iter()
        .filter_map(|(_, r)| r.identity_residual)
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |m| m.max(r)))
        });
    let undefined = reports
        .iter()
        .filter(|(_, r)| r.identity_residual.is_none())
        .count();
    let all_converged = reports.iter().all(|(_, r)| r.converged());

    match &a.common.out {
        Some(path) => emit(Some(path), out, &body)?,
        None => out.write_all(body.as_bytes())?,
    }
    writeln!(
        out,
        "# max_residual={} members={} undefined={undefined}",
        max_residual.map_or_else(|| "undefined".into(), full_precision),
        reports.len()
    )?;

    if !all_converged {
        return Err(unconverged());
    }
    match max_residual {
        None => Err(CliError::numerical("no member with a defined residual")),
        Some(r) if r >= a.threshold => Err(CliError::numerical(format!(
            "max residual {} >= threshold {}",
            full_precision(r),
            full_precision(a.threshold)
        ))),
        Some(_) => Ok(()),
    }
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let u = a.common.units()?;
    let p = a.common.particle()?;
    let (name, speeds) = parse_range(&a.param)?;
    if name != "v" {
        return Err(CliError::input(format!(
            "sweep parameter must be v, got {name:?}"
        )));
    }
    let c = u.c();
    if let Some(v) = speeds.iter().find(|&&v| !(v > 0.0 && v < c)) {
        return Err(CliError::input(format!(
            "speed {v} outside the open interval (0, c = {c})"
        )));
    }
    let m0 = p.rest_mass();
    let rows: Vec<String> = speeds
        .par_iter()
        .map(|&v| -> Result<String, Error> {
            let lambda = de_broglie_length(&p, v, &u)?;
            let gamma = u.lorentz_factor(v)?;
            let rate = u.proper_time_rate(v)?;
            Ok(format!(
                "{},{},{},{},{}\n",
                full_precision(v),
                full_precision(lambda),
                full_precision(gamma),
                full_precision(u.h() / m0 * rate),
                full_precision(-m0 * c * c * rate),
            ))
        })
        .collect::<Result<_, _>>()?;
    let mut body = String::from("v,lambda_B,gamma,dA_dt,dS_dt\n");
    body.extend(rows);
    match &a.common.out {
        Some(path) => emit(Some(path), out, &body),
        None => Ok(out.write_all(body.as_bytes())?),
    }
}

pub fn cmd_optimize(a: &OptimizeArgs, out: &mut dyn Write) -> CliResult<()> {
    let u = a.common.units()?;
    let p = a.common.particle()?;
    let objective = objectives().create(&a.objective, "")?;
    if !(a.v_max > 0.0 && a.v_max < 1.0) {
        return Err(CliError::input("--v-max must lie in (0, 1)"));
    }
    if !(a.t1 > a.t0) {
        return Err(CliError::input("--t1 must exceed --t0"));
    }
    let v_max = a.v_max * u.c();
    let v_line = ((a.x1 - a.x0) / (a.t1 - a.t0)).abs();
    if !(v_line < v_max) {
        return Err(CliError::input(format!(
            "infeasible endpoints: straight-line speed {} >= v_max {}",
            full_precision(v_line),
            full_precision(v_max)
        )));
    }
    let start = (a.t0, a.x0);
    let end = (a.t1, a.x1);
    let initial = match a.init {
        InitArg::Line => PathVariable::straight(start, end, a.nodes, v_max)?,
        InitArg::Zigzag => {
            let amp = a.amplitude.unwrap_or_else(|| {
                PathVariable::default_zigzag_amplitude(start, end, a.nodes, v_max)
            });
            PathVariable::zigzag(start, end, a.nodes, amp, v_max)?
        }
    };
    let settings = OptimizeSettings {
        grad_tol: a.grad_tol,
        max_iter: a.max_iter,
        ..OptimizeSettings::default()
    };
    let r = optimize(&initial, objective.as_ref(), &p, &u, &settings)?;

    write!(
        out,
        "objective={}\nvalue={}\niterations={}\ngradient_norm={}\nconverged={}\n",
        objective.name(),
        full_precision(r.objective),
        r.iterations,
        full_precision(r.gradient_norm),
        r.converged
    )?;
    let mut body = Vec::new();
    write_points(&mut body, &r.path.points())?;
    emit(
        a.common.out.as_deref(),
        out,
        &String::from_utf8(body).expect("csv output is utf-8"),
    )?;
    if !r.converged {
        return Err(CliError::numerical(format!(
            "optimizer did not converge: gradient norm {} after {} iterations",
            full_precision(r.gradient_norm),
            r.iterations
        )));
    }
    Ok(())
}

pub fn cmd_nambu_goto(a: &NambuGotoArgs, out: &mut dyn Write) -> CliResult<()> {
    let q: QuadratureSpec = a.common.quadrature()?;
    let ws = match (&a.preset, &a.csv) {
        (Some(name), None) => Worldsheet::preset(
            name,
            &format!("length={},duration={}", a.length, a.duration),
        )?,
        (None, Some(path)) => {
            let f = File::open(path)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Worldsheet::Grid(GridSheet::read_csv(f)?)
        }
        _ => {
            return Err(CliError::input(
                "exactly one of --preset or --csv is required",
            ))
        }
    };
    if !(a.tension.is_finite() && a.tension > 0.0) {
        return Err(Error::InvalidTension(a.tension).into());
    }
    let area = nambu_goto_area(&ws, &q)?;
    let action = area.scaled(a.tension, Units::Action);
    write!(
        out,
        "area={}\narea_error={}\ntension={}\naction={}\nconverged={}\n",
        full_precision(area.value),
        full_precision(area.abs_error_estimate),
        full_precision(a.tension),
        full_precision(action.value),
        area.converged
    )?;
    if !area.converged {
        return Err(unconverged());
    }
    Ok(())
}
