//! `verify`: invariant checks on the configured run, one report line per check.

use std::fmt;

use dynpolar::angles::{additivity_residual, angle_from_rotation_history, dynamic_angle, intrinsic_angle, relative_angle, AngleKind};
use dynpolar::dpd::{decompose, decompose_by_odes, process_residual, spin_free_residual};
use dynpolar::fibers::{circle_averaged_angular_velocity, fiber_average_polar, fiber_averaged_angular_velocity, Lcg64};
use dynpolar::fields::FieldSample;
use dynpolar::frames::{dpd_objectivity_residuals, phi_objectivity_2d, psi_invariance, vorticity_transform_residual};
use dynpolar::integrate::{advect, deformation_history};
use dynpolar::linalg::{planar_rotation, singular_values, skew_from, sym_eigen, Dim, Mat, Vector};
use dynpolar::mean_rotation::BodyMeans;
use dynpolar::polar::{nonadditivity_residual, polar_decompose, polar_rate_memory_gap, polar_via_ode};
use dynpolar::VelocityField;

use crate::commands::{axis_field, comment};
use crate::config::{QuadratureSpec, Resolved, RunConfig};
use crate::csv::{number, CsvTable};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Dpd,
    Polar,
    Angles,
    Fibers,
    Frames,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Below(f64),
    Above(f64),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Below(t) => write!(f, "<{t:e}"),
            Bound::Above(t) => write!(f, ">{t:e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    bound: Bound,
}

impl Check {
    fn below(name: &str, value: f64, tol: f64) -> Check {
        Check { name: name.into(), value, bound: Bound::Below(tol) }
    }

    fn above(name: &str, value: f64, floor: f64) -> Check {
        Check { name: name.into(), value, bound: Bound::Above(floor) }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::Below(t) => self.value < t,
            Bound::Above(t) => self.value > t,
        }
    }
}

fn max_over<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> f64) -> f64 {
    items.into_iter().map(f).fold(0.0, f64::max)
}

fn dpd_checks(r: &Resolved) -> Result<Vec<Check>, CliError> {
    let traj = advect(&r.field, &r.x0, &r.grid)?;
    let (hist, fac) = decompose(&traj)?;
    let split = (r.grid.steps() / 3).max(1).min(r.grid.steps());
    let u = polar_decompose(hist.last())?.u;
    let sv = singular_values(fac.m.last().expect("non-empty"));
    let spectrum = max_over(sv.iter().zip(sym_eigen(&u).values()), |(a, b)| (a - b).abs());
    let by_odes = decompose_by_odes(&r.field, &r.x0, &r.grid)?;
    let ode_gap = max_over(0..r.grid.len(), |k| (by_odes.m[k] - fac.m[k]).max_abs());
    Ok(vec![
        Check::below("dpd.process_residual_O", process_residual(&traj, split)?, 1e-8),
        Check::below("dpd.reconstruction_relative", fac.reconstruction_residual(&hist)?, 1e-8),
        Check::below("dpd.spin_free_residual_M", spin_free_residual(&fac.m, &r.grid)?, 1e-4),
        Check::below("dpd.spectrum_match", spectrum, 1e-8),
        Check::below("dpd.M_ode_vs_algebraic", ode_gap, 1e-6),
    ])
}

fn polar_checks(r: &Resolved) -> Result<Vec<Check>, CliError> {
    let (traj, hist) = deformation_history(&r.field, &r.x0, &r.grid)?;
    let ode = polar_via_ode(&traj)?;
    let mut gap = 0.0f64;
    for k in 0..r.grid.len() {
        let p = polar_decompose(&hist.f[k])?;
        gap = gap.max((ode.r[k] - p.r).max_abs()).max((ode.u[k] - p.u).max_abs());
    }
    let shear = VelocityField::PlanarShear { k: 1.0 };
    let origin = Vector::new2(0.0, 0.0);
    let non_add = nonadditivity_residual(&shear, &origin, 0.0, 1.0, 2.0, 2000)?;
    let beta = |t: f64, tau: f64| -(0.5 * (t - tau)).atan();
    let closed = (planar_rotation(beta(2.0, 1.0) + beta(1.0, 0.0)) - planar_rotation(beta(2.0, 0.0))).norm();
    let rigid = VelocityField::RigidRotation { omega: Vector::new3(0.2, -0.4, 1.0) };
    let y0 = Vector::new3(1.0, 0.3, -0.5);
    Ok(vec![
        Check::below("polar.ode_vs_algebraic", gap, 1e-5),
        Check::below("polar.shear_nonadditivity_vs_closed_form", (non_add - closed).abs(), 1e-8),
        Check::above("polar.shear_memory_gap", polar_rate_memory_gap(&shear, &origin, 0.0, 1.0, 2.0, 2000)?, 1e-2),
        Check::below("polar.rigid_nonadditivity", nonadditivity_residual(&rigid, &y0, 0.0, 1.0, 2.0, 2000)?, 1e-8),
    ])
}

fn angle_checks(r: &Resolved, seed: u64) -> Result<Vec<Check>, CliError> {
    let g = axis_field(r);
    let mut rng = Lcg64::new(seed);
    let steps = r.grid.steps();
    let sigma = if steps < 2 { None } else { Some(r.grid.node(1 + (rng.next_u64() % (steps as u64 - 1)) as usize)) };
    let mut checks = Vec::new();
    if let Some(sigma) = sigma {
        for (name, kind) in [
            ("angles.additivity_dynamic", AngleKind::Dynamic(g.clone())),
            ("angles.additivity_relative", AngleKind::Relative(g.clone(), r.sampler.clone())),
            ("angles.additivity_intrinsic", AngleKind::Intrinsic(r.sampler.clone())),
        ] {
            checks.push(Check::below(name, additivity_residual(&kind, &r.field, &r.x0, &r.grid, sigma)?, 1e-12));
        }
    }
    let traj = advect(&r.field, &r.x0, &r.grid)?;
    let means = BodyMeans::compute(&r.field, &r.sampler, &r.grid)?;
    let rel = relative_angle(&traj, &g, &means.node_omega)?;
    let psi = intrinsic_angle(&traj, &means.node_omega)?;
    let excess = rel.value.iter().zip(&psi.value).map(|(a, b)| a.abs() - b).fold(0.0, f64::max);
    checks.push(Check::below("angles.psi_dominates_relative", excess, 1e-12));
    let (_, fac) = decompose(&traj)?;
    let oracle = angle_from_rotation_history(&fac.o, &traj, &g)?;
    let phi = dynamic_angle(&traj, &g)?;
    checks.push(Check::below("angles.rotation_history_oracle", max_over(oracle.value.iter().zip(&phi.value), |(a, b)| (a - b).abs()), 1e-4));
    Ok(checks)
}

fn fiber_checks(cfg: &RunConfig, r: &Resolved) -> Result<Vec<Check>, CliError> {
    let traj = advect(&r.field, &r.x0, &r.grid)?;
    let stride = (r.grid.steps() / 40).max(1);
    let mut checks = Vec::new();
    match r.field.dim() {
        Dim::Three => {
            let mut worst = 0.0f64;
            for s in traj.node_samples.iter().step_by(stride) {
                let nu = average(cfg, r, s)?;
                worst = worst.max((nu - s.omega * 0.5).norm());
            }
            checks.push(Check::below("fibers.nu_vs_half_omega", worst, 1e-8));
        }
        Dim::Two => {
            let mut worst = 0.0f64;
            for s in traj.node_samples.iter().step_by(stride) {
                worst = worst.max((circle_averaged_angular_velocity(s, 64)? - 0.5 * s.omega[2]).abs());
            }
            checks.push(Check::below("fibers.circle_average_vs_half_omega3", worst, 1e-10));
        }
    }
    let omega = Vector::new3(0.4, -1.1, 0.7);
    let rigid = FieldSample::from_gradient(Vector::zeros(Dim::Three), skew_from(&omega));
    checks.push(Check::below("fibers.rigid_rotation", (average(cfg, r, &rigid)? - omega).norm(), 1e-8));
    let strain = FieldSample::from_gradient(Vector::zeros(Dim::Three), Mat::diag(&[0.9, -0.2, -0.7])?);
    checks.push(Check::below("fibers.pure_strain", average(cfg, r, &strain)?.norm(), 1e-8));
    Ok(checks)
}

fn average(cfg: &RunConfig, r: &Resolved, s: &FieldSample) -> Result<Vector, CliError> {
    Ok(match (&r.quadrature, &cfg.quadrature) {
        (Some(q), _) => fiber_averaged_angular_velocity(s, q)?,
        (None, QuadratureSpec::PolarAngle { n_psi, n_phi }) => fiber_average_polar(s, *n_psi, *n_phi)?,
        (None, _) => unreachable!("only the polar-angle rule is built lazily"),
    })
}

fn frame_checks(r: &Resolved) -> Result<Vec<Check>, CliError> {
    let obj = dpd_objectivity_residuals(&r.field, &r.x0, &r.grid, &r.frame)?;
    let mut checks = vec![
        Check::below("frames.rN", obj.r_n, 1e-5),
        Check::below("frames.rM", obj.r_m, 1e-5),
        Check::below("frames.rO", obj.r_o, 1e-5),
        Check::below("frames.singular_values_N", obj.singular_value_gap, 1e-8),
    ];
    if r.field.dim() == Dim::Two {
        checks.push(Check::below("frames.phi_objectivity_2d", phi_objectivity_2d(&r.field, &r.x0, &r.grid, &r.sampler, &r.frame)?, 1e-5));
    }
    checks.push(Check::below("frames.psi_invariance", psi_invariance(&r.field, &r.x0, &r.grid, &r.sampler, &r.frame)?, 1e-6));
    let traj = advect(&r.field, &r.x0, &r.grid)?;
    let stride = (r.grid.steps() / 10).max(1);
    let mut worst = 0.0f64;
    for k in (0..r.grid.len()).step_by(stride) {
        let t = r.grid.node(k);
        worst = worst.max(vorticity_transform_residual(&r.field, &r.frame, &traj.points[k..=k], t)?);
    }
    checks.push(Check::below("frames.vorticity_transform", worst, 1e-8));
    Ok(checks)
}

pub fn run_suite(suite: Suite, cfg: &RunConfig, r: &Resolved) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Dpd {
        checks.extend(dpd_checks(r)?);
    }
    if all || suite == Suite::Polar {
        checks.extend(polar_checks(r)?);
    }
    if all || suite == Suite::Angles {
        checks.extend(angle_checks(r, cfg.seed)?);
    }
    if all || suite == Suite::Fibers {
        checks.extend(fiber_checks(cfg, r)?);
    }
    if all || suite == Suite::Frames {
        checks.extend(frame_checks(r)?);
    }
    Ok(checks)
}

pub fn report(cfg: &RunConfig, checks: &[Check]) -> CsvTable {
    let mut table = CsvTable::new(comment("verify", cfg), ["name", "value", "tolerance", "pass"].map(String::from).to_vec());
    for c in checks {
        table.push_cells(vec![c.name.clone(), number(c.value), c.bound.to_string(), c.pass().to_string()]);
    }
    table
}
