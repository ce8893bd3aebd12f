//! Subcommands that write time series: `example`, `decompose` and `fiber-average`.

use std::path::Path;

use dynpolar::angles::{dynamic_angle, intrinsic_angle, relative_angle, AxisField};
use dynpolar::dpd::decompose;
use dynpolar::fibers::{fiber_average_polar, fiber_averaged_angular_velocity};
use dynpolar::integrate::{deformation_history, DeformationHistory};
use dynpolar::linalg::{axis_angle_of, Dim, Mat, Vector};
use dynpolar::mean_rotation::BodyMeans;
use dynpolar::polar::{incremental_polar_series, polar_angle_2d, polar_decompose};

use crate::config::{QuadratureSpec, Resolved, RunConfig};
use crate::csv::CsvTable;
use crate::error::CliError;

pub const INCREMENT_COUNTS: [usize; 3] = [10, 100, 1000];

pub fn comment(command: &str, cfg: &RunConfig) -> String {
    format!("dynpolar {command} config={}", cfg.to_json())
}

pub fn axis_field(r: &Resolved) -> AxisField {
    match r.field.dim() {
        Dim::Two => AxisField::Planar,
        Dim::Three => AxisField::Constant(r.axis),
    }
}

/// Polar rotation angle of `R` about the configured axis.
fn polar_angle(f: &Mat, axis: &Vector) -> Result<f64, CliError> {
    Ok(match f.dim() {
        Dim::Two => polar_angle_2d(f)?,
        Dim::Three => axis_angle_of(&polar_decompose(f)?.r)?.signed_about(axis),
    })
}

/// Incremental polar angle with the reference time reset every `stride` steps.
fn incremental(hist: &DeformationHistory, stride: usize, axis: &Vector) -> Result<Vec<f64>, CliError> {
    if hist.f[0].dim() == Dim::Two {
        return Ok(incremental_polar_series(hist, stride)?);
    }
    let mut out = Vec::with_capacity(hist.f.len());
    let mut done = 0.0;
    for k in 0..hist.f.len() {
        let completes = k > 0 && k % stride == 0;
        let base = if completes { k - stride } else { k - k % stride };
        let partial = polar_angle(&hist.between(base, k)?, axis)?;
        out.push(done + partial);
        if completes {
            done += partial;
        }
    }
    Ok(out)
}

fn flat_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).flat_map(|i| (0..n).map(move |j| format!("{prefix}{}{}", i + 1, j + 1))).collect()
}

/// `angles.csv` and `factors.csv` for the configured trajectory.
pub fn angles_and_factors(command: &str, cfg: &RunConfig, r: &Resolved) -> Result<(CsvTable, CsvTable), CliError> {
    let steps = r.grid.steps();
    if let Some(n) = INCREMENT_COUNTS.iter().find(|n| !steps.is_multiple_of(**n)) {
        return Err(CliError::Config(format!("steps: must be a multiple of {n} for the incremental polar columns, got {steps}")));
    }
    let (traj, hist) = deformation_history(&r.field, &r.x0, &r.grid)?;
    let (_, fac) = decompose(&traj)?;
    let means = BodyMeans::compute(&r.field, &r.sampler, &r.grid)?;
    let g = axis_field(r);
    let phi = dynamic_angle(&traj, &g)?;
    let rel = relative_angle(&traj, &g, &means.node_omega)?;
    let psi = intrinsic_angle(&traj, &means.node_omega)?;
    let incr = INCREMENT_COUNTS
        .iter()
        .map(|n| incremental(&hist, steps / n, &r.axis))
        .collect::<Result<Vec<_>, _>>()?;

    let header = comment(command, cfg);
    let mut angles = CsvTable::new(
        header.clone(),
        [
            "t",
            "polar_angle",
            "dynamic_angle",
            "relative_angle",
            "intrinsic_angle",
            "incremental_polar_n10",
            "incremental_polar_n100",
            "incremental_polar_n1000",
        ]
        .map(String::from)
        .to_vec(),
    );
    let n = r.field.dim().n();
    let mut columns = vec!["t".to_string()];
    for p in ["O", "M", "N", "R", "U"] {
        columns.extend(flat_names(p, n));
    }
    let mut factors = CsvTable::new(header, columns);
    for k in 0..r.grid.len() {
        let t = r.grid.node(k);
        let polar = polar_decompose(&hist.f[k])?;
        angles.push_numbers(&[
            t,
            polar_angle(&hist.f[k], &r.axis)?,
            phi.value[k],
            rel.value[k],
            psi.value[k],
            incr[0][k],
            incr[1][k],
            incr[2][k],
        ]);
        let mut row = vec![t];
        for m in [fac.o[k], fac.m[k], fac.n[k], polar.r, polar.u] {
            row.extend(m.to_row_vec());
        }
        factors.push_numbers(&row);
    }
    Ok((angles, factors))
}

pub fn write_angles_and_factors(command: &str, cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<(), CliError> {
    let (angles, factors) = angles_and_factors(command, cfg, r)?;
    angles.write(&out.join("angles.csv"))?;
    factors.write(&out.join("factors.csv"))?;
    Ok(())
}

/// `nu.csv`: fiber-averaged angular velocity next to half the vorticity at every node.
pub fn fiber_table(cfg: &RunConfig, r: &Resolved) -> Result<CsvTable, CliError> {
    if r.field.dim() != Dim::Three {
        return Err(CliError::Config("field: fiber-average needs a 3D field".into()));
    }
    let (traj, _) = deformation_history(&r.field, &r.x0, &r.grid)?;
    let columns = ["t", "nu1", "nu2", "nu3", "half_omega1", "half_omega2", "half_omega3", "residual"];
    let mut table = CsvTable::new(comment("fiber-average", cfg), columns.map(String::from).to_vec());
    for (k, s) in traj.node_samples.iter().enumerate() {
        let nu = match (&r.quadrature, &cfg.quadrature) {
            (Some(q), _) => fiber_averaged_angular_velocity(s, q)?,
            (None, QuadratureSpec::PolarAngle { n_psi, n_phi }) => fiber_average_polar(s, *n_psi, *n_phi)?,
            (None, _) => unreachable!("only the polar-angle rule is built lazily"),
        };
        let half = s.omega * 0.5;
        let [a, b, c] = nu.xyz();
        let [d, e, f] = half.xyz();
        table.push_numbers(&[r.grid.node(k), a, b, c, d, e, f, (nu - half).norm()]);
    }
    Ok(table)
}
