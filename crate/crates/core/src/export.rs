//! CSV and JSON writers for trajectories, ensembles, sweeps and scaling
//! tables. Floats are written in shortest round-trip form, so identical
//! results give byte-identical files.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::ensemble::{EnsembleResult, Histogram, ScalingPoint, SweepResult};
use crate::error::Result;

fn num(x: f64) -> String {
    x.to_string()
}

/// Columns `t,p1,p2N`, followed by `site1..site2N` when site populations were
/// recorded.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "p1".to_string(), "p2N".to_string()];
    if traj.sites.is_some() {
        header.extend((1..=traj.final_state.len()).map(|k| format!("site{k}")));
    }
    out.write_record(&header)?;
    for (k, t) in traj.times.iter().enumerate() {
        let mut row = vec![num(*t), num(traj.p_first[k]), num(traj.p_last[k])];
        if let Some(sites) = &traj.sites {
            row.extend(sites[k].iter().copied().map(num));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `realization,p2N`.
pub fn write_samples_csv<W: Write>(result: &EnsembleResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["realization", "p2N"])?;
    for (k, p) in result.samples.iter().enumerate() {
        out.write_record([k.to_string(), num(*p)])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `bin_left,bin_right,density`.
pub fn write_histogram_csv<W: Write>(hist: &Histogram, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_left", "bin_right", "density"])?;
    for (edge, d) in hist.edges.windows(2).zip(&hist.density) {
        out.write_record([num(edge[0]), num(edge[1]), num(*d)])?;
    }
    out.flush()?;
    Ok(())
}

/// Matrix layout: the header row is `<axis1>\<axis2>` followed by the axis-2
/// grid; each following row starts with its axis-1 value.
pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![format!("{}\\{}", sweep.axis1.param, sweep.axis2.param)];
    header.extend(sweep.axis2.values.iter().copied().map(num));
    out.write_record(&header)?;
    for (v1, row) in sweep.axis1.values.iter().zip(&sweep.values) {
        let mut record = vec![num(*v1)];
        record.extend(row.iter().copied().map(num));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `n_dimers,sites,epsilon,delta0,tau,tau_z,T,p2N`.
pub fn write_scaling_csv<W: Write>(points: &[ScalingPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n_dimers", "sites", "epsilon", "delta0", "tau", "tau_z", "T", "p2N",
    ])?;
    for p in points {
        out.write_record([
            p.n_dimers.to_string(),
            p.sites.to_string(),
            num(p.params.epsilon),
            num(p.params.delta0),
            num(p.params.tau),
            num(p.params.tau_z),
            num(p.params.duration()),
            num(p.transfer_probability),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}
