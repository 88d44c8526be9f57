//! Command execution, output files and the replay manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sshqst::disorder::RNG_SCHEME;
use sshqst::ensemble::MARGINAL_SEED_MIX;
use sshqst::export::{
    write_histogram_csv, write_json, write_samples_csv, write_scaling_csv, write_sweep_csv,
    write_trajectory_csv,
};
use sshqst::lattice::spectrum;
use sshqst::{
    average_fidelity, build_hamiltonian, compare_protocols, coupling_kappa, lz_analytic_probability,
    midgap_splitting, propagate_full, propagate_two_level, run_ensemble, scaling_study, solve_rabi_area_time,
    sweep2d, transfer_probability, ChainSpec, Pairing, Protocol, ProtocolSchedule, StateVector, Trajectory,
};

use crate::config::{Command, Format, RunConfig};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct Seed {
    pub role: String,
    pub value: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub seeds: Vec<Seed>,
    pub rng_scheme: String,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", path.display()))
    }
}

struct Outputs {
    dir: PathBuf,
    format: Format,
    files: Vec<String>,
}

impl Outputs {
    fn create(dir: &Path, format: Format) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(BufWriter<File>) -> sshqst::Result<()>) -> Result<()> {
        if self.format.csv() {
            let w = self.open(name)?;
            write(w).with_context(|| format!("writing {name}"))?;
        }
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.format.json() {
            let w = self.open(name)?;
            write_json(value, w).with_context(|| format!("writing {name}"))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct TrajectoryReport<'a> {
    model: &'static str,
    protocol: &'a ProtocolSchedule,
    n_dimers: usize,
    transfer_probability: f64,
    average_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lz_analytic_probability: Option<f64>,
    norm_drift: f64,
    trajectory: &'a Trajectory,
}

#[derive(Serialize)]
struct AreaTimeReport {
    epsilon: f64,
    n_dimers: usize,
    kappa_max: f64,
    area_time: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    n_dimers: usize,
    t1: f64,
    t2: f64,
    delta: f64,
    midgap_splitting: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    eigenvalues: Vec<f64>,
}

fn lz_prediction(schedule: &ProtocolSchedule, n: usize) -> Result<Option<f64>> {
    match schedule {
        ProtocolSchedule::Lz(p) => {
            let kappa = p.kappa_max(n)?;
            Ok(Some(lz_analytic_probability(kappa, p.delta0, p.tau_z)?))
        }
        _ => Ok(None),
    }
}

fn report_trajectory(
    out: &mut Outputs,
    stem: &str,
    model: &'static str,
    config: &RunConfig,
    traj: &Trajectory,
) -> Result<()> {
    let n = config.chain.n_dimers;
    let p = transfer_probability(traj);
    let report = TrajectoryReport {
        model,
        protocol: &config.protocol,
        n_dimers: n,
        transfer_probability: p,
        average_fidelity: average_fidelity(p.sqrt())?,
        lz_analytic_probability: lz_prediction(&config.protocol, n)?,
        norm_drift: traj.norm_drift(),
        trajectory: traj,
    };
    out.csv(&format!("{stem}.csv"), |w| write_trajectory_csv(traj, w))?;
    out.json(&format!("{stem}.json"), &report)?;
    println!("p2N(T) = {p}");
    println!("average fidelity = {}", report.average_fidelity);
    if let Some(lz) = report.lz_analytic_probability {
        println!("LZ prediction = {lz}");
    }
    Ok(())
}

/// Runs `command` and returns the seeds it consumed.
fn dispatch(command: Command, config: &RunConfig, out: &mut Outputs) -> Result<Vec<Seed>> {
    let n = config.chain.n_dimers;
    let control = config.control();
    let mut seeds = Vec::new();
    match command {
        Command::Simulate => {
            let traj = propagate_full(n, &config.protocol, None, &StateVector::site(2 * n, 0), &control)?;
            report_trajectory(out, "trajectory", "full", config, &traj)?;
        }
        Command::TwoLevel => {
            let initial = StateVector::two_level(1.0.into(), 0.0.into());
            let traj = propagate_two_level(&config.protocol, n, &initial, &control)?;
            report_trajectory(out, "two_level", "two-level", config, &traj)?;
        }
        Command::Sweep2d => {
            let a1 = config.sweep.axis1.to_axis()?;
            let a2 = config.sweep.axis2.to_axis()?;
            let result = sweep2d(&config.protocol, &a1, &a2, n, config.sweep.model, &control)?;
            out.csv("sweep.csv", |w| write_sweep_csv(&result, w))?;
            out.json("sweep.json", &result)?;
            let best = result
                .values
                .iter()
                .flatten()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            println!("{} x {} grid, max p2N = {best}", a1.values.len(), a2.values.len());
        }
        Command::Ensemble => {
            let protocol = Protocol::new(config.protocol, n)?;
            let result = run_ensemble(&protocol, &config.disorder_spec(), &config.ensemble_options())?;
            seeds.push(Seed {
                role: "disorder".into(),
                value: config.disorder.seed,
            });
            out.csv("samples.csv", |w| write_samples_csv(&result, w))?;
            out.csv("histogram.csv", |w| write_histogram_csv(&result.histogram, w))?;
            out.json("ensemble.json", &result)?;
            let s = &result.summary;
            println!(
                "mean {} median {} fraction(p > 0.9) {} fraction(p > 0.95) {}",
                s.mean, s.median, s.fraction_above_0_9, s.fraction_above_0_95
            );
        }
        Command::Compare => {
            let rabi = Protocol::new(ProtocolSchedule::Rabi(config.compare.rabi), n)?;
            let lz = Protocol::new(ProtocolSchedule::Lz(config.compare.lz), n)?;
            let options = config.ensemble_options();
            let cmp = compare_protocols(
                &rabi,
                &lz,
                &config.disorder_spec(),
                &options,
                config.compare.pairing,
            )?;
            let lz_seed = match config.compare.pairing {
                Pairing::Paired => options.seed,
                Pairing::Marginal => options.seed ^ MARGINAL_SEED_MIX,
            };
            seeds.push(Seed {
                role: "rabi".into(),
                value: options.seed,
            });
            seeds.push(Seed {
                role: "lz".into(),
                value: lz_seed,
            });
            out.csv("rabi_samples.csv", |w| write_samples_csv(&cmp.rabi, w))?;
            out.csv("rabi_histogram.csv", |w| {
                write_histogram_csv(&cmp.rabi.histogram, w)
            })?;
            out.csv("lz_samples.csv", |w| write_samples_csv(&cmp.lz, w))?;
            out.csv("lz_histogram.csv", |w| write_histogram_csv(&cmp.lz.histogram, w))?;
            out.json("compare.json", &cmp)?;
            for (name, r) in [("rabi", &cmp.rabi), ("lz", &cmp.lz)] {
                let s = &r.summary;
                println!(
                    "{name}: mean {} median {} fraction(p > 0.9) {}",
                    s.mean, s.median, s.fraction_above_0_9
                );
            }
        }
        Command::Scaling => {
            let points = scaling_study(
                config.scaling.rho,
                &config.scaling.sizes,
                &config.scaling.rule,
                &control,
            )?;
            out.csv("scaling.csv", |w| write_scaling_csv(&points, w))?;
            out.json("scaling.json", &points)?;
            for p in &points {
                println!(
                    "2N = {}: T = {} p2N = {}",
                    p.sites,
                    p.params.duration(),
                    p.transfer_probability
                );
            }
        }
        Command::AreaTime => {
            let eps = config.area_time.epsilon;
            let report = AreaTimeReport {
                epsilon: eps,
                n_dimers: n,
                kappa_max: coupling_kappa(&ChainSpec::ssh(n, 1.0 - eps)?)?,
                area_time: solve_rabi_area_time(eps, n)?,
            };
            out.csv("area_time.csv", |w| {
                let mut w = csv::Writer::from_writer(w);
                w.write_record(["epsilon", "n_dimers", "kappa_max", "area_time"])?;
                w.write_record([
                    eps.to_string(),
                    n.to_string(),
                    report.kappa_max.to_string(),
                    report.area_time.to_string(),
                ])?;
                w.flush()?;
                Ok(())
            })?;
            out.json("area_time.json", &report)?;
            println!("T* = {}", report.area_time);
        }
        Command::Spectrum => {
            let s = &config.spectrum;
            let spec = ChainSpec::new(n, s.t1, s.t2, s.delta)?;
            let h = build_hamiltonian(&spec, None)?;
            let report = SpectrumReport {
                n_dimers: n,
                t1: s.t1,
                t2: s.t2,
                delta: s.delta,
                midgap_splitting: midgap_splitting(&h),
                kappa: coupling_kappa(&spec).ok(),
                eigenvalues: spectrum(&h),
            };
            out.csv("spectrum.csv", |w| {
                let mut w = csv::Writer::from_writer(w);
                w.write_record(["index", "energy"])?;
                for (k, e) in report.eigenvalues.iter().enumerate() {
                    w.write_record([k.to_string(), e.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            out.json("spectrum.json", &report)?;
            println!("mid-gap splitting = {}", report.midgap_splitting);
            if let Some(k) = report.kappa {
                println!("kappa = {k}");
            }
        }
    }
    Ok(seeds)
}

/// Executes a validated configuration and writes the manifest last.
pub fn execute(command: Command, config: &RunConfig) -> Result<Manifest> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut out = Outputs::create(&config.output.dir, config.output.format)?;
    let seeds = dispatch(command, config, &mut out)?;
    let manifest = Manifest {
        tool: "sshqst".into(),
        version: sshqst::VERSION.into(),
        command,
        config: config.clone(),
        seeds,
        rng_scheme: RNG_SCHEME.into(),
        threads: rayon::current_num_threads(),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        files: out.files.clone(),
    };
    let path = config.output.dir.join(MANIFEST);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    write_json(&manifest, BufWriter::new(file)).context("writing manifest")?;
    Ok(manifest)
}
