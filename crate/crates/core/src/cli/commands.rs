use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_m_star, AllocationPolicy, GridEquilibrium};
use crate::error::Result;
use crate::fbm::{FbmSampler, Method, TimeGrid};
use crate::girsanov::GirsanovKernel;
use crate::verify::{run_suite, Check, McReport, SuiteConfig};

use super::report::write_reports;
use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Paths,
    Verify,
    Kernel,
}

/// Command-line overrides of the scenario's numerics and outputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub paths: Option<usize>,
    pub method: Option<Method>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub sample_paths: Option<usize>,
}

impl Flags {
    /// Returns `sc` with the overrides applied and revalidated.
    pub fn apply(&self, sc: &Scenario) -> Result<Scenario> {
        let mut sc = sc.clone();
        let nm = &mut sc.numerics;
        if let Some(v) = self.seed {
            nm.seed = v;
        }
        if let Some(v) = self.grid {
            nm.grid = v;
        }
        if let Some(v) = self.paths {
            nm.paths = v;
        }
        if let Some(v) = self.method {
            nm.method = v;
        }
        if let Some(v) = self.tol {
            nm.quad_tol = v;
        }
        if let Some(v) = self.sample_paths {
            nm.sample_paths = v;
        }
        if let Some(v) = &self.out {
            sc.outputs.directory = v.clone();
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// Result of a command: the files written and, for `verify`, the reports.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub reports: Vec<McReport>,
}

impl RunOutput {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

pub fn run(command: Command, scenario: &Scenario, flags: &Flags) -> Result<RunOutput> {
    let sc = flags.apply(scenario)?;
    std::fs::create_dir_all(&sc.outputs.directory)?;
    match command {
        Command::Solve => solve(&sc),
        Command::Paths => paths(&sc, flags.paths.unwrap_or(sc.numerics.sample_paths)),
        Command::Verify => verify(&sc),
        Command::Kernel => kernel(&sc),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the solution summary and, on each of `sample_paths` simulated
/// paths, the strategy trace and the state trace.
fn solve(sc: &Scenario) -> Result<RunOutput> {
    let spec = sc.spec()?;
    let sol = solve_m_star(&spec, &sc.solver()?)?;
    let dir = &sc.outputs.directory;
    let mut files = Vec::new();

    let summary = dir.join("solution.json");
    let mut w = create(&summary)?;
    serde_json::to_writer_pretty(&mut w, &sol.summary()).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    files.push(summary);

    let nm = &sc.numerics;
    if nm.sample_paths > 0 {
        let grid = TimeGrid::new(spec.horizon, nm.grid)?;
        let ge = GridEquilibrium::new(&sol, &grid)?;
        let sampler = FbmSampler::new(grid, spec.hurst, nm.method, nm.seed)?;
        let free = ge.uncontrolled_state();
        for stream in 0..nm.sample_paths as u64 {
            let path = sampler.path(stream);
            let trace = ge.trace(&path, AllocationPolicy::default())?;
            let file = dir.join(format!("trace_{stream}.csv"));
            let mut w = create(&file)?;
            trace.write_csv(&mut w)?;
            w.flush()?;
            files.push(file);

            let state = ge.simulate_state(&trace, &path)?;
            let file = dir.join(format!("state_{stream}.csv"));
            let mut w = create(&file)?;
            writeln!(w, "t,fbm,state,uncontrolled_state")?;
            for k in 0..state.len() {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    trace.times[k], path.values[k], state[k], free[k]
                )?;
            }
            w.flush()?;
            files.push(file);
        }
    }
    Ok(RunOutput {
        files,
        reports: Vec::new(),
    })
}

/// Writes `count` fBm paths, one CSV per path.
fn paths(sc: &Scenario, count: usize) -> Result<RunOutput> {
    let spec = sc.spec()?;
    let nm = &sc.numerics;
    let grid = TimeGrid::new(spec.horizon, nm.grid)?;
    let sampler = FbmSampler::new(grid, spec.hurst, nm.method, nm.seed)?;
    let files = (0..count as u64)
        .map(|s| sampler.path(s).export_csv(&sc.outputs.directory))
        .collect::<Result<_>>()?;
    Ok(RunOutput {
        files,
        reports: Vec::new(),
    })
}

fn verify(sc: &Scenario) -> Result<RunOutput> {
    let nm = &sc.numerics;
    let cfg = SuiteConfig {
        spec: sc.spec()?,
        solver: sc.solver()?,
        grid: nm.grid,
        paths: nm.paths,
        seed: nm.seed,
        method: nm.method,
        checks: Check::ALL.to_vec(),
        endpoint_paths: nm.endpoint_paths,
        argmax_pairs: nm.argmax_pairs,
    };
    let reports = run_suite(&cfg)?;
    let files = write_reports(&reports, &sc.outputs.directory, "verify", &sc.outputs.formats)?;
    Ok(RunOutput { files, reports })
}

/// Tabulates `K` and `zeta_u` at cell midpoints (where both are finite) and
/// the norm profiles at the grid points.
fn kernel(sc: &Scenario) -> Result<RunOutput> {
    let spec = sc.spec()?;
    let k = GirsanovKernel::new(spec.c, spec.horizon, spec.hurst)?;
    let grid = TimeGrid::new(spec.horizon, sc.numerics.grid)?;
    let t_end = spec.horizon;
    let us = [0.25 * t_end, 0.5 * t_end, 0.75 * t_end];
    let dir = &sc.outputs.directory;

    let table = dir.join("kernel.csv");
    let mut w = create(&table)?;
    writeln!(w, "t,K,zeta_0.25T,zeta_0.5T,zeta_0.75T")?;
    let h = grid.step_size();
    for j in 0..grid.steps() {
        let t = grid.t(j) + 0.5 * h;
        let mut row = vec![t, k.kernel_k(t)?];
        for &u in &us {
            row.push(if (t - u).abs() < 1e-14 * t_end {
                f64::INFINITY
            } else {
                k.zeta(u, t)?
            });
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;

    let norms = dir.join("norms.csv");
    let mut w = create(&norms)?;
    writeln!(w, "u,zeta_norm_sq,zeta_half_norm_sq,k_truncated_norm_sq")?;
    for &u in &grid.points()[1..] {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            u,
            k.zeta_norm_sq(u),
            k.truncated_norm_sq(u, 0.5 * u),
            k.k_truncated_norm_sq(u)
        )?;
    }
    w.flush()?;
    Ok(RunOutput {
        files: vec![table, norms],
        reports: Vec::new(),
    })
}
