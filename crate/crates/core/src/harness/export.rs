//! File output: one legacy-VTK file per field, the outer history as CSV and
//! the full run report as JSON. Nothing time- or host-dependent is written,
//! so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::OutputSection;
use crate::coupling::{CoupledProblem, CoupledState, EmbeddingConstants, LipschitzEstimate, OuterRecord};
use crate::error::{Error, Result};
use crate::fem::Discretization;
use crate::flow::FlowReport;
use crate::heat::HeatReport;
use crate::mesh::PointData;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub mode: String,
    pub converged: bool,
    pub outer_iterations: usize,
    pub final_damping: f64,
    pub constants: EmbeddingConstants,
    pub lipschitz: LipschitzEstimate,
    pub velocity_bound: f64,
    pub flow: FlowReport,
    pub heat: HeatReport,
    pub history: Vec<OuterRecord>,
    /// Effective configuration in config-file syntax.
    pub config: String,
}

impl RunReport {
    pub fn new(pb: &CoupledProblem, st: &CoupledState, mode: &str, seed: u64, config: String) -> Self {
        Self {
            seed,
            mode: mode.to_string(),
            converged: st.converged,
            outer_iterations: st.outer_iterations(),
            final_damping: st.final_damping,
            constants: pb.constants,
            lipschitz: st.lipschitz,
            velocity_bound: st.flow.report.apriori.c_bound,
            flow: st.flow.report.clone(),
            heat: st.heat.clone(),
            history: st.history.clone(),
            config,
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `velocity.vtk`, `pressure.vtk` and `temperature.vtk` with vertex values.
pub fn write_fields(disc: &Discretization, v: &[f64], pi: &[f64], theta: &[f64], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let vel = disc.velocity_at_vertices(v);
    let files = [
        ("velocity", PointData::Vectors(&vel)),
        ("pressure", PointData::Scalars(pi)),
        ("temperature", PointData::Scalars(theta)),
    ];
    let mut out = Vec::new();
    for (name, data) in files {
        let path = dir.join(format!("{name}.vtk"));
        disc.mesh.write_vtk(&path, name, &[(name, data)])?;
        out.push(path);
    }
    Ok(out)
}

/// One header row, then one row per outer iteration.
pub fn history_csv(history: &[OuterRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if history.is_empty() {
        w.write_record(HISTORY_COLUMNS)
            .map_err(|e| Error::SolverFault(format!("csv: {e}")))?;
    }
    for r in history {
        w.serialize(r).map_err(|e| Error::SolverFault(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::SolverFault(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::SolverFault(format!("csv: {e}")))
}

const HISTORY_COLUMNS: [&str; 16] = [
    "iter",
    "step",
    "residual",
    "ratio",
    "damping",
    "picard_iters",
    "uzawa_iters",
    "complementarity",
    "bound_slack",
    "bound_rhs",
    "v_norm",
    "c_bound",
    "heat_balance",
    "inner_iters",
    "inner_max_ratio",
    "l_hat",
];

pub fn report_json(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::SolverFault(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Write whatever `out` enables into `dir`; returns the paths in write order.
pub fn export_state(
    pb: &CoupledProblem,
    st: &CoupledState,
    report: &RunReport,
    out: &OutputSection,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut files = Vec::new();
    if out.vtk {
        files.extend(write_fields(&pb.disc, &st.v, &st.pi, &st.theta, dir)?);
    }
    if out.csv {
        files.push(write(dir.join("history.csv"), &history_csv(&st.history)?)?);
    }
    if out.json {
        files.push(write(dir.join("report.json"), &report_json(report)?)?);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_slab_mesh, DomainSpec};

    fn record(iter: usize) -> OuterRecord {
        OuterRecord {
            iter,
            step: 0.5,
            residual: 0.25,
            ratio: f64::NAN,
            damping: 1.0,
            picard_iters: 2,
            uzawa_iters: 3,
            complementarity: 0.0,
            bound_slack: 1.0,
            bound_rhs: 2.0,
            v_norm: 0.0,
            c_bound: 1.0,
            heat_balance: 0.0,
            inner_iters: 1,
            inner_max_ratio: 0.0,
            l_hat: 0.1,
        }
    }

    #[test]
    fn csv_has_one_row_per_iteration() {
        let hist: Vec<OuterRecord> = (1..=4).map(record).collect();
        let text = history_csv(&hist).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], HISTORY_COLUMNS.join(","));
        assert_eq!(history_csv(&[]).unwrap().lines().count(), 1);
    }

    #[test]
    fn zero_fields_write_zero_point_data() {
        let d = Discretization::new(build_slab_mesh(&DomainSpec::rectangle(1.0, 1.0), &[2, 2]).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let files = write_fields(
            &d,
            &vec![0.0; d.n_velocity()],
            &vec![0.0; d.n_scalar()],
            &vec![0.0; d.n_scalar()],
            dir.path(),
        )
        .unwrap();
        assert_eq!(files.len(), 3);
        for f in files {
            let text = fs::read_to_string(&f).unwrap();
            let data = text.split("POINT_DATA").nth(1).unwrap();
            let values: Vec<f64> = data
                .lines()
                .skip(1)
                .filter(|l| !l.starts_with("SCALARS") && !l.starts_with("VECTORS") && !l.starts_with("LOOKUP"))
                .flat_map(|l| l.split_whitespace().map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>())
                .collect();
            assert!(!values.is_empty());
            assert!(values.iter().all(|&x| x == 0.0), "{}", f.display());
        }
    }
}
