//! σ-sweep experiment harness.
//!
//! A sweep runs every (dataset, σ, algorithm, seed) cell and reports SN- and
//! NG-modularity, wall time and iteration counts. Cells are independent and
//! may run in parallel; rows always come back in cell order.

use std::fmt;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Metric;
use crate::graph::GeoGraph;
use crate::louvain::{run_louvain, EngineConfig, NodeOrder, Objective};
use crate::metrics::{ng_modularity, sn_modularity, Aggregation, SnParams};
use crate::partition::Partition;
use crate::snic::{run_snic, SnicConfig, SnicTrace};

/// Header of the sweep CSV. Fixed; new columns go to separate files.
pub const SWEEP_HEADER: &str =
    "dataset,sigma_km,algorithm,seed,sn_modularity,ng_modularity,seconds,iterations";

/// Header of the improvement CSV derived from sweep rows.
pub const IMPROVEMENT_HEADER: &str =
    "dataset,sigma_km,seed,algorithm,louvain_sn_modularity,sn_modularity,pct_improvement,abs_improvement";

pub const DEFAULT_SIGMAS_KM: [f64; 7] = [300.0, 500.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "louvain")]
    Louvain,
    #[serde(rename = "louvain-sn")]
    LouvainSn,
    #[serde(rename = "snic")]
    Snic,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Louvain, Algorithm::LouvainSn, Algorithm::Snic];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Louvain => "louvain",
            Algorithm::LouvainSn => "louvain-sn",
            Algorithm::Snic => "snic",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Output of a single detection run, scored on the original graph.
#[derive(Debug, Clone)]
pub struct Detection {
    pub algorithm: Algorithm,
    pub partition: Partition,
    pub sn_modularity: f64,
    pub ng_modularity: f64,
    pub seconds: f64,
    /// Louvain levels, or SNIC iterations.
    pub iterations: usize,
    pub trace: Option<SnicTrace>,
}

/// Runs one algorithm. `params` supplies σ for scoring even when the
/// algorithm ignores geography.
pub fn detect(
    g: &GeoGraph,
    algorithm: Algorithm,
    params: SnParams,
    max_iters: usize,
    engine: EngineConfig,
) -> Result<Detection> {
    params.validate()?;
    let start = Instant::now();
    let (partition, iterations, trace) = match algorithm {
        Algorithm::Louvain => {
            let out = run_louvain(g, Objective::Ng, &engine)?;
            (out.partition, out.levels, None)
        }
        Algorithm::LouvainSn => {
            let out = run_louvain(g, Objective::Sn(params), &engine)?;
            (out.partition, out.levels, None)
        }
        Algorithm::Snic => {
            let cfg = SnicConfig {
                params,
                max_iters,
                engine,
            };
            let out = run_snic(g, &cfg)?;
            let iterations = out.trace.len();
            (out.partition, iterations, Some(out.trace))
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    Ok(Detection {
        algorithm,
        sn_modularity: sn_modularity(g, &partition, &params)?,
        ng_modularity: ng_modularity(g, &partition)?,
        partition,
        seconds,
        iterations,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub sigmas: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    /// Each seed shuffles the node visiting order; `None` visits ascending.
    pub seeds: Vec<Option<u64>>,
    pub max_iters: usize,
    pub agg: Aggregation,
    pub metric: Metric,
    pub parallel: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            sigmas: DEFAULT_SIGMAS_KM.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            seeds: vec![None],
            max_iters: 100,
            agg: Aggregation::Max,
            metric: Metric::Haversine,
            parallel: true,
        }
    }
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.algorithms.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("sweep lists must be nonempty".into()));
        }
        for &s in &self.sigmas {
            SnParams::new(s)?;
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: GeoGraph,
}

/// One row of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dataset: String,
    pub sigma_km: f64,
    pub algorithm: Algorithm,
    /// Empty for ascending visiting order.
    pub seed: Option<u64>,
    pub sn_modularity: f64,
    pub ng_modularity: f64,
    pub seconds: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SweepTrace {
    pub dataset: String,
    pub sigma_km: f64,
    pub seed: Option<u64>,
    pub trace: SnicTrace,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub traces: Vec<SweepTrace>,
}

pub fn run_sweep(datasets: &[Dataset], spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut cells = Vec::new();
    for (d, _) in datasets.iter().enumerate() {
        for &sigma in &spec.sigmas {
            for &seed in &spec.seeds {
                for &algorithm in &spec.algorithms {
                    cells.push((d, sigma, seed, algorithm));
                }
            }
        }
    }
    let run_cell = |&(d, sigma, seed, algorithm): &(usize, f64, Option<u64>, Algorithm)| {
        let dataset = &datasets[d];
        let params = SnParams::new(sigma)?
            .with_agg(spec.agg)
            .with_metric(spec.metric);
        let engine = EngineConfig {
            node_order: seed.map_or(NodeOrder::Ascending, NodeOrder::Shuffled),
            ..Default::default()
        };
        let det = detect(&dataset.graph, algorithm, params, spec.max_iters, engine)?;
        let row = SweepRow {
            dataset: dataset.name.clone(),
            sigma_km: sigma,
            algorithm,
            seed,
            sn_modularity: det.sn_modularity,
            ng_modularity: det.ng_modularity,
            seconds: det.seconds,
            iterations: det.iterations,
        };
        let trace = det.trace.map(|trace| SweepTrace {
            dataset: dataset.name.clone(),
            sigma_km: sigma,
            seed,
            trace,
        });
        Ok::<_, Error>((row, trace))
    };
    let outputs: Vec<Result<(SweepRow, Option<SweepTrace>)>> = if spec.parallel {
        cells.par_iter().map(run_cell).collect()
    } else {
        cells.iter().map(run_cell).collect()
    };
    let mut result = SweepResult::default();
    for out in outputs {
        let (row, trace) = out?;
        result.rows.push(row);
        result.traces.extend(trace);
    }
    Ok(result)
}

/// Writes sweep rows, with the header when `header` is set.
pub fn write_sweep_rows<W: Write>(writer: W, rows: &[SweepRow], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    if header {
        w.write_record(SWEEP_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<sweep>", e))?;
    Ok(())
}

/// Appends rows to a sweep CSV, writing the header only if the file is new or
/// empty. An existing file with a different header is rejected.
pub fn append_sweep_rows(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let needs_header = match std::fs::File::open(path) {
        Ok(f) => {
            let mut first = String::new();
            BufReader::new(f)
                .read_line(&mut first)
                .map_err(|e| Error::io(path, e))?;
            if first.is_empty() {
                true
            } else if first.trim_end() == SWEEP_HEADER {
                false
            } else {
                return Err(Error::Config(format!(
                    "{} has an unexpected header",
                    path.display()
                )));
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => true,
        Err(e) => return Err(Error::io(path, e)),
    };
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    write_sweep_rows(file, rows, needs_header)
}

/// Improvement of one algorithm over plain Louvain on a matching cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub dataset: String,
    pub sigma_km: f64,
    pub seed: Option<u64>,
    pub algorithm: Algorithm,
    pub louvain_sn_modularity: f64,
    pub sn_modularity: f64,
    /// `(alg - louvain) / |louvain| * 100`; empty when Louvain scores ~0.
    pub pct_improvement: Option<f64>,
    pub abs_improvement: f64,
}

/// Louvain scores below this magnitude get no percentage, only a difference.
pub const PCT_BASE_EPSILON: f64 = 1e-12;

pub fn improvements(rows: &[SweepRow]) -> Vec<Improvement> {
    let mut out = Vec::new();
    for base in rows.iter().filter(|r| r.algorithm == Algorithm::Louvain) {
        for row in rows.iter().filter(|r| {
            r.algorithm != Algorithm::Louvain
                && r.dataset == base.dataset
                && r.sigma_km == base.sigma_km
                && r.seed == base.seed
        }) {
            let diff = row.sn_modularity - base.sn_modularity;
            out.push(Improvement {
                dataset: row.dataset.clone(),
                sigma_km: row.sigma_km,
                seed: row.seed,
                algorithm: row.algorithm,
                louvain_sn_modularity: base.sn_modularity,
                sn_modularity: row.sn_modularity,
                pct_improvement: (base.sn_modularity.abs() > PCT_BASE_EPSILON)
                    .then(|| diff / base.sn_modularity.abs() * 100.0),
                abs_improvement: diff,
            });
        }
    }
    out
}

pub fn write_improvements<W: Write>(writer: W, rows: &[Improvement]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(IMPROVEMENT_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<improvements>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeoPoint;

    const ORIGIN: GeoPoint = GeoPoint { lat: 0.0, lon: 0.0 };

    fn bridged() -> GeoGraph {
        GeoGraph::from_edges(
            vec![ORIGIN; 6],
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_distance_sweep_matches_ng() {
        let datasets = [Dataset {
            name: "flat".into(),
            graph: bridged(),
        }];
        let spec = SweepSpec {
            sigmas: vec![300.0, 5000.0],
            ..Default::default()
        };
        let result = run_sweep(&datasets, &spec).unwrap();
        assert_eq!(result.rows.len(), 6);
        for row in &result.rows {
            assert_eq!(row.sn_modularity, row.ng_modularity);
        }
        assert_eq!(result.traces.len(), 2);
    }

    #[test]
    fn csv_header_is_fixed() {
        let row = SweepRow {
            dataset: "d".into(),
            sigma_km: 300.0,
            algorithm: Algorithm::LouvainSn,
            seed: Some(3),
            sn_modularity: 0.5,
            ng_modularity: 0.25,
            seconds: 1.5,
            iterations: 2,
        };
        let mut buf = Vec::new();
        write_sweep_rows(&mut buf, &[row], true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{SWEEP_HEADER}\nd,300.0,louvain-sn,3,0.5,0.25,1.5,2\n")
        );
    }

    #[test]
    fn append_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let row = SweepRow {
            dataset: "d".into(),
            sigma_km: 1.0,
            algorithm: Algorithm::Snic,
            seed: None,
            sn_modularity: 0.0,
            ng_modularity: 0.0,
            seconds: 0.0,
            iterations: 1,
        };
        append_sweep_rows(&path, std::slice::from_ref(&row)).unwrap();
        append_sweep_rows(&path, std::slice::from_ref(&row)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER);

        let other = dir.path().join("other.csv");
        std::fs::write(&other, "a,b\n").unwrap();
        assert!(append_sweep_rows(&other, &[row]).is_err());
    }

    #[test]
    fn improvement_guards_zero_base() {
        let mk = |algorithm, sn| SweepRow {
            dataset: "d".into(),
            sigma_km: 1.0,
            algorithm,
            seed: None,
            sn_modularity: sn,
            ng_modularity: 0.0,
            seconds: 0.0,
            iterations: 1,
        };
        let rows = [mk(Algorithm::Louvain, 0.2), mk(Algorithm::Snic, 0.5)];
        let imp = improvements(&rows);
        assert_eq!(imp.len(), 1);
        assert!((imp[0].pct_improvement.unwrap() - 150.0).abs() < 1e-9);

        let rows = [mk(Algorithm::Louvain, 0.0), mk(Algorithm::Snic, 0.5)];
        let imp = improvements(&rows);
        assert_eq!(imp[0].pct_improvement, None);
        assert_eq!(imp[0].abs_improvement, 0.5);
    }

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("leiden".parse::<Algorithm>().is_err());
    }
}
