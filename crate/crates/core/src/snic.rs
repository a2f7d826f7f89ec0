//! Spatially Near Iterative Constraining.
//!
//! SNIC reruns Louvain-SN with a join constraint equal to the largest
//! intra-community span of the previous run's partition. The first run is
//! unconstrained. It stops when the span reaches zero, stops shrinking, or the
//! iteration cap is hit, and returns the best-scoring partition it saw.

use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::Metric;
use crate::graph::GeoGraph;
use crate::louvain::{run_louvain, EngineConfig, Objective};
use crate::metrics::{check_partition, SnParams};
use crate::partition::Partition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnicConfig {
    pub params: SnParams,
    pub max_iters: usize,
    /// Base engine settings; the join constraint is overwritten each iteration.
    pub engine: EngineConfig,
}

impl SnicConfig {
    pub fn new(params: SnParams) -> Self {
        SnicConfig {
            params,
            max_iters: 100,
            engine: EngineConfig::default(),
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

/// One SNIC iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnicStep {
    /// Join constraint used; `None` for the unconstrained first run.
    pub constraint_km: Option<f64>,
    /// SN-modularity on the original graph.
    pub sn_modularity: f64,
    /// Largest intra-community span of the resulting partition.
    pub span_km: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnicTrace {
    pub steps: Vec<SnicStep>,
}

impl SnicTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Running maximum of the SN-modularity column.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(f64::NEG_INFINITY, |best, s| {
                *best = best.max(s.sn_modularity);
                Some(*best)
            })
            .collect()
    }

    /// Writes `iteration,constraint_km,sn_modularity,span_km,seconds`.
    /// The unconstrained first iteration is written as `inf`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "iteration",
            "constraint_km",
            "sn_modularity",
            "span_km",
            "seconds",
        ])?;
        for (t, s) in self.steps.iter().enumerate() {
            let constraint = s
                .constraint_km
                .map_or_else(|| "inf".to_string(), |c| c.to_string());
            w.write_record([
                (t + 1).to_string(),
                constraint,
                s.sn_modularity.to_string(),
                s.span_km.to_string(),
                s.seconds.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SnicOutcome {
    pub partition: Partition,
    pub sn_modularity: f64,
    /// Zero-based index into the trace of the returned partition.
    pub best_iteration: usize,
    pub trace: SnicTrace,
}

/// Largest pairwise distance between members of any one community.
pub fn partition_max_span(g: &GeoGraph, p: &Partition, metric: Metric) -> Result<f64> {
    check_partition(g, p)?;
    let mut points = Vec::new();
    let mut best = 0.0f64;
    for members in p.communities() {
        points.clear();
        points.extend(members.iter().map(|&i| g.location(i)));
        best = best.max(metric.max_pairwise_span(&points));
    }
    Ok(best)
}

pub fn run_snic(g: &GeoGraph, cfg: &SnicConfig) -> Result<SnicOutcome> {
    cfg.params.validate()?;
    if cfg.max_iters == 0 {
        return Err(Error::Config("max_iters must be at least 1".into()));
    }
    let objective = Objective::Sn(cfg.params);
    let mut trace = SnicTrace::default();
    let mut best: Option<(Partition, f64, usize)> = None;
    let mut constraint: Option<f64> = None;

    for t in 0..cfg.max_iters {
        let start = Instant::now();
        let engine = EngineConfig {
            join_constraint_km: constraint,
            ..cfg.engine
        };
        let run = run_louvain(g, objective, &engine)?;
        let span = partition_max_span(g, &run.partition, cfg.params.metric)?;
        trace.steps.push(SnicStep {
            constraint_km: constraint,
            sn_modularity: run.score,
            span_km: span,
            seconds: start.elapsed().as_secs_f64(),
        });
        if best.as_ref().is_none_or(|&(_, score, _)| run.score > score) {
            best = Some((run.partition, run.score, t));
        }
        if span == 0.0 || constraint.is_some_and(|c| span >= c) {
            break;
        }
        constraint = Some(span);
    }

    let (partition, sn_modularity, best_iteration) = best.expect("at least one iteration");
    Ok(SnicOutcome {
        partition,
        sn_modularity,
        best_iteration,
        trace,
    })
}
