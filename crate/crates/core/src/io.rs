//! Partition CSV files and GeoJSON export.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::GeoGraph;
use crate::partition::Partition;

/// Writes `node,community` rows keyed by external node id, in node order.
pub fn write_partition<W: Write>(writer: W, g: &GeoGraph, p: &Partition) -> Result<()> {
    if p.len() != g.node_count() {
        return Err(Error::PartitionMismatch {
            partition: p.len(),
            graph: g.node_count(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node", "community"])?;
    for v in 0..g.node_count() {
        w.write_record([g.external_id(v).to_string(), p.community_of(v).to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<partition>", e))?;
    Ok(())
}

/// Reads a `node,community` file. Every graph node must appear exactly once;
/// community labels may be any strings.
pub fn read_partition<R: Read>(reader: R, g: &GeoGraph) -> Result<Partition> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "node" || &headers[1] != "community" {
        return Err(Error::parse(
            "<partition>",
            1,
            "expected header node,community",
        ));
    }
    let mut labels: Vec<Option<String>> = vec![None; g.node_count()];
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let line = row + 2;
        if record.len() < 2 {
            return Err(Error::parse("<partition>", line, "expected node,community"));
        }
        let id: u64 = record[0].parse().map_err(|_| {
            Error::parse(
                "<partition>",
                line,
                format!("invalid node id '{}'", &record[0]),
            )
        })?;
        let v = g.index_of(id).ok_or(Error::UnknownNode(id))?;
        if labels[v].is_some() {
            return Err(Error::parse(
                "<partition>",
                line,
                format!("node {id} listed twice"),
            ));
        }
        labels[v] = Some(record[1].to_string());
    }
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut dense = Vec::with_capacity(labels.len());
    for (v, label) in labels.into_iter().enumerate() {
        let label = label.ok_or(Error::Unassigned(g.external_id(v)))?;
        let next = ids.len();
        dense.push(*ids.entry(label).or_insert(next));
    }
    Ok(Partition::from_labels(&dense))
}

/// A FeatureCollection with one Point per node (`id`, `community`) and one
/// LineString per edge (`intra`). Positions are `[lon, lat]`.
pub fn geojson_feature_collection(g: &GeoGraph, p: &Partition) -> Result<Value> {
    if p.len() != g.node_count() {
        return Err(Error::PartitionMismatch {
            partition: p.len(),
            graph: g.node_count(),
        });
    }
    let position = |v: usize| {
        let loc = g.location(v);
        json!([loc.lon, loc.lat])
    };
    let mut features: Vec<Value> = (0..g.node_count())
        .map(|v| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": position(v) },
                "properties": { "id": g.external_id(v), "community": p.community_of(v) },
            })
        })
        .collect();
    features.extend(g.edges().filter(|&(u, v, _)| u != v).map(|(u, v, w)| {
        json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": [position(u), position(v)] },
            "properties": {
                "source": g.external_id(u),
                "target": g.external_id(v),
                "weight": w,
                "intra": p.community_of(u) == p.community_of(v),
            },
        })
    }));
    Ok(json!({ "type": "FeatureCollection", "features": features }))
}

pub fn write_geojson<W: Write>(writer: W, g: &GeoGraph, p: &Partition) -> Result<()> {
    serde_json::to_writer_pretty(writer, &geojson_feature_collection(g, p)?)?;
    Ok(())
}
