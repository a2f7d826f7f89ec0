//! Edge-list and coordinate file ingestion.
//!
//! Edge files hold one `u<TAB>v[<TAB>w]` edge per line; `#` lines are
//! comments. Coordinate files are either CSV `node,lat,lon` (header optional)
//! or Brightkite-style check-ins `user<TAB>timestamp<TAB>lat<TAB>lon<TAB>place`.
//! The format is picked from the first data line: a TAB means check-ins.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, FixedOffset};

use crate::error::{Error, Result};
use crate::geometry::{spherical_centroid, GeoPoint};
use crate::graph::GeoGraph;

/// How repeated coordinates for one node collapse to a single location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoordPolicy {
    /// Spherical mean of all observations.
    #[default]
    Mean,
    /// Most recent check-in; for rows without timestamps, the last row.
    Last,
}

/// What to do with a node that has edges but no coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Error,
    /// Remove the node and its incident edges.
    Drop,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub coord_policy: CoordPolicy,
    pub missing_policy: MissingPolicy,
}

struct Observation {
    time: Option<DateTime<FixedOffset>>,
    point: GeoPoint,
}

fn data_lines<R: BufRead>(reader: R, name: &str) -> impl Iterator<Item = Result<(usize, String)>> {
    let name = name.to_string();
    reader
        .lines()
        .enumerate()
        .filter_map(move |(idx, line)| match line {
            Err(e) => Some(Err(Error::parse(&name, idx + 1, e.to_string()))),
            Ok(line) => {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    None
                } else {
                    Some(Ok((idx + 1, trimmed.to_string())))
                }
            }
        })
}

fn parse_id(field: &str, name: &str, line: usize) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(name, line, format!("invalid node id '{field}'")))
}

fn parse_f64(field: &str, what: &str, name: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(name, line, format!("invalid {what} '{field}'")))
}

/// Parses an edge list into merged undirected edges keyed by `(min, max)`.
pub fn read_edges<R: BufRead>(reader: R, name: &str) -> Result<BTreeMap<(u64, u64), f64>> {
    let mut edges = BTreeMap::new();
    for item in data_lines(reader, name) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split(['\t', ' ']).filter(|f| !f.is_empty()).collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(
                name,
                line,
                format!("expected 2 or 3 columns, found {}", fields.len()),
            ));
        }
        let u = parse_id(fields[0], name, line)?;
        let v = parse_id(fields[1], name, line)?;
        let w = match fields.get(2) {
            Some(f) => parse_f64(f, "weight", name, line)?,
            None => 1.0,
        };
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidWeight { u, v, weight: w });
        }
        if u == v {
            return Err(Error::parse(name, line, format!("self-loop on node {u}")));
        }
        *edges.entry((u.min(v), u.max(v))).or_insert(0.0) += w;
    }
    Ok(edges)
}

fn point(lat: &str, lon: &str, name: &str, line: usize) -> Result<GeoPoint> {
    let lat = parse_f64(lat, "latitude", name, line)?;
    let lon = parse_f64(lon, "longitude", name, line)?;
    GeoPoint::new(lat, lon).map_err(|e| Error::parse(name, line, e.to_string()))
}

/// Parses a coordinate file and collapses repeated observations per node.
pub fn read_coordinates<R: BufRead>(
    reader: R,
    name: &str,
    policy: CoordPolicy,
) -> Result<BTreeMap<u64, GeoPoint>> {
    let mut observations: BTreeMap<u64, Vec<Observation>> = BTreeMap::new();
    let mut checkins: Option<bool> = None;
    for item in data_lines(reader, name) {
        let (line, text) = item?;
        let is_checkin = *checkins.get_or_insert_with(|| text.contains('\t'));
        let (id, obs) = if is_checkin {
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() < 4 || fields.len() > 5 {
                return Err(Error::parse(
                    name,
                    line,
                    format!("expected 5 check-in columns, found {}", fields.len()),
                ));
            }
            let id = parse_id(fields[0], name, line)?;
            let time = DateTime::parse_from_rfc3339(fields[1].trim()).map_err(|e| {
                Error::parse(
                    name,
                    line,
                    format!("invalid timestamp '{}': {e}", fields[1]),
                )
            })?;
            let point = point(fields[2], fields[3], name, line)?;
            (
                id,
                Observation {
                    time: Some(time),
                    point,
                },
            )
        } else {
            let fields: Vec<&str> = text.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    name,
                    line,
                    format!("expected node,lat,lon, found {} columns", fields.len()),
                ));
            }
            if observations.is_empty() && fields[0].trim().parse::<u64>().is_err() {
                // header row
                continue;
            }
            let id = parse_id(fields[0], name, line)?;
            let point = point(fields[1], fields[2], name, line)?;
            (id, Observation { time: None, point })
        };
        observations.entry(id).or_default().push(obs);
    }

    let mut coords = BTreeMap::new();
    for (id, obs) in observations {
        let location = match policy {
            CoordPolicy::Mean => spherical_centroid(obs.iter().map(|o| o.point))?,
            CoordPolicy::Last => {
                // rows are in file order, so later rows win ties
                let mut best = &obs[0];
                for o in &obs[1..] {
                    if o.time >= best.time {
                        best = o;
                    }
                }
                best.point
            }
        };
        coords.insert(id, location);
    }
    Ok(coords)
}

/// Loads a graph from an edge list and a coordinate source.
///
/// The node set is every id that appears in the edge list. Ids are sorted
/// ascending and assigned dense indices in that order, so the same inputs
/// always produce the same graph.
pub fn load_graph<E: BufRead, C: BufRead>(
    edge_source: E,
    coord_source: C,
    options: LoadOptions,
) -> Result<GeoGraph> {
    load_named(edge_source, "edges", coord_source, "coords", options)
}

fn load_named<E: BufRead, C: BufRead>(
    edge_source: E,
    edge_name: &str,
    coord_source: C,
    coord_name: &str,
    options: LoadOptions,
) -> Result<GeoGraph> {
    let mut edges = read_edges(edge_source, edge_name)?;
    let coords = read_coordinates(coord_source, coord_name, options.coord_policy)?;

    let mut ids: BTreeSet<u64> = edges.keys().flat_map(|&(u, v)| [u, v]).collect();
    let missing: Vec<u64> = ids
        .iter()
        .copied()
        .filter(|id| !coords.contains_key(id))
        .collect();
    if let Some(&first) = missing.first() {
        match options.missing_policy {
            MissingPolicy::Error => return Err(Error::MissingCoordinate(first)),
            MissingPolicy::Drop => {
                let dropped: BTreeSet<u64> = missing.into_iter().collect();
                edges.retain(|(u, v), _| !dropped.contains(u) && !dropped.contains(v));
                ids.retain(|id| !dropped.contains(id));
            }
        }
    }

    let external_ids: Vec<u64> = ids.into_iter().collect();
    let index = |id: u64| external_ids.binary_search(&id).expect("id collected above");
    let locations = external_ids.iter().map(|id| coords[id]).collect();
    let graph = GeoGraph::from_edges(
        locations,
        edges.iter().map(|(&(u, v), &w)| (index(u), index(v), w)),
    )?;
    graph.with_external_ids(external_ids)
}

/// Loads only the topology of an edge list; every node is placed at `(0, 0)`.
/// Useful for scoring NG-modularity when no coordinates exist.
pub fn load_topology<E: BufRead>(edge_source: E, name: &str) -> Result<GeoGraph> {
    let edges = read_edges(edge_source, name)?;
    let external_ids: Vec<u64> = edges
        .keys()
        .flat_map(|&(u, v)| [u, v])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |id: u64| external_ids.binary_search(&id).expect("id collected above");
    let origin = GeoPoint { lat: 0.0, lon: 0.0 };
    let graph = GeoGraph::from_edges(
        vec![origin; external_ids.len()],
        edges.iter().map(|(&(u, v), &w)| (index(u), index(v), w)),
    )?;
    graph.with_external_ids(external_ids)
}

/// [`load_graph`] over files on disk.
pub fn load_graph_files(
    edges: impl AsRef<Path>,
    coords: impl AsRef<Path>,
    options: LoadOptions,
) -> Result<GeoGraph> {
    let (edges, coords) = (edges.as_ref(), coords.as_ref());
    let open = |p: &Path| {
        File::open(p)
            .map(BufReader::new)
            .map_err(|e| Error::io(p, e))
    };
    load_named(
        open(edges)?,
        &edges.display().to_string(),
        open(coords)?,
        &coords.display().to_string(),
        options,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;

    fn load(edges: &str, coords: &str, options: LoadOptions) -> Result<GeoGraph> {
        load_graph(edges.as_bytes(), coords.as_bytes(), options)
    }

    #[test]
    fn triangle_from_csv_coords() {
        let g = load(
            "0\t1\n1\t2\n0\t2\n",
            "node,lat,lon\n0,0,0\n1,0,0\n2,0,0\n",
            LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.two_m(), 6.0);
        assert!(g.degrees().iter().all(|&k| k == 2.0));
        assert!(validate_graph(&g).is_ok());
    }

    #[test]
    fn both_directions_merge() {
        let g = load("0\t1\n1\t0\n", "0,0,0\n1,0,0\n", LoadOptions::default()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbors(0), &[(1, 2.0)]);
        assert_eq!(g.two_m(), 4.0);
    }

    #[test]
    fn missing_coordinate_policies() {
        let edges = "1\t2\n2\t5\n5\t1\n1\t3\n";
        let coords = "1,0,0\n2,0,1\n3,1,0\n";
        let err = load(edges, coords, LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingCoordinate(5)));

        let g = load(
            edges,
            coords,
            LoadOptions {
                missing_policy: MissingPolicy::Drop,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(g.external_ids(), &[1, 2, 3]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.index_of(5), None);
    }

    #[test]
    fn ids_sorted_and_weights_parsed() {
        let g = load(
            "30\t10\t2.5\n10\t20\n",
            "10,1,1\n20,2,2\n30,3,3\n",
            LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(g.external_ids(), &[10, 20, 30]);
        assert_eq!(g.location(2), GeoPoint { lat: 3.0, lon: 3.0 });
        assert_eq!(g.degree(0), 3.5);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = load(
            "# comment\n0\t1\n0\n",
            "0,0,0\n1,0,0\n",
            LoadOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = load("0\t1\n", "0,0,0\n1,95,0\n", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(load("0\t1\t0\n", "0,0,0\n1,0,0\n", LoadOptions::default()).is_err());
        assert!(load("0\t1\t-2\n", "0,0,0\n1,0,0\n", LoadOptions::default()).is_err());
        assert!(load("0\t0\n", "0,0,0\n", LoadOptions::default()).is_err());
    }

    #[test]
    fn checkin_policies() {
        let checkins = "\
0\t2010-10-17T01:48:53Z\t10.0\t20.0\tplace-a
0\t2010-10-16T06:02:04Z\t30.0\t20.0\tplace-b
1\t2010-10-12T23:58:03Z\t0.0\t0.0\tplace-c
";
        let last = load(
            "0\t1\n",
            checkins,
            LoadOptions {
                coord_policy: CoordPolicy::Last,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            last.location(0),
            GeoPoint {
                lat: 10.0,
                lon: 20.0
            }
        );

        let mean = load("0\t1\n", checkins, LoadOptions::default()).unwrap();
        let c = mean.location(0);
        assert!((c.lon - 20.0).abs() < 1e-9);
        assert!(c.lat > 19.9 && c.lat < 20.1, "{c:?}");
        assert_eq!(mean.location(1), GeoPoint { lat: 0.0, lon: 0.0 });
    }

    #[test]
    fn bad_timestamp_is_a_parse_error() {
        let err = load(
            "0\t1\n",
            "0\tyesterday\t1\t1\tx\n1\tyesterday\t1\t1\tx\n",
            LoadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn topology_only() {
        let g = load_topology("5\t7\n7\t9\n".as_bytes(), "edges").unwrap();
        assert_eq!(g.external_ids(), &[5, 7, 9]);
        assert_eq!(g.two_m(), 4.0);
    }

    #[test]
    fn loading_is_deterministic() {
        let edges = "3\t1\n2\t1\n3\t2\n";
        let coords = "1,1,1\n2,2,2\n3,3,3\n";
        let a = load(edges, coords, LoadOptions::default()).unwrap();
        let b = load(edges, coords, LoadOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
