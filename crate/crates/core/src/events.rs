//! Event-list ingestion: raw `(source, target, layer, timestamp)` records
//! binned into a dynamic multiplex graph.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DynamicMultiplexGraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub source: String,
    pub target: String,
    pub layer: String,
    /// Seconds since the Unix epoch (UTC).
    pub timestamp: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTable {
    pub records: Vec<Event>,
}

/// Parses a timestamp given either as integer epoch seconds or `YYYY-MM-DD` (UTC midnight).
pub fn parse_timestamp(raw: &str) -> Result<i64> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<i64>() {
        return Ok(secs);
    }
    let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map_err(|e| Error::parse(format!("timestamp `{raw}`"), e))?;
    Ok(date
        .and_hms_opt(0, 0, 0)
        .expect("midnight is valid")
        .and_utc()
        .timestamp())
}

impl EventTable {
    /// Reads a CSV with header `source,target,layer,timestamp`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse("event header", e))?
            .clone();
        let expected = ["source", "target", "layer", "timestamp"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::parse(
                "event header",
                format!("expected `{}`, found `{}`", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| Error::parse(format!("event row {}", line + 2), e))?;
            records.push(Event {
                source: row[0].to_string(),
                target: row[1].to_string(),
                layer: row[2].to_string(),
                timestamp: parse_timestamp(&row[3])?,
            });
        }
        Ok(Self { records })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    /// Smallest and largest timestamp.
    pub fn time_range(&self) -> Option<(i64, i64)> {
        let min = self.records.iter().map(|e| e.timestamp).min()?;
        let max = self.records.iter().map(|e| e.timestamp).max()?;
        Some((min, max))
    }
}

/// Half-open interval `[start, end)` in epoch seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBin {
    pub label: String,
    pub start: i64,
    pub end: i64,
}

impl TimeBin {
    pub fn contains(&self, ts: i64) -> bool {
        self.start <= ts && ts < self.end
    }
}

/// Calendar-month bins covering `[min_ts, max_ts]`, labelled `YYYY-MM`.
pub fn monthly_bins(min_ts: i64, max_ts: i64) -> Result<Vec<TimeBin>> {
    let to_date = |ts: i64| {
        chrono::DateTime::from_timestamp(ts, 0)
            .map(|d| d.date_naive())
            .ok_or_else(|| Error::InvalidArgument(format!("timestamp {ts} out of range")))
    };
    let first = to_date(min_ts)?;
    let last = to_date(max_ts)?;
    let mut bins = Vec::new();
    let (mut y, mut m) = (first.year(), first.month());
    loop {
        let start = NaiveDate::from_ymd_opt(y, m, 1).unwrap();
        let (ny, nm) = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
        let end = NaiveDate::from_ymd_opt(ny, nm, 1).unwrap();
        bins.push(TimeBin {
            label: format!("{y:04}-{m:02}"),
            start: start.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp(),
            end: end.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp(),
        });
        if (y, m) == (last.year(), last.month()) {
            break;
        }
        (y, m) = (ny, nm);
    }
    Ok(bins)
}

/// Fixed-width bins of `width` seconds starting at `min_ts` and covering `max_ts`.
pub fn uniform_bins(min_ts: i64, max_ts: i64, width: i64) -> Result<Vec<TimeBin>> {
    if width <= 0 {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    let count = ((max_ts - min_ts) / width + 1) as usize;
    Ok((0..count)
        .map(|b| {
            let start = min_ts + b as i64 * width;
            TimeBin {
                label: start.to_string(),
                start,
                end: start + width,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Layer order; when absent, layers are discovered from the data.
    pub layer_order: Option<Vec<String>>,
    /// Explicit node order. Every event endpoint must appear in it.
    pub node_order: Option<Vec<String>>,
    /// Strict mode: lexicographic node and layer ordering, unknown layers are errors.
    pub strict: bool,
}

/// Counters describing what ingestion discarded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub events_read: usize,
    pub edges_kept: usize,
    pub dropped_self_loops: usize,
    pub dropped_out_of_range: usize,
    pub dropped_unknown_layer: usize,
    pub duplicates_merged: usize,
}

/// Bins events into a graph: `A^{k,t}[i,j] = 1` iff at least one event
/// `i -> j` in layer `k` falls inside bin `t`.
pub fn ingest_events(
    table: &EventTable,
    bins: &[TimeBin],
    options: &IngestOptions,
) -> Result<(DynamicMultiplexGraph, IngestReport)> {
    if bins.is_empty() {
        return Err(Error::InvalidArgument("at least one time bin is required".into()));
    }
    for (idx, b) in bins.iter().enumerate() {
        if b.start >= b.end {
            return Err(Error::InvalidArgument(format!("bin `{}` is empty", b.label)));
        }
        if idx > 0 && bins[idx - 1].end > b.start {
            return Err(Error::InvalidArgument(format!(
                "bins `{}` and `{}` overlap or are unsorted",
                bins[idx - 1].label, b.label
            )));
        }
    }

    let mut report = IngestReport {
        events_read: table.records.len(),
        ..Default::default()
    };

    let layers: Vec<String> = match &options.layer_order {
        Some(order) => order.clone(),
        None if options.strict => table
            .records
            .iter()
            .map(|e| e.layer.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        None => first_appearance(table.records.iter().map(|e| e.layer.as_str())),
    };
    let layer_index: HashMap<&str, usize> =
        layers.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let mut usable = Vec::with_capacity(table.records.len());
    for e in &table.records {
        match layer_index.get(e.layer.as_str()) {
            Some(&k) => usable.push((e, k)),
            None if options.strict => return Err(Error::UnknownLayer(e.layer.clone())),
            None => report.dropped_unknown_layer += 1,
        }
    }

    let nodes: Vec<String> = match &options.node_order {
        Some(order) => order.clone(),
        None if options.strict => usable
            .iter()
            .flat_map(|(e, _)| [e.source.clone(), e.target.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        None => first_appearance(
            usable
                .iter()
                .flat_map(|(e, _)| [e.source.as_str(), e.target.as_str()]),
        ),
    };
    if nodes.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let node_index: HashMap<&str, usize> =
        nodes.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let mut edges = Vec::new();
    for (e, k) in usable {
        let lookup = |name: &str| {
            node_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("node `{name}` missing from node order")))
        };
        let (i, j) = (lookup(&e.source)?, lookup(&e.target)?);
        if i == j {
            report.dropped_self_loops += 1;
            continue;
        }
        // Bins are sorted and disjoint.
        let pos = bins.partition_point(|b| b.end <= e.timestamp);
        match bins.get(pos) {
            Some(b) if b.contains(e.timestamp) => edges.push((k, pos, i, j)),
            _ => report.dropped_out_of_range += 1,
        }
    }
    let before = edges.len();
    edges.sort_unstable();
    edges.dedup();
    report.duplicates_merged = before - edges.len();
    report.edges_kept = edges.len();

    let graph = DynamicMultiplexGraph::from_edges(nodes.len(), layers.len(), bins.len(), true, edges)?
        .with_labels(
            Some(nodes),
            Some(layers),
            Some(bins.iter().map(|b| b.label.clone()).collect()),
        )?;
    Ok((graph, report))
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    items
        .filter(|s| seen.insert(*s))
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, t: &str, l: &str, ts: i64) -> Event {
        Event {
            source: s.into(),
            target: t.into(),
            layer: l.into(),
            timestamp: ts,
        }
    }

    fn bin(start: i64, end: i64) -> TimeBin {
        TimeBin {
            label: format!("{start}"),
            start,
            end,
        }
    }

    #[test]
    fn empty_table_is_rejected() {
        let res = ingest_events(&EventTable::default(), &[bin(0, 10)], &IngestOptions::default());
        assert!(matches!(res, Err(Error::EmptyNodeSet)));
    }

    #[test]
    fn single_event_gives_two_nodes() {
        let table = EventTable {
            records: vec![ev("a", "b", "L1", 5)],
        };
        let opts = IngestOptions {
            layer_order: Some(vec!["L1".into()]),
            ..Default::default()
        };
        let (g, report) = ingest_events(&table, &[bin(0, 10)], &opts).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 0, 0, 1)]);
        assert_eq!(report.edges_kept, 1);
    }

    #[test]
    fn duplicates_binarize_and_drops_are_counted() {
        let table = EventTable {
            records: vec![
                ev("a", "b", "L1", 1),
                ev("a", "b", "L1", 2),
                ev("a", "a", "L1", 3),
                ev("b", "a", "L1", 99),
                ev("b", "a", "L2", 4),
            ],
        };
        let opts = IngestOptions {
            layer_order: Some(vec!["L1".into()]),
            ..Default::default()
        };
        let (g, report) = ingest_events(&table, &[bin(0, 10)], &opts).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(report.duplicates_merged, 1);
        assert_eq!(report.dropped_self_loops, 1);
        assert_eq!(report.dropped_out_of_range, 1);
        assert_eq!(report.dropped_unknown_layer, 1);

        let strict = IngestOptions {
            strict: true,
            ..opts
        };
        assert!(matches!(
            ingest_events(&table, &[bin(0, 10)], &strict),
            Err(Error::UnknownLayer(l)) if l == "L2"
        ));
    }

    #[test]
    fn overlapping_bins_rejected() {
        let table = EventTable {
            records: vec![ev("a", "b", "L1", 1)],
        };
        assert!(ingest_events(&table, &[bin(0, 10), bin(5, 20)], &IngestOptions::default()).is_err());
    }

    #[test]
    fn date_and_epoch_timestamps() {
        assert_eq!(parse_timestamp("1970-01-02").unwrap(), 86_400);
        assert_eq!(parse_timestamp(" 42 ").unwrap(), 42);
        assert!(parse_timestamp("2023-13-01").is_err());
    }

    #[test]
    fn monthly_bins_hand_count() {
        let jan31 = parse_timestamp("2023-01-31").unwrap();
        let mar01 = parse_timestamp("2023-03-01").unwrap();
        let bins = monthly_bins(jan31, mar01).unwrap();
        let labels: Vec<_> = bins.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["2023-01", "2023-02", "2023-03"]);
        assert_eq!(bins[1].start, parse_timestamp("2023-02-01").unwrap());
        assert_eq!(bins[1].end, parse_timestamp("2023-03-01").unwrap());
    }

    #[test]
    fn csv_reader_checks_header() {
        let ok = "source,target,layer,timestamp\na,b,L,2023-01-05\nb,c,L,100\n";
        let t = EventTable::from_csv_reader(ok.as_bytes()).unwrap();
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[1].timestamp, 100);
        assert!(EventTable::from_csv_reader("a,b,c,d\n".as_bytes()).is_err());
    }
}
