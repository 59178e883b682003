use duase_core::events::{ingest_events, Event, EventTable, IngestOptions, TimeBin};
use duase_core::graph::build_unfolded;
use proptest::prelude::*;

fn bins() -> Vec<TimeBin> {
    (0..3)
        .map(|t| TimeBin {
            label: format!("b{t}"),
            start: t * 100,
            end: (t + 1) * 100,
        })
        .collect()
}

fn arb_events() -> impl Strategy<Value = Vec<Event>> {
    let event = (0u8..6, 0u8..6, 0u8..2, -20i64..320).prop_map(|(s, t, l, ts)| Event {
        source: format!("n{s}"),
        target: format!("n{t}"),
        layer: format!("L{l}"),
        timestamp: ts,
    });
    prop::collection::vec(event, 1..60)
}

fn shuffled(events: &[Event], keys: &[u32]) -> Vec<Event> {
    let mut idx: Vec<usize> = (0..events.len()).collect();
    idx.sort_by_key(|&i| (keys[i % keys.len()], i));
    idx.into_iter().map(|i| events[i].clone()).collect()
}

proptest! {
    #[test]
    fn strict_ingest_ignores_record_order(
        events in arb_events(),
        keys in prop::collection::vec(any::<u32>(), 1..60),
    ) {
        let opts = IngestOptions { strict: true, ..Default::default() };
        let a = ingest_events(&EventTable { records: events.clone() }, &bins(), &opts);
        let b = ingest_events(&EventTable { records: shuffled(&events, &keys) }, &bins(), &opts);
        match (a, b) {
            (Ok((ga, ra)), Ok((gb, rb))) => {
                prop_assert_eq!(ga, gb);
                prop_assert_eq!(ra, rb);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "order changed success"),
        }
    }

    #[test]
    fn fixed_node_order_ignores_record_order(
        events in arb_events(),
        keys in prop::collection::vec(any::<u32>(), 1..60),
    ) {
        let opts = IngestOptions {
            node_order: Some((0..6).map(|i| format!("n{i}")).collect()),
            layer_order: Some(vec!["L0".into(), "L1".into()]),
            strict: false,
        };
        let (ga, _) = ingest_events(&EventTable { records: events.clone() }, &bins(), &opts).unwrap();
        let (gb, _) = ingest_events(&EventTable { records: shuffled(&events, &keys) }, &bins(), &opts).unwrap();
        prop_assert_eq!(ga, gb);
    }

    #[test]
    fn every_kept_event_is_an_edge(events in arb_events()) {
        let opts = IngestOptions { strict: true, ..Default::default() };
        let Ok((g, report)) = ingest_events(&EventTable { records: events.clone() }, &bins(), &opts) else {
            return Ok(());
        };
        let labels = g.node_labels.clone().unwrap();
        let pos = |name: &str| labels.iter().position(|l| l == name).unwrap();
        let layers = g.layer_labels.clone().unwrap();
        let mut expected = std::collections::BTreeSet::new();
        for e in &events {
            let Some(t) = bins().iter().position(|b| b.contains(e.timestamp)) else { continue };
            if e.source == e.target {
                continue;
            }
            let k = layers.iter().position(|l| *l == e.layer).unwrap();
            expected.insert((k, t, pos(&e.source), pos(&e.target)));
        }
        let got: std::collections::BTreeSet<_> = g.edges().collect();
        prop_assert_eq!(&got, &expected);
        prop_assert_eq!(report.edges_kept, expected.len());

        let unfolded = build_unfolded(&g);
        let n = g.n();
        for &(k, t, i, j) in &expected {
            prop_assert_eq!(unfolded.get(k * n + i, t * n + j), 1.0);
        }
        prop_assert_eq!(unfolded.nnz(), expected.len());
    }
}

#[test]
fn duplicates_collapse_and_out_of_range_counted() {
    let ev = |s: &str, t: &str, ts| Event {
        source: s.into(),
        target: t.into(),
        layer: "L0".into(),
        timestamp: ts,
    };
    let table = EventTable {
        records: vec![ev("a", "b", 5), ev("a", "b", 50), ev("a", "a", 5), ev("b", "a", 900)],
    };
    let (g, report) = ingest_events(&table, &bins(), &IngestOptions::default()).unwrap();
    assert_eq!(g.n(), 2);
    assert_eq!(g.edge_count(), 1);
    assert_eq!(report.dropped_self_loops, 1);
    assert_eq!(report.dropped_out_of_range, 1);
}
