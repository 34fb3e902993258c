use proptest::prelude::*;
use sublaw_cli::report::{format_g17, parse_csv, to_csv, to_json, ReportRow};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e6..1e6f64,
        Just(0.0),
        Just(0.1),
    ]
}

fn row() -> impl Strategy<Value = ReportRow> {
    (
        "[a-z_]{1,12}",
        0u64..1 << 20,
        "[ -~]{0,24}",
        finite(),
        finite(),
        any::<u64>(),
        "[a-z:0-9]{0,16}",
    )
        .prop_map(|(exp, n, stat, value, bound, seed, sel)| {
            ReportRow::check(&exp, n as usize, stat, value, bound, seed).with_selector(sel)
        })
}

proptest! {
    #[test]
    fn g17_round_trips(x in finite()) {
        let s = format_g17(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        prop_assert!(!s.contains(','));
    }

    #[test]
    fn csv_and_json_round_trip(rows in prop::collection::vec(row(), 1..8)) {
        let csv = to_csv(&rows).unwrap();
        prop_assert_eq!(parse_csv(&csv).unwrap(), rows.clone());
        let back: Vec<ReportRow> = serde_json::from_slice(&to_json(&rows).unwrap()).unwrap();
        prop_assert_eq!(back, rows.clone());
        for r in &rows {
            prop_assert_eq!(r.pass, r.value <= r.bound);
        }
    }
}
