//! Golden codec fixtures shared with the browser decoder. Each `<name>.p6df`
//! has a `<name>.json` twin describing the expected table. Set `P6_BLESS=1`
//! to regenerate both.

use std::path::PathBuf;

use p6_core::frame::{decode_binary, encode_binary, Bitmap, Column, ColumnData, DataFrame, Scalar};
use serde_json::{json, Value as Json};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/p6df")
}

fn float_json(v: f64) -> Json {
    if v.is_nan() {
        json!("NaN")
    } else if v.is_infinite() {
        json!(if v > 0.0 { "Infinity" } else { "-Infinity" })
    } else {
        json!(v)
    }
}

/// Dtypes, dictionaries and cells, with non-finite floats spelled out.
fn describe(frame: &DataFrame) -> Json {
    let columns: Vec<Json> = frame
        .columns()
        .iter()
        .map(|c| {
            let values: Vec<Json> = (0..c.len())
                .map(|i| match c.get(i) {
                    Scalar::Null => Json::Null,
                    Scalar::Float(v) => float_json(v),
                    Scalar::Int(v) => json!(v.to_string()),
                    Scalar::Str(s) => json!(s),
                })
                .collect();
            json!({"name": c.name(), "dtype": c.dtype(), "dictionary": c.dictionary(), "values": values})
        })
        .collect();
    json!({"row_count": frame.row_count(), "columns": columns})
}

fn fixtures() -> Vec<(&'static str, DataFrame)> {
    let with_nulls = |name: &str, data: ColumnData, present: &[bool]| {
        Column::new(name, data, Some(Bitmap::from_bools(present))).unwrap()
    };
    vec![
        ("empty", DataFrame::new(vec![]).unwrap()),
        ("ints", DataFrame::new(vec![Column::int64("n", vec![0, 1, -1, i64::MAX, i64::MIN])]).unwrap()),
        (
            "floats",
            DataFrame::new(vec![Column::float64(
                "x",
                vec![0.0, -0.0, 1.5, f64::NAN, f64::INFINITY, f64::NEG_INFINITY, 5e-324, f64::MAX],
            )])
            .unwrap(),
        ),
        (
            "nulls",
            DataFrame::new(vec![
                with_nulls("f", ColumnData::Float64(vec![1.0, 0.0, 3.0, 0.0, 5.0, 6.0, 7.0, 8.0, 9.0]), &[true, false, true, false, true, true, true, true, false]),
                with_nulls("i", ColumnData::Int64(vec![1, 2, 3, 4, 5, 6, 7, 8, 9]), &[false; 9]),
                Column::categorical("c", &[Some("a"), None, Some("b"), Some("a"), None, Some("b"), Some("a"), None, Some("b")]),
            ])
            .unwrap(),
        ),
        (
            "unicode",
            DataFrame::new(vec![Column::categorical("país", &[Some("España"), Some("日本"), Some(""), Some("🙂,\"x\"\n")])]).unwrap(),
        ),
        (
            "scatter4",
            DataFrame::new(vec![
                Column::float64("PC.0", vec![-1.0, -0.5, 0.5, 1.0]),
                Column::float64("PC.1", vec![1.0, -1.0, 0.5, -0.5]),
                Column::int64("Clusters", vec![0, 0, 1, 1]),
                Column::int64("$row", vec![0, 1, 2, 3]),
            ])
            .unwrap(),
        ),
    ]
}

#[test]
fn fixtures_match_the_encoder() {
    let bless = std::env::var_os("P6_BLESS").is_some();
    if bless {
        std::fs::create_dir_all(dir()).unwrap();
    }
    for (name, frame) in fixtures() {
        let bytes = encode_binary(&frame);
        let doc = serde_json::to_string_pretty(&describe(&frame)).unwrap() + "\n";
        let (bin_path, json_path) = (dir().join(format!("{name}.p6df")), dir().join(format!("{name}.json")));
        if bless {
            std::fs::write(&bin_path, &bytes).unwrap();
            std::fs::write(&json_path, &doc).unwrap();
        }
        let stored = std::fs::read(&bin_path).unwrap_or_else(|e| panic!("{}: {e}", bin_path.display()));
        assert_eq!(stored, bytes, "{name}: encoder output drifted from the fixture");
        let decoded = decode_binary(&stored).unwrap();
        assert_eq!(decoded, frame, "{name}");
        assert_eq!(std::fs::read_to_string(&json_path).unwrap(), doc, "{name}");
    }
}

#[test]
fn corrupt_fixture_is_rejected() {
    let mut bytes = std::fs::read(dir().join("ints.p6df")).unwrap();
    bytes[0] ^= 0xff;
    assert!(decode_binary(&bytes).is_err());
}
