use firsterr::config::CorpusConfig;
use firsterr::corpus::generate_records;
use firsterr::record::{parse_line, read_jsonl, to_line, GenerationStats, Record};
use firsterr::Error;
use firsterr_core::fixtures;

fn example_a_record() -> Record {
    Record::from_instance("example-a".into(), "none".into(), &fixtures::example_a(), GenerationStats::default())
}

#[test]
fn fixture_round_trips() {
    let rec = example_a_record();
    let line = to_line(&rec);
    let back: Record = parse_line(&line, 1).unwrap();
    assert_eq!(back, rec);
    assert_eq!(back.to_instance().unwrap(), fixtures::example_a());
    assert_eq!(back.labels.erroneous, ["valid", "valid", "valid", "invalid", "invalid", "invalid"]);
    assert_eq!(to_line(&back), line);
}

#[test]
fn unknown_fields_survive() {
    let mut v: serde_json::Value = serde_json::from_str(&to_line(&example_a_record())).unwrap();
    v["annotator"] = serde_json::json!({"name": "x", "pass": 2});
    v["zz_note"] = "kept".into();
    let line = v.to_string();
    let rec: Record = parse_line(&line, 1).unwrap();
    assert_eq!(rec.extra["zz_note"], "kept");
    assert_eq!(to_line(&rec), line);
}

#[test]
fn schema_and_shape_errors() {
    let mut v: serde_json::Value = serde_json::from_str(&to_line(&example_a_record())).unwrap();
    v["schema_version"] = 999.into();
    match parse_line::<Record>(&v.to_string(), 4) {
        Err(Error::SchemaMismatch { line: 4, found, .. }) => assert_eq!(found, "999"),
        other => panic!("{other:?}"),
    }
    let good = to_line(&example_a_record());
    let text = format!("{good}\n\n{{\"schema_version\": 1, \"id\": 3\n");
    match read_jsonl::<Record>(text.as_bytes()) {
        Err(Error::Malformed { line: 3, .. }) => {}
        other => panic!("{other:?}"),
    }
    let no_version = r#"{"id": "a"}"#;
    assert!(matches!(parse_line::<Record>(no_version, 1), Err(Error::Malformed { .. })));
}

#[test]
fn thousand_instances_round_trip_byte_stable() {
    let cfg = CorpusConfig { count: 1000, seed: 21, ..CorpusConfig::default() };
    let (records, _) = generate_records(&cfg, 1).unwrap();
    for r in &records {
        let line = to_line(r);
        let back: Record = parse_line(&line, 1).unwrap();
        assert_eq!(&back, r);
        assert_eq!(to_line(&back), line);
        let inst = back.to_instance().unwrap();
        let again = Record::from_instance(r.id.clone(), r.config_digest.clone(), &inst, r.stats.clone());
        assert_eq!(to_line(&again), line, "{}", r.id);
    }
}
