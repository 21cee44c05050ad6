use spade::record;
use spade_core::monte_carlo::{simulate_with, PathModel, SimulationSpec};
use spade_core::SystemConfig;

#[test]
fn records_round_trip_through_files() {
    let c = SystemConfig::new(0.3, 1.5, 0.02, 2.0, 0.3, 0.4).unwrap();
    let spec = SimulationSpec {
        path: PathModel::Correlated,
        ..SimulationSpec::new(7, 40.0, 2)
    };
    let rec = simulate_with(&c, &spec, 99).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.json");
    record::write(&path, &rec).unwrap();
    assert_eq!(record::read(&path).unwrap(), rec);
}

#[test]
fn malformed_records_are_rejected() {
    assert!(record::from_json("{}").is_err());
    let good = record::to_json(
        &simulate_with(
            &SystemConfig::dimensionless(0.1, 0.01, 0.5, 0.0).unwrap(),
            &SimulationSpec::new(1, 10.0, 1),
            1,
        )
        .unwrap(),
    );
    assert!(record::from_json(&good).is_ok());
    assert!(record::from_json(&good.replace("\"1,1\"", "\"2,2\"")).is_err());
    assert!(record::from_json(&good.replace("\"brightness_nu\": 0.5", "\"brightness_nu\": 1.5")).is_err());
}
