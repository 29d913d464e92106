use anthropometer_core::anthropometry::{measure_all, MeasurementConfig};
use anthropometer_core::synth::{generate_population, PopulationRanges};

#[test]
fn every_sampled_body_measures_to_its_ground_truth() {
    let pop = generate_population(200, 2024, &PopulationRanges::default()).unwrap();
    let cfg = MeasurementConfig::default();
    let mut failures = Vec::new();
    for m in &pop.members {
        match measure_all(&m.body.mesh, &m.body.joints, &cfg) {
            Ok(hbd) => {
                let bad = m.body.ground_truth.failures(&hbd);
                if !bad.is_empty() {
                    failures.push(format!("{}: {bad:?}", m.record.id));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", m.record.id)),
        }
    }
    assert_eq!(pop.members.len(), 400);
    assert!(failures.is_empty(), "{failures:#?}");
}
