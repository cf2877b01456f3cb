use std::f64::consts::PI;

use heattrace::{generate_interval, generate_rectangle, generate_torus, load_spectrum, save_spectrum, Error, Spectrum};

#[test]
fn generated_spectra_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let spectra = [
        generate_interval(PI, 100).unwrap(),
        generate_rectangle(1.3, 0.7, 400.0).unwrap(),
        generate_torus(500.0).unwrap(),
    ];
    for (i, s) in spectra.iter().enumerate() {
        let path = dir.path().join(format!("s{i}.json"));
        save_spectrum(s, &path).unwrap();
        let back: Spectrum<f64> = load_spectrum(&path).unwrap();
        assert_eq!(&back, s);
    }
}

#[test]
fn file_schema_fields() {
    let s = generate_interval(PI, 2).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s.to_json_string().unwrap()).unwrap();
    assert_eq!(v["generator"]["kind"], "interval");
    assert_eq!(v["generator"]["count"], 2);
    assert_eq!(v["cutoff"], 4.0);
    assert_eq!(v["entries"][1]["value"], 4.0);
    assert_eq!(v["entries"][1]["multiplicity"], 1);
    assert!(v["label"].is_string());
}

#[test]
fn extra_generator_keys_survive() {
    let text = r#"{"label": "measured", "generator": {"kind": "file", "source": "lab"}, "cutoff": 5, "entries": [{"value": 1, "multiplicity": 2}]}"#;
    let s = Spectrum::<f64>::from_json_str(text).unwrap();
    let again = Spectrum::<f64>::from_json_str(&s.to_json_string().unwrap()).unwrap();
    assert_eq!(s, again);
    assert!(s.to_json_string().unwrap().contains("\"source\": \"lab\""));
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_spectrum::<f64>("/nonexistent/spec.json"), Err(Error::Io(_))));
}

#[test]
fn invalid_generator_params_rejected_on_load() {
    let text = r#"{"generator": {"kind": "interval", "length": -1, "count": 2}, "entries": [{"value": 1}]}"#;
    assert!(matches!(
        Spectrum::<f64>::from_json_str(text),
        Err(Error::InvalidParameter { field: "length", .. })
    ));
}
