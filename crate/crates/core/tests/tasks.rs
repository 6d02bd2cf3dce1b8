use pulsed_rc::tasks::{
    gen_narma, load_csv_task, narma_response, standardize, write_csv, CsvSource, NarmaConfig,
    NarmaSum, TaskDataset,
};

#[test]
fn zero_input_narma2_settles_on_quadratic_root() {
    let ds = gen_narma(&NarmaConfig {
        order: 2,
        length: 10_000,
        input_low: 0.0,
        input_high: 0.0,
        ..NarmaConfig::default()
    })
    .unwrap();
    // 0.15 y^2 - 0.7 y + 0.1 = 0, smaller root
    let root = (0.7 - (0.7f64 * 0.7 - 4.0 * 0.15 * 0.1).sqrt()) / (2.0 * 0.15);
    assert!((ds.targets[9_999] - root).abs() < 1e-6);
    assert!((root - 0.147_520_5).abs() < 1e-7);
}

#[test]
fn compat_zero_input_root_uses_n_terms() {
    let y = narma_response(&vec![0.0; 5000], 2, NarmaSum::Compat).unwrap();
    // 0.1 y^2 - 0.7 y + 0.1 = 0
    let root = (0.7 - (0.49f64 - 0.04).sqrt()) / 0.2;
    assert!((y[4999] - root).abs() < 1e-9);
}

#[test]
fn narma_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("narma.csv");
    let ds = gen_narma(&NarmaConfig {
        order: 3,
        length: 500,
        seed: 9,
        ..NarmaConfig::default()
    })
    .unwrap();
    write_csv(&ds, &path).unwrap();
    let loaded = load_csv_task(
        &CsvSource::new(&path, Some("u")),
        &CsvSource::new(&path, Some("y")),
        0.8,
    )
    .unwrap();
    assert_eq!(loaded.inputs, ds.inputs);
    assert_eq!(loaded.targets, ds.targets);
    assert_eq!((loaded.train_len, loaded.test_len), (400, 100));
}

#[test]
fn ten_thousand_row_csv_split() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pump.csv");
    let body: String = (0..10_000)
        .map(|i| format!("{}\n", (i as f64).sin()))
        .collect();
    std::fs::write(&path, body).unwrap();
    let src = CsvSource::new(&path, None);
    let ds = load_csv_task(&src, &src, 0.8).unwrap();
    assert_eq!((ds.train_len, ds.test_len), (8000, 2000));
}

#[test]
fn standardize_ignores_test_rows() {
    let inputs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin()).collect();
    let ds = TaskDataset::new("x", inputs, vec![0.0; 100], 80, 20, None).unwrap();
    let mut poisoned = ds.clone();
    for x in &mut poisoned.inputs[80..] {
        *x = 1e9;
    }
    let a = standardize(&ds).unwrap();
    let b = standardize(&poisoned).unwrap();
    assert_eq!(a.inputs[..80], b.inputs[..80]);
    assert_eq!(a.input_scaling, b.input_scaling);
}
