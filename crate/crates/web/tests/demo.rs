use spdc_web::{marginal, pump_image, ring_image, PREVIEW_N};

fn peak_at(values: &[f64]) -> usize {
    values.iter().enumerate().fold(0, |b, (i, v)| if *v > values[b] { i } else { b })
}

#[test]
fn pump_image_is_normalized_and_validated() {
    let v = pump_image("0,0,1", 200.0).unwrap();
    assert_eq!(v.len(), PREVIEW_N * PREVIEW_N);
    let c = PREVIEW_N / 2;
    assert_eq!(peak_at(&v), c * PREVIEW_N + c);
    assert!((v[c * PREVIEW_N + c] - 1.0).abs() < 1e-12);
    let err = pump_image("0,0,1", 0.0).unwrap_err().to_string();
    assert!(err.contains("pump.waist_um"), "{err}");
    assert!(pump_image("nonsense", 200.0).is_err());
}

#[test]
fn ring_is_a_ring() {
    let v = ring_image(29.97, 5.0).unwrap();
    let c = PREVIEW_N / 2;
    // dark center, bright annulus
    assert!(v[c * PREVIEW_N + c] < 1e-3);
    assert!(v.iter().cloned().fold(0.0, f64::max) > 0.99);
}

#[test]
fn marginal_preview_resembles_pump() {
    let (v, score) = marginal("0,1,1; 0,-1,-1", 300.0, 102.3, 0.0, 100.0).unwrap();
    assert_eq!(v.len(), PREVIEW_N * PREVIEW_N);
    assert!(score > 0.7, "{score}");
    assert!(marginal("0,0,1", 300.0, 5.0, 0.0, 100.0).is_err());
}
