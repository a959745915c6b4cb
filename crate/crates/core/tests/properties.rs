//! Invariants over random inputs.

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use spdc_core::analysis::{azimuthal_harmonics, ncc};
use spdc_core::config::RunConfig;
use spdc_core::crystal::CrystalParams;
use spdc_core::holography::fork_hologram;
use spdc_core::modes::{superpose_at, LgTerm, PumpSpec};
use spdc_core::propagation::{lens_stage, propagate_otf, RayMatrix};
use spdc_core::{ComplexField, Frame, Grid2D, IntensityMap};

const LAMBDA: f64 = 810e-9;
const N: usize = 64;

fn grid() -> Grid2D {
    Grid2D::position(N, 10e-6).unwrap()
}

fn random_field() -> impl Strategy<Value = ComplexField> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), N * N).prop_map(|v| {
        let values = Array2::from_shape_vec((N, N), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap();
        ComplexField::new(grid(), Frame::axial(), values, LAMBDA).unwrap()
    })
}

fn random_image() -> impl Strategy<Value = IntensityMap> {
    prop::collection::vec(0.0..1.0f64, N * N).prop_map(|v| {
        IntensityMap::new(grid(), [0.0, 0.0], Array2::from_shape_vec((N, N), v).unwrap()).unwrap()
    })
}

fn rel_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    let d: f64 = a.values.iter().zip(b.values.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let n: f64 = b.values.iter().map(|x| x.norm_sqr()).sum();
    (d / n).sqrt()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fft_round_trip(f in random_field()) {
        let back = f.to_momentum().unwrap().to_position().unwrap();
        prop_assert!(rel_diff(&back, &f) <= 1e-10);
        prop_assert!(rel(f.to_momentum().unwrap().power(), f.power()) <= 1e-10);
    }

    #[test]
    fn free_space_composes_and_reverses(f in random_field(), z1 in -0.2..0.2f64, z2 in -0.2..0.2f64) {
        let two = propagate_otf(&propagate_otf(&f, z1).unwrap(), z2).unwrap();
        let one = propagate_otf(&f, z1 + z2).unwrap();
        prop_assert!(rel_diff(&two, &one) <= 1e-10);
        let back = propagate_otf(&propagate_otf(&f, z1).unwrap(), -z1).unwrap();
        prop_assert!(rel_diff(&back, &f) <= 1e-10);
    }

    #[test]
    fn phase_elements_conserve_energy(f in random_field(), z in -0.5..0.5f64, focal in 0.05..2.0f64, l in -4i32..=4) {
        let p = f.power();
        prop_assert!(rel(propagate_otf(&f, z).unwrap().power(), p) <= 1e-10);
        prop_assert!(rel(lens_stage(&f, focal).unwrap().power(), p) <= 1e-10);
        let h = fork_hologram(l, 40e-6, grid()).unwrap();
        let mut g = f.clone();
        g.values.zip_mut_with(&h.transmission, |a, t| *a *= t);
        prop_assert!(rel(g.power(), p) <= 1e-10);
    }

    #[test]
    fn ncc_is_symmetric_and_affine_invariant(a in random_image(), b in random_image(), s in 0.01..100.0f64, t in 0.0..10.0f64) {
        let ab = ncc(&a, &b).unwrap();
        prop_assert!((ab - ncc(&b, &a).unwrap()).abs() < 1e-12);
        let moved = IntensityMap::new(a.grid, a.origin, a.values.mapv(|v| s * v + t)).unwrap();
        prop_assert!((ncc(&moved, &b).unwrap() - ab).abs() < 1e-9);
        prop_assert!((ncc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn superposition_ignores_a_global_factor(
        terms in prop::collection::vec((0u32..3, -3i32..=3, -1.0..1.0f64, -1.0..1.0f64), 1..4),
        scale in 0.1..10.0f64,
        phase in 0.0..6.28f64,
    ) {
        let terms: Vec<LgTerm> = terms.into_iter().map(|(p, l, re, im)| LgTerm::new(p, l, Complex64::new(re, im))).collect();
        let spec = match PumpSpec::new(terms.clone(), 100e-6) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let Ok(a) = superpose_at(&spec, grid(), 405e-9) else { return Ok(()) };
        prop_assert!((a.power() - 1.0).abs() < 1e-12);
        let f = Complex64::from_polar(scale, phase);
        let scaled: Vec<LgTerm> = terms.iter().map(|t| LgTerm::new(t.p, t.l, t.coeff * f)).collect();
        let b = superpose_at(&PumpSpec::new(scaled, 100e-6).unwrap(), grid(), 405e-9).unwrap();
        // equal up to the global phase
        let overlap = a.inner(&b).unwrap();
        prop_assert!((overlap.norm() - 1.0).abs() < 1e-9);
        prop_assert!((overlap.arg() - Complex64::from_polar(1.0, phase).arg()).abs() < 1e-9
            || (overlap.arg() - Complex64::from_polar(1.0, phase).arg()).abs() > 2.0 * std::f64::consts::PI - 1e-9);
    }

    #[test]
    fn phase_matching_weight_is_bounded_and_symmetric(
        qs in prop::array::uniform2(-1.5e6..1.5e6f64),
        qi in prop::array::uniform2(-1.5e6..1.5e6f64),
    ) {
        let pm = CrystalParams::default().phase_matcher().unwrap();
        let w = pm.weight(qs, qi).unwrap();
        prop_assert!(w.norm() <= 1.0 + 1e-12);
        // degenerate signal and idler are interchangeable
        let dk = pm.delta_k(qs, qi).unwrap();
        prop_assert!((dk - pm.delta_k(qi, qs).unwrap()).abs() <= 1e-9 * pm.k_pump);
    }

    #[test]
    fn harmonic_power_survives_quarter_turns(a in random_image()) {
        let rotated = IntensityMap::new(a.grid, a.origin, Array2::from_shape_fn((N, N), |(r, c)| {
            // (x, y) -> (-y, x) about the center sample
            let (x, y) = (c as isize - 32, r as isize - 32);
            let (sx, sy) = (y, -x);
            let (sr, sc) = (sy + 32, sx + 32);
            if (0..N as isize).contains(&sr) && (0..N as isize).contains(&sc) { a.values[[sr as usize, sc as usize]] } else { 0.0 }
        })).unwrap();
        // harmonics are evaluated inside a disc the rotation maps onto itself
        let ha = azimuthal_harmonics(&a, [0.0, 0.0]).unwrap();
        let hb = azimuthal_harmonics(&rotated, [0.0, 0.0]).unwrap();
        let scale = ha[0].max(1e-30);
        for (x, y) in ha.iter().zip(hb.iter()) {
            prop_assert!((x - y).abs() <= 1e-9 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn ray_matrices_are_unimodular(steps in prop::collection::vec((any::<bool>(), 0.01..1.0f64), 1..8)) {
        let m = steps.iter().fold(RayMatrix::identity(), |m, &(lens, v)| {
            m.then(if lens { RayMatrix::lens(v) } else { RayMatrix::free(v) })
        });
        prop_assert!((m.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn config_text_round_trips(
        waist in 50.0..800.0f64,
        length in 0.1..10.0f64,
        n_pow in 6u32..10,
        pitch in 1.0..20.0f64,
        d_um in 10.0..5000.0f64,
        az in 0.0..360.0f64,
        terms in prop::collection::vec((0u32..3, -3i32..=3, -1.0..1.0f64, -1.0..1.0f64), 1..3),
    ) {
        let mut cfg = RunConfig::default();
        let t: Vec<String> = terms.iter().map(|(p, l, re, im)| format!("{p},{l},{re},{im}")).collect();
        cfg.apply_overrides(&[
            format!("pump.terms={}", t.join(";")),
            format!("pump.waist_um={waist}"),
            format!("crystal.length_mm={length}"),
            format!("grid.n={}", 1usize << n_pow),
            format!("grid.pitch_um={pitch}"),
            format!("train.elements=free(5cm); aperture({d_um}um, ring={az}deg); free(100mm); lens(0.1m); free(100mm)"),
        ]).unwrap();
        let text = cfg.to_text();
        let again = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_text(), text);
    }
}
