//! Checks against independent closed forms and direct computations.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use spdc_core::analysis::{azimuthal_harmonics, dominant_harmonic, imaging_geometry, ncc, resample, ImagingGeometry};
use spdc_core::biphoton::{
    angular_spectrum_direct, angular_spectrum_raw, build_biphoton, coherent_sum, incoherent_sum, marginal_batch, marginal_image_raw,
    oam_spectrum, ring_carrier, BuildOptions, Coherent, IdlerSampling, Propagated,
};
use spdc_core::crystal::{
    annulus_bounds, collinear_phase_matching_angle, refractive_index, ring_radius, ring_scan_step, CrystalParams,
    IndexModel, Polarization,
};
use spdc_core::holography::{diffract_first_order, first_order_field, fork_hologram};
use spdc_core::modes::{lg_mode_at, lg_value, superpose_at, PumpSpec};
use spdc_core::propagation::{
    apply_aperture, plane_wave, propagate_otf, run_elements, run_train, run_train_fixed_grid, ApertureSpec, Element,
    OpticalTrain,
};
use spdc_core::{ComplexField, Domain, Frame, Grid2D, IntensityMap};

const LAMBDA: f64 = 810e-9;

fn second_moment_x(f: &ComplexField) -> f64 {
    let g = f.grid;
    let (mut s, mut w) = (0.0, 0.0);
    for ((_, c), v) in f.values.indexed_iter() {
        let i = v.norm_sqr();
        s += i * g.coord(c).powi(2);
        w += i;
    }
    s / w
}

fn correlation(a: &ComplexField, b: &ComplexField) -> f64 {
    let ab: Complex64 = a.values.iter().zip(b.values.iter()).map(|(x, y)| x.conj() * y).sum();
    let aa: f64 = a.values.iter().map(|x| x.norm_sqr()).sum();
    let bb: f64 = b.values.iter().map(|x| x.norm_sqr()).sum();
    ab.norm() / (aa * bb).sqrt()
}

#[test]
fn gaussian_width_grows_by_root_two_over_a_rayleigh_range() {
    let w0 = 100e-6;
    let g = Grid2D::position(256, 4e-6).unwrap();
    let beam = lg_mode_at(0, 0, w0, g, LAMBDA).unwrap();
    let zr = PI * w0 * w0 / LAMBDA;
    let out = propagate_otf(&beam, zr).unwrap();
    // <x^2> = w^2 / 4 for a Gaussian of 1/e^2 intensity radius w
    let w_in = 2.0 * second_moment_x(&beam).sqrt();
    let w_out = 2.0 * second_moment_x(&out).sqrt();
    assert!((w_in / w0 - 1.0).abs() < 1e-3, "{w_in}");
    assert!((w_out / (w0 * 2f64.sqrt()) - 1.0).abs() < 0.01, "{w_out}");
}

#[test]
fn gaussian_spectrum_has_waist_two_over_w() {
    let w = 200e-6;
    let g = Grid2D::position(256, 10e-6).unwrap();
    let spec = lg_mode_at(0, 0, w, g, LAMBDA).unwrap().to_momentum().unwrap();
    let wq = 2.0 * second_moment_x(&spec).sqrt();
    assert!((wq / (2.0 / w) - 1.0).abs() < 1e-3, "{wq}");
}

#[test]
fn lg_modes_are_fourier_eigenfunctions() {
    // unitary FT maps LG_p^l(w) to (-i)^(2p+|l|) LG_p^l(2/w) in q
    let w = 150e-6;
    let g = Grid2D::position(256, 8e-6).unwrap();
    for (p, l) in [(0, 0), (0, 2), (1, -1), (2, 3)] {
        let spec = lg_mode_at(p, l, w, g, LAMBDA).unwrap().to_momentum().unwrap();
        let qg = spec.grid;
        let analytic = Array2::from_shape_fn((256, 256), |(r, c)| {
            let (qx, qy) = (qg.coord(c), qg.coord(r));
            lg_value(p as u32, l, 2.0 / w, qx.hypot(qy), qy.atan2(qx))
        });
        let analytic = ComplexField::new(qg, Frame::axial(), analytic, LAMBDA).unwrap();
        let overlap = analytic.inner(&spec).unwrap();
        let expected = Complex64::new(0.0, -1.0).powi(2 * p + l.abs());
        assert!((overlap - expected).norm() < 1e-6, "p={p} l={l}: {overlap}");
    }
}

#[test]
fn disc_transmits_its_area_fraction() {
    let g = Grid2D::position(256, 10e-6).unwrap();
    let u = plane_wave(g, LAMBDA).unwrap();
    for d in [0.3e-3, 0.8e-3, 2.0e-3] {
        let out = apply_aperture(&u, &ApertureSpec::new(d, [0.0, 0.0]).unwrap()).unwrap();
        let ratio = out.power() / u.power();
        let expected = PI * (0.5 * d).powi(2) / g.window().powi(2);
        assert!((ratio / expected - 1.0).abs() < 0.02, "d={d}: {ratio} vs {expected}");
    }
}

#[test]
fn lens_focuses_a_plane_wave_on_axis() {
    let g = Grid2D::position(256, 10e-6).unwrap();
    let u = apply_aperture(&plane_wave(g, LAMBDA).unwrap(), &ApertureSpec::new(1.5e-3, [0.0, 0.0]).unwrap()).unwrap();
    let f = 0.2;
    let train = OpticalTrain::new(vec![Element::Lens { focal_m: f }, Element::FreeSpace { distance_m: f }]).unwrap();
    let out = run_train_fixed_grid(&u, &train).unwrap().intensity();
    let mean = out.total() / (256.0 * 256.0);
    assert_eq!(out.center_value(), out.peak());
    assert!(out.peak() > 100.0 * mean);
}

#[test]
fn two_f_chain_is_a_scaled_fourier_transform() {
    // aperture plane -> f -> lens -> f gives U(x) ~ F(k x / f)
    let g = Grid2D::position(256, 10e-6).unwrap();
    let pump = PumpSpec::petals(1, 250e-6).unwrap();
    let field = superpose_at(&pump, g, LAMBDA).unwrap();
    let f = 0.1;
    let elements = [Element::FreeSpace { distance_m: f }, Element::Lens { focal_m: f }, Element::FreeSpace { distance_m: f }];
    let out = run_elements(&field, &elements).unwrap();
    let k = 2.0 * PI / LAMBDA;
    let og = out.grid;
    assert!((og.pitch() - LAMBDA * f / (256.0 * 10e-6)).abs() < 1e-15);
    // analytic transform of the aperture-plane superposition
    let w = 250e-6;
    let expected = Array2::from_shape_fn((256, 256), |(r, c)| {
        let (qx, qy) = (k * og.coord(c) / f, k * og.coord(r) / f);
        pump.terms()
            .iter()
            .map(|t| t.coeff * Complex64::new(0.0, -1.0).powi(t.l.abs()) * lg_value(t.p, t.l, 2.0 / w, qx.hypot(qy), qy.atan2(qx)))
            .sum::<Complex64>()
    });
    let expected = ComplexField::new(og, out.frame, expected, LAMBDA).unwrap();
    assert!(correlation(&out, &expected) >= 0.99);
}

#[test]
fn paraxial_train_matches_elementwise_evaluation() {
    let g = Grid2D::position(256, 10e-6).unwrap();
    let beam = lg_mode_at(0, 1, 200e-6, g, LAMBDA).unwrap();
    let train = OpticalTrain::new(vec![
        Element::FreeSpace { distance_m: 0.02 },
        Element::Aperture(ApertureSpec::new(0.9e-3, [0.0, 0.0]).unwrap()),
        Element::FreeSpace { distance_m: 0.03 },
    ])
    .unwrap();
    let a = run_train(&beam, &train).unwrap();
    let b = run_train_fixed_grid(&beam, &train).unwrap();
    assert_eq!(a.grid, b.grid);
    let diff: f64 = a.values.iter().zip(b.values.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let norm: f64 = b.values.iter().map(|x| x.norm_sqr()).sum();
    assert!((diff / norm).sqrt() < 1e-9);
}

#[test]
fn bbo_indices_match_published_values() {
    let m = IndexModel::bbo();
    // Eimerl dispersion evaluated by hand
    let no = |um: f64| (2.7359 + 0.01878 / (um * um - 0.01822) - 0.01354 * um * um).sqrt();
    let no810 = refractive_index(&m, 810e-9, Polarization::Ordinary, 0.0).unwrap();
    assert!((no810 - 1.660258).abs() < 1e-6, "{no810}");
    assert!((no810 - no(0.81)).abs() < 1e-12);
    let no405 = refractive_index(&m, 405e-9, Polarization::Ordinary, 0.0).unwrap();
    assert!(no405 > no810);
    let ne405 = refractive_index(&m, 405e-9, Polarization::Extraordinary, PI / 2.0).unwrap();
    let e0 = refractive_index(&m, 405e-9, Polarization::Extraordinary, 0.0).unwrap();
    assert!((e0 - no405).abs() < 1e-15);
    assert!(ne405 < no405, "BBO is negative uniaxial");
}

#[test]
fn collinear_angle_matches_closed_form() {
    let c = CrystalParams::default();
    let m = &c.index_model;
    let no_p = m.principal_index(405e-9, Polarization::Ordinary).unwrap();
    let ne_p = m.principal_index(405e-9, Polarization::Extraordinary).unwrap();
    let no_s = m.principal_index(810e-9, Polarization::Ordinary).unwrap();
    // degenerate collinear Type I: n_e(theta, 405) = n_o(810)
    let s2 = (no_s.powi(-2) - no_p.powi(-2)) / (ne_p.powi(-2) - no_p.powi(-2));
    let closed = s2.sqrt().asin();
    let found = collinear_phase_matching_angle(&c).unwrap();
    assert!((found - closed).abs() < 1e-9, "{} vs {}", found.to_degrees(), closed.to_degrees());
    let at = CrystalParams { cut_angle_rad: found, ..c };
    let pm = at.phase_matcher().unwrap();
    assert!(pm.delta_k([0.0, 0.0], [0.0, 0.0]).unwrap().abs() <= 1e-6 * pm.k_pump);
}

#[test]
fn ring_radius_matches_closed_form_and_is_stable() {
    let c = CrystalParams::default();
    let pm = c.phase_matcher().unwrap();
    // anti-correlated pairs: 2 sqrt(k_s^2 - q^2) = k_p
    let closed = (pm.k_signal.powi(2) - 0.25 * pm.k_pump.powi(2)).sqrt();
    let step = ring_scan_step(&pm);
    let q = ring_radius(&c, step).unwrap();
    assert!((q / closed - 1.0).abs() < 1e-6, "{q} vs {closed}");
    for refine in [2.0, 4.0, 8.0] {
        let qr = ring_radius(&c, step / refine).unwrap();
        assert!((qr / q - 1.0).abs() < 0.01);
    }
    let (lo, hi) = annulus_bounds(&c, 0.05).unwrap();
    assert!(lo < q && q < hi);
}

fn ring_spectrum(n: usize) -> (IntensityMap, f64) {
    let c = CrystalParams::default();
    let pm = c.phase_matcher().unwrap();
    let q0 = ring_radius(&c, ring_scan_step(&pm)).unwrap();
    let (_, hi) = annulus_bounds(&c, 0.05).unwrap();
    let pump = superpose_at(&PumpSpec::gaussian(0.5e-3).unwrap(), Grid2D::position(256, 10e-6).unwrap(), 405e-9)
        .unwrap()
        .to_momentum()
        .unwrap();
    let qg = Grid2D::new(n, 2.5 * hi / n as f64, Domain::Momentum).unwrap();
    (angular_spectrum_direct(&pump, &pm, qg, [0.0, 0.0], None).unwrap(), q0)
}

#[test]
fn gaussian_pump_ring_is_isotropic_and_peaks_at_the_ring_radius() {
    let (img, q0) = ring_spectrum(128);
    let g = img.grid;
    let mid = 64.0;
    let mut bins = vec![(0.0, 0usize); 16];
    let mut best = (0.0, 0.0);
    for ((r, c), v) in img.values.indexed_iter() {
        let (x, y) = (c as f64 - mid, r as f64 - mid);
        let rad = x.hypot(y) * g.pitch();
        if *v > best.0 {
            best = (*v, rad);
        }
        if (rad - q0).abs() < 2.0 * g.pitch() {
            let b = (((y.atan2(x) + PI) / (2.0 * PI) * 16.0) as usize).min(15);
            bins[b].0 += v;
            bins[b].1 += 1;
        }
    }
    let means: Vec<f64> = bins.iter().map(|(s, k)| s / *k as f64).collect();
    let max = means.iter().cloned().fold(0.0, f64::max);
    let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min - 1.0 < 0.05, "{means:?}");
    assert!((best.1 - q0).abs() < 1.5 * g.pitch());
    assert!(img.center_value() < 1e-3 * img.peak());
}

fn preset_biphoton(samples: usize, pump: &PumpSpec) -> (spdc_core::biphoton::BiphotonAmplitude, OpticalTrain) {
    let c = CrystalParams::default();
    let g = Grid2D::position(256, 10e-6).unwrap();
    let (carrier, center) = ring_carrier(&c, 0.05, 0.0).unwrap();
    let opts = BuildOptions { carrier, ..Default::default() };
    let bi = build_biphoton(pump, &c, g, &IdlerSampling { samples_per_axis: samples, threshold: 0.05 }, &opts).unwrap();
    (bi, OpticalTrain::fourier_imaging(0.05, ApertureSpec::new(102.3e-6, center).unwrap(), 0.1, 0.1))
}

#[test]
fn full_lattice_quadrature_equals_the_direct_sum() {
    let (bi, _) = preset_biphoton(256, &PumpSpec::petals(1, 0.5e-3).unwrap());
    let c = CrystalParams::default();
    let quad = angular_spectrum_raw(&bi).unwrap();
    let direct =
        angular_spectrum_direct(&bi.pump_spectrum(), bi.matcher(), bi.signal_grid(), bi.carrier(), Some(annulus_bounds(&c, 0.05).unwrap()))
            .unwrap();
    // the idler box spans one window around -carrier, so pairs feeding the
    // outermost signal rows through the pump's spectral tail are cut off
    let inner = ndarray::s![16..240, 16..240];
    let (q, d) = (quad.values.slice(inner), direct.values.slice(inner));
    let diff: f64 = q.iter().zip(d.iter()).map(|(a, b)| (a - b).abs()).sum();
    assert!(diff / d.sum() < 1e-6, "{}", diff / d.sum());
}

#[test]
fn signal_is_anticorrelated_with_the_idler() {
    // narrow pump spectrum: each signal field sits at q_s = -q_i
    let (bi, _) = preset_biphoton(32, &PumpSpec::gaussian(0.6e-3).unwrap());
    // tolerance: the pump's spectral waist
    let tol = 2.0 / 0.6e-3;
    for (i, s) in bi.samples().iter().enumerate() {
        let f = bi.signal_field(i);
        if f.power() == 0.0 {
            continue;
        }
        let centroid = f.intensity().centroid();
        let qs = [bi.carrier()[0] + centroid[0], bi.carrier()[1] + centroid[1]];
        assert!((qs[0] + s.q[0]).abs() < tol && (qs[1] + s.q[1]).abs() < tol, "{qs:?} vs {:?}", s.q);
    }
}

#[test]
fn marginal_is_additive_over_idler_samples() {
    let (bi, train) = preset_biphoton(32, &PumpSpec::petals(1, 0.5e-3).unwrap());
    let idx: Vec<usize> = (0..bi.len()).collect();
    let (a, b) = idx.split_at(bi.len() / 3);
    let full = marginal_image_raw(&bi, &train, true).unwrap();
    let pa = marginal_image_raw(&bi.subset(a), &train, true).unwrap();
    let pb = marginal_image_raw(&bi.subset(b), &train, true).unwrap();
    let sum = &pa.values + &pb.values;
    let diff: f64 = (&sum - &full.values).mapv(f64::abs).sum();
    assert!(diff / full.total() < 1e-12);
}

#[test]
fn transmitted_power_grows_with_the_aperture() {
    let (bi, train) = preset_biphoton(32, &PumpSpec::petals(1, 0.5e-3).unwrap());
    let (idx, ap) = train.first_aperture().unwrap();
    let suffixes: Vec<Vec<Element>> = [80e-6, 120e-6, 200e-6, 400e-6, 1e-3]
        .iter()
        .map(|&d| {
            let mut e = train.elements[idx..].to_vec();
            e[0] = Element::Aperture(ApertureSpec::new(d, ap.center).unwrap());
            e
        })
        .collect();
    let imgs = marginal_batch(&bi, &train.elements[..idx], &suffixes, true).unwrap();
    let powers: Vec<f64> = imgs.iter().map(|i| i.power()).collect();
    assert!(powers.windows(2).all(|w| w[1] > w[0]), "{powers:?}");
}

#[test]
fn mirrored_pump_mirrors_the_oam_spectrum() {
    let pump = PumpSpec::vortex(3, 0.5e-3).unwrap();
    let (bi, train) = preset_biphoton(32, &pump);
    let (bm, _) = preset_biphoton(32, &pump.mirrored());
    let a = oam_spectrum(&Propagated::new(&bi, &train), [0.0, 0.0]).unwrap();
    let b = oam_spectrum(&Propagated::new(&bm, &train), [0.0, 0.0]).unwrap();
    for &l in &a.l {
        assert!((a.fraction(l) - b.fraction(-l)).abs() < 0.01, "l={l}");
    }
}

#[test]
fn single_coherent_component_sums_to_its_intensity() {
    let g = Grid2D::position(64, 10e-6).unwrap();
    let f = lg_mode_at(0, 2, 100e-6, g, LAMBDA).unwrap();
    let img = incoherent_sum(&Coherent(f.clone())).unwrap();
    assert_eq!(img.values, f.intensity().values);
}

#[test]
fn blazed_fork_sends_all_power_to_the_first_order() {
    let g = Grid2D::position(256, 10e-6).unwrap();
    let beam = lg_mode_at(0, 0, 500e-6, g, LAMBDA).unwrap();
    let dq = g.conjugate().pitch();
    for l in [0, 2, -3] {
        let h = fork_hologram(l, 40e-6, g).unwrap();
        let img = diffract_first_order(&Coherent(beam.clone()), &h, 0.2).unwrap();
        let ratio = img.total() * dq * dq / beam.power();
        // a phase singularity leaves slow 1/q tails outside the window
        let floor = if l == 0 { 0.999 } else { 0.97 };
        assert!(ratio > floor && ratio <= 1.0 + 1e-9, "l={l}: {ratio}");
    }
}

#[test]
fn plain_grating_first_order_is_the_shifted_spectrum() {
    let g = Grid2D::position(256, 10e-6).unwrap();
    let beam = lg_mode_at(0, 1, 300e-6, g, LAMBDA).unwrap();
    let h = fork_hologram(0, 80e-6, g).unwrap();
    let order = first_order_field(&beam, &h, 0.2).unwrap();
    let spec = beam.to_momentum().unwrap();
    let s = order.grid.n();
    let half = s as isize / 2;
    // window centered on the unshifted spectrum's center
    let mut err = 0.0;
    let mut norm = 0.0;
    for r in 0..s {
        for c in 0..s {
            let (sr, sc) = ((128 + r as isize - half) as usize, (128 + c as isize - half) as usize);
            let a = order.values[[r, c]];
            if a.norm() > 0.0 {
                err += (a - spec.values[[sr, sc]]).norm_sqr();
                norm += a.norm_sqr();
            }
        }
    }
    assert!((err / norm).sqrt() < 1e-9, "{}", (err / norm).sqrt());
}

#[test]
fn resampling_round_trip_keeps_the_image() {
    let g = Grid2D::position(256, 10e-6).unwrap();
    let src = superpose_at(&PumpSpec::petals(2, 0.4e-3).unwrap(), g, 405e-9).unwrap().intensity();
    let fwd = ImagingGeometry { magnification: -2.0, center: [1e-4, 0.0] };
    let out_grid = Grid2D::position(256, 20e-6).unwrap();
    let mid = resample(&src, &fwd, out_grid, [1e-4, 0.0]).unwrap();
    let back = ImagingGeometry { magnification: -0.5, center: [0.0, 0.0] };
    let shifted = IntensityMap::new(mid.grid, [0.0, 0.0], mid.values.clone()).unwrap();
    let round = resample(&shifted, &back, g, [0.0, 0.0]).unwrap();
    assert!(ncc(&src, &round).unwrap() >= 0.99);
}

#[test]
fn preset_train_magnifies_by_minus_two() {
    let (_, train) = preset_biphoton(16, &PumpSpec::gaussian(0.5e-3).unwrap());
    assert!((imaging_geometry(&train).unwrap().magnification + 2.0).abs() < 1e-12);
}

#[test]
fn four_petals_have_fourth_harmonic() {
    let g = Grid2D::position(256, 10e-6).unwrap();
    let img = superpose_at(&PumpSpec::petals(2, 0.4e-3).unwrap(), g, 405e-9).unwrap().intensity();
    assert_eq!(dominant_harmonic(&azimuthal_harmonics(&img, [0.0, 0.0]).unwrap()), 4);
    let six = superpose_at(&PumpSpec::petals(3, 0.4e-3).unwrap(), g, 405e-9).unwrap().intensity();
    assert_eq!(dominant_harmonic(&azimuthal_harmonics(&six, [0.0, 0.0]).unwrap()), 6);
}

#[test]
fn strict_runs_are_byte_identical() {
    use spdc_core::config::RunConfig;
    use spdc_core::experiment::{simulate, write_artifacts};
    let mut cfg = RunConfig::default();
    cfg.apply_overrides(&["grid.n=128", "pump.waist_um=300", "idler.samples=32", "strict=true", "output.formats=raw"])
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    write_artifacts(&a, &cfg, &simulate(&cfg).unwrap()).unwrap();
    write_artifacts(&b, &cfg, &simulate(&cfg).unwrap()).unwrap();
    for f in ["marginal.f64", "marginal.hdr", "pump_template.f64", "manifest.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn coherent_summation_changes_the_vortex_marginal() {
    let (bi, train) = preset_biphoton(16, &PumpSpec::vortex(3, 0.5e-3).unwrap());
    let comps = Propagated::new(&bi, &train);
    let inc = incoherent_sum(&comps).unwrap().normalized(spdc_core::Normalization::UnitSum);
    let coh = coherent_sum(&comps).unwrap().intensity().normalized(spdc_core::Normalization::UnitSum);
    let diff: f64 = (&inc.values - &coh.values).mapv(f64::abs).sum();
    assert!(diff > 0.1, "{diff}");
}
