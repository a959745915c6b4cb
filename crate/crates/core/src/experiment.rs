//! Experiment presets and artifact output.
//!
//! Each preset turns a [`RunConfig`] into a set of named images, tables and
//! notes; [`write_artifacts`] puts them on disk next to a manifest that
//! re-runs the preset when passed back as a config.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::analysis::{
    azimuthal_harmonics, bilinear, dominant_harmonic, focus_scan_with, imaged_pump_field, imaging_geometry, ncc,
    pump_template, resample, ImagingGeometry,
};
use crate::biphoton::{
    angular_spectrum_at, angular_spectrum_direct, build_biphoton, marginal_batch, marginal_image_raw, oam_spectrum,
    BiphotonAmplitude, BuildOptions, Coherent, OamSpectrum, Propagated, OAM_MAX,
};
use crate::config::{validate_config, Placement, RunConfig};
use crate::crystal::{annulus_bounds, collinear_phase_matching_angle, ring_radius, ring_scan_step, CrystalParams};
use crate::error::{Error, Result};
use crate::field::{Domain, Grid2D, IntensityMap, Normalization};
use crate::holography::{central_fraction, diffract_first_order, fork_hologram};
use crate::io::{write_csv, write_pgm, write_raw, Table};
use crate::modes::{superpose_at, PumpSpec};
use crate::propagation::{ApertureSpec, Element, OpticalTrain};

pub const PRESETS: [&str; 6] = ["ring", "close-aperture", "ring-positions", "pump-modes", "phase-flatten", "focus-scan"];

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub images: Vec<(String, IntensityMap)>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl Artifacts {
    fn image(&mut self, name: impl Into<String>, img: IntensityMap) {
        self.images.push((name.into(), img.normalized(Normalization::PeakOne)));
    }

    fn note(&mut self, s: impl Into<String>) {
        let s = s.into();
        log::info!("{s}");
        self.notes.push(s);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn image_named(&self, name: &str) -> Option<&IntensityMap> {
        self.images.iter().find(|(n, _)| n == name).map(|(_, i)| i)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn check(cfg: &RunConfig) -> Result<()> {
    let v = validate_config(cfg);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")))
    }
}

/// Everything a run derives from its config.
struct Prepared {
    pump: PumpSpec,
    crystal: CrystalParams,
    grid: Grid2D,
    train: OpticalTrain,
    bi: BiphotonAmplitude,
}

fn prepare_with(cfg: &RunConfig, pump: &PumpSpec) -> Result<Prepared> {
    let crystal = cfg.crystal()?;
    let grid = cfg.grid()?;
    let (train, carrier) = cfg.resolve_train()?;
    let opts = BuildOptions { carrier, keep_exit_phase: cfg.keep_exit_phase, strict: cfg.strict };
    let bi = build_biphoton(pump, &crystal, grid, &cfg.idler, &opts)?;
    Ok(Prepared { pump: pump.clone(), crystal, grid, train, bi })
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    prepare_with(cfg, &cfg.pump()?)
}

fn marginal(p: &Prepared, cfg: &RunConfig) -> Result<IntensityMap> {
    marginal_image_raw(&p.bi, &p.train, cfg.strict)
}

/// Grid-relative position of the pump image on `img`.
fn image_center(geometry: &ImagingGeometry, img: &IntensityMap) -> [f64; 2] {
    [geometry.center[0] - img.origin[0], geometry.center[1] - img.origin[1]]
}

fn value_at(img: &IntensityMap, rel: [f64; 2]) -> f64 {
    let p = img.grid.pitch();
    let mid = (img.grid.n() / 2) as f64;
    bilinear(&img.values, rel[1] / p + mid, rel[0] / p + mid)
}

pub fn run_preset(name: &str, cfg: &RunConfig) -> Result<Artifacts> {
    check(cfg)?;
    match name {
        "ring" => ring(cfg),
        "close-aperture" => close_aperture(cfg),
        "ring-positions" => ring_positions(cfg),
        "pump-modes" => pump_modes(cfg),
        "phase-flatten" => phase_flatten_preset(cfg),
        "focus-scan" => focus_scan(cfg),
        other => Err(Error::Config(format!("unknown preset {other:?}; known: {}", PRESETS.join(", ")))),
    }
}

/// Marginal image at the end of the configured train, with the magnified
/// pump template for comparison.
pub fn simulate(cfg: &RunConfig) -> Result<Artifacts> {
    check(cfg)?;
    let p = prepare(cfg)?;
    let img = marginal(&p, cfg)?;
    let mut out = Artifacts::default();
    out.note(format!("train: {}", p.train));
    out.note(format!("idler samples: {}", p.bi.len()));
    if p.train.first_aperture().is_some() {
        let t = pump_template(&p.pump, p.grid, &p.train, &img)?;
        out.note(format!("ncc vs pump template: {:.4}", ncc(&img, &t)?));
        out.image("pump_template", t);
    }
    out.note(format!("output pitch: {:.4e} m, origin: ({:.4e}, {:.4e}) m", img.grid.pitch(), img.origin[0], img.origin[1]));
    out.image("marginal", img);
    Ok(out)
}

/// Full-ring angular spectrum of the configured pump and crystal.
fn ring(cfg: &RunConfig) -> Result<Artifacts> {
    let crystal = cfg.crystal()?;
    let pm = crystal.phase_matcher()?;
    let q0 = ring_radius(&crystal, ring_scan_step(&pm))?;
    let (lo, hi) = annulus_bounds(&crystal, cfg.idler.threshold)?;
    let n = cfg.grid_n;
    let qgrid = Grid2D::new(n, 2.5 * hi / n as f64, Domain::Momentum)?;
    let pump = superpose_at(&cfg.pump()?, cfg.grid()?, crystal.pump_wavelength_m)?.to_momentum()?;
    let img = angular_spectrum_direct(&pump, &pm, qgrid, [0.0, 0.0], None)?;
    let k0 = 2.0 * PI / crystal.signal_wavelength_m;
    let mut out = Artifacts::default();
    out.note(format!(
        "collinear phase-matching angle: {:.4} deg (cut {:.4} deg)",
        collinear_phase_matching_angle(&crystal)?.to_degrees(),
        crystal.cut_angle_rad.to_degrees()
    ));
    out.note(format!("ring radius: {q0:.5e} rad/m ({:.2} mrad outside the crystal)", 1e3 * q0 / k0));
    out.note(format!("annulus at threshold {}: [{lo:.5e}, {hi:.5e}] rad/m", cfg.idler.threshold));

    let q = qgrid.pitch();
    let mid = n / 2;
    let mut radial = Table::new("ring_radial", &["q_rad_per_m", "intensity"]);
    let mut sums = vec![(0.0, 0usize); mid];
    for ((r, c), v) in img.values.indexed_iter() {
        let rr = ((r as f64 - mid as f64).hypot(c as f64 - mid as f64)).round() as usize;
        if rr < mid {
            sums[rr].0 += v;
            sums[rr].1 += 1;
        }
    }
    let peak = img.peak();
    for (i, (s, k)) in sums.iter().enumerate() {
        radial.push([num(i as f64 * q), num(if *k > 0 { s / *k as f64 / peak } else { 0.0 })]);
    }
    let mut azimuthal = Table::new("ring_azimuthal", &["azimuth_deg", "intensity"]);
    for a in 0..72 {
        let phi = 2.0 * PI * a as f64 / 72.0;
        let v = value_at(&img, [q0 * phi.cos(), q0 * phi.sin()]);
        azimuthal.push([num(a as f64 * 5.0), num(v / peak)]);
    }
    out.tables.push(radial);
    out.tables.push(azimuthal);
    out.image("angular_spectrum", img);
    Ok(out)
}

/// Direct angular spectrum seen through `train` on the grid of `img`: a
/// crystal-plane point source at angle `q / k` lands at `B q / k`.
fn ring_map(p: &Prepared, img: &IntensityMap) -> Result<IntensityMap> {
    let b = p.train.ray_matrix(0..p.train.elements.len()).b;
    if b == 0.0 {
        return Err(Error::Domain("output plane images the crystal; no far-field ring to compare".into()));
    }
    let k = 2.0 * PI / p.crystal.signal_wavelength_m;
    let (lo, hi) = annulus_bounds(&p.crystal, 0.05)?;
    let g = img.grid;
    let o = img.origin;
    let values = angular_spectrum_at(&p.bi.pump_spectrum(), p.bi.matcher(), g.n(), Some((lo, hi)), |r, c| {
        [k * (o[0] + g.coord(c)) / b, k * (o[1] + g.coord(r)) / b]
    })?;
    IntensityMap::new(g, o, values)
}

fn aperture_index(train: &OpticalTrain) -> Result<(usize, ApertureSpec)> {
    train.first_aperture().ok_or_else(|| Error::Config("train.elements: this preset needs an aperture".into()))
}

/// Marginals while the aperture closes from fully open to the configured
/// diameter.
fn close_aperture(cfg: &RunConfig) -> Result<Artifacts> {
    let p = prepare(cfg)?;
    let (idx, ap) = aperture_index(&p.train)?;
    let pitch = cfg.grid_pitch_m();
    let open = 2.0 * cfg.grid_n as f64 * pitch;
    let mut diameters = vec![open];
    diameters.extend([1e-3, 0.5e-3, 0.25e-3, 0.16e-3].into_iter().filter(|d| *d > ap.diameter_m));
    diameters.push(ap.diameter_m);
    let suffixes: Vec<Vec<Element>> = diameters
        .iter()
        .map(|&d| {
            let mut e = p.train.elements[idx..].to_vec();
            e[0] = Element::Aperture(ApertureSpec::new(d, ap.center)?);
            Ok(e)
        })
        .collect::<Result<_>>()?;
    let images = marginal_batch(&p.bi, &p.train.elements[..idx], &suffixes, cfg.strict)?;
    let mut out = Artifacts::default();
    let mut table = Table::new("close_aperture", &["diameter_um", "ncc_pump", "ncc_ring"]);
    let mut template = None;
    for (i, (img, &d)) in images.into_iter().zip(&diameters).enumerate() {
        let t = pump_template(&p.pump, p.grid, &p.train, &img)?;
        let ring = ring_map(&p, &img)?;
        let (a, b) = (ncc(&img, &t)?, ncc(&img, &ring)?);
        template = Some(t);
        out.note(format!("diameter {:.1} um: ncc pump {a:.4}, ncc ring {b:.4}", d * 1e6));
        table.push([num(d * 1e6), num(a), num(b)]);
        if i == 0 {
            out.image("ring_map", ring);
        }
        out.image(format!("aperture_{}_{:.1}um", (b'a' + i as u8) as char, d * 1e6), img);
    }
    if let Some(t) = template {
        out.image("pump_template", t);
    }
    out.tables.push(table);
    Ok(out)
}

/// Move `img` onto the same grid with its pump-image center at the middle.
fn centered(img: &IntensityMap, geometry: &ImagingGeometry) -> Result<IntensityMap> {
    let shift = ImagingGeometry { magnification: 1.0, center: [-geometry.center[0], -geometry.center[1]] };
    resample(img, &shift, img.grid, [0.0, 0.0])
}

pub const RING_POSITIONS: usize = 8;

/// The aperture visits eight azimuths on the emission ring.
fn ring_positions(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let mut images = Vec::new();
    let mut table = Table::new("ring_positions", &["azimuth_deg", "ncc_pump"]);
    for k in 0..RING_POSITIONS {
        let az = 360.0 * k as f64 / RING_POSITIONS as f64;
        let mut c = cfg.clone();
        c.place_aperture(Placement::Ring { azimuth_deg: az });
        let p = prepare(&c)?;
        let img = marginal(&p, &c)?;
        let geometry = imaging_geometry(&p.train)?;
        let t = pump_template(&p.pump, p.grid, &p.train, &img)?;
        table.push([num(az), num(ncc(&img, &t)?)]);
        let img = centered(&img, &geometry)?;
        out.image(format!("position_{k}_{az:.0}deg"), img.clone());
        images.push(img);
    }
    let mut header = vec!["position".to_string()];
    header.extend((0..RING_POSITIONS).map(|k| k.to_string()));
    let mut matrix = Table { name: "ring_positions_ncc".into(), header, rows: Vec::new() };
    let mut worst = f64::INFINITY;
    for i in 0..RING_POSITIONS {
        let mut row = vec![i.to_string()];
        for j in 0..RING_POSITIONS {
            let v = ncc(&images[i], &images[j])?;
            if i != j {
                worst = worst.min(v);
            }
            row.push(num(v));
        }
        matrix.rows.push(row);
    }
    out.note(format!("min pairwise ncc: {worst:.4}"));
    out.tables.push(table);
    out.tables.push(matrix);
    Ok(out)
}

/// Vortex pumps of orders 1-3 and their opposite-charge superpositions.
pub fn mode_pumps(waist_m: f64) -> Result<Vec<(String, PumpSpec)>> {
    let mut v = Vec::new();
    for l in 1..=3 {
        v.push((format!("lg{l}"), PumpSpec::vortex(l, waist_m)?));
    }
    for l in 1..=3u32 {
        v.push((format!("pm{l}"), PumpSpec::petals(l, waist_m)?));
    }
    Ok(v)
}

fn pump_modes(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let mut table =
        Table::new("pump_modes", &["pump", "center_over_peak", "dominant_harmonic", "ncc_pump", "m2_over_m0", "m4_over_m0", "m6_over_m0"]);
    for (name, pump) in mode_pumps(cfg.pump_waist_m())? {
        let p = prepare_with(cfg, &pump)?;
        let img = marginal(&p, cfg)?;
        let geometry = imaging_geometry(&p.train)?;
        let center = image_center(&geometry, &img);
        let h = azimuthal_harmonics(&img, center)?;
        let t = pump_template(&pump, p.grid, &p.train, &img)?;
        let cp = value_at(&img, center) / img.peak();
        let dom = dominant_harmonic(&h);
        let s = ncc(&img, &t)?;
        out.note(format!("{name}: center/peak {cp:.4}, dominant harmonic {dom}, ncc pump {s:.4}"));
        table.push([
            name.clone(),
            num(cp),
            dom.to_string(),
            num(s),
            num(h[2] / h[0]),
            num(h[4] / h[0]),
            num(h[6] / h[0]),
        ]);
        out.image(format!("mode_{name}"), img);
        out.image(format!("template_{name}"), t);
    }
    out.tables.push(table);
    Ok(out)
}

/// One phase-flattening measurement: readouts of `pump`'s marginal on each
/// fork order, as central fractions.
pub struct FlattenRun {
    pub pump: String,
    pub oam: OamSpectrum,
    /// `(fork order, central fraction, center / peak)`.
    pub readouts: Vec<(i32, f64, f64)>,
    pub images: Vec<(i32, IntensityMap)>,
}

fn flatten_run(cfg: &RunConfig, name: &str, pump: &PumpSpec, forks: &[i32]) -> Result<FlattenRun> {
    let p = prepare_with(cfg, pump)?;
    let comps = Propagated::new(&p.bi, &p.train);
    let probe = marginal(&p, cfg)?;
    let center = image_center(&imaging_geometry(&p.train)?, &probe);
    let oam = oam_spectrum(&comps, center)?;
    let period = cfg.hologram.period_px * probe.grid.pitch();
    let readout = cfg.hologram.readout_mm * 1e-3;
    let mut readouts = Vec::new();
    let mut images = Vec::new();
    for &l in forks {
        let h = fork_hologram(l, period, probe.grid)?;
        let img = diffract_first_order(&comps, &h, readout)?;
        readouts.push((l, central_fraction(&img), img.center_value() / img.peak()));
        images.push((l, img));
    }
    Ok(FlattenRun { pump: name.into(), oam, readouts, images })
}

/// Coherent control: the pump field imaged with the train's magnification,
/// read out on each fork.
fn coherent_control(cfg: &RunConfig, pump: &PumpSpec, forks: &[i32]) -> Result<Vec<(i32, f64, f64, IntensityMap)>> {
    let p = prepare_with(cfg, pump)?;
    let probe = marginal(&p, cfg)?;
    let geometry = imaging_geometry(&p.train)?;
    let field = imaged_pump_field(pump, &geometry, probe.grid, probe.origin, p.crystal.signal_wavelength_m)?;
    let period = cfg.hologram.period_px * probe.grid.pitch();
    forks
        .iter()
        .map(|&l| {
            let h = fork_hologram(l, period, probe.grid)?;
            let img = diffract_first_order(&Coherent(field.clone()), &h, cfg.hologram.readout_mm * 1e-3)?;
            Ok((l, central_fraction(&img), img.center_value() / img.peak(), img))
        })
        .collect()
}

fn oam_table(name: &str, oam: &OamSpectrum) -> Table {
    let mut t = Table::new(name, &["l", "fraction"]);
    for l in -OAM_MAX..=OAM_MAX {
        t.push([l.to_string(), num(oam.fraction(l))]);
    }
    t
}

fn flatten_artifacts(out: &mut Artifacts, runs: &[FlattenRun], control: f64) {
    let mut table = Table::new("phase_flatten", &["pump", "fork_order", "central_fraction", "ratio_to_control", "center_over_peak"]);
    for run in runs {
        out.note(format!("{}: mean OAM {:.4}", run.pump, run.oam.mean()));
        out.tables.push(oam_table(&format!("oam_{}", run.pump), &run.oam));
        for &(l, cf, cp) in &run.readouts {
            table.push([run.pump.clone(), l.to_string(), num(cf), num(cf / control), num(cp)]);
            out.note(format!("{} on fork {l}: central fraction {cf:.4e} ({:.3} of control), center/peak {cp:.3}", run.pump, cf / control));
        }
        for (l, img) in &run.images {
            out.image(format!("flatten_{}_fork{l}", run.pump), img.clone());
        }
    }
    out.tables.push(table);
}

/// The configured pump on forks `{0, l, -l}` (with `l = hologram.fork_order`),
/// a Gaussian control on the plain grating, and the coherent control.
pub fn phase_flatten(cfg: &RunConfig) -> Result<Artifacts> {
    check(cfg)?;
    let l = cfg.hologram.fork_order;
    let pump = cfg.pump()?;
    let gauss = PumpSpec::gaussian(cfg.pump_waist_m())?;
    let ctrl = flatten_run(cfg, "gaussian", &gauss, &[0])?;
    let runs = vec![flatten_run(cfg, "pump", &pump, &[0, l, -l])?];
    let mut out = Artifacts::default();
    let control = ctrl.readouts[0].1;
    out.note(format!("gaussian control central fraction: {control:.4e}"));
    flatten_artifacts(&mut out, &runs, control);
    coherent_artifacts(&mut out, cfg, "pump", &pump, &[l, -l], control)?;
    Ok(out)
}

fn coherent_artifacts(out: &mut Artifacts, cfg: &RunConfig, name: &str, pump: &PumpSpec, forks: &[i32], control: f64) -> Result<()> {
    let mut table = Table::new(&format!("coherent_{name}"), &["fork_order", "central_fraction", "ratio_to_control", "center_over_peak"]);
    for (l, cf, cp, img) in coherent_control(cfg, pump, forks)? {
        out.note(format!("coherent {name} on fork {l}: center/peak {cp:.3}, {:.3} of control", cf / control));
        table.push([l.to_string(), num(cf), num(cf / control), num(cp)]);
        out.image(format!("coherent_{name}_fork{l}"), img);
    }
    out.tables.push(table);
    Ok(())
}

/// Gaussian pump on forks `{0, +1, -1}` and an `l = 3` vortex on
/// `{0, +3, -3}`, with the Gaussian on the plain grating as control.
fn phase_flatten_preset(cfg: &RunConfig) -> Result<Artifacts> {
    let w = cfg.pump_waist_m();
    let gauss = PumpSpec::gaussian(w)?;
    let lg3 = PumpSpec::vortex(3, w)?;
    let runs = vec![flatten_run(cfg, "gaussian", &gauss, &[0, 1, -1])?, flatten_run(cfg, "lg3", &lg3, &[0, 3, -3])?];
    let control = runs[0].readouts[0].1;
    let mut out = Artifacts::default();
    out.note(format!("gaussian control central fraction: {control:.4e}"));
    flatten_artifacts(&mut out, &runs, control);
    coherent_artifacts(&mut out, cfg, "lg3", &lg3, &[3, -3], control)?;
    Ok(out)
}

/// Marginal versus aperture diameter and imaging distance.
pub fn focus_scan(cfg: &RunConfig) -> Result<Artifacts> {
    check(cfg)?;
    let p = prepare(cfg)?;
    let pump_intensity = superpose_at(&p.pump, p.grid, p.crystal.pump_wavelength_m)?.intensity();
    let diameters = cfg.scan_diameters_m();
    let z1s = cfg.scan_z1_m();
    let (results, images) = focus_scan_with(&p.bi, &pump_intensity, &p.train, &diameters, &z1s, cfg.strict)?;
    let mut out = Artifacts::default();
    let mut table = Table::new("focus_scan", &["diameter_um", "z1_mm", "ncc", "sharpness"]);
    let mut summary = Table::new("focus_summary", &["diameter_um", "best_z1_mm", "depth_of_focus_mm"]);
    let focal = p
        .train
        .elements
        .iter()
        .find_map(|e| match e {
            Element::Lens { focal_m } => Some(*focal_m),
            _ => None,
        })
        .unwrap_or(z1s[0]);
    let nz = z1s.len();
    for (i, r) in results.iter().enumerate() {
        let d_um = r.aperture_diameter_m * 1e6;
        for ((z, m), s) in r.metric_curve.iter().zip(&r.sharpness) {
            table.push([num(d_um), num(z * 1e3), num(*m), num(*s)]);
        }
        summary.push([num(d_um), num(r.best_z1 * 1e3), num(r.depth_of_focus * 1e3)]);
        out.note(format!(
            "diameter {d_um:.1} um: best z1 {:.1} mm, depth of focus {:.1} mm",
            r.best_z1 * 1e3,
            r.depth_of_focus * 1e3
        ));
        let nearest = |target: f64| {
            (0..nz).min_by(|&a, &b| (z1s[a] - target).abs().total_cmp(&(z1s[b] - target).abs())).unwrap_or(0)
        };
        let mut panels = vec![nearest(focal), nearest(r.best_z1)];
        panels.dedup();
        for j in panels {
            out.image(format!("scan_{d_um:.1}um_z{:.1}mm", z1s[j] * 1e3), images[i * nz + j].clone());
        }
    }
    out.tables.push(table);
    out.tables.push(summary);
    Ok(out)
}

/// Write images (per `cfg.formats`), tables, notes and the manifest into
/// `dir`.
pub fn write_artifacts(dir: &Path, cfg: &RunConfig, art: &Artifacts) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("output.dir: cannot create {}: {e}", dir.display())))?;
    for (name, img) in &art.images {
        for f in &cfg.formats {
            match f.as_str() {
                "raw" => write_raw(&dir.join(name), img)?,
                "pgm" => write_pgm(&dir.join(format!("{name}.pgm")), img)?,
                other => return Err(Error::Config(format!("output.formats: unknown format {other:?}"))),
            }
        }
    }
    for t in &art.tables {
        write_csv(&dir.join(format!("{}.csv", t.name)), t)?;
    }
    let mut summary = art.notes.join("\n");
    summary.push('\n');
    fs::write(dir.join("summary.txt"), summary)?;
    fs::write(dir.join("manifest.txt"), manifest(cfg))?;
    Ok(())
}

pub fn manifest(cfg: &RunConfig) -> String {
    format!("# spdc {VERSION}\n{}", cfg.to_text())
}
