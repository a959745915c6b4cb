//! Browser demo: pump patterns, the emission ring and a small marginal
//! preview, computed in the page.
//!
//! Every function returns a row-major, peak-normalized `n x n` image.

use spdc_core::analysis::{ncc, pump_template};
use spdc_core::biphoton::{angular_spectrum_direct, build_biphoton, marginal_image, BuildOptions};
use spdc_core::config::RunConfig;
use spdc_core::crystal::annulus_bounds;
use spdc_core::field::Domain;
use spdc_core::modes::superpose_at;
use spdc_core::{Grid2D, Normalization};
use wasm_bindgen::prelude::*;

pub const PREVIEW_N: usize = 128;
pub const PREVIEW_PITCH_UM: f64 = 10.0;
pub const PREVIEW_SAMPLES: usize = 32;

#[derive(Debug)]
pub struct DemoError(String);

impl std::fmt::Display for DemoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<spdc_core::Error> for DemoError {
    fn from(e: spdc_core::Error) -> Self {
        DemoError(e.to_string())
    }
}

impl From<DemoError> for JsValue {
    fn from(e: DemoError) -> Self {
        JsValue::from_str(&e.0)
    }
}

type Result<T> = std::result::Result<T, DemoError>;

fn preview_config(terms: &str, waist_um: f64) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    cfg.set("pump.terms", terms)?;
    cfg.pump_waist_um = waist_um;
    cfg.grid_n = PREVIEW_N;
    cfg.grid_pitch_um = PREVIEW_PITCH_UM;
    cfg.idler.samples_per_axis = PREVIEW_SAMPLES;
    Ok(cfg)
}

fn check(cfg: &RunConfig) -> Result<()> {
    let v = spdc_core::config::validate_config(cfg);
    if v.is_empty() {
        Ok(())
    } else {
        Err(DemoError(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n")))
    }
}

/// Pump intensity at the crystal. `terms` uses the config syntax
/// `p,l,re[,im]; ...`.
pub fn pump_image(terms: &str, waist_um: f64) -> Result<Vec<f64>> {
    let cfg = preview_config(terms, waist_um)?;
    check(&cfg)?;
    let c = cfg.crystal()?;
    let img = superpose_at(&cfg.pump()?, cfg.grid()?, c.pump_wavelength_m)?.intensity();
    Ok(img.normalized(Normalization::PeakOne).values.into_raw_vec_and_offset().0)
}

/// Angular spectrum of a Gaussian pump over the full ring.
pub fn ring_image(cut_angle_deg: f64, length_mm: f64) -> Result<Vec<f64>> {
    let mut cfg = preview_config("0,0,1", 300.0)?;
    cfg.crystal.cut_angle_deg = cut_angle_deg;
    cfg.crystal.length_mm = length_mm;
    check(&cfg)?;
    let c = cfg.crystal()?;
    let (_, hi) = annulus_bounds(&c, cfg.idler.threshold)?;
    let qgrid = Grid2D::new(PREVIEW_N, 2.5 * hi / PREVIEW_N as f64, Domain::Momentum)?;
    let pump = superpose_at(&cfg.pump()?, cfg.grid()?, c.pump_wavelength_m)?.to_momentum()?;
    let img = angular_spectrum_direct(&pump, &c.phase_matcher()?, qgrid, [0.0, 0.0], None)?;
    Ok(img.normalized(Normalization::PeakOne).values.into_raw_vec_and_offset().0)
}

/// Marginal through the default Fourier-imaging train with the aperture on
/// the ring, and its NCC against the magnified pump.
pub fn marginal(terms: &str, waist_um: f64, aperture_um: f64, azimuth_deg: f64, z1_mm: f64) -> Result<(Vec<f64>, f64)> {
    let mut cfg = preview_config(terms, waist_um)?;
    cfg.set(
        "train.elements",
        &format!("free(50mm); aperture({aperture_um}um, ring={azimuth_deg}deg); free(100mm); lens(100mm); free({z1_mm}mm)"),
    )?;
    check(&cfg)?;
    let c = cfg.crystal()?;
    let (train, carrier) = cfg.resolve_train()?;
    let opts = BuildOptions { carrier, ..Default::default() };
    let pump = cfg.pump()?;
    let bi = build_biphoton(&pump, &c, cfg.grid()?, &cfg.idler, &opts)?;
    let img = marginal_image(&bi, &train)?;
    let t = pump_template(&pump, cfg.grid()?, &train, &img)?;
    let score = ncc(&img, &t).unwrap_or(f64::NAN);
    Ok((img.values.into_raw_vec_and_offset().0, score))
}

#[wasm_bindgen]
pub struct Preview {
    values: Vec<f64>,
    ncc: f64,
}

#[wasm_bindgen]
impl Preview {
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn ncc(&self) -> f64 {
        self.ncc
    }
}

#[wasm_bindgen]
pub fn size() -> usize {
    PREVIEW_N
}

#[wasm_bindgen(js_name = pumpIntensity)]
pub fn pump_intensity_js(terms: &str, waist_um: f64) -> std::result::Result<Vec<f64>, JsValue> {
    Ok(pump_image(terms, waist_um)?)
}

#[wasm_bindgen(js_name = emissionRing)]
pub fn emission_ring_js(cut_angle_deg: f64, length_mm: f64) -> std::result::Result<Vec<f64>, JsValue> {
    Ok(ring_image(cut_angle_deg, length_mm)?)
}

#[wasm_bindgen(js_name = marginalPreview)]
pub fn marginal_preview_js(
    terms: &str,
    waist_um: f64,
    aperture_um: f64,
    azimuth_deg: f64,
    z1_mm: f64,
) -> std::result::Result<Preview, JsValue> {
    let (values, ncc) = marginal(terms, waist_um, aperture_um, azimuth_deg, z1_mm)?;
    Ok(Preview { values, ncc })
}
