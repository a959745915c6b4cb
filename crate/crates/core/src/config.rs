//! Run configuration as flat `section.key = value` text.
//!
//! ```text
//! pump.terms = 0,1,1,0; 0,-1,-1,0     # p, l, re, im per term
//! pump.waist_um = 500
//! train.elements = free(50mm); aperture(102.3um, ring=0deg); free(100mm); lens(100mm); free(100mm)
//! ```
//!
//! Every key has a default; [`RunConfig::to_text`] writes all of them, so a
//! written config is a complete, re-runnable manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::biphoton::{ring_carrier, IdlerSampling};
use crate::crystal::{CrystalParams, IndexModel};
use crate::error::{Error, Result};
use crate::field::Grid2D;
use crate::modes::{LgTerm, PumpSpec};
use crate::propagation::{ApertureSpec, Element, OpticalTrain};

/// A length kept in the unit it was written in, so configs round-trip
/// exactly through text.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Length {
    pub value: f64,
    pub unit: Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    M,
    Cm,
    Mm,
    Um,
    Nm,
}

impl Unit {
    fn scale(self) -> f64 {
        match self {
            Unit::M => 1.0,
            Unit::Cm => 1e-2,
            Unit::Mm => 1e-3,
            Unit::Um => 1e-6,
            Unit::Nm => 1e-9,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Unit::M => "m",
            Unit::Cm => "cm",
            Unit::Mm => "mm",
            Unit::Um => "um",
            Unit::Nm => "nm",
        }
    }
}

impl Length {
    pub fn mm(value: f64) -> Self {
        Length { value, unit: Unit::Mm }
    }

    pub fn um(value: f64) -> Self {
        Length { value, unit: Unit::Um }
    }

    pub fn meters(&self) -> f64 {
        if self.value.is_infinite() {
            self.value
        } else {
            self.value * self.unit.scale()
        }
    }
}

impl std::fmt::Display for Length {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.value.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}{}", self.value, self.unit.suffix())
        }
    }
}

/// Where an aperture sits: on the emission ring at an azimuth, or at an
/// explicit transverse point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Placement {
    Ring { azimuth_deg: f64 },
    At { x: Length, y: Length },
}

/// Train element as written in a config, before the ring is resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementSpec {
    Free(Length),
    Lens(Length),
    Aperture { diameter: Length, placement: Placement },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub diameters_um: Vec<f64>,
    pub z1_mm: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HologramConfig {
    pub fork_order: i32,
    pub period_px: f64,
    pub readout_mm: f64,
}

/// Crystal parameters in config units.
#[derive(Clone, Debug, PartialEq)]
pub struct CrystalConfig {
    pub length_mm: f64,
    pub cut_angle_deg: f64,
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub index_model: String,
}

impl Default for CrystalConfig {
    fn default() -> Self {
        CrystalConfig {
            length_mm: 5.0,
            cut_angle_deg: 29.97,
            pump_nm: 405.0,
            signal_nm: 810.0,
            idler_nm: 810.0,
            index_model: "bbo".into(),
        }
    }
}

impl CrystalConfig {
    pub fn params(&self) -> Result<CrystalParams> {
        let index_model = IndexModel::by_name(&self.index_model).ok_or_else(|| {
            cfg_err("crystal.index_model", format!("unknown index model {:?}; known: bbo", self.index_model))
        })?;
        Ok(CrystalParams {
            length_m: self.length_mm * 1e-3,
            cut_angle_rad: self.cut_angle_deg.to_radians(),
            pump_wavelength_m: self.pump_nm * 1e-9,
            signal_wavelength_m: self.signal_nm * 1e-9,
            idler_wavelength_m: self.idler_nm * 1e-9,
            index_model,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pump_terms: Vec<LgTerm>,
    pub pump_waist_um: f64,
    pub crystal: CrystalConfig,
    pub grid_n: usize,
    pub grid_pitch_um: f64,
    pub idler: IdlerSampling,
    pub train: Vec<ElementSpec>,
    pub keep_exit_phase: bool,
    pub hologram: HologramConfig,
    pub scan: ScanConfig,
    pub output_dir: PathBuf,
    pub formats: Vec<String>,
    /// Reserved; the pipeline is deterministic.
    pub seed: u64,
    pub strict: bool,
    /// Preset that produced a manifest, if any.
    pub preset: Option<String>,
}

pub const PAPER_DIAMETERS_UM: [f64; 4] = [102.3, 132.5, 174.4, 246.4];

impl Default for RunConfig {
    fn default() -> Self {
        let petals = PumpSpec::petals(1, 0.5e-3).expect("valid default pump");
        RunConfig {
            pump_terms: petals.terms().to_vec(),
            pump_waist_um: 500.0,
            crystal: CrystalConfig::default(),
            grid_n: 256,
            grid_pitch_um: 10.0,
            idler: IdlerSampling::default(),
            train: vec![
                ElementSpec::Free(Length::mm(50.0)),
                ElementSpec::Aperture {
                    diameter: Length::um(102.3),
                    placement: Placement::Ring { azimuth_deg: 0.0 },
                },
                ElementSpec::Free(Length::mm(100.0)),
                ElementSpec::Lens(Length::mm(100.0)),
                ElementSpec::Free(Length::mm(100.0)),
            ],
            keep_exit_phase: true,
            hologram: HologramConfig { fork_order: -3, period_px: 8.0, readout_mm: 200.0 },
            scan: ScanConfig {
                diameters_um: PAPER_DIAMETERS_UM.to_vec(),
                z1_mm: (0..=28).map(|i| 60.0 + 5.0 * i as f64).collect(),
            },
            output_dir: PathBuf::from("out"),
            formats: vec!["raw".into(), "pgm".into()],
            seed: 0,
            strict: false,
            preset: None,
        }
    }
}

/// A config problem, keyed by the offending config key.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub key: String,
    pub kind: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} [{}]: {}", self.key, self.kind, self.message)
    }
}

fn violation(key: &str, kind: &str, message: impl Into<String>) -> Violation {
    Violation { key: key.into(), kind: kind.into(), message: message.into() }
}

fn cfg_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| cfg_err(key, format!("expected a number, got {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(cfg_err(key, format!("expected true or false, got {other:?}"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(key, s)).collect()
}

/// `start:stop:step` (inclusive) or a comma list.
fn parse_range(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.contains(':') {
        let parts: Vec<f64> = v.split(':').map(|s| parse_f64(key, s)).collect::<Result<_>>()?;
        if parts.len() != 3 || parts[2] <= 0.0 || parts[1] < parts[0] {
            return Err(cfg_err(key, "range must be start:stop:step with step > 0"));
        }
        let count = ((parts[1] - parts[0]) / parts[2] + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| parts[0] + parts[2] * i as f64).collect());
    }
    parse_list(key, v)
}

fn parse_terms(key: &str, v: &str) -> Result<Vec<LgTerm>> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|t| {
            let f: Vec<&str> = t.split(',').map(str::trim).collect();
            if f.len() < 3 || f.len() > 4 {
                return Err(cfg_err(key, format!("term {t:?} must be p,l,re[,im]")));
            }
            let p = f[0].parse::<u32>().map_err(|_| cfg_err(key, format!("bad radial index {:?}", f[0])))?;
            let l = f[1].parse::<i32>().map_err(|_| cfg_err(key, format!("bad azimuthal index {:?}", f[1])))?;
            let re = parse_f64(key, f[2])?;
            let im = if f.len() == 4 { parse_f64(key, f[3])? } else { 0.0 };
            Ok(LgTerm::new(p, l, Complex64::new(re, im)))
        })
        .collect()
}

/// Length with a unit suffix: `m`, `cm`, `mm`, `um`, `nm`, or `inf`.
fn parse_length(key: &str, v: &str) -> Result<Length> {
    let v = v.trim();
    if v == "inf" {
        return Ok(Length { value: f64::INFINITY, unit: Unit::M });
    }
    for unit in [Unit::Mm, Unit::Cm, Unit::Um, Unit::Nm, Unit::M] {
        if let Some(num) = v.strip_suffix(unit.suffix()) {
            return Ok(Length { value: parse_f64(key, num)?, unit });
        }
    }
    Err(cfg_err(key, format!("length {v:?} needs a unit (m, cm, mm, um, nm)")))
}

fn parse_angle(key: &str, v: &str) -> Result<f64> {
    let v = v.trim();
    match v.strip_suffix("deg") {
        Some(num) => parse_f64(key, num),
        None => Ok(parse_f64(key, v.strip_suffix("rad").unwrap_or(v))?.to_degrees()),
    }
}

fn parse_elements(key: &str, v: &str) -> Result<Vec<ElementSpec>> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|e| {
            let e = e.trim();
            let open = e.find('(').ok_or_else(|| cfg_err(key, format!("element {e:?} lacks arguments")))?;
            let name = &e[..open];
            let args = e[open + 1..].strip_suffix(')').ok_or_else(|| cfg_err(key, format!("unclosed {e:?}")))?;
            let args: Vec<&str> = args.split(',').map(str::trim).collect();
            match name {
                "free" => Ok(ElementSpec::Free(parse_length(key, args[0])?)),
                "lens" => Ok(ElementSpec::Lens(parse_length(key, args[0])?)),
                "aperture" => {
                    let diameter = parse_length(key, args[0])?;
                    let mut placement = Placement::Ring { azimuth_deg: 0.0 };
                    let (mut x, mut y) = (None, None);
                    for a in &args[1..] {
                        let (k, val) = a.split_once('=').ok_or_else(|| cfg_err(key, format!("bad aperture option {a:?}")))?;
                        match k.trim() {
                            "ring" => placement = Placement::Ring { azimuth_deg: parse_angle(key, val)? },
                            "x" => x = Some(parse_length(key, val)?),
                            "y" => y = Some(parse_length(key, val)?),
                            other => return Err(cfg_err(key, format!("unknown aperture option {other:?}"))),
                        }
                    }
                    if x.is_some() || y.is_some() {
                        let zero = Length::mm(0.0);
                        placement = Placement::At { x: x.unwrap_or(zero), y: y.unwrap_or(zero) };
                    }
                    Ok(ElementSpec::Aperture { diameter, placement })
                }
                other => Err(cfg_err(key, format!("unknown element {other:?}; use free, lens or aperture"))),
            }
        })
        .collect()
}

impl ElementSpec {
    fn to_text(&self) -> String {
        match *self {
            ElementSpec::Free(z) => format!("free({z})"),
            ElementSpec::Lens(f) => format!("lens({f})"),
            ElementSpec::Aperture { diameter, placement } => match placement {
                Placement::Ring { azimuth_deg } => format!("aperture({diameter}, ring={azimuth_deg}deg)"),
                Placement::At { x, y } => format!("aperture({diameter}, x={x}, y={y})"),
            },
        }
    }
}

pub const KEYS: &[&str] = &[
    "pump.terms",
    "pump.waist_um",
    "crystal.length_mm",
    "crystal.cut_angle_deg",
    "crystal.pump_nm",
    "crystal.signal_nm",
    "crystal.idler_nm",
    "crystal.index_model",
    "grid.n",
    "grid.pitch_um",
    "idler.samples",
    "idler.threshold",
    "train.elements",
    "biphoton.keep_exit_phase",
    "hologram.fork_order",
    "hologram.period_px",
    "hologram.readout_mm",
    "scan.diameters_um",
    "scan.z1_mm",
    "output.dir",
    "output.formats",
    "seed",
    "strict",
    "run.preset",
];

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "pump.terms" => self.pump_terms = parse_terms(key, v)?,
            "pump.waist_um" => self.pump_waist_um = parse_f64(key, v)?,
            "crystal.length_mm" => self.crystal.length_mm = parse_f64(key, v)?,
            "crystal.cut_angle_deg" => self.crystal.cut_angle_deg = parse_f64(key, v)?,
            "crystal.pump_nm" => self.crystal.pump_nm = parse_f64(key, v)?,
            "crystal.signal_nm" => self.crystal.signal_nm = parse_f64(key, v)?,
            "crystal.idler_nm" => self.crystal.idler_nm = parse_f64(key, v)?,
            "crystal.index_model" => {
                IndexModel::by_name(v).ok_or_else(|| cfg_err(key, format!("unknown index model {v:?}; known: bbo")))?;
                self.crystal.index_model = v.to_string();
            }
            "grid.n" => self.grid_n = v.parse().map_err(|_| cfg_err(key, format!("expected an integer, got {v:?}")))?,
            "grid.pitch_um" => self.grid_pitch_um = parse_f64(key, v)?,
            "idler.samples" => {
                self.idler.samples_per_axis =
                    v.parse().map_err(|_| cfg_err(key, format!("expected an integer, got {v:?}")))?
            }
            "idler.threshold" => self.idler.threshold = parse_f64(key, v)?,
            "train.elements" => self.train = parse_elements(key, v)?,
            "biphoton.keep_exit_phase" => self.keep_exit_phase = parse_bool(key, v)?,
            "hologram.fork_order" => {
                self.hologram.fork_order = v.parse().map_err(|_| cfg_err(key, format!("expected an integer, got {v:?}")))?
            }
            "hologram.period_px" => self.hologram.period_px = parse_f64(key, v)?,
            "hologram.readout_mm" => self.hologram.readout_mm = parse_f64(key, v)?,
            "scan.diameters_um" => self.scan.diameters_um = parse_list(key, v)?,
            "scan.z1_mm" => self.scan.z1_mm = parse_range(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "output.formats" => self.formats = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            "seed" => self.seed = v.parse().map_err(|_| cfg_err(key, format!("expected an integer, got {v:?}")))?,
            "strict" => self.strict = parse_bool(key, v)?,
            "run.preset" => self.preset = Some(v.to_string()),
            other => return Err(cfg_err(other, format!("unknown key; known keys: {}", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Parse config text over the defaults. Blank lines and `#` comments
    /// are ignored.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override {o:?} must be key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        let terms: Vec<String> =
            self.pump_terms.iter().map(|t| format!("{},{},{},{}", t.p, t.l, t.coeff.re, t.coeff.im)).collect();
        kv.insert("pump.terms", terms.join("; "));
        kv.insert("pump.waist_um", format!("{}", self.pump_waist_um));
        let c = &self.crystal;
        kv.insert("crystal.length_mm", format!("{}", c.length_mm));
        kv.insert("crystal.cut_angle_deg", format!("{}", c.cut_angle_deg));
        kv.insert("crystal.pump_nm", format!("{}", c.pump_nm));
        kv.insert("crystal.signal_nm", format!("{}", c.signal_nm));
        kv.insert("crystal.idler_nm", format!("{}", c.idler_nm));
        kv.insert("crystal.index_model", c.index_model.clone());
        kv.insert("grid.n", self.grid_n.to_string());
        kv.insert("grid.pitch_um", format!("{}", self.grid_pitch_um));
        kv.insert("idler.samples", self.idler.samples_per_axis.to_string());
        kv.insert("idler.threshold", format!("{}", self.idler.threshold));
        kv.insert("train.elements", self.train.iter().map(|e| e.to_text()).collect::<Vec<_>>().join("; "));
        kv.insert("biphoton.keep_exit_phase", self.keep_exit_phase.to_string());
        kv.insert("hologram.fork_order", self.hologram.fork_order.to_string());
        kv.insert("hologram.period_px", format!("{}", self.hologram.period_px));
        kv.insert("hologram.readout_mm", format!("{}", self.hologram.readout_mm));
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        kv.insert("scan.diameters_um", list(&self.scan.diameters_um));
        kv.insert("scan.z1_mm", list(&self.scan.z1_mm));
        kv.insert("output.dir", self.output_dir.display().to_string());
        kv.insert("output.formats", self.formats.join(","));
        kv.insert("seed", self.seed.to_string());
        kv.insert("strict", self.strict.to_string());
        if let Some(p) = &self.preset {
            kv.insert("run.preset", p.clone());
        }
        let mut out = String::new();
        for k in KEYS {
            if let Some(v) = kv.get(k) {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    pub fn pump_waist_m(&self) -> f64 {
        self.pump_waist_um * 1e-6
    }

    pub fn pump(&self) -> Result<PumpSpec> {
        PumpSpec::new(self.pump_terms.clone(), self.pump_waist_m())
    }

    pub fn crystal(&self) -> Result<CrystalParams> {
        self.crystal.params()
    }

    pub fn grid_pitch_m(&self) -> f64 {
        self.grid_pitch_um * 1e-6
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::position(self.grid_n, self.grid_pitch_m())
    }

    pub fn scan_diameters_m(&self) -> Vec<f64> {
        self.scan.diameters_um.iter().map(|d| d * 1e-6).collect()
    }

    pub fn scan_z1_m(&self) -> Vec<f64> {
        self.scan.z1_mm.iter().map(|z| z * 1e-3).collect()
    }

    fn first_aperture(&self) -> Option<(usize, f64, Placement)> {
        self.train.iter().enumerate().find_map(|(i, e)| match e {
            ElementSpec::Aperture { diameter, placement } => Some((i, diameter.meters(), *placement)),
            _ => None,
        })
    }

    /// Point the first aperture at `placement`.
    pub fn place_aperture(&mut self, placement: Placement) {
        for e in self.train.iter_mut() {
            if let ElementSpec::Aperture { placement: p, .. } = e {
                *p = placement;
                return;
            }
        }
    }

    fn raw_elements(&self) -> Vec<Element> {
        self.train
            .iter()
            .map(|e| match *e {
                ElementSpec::Free(z) => Element::FreeSpace { distance_m: z.meters() },
                ElementSpec::Lens(f) => Element::Lens { focal_m: f.meters() },
                ElementSpec::Aperture { diameter, .. } => {
                    Element::Aperture(ApertureSpec { diameter_m: diameter.meters(), center: [0.0, 0.0] })
                }
            })
            .collect()
    }

    /// Resolve ring placements into a concrete train and the signal carrier
    /// that points the grid at the first aperture.
    pub fn resolve_train(&self) -> Result<(OpticalTrain, [f64; 2])> {
        let mut elements = self.raw_elements();
        let mut carrier = [0.0, 0.0];
        if let Some((idx, _, _)) = self.first_aperture() {
            let pre = OpticalTrain { elements: elements.clone() }.ray_matrix(0..idx);
            if pre.b == 0.0 {
                return Err(Error::Config("train.elements: first aperture needs free space before it".into()));
            }
            let crystal = self.crystal()?;
            let k0 = 2.0 * std::f64::consts::PI / crystal.signal_wavelength_m;
            for (i, e) in self.train.iter().enumerate() {
                if let ElementSpec::Aperture { diameter, placement } = *e {
                    let diameter_m = diameter.meters();
                    let m = OpticalTrain { elements: elements.clone() }.ray_matrix(0..i);
                    let center = match placement {
                        Placement::At { x, y } => [x.meters(), y.meters()],
                        Placement::Ring { azimuth_deg } => {
                            let (c, _) = ring_carrier(&crystal, 1.0, azimuth_deg.to_radians())?;
                            // ray leaving the crystal axis point at the ring angle
                            [m.b * c[0] / k0, m.b * c[1] / k0]
                        }
                    };
                    if i == idx {
                        carrier = [k0 * center[0] / pre.b, k0 * center[1] / pre.b];
                    }
                    elements[i] = Element::Aperture(ApertureSpec::new(diameter_m, center)?);
                }
            }
        }
        Ok((OpticalTrain::new(elements)?, carrier))
    }

    /// Sample pitch at the plane of the first aperture.
    fn aperture_plane_pitch(&self) -> Option<f64> {
        let (idx, _, _) = self.first_aperture()?;
        let elements = self.raw_elements();
        let has_lens = elements[..idx].iter().any(|e| matches!(e, Element::Lens { .. }));
        if !has_lens {
            return Some(self.grid_pitch_m());
        }
        let m = OpticalTrain { elements }.ray_matrix(0..idx);
        (m.b != 0.0).then(|| self.crystal.signal_nm * 1e-9 * m.b.abs() / (self.grid_n as f64 * self.grid_pitch_m()))
    }
}

/// Every violated invariant of `cfg`; empty means runnable.
pub fn validate_config(cfg: &RunConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    if cfg.pump_terms.is_empty() {
        out.push(violation("pump.terms", "degenerate-spec", "pump has no terms"));
    } else if cfg.pump_terms.iter().all(|t| t.coeff.norm() == 0.0) {
        out.push(violation("pump.terms", "degenerate-spec", "all pump coefficients are zero"));
    }
    let waist = cfg.pump_waist_m();
    if !(waist.is_finite() && waist > 0.0) {
        out.push(violation("pump.waist_um", "domain", format!("waist must be positive, got {} um", cfg.pump_waist_um)));
    }
    match cfg.crystal() {
        Ok(c) => {
            for (key, msg) in c.violations() {
                out.push(violation(&key, "domain", msg));
            }
        }
        Err(e) => out.push(violation("crystal.index_model", e.kind(), e.to_string())),
    }
    match cfg.grid() {
        Err(e) => out.push(violation(
            if cfg.grid_n < 16 || !cfg.grid_n.is_power_of_two() { "grid.n" } else { "grid.pitch_um" },
            e.kind(),
            e.to_string(),
        )),
        Ok(g) if waist > 0.0 => {
            if waist < 4.0 * g.pitch() || waist > g.window() / 4.0 {
                out.push(violation(
                    "pump.waist_um",
                    "grid-resolution",
                    format!(
                        "waist must lie between 4 pitches ({:.1} um) and a quarter window ({:.1} um)",
                        4.0 * g.pitch() * 1e6,
                        g.window() * 0.25e6
                    ),
                ));
            }
            if let Err(e) = cfg.idler.stride(g.n()) {
                out.push(violation("idler.samples", e.kind(), e.to_string()));
            }
            let period = cfg.hologram.period_px;
            if !(period >= 4.0) {
                out.push(violation("hologram.period_px", "grating-resolution", "grating period must be at least 4 pixels"));
            }
        }
        Ok(_) => {}
    }
    if !(cfg.idler.threshold > 0.0 && cfg.idler.threshold < 1.0) {
        out.push(violation("idler.threshold", "domain", "threshold must lie in (0, 1)"));
    }
    if cfg.train.is_empty() {
        out.push(violation("train.elements", "domain", "optical train is empty"));
    }
    for e in &cfg.train {
        match *e {
            ElementSpec::Free(z) if !z.meters().is_finite() => {
                out.push(violation("train.elements", "domain", "free-space distance must be finite"))
            }
            ElementSpec::Lens(f) if f.value == 0.0 || f.value.is_nan() => {
                out.push(violation("train.elements", "domain", "lens focal length must be nonzero"))
            }
            ElementSpec::Aperture { diameter, .. } if !(diameter.value > 0.0) => {
                out.push(violation("train.elements", "domain", "aperture diameter must be positive"))
            }
            _ => {}
        }
    }
    if let (Some((_, d, _)), Some(p)) = (cfg.first_aperture(), cfg.aperture_plane_pitch()) {
        if d > 0.0 && d < 2.0 * p {
            out.push(violation(
                "train.elements",
                "aperture-resolution",
                format!("aperture {:.1} um spans fewer than 2 samples of {:.1} um", d * 1e6, p * 1e6),
            ));
        }
    }
    if cfg.scan.diameters_um.iter().any(|d| !(*d > 0.0)) {
        out.push(violation("scan.diameters_um", "domain", "scan diameters must be positive"));
    }
    if cfg.scan.z1_mm.is_empty() {
        out.push(violation("scan.z1_mm", "domain", "scan needs at least one z1 sample"));
    }
    if !(cfg.hologram.readout_mm > 0.0) {
        out.push(violation("hologram.readout_mm", "domain", "readout distance must be positive"));
    }
    for f in &cfg.formats {
        if f != "raw" && f != "pgm" {
            out.push(violation("output.formats", "domain", format!("unknown format {f:?}; use raw, pgm")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        assert!(validate_config(&cfg).is_empty(), "{:?}", validate_config(&cfg));
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back.to_text(), cfg.to_text());
    }

    #[test]
    fn zero_waist_names_the_field() {
        let mut cfg = RunConfig::default();
        cfg.set("pump.waist_um", "0").unwrap();
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].key, "pump.waist_um");
    }

    #[test]
    fn one_pixel_aperture() {
        let mut cfg = RunConfig::default();
        cfg.set("train.elements", "free(50mm); aperture(10um, ring=0deg); free(100mm); lens(100mm); free(100mm)")
            .unwrap();
        let v = validate_config(&cfg);
        assert!(v.iter().any(|x| x.kind == "aperture-resolution"), "{v:?}");
    }

    #[test]
    fn parse_errors_are_actionable() {
        let e = RunConfig::parse("grid.nn = 3").unwrap_err();
        assert!(e.to_string().contains("unknown key"));
        assert!(RunConfig::parse("train.elements = warp(3mm)").is_err());
        assert!(RunConfig::parse("pump.waist_um").is_err());
    }

    #[test]
    fn ring_placement_resolves_on_the_ring() {
        let (train, carrier) = RunConfig::default().resolve_train().unwrap();
        let (_, ap) = train.first_aperture().unwrap();
        let k0 = 2.0 * std::f64::consts::PI / 810e-9;
        assert!((ap.center[0] - 0.05 * carrier[0] / k0).abs() < 1e-12);
        assert!(ap.center[1].abs() < 1e-15);
        assert!(ap.center[0] > 4e-3 && ap.center[0] < 5e-3);
    }
}
