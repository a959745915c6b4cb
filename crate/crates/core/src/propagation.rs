//! Paraxial Fourier optics on framed fields.
//!
//! Sign conventions (time dependence `exp(-i w t)`):
//! * free space over `z` multiplies the spectrum by `exp(-i z |q|^2 / 2k)`;
//! * a thin lens of focal length `f` multiplies the field by
//!   `exp(-i k |x|^2 / 2f)`.
//!
//! Runs of free space and lenses that contain a lens are collapsed into one
//! ray matrix and evaluated by a Collins (scaled Fresnel) transform, which
//! rescales the output pitch to `lambda |B| / (n pitch)`. Pure free-space
//! runs keep the grid and use the transfer-function kernel.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Once;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::field::{ComplexField, Domain, Frame, Grid2D};

/// Hard-edged circular aperture, absolute transverse coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApertureSpec {
    pub diameter_m: f64,
    pub center: [f64; 2],
}

impl ApertureSpec {
    pub fn new(diameter_m: f64, center: [f64; 2]) -> Result<Self> {
        if !(diameter_m.is_finite() && diameter_m > 0.0) {
            return Err(Error::Domain(format!("aperture diameter {diameter_m} must be positive")));
        }
        Ok(ApertureSpec { diameter_m, center })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element {
    FreeSpace { distance_m: f64 },
    Lens { focal_m: f64 },
    Aperture(ApertureSpec),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::FreeSpace { distance_m } => write!(f, "free({}mm)", distance_m * 1e3),
            Element::Lens { focal_m } => write!(f, "lens({}mm)", focal_m * 1e3),
            Element::Aperture(a) => write!(
                f,
                "aperture({}um, x={}um, y={}um)",
                a.diameter_m * 1e6,
                a.center[0] * 1e6,
                a.center[1] * 1e6
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpticalTrain {
    pub elements: Vec<Element>,
}

impl OpticalTrain {
    pub fn new(elements: Vec<Element>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Domain("optical train is empty".into()));
        }
        for e in &elements {
            match *e {
                Element::FreeSpace { distance_m } if !distance_m.is_finite() => {
                    return Err(Error::Domain("free-space distance must be finite".into()))
                }
                Element::Lens { focal_m } if focal_m == 0.0 || focal_m.is_nan() => {
                    return Err(Error::Domain("lens focal length must be nonzero".into()))
                }
                _ => {}
            }
        }
        Ok(OpticalTrain { elements })
    }

    /// Crystal exit -> `z0` -> aperture -> `f` -> lens `f` -> `z1`.
    pub fn fourier_imaging(z0: f64, aperture: ApertureSpec, focal: f64, z1: f64) -> Self {
        OpticalTrain {
            elements: vec![
                Element::FreeSpace { distance_m: z0 },
                Element::Aperture(aperture),
                Element::FreeSpace { distance_m: focal },
                Element::Lens { focal_m: focal },
                Element::FreeSpace { distance_m: z1 },
            ],
        }
    }

    pub fn first_aperture(&self) -> Option<(usize, ApertureSpec)> {
        self.elements.iter().enumerate().find_map(|(i, e)| match e {
            Element::Aperture(a) => Some((i, *a)),
            _ => None,
        })
    }

    /// Ray matrix of the elements in `range`, apertures ignored.
    pub fn ray_matrix(&self, range: std::ops::Range<usize>) -> RayMatrix {
        self.elements[range].iter().fold(RayMatrix::identity(), |m, e| match *e {
            Element::FreeSpace { distance_m } => m.then(RayMatrix::free(distance_m)),
            Element::Lens { focal_m } => m.then(RayMatrix::lens(focal_m)),
            Element::Aperture(_) => m,
        })
    }

    pub fn split_at(&self, index: usize) -> (Vec<Element>, Vec<Element>) {
        (self.elements[..index].to_vec(), self.elements[index..].to_vec())
    }
}

impl fmt::Display for OpticalTrain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Paraxial ray-transfer matrix acting on `(x, theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RayMatrix {
    pub fn identity() -> Self {
        RayMatrix { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn free(z: f64) -> Self {
        RayMatrix { a: 1.0, b: z, c: 0.0, d: 1.0 }
    }

    pub fn lens(f: f64) -> Self {
        RayMatrix { a: 1.0, b: 0.0, c: -1.0 / f, d: 1.0 }
    }

    /// `self` followed by `next`.
    pub fn then(self, next: RayMatrix) -> RayMatrix {
        RayMatrix {
            a: next.a * self.a + next.b * self.c,
            b: next.a * self.b + next.b * self.d,
            c: next.c * self.a + next.d * self.c,
            d: next.c * self.b + next.d * self.d,
        }
    }

    pub fn apply(&self, x: f64, theta: f64) -> (f64, f64) {
        (self.a * x + self.b * theta, self.c * x + self.d * theta)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }
}

/// Frame and global phase after a ray matrix.
fn moved_frame(frame: Frame, k: f64, m: &RayMatrix) -> (Frame, f64) {
    let x = frame.origin;
    let th = [frame.carrier[0] / k, frame.carrier[1] / k];
    let mut origin = [0.0; 2];
    let mut carrier = [0.0; 2];
    for i in 0..2 {
        let (xo, to) = m.apply(x[i], th[i]);
        origin[i] = xo;
        carrier[i] = to * k;
    }
    let xx = x[0] * x[0] + x[1] * x[1];
    let xt = x[0] * th[0] + x[1] * th[1];
    let tt = th[0] * th[0] + th[1] * th[1];
    let phase = 0.5 * k * (m.a * m.c * xx + 2.0 * m.b * m.c * xt + m.b * m.d * tt);
    (Frame { origin, carrier }, phase)
}

/// Largest grid-corner angle (carrier plus Nyquist) accepted silently.
const PARAXIAL_SIN_MAX: f64 = 0.2;

fn paraxial_guard(field: &ComplexField) {
    let p = match field.grid.domain() {
        Domain::Position => field.grid.pitch(),
        Domain::Momentum => field.grid.conjugate().pitch(),
    };
    let q_max = field.frame.carrier[0].hypot(field.frame.carrier[1]) + PI / p * 2f64.sqrt();
    let sin_max = field.wavelength_m * q_max / (2.0 * PI);
    if sin_max > PARAXIAL_SIN_MAX {
        static WARNED: Once = Once::new();
        WARNED.call_once(|| {
            log::warn!("grid supports transverse angles up to sin = {sin_max:.3}; paraxial propagation may be inaccurate")
        });
    }
}

/// Free-space propagation over `distance_m` by the transfer function
/// `exp(-i z |q|^2 / 2k)`. The frame follows its reference ray. The result
/// is in the same domain as the input.
pub fn propagate_otf(field: &ComplexField, distance_m: f64) -> Result<ComplexField> {
    if distance_m == 0.0 {
        return Ok(field.clone());
    }
    paraxial_guard(field);
    let k = field.wavenumber();
    let mut spec = field.in_domain(Domain::Momentum)?;
    let g = spec.grid;
    let n = g.n();
    let a = -distance_m / (2.0 * k);
    let kernel_1d: Vec<Complex64> =
        (0..n).map(|i| Complex64::from_polar(1.0, a * g.coord(i) * g.coord(i))).collect();
    let (frame, phase) = moved_frame(spec.frame, k, &RayMatrix::free(distance_m));
    let global = Complex64::from_polar(1.0, phase);
    for ((r, c), v) in spec.values.indexed_iter_mut() {
        *v *= kernel_1d[r] * kernel_1d[c] * global;
    }
    spec.frame = frame;
    spec.in_domain(field.grid.domain())
}

/// Multiply by the disc indicator. Returns a position-space field.
pub fn apply_aperture(field: &ComplexField, ap: &ApertureSpec) -> Result<ComplexField> {
    let mut out = field.in_domain(Domain::Position)?;
    let g = out.grid;
    if ap.diameter_m < 2.0 * g.pitch() {
        return Err(Error::ApertureResolution(format!(
            "aperture {:.1} um spans fewer than 2 samples of {:.1} um",
            ap.diameter_m * 1e6,
            g.pitch() * 1e6
        )));
    }
    let r2 = 0.25 * ap.diameter_m * ap.diameter_m;
    let dx = out.frame.origin[0] - ap.center[0];
    let dy = out.frame.origin[1] - ap.center[1];
    for ((r, c), v) in out.values.indexed_iter_mut() {
        let x = dx + g.coord(c);
        let y = dy + g.coord(r);
        if x * x + y * y > r2 {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}

/// Thin-lens phase `exp(-i k |x|^2 / 2f)` about the optical axis. An
/// infinite focal length is the identity.
pub fn lens_stage(field: &ComplexField, focal_m: f64) -> Result<ComplexField> {
    if focal_m.is_infinite() {
        return Ok(field.clone());
    }
    if focal_m == 0.0 || focal_m.is_nan() {
        return Err(Error::Domain("lens focal length must be nonzero".into()));
    }
    let mut out = field.in_domain(Domain::Position)?;
    let k = out.wavenumber();
    let g = out.grid;
    let (frame, phase) = moved_frame(out.frame, k, &RayMatrix::lens(focal_m));
    let global = Complex64::from_polar(1.0, phase);
    let a = -k / (2.0 * focal_m);
    let chirp: Vec<Complex64> =
        (0..g.n()).map(|i| Complex64::from_polar(1.0, a * g.coord(i) * g.coord(i))).collect();
    for ((r, c), v) in out.values.indexed_iter_mut() {
        *v *= chirp[r] * chirp[c] * global;
    }
    out.frame = frame;
    if field.grid.domain() == Domain::Momentum {
        return out.to_momentum();
    }
    Ok(out)
}

/// Radius (from the grid center) enclosing every sample above `1e-20` of the
/// peak intensity.
fn support_radius(field: &ComplexField) -> f64 {
    let peak = field.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let g = field.grid;
    let mut r2 = 0.0f64;
    for ((r, c), v) in field.values.indexed_iter() {
        if v.norm_sqr() > 1e-20 * peak {
            r2 = r2.max(g.coord(r).powi(2) + g.coord(c).powi(2));
        }
    }
    r2.sqrt()
}

/// Collins transform through a ray matrix with `B != 0`. Output pitch is
/// `lambda |B| / (n pitch)`; the result is in position space.
pub fn collins_transform(field: &ComplexField, m: &RayMatrix) -> Result<ComplexField> {
    if m.b == 0.0 {
        return Err(Error::Domain("Collins transform needs a nonzero B element".into()));
    }
    let input = field.in_domain(Domain::Position)?;
    let k = input.wavenumber();
    let g = input.grid;
    let n = g.n();
    let p_in = g.pitch();
    let p_out = input.wavelength_m * m.b.abs() / (n as f64 * p_in);
    let out_grid = Grid2D::position(n, p_out)?;

    let r_supp = support_radius(&input);
    if k * m.a.abs() * r_supp / m.b.abs() > PI / p_in {
        log::warn!("input chirp of ray-matrix step is undersampled (A = {:.3}, B = {:.3} m)", m.a, m.b);
    }
    if k * m.d.abs() * out_grid.window() * 0.5 / m.b.abs() > PI / p_out {
        log::warn!("output chirp of ray-matrix step is undersampled (D = {:.3}, B = {:.3} m)", m.d, m.b);
    }

    let ca = k * m.a / (2.0 * m.b);
    let chirp_in: Vec<Complex64> =
        (0..n).map(|i| Complex64::from_polar(1.0, ca * g.coord(i).powi(2))).collect();
    let mut values = input.values.clone();
    for ((r, c), v) in values.indexed_iter_mut() {
        *v *= chirp_in[r] * chirp_in[c];
    }
    let dir = if m.b > 0.0 { Direction::Forward } else { Direction::Inverse };
    fft::fft2(&mut values, dir);

    let (frame, phase) = moved_frame(input.frame, k, m);
    // p_in^2 n / (i lambda B) = p_in / (i p_out sgn B)
    let amp = Complex64::new(0.0, -1.0) * (p_in / (p_out * m.b.signum()));
    let pre = amp * Complex64::from_polar(1.0, phase);
    let cd = k * m.d / (2.0 * m.b);
    let chirp_out: Vec<Complex64> =
        (0..n).map(|i| Complex64::from_polar(1.0, cd * out_grid.coord(i).powi(2))).collect();
    for ((r, c), v) in values.indexed_iter_mut() {
        *v *= pre * chirp_out[r] * chirp_out[c];
    }
    ComplexField::new(out_grid, frame, values, input.wavelength_m)
}

/// Diagnostic record of the field after each step of a train.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneRecord {
    pub label: String,
    pub pitch_m: f64,
    pub origin: [f64; 2],
    pub power: f64,
}

fn record(label: String, f: &ComplexField) -> PlaneRecord {
    log::debug!(
        "plane {label}: pitch {:.3} um, origin ({:.1}, {:.1}) um, power {:.6e}",
        f.grid.pitch() * 1e6,
        f.frame.origin[0] * 1e6,
        f.frame.origin[1] * 1e6,
        f.power()
    );
    PlaneRecord { label, pitch_m: f.grid.pitch(), origin: f.frame.origin, power: f.power() }
}

fn run_paraxial(field: ComplexField, run: &[Element]) -> Result<ComplexField> {
    if run.is_empty() {
        return Ok(field);
    }
    let has_lens = run.iter().any(|e| matches!(e, Element::Lens { .. }));
    if !has_lens {
        let z: f64 = run
            .iter()
            .map(|e| match e {
                Element::FreeSpace { distance_m } => *distance_m,
                _ => 0.0,
            })
            .sum();
        return propagate_otf(&field, z);
    }
    let m = run.iter().fold(RayMatrix::identity(), |m, e| match *e {
        Element::FreeSpace { distance_m } => m.then(RayMatrix::free(distance_m)),
        Element::Lens { focal_m } => m.then(RayMatrix::lens(focal_m)),
        Element::Aperture(_) => m,
    });
    let scale: f64 = run
        .iter()
        .map(|e| match e {
            Element::FreeSpace { distance_m } => distance_m.abs(),
            Element::Lens { focal_m } => focal_m.abs(),
            Element::Aperture(_) => 0.0,
        })
        .sum();
    if m.b.abs() <= 1e-12 * scale {
        return run_elementwise(field, run);
    }
    collins_transform(&field, &m)
}

fn run_elementwise(mut field: ComplexField, run: &[Element]) -> Result<ComplexField> {
    for e in run {
        field = apply_element(&field, e)?;
    }
    Ok(field)
}

fn apply_element(field: &ComplexField, e: &Element) -> Result<ComplexField> {
    match e {
        Element::FreeSpace { distance_m } => propagate_otf(field, *distance_m),
        Element::Lens { focal_m } => lens_stage(field, *focal_m),
        Element::Aperture(a) => apply_aperture(field, a),
    }
}

/// Apply `elements` left to right, returning a position-space field.
pub fn run_elements(field: &ComplexField, elements: &[Element]) -> Result<ComplexField> {
    Ok(run_elements_traced(field, elements)?.0)
}

pub fn run_elements_traced(
    field: &ComplexField,
    elements: &[Element],
) -> Result<(ComplexField, Vec<PlaneRecord>)> {
    let mut cur = field.in_domain(Domain::Position)?;
    let mut planes = vec![record("input".into(), &cur)];
    let mut run: Vec<Element> = Vec::new();
    for e in elements {
        match e {
            Element::Aperture(a) => {
                cur = run_paraxial(cur, &run)?;
                if !run.is_empty() {
                    let label = run.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" + ");
                    planes.push(record(label, &cur));
                }
                run.clear();
                cur = apply_aperture(&cur, a)?;
                planes.push(record(e.to_string(), &cur));
            }
            other => run.push(*other),
        }
    }
    if !run.is_empty() {
        cur = run_paraxial(cur, &run)?;
        let label = run.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" + ");
        planes.push(record(label, &cur));
    }
    Ok((cur, planes))
}

pub fn run_train(field: &ComplexField, train: &OpticalTrain) -> Result<ComplexField> {
    run_elements(field, &train.elements)
}

/// Element-by-element evaluation on the input grid (transfer-function free
/// space, sampled lens phase). Valid only when every plane fits the window.
pub fn run_train_fixed_grid(field: &ComplexField, train: &OpticalTrain) -> Result<ComplexField> {
    run_elementwise(field.in_domain(Domain::Position)?, &train.elements)
}

/// Convenience: plane wave (unit amplitude) on `grid`.
pub fn plane_wave(grid: Grid2D, wavelength_m: f64) -> Result<ComplexField> {
    let n = grid.n();
    ComplexField::new(grid, Frame::axial(), Array2::from_elem((n, n), Complex64::new(1.0, 0.0)), wavelength_m)
}
