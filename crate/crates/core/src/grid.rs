//! Spherical-grid geometry and the five-point elliptic assembly.
//!
//! The grid is a regular latitude/longitude window on a sphere of radius
//! `r`, with `jpi` points west to east and `jpj` points south to north.
//! Metric scale factors are `e1 = r cos(phi)` along longitude, `e2 = r`
//! along latitude, `e3 = 1` in the vertical. The assembled operator is the
//! five-point discretization of the depth-weighted horizontal Laplacian,
//! made symmetric positive definite by a global sign flip, with homogeneous
//! Dirichlet closure: out-of-domain neighbors are dropped while the full
//! diagonal is kept.
//!
//! Geometry is always evaluated in `f64`; assembled values are narrowed to
//! the working precision once per entry.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS: f64 = 6_371_000.0;

/// Standard gravity in m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Margin kept between the northernmost face and the pole in the
/// ill-conditioned preset, in radians (0.02 degrees).
pub const POLE_MARGIN: f64 = 0.02 * std::f64::consts::PI / 180.0;

/// Analytic bathymetry profile, evaluated on normalized grid coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Bathymetry {
    /// Flat bottom at `depth` meters.
    Constant { depth: f64 },
    /// Gaussian seamount rising `height` meters from a flat bottom at
    /// `base_depth`, centered in the window; `width` is the Gaussian radius
    /// in normalized coordinates.
    Seamount {
        base_depth: f64,
        height: f64,
        width: f64,
    },
}

impl Bathymetry {
    /// Water column height at normalized coordinates `(u, v)` in `[0, 1]^2`
    /// (latitude and longitude fraction respectively).
    pub fn depth_at(&self, u: f64, v: f64) -> f64 {
        match *self {
            Bathymetry::Constant { depth } => depth,
            Bathymetry::Seamount {
                base_depth,
                height,
                width,
            } => {
                let du = u - 0.5;
                let dv = v - 0.5;
                base_depth - height * (-(du * du + dv * dv) / (2.0 * width * width)).exp()
            }
        }
    }

    fn validate(&self) -> Result<(), Error> {
        match *self {
            Bathymetry::Constant { depth } => {
                if depth <= 0.0 || !depth.is_finite() {
                    return Err(Error::Grid(format!("depth must be positive, got {depth}")));
                }
            }
            Bathymetry::Seamount {
                base_depth,
                height,
                width,
            } => {
                if base_depth <= 0.0 || !base_depth.is_finite() {
                    return Err(Error::Grid(format!(
                        "base depth must be positive, got {base_depth}"
                    )));
                }
                if height < 0.0 || height >= base_depth {
                    return Err(Error::Grid(
                        "seamount height must satisfy 0 <= height < base depth \
                         so the water column stays positive"
                            .into(),
                    ));
                }
                if width <= 0.0 {
                    return Err(Error::Grid("seamount width must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Geometry and physics of one grid window.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Points along longitude (west to east).
    pub jpi: usize,
    /// Points along latitude (south to north).
    pub jpj: usize,
    /// Longitude of the first column, radians.
    pub lambda0: f64,
    /// Latitude of the southernmost row, radians.
    pub phi0: f64,
    /// Longitude step, radians.
    pub d_lambda: f64,
    /// Latitude step, radians.
    pub d_phi: f64,
    /// Time step, seconds.
    pub dt: f64,
    /// Sphere radius, meters.
    pub radius: f64,
    /// Gravity, m/s^2.
    pub gravity: f64,
    /// Dimensionless time-weighting coefficient of the surface stepper.
    pub t_c: f64,
    pub bathymetry: Bathymetry,
}

impl GridSpec {
    /// Builds a grid with Earth radius, standard gravity, `lambda0 = 0`,
    /// and `t_c = 1`, then validates it.
    pub fn new(
        jpi: usize,
        jpj: usize,
        phi0: f64,
        d_phi: f64,
        d_lambda: f64,
        dt: f64,
        bathymetry: Bathymetry,
    ) -> Result<Self, Error> {
        let grid = Self {
            jpi,
            jpj,
            lambda0: 0.0,
            phi0,
            d_lambda,
            d_phi,
            dt,
            radius: EARTH_RADIUS,
            gravity: STANDARD_GRAVITY,
            t_c: 1.0,
            bathymetry,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Well-conditioned preset: a 120-degree window centered on the equator,
    /// flat 4 km bottom.
    pub fn equatorial(jpi: usize, jpj: usize) -> Result<Self, Error> {
        let span = 120f64.to_radians();
        let d_phi = span / (jpj.max(2) as f64 - 1.0);
        Self::new(
            jpi,
            jpj,
            -span / 2.0,
            d_phi,
            std::f64::consts::TAU / jpi.max(1) as f64,
            90.0,
            Bathymetry::Constant { depth: 4000.0 },
        )
    }

    /// Ill-conditioned preset: a 30-degree window pushed against the north
    /// pole so the northernmost face sits [`POLE_MARGIN`] short of it.
    pub fn polar(jpi: usize, jpj: usize) -> Result<Self, Error> {
        let span = 30f64.to_radians();
        let d_phi = span / jpj.max(1) as f64;
        Self::new(
            jpi,
            jpj,
            FRAC_PI_2 - POLE_MARGIN - span,
            d_phi,
            std::f64::consts::TAU / jpi.max(1) as f64,
            90.0,
            Bathymetry::Constant { depth: 4000.0 },
        )
    }

    /// Number of unknowns.
    pub fn n(&self) -> usize {
        self.jpi * self.jpj
    }

    /// Flat index of grid point `(i, j)` in natural ordering (west to east,
    /// then south to north).
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.jpi + j
    }

    /// Latitude of row `i`, radians.
    pub fn latitude(&self, i: usize) -> f64 {
        self.phi0 + i as f64 * self.d_phi
    }

    /// # Errors
    ///
    /// Returns [`Error::Grid`] if any invariant fails: both dimensions at
    /// least 3, positive steps, positive physics constants, a positive water
    /// column, and a latitude window strictly inside `(-pi/2, pi/2)`.
    pub fn validate(&self) -> Result<(), Error> {
        if self.jpi < 3 || self.jpj < 3 {
            return Err(Error::Grid(format!(
                "grid must be at least 3x3, got {}x{}",
                self.jpi, self.jpj
            )));
        }
        for (name, v) in [
            ("d_lambda", self.d_lambda),
            ("d_phi", self.d_phi),
            ("dt", self.dt),
            ("radius", self.radius),
            ("gravity", self.gravity),
            ("t_c", self.t_c),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Grid(format!("{name} must be positive, got {v}")));
            }
        }
        let phi_max = self.latitude(self.jpj - 1);
        if !(self.phi0 > -FRAC_PI_2) || !(phi_max < FRAC_PI_2) {
            return Err(Error::Grid(format!(
                "latitude window [{}, {phi_max}] rad must lie strictly inside \
                 (-pi/2, pi/2)",
                self.phi0
            )));
        }
        self.bathymetry.validate()
    }
}

/// Metric scale factors `(e1, e2, e3)` on a sphere of radius `r` at
/// latitude `phi`.
///
/// # Errors
///
/// Returns [`Error::LatitudeDomain`] when `|phi| >= pi/2`, where the zonal
/// metric collapses.
pub fn scale_factors_at(radius: f64, phi: f64) -> Result<(f64, f64, f64), Error> {
    if !(phi.abs() < FRAC_PI_2) {
        return Err(Error::LatitudeDomain { phi });
    }
    Ok((radius * phi.cos(), radius, 1.0))
}

/// Scale factors at grid point `(i, j)`.
///
/// # Errors
///
/// [`Error::Domain`] for an out-of-grid point, [`Error::LatitudeDomain`]
/// from [`scale_factors_at`].
pub fn scale_factors(grid: &GridSpec, i: usize, j: usize) -> Result<(f64, f64, f64), Error> {
    if i >= grid.jpj || j >= grid.jpi {
        return Err(Error::Domain(format!(
            "point ({i}, {j}) outside a {}x{} grid",
            grid.jpj, grid.jpi
        )));
    }
    scale_factors_at(grid.radius, grid.latitude(i))
}

// Latitude used for coefficient evaluation at row index `i` in `0..=jpj`.
// The face row `i = jpj` replicates the boundary row instead of stepping
// past it, so a window flush against the pole never evaluates at or beyond
// pi/2.
fn coeff_latitude(grid: &GridSpec, i: usize) -> f64 {
    grid.latitude(i.min(grid.jpj - 1))
}

// Water column at coefficient point `(i, j)`, `i` in `0..=jpj`, `j` in
// `0..=jpi`; out-of-grid indices replicate the boundary.
fn coeff_depth(grid: &GridSpec, i: usize, j: usize) -> f64 {
    let u = i.min(grid.jpj - 1) as f64 / (grid.jpj - 1) as f64;
    let v = j.min(grid.jpi - 1) as f64 / (grid.jpi - 1) as f64;
    grid.bathymetry.depth_at(u, v)
}

// North-south coupling coefficient 2 dt^2 H e1/e2 = 2 dt^2 H cos(phi); the
// radius cancels in the metric ratio.
fn c_ns_at(grid: &GridSpec, i: usize, j: usize) -> f64 {
    2.0 * grid.dt * grid.dt * coeff_depth(grid, i, j) * coeff_latitude(grid, i).cos()
}

// East-west coupling coefficient 2 dt^2 H e2/e1 = 2 dt^2 H / cos(phi).
fn c_ew_at(grid: &GridSpec, i: usize, j: usize) -> f64 {
    2.0 * grid.dt * grid.dt * coeff_depth(grid, i, j) / coeff_latitude(grid, i).cos()
}

// Diagonal entry; the summation order is fixed so every consumer sees the
// identical floating-point value.
fn d_at(grid: &GridSpec, i: usize, j: usize) -> f64 {
    c_ns_at(grid, i + 1, j) + c_ew_at(grid, i, j + 1) + c_ns_at(grid, i, j) + c_ew_at(grid, i, j)
}

/// Coupling coefficients and diagonal of the five-point operator.
///
/// `c_ns` is stored on `(jpj + 1) x jpi` points (one face row past the
/// north boundary), `c_ew` on `jpj x (jpi + 1)` points (one face column
/// past the east boundary); both replicate the boundary at the extra line.
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    jpi: usize,
    jpj: usize,
    c_ns: Vec<f64>,
    c_ew: Vec<f64>,
    d: Vec<f64>,
}

impl CoefficientFields {
    pub fn jpi(&self) -> usize {
        self.jpi
    }

    pub fn jpj(&self) -> usize {
        self.jpj
    }

    /// North-south coupling at `(i, j)`, `i` in `0..=jpj`.
    pub fn c_ns(&self, i: usize, j: usize) -> f64 {
        self.c_ns[i * self.jpi + j]
    }

    /// East-west coupling at `(i, j)`, `j` in `0..=jpi`.
    pub fn c_ew(&self, i: usize, j: usize) -> f64 {
        self.c_ew[i * (self.jpi + 1) + j]
    }

    /// Diagonal at `(i, j)`.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.jpi + j]
    }
}

/// Evaluates the coupling coefficients and diagonal over the whole window.
///
/// # Errors
///
/// [`Error::Grid`] from validation.
pub fn assemble_coefficients(grid: &GridSpec) -> Result<CoefficientFields, Error> {
    grid.validate()?;
    let (jpi, jpj) = (grid.jpi, grid.jpj);
    let mut c_ns = Vec::with_capacity((jpj + 1) * jpi);
    for i in 0..=jpj {
        for j in 0..jpi {
            c_ns.push(c_ns_at(grid, i, j));
        }
    }
    let mut c_ew = Vec::with_capacity(jpj * (jpi + 1));
    for i in 0..jpj {
        for j in 0..=jpi {
            c_ew.push(c_ew_at(grid, i, j));
        }
    }
    let mut d = Vec::with_capacity(jpj * jpi);
    for i in 0..jpj {
        for j in 0..jpi {
            d.push(d_at(grid, i, j));
        }
    }
    Ok(CoefficientFields {
        jpi,
        jpj,
        c_ns,
        c_ew,
        d,
    })
}

/// Assembles the symmetric positive definite five-point matrix in natural
/// ordering.
///
/// # Errors
///
/// [`Error::Grid`] from validation.
pub fn assemble_matrix<T: Scalar>(grid: &GridSpec) -> Result<CsrMatrix<T>, Error> {
    let coeffs = assemble_coefficients(grid)?;
    matrix_from_coefficients(&coeffs)
}

/// Assembles the matrix from precomputed coefficient fields.
///
/// # Errors
///
/// [`Error::Structure`] if the fields are internally inconsistent.
pub fn matrix_from_coefficients<T: Scalar>(
    coeffs: &CoefficientFields,
) -> Result<CsrMatrix<T>, Error> {
    let (jpi, jpj) = (coeffs.jpi, coeffs.jpj);
    let n = jpi * jpj;
    let mut row_start = Vec::with_capacity(n + 1);
    let mut col_index = Vec::with_capacity(5 * n);
    let mut values = Vec::with_capacity(5 * n);
    row_start.push(0);
    for i in 0..jpj {
        for j in 0..jpi {
            let idx = i * jpi + j;
            if i > 0 {
                col_index.push(idx - jpi);
                values.push(T::from_f64(-coeffs.c_ns(i, j)));
            }
            if j > 0 {
                col_index.push(idx - 1);
                values.push(T::from_f64(-coeffs.c_ew(i, j)));
            }
            col_index.push(idx);
            values.push(T::from_f64(coeffs.d(i, j)));
            if j + 1 < jpi {
                col_index.push(idx + 1);
                values.push(T::from_f64(-coeffs.c_ew(i, j + 1)));
            }
            if i + 1 < jpj {
                col_index.push(idx + jpi);
                values.push(T::from_f64(-coeffs.c_ns(i + 1, j)));
            }
            row_start.push(col_index.len());
        }
    }
    CsrMatrix::new(n, n, row_start, col_index, values)
}

/// One interior row of the diagonally scaled operator: the magnitudes of
/// the four off-diagonal couplings after dividing by the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedRow {
    pub alpha_e: f64,
    pub alpha_w: f64,
    pub beta_s: f64,
    pub beta_n: f64,
}

impl NormalizedRow {
    pub fn sum(&self) -> f64 {
        self.alpha_e + self.alpha_w + self.beta_s + self.beta_n
    }
}

/// Normalized couplings of interior point `(i, j)`.
///
/// # Errors
///
/// [`Error::Domain`] if `(i, j)` is not interior; [`Error::Grid`] from
/// validation.
pub fn normalized_row(grid: &GridSpec, i: usize, j: usize) -> Result<NormalizedRow, Error> {
    grid.validate()?;
    if i == 0 || j == 0 || i + 1 >= grid.jpj || j + 1 >= grid.jpi {
        return Err(Error::Domain(format!(
            "({i}, {j}) is not an interior point of a {}x{} grid",
            grid.jpj, grid.jpi
        )));
    }
    let d = d_at(grid, i, j);
    Ok(NormalizedRow {
        alpha_e: c_ew_at(grid, i, j + 1) / d,
        alpha_w: c_ew_at(grid, i, j) / d,
        beta_s: c_ns_at(grid, i, j) / d,
        beta_n: c_ns_at(grid, i + 1, j) / d,
    })
}

/// Builds the right-hand side from transport fields `m_u` (eastward) and
/// `m_v` (northward), both in natural ordering.
///
/// The divergence uses forward differences, falling back to backward ones
/// on the north and east boundary lines, and carries the same global sign
/// flip as the matrix.
///
/// # Errors
///
/// [`Error::DimensionMismatch`] if a field length differs from `n`;
/// [`Error::Grid`] from validation.
pub fn assemble_rhs<T: Scalar>(grid: &GridSpec, m_u: &[T], m_v: &[T]) -> Result<Vec<T>, Error> {
    grid.validate()?;
    let n = grid.n();
    for field in [m_u, m_v] {
        if field.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: field.len(),
            });
        }
    }
    let (jpi, jpj) = (grid.jpi, grid.jpj);
    // g_u = e2 * m_u, g_v = e1 * m_v, evaluated pointwise in f64.
    let g_u: Vec<f64> = (0..n).map(|k| grid.radius * m_u[k].to_f64()).collect();
    let g_v: Vec<f64> = (0..n)
        .map(|k| {
            let i = k / jpi;
            grid.radius * grid.latitude(i).cos() * m_v[k].to_f64()
        })
        .collect();
    let mut b = Vec::with_capacity(n);
    for i in 0..jpj {
        for j in 0..jpi {
            let k = i * jpi + j;
            let delta_i = if i + 1 < jpj {
                g_u[k + jpi] - g_u[k]
            } else {
                g_u[k] - g_u[k - jpi]
            };
            let delta_j = if j + 1 < jpi {
                g_v[k + 1] - g_v[k]
            } else {
                g_v[k] - g_v[k - 1]
            };
            b.push(T::from_f64(-(delta_i - delta_j)));
        }
    }
    Ok(b)
}

/// Parses a grid from flat `key = value` text.
///
/// Recognized keys: `jpi`, `jpj`, `phi0_deg`, `dphi_deg`, `dlambda_deg`,
/// `dt`, `depth`, and optionally `bathymetry` (`constant`, the default, or
/// `seamount`: half the depth, Gaussian radius 0.15 in normalized
/// coordinates). Lines starting with `#` and blank lines are skipped.
///
/// # Errors
///
/// [`Error::Config`] for unknown keys, bad values, or missing required
/// keys; [`Error::Grid`] from validation.
pub fn grid_from_config_str(text: &str) -> Result<GridSpec, Error> {
    let mut jpi = None;
    let mut jpj = None;
    let mut phi0_deg = None;
    let mut dphi_deg = None;
    let mut dlambda_deg = None;
    let mut dt = None;
    let mut depth = None;
    let mut bathymetry = String::from("constant");

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", idx + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let parse_usize = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: bad integer '{value}'")))
        };
        let parse_f64 = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: bad number '{value}'")))
        };
        match key {
            "jpi" => jpi = Some(parse_usize()?),
            "jpj" => jpj = Some(parse_usize()?),
            "phi0_deg" => phi0_deg = Some(parse_f64()?),
            "dphi_deg" => dphi_deg = Some(parse_f64()?),
            "dlambda_deg" => dlambda_deg = Some(parse_f64()?),
            "dt" => dt = Some(parse_f64()?),
            "depth" => depth = Some(parse_f64()?),
            "bathymetry" => bathymetry = value.to_string(),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
    }

    let require = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::Config(format!("missing required key '{name}'")))
    };
    let jpi = jpi.ok_or_else(|| Error::Config("missing required key 'jpi'".into()))?;
    let jpj = jpj.ok_or_else(|| Error::Config("missing required key 'jpj'".into()))?;
    let phi0 = require("phi0_deg", phi0_deg)?.to_radians();
    let d_phi = require("dphi_deg", dphi_deg)?.to_radians();
    let d_lambda = require("dlambda_deg", dlambda_deg)?.to_radians();
    let dt = require("dt", dt)?;
    let depth = require("depth", depth)?;
    let bathymetry = match bathymetry.as_str() {
        "constant" => Bathymetry::Constant { depth },
        "seamount" => Bathymetry::Seamount {
            base_depth: depth,
            height: depth / 2.0,
            width: 0.15,
        },
        other => {
            return Err(Error::Config(format!(
                "bathymetry must be 'constant' or 'seamount', got '{other}'"
            )))
        }
    };
    GridSpec::new(jpi, jpj, phi0, d_phi, d_lambda, dt, bathymetry)
}

/// Reads a grid config file. See [`grid_from_config_str`].
///
/// # Errors
///
/// [`Error::Io`] on filesystem failures, plus everything from
/// [`grid_from_config_str`].
pub fn grid_from_config_file(path: impl AsRef<Path>) -> Result<GridSpec, Error> {
    grid_from_config_str(&fs::read_to_string(path)?)
}
