//! Leapfrog free-surface demo stepper.
//!
//! This module exists to show the solver inside its natural time loop; it
//! is a smoke-level demonstration, not a physics claim. Each step performs
//!
//! ```text
//! eta(n+1) = eta(n-1) - 2 dt D(n)
//! (A + mu W) D(n+1) = mu W D(n-1) + L eta(n) / t_c
//! ```
//!
//! where `A` is the assembled five-point system, `W` the diagonal of cell
//! measures `e1 e2 dphi dlambda`, `mu = dt / (g t_c)`, and `L` the same
//! coupling stencil as `A` closed with zero-flux edges so a constant
//! surface produces an exactly zero right-hand side.
//!
//! Two modeling choices are deliberate and worth flagging. First, the
//! coefficient formulas carry `2 dt^2` but no `g t_c`, while the
//! semi-discrete equations carry `2 dt g t_c`; the gap is absorbed into
//! the right-hand-side scaling `mu` above. Second, the solved operator
//! adds the lumped mass `mu W` to `A`: without it the divergence update
//! has an order-one feedback gain at every wavelength and no leapfrog
//! step is stable. With it the scheme is the standard semi-implicit
//! free-surface update, stable for the small time steps used here.
//!
//! The solve warm-starts from twice the current divergence.

use crate::error::Error;
use crate::fsai::FactoredInverse;
use crate::grid::{assemble_coefficients, CoefficientFields, GridSpec};
use crate::pcg::{pcg_solve, SolverConfig};
use crate::precond::{DiagonalPrecond, Preconditioner};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Two time levels of sea-surface height and divergence.
#[derive(Debug, Clone)]
pub struct SurfaceState<T> {
    pub eta_prev: Vec<T>,
    pub eta_curr: Vec<T>,
    pub d_prev: Vec<T>,
    pub d_curr: Vec<T>,
}

impl<T: Scalar> SurfaceState<T> {
    /// # Errors
    ///
    /// [`Error::DimensionMismatch`] when a field length differs from the
    /// grid size, [`Error::Structure`] on non-finite entries.
    pub fn new(
        grid: &GridSpec,
        eta_prev: Vec<T>,
        eta_curr: Vec<T>,
        d_prev: Vec<T>,
        d_curr: Vec<T>,
    ) -> Result<Self, Error> {
        let n = grid.n();
        for field in [&eta_prev, &eta_curr, &d_prev, &d_curr] {
            if field.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: field.len(),
                });
            }
            if field.iter().any(|v| !v.is_finite()) {
                return Err(Error::Structure(
                    "state fields must be finite".into(),
                ));
            }
        }
        Ok(Self {
            eta_prev,
            eta_curr,
            d_prev,
            d_curr,
        })
    }

    /// Both height levels set to `eta`, divergence at rest.
    pub fn from_height(grid: &GridSpec, eta: Vec<T>) -> Result<Self, Error> {
        let d = vec![T::zero(); grid.n()];
        Self::new(grid, eta.clone(), eta, d.clone(), d)
    }
}

/// Preconditioner choice for the stepper's inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPrecond {
    Diagonal,
    /// Banded factored inverse with the given bandwidth.
    Banded(usize),
}

/// Owns the assembled operator and drives the leapfrog updates.
pub struct SurfaceStepper<T: Scalar> {
    grid: GridSpec,
    coeffs: CoefficientFields,
    system: CsrMatrix<T>,
    precond: Box<dyn Preconditioner<T>>,
    solver: SolverConfig,
    /// Diagonal of cell measures times `mu`.
    mass: Vec<f64>,
    steps_taken: usize,
}

impl<T: Scalar> SurfaceStepper<T> {
    /// Assembles the stepping operator `A + mu W` and its preconditioner.
    ///
    /// # Errors
    ///
    /// Grid validation and preconditioner construction errors.
    pub fn new(grid: GridSpec, precond: StepPrecond, solver: SolverConfig) -> Result<Self, Error> {
        grid.validate()?;
        let coeffs = assemble_coefficients(&grid)?;
        let mu = grid.dt / (grid.gravity * grid.t_c);
        let measure = grid.d_phi * grid.d_lambda * grid.radius * grid.radius;
        let mass: Vec<f64> = (0..grid.n())
            .map(|k| mu * measure * grid.latitude(k / grid.jpi).cos())
            .collect();
        let system = assemble_with_mass(&coeffs, &mass)?;
        let precond: Box<dyn Preconditioner<T>> = match precond {
            StepPrecond::Diagonal => Box::new(DiagonalPrecond::from_matrix(&system)?),
            StepPrecond::Banded(q) => Box::new(FactoredInverse::from_matrix(&system, q)?),
        };
        Ok(Self {
            grid,
            coeffs,
            system,
            precond,
            solver,
            mass,
            steps_taken: 0,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The solved operator, for inspection and export.
    pub fn system(&self) -> &CsrMatrix<T> {
        &self.system
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Advances one leapfrog step.
    ///
    /// # Errors
    ///
    /// [`Error::StepDidNotConverge`] carrying the step index when the
    /// inner solve misses its tolerance; solver structural errors pass
    /// through unchanged.
    pub fn step(&mut self, state: &SurfaceState<T>) -> Result<SurfaceState<T>, Error> {
        let n = self.grid.n();
        for field in [&state.eta_prev, &state.eta_curr, &state.d_prev, &state.d_curr] {
            if field.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: field.len(),
                });
            }
        }
        let step_index = self.steps_taken + 1;
        let two_dt = 2.0 * self.grid.dt;
        let eta_next: Vec<T> = state
            .eta_prev
            .iter()
            .zip(&state.d_curr)
            .map(|(&e, &d)| T::from_f64(e.to_f64() - two_dt * d.to_f64()))
            .collect();

        let flux = zero_flux_apply(&self.coeffs, &state.eta_curr);
        let b: Vec<T> = (0..n)
            .map(|k| {
                T::from_f64(
                    self.mass[k] * state.d_prev[k].to_f64() + flux[k] / self.grid.t_c,
                )
            })
            .collect();
        let x0: Vec<T> = state
            .d_curr
            .iter()
            .map(|&d| T::from_f64(2.0 * d.to_f64()))
            .collect();
        let report = pcg_solve(
            &self.system,
            &b,
            self.precond.as_ref(),
            Some(&x0),
            &self.solver,
        )?;
        if !report.converged {
            return Err(Error::StepDidNotConverge {
                step: step_index,
                iterations: report.iterations,
                residual: report.final_rel_residual,
            });
        }
        self.steps_taken = step_index;
        Ok(SurfaceState {
            eta_prev: state.eta_curr.clone(),
            eta_curr: eta_next,
            d_prev: state.d_curr.clone(),
            d_curr: report.solution,
        })
    }
}

// A + diag(mass): the five-point system with the lumped mass folded into
// the diagonal.
fn assemble_with_mass<T: Scalar>(
    coeffs: &CoefficientFields,
    mass: &[f64],
) -> Result<CsrMatrix<T>, Error> {
    let (jpi, jpj) = (coeffs.jpi(), coeffs.jpj());
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
            values.push(T::from_f64(coeffs.d(i, j) + mass[idx]));
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

// The coupling stencil applied with zero-flux closure: sum of
// C (eta_k - eta_nb) over in-domain neighbors, so any constant field maps
// to exactly zero.
fn zero_flux_apply<T: Scalar>(coeffs: &CoefficientFields, eta: &[T]) -> Vec<f64> {
    let (jpi, jpj) = (coeffs.jpi(), coeffs.jpj());
    let mut out = vec![0.0; jpi * jpj];
    for i in 0..jpj {
        for j in 0..jpi {
            let k = i * jpi + j;
            let ek = eta[k].to_f64();
            let mut acc = 0.0;
            if i > 0 {
                acc += coeffs.c_ns(i, j) * (ek - eta[k - jpi].to_f64());
            }
            if i + 1 < jpj {
                acc += coeffs.c_ns(i + 1, j) * (ek - eta[k + jpi].to_f64());
            }
            if j > 0 {
                acc += coeffs.c_ew(i, j) * (ek - eta[k - 1].to_f64());
            }
            if j + 1 < jpi {
                acc += coeffs.c_ew(i, j + 1) * (ek - eta[k + 1].to_f64());
            }
            out[k] = acc;
        }
    }
    out
}
