//! Second-order IMEX multistep comparators: BDF2, trapezoidal/AB2, and
//! Adams-Moulton/Bashforth. Diffusion is treated implicitly through one
//! banded solve per step, reaction explicitly through the two-step
//! Adams-Bashforth weights. The first step is taken by the exponential Euler
//! predictor so the overall order is preserved.
//!
//! The exact update formulas, frozen here for reproducibility:
//!   BDF2:   (3/2 I + kA) U+ = 2 U_n - 1/2 U_(n-1) + k (2 f_n - f_(n-1))
//!   TR:     (I + k/2 A) U+ = (I - k/2 A) U_n + k (3/2 f_n - 1/2 f_(n-1))
//!   Adams2: (I + 3k/4 A) U+ = U_n - k/4 A U_(n-1) + k (3/2 f_n - 1/2 f_(n-1))

use num_complex::Complex64;

use crate::bandsolve::{factor_full_shifted, merge_operators, FullFactor};
use crate::etd::{EtdError, Instrument, ReactionFn, Scheme};
use crate::operators::{apply_operator, BandedOperator, StateVector};

/// A prepared IMEX integrator: factored left-hand side, the full operator for
/// the explicit matrix terms, and the two-slot history buffer.
pub struct ImexStepper {
    scheme: Scheme,
    k: f64,
    full: BandedOperator,
    lhs: FullFactor,
    /// Multiplier applied to the assembled right-hand side before the solve,
    /// rescaling the BDF2 left-hand side into `I + sigma A` form.
    rhs_scale: f64,
    startup: FullFactor,
    /// (U_(n-1), f(U_(n-1))) once the first step has seeded it.
    history: Option<(StateVector, StateVector)>,
}

impl ImexStepper {
    pub fn prepare(scheme: Scheme, parts: &[BandedOperator], k: f64) -> Result<Self, EtdError> {
        let (sigma, rhs_scale) = match scheme {
            Scheme::ImexBdf2 => (2.0 * k / 3.0, 2.0 / 3.0),
            Scheme::ImexTr => (k / 2.0, 1.0),
            Scheme::ImexAdams2 => (3.0 * k / 4.0, 1.0),
            other => {
                return Err(EtdError::BadConfig(format!(
                    "{} is not an IMEX scheme",
                    other.key()
                )))
            }
        };
        let full = merge_operators(parts);
        let lhs = factor_full_shifted(&full, Complex64::new(sigma, 0.0))?;
        let startup = factor_full_shifted(&full, Complex64::new(k, 0.0))?;
        Ok(ImexStepper { scheme, k, full, lhs, rhs_scale, startup, history: None })
    }

    /// Advance one step. The first call runs the exponential Euler startup
    /// and seeds the history; later calls use the multistep formulas.
    pub fn step(
        &mut self,
        u: &StateVector,
        f: &ReactionFn,
        ins: &Instrument,
    ) -> Result<StateVector, EtdError> {
        let k = self.k;
        ins.add_reaction();
        let fu = f(u);
        let next = match &self.history {
            None => {
                ins.add_solves(1, 1);
                let rhs: Vec<Complex64> = u
                    .values
                    .iter()
                    .zip(&fu.values)
                    .map(|(ui, fi)| ui + fi * k)
                    .collect();
                StateVector { values: self.startup.solve(&rhs)? }
            }
            Some((u_prev, f_prev)) => {
                let m = u.len();
                let mut rhs = vec![Complex64::ZERO; m];
                match self.scheme {
                    Scheme::ImexBdf2 => {
                        for i in 0..m {
                            rhs[i] = u.values[i] * 2.0 - u_prev.values[i] * 0.5
                                + (fu.values[i] * 2.0 - f_prev.values[i]) * k;
                        }
                    }
                    Scheme::ImexTr => {
                        let au = apply_operator(&self.full, u)
                            .map_err(|e| EtdError::BadConfig(e.to_string()))?;
                        for i in 0..m {
                            rhs[i] = u.values[i] - au.values[i] * (k / 2.0)
                                + (fu.values[i] * 1.5 - f_prev.values[i] * 0.5) * k;
                        }
                    }
                    Scheme::ImexAdams2 => {
                        let au_prev = apply_operator(&self.full, u_prev)
                            .map_err(|e| EtdError::BadConfig(e.to_string()))?;
                        for i in 0..m {
                            rhs[i] = u.values[i] - au_prev.values[i] * (k / 4.0)
                                + (fu.values[i] * 1.5 - f_prev.values[i] * 0.5) * k;
                        }
                    }
                    _ => unreachable!("prepare rejects non-IMEX schemes"),
                }
                if self.rhs_scale != 1.0 {
                    for z in rhs.iter_mut() {
                        *z *= self.rhs_scale;
                    }
                }
                ins.add_solves(1, 1);
                StateVector { values: self.lhs.solve(&rhs)? }
            }
        };
        self.history = Some((u.clone(), fu));
        Ok(next)
    }
}
