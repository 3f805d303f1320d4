//! The benchmark problem catalog: reaction terms, initial data, exact
//! solutions where known, and the physical diagnostics (mass, energy, point
//! probes).
//!
//! Complex-valued problems (Ginzburg-Landau, Schrodinger) are carried as a
//! single complex component with a complex diffusion coefficient, which is
//! the scalar form of the real two-component rotation system; real problems
//! simply have zero imaginary parts everywhere.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::operators::{
    BoundaryKind, DiffusionSpec, GridSpec, OperatorError, StateVector,
};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem '{name}'; known: {}", catalog_keys().join(", "))]
    UnknownProblem { name: String },
    #[error("problem '{problem}' has no parameter '{key}'")]
    UnknownParam { problem: String, key: String },
    #[error("problem '{0}' has no closed-form solution")]
    NoExact(String),
    #[error("probe point lies outside the domain")]
    ProbeOutside,
    #[error("diagnostic requires a one-dimensional single-component field")]
    UnsupportedDiagnostic,
    #[error(transparent)]
    Grid(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Enzyme,
    Brusselator2d,
    Brusselator3d,
    GinzburgLandau2d,
    GinzburgLandau3d,
    Soliton1d,
    Schrodinger2d,
}

/// A fully described benchmark problem. Geometry defaults (points per axis,
/// time step, final time) reproduce the published experiments at desk scale;
/// studies may override them.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    kind: Kind,
    pub d: usize,
    pub s: usize,
    pub complex_field: bool,
    pub bc: BoundaryKind,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t_final: f64,
    pub default_p: usize,
    pub default_dt: f64,
    pub params: BTreeMap<String, f64>,
}

/// Per-time diagnostics collected during a simulation.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: Option<f64>,
    pub energy: Option<f64>,
    pub max_modulus: f64,
    pub probe: Option<Vec<Complex64>>,
}

pub fn catalog_keys() -> Vec<&'static str> {
    vec![
        "enzyme",
        "brusselator2d",
        "brusselator3d",
        "ginzburg_landau2d",
        "ginzburg_landau3d",
        "schrodinger1d_soliton",
        "schrodinger2d_cosine",
    ]
}

fn params_from(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Build a catalog problem, optionally overriding named scalar parameters.
pub fn make_problem(
    name: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<ProblemSpec, ProblemError> {
    let mut spec = match name {
        "enzyme" => ProblemSpec {
            name: name.into(),
            kind: Kind::Enzyme,
            d: 2,
            s: 1,
            complex_field: false,
            bc: BoundaryKind::Dirichlet,
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
            t_final: 1.0,
            default_p: 79, // h = 1/80 = 0.0125 with interior-only nodes
            default_dt: 0.00625,
            params: params_from(&[("D", 0.2)]),
        },
        "brusselator2d" => ProblemSpec {
            name: name.into(),
            kind: Kind::Brusselator2d,
            d: 2,
            s: 2,
            complex_field: false,
            bc: BoundaryKind::Neumann,
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
            t_final: 2.0,
            default_p: 81, // h = 1/80 = 0.0125 with boundary-inclusive nodes
            default_dt: 0.0125,
            params: params_from(&[("D", 2e-3), ("A", 3.4), ("B", 1.0)]),
        },
        "brusselator3d" => ProblemSpec {
            name: name.into(),
            kind: Kind::Brusselator3d,
            d: 3,
            s: 2,
            complex_field: false,
            bc: BoundaryKind::Neumann,
            lo: vec![0.0; 3],
            hi: vec![1.0; 3],
            t_final: 5.0,
            default_p: 11, // h = 1/10
            default_dt: 1e-3,
            params: params_from(&[("D", 0.02), ("A", 1.0), ("B", 2.0)]),
        },
        "ginzburg_landau2d" => ProblemSpec {
            name: name.into(),
            kind: Kind::GinzburgLandau2d,
            d: 2,
            s: 1,
            complex_field: true,
            bc: BoundaryKind::Periodic,
            lo: vec![0.0; 2],
            hi: vec![200.0; 2],
            t_final: 100.0,
            default_p: 100,
            default_dt: 0.05,
            params: params_from(&[("alpha", 0.0), ("beta", 1.3), ("random_init", 0.0)]),
        },
        "ginzburg_landau3d" => ProblemSpec {
            name: name.into(),
            kind: Kind::GinzburgLandau3d,
            d: 3,
            s: 1,
            complex_field: true,
            bc: BoundaryKind::Periodic,
            lo: vec![0.0; 3],
            hi: vec![200.0; 3],
            t_final: 100.0,
            default_p: 50,
            default_dt: 0.05,
            params: params_from(&[("alpha", 0.0), ("beta", 1.3), ("random_init", 0.0)]),
        },
        "schrodinger1d_soliton" => ProblemSpec {
            name: name.into(),
            kind: Kind::Soliton1d,
            d: 1,
            s: 1,
            complex_field: true,
            bc: BoundaryKind::Neumann,
            lo: vec![-80.0],
            hi: vec![100.0],
            t_final: 108.0,
            default_p: 361, // h = 1/2
            default_dt: 0.01,
            params: params_from(&[("a", 0.01), ("c", 0.1)]),
        },
        "schrodinger2d_cosine" => ProblemSpec {
            name: name.into(),
            kind: Kind::Schrodinger2d,
            d: 2,
            s: 1,
            complex_field: true,
            bc: BoundaryKind::Neumann,
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
            t_final: 1.0,
            default_p: 79, // h = 1/78
            default_dt: 0.0125,
            params: BTreeMap::new(),
        },
        other => return Err(ProblemError::UnknownProblem { name: other.into() }),
    };
    for (key, value) in overrides {
        match spec.params.get_mut(key) {
            Some(slot) => *slot = *value,
            None => {
                return Err(ProblemError::UnknownParam {
                    problem: spec.name.clone(),
                    key: key.clone(),
                })
            }
        }
    }
    Ok(spec)
}

impl ProblemSpec {
    fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    pub fn diffusion(&self) -> DiffusionSpec {
        match self.kind {
            Kind::Enzyme => DiffusionSpec::scalar(self.param("D")),
            Kind::Brusselator2d | Kind::Brusselator3d => {
                DiffusionSpec::uniform(self.param("D"), 2)
            }
            Kind::GinzburgLandau2d | Kind::GinzburgLandau3d => DiffusionSpec {
                coeffs: vec![Complex64::new(1.0, self.param("alpha"))],
            },
            Kind::Soliton1d | Kind::Schrodinger2d => DiffusionSpec {
                coeffs: vec![Complex64::new(0.0, 1.0)],
            },
        }
    }

    pub fn grid(&self, p: usize) -> Result<GridSpec, OperatorError> {
        GridSpec::new(self.d, p, self.s, self.bc, self.lo.clone(), self.hi.clone())
    }

    /// Sample the initial condition. The seed only matters for the random
    /// Ginzburg-Landau field; every other initial condition is closed-form.
    pub fn initial_state(&self, grid: &GridSpec, seed: u64) -> StateVector {
        let m = grid.unknowns();
        let mut values = vec![Complex64::ZERO; m];
        match self.kind {
            Kind::Enzyme => {
                values.fill(Complex64::ONE);
            }
            Kind::Brusselator2d => {
                for (r, v) in values.iter_mut().enumerate() {
                    let (c, _) = grid.split_index(r);
                    let xy = grid.node_coords(r);
                    *v = if c == 0 {
                        Complex64::new(0.5 + xy[1], 0.0)
                    } else {
                        Complex64::new(1.0 + 5.0 * xy[0], 0.0)
                    };
                }
            }
            Kind::Brusselator3d => {
                let tau = 2.0 * std::f64::consts::PI;
                for (r, v) in values.iter_mut().enumerate() {
                    let (c, _) = grid.split_index(r);
                    let xyz = grid.node_coords(r);
                    *v = if c == 0 {
                        Complex64::new(
                            1.0 + (tau * xyz[0]).sin() * (tau * xyz[1]).sin()
                                * (tau * xyz[2]).sin(),
                            0.0,
                        )
                    } else {
                        Complex64::new(3.0, 0.0)
                    };
                }
            }
            Kind::GinzburgLandau2d | Kind::GinzburgLandau3d => {
                if self.param("random_init") != 0.0 {
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                    for v in values.iter_mut() {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        *v = Complex64::new(re, 0.0);
                    }
                } else if self.kind == Kind::GinzburgLandau2d {
                    for (r, v) in values.iter_mut().enumerate() {
                        let xy = grid.node_coords(r);
                        let g = |cx: f64, cy: f64| {
                            (-((xy[0] - cx).powi(2) + (xy[1] - cy).powi(2)) / 1000.0).exp()
                        };
                        *v = Complex64::new(
                            g(50.0, 50.0) - g(100.0, 100.0) + g(100.0, 50.0),
                            0.0,
                        );
                    }
                } else {
                    for (r, v) in values.iter_mut().enumerate() {
                        let xyz = grid.node_coords(r);
                        let g = |cx: f64| {
                            (-((xyz[0] - cx).powi(2)
                                + (xyz[1] - cx).powi(2)
                                + (xyz[2] - cx).powi(2))
                                / 1000.0)
                                .exp()
                        };
                        *v = Complex64::new(g(50.0) - g(100.0), 0.0);
                    }
                }
            }
            Kind::Soliton1d => {
                return self.soliton_profile(grid, 0.0);
            }
            Kind::Schrodinger2d => {
                return self.cosine_profile(grid, 0.0);
            }
        }
        StateVector { values }
    }

    /// Pointwise reaction evaluator bound to the grid (needed for the
    /// spatially varying potential of the 2-D Schrodinger problem).
    pub fn reaction(&self, grid: &GridSpec) -> Box<dyn Fn(&StateVector) -> StateVector + Sync> {
        match self.kind {
            Kind::Enzyme => Box::new(|u: &StateVector| StateVector {
                values: u.values.iter().map(|z| -z / (Complex64::ONE + z)).collect(),
            }),
            Kind::Brusselator2d | Kind::Brusselator3d => {
                let a = self.param("A");
                let b = self.param("B");
                Box::new(move |u: &StateVector| {
                    let m = u.len();
                    let mut out = vec![Complex64::ZERO; m];
                    for r in (0..m).step_by(2) {
                        let u1 = u.values[r];
                        let u2 = u.values[r + 1];
                        let coupling = u1 * u1 * u2;
                        out[r] = coupling - u1 * (a + 1.0) + b;
                        out[r + 1] = -coupling + u1 * a;
                    }
                    StateVector { values: out }
                })
            }
            Kind::GinzburgLandau2d | Kind::GinzburgLandau3d => {
                let cb = Complex64::new(1.0, self.param("beta"));
                Box::new(move |u: &StateVector| StateVector {
                    values: u
                        .values
                        .iter()
                        .map(|z| z - cb * z * z.norm_sqr())
                        .collect(),
                })
            }
            Kind::Soliton1d => Box::new(|u: &StateVector| StateVector {
                values: u
                    .values
                    .iter()
                    .map(|z| Complex64::I * z * z.norm_sqr())
                    .collect(),
            }),
            Kind::Schrodinger2d => {
                let c_coef = 1.0 - 2.0 * std::f64::consts::PI.powi(2);
                let potential: Vec<f64> = (0..grid.unknowns())
                    .map(|r| {
                        let xy = grid.node_coords(r);
                        let cc = (std::f64::consts::PI * xy[0]).cos()
                            * (std::f64::consts::PI * xy[1]).cos();
                        c_coef * (1.0 - cc * cc)
                    })
                    .collect();
                Box::new(move |u: &StateVector| StateVector {
                    values: u
                        .values
                        .iter()
                        .zip(&potential)
                        .map(|(z, &bv)| {
                            let q = bv + c_coef * z.norm_sqr();
                            -Complex64::I * q * z
                        })
                        .collect(),
                })
            }
        }
    }

    pub fn has_exact(&self) -> bool {
        matches!(self.kind, Kind::Soliton1d | Kind::Schrodinger2d)
    }

    /// Sample the closed-form solution on the grid at time t.
    pub fn exact_solution(&self, grid: &GridSpec, t: f64) -> Result<StateVector, ProblemError> {
        match self.kind {
            Kind::Soliton1d => Ok(self.soliton_profile(grid, t)),
            Kind::Schrodinger2d => Ok(self.cosine_profile(grid, t)),
            _ => Err(ProblemError::NoExact(self.name.clone())),
        }
    }

    fn soliton_profile(&self, grid: &GridSpec, t: f64) -> StateVector {
        let a = self.param("a");
        let c = self.param("c");
        let amp = (2.0 * a).sqrt();
        let values = (0..grid.unknowns())
            .map(|r| {
                let x = grid.node_coords(r)[0];
                let phase = 0.5 * c * x - (0.25 * c * c - a) * t;
                let sech = 1.0 / ((a.sqrt() * (x - c * t)).cosh());
                Complex64::from_polar(amp * sech, phase)
            })
            .collect();
        StateVector { values }
    }

    fn cosine_profile(&self, grid: &GridSpec, t: f64) -> StateVector {
        let phase = Complex64::from_polar(1.0, -t);
        let values = (0..grid.unknowns())
            .map(|r| {
                let xy = grid.node_coords(r);
                phase
                    * (std::f64::consts::PI * xy[0]).cos()
                    * (std::f64::consts::PI * xy[1]).cos()
            })
            .collect();
        StateVector { values }
    }
}

/// Trapezoidal total mass of a 1-D single-component wave function.
pub fn mass(state: &StateVector, grid: &GridSpec) -> Result<f64, ProblemError> {
    if grid.d != 1 || grid.s != 1 {
        return Err(ProblemError::UnsupportedDiagnostic);
    }
    let h = grid.h();
    let p = grid.p;
    let v = &state.values;
    let mut sum = 0.5 * (v[0].norm_sqr() + v[p - 1].norm_sqr());
    for vi in &v[1..p - 1] {
        sum += vi.norm_sqr();
    }
    Ok(h * sum)
}

/// Trapezoidal total energy: centered-difference gradient at interior nodes,
/// only the quartic term at the endpoints.
pub fn energy(state: &StateVector, grid: &GridSpec) -> Result<f64, ProblemError> {
    if grid.d != 1 || grid.s != 1 {
        return Err(ProblemError::UnsupportedDiagnostic);
    }
    let h = grid.h();
    let p = grid.p;
    let v = &state.values;
    let quart = |z: &Complex64| z.norm_sqr() * z.norm_sqr();
    let mut sum = -0.25 * (quart(&v[0]) + quart(&v[p - 1]));
    for i in 1..p - 1 {
        let grad = (v[i + 1] - v[i - 1]) / (2.0 * h);
        sum += grad.norm_sqr() - 0.5 * quart(&v[i]);
    }
    Ok(h * sum)
}

/// Values of all components at the grid node nearest to the given point.
pub fn probe(
    state: &StateVector,
    grid: &GridSpec,
    point: &[f64],
) -> Result<Vec<Complex64>, ProblemError> {
    assert_eq!(point.len(), grid.d);
    let mut node = 0usize;
    let mut stride = 1usize;
    for axis in 0..grid.d {
        if point[axis] < grid.lo[axis] - 1e-12 || point[axis] > grid.hi[axis] + 1e-12 {
            return Err(ProblemError::ProbeOutside);
        }
        let idx = (0..grid.p)
            .min_by(|&a, &b| {
                let da = (grid.coord(axis, a) - point[axis]).abs();
                let db = (grid.coord(axis, b) - point[axis]).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        node += idx * stride;
        stride *= grid.p;
    }
    let base = node * grid.s;
    Ok(state.values[base..base + grid.s].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::apply_operator;
    use crate::operators::split_operators;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn no_overrides() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn catalog_is_complete_and_rejects_unknown() {
        for key in catalog_keys() {
            assert!(make_problem(key, &no_overrides()).is_ok(), "{key}");
        }
        assert!(matches!(
            make_problem("gray_scott", &no_overrides()),
            Err(ProblemError::UnknownProblem { .. })
        ));
        let mut bad = BTreeMap::new();
        bad.insert("Q".to_string(), 1.0);
        assert!(matches!(
            make_problem("enzyme", &bad),
            Err(ProblemError::UnknownParam { .. })
        ));
    }

    #[test]
    fn enzyme_reaction_at_one() {
        let prob = make_problem("enzyme", &no_overrides()).unwrap();
        let grid = prob.grid(5).unwrap();
        let f = prob.reaction(&grid);
        let u = StateVector { values: vec![Complex64::ONE; 25] };
        let fu = f(&u);
        for z in &fu.values {
            assert!((z - c(-0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn brusselator_reaction_at_ones() {
        let prob = make_problem("brusselator2d", &no_overrides()).unwrap();
        let grid = prob.grid(3).unwrap();
        let f = prob.reaction(&grid);
        let u = StateVector { values: vec![Complex64::ONE; 18] };
        let fu = f(&u);
        for r in (0..18).step_by(2) {
            assert!((fu.values[r] - c(-2.4, 0.0)).norm() < 1e-13);
            assert!((fu.values[r + 1] - c(2.4, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn soliton_initial_peak() {
        let prob = make_problem("schrodinger1d_soliton", &no_overrides()).unwrap();
        let grid = prob.grid(prob.default_p).unwrap();
        let u0 = prob.initial_state(&grid, 0);
        // x = 0 is a grid node (lo = -80, h = 1/2): index 160
        let peak = u0.values[160];
        assert!((peak.norm() - 0.02f64.sqrt().sqrt().powi(2)).abs() < 1e-12);
        assert!((peak.norm() - (2.0f64 * 0.01).sqrt()).abs() < 1e-12);
        // peak of the exact solution travels at speed c
        let t = 108.0;
        let exact = prob.exact_solution(&grid, t).unwrap();
        let (imax, _) = exact
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let x_peak = grid.coord(0, imax);
        assert!((x_peak - 10.8).abs() <= grid.h());
    }

    #[test]
    fn soliton_mass_energy_match_published_digits() {
        let prob = make_problem("schrodinger1d_soliton", &no_overrides()).unwrap();
        let grid = prob.grid(prob.default_p).unwrap();
        let u0 = prob.initial_state(&grid, 0);
        let m0 = mass(&u0, &grid).unwrap();
        let e0 = energy(&u0, &grid).unwrap();
        assert!((m0 - 0.399_999_954_123_281).abs() < 1e-8, "M(0) = {m0}");
        assert!((e0 - (-0.000_336_760_546_294)).abs() < 1e-9, "E(0) = {e0}");
    }

    #[test]
    fn cosine_exact_solution_values() {
        let prob = make_problem("schrodinger2d_cosine", &no_overrides()).unwrap();
        let grid = prob.grid(5).unwrap();
        let at0 = prob.exact_solution(&grid, 0.0).unwrap();
        // node (0,0) is the first node on the Neumann grid
        assert!((at0.values[0] - Complex64::ONE).norm() < 1e-14);
        let at_pi = prob.exact_solution(&grid, std::f64::consts::PI).unwrap();
        for (a, b) in at_pi.values.iter().zip(&at0.values) {
            assert!((a + b).norm() < 1e-13);
        }
    }

    #[test]
    fn cosine_semidiscrete_residual_is_second_order() {
        // d(Psi)/dt should equal -A Psi + F(Psi) up to O(h^2)
        let prob = make_problem("schrodinger2d_cosine", &no_overrides()).unwrap();
        let mut residuals = Vec::new();
        for p in [20usize, 40] {
            let grid = prob.grid(p).unwrap();
            let parts = split_operators(&grid, &prob.diffusion()).unwrap();
            let f = prob.reaction(&grid);
            let psi = prob.exact_solution(&grid, 0.0).unwrap();
            let mut rhs = f(&psi);
            for a in &parts {
                let au = apply_operator(a, &psi).unwrap();
                for (ri, ai) in rhs.values.iter_mut().zip(&au.values) {
                    *ri -= ai;
                }
            }
            // time derivative of e^{-it}cos(pi x)cos(pi y) at t = 0
            let dpsi: Vec<Complex64> =
                psi.values.iter().map(|z| -Complex64::I * z).collect();
            let res = rhs
                .values
                .iter()
                .zip(&dpsi)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            residuals.push(res);
        }
        let order = (residuals[0] / residuals[1]).log2();
        assert!(order >= 1.7, "observed residual order {order}");
    }

    #[test]
    fn mass_energy_trivial_cases() {
        let grid = GridSpec::unit(1, 11, 1, BoundaryKind::Neumann).unwrap();
        let ones = StateVector { values: vec![Complex64::ONE; 11] };
        assert!((mass(&ones, &grid).unwrap() - 1.0).abs() < 1e-14);
        assert!((energy(&ones, &grid).unwrap() - (-0.5)).abs() < 1e-14);
        let zero = StateVector::zeros(11);
        assert_eq!(mass(&zero, &grid).unwrap(), 0.0);
        assert_eq!(energy(&zero, &grid).unwrap(), 0.0);
        let two = StateVector { values: vec![c(2.0, 0.0); 11] };
        assert!((energy(&two, &grid).unwrap() - (-8.0)).abs() < 1e-13);
        let grid2 = GridSpec::unit(2, 4, 1, BoundaryKind::Neumann).unwrap();
        assert!(mass(&StateVector::zeros(16), &grid2).is_err());
    }

    #[test]
    fn probe_constant_field_and_bounds() {
        let prob = make_problem("brusselator3d", &no_overrides()).unwrap();
        let grid = prob.grid(11).unwrap();
        let mut values = vec![Complex64::ZERO; grid.unknowns()];
        for (r, v) in values.iter_mut().enumerate() {
            *v = if r % 2 == 0 { c(7.0, 0.0) } else { c(-3.0, 0.0) };
        }
        let state = StateVector { values };
        let got = probe(&state, &grid, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(got, vec![c(7.0, 0.0), c(-3.0, 0.0)]);
        assert!(matches!(
            probe(&state, &grid, &[2.0, 0.5, 0.5]),
            Err(ProblemError::ProbeOutside)
        ));
    }

    #[test]
    fn gl_random_field_is_seed_deterministic() {
        let mut overrides = BTreeMap::new();
        overrides.insert("random_init".to_string(), 1.0);
        let prob = make_problem("ginzburg_landau2d", &overrides).unwrap();
        let grid = prob.grid(10).unwrap();
        let a = prob.initial_state(&grid, 42);
        let b = prob.initial_state(&grid, 42);
        let c_ = prob.initial_state(&grid, 43);
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c_.values);
    }

    #[test]
    fn gl_pulse_field_is_bounded_and_real() {
        let prob = make_problem("ginzburg_landau2d", &no_overrides()).unwrap();
        let grid = prob.grid(50).unwrap();
        let u0 = prob.initial_state(&grid, 0);
        // neighboring pulses overlap a little, so the peak sits just above 1
        assert!(u0.max_abs() <= 1.2);
        assert!(u0.max_imag_abs() == 0.0);
    }

    #[test]
    fn diffusion_coefficients_match_problem_family() {
        let gl = make_problem("ginzburg_landau2d", &no_overrides()).unwrap();
        assert_eq!(gl.diffusion().coeffs, vec![c(1.0, 0.0)]);
        let sol = make_problem("schrodinger1d_soliton", &no_overrides()).unwrap();
        assert_eq!(sol.diffusion().coeffs, vec![Complex64::I]);
        let bruss = make_problem("brusselator2d", &no_overrides()).unwrap();
        assert_eq!(bruss.diffusion().coeffs.len(), 2);
    }
}
