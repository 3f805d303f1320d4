//! Discrete Laplacian bands and the per-axis split operators.
//!
//! The d-dimensional diffusion operator is never materialized. Each split
//! factor is a banded matrix with three (Dirichlet/Neumann) or five
//! (periodic) occupied diagonals, stored as offset/band pairs. Bands hold the
//! fully assembled entries including the diffusion coefficient, so downstream
//! solver code never needs the grid or the coefficients again.

use num_complex::Complex64;
use thiserror::Error;

use crate::oracle::DenseMat;

/// Guard for test-oracle dense materialization.
pub const DENSE_GUARD: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("grid needs at least 3 points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("dimension must be 1..=3, got {0}")]
    BadDimension(usize),
    #[error("component count must be >= 1")]
    NoComponents,
    #[error("mesh width must be positive, got {0}")]
    BadMeshWidth(f64),
    #[error("axis {axis} out of range for dimension {d}")]
    AxisOutOfRange { axis: usize, d: usize },
    #[error("diffusion coefficient {index} has negative real part")]
    NegativeDiffusion { index: usize },
    #[error("expected {s} diffusion coefficients, got {got}")]
    DiffusionCount { s: usize, got: usize },
    #[error("operand length {got} does not match operator size {expect}")]
    SizeMismatch { expect: usize, got: usize },
    #[error("refusing to materialize {0} unknowns densely (guard {DENSE_GUARD})")]
    DenseGuard(usize),
    #[error("domain bounds degenerate on axis {0}")]
    BadBounds(usize),
}

/// Boundary condition applied on every face of the box domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Periodic,
}

impl BoundaryKind {
    pub fn tag(self) -> char {
        match self {
            BoundaryKind::Dirichlet => 'D',
            BoundaryKind::Neumann => 'N',
            BoundaryKind::Periodic => 'P',
        }
    }

    pub fn from_tag(c: char) -> Option<Self> {
        match c {
            'D' => Some(BoundaryKind::Dirichlet),
            'N' => Some(BoundaryKind::Neumann),
            'P' => Some(BoundaryKind::Periodic),
            _ => None,
        }
    }
}

/// Equidistant tensor grid on a box, `p` unknowns per axis, `s` components.
///
/// Unknown layout is component-fastest:
/// `index(c, i1, .., id) = c + s*(i1 + p*(i2 + p*i3))`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub d: usize,
    pub p: usize,
    pub s: usize,
    pub bc: BoundaryKind,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridSpec {
    pub fn new(
        d: usize,
        p: usize,
        s: usize,
        bc: BoundaryKind,
        lo: Vec<f64>,
        hi: Vec<f64>,
    ) -> Result<Self, OperatorError> {
        if !(1..=3).contains(&d) {
            return Err(OperatorError::BadDimension(d));
        }
        if p < 3 {
            return Err(OperatorError::TooFewPoints(p));
        }
        if s < 1 {
            return Err(OperatorError::NoComponents);
        }
        assert_eq!(lo.len(), d);
        assert_eq!(hi.len(), d);
        for axis in 0..d {
            if !(hi[axis] - lo[axis]).is_finite() || hi[axis] <= lo[axis] {
                return Err(OperatorError::BadBounds(axis + 1));
            }
        }
        Ok(GridSpec { d, p, s, bc, lo, hi })
    }

    /// Unit box `[0,1]^d` shorthand.
    pub fn unit(d: usize, p: usize, s: usize, bc: BoundaryKind) -> Result<Self, OperatorError> {
        GridSpec::new(d, p, s, bc, vec![0.0; d], vec![1.0; d])
    }

    /// Mesh width along `axis` (0-based). The relation between `p` and `h`
    /// depends on the boundary condition: interior-only nodes for Dirichlet,
    /// boundary-inclusive nodes for Neumann, a fundamental cell for periodic.
    pub fn h_axis(&self, axis: usize) -> f64 {
        let width = self.hi[axis] - self.lo[axis];
        match self.bc {
            BoundaryKind::Dirichlet => width / (self.p + 1) as f64,
            BoundaryKind::Neumann => width / (self.p - 1) as f64,
            BoundaryKind::Periodic => width / self.p as f64,
        }
    }

    /// Mesh width of the first axis; all axes share it on admissible grids.
    pub fn h(&self) -> f64 {
        self.h_axis(0)
    }

    /// Total unknown count `m = s * p^d`.
    pub fn unknowns(&self) -> usize {
        self.s * self.p.pow(self.d as u32)
    }

    /// Physical coordinate of node index `i` along `axis` (both 0-based).
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let h = self.h_axis(axis);
        match self.bc {
            BoundaryKind::Dirichlet => self.lo[axis] + (i as f64 + 1.0) * h,
            BoundaryKind::Neumann | BoundaryKind::Periodic => self.lo[axis] + i as f64 * h,
        }
    }

    /// Decompose a flat unknown index into (component, node indices).
    pub fn split_index(&self, r: usize) -> (usize, [usize; 3]) {
        let c = r % self.s;
        let mut q = r / self.s;
        let mut idx = [0usize; 3];
        for item in idx.iter_mut().take(self.d) {
            *item = q % self.p;
            q /= self.p;
        }
        (c, idx)
    }

    /// Coordinates of the node holding unknown `r` (length `d`).
    pub fn node_coords(&self, r: usize) -> Vec<f64> {
        let (_, idx) = self.split_index(r);
        (0..self.d).map(|a| self.coord(a, idx[a])).collect()
    }
}

/// Per-component diffusion coefficients. Complex entries carry problems whose
/// natural form couples two real components through a rotation (nonlinear
/// Schrodinger, Ginzburg-Landau); purely real problems have zero imaginary
/// parts.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    pub coeffs: Vec<Complex64>,
}

impl DiffusionSpec {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, OperatorError> {
        for (i, c) in coeffs.iter().enumerate() {
            if c.re < 0.0 {
                return Err(OperatorError::NegativeDiffusion { index: i });
            }
        }
        Ok(DiffusionSpec { coeffs })
    }

    pub fn scalar(d: f64) -> Self {
        DiffusionSpec { coeffs: vec![Complex64::new(d, 0.0)] }
    }

    pub fn uniform(d: f64, s: usize) -> Self {
        DiffusionSpec { coeffs: vec![Complex64::new(d, 0.0); s] }
    }
}

/// Flattened field of `s` components at `p^d` nodes, component-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(m: usize) -> Self {
        StateVector { values: vec![Complex64::ZERO; m] }
    }

    pub fn from_real(v: &[f64]) -> Self {
        StateVector { values: v.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Max-norm of the difference.
    pub fn linf_distance(&self, other: &StateVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Unnormalized Euclidean norm of the difference.
    pub fn l2_distance(&self, other: &StateVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One split factor `A_axis` as an offset-banded matrix.
///
/// `bands[j][r]` is the entry at row `r`, column `r + offsets[j]`, zero-padded
/// where the column index falls outside the matrix or the 1-D stencil crosses
/// a block boundary.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    pub m: usize,
    pub axis: usize,
    pub offsets: Vec<i64>,
    pub bands: Vec<Vec<Complex64>>,
}

impl BandedOperator {
    /// All-zero operator of size `m` (a degenerate axis).
    pub fn zero(m: usize, axis: usize) -> Self {
        BandedOperator {
            m,
            axis,
            offsets: vec![0],
            bands: vec![vec![Complex64::ZERO; m]],
        }
    }

    pub fn band(&self, offset: i64) -> Option<&[Complex64]> {
        self.offsets
            .iter()
            .position(|&o| o == offset)
            .map(|j| self.bands[j].as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.bands.iter().all(|b| b.iter().all(|z| *z == Complex64::ZERO))
    }

    /// Largest row sum of entry magnitudes (the infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.m)
            .map(|r| self.bands.iter().map(|b| b[r].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// The 1-D discrete Laplacian band `B_p` approximating `-d²/dx²`:
/// main diagonal `2/h²`, off-diagonals `-1/h²`, with the boundary rows
/// modified per boundary condition (doubled first/last off-diagonal entries
/// for Neumann, wraparound corner entries on offsets `±(p-1)` for periodic).
pub fn laplacian_band(p: usize, bc: BoundaryKind, h: f64) -> Result<BandedOperator, OperatorError> {
    // p >= 2 is accepted here: the smallest documented example is 2x2.
    if p < 2 {
        return Err(OperatorError::TooFewPoints(p));
    }
    if !(h > 0.0) {
        return Err(OperatorError::BadMeshWidth(h));
    }
    let w = 1.0 / (h * h);
    let c = |x: f64| Complex64::new(x, 0.0);
    let main = vec![c(2.0 * w); p];
    let mut upper = vec![c(-w); p];
    let mut lower = vec![c(-w); p];
    upper[p - 1] = Complex64::ZERO; // row p-1 has no +1 neighbor
    lower[0] = Complex64::ZERO;
    if bc == BoundaryKind::Neumann {
        upper[0] = c(-2.0 * w);
        lower[p - 1] = c(-2.0 * w);
    }
    let (offsets, bands) = match bc {
        BoundaryKind::Dirichlet | BoundaryKind::Neumann => {
            (vec![-1i64, 0, 1], vec![lower, main, upper])
        }
        BoundaryKind::Periodic => {
            let q = p as i64 - 1;
            let mut wrap_up = vec![Complex64::ZERO; p];
            let mut wrap_lo = vec![Complex64::ZERO; p];
            wrap_up[0] = c(-w); // entry (0, p-1)
            wrap_lo[p - 1] = c(-w); // entry (p-1, 0)
            (
                vec![-q, -1, 0, 1, q],
                vec![wrap_lo, lower, main, upper, wrap_up],
            )
        }
    };
    Ok(BandedOperator { m: p, axis: 1, offsets, bands })
}

/// The split operator `A_axis` (1-based axis), i.e. the Kronecker lift of the
/// 1-D Laplacian band along one direction, scaled per component by the
/// diffusion coefficients. Band offsets are the 1-D offsets times
/// `s * p^(axis-1)`.
pub fn split_operator(
    grid: &GridSpec,
    diff: &DiffusionSpec,
    axis: usize,
) -> Result<BandedOperator, OperatorError> {
    if axis < 1 || axis > grid.d {
        return Err(OperatorError::AxisOutOfRange { axis, d: grid.d });
    }
    if diff.coeffs.len() != grid.s {
        return Err(OperatorError::DiffusionCount { s: grid.s, got: diff.coeffs.len() });
    }
    let one_d = laplacian_band(grid.p, grid.bc, grid.h_axis(axis - 1))?;
    let m = grid.unknowns();
    let stride = (grid.s * grid.p.pow((axis - 1) as u32)) as i64;
    let mut offsets = Vec::with_capacity(one_d.offsets.len());
    let mut bands = Vec::with_capacity(one_d.offsets.len());
    for (j, &o1) in one_d.offsets.iter().enumerate() {
        offsets.push(o1 * stride);
        let src = &one_d.bands[j];
        let mut band = vec![Complex64::ZERO; m];
        for (r, item) in band.iter_mut().enumerate() {
            let c = r % grid.s;
            let i_axis = (r / stride as usize) % grid.p;
            *item = diff.coeffs[c] * src[i_axis];
        }
        bands.push(band);
    }
    Ok(BandedOperator { m, axis, offsets, bands })
}

/// All split operators `A_1 .. A_d` of a grid.
pub fn split_operators(
    grid: &GridSpec,
    diff: &DiffusionSpec,
) -> Result<Vec<BandedOperator>, OperatorError> {
    (1..=grid.d).map(|axis| split_operator(grid, diff, axis)).collect()
}

/// Banded matrix-vector product `y = A x`.
pub fn apply_operator(a: &BandedOperator, x: &StateVector) -> Result<StateVector, OperatorError> {
    if x.len() != a.m {
        return Err(OperatorError::SizeMismatch { expect: a.m, got: x.len() });
    }
    let mut y = vec![Complex64::ZERO; a.m];
    for (j, &off) in a.offsets.iter().enumerate() {
        let band = &a.bands[j];
        for r in 0..a.m {
            let col = r as i64 + off;
            if (0..a.m as i64).contains(&col) {
                y[r] += band[r] * x.values[col as usize];
            }
        }
    }
    Ok(StateVector { values: y })
}

/// Full matrix with every band placed at its offset. Test oracle only; the
/// solvers never touch this path.
pub fn dense_materialize(a: &BandedOperator) -> Result<DenseMat, OperatorError> {
    if a.m > DENSE_GUARD {
        return Err(OperatorError::DenseGuard(a.m));
    }
    let mut mat = DenseMat::zeros(a.m);
    for (j, &off) in a.offsets.iter().enumerate() {
        for r in 0..a.m {
            let col = r as i64 + off;
            if (0..a.m as i64).contains(&col) {
                mat[(r, col as usize)] = a.bands[j][r];
            }
        }
    }
    Ok(mat)
}

/// Re-extract offset bands from a dense matrix (round-trip check helper).
pub fn bands_from_dense(mat: &DenseMat, offsets: &[i64], axis: usize) -> BandedOperator {
    let m = mat.n();
    let mut bands = Vec::with_capacity(offsets.len());
    for &off in offsets {
        let mut band = vec![Complex64::ZERO; m];
        for (r, item) in band.iter_mut().enumerate() {
            let col = r as i64 + off;
            if (0..m as i64).contains(&col) {
                *item = mat[(r, col as usize)];
            }
        }
        bands.push(band);
    }
    BandedOperator { m, axis, offsets: offsets.to_vec(), bands }
}
