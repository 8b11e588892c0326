//! One-particle space: complex functions on a uniform grid over `[0, X_max]`.
//!
//! The grid has `M` points `x_i = i·h`. Functions are stored by value; the
//! inner product is `h·Σ conj(f_i)·g_i`, antilinear in the first slot.
//!
//! Two first-order differences are provided: `diff_forward` (the discrete
//! `d` on the `D(d)` side) and `diff_backward_interior` (the zero-padded
//! backward difference used on the `D(d_*)` side). They satisfy an exact
//! summation-by-parts identity
//!
//! ```text
//! <D f, g> + <f, B g> = -conj(f_0) g_0 + conj(f_{M-1}) g_{M-1}
//! ```
//!
//! which `ibp_residual` evaluates. Their average `diff_symmetric` is
//! skew-adjoint up to the same boundary terms.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};

/// Uniform grid on `[0, M·h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    num_points: usize,
    spacing: f64,
}

impl GridSpec {
    pub fn new(num_points: usize, spacing: f64) -> Result<Self> {
        if num_points < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 points, got {num_points}")));
        }
        if spacing.is_nan() || spacing <= 0.0 || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self { num_points, spacing })
    }

    /// Grid with `num_points` cells covering `[0, x_max)`.
    pub fn covering(num_points: usize, x_max: f64) -> Result<Self> {
        Self::new(num_points, x_max / num_points as f64)
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x_max(&self) -> f64 {
        self.num_points as f64 * self.spacing
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    /// Number of rightmost cells on which test functions vanish: `ceil(M/8)`.
    pub fn trailing_cells(&self) -> usize {
        self.num_points.div_ceil(8)
    }

    /// First index of the trailing zero window.
    pub fn support_end(&self) -> usize {
        self.num_points - self.trailing_cells()
    }

    fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self.num_points != other.num_points || self.spacing != other.spacing {
            return Err(Error::GridMismatch(self.num_points, self.spacing, other.num_points, other.spacing));
        }
        Ok(())
    }
}

/// Which side of the generator a function is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `D(d)`: value at 0 unrestricted.
    D,
    /// `D(d_*)`: value at 0 must vanish.
    DStar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn from_values(spec: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.num_points {
            return Err(Error::LengthMismatch(values.len(), spec.num_points));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParams("non-finite grid value".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn from_real(spec: GridSpec, values: &[f64]) -> Result<Self> {
        Self::from_values(spec, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![C64::new(0.0, 0.0); spec.num_points] }
    }

    /// `values[i] = 1` at a single index.
    pub fn unit(spec: GridSpec, index: usize) -> Result<Self> {
        if index >= spec.num_points {
            return Err(Error::ModeOutOfRange { index, modes: spec.num_points });
        }
        let mut f = Self::zeros(spec);
        f.values[index] = C64::new(1.0, 0.0);
        Ok(f)
    }

    /// The grid function whose mode coefficients are the `index`-th unit
    /// vector (value `1/sqrt(h)` at that index).
    pub fn mode(spec: GridSpec, index: usize) -> Result<Self> {
        let mut f = Self::unit(spec, index)?;
        f.values[index] = C64::new(1.0 / spec.spacing.sqrt(), 0.0);
        Ok(f)
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64) -> C64) -> Self {
        let values = (0..spec.num_points).map(|i| f(spec.x(i))).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `f(0)`, the value at grid index 0.
    /// One past the last nonzero cell (zero for the zero function).
    pub fn support_end(&self) -> usize {
        self.values.iter().rposition(|z| *z != C64::new(0.0, 0.0)).map_or(0, |i| i + 1)
    }

    pub fn at_origin(&self) -> C64 {
        self.values[0]
    }

    /// Mode coefficients `c_j = sqrt(h)·f_j`.
    pub fn mode_coefficients(&self) -> Vec<C64> {
        let s = self.spec.spacing.sqrt();
        self.values.iter().map(|v| v * s).collect()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.spec.same_as(&other.spec)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { spec: self.spec, values })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.spec.spacing * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Apply a one-particle matrix acting on grid values.
    pub fn apply(&self, op: &DMatrix<C64>) -> Result<Self> {
        if op.nrows() != self.len() || op.ncols() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on {} grid points",
                op.nrows(),
                op.ncols(),
                self.len()
            )));
        }
        let values = (0..self.len()).map(|i| (0..self.len()).map(|j| op[(i, j)] * self.values[j]).sum()).collect();
        Ok(Self { spec: self.spec, values })
    }

    /// Check the value conventions of a domain: `f(0) = 0` for `D(d_*)`, and
    /// for both domains the trailing `ceil(M/8)` cells are zero.
    pub fn check_domain(&self, domain: Domain) -> Result<()> {
        if domain == Domain::DStar && self.values[0] != C64::new(0.0, 0.0) {
            return Err(Error::DomainViolation(format!("function in D(d_*) has f(0) = {}", self.values[0])));
        }
        let end = self.spec.support_end();
        if let Some(i) = (end..self.len()).find(|&i| self.values[i] != C64::new(0.0, 0.0)) {
            return Err(Error::DomainViolation(format!(
                "nonzero value at trailing cell {i} (support must end before {end})"
            )));
        }
        Ok(())
    }

    /// Random compliant function: independent complex entries in `[-1, 1]²`
    /// on the admissible support, zero elsewhere.
    pub fn random<R: Rng + ?Sized>(spec: GridSpec, domain: Domain, rng: &mut R) -> Self {
        let start = usize::from(domain == Domain::DStar);
        Self::random_on(spec, start..spec.support_end(), rng)
    }

    /// Random entries on the cells in `cells`, zero elsewhere.
    pub fn random_on<R: Rng + ?Sized>(spec: GridSpec, cells: std::ops::Range<usize>, rng: &mut R) -> Self {
        let (start, end) = (cells.start, cells.end);
        let values = (0..spec.num_points)
            .map(|i| {
                if i >= start && i < end {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        Self { spec, values }
    }
}

pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    f.spec.same_as(&g.spec)?;
    let s: C64 = f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * f.spec.spacing)
}

/// `(S_t f)(x) = f(x - t)` with `t = m·h`.
pub fn shift_forward(f: &GridFunction, m: usize) -> GridFunction {
    let n = f.len();
    let values = (0..n).map(|i| if i >= m { f.values[i - m] } else { C64::new(0.0, 0.0) }).collect();
    GridFunction { spec: f.spec, values }
}

/// `(S_t^* f)(x) = f(x + t)`, truncated at the right edge.
pub fn shift_adjoint(f: &GridFunction, m: usize) -> GridFunction {
    let n = f.len();
    let values = (0..n).map(|i| if i + m < n { f.values[i + m] } else { C64::new(0.0, 0.0) }).collect();
    GridFunction { spec: f.spec, values }
}

pub fn diff_forward(f: &GridFunction) -> GridFunction {
    let n = f.len();
    let inv_h = 1.0 / f.spec.spacing;
    let values =
        (0..n).map(|i| if i + 1 < n { (f.values[i + 1] - f.values[i]) * inv_h } else { C64::new(0.0, 0.0) }).collect();
    GridFunction { spec: f.spec, values }
}

pub fn diff_backward_interior(g: &GridFunction) -> GridFunction {
    let inv_h = 1.0 / g.spec.spacing;
    let values = (0..g.len())
        .map(|i| if i >= 1 { (g.values[i] - g.values[i - 1]) * inv_h } else { C64::new(0.0, 0.0) })
        .collect();
    GridFunction { spec: g.spec, values }
}

/// `(diff_forward + diff_backward_interior) / 2`. Satisfies
/// `<A f, g> + <f, A g> = -conj(f_0) g_0 + conj(f_{M-1}) g_{M-1}` exactly.
pub fn diff_symmetric(f: &GridFunction) -> GridFunction {
    let d = diff_forward(f);
    let b = diff_backward_interior(f);
    let values = d.values.iter().zip(&b.values).map(|(x, y)| (x + y) * 0.5).collect();
    GridFunction { spec: f.spec, values }
}

/// `<Df, g> + <f, Bg> + conj(f_0) g_0 - conj(f_{M-1}) g_{M-1}`; zero in exact
/// arithmetic.
pub fn ibp_residual(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    let last = f.len() - 1;
    let lhs = inner_product(&diff_forward(f), g)? + inner_product(f, &diff_backward_interior(g))?;
    Ok(lhs + f.values[0].conj() * g.values[0] - f.values[last].conj() * g.values[last])
}

/// Matrix of `shift_forward(·, m)` on grid values.
pub fn shift_matrix(spec: GridSpec, m: usize) -> DMatrix<C64> {
    let n = spec.num_points;
    DMatrix::from_fn(n, n, |i, j| if i >= m && j == i - m { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

fn matrix_of(spec: GridSpec, op: impl Fn(&GridFunction) -> GridFunction) -> DMatrix<C64> {
    let n = spec.num_points;
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = op(&GridFunction::unit(spec, j).expect("index in range"));
        for i in 0..n {
            out[(i, j)] = col.values[i];
        }
    }
    out
}

pub fn diff_forward_matrix(spec: GridSpec) -> DMatrix<C64> {
    matrix_of(spec, diff_forward)
}

pub fn diff_backward_matrix(spec: GridSpec) -> DMatrix<C64> {
    matrix_of(spec, diff_backward_interior)
}

pub fn diff_symmetric_matrix(spec: GridSpec) -> DMatrix<C64> {
    matrix_of(spec, diff_symmetric)
}

/// Smooth compactly supported bump `amplitude·φ((x - center)/width)·e^{i·wavenumber·x}`
/// with `φ(u) = exp(1 - 1/(1 - u²))` on `|u| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpParams {
    pub center: f64,
    pub width: f64,
    pub amplitude: C64,
    pub wavenumber: f64,
}

impl BumpParams {
    pub fn eval(&self, x: f64) -> C64 {
        let u = (x - self.center) / self.width;
        if u.abs() >= 1.0 {
            return C64::new(0.0, 0.0);
        }
        let phi = (1.0 - 1.0 / (1.0 - u * u)).exp();
        self.amplitude * phi * C64::from_polar(1.0, self.wavenumber * x)
    }

    /// Random bump fitting in `[0, support_end)` of `x_max = 1` scaled grids.
    /// `D(d)` bumps straddle the origin so `f(0) ≠ 0`; `D(d_*)` bumps start
    /// to the right of it.
    pub fn random<R: Rng + ?Sized>(domain: Domain, support: f64, rng: &mut R) -> Self {
        let amplitude = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let wavenumber = rng.gen_range(-3.0..3.0);
        match domain {
            Domain::D => {
                let width = rng.gen_range(0.3..0.6) * support;
                let center = rng.gen_range(0.0..0.3) * width;
                Self { center, width, amplitude, wavenumber }
            }
            Domain::DStar => {
                let width = rng.gen_range(0.2..0.45) * support;
                let center = width + rng.gen_range(0.0..(support - 2.0 * width));
                Self { center, width, amplitude, wavenumber }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunctionKind {
    /// Bump allowed to be nonzero at the origin.
    BumpDd(BumpParams),
    /// Bump vanishing at the origin (`center - width ≥ 0`).
    BumpDdStar(BumpParams),
    /// `slope·x` on the support window.
    Ramp { slope: f64 },
    /// Indicator of `[0, delta]`: the first `floor(delta/h)` entries are 1.
    Indicator { delta: f64 },
}

pub fn make_test_function(spec: GridSpec, kind: TestFunctionKind) -> Result<GridFunction> {
    let end = spec.support_end();
    let limit = spec.x(end);
    let check_bump = |p: &BumpParams| -> Result<()> {
        if p.width.is_nan() || p.width <= 0.0 || !p.center.is_finite() {
            return Err(Error::InvalidParams(format!("bump width {} center {}", p.width, p.center)));
        }
        if p.center + p.width > limit + 1e-12 {
            return Err(Error::InvalidParams(format!("bump support ends at {} beyond {limit}", p.center + p.width)));
        }
        Ok(())
    };
    let mut f = match kind {
        TestFunctionKind::BumpDd(p) => {
            check_bump(&p)?;
            GridFunction::from_fn(spec, |x| p.eval(x))
        }
        TestFunctionKind::BumpDdStar(p) => {
            check_bump(&p)?;
            if p.center - p.width < 0.0 {
                return Err(Error::InvalidParams("D(d_*) bump must start at x ≥ 0".into()));
            }
            let mut f = GridFunction::from_fn(spec, |x| p.eval(x));
            f.values[0] = C64::new(0.0, 0.0);
            f
        }
        TestFunctionKind::Ramp { slope } => {
            if !slope.is_finite() {
                return Err(Error::InvalidParams("ramp slope".into()));
            }
            GridFunction::from_fn(spec, |x| C64::new(slope * x, 0.0))
        }
        TestFunctionKind::Indicator { delta } => {
            if delta.is_nan() || delta < 0.0 {
                return Err(Error::InvalidParams(format!("indicator width {delta}")));
            }
            let count = (delta / spec.spacing + 1e-9).floor() as usize;
            if count > end {
                return Err(Error::InvalidParams(format!("indicator covers {count} cells, support ends at {end}")));
            }
            let mut f = GridFunction::zeros(spec);
            for v in &mut f.values[..count] {
                *v = C64::new(1.0, 0.0);
            }
            f
        }
    };
    for v in &mut f.values[end..] {
        *v = C64::new(0.0, 0.0);
    }
    Ok(f)
}
