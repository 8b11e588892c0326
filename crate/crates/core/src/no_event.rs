//! Finite-dimensional no-event semigroups `ρ ↦ T_t ρ T_t^†` with
//! `T_t = exp(tK)`, perturbations built from coupling operators `L_j`, the
//! excessive map `Θ`, and the measure it generates.

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::operator::{hermitian_eigenvalues, max_eigenvalue};
use crate::superop::{SuperoperatorMatrix, MAX_SUPEROP_DIM};

pub type Matrix = DMatrix<C64>;

/// Slack for the dissipativity and admissibility inequalities.
pub const ADMISSIBILITY_SLACK: f64 = 1e-12;

const QUADRATURE_DEGREE: usize = 16;
const DECAY_FLOOR: f64 = 1e-14;
const MAX_HORIZON: f64 = 1e6;

fn check_square(m: &Matrix, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("{what} is {}x{}, expected {dim}x{dim}", m.nrows(), m.ncols())));
    }
    Ok(())
}

fn random_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// `K` with `K + K^† ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeGenerator {
    k: Matrix,
}

impl DissipativeGenerator {
    pub fn new(k: Matrix) -> Result<Self> {
        let d = k.nrows();
        if d == 0 || d > MAX_SUPEROP_DIM {
            return Err(Error::DimensionMismatch(format!("generator dimension {d} outside 1..={MAX_SUPEROP_DIM}")));
        }
        check_square(&k, d, "K")?;
        let top = max_eigenvalue(&(&k + k.adjoint()));
        if top > ADMISSIBILITY_SLACK {
            return Err(Error::InvalidParams(format!("K + K^† has eigenvalue {top:e} > 0")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// `T_t = exp(tK)`.
    pub fn semigroup(&self, t: f64) -> Result<Matrix> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        Ok((&self.k * C64::new(t, 0.0)).exp())
    }

    /// `L(ρ) = Kρ + ρK^†`.
    pub fn generator(&self, rho: &Matrix) -> Result<Matrix> {
        check_square(rho, self.dim(), "ρ")?;
        Ok(&self.k * rho + rho * self.k.adjoint())
    }
}

/// Coupling operators `L_j` with `Σ L_j^† L_j + K + K^† ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingFamily {
    ls: Vec<Matrix>,
}

impl CouplingFamily {
    pub fn new(ls: Vec<Matrix>, generator: &DissipativeGenerator) -> Result<Self> {
        let d = generator.dim();
        for l in &ls {
            check_square(l, d, "L_j")?;
        }
        let family = Self { ls };
        let margin = family.admissibility_margin(generator);
        if margin > ADMISSIBILITY_SLACK {
            return Err(Error::InvalidParams(format!("Σ L^†L + K + K^† has eigenvalue {margin:e} > 0")));
        }
        Ok(family)
    }

    pub fn ls(&self) -> &[Matrix] {
        &self.ls
    }

    /// Largest eigenvalue of `Σ L_j^† L_j + K + K^†`.
    pub fn admissibility_margin(&self, generator: &DissipativeGenerator) -> f64 {
        let k = generator.k();
        max_eigenvalue(&(self.effect(k.nrows()) + k + k.adjoint()))
    }

    /// `Σ L_j^† L_j`.
    pub fn effect(&self, dim: usize) -> Matrix {
        self.ls.iter().fold(Matrix::zeros(dim, dim), |acc, l| acc + l.adjoint() * l)
    }

    /// `Δ(ρ) = Σ L_j ρ L_j^†`.
    pub fn schrodinger(&self, rho: &Matrix) -> Matrix {
        let d = rho.nrows();
        self.ls.iter().fold(Matrix::zeros(d, d), |acc, l| acc + l * rho * l.adjoint())
    }

    /// `Δ^*(x) = Σ L_j^† x L_j`.
    pub fn heisenberg(&self, x: &Matrix) -> Matrix {
        let d = x.nrows();
        self.ls.iter().fold(Matrix::zeros(d, d), |acc, l| acc + l.adjoint() * x * l)
    }
}

/// Random admissible pair: `K = -iH - ½ Σ L^†L - ½ c I` with `c ≥ 0`.
pub fn random_admissible<R: Rng + ?Sized>(
    d: usize,
    couplings: usize,
    damping: f64,
    rng: &mut R,
) -> Result<(DissipativeGenerator, CouplingFamily)> {
    if damping < 0.0 {
        return Err(Error::InvalidParams(format!("damping {damping} < 0")));
    }
    let ls: Vec<Matrix> = (0..couplings).map(|_| random_matrix(d, rng)).collect();
    let a = random_matrix(d, rng);
    let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    let effect = ls.iter().fold(Matrix::zeros(d, d), |acc, l| acc + l.adjoint() * l);
    let k =
        h * C64::new(0.0, -1.0) - effect * C64::new(0.5, 0.0) - Matrix::identity(d, d) * C64::new(0.5 * damping, 0.0);
    let generator = DissipativeGenerator::new(k)?;
    let family = CouplingFamily::new(ls, &generator)?;
    Ok((generator, family))
}

/// `T_t ρ T_t^†`.
pub fn no_event_evolve(t: f64, generator: &DissipativeGenerator, rho: &Matrix) -> Result<Matrix> {
    check_square(rho, generator.dim(), "ρ")?;
    let tt = generator.semigroup(t)?;
    Ok(&tt * rho * tt.adjoint())
}

/// `Σ_j |L_j ψ><L_j ξ|`.
pub fn delta_from_couplings(ls: &CouplingFamily, psi: &DVector<C64>, xi: &DVector<C64>) -> Result<Matrix> {
    let d = psi.len();
    if xi.len() != d {
        return Err(Error::LengthMismatch(d, xi.len()));
    }
    let mut out = Matrix::zeros(d, d);
    for l in ls.ls() {
        check_square(l, d, "L_j")?;
        out += (l * psi) * (l * xi).adjoint();
    }
    Ok(out)
}

/// Block matrix `[Δ(|ψ_a><ψ_b|)]_{ab}`; positive semidefinite for any family.
pub fn delta_block_matrix(ls: &CouplingFamily, psis: &[DVector<C64>]) -> Result<Matrix> {
    let n = psis.len();
    let d = psis.first().map_or(0, |p| p.len());
    let mut out = Matrix::zeros(n * d, n * d);
    for a in 0..n {
        for b in 0..n {
            let block = delta_from_couplings(ls, &psis[a], &psis[b])?;
            out.view_mut((a * d, b * d), (d, d)).copy_from(&block);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaMethod {
    /// Solve `K^†Θ + ΘK = -Σ L^† x L`.
    Lyapunov,
    /// Integrate `∫_0^τ T_t^† (Σ L^† x L) T_t dt` up to a decay horizon.
    Quadrature,
}

/// `∫_a^b T_t^† y T_t dt` by composite Gauss-Legendre on panels of width at
/// most `1/(2‖K‖)`.
fn integrate_flow(generator: &DissipativeGenerator, y: &Matrix, a: f64, b: f64) -> Result<Matrix> {
    let d = generator.dim();
    let mut total = Matrix::zeros(d, d);
    if b <= a {
        return Ok(total);
    }
    let norm_k = generator.k().norm().max(1e-3);
    let panel = 0.5 / norm_k;
    let panels = ((b - a) / panel).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let rule = GaussLegendre::new(QUADRATURE_DEGREE).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let nodes: Vec<(Matrix, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| ((generator.k() * C64::new(0.5 * (x + 1.0) * width, 0.0)).exp(), 0.5 * w * width))
        .collect();
    let step = generator.semigroup(width)?;
    let mut start = generator.semigroup(a)?;
    for _ in 0..panels {
        for (e, w) in &nodes {
            let tt = &start * e;
            total += (tt.adjoint() * y * &tt) * C64::new(*w, 0.0);
        }
        start = &start * &step;
    }
    Ok(total)
}

/// Smallest `τ = 2^k` with `‖T_τ^† y T_τ‖ ≤ 1e-14 (1 + ‖y‖)`.
fn decay_horizon(generator: &DissipativeGenerator, y: &Matrix) -> Result<f64> {
    let scale = 1.0 + y.norm();
    let mut tau: f64 = 1.0;
    loop {
        let tt = generator.semigroup(tau)?;
        let norm = (tt.adjoint() * y * &tt).norm();
        if norm <= DECAY_FLOOR * scale {
            return Ok(tau);
        }
        if tau >= MAX_HORIZON {
            return Err(Error::NonDecaying { horizon: tau, norm });
        }
        tau *= 2.0;
    }
}

fn sylvester_matrix(k: &Matrix) -> Matrix {
    // vec(K^†Θ + ΘK) = (I ⊗ K^† + K^T ⊗ I) vec(Θ), column-major
    let d = k.nrows();
    let id = Matrix::identity(d, d);
    id.kronecker(&k.adjoint()) + k.transpose().kronecker(&id)
}

/// `Θ(x) = ∫_0^∞ T_t^† (Σ L_j^† x L_j) T_t dt`.
pub fn theta_excessive(
    generator: &DissipativeGenerator,
    ls: &CouplingFamily,
    x: &Matrix,
    method: ThetaMethod,
) -> Result<Matrix> {
    let d = generator.dim();
    check_square(x, d, "x")?;
    let y = ls.heisenberg(x);
    match method {
        ThetaMethod::Lyapunov => {
            let s = sylvester_matrix(generator.k());
            let sv = s.singular_values();
            let (lo, hi) = (sv.min(), sv.max());
            if lo <= 1e-12 * hi.max(1.0) {
                return Err(Error::SingularSylvester(lo));
            }
            let rhs = DVector::from_column_slice(y.as_slice()) * C64::new(-1.0, 0.0);
            let sol = s.lu().solve(&rhs).ok_or(Error::SingularSylvester(lo))?;
            Ok(Matrix::from_column_slice(d, d, sol.as_slice()))
        }
        ThetaMethod::Quadrature => {
            if y.norm() == 0.0 {
                return Ok(Matrix::zeros(d, d));
            }
            let tau = decay_horizon(generator, &y)?;
            integrate_flow(generator, &y, 0.0, tau)
        }
    }
}

/// Lyapunov solve, falling back to quadrature when the Sylvester operator is
/// singular.
pub fn theta_auto(generator: &DissipativeGenerator, ls: &CouplingFamily, x: &Matrix) -> Result<(Matrix, ThetaMethod)> {
    match theta_excessive(generator, ls, x, ThetaMethod::Lyapunov) {
        Ok(theta) => Ok((theta, ThetaMethod::Lyapunov)),
        Err(Error::SingularSylvester(_)) => {
            Ok((theta_excessive(generator, ls, x, ThetaMethod::Quadrature)?, ThetaMethod::Quadrature))
        }
        Err(e) => Err(e),
    }
}

pub fn theta_superoperator(
    generator: &DissipativeGenerator,
    ls: &CouplingFamily,
    method: ThetaMethod,
) -> Result<SuperoperatorMatrix> {
    SuperoperatorMatrix::try_from_fn(generator.dim(), "theta", |x| theta_excessive(generator, ls, x, method))
}

/// Heisenberg no-event flow `y ↦ T_t^† y T_t`.
pub fn heisenberg_flow(generator: &DissipativeGenerator, t: f64) -> Result<SuperoperatorMatrix> {
    let tt = generator.semigroup(t)?;
    SuperoperatorMatrix::from_fn(generator.dim(), format!("phi_{t}"), |y| tt.adjoint() * y * &tt)
}

fn check_interval(t: f64, s: f64) -> Result<()> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if s < t {
        return Err(Error::InvalidParams(format!("interval [{t}, {s}) is reversed")));
    }
    Ok(())
}

/// `M([t,s)) = Φ_t∘Θ - Φ_s∘Θ`.
pub fn measure_from_theta(
    generator: &DissipativeGenerator,
    ls: &CouplingFamily,
    t: f64,
    s: f64,
    method: ThetaMethod,
) -> Result<SuperoperatorMatrix> {
    check_interval(t, s)?;
    let theta = theta_superoperator(generator, ls, method)?;
    let a = heisenberg_flow(generator, t)?.compose(&theta)?;
    let b = heisenberg_flow(generator, s)?.compose(&theta)?;
    Ok(a.sub(&b)?.with_tag(format!("M[{t},{s})")))
}

/// `x ↦ ∫_t^s T_r^† (Σ L^† x L) T_r dr` by composite Gauss-Legendre.
pub fn measure_quadrature(
    generator: &DissipativeGenerator,
    ls: &CouplingFamily,
    t: f64,
    s: f64,
) -> Result<SuperoperatorMatrix> {
    check_interval(t, s)?;
    SuperoperatorMatrix::try_from_fn(generator.dim(), format!("quad[{t},{s})"), |x| {
        integrate_flow(generator, &ls.heisenberg(x), t, s)
    })
}

/// Spectral norm `‖T_t‖`.
pub fn contraction_norm(generator: &DissipativeGenerator, t: f64) -> Result<f64> {
    Ok(generator.semigroup(t)?.singular_values().max())
}

/// Rank of a Hermitian matrix at relative tolerance `tol`.
pub fn numerical_rank(m: &Matrix, tol: f64) -> usize {
    let ev = hermitian_eigenvalues(m);
    let top = ev.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    ev.iter().filter(|l| l.abs() > tol * top.max(f64::MIN_POSITIVE)).count()
}
