//! Dense superoperators on `D×D` matrices, their Choi matrices, and the
//! completely-positive order.
//!
//! Matrices are vectorized column-major: `vec(X)[i + j·D] = X[i, j]`, and the
//! superoperator's column `i + j·D` is `vec(S(E_ij))`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{hermitian_eigenvalues, max_eigenvalue, min_eigenvalue};

pub const MAX_SUPEROP_DIM: usize = 16;

/// Default PSD tolerance for Choi tests.
pub const CP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuperoperatorMatrix {
    dim: usize,
    mat: DMatrix<C64>,
    tag: String,
}

fn unit(dim: usize, i: usize, j: usize) -> DMatrix<C64> {
    let mut e = DMatrix::zeros(dim, dim);
    e[(i, j)] = C64::new(1.0, 0.0);
    e
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_SUPEROP_DIM {
        return Err(Error::DimensionMismatch(format!("superoperator dimension {dim} outside 1..={MAX_SUPEROP_DIM}")));
    }
    Ok(())
}

impl SuperoperatorMatrix {
    pub fn from_fn(dim: usize, tag: impl Into<String>, map: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> Result<Self> {
        Self::try_from_fn(dim, tag, |x| Ok(map(x)))
    }

    /// Build from a fallible map; the first error is returned.
    pub fn try_from_fn(
        dim: usize,
        tag: impl Into<String>,
        mut map: impl FnMut(&DMatrix<C64>) -> Result<DMatrix<C64>>,
    ) -> Result<Self> {
        check_dim(dim)?;
        let n = dim * dim;
        let mut mat = DMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let image = map(&unit(dim, i, j))?;
                if image.nrows() != dim || image.ncols() != dim {
                    return Err(Error::DimensionMismatch(format!("map returned {}x{}", image.nrows(), image.ncols())));
                }
                let col = i + j * dim;
                for b in 0..dim {
                    for a in 0..dim {
                        mat[(a + b * dim, col)] = image[(a, b)];
                    }
                }
            }
        }
        Ok(Self { dim, mat, tag: tag.into() })
    }

    /// Wrap a `D²×D²` matrix acting on column-major vectorizations.
    pub fn from_matrix(dim: usize, tag: impl Into<String>, mat: DMatrix<C64>) -> Result<Self> {
        check_dim(dim)?;
        if mat.nrows() != dim * dim || mat.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} superoperator for dim {dim}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { dim, mat, tag: tag.into() })
    }

    /// `x ↦ Σ K x K^†`.
    pub fn from_kraus(dim: usize, tag: impl Into<String>, kraus: &[DMatrix<C64>]) -> Result<Self> {
        for k in kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {}x{} for dim {dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        Self::from_fn(dim, tag, |x| kraus.iter().fold(DMatrix::zeros(dim, dim), |acc, k| acc + k * x * k.adjoint()))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, mat: DMatrix::identity(dim * dim, dim * dim), tag: "identity".into() })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, mat: DMatrix::zeros(dim * dim, dim * dim), tag: "zero".into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn apply(&self, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!("{}x{} input for dim {}", x.nrows(), x.ncols(), self.dim)));
        }
        let v = DMatrix::from_column_slice(self.dim * self.dim, 1, x.as_slice());
        let out = &self.mat * v;
        Ok(DMatrix::from_column_slice(self.dim, self.dim, out.as_slice()))
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("superoperators of dim {} and {}", self.dim, other.dim)));
        }
        Ok(())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { dim: self.dim, mat: &self.mat * &other.mat, tag: format!("{}∘{}", self.tag, other.tag) })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { dim: self.dim, mat: &self.mat + &other.mat, tag: self.tag.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { dim: self.dim, mat: &self.mat - &other.mat, tag: format!("{}-{}", self.tag, other.tag) })
    }

    pub fn max_entry_diff(&self, other: &Self) -> Result<f64> {
        self.same_dim(other)?;
        Ok((&self.mat - &other.mat).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Preadjoint (trace-dual) map: `Tr(S_*(ρ) x) = Tr(ρ S(x))`.
    pub fn dual(&self) -> Self {
        // vec(ρ)^T-pairing: Tr(ρ x) = vec(ρ^T)·vec(x); the dual in this basis
        // is P S^T P with P the transpose permutation.
        let d = self.dim;
        let n = d * d;
        let perm = |k: usize| (k % d) * d + k / d;
        let mat = DMatrix::from_fn(n, n, |r, c| self.mat[(perm(c), perm(r))]);
        Self { dim: d, mat, tag: format!("{}_*", self.tag) }
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let n = d * d;
        let mut choi = DMatrix::zeros(n, n);
        for j in 0..d {
            for i in 0..d {
                let col = i + j * d;
                for b in 0..d {
                    for a in 0..d {
                        choi[(i * d + a, j * d + b)] = self.mat[(a + b * d, col)];
                    }
                }
            }
        }
        ChoiMatrix { mat: choi }
    }
}

/// `Σ_ij E_ij ⊗ S(E_ij)`; PSD exactly when `S` is completely positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    mat: DMatrix<C64>,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.mat)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        max_eigenvalue(&self.mat)
    }

    pub fn rank(&self, tol: f64) -> usize {
        hermitian_eigenvalues(&self.mat).iter().filter(|l| l.abs() > tol).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpVerdict {
    pub holds: bool,
    pub min_eigenvalue: f64,
}

pub fn superop_to_choi(s: &SuperoperatorMatrix) -> ChoiMatrix {
    s.to_choi()
}

/// `A ≻ B` iff `A - B` is completely positive (Choi min eigenvalue ≥ -tol).
pub fn cp_order_check(a: &SuperoperatorMatrix, b: &SuperoperatorMatrix, tol: f64) -> Result<CpVerdict> {
    let min_eigenvalue = a.sub(b)?.to_choi().min_eigenvalue();
    Ok(CpVerdict { holds: min_eigenvalue >= -tol, min_eigenvalue })
}

pub fn is_completely_positive(s: &SuperoperatorMatrix, tol: f64) -> CpVerdict {
    let min_eigenvalue = s.to_choi().min_eigenvalue();
    CpVerdict { holds: min_eigenvalue >= -tol, min_eigenvalue }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
        DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn identity_choi_is_maximally_entangled_projector() {
        let d = 3;
        let choi = SuperoperatorMatrix::identity(d).unwrap().to_choi();
        assert_eq!(choi.rank(1e-10), 1);
        assert!((choi.matrix().trace().re - d as f64).abs() < 1e-12);
        assert!((choi.max_eigenvalue() - d as f64).abs() < 1e-12);
    }

    #[test]
    fn kraus_maps_are_cp_with_bounded_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let d = 4;
        let kraus: Vec<_> = (0..2).map(|_| random_matrix(d, &mut rng)).collect();
        let s = SuperoperatorMatrix::from_kraus(d, "k", &kraus).unwrap();
        let choi = s.to_choi();
        assert!(choi.hermiticity_defect() < 1e-12);
        assert!(choi.min_eigenvalue() >= -1e-12);
        assert!(choi.rank(1e-9) <= 2);
        let x = random_matrix(d, &mut rng);
        let direct = kraus.iter().fold(DMatrix::zeros(d, d), |acc, k| acc + k * &x * k.adjoint());
        assert!((s.apply(&x).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn transpose_is_not_cp() {
        let s = SuperoperatorMatrix::from_fn(2, "T", |x| x.transpose()).unwrap();
        let v = is_completely_positive(&s, CP_TOLERANCE);
        assert!(!v.holds);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let d = 3;
        let k = random_matrix(d, &mut rng);
        let a = SuperoperatorMatrix::from_kraus(d, "a", std::slice::from_ref(&k)).unwrap();
        assert!(cp_order_check(&a, &a, CP_TOLERANCE).unwrap().holds);
        assert!(cp_order_check(&a, &SuperoperatorMatrix::zero(d).unwrap(), CP_TOLERANCE).unwrap().holds);
        assert!(!cp_order_check(&SuperoperatorMatrix::zero(d).unwrap(), &a, CP_TOLERANCE).unwrap().holds);
        let k2 = random_matrix(d, &mut rng);
        let b = SuperoperatorMatrix::from_kraus(d, "b", std::slice::from_ref(&k2)).unwrap();
        let x = random_matrix(d, &mut rng);
        let ab = a.compose(&b).unwrap();
        let direct = a.apply(&b.apply(&x).unwrap()).unwrap();
        assert!((ab.apply(&x).unwrap() - direct).norm() < 1e-10);
    }

    #[test]
    fn dual_pairs_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let d = 3;
        let ks: Vec<_> = (0..2).map(|_| random_matrix(d, &mut rng)).collect();
        let s = SuperoperatorMatrix::from_fn(d, "s", |x| &ks[0] * x * &ks[1]).unwrap();
        let rho = random_matrix(d, &mut rng);
        let x = random_matrix(d, &mut rng);
        let lhs = (s.dual().apply(&rho).unwrap() * &x).trace();
        let rhs = (&rho * s.apply(&x).unwrap()).trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
