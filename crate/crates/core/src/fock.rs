//! Antisymmetric Fock space over the grid modes.
//!
//! Basis states are occupation bitmasks: bit `k` set means mode `k` is
//! occupied, and the canonical ordering is by increasing mode index, so a
//! mask lists `|j_1 … j_n>` with `j_1 < … < j_n`. Ladder operators use the
//! Jordan–Wigner sign `(-1)^(occupied modes below k)`.
//!
//! Vectors are stored sparsely (`BTreeMap` keyed by mask) so that few-particle
//! states on grids with up to 128 modes stay cheap. Dense operators
//! (`FockOperator`) are built only for `modes ≤ DENSE_MODE_LIMIT`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

pub type Mask = u128;

/// Dense operator on the full `2^M`-dimensional Fock space.
pub type FockOperator = DMatrix<C64>;

pub const MAX_MODES: usize = 128;
pub const DENSE_MODE_LIMIT: usize = 12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
fn bit(k: usize) -> Mask {
    1 << k
}

#[inline]
fn parity_below(mask: Mask, k: usize) -> f64 {
    if (mask & (bit(k) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn dense_dim(modes: usize) -> Result<usize> {
    if modes > DENSE_MODE_LIMIT {
        return Err(Error::TooManyModes { modes, limit: DENSE_MODE_LIMIT });
    }
    Ok(1 << modes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    modes: usize,
    amps: BTreeMap<Mask, C64>,
}

impl FockVector {
    pub fn zero(modes: usize) -> Self {
        assert!(modes <= MAX_MODES, "at most {MAX_MODES} modes");
        Self { modes, amps: BTreeMap::new() }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::basis(modes, 0)
    }

    pub fn basis(modes: usize, mask: Mask) -> Self {
        let mut v = Self::zero(modes);
        v.amps.insert(mask, ONE);
        v
    }

    /// Basis state from a list of occupied modes (0-based, any order is
    /// sorted first; repeated modes give the zero vector).
    pub fn occupied(modes: usize, occupied: &[usize]) -> Result<Self> {
        let mut mask: Mask = 0;
        for &k in occupied {
            if k >= modes {
                return Err(Error::ModeOutOfRange { index: k, modes });
            }
            if mask & bit(k) != 0 {
                return Ok(Self::zero(modes));
            }
            mask |= bit(k);
        }
        Ok(Self::basis(modes, mask))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitude(&self, mask: Mask) -> C64 {
        self.amps.get(&mask).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mask, C64)> + '_ {
        self.amps.iter().map(|(&m, &a)| (m, a))
    }

    pub fn nnz(&self) -> usize {
        self.amps.len()
    }

    fn push(&mut self, mask: Mask, amp: C64) {
        *self.amps.entry(mask).or_insert(ZERO) += amp;
    }

    pub fn axpy(&mut self, c: C64, other: &FockVector) {
        debug_assert_eq!(self.modes, other.modes);
        for (&m, &a) in &other.amps {
            self.push(m, c * a);
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { modes: self.modes, amps: self.amps.iter().map(|(&m, &a)| (m, c * a)).collect() }
    }

    pub fn sub(&self, other: &FockVector) -> Self {
        let mut out = self.clone();
        out.axpy(-ONE, other);
        out
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        let (small, large, flip) =
            if self.amps.len() <= other.amps.len() { (self, other, false) } else { (other, self, true) };
        let mut s = ZERO;
        for (m, a) in &small.amps {
            if let Some(b) = large.amps.get(m) {
                s += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Particle numbers present with nonzero amplitude.
    pub fn particle_numbers(&self) -> Vec<u32> {
        let mut n: Vec<u32> = self.amps.iter().filter(|(_, a)| a.norm() > 0.0).map(|(m, _)| m.count_ones()).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn to_dense(&self) -> Result<DVector<C64>> {
        let dim = dense_dim(self.modes)?;
        let mut out = DVector::zeros(dim);
        for (&m, &a) in &self.amps {
            out[m as usize] = a;
        }
        Ok(out)
    }

    pub fn from_dense(modes: usize, v: &DVector<C64>) -> Result<Self> {
        let dim = dense_dim(modes)?;
        if v.len() != dim {
            return Err(Error::LengthMismatch(v.len(), dim));
        }
        let mut out = Self::zero(modes);
        for (i, &a) in v.iter().enumerate() {
            if a != ZERO {
                out.amps.insert(i as Mask, a);
            }
        }
        Ok(out)
    }
}

/// Anything that acts linearly on Fock vectors.
pub trait FockMap {
    fn apply(&self, v: &FockVector) -> Result<FockVector>;
}

impl FockMap for FockOperator {
    fn apply(&self, v: &FockVector) -> Result<FockVector> {
        let d = v.to_dense()?;
        if self.ncols() != d.len() {
            return Err(Error::DimensionMismatch(format!("{}x{} on {}", self.nrows(), self.ncols(), d.len())));
        }
        FockVector::from_dense(v.modes, &(self * d))
    }
}

/// Identity map.
pub struct Identity;

impl FockMap for Identity {
    fn apply(&self, v: &FockVector) -> Result<FockVector> {
        Ok(v.clone())
    }
}

fn check_mode(k: usize, modes: usize) -> Result<()> {
    if k >= modes {
        return Err(Error::ModeOutOfRange { index: k, modes });
    }
    Ok(())
}

pub fn annihilate_mode(k: usize, v: &FockVector) -> Result<FockVector> {
    check_mode(k, v.modes)?;
    let mut out = FockVector::zero(v.modes);
    for (&m, &a) in &v.amps {
        if m & bit(k) != 0 {
            out.push(m ^ bit(k), a * parity_below(m, k));
        }
    }
    Ok(out)
}

pub fn create_mode(k: usize, v: &FockVector) -> Result<FockVector> {
    check_mode(k, v.modes)?;
    let mut out = FockVector::zero(v.modes);
    for (&m, &a) in &v.amps {
        if m & bit(k) == 0 {
            out.push(m | bit(k), a * parity_below(m, k));
        }
    }
    Ok(out)
}

fn check_coeffs(coeffs: &[C64], v: &FockVector) -> Result<()> {
    if coeffs.len() != v.modes {
        return Err(Error::LengthMismatch(coeffs.len(), v.modes));
    }
    Ok(())
}

/// `Σ_k conj(c_k) a_k` applied to `v`.
pub fn annihilate_coeffs(coeffs: &[C64], v: &FockVector) -> Result<FockVector> {
    check_coeffs(coeffs, v)?;
    let mut out = FockVector::zero(v.modes);
    for (&m, &a) in &v.amps {
        let mut rest = m;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let c = coeffs[k];
            if c != ZERO {
                out.push(m ^ bit(k), c.conj() * a * parity_below(m, k));
            }
        }
    }
    Ok(out)
}

/// `Σ_k c_k a_k^†` applied to `v`.
pub fn create_coeffs(coeffs: &[C64], v: &FockVector) -> Result<FockVector> {
    check_coeffs(coeffs, v)?;
    let nonzero: Vec<usize> = (0..coeffs.len()).filter(|&k| coeffs[k] != ZERO).collect();
    let mut out = FockVector::zero(v.modes);
    for (&m, &a) in &v.amps {
        for &k in &nonzero {
            if m & bit(k) == 0 {
                out.push(m | bit(k), coeffs[k] * a * parity_below(m, k));
            }
        }
    }
    Ok(out)
}

/// `a(f) v`.
pub fn annihilate(f: &GridFunction, v: &FockVector) -> Result<FockVector> {
    annihilate_coeffs(&f.mode_coefficients(), v)
}

/// `a^†(f) v`.
pub fn create(f: &GridFunction, v: &FockVector) -> Result<FockVector> {
    create_coeffs(&f.mode_coefficients(), v)
}

/// Dense matrix of a linear action, column by column on basis states.
pub fn operator_from_action(modes: usize, action: impl Fn(&FockVector) -> Result<FockVector>) -> Result<FockOperator> {
    let dim = dense_dim(modes)?;
    let mut out = FockOperator::zeros(dim, dim);
    for col in 0..dim {
        let image = action(&FockVector::basis(modes, col as Mask))?;
        for (m, a) in image.iter() {
            out[(m as usize, col)] = a;
        }
    }
    Ok(out)
}

pub fn annihilation_operator(modes: usize, k: usize) -> Result<FockOperator> {
    check_mode(k, modes)?;
    operator_from_action(modes, |v| annihilate_mode(k, v))
}

pub fn creation_operator(modes: usize, k: usize) -> Result<FockOperator> {
    check_mode(k, modes)?;
    operator_from_action(modes, |v| create_mode(k, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Annihilate,
    Create,
}

/// Dense `a(f)` or `a^†(f)` with mode coefficients `sqrt(h)·f_j`.
pub fn ladder_of_function(f: &GridFunction, kind: LadderKind) -> Result<FockOperator> {
    let modes = f.len();
    match kind {
        LadderKind::Annihilate => operator_from_action(modes, |v| annihilate(f, v)),
        LadderKind::Create => operator_from_action(modes, |v| create(f, v)),
    }
}

/// `f_1 Λ … Λ f_n = a^†(f_1)…a^†(f_n)|0>`; the empty list gives the vacuum.
pub fn wedge_vector(spec: &GridSpec, fs: &[GridFunction]) -> Result<FockVector> {
    let mut v = FockVector::vacuum(spec.num_points());
    for f in fs.iter().rev() {
        if f.spec() != spec {
            return Err(Error::GridMismatch(spec.num_points(), spec.spacing(), f.len(), f.spec().spacing()));
        }
        v = create(f, &v)?;
    }
    Ok(v)
}

fn wedge_of_columns(op: &DMatrix<C64>, mask: Mask, modes: usize) -> Result<FockVector> {
    let mut v = FockVector::vacuum(modes);
    let occupied: Vec<usize> = (0..modes).filter(|&k| mask & bit(k) != 0).collect();
    for &k in occupied.iter().rev() {
        let col: Vec<C64> = op.column(k).iter().copied().collect();
        v = create_coeffs(&col, &v)?;
    }
    Ok(v)
}

/// Determinant of the Gram matrix `<f_j, g_k>`.
pub fn gram_determinant(fs: &[GridFunction], gs: &[GridFunction]) -> Result<C64> {
    if fs.len() != gs.len() {
        return Err(Error::LengthMismatch(fs.len(), gs.len()));
    }
    let n = fs.len();
    if n == 0 {
        return Ok(ONE);
    }
    let mut gram = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            gram[(j, k)] = crate::grid::inner_product(&fs[j], &gs[k])?;
        }
    }
    Ok(gram.determinant())
}

/// All permutations of `0..n` with their signs.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

pub const ANTISYMMETRIZE_MAX: usize = 5;

/// Brute-force `P_a(f_1 ⊗ … ⊗ f_n)` in `H^{⊗n}`, mapped isometrically into the
/// Fock basis (the normalized antisymmetric tensor `|j_1…j_n>` has
/// components `±1/sqrt(n!)`). With this embedding
/// `wedge_vector(fs) = sqrt(n!)·antisymmetrize_oracle(fs)`.
pub fn antisymmetrize_oracle(spec: &GridSpec, fs: &[GridFunction]) -> Result<FockVector> {
    let n = fs.len();
    if n > ANTISYMMETRIZE_MAX {
        return Err(Error::InvalidParams(format!("antisymmetrizer limited to n ≤ {ANTISYMMETRIZE_MAX}, got {n}")));
    }
    let modes = spec.num_points();
    if (modes as f64).powi(n as i32) > (1u64 << 22) as f64 {
        return Err(Error::InvalidParams(format!("tensor power {modes}^{n} too large")));
    }
    let coeffs: Vec<Vec<C64>> = fs.iter().map(|f| f.mode_coefficients()).collect();
    let size = modes.pow(n as u32);
    let mut tensor = vec![ZERO; size];
    let n_fact: f64 = (1..=n).map(|k| k as f64).product();
    for (perm, sign) in permutations(n) {
        // elementary tensor f_{perm(0)} ⊗ … ⊗ f_{perm(n-1)}, row-major in slot order
        for (flat, slot) in tensor.iter_mut().enumerate() {
            let mut rest = flat;
            let mut prod = C64::new(sign / n_fact, 0.0);
            for a in (0..n).rev() {
                let j = rest % modes;
                rest /= modes;
                prod *= coeffs[perm[a]][j];
            }
            *slot += prod;
        }
    }
    let mut out = FockVector::zero(modes);
    let norm = n_fact.sqrt();
    for (flat, &t) in tensor.iter().enumerate() {
        let mut idx = Vec::with_capacity(n);
        let mut rest = flat;
        for _ in 0..n {
            idx.push(rest % modes);
            rest /= modes;
        }
        idx.reverse();
        if idx.windows(2).all(|w| w[0] < w[1]) && t != ZERO {
            let mask = idx.iter().fold(0 as Mask, |m, &k| m | bit(k));
            out.push(mask, t * norm);
        }
    }
    Ok(out)
}

/// `Γ(V) v`: the multiplicative lift, `Γ(V)(f_1 Λ … Λ f_n) = Vf_1 Λ … Λ Vf_n`.
pub fn apply_gamma(op: &DMatrix<C64>, v: &FockVector) -> Result<FockVector> {
    if op.nrows() != v.modes || op.ncols() != v.modes {
        return Err(Error::DimensionMismatch(format!("{}x{} on {} modes", op.nrows(), op.ncols(), v.modes)));
    }
    let mut out = FockVector::zero(v.modes);
    for (&m, &a) in &v.amps {
        out.axpy(a, &wedge_of_columns(op, m, v.modes)?);
    }
    Ok(out)
}

pub fn gamma_lift(op: &DMatrix<C64>) -> Result<FockOperator> {
    let modes = op.nrows();
    operator_from_action(modes, |v| apply_gamma(op, v))
}

/// `dΓ(A) v = Σ_k a^†(A e_k) a_k v`: the Leibniz lift.
pub fn apply_derivation(op: &DMatrix<C64>, v: &FockVector) -> Result<FockVector> {
    let modes = v.modes;
    if op.nrows() != modes || op.ncols() != modes {
        return Err(Error::DimensionMismatch(format!("{}x{} on {} modes", op.nrows(), op.ncols(), modes)));
    }
    let mut out = FockVector::zero(modes);
    for (&m, &a) in &v.amps {
        let mut rest = m;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let removed = m ^ bit(k);
            let base = a * parity_below(m, k);
            for i in 0..modes {
                let c = op[(i, k)];
                if c != ZERO && removed & bit(i) == 0 {
                    out.push(removed | bit(i), base * c * parity_below(removed, i));
                }
            }
        }
    }
    Ok(out)
}

pub fn derivation_lift(op: &DMatrix<C64>) -> Result<FockOperator> {
    let modes = op.nrows();
    operator_from_action(modes, |v| apply_derivation(op, v))
}

pub fn number_operator(modes: usize) -> Result<FockOperator> {
    let dim = dense_dim(modes)?;
    Ok(FockOperator::from_fn(
        dim,
        dim,
        |i, j| if i == j { C64::new((i as Mask).count_ones() as f64, 0.0) } else { ZERO },
    ))
}

/// `Ξ_*(ρ) = Σ_k a_k ρ a_k^†`.
pub fn xi_star(rho: &FockOperator) -> Result<FockOperator> {
    let dim = rho.nrows();
    let modes = dim.trailing_zeros() as usize;
    if dim != 1 << modes || rho.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("{}x{} is not a Fock operator", rho.nrows(), rho.ncols())));
    }
    let mut out = FockOperator::zeros(dim, dim);
    // (a_k ρ a_k^†)[b, c] = s_k(b|k) s_k(c|k) ρ[b|k, c|k] for b, c without mode k
    for k in 0..modes {
        for b in 0..dim {
            if b & (1 << k) != 0 {
                continue;
            }
            let sb = parity_below(b as Mask, k);
            for c in 0..dim {
                if c & (1 << k) != 0 {
                    continue;
                }
                let sc = parity_below(c as Mask, k);
                out[(b, c)] += rho[(b | (1 << k), c | (1 << k))] * (sb * sc);
            }
        }
    }
    Ok(out)
}

/// `Γ(S_m^*) v`: modes move down by `m`; states occupying any mode below
/// `m` are annihilated. Order is preserved, so no signs appear.
pub fn shift_down(v: &FockVector, m: usize) -> FockVector {
    if m == 0 {
        return v.clone();
    }
    let mut out = FockVector::zero(v.modes);
    if m >= v.modes {
        if let Some(&a) = v.amps.get(&0) {
            out.push(0, a);
        }
        return out;
    }
    let low = bit(m) - 1;
    for (&mask, &a) in &v.amps {
        if mask & low == 0 {
            out.push(mask >> m, a);
        }
    }
    out
}

/// `Γ(S_m) v`: modes move up by `m`; states pushed past the last mode are
/// dropped.
pub fn shift_up(v: &FockVector, m: usize) -> FockVector {
    if m == 0 {
        return v.clone();
    }
    let mut out = FockVector::zero(v.modes);
    if m >= v.modes {
        if let Some(&a) = v.amps.get(&0) {
            out.push(0, a);
        }
        return out;
    }
    let keep = if v.modes - m >= MAX_MODES { Mask::MAX } else { bit(v.modes - m) - 1 };
    for (&mask, &a) in &v.amps {
        if mask & !keep == 0 {
            out.push(mask << m, a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, GridSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn anticommutator(a: &FockOperator, b: &FockOperator) -> FockOperator {
        a * b + b * a
    }

    fn max_abs(m: &FockOperator) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn ladder_basics() {
        let vac = FockVector::vacuum(4);
        assert_eq!(annihilate_mode(2, &vac).unwrap().norm(), 0.0);
        // 1-based labels {1,2} are modes {0,1}
        let s12 = FockVector::occupied(4, &[0, 1]).unwrap();
        let out = annihilate_mode(1, &s12).unwrap();
        assert_eq!(out.amplitude(0b01), C64::new(-1.0, 0.0));
        assert_eq!(create_mode(0, &vac).unwrap(), FockVector::occupied(4, &[0]).unwrap());
        let s2 = FockVector::occupied(4, &[1]).unwrap();
        assert_eq!(create_mode(0, &s2).unwrap().amplitude(0b11), ONE);
        assert_eq!(create_mode(1, &s2).unwrap().norm(), 0.0);
        assert!(matches!(annihilate_mode(4, &vac), Err(Error::ModeOutOfRange { .. })));
        assert!(matches!(create_mode(9, &vac), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn car_relations_small() {
        let m = 4;
        let a: Vec<_> = (0..m).map(|k| annihilation_operator(m, k).unwrap()).collect();
        let ad: Vec<_> = (0..m).map(|k| creation_operator(m, k).unwrap()).collect();
        let id = FockOperator::identity(16, 16);
        for j in 0..m {
            assert_eq!(ad[j], a[j].adjoint());
            assert_eq!(max_abs(&(&a[j] * &a[j])), 0.0);
            assert_eq!(max_abs(&(&ad[j] * &ad[j])), 0.0);
            for k in 0..m {
                assert_eq!(max_abs(&anticommutator(&a[j], &a[k])), 0.0);
                assert_eq!(max_abs(&anticommutator(&ad[j], &ad[k])), 0.0);
                let expect = if j == k { id.clone() } else { FockOperator::zeros(16, 16) };
                assert_eq!(anticommutator(&a[j], &ad[k]), expect);
            }
        }
    }

    #[test]
    fn function_ladders_obey_car() {
        let spec = GridSpec::new(5, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = GridFunction::random(spec, Domain::D, &mut rng);
        let g = GridFunction::random(spec, Domain::D, &mut rng);
        let af = ladder_of_function(&f, LadderKind::Annihilate).unwrap();
        let ag = ladder_of_function(&g, LadderKind::Annihilate).unwrap();
        let adg = ladder_of_function(&g, LadderKind::Create).unwrap();
        let fg = crate::grid::inner_product(&f, &g).unwrap();
        let diff = anticommutator(&af, &adg) - FockOperator::identity(32, 32) * fg;
        assert!(max_abs(&diff) < 1e-13);
        assert!(max_abs(&anticommutator(&af, &ag)) < 1e-13);
        assert!(max_abs(&(ladder_of_function(&f, LadderKind::Create).unwrap() - af.adjoint())) < 1e-15);
    }

    #[test]
    fn wedges() {
        let spec = GridSpec::new(6, 0.25).unwrap();
        let e0 = GridFunction::mode(spec, 0).unwrap();
        let e1 = GridFunction::mode(spec, 1).unwrap();
        let w = wedge_vector(&spec, &[e0.clone(), e1.clone()]).unwrap();
        assert_eq!(w, FockVector::basis(6, 0b11));
        let swapped = wedge_vector(&spec, &[e1.clone(), e0.clone()]).unwrap();
        assert_eq!(swapped, w.scale(-ONE));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = GridFunction::random(spec, Domain::D, &mut rng);
        assert!(wedge_vector(&spec, &[f.clone(), f]).unwrap().norm() < 1e-15);
        assert_eq!(wedge_vector(&spec, &[]).unwrap(), FockVector::vacuum(6));
    }

    #[test]
    fn gram_determinant_matches_fock_inner_product() {
        let spec = GridSpec::new(7, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 0..=4 {
            let fs: Vec<_> = (0..n).map(|_| GridFunction::random(spec, Domain::D, &mut rng)).collect();
            let gs: Vec<_> = (0..n).map(|_| GridFunction::random(spec, Domain::D, &mut rng)).collect();
            let det = gram_determinant(&fs, &gs).unwrap();
            let ip = wedge_vector(&spec, &fs).unwrap().inner(&wedge_vector(&spec, &gs).unwrap());
            assert!((det - ip).norm() <= 1e-12 * det.norm().max(1.0));
        }
        let modes: Vec<_> = (0..3).map(|k| GridFunction::mode(spec, k).unwrap()).collect();
        assert!((gram_determinant(&modes, &modes).unwrap() - ONE).norm() < 1e-14);
        let f = GridFunction::random(spec, Domain::D, &mut rng);
        let dep = vec![f.clone(), f.scale(C64::new(2.0, -1.0))];
        assert!(gram_determinant(&dep, &dep).unwrap().norm() < 1e-12);
        assert!(gram_determinant(&dep, &modes).is_err());
    }

    #[test]
    fn antisymmetrizer_ratio() {
        let spec = GridSpec::new(5, 0.5).unwrap();
        let e0 = GridFunction::mode(spec, 0).unwrap();
        let e1 = GridFunction::mode(spec, 1).unwrap();
        // n = 1: plain embedding
        let one = antisymmetrize_oracle(&spec, std::slice::from_ref(&e1)).unwrap();
        assert_eq!(one, FockVector::basis(5, 0b10));
        // n = 2: (e0⊗e1 - e1⊗e0)/2 has norm 1/sqrt(2) and pairs with |{0,1}> as 1/sqrt(2)
        let two = antisymmetrize_oracle(&spec, &[e0.clone(), e1.clone()]).unwrap();
        assert!((two.amplitude(0b11).re - 0.5f64.sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 1..=4 {
            let fs: Vec<_> = (0..n).map(|_| GridFunction::random(spec, Domain::D, &mut rng)).collect();
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            let oracle = antisymmetrize_oracle(&spec, &fs).unwrap();
            let wedge = wedge_vector(&spec, &fs).unwrap();
            assert!(wedge.sub(&oracle.scale(C64::new(fact.sqrt(), 0.0))).norm() < 1e-12);
        }
        assert!(antisymmetrize_oracle(&spec, &[e0.clone(), e0.clone()]).unwrap().norm() < 1e-15);
        let six = vec![e0; 6];
        assert!(antisymmetrize_oracle(&spec, &six).is_err());
    }

    #[test]
    fn lifts() {
        let spec = GridSpec::new(5, 0.2).unwrap();
        let m = 5;
        let id = DMatrix::<C64>::identity(m, m);
        assert_eq!(gamma_lift(&id).unwrap(), FockOperator::identity(32, 32));
        assert_eq!(derivation_lift(&id).unwrap(), number_operator(m).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rand_mat = |rng: &mut ChaCha8Rng| {
            DMatrix::from_fn(m, m, |_, _| {
                C64::new(rand::Rng::gen_range(rng, -0.5..0.5), rand::Rng::gen_range(rng, -0.5..0.5))
            })
        };
        let v = rand_mat(&mut rng);
        let w = rand_mat(&mut rng);
        let lhs = gamma_lift(&v).unwrap() * gamma_lift(&w).unwrap();
        let rhs = gamma_lift(&(&v * &w)).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-12);

        let a = rand_mat(&mut rng);
        let f = GridFunction::random(spec, Domain::D, &mut rng);
        let g = GridFunction::random(spec, Domain::D, &mut rng);
        let lhs = apply_derivation(&a, &wedge_vector(&spec, &[f.clone(), g.clone()]).unwrap()).unwrap();
        let af = f.apply(&a).unwrap();
        let ag = g.apply(&a).unwrap();
        let mut rhs = wedge_vector(&spec, &[af, g.clone()]).unwrap();
        rhs.axpy(ONE, &wedge_vector(&spec, &[f.clone(), ag]).unwrap());
        assert!(lhs.sub(&rhs).norm() < 1e-13);
        // one-particle sector reproduces A
        let single = apply_derivation(&a, &wedge_vector(&spec, std::slice::from_ref(&f)).unwrap()).unwrap();
        let expect = wedge_vector(&spec, &[f.apply(&a).unwrap()]).unwrap();
        assert!(single.sub(&expect).norm() < 1e-13);
    }

    #[test]
    fn gamma_of_shift_relabels_modes() {
        let spec = GridSpec::new(6, 0.1).unwrap();
        let s2 = crate::grid::shift_matrix(spec, 2);
        let v = FockVector::occupied(6, &[0, 3]).unwrap();
        assert_eq!(apply_gamma(&s2, &v).unwrap(), FockVector::occupied(6, &[2, 5]).unwrap());
        assert_eq!(shift_up(&v, 2), FockVector::occupied(6, &[2, 5]).unwrap());
        assert_eq!(apply_gamma(&s2, &FockVector::occupied(6, &[1, 4]).unwrap()).unwrap().norm(), 0.0);
        assert_eq!(shift_up(&FockVector::occupied(6, &[1, 4]).unwrap(), 2).norm(), 0.0);
        let g = gamma_lift(&s2).unwrap();
        let g_adj = gamma_lift(&s2.adjoint()).unwrap();
        assert_eq!(g.adjoint(), g_adj);
        let w = FockVector::occupied(6, &[2, 3]).unwrap();
        assert_eq!(shift_down(&w, 2), FockVector::occupied(6, &[0, 1]).unwrap());
        assert_eq!(shift_down(&w, 3).norm(), 0.0);
        assert_eq!(shift_down(&FockVector::vacuum(6), 4), FockVector::vacuum(6));
    }

    #[test]
    fn number_operator_and_xi_star() {
        let q = number_operator(8).unwrap();
        assert_eq!(q[(0, 0)], ZERO);
        let mask = 0b1000101usize; // modes {0,2,6}: 1-based labels {1,3,7}
        assert_eq!(q[(mask, mask)], C64::new(3.0, 0.0));
        let mut sum = FockOperator::zeros(256, 256);
        for k in 0..8 {
            let a = annihilation_operator(8, k).unwrap();
            sum += a.adjoint() * a;
        }
        assert_eq!(sum, q);

        let m = 3;
        let dim = 8;
        let vac = FockOperator::from_fn(dim, dim, |i, j| if i == 0 && j == 0 { ONE } else { ZERO });
        assert_eq!(max_abs(&xi_star(&vac).unwrap()), 0.0);
        let p12 = FockOperator::from_fn(dim, dim, |i, j| if i == 3 && j == 3 { ONE } else { ZERO });
        let out = xi_star(&p12).unwrap();
        assert_eq!(out.trace(), C64::new(2.0, 0.0));
        let mut expect = FockOperator::zeros(dim, dim);
        expect[(1, 1)] = ONE;
        expect[(2, 2)] = ONE;
        assert_eq!(out, expect);

        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let rho = FockOperator::from_fn(dim, dim, |_, _| {
            C64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0))
        });
        let kraus: FockOperator = (0..m)
            .map(|k| {
                let a = annihilation_operator(m, k).unwrap();
                &a * &rho * a.adjoint()
            })
            .fold(FockOperator::zeros(dim, dim), |acc, x| acc + x);
        assert!(max_abs(&(kraus - xi_star(&rho).unwrap())) < 1e-14);
        let qrho = number_operator(m).unwrap() * &rho;
        assert!((xi_star(&rho).unwrap().trace() - qrho.trace()).norm() < 1e-12);
    }
}
