//! The flow of shifts `Φ_t(x) = Γ(S_t) x Γ(S_t)^*`, its preadjoint `Ψ_t`,
//! the Schrödinger generator on rank-one states, the boundary perturbation
//! `Δ`, and the exact generator identity pairing them with monomials.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{
    annihilate, create, dense_dim, operator_from_action, shift_down, wedge_vector, FockMap, FockOperator, FockVector,
};
use crate::grid::{
    diff_backward_interior, diff_forward, diff_symmetric, shift_forward, Domain, GridFunction, GridSpec,
};
use crate::operator::{max_eigenvalue, LowRankOperator};
use crate::superop::{is_completely_positive, SuperoperatorMatrix, CP_TOLERANCE};

/// Grid time `t = m·h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeIndex(pub usize);

impl TimeIndex {
    pub fn time(self, spec: &GridSpec) -> f64 {
        spec.x(self.0)
    }
}

fn check_grid(spec: &GridSpec, fs: &[GridFunction]) -> Result<()> {
    for f in fs {
        if f.spec() != spec {
            return Err(Error::GridMismatch(spec.num_points(), spec.spacing(), f.len(), f.spec().spacing()));
        }
    }
    Ok(())
}

/// `a(h_1)…a(h_p) a^†(e_1)…a^†(e_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialObservable {
    spec: GridSpec,
    annihilators: Vec<GridFunction>,
    creators: Vec<GridFunction>,
}

impl MonomialObservable {
    pub fn new(spec: GridSpec, annihilators: Vec<GridFunction>, creators: Vec<GridFunction>) -> Result<Self> {
        check_grid(&spec, &annihilators)?;
        check_grid(&spec, &creators)?;
        Ok(Self { spec, annihilators, creators })
    }

    pub fn identity(spec: GridSpec) -> Self {
        Self { spec, annihilators: Vec::new(), creators: Vec::new() }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn annihilators(&self) -> &[GridFunction] {
        &self.annihilators
    }

    pub fn creators(&self) -> &[GridFunction] {
        &self.creators
    }

    pub fn degree(&self) -> usize {
        self.annihilators.len() + self.creators.len()
    }

    pub fn is_even(&self) -> bool {
        self.degree().is_multiple_of(2)
    }

    /// Every argument must lie in `D(d_*)`.
    pub fn check_domain(&self) -> Result<()> {
        for f in self.annihilators.iter().chain(&self.creators) {
            f.check_domain(Domain::DStar)?;
        }
        Ok(())
    }

    /// `Φ_t` on a monomial: every argument moves right by `m` cells.
    pub fn shifted(&self, m: usize) -> Self {
        Self {
            spec: self.spec,
            annihilators: self.annihilators.iter().map(|f| shift_forward(f, m)).collect(),
            creators: self.creators.iter().map(|f| shift_forward(f, m)).collect(),
        }
    }

    /// Same monomial with argument `slot` (annihilators first, then creators)
    /// replaced by `f`.
    pub fn with_slot(&self, slot: usize, f: GridFunction) -> Result<Self> {
        let p = self.annihilators.len();
        if slot >= self.degree() {
            return Err(Error::InvalidParams(format!("slot {slot} of a degree-{} monomial", self.degree())));
        }
        let mut out = self.clone();
        if slot < p {
            out.annihilators[slot] = f;
        } else {
            out.creators[slot - p] = f;
        }
        Ok(out)
    }

    pub fn slot(&self, slot: usize) -> &GridFunction {
        let p = self.annihilators.len();
        if slot < p {
            &self.annihilators[slot]
        } else {
            &self.creators[slot - p]
        }
    }

    pub fn to_dense(&self) -> Result<FockOperator> {
        operator_from_action(self.spec.num_points(), |v| self.apply(v))
    }
}

impl FockMap for MonomialObservable {
    fn apply(&self, v: &FockVector) -> Result<FockVector> {
        let mut out = v.clone();
        for e in self.creators.iter().rev() {
            out = create(e, &out)?;
        }
        for h in self.annihilators.iter().rev() {
            out = annihilate(h, &out)?;
        }
        Ok(out)
    }
}

/// `|f_1 Λ … Λ f_n><g_1 Λ … Λ g_m|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneState {
    spec: GridSpec,
    kets: Vec<GridFunction>,
    bras: Vec<GridFunction>,
}

impl RankOneState {
    pub fn new(spec: GridSpec, kets: Vec<GridFunction>, bras: Vec<GridFunction>) -> Result<Self> {
        check_grid(&spec, &kets)?;
        check_grid(&spec, &bras)?;
        Ok(Self { spec, kets, bras })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kets(&self) -> &[GridFunction] {
        &self.kets
    }

    pub fn bras(&self) -> &[GridFunction] {
        &self.bras
    }

    /// Every function must lie in `D(d)` (trailing cells zero).
    pub fn check_domain(&self) -> Result<()> {
        for f in self.kets.iter().chain(&self.bras) {
            f.check_domain(Domain::D)?;
        }
        Ok(())
    }

    pub fn ket_vector(&self) -> Result<FockVector> {
        wedge_vector(&self.spec, &self.kets)
    }

    pub fn bra_vector(&self) -> Result<FockVector> {
        wedge_vector(&self.spec, &self.bras)
    }

    pub fn to_low_rank(&self) -> Result<LowRankOperator> {
        Ok(LowRankOperator::rank_one(self.ket_vector()?, self.bra_vector()?))
    }

    /// Random state with `n` ket and `m` bra functions in `D(d)`.
    pub fn random<R: Rng + ?Sized>(spec: GridSpec, n: usize, m: usize, rng: &mut R) -> Self {
        let kets = (0..n).map(|_| GridFunction::random(spec, Domain::D, rng)).collect();
        let bras = (0..m).map(|_| GridFunction::random(spec, Domain::D, rng)).collect();
        Self { spec, kets, bras }
    }
}

fn modes_of(x: &FockOperator) -> Result<usize> {
    let dim = x.nrows();
    let modes = dim.trailing_zeros() as usize;
    if dim == 0 || dim != 1 << modes || x.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("{}x{} is not a Fock operator", x.nrows(), x.ncols())));
    }
    dense_dim(modes)?;
    Ok(modes)
}

/// Dense `Φ_t(x) = Γ(S_t) x Γ(S_t)^*` with `t = m·h`.
pub fn phi(m: usize, x: &FockOperator) -> Result<FockOperator> {
    let modes = modes_of(x)?;
    let dim = x.nrows();
    let mut out = FockOperator::zeros(dim, dim);
    let m = m.min(modes);
    let kept = 1usize << (modes - m);
    for c in 0..kept {
        for b in 0..kept {
            out[(b << m, c << m)] = x[(b, c)];
        }
    }
    Ok(out)
}

/// Dense `Ψ_t(ρ) = Γ(S_t)^* ρ Γ(S_t)`.
pub fn psi(m: usize, rho: &FockOperator) -> Result<FockOperator> {
    let modes = modes_of(rho)?;
    let dim = rho.nrows();
    let mut out = FockOperator::zeros(dim, dim);
    let m = m.min(modes);
    let kept = 1usize << (modes - m);
    for c in 0..kept {
        for b in 0..kept {
            out[(b, c)] = rho[(b << m, c << m)];
        }
    }
    Ok(out)
}

pub fn psi_low_rank(m: usize, rho: &LowRankOperator) -> LowRankOperator {
    rho.map_vectors(|v| shift_down(v, m))
}

/// Reference solution on monomials: `Φ_t(a(h)…a^†(e)) = a(S_t h)…a^†(S_t e)`.
pub fn flow_of_shifts(m: usize, x: &MonomialObservable) -> MonomialObservable {
    x.shifted(m)
}

/// How the derivative is discretized on states and on observable arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DifferenceScheme {
    /// `A = (D + B)/2` on states and `-A` on observables; `A + A^† ` is the
    /// pure boundary term, so the generator identity holds exactly.
    Symmetric,
    /// Forward difference on states, `-B` on observables.
    ForwardBackward,
    /// Forward difference on both sides; consistent but only first order.
    SameSide,
}

impl DifferenceScheme {
    pub fn state_derivative(self, f: &GridFunction) -> GridFunction {
        match self {
            Self::Symmetric => diff_symmetric(f),
            Self::ForwardBackward | Self::SameSide => diff_forward(f),
        }
    }

    /// The signed derivative `d_*` applied to an observable argument.
    pub fn observable_derivative(self, h: &GridFunction) -> GridFunction {
        let minus = C64::new(-1.0, 0.0);
        match self {
            Self::Symmetric => diff_symmetric(h).scale(minus),
            Self::ForwardBackward => diff_backward_interior(h).scale(minus),
            Self::SameSide => diff_forward(h).scale(minus),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Symmetric => "symmetric",
            Self::ForwardBackward => "forward_backward",
            Self::SameSide => "same_side",
        }
    }
}

impl std::str::FromStr for DifferenceScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Self::Symmetric),
            "forward_backward" => Ok(Self::ForwardBackward),
            "same_side" => Ok(Self::SameSide),
            other => Err(Error::InvalidParams(format!("unknown difference scheme '{other}'"))),
        }
    }
}

/// `Σ_j f_1 Λ … Λ (∂f_j) Λ … Λ f_n`.
fn leibniz_wedge(spec: &GridSpec, fs: &[GridFunction], scheme: DifferenceScheme) -> Result<FockVector> {
    let mut out = FockVector::zero(spec.num_points());
    for j in 0..fs.len() {
        let mut replaced = fs.to_vec();
        replaced[j] = scheme.state_derivative(&fs[j]);
        out.axpy(C64::new(1.0, 0.0), &wedge_vector(spec, &replaced)?);
    }
    Ok(out)
}

/// `L(|f><g|) = |dΓ(∂)f><g| + |f><dΓ(∂)g|`, the generator of `Ψ_t`.
pub fn generator_l(state: &RankOneState, scheme: DifferenceScheme) -> Result<LowRankOperator> {
    let spec = state.spec;
    let ket = state.ket_vector()?;
    let bra = state.bra_vector()?;
    let mut out = LowRankOperator::zero(spec.num_points());
    let one = C64::new(1.0, 0.0);
    out.push(one, leibniz_wedge(&spec, &state.kets, scheme)?, bra);
    out.push(one, ket, leibniz_wedge(&spec, &state.bras, scheme)?);
    Ok(out)
}

/// `Σ_j (-1)^j f_j(0) · (f with slot j removed)` for zero-based `j`.
fn boundary_contraction(spec: &GridSpec, fs: &[GridFunction]) -> Result<FockVector> {
    let mut out = FockVector::zero(spec.num_points());
    for (j, f) in fs.iter().enumerate() {
        let c = f.at_origin();
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let rest: Vec<GridFunction> = fs.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, g)| g.clone()).collect();
        out.axpy(c * sign, &wedge_vector(spec, &rest)?);
    }
    Ok(out)
}

/// `Δ(|f><g|) = Σ_{j,k} (-1)^{j+k} f_j(0) conj(g_k(0)) |f∖f_j><g∖g_k|`; zero
/// when either side is the vacuum.
pub fn delta_perturbation(state: &RankOneState) -> Result<LowRankOperator> {
    let spec = state.spec;
    let mut out = LowRankOperator::zero(spec.num_points());
    if state.kets.is_empty() || state.bras.is_empty() {
        return Ok(out);
    }
    out.push(C64::new(1.0, 0.0), boundary_contraction(&spec, &state.kets)?, boundary_contraction(&spec, &state.bras)?);
    Ok(out)
}

/// Both sides of `Tr((L + Δ)(ρ) X) = Tr(ρ Ľ(X))`, where `Ľ` differentiates
/// each argument of the monomial in turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorIdentity {
    pub generator_term: C64,
    pub delta_term: C64,
    pub observable_term: C64,
    pub residual: f64,
    /// Sum of the magnitudes of every contribution; residuals are judged
    /// relative to this.
    pub scale: f64,
}

/// Evaluate the generator identity without domain or parity checks.
pub fn generator_identity_unchecked(
    state: &RankOneState,
    x: &MonomialObservable,
    scheme: DifferenceScheme,
) -> Result<GeneratorIdentity> {
    if state.spec != x.spec {
        let (a, b) = (state.spec, x.spec);
        return Err(Error::GridMismatch(a.num_points(), a.spacing(), b.num_points(), b.spacing()));
    }
    let generator_term = generator_l(state, scheme)?.pair(x)?;
    let delta_term = delta_perturbation(state)?.pair(x)?;
    let rho = state.to_low_rank()?;
    let mut observable_term = C64::new(0.0, 0.0);
    let mut scale = generator_term.norm() + delta_term.norm();
    for slot in 0..x.degree() {
        let dx = x.with_slot(slot, scheme.observable_derivative(x.slot(slot)))?;
        let term = rho.pair(&dx)?;
        scale += term.norm();
        observable_term += term;
    }
    let residual = (generator_term + delta_term - observable_term).norm();
    Ok(GeneratorIdentity { generator_term, delta_term, observable_term, residual, scale })
}

/// Generator identity with the domain contract enforced: state functions in
/// `D(d)`, monomial arguments in `D(d_*)`, and an even monomial.
pub fn generator_identity(
    state: &RankOneState,
    x: &MonomialObservable,
    scheme: DifferenceScheme,
) -> Result<GeneratorIdentity> {
    state.check_domain()?;
    x.check_domain()?;
    if !x.is_even() {
        return Err(Error::DomainViolation(format!(
            "monomial of odd degree {} (the boundary term only balances even monomials)",
            x.degree()
        )));
    }
    generator_identity_unchecked(state, x, scheme)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupAxioms {
    /// `max |Φ_{s+t}(x) - Φ_s(Φ_t(x))|` over the sampled pairs.
    pub composition_error: f64,
    /// Smallest Choi eigenvalue over the sampled `Φ_t` (dense superoperators
    /// need `M ≤ 2`; `None` otherwise).
    pub choi_min_eigenvalue: Option<f64>,
    /// `max λ_max(Φ_t(I)) - 1`.
    pub unit_excess: f64,
    /// `Φ_0` reproduces its input exactly.
    pub identity_error: f64,
}

/// Dense checks of the semigroup law, sub-unitality and complete positivity
/// on `times` (grid indices) with a random observable.
pub fn semigroup_axioms_check<R: Rng + ?Sized>(modes: usize, times: &[usize], rng: &mut R) -> Result<SemigroupAxioms> {
    let dim = dense_dim(modes)?;
    let x = FockOperator::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut composition_error: f64 = 0.0;
    for &s in times {
        for &t in times {
            let lhs = phi(s + t, &x)?;
            let rhs = phi(s, &phi(t, &x)?)?;
            composition_error = composition_error.max((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    let identity_error = (phi(0, &x)? - &x).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let unit = FockOperator::identity(dim, dim);
    let mut unit_excess = f64::NEG_INFINITY;
    for &t in times {
        unit_excess = unit_excess.max(max_eigenvalue(&phi(t, &unit)?) - 1.0);
    }
    let choi_min_eigenvalue = if dim <= crate::superop::MAX_SUPEROP_DIM {
        let mut worst = f64::INFINITY;
        for &t in times {
            let s = SuperoperatorMatrix::try_from_fn(dim, format!("phi_{t}"), |y| phi(t, y))?;
            worst = worst.min(is_completely_positive(&s, CP_TOLERANCE).min_eigenvalue);
        }
        Some(worst)
    } else {
        None
    };
    Ok(SemigroupAxioms { composition_error, choi_min_eigenvalue, unit_excess, identity_error })
}

/// Heisenberg superoperator of `Φ_t` for small mode counts.
pub fn phi_superoperator(modes: usize, m: usize) -> Result<SuperoperatorMatrix> {
    let dim = dense_dim(modes)?;
    SuperoperatorMatrix::try_from_fn(dim, format!("phi_{m}"), |y| phi(m, y))
}
