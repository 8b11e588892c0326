//! The covariant CP measure `M([t,s))` on grid-aligned time bins, in Kraus
//! form `V_r = a_0 Γ(S_r)^*`, together with Riemann-sum approximations and
//! the covariance and small-time checks.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    annihilate, create, operator_from_action, shift_down, shift_up, wedge_vector, FockMap, FockOperator, FockVector,
};
use crate::grid::{GridFunction, GridSpec};
use crate::operator::{max_eigenvalue, LowRankOperator};
use crate::shift::{delta_perturbation, psi_low_rank, RankOneState};
use crate::superop::SuperoperatorMatrix;

/// `[lo·h, hi·h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeBin {
    lo: usize,
    hi: usize,
}

impl TimeBin {
    pub fn new(spec: &GridSpec, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidBin { lo, hi, reason: "lower edge above upper edge".into() });
        }
        if hi > spec.num_points() {
            return Err(Error::InvalidBin { lo, hi, reason: format!("beyond the {}-point grid", spec.num_points()) });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo
    }

    pub fn shifted(&self, spec: &GridSpec, r: usize) -> Result<Self> {
        Self::new(spec, self.lo + r, self.hi + r)
    }

    /// Unit-width bins covering `self`.
    pub fn cells(&self) -> impl Iterator<Item = TimeBin> {
        (self.lo..self.hi).map(|r| TimeBin { lo: r, hi: r + 1 })
    }
}

/// `V = a(window) Γ(S_shift)^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausTerm {
    pub window: GridFunction,
    pub shift: usize,
}

impl KrausTerm {
    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        annihilate(&self.window, &shift_down(v, self.shift))
    }

    pub fn apply_adjoint(&self, v: &FockVector) -> Result<FockVector> {
        Ok(shift_up(&create(&self.window, v)?, self.shift))
    }

    pub fn to_dense(&self) -> Result<FockOperator> {
        operator_from_action(self.window.len(), |v| self.apply(v))
    }
}

struct KrausMap<'a>(&'a KrausTerm);

impl FockMap for KrausMap<'_> {
    fn apply(&self, v: &FockVector) -> Result<FockVector> {
        self.0.apply(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// One Kraus operator per grid cell; the reference measure.
    Quadrature,
    /// `n` windows of width `δ = (s-t)/n`, normalized by `1/sqrt(δ)`.
    RiemannSum { n: usize },
    /// `n` bare indicator windows of width `δ`.
    UnnormalizedRiemannSum { n: usize },
}

/// `M_*(bin)(ρ) = Σ_V V ρ V^†` and its Heisenberg dual `x ↦ Σ_V V^† x V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CPMeasureBin {
    spec: GridSpec,
    bin: TimeBin,
    kraus: Vec<KrausTerm>,
    construction: Construction,
}

impl CPMeasureBin {
    pub fn quadrature(spec: GridSpec, bin: TimeBin) -> Result<Self> {
        TimeBin::new(&spec, bin.lo, bin.hi)?;
        let window = GridFunction::mode(spec, 0)?;
        let kraus = (bin.lo..bin.hi).map(|shift| KrausTerm { window: window.clone(), shift }).collect();
        Ok(Self { spec, bin, kraus, construction: Construction::Quadrature })
    }

    /// A bin carrying no mass.
    pub fn zero(spec: GridSpec, bin: TimeBin) -> Self {
        Self { spec, bin, kraus: Vec::new(), construction: Construction::Quadrature }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn bin(&self) -> TimeBin {
        self.bin
    }

    pub fn kraus(&self) -> &[KrausTerm] {
        &self.kraus
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn action(&self, rho: &LowRankOperator) -> Result<LowRankOperator> {
        let mut out = LowRankOperator::zero(rho.modes());
        for v in &self.kraus {
            let map = KrausMap(v);
            out.extend(rho.sandwich(&map, &map)?);
        }
        Ok(out)
    }

    pub fn action_on_state(&self, state: &RankOneState) -> Result<LowRankOperator> {
        self.action(&state.to_low_rank()?)
    }

    pub fn dense_kraus(&self) -> Result<Vec<FockOperator>> {
        self.kraus.iter().map(KrausTerm::to_dense).collect()
    }

    /// `x ↦ Σ V^† x V` as a dense superoperator (at most 4 modes).
    pub fn heisenberg_superoperator(&self) -> Result<SuperoperatorMatrix> {
        let adjoints: Vec<FockOperator> = self.dense_kraus()?.iter().map(|v| v.adjoint()).collect();
        let dim = 1usize << self.spec.num_points();
        SuperoperatorMatrix::from_kraus(dim, format!("M[{},{})", self.bin.lo, self.bin.hi), &adjoints)
    }

    /// `Σ V^† V`.
    pub fn effect(&self) -> Result<FockOperator> {
        let dim = 1usize << self.spec.num_points();
        Ok(self.dense_kraus()?.iter().fold(FockOperator::zeros(dim, dim), |acc, v| acc + v.adjoint() * v))
    }
}

fn contraction_at(spec: &GridSpec, fs: &[GridFunction], r: usize) -> Result<FockVector> {
    let mut out = FockVector::zero(spec.num_points());
    for (j, f) in fs.iter().enumerate() {
        let c = f.values()[r];
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let rest: Vec<GridFunction> = fs.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, g)| g.clone()).collect();
        out.axpy(c * sign, &wedge_vector(spec, &rest)?);
    }
    Ok(out)
}

/// Direct evaluation of `M_*(bin)(|f><g|)` as the cell sum
/// `h Σ_r Σ_{j,k} (-1)^{j+k} f_j(r) conj(g_k(r)) |S_r^*(f∖f_j)><S_r^*(g∖g_k)|`,
/// independent of the Kraus machinery.
pub fn measure_star_quadrature(spec: GridSpec, bin: TimeBin, state: &RankOneState) -> Result<LowRankOperator> {
    TimeBin::new(&spec, bin.lo, bin.hi)?;
    let mut out = LowRankOperator::zero(spec.num_points());
    if state.kets().is_empty() || state.bras().is_empty() {
        return Ok(out);
    }
    let h = C64::new(spec.spacing(), 0.0);
    for r in bin.lo..bin.hi {
        let v = contraction_at(&spec, state.kets(), r)?;
        let w = contraction_at(&spec, state.bras(), r)?;
        out.push(h, shift_down(&v, r), shift_down(&w, r));
    }
    Ok(out)
}

fn riemann_windows(spec: GridSpec, bin: TimeBin, n: usize) -> Result<(usize, Vec<usize>)> {
    TimeBin::new(&spec, bin.lo, bin.hi)?;
    if n == 0 || !bin.width().is_multiple_of(n) {
        return Err(Error::NotDivisible { width: bin.width(), n });
    }
    let cells = bin.width() / n;
    Ok((cells, (0..n).map(|j| bin.lo + j * cells).collect()))
}

fn indicator(spec: GridSpec, cells: usize, scale: f64) -> Result<GridFunction> {
    let values =
        (0..spec.num_points()).map(|i| if i < cells { C64::new(scale, 0.0) } else { C64::new(0.0, 0.0) }).collect();
    GridFunction::from_values(spec, values)
}

/// `Σ_j V_j ρ V_j^†` with `V_j = a(χ_δ/sqrt(δ)) Γ(S_{t + jδ})^*`, `δ = (s-t)/n`.
/// At `n = s - t` cells this is the quadrature measure.
pub fn kraus_riemann_sum(spec: GridSpec, bin: TimeBin, n: usize) -> Result<CPMeasureBin> {
    let (cells, shifts) = riemann_windows(spec, bin, n)?;
    let delta = spec.x(cells);
    let window = indicator(spec, cells, 1.0 / delta.sqrt())?;
    let kraus = shifts.into_iter().map(|shift| KrausTerm { window: window.clone(), shift }).collect();
    Ok(CPMeasureBin { spec, bin, kraus, construction: Construction::RiemannSum { n } })
}

/// Riemann sum with bare indicator windows `χ_δ`.
pub fn kraus_riemann_sum_unnormalized(spec: GridSpec, bin: TimeBin, n: usize) -> Result<CPMeasureBin> {
    let (cells, shifts) = riemann_windows(spec, bin, n)?;
    let window = indicator(spec, cells, 1.0)?;
    let kraus = shifts.into_iter().map(|shift| KrausTerm { window: window.clone(), shift }).collect();
    Ok(CPMeasureBin { spec, bin, kraus, construction: Construction::UnnormalizedRiemannSum { n } })
}

/// `λ_max(Q_n)` for `Q_n = Σ_j V_j^† V_j` with bare indicator windows; bounded
/// by `s - t`.
pub fn qn_norm(spec: GridSpec, bin: TimeBin, n: usize) -> Result<f64> {
    if bin.width() == 0 {
        return Ok(0.0);
    }
    let m = kraus_riemann_sum_unnormalized(spec, bin, n)?;
    Ok(max_eigenvalue(&m.effect()?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub residual: f64,
    pub scale: f64,
}

/// `‖M_*(bin)(Ψ_r ρ) - M_*(bin + r)(ρ)‖_1`.
pub fn covariance_residual(spec: GridSpec, r: usize, bin: TimeBin, state: &RankOneState) -> Result<Discrepancy> {
    let rho = state.to_low_rank()?;
    let lhs = CPMeasureBin::quadrature(spec, bin)?.action(&psi_low_rank(r, &rho))?;
    let rhs = CPMeasureBin::quadrature(spec, bin.shifted(&spec, r)?)?.action(&rho)?;
    Ok(Discrepancy { residual: lhs.sub(&rhs).trace_norm(), scale: lhs.trace_norm() + rhs.trace_norm() })
}

/// `‖M_*(∪ bins)(ρ) - Σ M_*(bin)(ρ)‖_1` for contiguous `bins`.
pub fn additivity_residual(spec: GridSpec, bins: &[TimeBin], state: &RankOneState) -> Result<Discrepancy> {
    let (Some(first), Some(last)) = (bins.first(), bins.last()) else {
        return Ok(Discrepancy { residual: 0.0, scale: 0.0 });
    };
    if bins.windows(2).any(|w| w[0].hi != w[1].lo) {
        return Err(Error::InvalidBin { lo: first.lo, hi: last.hi, reason: "bins are not contiguous".into() });
    }
    let rho = state.to_low_rank()?;
    let union = CPMeasureBin::quadrature(spec, TimeBin::new(&spec, first.lo, last.hi)?)?.action(&rho)?;
    let mut parts = LowRankOperator::zero(spec.num_points());
    for b in bins {
        parts.extend(CPMeasureBin::quadrature(spec, *b)?.action(&rho)?);
    }
    Ok(Discrepancy { residual: union.sub(&parts).trace_norm(), scale: union.trace_norm() })
}

/// `Tr(M_*(bin)(ρ) x)`.
pub fn measure_pairing(spec: GridSpec, bin: TimeBin, state: &RankOneState, x: &dyn FockMap) -> Result<C64> {
    CPMeasureBin::quadrature(spec, bin)?.action_on_state(state)?.pair(x)
}

/// `‖(1/t) M_*([0,t))(ρ) - Δ(ρ)‖_1` with `t = steps·h`.
pub fn small_time_link(spec: GridSpec, state: &RankOneState, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidParams("small-time link needs t > 0".into()));
    }
    let t = spec.x(steps);
    let m = CPMeasureBin::quadrature(spec, TimeBin::new(&spec, 0, steps)?)?.action_on_state(state)?;
    let delta = delta_perturbation(state)?;
    Ok(m.scale(C64::new(1.0 / t, 0.0)).sub(&delta).trace_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::shift::{phi, psi, MonomialObservable};
    use crate::superop::{is_completely_positive, CP_TOLERANCE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bins_validate() {
        let spec = GridSpec::new(8, 0.1).unwrap();
        assert!(TimeBin::new(&spec, 3, 2).is_err());
        assert!(TimeBin::new(&spec, 0, 9).is_err());
        let b = TimeBin::new(&spec, 2, 6).unwrap();
        assert_eq!(b.width(), 4);
        assert!(b.shifted(&spec, 3).is_err());
        assert!(matches!(kraus_riemann_sum(spec, b, 3), Err(Error::NotDivisible { width: 4, n: 3 })));
        assert!(kraus_riemann_sum(spec, b, 0).is_err());
    }

    #[test]
    fn quadrature_matches_direct_formula() {
        let spec = GridSpec::new(10, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for (n, m) in [(1, 1), (2, 1), (2, 2), (3, 2), (0, 1)] {
            let state = RankOneState::random(spec, n, m, &mut rng);
            let bin = TimeBin::new(&spec, 1, 7).unwrap();
            let a = CPMeasureBin::quadrature(spec, bin).unwrap().action_on_state(&state).unwrap();
            let b = measure_star_quadrature(spec, bin, &state).unwrap();
            assert!(a.sub(&b).trace_norm() <= 1e-12 * (1.0 + b.trace_norm()), "n={n} m={m}");
        }
    }

    #[test]
    fn unit_bin_is_shifted_boundary_sandwich() {
        let spec = GridSpec::new(6, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let state = RankOneState::random(spec, 2, 2, &mut rng);
        let rho = state.to_low_rank().unwrap().to_dense().unwrap();
        for s in 0..4 {
            let m = CPMeasureBin::quadrature(spec, TimeBin::new(&spec, s, s + 1).unwrap()).unwrap();
            let got = m.action_on_state(&state).unwrap().to_dense().unwrap();
            let a_s = crate::fock::annihilation_operator(6, s).unwrap();
            let expected = psi(s, &(&a_s * &rho * a_s.adjoint())).unwrap();
            assert!((got - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn heisenberg_dual_and_cp() {
        let spec = GridSpec::new(4, 0.25).unwrap();
        let m = CPMeasureBin::quadrature(spec, TimeBin::new(&spec, 0, 3).unwrap()).unwrap();
        let s = m.heisenberg_superoperator().unwrap();
        assert!(is_completely_positive(&s, CP_TOLERANCE).holds);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let state = RankOneState::random(spec, 1, 1, &mut rng);
        let x = MonomialObservable::new(
            spec,
            vec![GridFunction::random(spec, Domain::DStar, &mut rng)],
            vec![GridFunction::random(spec, Domain::DStar, &mut rng)],
        )
        .unwrap();
        let xd = x.to_dense().unwrap();
        let lhs = m.action_on_state(&state).unwrap().pair(&xd).unwrap();
        let rhs = state.to_low_rank().unwrap().pair(&s.apply(&xd).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn heisenberg_measure_of_unit_cell() {
        // M([s, s+h))(x) = a_s^† Φ_s(x) a_s
        let spec = GridSpec::new(4, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let x = FockOperator::from_fn(16, 16, |_, _| C64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), 0.3));
        for s in 0..3 {
            let m = CPMeasureBin::quadrature(spec, TimeBin::new(&spec, s, s + 1).unwrap()).unwrap();
            let a_s = crate::fock::annihilation_operator(4, s).unwrap();
            let expected = a_s.adjoint() * phi(s, &x).unwrap() * &a_s;
            let got = m.heisenberg_superoperator().unwrap().apply(&x).unwrap();
            assert!((got - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn covariance_and_additivity_are_exact() {
        let spec = GridSpec::new(16, 1.0 / 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let state = RankOneState::random(spec, 2, 2, &mut rng);
        for r in [1, 2, 5] {
            let d = covariance_residual(spec, r, TimeBin::new(&spec, 0, 6).unwrap(), &state).unwrap();
            assert!(d.residual <= 1e-12 * d.scale.max(1e-300), "{d:?}");
        }
        let bins = [
            TimeBin::new(&spec, 0, 3).unwrap(),
            TimeBin::new(&spec, 3, 4).unwrap(),
            TimeBin::new(&spec, 4, 9).unwrap(),
        ];
        let d = additivity_residual(spec, &bins, &state).unwrap();
        assert!(d.residual <= 1e-12 * d.scale);
    }

    #[test]
    fn riemann_sum_at_cell_resolution_is_quadrature() {
        let spec = GridSpec::new(12, 1.0 / 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let state = RankOneState::random(spec, 2, 1, &mut rng);
        let bin = TimeBin::new(&spec, 2, 8).unwrap();
        let q = CPMeasureBin::quadrature(spec, bin).unwrap().action_on_state(&state).unwrap();
        let r = kraus_riemann_sum(spec, bin, 6).unwrap().action_on_state(&state).unwrap();
        assert!(q.sub(&r).trace_norm() < 1e-12);
    }

    #[test]
    fn qn_is_bounded_by_bin_length() {
        let spec = GridSpec::new(8, 0.125).unwrap();
        for (lo, hi, n) in [(0, 8, 1), (0, 8, 2), (0, 8, 4), (0, 8, 8), (2, 6, 2), (1, 4, 3)] {
            let bin = TimeBin::new(&spec, lo, hi).unwrap();
            let lam = qn_norm(spec, bin, n).unwrap();
            let len = spec.x(hi - lo);
            assert!(lam <= len * (1.0 + 1e-12), "{lo} {hi} {n}: {lam} > {len}");
            assert!(lam > 0.0);
        }
        assert_eq!(qn_norm(spec, TimeBin::new(&spec, 3, 3).unwrap(), 1).unwrap(), 0.0);
    }

    #[test]
    fn small_time_link_is_exact_for_one_cell() {
        let spec = GridSpec::new(8, 0.125).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let state = RankOneState::random(spec, 2, 2, &mut rng);
        assert!(small_time_link(spec, &state, 1).unwrap() < 1e-12);
        assert!(small_time_link(spec, &state, 0).is_err());
    }
}
