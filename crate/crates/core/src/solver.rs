//! Perturbed semigroups: the integral equation pairing against the flow of
//! shifts, and the monotone Picard iteration on dense superoperators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{dense_dim, FockOperator};
use crate::grid::GridFunction;
use crate::measure::CPMeasureBin;
use crate::operator::min_eigenvalue;
use crate::shift::{flow_of_shifts, phi_superoperator, psi_low_rank, MonomialObservable, RankOneState};
use crate::superop::{cp_order_check, SuperoperatorMatrix, CP_TOLERANCE, MAX_SUPEROP_DIM};

/// Both sides of `Tr(ρ Φ̌_t(X)) = Tr(Ψ_t(ρ) X) + Σ_bins Tr(M_*(bin)(ρ) Φ̌_{t-s}(X))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEquation {
    pub flow_term: C64,
    pub unperturbed_term: C64,
    pub measure_term: C64,
    pub residual: f64,
    pub scale: f64,
}

fn check_partition(bins: &[CPMeasureBin], t: usize) -> Result<()> {
    let mut edge = 0;
    for b in bins {
        if b.bin().lo() != edge {
            return Err(Error::BinsNotPartition(t));
        }
        edge = b.bin().hi();
    }
    if edge != t {
        return Err(Error::BinsNotPartition(t));
    }
    Ok(())
}

/// Evaluate the integral equation at `t = m·h`. Each bin is weighted at its
/// left edge, so `bins` must partition `[0, t)`.
pub fn integral_equation_residual(
    m: usize,
    state: &RankOneState,
    x: &MonomialObservable,
    bins: &[CPMeasureBin],
) -> Result<IntegralEquation> {
    check_partition(bins, m)?;
    let cells = state.spec().num_points();
    let reach = x.annihilators().iter().chain(x.creators()).map(GridFunction::support_end).max().unwrap_or(0);
    if reach + m > cells {
        return Err(Error::DomainViolation(format!(
            "monomial supported up to cell {reach} leaves the {cells}-cell grid when shifted by {m}"
        )));
    }
    let rho = state.to_low_rank()?;
    let flow_term = rho.pair(&flow_of_shifts(m, x))?;
    let unperturbed_term = psi_low_rank(m, &rho).pair(x)?;
    let mut measure_term = C64::new(0.0, 0.0);
    let mut scale = flow_term.norm() + unperturbed_term.norm();
    for b in bins {
        let term = b.action(&rho)?.pair(&flow_of_shifts(m - b.bin().lo(), x))?;
        scale += term.norm();
        measure_term += term;
    }
    let residual = (flow_term - unperturbed_term - measure_term).norm();
    Ok(IntegralEquation { flow_term, unperturbed_term, measure_term, residual, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PicardVariant {
    /// `Φ^{n+1}_t = Φ_t + Σ_s M([s,s+h)) ∘ Φ^n_{t-s}`.
    Convolution,
    /// `Φ^{n+1}_t = Φ_t + Σ_r M([r,r+h)) ∘ Φ^n_r`.
    Literal,
}

impl PicardVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Convolution => "convolution",
            Self::Literal => "literal",
        }
    }
}

impl std::str::FromStr for PicardVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convolution" => Ok(Self::Convolution),
            "literal" => Ok(Self::Literal),
            other => Err(Error::InvalidParams(format!("unknown Picard variant '{other}'"))),
        }
    }
}

/// Certificates for one time point of one Picard step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCertificate {
    pub step: usize,
    pub time: usize,
    /// Smallest Choi eigenvalue of `Φ^{n+1}_t - Φ^n_t`.
    pub increment_min_eigenvalue: f64,
    /// Smallest eigenvalue of `I - Φ^{n+1}_t(I)`.
    pub unit_gap_min_eigenvalue: f64,
    /// Largest entry of `Φ^{n+1}_t - Φ^n_t`.
    pub increment: f64,
}

#[derive(Debug, Clone)]
pub struct PicardState {
    variant: PicardVariant,
    modes: usize,
    /// `history[n][t]` is `Φ^n_t`; `history[0]` is the unperturbed semigroup.
    history: Vec<Vec<SuperoperatorMatrix>>,
    certificates: Vec<StepCertificate>,
}

impl PicardState {
    pub fn variant(&self) -> PicardVariant {
        self.variant
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn steps(&self) -> usize {
        self.history.len() - 1
    }

    /// Largest grid time index covered.
    pub fn horizon(&self) -> usize {
        self.history[0].len() - 1
    }

    pub fn iterate(&self, n: usize) -> &[SuperoperatorMatrix] {
        &self.history[n]
    }

    pub fn limit(&self) -> &[SuperoperatorMatrix] {
        self.history.last().expect("history starts with the base iterate")
    }

    pub fn certificates(&self) -> &[StepCertificate] {
        &self.certificates
    }

    /// Step after which no entry changes by more than `tol`, if any.
    pub fn stationary_after(&self, tol: f64) -> Option<usize> {
        (1..=self.steps()).find(|&n| self.certificates.iter().filter(|c| c.step >= n).all(|c| c.increment <= tol))
    }
}

/// `x ↦ Σ K s(x) K^†`, applied column by column.
fn kraus_after(kraus: &[FockOperator], s: &SuperoperatorMatrix) -> Result<SuperoperatorMatrix> {
    let d = s.dim();
    let n = d * d;
    let mut mat = DMatrix::zeros(n, n);
    for col in 0..n {
        let x = DMatrix::from_column_slice(d, d, s.matrix().column(col).as_slice());
        let y = kraus.iter().fold(DMatrix::zeros(d, d), |acc: FockOperator, k| acc + k * &x * k.adjoint());
        mat.column_mut(col).copy_from_slice(y.as_slice());
    }
    SuperoperatorMatrix::from_matrix(d, s.tag().to_string(), mat)
}

/// Monotone Picard iteration on `[0, T)` with unit-width `bins`
/// (`bins[r]` covers `[r, r+1)`), starting from the unperturbed semigroup.
pub fn picard_iterate(bins: &[CPMeasureBin], variant: PicardVariant, n_steps: usize) -> Result<PicardState> {
    let first = bins.first().ok_or_else(|| Error::InvalidParams("Picard iteration needs at least one bin".into()))?;
    let spec = *first.spec();
    let modes = spec.num_points();
    let dim = dense_dim(modes)?;
    if dim > MAX_SUPEROP_DIM {
        return Err(Error::TooManyModes { modes, limit: MAX_SUPEROP_DIM.trailing_zeros() as usize });
    }
    for (r, b) in bins.iter().enumerate() {
        if b.bin().lo() != r || b.bin().hi() != r + 1 || *b.spec() != spec {
            return Err(Error::BinsNotPartition(bins.len()));
        }
    }
    let horizon = bins.len();
    let kraus: Vec<Vec<FockOperator>> =
        bins.iter().map(|b| Ok(b.dense_kraus()?.iter().map(|v| v.adjoint()).collect())).collect::<Result<_>>()?;
    let base: Vec<SuperoperatorMatrix> = (0..=horizon).map(|t| phi_superoperator(modes, t)).collect::<Result<_>>()?;
    let unit = FockOperator::identity(dim, dim);
    let mut history = vec![base.clone()];
    let mut certificates = Vec::new();
    for step in 1..=n_steps {
        let current = history.last().expect("non-empty");
        let mut next = Vec::with_capacity(horizon + 1);
        for t in 0..=horizon {
            let mut acc = base[t].clone();
            for r in 0..t {
                let inner = match variant {
                    PicardVariant::Convolution => &current[t - r],
                    PicardVariant::Literal => &current[r],
                };
                if !kraus[r].is_empty() {
                    acc = acc.add(&kraus_after(&kraus[r], inner)?)?;
                }
            }
            let increment_min_eigenvalue = cp_order_check(&acc, &current[t], CP_TOLERANCE)?.min_eigenvalue;
            let unit_gap_min_eigenvalue = min_eigenvalue(&(&unit - acc.apply(&unit)?));
            let increment = acc.max_entry_diff(&current[t])?;
            certificates.push(StepCertificate {
                step,
                time: t,
                increment_min_eigenvalue,
                unit_gap_min_eigenvalue,
                increment,
            });
            next.push(acc.with_tag(format!("phi^{step}_{t}")));
        }
        history.push(next);
    }
    Ok(PicardState { variant, modes, history, certificates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityReport {
    /// `max |Tr(ρ Φ^∞_t(X)) - Tr(ρ Φ̌_t(X))|` over the test set and times.
    pub reference_gap: f64,
    /// Largest `|Tr(ρ Φ̌_t(X))|`, for relative comparisons.
    pub reference_scale: f64,
    /// Smallest Choi eigenvalue of `Φ^∞_t - Φ^n_t` over all `n` and `t`.
    pub prefix_min_eigenvalue: f64,
}

/// Compare the Picard limit with the flow of shifts on a set of state and
/// monomial pairs, and check that every iterate lies below the limit.
/// Reference comparisons use times `0..=max_time`; the monomials must stay
/// inside the grid when shifted that far.
pub fn minimality_report(
    picard: &PicardState,
    tests: &[(RankOneState, MonomialObservable)],
    max_time: usize,
) -> Result<MinimalityReport> {
    if max_time > picard.horizon() {
        return Err(Error::InvalidParams(format!("time {max_time} beyond Picard horizon {}", picard.horizon())));
    }
    let limit = picard.limit();
    let mut reference_gap: f64 = 0.0;
    let mut reference_scale: f64 = 0.0;
    for (state, x) in tests {
        if state.spec().num_points() != picard.modes {
            return Err(Error::DimensionMismatch(format!(
                "test pair on {} modes, Picard state on {}",
                state.spec().num_points(),
                picard.modes
            )));
        }
        let rho = state.to_low_rank()?;
        let xd = x.to_dense()?;
        for (t, phi_t) in limit.iter().enumerate().take(max_time + 1) {
            let reference = rho.pair(&flow_of_shifts(t, x))?;
            let got = rho.pair(&phi_t.apply(&xd)?)?;
            reference_gap = reference_gap.max((got - reference).norm());
            reference_scale = reference_scale.max(reference.norm());
        }
    }
    let mut prefix_min_eigenvalue = f64::INFINITY;
    for n in 0..picard.steps() {
        for (t, phi_t) in limit.iter().enumerate() {
            let v = cp_order_check(phi_t, &picard.iterate(n)[t], CP_TOLERANCE)?;
            prefix_min_eigenvalue = prefix_min_eigenvalue.min(v.min_eigenvalue);
        }
    }
    Ok(MinimalityReport { reference_gap, reference_scale, prefix_min_eigenvalue })
}
