//! Grid-independent test data: bump profiles sampled on any grid, so
//! convergence sweeps compare the same continuum objects across levels.

use carlab_core::grid::{make_test_function, BumpParams, Domain, GridFunction, GridSpec, TestFunctionKind};
use carlab_core::{MonomialObservable, RankOneState, Result};
use rand::Rng;

#[derive(Debug, Clone)]
pub(crate) struct SmoothCase {
    kets: Vec<BumpParams>,
    bras: Vec<BumpParams>,
    annihilators: Vec<BumpParams>,
    creators: Vec<BumpParams>,
}

/// `(kets, bras, annihilators, creators)`.
pub(crate) type Shape = (usize, usize, usize, usize);

impl SmoothCase {
    /// State bumps may be nonzero at the origin; monomial bumps vanish there
    /// and end before `monomial_support`.
    pub fn random<R: Rng>(shape: Shape, state_support: f64, monomial_support: f64, rng: &mut R) -> Self {
        let (n, m, p, q) = shape;
        let mut draw = |k: usize, domain: Domain, support: f64| -> Vec<BumpParams> {
            (0..k).map(|_| BumpParams::random(domain, support, rng)).collect()
        };
        Self {
            kets: draw(n, Domain::D, state_support),
            bras: draw(m, Domain::D, state_support),
            annihilators: draw(p, Domain::DStar, monomial_support),
            creators: draw(q, Domain::DStar, monomial_support),
        }
    }

    fn sample(spec: GridSpec, params: &[BumpParams], star: bool) -> Result<Vec<GridFunction>> {
        params
            .iter()
            .map(|&p| {
                make_test_function(
                    spec,
                    if star { TestFunctionKind::BumpDdStar(p) } else { TestFunctionKind::BumpDd(p) },
                )
            })
            .collect()
    }

    pub fn state(&self, spec: GridSpec) -> Result<RankOneState> {
        RankOneState::new(spec, Self::sample(spec, &self.kets, false)?, Self::sample(spec, &self.bras, false)?)
    }

    pub fn monomial(&self, spec: GridSpec) -> Result<MonomialObservable> {
        MonomialObservable::new(
            spec,
            Self::sample(spec, &self.annihilators, true)?,
            Self::sample(spec, &self.creators, true)?,
        )
    }
}
