use carlab_core::grid::{make_test_function, BumpParams, TestFunctionKind};
use carlab_core::measure::{kraus_riemann_sum, small_time_link};
use carlab_core::shift::{delta_perturbation, generator_identity};
use carlab_core::{
    CPMeasureBin, DifferenceScheme, Domain, GridFunction, GridSpec, MonomialObservable, RankOneState, TimeBin,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Bumps {
    kets: Vec<BumpParams>,
    bras: Vec<BumpParams>,
    observable: Vec<BumpParams>,
}

impl Bumps {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            kets: vec![BumpParams::random(Domain::D, 0.8, &mut rng)],
            bras: vec![BumpParams::random(Domain::D, 0.8, &mut rng)],
            observable: (0..2).map(|_| BumpParams::random(Domain::DStar, 0.8, &mut rng)).collect(),
        }
    }

    fn sample(spec: GridSpec, ps: &[BumpParams], star: bool) -> Vec<GridFunction> {
        ps.iter()
            .map(|&p| {
                let kind = if star { TestFunctionKind::BumpDdStar(p) } else { TestFunctionKind::BumpDd(p) };
                make_test_function(spec, kind).unwrap()
            })
            .collect()
    }

    fn state(&self, spec: GridSpec) -> RankOneState {
        RankOneState::new(spec, Self::sample(spec, &self.kets, false), Self::sample(spec, &self.bras, false)).unwrap()
    }

    fn monomial(&self, spec: GridSpec) -> MonomialObservable {
        let mut fs = Self::sample(spec, &self.observable, true);
        let c = fs.split_off(1);
        MonomialObservable::new(spec, fs, c).unwrap()
    }
}

fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

#[test]
fn same_side_scheme_is_first_order() {
    let bumps = Bumps::new(7);
    let errors: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&m| {
            let spec = GridSpec::covering(m, 1.0).unwrap();
            let r = generator_identity(&bumps.state(spec), &bumps.monomial(spec), DifferenceScheme::SameSide).unwrap();
            r.residual / r.scale
        })
        .collect();
    for q in ratios(&errors) {
        assert!(q >= 1.7, "{errors:?}");
    }
}

#[test]
fn symmetric_scheme_is_exact_on_smooth_data() {
    let bumps = Bumps::new(8);
    for m in [16, 32, 64] {
        let spec = GridSpec::covering(m, 1.0).unwrap();
        let r = generator_identity(&bumps.state(spec), &bumps.monomial(spec), DifferenceScheme::Symmetric).unwrap();
        assert!(r.residual <= 1e-12 * r.scale, "{m}: {r:?}");
    }
}

#[test]
fn riemann_sums_approach_the_quadrature_measure() {
    let spec = GridSpec::covering(64, 1.0).unwrap();
    let bumps = Bumps::new(9);
    let state = bumps.state(spec);
    let bin = TimeBin::new(&spec, 8, 40).unwrap();
    let exact = CPMeasureBin::quadrature(spec, bin).unwrap().action_on_state(&state).unwrap();
    let errors: Vec<f64> = [2, 4, 8, 16]
        .iter()
        .map(|&n| {
            let approx = kraus_riemann_sum(spec, bin, n).unwrap().action_on_state(&state).unwrap();
            approx.sub(&exact).trace_norm() / exact.trace_norm()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let at_cells = kraus_riemann_sum(spec, bin, 32).unwrap().action_on_state(&state).unwrap();
    assert!(at_cells.sub(&exact).trace_norm() <= 1e-12 * exact.trace_norm());
}

#[test]
fn small_time_link_is_first_order() {
    let bumps = Bumps::new(10);
    let errors: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&m| {
            let spec = GridSpec::covering(m, 1.0).unwrap();
            let state = bumps.state(spec);
            let scale = delta_perturbation(&state).unwrap().trace_norm();
            small_time_link(spec, &state, 2).unwrap() / scale
        })
        .collect();
    // the coarsest grid is still pre-asymptotic for this bump
    let qs = ratios(&errors);
    assert!(qs.iter().all(|&q| q > 1.0), "{errors:?}");
    assert!(qs[qs.len() - 1] >= 1.7, "{errors:?}");
}
