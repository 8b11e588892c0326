//! The generator identity `Tr((L + Δ)(ρ) X) = Tr(ρ Ľ(X))` on compliant
//! random cases, its failure without the boundary condition, and the order
//! of the one-sided difference schemes.

use carlab_core::grid::{Domain, GridFunction, GridSpec};
use carlab_core::shift::{generator_identity, generator_identity_unchecked};
use carlab_core::{DifferenceScheme, MonomialObservable, RankOneState};
use rand::Rng;

use super::smooth::{Shape, SmoothCase};
use super::{max_of, min_of, par_cases, relative, Checks};
use crate::config::ExperimentConfig;
use crate::report::{ConvergenceTable, Criterion, SuiteReport};
use crate::rng::case_rng;

const ANCHOR: &str = "generator identity for the perturbed shift semigroup";

/// Even monomials with a nonzero pairing: `m = n + q - p`, `p + q` even,
/// all counts at most 2.
pub(crate) fn compliant_shapes() -> Vec<Shape> {
    let mut out = Vec::new();
    for n in 0..=2usize {
        for m in 0..=2usize {
            for p in 0..=2usize {
                for q in 0..=2usize {
                    if n + q == m + p && (p + q) % 2 == 0 {
                        out.push((n, m, p, q));
                    }
                }
            }
        }
    }
    out
}

fn random_monomial<R: Rng>(spec: GridSpec, p: usize, q: usize, domain: Domain, rng: &mut R) -> MonomialObservable {
    let a = (0..p).map(|_| GridFunction::random(spec, domain, rng)).collect();
    let c = (0..q).map(|_| GridFunction::random(spec, domain, rng)).collect();
    MonomialObservable::new(spec, a, c).expect("same grid")
}

/// Monomial whose first argument is nonzero at the origin.
fn boundary_monomial<R: Rng>(spec: GridSpec, p: usize, q: usize, rng: &mut R) -> MonomialObservable {
    let x = random_monomial(spec, p, q, Domain::DStar, rng);
    let bad = GridFunction::random(spec, Domain::D, rng);
    x.with_slot(0, bad).expect("slot exists")
}

fn smooth_cases(config: &ExperimentConfig) -> Vec<SmoothCase> {
    let support = 0.875 * config.x_max;
    [(1, 1, 1, 1), (2, 2, 1, 1), (2, 0, 2, 0), (0, 2, 0, 2)]
        .iter()
        .enumerate()
        .map(|(i, &shape)| {
            SmoothCase::random(shape, support, support, &mut case_rng(config.seed, "generator/smooth", i as u64))
        })
        .collect()
}

/// Largest relative residual over the smooth cases on each grid of the sweep.
fn scheme_sweep(config: &ExperimentConfig, levels: usize, scheme: DifferenceScheme, name: &str) -> ConvergenceTable {
    let cases = smooth_cases(config);
    let grids: Vec<usize> = (0..levels).map(|k| config.sweep_base_points << k).collect();
    let data: Vec<(f64, f64)> = par_cases(grids.len(), |k| {
        let err = GridSpec::covering(grids[k], config.x_max).and_then(|spec| {
            max_of(cases.iter().map(|c| {
                let r = generator_identity(&c.state(spec)?, &c.monomial(spec)?, scheme)?;
                Ok(relative(r.residual, r.scale))
            }))
        });
        (config.x_max / grids[k] as f64, err.unwrap_or(f64::NAN))
    });
    let criterion = Criterion::Ratio { threshold: config.tol_ratio };
    ConvergenceTable::evaluate(name, ANCHOR, "h", &data, config.exact_floor, criterion)
}

/// Exact difference pair: every level should sit at the floor.
pub fn generator_sweep(config: &ExperimentConfig, levels: usize) -> ConvergenceTable {
    scheme_sweep(config, levels, DifferenceScheme::Symmetric, "symmetric_exactness")
}

/// Forward differences on both sides: first order in h.
pub fn same_side_sweep(config: &ExperimentConfig, levels: usize) -> ConvergenceTable {
    scheme_sweep(config, levels, DifferenceScheme::SameSide, "same_side_order")
}

pub(super) fn run(config: &ExperimentConfig) -> SuiteReport {
    let mut checks = Checks::default();
    let spec = match GridSpec::covering(config.grid_points, config.x_max) {
        Ok(s) => s,
        Err(e) => {
            checks.at_most("grid", "grid construction", Err::<f64, _>(e), 0.0);
            return checks.finish("generator");
        }
    };
    let seed = config.seed;
    let tol = config.tol_identity;
    let shapes = compliant_shapes();

    let compliant = max_of(par_cases(config.random_cases, |i| {
        let mut rng = case_rng(seed, "generator/compliant", i as u64);
        let (n, m, p, q) = shapes[i % shapes.len()];
        let state = RankOneState::random(spec, n, m, &mut rng);
        let x = random_monomial(spec, p, q, Domain::DStar, &mut rng);
        let r = generator_identity(&state, &x, DifferenceScheme::Symmetric)?;
        Ok::<_, carlab_core::Error>(relative(r.residual, r.scale))
    }));
    checks.at_most("identity_random_cases", ANCHOR, compliant, tol).detail = format!(
        "{} cases on {} points, kets/bras/annihilators/creators <= 2, symmetric difference pair",
        config.random_cases, config.grid_points
    );

    let floor = config.negative_factor * tol;
    let boundary = min_of(par_cases(config.negative_cases, |i| {
        let mut rng = case_rng(seed, "generator/boundary", i as u64);
        let n = 1 + i % 2;
        let state = RankOneState::random(spec, n, n, &mut rng);
        let x = boundary_monomial(spec, 1, 1, &mut rng);
        let r = generator_identity_unchecked(&state, &x, DifferenceScheme::Symmetric)?;
        Ok::<_, carlab_core::Error>(relative(r.residual, r.scale))
    }));
    checks
        .exceeds("boundary_value_breaks_identity", "identity needs h(0) = 0 for monomial arguments", boundary, floor)
        .detail = format!("smallest relative residual over {} cases with h(0) != 0", config.negative_cases);

    let mut rng = case_rng(seed, "generator/rejections", 0);
    let state = RankOneState::random(spec, 1, 1, &mut rng);
    let bad = boundary_monomial(spec, 1, 1, &mut rng);
    checks.rejects(
        "checked_identity_rejects_boundary_value",
        "identity needs h(0) = 0 for monomial arguments",
        generator_identity(&state, &bad, DifferenceScheme::Symmetric),
    );
    let odd_state = RankOneState::random(spec, 1, 2, &mut rng);
    let odd = random_monomial(spec, 0, 1, Domain::DStar, &mut rng);
    checks.rejects(
        "checked_identity_rejects_odd_monomial",
        "boundary term balances even monomials only",
        generator_identity(&odd_state, &odd, DifferenceScheme::Symmetric),
    );

    let odd_defect = min_of(par_cases(config.negative_cases, |i| {
        let mut rng = case_rng(seed, "generator/odd", i as u64);
        let state = RankOneState::random(spec, 1, 2, &mut rng);
        let x = random_monomial(spec, 0, 1, Domain::DStar, &mut rng);
        let r = generator_identity_unchecked(&state, &x, DifferenceScheme::Symmetric)?;
        Ok::<_, carlab_core::Error>(relative(r.residual, r.scale))
    }));
    checks.exceeds("odd_monomial_breaks_identity", "boundary term balances even monomials only", odd_defect, floor);

    let one_sided = min_of(par_cases(config.negative_cases, |i| {
        let mut rng = case_rng(seed, "generator/one_sided", i as u64);
        let state = RankOneState::random(spec, 1, 1, &mut rng);
        let x = random_monomial(spec, 1, 1, Domain::DStar, &mut rng);
        let r = generator_identity(&state, &x, DifferenceScheme::ForwardBackward)?;
        Ok::<_, carlab_core::Error>(relative(r.residual, r.scale))
    }));
    checks.exceeds("forward_backward_pair_is_not_exact", "discrete integration by parts", one_sided, floor).detail =
        "forward differences on states against backward on observables leave an O(h) defect".into();

    let levels = config.halvings + 1;
    checks.table(generator_sweep(config, levels));
    checks.table(same_side_sweep(config, levels));
    checks.finish("generator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_balance_particle_number() {
        let s = compliant_shapes();
        assert!(s.contains(&(1, 1, 1, 1)));
        assert!(s.contains(&(0, 2, 0, 2)));
        assert!(!s.contains(&(1, 1, 1, 0)));
        assert!(s.iter().all(|&(n, m, p, q)| (p + q) % 2 == 0 && n + q == m + p));
    }
}
