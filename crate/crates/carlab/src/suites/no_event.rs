//! Generic no-event semigroups `T_t = e^{tK}` with couplings `L_j`: the
//! excessive map `Θ`, its measure, and the admissibility conditions.

use carlab_core::no_event::{
    contraction_norm, delta_block_matrix, heisenberg_flow, measure_from_theta, measure_quadrature, random_admissible,
    theta_auto, theta_superoperator, CouplingFamily, DissipativeGenerator, ThetaMethod,
};
use carlab_core::operator::min_eigenvalue;
use carlab_core::superop::{cp_order_check, is_completely_positive, SuperoperatorMatrix};
use carlab_core::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{max_of, min_of, par_cases, Checks};
use crate::config::ExperimentConfig;
use crate::report::SuiteReport;
use crate::rng::case_rng;

type CoreResult<T> = carlab_core::Result<T>;
type Matrix = DMatrix<C64>;

const DAMPING: [f64; 3] = [0.0, 0.3, 1.0];

fn instance(config: &ExperimentConfig, i: usize) -> CoreResult<(DissipativeGenerator, CouplingFamily)> {
    let mut rng = case_rng(config.seed, "no_event/instance", i as u64);
    random_admissible(config.no_event_dim, config.no_event_couplings, DAMPING[i % DAMPING.len()], &mut rng)
}

/// Largest entry difference relative to the largest entry of `b`.
fn entry_gap(a: &SuperoperatorMatrix, b: &SuperoperatorMatrix) -> CoreResult<f64> {
    let scale = b.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(a.max_entry_diff(b)? / scale.max(f64::MIN_POSITIVE))
}

/// Amplitude damping of `|1>` at rate `gamma`.
fn qubit(gamma: f64) -> CoreResult<(DissipativeGenerator, CouplingFamily)> {
    let mut k = Matrix::zeros(2, 2);
    k[(1, 1)] = C64::new(-gamma / 2.0, 0.0);
    let mut l = Matrix::zeros(2, 2);
    l[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
    let g = DissipativeGenerator::new(k)?;
    let f = CouplingFamily::new(vec![l], &g)?;
    Ok((g, f))
}

pub(super) fn run(config: &ExperimentConfig) -> SuiteReport {
    let mut checks = Checks::default();
    let count = DAMPING.len();
    let tol = config.tol_theta;

    // Θ by both methods for every instance, computed once
    let thetas = par_cases(count, |i| {
        let (g, f) = instance(config, i)?;
        let lyap = theta_superoperator(&g, &f, ThetaMethod::Lyapunov)?;
        let quad = theta_superoperator(&g, &f, ThetaMethod::Quadrature)?;
        Ok::<_, carlab_core::Error>((g, f, lyap, quad))
    });

    let agreement = max_of(thetas.iter().map(|r| {
        let (_, _, lyap, quad) = r.as_ref().map_err(ToString::to_string)?;
        entry_gap(lyap, quad).map_err(|e| e.to_string())
    }));
    checks.at_most("theta_lyapunov_matches_quadrature", "excessive map as a time integral", agreement, tol).detail =
        format!("{count} random generators, d = {}", config.no_event_dim);

    let theta_cp = min_of(thetas.iter().map(|r| {
        let (_, _, lyap, _) = r.as_ref().map_err(ToString::to_string)?;
        Ok::<_, String>(is_completely_positive(lyap, config.tol_cp).min_eigenvalue)
    }));
    checks.at_least("theta_is_completely_positive", "excessive map is completely positive", theta_cp, -config.tol_cp);

    let times = &config.excessivity_times;
    let excessive = min_of(thetas.iter().flat_map(|r| {
        times.iter().map(move |&t| {
            let (g, _, lyap, _) = r.as_ref().map_err(ToString::to_string)?;
            let later = heisenberg_flow(g, t).and_then(|flow| flow.compose(lyap)).map_err(|e| e.to_string())?;
            Ok::<_, String>(cp_order_check(lyap, &later, config.tol_cp).map_err(|e| e.to_string())?.min_eigenvalue)
        })
    }));
    checks.at_least("theta_is_excessive", "Theta dominates Phi_t o Theta", excessive, -config.tol_cp).detail =
        format!("t in {times:?}");

    let unit = min_of(thetas.iter().map(|r| {
        let (g, _, lyap, _) = r.as_ref().map_err(ToString::to_string)?;
        let d = g.dim();
        let id = Matrix::identity(d, d);
        Ok::<_, String>(min_eigenvalue(&(&id - lyap.apply(&id).map_err(|e| e.to_string())?)))
    }));
    checks.at_least("theta_unit_bound", "Theta(I) <= I", unit, -config.tol_cp);

    let intervals = [(0.0, 0.5), (0.1, 1.0), (0.5, 2.0)];
    let measure = max_of(thetas.iter().flat_map(|r| {
        intervals.iter().map(move |&(t, s)| {
            let (g, f, _, _) = r.as_ref().map_err(ToString::to_string)?;
            let from_theta = measure_from_theta(g, f, t, s, ThetaMethod::Lyapunov).map_err(|e| e.to_string())?;
            let quad = measure_quadrature(g, f, t, s).map_err(|e| e.to_string())?;
            entry_gap(&from_theta, &quad).map_err(|e| e.to_string())
        })
    }));
    checks.at_most("measure_from_theta_matches_quadrature", "M([t,s)) = Phi_t o Theta - Phi_s o Theta", measure, tol);

    let closed_form = (|| -> CoreResult<f64> {
        let (g, f) = qubit(1.0)?;
        let (theta, _) = theta_auto(&g, &f, &Matrix::identity(2, 2))?;
        let mut one = Matrix::zeros(2, 2);
        one[(1, 1)] = C64::new(1.0, 0.0);
        Ok((theta - one).iter().map(|z| z.norm()).fold(0.0, f64::max))
    })();
    checks.at_most("qubit_theta_closed_form", "damped qubit: Theta(I) = |1><1|", closed_form, config.tol_closed_form);

    let contraction = max_of(par_cases(count, |i| {
        let (g, _) = instance(config, i)?;
        max_of([0.0, 0.1, 0.5, 1.0, 2.0, 5.0].map(|t| contraction_norm(&g, t)))
    }));
    checks.at_most("no_event_semigroup_contracts", "||T_t|| <= 1", contraction, 1.0 + 1e-12);

    let margin = par_cases(count, |i| {
        let (g, f) = instance(config, i)?;
        Ok::<_, carlab_core::Error>(f.admissibility_margin(&g))
    })
    .into_iter()
    .try_fold(f64::NEG_INFINITY, |acc, m| m.map(|m| if m.is_nan() { m } else { acc.max(m) }));
    checks.at_most("couplings_are_admissible", "sum L^*L <= -(K + K^*)", margin, 1e-12).detail =
        "largest eigenvalue of sum L^*L + K + K^*".into();

    let blocks = min_of(par_cases(count, |i| {
        let (_, f) = instance(config, i)?;
        let mut rng = case_rng(config.seed, "no_event/blocks", i as u64);
        let d = config.no_event_dim;
        let psis: Vec<DVector<C64>> = (0..3)
            .map(|_| DVector::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        Ok::<_, carlab_core::Error>(min_eigenvalue(&delta_block_matrix(&f, &psis)?))
    }));
    checks.at_least(
        "delta_is_completely_positive",
        "Delta built from couplings is completely positive",
        blocks,
        -config.tol_cp,
    );

    let (g, f) = match qubit(1.0) {
        Ok(pair) => pair,
        Err(e) => {
            checks.at_most("qubit", "damped qubit", Err::<f64, _>(e), 0.0);
            return checks.finish("no_event");
        }
    };
    let doubled: Vec<Matrix> = f.ls().iter().map(|l| l * C64::new(2.0, 0.0)).collect();
    checks.rejects("rejects_inadmissible_couplings", "sum L^*L <= -(K + K^*)", CouplingFamily::new(doubled, &g));
    checks.rejects(
        "rejects_non_dissipative_generator",
        "K + K^* <= 0",
        DissipativeGenerator::new(Matrix::identity(2, 2) * C64::new(0.1, 0.0)),
    );
    checks.finish("no_event")
}
