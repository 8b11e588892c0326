//! Canonical anticommutation relations, the determinant formula for wedge
//! products, and the number map `Ξ_*`.

use carlab_core::fock::{
    annihilate, annihilation_operator, antisymmetrize_oracle, create, creation_operator, ladder_of_function,
    wedge_vector, xi_star, LadderKind,
};
use carlab_core::grid::{inner_product, GridFunction, GridSpec};
use carlab_core::superop::{is_completely_positive, SuperoperatorMatrix};
use carlab_core::{FockVector, C64};
use nalgebra::DMatrix;
use rand::Rng;

use super::sparse::{max_abs, Dense, Sparse};
use super::{max_of, par_cases, relative, Checks};
use crate::config::ExperimentConfig;
use crate::report::SuiteReport;
use crate::rng::case_rng;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `a_k = Z ⊗ … ⊗ Z ⊗ σ⁻ ⊗ I ⊗ … ⊗ I`, mode 0 on the least significant bit.
fn jordan_wigner(modes: usize, k: usize) -> Dense {
    let id = Dense::identity(2, 2);
    let z = Dense::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE]));
    let mut lower = Dense::zeros(2, 2);
    lower[(0, 1)] = ONE;
    let mut m = Dense::identity(1, 1);
    for j in (0..modes).rev() {
        let factor = match j.cmp(&k) {
            std::cmp::Ordering::Equal => &lower,
            std::cmp::Ordering::Less => &z,
            std::cmp::Ordering::Greater => &id,
        };
        m = m.kronecker(factor);
    }
    m
}

fn random_density<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> Dense {
    let b = Dense::from_fn(dim, rank, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &b * b.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn random_sparse_vector<R: Rng>(modes: usize, rng: &mut R) -> FockVector {
    let dim = 1usize << modes;
    let dense = nalgebra::DVector::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    FockVector::from_dense(modes, &dense).expect("dimension matches")
}

fn anticommutator(a: &Sparse, b: &Sparse) -> Dense {
    a.left(&b.to_dense()) + b.left(&a.to_dense())
}

fn number_trace(rho: &Dense) -> C64 {
    (0..rho.nrows()).map(|i| rho[(i, i)] * (i.count_ones() as f64)).sum()
}

pub(super) fn run(config: &ExperimentConfig) -> SuiteReport {
    let mut checks = Checks::default();
    let modes = config.grid_points;
    let dim = 1usize << modes;
    let spec = match GridSpec::covering(modes, config.x_max) {
        Ok(s) => s,
        Err(e) => {
            checks.at_most("grid", "grid construction", Err::<f64, _>(e), 0.0);
            return checks.finish("car_algebra");
        }
    };
    let seed = config.seed;
    let tol = config.tol_identity;
    let identity = Dense::identity(dim, dim);

    let ladders: Vec<(Sparse, Sparse)> = (0..modes)
        .map(|k| {
            let a = annihilation_operator(modes, k).expect("mode in range");
            let c = creation_operator(modes, k).expect("mode in range");
            (Sparse::from_dense(&a), Sparse::from_dense(&c))
        })
        .collect();

    let jw = max_of(
        (0..modes).map(|k| Ok::<_, carlab_core::Error>(max_abs(&(ladders[k].0.to_dense() - jordan_wigner(modes, k))))),
    );
    checks.at_most("ladder_matches_jordan_wigner", "ladder operators in the occupation basis", jw, tol);

    let pairs: Vec<(usize, usize)> = (0..modes).flat_map(|j| (0..modes).map(move |k| (j, k))).collect();
    let mixed = par_cases(pairs.len(), |i| {
        let (j, k) = pairs[i];
        let delta = if j == k { ONE } else { ZERO };
        max_abs(&(anticommutator(&ladders[j].0, &ladders[k].1) - &identity * delta))
    });
    checks.at_most(
        "anticommutator_annihilation_creation",
        "CAR: {a_j, a_k^*} = delta_jk",
        Ok::<_, String>(mixed.iter().copied().fold(0.0, f64::max)),
        tol,
    );
    let same = par_cases(pairs.len(), |i| {
        let (j, k) = pairs[i];
        max_abs(&anticommutator(&ladders[j].0, &ladders[k].0))
            .max(max_abs(&anticommutator(&ladders[j].1, &ladders[k].1)))
    });
    checks.at_most(
        "anticommutator_same_type",
        "CAR: {a_j, a_k} = {a_j^*, a_k^*} = 0",
        Ok::<_, String>(same.iter().copied().fold(0.0, f64::max)),
        tol,
    );

    let adjoint_modes =
        ladders.iter().map(|(a, c)| max_abs(&(c.to_dense() - a.to_dense().adjoint()))).fold(0.0, f64::max);
    let adjoint_fns = max_of(par_cases(10, |i| {
        let mut rng = case_rng(seed, "car/adjoint", i as u64);
        let f = GridFunction::random_on(spec, 0..modes, &mut rng);
        let u = random_sparse_vector(modes, &mut rng);
        let v = random_sparse_vector(modes, &mut rng);
        let lhs = annihilate(&f, &u)?.inner(&v);
        let rhs = u.inner(&create(&f, &v)?);
        let dense_a = ladder_of_function(&f, LadderKind::Annihilate)?;
        let dense_c = ladder_of_function(&f, LadderKind::Create)?;
        let scale = f.norm() * u.norm() * v.norm();
        Ok::<_, carlab_core::Error>(relative((lhs - rhs).norm(), scale).max(max_abs(&(dense_c - dense_a.adjoint()))))
    }));
    checks.at_most("adjointness", "a^*(f) is the adjoint of a(f)", adjoint_fns.map(|v| v.max(adjoint_modes)), tol);

    let nil_modes = ladders
        .iter()
        .map(|(a, c)| max_abs(&a.left(&a.to_dense())).max(max_abs(&c.left(&c.to_dense()))))
        .fold(0.0, f64::max);
    let nil_fns = max_of(par_cases(10, |i| {
        let mut rng = case_rng(seed, "car/nilpotent", i as u64);
        let f = GridFunction::random_on(spec, 0..modes, &mut rng);
        let a = Sparse::from_dense(&ladder_of_function(&f, LadderKind::Annihilate)?);
        Ok::<_, carlab_core::Error>(max_abs(&a.left(&a.to_dense())))
    }));
    checks.at_most("nilpotency", "a_k^2 = (a_k^*)^2 = a(f)^2 = 0", nil_fns.map(|v| v.max(nil_modes)), tol);

    let smeared = max_of(par_cases(10, |i| {
        let mut rng = case_rng(seed, "car/smeared", i as u64);
        let f = GridFunction::random_on(spec, 0..modes, &mut rng);
        let g = GridFunction::random_on(spec, 0..modes, &mut rng);
        let af = Sparse::from_dense(&ladder_of_function(&f, LadderKind::Annihilate)?);
        let ag = Sparse::from_dense(&ladder_of_function(&g, LadderKind::Annihilate)?);
        let cg = Sparse::from_dense(&ladder_of_function(&g, LadderKind::Create)?);
        let ip = inner_product(&f, &g)?;
        let scale = f.norm() * g.norm();
        let mixed = max_abs(&(anticommutator(&af, &cg) - &identity * ip));
        let same = max_abs(&anticommutator(&af, &ag));
        Ok::<_, carlab_core::Error>(relative(mixed.max(same), scale))
    }));
    checks.at_most("smeared_anticommutator", "CAR: {a(f), a^*(g)} = <f, g>", smeared, tol);

    let norms = max_of(par_cases(config.car_samples, |i| {
        let mut rng = case_rng(seed, "car/norm", i as u64);
        let f = GridFunction::random_on(spec, 0..modes, &mut rng);
        let a = ladder_of_function(&f, LadderKind::Annihilate)?;
        let op_norm = a.singular_values().max();
        Ok::<_, carlab_core::Error>(relative((op_norm - f.norm()).abs(), f.norm()))
    }));
    checks.at_most("ladder_norm_equals_function_norm", "||a(f)|| = ||f||", norms, tol).detail =
        format!("{} random functions", config.car_samples);

    determinant_checks(&mut checks, spec, config);
    xi_checks(&mut checks, spec, config);
    checks.finish("car_algebra")
}

fn determinant_checks(checks: &mut Checks, spec: GridSpec, config: &ExperimentConfig) {
    let modes = spec.num_points();
    let seed = config.seed;
    let det = max_of(par_cases(config.determinant_cases, |i| {
        let mut rng = case_rng(seed, "car/determinant", i as u64);
        let n = 1 + i % 4.min(modes);
        let fs: Vec<GridFunction> = (0..n).map(|_| GridFunction::random_on(spec, 0..modes, &mut rng)).collect();
        let gs: Vec<GridFunction> = (0..n).map(|_| GridFunction::random_on(spec, 0..modes, &mut rng)).collect();
        let lhs = wedge_vector(&spec, &fs)?.inner(&wedge_vector(&spec, &gs)?);
        let mut gram = DMatrix::from_element(n, n, ZERO);
        for (a, f) in fs.iter().enumerate() {
            for (b, g) in gs.iter().enumerate() {
                gram[(a, b)] = inner_product(f, g)?;
            }
        }
        let rhs = gram.determinant();
        // Hadamard's bound: the natural size of the determinant
        let scale: f64 = fs.iter().zip(&gs).map(|(f, g)| f.norm() * g.norm()).product();
        Ok::<_, carlab_core::Error>(relative((lhs - rhs).norm(), scale))
    }));
    checks
        .at_most(
            "wedge_inner_product_is_gram_determinant",
            "<f_1..f_n, g_1..g_n> = det <f_i, g_j>",
            det,
            config.tol_determinant,
        )
        .detail = format!("{} cases, n <= 4, relative to prod ||f_i|| ||g_i||", config.determinant_cases);

    let oracle = max_of(par_cases(8, |i| {
        let mut rng = case_rng(seed, "car/antisymmetrizer", i as u64);
        let n = 1 + i % 4;
        let fs: Vec<GridFunction> = (0..n).map(|_| GridFunction::random_on(spec, 0..modes, &mut rng)).collect();
        let a = wedge_vector(&spec, &fs)?;
        // the normalized antisymmetric tensor sits at 1/sqrt(n!) of the wedge
        let n_fact: f64 = (1..=n).map(|k| k as f64).product();
        let b = antisymmetrize_oracle(&spec, &fs)?.scale(C64::new(n_fact.sqrt(), 0.0));
        Ok::<_, carlab_core::Error>(relative(a.sub(&b).norm(), b.norm()))
    }));
    checks.at_most(
        "wedge_matches_antisymmetrizer",
        "wedge product as antisymmetrized tensor",
        oracle,
        config.tol_determinant,
    );

    let pauli = max_of(par_cases(8, |i| {
        let mut rng = case_rng(seed, "car/pauli", i as u64);
        let f = GridFunction::random_on(spec, 0..modes, &mut rng);
        let g = GridFunction::random_on(spec, 0..modes, &mut rng);
        let v = wedge_vector(&spec, &[f.clone(), g.clone(), f.clone()])?;
        Ok::<_, carlab_core::Error>(relative(v.norm(), f.norm() * f.norm() * g.norm()))
    }));
    checks.at_most("pauli_exclusion", "f ^ g ^ f = 0", pauli, config.tol_determinant);
}

fn xi_checks(checks: &mut Checks, spec: GridSpec, config: &ExperimentConfig) {
    let modes = spec.num_points();
    let dim = 1usize << modes;
    let seed = config.seed;
    let tol = config.tol_determinant;

    let traces = max_of(par_cases(10, |i| {
        let mut rng = case_rng(seed, "car/xi_trace", i as u64);
        let rho = random_density(dim, 1 + i % 4, &mut rng);
        let out = xi_star(&rho)?;
        let expected = number_trace(&rho);
        Ok::<_, carlab_core::Error>(relative((out.trace() - expected).norm(), expected.norm()))
    }));
    checks.at_most("xi_trace_is_number_expectation", "Tr Xi_*(rho) = Tr(N rho)", traces, tol);

    let particle = max_of(par_cases(modes.min(4) + 1, |n| {
        let mut rng = case_rng(seed, "car/xi_particles", n as u64);
        let fs: Vec<GridFunction> = (0..n).map(|_| GridFunction::random_on(spec, 0..modes, &mut rng)).collect();
        let psi = wedge_vector(&spec, &fs)?.to_dense()?;
        let psi = &psi / C64::new(psi.norm(), 0.0);
        let pure = xi_star(&(&psi * psi.adjoint()))?.trace();
        let projector =
            Dense::from_fn(dim, dim, |a, b| if a == b && a.count_ones() as usize == n { ONE } else { ZERO });
        let count = projector.trace().re;
        let full = xi_star(&projector)?.trace() / count;
        Ok::<_, carlab_core::Error>((pure - n as f64).norm().max((full - n as f64).norm()))
    }));
    checks.at_most("xi_trace_on_n_particle_states", "Tr Xi_*(rho) = n on n-particle states", particle, tol);

    let kraus = max_of(par_cases(4, |i| {
        let mut rng = case_rng(seed, "car/xi_kraus", i as u64);
        let rho = random_density(dim, 2, &mut rng);
        let mut sum = Dense::zeros(dim, dim);
        for k in 0..modes {
            let a = Sparse::from_dense(&jordan_wigner(modes, k));
            sum += a.left(&a.adjoint().right(&rho));
        }
        let out = xi_star(&rho)?;
        Ok::<_, carlab_core::Error>(relative(max_abs(&(out - &sum)), max_abs(&sum)))
    }));
    checks.at_most("xi_matches_kraus_form", "Xi_*(rho) = sum_k a_k rho a_k^*", kraus, tol);

    let small = config.choi_modes;
    let choi = SuperoperatorMatrix::try_from_fn(1 << small, "xi_star", xi_star).map(|s| {
        let verdict = is_completely_positive(&s, config.tol_cp);
        (verdict.min_eigenvalue, s.to_choi().rank(1e-10))
    });
    checks.at_least(
        "xi_choi_positive",
        "Xi_* is completely positive",
        choi.as_ref().map(|c| c.0).map_err(|e| e.to_string()),
        -config.tol_cp,
    );
    checks
        .at_most(
            "xi_choi_rank",
            "Kraus rank of Xi_* is at most the mode count",
            choi.as_ref().map(|c| c.1 as f64).map_err(|e| e.to_string()),
            small as f64,
        )
        .detail = format!("{small} modes");
}
