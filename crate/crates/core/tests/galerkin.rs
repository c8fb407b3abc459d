mod common;

use common::Lcg;
use ndarray::Array2;
use waveleton::galerkin::{
    assemble, project_initial, solve_evolution, solve_space_time, AxisBasis, EquationSpec, ModeAnsatz, SolveOptions,
};
use waveleton::operator::connection_coeffs;
use waveleton::tensor2d::GridSpec;
use waveleton::wavelet::{make_filter, Family};
use waveleton::wigner::{
    coherent_state, AxisOp, DerivativeBackend, LindbladParams, PhaseSpaceOperator, Polynomial, PolynomialPotential,
    SeparableTerm,
};

fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(r, c)| a[[r / br, c / bc]] * b[[r % br, c % bc]])
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn q_derivative_is_the_conjugated_stencil_matrix() {
    let f = make_filter(Family::Daubechies, 4).unwrap();
    let spec = GridSpec::symmetric(32, 4.0);
    let ansatz = ModeAnsatz::full(&f, &spec, 2).unwrap();
    let op = PhaseSpaceOperator::new(vec![SeparableTerm::linear(1.0, AxisOp::Derivative(1), AxisOp::Identity)]);
    let m = assemble(&EquationSpec::Custom(op), &ansatz, &DerivativeBackend::Wavelet(f.clone()))
        .unwrap()
        .to_dense();

    let cc = connection_coeffs(&f, 1).unwrap();
    let n = spec.nq;
    let mut d = Array2::zeros((n, n));
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, v) in cc.apply_periodic(&e, spec.dq()).into_iter().enumerate() {
            d[[i, j]] = v;
        }
    }
    let eq = &ansatz.q.vectors;
    let dq = eq.t().dot(&d).dot(eq);
    let oracle = kron(&dq, &Array2::<f64>::eye(spec.np));
    assert!(max_abs(&(&m - &oracle)) < 1e-10 * max_abs(&oracle));
}

#[test]
fn identity_reduces_to_identity() {
    let f = make_filter(Family::Symmlet, 4).unwrap();
    let spec = GridSpec::symmetric(32, 4.0);
    let ansatz = ModeAnsatz::scaling_level(&f, &spec, 3).unwrap();
    let m = assemble(&EquationSpec::Custom(PhaseSpaceOperator::identity()), &ansatz, &DerivativeBackend::default())
        .unwrap()
        .to_dense();
    assert!(max_abs(&(&m - &Array2::<f64>::eye(64))) < 1e-12);
}

#[test]
fn harmonic_generator_is_antisymmetric() {
    let f = make_filter(Family::Symmlet, 8).unwrap();
    let spec = GridSpec::symmetric(64, 6.0);
    for level in [3, 4] {
        let ansatz = ModeAnsatz::scaling_level(&f, &spec, level).unwrap();
        let eq = EquationSpec::Moyal {
            potential: PolynomialPotential::harmonic(1.0, 1.3),
            mass: 1.0,
            hbar: 1.0,
        };
        let m = assemble(&eq, &ansatz, &DerivativeBackend::default()).unwrap().to_dense();
        let sym = &m + &m.t();
        assert!(max_abs(&sym) < 1e-8 * max_abs(&m), "level {level}: {}", max_abs(&sym));
    }
}

#[test]
fn assembly_is_linear_in_the_operator() {
    let f = make_filter(Family::Daubechies, 6).unwrap();
    let spec = GridSpec::symmetric(32, 5.0);
    let q = AxisBasis::new(&f, 32, 2, vec![0, 1, 2, 5, 9, 20]).unwrap();
    let p = AxisBasis::new(&f, 32, 2, vec![3, 4, 7, 8, 31]).unwrap();
    let ansatz = ModeAnsatz::new(&f, &spec, q, p).unwrap();
    let backend = DerivativeBackend::default();
    let a = PhaseSpaceOperator::new(vec![SeparableTerm::linear(
        0.7,
        AxisOp::Multiply(Polynomial::new(vec![1.0, 0.0, -0.2])),
        AxisOp::Derivative(2),
    )]);
    let b = PhaseSpaceOperator::new(vec![SeparableTerm::linear(-1.3, AxisOp::Derivative(1), AxisOp::Multiply(Polynomial::x()))]);
    let ma = assemble(&EquationSpec::Custom(a.clone()), &ansatz, &backend).unwrap();
    let mb = assemble(&EquationSpec::Custom(b.clone()), &ansatz, &backend).unwrap();
    let mab = assemble(&EquationSpec::Custom(a.scaled(2.0).plus(&b)), &ansatz, &backend).unwrap();
    let sum = ma.scaled(2.0).plus(&mb).unwrap();
    assert!(max_abs(&(&mab.to_dense() - &sum.to_dense())) < 1e-12 * max_abs(&sum.to_dense()));

    let mut rng = Lcg(1);
    let x = Array2::from_shape_fn(ansatz.shape(), |_| rng.range(-1.0, 1.0));
    let direct = mab.apply(&x);
    let dense = mab.to_dense();
    let flat = dense.dot(&Array2::from_shape_vec((x.len(), 1), x.iter().copied().collect()).unwrap());
    for (u, v) in direct.iter().zip(flat.iter()) {
        assert!((u - v).abs() < 1e-12 * max_abs(&dense));
    }
}

#[test]
fn lindblad_reduction_splits_into_moyal_plus_dissipation() {
    let f = make_filter(Family::Symmlet, 6).unwrap();
    let spec = GridSpec::symmetric(32, 5.0);
    let ansatz = ModeAnsatz::scaling_level(&f, &spec, 3).unwrap();
    let backend = DerivativeBackend::default();
    let u = PolynomialPotential::new(vec![0.0, 0.1, 0.5, 0.0, 0.01]).unwrap();
    let params = LindbladParams::new(0.2, 0.3).unwrap();
    let full = assemble(
        &EquationSpec::Lindblad {
            potential: u.clone(),
            mass: 1.0,
            hbar: 1.0,
            params,
        },
        &ansatz,
        &backend,
    )
    .unwrap();
    let moyal = assemble(
        &EquationSpec::Moyal {
            potential: u,
            mass: 1.0,
            hbar: 1.0,
        },
        &ansatz,
        &backend,
    )
    .unwrap();
    let diss = PhaseSpaceOperator::new(vec![
        SeparableTerm::linear(
            0.4,
            AxisOp::Identity,
            AxisOp::Compose(vec![AxisOp::Derivative(1), AxisOp::Multiply(Polynomial::x())]),
        ),
        SeparableTerm::linear(0.3, AxisOp::Identity, AxisOp::Derivative(2)),
    ]);
    let extra = assemble(&EquationSpec::Custom(diss), &ansatz, &backend).unwrap();
    let sum = moyal.plus(&extra).unwrap().to_dense();
    assert!(max_abs(&(&full.to_dense() - &sum)) < 1e-12 * max_abs(&sum));
}

#[test]
fn full_basis_projection_is_lossless_and_evolution_matches_space_time() {
    let f = make_filter(Family::Symmlet, 4).unwrap();
    let spec = GridSpec::symmetric(32, 6.0);
    let w0 = coherent_state(&spec, 1.0, 0.0, 1.0, 1.0, 1.0).unwrap();
    let full = ModeAnsatz::full(&f, &spec, 3).unwrap();
    let proj = project_initial(&w0, &full).unwrap();
    assert!(proj.relative_error < 1e-12);
    let back = full.synthesize(&proj.coeffs).unwrap();
    assert!(max_abs(&(&back - &w0.grid.values)) < 1e-12);

    let small = ModeAnsatz::scaling_level(&f, &spec, 3).unwrap();
    let eq = EquationSpec::Moyal {
        potential: PolynomialPotential::harmonic(1.0, 1.0),
        mass: 1.0,
        hbar: 1.0,
    };
    let sys = assemble(&eq, &small, &DerivativeBackend::default()).unwrap();
    let a0 = project_initial(&w0, &small).unwrap().coeffs;
    let horizon = 0.5;
    let n = (horizon / SolveOptions::stable_dt(&sys)).ceil() as usize * 4;
    let stepped = solve_evolution(&sys, &a0, &SolveOptions::new(horizon / n as f64, n)).unwrap();
    let st = solve_space_time(&sys, &a0, horizon, 12, 1e3).unwrap();
    let diff = max_abs(&(&st.eval(horizon) - stepped.final_coeffs()));
    assert!(diff < 1e-5 * max_abs(&a0), "{diff}");
    let e0 = stepped.energy[0];
    let e1 = *stepped.energy.last().unwrap();
    assert!((e1 - e0).abs() < 1e-6 * e0);
}
