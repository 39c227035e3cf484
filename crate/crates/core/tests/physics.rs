use approx::assert_relative_eq;

use csm_core::bound::{field_field_bound, named_set, solve_bound, Backend, BoundProblem};
use csm_core::dense::DenseOperator;
use csm_core::ed::{ed_persisting_correlation, ed_persisting_observable, DEFAULT_DEG_TOL};
use csm_core::extrapolation::{extrapolate_inv_n, Series};
use csm_core::pauli::Letter;
use csm_core::tables::{element, gaussian_matrix_element, gaussian_vector_element};
use csm_core::{CouplingSet, FieldStrength, Normalization, Quantity};

fn exp(n: usize, x: f64) -> CouplingSet {
    CouplingSet::exponential(n, x, Normalization::Sigma2Unit).unwrap()
}

fn s0z(qs: Vec<Quantity>, c: &CouplingSet, h: f64) -> f64 {
    solve_bound(&BoundProblem::new(Quantity::S0z, qs, c.clone(), FieldStrength::from_f64(h).unwrap())).unwrap().value
}

#[test]
fn field_only_bound_falls_as_inverse_square() {
    let c = exp(64, 1.0);
    let scaled: Vec<f64> =
        [50.0, 100.0, 200.0, 400.0].iter().map(|&h| s0z(vec![Quantity::IzH0Power(1)], &c, h) * h * h).collect();
    for w in scaled.windows(2) {
        assert!((w[1] - w[0]).abs() < 1e-3 * w[1], "{scaled:?}");
    }
    let with_energy = s0z(named_set("h-two", 0).unwrap(), &c, 1e4);
    assert!((with_energy - 0.25).abs() < 1e-6);
}

#[test]
fn integrability_is_marginal_at_finite_field() {
    let c = exp(199, 1.0);
    for h in [1.0, 2.0, 4.0, 8.0] {
        let mut full: Vec<Quantity> = (0..=199).map(Quantity::HlZ).collect();
        full.extend((0..=199).map(Quantity::Hl));
        let big = s0z(full, &c, h);
        let small = s0z(named_set("h-two", 0).unwrap(), &c, h);
        assert!(big + 1e-9 >= small);
        assert!(big - small < 1e-3, "h = {h}: {big} vs {small}");
    }
}

#[test]
fn field_bound_exceeds_spin_bound_and_plateaus() {
    let mut bb = Vec::new();
    for n in [64usize, 96, 128, 192, 256, 512] {
        let c = exp(n, 4.0);
        let b = field_field_bound(&c, None, Backend::Tables).unwrap().value;
        let s = s0z(named_set("integrability", n).unwrap(), &c, 0.0);
        assert!(b > s, "N = {n}: {b} <= {s}");
        bb.push((n, b));
    }
    let fit = extrapolate_inv_n(&Series::new(4.0, bb.clone()).unwrap()).unwrap();
    assert!(fit.intercept > 0.0);
    assert!((fit.intercept - bb[5].1).abs() < 0.05 * fit.intercept);
}

#[test]
fn parallel_quantities_share_a_limit() {
    let gap = |n: usize| {
        let c = exp(n, 2.0);
        (s0z(vec![Quantity::IzH0Power(3)], &c, 0.0) - s0z(vec![Quantity::IzI2H0], &c, 0.0)).abs()
    };
    let (a, b) = (gap(64), gap(1024));
    assert!(b < a / 4.0, "{a} -> {b}");
}

#[test]
fn gaussian_leading_order_approaches_exact_elements() {
    let mut scaled = Vec::new();
    for n in [64usize, 256, 1024] {
        let c = CouplingSet::exponential(n, 1.0, Normalization::Raw).unwrap();
        let exact = element(Quantity::Iz, Quantity::IzH0Power(2), &c, &FieldStrength::zero()).unwrap();
        let gauss = gaussian_matrix_element(1, &c).unwrap();
        scaled.push((exact - gauss).abs() / exact * n as f64);
    }
    assert!(scaled.iter().all(|&s| s < 2.0), "{scaled:?}");
    assert!((scaled[2] - scaled[1]).abs() < 0.05 * scaled[2], "{scaled:?}");
}

#[test]
fn gaussian_first_vector_element_is_exact() {
    let c = CouplingSet::from_integers(&[1, 2, 3]).unwrap();
    let exact = element(Quantity::S0z, Quantity::IzH0Power(1), &c, &FieldStrength::zero()).unwrap();
    assert_relative_eq!(gaussian_vector_element(1, &c).unwrap(), exact, max_relative = 1e-14);
    assert_relative_eq!(
        gaussian_matrix_element(2, &CouplingSet::from_integers(&[1, 1]).unwrap()).unwrap(),
        0.2734375,
        max_relative = 1e-14
    );
}

#[test]
fn exact_average_dominates_the_large_set_bound() {
    let c = exp(4, 1.0);
    let qs = vec![Quantity::Iz, Quantity::IQz, Quantity::IzH0Power(1), Quantity::IzH0Power(3), Quantity::IzI2H0];
    let ed = ed_persisting_correlation(&c, &FieldStrength::zero(), DEFAULT_DEG_TOL).unwrap();
    assert!(s0z(qs, &c, 0.0) <= ed.s_inf + 1e-9);
    let sx = DenseOperator::spin(4, 0, Letter::X);
    let vx = ed_persisting_observable(&c, &FieldStrength::zero(), &sx, DEFAULT_DEG_TOL).unwrap();
    assert!((vx - ed.s_inf).abs() < 1e-10);
}
