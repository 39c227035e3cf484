use proptest::prelude::*;

use csm_core::bound::{solve_bound, Backend, BoundProblem};
use csm_core::dense::dense_scalar_product;
use csm_core::ed::{ed_persisting_correlation, DEFAULT_DEG_TOL};
use csm_core::extrapolation::{extrapolate_inv_n, Series};
use csm_core::gaussian::{analytic_moment, GaussianModel};
use csm_core::tables::{gaussian_matrix_element, ElementEvaluator};
use csm_core::{CouplingSet, FieldStrength, Quantity};

fn couplings(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..2.0, 1..=max_n)
}

fn field() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.5), Just(2.0)]
}

/// Power quantities, or `I^z` with the `H_l^z`; the tables do not mix the two.
fn family(n: usize, zero_field: bool, indexed: bool) -> Vec<Quantity> {
    use Quantity::*;
    if indexed {
        return std::iter::once(Iz).chain((1..=n).map(HlZ)).collect();
    }
    let mut v = vec![Iz, IzH0Power(1), IzH0Power(2), IzH0Power(3), H0Power(1), H0Power(2)];
    if zero_field {
        v.extend([IQz, IzI2H0]);
    }
    v
}

fn pool(n: usize, zero_field: bool) -> Vec<Quantity> {
    let mut v = family(n, zero_field, false);
    v.extend((1..=n).map(Quantity::HlZ));
    v
}

fn value(qs: Vec<Quantity>, c: &CouplingSet, h: f64, backend: Backend) -> f64 {
    let p = BoundProblem::new(Quantity::S0z, qs, c.clone(), FieldStrength::from_f64(h).unwrap()).with_backend(backend);
    solve_bound(&p).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_sets_give_larger_bounds(j in couplings(6), h in field(), indexed in any::<bool>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 2..6)) {
        let c = CouplingSet::from_f64(j).unwrap();
        let all = family(c.n(), h == 0.0, indexed);
        let mut qs: Vec<Quantity> = Vec::new();
        for ix in picks {
            let q = *ix.get(&all);
            if !qs.contains(&q) {
                qs.push(q);
            }
        }
        let mut prev = 0.0;
        for k in 1..=qs.len() {
            let v = value(qs[..k].to_vec(), &c, h, Backend::Tables);
            prop_assert!(v + 1e-9 >= prev, "{:?}: {} < {}", &qs[..k], v, prev);
            prev = v;
        }
    }

    #[test]
    fn bounds_stay_below_the_exact_average(j in couplings(6), h in field(), indexed in any::<bool>(), k in 1usize..5) {
        let c = CouplingSet::from_f64(j).unwrap();
        let qs: Vec<Quantity> = family(c.n(), h == 0.0, indexed).into_iter().take(k + 1).collect();
        let v = value(qs, &c, h, Backend::Tables);
        let ed = ed_persisting_correlation(&c, &FieldStrength::from_f64(h).unwrap(), DEFAULT_DEG_TOL).unwrap();
        prop_assert!((0.0..=0.25 + 1e-12).contains(&ed.s_inf));
        prop_assert!(v <= ed.s_inf + 1e-9, "{} > {}", v, ed.s_inf);
    }

    #[test]
    fn table_elements_match_dense(j in couplings(4), h in field()) {
        let c = CouplingSet::from_f64(j).unwrap();
        let f = FieldStrength::from_f64(h).unwrap();
        let ev = ElementEvaluator::<f64>::new(&c, &f);
        let mut qs = pool(c.n(), h == 0.0);
        qs.extend([Quantity::S0z, Quantity::Bz]);
        for (i, &a) in qs.iter().enumerate() {
            for &b in &qs[i..] {
                let Ok(t) = ev.element(a, b) else { continue };
                let d = dense_scalar_product(a, b, &c, &f).unwrap();
                let scale = (dense_scalar_product(a, a, &c, &f).unwrap() * dense_scalar_product(b, b, &c, &f).unwrap()).sqrt();
                prop_assert!((t - d).abs() <= 1e-10 * d.abs().max(1e-3 * scale), "({}|{}): {} vs {}", a, b, t, d);
            }
        }
    }

    #[test]
    fn backends_agree_on_bounds(j in prop::collection::vec(1i64..6, 1..=4), h in prop_oneof![Just(0.0), Just(0.75)], indexed in any::<bool>()) {
        let mut j = j;
        j.sort_unstable();
        j.dedup();
        let c = CouplingSet::from_integers(&j).unwrap();
        let qs = family(c.n(), h == 0.0, indexed);
        let t = value(qs.clone(), &c, h, Backend::Tables);
        let d = value(qs.clone(), &c, h, Backend::Dense);
        let s = value(qs, &c, h, Backend::Symbolic);
        prop_assert!((t - s).abs() < 1e-10 && (d - s).abs() < 1e-10, "{} {} {}", t, d, s);
    }

    #[test]
    fn gaussian_element_is_the_scaled_moment(j in prop::collection::vec(0.1f64..3.0, 2..40), m in 0u32..8) {
        let c = CouplingSet::from_f64(j).unwrap();
        let g = GaussianModel::from_couplings(&c).unwrap();
        let want = analytic_moment(m, &g).unwrap() / 4f64.powi(m as i32);
        let got = gaussian_matrix_element(m, &c).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn extrapolation_is_linear_in_the_data(lambda in 0.1f64..10.0, a in -1.0f64..1.0, b in -5.0f64..5.0) {
        let pts: Vec<(usize, f64)> = [16usize, 32, 64, 128, 256, 512].iter().map(|&n| (n, 0.03 + a / n as f64 + b / (n * n) as f64)).collect();
        let scaled: Vec<(usize, f64)> = pts.iter().map(|&(n, v)| (n, lambda * v)).collect();
        let f1 = extrapolate_inv_n(&Series::new(1.0, pts).unwrap()).unwrap();
        let f2 = extrapolate_inv_n(&Series::new(1.0, scaled).unwrap()).unwrap();
        prop_assert!((f2.intercept - lambda * f1.intercept).abs() <= 1e-12 * lambda);
    }
}
