//! Property tests for the truncated Taylor jet arithmetic: ring axioms,
//! the Leibniz rule under `partial`, and the univariate chain rule.

use proptest::prelude::*;

use wplap::jet::{Jet, Univariate};

const TOL: f64 = 1e-12;

fn jet_strategy(dim: usize) -> impl Strategy<Value = Jet> {
    let len = wplap::jet::index_table(dim).len();
    proptest::collection::vec(-2.0f64..2.0, len)
        .prop_map(move |coeffs| Jet::from_coeffs(dim, coeffs).unwrap())
}

fn positive_jet_strategy(dim: usize) -> impl Strategy<Value = Jet> {
    let len = wplap::jet::index_table(dim).len();
    (0.5f64..3.0, proptest::collection::vec(-0.25f64..0.25, len - 1)).prop_map(
        move |(value, rest)| {
            let mut coeffs = Vec::with_capacity(len);
            coeffs.push(value);
            coeffs.extend(rest);
            Jet::from_coeffs(dim, coeffs).unwrap()
        },
    )
}

fn assert_jets_close(a: &Jet, b: &Jet, tol: f64) {
    let scale = a
        .coeffs()
        .iter()
        .chain(b.coeffs())
        .fold(1.0f64, |acc, c| acc.max(c.abs()));
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        assert!(
            (x - y).abs() <= tol * scale,
            "coefficient mismatch: {x} vs {y} (scale {scale})"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn addition_commutes_and_associates(
        a in jet_strategy(3),
        b in jet_strategy(3),
        c in jet_strategy(3),
    ) {
        assert_jets_close(&(&a + &b), &(&b + &a), TOL);
        assert_jets_close(&(&(&a + &b) + &c), &(&a + &(&b + &c)), TOL);
    }

    #[test]
    fn multiplication_commutes_and_associates(
        a in jet_strategy(3),
        b in jet_strategy(3),
        c in jet_strategy(3),
    ) {
        assert_jets_close(&(&a * &b), &(&b * &a), TOL);
        assert_jets_close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), TOL);
    }

    #[test]
    fn multiplication_distributes_over_addition(
        a in jet_strategy(2),
        b in jet_strategy(2),
        c in jet_strategy(2),
    ) {
        assert_jets_close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), TOL);
    }

    #[test]
    fn additive_and_multiplicative_identities(a in jet_strategy(3)) {
        let zero = Jet::constant(0.0, 3);
        let one = Jet::constant(1.0, 3);
        assert_jets_close(&(&a + &zero), &a, TOL);
        assert_jets_close(&(&a * &one), &a, TOL);
        assert_jets_close(&(&a + &(-&a)), &zero, TOL);
    }

    #[test]
    fn leibniz_rule(a in jet_strategy(3), b in jet_strategy(3), var in 0usize..3) {
        // partial drops one validity order, so compare through order 2
        let lhs = (&a * &b).partial(var);
        let rhs = &(&a.partial(var) * &b) + &(&a * &b.partial(var));
        for (i, alpha) in wplap::jet::index_table(3).iter().enumerate() {
            if (alpha[0] + alpha[1] + alpha[2]) as usize > 2 {
                continue;
            }
            let x = lhs.coeffs()[i];
            let y = rhs.coeffs()[i];
            let scale = x.abs().max(y.abs()).max(1.0);
            prop_assert!((x - y).abs() <= TOL * scale);
        }
    }

    #[test]
    fn chain_rule_for_partials(a in positive_jet_strategy(2), var in 0usize..2) {
        // d/dx log a = a'/a, valid through order 2 after one partial
        let lhs = Jet::chain(Univariate::Log, &a).unwrap().partial(var);
        let rhs = a.partial(var).try_mul(&a.recip().unwrap()).unwrap();
        for (i, alpha) in wplap::jet::index_table(2).iter().enumerate() {
            if (alpha[0] + alpha[1] + alpha[2]) as usize > 2 {
                continue;
            }
            let x = lhs.coeffs()[i];
            let y = rhs.coeffs()[i];
            let scale = x.abs().max(y.abs()).max(1.0);
            prop_assert!((x - y).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn exp_log_round_trip(a in positive_jet_strategy(3)) {
        let log = Jet::chain(Univariate::Log, &a).unwrap();
        let back = Jet::chain(Univariate::Exp, &log).unwrap();
        assert_jets_close(&back, &a, 1e-11);
    }

    #[test]
    fn powf_matches_repeated_multiplication(a in positive_jet_strategy(2)) {
        let cubed = a.powf(3.0).unwrap();
        let manual = a.try_mul(&a).unwrap().try_mul(&a).unwrap();
        assert_jets_close(&cubed, &manual, 1e-11);
    }

    #[test]
    fn mixed_partials_commute(a in jet_strategy(3)) {
        let xy = a.partial(0).partial(1);
        let yx = a.partial(1).partial(0);
        assert_jets_close(&xy, &yx, TOL);
    }
}
