use gilbert::weights::{WeightError, WeightFunction};
use proptest::prelude::*;

#[test]
fn value_table() {
    let w = WeightFunction::rounded_affine(3.0, 1.0, 2.0).unwrap();
    let got: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 6.0].iter().map(|&t| w.eval(t).unwrap()).collect();
    assert_eq!(got, vec![2.0, 4.0, 5.0, 7.0, 10.0]);
    assert_eq!(WeightFunction::power(0.2, 1.0, 0.75).unwrap().eval(0.0).unwrap(), 0.2);
    assert_eq!(WeightFunction::affine(1.0, 2.0).unwrap().eval(3.0).unwrap(), 7.0);
}

#[test]
fn negative_flow_is_rejected() {
    let w = WeightFunction::constant(1.0).unwrap();
    assert!(matches!(w.eval(-1.0), Err(WeightError::NegativeFlow(_))));
    assert!(w.eval(f64::NAN).is_err());
}

#[test]
fn conditions_on_integer_grid() {
    let grid: Vec<f64> = (0..=8).map(f64::from).collect();
    let r = WeightFunction::rounded_affine(3.0, 1.0, 2.0).unwrap().check_conditions(&grid).unwrap();
    assert!(r.positive && r.nondecreasing && r.triangular && !r.concave);
    assert!(r.is_gilbert() && !r.all());
    for w in [WeightFunction::constant(1.0).unwrap(), WeightFunction::power(1.0, 1.0, 0.5).unwrap()] {
        assert!(w.check_conditions(&grid).unwrap().all());
    }
    assert!(matches!(
        WeightFunction::constant(1.0).unwrap().check_conditions(&[]),
        Err(WeightError::EmptyGrid)
    ));
}

#[test]
fn unit_exponent_is_affine() {
    assert_eq!(WeightFunction::power(1.0, 2.0, 1.0).unwrap(), WeightFunction::affine(1.0, 2.0).unwrap());
}

#[test]
fn invalid_parameters() {
    assert!(WeightFunction::constant(0.0).is_err());
    assert!(WeightFunction::affine(1.0, -1.0).is_err());
    assert!(WeightFunction::power(1.0, 0.0, 0.5).is_err());
    assert!(WeightFunction::power(1.0, 1.0, 1.5).is_err());
    assert!(WeightFunction::rounded_affine(3.0, 1.0, 0.0).is_err());
}

fn weight() -> impl Strategy<Value = WeightFunction> {
    prop_oneof![
        (0.01f64..5.0).prop_map(|d| WeightFunction::constant(d).unwrap()),
        (0.01f64..5.0, 0.0f64..5.0).prop_map(|(d, h)| WeightFunction::affine(d, h).unwrap()),
        (0.01f64..5.0, 0.01f64..5.0, 0.01f64..1.0).prop_map(|(d, h, a)| WeightFunction::power(d, h, a).unwrap()),
        (0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0).prop_map(|(a, b, c)| WeightFunction::rounded_affine(a, b, c).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn nondecreasing(w in weight(), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(w.eval(lo).unwrap() <= w.eval(hi).unwrap());
    }

    #[test]
    fn subadditive(w in weight(), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let s = w.eval(a).unwrap() + w.eval(b).unwrap() - w.eval(a + b).unwrap();
        prop_assert!(s >= -1e-12 * w.eval(a + b).unwrap().max(1.0));
    }
}
