use cuas_bench::{delay_budget, BudgetError};
use proptest::prelude::*;

#[test]
fn reference_points() {
    let f = delay_budget(1.16, 2.5, 0.0, 0.0, false).unwrap();
    assert!((f - 2.5 / 3.66).abs() < 1e-12);
    assert!((f - 0.683).abs() < 5e-4);
    let f = delay_budget(1.16, 2.5, 25.0, 0.0, false).unwrap();
    assert!((f - 0.0872).abs() < 5e-5, "{f}");
    assert_eq!(delay_budget(1.16, 2.5, 25.0, 3.0, true).unwrap(), 0.0);
}

#[test]
fn degenerate_inputs() {
    assert!(matches!(delay_budget(0.0, 0.0, 0.0, 0.0, false), Err(BudgetError::DivisionDomain)));
    assert_eq!(delay_budget(0.0, 0.0, 0.0, 0.0, true).unwrap(), 0.0);
    assert!(matches!(delay_budget(-1.0, 2.0, 0.0, 0.0, false), Err(BudgetError::InvalidInput(_))));
    assert!(matches!(delay_budget(1.0, f64::NAN, 0.0, 0.0, false), Err(BudgetError::InvalidInput(_))));
}

proptest! {
    #[test]
    fn scale_invariant(
        d in 0.0f64..100.0, c in 0.001f64..100.0, t in 0.0f64..100.0, i in 0.0f64..100.0,
        k in 0.001f64..1000.0,
    ) {
        let a = delay_budget(d, c, t, i, false).unwrap();
        let b = delay_budget(k * d, k * c, k * t, k * i, false).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn tolerated_is_always_zero(d in 0.0f64..100.0, c in 0.0f64..100.0, t in 0.0f64..100.0, i in 0.0f64..100.0) {
        prop_assert_eq!(delay_budget(d, c, t, i, true).unwrap(), 0.0);
    }
}
