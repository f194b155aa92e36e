mod common;

use std::collections::BTreeSet;

use gasadapt::adaptive::{mark_coarsen, mark_refine, mark_switch_down, mark_switch_up};
use proptest::prelude::*;

use common::{check_maximal, check_minimal};

fn keyed(v: &[f64]) -> Vec<(usize, f64)> {
    v.iter().copied().enumerate().collect()
}

fn members(s: &BTreeSet<usize>) -> Vec<usize> {
    s.iter().copied().collect()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    // Integer-valued entries keep subset sums exact; ties are frequent.
    prop::collection::vec((0u32..40).prop_map(f64::from), 1..=10)
}

proptest! {
    #[test]
    fn refine_is_minimal(v in values(), theta in 0.0f64..=1.0) {
        let r = mark_refine(&keyed(&v), theta);
        let all = vec![true; v.len()];
        prop_assert!(check_minimal(&v, &all, &members(&r), theta).is_ok(), "{:?}", check_minimal(&v, &all, &members(&r), theta));
    }

    #[test]
    fn switch_up_is_minimal_over_large_reductions(v in values(), theta in 0.0f64..=1.0, eps in 0.0f64..30.0) {
        let u = mark_switch_up(&keyed(&v), theta, eps);
        let eligible: Vec<bool> = v.iter().map(|&x| x > eps).collect();
        let res = check_minimal(&v, &eligible, &members(&u), theta);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn coarsen_is_maximal(v in values(), phi in 0.0f64..=1.0, excl in prop::collection::vec(any::<bool>(), 10)) {
        let excluded: BTreeSet<usize> = (0..v.len()).filter(|&i| excl[i]).collect();
        let c = mark_coarsen(&keyed(&v), phi, &excluded);
        let candidate: Vec<bool> = (0..v.len()).map(|i| !excl[i]).collect();
        let budget = phi * v.iter().sum::<f64>();
        let res = check_maximal(&v, &candidate, &members(&c), budget);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn switch_down_is_maximal_over_small_increases(v in values(), phi in 0.0f64..=1.0, tau in 1.0f64..2.0, eps in 0.0f64..30.0) {
        let d = mark_switch_down(&keyed(&v), phi, tau, eps);
        let eligible: Vec<bool> = v.iter().map(|&x| x <= tau * eps).collect();
        let budget = phi * v.iter().zip(&eligible).filter(|e| *e.1).map(|e| e.0).sum::<f64>();
        let res = check_maximal(&v, &eligible, &members(&d), budget);
        prop_assert!(res.is_ok(), "{:?}", res);
    }
}

#[test]
fn full_fractions_take_everything_that_counts() {
    let v = [3.0, 0.0, 2.0, 1.0];
    assert_eq!(members(&mark_refine(&keyed(&v), 1.0)), vec![0, 2, 3]);
    assert!(mark_refine(&keyed(&v), 0.0).is_empty());
    assert_eq!(members(&mark_coarsen(&keyed(&v), 0.0, &BTreeSet::new())), vec![1]);
    assert_eq!(members(&mark_coarsen(&keyed(&v), 1.0, &BTreeSet::new())), vec![0, 1, 2, 3]);
}

#[test]
fn ties_are_broken_by_key() {
    let v = [2.0, 2.0, 2.0];
    assert_eq!(members(&mark_refine(&keyed(&v), 0.5)), vec![0, 1]);
    assert_eq!(members(&mark_coarsen(&keyed(&v), 0.5, &BTreeSet::new())), vec![0]);
}
