use vpfp::semigroup::{
    check_moment_weights, moment_weight_first, moment_weight_second, SemigroupGrid,
};

fn three_nu_grid() -> SemigroupGrid<f64> {
    let mut g = SemigroupGrid::standard();
    g.nus = vec![1e-5, 1e-4, 1e-3];
    g
}

#[test]
fn weights_vanish_at_equal_times() {
    for k in [1.0, 3.0] {
        for p in [0.25, 1.0] {
            assert_eq!(moment_weight_first(0.0, k, 1e-4, p).unwrap(), 0.0);
            assert_eq!(moment_weight_second(0.0, k, 1e-4, p).unwrap(), 0.0);
        }
    }
}

#[test]
fn single_nu_sweep_is_finite() {
    let mut g = SemigroupGrid::standard();
    g.ks = vec![1.0];
    g.nus = vec![1e-4];
    g.ps = vec![0.5];
    let r = check_moment_weights(&g).unwrap();
    assert!(r.first_constant.is_finite() && r.first_constant > 0.0);
    assert!(r.second_constant.is_finite() && r.second_constant > 0.0);
}

#[test]
fn first_weight_is_nu_uniform() {
    let r = check_moment_weights(&three_nu_grid()).unwrap();
    assert!(r.first_spread <= 3.0, "spread {}", r.first_spread);
}

// The second weight peaks at d ~ (nu k^2)^{-1/3} with size ~ nu^{-4/3}, so
// nu times its maximum grows by 10^{1/3} per decade of nu.
#[test]
fn second_weight_scales_as_nu_to_minus_four_thirds() {
    let r = check_moment_weights(&three_nu_grid()).unwrap();
    for w in r.per_nu.windows(2) {
        let growth = w[0].second / w[1].second;
        assert!((growth - 10f64.powf(1.0 / 3.0)).abs() < 0.1, "growth {growth}");
    }
    assert!(r.second_spread > 3.0);
}
