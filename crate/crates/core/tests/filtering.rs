use gbridge_core::compensator::{compensate_path, f_drift, h_drift, integrated_drift_bound, Mode};
use gbridge_core::filter::Filter;
use gbridge_core::pathgen::{Path, Pin};
use gbridge_core::{Error, MixingLaw};
use proptest::prelude::*;

fn two_atoms() -> MixingLaw {
    MixingLaw::discrete(&[(2.0, 0.5), (4.0, 0.5)]).unwrap()
}

#[test]
fn worked_posterior() {
    let law = two_atoms();
    let f = Filter::new(&law);
    let post = f.posterior_tau(0.5, 1.0).unwrap();
    let w: Vec<(f64, f64)> = post.law().points().collect();
    assert!((w[0].1 - 4.0 / 7.0).abs() < 1e-14);
    assert!((w[1].1 - 3.0 / 7.0).abs() < 1e-14);
    assert!((f.conditional_expectation(|r| r, 0.5, 1.0).unwrap() - 20.0 / 7.0).abs() < 1e-13);
    assert!((f.survival_probability(0.5, 1.0, 3.0).unwrap() - 3.0 / 7.0).abs() < 1e-14);
    assert!((f.phi(0.5, 1.0, 2.0).unwrap() - 8.0 / 7.0).abs() < 1e-13);
}

#[test]
fn shape_rate_enters_the_kernel() {
    let law = two_atoms();
    let f = Filter::with_kappa(&law, 2.0).unwrap();
    let w = f.posterior_tau(0.5, 1.0).unwrap().law().points().next().unwrap().1;
    assert!((w - 16.0 / 23.0).abs() < 1e-13);
}

#[test]
fn predictive_atom_weight() {
    let law = MixingLaw::discrete(&[(1.5, 0.5), (3.0, 0.5)]).unwrap();
    let f = Filter::new(&law);
    let p = f.predictive_law(0.4, 1.0, 2.0).unwrap();
    // 40-digit reference for φ(0.4, 1, 1.5)·0.5.
    assert!((p.atom_at_one - 0.349_768_732_157_801).abs() < 1e-13);
    assert!((p.atom_at_one + p.continuous_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn dirac_predictive_cases() {
    let law = MixingLaw::dirac(1.5).unwrap();
    let f = Filter::new(&law);
    assert_eq!(f.predictive_law(0.3, 1.0, 2.0).unwrap().atom_at_one, 1.0);
    let p = f.predictive_law(0.3, 1.0, 1.25).unwrap();
    assert_eq!(p.atom_at_one, 0.0);
    // Scaled Beta(0.25, 0.25) on (0.3, 1).
    let y = 0.65;
    let want = gbridge_core::specfun::bridge_transition_log_pdf(y, 0.3, 1.0, 1.25, 1.5)
        .unwrap()
        .density();
    assert!((p.density(y) - want).abs() < 1e-12 * want);
}

#[test]
fn stopped_branch_and_preconditions() {
    let law = MixingLaw::discrete(&[(1.0, 0.25), (2.0, 0.25), (5.0, 0.5)]).unwrap();
    let f = Filter::new(&law);
    let post = f.posterior_tau(1.0, 2.5).unwrap();
    let w: Vec<(f64, f64)> = post.law().points().collect();
    assert_eq!(w, vec![(1.0, 0.5), (2.0, 0.5)]);
    assert!(matches!(f.posterior_tau(1.0, 0.5), Err(Error::Precondition(_))));
    assert!(matches!(f.posterior_tau(0.5, 6.0), Err(Error::Precondition(_))));
}

#[test]
fn drift_examples() {
    let law = two_atoms();
    let f = Filter::new(&law);
    assert!((f_drift(&f, 0.5, 1.0).unwrap() - 5.0 / 14.0).abs() < 1e-14);
    assert!((h_drift(0.5, 2.0, 1.0) - 0.5).abs() < 1e-15);
    assert_eq!(h_drift(1.0, 2.0, 2.5), 0.0);
    let wide = MixingLaw::discrete(&[(1.0, 0.5), (4.0, 0.5)]).unwrap();
    assert!((integrated_drift_bound(&wide, 2.0) - 0.75).abs() < 1e-15);
}

#[test]
fn residual_freezes_after_pin() {
    let law = MixingLaw::dirac(0.5).unwrap();
    let f = Filter::new(&law);
    let path = Path {
        times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        values: vec![0.0, 0.4, 1.0, 1.0, 1.0],
        pin: Some(Pin { time: 0.5, value: 1.0 }),
    };
    for mode in [Mode::H, Mode::F] {
        let c = compensate_path(&path, &f, mode, 1.0).unwrap();
        assert_eq!(c.residual[2], c.residual[3]);
        assert_eq!(c.residual[3], c.residual[4]);
        assert_eq!(c.drift[3], 0.0);
    }
}

fn arb_law() -> impl Strategy<Value = MixingLaw> {
    prop::collection::vec((0.2f64..8.0, 0.05f64..1.0), 1..6).prop_map(|pts| {
        let z: f64 = pts.iter().map(|p| p.1).sum();
        let pts: Vec<(f64, f64)> = pts.iter().map(|&(r, w)| (r, w / z)).collect();
        MixingLaw::discrete(&pts).unwrap()
    })
}

proptest! {
    #[test]
    fn posterior_is_a_probability(law in arb_law(), x in 0.0f64..0.999, frac in 0.0f64..0.95) {
        let t = law.max_location() * frac;
        let f = Filter::new(&law);
        let post = f.posterior_tau(x, t).unwrap();
        prop_assert!((post.law().total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(post.law().points().all(|(r, w)| r > t && w > 0.0));
    }

    #[test]
    fn survival_decreases_in_horizon(law in arb_law(), x in 0.0f64..0.99, u1 in 0.0f64..10.0, du in 0.0f64..5.0) {
        let t = law.min_location() * 0.5;
        let f = Filter::new(&law);
        let a = f.survival_probability(x, t, t + u1).unwrap();
        let b = f.survival_probability(x, t, t + u1 + du).unwrap();
        prop_assert!(b <= a + 1e-15);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&a));
    }

    #[test]
    fn predictive_cdf_is_monotone(law in arb_law(), x in 0.0f64..0.9, du in 0.01f64..4.0) {
        let t = law.min_location() * 0.5;
        let f = Filter::new(&law);
        let p = f.predictive_law(x, t, t + du).unwrap();
        let mut last = 0.0;
        for k in 0..=20 {
            let y = x + (1.0 - x) * k as f64 / 20.0;
            let c = p.cdf(y);
            prop_assert!(c + 1e-12 >= last);
            last = c;
        }
        prop_assert!((p.cdf(1.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dirac_drift_modes_agree(r in 0.5f64..5.0, x in 0.0f64..0.99, frac in 0.0f64..0.99) {
        let law = MixingLaw::dirac(r).unwrap();
        let f = Filter::new(&law);
        let s = r * frac;
        prop_assert_eq!(f_drift(&f, x, s).unwrap(), h_drift(x, r, s));
    }
}
