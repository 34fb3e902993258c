use proptest::prelude::*;
use sublaw_core::capacity::CapacityKind;
use sublaw_core::models::phi;
use sublaw_core::series::wittmann_step_holds;
use sublaw_core::{
    epsilon_sequence, lower_capacity, survival_of, upper_capacity, wittmann_subsequence,
    BlockStructure, CapacityModel, DiscreteDistribution, ExactOracle, GridSpacing,
    MeasurableEvent, RandomFunctional, ScenarioSet, StepSurvival,
};

const TOL: f64 = 1e-12;

/// Laws on the 1/4 grid of [-2, 2] with weights in quarters.
fn law() -> impl Strategy<Value = DiscreteDistribution<f64>> {
    prop::collection::vec((-8i32..=8, 1u32..=4), 1..=3).prop_map(|atoms| {
        let total: u32 = atoms.iter().map(|a| a.1).sum();
        DiscreteDistribution::new(
            atoms
                .into_iter()
                .map(|(v, w)| (v as f64 / 4.0, w as f64 / total as f64)),
        )
        .expect("valid law")
    })
}

fn family() -> impl Strategy<Value = ScenarioSet<f64>> {
    prop::collection::vec(law(), 1..=3).prop_map(|v| ScenarioSet::new(v).unwrap())
}

/// `a x1 + b x2 + c x1 x2 + d |x1 - x2|` on two coordinates.
fn functional() -> impl Strategy<Value = RandomFunctional<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c, d)| {
        RandomFunctional::window(1, 2, "g", move |x: &[f64]| {
            a * x[0] + b * x[1] + c * x[0] * x[1] + d * (x[0] - x[1]).abs()
        })
    })
}

/// Independent oracle: the largest linear expectation over every
/// deterministic rule choosing the law of X1, then the law of X2 given X1.
fn brute_force_upper(theta: &ScenarioSet<f64>, f: &RandomFunctional<f64>) -> f64 {
    let laws: Vec<&DiscreteDistribution<f64>> = theta.iter().collect();
    let mut best = f64::NEG_INFINITY;
    for first in &laws {
        let atoms = first.atoms();
        let k = laws.len();
        // one scenario index per atom of the first law
        for rule in 0..k.pow(atoms.len() as u32) {
            let mut r = rule;
            let mut e = 0.0;
            for &(x1, p1) in atoms {
                let second = laws[r % k];
                r /= k;
                e += p1 * second.expect(|x2| f.evaluate(&[x1, x2]));
            }
            best = best.max(e);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn backward_induction_matches_brute_force(theta in family(), f in functional()) {
        let o = ExactOracle::new(&theta);
        let exact = o.upper(&f, 2).unwrap();
        prop_assert!((exact - brute_force_upper(&theta, &f)).abs() <= TOL);
        let lower = o.lower(&f, 2).unwrap();
        prop_assert!((lower + brute_force_upper(&theta, &f.neg())).abs() <= TOL);
    }

    #[test]
    fn sublinear_axioms(theta in family(), f in functional(), g in functional(), c in -3.0..3.0f64, lambda in 0.0..4.0f64) {
        let o = ExactOracle::new(&theta);
        let e = |h: &RandomFunctional<f64>| o.upper(h, 2).unwrap();
        let (ef, eg) = (e(&f), e(&g));
        prop_assert!(ef <= e(&f.add(&g.abs())) + TOL);
        prop_assert!((o.upper(&RandomFunctional::constant(c), 1).unwrap() - c).abs() <= TOL);
        prop_assert!(e(&f.add(&g)) <= ef + eg + TOL);
        prop_assert!((e(&f.scale(lambda)) - lambda * ef).abs() <= 1e-11);
        prop_assert!((e(&f.add_constant(c)) - ef - c).abs() <= TOL);
        prop_assert!(o.lower(&f, 2).unwrap() <= ef + TOL);
    }

    #[test]
    fn capacities_are_monotone_subadditive_and_sandwiched(
        theta in family(),
        f in functional(),
        t0 in -2.0..2.0f64,
        dt in 0.0..2.0f64,
        s in -2.0..2.0f64,
    ) {
        let model = CapacityModel::Discrete { driver: theta.clone(), horizon: 2 };
        let big = MeasurableEvent::at_least(&f, t0);
        let small = MeasurableEvent::at_least(&f, t0 + dt);
        let v = |a: &MeasurableEvent<f64>| upper_capacity(&model, a).unwrap();
        prop_assert!(v(&small) <= v(&big) + TOL);

        let x1 = RandomFunctional::coordinate(1);
        let a = MeasurableEvent::at_least(&x1, s);
        let b = MeasurableEvent::at_least(&f, t0);
        let (fa, fb) = (x1.clone(), f.clone());
        let union = MeasurableEvent::path(vec![1, 2], "a or b", move |x: &[f64]| {
            fa.evaluate(&x[..1]) >= s || fb.evaluate(x) >= t0
        });
        prop_assert!(v(&union) <= v(&a) + v(&b) + TOL);

        let lower = lower_capacity(&model, &b).unwrap();
        prop_assert!(lower <= v(&b) + TOL);
        // E[1_A] sits between the capacities of A
        let o = ExactOracle::new(&theta);
        let fi = f.clone();
        let ind = RandomFunctional::window(1, 2, "1_b", move |x: &[f64]| if fi.evaluate(x) >= t0 { 1.0 } else { 0.0 });
        prop_assert!((o.upper(&ind, 2).unwrap() - v(&b)).abs() <= TOL);
        prop_assert!(o.lower(&ind, 2).unwrap() >= lower - TOL);
    }

    #[test]
    fn choquet_of_singletons_is_the_mean(l in law()) {
        let step = StepSurvival::from_scenarios(&ScenarioSet::singleton(l.clone()));
        prop_assert!((step.integral() - l.mean()).abs() <= TOL);
    }

    #[test]
    fn adaptive_grid_reproduces_step_integrals(theta in family()) {
        let step = StepSurvival::from_scenarios(&theta);
        let grid = step.to_grid(4096, GridSpacing::Adaptive).unwrap().integrate().unwrap();
        prop_assert!((grid.value - step.integral()).abs() <= 1e-6);
        let uniform = step.to_grid(4096, GridSpacing::Uniform).unwrap().integrate().unwrap();
        prop_assert!((uniform.value - step.integral()).abs() <= uniform.error_bound + TOL);
    }

    #[test]
    fn upper_choquet_dominates_lower(theta in family(), f in functional()) {
        let model = CapacityModel::Discrete { driver: theta, horizon: 2 };
        let hi = survival_of(&model, &f, CapacityKind::Upper).unwrap().integral();
        let lo = survival_of(&model, &f, CapacityKind::Lower).unwrap().integral();
        prop_assert!(lo <= hi + TOL);
    }

    #[test]
    fn phi_of_unit_and_dyadic_blocks(n in 1usize..5000) {
        let h = 5000;
        let unit = BlockStructure::unit(h).unwrap();
        prop_assert_eq!(phi(&unit, n).unwrap(), 1usize << n.ilog2());
        let dyadic = BlockStructure::powers_of_two(h).unwrap();
        prop_assert_eq!(phi(&dyadic, n).unwrap(), 1);
    }

    #[test]
    fn epsilon_sequence_telescopes(weights in prop::collection::vec(0.0..1.0f64, 1..60), tail in 0.0..1.0f64) {
        let e = epsilon_sequence(&weights, tail).unwrap();
        let mut acc = 0.0;
        for (i, &b) in e.b.iter().enumerate() {
            acc += b;
            prop_assert!((acc - (e.tails[0].sqrt() - e.tails[i + 1].sqrt())).abs() <= 1e-12);
        }
        prop_assert!(e.ratios.windows(2).all(|w| w[1] <= w[0] + TOL));
    }

    #[test]
    fn wittmann_steps_hold_exactly(growth in 1.01..3.0f64, m in 1.1..5.0f64, len in 2usize..200) {
        let a: Vec<f64> = (1..=len).map(|n| (n as f64).powf(growth)).collect();
        let sub = match wittmann_subsequence(&a, m) {
            Ok(sub) => sub,
            Err(_) => {
                // only allowed when no single step fits on the prefix
                let any = (1..len).any(|i| (i + 1..=len).any(|j| wittmann_step_holds(&a, m, i, j)));
                prop_assert!(!any);
                return Ok(());
            }
        };
        prop_assert!(sub.indices.windows(2).all(|w| wittmann_step_holds(&a, m, w[0], w[1])));
        prop_assert!(sub.indices.windows(2).all(|w| w[0] < w[1]));
    }
}
