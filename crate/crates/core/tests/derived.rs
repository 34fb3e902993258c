use sublaw_core::capacity::{Interval, IntervalSet, Rational};
use sublaw_core::slln::TailBound;
use sublaw_core::{
    epsilon_sequence, kolmogorov_constant, kronecker_check, make_orthogonal, orthogonality_certificate,
    outer_capacity, upper_capacity, verify_rademacher_mensov, CapacityModel, ContinuousModel,
    EstimateKind, McPlan, MeasurableEvent, OrthogonalScheme, ScenarioSet, SelectorPool,
};

fn interval(lo: (i64, i64), hi: (i64, i64)) -> MeasurableEvent<f64> {
    let q = |(n, d): (i64, i64)| Rational::new(n, d);
    MeasurableEvent::intervals(IntervalSet::single(Interval::closed(q(lo), q(hi))))
}

#[test]
fn two_halves_counterexample() {
    let m = CapacityModel::<f64>::Continuous(ContinuousModel::two_halves());
    let v = |e: &MeasurableEvent<f64>| upper_capacity(&m, e).unwrap();
    assert_eq!(v(&interval((0, 1), (1, 1))), 1.0);
    assert_eq!(v(&interval((1, 1), (2, 1))), 1.0);
    let point = interval((1, 1), (1, 1));
    assert_eq!(v(&point), 0.0);
    // covering {1} by [0.9, 1.1] costs 0.2 but the direct value is 0
    let cover = [interval((9, 10), (11, 10))];
    assert_eq!(outer_capacity(&m, &point, &cover).unwrap(), 0.0);
    assert!((v(&cover[0]) - 0.1).abs() < 1e-15);
}

#[test]
fn power_log_tail_bounds_the_direct_sum() {
    // Σ_{k>n} k^{-2} (log2 k)^2, summed directly well past n
    let tail = TailBound::PowerLog { coefficient: 1.0, p: 2.0, q: 2 };
    for n in [16usize, 256, 4096] {
        let direct: f64 = (n + 1..4_000_000)
            .map(|k| {
                let k = k as f64;
                k.log2().powi(2) / (k * k)
            })
            .sum();
        let bound = tail.after(n).unwrap();
        assert!(bound >= direct, "n = {n}: {bound} < {direct}");
        assert!(bound <= 1.5 * direct, "n = {n}: bound {bound} too loose for {direct}");
    }
    // q = 0, p = 2: the integral of k^{-2} beyond n is 1/n
    let plain = TailBound::<f64>::PowerLog { coefficient: 1.0, p: 2.0, q: 0 };
    assert!((plain.after(64).unwrap() - 1.0 / 64.0).abs() < 1e-15);
}

#[test]
fn geometric_epsilon_sequence_has_closed_form() {
    // a_n = 4^{-n}: t_n = (4/3) 4^{-n}, b_n = sqrt(4/3) 2^{-n-1}
    let n = 30;
    let a: Vec<f64> = (1..=n).map(|k| 4f64.powi(-k)).collect();
    let e = epsilon_sequence(&a, 4f64.powi(-n) / 3.0).unwrap();
    let c = (4.0f64 / 3.0).sqrt();
    for (i, &b) in e.b.iter().enumerate() {
        let k = i as i32 + 1;
        assert!((b - c * 2f64.powi(-k - 1)).abs() < 1e-15);
        assert!((e.ratios[i] - c * (2f64.powi(-k) + 2f64.powi(-k - 1))).abs() < 1e-15);
    }
}

#[test]
fn kronecker_examples() {
    let n = 4000;
    let a: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    // x_k / a_k = (-1)^k / k^2 is summable
    let x: Vec<f64> = (1..=n).map(|k| if k % 2 == 0 { 1.0 / k as f64 } else { -1.0 / k as f64 }).collect();
    let r = kronecker_check(&x, &a, 1e-6).unwrap();
    assert!(r.hypothesis_met);
    assert_eq!(r.conclusion, Some(true));
    let direct: f64 = x.iter().sum::<f64>() / n as f64;
    assert!((r.averages[n - 1] - direct).abs() < 1e-15);

    let zero = kronecker_check(&vec![0.0; 10], &a[..10], 1e-9).unwrap();
    assert!(zero.averages.iter().all(|&v| v == 0.0));

    // x_k = a_k: the series diverges and no conclusion is drawn
    let div = kronecker_check(&a, &a, 1e-6).unwrap();
    assert!(!div.hypothesis_met);
    assert_eq!(div.conclusion, None);
}

#[test]
fn kolmogorov_constant_forms() {
    assert_eq!(kolmogorov_constant(0, 10, 1.0), 1.0);
    assert_eq!(kolmogorov_constant(2, 10, 1.0), 9.0);
    // short horizon: (m+1)(m+2)(2m+3)/6 with m = 2
    assert_eq!(kolmogorov_constant(2, 2, 1.0), 14.0);
}

#[test]
fn rademacher_mensov_lhs_matches_path_enumeration() {
    // fair signs, n = 4: enumerate all 16 paths of Σ c_j ε_j
    let c = [0.5, -1.0, 0.25, 0.75];
    let mut expected = 0.0;
    for mask in 0..16u32 {
        let mut s = 0.0f64;
        let mut best = 0.0f64;
        for (j, &cj) in c.iter().enumerate() {
            s += if mask >> j & 1 == 1 { cj } else { -cj };
            best = best.max(s * s);
        }
        expected += best / 16.0;
    }
    let theta = ScenarioSet::symmetric_signs(&[1.0]).unwrap();
    let model = make_orthogonal(4, OrthogonalScheme::SymmetricSigns(theta.clone())).unwrap();
    let cert = orthogonality_certificate(&model, 64).unwrap();
    assert!(cert.passes());
    let model = model.with_certificate(cert);
    let plan = McPlan {
        replications: 16,
        seed: 1,
        pool: SelectorPool::for_partial_sums(&theta, 1, 1),
    };
    let r = verify_rademacher_mensov(&model, &c, &plan, None).unwrap();
    assert_eq!(r.kind, EstimateKind::Exact);
    assert!((r.lhs[0] - expected).abs() < 1e-12);
    let sum_sq: f64 = c.iter().map(|v| v * v).sum();
    assert!((r.rhs[0] - 16.0 * sum_sq).abs() < 1e-12);
    assert!(r.all_pass());
}
