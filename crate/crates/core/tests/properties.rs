use monoflow::cone::{Cone, OrderRelation};
use monoflow::integrate::{Direction, Trajectory};
use monoflow::monotonicity::{
    certify_linear, sign_conjugate, verify_order_preservation, CertificateKind, MonotonicityCertificate,
    SamplingOptions,
};
use monoflow::oscillation::{non_oscillation_verdict_with, scan_monotone_intervals, IntervalKind, VerdictStatus};
use monoflow::SystemDef;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn metzler(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(0.0f64..1.0, n * n).prop_map(move |v| {
        DMatrix::from_fn(n, n, |i, j| if i == j { -1.5 - v[i * n + j] } else { v[i * n + j] })
    })
}

fn signs(n: usize) -> impl Strategy<Value = Vec<i8>> {
    proptest::collection::vec(prop::bool::ANY, n).prop_map(|b| b.into_iter().map(|p| if p { 1 } else { -1 }).collect())
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, n)
}

fn dual(k: CertificateKind) -> CertificateKind {
    match k {
        CertificateKind::CooperativeImmediate => CertificateKind::CompetitiveImmediate,
        CertificateKind::CompetitiveImmediate => CertificateKind::CooperativeImmediate,
        CertificateKind::EventuallyCooperative => CertificateKind::EventuallyCompetitive,
        CertificateKind::EventuallyCompetitive => CertificateKind::EventuallyCooperative,
        CertificateKind::NotDetected => CertificateKind::NotDetected,
    }
}

fn reversed(traj: &Trajectory) -> Trajectory {
    let times = traj.times().iter().rev().map(|t| -t).collect();
    let states = traj.states().iter().rev().cloned().collect();
    Trajectory::new(times, states, Direction::Forward, None).unwrap()
}

fn count(iv: &[monoflow::oscillation::MonotoneInterval], kind: IntervalKind) -> usize {
    iv.iter().filter(|i| i.kind == kind).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strict_interior_is_transitive(x in point(3), d1 in proptest::collection::vec(0.01f64..2.0, 3), d2 in proptest::collection::vec(0.01f64..2.0, 3), s in signs(3)) {
        let c = Cone::orthant(&s).unwrap();
        let y: Vec<f64> = x.iter().zip(&d1).zip(&s).map(|((a, d), &g)| a + f64::from(g) * d).collect();
        let z: Vec<f64> = y.iter().zip(&d2).zip(&s).map(|((a, d), &g)| a + f64::from(g) * d).collect();
        prop_assert_eq!(c.order_relation(&x, &y, 0.0).unwrap(), OrderRelation::StrictInterior);
        prop_assert_eq!(c.order_relation(&x, &z, 0.0).unwrap(), OrderRelation::StrictInterior);
        prop_assert_eq!(c.order_relation(&z, &x, 0.0).unwrap(), OrderRelation::Incomparable);
    }

    #[test]
    fn relation_is_translation_invariant(x in point(3), y in point(3), shift in point(3), s in signs(3)) {
        let c = Cone::orthant(&s).unwrap();
        let xs: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let ys: Vec<f64> = y.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let r = c.order_relation(&x, &y, 1e-6).unwrap();
        let rs = c.order_relation(&xs, &ys, 1e-6).unwrap();
        // the shift perturbs differences by rounding only; skip the tolerance band
        let (lo, hi) = c.slack_range(&x, &y);
        prop_assume!((lo.abs() - 1e-6).abs() > 1e-9 && (hi.abs() - 1e-6).abs() > 1e-9);
        prop_assert_eq!(r, rs);
    }

    #[test]
    fn relation_on_an_orthant_matches_conjugated_points(x in point(3), y in point(3), s in signs(3)) {
        let c = Cone::orthant(&s).unwrap();
        let p = Cone::positive_orthant(3).unwrap();
        let flip = |v: &[f64]| -> Vec<f64> { v.iter().zip(&s).map(|(a, &g)| f64::from(g) * a).collect() };
        prop_assert_eq!(c.order_relation(&x, &y, 1e-6).unwrap(), p.order_relation(&flip(&x), &flip(&y), 1e-6).unwrap());
    }

    #[test]
    fn certify_commutes_with_sign_conjugation(a in proptest::collection::vec(-1.0f64..1.0, 9), s in signs(3)) {
        let a = DMatrix::from_row_slice(3, 3, &a);
        let k1 = certify_linear(&a, &Cone::orthant(&s).unwrap(), 20.0, 256).unwrap().kind;
        let k2 = certify_linear(&sign_conjugate(&a, &s), &Cone::positive_orthant(3).unwrap(), 20.0, 256).unwrap().kind;
        prop_assert_eq!(k1, k2);
    }

    #[test]
    fn negation_swaps_cooperative_and_competitive(a in proptest::collection::vec(-1.0f64..1.0, 9), s in signs(3)) {
        let a = DMatrix::from_row_slice(3, 3, &a);
        let cone = Cone::orthant(&s).unwrap();
        let k = certify_linear(&a, &cone, 20.0, 256).unwrap().kind;
        let kn = certify_linear(&(-&a), &cone, 20.0, 256).unwrap().kind;
        prop_assert_eq!(kn, dual(k));
    }

    #[test]
    fn time_reversal_swaps_interval_kinds(walk in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 2), 3..24)) {
        let mut states = vec![vec![0.0, 0.0]];
        for step in &walk {
            let last = states.last().unwrap();
            states.push(vec![last[0] + step[0], last[1] + step[1]]);
        }
        let times = (0..states.len()).map(|k| k as f64).collect();
        let traj = Trajectory::new(times, states, Direction::Forward, None).unwrap();
        let rev = reversed(&traj);
        let c = Cone::positive_orthant(2).unwrap();
        let fwd = scan_monotone_intervals(&traj, &c, 1e-9, usize::MAX);
        let bwd = scan_monotone_intervals(&rev, &c, 1e-9, usize::MAX);
        prop_assert_eq!(count(&fwd, IntervalKind::Increasing), count(&bwd, IntervalKind::Decreasing));
        prop_assert_eq!(count(&fwd, IntervalKind::Decreasing), count(&bwd, IntervalKind::Increasing));
        let swap = |v: VerdictStatus| match v {
            VerdictStatus::IncreasingOnly => VerdictStatus::DecreasingOnly,
            VerdictStatus::DecreasingOnly => VerdictStatus::IncreasingOnly,
            other => other,
        };
        prop_assert_eq!(
            swap(non_oscillation_verdict_with(&traj, &c, 1e-9, usize::MAX).status),
            non_oscillation_verdict_with(&rev, &c, 1e-9, usize::MAX).status
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn metzler_flows_preserve_order(a in metzler(3), s in signs(3), seed in 0u64..1000) {
        let conj = sign_conjugate(&a, &s);
        let cone = Cone::orthant(&s).unwrap();
        let sys = SystemDef::linear(conj.clone(), cone.clone()).unwrap();
        let cert = certify_linear(&conj, &cone, 20.0, 256).unwrap();
        prop_assert_eq!(cert.kind, CertificateKind::CooperativeImmediate);
        let mut opts = SamplingOptions::new(3, 30, 5.0, seed);
        opts.grid = 128;
        let report = verify_order_preservation(&sys, &cert, &opts).unwrap();
        prop_assert_eq!(report.violations, 0);
        prop_assert!(report.worst_margin >= -1e-6);
    }
}

#[test]
fn forged_certificate_on_rotation_is_caught() {
    let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let sys = SystemDef::linear(rot, Cone::positive_orthant(2).unwrap()).unwrap();
    let cert = MonotonicityCertificate::immediate(CertificateKind::CooperativeImmediate, "forged");
    let report = verify_order_preservation(&sys, &cert, &SamplingOptions::new(2, 100, 7.0, 3)).unwrap();
    assert!(report.violations > 0);
    assert!(report.worst_margin < -0.1);
}
