//! First and second Toda flows of the Lanczos coefficients under the
//! deformation parameters, their Lax pairs, and fixed-point diagnostics.
//!
//! With `b_0 = b_d = 0`:
//!
//! ```text
//! d a_n / d tau1 = -(b_{n+1}^2 - b_n^2)
//! d b_n / d tau1 = -b_n (a_n - a_{n-1}) / 2
//! d a_n / d tau2 = -[b_{n+1}^2 (a_{n+1} + a_n) - b_n^2 (a_n + a_{n-1})]
//! d b_n / d tau2 = -b_n (b_{n+1}^2 - b_{n-1}^2 + a_n^2 - a_{n-1}^2) / 2
//! ```

mod diagnostics;
mod flow;
mod lax;

pub use diagnostics::{fixed_point_diagnostics, FixedPointReport, FlowKind, RateEstimate, MIN_WINDOW_POINTS};
pub use flow::{flow, relanczos_path, FlowOptions, FlowPoint, FlowResult, StepRecord, Variables};
pub use lax::{lax_pair, toda_derivative, toda_rhs, LaxPair};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{eigendecompose, lanczos, TridiagonalOperator};
    use crate::measure::{Deformation, SpectralMeasure};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_measure(rng: &mut ChaCha8Rng, d: usize) -> SpectralMeasure {
        let mut e = 0.0;
        let pairs: Vec<(f64, f64)> = (0..d)
            .map(|_| {
                e += rng.random_range(0.1..0.6);
                (e - 0.35 * d as f64 / 2.0, rng.random_range(-3.0..0.0))
            })
            .collect();
        SpectralMeasure::from_weighted(pairs).unwrap()
    }

    fn random_chain(rng: &mut ChaCha8Rng, d: usize) -> TridiagonalOperator {
        let a = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = (0..d - 1).map(|_| rng.random_range(0.2..1.2)).collect();
        TridiagonalOperator::new(a, b).unwrap()
    }

    fn max_diff(x: &TridiagonalOperator, y: &TridiagonalOperator) -> f64 {
        assert_eq!(x.dim(), y.dim());
        x.a().iter().zip(y.a()).chain(x.b().iter().zip(y.b())).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn lax_pair_trivial_and_two_site() {
        let one = lax_pair(&TridiagonalOperator::new(vec![0.7], vec![]).unwrap());
        assert_eq!(one.m1, DMatrix::zeros(1, 1));
        assert_eq!(one.m2, DMatrix::zeros(1, 1));
        let g = 1.3;
        let two = lax_pair(&TridiagonalOperator::new(vec![0.0, 0.0], vec![g]).unwrap());
        assert_eq!(two.m1, DMatrix::from_row_slice(2, 2, &[0.0, -g / 2.0, g / 2.0, 0.0]));
        assert_eq!(two.m2, DMatrix::zeros(2, 2));
    }

    #[test]
    fn commutators_match_toda_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let op = random_chain(&mut rng, 6);
            let l = op.to_dense();
            let lp = lax_pair(&op);
            assert_eq!(&lp.m1, &(-lp.m1.transpose()));
            assert_eq!(&lp.m2, &(-lp.m2.transpose()));
            for (m, dir) in [(&lp.m1, Deformation::gibbs(1.0)), (&lp.m2, Deformation::quadratic(1.0))] {
                let comm = m * &l - &l * m;
                let rhs = toda_derivative(&op, dir).to_dense();
                assert!((comm - rhs).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn two_level_first_flow() {
        let m = SpectralMeasure::from_weighted([(0.0, 0.5f64.ln()), (1.0, 0.5f64.ln())]).unwrap();
        let beta = 3.0;
        let res = flow(&lanczos(&m).unwrap(), &[Deformation::identity(), Deformation::gibbs(beta)], &FlowOptions::default())
            .unwrap();
        assert!(res.is_complete());
        let op = res.final_operator();
        let p1 = (-beta).exp() / (1.0 + (-beta).exp());
        let p0 = 1.0 - p1;
        assert!((op.a()[0] - p1).abs() < 1e-9);
        assert!((op.b()[0] - (p0 * p1).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_length_path_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let op = random_chain(&mut rng, 5);
        let tau = Deformation::new(0.3, 0.1).unwrap();
        let res = flow(&op, &[tau, tau], &FlowOptions::default()).unwrap();
        assert_eq!(res.final_operator(), &op);
        let res = flow(&op, &[tau], &FlowOptions::default()).unwrap();
        assert_eq!(res.trajectory.len(), 1);
        assert!(flow(&op, &[], &FlowOptions::default()).is_err());
    }

    #[test]
    fn flow_matches_relanczos() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_measure(&mut rng, 10);
        let path = [
            Deformation::identity(),
            Deformation::new(1.0, 0.0).unwrap(),
            Deformation::new(1.0, 0.4).unwrap(),
            Deformation::new(-0.5, 0.8).unwrap(),
        ];
        let res = flow(&lanczos(&m).unwrap(), &path, &FlowOptions::default()).unwrap();
        let reference = relanczos_path(&m, &path).unwrap();
        for (x, y) in res.trajectory.iter().zip(&reference) {
            assert_eq!(x.tau, y.tau);
            assert!(max_diff(&x.op, &y.op) < 1e-6, "{:?}", x.tau);
        }
        assert!(res.max_drift() < 1e-8);
        let e0 = eigendecompose(&res.trajectory[0].op).unwrap();
        let e1 = eigendecompose(res.final_operator()).unwrap();
        for (x, y) in e0.values().iter().zip(e1.values()) {
            assert!((x - y).abs() < 1e-7);
        }
    }

    #[test]
    fn log_variables_agree_with_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let op = lanczos(&random_measure(&mut rng, 8)).unwrap();
        let path = [Deformation::identity(), Deformation::new(2.0, 0.5).unwrap()];
        let lin = flow(&op, &path, &FlowOptions::default()).unwrap();
        let log = flow(&op, &path, &FlowOptions { variables: Variables::Log, ..Default::default() }).unwrap();
        assert!(max_diff(lin.final_operator(), log.final_operator()) < 1e-7);
        let zero_b = TridiagonalOperator::new(vec![0.0, 1.0], vec![0.0]).unwrap();
        assert!(flow(&zero_b, &path, &FlowOptions { variables: Variables::Log, ..Default::default() }).is_err());
    }

    #[test]
    fn symmetric_measure_keeps_zero_diagonal() {
        let pairs: Vec<(f64, f64)> =
            [0.3, 0.9, 1.4, 2.2].iter().flat_map(|&e: &f64| [(e, -e), (-e, -e)]).collect();
        let m = SpectralMeasure::from_weighted(pairs).unwrap();
        let op = lanczos(&m).unwrap();
        let op = TridiagonalOperator::new(vec![0.0; op.dim()], op.b().to_vec()).unwrap();
        let path: Vec<Deformation> = (0..=5).map(|k| Deformation::quadratic(k as f64)).collect();
        let res = flow(&op, &path, &FlowOptions::default()).unwrap();
        for p in &res.trajectory {
            assert!(p.op.a().iter().all(|a| a.abs() < 1e-12));
        }
    }

    #[test]
    fn fixed_point_two_level() {
        let m = SpectralMeasure::from_weighted([(0.0, 0.0), (1.0, 0.0)]).unwrap();
        let path: Vec<Deformation> = (0..=60).map(|k| Deformation::gibbs(k as f64)).collect();
        let res = flow(&lanczos(&m).unwrap(), &path, &FlowOptions { variables: Variables::Log, ..Default::default() })
            .unwrap();
        let rep = fixed_point_diagnostics(&res, None).unwrap();
        assert_eq!(rep.kind, FlowKind::First);
        let r = &rep.rates[0];
        assert!((r.measured.unwrap() + 0.5).abs() < 1e-6);
        assert!((rep.a_limits[0] - 0.0).abs() < 1e-9 && (rep.a_limits[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_flow_symmetric_fixed_point() {
        let eps = [0.5, 0.9, 1.3];
        let pairs: Vec<(f64, f64)> = eps.iter().flat_map(|&e| [(e, 0.0), (-e, 0.0)]).collect();
        let m = SpectralMeasure::from_weighted(pairs).unwrap();
        let op = lanczos(&m).unwrap();
        let op = TridiagonalOperator::new(vec![0.0; 6], op.b().to_vec()).unwrap();
        let path: Vec<Deformation> = (0..=40).map(|k| Deformation::quadratic(2.0 * k as f64)).collect();
        let res = flow(&op, &path, &FlowOptions { variables: Variables::Log, ..Default::default() }).unwrap();
        let fin = res.final_operator();
        for (k, &b) in fin.b().iter().enumerate() {
            if k % 2 == 0 {
                assert!((b - eps[k / 2]).abs() < 1e-8, "b_{} = {b}", k + 1);
            } else {
                assert!(b < 1e-6, "b_{} = {b}", k + 1);
            }
        }
        assert!(fin.a().iter().all(|a| a.abs() < 1e-12));
        let rep = fixed_point_diagnostics(&res, None).unwrap();
        assert_eq!(rep.kind, FlowKind::Second);
        for r in rep.rates.iter().filter(|r| r.n % 2 == 0) {
            assert!((r.ratio.unwrap() - 1.0).abs() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn mixed_path_rejected_by_diagnostics() {
        let op = TridiagonalOperator::new(vec![0.0, 1.0], vec![0.5]).unwrap();
        let path = [Deformation::identity(), Deformation::new(1.0, 1.0).unwrap()];
        let res = flow(&op, &path, &FlowOptions::default()).unwrap();
        assert!(fixed_point_diagnostics(&res, None).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn first_flow_conserves_traces(seed in 0u64..10_000, beta in 0.1f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let op = random_chain(&mut rng, 7);
            let opts = FlowOptions { rtol: 1e-11, atol: 1e-13, ..FlowOptions::default() };
            let res = flow(&op, &[Deformation::identity(), Deformation::gibbs(beta)], &opts).unwrap();
            let f = res.final_operator();
            let tr = |o: &TridiagonalOperator| {
                (o.a().iter().sum::<f64>(),
                 o.a().iter().map(|x| x * x).sum::<f64>() + 2.0 * o.b().iter().map(|x| x * x).sum::<f64>())
            };
            let (s0, q0) = tr(&op);
            let (s1, q1) = tr(f);
            prop_assert!((s0 - s1).abs() < 1e-8);
            prop_assert!((q0 - q1).abs() < 1e-8);
        }

        #[test]
        fn deformations_compose(seed in 0u64..10_000, t1 in -1.0f64..1.0, t2 in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_measure(&mut rng, 6);
            let d1 = Deformation::new(t1, 0.0).unwrap();
            let d2 = Deformation::new(0.0, t2).unwrap();
            let two = m.deform(d1).unwrap().deform(d2).unwrap().normalized_weights();
            let one = m.deform(d1 + d2).unwrap().normalized_weights();
            for (x, y) in two.iter().zip(one) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
