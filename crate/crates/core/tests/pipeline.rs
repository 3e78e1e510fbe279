use krylov_toda::exact::{exact_coefficients, exact_complexity, AlgebraSpec};
use krylov_toda::measure::{ising_2d_dos, IsingMethod};
use krylov_toda::observables::{spread_complexity, survival_amplitude, time_averaged_complexity};
use krylov_toda::rmt::{ensemble_average, EnsembleFamily, EnsembleSpec, Experiment, Observable};
use krylov_toda::{eigendecompose, flow, lanczos, Deformation, FlowOptions, Propagator, SpectralMeasure};
use proptest::prelude::*;

#[test]
fn measure_to_observables_round_trip() {
    let m = ising_2d_dos(3, 4, 1.0, IsingMethod::Transfer).unwrap();
    let d = Deformation::new(0.3, 0.02).unwrap();
    let op = lanczos(&m.deform(d).unwrap()).unwrap();
    let p = Propagator::new(&op).unwrap();
    for t in [0.0, 0.4, 1.7, 6.0] {
        // the chain's return amplitude is the partition-function ratio
        let z = survival_amplitude(&m, d, t).unwrap();
        assert!((p.return_amplitude(t) - z).norm() < 1e-10, "t = {t}");
    }
    let w = m.deform(d).unwrap().normalized_weights();
    let eig = eigendecompose(&op).unwrap();
    for (a, b) in eig.weights().iter().zip(&w) {
        assert!((a - b).abs() < 1e-10);
    }
    let avg = time_averaged_complexity(&op).unwrap();
    assert!(avg.kbar > 0.0 && avg.kbar < (op.dim() - 1) as f64);
}

#[test]
fn flowed_exact_chain_keeps_closed_form() {
    let spec = AlgebraSpec::Sl2rStable { gamma0: 1.0, theta0: 0.8, h: 1.0, delta: 0.0, cutoff: 256 };
    let path = [Deformation::identity(), Deformation::gibbs(0.7)];
    let res = flow(&exact_coefficients(&spec, path[0]).unwrap(), &path, &FlowOptions::default()).unwrap();
    let p = Propagator::new(res.final_operator()).unwrap();
    for t in [0.5, 2.0, 5.0] {
        let k = spread_complexity(&p.state(t));
        let want = exact_complexity(&spec, path[1], t).unwrap().unwrap();
        assert!((k - want).abs() < 1e-6 * want.max(1.0), "t = {t}: {k} vs {want}");
    }
}

#[test]
fn ensemble_averages_ignore_thread_count() {
    let spec = EnsembleSpec {
        family: EnsembleFamily::ChiralDense,
        dyson: 1,
        dim: 16,
        samples: 12,
        seed: 5,
        delta: 1.0,
    };
    let exp = Experiment {
        deformations: vec![Deformation::identity(), Deformation::quadratic(0.5)],
        times: vec![0.0, 1.0, 3.0],
        observable: Observable::KrylovEntropy,
    };
    let run = |n| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| ensemble_average(&spec, &exp))
    };
    let a = run(1).unwrap();
    let b = run(4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.points.len(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gibbs_flow_agrees_with_relanczos(
        energies in prop::collection::btree_set(-400i32..400, 3..25),
        beta in 0.05f64..1.5,
    ) {
        let e: Vec<f64> = energies.into_iter().map(|k| k as f64 / 100.0).collect();
        let m = SpectralMeasure::from_eigenvalues(&e).unwrap();
        let path = [Deformation::identity(), Deformation::gibbs(beta)];
        let opts = FlowOptions { rtol: 1e-11, atol: 1e-13, ..FlowOptions::default() };
        let res = flow(&lanczos(&m).unwrap(), &path, &opts).unwrap();
        let direct = lanczos(&m.deform(path[1]).unwrap()).unwrap();
        let got = res.final_operator();
        prop_assert_eq!(got.dim(), direct.dim());
        for (x, y) in got.a().iter().zip(direct.a()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
        for (x, y) in got.b().iter().zip(direct.b()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }
}
