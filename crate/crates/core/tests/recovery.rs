use nalgebra::DMatrix;
use ngrc_core::predictor::{free_run, predict_step};
use ngrc_core::training::{config_hash, train, Provenance, ReadoutMatrix, TrainingDescriptor};
use ngrc_core::{
    CollapseRules, NgrcConfig, RidgeMethod, Scalar, TrainedModel, TrainingSample, TrainingSet, Trajectory,
};

fn config<T: Scalar>() -> NgrcConfig<T> {
    NgrcConfig {
        dim: 2,
        k: 2,
        s: 1,
        orders: vec![1],
        state_orders: vec![0, 1, 2],
        beta: T::lit(1e-12),
        gamma: T::lit(0.5),
        monomial_order: Default::default(),
    }
}

/// A readout with weak, damped dynamics whose trajectories stay bounded.
fn generator<T: Scalar>() -> TrainedModel<T> {
    let cfg = config::<T>();
    let n = cfg.feature_dim();
    let w: Vec<T> = (0..2 * n)
        .map(|i| T::lit(0.05 * (((i * 3) % 11) as f64 / 11.0 - 0.5)))
        .collect();
    let provenance = Provenance {
        config_hash: config_hash(&cfg),
        descriptor: TrainingDescriptor {
            thetas: vec![],
            columns_per_sample: vec![],
            total_columns: 0,
            method: RidgeMethod::default(),
        },
    };
    let readout = ReadoutMatrix::from_row_major(2, n, &w, provenance).unwrap();
    TrainedModel::new(cfg, readout).unwrap()
}

/// Trajectories of `model` from several initial histories and parameters.
fn rollouts<T: Scalar>(model: &TrainedModel<T>) -> TrainingSet<T> {
    let samples = [(-0.3, 0.4, 0.1), (0.5, -0.2, 0.6), (0.1, 0.9, -0.4), (-0.8, -0.6, 0.3)]
        .iter()
        .map(|&(a, b, theta)| {
            let history = [[T::lit(a), T::lit(b)], [T::lit(b), T::lit(-a)]];
            let mut traj = Trajectory::from_states(&history, T::lit(0.1), T::zero());
            for _ in 0..60 {
                let next = predict_step(traj.as_flat(), model, T::lit(theta)).unwrap();
                traj.push(&next);
            }
            TrainingSample {
                trajectory: traj,
                theta: T::lit(theta),
            }
        })
        .collect();
    TrainingSet::new(samples)
}

fn max_abs_diff<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).abs().to_f64().unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn training_recovers_the_generating_readout() {
    let truth = generator::<f64>();
    let set = rollouts(&truth);
    for method in [RidgeMethod::Orthogonal, RidgeMethod::NormalEquations] {
        let fitted = train(&set, &config(), method).unwrap();
        let err = max_abs_diff(&fitted.readout().w_out, &truth.readout().w_out);
        assert!(err < 1e-6, "{method:?}: {err:e}");
        assert_eq!(fitted.readout().provenance.descriptor.total_columns, 4 * 60);
    }
}

#[test]
fn f32_pipeline_tracks_f64() {
    let set64 = rollouts(&generator::<f64>());
    let set32 = rollouts(&generator::<f32>());
    let m64 = train(&set64, &config(), RidgeMethod::default()).unwrap();
    let m32 = train(&set32, &config(), RidgeMethod::default()).unwrap();
    let rules64 = CollapseRules::<f64>::divergence_only(1e6);
    let rules32 = CollapseRules::<f32>::divergence_only(1e6);
    let warm64 = set64.samples[1].trajectory.slice(0, 2);
    let warm32 = set32.samples[1].trajectory.slice(0, 2);
    let r64 = free_run(&warm64, &m64, 0.6, 200, &rules64).unwrap();
    let r32 = free_run(&warm32, &m32, 0.6f32, 200, &rules32).unwrap();
    assert!(r32.collapse.is_none());
    assert_eq!(r32.trajectory.len(), r64.trajectory.len());
    let worst = r64
        .trajectory
        .as_flat()
        .iter()
        .zip(r32.trajectory.as_flat())
        .map(|(a, b)| (a - *b as f64).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst:e}");
}
