use ndarray::{Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdrc::readout::{predict, ridge_solve, split, split_groups, train_ridge, ReadoutModel, SplitSpec};
use sdrc::{NodeLabel, StateMatrix};

fn states(values: Array2<f64>) -> StateMatrix<f64> {
    let labels = (0..values.ncols()).map(|j| NodeLabel::Feature(format!("x{j}"))).collect();
    StateMatrix::new(values, labels, 5e-9).unwrap()
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Gauss-Jordan with partial pivoting on `[A | B]`.
fn gauss_jordan(mut a: Array2<f64>, mut b: Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[[i, c]].abs().total_cmp(&a[[j, c]].abs())).unwrap();
        for k in 0..n {
            a.swap([c, k], [p, k]);
        }
        for k in 0..b.ncols() {
            b.swap([c, k], [p, k]);
        }
        let d = a[[c, c]];
        a.row_mut(c).mapv_inplace(|v| v / d);
        b.row_mut(c).mapv_inplace(|v| v / d);
        for r in 0..n {
            if r != c {
                let f = a[[r, c]];
                let (arow, brow) = (a.row(c).to_owned(), b.row(c).to_owned());
                a.row_mut(r).scaled_add(-f, &arow);
                b.row_mut(r).scaled_add(-f, &brow);
            }
        }
    }
    b
}

fn normal_equations(x: &Array2<f64>, y: &Array2<f64>, lambda: f64) -> Array2<f64> {
    let mut a = x.t().dot(x);
    for i in 0..a.nrows() {
        a[[i, i]] += lambda;
    }
    gauss_jordan(a, x.t().dot(y))
}

/// Population z-scoring with the rows' own statistics.
fn zscore(x: &Array2<f64>) -> Array2<f64> {
    let mean = x.mean_axis(Axis(0)).unwrap();
    let sd = x.std_axis(Axis(0), 0.0);
    (x - &mean) / &sd
}

fn objective(m: &ReadoutModel<f64>, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let z = zscore(x);
    let r = z.dot(&m.weights) + &m.bias - y;
    r.iter().map(|v| v * v).sum::<f64>() + m.lambda * m.weights.iter().map(|w| w * w).sum::<f64>()
}

#[test]
fn ridge_matches_normal_equations_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let x = random(&mut rng, 20, 5);
        let y = random(&mut rng, 20, 1);
        let w = ridge_solve(x.view(), y.view(), 0.1).unwrap();
        let oracle = normal_equations(&x, &y, 0.1);
        for (a, b) in w.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-8);
        }

        // Standardized, centred problem with an unpenalized bias.
        let model = train_ridge(&states(x.clone()), &y, 0.1).unwrap();
        let yc = &y - &y.mean_axis(Axis(0)).unwrap();
        let oracle = normal_equations(&zscore(&x), &yc, 0.1);
        for (a, b) in model.weights.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((model.bias[0] - y.mean().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn square_full_rank_interpolates() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random(&mut rng, 6, 5);
    let y = random(&mut rng, 6, 2);
    let model = train_ridge(&states(x.clone()), &y, 0.0).unwrap();
    assert!(model.training_mse < 1e-16);
    let pred = predict(&model, &states(x)).unwrap();
    assert!((&pred - &y).iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn infinite_penalty_limit_predicts_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&mut rng, 40, 6);
    let y = random(&mut rng, 40, 3);
    let model = train_ridge(&states(x.clone()), &y, 1e12).unwrap();
    let norm = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    assert!(norm < 1e-6);
    let means = y.mean_axis(Axis(0)).unwrap();
    let pred = predict(&model, &states(x)).unwrap();
    for row in pred.rows() {
        for (p, m) in row.iter().zip(&means) {
            assert!((p - m).abs() < 1e-6);
        }
    }
}

#[test]
fn prediction_reproduces_training_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random(&mut rng, 80, 7);
    let y = random(&mut rng, 80, 2);
    let model = train_ridge(&states(x.clone()), &y, 1e-3).unwrap();
    let pred = predict(&model, &states(x)).unwrap();
    let mse = (&pred - &y).iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    assert!((mse - model.training_mse).abs() < 1e-10);
}

#[test]
fn zero_and_identity_models() {
    let x = Array2::from_shape_fn((5, 1), |(i, _)| i as f64);
    let zero = ReadoutModel {
        weights: Array2::zeros((1, 1)),
        bias: ndarray::arr1(&[2.5]),
        lambda: 0.0,
        state_mean: ndarray::arr1(&[0.0]),
        state_scale: ndarray::arr1(&[1.0]),
        training_mse: 0.0,
    };
    assert!(predict(&zero, &states(x.clone())).unwrap().iter().all(|&v| v == 2.5));
    let identity = ReadoutModel { weights: Array2::ones((1, 1)), bias: ndarray::arr1(&[0.0]), ..zero };
    assert_eq!(predict(&identity, &states(x.clone())).unwrap().column(0), x.column(0));
    assert!(predict(&identity, &states(Array2::zeros((3, 2)))).is_err());
}

#[test]
fn ridge_solution_is_locally_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random(&mut rng, 50, 8);
    let y = random(&mut rng, 50, 3);
    let model = train_ridge(&states(x.clone()), &y, 0.05).unwrap();
    let base = objective(&model, &x, &y);
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..8), rng.random_range(0..3));
        for eps in [1e-4, -1e-4] {
            let mut m = model.clone();
            m.weights[[i, j]] += eps;
            assert!(objective(&m, &x, &y) >= base);
        }
    }
}

#[test]
fn scaling_states_and_targets_preserves_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random(&mut rng, 60, 5);
    let y = random(&mut rng, 60, 4);
    let c = 7.5;
    let argmax = |r: ndarray::ArrayView1<f64>| (0..r.len()).max_by(|&i, &j| r[i].total_cmp(&r[j])).unwrap();
    let check = |a: &Array2<f64>, b: &Array2<f64>| {
        for (ra, rb) in a.rows().into_iter().zip(b.rows()) {
            assert_eq!(argmax(ra), argmax(rb));
            for (p, q) in ra.iter().zip(rb) {
                assert!((p * c - q).abs() < 1e-9 * c);
            }
        }
    };
    let xs = &x * c;
    let ys = &y * c;

    // Unstandardized ridge: lambda must scale with c^2.
    let a = x.dot(&ridge_solve(x.view(), y.view(), 0.3).unwrap());
    let b = xs.dot(&ridge_solve(xs.view(), ys.view(), 0.3 * c * c).unwrap());
    check(&a, &b);

    // The readout standardizes states, which absorbs the state scale; lambda stays put.
    let a = predict(&train_ridge(&states(x.clone()), &y, 0.3).unwrap(), &states(x)).unwrap();
    let b = predict(&train_ridge(&states(xs.clone()), &ys, 0.3).unwrap(), &states(xs)).unwrap();
    check(&a, &b);
}

#[test]
fn contiguous_split_counts_and_washout() {
    let x = Array2::from_shape_fn((1000, 2), |(i, j)| (i * 2 + j) as f64);
    let y = Array2::from_shape_fn((1000, 1), |(i, _)| i as f64);
    let spec = SplitSpec { washout: 100, train_fraction: 0.5, shuffle_seed: None };
    let (train, test) = split(&states(x), &y, &spec).unwrap();
    assert_eq!((train.rows.len(), test.rows.len()), (450, 450));
    assert!(train.rows.iter().chain(&test.rows).all(|&r| r >= 100));
    assert_eq!(train.rows, (100..550).collect::<Vec<_>>());
    assert_eq!(train.targets[[0, 0]], 100.0);
    assert_eq!(test.states.values[[0, 0]], 1100.0);
}

#[test]
fn speech_protocol_partitions_are_permutations() {
    let spec = |seed| SplitSpec { washout: 0, train_fraction: 0.8, shuffle_seed: Some(seed) };
    let mut seen = std::collections::HashSet::new();
    for seed in 0..20 {
        let (train, test) = spec(seed).indices(500).unwrap();
        assert_eq!((train.len(), test.len()), (400, 100));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..500).collect::<Vec<_>>());
        let mut key = test.clone();
        key.sort_unstable();
        assert!(seen.insert(key));
    }
}

#[test]
fn group_split_keeps_recordings_whole() {
    let x = Array2::from_shape_fn((30, 1), |(i, _)| i as f64);
    let y = Array2::zeros((30, 1));
    let bounds: Vec<_> = (0..10).map(|g| g * 3..g * 3 + 3).collect();
    let spec = SplitSpec { washout: 0, train_fraction: 0.8, shuffle_seed: Some(1) };
    let (train, test) = split_groups(&states(x), &y, &bounds, &spec).unwrap();
    assert_eq!((train.rows.len(), test.rows.len()), (24, 6));
    for chunk in test.rows.chunks(3) {
        assert_eq!(chunk[0] % 3, 0);
        assert_eq!(chunk, &[chunk[0], chunk[0] + 1, chunk[0] + 2]);
    }
}

#[test]
fn bundle_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random(&mut rng, 30, 4);
    let y = random(&mut rng, 30, 2);
    let model = train_ridge(&states(x), &y, 0.01).unwrap();
    let mut buf = Vec::new();
    model.write_to(&mut buf).unwrap();
    assert_eq!(ReadoutModel::<f64>::read_from(buf.as_slice()).unwrap(), model);
    assert!(ReadoutModel::<f64>::read_from(&buf[..20]).is_err());
    buf[0] = b'X';
    assert!(ReadoutModel::<f64>::read_from(buf.as_slice()).is_err());
}

#[test]
fn single_precision_training() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(&mut rng, 40, 3);
    let y = random(&mut rng, 40, 1);
    let m64 = train_ridge(&states(x.clone()), &y, 0.1).unwrap();
    let x32 = x.mapv(|v| v as f32);
    let labels = (0..3).map(|j| NodeLabel::Feature(format!("x{j}"))).collect();
    let s32 = StateMatrix::new(x32, labels, 1.0).unwrap();
    let m32 = train_ridge(&s32, &y.mapv(|v| v as f32), 0.1).unwrap();
    for (a, b) in m64.weights.iter().zip(m32.weights.iter()) {
        assert!((a - *b as f64).abs() < 1e-4);
    }
}

proptest! {
    #[test]
    fn split_is_partition(n in 10usize..400, washout in 0usize..5, frac in 0.1f64..0.9, seed in proptest::option::of(0u64..1000)) {
        let spec = SplitSpec { washout, train_fraction: frac, shuffle_seed: seed };
        let (train, test) = spec.indices(n).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (washout..n).collect::<Vec<_>>());
    }
}
