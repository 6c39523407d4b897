use proptest::prelude::*;

use feataug::augment::{
    augment_dataset, extrapolate, interpolate, interpolate_unchecked, knn_in_class, AugmentConfig,
    Operator, QuantizedIndex,
};
use feataug::autoencoder::{AutoencoderModel, ContextVector, Mode};
use feataug::classifier::{mlp_forward, stratified_folds, MlpModel};
use feataug::datasets::{
    load_csv_sequences, normalize_local, write_csv_sequences, CsvSchema, SequenceSample,
};
use feataug::tensor::{euclidean_distance, per_element_std, Matrix, RandomStream};

fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, len)
}

fn cv(v: &[f64]) -> ContextVector {
    ContextVector(v.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangle_inequality(d in 1usize..12, seed in any::<u64>()) {
        let mut s = RandomStream::new(seed);
        let mut p = || (0..d).map(|_| s.normal() * 10.0).collect::<Vec<_>>();
        let (a, b, c) = (p(), p(), p());
        let ab = euclidean_distance(&a, &b).unwrap();
        let bc = euclidean_distance(&b, &c).unwrap();
        let ac = euclidean_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn std_is_row_permutation_invariant(rows in 2usize..30, cols in 1usize..6, seed in any::<u64>()) {
        let mut s = RandomStream::new(seed);
        let data: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| s.normal()).collect()).collect();
        let mut shuffled = data.clone();
        s.shuffle(&mut shuffled);
        let a = per_element_std(&Matrix::from_rows(&data).unwrap()).unwrap();
        let b = per_element_std(&Matrix::from_rows(&shuffled).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn interpolation_endpoints_exact((a, b) in (1usize..20).prop_flat_map(|n| (vec_strategy(n), vec_strategy(n)))) {
        prop_assert_eq!(interpolate(&cv(&a), &cv(&b), 0.0).unwrap().0, a.clone());
        prop_assert_eq!(interpolate(&cv(&a), &cv(&b), 1.0).unwrap().0, b.clone());
        prop_assert_eq!(extrapolate(&cv(&a), &cv(&b), 0.0).unwrap().0, a);
    }

    #[test]
    fn identical_parents_are_fixed_points(a in vec_strategy(8), lambda in 0.0..=1.0f64) {
        prop_assert_eq!(interpolate(&cv(&a), &cv(&a), lambda).unwrap().0, a.clone());
        prop_assert_eq!(extrapolate(&cv(&a), &cv(&a), lambda * 3.0).unwrap().0, a);
    }

    #[test]
    fn extrapolation_is_negated_interpolation(
        (a, b) in (1usize..20).prop_flat_map(|n| (vec_strategy(n), vec_strategy(n))),
        lambda in 0.0..5.0f64,
    ) {
        prop_assert_eq!(
            extrapolate(&cv(&a), &cv(&b), lambda).unwrap().0,
            interpolate_unchecked(&a, &b, -lambda).unwrap()
        );
    }

    #[test]
    fn knn_stays_in_class(n in 2usize..60, classes in 1usize..4, k in 1usize..12, seed in any::<u64>()) {
        let mut s = RandomStream::new(seed);
        let c = Matrix::from_vec(n, 3, (0..n * 3).map(|_| s.normal()).collect()).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| s.index(classes)).collect();
        let index = QuantizedIndex::build(&c, &labels, &mut s).unwrap();
        for q in 0..n {
            let class_size = labels.iter().filter(|&&l| l == labels[q]).count();
            match knn_in_class(&c, &labels, q, k) {
                Ok(nb) => {
                    prop_assert_eq!(nb.len(), k.min(class_size - 1));
                    prop_assert!(!nb.contains(&q));
                    prop_assert!(nb.iter().all(|&i| labels[i] == labels[q]));
                    let d: Vec<f64> = nb.iter().map(|&i| euclidean_distance(c.row(q), c.row(i)).unwrap()).collect();
                    prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
                    prop_assert_eq!(index.knn_in_class(q, k).unwrap(), nb);
                }
                Err(_) => prop_assert_eq!(class_size, 1),
            }
        }
    }

    #[test]
    fn augmentation_counts_and_labels(
        n in 2usize..40,
        k in 1usize..8,
        op in prop::sample::select(vec![Operator::Noise, Operator::Interpolate, Operator::Extrapolate]),
        seed in any::<u64>(),
    ) {
        let mut s = RandomStream::new(seed);
        let c = Matrix::from_vec(n, 4, (0..n * 4).map(|_| s.normal()).collect()).unwrap();
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let lengths: Vec<usize> = (0..n).map(|i| 5 + i % 4).collect();
        let config = AugmentConfig { operator: op, k, ..Default::default() };
        let out = augment_dataset(&c, &labels, &lengths, &config, &s).unwrap();
        let expected: usize = match op {
            Operator::Noise => n,
            _ => (0..n)
                .map(|i| k.min(labels.iter().filter(|&&l| l == labels[i]).count() - 1))
                .sum(),
        };
        prop_assert_eq!(out.len(), expected);
        prop_assert!(out.iter().all(|x| x.values.len() == 4));
        let again = augment_dataset(&c, &labels, &lengths, &config, &s).unwrap();
        prop_assert_eq!(out, again);
    }

    #[test]
    fn softmax_is_a_distribution(seed in any::<u64>(), scale in 0.1..50.0f64) {
        let mut s = RandomStream::new(seed);
        let mut m = MlpModel::new(3, 6, 4, &mut s);
        m.w3.as_mut_slice().iter_mut().for_each(|w| *w *= scale);
        let x: Vec<f64> = (0..3).map(|_| s.normal() * scale).collect();
        let p = mlp_forward(&m, &x, None).unwrap();
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn folds_are_disjoint_and_exhaustive(n in 10usize..80, k in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % 3).collect();
        let folds = stratified_folds(&labels, k, &mut RandomStream::new(seed)).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn local_normalization_is_idempotent(len in 1usize..20, d in 1usize..4, seed in any::<u64>()) {
        let mut s = RandomStream::new(seed);
        let v = (0..len * d).map(|_| 100.0 + 30.0 * s.normal()).collect();
        let x = SequenceSample::new(0, None, Matrix::from_vec(len, d, v).unwrap());
        let once = normalize_local(&x);
        prop_assert_eq!(normalize_local(&once), once.clone());
        for c in 0..d {
            let col = once.values.column(c);
            prop_assert!((col.iter().sum::<f64>() / len as f64).abs() < 1e-12 * 200.0);
        }
    }

    #[test]
    fn encode_defined_for_every_length(len in 1usize..30, seed in any::<u64>()) {
        let mut s = RandomStream::new(seed);
        let m = AutoencoderModel::new(2, 3, &mut s);
        let x = Matrix::from_vec(len, 2, (0..len * 2).map(|_| s.normal()).collect()).unwrap();
        let c = m.encode(&x, Mode::Eval).unwrap();
        prop_assert_eq!(c.len(), 3);
        prop_assert_eq!(m.encode(&x, Mode::Eval).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn csv_round_trip_is_exact(
        seqs in prop::collection::vec(
            (1usize..6, prop::option::of(0usize..5), prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 12)),
            1..6,
        )
    ) {
        let samples: Vec<SequenceSample> = seqs
            .iter()
            .enumerate()
            .map(|(id, (len, label, vals))| {
                let len = (*len).min(vals.len() / 2);
                SequenceSample::new(id, *label, Matrix::from_vec(len, 2, vals[..len * 2].to_vec()).unwrap())
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_csv_sequences(&path, &samples).unwrap();
        let back = load_csv_sequences(&path, &CsvSchema::default()).unwrap();
        prop_assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            prop_assert_eq!(a.id, b.id);
            prop_assert_eq!(a.label, b.label);
            let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.values), bits(&b.values));
        }
    }
}
