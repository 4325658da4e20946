use proptest::prelude::*;

use tnfeat::classify::{holdout_indices, knn1_classify, lda_fit, lda_predict};
use tnfeat::format::{read_dtf, write_dtf};
use tnfeat::linalg::{svd_economy, truncation_rank, TruncationCriterion};
use tnfeat::mps::{mps_decompose, MpsModel};
use tnfeat::tensor::{
    concat_along_new_last_mode, inverse_permutation, matricize_mode_n, matricize_prefix, mode_n_product,
    permute_modes,
};
use tnfeat::{DenseTensor, FeatureMatrix, Matrix, MpsOptions};

fn tensor(max_order: usize, max_extent: usize) -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(1..=max_extent, 1..=max_order).prop_flat_map(|shape| {
        let len: usize = shape.iter().product();
        prop::collection::vec(-10.0f64..10.0, len).prop_map(move |data| DenseTensor::new(shape.clone(), data).unwrap())
    })
}

fn matrix(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0f64..5.0, r * c).prop_map(move |d| Matrix::from_col_major(r, c, d))
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_survive_reshuffling(t in tensor(5, 4), seed in any::<u64>()) {
        let n = t.frobenius_norm();
        let order = t.order();
        let mut perm: Vec<usize> = (1..=order).collect();
        perm.rotate_left((seed as usize) % order);
        let p = permute_modes(&t, &perm).unwrap();
        prop_assert!(close(p.frobenius_norm(), n, 1e-12));
        prop_assert_eq!(permute_modes(&p, &inverse_permutation(&perm)).unwrap(), t.clone());
        for mode in 1..=order {
            let m = matricize_mode_n(&t, mode).unwrap();
            prop_assert!(close(m.to_matrix().frobenius_norm(), n, 1e-12));
            prop_assert_eq!(m.dematricize(), t.clone());
        }
        for j in 1..order {
            let v = matricize_prefix(&t, j).unwrap();
            prop_assert!(v.is_borrowed());
            prop_assert!(close(v.to_matrix().frobenius_norm(), n, 1e-12));
        }
        let stacked = concat_along_new_last_mode(&[t.clone(), t.scale(-1.0)]).unwrap();
        prop_assert!(close(stacked.frobenius_norm(), n * 2f64.sqrt(), 1e-12));
        prop_assert_eq!(stacked.last_mode_slice(0), t);
    }

    #[test]
    fn mode_product_matches_summation(t in tensor(4, 4), rows in 1usize..4, seed in any::<u64>()) {
        let n = 1 + (seed as usize) % t.order();
        let cols = t.shape()[n - 1];
        let a = Matrix::from_col_major(rows, cols, (0..rows * cols).map(|v| ((v * 37 + seed as usize) % 11) as f64 - 5.0).collect());
        let p = mode_n_product(&t, &a, n).unwrap();
        let mut shape = t.shape().to_vec();
        shape[n - 1] = rows;
        prop_assert_eq!(p.shape(), &shape[..]);
        let want = DenseTensor::from_fn(shape, |idx| {
            let mut src = idx.to_vec();
            (0..cols)
                .map(|k| {
                    src[n - 1] = k;
                    a.get(idx[n - 1], k) * t.get(&src)
                })
                .sum()
        })
        .unwrap();
        for (x, y) in p.data().iter().zip(want.data()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn mode_product_is_bilinear(t in tensor(3, 3), alpha in -3.0f64..3.0) {
        let n = t.order();
        let e = t.shape()[n - 1];
        let a = Matrix::from_col_major(2, e, (0..2 * e).map(|v| v as f64 - 1.5).collect());
        let b = Matrix::from_col_major(2, e, (0..2 * e).map(|v| 1.0 / (1.0 + v as f64)).collect());
        let sum = Matrix::from_col_major(2, e, a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + alpha * y).collect());
        let lhs = mode_n_product(&t, &sum, n).unwrap();
        let rhs = mode_n_product(&t, &a, n).unwrap().axpy(alpha, &mode_n_product(&t, &b, n).unwrap()).unwrap();
        for (x, y) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn svd_truncation_identities(m in matrix(7), eps in 0.05f64..=1.0) {
        let svd = svd_economy(&m).unwrap();
        prop_assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        let k = truncation_rank(&svd.s, eps, TruncationCriterion::Mass).unwrap();
        let total: f64 = svd.s.iter().filter(|&&s| s > 1e-13 * svd.s[0]).sum();
        if total > 0.0 {
            let kept: f64 = svd.s[..k].iter().sum();
            prop_assert!(kept / total >= eps - 1e-12);
            if k > 1 {
                let less: f64 = svd.s[..k - 1].iter().sum();
                prop_assert!(less / total < eps);
            }
        }
        let looser = truncation_rank(&svd.s, (eps * 0.9).max(1e-3), TruncationCriterion::Mass).unwrap();
        prop_assert!(looser <= k);
        // dropped energy equals the squared tail of the spectrum
        let approx = svd.clone().truncate(k).reconstruct();
        let diff: f64 = approx.as_slice().iter().zip(m.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        let tail: f64 = svd.s[k..].iter().map(|s| s * s).sum();
        prop_assert!((diff - tail).abs() <= 1e-9 * (1.0 + m.frobenius_norm().powi(2)));
        // sign convention: largest entry of each left vector is positive
        for j in 0..svd.s.len() {
            if svd.s[j] > 1e-10 * svd.s[0] {
                let col = svd.u.col(j);
                let big = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
                prop_assert!(big > 0.0);
            }
        }
    }

    #[test]
    fn dtf_round_trip_is_bit_exact(t in tensor(4, 5)) {
        let mut buf = Vec::new();
        write_dtf(&mut buf, &t).unwrap();
        let back = read_dtf(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.shape(), t.shape());
        prop_assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn mps_bonds_stay_in_bounds_and_serialize(t in tensor(3, 4), k in 1usize..6, eps in 0.3f64..=1.0) {
        let samples: Vec<DenseTensor> = (0..k).map(|q| t.scale(1.0 + q as f64).axpy(0.1, &t.scale((q * q) as f64)).unwrap()).collect();
        let stack = concat_along_new_last_mode(&samples).unwrap();
        let m = mps_decompose(&stack, &MpsOptions::new(eps)).unwrap();
        let b = m.bond_dims();
        prop_assert_eq!(b.len(), stack.order() + 1);
        prop_assert_eq!((b[0], b[b.len() - 1]), (1, 1));
        let dims: Vec<usize> = m.stack_permutation().iter().map(|&p| stack.shape()[p - 1]).collect();
        for j in 1..b.len() - 1 {
            let left: usize = dims[..j].iter().product();
            let right: usize = dims[j..].iter().product();
            prop_assert!(b[j] >= 1 && b[j] <= left.min(right));
        }
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        prop_assert_eq!(MpsModel::read_from(&mut buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn splits_are_stratified_partitions(counts in prop::collection::vec(2usize..12, 1..5), r in 0.1f64..0.6, seed in any::<u64>()) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let s = holdout_indices(&labels, counts.len(), r, seed).unwrap();
        prop_assert_eq!(&s, &holdout_indices(&labels, counts.len(), r, seed).unwrap());
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (c, &n) in counts.iter().enumerate() {
            let in_test = s.test.iter().filter(|&&i| labels[i] == c).count();
            prop_assert_eq!(in_test, (r * n as f64).round() as usize);
            prop_assert!(s.train.iter().any(|&i| labels[i] == c));
        }
    }

    #[test]
    fn lda_ignores_shift_and_scale(shift in -50.0f64..50.0, scale in 0.1f64..20.0) {
        let (train, test) = two_blobs();
        let base = lda_predict(&lda_fit(&train, None).unwrap(), &test).unwrap();
        let moved_train = train.map(|v| scale * v + shift);
        let moved_test = test.map(|v| scale * v + shift);
        let moved = lda_predict(&lda_fit(&moved_train, None).unwrap(), &moved_test).unwrap();
        prop_assert_eq!(base, moved);
    }
}

fn two_blobs() -> (FeatureMatrix, FeatureMatrix) {
    let pts = |c: f64, n: usize, off: usize| -> Vec<f64> {
        (0..n)
            .flat_map(|i| {
                let a = ((i + off) as f64 * 1.7).sin();
                let b = ((i + off) as f64 * 2.3).cos();
                [c + a, -c + b, 0.5 * a - b]
            })
            .collect()
    };
    let mut tr = pts(2.0, 10, 0);
    tr.extend(pts(-2.0, 10, 3));
    let mut te = pts(2.0, 5, 40);
    te.extend(pts(-2.0, 5, 50));
    let labels: Vec<usize> = (0..20).map(|i| i / 10).collect();
    (
        FeatureMatrix::new(20, 3, tr).unwrap().with_labels(labels).unwrap(),
        FeatureMatrix::new(10, 3, te).unwrap(),
    )
}

#[test]
fn lda_relabeling_permutes_predictions() {
    let (train, test) = two_blobs();
    let base = lda_predict(&lda_fit(&train, None).unwrap(), &test).unwrap();
    let swapped: Vec<usize> = train.labels().unwrap().iter().map(|&l| 1 - l).collect();
    let train2 = FeatureMatrix::new(train.rows(), train.cols(), train.values().to_vec())
        .unwrap()
        .with_labels(swapped)
        .unwrap();
    let pred = lda_predict(&lda_fit(&train2, None).unwrap(), &test).unwrap();
    assert_eq!(pred, base.iter().map(|&l| 1 - l).collect::<Vec<_>>());
    assert_eq!(base, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
}

#[test]
fn knn_ties_go_to_the_first_training_row() {
    let train = FeatureMatrix::new(3, 1, vec![1.0, -1.0, 1.0]).unwrap().with_labels(vec![2, 0, 1]).unwrap();
    let test = FeatureMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
    assert_eq!(knn1_classify(&train, &test).unwrap(), vec![2, 2]);
}
