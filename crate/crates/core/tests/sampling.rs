use p6_core::frame::{Column, DataFrame, Scalar};

fn ids(n: usize) -> DataFrame {
    DataFrame::new(vec![Column::int64("id", (0..n as i64).collect())]).unwrap()
}

fn picked(f: &DataFrame) -> Vec<i64> {
    let c = f.column("id").unwrap();
    (0..f.row_count())
        .map(|i| match c.get(i) {
            Scalar::Int(v) => v,
            other => panic!("{other:?}"),
        })
        .collect()
}

#[test]
fn same_seed_same_rows_and_order_is_kept() {
    let f = ids(500);
    let a = picked(&f.sample_rows(40, 7));
    assert_eq!(a, picked(&f.sample_rows(40, 7)));
    assert_ne!(a, picked(&f.sample_rows(40, 8)));
    assert!(a.windows(2).all(|w| w[0] < w[1]), "sampled rows keep source order");
    assert_eq!(picked(&f.sample_rows(900, 1)).len(), 500);
}

#[test]
fn inclusion_is_uniform() {
    // Every row should be included with probability k/n; a chi-square test over
    // 4000 seeds with 19 degrees of freedom stays far below the 0.999 quantile (43.8).
    let (n, k, trials) = (20usize, 5usize, 4000u64);
    let f = ids(n);
    let mut counts = vec![0f64; n];
    for seed in 0..trials {
        for id in picked(&f.sample_rows(k, seed)) {
            counts[id as usize] += 1.0;
        }
    }
    let expected = trials as f64 * k as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    assert!(chi2 < 43.8, "chi2 = {chi2}");
}
