use ndarray::{Array2, ArrayRef2};

#[inline]
pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_euclidean(a, b).sqrt()
}

/// Row `i` of a standard-layout matrix as a slice.
#[inline]
pub(crate) fn row(x: &ArrayRef2<f64>, i: usize) -> &[f64] {
    let d = x.ncols();
    let data = x.as_slice().expect("matrices are kept in standard layout");
    &data[i * d..(i + 1) * d]
}

/// Copies the given rows into a new standard-layout matrix.
pub(crate) fn take_rows(x: &ArrayRef2<f64>, idx: &[usize]) -> Array2<f64> {
    let d = x.ncols();
    let mut data = Vec::with_capacity(idx.len() * d);
    for &i in idx {
        data.extend_from_slice(row(x, i));
    }
    Array2::from_shape_vec((idx.len(), d), data).expect("shape matches")
}

/// Column-wise mean of all rows.
pub(crate) fn column_means(x: &ArrayRef2<f64>) -> Vec<f64> {
    let (n, d) = x.dim();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(row(x, i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    mean
}

/// Index of the first maximum; `NaN` scores never win.
pub(crate) fn argmax_first<I: IntoIterator<Item = (usize, f64)>>(scores: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ if s.is_nan() => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// SplitMix64 finalizer over `base` and `stream`; used to derive independent
/// seeds (per run, per step) from one configured seed.
pub(crate) fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
