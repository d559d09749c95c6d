//! Statistical meta-feature functions over a numeric vector.
//!
//! Every function is total: statistics that are undefined for the input
//! (zero variance, too few values, non-positive values for geometric and
//! harmonic means) evaluate to 0.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

macro_rules! meta_functions {
    ($($variant:ident => $name:literal,)*) => {
        /// Statistic applied to one (representation, partition) slice.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum MetaFunction {
            $(
                #[serde(rename = $name)]
                $variant,
            )*
        }

        impl MetaFunction {
            pub const ALL: &'static [MetaFunction] = &[$(MetaFunction::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(MetaFunction::$variant => $name,)*
                }
            }
        }
    };
}

meta_functions! {
    Count => "count",
    Q1 => "q1",
    Q3 => "q3",
    Iqr => "iqr",
    OutlierLb15 => "outlier_lb_iqr1.5",
    OutlierUb15 => "outlier_ub_iqr1.5",
    OutlierTotal15 => "outlier_total_iqr1.5",
    OutlierLb3 => "outlier_lb_iqr3",
    OutlierUb3 => "outlier_ub_iqr3",
    OutlierTotal3 => "outlier_total_iqr3",
    StdOutlierLb2 => "outlier_lb_std2",
    StdOutlierUb2 => "outlier_ub_std2",
    StdOutlierTotal2 => "outlier_total_std2",
    StdOutlierLb3 => "outlier_lb_std3",
    StdOutlierUb3 => "outlier_ub_std3",
    StdOutlierTotal3 => "outlier_total_std3",
    SpearmanSorted => "spearman_vs_sorted",
    KendallSorted => "kendall_vs_sorted",
    PearsonSorted => "pearson_vs_sorted",
    Min => "min",
    Max => "max",
    Range => "range",
    Median => "median",
    GeometricMean => "geometric_mean",
    HarmonicMean => "harmonic_mean",
    Mean => "mean",
    Std => "std",
    Variance => "variance",
    Skewness => "skewness",
    Kurtosis => "kurtosis",
    HyperSkewness => "hyperskewness",
    Moment6 => "moment6",
    Moment7 => "moment7",
    Moment8 => "moment8",
    Moment9 => "moment9",
    Moment10 => "moment10",
    KStat3 => "kstat3",
    KStat4 => "kstat4",
    QuartileDispersion => "quartile_dispersion",
    MedianAbsDeviation => "median_abs_deviation",
    AvgAbsDeviation => "avg_abs_deviation",
    CoeffOfVariation => "coeff_of_variation",
    EfficiencyRatio => "efficiency_ratio",
    VarianceToMean => "variance_to_mean",
    SignalToNoise => "signal_to_noise",
    Entropy => "entropy",
    NormEntropy => "norm_entropy",
    Gini => "gini",
    QuartileMaxGap => "quartile_max_gap",
    CentroidMaxGap => "centroid_max_gap",
}

pub const N_FUNCTIONS: usize = MetaFunction::ALL.len();

/// Number of equal-width bins whose means serve as centroids.
pub const CENTROID_BINS: usize = 5;

fn total_cmp(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Linearly interpolated quantile of an ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| total_cmp(&v[a], &v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 || b.len() != n {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    finite_or_zero((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 || b.len() != n {
        return 0.0;
    }
    let mut pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
    pairs.sort_by(|x, y| total_cmp(&x.0, &y.0).then_with(|| total_cmp(&x.1, &y.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let tied_pairs =
        |runs: &mut dyn Iterator<Item = u64>| -> u64 { runs.map(|t| t * (t - 1) / 2).sum() };

    let mut run_lengths_a = Vec::new();
    let mut run_lengths_ab = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pairs[j + 1].0 == pairs[i].0 {
            j += 1;
        }
        run_lengths_a.push((j - i + 1) as u64);
        let mut k = i;
        while k <= j {
            let mut l = k;
            while l < j && pairs[l + 1].1 == pairs[k].1 {
                l += 1;
            }
            run_lengths_ab.push((l - k + 1) as u64);
            k = l + 1;
        }
        i = j + 1;
    }
    let n1 = tied_pairs(&mut run_lengths_a.into_iter());
    let n3 = tied_pairs(&mut run_lengths_ab.into_iter());

    let mut bs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_sort_count(&mut bs);

    let mut run_lengths_b = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && bs[j + 1] == bs[i] {
            j += 1;
        }
        run_lengths_b.push((j - i + 1) as u64);
        i = j + 1;
    }
    let n2 = tied_pairs(&mut run_lengths_b.into_iter());

    let numerator = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - n1) as f64).sqrt() * ((n0 - n2) as f64).sqrt();
    if denom <= 0.0 {
        return 0.0;
    }
    finite_or_zero((numerator / denom).clamp(-1.0, 1.0))
}

fn merge_sort_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_sort_count(&mut v[..mid]) + merge_sort_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// Shannon entropy (base 2) of the vector's magnitudes taken as weights.
pub fn entropy(v: &[f64]) -> f64 {
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    if !(total > 0.0) || !total.is_finite() {
        return 0.0;
    }
    let h: f64 = v
        .iter()
        .map(|x| x.abs() / total)
        .filter(|w| *w > 0.0)
        .map(|w| -w * w.log2())
        .sum();
    finite_or_zero(h.max(0.0))
}

/// Gini coefficient of the vector's magnitudes.
pub fn gini(v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    a.sort_by(total_cmp);
    let total: f64 = a.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let weighted: f64 = a.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
    finite_or_zero(2.0 * weighted / (n as f64 * total) - (n as f64 + 1.0) / n as f64)
}

/// Equal-width partition of `v` over its [min, max] into `k` bins.
pub fn equal_width_bins(v: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut bins = vec![Vec::new(); k];
    if v.is_empty() || k == 0 {
        return bins;
    }
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| {
            (l.min(x), h.max(x))
        });
    for &x in v {
        bins[bin_index(x, lo, hi, k)].push(x);
    }
    bins
}

/// Bin index of `x` among `k` equal-width bins spanning [lo, hi]; the right
/// edge falls into the last bin and a zero-width range into the first.
pub fn bin_index(x: f64, lo: f64, hi: f64, k: usize) -> usize {
    let width = hi - lo;
    if !(width > 0.0) || !width.is_finite() {
        return 0;
    }
    let pos = ((x - lo) / width * k as f64).floor();
    let mut idx = if pos.is_nan() || pos < 0.0 {
        0
    } else {
        (pos as usize).min(k - 1)
    };
    // Settle rounding against the explicit edges lo + width * i / k.
    let edge = |i: usize| lo + width * i as f64 / k as f64;
    while idx + 1 < k && x >= edge(idx + 1) {
        idx += 1;
    }
    while idx > 0 && x < edge(idx) {
        idx -= 1;
    }
    idx
}

/// Evaluate every [`MetaFunction`] on `v`, in `MetaFunction::ALL` order.
pub fn summarize(v: &[f64]) -> [f64; N_FUNCTIONS] {
    let mut out = [0.0; N_FUNCTIONS];
    let n = v.len();
    out[MetaFunction::Count as usize] = n as f64;
    if n == 0 {
        return out;
    }
    let nf = n as f64;
    let mut sorted = v.to_vec();
    sorted.sort_by(total_cmp);

    let min = sorted[0];
    let max = sorted[n - 1];
    let median = quantile_sorted(&sorted, 0.5);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;

    let mean = v.iter().sum::<f64>() / nf;
    // Central moments m2..m10 (population).
    let mut m = [0.0f64; 11];
    let mut abs_dev = 0.0;
    for &x in v {
        let d = x - mean;
        abs_dev += d.abs();
        let mut p = d;
        for slot in m.iter_mut().skip(1) {
            *slot += p;
            p *= d;
        }
    }
    for slot in m.iter_mut() {
        *slot /= nf;
    }
    let variance = m[2];
    let std = variance.sqrt();

    let set = |out: &mut [f64; N_FUNCTIONS], f: MetaFunction, value: f64| {
        out[f as usize] = finite_or_zero(value);
    };

    set(&mut out, MetaFunction::Q1, q1);
    set(&mut out, MetaFunction::Q3, q3);
    set(&mut out, MetaFunction::Iqr, iqr);
    for (alpha, lb, ub, total) in [
        (
            1.5,
            MetaFunction::OutlierLb15,
            MetaFunction::OutlierUb15,
            MetaFunction::OutlierTotal15,
        ),
        (
            3.0,
            MetaFunction::OutlierLb3,
            MetaFunction::OutlierUb3,
            MetaFunction::OutlierTotal3,
        ),
    ] {
        let lo = v.iter().filter(|&&x| x < q1 - alpha * iqr).count() as f64;
        let hi = v.iter().filter(|&&x| x > q3 + alpha * iqr).count() as f64;
        set(&mut out, lb, lo);
        set(&mut out, ub, hi);
        set(&mut out, total, lo + hi);
    }
    for (alpha, lb, ub, total) in [
        (
            2.0,
            MetaFunction::StdOutlierLb2,
            MetaFunction::StdOutlierUb2,
            MetaFunction::StdOutlierTotal2,
        ),
        (
            3.0,
            MetaFunction::StdOutlierLb3,
            MetaFunction::StdOutlierUb3,
            MetaFunction::StdOutlierTotal3,
        ),
    ] {
        let lo = v.iter().filter(|&&x| x < mean - alpha * std).count() as f64;
        let hi = v.iter().filter(|&&x| x > mean + alpha * std).count() as f64;
        set(&mut out, lb, lo);
        set(&mut out, ub, hi);
        set(&mut out, total, lo + hi);
    }

    set(&mut out, MetaFunction::SpearmanSorted, spearman(v, &sorted));
    set(
        &mut out,
        MetaFunction::KendallSorted,
        kendall_tau_b(v, &sorted),
    );
    set(&mut out, MetaFunction::PearsonSorted, pearson(v, &sorted));

    set(&mut out, MetaFunction::Min, min);
    set(&mut out, MetaFunction::Max, max);
    set(&mut out, MetaFunction::Range, max - min);
    set(&mut out, MetaFunction::Median, median);
    if min > 0.0 {
        let log_mean = v.iter().map(|x| x.ln()).sum::<f64>() / nf;
        set(&mut out, MetaFunction::GeometricMean, log_mean.exp());
        set(
            &mut out,
            MetaFunction::HarmonicMean,
            nf / v.iter().map(|x| 1.0 / x).sum::<f64>(),
        );
    }
    set(&mut out, MetaFunction::Mean, mean);

    if n >= 2 {
        set(&mut out, MetaFunction::Std, std);
        set(&mut out, MetaFunction::Variance, variance);
        if variance > 0.0 {
            set(&mut out, MetaFunction::Skewness, m[3] / (variance * std));
            set(
                &mut out,
                MetaFunction::Kurtosis,
                m[4] / (variance * variance),
            );
            set(
                &mut out,
                MetaFunction::HyperSkewness,
                m[5] / (variance * variance * std),
            );
        }
        for (k, f) in [
            (6, MetaFunction::Moment6),
            (7, MetaFunction::Moment7),
            (8, MetaFunction::Moment8),
            (9, MetaFunction::Moment9),
            (10, MetaFunction::Moment10),
        ] {
            set(&mut out, f, m[k]);
        }
    }
    if n >= 3 {
        let k3 = nf * nf * m[3] / ((nf - 1.0) * (nf - 2.0));
        set(&mut out, MetaFunction::KStat3, k3);
    }
    if n >= 4 {
        let k4 = nf * nf * ((nf + 1.0) * m[4] - 3.0 * (nf - 1.0) * m[2] * m[2])
            / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
        set(&mut out, MetaFunction::KStat4, k4);
    }

    if q3 + q1 != 0.0 {
        set(
            &mut out,
            MetaFunction::QuartileDispersion,
            (q3 - q1) / (q3 + q1),
        );
    }
    let mut deviations: Vec<f64> = v.iter().map(|x| (x - median).abs()).collect();
    deviations.sort_by(total_cmp);
    set(
        &mut out,
        MetaFunction::MedianAbsDeviation,
        quantile_sorted(&deviations, 0.5),
    );
    set(&mut out, MetaFunction::AvgAbsDeviation, abs_dev / nf);
    if n >= 2 && mean != 0.0 {
        set(&mut out, MetaFunction::CoeffOfVariation, std / mean);
        set(
            &mut out,
            MetaFunction::EfficiencyRatio,
            variance / (mean * mean),
        );
        set(&mut out, MetaFunction::VarianceToMean, variance / mean);
    }
    if n >= 2 && variance > 0.0 {
        set(
            &mut out,
            MetaFunction::SignalToNoise,
            mean * mean / variance,
        );
    }
    let h = entropy(v);
    set(&mut out, MetaFunction::Entropy, h);
    if n >= 2 {
        set(&mut out, MetaFunction::NormEntropy, h / nf.log2());
    }
    set(&mut out, MetaFunction::Gini, gini(v));

    let quartiles = [min, q1, median, q3, max];
    let gap = quartiles
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    set(&mut out, MetaFunction::QuartileMaxGap, gap);

    let centroids: Vec<f64> = equal_width_bins(v, CENTROID_BINS)
        .iter()
        .filter(|b| !b.is_empty())
        .map(|b| b.iter().sum::<f64>() / b.len() as f64)
        .collect();
    if centroids.len() >= 2 {
        let lo = centroids.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = centroids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        set(&mut out, MetaFunction::CentroidMaxGap, hi - lo);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(v: &[f64], f: MetaFunction) -> f64 {
        summarize(v)[f as usize]
    }

    #[test]
    fn range_of_small_vector() {
        assert_eq!(get(&[1.0, 2.0, 3.0, 4.0], MetaFunction::Range), 3.0);
    }

    #[test]
    fn uniform_distribution_has_unit_norm_entropy() {
        assert!((get(&[0.25; 4], MetaFunction::NormEntropy) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iqr_outliers_worked_example() {
        // Linear-interpolation quartiles of [1,2,3,4,100]: Q1 = 2, Q3 = 4,
        // IQR = 2, fences at -1 and 7; only 100 lies outside.
        let x = [1.0, 2.0, 3.0, 4.0, 100.0];
        assert_eq!(get(&x, MetaFunction::Q1), 2.0);
        assert_eq!(get(&x, MetaFunction::Q3), 4.0);
        assert_eq!(get(&x, MetaFunction::OutlierTotal15), 1.0);
        assert_eq!(get(&x, MetaFunction::OutlierUb15), 1.0);
        assert_eq!(get(&x, MetaFunction::OutlierLb15), 0.0);
    }

    #[test]
    fn sorted_input_is_perfectly_sequential() {
        let x = [1.0, 2.0, 2.0, 5.0, 9.0];
        assert!((get(&x, MetaFunction::SpearmanSorted) - 1.0).abs() < 1e-12);
        assert!((get(&x, MetaFunction::KendallSorted) - 1.0).abs() < 1e-12);
        assert!((get(&x, MetaFunction::PearsonSorted) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_data_has_zero_skew() {
        let x = [-3.0, -1.0, 0.0, 1.0, 3.0];
        assert!(get(&x, MetaFunction::Skewness).abs() < 1e-9);
        assert!(get(&x, MetaFunction::HyperSkewness).abs() < 1e-9);
    }

    #[test]
    fn undefined_statistics_are_zero() {
        let c = summarize(&[5.0; 6]);
        assert!(c.iter().all(|x| x.is_finite()));
        assert_eq!(c[MetaFunction::Skewness as usize], 0.0);
        assert_eq!(c[MetaFunction::SpearmanSorted as usize], 0.0);
        assert_eq!(get(&[-1.0, 2.0], MetaFunction::GeometricMean), 0.0);
        assert_eq!(get(&[7.0], MetaFunction::Variance), 0.0);
        let empty = summarize(&[]);
        assert!(empty.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn bins_clamp_right_edge() {
        assert_eq!(bin_index(1.0, 0.0, 1.0, 10), 9);
        assert_eq!(bin_index(0.23, 0.0, 1.0, 10), 2);
        assert_eq!(bin_index(3.0, 3.0, 3.0, 10), 0);
    }
}
