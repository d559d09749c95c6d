//! Naive reference implementations of the meta-feature statistics.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use vizrec::metafeatures::{
    ColumnFunction, FeatureDescriptor, MetaFeatureSchema, MetaFunction, Partitioner, Representation,
};
use vizrec::tabular::{Attribute, AttributeType, Cell};

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

pub fn quantile(v: &[f64], p: f64) -> f64 {
    let s = sorted(v);
    if s.len() == 1 {
        return s[0];
    }
    let pos = p * (s.len() as f64 - 1.0);
    let below = pos.floor();
    let frac = pos - below;
    let i = below as usize;
    if i + 1 >= s.len() {
        s[i]
    } else {
        s[i] * (1.0 - frac) + s[i + 1] * frac
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn central(v: &[f64], k: i32) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(k)).sum::<f64>() / v.len() as f64
}

fn rank_of(v: &[f64], x: f64) -> f64 {
    let less = v.iter().filter(|&&y| y < x).count() as f64;
    let equal = v.iter().filter(|&&y| y == x).count() as f64;
    less + (equal + 1.0) / 2.0
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if a.len() < 2 || va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn kendall(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let (mut conc, mut disc, mut ties_a, mut ties_b) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                continue;
            } else if da == 0.0 {
                ties_a += 1.0;
            } else if db == 0.0 {
                ties_b += 1.0;
            } else if da * db > 0.0 {
                conc += 1.0;
            } else {
                disc += 1.0;
            }
        }
    }
    let denom = ((conc + disc + ties_a) * (conc + disc + ties_b)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (conc - disc) / denom
    }
}

fn entropy(v: &[f64]) -> f64 {
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    v.iter()
        .filter(|x| **x != 0.0)
        .map(|x| {
            let p = x.abs() / total;
            -p * p.log2()
        })
        .sum()
}

fn gini(v: &[f64]) -> f64 {
    // Mean absolute difference over twice the mean.
    let a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let n = a.len() as f64;
    let total: f64 = a.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let diff: f64 = a
        .iter()
        .flat_map(|x| a.iter().map(move |y| (x - y).abs()))
        .sum();
    diff / (2.0 * n * total)
}

pub fn bin(x: f64, lo: f64, hi: f64, k: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let mut i = 0;
    while i + 1 < k && x >= lo + (hi - lo) * (i + 1) as f64 / k as f64 {
        i += 1;
    }
    i
}

fn min(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

pub fn statistic(f: MetaFunction, v: &[f64]) -> f64 {
    statistic_with_slack(f, v, 0.0)
}

/// Outlier counts are discontinuous in their thresholds; `slack` widens
/// (positive) or narrows (negative) the outlier region by that fraction
/// of the threshold scale.
pub fn statistic_with_slack(f: MetaFunction, v: &[f64], slack: f64) -> f64 {
    use MetaFunction::*;
    let n = v.len() as f64;
    if v.is_empty() {
        return 0.0;
    }
    let (q1, q3, med) = (quantile(v, 0.25), quantile(v, 0.75), quantile(v, 0.5));
    let iqr = q3 - q1;
    let m = mean(v);
    let var = central(v, 2);
    let sd = var.sqrt();
    let count = |pred: &dyn Fn(f64) -> bool| v.iter().filter(|&&x| pred(x)).count() as f64;
    let scale = slack * (max(v).abs() + min(v).abs() + 1.0);
    let below = |t: f64| move |x: f64| x < t + scale;
    let above = |t: f64| move |x: f64| x > t - scale;
    let multi = v.len() >= 2;
    let r = match f {
        Count => n,
        Q1 => q1,
        Q3 => q3,
        Iqr => iqr,
        OutlierLb15 => count(&below(q1 - 1.5 * iqr)),
        OutlierUb15 => count(&above(q3 + 1.5 * iqr)),
        OutlierTotal15 => count(&below(q1 - 1.5 * iqr)) + count(&above(q3 + 1.5 * iqr)),
        OutlierLb3 => count(&below(q1 - 3.0 * iqr)),
        OutlierUb3 => count(&above(q3 + 3.0 * iqr)),
        OutlierTotal3 => count(&below(q1 - 3.0 * iqr)) + count(&above(q3 + 3.0 * iqr)),
        StdOutlierLb2 => count(&below(m - 2.0 * sd)),
        StdOutlierUb2 => count(&above(m + 2.0 * sd)),
        StdOutlierTotal2 => count(&below(m - 2.0 * sd)) + count(&above(m + 2.0 * sd)),
        StdOutlierLb3 => count(&below(m - 3.0 * sd)),
        StdOutlierUb3 => count(&above(m + 3.0 * sd)),
        StdOutlierTotal3 => count(&below(m - 3.0 * sd)) + count(&above(m + 3.0 * sd)),
        SpearmanSorted => {
            let s = sorted(v);
            let ra: Vec<f64> = v.iter().map(|&x| rank_of(v, x)).collect();
            let rb: Vec<f64> = s.iter().map(|&x| rank_of(&s, x)).collect();
            pearson(&ra, &rb)
        }
        KendallSorted if multi => kendall(v, &sorted(v)),
        PearsonSorted => pearson(v, &sorted(v)),
        Min => min(v),
        Max => max(v),
        Range => max(v) - min(v),
        Median => med,
        GeometricMean if min(v) > 0.0 => v.iter().map(|x| x.powf(1.0 / n)).product(),
        HarmonicMean if min(v) > 0.0 => n / v.iter().map(|x| x.recip()).sum::<f64>(),
        Mean => m,
        Std if multi => sd,
        Variance if multi => var,
        Skewness if multi && var > 0.0 => central(v, 3) / var.powf(1.5),
        Kurtosis if multi && var > 0.0 => central(v, 4) / var.powi(2),
        HyperSkewness if multi && var > 0.0 => central(v, 5) / var.powf(2.5),
        Moment6 if multi => central(v, 6),
        Moment7 if multi => central(v, 7),
        Moment8 if multi => central(v, 8),
        Moment9 if multi => central(v, 9),
        Moment10 if multi => central(v, 10),
        KStat3 if v.len() >= 3 => n * n * central(v, 3) / ((n - 1.0) * (n - 2.0)),
        KStat4 if v.len() >= 4 => {
            let (m2, m4) = (central(v, 2), central(v, 4));
            n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2)
                / ((n - 1.0) * (n - 2.0) * (n - 3.0))
        }
        QuartileDispersion if q1 + q3 != 0.0 => (q3 - q1) / (q3 + q1),
        MedianAbsDeviation => {
            let dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
            quantile(&dev, 0.5)
        }
        AvgAbsDeviation => v.iter().map(|x| (x - m).abs()).sum::<f64>() / n,
        CoeffOfVariation if multi && m != 0.0 => sd / m,
        EfficiencyRatio if multi && m != 0.0 => var / (m * m),
        VarianceToMean if multi && m != 0.0 => var / m,
        SignalToNoise if multi && var > 0.0 => m * m / var,
        Entropy => entropy(v),
        NormEntropy if multi => entropy(v) / n.log2(),
        Gini => gini(v),
        QuartileMaxGap => [q1 - min(v), med - q1, q3 - med, max(v) - q3]
            .into_iter()
            .fold(0.0, f64::max),
        CentroidMaxGap => {
            let (lo, hi) = (min(v), max(v));
            let mut sums = [(0.0, 0usize); 5];
            for &x in v {
                let b = bin(x, lo, hi, 5);
                sums[b].0 += x;
                sums[b].1 += 1;
            }
            let c: Vec<f64> = sums
                .iter()
                .filter(|s| s.1 > 0)
                .map(|s| s.0 / s.1 as f64)
                .collect();
            let mut gap = 0.0;
            for a in &c {
                for b in &c {
                    gap = f64::max(gap, (a - b).abs());
                }
            }
            gap
        }
        _ => 0.0,
    };
    if r.is_finite() {
        r
    } else {
        0.0
    }
}

pub fn representation(r: Representation, x: &[f64]) -> Vec<f64> {
    let hist = |v: &[f64]| {
        let mut h = vec![0.0; 10];
        let (lo, hi) = (min(v), max(v));
        for &y in v {
            h[bin(y, lo, hi, 10)] += 1.0;
        }
        h
    };
    match r {
        Representation::Raw => x.to_vec(),
        Representation::ProbabilityDist => {
            let h = hist(x);
            h.iter().map(|c| c / x.len() as f64).collect()
        }
        Representation::ScaledUnit => {
            let (lo, hi) = (min(x), max(x));
            x.iter()
                .map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect()
        }
        Representation::LogBinned => {
            hist(&x.iter().map(|v| (1.0 + v.abs()).ln()).collect::<Vec<_>>())
        }
    }
}

pub fn part(p: Partitioner, x: &[f64], idx: usize) -> Vec<f64> {
    match p {
        Partitioner::Whole => x.to_vec(),
        Partitioner::Quartiles => {
            let cuts = [quantile(x, 0.25), quantile(x, 0.5), quantile(x, 0.75)];
            x.iter()
                .copied()
                .filter(|&v| cuts.iter().filter(|&&c| v > c).count() == idx)
                .collect()
        }
        Partitioner::EqualWidthBins(k) => {
            let (lo, hi) = (min(x), max(x));
            x.iter()
                .copied()
                .filter(|&v| bin(v, lo, hi, k) == idx)
                .collect()
        }
    }
}

pub fn column(f: ColumnFunction, cells: &[Option<f64>]) -> f64 {
    let n = cells.len() as f64;
    let present: Vec<f64> = cells.iter().flatten().copied().collect();
    let missing = n - present.len() as f64;
    let nnz = present.iter().filter(|v| **v != 0.0).count() as f64;
    match f {
        ColumnFunction::NumInstances => n,
        ColumnFunction::LogNumInstances => n.ln(),
        ColumnFunction::NumMissing => missing,
        ColumnFunction::FracMissing => missing / n,
        ColumnFunction::NumNonzero => nnz,
        ColumnFunction::NumUnique => {
            let mut u: Vec<f64> = Vec::new();
            for v in &present {
                if !u.contains(v) {
                    u.push(*v);
                }
            }
            u.len() as f64
        }
        ColumnFunction::Density => nnz / n,
    }
}

/// Whole meta-feature vector of a quantitative column.
pub fn vector(cells: &[Option<f64>], schema: &MetaFeatureSchema, slack: f64) -> Vec<f64> {
    let present: Vec<f64> = cells.iter().flatten().copied().collect();
    schema
        .features
        .iter()
        .map(|f| match *f {
            FeatureDescriptor::Column { function } => column(function, cells),
            FeatureDescriptor::Statistic {
                representation,
                partition,
                part: idx,
                function,
            } => {
                let rep = super::oracle::representation(representation, &present);
                statistic_with_slack(function, &part(partition, &rep, idx), slack)
            }
        })
        .collect()
}

pub fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) || (a - b).abs() < 1e-12
}

/// `got` agrees with the oracle value or lies between its narrowed and
/// widened threshold variants.
pub fn agrees(got: f64, exact: f64, narrow: f64, wide: f64) -> bool {
    close(got, exact) || (narrow.min(wide) <= got && got <= narrow.max(wide))
}

pub const SLACK: f64 = 1e-9;

pub fn random_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.gen_range(2..120);
    match rng.gen_range(0..4) {
        0 => {
            let d = Normal::new(rng.gen_range(-50.0..50.0), rng.gen_range(0.5..20.0)).unwrap();
            (0..n).map(|_| d.sample(rng)).collect()
        }
        1 => {
            let d = LogNormal::new(0.0, 1.0).unwrap();
            (0..n).map(|_| d.sample(rng)).collect()
        }
        // Small integers produce ties.
        2 => (0..n).map(|_| rng.gen_range(-3..6) as f64).collect(),
        _ => (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
    }
}

pub fn quantitative(cells: &[Option<f64>]) -> Attribute {
    Attribute {
        name: "x".into(),
        kind: AttributeType::Quantitative,
        values: cells
            .iter()
            .map(|c| c.map(Cell::Number).unwrap_or(Cell::Missing))
            .collect(),
    }
}
