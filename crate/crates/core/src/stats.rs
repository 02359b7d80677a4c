//! Small numerical helpers: tree summation, moments, least squares.

/// Pairwise (tree) summation.
///
/// The reduction tree depends only on the slice length, so a batch reduced
/// from a parallel map gives the same bits as the serial loop.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample standard deviation (0 for fewer than two values, and
/// exactly 0 when all values are equal).
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&sq) / (values.len() - 1) as f64).sqrt()
}

/// Standard error of the mean of `values`.
pub fn stderr_of_mean(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    sample_sd(values) / (values.len() as f64).sqrt()
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub ssr: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let syy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let sxx = pairwise_sum(&sxx);
    let sxy = pairwise_sum(&sxy);
    let syy = pairwise_sum(&syy);
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .collect();
    let ssr = pairwise_sum(&resid);
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
        ssr,
    })
}

/// Streaming first and second co-moments of a pair of observables.
///
/// Updates use the symmetric form `C += dx*dy*(k-1)/k`, so swapping the two
/// inputs gives bit-identical covariances. A constant input keeps its mean
/// exactly and contributes a co-moment of exactly zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoMoments {
    pub count: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub c_xy: f64,
}

impl CoMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1.0;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / self.count;
        self.mean_y += dy / self.count;
        self.c_xy += dx * dy * ((self.count - 1.0) / self.count);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&self, other: &CoMoments) -> CoMoments {
        if self.count == 0.0 {
            return *other;
        }
        if other.count == 0.0 {
            return *self;
        }
        let n = self.count + other.count;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        CoMoments {
            count: n,
            mean_x: self.mean_x + dx * (other.count / n),
            mean_y: self.mean_y + dy * (other.count / n),
            c_xy: self.c_xy + other.c_xy + dx * dy * (self.count * other.count / n),
        }
    }

    /// Population covariance `E[xy] - E[x]E[y]`.
    pub fn covariance(&self) -> f64 {
        if self.count == 0.0 {
            0.0
        } else {
            self.c_xy / self.count
        }
    }
}

/// Merge a list of accumulators along a fixed binary tree.
pub fn merge_tree(parts: &[CoMoments]) -> CoMoments {
    match parts.len() {
        0 => CoMoments::default(),
        1 => parts[0],
        n => {
            let mid = n / 2;
            merge_tree(&parts[..mid]).merge(&merge_tree(&parts[mid..]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_small_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn line_fit_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|a| 3.0 - 2.0 * a).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn comoments_merge_agrees_with_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let ys: Vec<f64> = (0..100).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut all = CoMoments::default();
        let mut a = CoMoments::default();
        let mut b = CoMoments::default();
        for i in 0..100 {
            all.push(xs[i], ys[i]);
            if i < 37 {
                a.push(xs[i], ys[i]);
            } else {
                b.push(xs[i], ys[i]);
            }
        }
        let m = a.merge(&b);
        assert!((m.covariance() - all.covariance()).abs() < 1e-14);
        let direct = mean(&xs.iter().zip(&ys).map(|(x, y)| x * y).collect::<Vec<_>>())
            - mean(&xs) * mean(&ys);
        assert!((all.covariance() - direct).abs() < 1e-14);
    }

    #[test]
    fn constant_input_gives_zero_covariance() {
        let mut c = CoMoments::default();
        for i in 0..1000 {
            c.push(0.7, (i as f64).sqrt());
        }
        assert_eq!(c.covariance(), 0.0);
    }
}
