#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Cumulative distribution of a density tabulated on a uniform grid by the
/// trapezoid rule, normalized to end at 1.
pub struct Tabulated {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
    pub mass: f64,
}

impl Tabulated {
    pub fn new<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> Self {
        let h = (hi - lo) / (points - 1) as f64;
        let x: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let mut cdf = vec![0.0; points];
        for i in 1..points {
            cdf[i] = cdf[i - 1] + 0.5 * h * (y[i] + y[i - 1]);
        }
        let mass = cdf[points - 1];
        for c in cdf.iter_mut() {
            *c /= mass;
        }
        Tabulated { x, cdf, mass }
    }

    /// Linear interpolation of the CDF.
    pub fn cdf_at(&self, v: f64) -> f64 {
        if v <= self.x[0] {
            return 0.0;
        }
        if v >= *self.x.last().unwrap() {
            return 1.0;
        }
        let i = self.x.partition_point(|&g| g <= v) - 1;
        let t = (v - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Inverse CDF by bisection on the table and linear interpolation.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.x.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.x[i - 1] + t * (self.x[i] - self.x[i - 1])
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.quantile(rng.gen::<f64>())).collect()
    }
}

/// Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(mut sample: Vec<f64>, cdf: F) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = cdf(v);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
