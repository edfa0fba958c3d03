//! Exact fixed-point accumulation of paired time-in-bin samples.
//!
//! Times are stored as integer multiples of [`TICK`], so sums are
//! associative and merging batches in any order gives identical bits.

use serde::{Deserialize, Serialize};

use super::integrator::Outcome;

/// Time quantum (s).
pub const TICK: f64 = 1e-18;

/// Longest per-trajectory time that keeps the squared sums inside `u128`.
pub const MAX_TIME_LIMIT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub escaped: u64,
    pub absorbed: u64,
    pub timed_out: u64,
    pub non_finite: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Escaped => self.escaped += 1,
            Outcome::Absorbed => self.absorbed += 1,
            Outcome::TimedOut => self.timed_out += 1,
            Outcome::NonFinite => self.non_finite += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.escaped + self.absorbed + self.timed_out + self.non_finite
    }

    fn merge(&mut self, other: &Self) {
        self.escaped += other.escaped;
        self.absorbed += other.absorbed;
        self.timed_out += other.timed_out;
        self.non_finite += other.non_finite;
    }
}

/// Per-bin sums over trajectories of the baseline time `y` and the
/// difference `d = x - y` between forced and baseline times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accumulator {
    pub n: u64,
    pub sum_y: Vec<u128>,
    pub sum_d: Vec<i128>,
    pub sum_yy: Vec<u128>,
    pub sum_dd: Vec<u128>,
    pub sum_dy: Vec<i128>,
    pub outcomes: OutcomeCounts,
    pub baseline_outcomes: OutcomeCounts,
}

#[inline]
fn ticks(seconds: f64) -> i128 {
    (seconds / TICK).round() as i128
}

impl Accumulator {
    pub fn new(n_bins: usize) -> Self {
        Self {
            n: 0,
            sum_y: vec![0; n_bins],
            sum_d: vec![0; n_bins],
            sum_yy: vec![0; n_bins],
            sum_dd: vec![0; n_bins],
            sum_dy: vec![0; n_bins],
            outcomes: OutcomeCounts::default(),
            baseline_outcomes: OutcomeCounts::default(),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.sum_y.len()
    }

    /// Adds one trajectory pair. Non-finite trajectories are counted but
    /// contribute no time on either side.
    pub fn add(&mut self, forced: &[f64], baseline: &[f64], outcome: Outcome, baseline_outcome: Outcome) {
        self.outcomes.record(outcome);
        self.baseline_outcomes.record(baseline_outcome);
        if outcome == Outcome::NonFinite {
            return;
        }
        self.n += 1;
        for k in 0..self.n_bins() {
            let y = ticks(baseline[k]);
            let d = ticks(forced[k]) - y;
            if y == 0 && d == 0 {
                continue;
            }
            self.sum_y[k] += y as u128;
            self.sum_d[k] += d;
            self.sum_yy[k] += (y * y) as u128;
            self.sum_dd[k] += (d * d) as u128;
            self.sum_dy[k] += d * y;
        }
    }

    pub fn merge(mut self, other: &Self) -> Self {
        assert_eq!(self.n_bins(), other.n_bins(), "accumulators cover different grids");
        self.n += other.n;
        for k in 0..self.n_bins() {
            self.sum_y[k] += other.sum_y[k];
            self.sum_d[k] += other.sum_d[k];
            self.sum_yy[k] += other.sum_yy[k];
            self.sum_dd[k] += other.sum_dd[k];
            self.sum_dy[k] += other.sum_dy[k];
        }
        self.outcomes.merge(&other.outcomes);
        self.baseline_outcomes.merge(&other.baseline_outcomes);
        self
    }

    /// Ratio estimate `sum x / sum y` per bin and its standard error.
    ///
    /// Bins never visited by the baseline are reported as `f = 1` with a
    /// standard error of 1 (undetermined).
    pub fn ratio(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n as f64;
        let mut f = Vec::with_capacity(self.n_bins());
        let mut err = Vec::with_capacity(self.n_bins());
        for k in 0..self.n_bins() {
            if self.sum_y[k] == 0 {
                f.push(1.0);
                err.push(1.0);
                continue;
            }
            let y = self.sum_y[k] as f64;
            let g = self.sum_d[k] as f64 / y;
            f.push((1.0 + g).max(0.0));
            if self.n < 2 {
                err.push(0.0);
                continue;
            }
            // sum (x - f y)^2 = sum (d - g y)^2
            let resid =
                (self.sum_dd[k] as f64 - 2.0 * g * self.sum_dy[k] as f64 + g * g * self.sum_yy[k] as f64).max(0.0);
            let mean_y = y / n;
            err.push((resid / (n * (n - 1.0))).sqrt() / mean_y);
        }
        (f, err)
    }
}
