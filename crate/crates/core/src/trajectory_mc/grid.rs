//! Radial histogram grid and exact time-in-annulus bookkeeping for straight
//! segments in the transverse plane.

use serde::{Deserialize, Serialize};

/// Uniform radial bins covering `[inner, outer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    pub inner: f64,
    pub outer: f64,
    pub n_bins: usize,
}

/// Straight transverse segment `p(t) = p0 + v t`, `0 <= t <= duration`.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub p0: [f64; 2],
    pub v: [f64; 2],
    pub duration: f64,
}

impl Segment {
    #[inline]
    fn coefficients(&self) -> (f64, f64, f64) {
        let c = self.p0[0] * self.p0[0] + self.p0[1] * self.p0[1];
        let b = self.p0[0] * self.v[0] + self.p0[1] * self.v[1];
        let a = self.v[0] * self.v[0] + self.v[1] * self.v[1];
        (a, b, c)
    }

    #[inline]
    pub fn radius_at(&self, t: f64) -> f64 {
        let x = self.p0[0] + self.v[0] * t;
        let y = self.p0[1] + self.v[1] * t;
        x.hypot(y)
    }

    /// Time of closest approach to the axis, clamped to the segment.
    #[inline]
    pub fn closest_time(&self) -> f64 {
        let (a, b, _) = self.coefficients();
        if a > 0.0 {
            (-b / a).clamp(0.0, self.duration)
        } else {
            0.0
        }
    }

    /// First time at which the radius drops to `radius`, if it does.
    pub fn first_inward_crossing(&self, radius: f64) -> Option<f64> {
        let (a, b, c) = self.coefficients();
        let gap = c - radius * radius;
        if gap <= 0.0 {
            return Some(0.0);
        }
        if a == 0.0 || b >= 0.0 || b * b < a * gap {
            return None;
        }
        let t = inward_root(a, b, gap);
        (t <= self.duration).then_some(t)
    }

    /// Time at which an outward-moving radius reaches `radius`, assuming the
    /// radius is increasing at `t >= -b/a`.
    pub(crate) fn outward_root(&self, radius: f64) -> f64 {
        let (a, b, c) = self.coefficients();
        outward_root(a, b, c - radius * radius)
    }
}

/// Smaller root of `a t^2 + 2 b t + gap = 0` for `b < 0`, `gap > 0`.
#[inline]
fn inward_root(a: f64, b: f64, gap: f64) -> f64 {
    let disc = (b * b - a * gap).max(0.0).sqrt();
    gap / (-b + disc)
}

/// Larger root of `a t^2 + 2 b t + gap = 0`.
#[inline]
fn outward_root(a: f64, b: f64, gap: f64) -> f64 {
    let disc = (b * b - a * gap).max(0.0).sqrt();
    if b < 0.0 {
        (-b + disc) / a
    } else if b + disc > 0.0 {
        -gap / (b + disc)
    } else {
        0.0
    }
}

impl BinGrid {
    pub fn new(inner: f64, outer: f64, n_bins: usize) -> Self {
        Self { inner, outer, n_bins }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        (self.outer - self.inner) / self.n_bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = self.width();
        (0..=self.n_bins).map(|k| if k == self.n_bins { self.outer } else { self.inner + w * k as f64 }).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.n_bins).map(|k| self.inner + w * (k as f64 + 0.5)).collect()
    }

    #[inline]
    fn edge(&self, k: usize) -> f64 {
        if k >= self.n_bins {
            self.outer
        } else {
            self.inner + self.width() * k as f64
        }
    }

    #[inline]
    fn bin_of(&self, r: f64) -> usize {
        (((r - self.inner) / self.width()) as usize).min(self.n_bins - 1)
    }

    /// Adds the time the segment spends in each annular bin to `bins`.
    pub fn accumulate(&self, seg: &Segment, bins: &mut [f64]) {
        if !(seg.duration > 0.0) {
            return;
        }
        let (a, b, c) = seg.coefficients();
        if a == 0.0 {
            let r = c.sqrt();
            if r >= self.inner && r <= self.outer {
                bins[self.bin_of(r)] += seg.duration;
            }
            return;
        }
        let t_min = seg.closest_time();
        if t_min > 0.0 {
            self.inward_piece(a, b, c, 0.0, t_min, seg.radius_at(t_min), bins);
        }
        if t_min < seg.duration {
            self.outward_piece(seg, t_min, seg.duration, bins);
        }
    }

    /// Piece on which the radius decreases from `sqrt(c)` to `r_end`.
    #[allow(clippy::too_many_arguments)]
    fn inward_piece(&self, a: f64, b: f64, c: f64, t0: f64, t1: f64, r_end: f64, bins: &mut [f64]) {
        let r_start = c.sqrt();
        if r_end > self.outer || r_start < self.inner {
            return;
        }
        let mut t = t0;
        if r_start > self.outer {
            t = inward_root(a, b, c - self.outer * self.outer).min(t1);
        }
        let mut k = self.bin_of(r_start.min(self.outer));
        loop {
            let lower = self.edge(k);
            if r_end >= lower {
                bins[k] += t1 - t;
                return;
            }
            let t_cross = inward_root(a, b, c - lower * lower).clamp(t, t1);
            bins[k] += t_cross - t;
            t = t_cross;
            if k == 0 {
                return;
            }
            k -= 1;
        }
    }

    /// Piece on which the radius increases from `r(t0)` to `r(t1)`.
    fn outward_piece(&self, seg: &Segment, t0: f64, t1: f64, bins: &mut [f64]) {
        let r_start = seg.radius_at(t0);
        let r_end = seg.radius_at(t1);
        if r_start > self.outer || r_end < self.inner {
            return;
        }
        let mut t = t0;
        if r_start < self.inner {
            t = seg.outward_root(self.inner).clamp(t0, t1);
        }
        let mut k = self.bin_of(r_start.max(self.inner));
        loop {
            let upper = self.edge(k + 1);
            if r_end <= upper {
                bins[k] += t1 - t;
                return;
            }
            let t_cross = seg.outward_root(upper).clamp(t, t1);
            bins[k] += t_cross - t;
            t = t_cross;
            k += 1;
            if k == self.n_bins {
                return;
            }
        }
    }
}
