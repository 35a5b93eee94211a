//! Sample grids of `(t, s, x, v)` points and the cached log-gain table
//! evaluated on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gallery::{GallerySystem, DEFAULT_N_MAX};
use crate::semiflow::{BasePoint, SkewEvolutionSystem, StateVector};

/// Rule selecting which `s <= t` accompany each `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PairRule {
    /// Every `s` in the grid with `s <= t`.
    Full,
    /// Every grid `s` with `t - W <= s <= t`.
    Band(f64),
    /// Exactly these `(t, s)` pairs.
    Explicit(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridParams {
    pub horizon: f64,
    pub t_points: usize,
    pub t_min: f64,
    pub n_max: u32,
    pub band: Option<f64>,
    pub x_count: usize,
    pub x_max: f64,
    pub v_random: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            horizon: 200.0,
            t_points: 120,
            t_min: 0.01,
            n_max: DEFAULT_N_MAX,
            band: None,
            x_count: 2,
            x_max: 10.0,
            v_random: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    t_values: Vec<f64>,
    rule: PairRule,
    x_samples: Vec<BasePoint>,
    v_samples: Vec<StateVector>,
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

impl SampleGrid {
    pub fn new(
        mut t_values: Vec<f64>,
        rule: PairRule,
        x_samples: Vec<BasePoint>,
        v_samples: Vec<StateVector>,
    ) -> Result<Self> {
        if t_values.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidParameter("grid times must be finite and nonnegative".into()));
        }
        if x_samples.is_empty() || v_samples.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one x and one v sample".into()));
        }
        if v_samples.iter().any(|v| v.norm() == 0.0) {
            return Err(Error::ZeroVector);
        }
        if let PairRule::Explicit(pairs) = &rule {
            if let Some((t, s)) = pairs.iter().find(|(t, s)| !(t >= s && *s >= 0.0)) {
                return Err(Error::TimeOrder { t: *t, s: *s });
            }
        }
        sort_dedup(&mut t_values);
        Ok(Self { t_values, rule, x_samples, v_samples })
    }

    /// Scalar grid on the given times, full pair product, `x = 0`.
    pub fn scalar(t_values: Vec<f64>) -> Result<Self> {
        Self::new(t_values, PairRule::Full, vec![0.0], vec![StateVector::scalar(1.0)])
    }

    /// Uniform scalar grid `0, h, 2h, ..., horizon` with `points + 1` values.
    pub fn uniform(horizon: f64, points: usize) -> Result<Self> {
        let h = horizon / points as f64;
        Self::scalar((0..=points).map(|i| i as f64 * h).collect())
    }

    /// `0` followed by `count` log-spaced times in `[t_min, horizon]`.
    pub fn log_times(horizon: f64, count: usize, t_min: f64) -> Vec<f64> {
        let mut ts = vec![0.0];
        if count == 1 {
            ts.push(horizon);
        } else if count > 1 {
            let (a, b) = (t_min.ln(), horizon.ln());
            ts.extend((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()));
            *ts.last_mut().expect("nonempty") = horizon;
        }
        ts
    }

    /// Default grid: log-spaced times, seeded base points and unit vectors.
    pub fn from_params(sys: &SkewEvolutionSystem, params: &GridParams, seed: u64) -> Result<Self> {
        if !(params.horizon > 0.0) || !(params.t_min > 0.0) || params.t_min >= params.horizon {
            return Err(Error::InvalidParameter("grid needs 0 < t_min < horizon".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = vec![0.0];
        xs.extend((0..params.x_count).map(|_| rng.gen_range(0.0..params.x_max)));
        let rule = match params.band {
            Some(w) => PairRule::Band(w),
            None => PairRule::Full,
        };
        Self::new(
            Self::log_times(params.horizon, params.t_points, params.t_min),
            rule,
            xs,
            unit_directions(sys.dim(), params.v_random, &mut rng),
        )
    }

    /// Default grid for a gallery system, with its witness family injected.
    pub fn for_gallery(g: &GallerySystem, params: &GridParams, seed: u64) -> Result<Self> {
        let mut grid = Self::from_params(&g.system, params, seed)?;
        if let Some(f) = &g.witness_family {
            grid.inject(&f.materialize(params.n_max, params.horizon));
        }
        Ok(grid)
    }

    /// Adds both coordinates of each point to the time set (and the pairs
    /// themselves for explicit grids).
    pub fn inject(&mut self, points: &[(f64, f64)]) {
        for &(t, s) in points {
            self.t_values.push(t);
            self.t_values.push(s);
        }
        if let PairRule::Explicit(pairs) = &mut self.rule {
            pairs.extend_from_slice(points);
        }
        sort_dedup(&mut self.t_values);
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    pub fn x_samples(&self) -> &[BasePoint] {
        &self.x_samples
    }

    pub fn v_samples(&self) -> &[StateVector] {
        &self.v_samples
    }

    pub fn rule(&self) -> &PairRule {
        &self.rule
    }

    pub fn horizon(&self) -> f64 {
        self.pairs().iter().map(|p| p.0).fold(0.0, f64::max)
    }

    /// Distinct `s` values appearing in the pairs.
    pub fn s_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.pairs().iter().map(|p| p.1).collect();
        sort_dedup(&mut s);
        s
    }

    /// All `(t, s)` pairs, ordered by `(s, t)`.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut out = match &self.rule {
            PairRule::Full => self
                .t_values
                .iter()
                .flat_map(|&s| self.t_values.iter().filter(move |&&t| t >= s).map(move |&t| (t, s)))
                .collect(),
            PairRule::Band(w) => self
                .t_values
                .iter()
                .flat_map(|&s| self.t_values.iter().filter(move |&&t| t >= s && t - s <= *w).map(move |&t| (t, s)))
                .collect(),
            PairRule::Explicit(p) => p.clone(),
        };
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        out.dedup();
        out
    }
}

/// Axis vectors followed by `random` seeded unit directions (scalar: `[1]`).
pub fn unit_directions(dim: usize, random: usize, rng: &mut ChaCha8Rng) -> Vec<StateVector> {
    if dim == 1 {
        return vec![StateVector::scalar(1.0)];
    }
    let mut out: Vec<StateVector> = (0..dim).map(|i| StateVector::axis(dim, i)).collect();
    while out.len() < dim + random {
        let v = StateVector::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        if v.norm() > 1e-3 {
            out.push(v.normalized().expect("nonzero"));
        }
    }
    out
}

/// One grid point with the worst-case log gain over the `x` and `v` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPoint {
    pub t: f64,
    pub s: f64,
    pub gain: f64,
    pub x: BasePoint,
    pub v_index: usize,
}

/// Log gains of a system on a grid, ordered by `(s, t)` and grouped into
/// columns of equal `s`.
#[derive(Debug, Clone)]
pub struct GainTable {
    points: Vec<GainPoint>,
    columns: Vec<(f64, std::ops::Range<usize>)>,
    v_samples: Vec<StateVector>,
    horizon: f64,
}

impl GainTable {
    pub fn build(sys: &SkewEvolutionSystem, grid: &SampleGrid) -> Result<Self> {
        let pairs = grid.pairs();
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("grid has no (t, s) pairs".into()));
        }
        let points = pairs
            .par_iter()
            .map(|&(t, s)| {
                let mut best: Option<GainPoint> = None;
                for &x in grid.x_samples() {
                    for (k, v) in grid.v_samples().iter().enumerate() {
                        let g = sys.log_gain(t, s, x, v)?;
                        if best.as_ref().is_none_or(|b| g > b.gain) {
                            best = Some(GainPoint { t, s, gain: g, x, v_index: k });
                        }
                    }
                }
                Ok(best.expect("nonempty samples"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_points(points, grid.v_samples().to_vec()))
    }

    fn from_points(points: Vec<GainPoint>, v_samples: Vec<StateVector>) -> Self {
        let mut columns = Vec::new();
        let mut start = 0;
        for i in 1..=points.len() {
            if i == points.len() || points[i].s != points[start].s {
                columns.push((points[start].s, start..i));
                start = i;
            }
        }
        let horizon = points.iter().map(|p| p.t).fold(0.0, f64::max);
        Self { points, columns, v_samples, horizon }
    }

    pub fn points(&self) -> &[GainPoint] {
        &self.points
    }

    pub fn columns(&self) -> impl Iterator<Item = (f64, &[GainPoint])> {
        self.columns.iter().map(|(s, r)| (*s, &self.points[r.clone()]))
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.0).collect()
    }

    pub fn v_sample(&self, i: usize) -> &StateVector {
        &self.v_samples[i]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Median of the distinct `t` values; points at or below it form the head.
    pub fn split_time(&self) -> f64 {
        let mut ts: Vec<f64> = self.points.iter().map(|p| p.t).collect();
        sort_dedup(&mut ts);
        ts[ts.len() / 2]
    }

    /// Subtable restricted to the head of the horizon (`t <= split_time`).
    pub fn head(&self) -> GainTable {
        let cut = self.split_time();
        let pts = self.points.iter().filter(|p| p.t <= cut).cloned().collect();
        Self::from_points(pts, self.v_samples.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn full_pairs_respect_order() {
        let g = SampleGrid::scalar(vec![2.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.t_values(), &[0.0, 1.0, 2.0]);
        let p = g.pairs();
        assert_eq!(p.len(), 6);
        assert!(p.iter().all(|(t, s)| t >= s));
        assert_eq!(p[0], (0.0, 0.0));
    }

    #[test]
    fn band_and_explicit_rules() {
        let g =
            SampleGrid::new(vec![0.0, 1.0, 2.0, 3.0], PairRule::Band(1.0), vec![0.0], vec![StateVector::scalar(1.0)])
                .unwrap();
        assert!(g.pairs().iter().all(|(t, s)| t - s <= 1.0));
        assert_eq!(g.pairs().len(), 7);
        let bad =
            SampleGrid::new(vec![], PairRule::Explicit(vec![(1.0, 2.0)]), vec![0.0], vec![StateVector::scalar(1.0)]);
        assert!(bad.is_err());
    }

    #[test]
    fn grids_are_seed_deterministic() {
        let sys = gallery::exp_sin_system();
        let p = GridParams::default();
        let a = SampleGrid::for_gallery(&sys, &p, 9).unwrap();
        let b = SampleGrid::for_gallery(&sys, &p, 9).unwrap();
        let c = SampleGrid::for_gallery(&sys, &p, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.t_values().contains(&(2.0 * std::f64::consts::PI + std::f64::consts::FRAC_PI_2)));
        assert!((a.horizon() - 200.0).abs() < 1e-12);
    }

    #[test]
    fn unit_directions_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = unit_directions(3, 16, &mut rng);
        assert_eq!(v.len(), 19);
        assert!(v.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn table_columns_group_by_s() {
        let sys = gallery::pure_decay_system(1.0).unwrap();
        let t = GainTable::build(&sys.system, &SampleGrid::uniform(4.0, 4).unwrap()).unwrap();
        let cols: Vec<_> = t.columns().map(|(s, c)| (s, c.len())).collect();
        assert_eq!(cols, vec![(0.0, 5), (1.0, 4), (2.0, 3), (3.0, 2), (4.0, 1)]);
        assert_eq!(t.split_time(), 2.0);
        assert!(t.head().points().iter().all(|p| p.t <= 2.0));
    }
}
