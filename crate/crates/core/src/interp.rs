use serde::Serialize;

use crate::error::{Error, Result};

/// Piecewise-linear function given by a node table, constant beyond the end nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    nodes: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(mut nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("node table is empty".into()));
        }
        if nodes.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidParameter("node table entries must be finite".into()));
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        if nodes.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("node abscissae must be distinct".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = &self.nodes;
        let i = n.partition_point(|(k, _)| *k <= x);
        if i == 0 {
            return n[0].1;
        }
        if i == n.len() {
            return n[i - 1].1;
        }
        let (x0, y0) = n[i - 1];
        let (x1, y1) = n[i];
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
    }

    /// Node abscissae strictly inside `(lo, hi)`.
    pub fn knots_between(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.nodes.iter().map(|(x, _)| *x).filter(|x| *x > lo && *x < hi).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_nodes() {
        let f = PiecewiseLinear::new(vec![(2.0, 4.0), (0.0, 0.0), (3.0, 1.0)]).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval(2.0), 4.0);
        assert_eq!(f.eval(2.5), 2.5);
        assert_eq!(f.eval(-3.0), 0.0);
        assert_eq!(f.eval(10.0), 1.0);
        assert_eq!(f.knots_between(0.0, 3.0), vec![2.0]);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(PiecewiseLinear::new(vec![]).is_err());
        assert!(PiecewiseLinear::new(vec![(1.0, 0.0), (1.0, 2.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(f64::NAN, 0.0)]).is_err());
    }
}
