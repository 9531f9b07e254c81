use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::problems::{PdeProblem, ReferenceGrid};
use crate::training::Ensemble;

/// `(Σ|p − t|² / Σ|t|², its square root)`. The first is the headline form.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::usage(format!(
            "relative error needs equal non-empty inputs, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let den: f64 = truth.iter().map(|t| t * t).sum();
    if den == 0.0 {
        return Err(Error::usage("relative error against an all-zero truth"));
    }
    let num: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    let ratio = num / den;
    Ok((ratio, ratio.sqrt()))
}

/// Source of ground-truth values.
#[derive(Clone, Copy)]
pub enum Truth<'a> {
    Exact(&'a dyn PdeProblem<f64>),
    Reference(&'a ReferenceGrid),
}

impl Truth<'_> {
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            Truth::Exact(p) => p
                .exact(x)
                .ok_or_else(|| Error::usage(format!("{} has no closed-form solution", p.kind().name()))),
            Truth::Reference(g) => Ok(g.value_at(x[0], x[1])),
        }
    }
}

/// Uniform tensor grid over the closed domain. Points are ordered with axis
/// 0 varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub axes: Vec<Vec<f64>>,
    pub points: PointSet<f64>,
}

impl Grid {
    pub fn new(lower: &[f64], upper: &[f64], resolution: &[usize]) -> Result<Self> {
        if lower.len() != resolution.len() || upper.len() != resolution.len() || resolution.iter().any(|&n| n < 2) {
            return Err(Error::usage(format!("invalid grid resolution {resolution:?}")));
        }
        let axes: Vec<Vec<f64>> = resolution
            .iter()
            .enumerate()
            .map(|(a, &n)| {
                let (lo, hi) = (lower[a], upper[a]);
                (0..n)
                    .map(|i| {
                        if i + 1 == n {
                            hi
                        } else {
                            lo + (hi - lo) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let dim = axes.len();
        let total: usize = resolution.iter().product();
        let mut coords = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            for a in 0..dim {
                coords.push(axes[a][idx[a]]);
            }
            for a in 0..dim {
                idx[a] += 1;
                if idx[a] < resolution[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Self {
            points: PointSet::new(dim, coords)?,
            axes,
        })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridEvaluation {
    pub grid: Grid,
    pub pred: Vec<f64>,
    pub truth: Vec<f64>,
    pub abs_error: Vec<f64>,
}

impl GridEvaluation {
    pub fn relative_l2(&self) -> Result<(f64, f64)> {
        relative_l2(&self.pred, &self.truth)
    }
}

pub fn truth_on_grid(truth: Truth<'_>, grid: &Grid) -> Result<Vec<f64>> {
    grid.points.iter().map(|x| truth.value(x)).collect()
}

pub fn eval_on_grid(
    ensemble: &Ensemble<f64>,
    problem: &dyn PdeProblem<f64>,
    truth: Truth<'_>,
    resolution: &[usize],
) -> Result<GridEvaluation> {
    let d = problem.domain();
    let grid = Grid::new(&d.lower, &d.upper, resolution)?;
    let truth = truth_on_grid(truth, &grid)?;
    evaluate_with_truth(ensemble, grid, truth)
}

/// Evaluation against precomputed truth values on `grid`.
pub fn evaluate_with_truth(ensemble: &Ensemble<f64>, grid: Grid, truth: Vec<f64>) -> Result<GridEvaluation> {
    let pred = ensemble.eval_batch(&grid.points)?;
    let abs_error = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).collect();
    Ok(GridEvaluation {
        grid,
        pred,
        truth,
        abs_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities() {
        let t = [1.0, -2.0, 3.0];
        assert_eq!(relative_l2(&t, &t).unwrap(), (0.0, 0.0));
        let p: Vec<f64> = t.iter().map(|v| 2.0 * v).collect();
        assert_eq!(relative_l2(&p, &t).unwrap(), (1.0, 1.0));
        let ones = [1.0; 10];
        let shifted = [1.25; 10];
        let (r, s) = relative_l2(&shifted, &ones).unwrap();
        assert!((r - 0.0625).abs() < 1e-15 && (s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(relative_l2(&[1.0], &[0.0]).is_err());
        assert!(relative_l2(&[], &[]).is_err());
        assert!(relative_l2(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn grid_covers_closure() {
        let g = Grid::new(&[0.0, 0.0], &[std::f64::consts::TAU, 1.0], &[5, 3]).unwrap();
        assert_eq!(g.points.len(), 15);
        assert_eq!(g.points.point(0), &[0.0, 0.0]);
        assert_eq!(g.points.point(4), &[std::f64::consts::TAU, 0.0]);
        assert_eq!(g.points.point(5), &[0.0, 0.5]);
        assert_eq!(g.points.point(14), &[std::f64::consts::TAU, 1.0]);
    }
}
