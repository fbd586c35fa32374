//! Constant fitting against a dataset.
//!
//! Starts are drawn by Latin hypercube sampling over the initialization
//! interval; each is refined by Nelder–Mead on the RMSE. The refinement may
//! leave the interval but is confined to a box `expansion` times the largest
//! interval bound.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::metrics::DEFAULT_PENALTY;
use crate::sampling::{lhs, DomainBox};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("dataset has no rows")]
    Empty,
}

/// Observations with columns `x1..xd` and a target `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variable_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Dataset, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::Empty);
        }
        let d = rows[0].len();
        for (i, (r, y)) in rows.iter().zip(&targets).enumerate() {
            if r.len() != d {
                return Err(DatasetError::Format {
                    line: i + 2,
                    message: format!("expected {d} variables, got {}", r.len()),
                });
            }
            if !(r.iter().all(|v| v.is_finite()) && y.is_finite()) {
                return Err(DatasetError::Format {
                    line: i + 2,
                    message: "non-finite value".into(),
                });
            }
        }
        if rows.len() != targets.len() {
            return Err(DatasetError::Format {
                line: 1,
                message: format!("{} rows but {} targets", rows.len(), targets.len()),
            });
        }
        Ok(Dataset {
            variable_names: (1..=d).map(|k| format!("x{k}")).collect(),
            rows,
            targets,
        })
    }

    /// Parses CSV with header `x1,...,xd,y`.
    pub fn from_csv(text: &str) -> Result<Dataset, DatasetError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(DatasetError::Empty)?;
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        let d = names.len().saturating_sub(1);
        let expected: Vec<String> = (1..=d).map(|k| format!("x{k}")).chain(["y".into()]).collect();
        if names != expected {
            return Err(DatasetError::Format {
                line: 1,
                message: format!("header must be {}", expected.join(",")),
            });
        }
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (n, line) in lines {
            let values = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| DatasetError::Format {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            if values.len() != d + 1 {
                return Err(DatasetError::Format {
                    line: n + 1,
                    message: format!("expected {} fields, got {}", d + 1, values.len()),
                });
            }
            targets.push(values[d]);
            rows.push(values[..d].to_vec());
        }
        Dataset::new(rows, targets)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.variable_names.join(",");
        out.push_str(if self.variable_names.is_empty() { "y\n" } else { ",y\n" });
        for (r, y) in self.rows.iter().zip(&self.targets) {
            for v in r {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{y}");
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.variable_names.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBudget {
    pub restarts: usize,
    pub evals_per_start: usize,
    pub init_interval: (f64, f64),
    pub expansion: f64,
    /// Stop a start once the simplex spread falls below this fraction of its best value.
    pub tolerance: f64,
    pub penalty: f64,
}

impl Default for FitBudget {
    fn default() -> Self {
        FitBudget {
            restarts: 8,
            evals_per_start: 500,
            init_interval: (0.2, 5.0),
            expansion: 100.0,
            tolerance: 1e-8,
            penalty: DEFAULT_PENALTY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub constants: Vec<f64>,
    /// Finite, or `penalty` when no start evaluated on every row.
    pub rmse: f64,
    pub evaluations_used: usize,
}

impl FitResult {
    pub fn failed(&self, penalty: f64) -> bool {
        !self.rmse.is_finite() || self.rmse >= penalty
    }
}

/// RMSE of `e` with `consts` against the targets; `None` if any row fails.
pub fn rmse_on(e: &Expr, data: &Dataset, consts: &[f64]) -> Option<f64> {
    let mut sum = 0.0;
    for (row, y) in data.rows.iter().zip(&data.targets) {
        let v = e.evaluate(row, consts).ok()?;
        sum += (v - y) * (v - y);
    }
    let r = (sum / data.len() as f64).sqrt();
    r.is_finite().then_some(r)
}

pub fn fit_constants<R: Rng + ?Sized>(
    e: &Expr,
    data: &Dataset,
    budget: &FitBudget,
    rng: &mut R,
) -> FitResult {
    let k = e.constant_count();
    if k == 0 {
        return FitResult {
            constants: Vec::new(),
            rmse: rmse_on(e, data, &[]).unwrap_or(budget.penalty),
            evaluations_used: 1,
        };
    }
    let (a, b) = budget.init_interval;
    let bound = budget.expansion * a.abs().max(b.abs());
    let starts = lhs(
        budget.restarts.max(1),
        &DomainBox::uniform(k, a, b).expect("valid initialization interval"),
        rng,
    );
    let objective = |c: &[f64]| rmse_on(e, data, c).unwrap_or(f64::INFINITY);
    let step = 0.1 * (b - a);

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut used = 0;
    for start in starts.rows() {
        let (x, fx, n) = nelder_mead(
            &objective,
            start,
            step,
            (-bound, bound),
            budget.evals_per_start,
            budget.tolerance,
        );
        used += n;
        if best.as_ref().map_or(true, |(_, f)| fx < *f) {
            best = Some((x, fx));
        }
    }
    let (constants, rmse) = best.expect("at least one start");
    FitResult {
        constants,
        rmse: if rmse.is_finite() { rmse } else { budget.penalty },
        evaluations_used: used,
    }
}

pub fn expression_loss<R: Rng + ?Sized>(
    e: &Expr,
    data: &Dataset,
    budget: &FitBudget,
    rng: &mut R,
) -> f64 {
    fit_constants(e, data, budget, rng).rmse
}

/// Outputs on every dataset row with the fitted constants; `None` if any row
/// fails or the fit itself failed.
pub fn fitted_outputs(e: &Expr, data: &Dataset, fit: &FitResult) -> Option<Vec<f64>> {
    if !fit.rmse.is_finite() {
        return None;
    }
    data.rows
        .iter()
        .map(|row| e.evaluate(row, &fit.constants).ok())
        .collect()
}

/// Nelder–Mead minimization inside a box. Returns the best point, its value
/// and the number of objective evaluations. The best vertex is never
/// replaced by a worse one, so the result is no worse than `start`.
pub fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    bounds: (f64, f64),
    max_evals: usize,
    tolerance: f64,
) -> (Vec<f64>, f64, usize) {
    let n = start.len();
    let clamp = |p: &mut Vec<f64>| {
        for v in p.iter_mut() {
            *v = v.clamp(bounds.0, bounds.1);
        }
    };
    let mut evals = 0;
    let eval = |p: &[f64], evals: &mut usize| {
        *evals += 1;
        f(p)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut p0 = start.to_vec();
    clamp(&mut p0);
    let f0 = eval(&p0, &mut evals);
    simplex.push((p0.clone(), f0));
    for i in 0..n {
        if evals >= max_evals {
            break;
        }
        let mut p = p0.clone();
        p[i] += if p[i] + step <= bounds.1 { step } else { -step };
        let fp = eval(&p, &mut evals);
        simplex.push((p, fp));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);
    if simplex.len() < n + 1 {
        let (x, fx) = simplex.swap_remove(0);
        return (x, fx, evals);
    }

    while evals < max_evals {
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if !best.is_finite() {
            break;
        }
        if worst.is_finite() && worst - best <= tolerance * best.abs() {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(p, _)| p[d]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect();
            clamp(&mut p);
            p
        };
        let reflected = toward(-1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < simplex[0].1 {
            let expanded = toward(-2.0);
            let fe = if evals < max_evals {
                eval(&expanded, &mut evals)
            } else {
                f64::INFINITY
            };
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < simplex[n].1 {
                let c = toward(-0.5);
                let fc = eval(&c, &mut evals);
                (c, fc)
            } else {
                let c = toward(0.5);
                let fc = eval(&c, &mut evals);
                (c, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    if evals >= max_evals {
                        break;
                    }
                    let mut p: Vec<f64> = anchor
                        .iter()
                        .zip(&vertex.0)
                        .map(|(a, v)| a + 0.5 * (v - a))
                        .collect();
                    clamp(&mut p);
                    let fp = eval(&p, &mut evals);
                    *vertex = (p, fp);
                }
            }
        }
        order(&mut simplex);
    }
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, evals)
}
