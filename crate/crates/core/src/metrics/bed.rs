//! Behaviour-aware expression distance.
//!
//! Variable points are drawn once per run by Latin hypercube sampling from the
//! variable box (stream tag `vars`). Each expression gets its own constant
//! design over `[a, b]^k`, keyed by its canonical string (tag
//! `consts/<canonical>`), so an expression sees the same constants wherever
//! it appears in a run. The distance is the mean, over the variable points,
//! of the 1-Wasserstein distance between the two output distributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wasserstein::{w1, EmpiricalDist, DEFAULT_PENALTY};
use super::MetricError;
use crate::expr::{EvalLimits, Expr};
use crate::sampling::{derive_stream, lhs, DomainBox, SampleDesign};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BedConfig {
    pub var_box: DomainBox,
    pub const_interval: (f64, f64),
    pub num_var_samples: usize,
    pub num_const_samples: usize,
    pub penalty: f64,
    pub master_seed: u64,
    pub magnitude_cap: f64,
}

impl BedConfig {
    /// Defaults used for the smoothness experiments: variables in `[1, 5]`,
    /// constants in `[0.2, 5]`, 64 variable points and 16 constant vectors.
    pub fn with_dims(dims: usize) -> BedConfig {
        BedConfig {
            var_box: DomainBox::uniform(dims, 1.0, 5.0).expect("valid interval"),
            const_interval: (0.2, 5.0),
            num_var_samples: 64,
            num_const_samples: 16,
            penalty: DEFAULT_PENALTY,
            master_seed: 0,
            magnitude_cap: crate::expr::DEFAULT_MAGNITUDE_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        let (a, b) = self.const_interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(MetricError::Config(format!("constant interval [{a}, {b}] is empty")));
        }
        if self.num_var_samples == 0 || self.num_const_samples == 0 {
            return Err(MetricError::Config("sample counts must be at least 1".into()));
        }
        if !(self.penalty > 0.0) {
            return Err(MetricError::Config("penalty must be positive".into()));
        }
        Ok(())
    }

    fn limits(&self) -> EvalLimits {
        EvalLimits {
            magnitude_cap: self.magnitude_cap,
            ..EvalLimits::default()
        }
    }

    /// The shared variable design of this run.
    pub fn variable_design(&self) -> SampleDesign {
        lhs(
            self.num_var_samples,
            &self.var_box,
            &mut derive_stream(self.master_seed, "vars"),
        )
    }

    /// The constant design of `e`: one empty row when `e` has no constants.
    pub fn constant_design(&self, e: &Expr) -> SampleDesign {
        let k = e.constant_count();
        if k == 0 {
            return SampleDesign::single_empty_row();
        }
        let (a, b) = self.const_interval;
        let domain = DomainBox::uniform(k, a, b).expect("validated interval");
        let tag = format!("consts/{}", e.to_canonical_string());
        lhs(
            self.num_const_samples,
            &domain,
            &mut derive_stream(self.master_seed, tag),
        )
    }

    fn check_dims(&self, e: &Expr) -> Result<(), MetricError> {
        let needed = e.required_dimensions();
        if needed > self.var_box.dims() {
            return Err(MetricError::Dimensions {
                expr: e.to_canonical_string(),
                needed,
                available: self.var_box.dims(),
            });
        }
        Ok(())
    }
}

/// Outputs of `e` at point `x`, one evaluation per design row; failed
/// evaluations are dropped.
pub fn outputs_at(e: &Expr, x: &[f64], const_design: &SampleDesign) -> EmpiricalDist {
    outputs_with(e, x, const_design, &EvalLimits::default())
}

fn outputs_with(e: &Expr, x: &[f64], design: &SampleDesign, limits: &EvalLimits) -> EmpiricalDist {
    let values = design
        .rows()
        .filter_map(|c| e.evaluate_with(x, c, limits).ok())
        .collect();
    EmpiricalDist::from_values(values)
}

/// Output distributions of one expression at every point of the variable design.
#[derive(Debug, Clone, PartialEq)]
pub struct BedProfile {
    pub per_point: Vec<EmpiricalDist>,
}

pub fn profile(e: &Expr, points: &SampleDesign, cfg: &BedConfig) -> BedProfile {
    let consts = cfg.constant_design(e);
    let limits = cfg.limits();
    BedProfile {
        per_point: points
            .rows()
            .map(|x| outputs_with(e, x, &consts, &limits))
            .collect(),
    }
}

/// Profiles for a whole corpus under one configuration.
pub fn profiles(corpus: &[Expr], cfg: &BedConfig) -> Result<Vec<BedProfile>, MetricError> {
    cfg.validate()?;
    corpus.iter().try_for_each(|e| cfg.check_dims(e))?;
    let points = cfg.variable_design();
    Ok(corpus.par_iter().map(|e| profile(e, &points, cfg)).collect())
}

pub fn bed_from_profiles(pu: &BedProfile, pv: &BedProfile, penalty: f64) -> f64 {
    debug_assert_eq!(pu.per_point.len(), pv.per_point.len());
    let total: f64 = pu
        .per_point
        .iter()
        .zip(&pv.per_point)
        .map(|(du, dv)| w1(du, dv, penalty))
        .sum();
    total / pu.per_point.len() as f64
}

pub fn bed(u: &Expr, v: &Expr, cfg: &BedConfig) -> Result<f64, MetricError> {
    cfg.validate()?;
    cfg.check_dims(u)?;
    cfg.check_dims(v)?;
    let points = cfg.variable_design();
    let pu = profile(u, &points, cfg);
    let pv = profile(v, &points, cfg);
    Ok(bed_from_profiles(&pu, &pv, cfg.penalty))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        s.parse().unwrap()
    }

    fn design(rows: &[f64]) -> SampleDesign {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![*r]).collect();
        SampleDesign::from_rows(&rows)
    }

    #[test]
    fn point_mass_for_constant_free() {
        let out = outputs_at(
            &e("sin(x)"),
            &[std::f64::consts::FRAC_PI_2],
            &SampleDesign::single_empty_row(),
        );
        assert_eq!(out.values(), &[1.0]);
    }

    #[test]
    fn one_output_per_constant_row() {
        let out = outputs_at(&e("C*x"), &[2.0], &design(&[1.0, 3.0]));
        assert_eq!(out.values(), &[2.0, 6.0]);
    }

    #[test]
    fn failing_rows_are_dropped() {
        let out = outputs_at(&e("log(x-C)"), &[1.0], &design(&[1.0, 1.5, 4.0]));
        assert!(out.is_empty());
        let out = outputs_at(&e("log(x-C)"), &[2.0], &design(&[1.0, 1.5, 4.0]));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn self_distance_is_zero_and_symmetric() {
        let mut cfg = BedConfig::with_dims(2);
        cfg.master_seed = 3;
        let u = e("C*x1 + sin(C*x2)");
        let v = e("x1/C");
        assert_eq!(bed(&u, &u, &cfg).unwrap(), 0.0);
        assert_eq!(bed(&u, &v, &cfg).unwrap(), bed(&v, &u, &cfg).unwrap());
        assert!(bed(&u, &v, &cfg).unwrap() > 0.0);
    }

    #[test]
    fn dimension_check() {
        let cfg = BedConfig::with_dims(1);
        assert!(matches!(
            bed(&e("x1"), &e("x2"), &cfg),
            Err(MetricError::Dimensions { needed: 2, available: 1, .. })
        ));
        let mut bad = BedConfig::with_dims(1);
        bad.const_interval = (5.0, 0.2);
        assert!(matches!(bed(&e("x"), &e("x"), &bad), Err(MetricError::Config(_))));
    }

    #[test]
    fn penalty_when_one_side_always_fails() {
        let mut cfg = BedConfig::with_dims(1);
        cfg.penalty = 1e6;
        // log(-x) fails on [1, 5] for every point
        assert_eq!(bed(&e("log(-x)"), &e("x"), &cfg).unwrap(), 1e6);
        assert_eq!(bed(&e("log(-x)"), &e("sqrt(-x)"), &cfg).unwrap(), 0.0);
    }
}
