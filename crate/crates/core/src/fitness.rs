//! RMSE and correlation objectives, linear alignment, and test scoring.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::program::StackProgram;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FitnessError {
    #[error("input vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input vectors are empty")]
    EmptyInput,
    #[error("need at least two points")]
    TooFewPoints,
    #[error("series has zero variance")]
    DegenerateVariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "rmse")]
    Rmse,
    #[serde(rename = "corr")]
    Correlation,
}

impl Objective {
    pub const BOTH: [Objective; 2] = [Objective::Rmse, Objective::Correlation];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Rmse => "rmse",
            Objective::Correlation => "corr",
        }
    }

    /// Scores predictions against targets; failures map to the worst value.
    pub fn score(self, targets: &[f64], predictions: &[f64]) -> FitnessValue {
        match self {
            Objective::Rmse => match rmse(targets, predictions) {
                Ok(v) if v.is_finite() => FitnessValue::new(self, v),
                _ => FitnessValue::worst(self),
            },
            Objective::Correlation => correlation_fitness(targets, predictions),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rmse" => Ok(Objective::Rmse),
            "corr" | "correlation" => Ok(Objective::Correlation),
            other => Err(format!("unknown objective `{other}` (expected rmse or corr)")),
        }
    }
}

/// Lower-is-better fitness. The worst value is `+inf` so failed programs
/// lose every comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub objective: Objective,
    pub value: f64,
}

impl FitnessValue {
    pub fn new(objective: Objective, value: f64) -> Self {
        FitnessValue { objective, value }
    }

    pub fn worst(objective: Objective) -> Self {
        FitnessValue { objective, value: f64::INFINITY }
    }

    pub fn is_worst(&self) -> bool {
        self.value == f64::INFINITY
    }

    /// Total order on the value; NaN never occurs but sorts last if it did.
    pub fn cmp_value(&self, other: &FitnessValue) -> Ordering {
        self.value.total_cmp(&other.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub intercept: f64,
    pub slope: f64,
}

impl Alignment {
    pub const IDENTITY: Alignment = Alignment { intercept: 0.0, slope: 1.0 };

    pub fn apply(&self, prediction: f64) -> f64 {
        self.slope * prediction + self.intercept
    }

    pub fn apply_all(&self, predictions: &[f64]) -> Vec<f64> {
        predictions.iter().map(|&p| self.apply(p)).collect()
    }
}

fn check_pair(targets: &[f64], predictions: &[f64]) -> Result<(), FitnessError> {
    if targets.len() != predictions.len() {
        return Err(FitnessError::LengthMismatch(targets.len(), predictions.len()));
    }
    if targets.is_empty() {
        return Err(FitnessError::EmptyInput);
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Root mean square error.
pub fn rmse(targets: &[f64], predictions: &[f64]) -> Result<f64, FitnessError> {
    check_pair(targets, predictions)?;
    let sse: f64 = targets.iter().zip(predictions).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok((sse / targets.len() as f64).sqrt())
}

/// Centred sums: (Σ dy·dp, Σ dy², Σ dp²).
fn centred_moments(targets: &[f64], predictions: &[f64]) -> (f64, f64, f64) {
    let my = mean(targets);
    let mp = mean(predictions);
    let mut syp = 0.0;
    let mut syy = 0.0;
    let mut spp = 0.0;
    for (y, p) in targets.iter().zip(predictions) {
        let dy = y - my;
        let dp = p - mp;
        syp += dy * dp;
        syy += dy * dy;
        spp += dp * dp;
    }
    (syp, syy, spp)
}

/// True when the spread of `xs` is indistinguishable from rounding noise.
fn is_flat(sum_sq: f64, xs: &[f64]) -> bool {
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    sum_sq <= (xs.len() as f64) * (scale * 1e-14).powi(2) || !sum_sq.is_finite()
}

/// Pearson correlation between targets and predictions, clamped to [-1, 1].
pub fn pearson_r(targets: &[f64], predictions: &[f64]) -> Result<f64, FitnessError> {
    check_pair(targets, predictions)?;
    if targets.len() < 2 {
        return Err(FitnessError::TooFewPoints);
    }
    let (syp, syy, spp) = centred_moments(targets, predictions);
    if is_flat(syy, targets) || is_flat(spp, predictions) {
        return Err(FitnessError::DegenerateVariance);
    }
    let r = syp / (syy * spp).sqrt();
    if r.is_finite() {
        Ok(r.clamp(-1.0, 1.0))
    } else {
        Err(FitnessError::DegenerateVariance)
    }
}

/// `1 - R^2`; any failure maps to the worst value.
pub fn correlation_fitness(targets: &[f64], predictions: &[f64]) -> FitnessValue {
    match pearson_r(targets, predictions) {
        Ok(r) => FitnessValue::new(Objective::Correlation, (1.0 - r * r).max(0.0)),
        Err(_) => FitnessValue::worst(Objective::Correlation),
    }
}

/// Least-squares fit of `targets ≈ slope * predictions + intercept`.
pub fn align(targets: &[f64], predictions: &[f64]) -> Result<Alignment, FitnessError> {
    check_pair(targets, predictions)?;
    if targets.len() < 2 {
        return Err(FitnessError::TooFewPoints);
    }
    let (syp, _, spp) = centred_moments(targets, predictions);
    if is_flat(spp, predictions) {
        return Err(FitnessError::DegenerateVariance);
    }
    let slope = syp / spp;
    let intercept = mean(targets) - slope * mean(predictions);
    if slope.is_finite() && intercept.is_finite() {
        Ok(Alignment { intercept, slope })
    } else {
        Err(FitnessError::DegenerateVariance)
    }
}

/// Coefficient of determination of `predictions` as a model of `targets`.
pub fn r_squared(targets: &[f64], predictions: &[f64]) -> Result<f64, FitnessError> {
    check_pair(targets, predictions)?;
    let my = mean(targets);
    let ss_tot: f64 = targets.iter().map(|y| (y - my) * (y - my)).sum();
    if is_flat(ss_tot, targets) {
        return Err(FitnessError::DegenerateVariance);
    }
    let ss_res: f64 = targets.iter().zip(predictions).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Alignment used when reporting a model trained under `objective`: fitted on
/// the training data for correlation, identity for RMSE.
pub fn fit_alignment(model: &StackProgram, objective: Objective, train: &Dataset) -> Option<Alignment> {
    match objective {
        Objective::Rmse => Some(Alignment::IDENTITY),
        Objective::Correlation => {
            let predictions = model.evaluate_batch(train).ok()?;
            align(train.targets(), &predictions).ok()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestScore {
    pub rmse: f64,
    pub r2: f64,
    pub alignment: Option<Alignment>,
}

impl TestScore {
    pub const FAILED: TestScore = TestScore { rmse: f64::INFINITY, r2: f64::NEG_INFINITY, alignment: None };
}

/// Scores `model` on `test` after applying `alignment`.
pub fn score_with_alignment(model: &StackProgram, alignment: Alignment, test: &Dataset) -> TestScore {
    let Ok(raw) = model.evaluate_batch(test) else {
        return TestScore::FAILED;
    };
    let predictions = alignment.apply_all(&raw);
    let rmse = match rmse(test.targets(), &predictions) {
        Ok(v) if v.is_finite() => v,
        _ => return TestScore::FAILED,
    };
    let r2 = r_squared(test.targets(), &predictions).unwrap_or(if rmse == 0.0 { 1.0 } else { f64::NEG_INFINITY });
    TestScore { rmse, r2, alignment: Some(alignment) }
}

/// Test RMSE and R² for a model trained under `objective`.
pub fn test_score(model: &StackProgram, objective: Objective, train: &Dataset, test: &Dataset) -> TestScore {
    match fit_alignment(model, objective, train) {
        Some(a) => score_with_alignment(model, a, test),
        None => TestScore::FAILED,
    }
}

/// Test RMSE of `model`; `+inf` when evaluation or alignment fails.
pub fn aligned_test_rmse(model: &StackProgram, objective: Objective, train: &Dataset, test: &Dataset) -> f64 {
    test_score(model, objective, train, test).rmse
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Ok(0.0));
        let v = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - 12.5f64.sqrt()).abs() < 1e-15);
        let xs: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let y: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let p: Vec<f64> = y.iter().map(|v| v + 100.0).collect();
        assert!((rmse(&y, &p).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_errors() {
        assert_eq!(rmse(&[1.0], &[1.0, 2.0]), Err(FitnessError::LengthMismatch(1, 2)));
        assert_eq!(rmse(&[], &[]), Err(FitnessError::EmptyInput));
    }

    #[test]
    fn pearson_examples() {
        let y = [1.0, 2.0, 3.0, 7.0];
        assert!((pearson_r(&y, &y).unwrap() - 1.0).abs() < 1e-15);
        let anti: Vec<f64> = y.iter().map(|v| -2.0 * v + 7.0).collect();
        assert!((pearson_r(&y, &anti).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson_r(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), Err(FitnessError::DegenerateVariance));
        assert_eq!(pearson_r(&[4.0, 4.0], &[1.0, 2.0]), Err(FitnessError::DegenerateVariance));
        assert_eq!(pearson_r(&[1.0], &[1.0]), Err(FitnessError::TooFewPoints));
    }

    #[test]
    fn correlation_fitness_examples() {
        let y = [0.5, 1.5, -2.0, 4.0];
        let affine: Vec<f64> = y.iter().map(|v| 3.0 * v - 11.0).collect();
        assert!(correlation_fitness(&y, &affine).value < 1e-15);
        assert!(correlation_fitness(&y, &[2.0; 4]).is_worst());
    }

    #[test]
    fn korns8_example_solution_has_perfect_correlation() {
        // y = 6.87 + 29.58 s, yhat = 949.216 + 21.536 s with s = sqrt(x0 x3 x4)
        let s: Vec<f64> = [1.0, 8.0, 27.0, 300.0, 4500.0, 77.7].iter().map(|v: &f64| v.sqrt()).collect();
        let y: Vec<f64> = s.iter().map(|s| 6.87 + 29.58 * s).collect();
        let p: Vec<f64> = s.iter().map(|s| 949.216 + 21.536 * s).collect();
        let fit = correlation_fitness(&y, &p);
        assert!(fit.value < 1e-14, "{}", fit.value);
    }

    #[test]
    fn align_examples() {
        let xs: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let p: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let y: Vec<f64> = p.iter().map(|v| v + 100.0).collect();
        let a = align(&y, &p).unwrap();
        assert!((a.slope - 1.0).abs() < 1e-10);
        assert!((a.intercept - 100.0).abs() < 1e-10);
        let b = align(&y, &y).unwrap();
        assert!((b.slope - 1.0).abs() < 1e-14 && b.intercept.abs() < 1e-12);
        assert_eq!(align(&y[..3], &[1.0; 3]), Err(FitnessError::DegenerateVariance));
    }

    #[test]
    fn objective_names() {
        assert_eq!("rmse".parse::<Objective>(), Ok(Objective::Rmse));
        assert_eq!("corr".parse::<Objective>(), Ok(Objective::Correlation));
        assert!("mse".parse::<Objective>().is_err());
        assert_eq!(Objective::Correlation.to_string(), "corr");
    }

    #[test]
    fn rmse_score_maps_failure_to_worst() {
        assert!(Objective::Rmse.score(&[1.0], &[]).is_worst());
        assert_eq!(Objective::Rmse.score(&[1.0], &[1.0]).value, 0.0);
    }
}
