use super::{centered, IntervalSpec, PredictionInterval};
use crate::data::{Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::regress::{FittedModel, Regressor};

/// A split-conformal calibration: the model fit on the training part and
/// the residuals on the holdout part.
#[derive(Debug)]
pub struct SplitFit {
    model: Box<dyn FittedModel>,
    holdout_signed: Vec<f64>,
    holdout_abs: Vec<f64>,
}

impl SplitFit {
    pub fn new(data: &Dataset, reg: &dyn Regressor, split: &SplitSpec) -> Result<Self> {
        let (train_idx, holdout_idx) = split.resolve(data.len())?;
        if holdout_idx.is_empty() {
            return Err(Error::param("split conformal needs a nonempty holdout set"));
        }
        let model = reg.fit(&data.select(&train_idx))?;
        let holdout_signed: Vec<f64> = holdout_idx
            .iter()
            .map(|&i| data.response(i) - model.predict(data.row(i)))
            .collect();
        let holdout_abs = holdout_signed.iter().map(|r| r.abs()).collect();
        Ok(Self {
            model,
            holdout_signed,
            holdout_abs,
        })
    }

    pub fn model(&self) -> &dyn FittedModel {
        self.model.as_ref()
    }

    pub fn holdout_residuals(&self) -> &[f64] {
        &self.holdout_abs
    }

    pub fn interval(&self, spec: &IntervalSpec, x: &[f64]) -> Result<PredictionInterval> {
        spec.validate()?;
        centered(self.model.predict(x), &self.holdout_abs, &self.holdout_signed, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::ConstantMean;

    // Training part {0} has mean 0; holdout responses 1, 2, 3 give
    // residuals 1, 2, 3.
    fn setup() -> (Dataset, SplitSpec) {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], &[0.0, 1.0, -2.0, 3.0]).unwrap();
        let split = SplitSpec::Explicit {
            train: vec![0],
            holdout: vec![1, 2, 3],
        };
        (data, split)
    }

    #[test]
    fn half_width_is_holdout_quantile() {
        let (data, split) = setup();
        let fit = SplitFit::new(&data, &ConstantMean, &split).unwrap();
        assert_eq!(fit.holdout_residuals(), &[1.0, 2.0, 3.0]);
        let pi = fit.interval(&IntervalSpec::symmetric(0.25).unwrap(), &[9.0]).unwrap();
        assert_eq!((pi.lower, pi.upper), (-3.0, 3.0));
        let wide = fit.interval(&IntervalSpec::symmetric(0.2).unwrap(), &[9.0]).unwrap();
        assert_eq!(wide.width(), f64::INFINITY);
    }

    #[test]
    fn half_split_trains_on_half() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let data = Dataset::from_rows(&rows, &vec![1.0; 100]).unwrap();
        let fit = SplitFit::new(&data, &ConstantMean, &SplitSpec::half(4)).unwrap();
        assert_eq!(fit.model().train_size(), 50);
        assert_eq!(fit.holdout_residuals().len(), 50);
    }

    #[test]
    fn empty_holdout_is_rejected() {
        let (data, _) = setup();
        let split = SplitSpec::Explicit {
            train: vec![0, 1, 2, 3],
            holdout: vec![],
        };
        assert!(SplitFit::new(&data, &ConstantMean, &split).is_err());
    }
}
