use crate::engine::TrainedModel;
use crate::field::{relative_l2_error, Field};
use crate::{Error, Result};

/// The model applied `j` times, each output fed back as the next input.
pub fn semigroup_compose_eval(model: &TrainedModel, a: &Field, j: usize) -> Result<Field> {
    if j == 0 {
        return Err(Error::InvalidParameter("composition count must be at least 1".into()));
    }
    let predictor = model.predictor(a.grid())?;
    let mut u = a.clone();
    for _ in 0..j {
        u = predictor.predict(&u)?;
    }
    Ok(u)
}

/// Mean relative errors of `F^j(a_i)` against `targets[j-1][i]` for
/// `j = 1..=targets.len()`.
pub fn semigroup_errors(model: &TrainedModel, inputs: &[Field], targets: &[Vec<Field>]) -> Result<Vec<f64>> {
    let grid = match inputs.first() {
        Some(a) => *a.grid(),
        None => return Err(Error::InvalidParameter("no test inputs".into())),
    };
    if targets.iter().any(|t| t.len() != inputs.len()) {
        return Err(Error::Dimension("every horizon needs one target per input".into()));
    }
    let predictor = model.predictor(&grid)?;
    let mut current: Vec<Field> = inputs.to_vec();
    let mut out = Vec::with_capacity(targets.len());
    for horizon in targets {
        current = predictor.predict_all(&current)?;
        let mut total = 0.0;
        for (u, y) in current.iter().zip(horizon) {
            total += relative_l2_error(y, u)?;
        }
        out.push(total / inputs.len() as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ClosureFeatures, FeatureFamily, TrainingInfo};
    use crate::field::Grid;
    use crate::testutil::{random_field, rng, tanh_features};

    #[test]
    fn single_application_is_prediction() {
        let g = Grid::periodic(17).unwrap();
        let model =
            TrainedModel::from_parts(tanh_features(3, 1), vec![1.0, 2.0, -1.0], 0.0, g, TrainingInfo::manual(0)).unwrap();
        let a = random_field(g, &mut rng(2));
        assert_eq!(semigroup_compose_eval(&model, &a, 1).unwrap(), model.predict(&a).unwrap());
        assert!(semigroup_compose_eval(&model, &a, 0).is_err());
    }

    #[test]
    fn identity_model_composes_to_identity() {
        let g = Grid::periodic(33).unwrap();
        let fam = FeatureFamily::new(ClosureFeatures::new(2, |_, a: &Field| a.values().to_vec()));
        let model = TrainedModel::from_parts(fam, vec![1.5, 0.5], 0.0, g, TrainingInfo::manual(0)).unwrap();
        let a = random_field(g, &mut rng(3));
        let u = semigroup_compose_eval(&model, &a, 2).unwrap();
        for (x, y) in u.values().iter().zip(a.values()) {
            assert!((x - y).abs() < 1e-14);
        }
        let errs = semigroup_errors(&model, &[a.clone()], &vec![vec![a]; 4]).unwrap();
        assert_eq!(errs.len(), 4);
        assert!(errs.iter().all(|&e| e < 1e-14));
    }
}
