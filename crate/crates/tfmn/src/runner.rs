use rayon::prelude::*;
use tfmn_core::ml::{CvPlan, Evaluation, GridRunner, MlError};

/// Evaluates grid groups on the rayon pool. Every group draws from its own
/// random streams, so results equal [`tfmn_core::ml::Sequential`]'s.
#[derive(Clone, Copy, Debug, Default)]
pub struct Parallel;

impl GridRunner for Parallel {
    fn run(&self, plan: &CvPlan<'_>) -> Vec<Result<Vec<Evaluation>, MlError>> {
        (0..plan.n_groups()).into_par_iter().map(|g| plan.evaluate(g)).collect()
    }
}
