use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::moments::build_basis;

/// Saved multipliers: `{"order": m, "labels": [...], "lambdas": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub order: u32,
    pub labels: Vec<String>,
    pub lambdas: Vec<f64>,
}

impl WarmStart {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("warm start serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SolverError> {
        serde_json::from_str(text).map_err(|e| SolverError::WarmStart(e.to_string()))
    }

    /// Checks that the labels are the lower basis of `order` for `species`.
    pub fn check(&self, species: &[String]) -> Result<(), SolverError> {
        if self.order == 0 {
            return Err(SolverError::WarmStart("order must be positive".into()));
        }
        let expected: Vec<String> = build_basis(species.len(), self.order)
            .lower
            .iter()
            .map(|m| m.label(species))
            .collect();
        if self.labels != expected {
            return Err(SolverError::WarmStart(format!(
                "labels {:?} do not match the order-{} basis {:?}",
                self.labels, self.order, expected
            )));
        }
        if self.lambdas.len() != self.labels.len() {
            return Err(SolverError::WarmStart(format!(
                "{} lambdas for {} labels",
                self.lambdas.len(),
                self.labels.len()
            )));
        }
        if self.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(SolverError::WarmStart("non-finite lambda".into()));
        }
        Ok(())
    }
}
