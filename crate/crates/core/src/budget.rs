//! Resource budgets. Defaults can be overridden with the `CSTAR_BUDGET`
//! environment variable, e.g. `CSTAR_BUDGET=enum=5000,boxes=20000,jiangsu_stage=0`.
//! Keys: `enum` (enumeration steps), `boxes` (sup-norm boxes),
//! `jiangsu_stage` (largest Jiang-Su stage with matrix numerics),
//! `dim` (largest matrix dimension for limit stages).

use serde::Serialize;

use crate::error::{Error, Result};

pub const BUDGET_ENV: &str = "CSTAR_BUDGET";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub enumeration_steps: u64,
    pub sup_norm_boxes: usize,
    pub jiangsu_max_stage: u32,
    pub max_matrix_dim: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            enumeration_steps: 1_000_000,
            sup_norm_boxes: 100_000,
            jiangsu_max_stage: 1,
            max_matrix_dim: 4096,
        }
    }
}

impl Budget {
    /// Apply `key=value` overrides separated by commas.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("budget override {item:?} is not key=value")))?;
            let bad = || Error::Parse(format!("budget value {value:?} for {key} is not a natural number"));
            match key.trim() {
                "enum" => self.enumeration_steps = value.trim().parse().map_err(|_| bad())?,
                "boxes" => self.sup_norm_boxes = value.trim().parse().map_err(|_| bad())?,
                "jiangsu_stage" => self.jiangsu_max_stage = value.trim().parse().map_err(|_| bad())?,
                "dim" => self.max_matrix_dim = value.trim().parse().map_err(|_| bad())?,
                other => return Err(Error::Parse(format!("unknown budget key {other:?}"))),
            }
        }
        Ok(self)
    }

    /// Defaults with the environment overrides applied.
    pub fn from_env() -> Result<Self> {
        match std::env::var(BUDGET_ENV) {
            Ok(s) => Budget::default().with_overrides(&s),
            Err(_) => Ok(Budget::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let b = Budget::default().with_overrides("enum=10, boxes=7").unwrap();
        assert_eq!(b.enumeration_steps, 10);
        assert_eq!(b.sup_norm_boxes, 7);
        assert_eq!(b.jiangsu_max_stage, 1);
        assert!(Budget::default().with_overrides("enum").is_err());
        assert!(Budget::default().with_overrides("speed=3").is_err());
    }
}
