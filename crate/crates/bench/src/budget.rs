//! Share of the reaction time spent on clarification.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("{0} must be finite and non-negative")]
    InvalidInput(&'static str),
    #[error("all time components are zero")]
    DivisionDomain,
}

/// `clarify / (detect + clarify + timeout + interdict)`, or 0 when the
/// drone is tolerated and no interdiction follows.
pub fn delay_budget(
    detect_s: f64,
    clarify_s: f64,
    timeout_s: f64,
    interdict_s: f64,
    tolerated: bool,
) -> Result<f64, BudgetError> {
    for (name, v) in [
        ("detect", detect_s),
        ("clarify", clarify_s),
        ("timeout", timeout_s),
        ("interdict", interdict_s),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(BudgetError::InvalidInput(name));
        }
    }
    if tolerated {
        return Ok(0.0);
    }
    let total = detect_s + clarify_s + timeout_s + interdict_s;
    if total == 0.0 {
        return Err(BudgetError::DivisionDomain);
    }
    Ok(clarify_s / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_cases() {
        assert_eq!(delay_budget(0.0, 0.0, 0.0, 0.0, false), Err(BudgetError::DivisionDomain));
        assert_eq!(delay_budget(0.0, 0.0, 0.0, 0.0, true), Ok(0.0));
        assert_eq!(delay_budget(0.0, 3.0, 0.0, 0.0, false), Ok(1.0));
        assert_eq!(delay_budget(-1.0, 1.0, 0.0, 0.0, false), Err(BudgetError::InvalidInput("detect")));
        assert!(delay_budget(1.0, f64::NAN, 0.0, 0.0, true).is_err());
    }
}
