use super::{parse_target, Target};
use crate::error::{Error, Result};

pub const CASE_NAMES: [&str; 6] = ["case1", "case2", "case3", "case4", "case5", "case6"];

/// A built-in target together with its default starting range and proposal
/// scale.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseDefaults {
    pub name: &'static str,
    pub target: Target,
    pub range: (f64, f64),
    pub sigma: f64,
}

pub fn builtin_case(name: &str) -> Result<CaseDefaults> {
    let (name, spec, range, sigma) = match name {
        "case1" => ("case1", "N(0,1)", (-10.0, 10.0), 1.0),
        "case2" => ("case2", "N(30,1)", (20.0, 40.0), 1.0),
        "case3" => ("case3", "0.8*N(-2,1)+0.2*N(2,1)", (-10.0, 10.0), 1.0),
        "case4" => ("case4", "0.2*N(-5,1)+0.2*N(5,1)+0.6*N(15,1)", (-15.0, 25.0), 3.5),
        "case5" => ("case5", "0.8*U(-100,100)+0.2*Beta(50,50)", (-100.0, 100.0), 3.5),
        "case6" => ("case6", "0.9*U(-100,100)+0.1*Beta(500,500)", (-100.0, 100.0), 0.1),
        other => return Err(Error::UnknownCase(other.to_string())),
    };
    Ok(CaseDefaults {
        name,
        target: parse_target(spec)?,
        range,
        sigma,
    })
}

/// Accepts either a case name or a grammar expression.
pub fn resolve_target(spec: &str) -> Result<(Target, Option<CaseDefaults>)> {
    let trimmed = spec.trim();
    if trimmed.starts_with("case") {
        let case = builtin_case(trimmed)?;
        Ok((case.target.clone(), Some(case)))
    } else {
        Ok((parse_target(trimmed)?, None))
    }
}
