//! Certificate records. Real quantities are exact dyadic or rational
//! strings; counts and indices are plain integers. Wall-clock timings are
//! only written when asked for, so reruns are byte-identical.

use std::time::Duration;

use serde::Serialize;

use crate::budget::Budget;
use crate::dyadic::DyadicInterval;
use crate::error::Error;
use crate::matrix::{IntervalMatrix, RationalMatrix};

pub const FORMAT: &str = "cstar-cert/1";

#[derive(Clone, Debug, Serialize)]
pub struct BudgetRecord {
    #[serde(rename = "enum")]
    pub enumeration: String,
    pub boxes: String,
    pub jiangsu_stage: String,
    pub dim: String,
}

impl From<&Budget> for BudgetRecord {
    fn from(b: &Budget) -> Self {
        BudgetRecord {
            enumeration: b.enumeration_steps.to_string(),
            boxes: b.sup_norm_boxes.to_string(),
            jiangsu_stage: b.jiangsu_max_stage.to_string(),
            dim: b.max_matrix_dim.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub wall_time: String,
}

impl Timings {
    pub fn of(d: Duration) -> Self {
        Timings { wall_time: format!("{:.6}", d.as_secs_f64()) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate<B: Serialize> {
    pub format: &'static str,
    pub kind: &'static str,
    #[serde(flatten)]
    pub body: B,
    pub budget: BudgetRecord,
    pub timings: Option<Timings>,
}

impl<B: Serialize> Certificate<B> {
    pub fn new(kind: &'static str, body: B, budget: &Budget) -> Self {
        Certificate { format: FORMAT, kind, body, budget: budget.into(), timings: None }
    }

    pub fn with_timings(mut self, t: Option<Duration>) -> Self {
        self.timings = t.map(Timings::of);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificates serialize");
        s.push('\n');
        s
    }
}

/// `norm --presentation P --point A --prec k`.
#[derive(Clone, Debug, Serialize)]
pub struct NormRecord {
    pub presentation: String,
    pub code: String,
    pub k: String,
    pub lo: String,
    pub hi: String,
    pub method: &'static str,
}

impl NormRecord {
    pub fn new(presentation: String, code: String, k: u32, e: &DyadicInterval, method: &'static str) -> Self {
        NormRecord {
            presentation,
            code,
            k: k.to_string(),
            lo: e.lo().to_string(),
            hi: e.hi().to_string(),
            method,
        }
    }
}

/// Rows of exact entries.
pub fn matrix_rows(m: &RationalMatrix) -> Vec<Vec<String>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m.get(i, j).to_string()).collect()).collect()
}

/// Rows of `[re_lo, re_hi, im_lo, im_hi]` entries.
pub fn interval_rows(m: &IntervalMatrix) -> Vec<Vec<[String; 4]>> {
    (0..m.dim())
        .map(|i| {
            (0..m.dim())
                .map(|j| {
                    let z = m.get(i, j);
                    [z.re.lo().to_string(), z.re.hi().to_string(), z.im.lo().to_string(), z.im.hi().to_string()]
                })
                .collect()
        })
        .collect()
}

pub fn interval_pair(e: &DyadicInterval) -> [String; 2] {
    [e.lo().to_string(), e.hi().to_string()]
}

/// Exit status of the command-line tool for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidInput(_) | Error::MissingGenerator(_) | Error::Io(_) => 2,
        Error::Infeasible(_) => 3,
        Error::Certification(_) | Error::Budget(_) => 4,
    }
}

pub fn error_class(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::InvalidInput(_) => "invalid-input",
        Error::MissingGenerator(_) => "missing-generator",
        Error::Io(_) => "io",
        Error::Infeasible(_) => "infeasible",
        Error::Certification(_) => "certification",
        Error::Budget(_) => "budget",
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub format: &'static str,
    pub kind: &'static str,
    pub class: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl ErrorRecord {
    pub fn of(e: &Error) -> Self {
        ErrorRecord {
            format: FORMAT,
            kind: "error",
            class: error_class(e),
            exit_code: exit_code(e),
            message: e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("error records serialize");
        s.push('\n');
        s
    }
}
