use serde::{Deserialize, Serialize};

use super::config::CheckName;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn of(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Where the right-hand side comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    MonteCarlo,
    Oracle,
}

/// Relation asserted between `lhs` and `rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `lhs ≤ rhs`.
    AtMost,
    /// `lhs ≥ rhs`.
    AtLeast,
    /// `|lhs − rhs| ≤ tolerance`.
    Within,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: CheckName,
    /// Acceptance criterion this outcome belongs to, if any.
    pub criterion: Option<u8>,
    pub name: String,
    #[serde(with = "float")]
    pub lhs: f64,
    #[serde(with = "float")]
    pub rhs: f64,
    pub relation: Relation,
    #[serde(with = "float")]
    pub tolerance: f64,
    pub provenance: Provenance,
    pub verdict: Verdict,
    pub detail: String,
}

impl CheckOutcome {
    /// Verdict from the relation; `Within` uses the tolerance, the one-sided
    /// relations compare directly against `rhs`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check: CheckName,
        criterion: Option<u8>,
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        relation: Relation,
        tolerance: f64,
        provenance: Provenance,
    ) -> Self {
        let ok = match relation {
            Relation::AtMost => lhs <= rhs,
            Relation::AtLeast => lhs >= rhs,
            Relation::Within => (lhs - rhs).abs() <= tolerance,
        };
        Self {
            check,
            criterion,
            name: name.into(),
            lhs,
            rhs,
            relation,
            tolerance,
            provenance,
            verdict: Verdict::of(ok),
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn with_verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Within => "~",
        };
        format!(
            "{:<12} {} {:.6e} {rel} {:.6e} (tol {:.3e}) {}",
            self.verdict.label(),
            self.name,
            self.lhs,
            self.rhs,
            self.tolerance,
            self.detail
        )
    }
}

/// Everything a run emits except wall-clock timing, which lives in a
/// separate file so the report stays byte-reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub paths: usize,
    pub checks: Vec<CheckOutcome>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn verdict(&self) -> Verdict {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self.checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// JSON has no infinities or NaN; those are written as strings.
mod float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
