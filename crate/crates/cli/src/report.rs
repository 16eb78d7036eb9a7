//! Verification reports.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use hominduce::exactlin::SparseVec;

use crate::io::vec_to_json;

/// Verbatim statement fragments quoted by failed checks.
pub mod anchors {
    pub const HMI_SC: &str = "Then the Homotopy Module-Induction gives an $A_\\infty$-algebra $(B, m_n)$";
    pub const HMI_GENERAL: &str = "the Homotopy Module-Induction gives an $A_\\infty$-algebra also in the weaker assumptions";
    pub const HT_ASSOCIATIVE: &str = "reduces to an associative algebra, i.e., $m_n^\\text{ht} = 0$ for $n > 2.$";
    pub const NOT_DEFORMATION: &str = "Then $(B, m_n)$ is not an infinitesimal deformation of $(B, m_n^\\text{ht}).$";
    pub const MASSEY_ZERO: &str = "In particular, $\\mathsf{M}_2 = 0$.";
    pub const STRICT_QI: &str = "the homotopy transfer $A_\\infty$-algebra and the Homotopy Module-Induced one are (strictly) quasi-isomorphic";
    pub const OBSTRUCTION: &str = "the obstruction to the existence of a strong homotopy equivalence";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), pass, witness: None, anchor: None, detail: String::new() }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn witness(mut self, w: Value) -> Self {
        self.witness = Some(w);
        self
    }

    /// Attaches the anchor only when the check fails.
    pub fn anchor(mut self, a: &str) -> Self {
        if !self.pass {
            self.anchor = Some(a.to_string());
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub name: String,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Vec<String>,
    pub checks: Vec<Check>,
    pub findings: Vec<Finding>,
    pub status: String,
}

impl Report {
    pub fn new(command: &str, inputs: Vec<String>) -> Self {
        Report { schema_version: crate::io::SCHEMA_VERSION, command: command.into(), inputs, checks: vec![], findings: vec![], status: String::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn find(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.findings.push(Finding { name: name.into(), value: value.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn finish(mut self) -> Self {
        self.status = if self.passed() { "pass" } else { "fail" }.into();
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} [{}]\n", self.command, self.inputs.join(", "));
        for c in &self.checks {
            s += &format!("  {} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            if !c.detail.is_empty() {
                s += &format!(": {}", c.detail);
            }
            s.push('\n');
            if let Some(w) = &c.witness {
                s += &format!("      witness: {w}\n");
            }
            if let Some(a) = &c.anchor {
                s += &format!("      theorem: \"{a}\"\n");
            }
        }
        for f in &self.findings {
            s += &format!("  {} = {}\n", f.name, f.value);
        }
        s += &format!("status: {}\n", self.status);
        s
    }
}

/// `{ "input": [...], "output": [[i, "p/q"], ...] }`.
pub fn tuple_witness(tuple: &[usize], v: &SparseVec) -> Value {
    serde_json::json!({ "input": tuple, "output": vec_to_json(v) })
}
