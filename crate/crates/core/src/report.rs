//! Analysis report for one instance.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use crate::constructor::Construction;
use crate::contraction::ContractionPolicy;
use crate::inference::{quick_verdict_over, Certificate, Verdict};
use crate::model::{MessageSet, Problem};
use crate::structure::{alignment_sets, PatternInventory, PatternMatch};

#[derive(Clone, Debug, Serialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub receivers: usize,
    /// Conflicting pairs, 1-based.
    pub conflicts: Vec<[usize; 2]>,
    pub alignment_sets: Vec<MessageSet>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternEntry {
    pub members: MessageSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roles: Option<Vec<usize>>,
}

impl From<&PatternMatch> for PatternEntry {
    fn from(m: &PatternMatch) -> Self {
        PatternEntry { members: m.members.clone(), roles: m.role_map.as_ref().map(|r| r.iter().map(|x| x + 1).collect()) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternSummary {
    pub counts: BTreeMap<&'static str, usize>,
    pub triangular: Vec<PatternEntry>,
    pub type2: Vec<PatternEntry>,
    pub xtype2: Vec<PatternEntry>,
    pub stic: Vec<PatternEntry>,
    pub spic: Vec<PatternEntry>,
    pub spic_alignment: Vec<PatternEntry>,
}

impl From<&PatternInventory> for PatternSummary {
    fn from(inv: &PatternInventory) -> Self {
        let list = |v: &[PatternMatch]| v.iter().map(PatternEntry::from).collect::<Vec<_>>();
        let counts = [
            ("triangular", inv.triangular.len()),
            ("type2", inv.type2.len()),
            ("xtype2", inv.xtype2.len()),
            ("stic", inv.stic.len()),
            ("spic", inv.spic.len()),
            ("spic_alignment", inv.spic_alignment.len()),
        ]
        .into_iter()
        .collect();
        PatternSummary {
            counts,
            triangular: list(&inv.triangular),
            type2: list(&inv.type2),
            xtype2: list(&inv.xtype2),
            stic: list(&inv.stic),
            spic: list(&inv.spic),
            spic_alignment: list(&inv.spic_alignment),
        }
    }
}

/// A constructed code in the machine-readable output format.
#[derive(Clone, Debug, Serialize)]
pub struct CodeOutput {
    #[serde(flatten)]
    pub code: crate::code::PrecodingAssignment,
    pub seed: u64,
    pub policy: ContractionPolicy,
    pub retries_used: usize,
    pub verified: bool,
}

impl From<&Construction> for CodeOutput {
    fn from(c: &Construction) -> Self {
        CodeOutput { code: c.code.clone(), seed: c.seed, policy: c.policy, retries_used: c.retries_used, verified: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub instance: InstanceSummary,
    pub patterns: PatternSummary,
    pub verdict: Certificate,
    pub rule_chain: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeOutput>,
}

impl Report {
    /// Structure and verdict. Patterns are detected on the problem with
    /// undemanded messages absorbed, as the verdict is.
    pub fn analyze(p: &Problem, q: Option<u32>) -> Report {
        let pa = p.absorb_undemanded();
        let inventory = PatternInventory::detect(&pa);
        let verdict = quick_verdict_over(p, q);
        Report {
            instance: InstanceSummary {
                n: p.n(),
                receivers: p.receivers().len(),
                conflicts: p.conflict_pairs().into_iter().map(|(a, b)| [a + 1, b + 1]).collect(),
                alignment_sets: alignment_sets(p).0,
            },
            patterns: PatternSummary::from(&inventory),
            rule_chain: verdict.rule_chain(),
            verdict,
            code: None,
        }
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let i = &self.instance;
        writeln!(s, "messages: {}, receivers: {}, conflicting pairs: {}", i.n, i.receivers, i.conflicts.len()).unwrap();
        let sets: Vec<String> = i.alignment_sets.iter().map(|a| a.to_string()).collect();
        writeln!(s, "alignment sets: {}", sets.join(" ")).unwrap();
        let counts: Vec<String> = self.patterns.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(s, "patterns: {}", counts.join(", ")).unwrap();
        writeln!(s, "verdict: {}", verdict_name(self.verdict.verdict)).unwrap();
        for line in &self.rule_chain {
            writeln!(s, "  {line}").unwrap();
        }
        if let Some(c) = &self.code {
            writeln!(s, "{}", render_code(c)).unwrap();
        }
        s
    }
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Rate1Feasible => "rate 1 feasible",
        Verdict::RateHalfFeasible => "rate 1/2 feasible",
        Verdict::RateThirdInfeasible => "rate 1/3 infeasible",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn render_code(c: &CodeOutput) -> String {
    let mut s = format!(
        "verified length-{} code over GF({}) (seed {}, policy {}, attempt {}):",
        c.code.len(),
        c.code.field().q(),
        c.seed,
        c.policy,
        c.retries_used
    );
    for (m, v) in c.code.vectors().iter().enumerate() {
        write!(s, "\n  {}: {:?}", m + 1, v.coords()).unwrap();
    }
    s
}
