//! Run reports: one text block per scenario run, plus a cross-run
//! verdict matrix.
//!
//! Everything above the `wall_time_ms` line is a pure function of the
//! scenario and seed; wall time is appended last so reproducibility
//! checks can simply ignore the final line.

use crate::attacks::AttackReport;
use crate::cipher::CipherSuite;
use crate::sim::{AttachStatus, ProtocolVariant};

/// How one station's initial attach went.
#[derive(Debug, Clone)]
pub struct AttachLine {
    pub id: String,
    pub status: AttachStatus,
    pub suite: Option<CipherSuite>,
    pub ticks: u64,
}

/// Everything one scenario run produced, ready to render.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub variant: ProtocolVariant,
    pub seed: u64,
    pub attaches: Vec<AttachLine>,
    pub attacks: Vec<AttackReport>,
    pub wall_time_ms: u128,
}

impl RunReport {
    /// The deterministic part of the report (everything except timing).
    pub fn reproducible_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario={}\n", self.scenario));
        out.push_str(&format!("variant={}\n", self.variant.name()));
        out.push_str(&format!("seed={}\n", self.seed));
        for a in &self.attaches {
            out.push_str(&format!(
                "attach ms={} status={} suite={} ticks={}\n",
                a.id,
                a.status.name(),
                a.suite.map(|s| s.name()).unwrap_or("-"),
                a.ticks
            ));
        }
        for atk in &self.attacks {
            out.push_str(&format!(
                "attack kind={} succeeded={} queries={} ticks={}\n",
                atk.kind,
                atk.succeeded,
                atk.queries.map(|q| q.to_string()).unwrap_or_else(|| "-".to_owned()),
                atk.ticks
            ));
            for e in &atk.evidence {
                out.push_str(&format!("evidence {e}\n"));
            }
        }
        out
    }

    pub fn render_text(&self) -> String {
        format!("{}wall_time_ms={}\n", self.reproducible_text(), self.wall_time_ms)
    }
}

/// Merge several runs into an attacks-by-variant verdict grid.
///
/// Rows are attack kinds in first-appearance order; columns are the
/// protocol variants present. `YES`/`no` mark the attack verdict, `-`
/// marks an attack a variant's runs never executed.
pub fn render_matrix(reports: &[RunReport]) -> String {
    let mut kinds: Vec<&str> = Vec::new();
    for r in reports {
        for a in &r.attacks {
            if !kinds.contains(&a.kind) {
                kinds.push(a.kind);
            }
        }
    }
    let variants = [ProtocolVariant::Legacy, ProtocolVariant::Hardened];
    let cols: Vec<ProtocolVariant> = variants
        .into_iter()
        .filter(|v| reports.iter().any(|r| r.variant == *v))
        .collect();

    let verdict = |kind: &str, variant: ProtocolVariant| -> &'static str {
        let mut saw = false;
        let mut all = true;
        for r in reports.iter().filter(|r| r.variant == variant) {
            for a in r.attacks.iter().filter(|a| a.kind == kind) {
                saw = true;
                all &= a.succeeded;
            }
        }
        match (saw, all) {
            (false, _) => "-",
            (true, true) => "YES",
            (true, false) => "no",
        }
    };

    let kind_width = kinds.iter().map(|k| k.len()).max().unwrap_or(6).max("attack".len());
    let mut out = String::new();
    out.push_str(&format!("{:kind_width$}", "attack"));
    for v in &cols {
        out.push_str(&format!("  {:>8}", v.name()));
    }
    out.push('\n');
    for kind in &kinds {
        out.push_str(&format!("{kind:kind_width$}"));
        for v in &cols {
            out.push_str(&format!("  {:>8}", verdict(kind, *v)));
        }
        out.push('\n');
    }
    out
}
