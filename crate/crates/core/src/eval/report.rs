use serde::Serialize;

use super::metrics::{ChoiceScore, ComponentScores, ErrorBreakdown};

/// Everything `eval` can report, serialized as one JSON object.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<ChoiceScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<ComponentScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorBreakdown>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn table(rows: &[(String, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let pad = w - k.chars().count();
        out.push_str(&format!("{k}{}  {v:>7}\n", " ".repeat(pad)));
    }
    out
}

/// Aligned plain-text tables.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    if let Some(a) = &report.accuracy {
        out.push_str("Accuracy (%)\n");
        out.push_str(&table(&[(format!("{} / {}", a.accuracy.num, a.accuracy.den), a.accuracy.percent_str())]));
    }
    if let Some(c) = &report.components {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("Component accuracy (%)\n");
        out.push_str(&table(&[
            ("Tenor".into(), c.tenor.percent_str()),
            ("Vehicle".into(), c.vehicle.percent_str()),
            ("Ground".into(), c.ground.percent_str()),
        ]));
    }
    if let Some(e) = &report.errors {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!("Error types (% of {} errors)\n", e.errors));
        let rows: Vec<(String, String)> = e.types.iter().map(|(t, r)| (t.to_string(), r.percent_str())).collect();
        out.push_str(&table(&rows));
    }
    out
}
