//! Run reports as JSON lines: one `event` record per fired rule, one `trace`
//! record per finished program execution, then a single `final` record.

use serde::{Deserialize, Serialize};

use crate::process::{RedexEvent, RunOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEvent {
    pub step: usize,
    pub rule: String,
    pub detail: String,
}

impl From<&RedexEvent> for ReportEvent {
    fn from(e: &RedexEvent) -> Self {
        ReportEvent {
            step: e.step_index,
            rule: e.name(),
            detail: e.detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportTrace {
    pub channel: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunReport {
    pub events: Vec<ReportEvent>,
    pub traces: Vec<ReportTrace>,
    /// The printed final state.
    pub final_state: String,
}

impl From<&RunOutcome> for RunReport {
    fn from(o: &RunOutcome) -> Self {
        RunReport {
            events: o.events.iter().map(ReportEvent::from).collect(),
            traces: o
                .traces
                .iter()
                .map(|(c, t)| ReportTrace {
                    channel: c.to_string(),
                    labels: t.labels().iter().map(|l| l.to_string()).collect(),
                })
                .collect(),
            final_state: o.final_state.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Event(ReportEvent),
    Trace(ReportTrace),
    Final { state: String },
}

pub fn emit_report(r: &RunReport) -> String {
    let records = r
        .events
        .iter()
        .cloned()
        .map(Record::Event)
        .chain(r.traces.iter().cloned().map(Record::Trace))
        .chain(std::iter::once(Record::Final {
            state: r.final_state.clone(),
        }));
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_report(text: &str) -> Result<RunReport, serde_json::Error> {
    let mut r = RunReport::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str(line)? {
            Record::Event(e) => r.events.push(e),
            Record::Trace(t) => r.traces.push(t),
            Record::Final { state } => r.final_state = state,
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_field_order() {
        let r = RunReport {
            events: vec![ReportEvent {
                step: 0,
                rule: "exec/program-step".into(),
                detail: "x: (act (a)) --(a)--> (nil)".into(),
            }],
            traces: vec![ReportTrace {
                channel: "x".into(),
                labels: vec!["(a)".into(), "(b)".into()],
            }],
            final_state: "sendtrace x<[(a) (b)]>".into(),
        };
        let text = emit_report(&r);
        assert!(text.starts_with(r#"{"record":"event","step":0,"rule":"exec/program-step","#));
        assert!(text.contains(r#"{"record":"trace","channel":"x","labels":["(a)","(b)"]}"#));
        assert_eq!(parse_report(&text).unwrap(), r);
    }

    #[test]
    fn empty_run_has_only_final_record() {
        let text = emit_report(&RunReport {
            final_state: "0".into(),
            ..RunReport::default()
        });
        assert_eq!(text, "{\"record\":\"final\",\"state\":\"0\"}\n");
    }
}
