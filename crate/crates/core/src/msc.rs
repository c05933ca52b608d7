//! ASCII message sequence charts for traces.
//!
//! One column per agent plus the adversary. A message delivered unchanged
//! is drawn as one arrow from its sender to its receiver at the time of
//! delivery; anything else the adversary injects starts in the adversary
//! column. Outputs nobody consumes go to the adversary column as
//! intercepted.

use std::collections::BTreeSet;

use crate::adversary::Derivation;
use crate::explorer::Trace;
use crate::protocols::{
    CHANGE_PSEUDONYM, OSR_REQ_RECV, RA_OSR_REQ_SEND, REVEAL_LTK, REVEAL_SK_PSI, SETUP_RA,
    SETUP_VEHICLE_PSEUDONYM, TAG_CONFIRM, TAG_REVOKE,
};
use crate::state::Event;
use crate::term::Term;

const COL: usize = 20;
const ADVERSARY: &str = "Adversary";
const MAX_ARG: usize = 28;

fn contains_label(t: &Term, label: &str) -> bool {
    t.subterms().iter().any(|s| s.as_public() == Some(label))
}

fn message_name(t: &Term) -> &'static str {
    if contains_label(t, TAG_REVOKE) {
        "OSR-REQ"
    } else if contains_label(t, TAG_CONFIRM) {
        "OSR-CONF"
    } else {
        "msg"
    }
}

fn output_name(rule: &str, t: &Term) -> &'static str {
    match rule {
        SETUP_RA => "PK_RA",
        SETUP_VEHICLE_PSEUDONYM | CHANGE_PSEUDONYM => "pseudonym",
        RA_OSR_REQ_SEND => "OSR-REQ",
        OSR_REQ_RECV => "OSR-CONF",
        REVEAL_LTK | REVEAL_SK_PSI => "secret",
        _ => message_name(t),
    }
}

fn short(t: &Term) -> String {
    let s = match t.as_public() {
        Some(l) => l.to_string(),
        None => t.to_string(),
    };
    if s.chars().count() > MAX_ARG {
        let head: String = s.chars().take(MAX_ARG - 3).collect();
        format!("{head}...")
    } else {
        s
    }
}

fn event_text(e: &Event) -> String {
    let args: Vec<String> = e.args.iter().map(short).collect();
    format!("{}({})", e.label, args.join(", "))
}

struct Chart {
    columns: Vec<String>,
    lines: Vec<String>,
}

impl Chart {
    fn center(&self, col: usize) -> usize {
        col * COL + COL / 2
    }

    fn width(&self) -> usize {
        self.columns.len() * COL
    }

    fn blank(&self) -> Vec<char> {
        let mut row = vec![' '; self.width()];
        for c in 0..self.columns.len() {
            row[self.center(c)] = '|';
        }
        row
    }

    fn push(&mut self, row: Vec<char>, note: &str) {
        let mut line: String = row.into_iter().collect();
        if !note.is_empty() {
            line.push_str("  ");
            line.push_str(note);
        }
        self.lines.push(line.trim_end().to_string());
    }

    fn header(&mut self) {
        let mut row = vec![' '; self.width()];
        for (c, name) in self.columns.iter().enumerate() {
            let start = self.center(c).saturating_sub(name.chars().count() / 2);
            for (i, ch) in name.chars().enumerate() {
                if start + i < row.len() {
                    row[start + i] = ch;
                }
            }
        }
        self.push(row, "");
        let row = self.blank();
        self.push(row, "");
    }

    fn arrow(&mut self, from: usize, to: usize, label: &str) {
        let (a, b) = (self.center(from), self.center(to));
        let mut row = self.blank();
        let (lo, hi) = (a.min(b), a.max(b));
        if lo == hi {
            self.push(row, &format!("[self] {label}"));
            return;
        }
        let mut text = self.blank();
        if label.chars().count() + 2 < hi - lo {
            for (i, ch) in label.chars().enumerate() {
                text[lo + 2 + i] = ch;
            }
            self.push(text, "");
        } else {
            self.push(text, label);
        }
        for x in row.iter_mut().take(hi).skip(lo + 1) {
            *x = '-';
        }
        if b > a {
            row[b - 1] = '>';
        } else {
            row[b + 1] = '<';
        }
        self.push(row, "");
    }
}

fn column_of(columns: &[String], agent: Option<&Term>) -> usize {
    agent
        .and_then(|a| a.as_public())
        .and_then(|l| columns.iter().position(|c| c == l))
        .unwrap_or(columns.len() - 1)
}

/// Renders `trace` as a chart. The layout depends only on the trace.
pub fn render_msc(trace: &Trace) -> String {
    let mut agents: BTreeSet<String> = BTreeSet::new();
    for s in &trace.steps {
        if let Some(l) = s.actor.as_ref().and_then(|a| a.as_public()) {
            agents.insert(l.to_string());
        }
    }
    for (f, _) in trace.terminal.facts() {
        if let Some(l) = f.args.first().and_then(|a| a.as_public()) {
            agents.insert(l.to_string());
        }
    }
    let mut columns: Vec<String> = agents.into_iter().collect();
    columns.push(ADVERSARY.to_string());
    let mut chart = Chart {
        columns,
        lines: Vec::new(),
    };
    chart.header();
    let adversary = chart.columns.len() - 1;

    for s in &trace.steps {
        let actor = column_of(&chart.columns, s.actor.as_ref());
        for input in &s.inputs {
            let name = message_name(&input.term);
            let source = match &input.derivation {
                Derivation::Known { .. } => trace.steps[..s.index]
                    .iter()
                    .find(|p| p.outputs.contains(&input.term))
                    .map(|p| column_of(&chart.columns, p.actor.as_ref())),
                _ => None,
            };
            match source {
                Some(from) => chart.arrow(from, actor, name),
                None => {
                    let how = if input.derivation.is_constructed() {
                        "forged"
                    } else {
                        "replayed"
                    };
                    chart.arrow(adversary, actor, &format!("{name} ({how})"));
                }
            }
        }
        let mut row = chart.blank();
        row[chart.center(actor)] = '*';
        chart.push(row, &format!("[{}] {}", s.index, s.rule_id));
        for e in &s.events {
            let row = chart.blank();
            chart.push(row, &format!("      {}", event_text(e)));
        }
        for o in &s.outputs {
            let name = output_name(&s.rule_id, o);
            let later = trace.steps[s.index + 1..].iter().any(|q| {
                q.inputs
                    .iter()
                    .any(|i| matches!(i.derivation, Derivation::Known { .. }) && i.term == *o)
            });
            if !later {
                chart.arrow(actor, adversary, &format!("{name} (intercepted)"));
            }
        }
    }
    let row = chart.blank();
    chart.push(row, "");
    let mut out = chart.lines.join("\n");
    out.push('\n');
    out
}
