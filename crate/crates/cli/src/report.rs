//! Self-contained HTML page of token attributions: one block per example,
//! one span per token, green for positive scores, red for negative and
//! neutral below a display epsilon.

use std::fmt::Write as _;

use lexattr_core::attribution::{normalized, ScoredRecord};

/// Scores with `|s| < DISPLAY_EPSILON × max |s|` of their block are neutral.
pub const DISPLAY_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub fn of(score: f64, block_max: f64) -> Self {
        if !(block_max > 0.0) || score.abs() < DISPLAY_EPSILON * block_max {
            Polarity::Neutral
        } else if score > 0.0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn class(self) -> &'static str {
        match self {
            Polarity::Positive => "pos",
            Polarity::Negative => "neg",
            Polarity::Neutral => "neu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenSpan {
    pub text: String,
    pub segment: usize,
    pub score: f64,
    pub polarity: Polarity,
    /// `|score| / block max`, in [0, 1].
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBlock {
    pub example_id: String,
    pub target: usize,
    pub predicted_class: usize,
    pub prediction_probability: f64,
    pub attribution_sum: f64,
    pub correct: bool,
    pub spans: Vec<TokenSpan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub title: String,
    pub blocks: Vec<ReportBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub title: String,
    /// Display each block's scores scaled to unit Euclidean norm.
    pub normalize: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            title: "Token attributions".into(),
            normalize: false,
        }
    }
}

impl ReportDocument {
    pub fn from_records(records: &[ScoredRecord], options: &ReportOptions) -> Self {
        let blocks = records
            .iter()
            .map(|r| {
                let raw = r.token_scores();
                let scores = if options.normalize { normalized(&raw) } else { raw };
                let max = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
                let spans = r
                    .tokens
                    .iter()
                    .zip(&scores)
                    .map(|(t, &score)| TokenSpan {
                        text: t.token.clone(),
                        segment: t.segment,
                        score,
                        polarity: Polarity::of(score, max),
                        intensity: if max > 0.0 { score.abs() / max } else { 0.0 },
                    })
                    .collect();
                ReportBlock {
                    example_id: r.example_id.clone(),
                    target: r.target,
                    predicted_class: r.predicted_class,
                    prediction_probability: r.prediction_probability,
                    attribution_sum: r.attribution_sum,
                    correct: r.correct,
                    spans,
                }
            })
            .collect();
        Self {
            title: options.title.clone(),
            blocks,
        }
    }

    pub fn to_html(&self) -> String {
        let mut h = String::new();
        let title = escape(&self.title);
        let _ = write!(
            h,
            "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n<style>\n{STYLE}</style>\n</head>\n<body>\n<h1>{title}</h1>\n{LEGEND}\n<main>\n"
        );
        for b in &self.blocks {
            let _ = write!(
                h,
                "<section class=\"record\" data-example=\"{}\" data-tokens=\"{}\">\n<h2>{}</h2>\n<p class=\"summary\">prediction probability <b>{:.4}</b>; attribution sum <b>{:.4}</b>; target {}; predicted {}; <span class=\"{}\">{}</span></p>\n",
                escape(&b.example_id),
                b.spans.len(),
                escape(&b.example_id),
                b.prediction_probability,
                b.attribution_sum,
                b.target,
                b.predicted_class,
                if b.correct { "ok" } else { "wrong" },
                if b.correct { "correct" } else { "incorrect" },
            );
            let mut segment = None;
            for s in &b.spans {
                if segment != Some(s.segment) {
                    if segment.is_some() {
                        h.push_str("</div>\n");
                    }
                    let _ = write!(h, "<div class=\"segment\" data-segment=\"{}\">", s.segment);
                    segment = Some(s.segment);
                }
                let (r, g, bl) = match s.polarity {
                    Polarity::Positive => (22, 163, 74),
                    Polarity::Negative => (220, 38, 38),
                    Polarity::Neutral => (0, 0, 0),
                };
                let alpha = if s.polarity == Polarity::Neutral { 0.0 } else { s.intensity };
                let _ = write!(
                    h,
                    "<span class=\"tok {}\" data-score=\"{:e}\" title=\"{:e}\" style=\"background-color: rgba({r}, {g}, {bl}, {alpha:.3})\">{}</span> ",
                    s.polarity.class(),
                    s.score,
                    s.score,
                    escape(&s.text),
                );
            }
            if segment.is_some() {
                h.push_str("</div>\n");
            }
            h.push_str("</section>\n");
        }
        h.push_str("</main>\n</body>\n</html>\n");
        h
    }
}

/// Renders `records` as a complete HTML page.
pub fn render_report(records: &[ScoredRecord], options: &ReportOptions) -> String {
    ReportDocument::from_records(records, options).to_html()
}

const STYLE: &str = "body { font-family: sans-serif; max-width: 60em; margin: 2em auto; }
.record { border-top: 1px solid #ccc; padding: 0.5em 0; }
.record h2 { font-size: 1em; margin: 0.2em 0; }
.summary { color: #444; margin: 0.2em 0 0.5em; }
.segment { line-height: 1.9; margin-bottom: 0.4em; }
.tok { padding: 0.1em 0.15em; border-radius: 3px; font-family: monospace; }
.ok { color: #15803d; } .wrong { color: #b91c1c; }
.legend span { padding: 0.1em 0.4em; margin-right: 0.5em; border-radius: 3px; }
";

const LEGEND: &str = "<p class=\"legend\">Legend: \
<span style=\"background-color: rgba(22, 163, 74, 0.8)\">positive attribution</span>\
<span style=\"background-color: rgba(220, 38, 38, 0.8)\">negative attribution</span>\
<span style=\"border: 1px solid #ccc\">near zero</span> \
Shade scales with |score| relative to the largest |score| in the example.</p>";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}
