//! Parsers for the response formats requested in the role templates.

use crate::store::{DemoDraft, DemoSource};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("response contains no 'TASK: ' lines")]
    NoTasks,
    #[error("response contains no code")]
    EmptyCode,
    #[error("summary is missing the {0} section")]
    MissingSection(&'static str),
}

/// Minimal tasks from lines starting with `TASK: `, in order.
pub fn parse_simplification(text: &str) -> Result<Vec<String>, ParseError> {
    let tasks: Vec<String> = text
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix("TASK:"))
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    if tasks.is_empty() {
        Err(ParseError::NoTasks)
    } else {
        Ok(tasks)
    }
}

/// Contents of the first fenced block, or the whole response without one.
pub fn parse_code(text: &str) -> Result<String, ParseError> {
    let mut lines = text.lines();
    let mut fenced = None;
    while let Some(line) = lines.next() {
        if line.trim_start().starts_with("```") {
            let body: Vec<&str> = lines.by_ref().take_while(|l| !l.trim_start().starts_with("```")).collect();
            fenced = Some(body.join("\n"));
            break;
        }
    }
    let code = fenced.unwrap_or_else(|| text.to_string());
    let code = code.trim_matches('\n').trim_end();
    if code.trim().is_empty() {
        Err(ParseError::EmptyCode)
    } else {
        Ok(format!("{code}\n"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SummaryProposal {
    Skip,
    Proposal { funcdef: String, demo: DemoDraft },
}

const SUMMARY_HEADERS: [&str; 4] = ["API:", "TASK_DESCRIPTION:", "THOUGHT:", "EXAMPLES:"];

/// Parses an `API:` / `TASK_DESCRIPTION:` / `THOUGHT:` / `EXAMPLES:` reply,
/// or a bare `SKIP`.
pub fn parse_summary(text: &str) -> Result<SummaryProposal, ParseError> {
    if text.trim() == "SKIP" {
        return Ok(SummaryProposal::Skip);
    }
    let mut bodies: [Option<Vec<&str>>; 4] = [None, None, None, None];
    let mut current = None;
    for line in parse_code_free_lines(text) {
        let trimmed = line.trim();
        if let Some(i) = SUMMARY_HEADERS.iter().position(|h| trimmed.starts_with(h)) {
            if bodies[i].is_none() {
                let rest = trimmed[SUMMARY_HEADERS[i].len()..].trim();
                bodies[i] = Some(if rest.is_empty() { Vec::new() } else { vec![rest] });
                current = Some(i);
                continue;
            }
        }
        if let Some(i) = current {
            bodies[i].as_mut().expect("opened").push(line);
        }
    }
    let mut out = Vec::with_capacity(4);
    for (i, body) in bodies.into_iter().enumerate() {
        let joined = body.map(|b| b.join("\n").trim().to_string()).unwrap_or_default();
        if joined.is_empty() {
            return Err(ParseError::MissingSection(SUMMARY_HEADERS[i].trim_end_matches(':')));
        }
        out.push(joined);
    }
    let examples = out.pop().expect("four sections");
    let thought = out.pop().expect("four sections");
    let task_description = out.pop().expect("four sections");
    let funcdef = out.pop().expect("four sections");
    Ok(SummaryProposal::Proposal {
        funcdef: format!("{funcdef}\n"),
        demo: DemoDraft {
            task_description,
            thought,
            examples: format!("{examples}\n"),
            source: DemoSource::Learned,
        },
    })
}

/// Lines with code fences removed.
fn parse_code_free_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim_start().starts_with("```"))
}
