//! Prompt builders. Each builder returns tagged sections so the section
//! order can be checked structurally before the text is flattened into chat
//! messages.

use super::template::{Role, RoleTemplate};
use super::ChatMessage;
use crate::lang::{render_all, Diagnostic};
use crate::store::{DemoDraft, Demonstration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectionTag {
    Rules,
    Exemplars,
    Instruction,
    Context,
    Api,
    Demos,
    MinimalTask,
    CompletedTask,
    SuccessfulCode,
    ProposedApi,
    ProposedDemo,
}

impl SectionTag {
    pub fn header(self) -> &'static str {
        match self {
            SectionTag::Rules => "## Rules",
            SectionTag::Exemplars => "## Examples",
            SectionTag::Instruction => "## Instruction",
            SectionTag::Context => "## Context",
            SectionTag::Api => "## API",
            SectionTag::Demos => "## Demonstrations",
            SectionTag::MinimalTask => "## Minimal task",
            SectionTag::CompletedTask => "## Completed task",
            SectionTag::SuccessfulCode => "## Successful code",
            SectionTag::ProposedApi => "## Proposed API",
            SectionTag::ProposedDemo => "## Proposed demonstration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub sections: Vec<(SectionTag, String)>,
}

impl Prompt {
    pub fn tags(&self) -> Vec<SectionTag> {
        self.sections.iter().map(|(t, _)| *t).collect()
    }

    pub fn section(&self, tag: SectionTag) -> Option<&str> {
        self.sections.iter().find(|(t, _)| *t == tag).map(|(_, s)| s.as_str())
    }

    pub fn user_content(&self) -> String {
        self.sections
            .iter()
            .map(|(tag, body)| format!("{}\n{}", tag.header(), body.trim_end()))
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        vec![ChatMessage::system(self.system.clone()), ChatMessage::user(self.user_content())]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot build prompt: {0} is empty")]
pub struct PromptError(pub &'static str);

fn non_empty(text: &str, what: &'static str) -> Result<(), PromptError> {
    if text.trim().is_empty() {
        Err(PromptError(what))
    } else {
        Ok(())
    }
}

pub fn build_simplify_prompt(template: &RoleTemplate, env_obs: &str, x_high: &str) -> Result<Prompt, PromptError> {
    non_empty(env_obs, "environment observation")?;
    non_empty(x_high, "instruction")?;
    Ok(Prompt {
        system: format!("{}\n\n## Environment\n{}", template.intro, env_obs.trim_end()),
        sections: vec![
            (SectionTag::Rules, template.rules.clone()),
            (SectionTag::Exemplars, template.exemplars.clone()),
            (SectionTag::Instruction, x_high.trim().to_string()),
        ],
    })
}

/// Follow-up sent once when a simplification reply had no `TASK:` lines.
pub const SIMPLIFY_REASK: &str =
    "Your reply contained no minimal tasks. Answer again with one minimal task per line, each starting with \"TASK: \".";

pub fn build_simplify_reask(x_high: &str) -> ChatMessage {
    ChatMessage::user(format!(
        "{SIMPLIFY_REASK}\n\n{}\n{}",
        SectionTag::Instruction.header(),
        x_high.trim()
    ))
}

pub fn render_demo(index: usize, demo: &Demonstration) -> String {
    format!(
        "### Demonstration {index}\n[task description] {}\n[thought] {}\n[examples]\n{}",
        demo.task_description.trim(),
        demo.thought.trim(),
        demo.examples.trim_end()
    )
}

/// Solution prompt; user content is context, API docs, demonstrations and
/// the minimal task, in that order. The demonstration section is omitted
/// when `demos` is empty.
pub fn build_solve_prompt(
    template: &RoleTemplate,
    context: &str,
    api_docs: &[String],
    demos: &[&Demonstration],
    x_low: &str,
) -> Result<Prompt, PromptError> {
    non_empty(context, "context")?;
    non_empty(x_low, "minimal task")?;
    let mut sections = vec![
        (SectionTag::Context, context.trim_end().to_string()),
        (SectionTag::Api, api_docs.join("\n")),
    ];
    if !demos.is_empty() {
        let rendered: Vec<String> = demos.iter().enumerate().map(|(i, d)| render_demo(i + 1, d)).collect();
        sections.push((SectionTag::Demos, rendered.join("\n\n")));
    }
    sections.push((SectionTag::MinimalTask, x_low.trim().to_string()));
    Ok(Prompt {
        system: format!(
            "{}\n\n{}\n{}\n\n{}\n{}",
            template.intro,
            SectionTag::Rules.header(),
            template.rules,
            SectionTag::Exemplars.header(),
            template.exemplars
        ),
        sections,
    })
}

/// Compiler feedback for a rejected attempt; restates the minimal task.
pub fn build_feedback_message(diagnostics: &[Diagnostic], x_low: &str) -> ChatMessage {
    ChatMessage::user(format!(
        "The code was rejected by the compiler:\n{}\nFix every error and reply with the complete corrected code for the same minimal task.\n\n{}\n{}",
        render_all(diagnostics),
        SectionTag::MinimalTask.header(),
        x_low.trim()
    ))
}

pub fn build_summary_prompt(
    template: &RoleTemplate,
    api_docs: &[String],
    x_low_joined: &str,
    code: &str,
) -> Result<Prompt, PromptError> {
    non_empty(x_low_joined, "completed task")?;
    non_empty(code, "code")?;
    Ok(Prompt {
        system: template.intro.clone(),
        sections: vec![
            (SectionTag::Rules, template.rules.clone()),
            (SectionTag::Exemplars, template.exemplars.clone()),
            (SectionTag::Api, api_docs.join("\n")),
            (SectionTag::CompletedTask, x_low_joined.trim().to_string()),
            (SectionTag::SuccessfulCode, code.trim_end().to_string()),
        ],
    })
}

pub fn build_supervise_prompt(template: &RoleTemplate, api_docs: &[String], funcdef: &str, demo: &DemoDraft) -> Prompt {
    Prompt {
        system: format!(
            "{}\n\n{}\n{}\n\n{}\n{}",
            template.intro,
            SectionTag::Rules.header(),
            template.rules,
            SectionTag::Exemplars.header(),
            template.exemplars
        ),
        sections: vec![
            (SectionTag::Api, api_docs.join("\n")),
            (SectionTag::ProposedApi, funcdef.trim_end().to_string()),
            (
                SectionTag::ProposedDemo,
                format!(
                    "[task description] {}\n[thought] {}\n[examples]\n{}",
                    demo.task_description.trim(),
                    demo.thought.trim(),
                    demo.examples.trim_end()
                ),
            ),
        ],
    }
}

fn has_header(text: &str, tag: SectionTag) -> bool {
    text.lines().any(|l| l.trim_end() == tag.header())
}

/// Infers which role a conversation belongs to from the section headers of
/// its last user message.
pub fn detect_role(messages: &[ChatMessage]) -> Option<Role> {
    let text = super::last_user_content(messages)?;
    if has_header(text, SectionTag::ProposedApi) {
        Some(Role::Supervise)
    } else if has_header(text, SectionTag::SuccessfulCode) {
        Some(Role::Summarize)
    } else if has_header(text, SectionTag::MinimalTask) {
        Some(Role::Solve)
    } else if has_header(text, SectionTag::Instruction) {
        Some(Role::Simplify)
    } else {
        None
    }
}

/// Body of the last `tag` section in `text`, up to the next `## ` header.
pub fn section_body(text: &str, tag: SectionTag) -> Option<String> {
    let mut lines = text.lines().peekable();
    let mut found = None;
    while let Some(line) = lines.next() {
        if line.trim_end() == tag.header() {
            let mut body = Vec::new();
            while let Some(next) = lines.peek() {
                if next.starts_with("## ") {
                    break;
                }
                body.push(*next);
                lines.next();
            }
            found = Some(body.join("\n").trim().to_string());
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Templates;
    use crate::lang::ApiRegistry;
    use crate::store::DemoSource;

    fn demo(id: u64) -> Demonstration {
        Demonstration {
            id,
            task_description: "stack a block".into(),
            thought: "pick then place".into(),
            examples: "pick(\"a\")\nplace_on(\"b\")".into(),
            source: DemoSource::Seed,
        }
    }

    #[test]
    fn simplify_prompt_layout() {
        let t = Templates::default();
        let x = "put the banana colored block in the red cup";
        let p = build_simplify_prompt(&t.simplify, "object a", x).unwrap();
        let msgs = p.messages();
        assert!(msgs[0].content.contains("object a"));
        assert!(msgs[1].content.ends_with(x));
        assert_eq!(p, build_simplify_prompt(&t.simplify, "object a", x).unwrap());
        assert_eq!(build_simplify_prompt(&t.simplify, " ", x), Err(PromptError("environment observation")));
        assert_eq!(detect_role(&msgs), Some(Role::Simplify));
    }

    #[test]
    fn solve_sections_in_order() {
        let t = Templates::default();
        let mut reg = ApiRegistry::new();
        reg.register_api("def stack_object_on_object(o, b):\n pick(o)\n place_on(b)\nend").unwrap();
        let d = demo(1);
        let p = build_solve_prompt(&t.solve, "ctx", &reg.docs(), &[&d], "stack a on b").unwrap();
        assert_eq!(
            p.tags(),
            vec![SectionTag::Context, SectionTag::Api, SectionTag::Demos, SectionTag::MinimalTask]
        );
        let user = p.user_content();
        let at = |tag: SectionTag| user.find(tag.header()).unwrap();
        assert!(at(SectionTag::Context) < at(SectionTag::Api));
        assert!(at(SectionTag::Api) < at(SectionTag::Demos));
        assert!(at(SectionTag::Demos) < at(SectionTag::MinimalTask));
        assert!(p.section(SectionTag::Api).unwrap().contains("stack_object_on_object(o, b)"));

        let p = build_solve_prompt(&t.solve, "ctx", &reg.docs(), &[], "x").unwrap();
        assert_eq!(p.tags(), vec![SectionTag::Context, SectionTag::Api, SectionTag::MinimalTask]);
        assert_eq!(detect_role(&p.messages()), Some(Role::Solve));
    }

    #[test]
    fn feedback_restates_task() {
        let m = build_feedback_message(&[], "pick up a");
        assert_eq!(section_body(&m.content, SectionTag::MinimalTask).as_deref(), Some("pick up a"));
        assert_eq!(detect_role(&[m]), Some(Role::Solve));
    }

    #[test]
    fn summary_and_supervise_roles() {
        let t = Templates::default();
        let p = build_summary_prompt(&t.summarize, &[], "pick up a", "pick(\"a\")").unwrap();
        assert_eq!(detect_role(&p.messages()), Some(Role::Summarize));
        let draft = DemoDraft {
            task_description: "d".into(),
            thought: "t".into(),
            examples: "f()".into(),
            source: DemoSource::Learned,
        };
        let p = build_supervise_prompt(&t.supervise, &[], "def f():\nend", &draft);
        assert_eq!(detect_role(&p.messages()), Some(Role::Supervise));
    }
}
