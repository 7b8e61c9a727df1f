use baba_sim::StateDocument;
use serde::Serialize;

use crate::evidence::Transition;
use crate::runtime::Program;

/// A protocol-compliant program that predicts "nothing changes".
pub const SKELETON: &str = include_str!("skeleton.py");

pub const CONTRACT: &str = "\
You are writing a world model for a grid puzzle: a complete Python 3 program that predicts the
next state of the environment after one action. Only the standard library is available.

Protocol. The program talks over stdin/stdout. Every message is one line
`<payload byte length> <payload>` where the payload is compact JSON. The program first sends
{\"ready\":true}. It then answers each request {\"state\": S, \"action\": A} with {\"state\": S2},
or with {\"error\": \"...\"} if it cannot. Requests are independent.

States. S = {\"grid_size\":[w,h],\"step\":{\"terminated\":bool},\"objects\":[...]}. Each object has
\"type\" (rule_noun, rule_operator, rule_property, world_object), \"word\", \"position\" [x,y]
with y growing downwards, and world objects carry \"direction\" (\"facing up|right|down|left\").
Text blocks on the grid form rule sentences such as NOUN IS PROPERTY that change the dynamics;
the meaning of each property word must be inferred from the evidence. A is one of idle, up,
right, down, left. Object order in S2 does not matter; a prediction counts only if it matches
the observed next state exactly.";

/// A transition as shown to the provider.
#[derive(Clone, Debug, Serialize)]
pub struct TransitionView {
    pub id: usize,
    pub level: String,
    pub state: StateDocument,
    pub action: String,
    pub next_state: StateDocument,
}

impl From<&Transition> for TransitionView {
    fn from(t: &Transition) -> Self {
        TransitionView {
            id: t.id,
            level: t.level.clone(),
            state: baba_sim::encode_state(&t.state),
            action: t.action.as_str().to_string(),
            next_state: baba_sim::encode_state(&t.next),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PromptPayload {
    pub contract: String,
    pub current_source: Option<String>,
    pub target: TransitionView,
    pub preserve: Vec<TransitionView>,
    /// Reference transitions dropped to respect the size limit.
    pub elided: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProviderRequest {
    pub prompt: String,
    pub payload: PromptPayload,
}

fn doc(state: &StateDocument) -> String {
    serde_json::to_string(state).expect("documents serialize")
}

fn block(title: &str, t: &TransitionView) -> String {
    format!(
        "## {title}\nlevel: {}\nstate: {}\naction: {}\nnext state: {}\n",
        t.level,
        doc(&t.state),
        t.action,
        doc(&t.next_state)
    )
}

fn render(payload: &PromptPayload) -> String {
    let mut out = String::new();
    out.push_str("# Task\n");
    out.push_str(CONTRACT);
    out.push_str("\n\n# Current program\n");
    match &payload.current_source {
        Some(src) => {
            out.push_str("This program explains every transition observed so far except the new one below.\n```python\n");
            out.push_str(src);
        }
        None => {
            out.push_str("There is no program yet. This skeleton shows the protocol; it predicts that nothing changes.\n```python\n");
            out.push_str(SKELETON);
        }
    }
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("```\n\n# Evidence\n");
    out.push_str(&block("New transition (must become explained)", &payload.target));
    for (k, t) in payload.preserve.iter().enumerate() {
        out.push('\n');
        out.push_str(&block(&format!("Previously explained transition {} (must remain explained)", k + 1), t));
    }
    if !payload.preserve.is_empty() {
        out.push_str(
            "\nA previous attempt broke the transitions marked \"must remain explained\"; they illustrate \
behaviour the current program already gets right.\n",
        );
    }
    out.push_str(
        "\n# Output\nReturn only the complete replacement program in a single ```python code block. \
Keep every behaviour the current program already gets right.\n",
    );
    out
}

/// Renders the update prompt. Deterministic in its inputs; when the text
/// exceeds `limit` bytes, reference transitions are dropped largest first.
pub fn build_prompt(current: Option<&Program>, target: &Transition, reference: &[&Transition], limit: usize) -> ProviderRequest {
    let mut payload = PromptPayload {
        contract: CONTRACT.to_string(),
        current_source: current.map(|p| p.source.clone()),
        target: target.into(),
        preserve: reference.iter().map(|t| TransitionView::from(*t)).collect(),
        elided: Vec::new(),
    };
    let mut prompt = render(&payload);
    while prompt.len() > limit && !payload.preserve.is_empty() {
        let largest = (0..payload.preserve.len())
            .max_by_key(|&k| (block("", &payload.preserve[k]).len(), std::cmp::Reverse(k)))
            .expect("nonempty");
        let dropped = payload.preserve.remove(largest);
        log::warn!("prompt over {limit} bytes; dropping reference transition {}", dropped.id);
        payload.elided.push(dropped.id);
        prompt = render(&payload);
    }
    ProviderRequest { prompt, payload }
}

/// Pulls the program out of a provider response: the last fenced code block,
/// or the whole text when there is none.
pub fn extract_program(response: &str) -> String {
    let mut blocks = Vec::new();
    let mut rest = response;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let Some(body_start) = after.find('\n') else { break };
        let body = &after[body_start + 1..];
        let Some(end) = body.find("```") else { break };
        blocks.push(&body[..end]);
        rest = &body[end + 3..];
    }
    match blocks.last() {
        Some(b) => b.to_string(),
        None => response.trim().to_string() + "\n",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_last_block() {
        let text = "Here:\n```python\nprint(1)\n```\nand better:\n```python\nprint(2)\n```\n";
        assert_eq!(extract_program(text), "print(2)\n");
        assert_eq!(extract_program("print(3)"), "print(3)\n");
    }
}
