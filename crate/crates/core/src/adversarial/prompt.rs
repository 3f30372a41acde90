use serde::{Deserialize, Serialize};

use super::{AdversarialError, RewriteInstance};

/// Placeholder names, in the order the default skeleton uses them.
pub const PLACEHOLDERS: [&str; 7] = ["role", "step1", "step2", "strategies", "exemplars", "emphasis", "payload"];

const DEFAULT_SKELETON: &str = "{role}\n\n{step1}\n\n{step2}\n\n{strategies}\n\n{exemplars}\n\n{emphasis}\n\n{payload}\n";

const ROLE: &str = "请你扮演一名新闻机构的核查编辑。下面会给出一条声明和与之对应的证据，\
你的工作是把两者都改写成意思相反的版本，用于构建对抗测试集。";
const STEP1: &str = "步骤一：改写声明，让它表达与原声明相反的意思，尽量保留原有的用词和句式。";
const STEP2: &str = "步骤二：按照改写后的声明调整证据，使新证据与新声明之间的关系，\
和原证据与原声明之间的关系保持一致。";
const STRATEGIES: &str = "可参考的改写方法：把关键的动词或形容词换成反义词，例如“上调”改为“下调”；\
修改声明和证据中都出现的数字或金额，例如“5元”改为“10元”；\
替换声明和证据中都出现的人名、地名或机构名。";
const EXEMPLAR_HEADER: &str = "下面是人工改写的参考样例：";
const EMPHASIS: &str = "以上方法可以组合使用，也可以采用其他改法，\
但改写后的证据必须与改写后的声明保持原有的支持或反驳关系。\
输出只写两行：第一行以 CLAIM: 开头，给出改写后的声明；第二行以 EVIDENCE: 开头，给出改写后的证据。";
const PAYLOAD_INTRO: &str = "待改写的内容放在下面的反引号之间：";

/// Prompt skeleton plus the text of each fixed section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    /// Must contain each `{name}` of [`PLACEHOLDERS`] exactly once.
    pub skeleton: String,
    pub role: String,
    pub step1: String,
    pub step2: String,
    pub strategies: String,
    pub emphasis: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            skeleton: DEFAULT_SKELETON.into(),
            role: ROLE.into(),
            step1: STEP1.into(),
            step2: STEP2.into(),
            strategies: STRATEGIES.into(),
            emphasis: EMPHASIS.into(),
        }
    }
}

/// A human-written rewrite shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteExemplar {
    pub claim: String,
    pub evidence: String,
    pub generated_claim: String,
    pub generated_evidence: String,
}

fn longest_backtick_run(s: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for c in s.chars() {
        if c == '`' {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Wraps `body` in a backtick fence longer than any run inside it.
fn fence(body: &str) -> String {
    let f = "`".repeat((longest_backtick_run(body) + 1).max(3));
    format!("{f}\n{body}\n{f}")
}

fn render_exemplars(exemplars: &[RewriteExemplar]) -> String {
    let mut out = String::from(EXEMPLAR_HEADER);
    for (i, ex) in exemplars.iter().enumerate() {
        out.push_str(&format!(
            "\n示例{}：\n原声明：{}\n原证据：{}\n改写后声明：{}\n改写后证据：{}",
            i + 1,
            ex.claim,
            ex.evidence,
            ex.generated_claim,
            ex.generated_evidence
        ));
    }
    out
}

/// Splits the skeleton into literal text and placeholder names.
fn parse_skeleton(skeleton: &str) -> Result<Vec<Result<&str, &'static str>>, AdversarialError> {
    let mut parts = Vec::new();
    let mut seen = [0usize; PLACEHOLDERS.len()];
    let rest = skeleton;
    let mut literal_start = 0;
    let mut pos = 0;
    while let Some(off) = rest[pos..].find('{') {
        let at = pos + off;
        let hit = PLACEHOLDERS
            .iter()
            .enumerate()
            .find(|(_, name)| rest[at + 1..].starts_with(*name) && rest[at + 1 + name.len()..].starts_with('}'));
        match hit {
            Some((k, name)) => {
                parts.push(Ok(&rest[literal_start..at]));
                parts.push(Err(*name));
                seen[k] += 1;
                pos = at + name.len() + 2;
                literal_start = pos;
            }
            None => pos = at + 1,
        }
    }
    parts.push(Ok(&rest[literal_start..]));
    for (k, name) in PLACEHOLDERS.iter().enumerate() {
        match seen[k] {
            1 => {}
            0 => return Err(AdversarialError::Template(format!("missing placeholder {{{name}}}"))),
            n => return Err(AdversarialError::Template(format!("placeholder {{{name}}} appears {n} times"))),
        }
    }
    Ok(parts)
}

/// Assembles the rewrite prompt for `instance`. The exemplar section and
/// its blank line are dropped when `exemplars` is empty.
pub fn build_prompt(
    instance: &RewriteInstance,
    template: &PromptTemplate,
    exemplars: &[RewriteExemplar],
) -> Result<String, AdversarialError> {
    let parts = parse_skeleton(&template.skeleton)?;
    let payload = format!(
        "{PAYLOAD_INTRO}\n{}",
        fence(&format!("声明：{}\n证据：{}", instance.claim, instance.evidence))
    );
    let mut out = String::new();
    let mut skip_blank = false;
    for part in parts {
        match part {
            Ok(mut literal) => {
                if skip_blank {
                    literal = literal.strip_prefix("\n\n").unwrap_or(literal);
                    skip_blank = false;
                }
                out.push_str(literal);
            }
            Err(name) => {
                let text = match name {
                    "role" => template.role.clone(),
                    "step1" => template.step1.clone(),
                    "step2" => template.step2.clone(),
                    "strategies" => template.strategies.clone(),
                    "emphasis" => template.emphasis.clone(),
                    "payload" => payload.clone(),
                    "exemplars" if exemplars.is_empty() => {
                        skip_blank = true;
                        String::new()
                    }
                    "exemplars" => render_exemplars(exemplars),
                    _ => unreachable!("placeholder list is closed"),
                };
                out.push_str(&text);
            }
        }
    }
    Ok(out)
}

fn find_marker(text: &str, ascii: &str) -> Option<(usize, usize)> {
    let full = ascii.replace(':', "：");
    [ascii, full.as_str()]
        .iter()
        .filter_map(|m| text.find(m).map(|i| (i, i + m.len())))
        .min()
}

/// Extracts the rewritten claim and evidence from a completion containing
/// `CLAIM:` and `EVIDENCE:` markers, ignoring fence lines.
pub fn parse_completion(completion: &str) -> Result<(String, String), AdversarialError> {
    let text: String = completion
        .lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n");
    let (_, c1) = find_marker(&text, "CLAIM:").ok_or_else(|| AdversarialError::Parse("no CLAIM: marker".into()))?;
    let (e0, e1) =
        find_marker(&text, "EVIDENCE:").ok_or_else(|| AdversarialError::Parse("no EVIDENCE: marker".into()))?;
    if e0 < c1 {
        return Err(AdversarialError::Parse("EVIDENCE: precedes CLAIM:".into()));
    }
    let clean = |s: &str| s.trim().trim_matches('`').trim().to_string();
    let claim = clean(&text[c1..e0]);
    let evidence = clean(&text[e1..]);
    if claim.is_empty() || evidence.is_empty() {
        return Err(AdversarialError::Parse("empty CLAIM or EVIDENCE".into()));
    }
    Ok((claim, evidence))
}
