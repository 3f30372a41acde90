use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClaimRecord, Corpus, CorpusError, EvidenceDocument, GoldEvidence, Label, Source};

const MANDATORY: [&str; 2] = ["claim", "label"];
const CANONICAL_FIELDS: [&str; 7] = [
    "id",
    "claim",
    "label",
    "domain",
    "gold_evidence",
    "documents",
    "source",
];

/// Maps an external record schema onto canonical fields.
///
/// `fields` maps a canonical field name to a source key; dotted keys
/// (`meta.label`) walk nested objects. `labels` maps raw label values
/// (numbers are stringified) to labels; canonical label names are always
/// accepted as a fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestMapping {
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub labels: BTreeMap<String, Label>,
}

impl IngestMapping {
    pub fn canonical() -> Self {
        IngestMapping {
            fields: CANONICAL_FIELDS
                .iter()
                .map(|f| (f.to_string(), f.to_string()))
                .collect(),
            labels: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for key in self.fields.keys() {
            if !CANONICAL_FIELDS.contains(&key.as_str()) {
                return Err(CorpusError::Mapping(format!("unknown canonical field {key:?}")));
            }
        }
        for f in MANDATORY {
            if !self.fields.contains_key(f) {
                return Err(CorpusError::Mapping(format!(
                    "mandatory field {f:?} has no mapping entry"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let m: IngestMapping = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn lookup<'v>(&self, record: &'v Value, field: &str) -> Option<&'v Value> {
        let key = self.fields.get(field)?;
        let mut cur = record;
        for part in key.split('.') {
            cur = cur.get(part)?;
        }
        if cur.is_null() {
            None
        } else {
            Some(cur)
        }
    }

    fn parse_label(&self, raw: &Value) -> Result<Label, String> {
        let s = match raw {
            Value::String(s) => s.trim().to_string(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            other => return Err(format!("label has unsupported type: {other}")),
        };
        if let Some(l) = self.labels.get(&s) {
            return Ok(*l);
        }
        s.parse::<Label>()
            .map_err(|_| format!("unknown label string {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub corpus: Corpus,
    pub rejects: Vec<Reject>,
    /// Accepted records carrying literal gold evidence that matched no sentence.
    pub flags: Vec<Reject>,
    /// Non-blank input lines; always `corpus.len() + rejects.len()`.
    pub lines: usize,
}

impl IngestOutcome {
    pub fn rejects_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rejects {
            out.push_str(&serde_json::to_string(r).expect("reject serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn ingest_jsonl(path: &Path, mapping: &IngestMapping) -> Result<IngestOutcome, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_str(&text, mapping)
}

/// Blank lines are skipped and not counted; every other line becomes either
/// a record or a reject.
pub fn ingest_str(text: &str, mapping: &IngestMapping) -> Result<IngestOutcome, CorpusError> {
    mapping.validate()?;
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut flags = Vec::new();
    let mut ids = HashSet::new();
    let mut lines = 0;

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        let record = match parse_line(line, line_no, mapping) {
            Ok(r) => r,
            Err(reason) => {
                rejects.push(Reject { line_no, reason });
                continue;
            }
        };
        if let Err(reason) = record.validate() {
            rejects.push(Reject { line_no, reason });
            continue;
        }
        if !ids.insert(record.id.clone()) {
            rejects.push(Reject {
                line_no,
                reason: format!("duplicate id {:?}", record.id),
            });
            continue;
        }
        let (_, unmatched) = record.resolve_gold();
        for lit in unmatched {
            flags.push(Reject {
                line_no,
                reason: format!("record {}: literal gold evidence matches no sentence: {lit:?}", record.id),
            });
        }
        records.push(record);
    }

    Ok(IngestOutcome {
        corpus: Corpus { records },
        rejects,
        flags,
        lines,
    })
}

fn parse_line(line: &str, line_no: usize, mapping: &IngestMapping) -> Result<ClaimRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    if !value.is_object() {
        return Err("line is not a JSON object".into());
    }

    let text = match mapping.lookup(&value, "claim") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err("field \"claim\" is not a string".into()),
        None => return Err("missing mandatory field \"claim\"".into()),
    };
    let label = match mapping.lookup(&value, "label") {
        Some(raw) => mapping.parse_label(raw)?,
        None => return Err("missing mandatory field \"label\"".into()),
    };
    let id = match mapping.lookup(&value, "id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err("field \"id\" is not a string or number".into()),
        None => format!("L{line_no}"),
    };
    let domain = match mapping.lookup(&value, "domain") {
        Some(Value::String(s)) => s.trim().to_string(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err("field \"domain\" is not a string".into()),
        None => "unknown".to_string(),
    };
    let source = match mapping.lookup(&value, "source") {
        Some(Value::String(s)) => s.parse::<Source>()?,
        Some(_) => return Err("field \"source\" is not a string".into()),
        None => Source::Original,
    };
    let documents = match mapping.lookup(&value, "documents") {
        Some(v) => parse_documents(v)?,
        None => Vec::new(),
    };
    let gold_evidence = match mapping.lookup(&value, "gold_evidence") {
        Some(v) => parse_gold(v)?,
        None => Vec::new(),
    };

    Ok(ClaimRecord {
        id,
        text,
        label,
        domain,
        gold_evidence,
        documents,
        source,
    })
}

fn parse_documents(v: &Value) -> Result<Vec<EvidenceDocument>, String> {
    let items: Vec<&Value> = match v {
        Value::Array(a) => a.iter().collect(),
        Value::String(_) => vec![v],
        _ => return Err("field \"documents\" must be an array or string".into()),
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| match item {
            Value::String(s) => Ok(EvidenceDocument::new(format!("d{i}"), s.clone())),
            Value::Object(o) => {
                let text = o
                    .get("text")
                    .and_then(Value::as_str)
                    .ok_or_else(|| format!("document {i} has no string \"text\""))?;
                let doc_id = match o.get("doc_id") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    _ => format!("d{i}"),
                };
                Ok(EvidenceDocument::new(doc_id, text))
            }
            _ => Err(format!("document {i} must be a string or object")),
        })
        .collect()
}

fn parse_gold(v: &Value) -> Result<Vec<GoldEvidence>, String> {
    let items: Vec<&Value> = match v {
        Value::Array(a) => a.iter().collect(),
        Value::String(_) => vec![v],
        _ => return Err("field \"gold_evidence\" must be an array or string".into()),
    };
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, item)| match item {
            Value::String(s) if s.trim().is_empty() => None,
            Value::String(s) => Some(Ok(GoldEvidence::Literal(s.clone()))),
            Value::Object(o) => {
                let doc_id = match o.get("doc_id") {
                    Some(Value::String(s)) => Some(s.clone()),
                    Some(Value::Number(n)) => Some(n.to_string()),
                    _ => None,
                };
                let idx = o.get("sent_index").and_then(Value::as_u64);
                Some(match (doc_id, idx) {
                    (Some(doc_id), Some(idx)) => Ok(GoldEvidence::Indexed {
                        doc_id,
                        sent_index: idx as usize,
                    }),
                    _ => Err(format!("gold evidence {i} needs doc_id and sent_index")),
                })
            }
            _ => Some(Err(format!("gold evidence {i} must be a string or object"))),
        })
        .collect()
}
