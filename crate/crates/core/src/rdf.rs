//! WebNLG-style RDF triple sets.
//!
//! Each triple is written as `<rel> <S> subject <V> predicate <O> object`.
//! Entity underscores become spaces and camelCase predicates are split into
//! lower-case words (`birthPlace` -> `birth place`).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokens::{TokenSeq, OBJECT, PREDICATE, REL, SPECIAL_TOKENS, SUBJECT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("entry {id}: empty {field}")]
    Empty { id: String, field: &'static str },
    #[error("entry {id}: reserved token {token} appears in entity text")]
    ReservedToken { id: String, token: String },
    #[error("malformed triple {0:?}")]
    MalformedTriple(String),
    #[error("xml: {0}")]
    Xml(String),
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RdfTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl RdfTriple {
    pub fn new(s: &str, p: &str, o: &str) -> Self {
        RdfTriple {
            subject: s.trim().to_string(),
            predicate: p.trim().to_string(),
            object: o.trim().to_string(),
        }
    }

    /// Parse the WebNLG `subject | predicate | object` form.
    pub fn parse_piped(text: &str) -> Result<Self, RdfError> {
        let parts: Vec<&str> = text.split(" | ").collect();
        match parts.as_slice() {
            [s, p, o] => Ok(RdfTriple::new(s, p, o)),
            _ => Err(RdfError::MalformedTriple(text.trim().to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdfEntry {
    pub id: String,
    pub triples: Vec<RdfTriple>,
    pub references: Vec<String>,
    pub category: String,
}

impl RdfEntry {
    pub fn validate(&self) -> Result<(), RdfError> {
        let empty = |field| RdfError::Empty {
            id: self.id.clone(),
            field,
        };
        if self.triples.is_empty() {
            return Err(empty("triple set"));
        }
        if self.references.is_empty() {
            return Err(empty("reference set"));
        }
        for t in &self.triples {
            for (field, text) in [
                ("subject", &t.subject),
                ("predicate", &t.predicate),
                ("object", &t.object),
            ] {
                if text.trim().is_empty() {
                    return Err(empty(field));
                }
                if let Some(tok) = SPECIAL_TOKENS.iter().find(|s| text.contains(*s)) {
                    return Err(RdfError::ReservedToken {
                        id: self.id.clone(),
                        token: tok.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.triples.len()
    }
}

/// `fatherOf` -> `father of`; splits at lower/digit-to-upper boundaries.
pub fn split_camel_case(predicate: &str) -> String {
    let mut out = String::with_capacity(predicate.len() + 4);
    let mut prev: Option<char> = None;
    for c in predicate.chars() {
        if c.is_uppercase() && prev.is_some_and(|p| p.is_lowercase() || p.is_ascii_digit()) {
            out.push(' ');
        }
        out.extend(c.to_lowercase());
        prev = Some(c);
    }
    out
}

fn entity_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
}

pub fn linearize_rdf(entry: &RdfEntry) -> TokenSeq {
    let mut out = Vec::new();
    for t in &entry.triples {
        out.push(REL.to_string());
        out.push(SUBJECT.to_string());
        out.extend(entity_words(&t.subject));
        out.push(PREDICATE.to_string());
        out.extend(entity_words(&split_camel_case(&t.predicate)));
        out.push(OBJECT.to_string());
        out.extend(entity_words(&t.object));
    }
    TokenSeq::new(out)
}

/// Uniformly permute the triple order; references are untouched.
pub fn randomize_rdf<R: Rng + ?Sized>(entry: &RdfEntry, rng: &mut R) -> RdfEntry {
    let mut out = entry.clone();
    out.triples.shuffle(rng);
    out
}

/// Read a WebNLG XML benchmark file. Uses `modifiedtripleset` triples and
/// `lex` references (either direct text or a nested `<text>` element).
pub fn read_webnlg_xml(xml: &str) -> Result<Vec<RdfEntry>, RdfError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| RdfError::Xml(e.to_string()))?;
    let mut out = Vec::new();
    for (i, entry) in doc
        .descendants()
        .filter(|n| n.has_tag_name("entry"))
        .enumerate()
    {
        let id = entry
            .attribute("eid")
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{}", i + 1));
        let category = entry.attribute("category").unwrap_or("").to_string();
        let mut triples = Vec::new();
        for set in entry.children().filter(|n| n.has_tag_name("modifiedtripleset")) {
            for t in set.children().filter(|n| n.has_tag_name("mtriple")) {
                triples.push(RdfTriple::parse_piped(t.text().unwrap_or(""))?);
            }
        }
        let references = entry
            .children()
            .filter(|n| n.has_tag_name("lex"))
            .filter_map(|lex| {
                let text = lex
                    .children()
                    .find(|n| n.has_tag_name("text"))
                    .and_then(|n| n.text())
                    .or_else(|| lex.text())?;
                let text = text.trim();
                (!text.is_empty()).then(|| text.to_string())
            })
            .collect();
        let e = RdfEntry {
            id,
            triples,
            references,
            category,
        };
        e.validate()?;
        out.push(e);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonEntry {
    #[serde(default)]
    id: Option<String>,
    triples: Vec<[String; 3]>,
    refs: Vec<String>,
    #[serde(default)]
    category: String,
}

/// Read the JSONL form `{"triples": [[s, p, o], ...], "refs": [...], "category": ...}`.
pub fn read_rdf_jsonl(text: &str) -> Result<Vec<RdfEntry>, RdfError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let j: JsonEntry = serde_json::from_str(line).map_err(|e| RdfError::Json {
            line: i + 1,
            message: e.to_string(),
        })?;
        let e = RdfEntry {
            id: j.id.unwrap_or_else(|| format!("#{}", i + 1)),
            triples: j
                .triples
                .iter()
                .map(|[s, p, o]| RdfTriple::new(s, p, o))
                .collect(),
            references: j.refs,
            category: j.category,
        };
        e.validate()?;
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn ned() -> RdfEntry {
        RdfEntry {
            id: "1".into(),
            triples: vec![
                RdfTriple::new("Ned", "fatherOf", "Rod"),
                RdfTriple::new("Ned", "fatherOf", "Todd"),
            ],
            references: vec!["Ned is the father of Rod and Todd.".into()],
            category: "Simpsons".into(),
        }
    }

    #[test]
    fn linearizes_with_special_tokens() {
        assert_eq!(
            linearize_rdf(&ned()).to_string(),
            "<rel> <S> Ned <V> father of <O> Rod <rel> <S> Ned <V> father of <O> Todd"
        );
        let mut one = ned();
        one.triples.truncate(1);
        assert_eq!(linearize_rdf(&one).iter().filter(|t| *t == REL).count(), 1);
    }

    #[test]
    fn camel_case_matches_char_oracle() {
        // oracle: insert a space before every uppercase letter that follows a
        // lowercase letter or digit, then lowercase
        let oracle = |p: &str| {
            let cs: Vec<char> = p.chars().collect();
            let mut s = String::new();
            for (i, c) in cs.iter().enumerate() {
                if i > 0 && c.is_ascii_uppercase() && (cs[i - 1].is_ascii_lowercase() || cs[i - 1].is_ascii_digit()) {
                    s.push(' ');
                }
                s.push(c.to_ascii_lowercase());
            }
            s
        };
        for p in [
            "birthPlace", "fatherOf", "leaderName", "ISBN_number", "areaCode", "elevationAboveTheSeaLevel_(in_metres)",
            "runwayLength", "1stRunwaySurfaceType", "dbo", "OCLC_number",
        ] {
            assert_eq!(split_camel_case(p), oracle(p), "{p}");
        }
        assert_eq!(split_camel_case("birthPlace"), "birth place");
    }

    #[test]
    fn token_count_formula() {
        let e = RdfEntry {
            id: "x".into(),
            triples: vec![RdfTriple::new("Aarhus_Airport", "runwayLength", "2776.0")],
            references: vec!["r".into()],
            category: String::new(),
        };
        // 4 markers + 2 subject words + 2 predicate words + 1 object word
        assert_eq!(linearize_rdf(&e).len(), 9);
    }

    #[test]
    fn randomize_single_triple_is_identity() {
        let mut one = ned();
        one.triples.truncate(1);
        for s in 0..10 {
            assert_eq!(randomize_rdf(&one, &mut seeded(s)), one);
        }
    }

    #[test]
    fn randomize_two_triples_is_fair() {
        let e = ned();
        let n = 10_000;
        let kept = (0..n)
            .filter(|&s| randomize_rdf(&e, &mut seeded(s)).triples == e.triples)
            .count();
        let frac = kept as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn validation() {
        let mut e = ned();
        e.triples[0].object = "a <rel> b".into();
        assert!(matches!(e.validate(), Err(RdfError::ReservedToken { .. })));
        let mut e = ned();
        e.references.clear();
        assert!(matches!(e.validate(), Err(RdfError::Empty { .. })));
        assert!(RdfTriple::parse_piped("a | b").is_err());
    }

    #[test]
    fn reads_xml() {
        let xml = r#"<benchmark><entries>
<entry category="Airport" eid="Id1" size="1">
  <originaltripleset><otriple>Aarhus_Airport | runwayLength | 2776.0</otriple></originaltripleset>
  <modifiedtripleset><mtriple>Aarhus_Airport | runwayLength | 2776.0</mtriple></modifiedtripleset>
  <lex comment="good" lid="Id1">The runway length of Aarhus Airport is 2776.0.</lex>
  <lex comment="good" lid="Id2"><sortedtripleset/><text>Aarhus Airport has a 2776.0 runway.</text></lex>
</entry>
</entries></benchmark>"#;
        let es = read_webnlg_xml(xml).unwrap();
        assert_eq!(es.len(), 1);
        assert_eq!(es[0].id, "Id1");
        assert_eq!(es[0].category, "Airport");
        assert_eq!(es[0].references.len(), 2);
        assert_eq!(es[0].triples[0].predicate, "runwayLength");
    }

    #[test]
    fn reads_jsonl() {
        let text = r#"{"triples": [["Ned", "fatherOf", "Rod"]], "refs": ["Ned is Rod's father."], "category": "Simpsons"}

{"id": "b", "triples": [["A", "p", "B"], ["B", "q", "C"]], "refs": ["x", "y"]}"#;
        let es = read_rdf_jsonl(text).unwrap();
        assert_eq!(es.len(), 2);
        assert_eq!(es[0].id, "#1");
        assert_eq!(es[1].edge_count(), 2);
        assert!(matches!(read_rdf_jsonl("{bad"), Err(RdfError::Json { line: 1, .. })));
    }
}
