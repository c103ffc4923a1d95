//! Line-delimited characters file.
//!
//! Each non-empty line is a JSON object:
//!
//! ```text
//! {"character_id":"c1","novel_id":"n1","author":"a","year":1901,"mention_count":12,
//!  "attributes":{"agent_verbs":["dire","dire"],"modifiers":[],"possessives":["pipe"]},
//!  "label":"detective"}
//! ```
//!
//! Arrays list lemma occurrences with repetition. `label` and `figure_id` are
//! optional, unknown keys are ignored and unknown attribute categories are
//! skipped with a warning.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttributeBag, Category, CharacterRecord, Dataset, Label};

#[derive(Deserialize)]
struct RawRecord {
    character_id: String,
    #[serde(default)]
    figure_id: Option<String>,
    novel_id: String,
    author: String,
    year: i64,
    mention_count: u64,
    #[serde(default)]
    attributes: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    character_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    figure_id: Option<&'a str>,
    novel_id: &'a str,
    author: &'a str,
    year: i32,
    mention_count: u64,
    attributes: OutAttributes,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'static str>,
}

#[derive(Serialize)]
struct OutAttributes {
    agent_verbs: Vec<String>,
    patient_verbs: Vec<String>,
    modifiers: Vec<String>,
    possessives: Vec<String>,
}

fn expand(bag: &BTreeMap<String, u32>) -> Vec<String> {
    bag.iter()
        .flat_map(|(lemma, &n)| std::iter::repeat_n(lemma.clone(), n as usize))
        .collect()
}

fn parse_line(line: &str, lineno: usize) -> Result<CharacterRecord> {
    let err = |message: String| Error::Parse { line: lineno, message };
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;

    let character_id = raw.character_id.trim().to_string();
    if character_id.is_empty() {
        return Err(err("empty character_id".into()));
    }
    let year = i32::try_from(raw.year).map_err(|_| err(format!("year {} out of integer range", raw.year)))?;
    let label = match raw.label.as_deref() {
        None => None,
        Some(s) => Some(Label::parse(s).ok_or_else(|| err(format!("unknown label `{s}`")))?),
    };

    let mut attributes = AttributeBag::default();
    for (key, lemmas) in &raw.attributes {
        let Some(category) = Category::parse(key) else {
            log::warn!("line {lineno}: ignoring unknown attribute category `{key}`");
            continue;
        };
        for lemma in lemmas {
            let lemma = lemma.trim().to_lowercase();
            if lemma.is_empty() {
                return Err(err(format!("empty lemma in {category}")));
            }
            attributes.add(category, lemma, 1);
        }
    }

    Ok(CharacterRecord {
        character_id,
        figure_id: raw.figure_id.map(|f| f.trim().to_string()).filter(|f| !f.is_empty()),
        novel_id: raw.novel_id,
        author: raw.author,
        year,
        mention_count: raw.mention_count,
        attributes,
        label,
    })
}

/// Parses a characters stream into a dataset without embeddings.
pub fn parse_characters<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut characters = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, lineno)?;
        if !seen.insert(record.character_id.clone()) {
            return Err(Error::DuplicateId { line: lineno, id: record.character_id });
        }
        characters.push(record);
    }
    Ok(Dataset::new(characters))
}

pub fn read_characters_file(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_characters(BufReader::new(File::open(path)?))
}

/// Writes one canonical line per character.
pub fn write_characters<W: Write>(characters: &[CharacterRecord], mut writer: W) -> Result<()> {
    for c in characters {
        let out = OutRecord {
            character_id: &c.character_id,
            figure_id: c.figure_id.as_deref(),
            novel_id: &c.novel_id,
            author: &c.author,
            year: c.year,
            mention_count: c.mention_count,
            attributes: OutAttributes {
                agent_verbs: expand(&c.attributes.agent_verbs),
                patient_verbs: expand(&c.attributes.patient_verbs),
                modifiers: expand(&c.attributes.modifiers),
                possessives: expand(&c.attributes.possessives),
            },
            label: c.label.map(Label::as_str),
        };
        serde_json::to_writer(&mut writer, &out).map_err(|e| Error::Format(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_characters_file(characters: &[CharacterRecord], path: impl AsRef<Path>) -> Result<()> {
    write_characters(characters, BufWriter::new(File::create(path)?))
}
