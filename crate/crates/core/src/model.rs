//! Corpus data model: characters, attribute bags, labels and embeddings.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::RangeInclusive;

use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Gold or predicted archetype label. `Detective` is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Detective,
    NonDetective,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Detective => "detective",
            Label::NonDetective => "non_detective",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "detective" => Some(Label::Detective),
            "non_detective" => Some(Label::NonDetective),
            _ => None,
        }
    }

    pub fn is_detective(self) -> bool {
        self == Label::Detective
    }

    /// +1 for the positive class, -1 otherwise.
    pub fn sign(self) -> f64 {
        if self.is_detective() {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Attribute category. Variants are declared in the lexicographic order of
/// their names so that the derived `Ord` matches string ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    AgentVerbs,
    Modifiers,
    PatientVerbs,
    Possessives,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::AgentVerbs,
        Category::Modifiers,
        Category::PatientVerbs,
        Category::Possessives,
    ];

    /// Categories used by default for both representations. Patient verbs
    /// are left out.
    pub const DEFAULT: [Category; 3] = [Category::AgentVerbs, Category::Modifiers, Category::Possessives];

    pub fn name(self) -> &'static str {
        match self {
            Category::AgentVerbs => "agent_verbs",
            Category::Modifiers => "modifiers",
            Category::PatientVerbs => "patient_verbs",
            Category::Possessives => "possessives",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Multiset of lemma occurrences per attribute category.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributeBag {
    pub agent_verbs: BTreeMap<String, u32>,
    pub patient_verbs: BTreeMap<String, u32>,
    pub modifiers: BTreeMap<String, u32>,
    pub possessives: BTreeMap<String, u32>,
}

impl AttributeBag {
    pub fn get(&self, category: Category) -> &BTreeMap<String, u32> {
        match category {
            Category::AgentVerbs => &self.agent_verbs,
            Category::PatientVerbs => &self.patient_verbs,
            Category::Modifiers => &self.modifiers,
            Category::Possessives => &self.possessives,
        }
    }

    pub fn get_mut(&mut self, category: Category) -> &mut BTreeMap<String, u32> {
        match category {
            Category::AgentVerbs => &mut self.agent_verbs,
            Category::PatientVerbs => &mut self.patient_verbs,
            Category::Modifiers => &mut self.modifiers,
            Category::Possessives => &mut self.possessives,
        }
    }

    pub fn add(&mut self, category: Category, lemma: impl Into<String>, count: u32) {
        if count > 0 {
            *self.get_mut(category).entry(lemma.into()).or_insert(0) += count;
        }
    }

    pub fn count(&self, category: Category, lemma: &str) -> u32 {
        self.get(category).get(lemma).copied().unwrap_or(0)
    }

    /// Total number of occurrences in a category.
    pub fn total(&self, category: Category) -> u64 {
        self.get(category).values().map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        Category::ALL.iter().all(|&c| self.get(c).is_empty())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterRecord {
    pub character_id: String,
    /// Cross-novel identity of the same figure (e.g. a recurring detective).
    pub figure_id: Option<String>,
    pub novel_id: String,
    pub author: String,
    pub year: i32,
    /// Coreference-chain length.
    pub mention_count: u64,
    pub attributes: AttributeBag,
    pub label: Option<Label>,
}

impl CharacterRecord {
    pub fn new(character_id: impl Into<String>, novel_id: impl Into<String>, author: impl Into<String>, year: i32) -> Self {
        CharacterRecord {
            character_id: character_id.into(),
            figure_id: None,
            novel_id: novel_id.into(),
            author: author.into(),
            year,
            mention_count: 0,
            attributes: AttributeBag::default(),
            label: None,
        }
    }

    /// Normalized figure identity used for character-level grouping.
    pub fn figure(&self) -> String {
        self.figure_id
            .as_deref()
            .unwrap_or(&self.character_id)
            .trim()
            .to_lowercase()
    }
}

/// Dense per-character vectors of a fixed dimension, in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    rows: IndexMap<String, Vec<f32>>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(EmbeddingMatrix { dim, rows: IndexMap::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding of `{id}`")));
        }
        if self.rows.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate embedding id `{id}`")));
        }
        self.rows.insert(id, vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.rows.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub characters: Vec<CharacterRecord>,
    pub embeddings: Option<EmbeddingMatrix>,
}

impl Dataset {
    pub fn new(characters: Vec<CharacterRecord>) -> Self {
        Dataset { characters, embeddings: None }
    }

    pub fn with_embeddings(mut self, embeddings: EmbeddingMatrix) -> Self {
        self.embeddings = Some(embeddings);
        self
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    /// Indices of characters carrying a gold label, in dataset order.
    pub fn labeled_indices(&self) -> Vec<usize> {
        self.characters
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.label.map(|_| i))
            .collect()
    }

    pub fn index_by_id(&self) -> HashMap<&str, usize> {
        self.characters
            .iter()
            .enumerate()
            .map(|(i, c)| (c.character_id.as_str(), i))
            .collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        self.characters.iter().fold((0, 0), |(pos, neg), c| match c.label {
            Some(Label::Detective) => (pos + 1, neg),
            Some(Label::NonDetective) => (pos, neg + 1),
            None => (pos, neg),
        })
    }

    /// Embedding of a character widened to `f64`.
    pub fn embedding(&self, character_id: &str) -> Result<Vec<f64>> {
        self.embeddings
            .as_ref()
            .and_then(|m| m.get(character_id))
            .map(|v| v.iter().map(|&x| f64::from(x)).collect())
            .ok_or_else(|| Error::MissingEmbedding(character_id.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub character_id: String,
    pub reason: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.character_id, self.reason)
    }
}

#[derive(Clone, Debug)]
pub struct ValidationConfig {
    pub year_range: RangeInclusive<i32>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { year_range: 1700..=2100 }
    }
}

/// Checks every data-model invariant and reports violations as findings.
pub fn validate_dataset(dataset: &Dataset, config: &ValidationConfig) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut push = |id: &str, reason: String| {
        findings.push(Finding { character_id: id.to_string(), reason });
    };
    let mut seen = HashSet::new();
    for c in &dataset.characters {
        let id = c.character_id.as_str();
        if id.trim().is_empty() {
            push(id, "empty character_id".into());
        }
        if !seen.insert(id) {
            push(id, "duplicate character_id".into());
        }
        if !config.year_range.contains(&c.year) {
            push(id, format!("year out of range ({})", c.year));
        }
        for category in Category::ALL {
            for (lemma, &count) in c.attributes.get(category) {
                if lemma.trim().is_empty() {
                    push(id, format!("empty lemma in {category}"));
                } else if lemma.to_lowercase() != *lemma {
                    push(id, format!("lemma `{lemma}` in {category} is not lowercase"));
                }
                if count == 0 {
                    push(id, format!("zero count for `{lemma}` in {category}"));
                }
            }
        }
        if let (Some(_), Some(matrix)) = (c.label, &dataset.embeddings) {
            if !matrix.contains(id) {
                push(id, "missing embedding".into());
            }
        }
    }
    if let Some(matrix) = &dataset.embeddings {
        for (id, vector) in matrix.iter() {
            if vector.len() != matrix.dim() {
                push(id, format!("embedding has {} components, expected {}", vector.len(), matrix.dim()));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                push(id, "non-finite embedding component".into());
            }
        }
    }
    findings
}
