//! Character representations: MFW bag-of-words and mean-pooled embeddings.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{Category, CharacterRecord, Dataset};
use crate::par;

/// A vocabulary key. The same lemma in two categories gives two features.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub category: Category,
    pub lemma: String,
}

impl Term {
    pub fn new(category: Category, lemma: impl Into<String>) -> Self {
        Term { category, lemma: lemma.into() }
    }
}

/// Most-frequent (lemma, category) pairs, ordered by descending corpus count
/// with ties broken by (category, lemma).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<(Term, u64)>,
    index: HashMap<Category, HashMap<String, usize>>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms in the given order.
    pub fn from_terms(terms: Vec<(Term, u64)>) -> Result<Self> {
        let mut index: HashMap<Category, HashMap<String, usize>> = HashMap::new();
        for (i, (t, _)) in terms.iter().enumerate() {
            if index.entry(t.category).or_default().insert(t.lemma.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary term {}/{}", t.category, t.lemma)));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().map(|(t, _)| t)
    }

    pub fn entries(&self) -> &[(Term, u64)] {
        &self.terms
    }

    pub fn position(&self, category: Category, lemma: &str) -> Option<usize> {
        self.index.get(&category)?.get(lemma).copied()
    }

    pub fn contains_lemma(&self, lemma: &str) -> bool {
        self.terms.iter().any(|(t, _)| t.lemma == lemma)
    }

    /// CSV `rank,category,lemma,count`, rank starting at 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "category", "lemma", "count"])?;
        for (rank, (term, count)) in self.terms.iter().enumerate() {
            w.write_record([(rank + 1).to_string(), term.category.to_string(), term.lemma.clone(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Top-`size` terms by total occurrence count over `characters`.
pub fn build_vocabulary<'a, I>(characters: I, size: usize, categories: &[Category]) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a CharacterRecord>,
{
    if size == 0 {
        return Err(Error::invalid("vocabulary size must be positive"));
    }
    let mut counts: HashMap<Term, u64> = HashMap::new();
    for c in characters {
        for &category in categories {
            for (lemma, &n) in c.attributes.get(category) {
                *counts.entry(Term::new(category, lemma.as_str())).or_insert(0) += u64::from(n);
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::invalid("no attributes in the selected categories"));
    }
    let mut ranked: Vec<(Term, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|(ta, ca), (tb, cb)| cb.cmp(ca).then_with(|| ta.cmp(tb)));
    ranked.truncate(size);
    Vocabulary::from_terms(ranked)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Bow,
    Embedding,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
}

/// Relative frequency of each vocabulary term among the character's
/// in-vocabulary attributes. All-zero when none is in the vocabulary.
pub fn bow_vector(character: &CharacterRecord, vocab: &Vocabulary) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    let mut total = 0u64;
    for category in Category::ALL {
        for (lemma, &n) in character.attributes.get(category) {
            if let Some(i) = vocab.position(category, lemma) {
                values[i] += f64::from(n);
                total += u64::from(n);
            }
        }
    }
    if total > 0 {
        let t = total as f64;
        values.iter_mut().for_each(|v| *v /= t);
    }
    FeatureVector { values, kind: FeatureKind::Bow }
}

/// Element-wise mean of attribute vectors, summed in input order.
///
/// Patient-verb attribute vectors must be excluded by the caller.
pub fn aggregate_embedding(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or_else(|| Error::invalid("no attributes to pool"))?;
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// How characters are turned into feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum Featurizer {
    Bow { vocab_size: usize, categories: Vec<Category> },
    /// Rows of the dataset's embedding matrix.
    Embedding,
}

impl Featurizer {
    pub fn bow(vocab_size: usize) -> Self {
        Featurizer::Bow { vocab_size, categories: Category::DEFAULT.to_vec() }
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            Featurizer::Bow { .. } => FeatureKind::Bow,
            Featurizer::Embedding => FeatureKind::Embedding,
        }
    }

    /// Fits any data-dependent state on the given characters only.
    pub fn fit(&self, dataset: &Dataset, indices: &[usize]) -> Result<FittedFeaturizer> {
        match self {
            Featurizer::Bow { vocab_size, categories } => {
                let vocab = build_vocabulary(indices.iter().map(|&i| &dataset.characters[i]), *vocab_size, categories)?;
                Ok(FittedFeaturizer::Bow(vocab))
            }
            Featurizer::Embedding => {
                let m = dataset
                    .embeddings
                    .as_ref()
                    .ok_or_else(|| Error::invalid("embedding features requested but no embeddings loaded"))?;
                Ok(FittedFeaturizer::Embedding { dim: m.dim() })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FittedFeaturizer {
    Bow(Vocabulary),
    Embedding { dim: usize },
}

impl FittedFeaturizer {
    pub fn dim(&self) -> usize {
        match self {
            FittedFeaturizer::Bow(v) => v.len(),
            FittedFeaturizer::Embedding { dim } => *dim,
        }
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        match self {
            FittedFeaturizer::Bow(v) => Some(v),
            FittedFeaturizer::Embedding { .. } => None,
        }
    }

    pub fn transform_one(&self, dataset: &Dataset, character: &CharacterRecord) -> Result<Vec<f64>> {
        match self {
            FittedFeaturizer::Bow(vocab) => Ok(bow_vector(character, vocab).values),
            FittedFeaturizer::Embedding { dim } => {
                let v = dataset.embedding(&character.character_id)?;
                if v.len() != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, found: v.len() });
                }
                Ok(v)
            }
        }
    }

    /// Feature rows for `indices`, in the same order.
    pub fn transform(&self, dataset: &Dataset, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        par::map(indices, |&i| self.transform_one(dataset, &dataset.characters[i]))
            .into_iter()
            .collect()
    }
}
