//! Seeded synthetic corpora with planted structure, used by tests, benches
//! and the CLI `synth` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{Category, CharacterRecord, Dataset, EmbeddingMatrix, Label};

/// A two-class corpus where the classes differ in both attribute vocabulary
/// and embedding centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub detectives: usize,
    pub others: usize,
    pub authors: usize,
    pub novels_per_author: usize,
    /// Lemmas per class and category.
    pub lemmas_per_class: usize,
    /// Share of each class's lemmas never used by the other class.
    pub exclusive_fraction: f64,
    pub tokens_per_category: usize,
    pub embedding_dim: usize,
    /// Distance between class centroids in units of the per-dimension
    /// within-class standard deviation.
    pub separation: f64,
    pub years: (i32, i32),
    /// Probability that a detective is a recurring figure of its author.
    pub recurring_share: f64,
    /// When set, detectives only appear in novels published in or after
    /// this year.
    pub detectives_from: Option<i32>,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            detectives: 180,
            others: 420,
            authors: 30,
            novels_per_author: 4,
            lemmas_per_class: 60,
            exclusive_fraction: 0.3,
            tokens_per_category: 12,
            embedding_dim: 16,
            separation: 4.0,
            years: (1850, 1990),
            recurring_share: 0.3,
            detectives_from: None,
            seed: 7,
        }
    }
}

fn class_lemmas(category: Category, label: Label, config: &PlantedConfig) -> Vec<String> {
    let exclusive = (config.lemmas_per_class as f64 * config.exclusive_fraction).round() as usize;
    let shared = config.lemmas_per_class - exclusive;
    let prefix = &category.name()[..3];
    let mut lemmas: Vec<String> = (0..shared).map(|i| format!("{prefix}_common{i:03}")).collect();
    let tag = if label.is_detective() { "det" } else { "oth" };
    lemmas.extend((0..exclusive).map(|i| format!("{prefix}_{tag}{i:03}")));
    lemmas
}

/// Generates the planted corpus with embeddings.
pub fn planted_corpus(config: &PlantedConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total = config.detectives + config.others;
    let mut labels: Vec<Label> =
        std::iter::repeat_n(Label::Detective, config.detectives).chain(std::iter::repeat_n(Label::NonDetective, config.others)).collect();
    labels.shuffle(&mut rng);

    let novels = config.authors.max(1) * config.novels_per_author.max(1);
    let novel_years: Vec<i32> = (0..novels).map(|_| rng.random_range(config.years.0..=config.years.1)).collect();
    let eligible: Vec<usize> = match config.detectives_from {
        Some(from) => (0..novels).filter(|&n| novel_years[n] >= from).collect(),
        None => (0..novels).collect(),
    };
    assert!(!eligible.is_empty() || config.detectives == 0, "no novel is late enough to hold detectives");
    let vocab: Vec<[Vec<String>; 2]> = Category::ALL
        .iter()
        .map(|&c| [class_lemmas(c, Label::Detective, config), class_lemmas(c, Label::NonDetective, config)])
        .collect();

    let dim = config.embedding_dim.max(1);
    let half = config.separation / 2.0 / (dim as f64).sqrt();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut embeddings = EmbeddingMatrix::new(dim).expect("positive dimension");

    let mut characters = Vec::with_capacity(total);
    for (i, &label) in labels.iter().enumerate() {
        let mut novel = i % novels;
        if label.is_detective() && !eligible.contains(&novel) {
            novel = eligible[rng.random_range(0..eligible.len())];
        }
        let author = novel / config.novels_per_author.max(1);
        let id = format!("c{i:05}");
        let mut c = CharacterRecord::new(&id, format!("novel{novel:04}"), format!("author{author:03}"), novel_years[novel]);
        c.label = Some(label);
        c.mention_count = rng.random_range(5..=400);
        if label.is_detective() && rng.random_bool(config.recurring_share.clamp(0.0, 1.0)) {
            c.figure_id = Some(format!("author{author:03}-sleuth"));
        }
        let side = usize::from(!label.is_detective());
        for (k, &category) in Category::ALL.iter().enumerate() {
            let pool = &vocab[k][side];
            for _ in 0..config.tokens_per_category {
                c.attributes.add(category, pool[rng.random_range(0..pool.len())].clone(), 1);
            }
        }
        let vector: Vec<f32> = (0..dim).map(|_| (label.sign() * half + noise.sample(&mut rng)) as f32).collect();
        embeddings.insert(id, vector).expect("generated ids are unique");
        characters.push(c);
    }
    Dataset::new(characters).with_embeddings(embeddings)
}

/// Characters spread over many novels, with mention counts drawn from a
/// heavy-tailed distribution and a random share of detectives. Attribute
/// bags are left empty.
pub fn multi_novel_corpus(novels: usize, per_novel: usize, detective_share: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut characters = Vec::with_capacity(novels * per_novel);
    for n in 0..novels {
        let year = rng.random_range(1840..=2000);
        for j in 0..per_novel {
            let mut c = CharacterRecord::new(format!("n{n:05}-c{j:03}"), format!("n{n:05}"), format!("author{:04}", n / 5), year);
            let u: f64 = rng.random_range(0.0..1.0);
            c.mention_count = 1 + (2000.0 * u.powi(4)) as u64;
            c.label = Some(if rng.random_bool(detective_share) { Label::Detective } else { Label::NonDetective });
            characters.push(c);
        }
    }
    Dataset::new(characters)
}

/// `k` Gaussian blobs of `per_blob` points in `dim` dimensions with unit
/// spread, centers pairwise `separation` apart. Returns rows and true labels.
pub fn gaussian_blobs(k: usize, per_blob: usize, dim: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    assert!(dim >= k, "need at least k dimensions for equidistant centers");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    // Scaled basis vectors are pairwise separation apart.
    let scale = separation / std::f64::consts::SQRT_2;
    let mut rows = Vec::with_capacity(k * per_blob);
    let mut truth = Vec::with_capacity(k * per_blob);
    for b in 0..k {
        for _ in 0..per_blob {
            rows.push((0..dim).map(|d| if d == b { scale } else { 0.0 } + noise.sample(&mut rng)).collect());
            truth.push(b);
        }
    }
    (rows, truth)
}
