//! Semantic clustering of character embeddings.
//!
//! k-means runs on the full-dimension embeddings by default. Two-dimensional
//! coordinates for plotting come either from an external CSV
//! (`character_id,x,y`) or from the built-in PCA projection.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distinct::{group_distinctiveness, DistinctRow, Group};
use crate::error::{Error, Result};
use crate::model::{Category, CharacterRecord, Dataset};
use crate::par;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows.first().ok_or_else(|| Error::invalid("no rows"))?.len();
    for r in rows {
        if r.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input matrix".into()));
        }
    }
    Ok(dim)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    /// One `out_dim` vector per input row.
    pub coords: Vec<Vec<f64>>,
    /// Unit principal axes, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component.
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    pub mean: Vec<f64>,
}

impl Projection {
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    /// Sum of squared distances between each row and its reconstruction from
    /// the retained components.
    pub fn reconstruction_error(&self, rows: &[Vec<f64>]) -> f64 {
        rows.iter()
            .zip(&self.coords)
            .map(|(row, coord)| {
                let mut recon = self.mean.clone();
                for (c, axis) in coord.iter().zip(&self.components) {
                    for (r, a) in recon.iter_mut().zip(axis) {
                        *r += c * a;
                    }
                }
                sq_dist(row, &recon)
            })
            .sum()
    }
}

fn orthonormal_fill(existing: &[Vec<f64>], dim: usize) -> Vec<f64> {
    for e in 0..dim {
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        for u in existing {
            let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
    unreachable!("out_dim ≤ dim guarantees a free direction")
}

/// Projects mean-centered rows onto the top `out_dim` principal axes. Each
/// axis is oriented so its largest-magnitude loading is positive.
pub fn pca_project(rows: &[Vec<f64>], out_dim: usize) -> Result<Projection> {
    let dim = check_rows(rows)?;
    let n = rows.len();
    if out_dim == 0 || out_dim > dim || n < out_dim.max(2) {
        return Err(Error::invalid(format!("cannot project {n}×{dim} data onto {out_dim} dimensions")));
    }
    let mut mean = vec![0.0; dim];
    for r in rows {
        mean.iter_mut().zip(r).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, dim, |i, j| rows[i][j] - mean[j]);
    let denom = (n - 1) as f64;
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / denom;
    if total_variance <= 0.0 {
        return Err(Error::invalid("zero-variance data"));
    }

    // Eigendecompose the smaller of the covariance and Gram matrices.
    let use_gram = dim > n;
    let scatter = if use_gram { &centered * centered.transpose() } else { centered.transpose() * &centered };
    let eig = SymmetricEigen::new(scatter);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let negligible = eig.eigenvalues[order[0]].max(0.0) * 1e-12;
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(out_dim);
    let mut explained_variance = Vec::with_capacity(out_dim);
    for &j in order.iter().take(out_dim) {
        let lambda = eig.eigenvalues[j].max(0.0);
        let mut axis: Vec<f64> = if lambda <= negligible {
            orthonormal_fill(&components, dim)
        } else if use_gram {
            let u = eig.eigenvectors.column(j);
            let v = centered.transpose() * u;
            let norm = v.norm();
            v.iter().map(|x| x / norm).collect()
        } else {
            eig.eigenvectors.column(j).iter().copied().collect()
        };
        let pivot = axis.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
        explained_variance.push(lambda / denom);
        components.push(axis);
    }
    let coords = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|axis| centered.row(i).iter().zip(axis).map(|(x, a)| x * a).sum())
                .collect()
        })
        .collect();
    Ok(Projection { coords, components, explained_variance, total_variance, mean })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig { k, restarts: 10, max_iter: 300, seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub restart: usize,
}

pub fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    kmeans_with(rows, &KMeansConfig { restarts, ..KMeansConfig::new(k, seed) })
}

/// Best of `restarts` k-means++ initialized Lloyd runs, chosen by
/// (inertia, restart index). Restarts run concurrently.
pub fn kmeans_with(rows: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeansResult> {
    check_rows(rows)?;
    if config.k < 1 || config.k > rows.len() {
        return Err(Error::invalid(format!("k = {} must lie in [1, {}]", config.k, rows.len())));
    }
    let runs = par::map_range(config.restarts.max(1), |r| lloyd(rows, config, r));
    Ok(runs
        .into_iter()
        .min_by(|a, b| a.inertia.total_cmp(&b.inertia).then(a.restart.cmp(&b.restart)))
        .expect("at least one restart"))
}

fn plus_plus_init(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![rows[rng.random_range(0..rows.len())].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..rows.len())
        };
        let c = rows[pick].clone();
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(rows: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    rows.iter()
        .map(|r| {
            centroids
                .iter()
                .enumerate()
                .map(|(j, c)| (j, sq_dist(r, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap()
        })
        .unzip()
}

fn means(rows: &[Vec<f64>], assignments: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = rows[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (r, &a) in rows.iter().zip(assignments) {
        sizes[a] += 1;
        sums[a].iter_mut().zip(r).for_each(|(s, x)| *s += x);
    }
    for (s, &n) in sums.iter_mut().zip(&sizes) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    (sums, sizes)
}

/// Centroid update. An empty cluster is reseeded at the point farthest from
/// its current centroid, which then moves into it.
fn update(rows: &[Vec<f64>], assignments: &mut [usize], dists: &mut [f64], k: usize) -> Vec<Vec<f64>> {
    loop {
        let (centroids, sizes) = means(rows, assignments, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return centroids };
        let far = (0..rows.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
            .expect("k ≤ rows leaves a cluster with ≥ 2 members");
        assignments[far] = empty;
        dists[far] = 0.0;
    }
}

fn lloyd(rows: &[Vec<f64>], config: &KMeansConfig, restart: usize) -> KMeansResult {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let mut centroids = plus_plus_init(rows, config.k, &mut rng);
    let (mut assignments, mut dists) = assign(rows, &centroids);
    let mut trace = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        centroids = update(rows, &mut assignments, &mut dists, config.k);
        let (next, next_dists) = assign(rows, &centroids);
        trace.push(next_dists.iter().sum());
        let stable = next == assignments;
        assignments = next;
        dists = next_dists;
        if stable {
            converged = true;
            break;
        }
    }
    if !converged {
        centroids = update(rows, &mut assignments, &mut dists, config.k);
        let (a, d) = assign(rows, &centroids);
        assignments = a;
        trace.push(d.iter().sum());
        centroids = means(rows, &assignments, config.k).0;
    }
    let inertia = rows.iter().zip(&assignments).map(|(r, &a)| sq_dist(r, &centroids[a])).sum();
    KMeansResult { assignments, centroids, inertia, trace, iterations, restart }
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len() as f64;
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rows: HashMap<usize, f64> = HashMap::new();
    let mut cols: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0.0) += 1.0;
        *rows.entry(x).or_insert(0.0) += 1.0;
        *cols.entry(y).or_insert(0.0) += 1.0;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| choose2(v)).sum();
    let expected = sum_a * sum_b / choose2(n);
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterMember {
    pub character_id: String,
    pub cluster: usize,
    pub year: i32,
    pub coords: Option<(f64, f64)>,
}

/// Clustering of characters with labels ordered by ascending mean
/// publication year of the members.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    pub members: Vec<ClusterMember>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub trace: Vec<f64>,
}

impl ClusterResult {
    pub fn assignment_map(&self) -> HashMap<&str, usize> {
        self.members.iter().map(|m| (m.character_id.as_str(), m.cluster)).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for m in &self.members {
            sizes[m.cluster] += 1;
        }
        sizes
    }

    /// CSV `character_id,cluster,year,x,y` (x, y empty without coordinates).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["character_id", "cluster", "year", "x", "y"])?;
        for m in &self.members {
            let (x, y) = m.coords.map(|(x, y)| (x.to_string(), y.to_string())).unwrap_or_default();
            w.write_record([m.character_id.clone(), m.cluster.to_string(), m.year.to_string(), x, y])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Relabels clusters by ascending mean year (ties by original label).
pub fn canonical_order(assignments: &[usize], years: &[i32], k: usize) -> Vec<usize> {
    let mut sums = vec![(0.0, 0usize); k];
    for (&a, &y) in assignments.iter().zip(years) {
        sums[a].0 += f64::from(y);
        sums[a].1 += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    let mean = |j: usize| if sums[j].1 == 0 { f64::INFINITY } else { sums[j].0 / sums[j].1 as f64 };
    order.sort_by(|&a, &b| mean(a).total_cmp(&mean(b)).then(a.cmp(&b)));
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    relabel
}

/// Reads external 2-D coordinates, CSV `character_id,x,y`.
pub fn read_coords_csv<R: BufRead>(reader: R) -> Result<HashMap<String, (f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("coordinates CSV is missing column `{name}`")))
    };
    let (ii, xi, yi) = (column("character_id")?, column("x")?, column("y")?);
    let mut out = HashMap::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let bad = |m: &str| Error::Parse { line: line + 2, message: m.to_string() };
        let id = record.get(ii).ok_or_else(|| bad("missing character_id"))?.trim().to_string();
        let x: f64 = record.get(xi).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad("invalid x"))?;
        let y: f64 = record.get(yi).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad("invalid y"))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(bad("non-finite coordinate"));
        }
        out.insert(id, (x, y));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct ClusterOptions<'a> {
    /// External 2-D coordinates keyed by character id.
    pub coords: Option<&'a HashMap<String, (f64, f64)>>,
    /// Cluster on the 2-D coordinates instead of the embeddings.
    pub on_2d: bool,
}

/// Clusters the given characters. Coordinates default to a PCA projection of
/// their embeddings when none are supplied.
pub fn cluster_characters(
    dataset: &Dataset,
    ids: &[String],
    config: &KMeansConfig,
    options: &ClusterOptions,
) -> Result<ClusterResult> {
    let index = dataset.index_by_id();
    let characters: Vec<&CharacterRecord> = ids
        .iter()
        .map(|id| {
            index.get(id.as_str()).map(|&i| &dataset.characters[i]).ok_or_else(|| Error::invalid(format!("unknown character `{id}`")))
        })
        .collect::<Result<_>>()?;
    let embeddings: Vec<Vec<f64>> = ids.iter().map(|id| dataset.embedding(id)).collect::<Result<_>>()?;

    let coords: Vec<(f64, f64)> = match options.coords {
        Some(map) => ids
            .iter()
            .map(|id| map.get(id).copied().ok_or_else(|| Error::invalid(format!("no 2-D coordinates for `{id}`"))))
            .collect::<Result<_>>()?,
        None => pca_project(&embeddings, 2)?.coords.into_iter().map(|c| (c[0], c[1])).collect(),
    };
    let rows: Vec<Vec<f64>> = if options.on_2d { coords.iter().map(|&(x, y)| vec![x, y]).collect() } else { embeddings };

    let fit = kmeans_with(&rows, config)?;
    let years: Vec<i32> = characters.iter().map(|c| c.year).collect();
    let relabel = canonical_order(&fit.assignments, &years, config.k);
    let mut centroids = vec![Vec::new(); config.k];
    for (old, c) in fit.centroids.into_iter().enumerate() {
        centroids[relabel[old]] = c;
    }
    let members = characters
        .iter()
        .zip(&fit.assignments)
        .zip(&coords)
        .map(|((c, &a), &xy)| ClusterMember { character_id: c.character_id.clone(), cluster: relabel[a], year: c.year, coords: Some(xy) })
        .collect();
    Ok(ClusterResult { k: config.k, members, centroids, inertia: fit.inertia, trace: fit.trace })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterVocabulary {
    pub cluster: usize,
    /// Strictly positive rows, top `k_top` per category, descending.
    pub rows: Vec<DistinctRow>,
}

/// One-vs-rest distinctive vocabulary of each cluster against the other
/// clustered characters.
pub fn cluster_vocabulary(
    characters: &[CharacterRecord],
    result: &ClusterResult,
    k_top: usize,
    categories: &[Category],
) -> Result<Vec<ClusterVocabulary>> {
    let sizes = result.sizes();
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::invalid(format!("cluster {empty} is empty")));
    }
    let assignment = result.assignment_map();
    let mut out = Vec::with_capacity(result.k);
    for cluster in 0..result.k {
        let partition: HashMap<String, Group> = assignment
            .iter()
            .map(|(&id, &a)| (id.to_string(), if a == cluster { Group::One } else { Group::Two }))
            .collect();
        let table = group_distinctiveness(characters, &partition, categories)?;
        let mut per_category: BTreeMap<Category, Vec<&DistinctRow>> = BTreeMap::new();
        for r in table.rows.iter().filter(|r| r.raw_z > 0.0) {
            per_category.entry(r.category).or_default().push(r);
        }
        let mut rows = Vec::new();
        for (_, mut list) in per_category {
            list.sort_by(|a, b| b.raw_z.total_cmp(&a.raw_z).then_with(|| a.lemma.cmp(&b.lemma)));
            rows.extend(list.into_iter().take(k_top).cloned());
        }
        out.push(ClusterVocabulary { cluster, rows });
    }
    Ok(out)
}

pub fn write_cluster_vocabulary_csv<W: Write>(vocab: &[ClusterVocabulary], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["cluster", "category", "lemma", "c1", "c2", "raw_z", "normalized_z"])?;
    for v in vocab {
        for r in &v.rows {
            w.write_record([
                v.cluster.to_string(),
                r.category.to_string(),
                r.lemma.clone(),
                r.counts.c1.to_string(),
                r.counts.c2.to_string(),
                r.raw_z.to_string(),
                r.normalized_z.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
