//! Time series over the corpus: archetype ratio, narrative centrality and
//! trend fitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{CharacterRecord, Dataset, Label};

/// Start of the half-open bin `[start, start + width)` containing `year`.
pub fn bin_start(year: i32, width: u32) -> i32 {
    let w = width.max(1) as i32;
    year.div_euclid(w) * w
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendPoint {
    pub bin_start: i32,
    pub value: f64,
    pub support: usize,
}

/// `y ≈ a·x² + b·x + c` with `x` the calendar year.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticFit {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrendSeries {
    pub points: Vec<TrendPoint>,
    pub fit: Option<QuadraticFit>,
}

impl TrendSeries {
    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (f64::from(p.bin_start), p.value)).collect()
    }

    /// Fits a quadratic through the bin points.
    pub fn with_fit(mut self) -> Result<Self> {
        self.fit = Some(quadratic_fit(&self.xy())?);
        Ok(self)
    }

    /// CSV `bin_start,value,support`, preceded by `# fit a=…,b=…,c=…` when a
    /// fit is present.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if let Some(f) = &self.fit {
            writeln!(w, "# fit a={},b={},c={}", f.a, f.b, f.c)?;
        }
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["bin_start", "value", "support"])?;
        for p in &self.points {
            w.write_record([p.bin_start.to_string(), p.value.to_string(), p.support.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`TrendSeries::write_csv`]. Comment lines are
    /// skipped; a previous fit is not restored.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Format(format!("series CSV is missing column `{name}`")))
        };
        let (bi, vi, si) = (column("bin_start")?, column("value")?, column("support")?);
        let mut points = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |idx: usize, name: &str| -> Result<&str> {
                record.get(idx).ok_or_else(|| Error::Parse { line: i + 2, message: format!("missing `{name}`") })
            };
            let bad = |name: &str| Error::Parse { line: i + 2, message: format!("invalid `{name}` value") };
            points.push(TrendPoint {
                bin_start: field(bi, "bin_start")?.trim().parse().map_err(|_| bad("bin_start"))?,
                value: field(vi, "value")?.trim().parse().map_err(|_| bad("value"))?,
                support: field(si, "support")?.trim().parse().map_err(|_| bad("support"))?,
            });
        }
        if points.windows(2).any(|w| w[0].bin_start >= w[1].bin_start) {
            return Err(Error::Format("series bins must be strictly increasing".into()));
        }
        Ok(TrendSeries { points, fit: None })
    }
}

/// Keeps the `k` characters with the most mentions in each novel (ties by
/// ascending `character_id`). Dataset order is preserved.
pub fn select_top_characters(dataset: &Dataset, k: usize) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let mut by_novel: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, c) in dataset.characters.iter().enumerate() {
        by_novel.entry(c.novel_id.as_str()).or_default().push(i);
    }
    let mut keep = vec![false; dataset.characters.len()];
    for members in by_novel.values_mut() {
        members.sort_by(|&a, &b| {
            let (ca, cb) = (&dataset.characters[a], &dataset.characters[b]);
            cb.mention_count.cmp(&ca.mention_count).then_with(|| ca.character_id.cmp(&cb.character_id))
        });
        for &i in members.iter().take(k) {
            keep[i] = true;
        }
    }
    let characters = dataset.characters.iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect();
    Ok(Dataset { characters, embeddings: dataset.embeddings.clone() })
}

/// Share of predicted detectives among all characters of each bin.
pub fn ratio_series(
    characters: &[CharacterRecord],
    predicted: &HashMap<String, Label>,
    bin_width_years: u32,
) -> Result<TrendSeries> {
    let mut bins: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    for c in characters {
        let label = predicted
            .get(&c.character_id)
            .ok_or_else(|| Error::invalid(format!("no predicted label for `{}`", c.character_id)))?;
        let e = bins.entry(bin_start(c.year, bin_width_years)).or_insert((0, 0));
        e.0 += usize::from(label.is_detective());
        e.1 += 1;
    }
    Ok(TrendSeries {
        points: bins
            .into_iter()
            .map(|(start, (hits, n))| TrendPoint { bin_start: start, value: hits as f64 / n as f64, support: n })
            .collect(),
        fit: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CentralityRecord {
    pub character_id: String,
    pub novel_id: String,
    pub year: i32,
    /// Mention count divided by the novel's mean mention count.
    pub mention_ratio: f64,
}

/// Mention ratios within each novel over the given (retained) characters, in
/// input order. Novels whose characters all have zero mentions are skipped
/// with a warning.
pub fn mention_ratios(characters: &[CharacterRecord]) -> Vec<CentralityRecord> {
    let mut totals: HashMap<&str, (u64, usize)> = HashMap::new();
    for c in characters {
        let e = totals.entry(c.novel_id.as_str()).or_insert((0, 0));
        e.0 += c.mention_count;
        e.1 += 1;
    }
    let mut warned = HashSet::new();
    characters
        .iter()
        .filter_map(|c| {
            let (total, n) = totals[c.novel_id.as_str()];
            if total == 0 {
                if warned.insert(c.novel_id.as_str()) {
                    log::warn!("novel `{}`: all retained characters have zero mentions, skipped", c.novel_id);
                }
                return None;
            }
            Some(CentralityRecord {
                character_id: c.character_id.clone(),
                novel_id: c.novel_id.clone(),
                year: c.year,
                mention_ratio: c.mention_count as f64 * n as f64 / total as f64,
            })
        })
        .collect()
}

/// Mean mention ratio of the given detectives per bin.
pub fn centrality_series(
    characters: &[CharacterRecord],
    detective_ids: &HashSet<String>,
    bin_width_years: u32,
) -> TrendSeries {
    let mut bins: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for r in mention_ratios(characters) {
        if detective_ids.contains(&r.character_id) {
            let e = bins.entry(bin_start(r.year, bin_width_years)).or_insert((0.0, 0));
            e.0 += r.mention_ratio;
            e.1 += 1;
        }
    }
    TrendSeries {
        points: bins
            .into_iter()
            .map(|(start, (sum, n))| TrendPoint { bin_start: start, value: sum / n as f64, support: n })
            .collect(),
        fit: None,
    }
}

fn distinct_x(points: &[(f64, f64)]) -> usize {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.len()
}

/// Least-squares polynomial of degree `degree` in the centered and scaled
/// variable; returns the coefficients there plus (mean, scale).
fn fit_centered(points: &[(f64, f64)], degree: usize) -> Result<(Vec<f64>, f64, f64)> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("trend points".into()));
    }
    if distinct_x(points) <= degree {
        return Err(Error::invalid(format!("rank-deficient design: need ≥ {} distinct x values", degree + 1)));
    }
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let scale = points.iter().map(|p| (p.0 - mean).abs()).fold(0.0, f64::max);
    let design = DMatrix::from_fn(points.len(), degree + 1, |i, j| ((points[i].0 - mean) / scale).powi((degree - j) as i32));
    let target = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let coef = design
        .svd(true, true)
        .solve(&target, 1e-12)
        .map_err(|e| Error::invalid(format!("least-squares solve failed: {e}")))?;
    Ok((coef.iter().copied().collect(), mean, scale))
}

/// Ordinary least squares on the `[x², x, 1]` basis, solved in centered
/// coordinates and reported in original ones.
pub fn quadratic_fit(points: &[(f64, f64)]) -> Result<QuadraticFit> {
    let solve = |pts: &[(f64, f64)]| -> Result<QuadraticFit> {
        let (coef, m, s) = fit_centered(pts, 2)?;
        let a = coef[0] / (s * s);
        let b1 = coef[1] / s;
        Ok(QuadraticFit { a, b: b1 - 2.0 * a * m, c: a * m * m - b1 * m + coef[2] })
    };
    // Mapping back from centered coordinates loses digits in `c` when x is
    // far from 0 (calendar years); refitting the residuals recovers them.
    let mut fit = solve(points)?;
    for _ in 0..2 {
        let residuals: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, y - fit.eval(x))).collect();
        let d = solve(&residuals)?;
        fit = QuadraticFit { a: fit.a + d.a, b: fit.b + d.b, c: fit.c + d.c };
    }
    Ok(fit)
}

/// Ordinary least squares line `y ≈ slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let solve = |pts: &[(f64, f64)]| -> Result<(f64, f64)> {
        let (coef, m, s) = fit_centered(pts, 1)?;
        let slope = coef[0] / s;
        Ok((slope, coef[1] - slope * m))
    };
    let (mut slope, mut intercept) = solve(points)?;
    let residuals: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, y - (slope * x + intercept))).collect();
    let (ds, di) = solve(&residuals)?;
    slope += ds;
    intercept += di;
    Ok((slope, intercept))
}

pub fn residual_sum_squares<F: Fn(f64) -> f64>(points: &[(f64, f64)], model: F) -> f64 {
    points.iter().map(|&(x, y)| (y - model(x)).powi(2)).sum()
}
