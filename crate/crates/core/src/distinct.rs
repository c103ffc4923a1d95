//! Attribute distinctiveness between two groups of characters.
//!
//! For an attribute with count `c1` in group 1 and `c2` in group 2, group
//! totals `n1`, `n2`, `p = c1 + c2` and `n = n1 + n2`, the score is
//!
//! ```text
//!            ln( ((c1 + p/n) / (n1 + 1)) / ((c2 + p/n) / (n2 + 1)) )
//! z_attr = -----------------------------------------------------------
//!                    sqrt( 1/(c1 + p/n) + 1/(c2 + p/n) )
//! ```
//!
//! i.e. a log-odds ratio with a Dirichlet pseudo-count `p/n` on each side,
//! divided by its approximate standard error. Positive scores lean toward
//! group 1. Counts, `p` and `n` are taken within one attribute category.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{Category, CharacterRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttributeCounts {
    pub c1: u64,
    pub c2: u64,
    pub n1: u64,
    pub n2: u64,
}

impl AttributeCounts {
    pub fn new(c1: u64, c2: u64, n1: u64, n2: u64) -> Result<Self> {
        if c1 > n1 || c2 > n2 {
            return Err(Error::invalid(format!("attribute count exceeds group total (c1={c1}, n1={n1}, c2={c2}, n2={n2})")));
        }
        if n1 + n2 == 0 {
            return Err(Error::invalid("n = 0: both groups are empty"));
        }
        Ok(AttributeCounts { c1, c2, n1, n2 })
    }

    pub fn p(&self) -> u64 {
        self.c1 + self.c2
    }

    pub fn n(&self) -> u64 {
        self.n1 + self.n2
    }

    /// The same attribute seen from the other group.
    pub fn swapped(&self) -> Self {
        AttributeCounts { c1: self.c2, c2: self.c1, n1: self.n2, n2: self.n1 }
    }
}

pub fn zscore(counts: &AttributeCounts) -> Result<f64> {
    if counts.n() == 0 {
        return Err(Error::invalid("n = 0"));
    }
    let prior = counts.p() as f64 / counts.n() as f64;
    let a = counts.c1 as f64 + prior;
    let b = counts.c2 as f64 + prior;
    if a == 0.0 && b == 0.0 {
        // p = 0: the attribute is absent from both groups.
        return Ok(0.0);
    }
    // Written as a difference of two per-group terms so that swapping the
    // groups negates the result exactly.
    let log_odds = (a.ln() - (counts.n1 as f64 + 1.0).ln()) - (b.ln() - (counts.n2 as f64 + 1.0).ln());
    Ok(log_odds / (1.0 / a + 1.0 / b).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    One,
    Two,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistinctRow {
    pub category: Category,
    pub lemma: String,
    pub counts: AttributeCounts,
    pub raw_z: f64,
    /// `raw_z / max |raw_z|` within the category, 0 when all are 0.
    pub normalized_z: f64,
}

/// Rows sorted by (category, lemma).
#[derive(Clone, Debug, PartialEq)]
pub struct DistinctivenessTable {
    pub group1: String,
    pub group2: String,
    pub rows: Vec<DistinctRow>,
}

impl DistinctivenessTable {
    pub fn category(&self, category: Category) -> impl Iterator<Item = &DistinctRow> {
        self.rows.iter().filter(move |r| r.category == category)
    }

    /// CSV `category,lemma,c1,c2,n1,n2,raw_z,normalized_z`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows_csv(self.rows.iter(), w)
    }
}

pub fn write_rows_csv<'a, I, W>(rows: I, w: W) -> Result<()>
where
    I: IntoIterator<Item = &'a DistinctRow>,
    W: Write,
{
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["category", "lemma", "c1", "c2", "n1", "n2", "raw_z", "normalized_z"])?;
    for r in rows {
        w.write_record([
            r.category.to_string(),
            r.lemma.clone(),
            r.counts.c1.to_string(),
            r.counts.c2.to_string(),
            r.counts.n1.to_string(),
            r.counts.n2.to_string(),
            r.raw_z.to_string(),
            r.normalized_z.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Scores every (category, lemma) occurring in either group. Characters
/// absent from `partition` are ignored.
pub fn group_distinctiveness(
    characters: &[CharacterRecord],
    partition: &HashMap<String, Group>,
    categories: &[Category],
) -> Result<DistinctivenessTable> {
    let members = |g: Group| characters.iter().filter(move |c| partition.get(&c.character_id) == Some(&g));
    if members(Group::One).next().is_none() || members(Group::Two).next().is_none() {
        return Err(Error::invalid("both groups must contain at least one character"));
    }

    let mut categories = categories.to_vec();
    categories.sort_unstable();
    categories.dedup();

    let mut rows = Vec::new();
    for category in categories {
        let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
        let (mut n1, mut n2) = (0u64, 0u64);
        for c in characters {
            let Some(&group) = partition.get(&c.character_id) else { continue };
            for (lemma, &k) in c.attributes.get(category) {
                let e = counts.entry(lemma.as_str()).or_insert((0, 0));
                match group {
                    Group::One => {
                        e.0 += u64::from(k);
                        n1 += u64::from(k);
                    }
                    Group::Two => {
                        e.1 += u64::from(k);
                        n2 += u64::from(k);
                    }
                }
            }
        }
        let start = rows.len();
        for (lemma, (c1, c2)) in counts {
            let counts = AttributeCounts::new(c1, c2, n1, n2)?;
            rows.push(DistinctRow { category, lemma: lemma.to_string(), counts, raw_z: zscore(&counts)?, normalized_z: 0.0 });
        }
        normalize(&mut rows[start..]);
    }
    Ok(DistinctivenessTable { group1: "group1".into(), group2: "group2".into(), rows })
}

fn normalize(rows: &mut [DistinctRow]) {
    let max = rows.iter().map(|r| r.raw_z.abs()).fold(0.0, f64::max);
    for r in rows {
        r.normalized_z = if max > 0.0 { r.raw_z / max } else { 0.0 };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Both,
}

fn ranked<F>(rows: &[DistinctRow], keep: F, descending: bool, k: usize) -> Vec<&DistinctRow>
where
    F: Fn(&DistinctRow) -> bool,
{
    let mut out: Vec<&DistinctRow> = rows.iter().filter(|r| keep(r)).collect();
    out.sort_by(|a, b| {
        let by_score = if descending { b.raw_z.total_cmp(&a.raw_z) } else { a.raw_z.total_cmp(&b.raw_z) };
        by_score.then_with(|| (a.category, &a.lemma).cmp(&(b.category, &b.lemma)))
    });
    out.truncate(k);
    out
}

/// Up to `k` strictly positive rows by descending score, up to `k` strictly
/// negative rows by ascending score, or both lists concatenated.
pub fn top_attributes(table: &DistinctivenessTable, k: usize, sign: Sign) -> Vec<DistinctRow> {
    let pos = || ranked(&table.rows, |r| r.raw_z > 0.0, true, k);
    let neg = || ranked(&table.rows, |r| r.raw_z < 0.0, false, k);
    let picked = match sign {
        Sign::Positive => pos(),
        Sign::Negative => neg(),
        Sign::Both => {
            let mut v = pos();
            v.extend(neg());
            v
        }
    };
    picked.into_iter().cloned().collect()
}
