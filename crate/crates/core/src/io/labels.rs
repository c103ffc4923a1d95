//! Optional labels override file: CSV with header `character_id,label`.

use std::collections::HashMap;
use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Dataset, Label};

#[derive(Deserialize)]
struct Row {
    character_id: String,
    label: String,
}

pub fn read_labels<R: Read>(reader: R) -> Result<HashMap<String, Label>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    for column in ["character_id", "label"] {
        if !headers.iter().any(|h| h == column) {
            return Err(Error::Format(format!("labels file is missing column `{column}`")));
        }
    }
    let mut labels = HashMap::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        let line = i + 2;
        let label = Label::parse(&row.label).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown label `{}`", row.label),
        })?;
        let id = row.character_id.trim().to_string();
        if labels.insert(id.clone(), label).is_some() {
            return Err(Error::DuplicateId { line, id });
        }
    }
    Ok(labels)
}

/// Overrides gold labels. Every id in the override must exist in the dataset.
pub fn apply_labels(dataset: &mut Dataset, labels: &HashMap<String, Label>) -> Result<()> {
    let index: HashMap<String, usize> = dataset
        .characters
        .iter()
        .enumerate()
        .map(|(i, c)| (c.character_id.clone(), i))
        .collect();
    let mut ids: Vec<_> = labels.keys().collect();
    ids.sort();
    for id in ids {
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| Error::invalid(format!("labels file references unknown character `{id}`")))?;
        dataset.characters[i].label = Some(labels[id]);
    }
    Ok(())
}
