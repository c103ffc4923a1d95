//! Interchange file formats.

pub(crate) mod bytes;
pub mod characters;
pub mod embeddings;
pub mod labels;

pub use characters::{parse_characters, read_characters_file, write_characters, write_characters_file};
pub use embeddings::{read_embeddings, read_embeddings_from, write_embeddings, write_embeddings_to};
pub use labels::{apply_labels, read_labels};
