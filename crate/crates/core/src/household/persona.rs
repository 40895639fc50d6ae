//! Persona roster: CSV records with `name,age,city,occupation`.

use std::path::Path;

use thiserror::Error;

use crate::economy::{Persona, PersonaError};

/// Roster shipped with the crate (50 personas).
pub const DEFAULT_ROSTER: &str = include_str!("../../data/personas.csv");

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("cannot read persona roster {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("persona roster record {record}: {message}")]
    Record { record: usize, message: String },
    #[error("persona roster is empty")]
    Empty,
}

pub fn parse_roster(text: &str) -> Result<Vec<Persona>, RosterError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut personas = Vec::new();
    for (i, row) in reader.deserialize::<Persona>().enumerate() {
        let persona = row.map_err(|e| RosterError::Record {
            record: i + 1,
            message: e.to_string(),
        })?;
        persona
            .validate()
            .map_err(|e: PersonaError| RosterError::Record {
                record: i + 1,
                message: e.to_string(),
            })?;
        personas.push(persona);
    }
    if personas.is_empty() {
        return Err(RosterError::Empty);
    }
    Ok(personas)
}

pub fn load_roster(path: &Path) -> Result<Vec<Persona>, RosterError> {
    let text = std::fs::read_to_string(path).map_err(|source| RosterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_roster(&text)
}
