use serde::{Deserialize, Serialize};

use super::env::{Cell, MazeEnv};
use crate::error::{Error, Result};

/// A text annotation naming a set of cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageLabel {
    pub text: String,
    pub cells: Vec<Cell>,
}

impl LanguageLabel {
    pub fn new(text: impl Into<String>, cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidArgument(
                "a label must name at least one cell".into(),
            ));
        }
        Ok(Self {
            text: text.into(),
            cells,
        })
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }
}

const ORDINALS: [&str; 20] = [
    "first",
    "second",
    "third",
    "fourth",
    "fifth",
    "sixth",
    "seventh",
    "eighth",
    "ninth",
    "tenth",
    "eleventh",
    "twelfth",
    "thirteenth",
    "fourteenth",
    "fifteenth",
    "sixteenth",
    "seventeenth",
    "eighteenth",
    "nineteenth",
    "twentieth",
];

/// `"first"`, `"second"`, … (falling back to `"21st"` style past twenty).
pub fn ordinal(i: usize) -> String {
    if let Some(w) = ORDINALS.get(i) {
        return (*w).to_string();
    }
    let n = i + 1;
    let suffix = match (n % 10, n % 100) {
        (1, r) if r != 11 => "st",
        (2, r) if r != 12 => "nd",
        (3, r) if r != 13 => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// One label per column (`"the first column"`, …) followed by one per row.
pub fn column_and_row_labels(env: &MazeEnv) -> Vec<LanguageLabel> {
    let mut out = Vec::with_capacity(env.width() + env.height());
    for c in 0..env.width() {
        let cells = (0..env.height()).map(|r| (c, r)).collect();
        out.push(LanguageLabel {
            text: format!("the {} column", ordinal(c)),
            cells,
        });
    }
    for r in 0..env.height() {
        let cells = (0..env.width()).map(|c| (c, r)).collect();
        out.push(LanguageLabel {
            text: format!("the {} row", ordinal(r)),
            cells,
        });
    }
    out
}

pub fn find_label(labels: &[LanguageLabel], text: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l.text == text)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown label {text:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals() {
        assert_eq!(ordinal(0), "first");
        assert_eq!(ordinal(13), "fourteenth");
        assert_eq!(ordinal(20), "21st");
        assert_eq!(ordinal(21), "22nd");
        assert_eq!(ordinal(110), "111th");
    }

    #[test]
    fn corner_cell_has_two_labels() {
        let env = MazeEnv::fork(0.5).unwrap();
        let labels = column_and_row_labels(&env);
        assert_eq!(labels.len(), 28);
        let hits: Vec<&str> = labels
            .iter()
            .filter(|l| l.contains((0, 0)))
            .map(|l| l.text.as_str())
            .collect();
        assert_eq!(hits, vec!["the first column", "the first row"]);
        assert_eq!(find_label(&labels, "the first column").unwrap(), 0);
        assert!(find_label(&labels, "the moon").is_err());
    }
}
