//! The `h_setup.csv` block format.
//!
//! ```text
//! h0,C,E,G
//! C,-1,0,0.5
//! E,0,-1,0
//! G,0.5,0,1
//! h1,C,E,G
//! ...
//! ```
//!
//! Each block is a header naming the variables followed by one row per
//! variable. Diagonal cells are the linear coefficients; off-diagonal cells
//! are couplings, averaged with their transpose so either triangle (or both)
//! may be filled in.

use std::fmt::Write as _;

use vqh_core::{HamiltonianSequence, QuboError, QuboProblem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HSetupError {
    #[error("no Hamiltonian blocks found")]
    Empty,
    #[error("line {line}: expected a block header `h<k>,label,...`, found {found:?}")]
    Header { line: u64, found: String },
    #[error("line {line}: expected {expected} cells, found {got}")]
    Width { line: u64, expected: usize, got: usize },
    #[error("line {line}: row label {got:?} does not match column label {expected:?}")]
    RowLabel {
        line: u64,
        expected: String,
        got: String,
    },
    #[error("line {line}, column {column}: {text:?} is not a number")]
    Cell { line: u64, column: usize, text: String },
    #[error("block {block} ends after {got} of {expected} rows")]
    MissingRows {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("block {block}: labels differ from the first block")]
    Labels { block: usize },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("block {block}: {source}")]
    Qubo { block: usize, source: QuboError },
}

struct Block {
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn is_header(cell: &str) -> bool {
    cell.len() > 1 && cell.starts_with('h') && cell[1..].bytes().all(|b| b.is_ascii_digit())
}

/// Parses every block into a sequence, in file order.
pub fn parse_h_setup(text: &str) -> Result<HamiltonianSequence, HSetupError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut blocks: Vec<Block> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HSetupError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let open = blocks
            .last()
            .is_some_and(|b| b.rows.len() < b.labels.len());
        if !open {
            let head = record.get(0).unwrap_or_default();
            if !is_header(head) || record.len() < 2 {
                return Err(HSetupError::Header {
                    line,
                    found: head.to_string(),
                });
            }
            blocks.push(Block {
                labels: record.iter().skip(1).map(str::to_string).collect(),
                rows: Vec::new(),
            });
            continue;
        }
        let index = blocks.len() - 1;
        let block = blocks.last_mut().expect("open block");
        let n = block.labels.len();
        let head = record.get(0).unwrap_or_default();
        if is_header(head) {
            return Err(HSetupError::MissingRows {
                block: index,
                expected: n,
                got: block.rows.len(),
            });
        }
        if record.len() != n + 1 {
            return Err(HSetupError::Width {
                line,
                expected: n + 1,
                got: record.len(),
            });
        }
        let expected = &block.labels[block.rows.len()];
        if head != expected {
            return Err(HSetupError::RowLabel {
                line,
                expected: expected.clone(),
                got: head.to_string(),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .skip(1)
            .map(|(column, text)| {
                text.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| HSetupError::Cell {
                        line,
                        column,
                        text: text.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        block.rows.push(row);
    }
    if let Some(b) = blocks.last() {
        if b.rows.len() < b.labels.len() {
            return Err(HSetupError::MissingRows {
                block: blocks.len() - 1,
                expected: b.labels.len(),
                got: b.rows.len(),
            });
        }
    }
    let first_labels = blocks.first().ok_or(HSetupError::Empty)?.labels.clone();
    let mut entries = Vec::with_capacity(blocks.len());
    for (k, block) in blocks.into_iter().enumerate() {
        if block.labels != first_labels {
            return Err(HSetupError::Labels { block: k });
        }
        entries.push(block_to_qubo(block).map_err(|source| HSetupError::Qubo { block: k, source })?);
    }
    HamiltonianSequence::new(entries).map_err(|source| HSetupError::Qubo { block: 0, source })
}

fn block_to_qubo(block: Block) -> Result<QuboProblem, QuboError> {
    let n = block.labels.len();
    let linear = (0..n).map(|i| block.rows[i][i]).collect();
    let mut quadratic = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                quadratic[i * n + j] = (block.rows[i][j] + block.rows[j][i]) / 2.0;
            }
        }
    }
    QuboProblem::new(block.labels, linear, quadratic)
}

/// Writes one block per entry, with both triangles filled in.
pub fn serialize_h_setup(seq: &HamiltonianSequence) -> String {
    let mut out = String::new();
    for (k, q) in seq.entries().iter().enumerate() {
        let _ = writeln!(out, "h{k},{}", q.labels().join(","));
        for (i, label) in q.labels().iter().enumerate() {
            out.push_str(label);
            for j in 0..q.n() {
                let _ = write!(out, ",{}", q.matrix_entry(i, j));
            }
            out.push('\n');
        }
    }
    out
}
