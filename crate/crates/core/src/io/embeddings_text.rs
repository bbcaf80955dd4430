use std::fs;
use std::path::Path;

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Reads `token f1 f2 ... fK` lines. A leading `count dim` header line, as written
/// by common word2vec tools, is accepted and checked.
pub fn load_embeddings_text(path: impl AsRef<Path>) -> Result<EmbeddingSpace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings_text(&text)
}

pub fn parse_embeddings_text(text: &str) -> Result<EmbeddingSpace> {
    let mut vocab = Vec::new();
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    let mut declared: Option<(usize, usize)> = None;

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap();
        let rest: Vec<&str> = fields.collect();

        if line_no == 1 && rest.len() == 1 {
            if let (Ok(n), Ok(k)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                declared = Some((n, k));
                dim = Some(k);
                continue;
            }
        }

        let values: Vec<f64> = rest
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::EmbeddingParse {
                        line: line_no,
                        message: format!("invalid float `{f}`"),
                    })
            })
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(k) if k != values.len() => {
                return Err(Error::EmbeddingParse {
                    line: line_no,
                    message: format!("expected {k} floats, found {}", values.len()),
                })
            }
            _ => {}
        }
        vocab.push(token.to_string());
        data.extend(values);
    }

    let dim = dim.ok_or_else(|| Error::EmbeddingParse {
        line: 0,
        message: "no vectors".into(),
    })?;
    if let Some((n, _)) = declared {
        if n != vocab.len() {
            return Err(Error::EmbeddingParse {
                line: 1,
                message: format!("header declares {n} tokens, found {}", vocab.len()),
            });
        }
    }
    let vectors = DenseMatrix::new(vocab.len(), dim, data)?;
    EmbeddingSpace::new(vocab, vectors).map_err(|e| match e {
        Error::InvalidArgument(message) => Error::EmbeddingParse { line: 0, message },
        other => other,
    })
}

/// Writes one `token f1 ... fK` line per vocabulary entry, no header.
///
/// Floats use the shortest representation that parses back to the same `f64`.
pub fn save_embeddings_text(path: impl AsRef<Path>, space: &EmbeddingSpace) -> Result<()> {
    let mut out = String::new();
    for (i, token) in space.vocab().iter().enumerate() {
        out.push_str(token);
        for v in space.row(i) {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    super::write_atomic(path.as_ref(), out.as_bytes())
}
