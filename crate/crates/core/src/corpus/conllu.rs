use std::fmt::Write as _;

use thiserror::Error;

use super::{ParsedSentence, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("CoNLL-U line {line}: {reason}")]
pub struct ConlluError {
    pub line: usize,
    pub reason: String,
}

impl ConlluError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

const COLUMNS: usize = 10;

#[derive(Default)]
struct Block {
    id: Option<String>,
    tokens: Vec<Token>,
    lines: Vec<usize>,
    first_line: usize,
}

/// Parses 10-column CoNLL-U text. Only ID, FORM, UPOS, HEAD and DEPREL are
/// kept; multiword-token ranges (`1-2`) and empty nodes (`1.1`) are skipped.
///
/// Sentences without a `# sent_id = ...` comment get ids `s1`, `s2`, ... by
/// position in the file.
pub fn parse_conllu(text: &str) -> Result<Vec<ParsedSentence>, ConlluError> {
    let mut out = Vec::new();
    let mut block = Block::default();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if block.first_line != 0 {
                out.push(finish(std::mem::take(&mut block), out.len())?);
            }
            continue;
        }
        if block.first_line == 0 {
            block.first_line = lineno;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    block.id = Some(value.trim().to_string());
                }
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(ConlluError::new(
                lineno,
                format!("expected {COLUMNS} tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let index: usize = id
            .parse()
            .map_err(|_| ConlluError::new(lineno, format!("non-integer ID {id:?}")))?;
        let expected = block.tokens.len() + 1;
        if index != expected {
            return Err(ConlluError::new(
                lineno,
                format!("token ID {index} out of sequence, expected {expected}"),
            ));
        }
        let head_index: usize = cols[6]
            .parse()
            .map_err(|_| ConlluError::new(lineno, format!("non-integer HEAD {:?}", cols[6])))?;
        if head_index == index {
            return Err(ConlluError::new(lineno, format!("token {index} is its own head")));
        }
        block.tokens.push(Token {
            index,
            surface: cols[1].to_string(),
            pos_tag: cols[3].to_string(),
            head_index,
            dep_relation: cols[7].to_string(),
        });
        block.lines.push(lineno);
    }
    if block.first_line != 0 {
        out.push(finish(block, out.len())?);
    }
    Ok(out)
}

fn finish(block: Block, position: usize) -> Result<ParsedSentence, ConlluError> {
    if block.tokens.is_empty() {
        return Err(ConlluError::new(block.first_line, "sentence block has no tokens"));
    }
    let len = block.tokens.len();
    let mut roots = 0;
    for (tok, &line) in block.tokens.iter().zip(&block.lines) {
        if tok.head_index > len {
            return Err(ConlluError::new(
                line,
                format!("HEAD {} out of range for sentence of length {len}", tok.head_index),
            ));
        }
        if tok.head_index == 0 {
            roots += 1;
        }
    }
    if roots != 1 {
        let line = *block.lines.last().expect("nonempty");
        return Err(ConlluError::new(line, format!("expected exactly one root, found {roots}")));
    }
    Ok(ParsedSentence {
        id: block.id.unwrap_or_else(|| format!("s{}", position + 1)),
        tokens: block.tokens,
    })
}

/// Writes sentences back as CoNLL-U; unused columns are `_`.
pub fn write_conllu(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "# sent_id = {}", s.id);
        for t in &s.tokens {
            let _ = writeln!(
                out,
                "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_",
                t.index, t.surface, t.pos_tag, t.head_index, t.dep_relation
            );
        }
        out.push('\n');
    }
    out
}
