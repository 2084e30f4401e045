use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use super::{Dataset, Document, Query};
use crate::error::{Error, Result};

/// Highest grade accepted in LETOR files (MSLR grades run 0..=4).
pub const DEFAULT_MAX_GRADE: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Grades above this are rejected. `None` accepts any grade, which is what
    /// multi-class synthetic files need.
    pub max_grade: Option<u32>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_grade: Some(DEFAULT_MAX_GRADE),
        }
    }
}

pub fn parse_letor<R: BufRead>(input: R) -> Result<Dataset> {
    parse_letor_with(input, ParseOptions::default())
}

pub fn parse_letor_file(path: impl AsRef<Path>, options: ParseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_letor_with(std::io::BufReader::new(file), options).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Parses `<grade> qid:<q> <idx>:<value> ... [# comment]` lines.
///
/// Missing feature indices are zero-filled up to the largest index seen in
/// the whole input.
pub fn parse_letor_with<R: BufRead>(input: R, options: ParseOptions) -> Result<Dataset> {
    let mut docs = Vec::new();
    let mut max_index = 0usize;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if let Some(doc) = parse_line(&line, line_no, options)? {
            max_index = max_index.max(doc.features.len());
            docs.push(doc);
        }
    }

    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut queries: Vec<Query> = Vec::new();
    for mut doc in docs {
        doc.features.resize(max_index, 0.0);
        let slot = *index.entry(doc.qid).or_insert_with(|| {
            queries.push(Query {
                qid: doc.qid,
                docs: Vec::new(),
            });
            queries.len() - 1
        });
        queries[slot].docs.push(doc);
    }
    Dataset::new(queries)
}

fn parse_line(line: &str, line_no: usize, options: ParseOptions) -> Result<Option<Document>> {
    let (body, comment) = match line.find('#') {
        Some(pos) => {
            let c = line[pos + 1..].trim();
            (&line[..pos], (!c.is_empty()).then(|| c.to_string()))
        }
        None => (line, None),
    };
    let mut tokens = body.split_ascii_whitespace();
    let Some(grade_tok) = tokens.next() else {
        return Ok(None);
    };
    let grade: u32 = grade_tok
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid grade `{grade_tok}`")))?;
    if let Some(max) = options.max_grade {
        if grade > max {
            return Err(Error::parse(line_no, format!("grade {grade} outside [0, {max}]")));
        }
    }

    let qid_tok = tokens.next().ok_or_else(|| Error::parse(line_no, "missing qid"))?;
    let qid: u64 = qid_tok
        .strip_prefix("qid:")
        .ok_or_else(|| Error::parse(line_no, format!("expected `qid:<id>`, found `{qid_tok}`")))?
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid qid `{qid_tok}`")))?;

    let mut features: Vec<f64> = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, format!("malformed feature `{tok}`")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid feature index in `{tok}`")))?;
        if idx == 0 {
            return Err(Error::parse(line_no, "feature indices are 1-based"));
        }
        if idx <= features.len() {
            return Err(Error::parse(
                line_no,
                format!("feature index {idx} is not strictly increasing"),
            ));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid feature value in `{tok}`")))?;
        if !val.is_finite() {
            return Err(Error::parse(line_no, format!("non-finite feature value in `{tok}`")));
        }
        features.resize(idx - 1, 0.0);
        features.push(val);
    }

    Ok(Some(Document {
        grade,
        qid,
        features,
        line_index: line_no,
        comment,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_letor(text.as_bytes())
    }

    #[test]
    fn single_line_transcription() {
        let d = parse("2 qid:10 1:0.5 2:-1 # d7\n").unwrap();
        assert_eq!(d.num_queries(), 1);
        let doc = &d.queries()[0].docs[0];
        assert_eq!(doc.grade, 2);
        assert_eq!(doc.qid, 10);
        assert_eq!(doc.features, vec![0.5, -1.0]);
        assert_eq!(doc.comment.as_deref(), Some("d7"));
        assert_eq!(doc.line_index, 1);
    }

    #[test]
    fn empty_input() {
        let d = parse("").unwrap();
        assert_eq!(d.num_queries(), 0);
        assert_eq!(d.feature_dim(), 0);
    }

    #[test]
    fn same_qid_grouped() {
        let d = parse("1 qid:3 1:1\n0 qid:3 1:2\n").unwrap();
        assert_eq!(d.num_queries(), 1);
        assert_eq!(d.queries()[0].grades(), vec![1, 0]);
    }

    #[test]
    fn zero_fills_missing_indices() {
        let d = parse("0 qid:1 2:3.5\n1 qid:1 1:1 4:2\n").unwrap();
        assert_eq!(d.feature_dim(), 4);
        assert_eq!(d.queries()[0].docs[0].features, vec![0.0, 3.5, 0.0, 0.0]);
        assert_eq!(d.queries()[0].docs[1].features, vec![1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            "0 qid:1 1:1\nx qid:1 1:1\n",
            "0 qid:1 1:1\n0 1:1\n",
            "0 qid:1 1:1\n0 qid:1 2:1 1:1\n",
            "0 qid:1 1:1\n0 qid:1 1:1 1:2\n",
            "0 qid:1 1:1\n0 qid:1 0:1\n",
            "0 qid:1 1:1\n0 qid:1 1:abc\n",
            "0 qid:1 1:1\n0 qid:1 1\n",
            "0 qid:1 1:1\n5 qid:1 1:1\n",
            "0 qid:1 1:1\n1 qid:x 1:1\n",
        ];
        for text in cases {
            match parse(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 2, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn grade_cap_can_be_lifted() {
        let opts = ParseOptions { max_grade: None };
        let d = parse_letor_with("9 qid:1 1:1\n".as_bytes(), opts).unwrap();
        assert_eq!(d.grade_range(), Some((9, 9)));
    }

    #[test]
    fn letor_style_comment_and_blank_lines() {
        let text = "\n0 qid:10032 1:0.056537 2:0.000000 #docid = GX029-35-5894638 inc = 0.0119\n# only a comment\n";
        let d = parse(text).unwrap();
        assert_eq!(d.num_docs(), 1);
        let doc = &d.queries()[0].docs[0];
        assert_eq!(doc.line_index, 2);
        assert_eq!(doc.comment.as_deref(), Some("docid = GX029-35-5894638 inc = 0.0119"));
    }

    #[test]
    fn emit_then_parse_is_identity() {
        let text = "2 qid:10 1:0.5 2:-1 # d7\n0 qid:11 2:1e-3\n1 qid:10 1:0.1 2:0.30000000000000004\n";
        let d = parse(text).unwrap();
        let again = parse(&d.to_letor_string()).unwrap();
        assert_eq!(again, d);
        assert_eq!(again.to_letor_string(), d.to_letor_string());
    }
}
