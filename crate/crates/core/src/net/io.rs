//! Plain-text parameter format.
//!
//! ```text
//! ranker-net v1
//! layer 0 <in> <out> <activation>
//! <out rows of <in> weights>
//! <out biases>
//! ...
//! ```
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::io::Write;
use std::str::FromStr;

use super::{Activation, FeatureNet, Layer};
use crate::error::{Error, Result};

pub const NET_FORMAT_VERSION: &str = "ranker-net v1";

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_row<W: Write>(out: &mut W, values: &[f64]) -> std::io::Result<()> {
    let row: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    writeln!(out, "{}", row.join(" "))
}

/// Whitespace token stream that remembers line numbers for diagnostics.
pub struct TokenReader<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> TokenReader<'a> {
    pub fn new(text: &'a str) -> Self {
        let tokens = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        TokenReader { tokens, pos: 0 }
    }

    pub fn line(&self) -> usize {
        self.tokens.get(self.pos).or(self.tokens.last()).map_or(0, |t| t.0)
    }

    pub fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).map(|t| t.1)
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn next_token(&mut self, what: &str) -> Result<&'a str> {
        match self.tokens.get(self.pos) {
            Some(&(_, tok)) => {
                self.pos += 1;
                Ok(tok)
            }
            None => Err(Error::parse(
                self.line(),
                format!("unexpected end of input, expected {what}"),
            )),
        }
    }

    pub fn expect(&mut self, keyword: &str) -> Result<()> {
        let line = self.line();
        let tok = self.next_token(keyword)?;
        if tok == keyword {
            Ok(())
        } else {
            Err(Error::parse(line, format!("expected `{keyword}`, found `{tok}`")))
        }
    }

    pub fn parse<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let line = self.line();
        let tok = self.next_token(what)?;
        tok.parse()
            .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
    }

    pub fn floats(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| {
                let line = self.line();
                let v: f64 = self.parse(what)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::parse(line, format!("non-finite {what}")))
                }
            })
            .collect()
    }

    /// Consumes a two-token version header such as `ranker-net v1`.
    pub fn header(&mut self, expected: &str) -> Result<()> {
        let mut parts = expected.split(' ');
        let (name, version) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
        let line = self.line();
        let got_name = self.next_token("format header")?;
        if got_name != name {
            return Err(Error::parse(
                line,
                format!("expected `{name}` header, found `{got_name}`"),
            ));
        }
        let got_version = self.next_token("format version")?;
        if got_version != version {
            return Err(Error::UnsupportedVersion(format!("{got_name} {got_version}")));
        }
        Ok(())
    }
}

impl FeatureNet {
    /// Writes the layer records without a version header.
    pub fn write_records<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (idx, layer) in self.layers.iter().enumerate() {
            writeln!(
                out,
                "layer {idx} {} {} {}",
                layer.inputs, layer.outputs, layer.activation
            )?;
            for row in layer.weights.chunks_exact(layer.inputs) {
                write_row(out, row)?;
            }
            write_row(out, &layer.biases)?;
        }
        Ok(())
    }

    /// Reads consecutive `layer` records until a non-`layer` token.
    pub fn read_records(reader: &mut TokenReader<'_>) -> Result<Self> {
        let mut layers = Vec::new();
        while reader.peek() == Some("layer") {
            let line = reader.line();
            reader.expect("layer")?;
            let idx: usize = reader.parse("layer index")?;
            if idx != layers.len() {
                return Err(Error::parse(
                    line,
                    format!("expected layer {}, found {idx}", layers.len()),
                ));
            }
            let inputs: usize = reader.parse("layer input size")?;
            let outputs: usize = reader.parse("layer output size")?;
            let activation: Activation = reader
                .next_token("activation")?
                .parse()
                .map_err(|e: Error| Error::parse(line, e.to_string()))?;
            let weights = reader.floats(inputs * outputs, "weight")?;
            let biases = reader.floats(outputs, "bias")?;
            let layer = Layer::new(inputs, outputs, weights, biases, activation)
                .map_err(|e| Error::parse(line, e.to_string()))?;
            layers.push(layer);
        }
        FeatureNet::new(layers)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        writeln!(buf, "{NET_FORMAT_VERSION}").expect("write to Vec");
        self.write_records(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut reader = TokenReader::new(text);
        reader.header(NET_FORMAT_VERSION)?;
        let net = FeatureNet::read_records(&mut reader)?;
        if let Some(tok) = reader.peek() {
            return Err(Error::parse(
                reader.line(),
                format!("unexpected trailing token `{tok}`"),
            ));
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn text_round_trip_is_lossless() {
        let mut rng = rng_from_seed(5);
        let net = FeatureNet::init(7, &[5, 3], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let text = net.to_text();
        assert!(text.starts_with("ranker-net v1\nlayer 0 7 5 tanh\n"));
        assert_eq!(FeatureNet::from_text(&text).unwrap(), net);
    }

    #[test]
    fn rejects_unknown_version() {
        let text = "ranker-net v9\nlayer 0 1 1 tanh\n1\n0\n";
        assert!(matches!(FeatureNet::from_text(text), Err(Error::UnsupportedVersion(_))));
    }

    #[test]
    fn reports_line_of_bad_float() {
        let text = "ranker-net v1\nlayer 0 2 1 tanh\n1 x\n0\n";
        match FeatureNet::from_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_truncated_records() {
        assert!(FeatureNet::from_text("ranker-net v1\nlayer 0 2 1 tanh\n1 2\n").is_err());
        assert!(FeatureNet::from_text("ranker-net v1\n").is_err());
    }
}
