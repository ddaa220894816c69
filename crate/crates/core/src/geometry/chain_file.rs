//! Chain description files.
//!
//! ```json
//! { "chains": [
//!     { "id": "circle",
//!       "terms": [ { "kind": "circle", "weight": 1.0, "center": [0, 0], "radius": 1.0 } ] }
//! ] }
//! ```
//!
//! Term kinds: `segment {start, end}`, `arc {center, radius, theta_start,
//! theta_end}`, `circle {center, radius, clockwise?}` and
//! `polyline {vertices}`. Points are `[x, y]` pairs. Unknown fields are
//! rejected, and every semantic error names the chain, the term index and
//! the line the term starts on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chain::RChain;
use super::curve::Curve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TermSpec {
    Segment {
        weight: f64,
        start: [f64; 2],
        end: [f64; 2],
    },
    Arc {
        weight: f64,
        center: [f64; 2],
        radius: f64,
        theta_start: f64,
        theta_end: f64,
    },
    Circle {
        weight: f64,
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        clockwise: bool,
    },
    Polyline {
        weight: f64,
        vertices: Vec<[f64; 2]>,
    },
}

impl TermSpec {
    pub fn weight(&self) -> f64 {
        match self {
            TermSpec::Segment { weight, .. }
            | TermSpec::Arc { weight, .. }
            | TermSpec::Circle { weight, .. }
            | TermSpec::Polyline { weight, .. } => *weight,
        }
    }

    pub fn to_curve(&self) -> Result<Curve> {
        let p = |xy: &[f64; 2]| Complex64::new(xy[0], xy[1]);
        match self {
            TermSpec::Segment { start, end, .. } => Curve::segment(p(start), p(end)),
            TermSpec::Arc {
                center,
                radius,
                theta_start,
                theta_end,
                ..
            } => Curve::arc(p(center), *radius, *theta_start, *theta_end),
            TermSpec::Circle {
                center,
                radius,
                clockwise,
                ..
            } => Curve::circle(p(center), *radius, !clockwise),
            TermSpec::Polyline { vertices, .. } => Curve::polyline(vertices.iter().map(p).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub id: String,
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    chains: Vec<ChainSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedChain {
    pub id: String,
    pub chain: RChain,
}

impl ChainSpec {
    /// Build the chain; `term_line` maps a term index to a source line for
    /// error messages.
    pub fn build(&self, term_line: impl Fn(usize) -> Option<usize>) -> Result<NamedChain> {
        if self.terms.is_empty() {
            return Err(Error::validation(format!("chain '{}'", self.id), "has no terms"));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, spec) in self.terms.iter().enumerate() {
            let anchor = match term_line(k) {
                Some(line) => format!("chain '{}' term {k} (line {line})", self.id),
                None => format!("chain '{}' term {k}", self.id),
            };
            let w = spec.weight();
            if !w.is_finite() || w == 0.0 {
                return Err(Error::validation(anchor, format!("weight must be finite and non-zero, got {w}")));
            }
            let curve = spec.to_curve().map_err(|e| match e {
                Error::Validation { field, reason } => Error::validation(anchor.clone(), format!("{field}: {reason}")),
                other => other,
            })?;
            terms.push((w, curve));
        }
        Ok(NamedChain {
            id: self.id.clone(),
            chain: RChain::new(terms)?,
        })
    }
}

/// Parse a JSON chain file into validated chains.
pub fn parse_chain_file(text: &str) -> Result<Vec<NamedChain>> {
    let file: ChainFile = serde_json::from_str(text).map_err(|e| {
        Error::validation(format!("chain file line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    if file.chains.is_empty() {
        return Err(Error::validation("chain file", "lists no chains"));
    }
    let lines = term_lines(text);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(file.chains.len());
    for (ci, spec) in file.chains.iter().enumerate() {
        if !seen.insert(spec.id.clone()) {
            return Err(Error::validation(format!("chain {ci}"), format!("duplicate id '{}'", spec.id)));
        }
        let lines_of_chain = lines.get(ci);
        out.push(spec.build(|k| lines_of_chain.and_then(|l| l.get(k).copied()))?);
    }
    Ok(out)
}

/// Line numbers (1-based) of the opening brace of every term, grouped by
/// chain. Relies on the fixed nesting `{chains: [ {terms: [ {…} ]} ]}`:
/// terms are the objects at bracket depth 5.
fn term_lines(text: &str) -> Vec<Vec<usize>> {
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut depth = 0usize;
    let mut line = 1usize;
    let mut in_string = false;
    let mut escaped = false;
    for ch in text.chars() {
        if ch == '\n' {
            line += 1;
        }
        if in_string {
            match (escaped, ch) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' | '[' => {
                depth += 1;
                if ch == '{' && depth == 3 {
                    chains.push(Vec::new());
                }
                if ch == '{' && depth == 5 {
                    if let Some(c) = chains.last_mut() {
                        c.push(line);
                    }
                }
            }
            '}' | ']' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SEGMENTS: &str = r#"{
  "chains": [
    { "id": "A",
      "terms": [ { "kind": "segment", "weight": 1.0, "start": [0, 0], "end": [2, 0] } ] },
    { "id": "B",
      "terms": [
        { "kind": "segment", "weight": 1.0, "start": [1, 0], "end": [3, 0] }
      ] }
  ]
}"#;

    #[test]
    fn parses_two_chains() {
        let chains = parse_chain_file(TWO_SEGMENTS).unwrap();
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[1].id, "B");
    }

    #[test]
    fn zero_radius_names_term_and_line() {
        let text = r#"{
  "chains": [
    { "id": "bad",
      "terms": [
        { "kind": "circle", "weight": 1.0, "center": [0, 0], "radius": 1.0 },
        { "kind": "arc", "weight": 1.0, "center": [0, 0], "radius": 0.0,
          "theta_start": 0.0, "theta_end": 1.0 }
      ] }
  ]
}"#;
        let err = parse_chain_file(text).unwrap_err().to_string();
        assert!(err.contains("term 1"), "{err}");
        assert!(err.contains("line 6"), "{err}");
        assert!(err.contains("radius"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_chain_file("{\n \"chains\": [ { \"id\": \"x\", \"terms\": [ }\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"chains":[{"id":"x","terms":[{"kind":"segment","weight":1,"start":[0,0],"end":[1,0],"colour":"red"}]}]}"#;
        assert!(parse_chain_file(text).is_err());
        let text = r#"{"chains":[{"id":"x","terms":[{"kind":"spline","weight":1}]}]}"#;
        assert!(parse_chain_file(text).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = r#"{"chains":[{"id":"x","terms":[{"kind":"circle","weight":1,"center":[0,0],"radius":1}]},
                                 {"id":"x","terms":[{"kind":"circle","weight":1,"center":[0,0],"radius":2}]}]}"#;
        assert!(parse_chain_file(text).is_err());
    }
}
