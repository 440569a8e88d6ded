//! Inputs describing the graph Γ: presentations, `{p,q}` tilings, graph files.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::rewriting::Presentation;

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("invalid source: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SourceError> {
    Err(SourceError::Invalid(msg.into()))
}

/// Vertex skeleton of the regular tiling by `p`-gons with `q` around each vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingSpec {
    pub p: u32,
    pub q: u32,
}

impl TilingSpec {
    /// Parses `tiling p=4 q=5`.
    pub fn parse(text: &str) -> Result<Self, SourceError> {
        let mut toks = text.split_whitespace();
        if toks.next() != Some("tiling") {
            return invalid("tiling spec must start with `tiling`");
        }
        let (mut p, mut q) = (None, None);
        for tok in toks {
            let (k, v) = tok.split_once('=').ok_or_else(|| SourceError::Invalid(format!("bad token `{tok}`")))?;
            let v: u32 = v.parse().map_err(|_| SourceError::Invalid(format!("bad number in `{tok}`")))?;
            match k {
                "p" => p = Some(v),
                "q" => q = Some(v),
                _ => return invalid(format!("unknown tiling key `{k}`")),
            }
        }
        let (p, q) = match (p, q) {
            (Some(p), Some(q)) => (p, q),
            _ => return invalid("tiling spec needs p and q"),
        };
        if p < 3 || !(3..=26).contains(&q) {
            return invalid("tiling needs p ≥ 3 and 3 ≤ q ≤ 26");
        }
        if (p - 2) * (q - 2) <= 4 {
            return invalid(format!("{{{p},{q}}} is not hyperbolic"));
        }
        Ok(TilingSpec { p, q })
    }

    /// Rotation group ⟨g,h | g^q, h², (gh)^p⟩: `g` turns about a vertex and
    /// `h` swaps the endpoints of an edge.
    pub fn presentation(&self) -> Presentation {
        let gq = "g".repeat(self.q as usize);
        let ghp = "gh".repeat(self.p as usize);
        Presentation::new("gh", "h", &[&gq, &ghp]).expect("tiling presentation is well formed")
    }
}

/// An explicit graph: `basepoint <name>`, `v <name>`, `e <name> <name> [label]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub basepoint: String,
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String, Option<String>)>,
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self, SourceError> {
        let mut basepoint = None;
        let mut vertices: Vec<String> = Vec::new();
        let mut known: BTreeSet<String> = BTreeSet::new();
        let mut edges = Vec::new();
        let mut seen_edges: BTreeSet<(String, String)> = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let at = |m: &str| SourceError::Invalid(format!("line {}: {m}", lineno + 1));
            match toks[0] {
                "basepoint" if toks.len() == 2 => {
                    if basepoint.replace(toks[1].to_string()).is_some() {
                        return Err(at("duplicate basepoint"));
                    }
                }
                "v" if toks.len() == 2 => {
                    if !known.insert(toks[1].to_string()) {
                        return Err(at("duplicate vertex"));
                    }
                    vertices.push(toks[1].to_string());
                }
                "e" if toks.len() == 3 || toks.len() == 4 => {
                    let (a, b) = (toks[1].to_string(), toks[2].to_string());
                    if a == b {
                        return Err(at("loops are not allowed"));
                    }
                    let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
                    if !seen_edges.insert(key) {
                        return Err(at("duplicate edge"));
                    }
                    edges.push((a, b, toks.get(3).map(|s| s.to_string())));
                }
                _ => return Err(at("expected `basepoint`, `v` or `e`")),
            }
        }
        for (a, b, _) in &edges {
            for n in [a, b] {
                if !known.contains(n) {
                    return invalid(format!("edge mentions undeclared vertex `{n}`"));
                }
            }
        }
        let basepoint = basepoint.ok_or_else(|| SourceError::Invalid("missing basepoint".into()))?;
        if !known.contains(&basepoint) {
            return invalid("basepoint is not a declared vertex");
        }
        let g = GraphFile { basepoint, vertices, edges };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<(), SourceError> {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for v in &self.vertices {
            adj.entry(v).or_default();
        }
        for (a, b, _) in &self.edges {
            adj.get_mut(a.as_str()).unwrap().push(b);
            adj.get_mut(b.as_str()).unwrap().push(a);
        }
        let mut seen = BTreeSet::from([self.basepoint.as_str()]);
        let mut stack = vec![self.basepoint.as_str()];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        if seen.len() != self.vertices.len() {
            return invalid("graph is not connected");
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("basepoint {}\n", self.basepoint);
        for v in &self.vertices {
            s.push_str(&format!("v {v}\n"));
        }
        for (a, b, l) in &self.edges {
            match l {
                Some(l) => s.push_str(&format!("e {a} {b} {l}\n")),
                None => s.push_str(&format!("e {a} {b}\n")),
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiling_spec_parses() {
        assert_eq!(TilingSpec::parse("tiling p=4 q=5").unwrap(), TilingSpec { p: 4, q: 5 });
        assert!(TilingSpec::parse("tiling p=4 q=4").is_err());
        assert!(TilingSpec::parse("tiling p=4").is_err());
        assert!(TilingSpec::parse("tile p=4 q=5").is_err());
    }

    #[test]
    fn graph_file_parses_and_validates() {
        let g = GraphFile::parse("basepoint a\nv a\nv b\ne a b x\n").unwrap();
        assert_eq!(g.edges.len(), 1);
        assert!(GraphFile::parse("basepoint a\nv a\nv b\ne a b\ne b a\n").is_err());
        assert!(GraphFile::parse("basepoint a\nv a\nv b\n").is_err());
        assert!(GraphFile::parse("v a\n").is_err());
        assert!(GraphFile::parse("basepoint a\nv a\ne a c\n").is_err());
        let round = GraphFile::parse(&g.to_text()).unwrap();
        assert_eq!(round, g);
    }
}
