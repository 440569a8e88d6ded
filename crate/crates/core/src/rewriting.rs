//! Group presentations and shortlex Knuth-Bendix completion.
//!
//! Reduction works on a suffix trie of reversed left-hand sides: appending a
//! letter to an irreducible word can only create a redex that ends at the new
//! letter, so [`RewritingSystem::push`] inspects suffixes only.

use std::collections::VecDeque;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::word::{shortlex_cmp, Alphabet, Symbol, Word, WordError};

pub const DEFAULT_MAX_RULES: usize = 20_000;
pub const DEFAULT_MAX_WORD_LEN: usize = 40;

#[derive(Debug, thiserror::Error)]
pub enum RewritingError {
    #[error("malformed presentation: {0}")]
    MalformedPresentation(String),
    #[error("completion exceeded {0} rules; try a different generator order")]
    LimitExceeded(usize),
    #[error("unknown generator '{0}'")]
    UnknownGenerator(char),
    #[error("word of length {len} exceeds the certified length {certified} of an incomplete system")]
    Uncertified { len: usize, certified: usize },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// A finite presentation with a symmetric generating set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<char>,
    pub involutions: Vec<char>,
    /// Shortlex order over symbols; inverses not listed follow their generator.
    pub order: Vec<char>,
    pub relators: Vec<String>,
}

impl Presentation {
    pub fn new(generators: &str, involutions: &str, relators: &[&str]) -> Result<Self, RewritingError> {
        let p = Presentation {
            generators: generators.chars().filter(|c| !c.is_whitespace()).collect(),
            involutions: involutions.chars().filter(|c| !c.is_whitespace()).collect(),
            order: Vec::new(),
            relators: relators.iter().map(|r| r.to_string()).collect(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Parses the line-oriented presentation format:
    ///
    /// ```text
    /// generators: g h
    /// involutions: h
    /// order: g G h
    /// relator: ggggg
    /// ```
    pub fn parse(text: &str) -> Result<Self, RewritingError> {
        let mut p = Presentation {
            generators: Vec::new(),
            involutions: Vec::new(),
            order: Vec::new(),
            relators: Vec::new(),
        };
        let mut seen_generators = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| {
                RewritingError::MalformedPresentation(format!("line {}: expected `key: value`", lineno + 1))
            })?;
            let names = || -> Result<Vec<char>, RewritingError> {
                value
                    .split_whitespace()
                    .map(|tok| {
                        let mut cs = tok.chars();
                        match (cs.next(), cs.next()) {
                            (Some(c), None) => Ok(c),
                            _ => Err(RewritingError::MalformedPresentation(format!(
                                "line {}: symbol names are single characters, got `{tok}`",
                                lineno + 1
                            ))),
                        }
                    })
                    .collect()
            };
            match key.trim() {
                "generators" => {
                    if seen_generators {
                        return Err(RewritingError::MalformedPresentation("duplicate `generators` line".into()));
                    }
                    seen_generators = true;
                    p.generators = names()?;
                }
                "involutions" => p.involutions.extend(names()?),
                "order" => p.order = names()?,
                "relator" => {
                    let w = value.trim();
                    if w.chars().any(char::is_whitespace) {
                        return Err(RewritingError::MalformedPresentation(format!(
                            "line {}: relators are whitespace-free",
                            lineno + 1
                        )));
                    }
                    p.relators.push(w.to_string());
                }
                other => {
                    return Err(RewritingError::MalformedPresentation(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), RewritingError> {
        let bad = |m: String| Err(RewritingError::MalformedPresentation(m));
        if self.generators.is_empty() {
            return bad("no generators".into());
        }
        for (i, &g) in self.generators.iter().enumerate() {
            if !g.is_ascii_lowercase() {
                return bad(format!("generator `{g}` must be a lowercase ASCII letter"));
            }
            if self.generators[..i].contains(&g) {
                return bad(format!("generator `{g}` declared twice"));
            }
        }
        for &c in &self.involutions {
            if !self.generators.contains(&c) {
                return bad(format!("involution `{c}` is not a generator"));
            }
        }
        let alphabet = self.alphabet()?;
        for r in &self.relators {
            if r.is_empty() {
                return bad("empty relator".into());
            }
            alphabet.parse(r)?;
        }
        Ok(())
    }

    /// Symbols in shortlex order: generators, with the inverse `G` of every
    /// non-involution `g` placed directly after it unless `order` says otherwise.
    pub fn alphabet(&self) -> Result<Alphabet, RewritingError> {
        let mut chars: Vec<char> = Vec::new();
        let is_inv = |g: char| self.involutions.contains(&g);
        let push_gen = |chars: &mut Vec<char>, c: char| {
            if !chars.contains(&c) {
                chars.push(c);
            }
        };
        for &c in &self.order {
            let base = c.to_ascii_lowercase();
            if !self.generators.contains(&base) || (c.is_ascii_uppercase() && is_inv(base)) {
                return Err(RewritingError::MalformedPresentation(format!("order mentions unknown symbol `{c}`")));
            }
            push_gen(&mut chars, c);
            if c.is_ascii_lowercase() && !is_inv(c) && !self.order.contains(&c.to_ascii_uppercase()) {
                push_gen(&mut chars, c.to_ascii_uppercase());
            }
        }
        for &g in &self.generators {
            push_gen(&mut chars, g);
            if !is_inv(g) {
                push_gen(&mut chars, g.to_ascii_uppercase());
            }
        }
        let inverse = chars
            .iter()
            .map(|&c| {
                let target = if is_inv(c.to_ascii_lowercase()) {
                    c
                } else if c.is_ascii_lowercase() {
                    c.to_ascii_uppercase()
                } else {
                    c.to_ascii_lowercase()
                };
                chars.iter().position(|&d| d == target).unwrap() as Symbol
            })
            .collect();
        Ok(Alphabet::new(chars, inverse))
    }
}

/// Suffix trie over reversed left-hand sides.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct SuffixTrie {
    width: usize,
    children: Vec<u32>,
    terminal: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl SuffixTrie {
    fn new(width: usize) -> Self {
        SuffixTrie { width, children: vec![NONE; width], terminal: vec![NONE] }
    }

    fn insert(&mut self, lhs: &[Symbol], rule: u32) {
        let mut node = 0usize;
        for &s in lhs.iter().rev() {
            let slot = node * self.width + s as usize;
            if self.children[slot] == NONE {
                let fresh = self.terminal.len() as u32;
                self.children[slot] = fresh;
                self.children.extend(std::iter::repeat_n(NONE, self.width));
                self.terminal.push(NONE);
            }
            node = self.children[slot] as usize;
        }
        self.terminal[node] = rule;
    }

    fn remove(&mut self, lhs: &[Symbol]) {
        let mut node = 0usize;
        for &s in lhs.iter().rev() {
            node = self.children[node * self.width + s as usize] as usize;
        }
        self.terminal[node] = NONE;
    }

    /// Rule whose left-hand side is a suffix of `w`, if any.
    #[inline]
    fn match_suffix(&self, w: &[Symbol]) -> Option<(u32, usize)> {
        let mut node = 0usize;
        for i in (0..w.len()).rev() {
            let next = self.children[node * self.width + w[i] as usize];
            if next == NONE {
                return None;
            }
            node = next as usize;
            let t = self.terminal[node];
            if t != NONE {
                return Some((t, i));
            }
        }
        None
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rule {
    pub lhs: Word,
    pub rhs: Word,
}

/// Shortlex rewriting system. When `complete` is false the system was built
/// with over-long equations deferred; it is still locally confluent on all
/// words of length at most `certified_len`, so normal forms of such words are
/// canonical.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RewritingSystem {
    alphabet: Alphabet,
    relators: Vec<Word>,
    rules: Vec<Rule>,
    complete: bool,
    certified_len: Option<usize>,
    trie: SuffixTrie,
}

impl RewritingSystem {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// `None` when every word has a canonical normal form.
    pub fn certified_len(&self) -> Option<usize> {
        self.certified_len
    }

    pub fn is_certified(&self, len: usize) -> bool {
        self.certified_len.is_none_or(|c| len <= c)
    }

    /// Appends `s` to the irreducible word `w`, keeping it irreducible.
    #[inline]
    pub fn push_with(&self, w: &mut Word, s: Symbol, stack: &mut Vec<Symbol>) {
        stack.clear();
        stack.push(s);
        while let Some(c) = stack.pop() {
            w.push(c);
            if let Some((rule, start)) = self.trie.match_suffix(w) {
                w.truncate(start);
                stack.extend(self.rules[rule as usize].rhs.iter().rev());
            }
        }
    }

    pub fn push(&self, w: &mut Word, s: Symbol) {
        let mut stack = Vec::new();
        self.push_with(w, s, &mut stack);
    }

    /// Fixed point of rule application (unchecked).
    pub fn normal_form(&self, w: &[Symbol]) -> Word {
        let mut out = Vec::with_capacity(w.len());
        let mut stack = Vec::new();
        for &s in w {
            self.push_with(&mut out, s, &mut stack);
        }
        out
    }

    /// Normal form, refusing words longer than the certified length.
    pub fn normal_form_checked(&self, w: &[Symbol]) -> Result<Word, RewritingError> {
        match self.certified_len {
            Some(c) if w.len() > c => Err(RewritingError::Uncertified { len: w.len(), certified: c }),
            _ => Ok(self.normal_form(w)),
        }
    }

    pub fn multiply(&self, nf: &[Symbol], gen: char) -> Result<Word, RewritingError> {
        let s = self.alphabet.symbol(gen).ok_or(RewritingError::UnknownGenerator(gen))?;
        let mut w = nf.to_vec();
        self.push(&mut w, s);
        Ok(w)
    }

    /// Normal form of `u·v`.
    pub fn product(&self, u: &[Symbol], v: &[Symbol]) -> Word {
        let mut w = self.normal_form(u);
        let mut stack = Vec::new();
        for &s in v {
            self.push_with(&mut w, s, &mut stack);
        }
        w
    }

    pub fn inverse(&self, w: &[Symbol]) -> Word {
        self.normal_form(&self.alphabet.invert(w))
    }

    /// Symbol permutations that commute with inversion and send every relator
    /// to the identity; each is an automorphism of the group fixing the
    /// generating set. The identity comes first.
    pub fn symmetries(&self) -> Vec<Vec<Symbol>> {
        let n = self.alphabet.len();
        if n > 8 {
            return vec![(0..n as Symbol).collect()];
        }
        let mut out = Vec::new();
        for perm in (0..n as Symbol).permutations(n) {
            let commutes = (0..n).all(|s| perm[self.alphabet.inverse(s as Symbol) as usize] == self.alphabet.inverse(perm[s]));
            if !commutes {
                continue;
            }
            let kills = self.relators.iter().all(|r| {
                let img: Word = r.iter().map(|&s| perm[s as usize]).collect();
                self.normal_form(&img).is_empty()
            });
            if kills {
                out.push(perm);
            }
        }
        out
    }
}

/// Shortlex Knuth-Bendix completion.
///
/// Critical pairs whose overlap word is longer than `max_word_len` are
/// deferred; if any were deferred the result has `complete == false` and
/// `certified_len == Some(max_word_len)`.
pub fn complete(p: &Presentation, max_rules: usize, max_word_len: usize) -> Result<RewritingSystem, RewritingError> {
    let alphabet = p.alphabet()?;
    let relators: Vec<Word> = p.relators.iter().map(|r| alphabet.parse(r)).collect::<Result<_, _>>()?;
    let mut kb = Completion::new(alphabet.clone());
    let mut eqs: VecDeque<(Word, Word)> = VecDeque::new();
    for s in 0..alphabet.len() as Symbol {
        let t = alphabet.inverse(s);
        if s <= t {
            eqs.push_back((vec![s, t], vec![]));
        }
        if s < t {
            eqs.push_back((vec![t, s], vec![]));
        }
    }
    for r in &relators {
        eqs.push_back((r.clone(), vec![]));
    }
    let mut deferred = false;
    let mut checked_upto = 0usize;
    loop {
        while let Some((u, v)) = eqs.pop_front() {
            let u = kb.reduce(&u);
            let v = kb.reduce(&v);
            if u == v {
                continue;
            }
            let (lhs, rhs) = if shortlex_cmp(&u, &v).is_gt() { (u, v) } else { (v, u) };
            if lhs.len() > max_word_len {
                deferred = true;
                continue;
            }
            for displaced in kb.add(lhs, rhs) {
                eqs.push_back(displaced);
            }
            if kb.active() > max_rules {
                return Err(RewritingError::LimitExceeded(max_rules));
            }
        }
        let next_id = kb.rules.len();
        let active: Vec<usize> = (0..kb.rules.len()).filter(|&i| kb.rules[i].is_some()).collect();
        for &i in &active {
            for &j in &active {
                if i < checked_upto && j < checked_upto {
                    continue;
                }
                let (l1, r1) = kb.rules[i].clone().unwrap();
                let (l2, r2) = kb.rules[j].clone().unwrap();
                for k in 1..l1.len().min(l2.len()) {
                    if l1[l1.len() - k..] != l2[..k] {
                        continue;
                    }
                    if l1.len() + l2.len() - k > max_word_len {
                        deferred = true;
                        continue;
                    }
                    let mut a = r1.clone();
                    a.extend_from_slice(&l2[k..]);
                    let mut b = l1[..l1.len() - k].to_vec();
                    b.extend_from_slice(&r2);
                    eqs.push_back((a, b));
                }
            }
        }
        checked_upto = next_id;
        if eqs.is_empty() {
            break;
        }
    }
    let mut rules: Vec<Rule> = kb.rules.into_iter().flatten().map(|(lhs, rhs)| Rule { lhs, rhs }).collect();
    rules.sort_by(|a, b| shortlex_cmp(&a.lhs, &b.lhs));
    let mut trie = SuffixTrie::new(alphabet.len());
    for (i, r) in rules.iter().enumerate() {
        trie.insert(&r.lhs, i as u32);
    }
    Ok(RewritingSystem {
        alphabet,
        relators,
        rules,
        complete: !deferred,
        certified_len: if deferred { Some(max_word_len) } else { None },
        trie,
    })
}

struct Completion {
    rules: Vec<Option<(Word, Word)>>,
    trie: SuffixTrie,
    count: usize,
}

impl Completion {
    fn new(alphabet: Alphabet) -> Self {
        Completion { rules: Vec::new(), trie: SuffixTrie::new(alphabet.len()), count: 0 }
    }

    fn active(&self) -> usize {
        self.count
    }

    fn reduce(&self, w: &[Symbol]) -> Word {
        let mut out = Vec::with_capacity(w.len());
        let mut stack = Vec::new();
        for &s in w {
            stack.clear();
            stack.push(s);
            while let Some(c) = stack.pop() {
                out.push(c);
                if let Some((rule, start)) = self.trie.match_suffix(&out) {
                    out.truncate(start);
                    let (_, rhs) = self.rules[rule as usize].as_ref().unwrap();
                    stack.extend(rhs.iter().rev());
                }
            }
        }
        out
    }

    /// Adds a rule and returns the equations of rules it made reducible.
    fn add(&mut self, lhs: Word, rhs: Word) -> Vec<(Word, Word)> {
        let mut displaced = Vec::new();
        for slot in self.rules.iter_mut() {
            let contains = match slot {
                Some((l, _)) => l.windows(lhs.len()).any(|win| win == lhs.as_slice()),
                None => false,
            };
            if contains {
                let (l, r) = slot.take().unwrap();
                self.trie.remove(&l);
                self.count -= 1;
                displaced.push((l, r));
            }
        }
        let id = self.rules.len() as u32;
        self.trie.insert(&lhs, id);
        self.rules.push(Some((lhs, rhs)));
        self.count += 1;
        for i in 0..self.rules.len() {
            if let Some((_, r)) = &self.rules[i] {
                let reduced = self.reduce(r);
                if let Some((_, r)) = &mut self.rules[i] {
                    *r = reduced;
                }
            }
        }
        displaced
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn von_dyck() -> RewritingSystem {
        let p = Presentation::new("gh", "h", &["ggggg", "ghghghgh"]).unwrap();
        complete(&p, DEFAULT_MAX_RULES, DEFAULT_MAX_WORD_LEN).unwrap()
    }

    #[test]
    fn single_involution() {
        let p = Presentation::new("a", "a", &["aa"]).unwrap();
        let rs = complete(&p, 100, 10).unwrap();
        assert!(rs.is_complete());
        assert_eq!(rs.rules().len(), 1);
        assert_eq!(rs.alphabet().format(&rs.rules()[0].lhs), "aa");
        assert!(rs.rules()[0].rhs.is_empty());
    }

    #[test]
    fn von_dyck_completes() {
        let rs = von_dyck();
        assert!(rs.is_complete());
        assert_eq!(rs.rules().len(), 11);
        let a = rs.alphabet();
        assert!(rs.normal_form(&a.parse("ghghghgh").unwrap()).is_empty());
        assert!(rs.normal_form(&a.parse("ggggg").unwrap()).is_empty());
        assert_eq!(rs.multiply(&a.parse("gggg").unwrap(), 'g').unwrap(), Vec::<Symbol>::new());
    }

    #[test]
    fn alphabet_places_inverses_after_generators() {
        let p = Presentation::new("gh", "h", &["ggggg"]).unwrap();
        assert_eq!(p.alphabet().unwrap().chars(), &['g', 'G', 'h']);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Presentation::parse("generators: g\nrelator: gx\n").is_err());
        assert!(Presentation::parse("generators: gh\n").is_err());
        assert!(Presentation::parse("relator: g\n").is_err());
        assert!(Presentation::parse("generators: g\ninvolutions: h\n").is_err());
    }

    #[test]
    fn parse_reads_all_keys() {
        let p = Presentation::parse("# comment\ngenerators: g h\ninvolutions: h\norder: g h\nrelator: ggggg\nrelator: ghghghgh\n").unwrap();
        assert_eq!(p.generators, vec!['g', 'h']);
        assert_eq!(p.relators.len(), 2);
    }

    #[test]
    fn unknown_generator_in_multiply() {
        let rs = von_dyck();
        assert!(matches!(rs.multiply(&[], 'x'), Err(RewritingError::UnknownGenerator('x'))));
    }

    #[test]
    fn von_dyck_symmetries_include_inversion_of_g() {
        let rs = von_dyck();
        let syms = rs.symmetries();
        assert_eq!(syms.len(), 2);
        assert_eq!(syms[0], vec![0, 1, 2]);
        assert_eq!(syms[1], vec![1, 0, 2]);
    }
}
