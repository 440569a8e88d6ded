//! Symbols, alphabets and words over a symmetric generating set.
//!
//! A symbol is a `u8` index; indices follow the shortlex order, so comparing
//! words with [`shortlex_cmp`] is comparing their symbol vectors by length and
//! then lexicographically.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type Symbol = u8;
pub type Word = Vec<Symbol>;

/// Shortlex comparison: shorter words first, ties broken lexicographically.
pub fn shortlex_cmp(a: &[Symbol], b: &[Symbol]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    chars: Vec<char>,
    inverse: Vec<Symbol>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(char),
}

impl Alphabet {
    /// `chars[i]` names symbol `i`; `inverse[i]` is the index of its inverse.
    pub fn new(chars: Vec<char>, inverse: Vec<Symbol>) -> Self {
        assert_eq!(chars.len(), inverse.len());
        for (i, &j) in inverse.iter().enumerate() {
            assert_eq!(inverse[j as usize] as usize, i, "inverse map must be an involution");
        }
        Alphabet { chars, inverse }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn char_of(&self, s: Symbol) -> char {
        self.chars[s as usize]
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn symbol(&self, c: char) -> Option<Symbol> {
        self.chars.iter().position(|&x| x == c).map(|i| i as Symbol)
    }

    pub fn inverse(&self, s: Symbol) -> Symbol {
        self.inverse[s as usize]
    }

    pub fn is_involution(&self, s: Symbol) -> bool {
        self.inverse[s as usize] == s
    }

    /// Formal inverse: reversed word with every symbol inverted (not reduced).
    pub fn invert(&self, w: &[Symbol]) -> Word {
        w.iter().rev().map(|&s| self.inverse(s)).collect()
    }

    pub fn parse(&self, text: &str) -> Result<Word, WordError> {
        text.chars()
            .map(|c| self.symbol(c).ok_or(WordError::UnknownSymbol(c)))
            .collect()
    }

    pub fn format(&self, w: &[Symbol]) -> String {
        w.iter().map(|&s| self.char_of(s)).collect()
    }

    pub fn display<'a>(&'a self, w: &'a [Symbol]) -> DisplayWord<'a> {
        DisplayWord { alphabet: self, word: w }
    }

    /// Bits needed to pack one symbol with 0 reserved as a terminator.
    pub fn bits_per_symbol(&self) -> u32 {
        let n = self.chars.len() as u32 + 1;
        32 - (n - 1).leading_zeros()
    }
}

pub struct DisplayWord<'a> {
    alphabet: &'a Alphabet,
    word: &'a [Symbol],
}

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return f.write_str("ε");
        }
        for &s in self.word {
            write!(f, "{}", self.alphabet.char_of(s))?;
        }
        Ok(())
    }
}

/// Packs words into a `u128` so they can key hash maps without allocation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WordPacker {
    bits: u32,
    capacity: usize,
}

impl WordPacker {
    pub fn new(alphabet: &Alphabet) -> Self {
        let bits = alphabet.bits_per_symbol().max(1);
        WordPacker { bits, capacity: (128 / bits) as usize }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pack(&self, w: &[Symbol]) -> Option<u128> {
        if w.len() > self.capacity {
            return None;
        }
        let mut key = 0u128;
        for (i, &s) in w.iter().enumerate() {
            key |= ((s as u128) + 1) << (self.bits as usize * i);
        }
        Some(key)
    }
}
