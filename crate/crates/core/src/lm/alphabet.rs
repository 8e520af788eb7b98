use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use super::LmError;

/// Index of a symbol in its [`Alphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(pub u32);

impl Sym {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One outcome of a next-symbol distribution: a symbol, or the end of the string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Symbol(Sym),
    Eos,
}

impl Outcome {
    /// First outcome of a continuation; the empty continuation is EOS.
    pub fn first_of(v: &[Sym]) -> Outcome {
        v.first().copied().map_or(Outcome::Eos, Outcome::Symbol)
    }
}

/// Finite ordered symbol set plus a reserved end-of-string marker.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, Sym>,
    eos_marker: String,
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Alphabet")
            .field("len", &self.symbols.len())
            .field("eos_marker", &self.eos_marker)
            .finish()
    }
}

impl Alphabet {
    pub const DEFAULT_EOS: &'static str = "</s>";

    pub fn new<I, S>(symbols: I, eos_marker: impl Into<String>) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let eos_marker = eos_marker.into();
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(LmError::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if *s == eos_marker {
                return Err(LmError::EosInAlphabet(s.clone()));
            }
            if index.insert(s.clone(), Sym(i as u32)).is_some() {
                return Err(LmError::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Self {
            symbols,
            index,
            eos_marker,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn eos_marker(&self) -> &str {
        &self.eos_marker
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, sym: Sym) -> &str {
        &self.symbols[sym.index()]
    }

    pub fn outcome_name(&self, outcome: Outcome) -> &str {
        match outcome {
            Outcome::Symbol(s) => self.symbol(s),
            Outcome::Eos => &self.eos_marker,
        }
    }

    pub fn lookup(&self, token: &str) -> Option<Sym> {
        self.index.get(token).copied()
    }

    pub fn encode<I, S>(&self, tokens: I) -> Result<TokenString, LmError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        tokens
            .into_iter()
            .map(|t| {
                let t = t.as_ref();
                self.lookup(t)
                    .ok_or_else(|| LmError::UnknownToken(t.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(TokenString)
    }

    pub fn decode<'a>(&'a self, s: &[Sym]) -> Vec<&'a str> {
        s.iter().map(|&sym| self.symbol(sym)).collect()
    }

    /// Checks that every id in `s` belongs to this alphabet.
    pub fn check(&self, s: &[Sym]) -> Result<(), LmError> {
        match s.iter().find(|sym| sym.index() >= self.len()) {
            Some(bad) => Err(LmError::SymbolOutOfRange(bad.0, self.len())),
            None => Ok(()),
        }
    }
}

/// A finite string over an alphabet; the empty string is `ε`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenString(pub Vec<Sym>);

impl TokenString {
    pub fn new() -> Self {
        Self::default()
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &[Sym]) -> bool {
        other.starts_with(&self.0)
    }

    pub fn concat(&self, other: &[Sym]) -> TokenString {
        let mut v = self.0.clone();
        v.extend_from_slice(other);
        TokenString(v)
    }

    pub fn into_inner(self) -> Vec<Sym> {
        self.0
    }
}

impl Deref for TokenString {
    type Target = [Sym];
    fn deref(&self) -> &[Sym] {
        &self.0
    }
}

impl From<Vec<Sym>> for TokenString {
    fn from(v: Vec<Sym>) -> Self {
        TokenString(v)
    }
}

impl From<&[Sym]> for TokenString {
    fn from(v: &[Sym]) -> Self {
        TokenString(v.to_vec())
    }
}

impl FromIterator<Sym> for TokenString {
    fn from_iter<T: IntoIterator<Item = Sym>>(iter: T) -> Self {
        TokenString(iter.into_iter().collect())
    }
}
