use std::collections::HashMap;
use std::sync::Arc;

use crate::fst::Label;

pub const EPSILON_SYMBOL: &str = "<eps>";

#[derive(Debug, Clone, PartialEq, Eq)]
struct Inner {
    symbols: Vec<String>,
    index: HashMap<String, Label>,
}

/// Bijective map between symbol strings and dense ids. Id 0 is always
/// `<eps>`.
///
/// Cloning is cheap; the table is copied only when a shared instance is
/// mutated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    inner: Arc<Inner>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::new()
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        let mut index = HashMap::new();
        index.insert(EPSILON_SYMBOL.to_string(), 0);
        SymbolTable {
            inner: Arc::new(Inner {
                symbols: vec![EPSILON_SYMBOL.to_string()],
                index,
            }),
        }
    }

    /// Builds a table from symbols in order; duplicates and `<eps>` are
    /// skipped.
    pub fn from_symbols<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = Self::new();
        for s in symbols {
            table.add(s.as_ref());
        }
        table
    }

    /// Returns the id of `symbol`, inserting it if absent.
    pub fn add(&mut self, symbol: &str) -> Label {
        if let Some(&id) = self.inner.index.get(symbol) {
            return id;
        }
        let inner = Arc::make_mut(&mut self.inner);
        let id = inner.symbols.len() as Label;
        inner.symbols.push(symbol.to_string());
        inner.index.insert(symbol.to_string(), id);
        id
    }

    pub fn id(&self, symbol: &str) -> Option<Label> {
        self.inner.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: Label) -> Option<&str> {
        self.inner.symbols.get(id as usize).map(String::as_str)
    }

    pub fn contains_id(&self, id: Label) -> bool {
        (id as usize) < self.inner.symbols.len()
    }

    pub fn len(&self) -> usize {
        self.inner.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(id, symbol)` pairs in id order, epsilon included.
    pub fn iter(&self) -> impl Iterator<Item = (Label, &str)> + '_ {
        self.inner
            .symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (i as Label, s.as_str()))
    }

    /// Two tables denote the same alphabet when one is a prefix of the
    /// other: every id defined in both maps to the same symbol.
    pub fn compatible(&self, other: &SymbolTable) -> bool {
        if Arc::ptr_eq(&self.inner, &other.inner) {
            return true;
        }
        self.inner
            .symbols
            .iter()
            .zip(other.inner.symbols.iter())
            .all(|(a, b)| a == b)
    }

    /// Renders a label sequence, space separated.
    pub fn render(&self, labels: &[Label]) -> String {
        labels
            .iter()
            .map(|&l| self.symbol(l).unwrap_or("<?>"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
