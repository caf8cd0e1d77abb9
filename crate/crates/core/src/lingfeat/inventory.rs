use std::collections::HashMap;

/// Closed label set with stable integer codes (`0..len`), in registration
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inventory {
    labels: Vec<String>,
    codes: HashMap<String, u32>,
}

const UNIVERSAL_POS: &[&str] = &[
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

const UNIVERSAL_RELATIONS: &[&str] = &[
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf", "compound",
    "conj", "cop", "csubj", "dep", "det", "discourse", "dislocated", "expl", "fixed", "flat",
    "goeswith", "iobj", "list", "mark", "nmod", "nsubj", "nummod", "obj", "obl", "orphan",
    "parataxis", "punct", "reparandum", "root", "vocative", "xcomp",
];

impl Inventory {
    /// Registers labels in order; repeats keep their first code.
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut inv = Self {
            labels: Vec::new(),
            codes: HashMap::new(),
        };
        for l in labels {
            inv.register(l.into());
        }
        inv
    }

    /// The 17 Universal Dependencies UPOS tags.
    pub fn universal_pos() -> Self {
        Self::new(UNIVERSAL_POS.iter().copied())
    }

    /// The 37 Universal Dependencies relation labels.
    pub fn universal_relations() -> Self {
        Self::new(UNIVERSAL_RELATIONS.iter().copied())
    }

    pub fn register(&mut self, label: String) -> u32 {
        if let Some(&c) = self.codes.get(&label) {
            return c;
        }
        let code = self.labels.len() as u32;
        self.codes.insert(label.clone(), code);
        self.labels.push(label);
        code
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Code of `label`; a subtyped relation such as `nsubj:pass` falls back to
    /// its base label when only the base is registered.
    pub fn code(&self, label: &str) -> Option<u32> {
        self.codes.get(label).copied().or_else(|| {
            let (base, _) = label.split_once(':')?;
            self.codes.get(base).copied()
        })
    }

    pub fn label(&self, code: u32) -> Option<&str> {
        self.labels.get(code as usize).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}
