//! Word lists for the argumentation features and the spelling check.
//!
//! Lexicon files hold one entry per line; blank lines and `#` comments are
//! skipped. Entries may span several words and are matched as contiguous
//! token runs.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LexiconCategory {
    DiscourseConnectives,
    ReasoningVerbs,
    Modals,
    AbstractNouns,
    StanceAdverbials,
}

impl LexiconCategory {
    pub const ALL: [LexiconCategory; 5] = [
        LexiconCategory::DiscourseConnectives,
        LexiconCategory::ReasoningVerbs,
        LexiconCategory::Modals,
        LexiconCategory::AbstractNouns,
        LexiconCategory::StanceAdverbials,
    ];

    /// File stem, also used for feature names.
    pub fn name(self) -> &'static str {
        match self {
            LexiconCategory::DiscourseConnectives => "discourse_connectives",
            LexiconCategory::ReasoningVerbs => "reasoning_verbs",
            LexiconCategory::Modals => "modals",
            LexiconCategory::AbstractNouns => "abstract_nouns",
            LexiconCategory::StanceAdverbials => "stance_adverbials",
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            LexiconCategory::DiscourseConnectives => {
                include_str!("../../resources/lexicons/discourse_connectives.txt")
            }
            LexiconCategory::ReasoningVerbs => include_str!("../../resources/lexicons/reasoning_verbs.txt"),
            LexiconCategory::Modals => include_str!("../../resources/lexicons/modals.txt"),
            LexiconCategory::AbstractNouns => include_str!("../../resources/lexicons/abstract_nouns.txt"),
            LexiconCategory::StanceAdverbials => include_str!("../../resources/lexicons/stance_adverbials.txt"),
        }
    }
}

/// One lexicon: entries as lowercase token sequences.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    entries: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn parse(source: &str) -> std::result::Result<Self, String> {
        let mut entries: Vec<Vec<String>> = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            if entries.contains(&entry) {
                return Err(format!("line {}: duplicate entry `{line}`", i + 1));
            }
            entries.push(entry);
        }
        Ok(Lexicon { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, phrase: &str) -> bool {
        let p: Vec<String> = phrase.split_whitespace().map(str::to_lowercase).collect();
        self.entries.contains(&p)
    }

    /// Occurrences of any entry in `tokens` (already lowercased). Every
    /// starting position is checked against every entry.
    pub fn count_matches(&self, tokens: &[String]) -> usize {
        let mut n = 0;
        for start in 0..tokens.len() {
            for e in &self.entries {
                if tokens.len() - start >= e.len() && tokens[start..start + e.len()] == e[..] {
                    n += 1;
                }
            }
        }
        n
    }
}

/// The five argumentation lexicons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconSet {
    lists: Vec<(LexiconCategory, Lexicon)>,
}

impl LexiconSet {
    /// Lists shipped with the crate.
    pub fn builtin() -> Self {
        LexiconSet {
            lists: LexiconCategory::ALL
                .iter()
                .map(|&c| (c, Lexicon::parse(c.builtin()).expect("builtin lexicon is valid")))
                .collect(),
        }
    }

    /// Read `<dir>/<category>.txt` for every category.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut lists = Vec::new();
        for c in LexiconCategory::ALL {
            let path = dir.join(format!("{}.txt", c.name()));
            let src = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let lex = Lexicon::parse(&src).map_err(|m| Error::Config(format!("{}: {m}", path.display())))?;
            lists.push((c, lex));
        }
        Ok(LexiconSet { lists })
    }

    pub fn get(&self, c: LexiconCategory) -> &Lexicon {
        &self.lists.iter().find(|(k, _)| *k == c).expect("all categories present").1
    }

    pub fn iter(&self) -> impl Iterator<Item = (LexiconCategory, &Lexicon)> {
        self.lists.iter().map(|(c, l)| (*c, l))
    }
}

/// Spelling dictionary: a set of lowercase words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    words: HashSet<String>,
}

impl Dictionary {
    pub fn parse(source: &str) -> Self {
        Dictionary {
            words: source
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }

    /// Shipped English word list (50,000 frequent words).
    pub fn builtin() -> Self {
        Dictionary::parse(include_str!("../../resources/dictionary.txt"))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Dictionary::parse(&src))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    /// True when the token counts as a spelling mistake. Tokens with digits
    /// are never flagged; hyphenated tokens are checked part by part.
    pub fn is_misspelled(&self, token: &str) -> bool {
        if token.chars().any(|c| c.is_ascii_digit()) {
            return false;
        }
        let folded = token.to_lowercase().replace('’', "'");
        if self.words.contains(&folded) {
            return false;
        }
        if folded.contains('-') {
            return folded.split('-').any(|p| !p.is_empty() && !self.words.contains(p));
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn builtin_lists_cover_anchor_words() {
        let l = LexiconSet::builtin();
        let conn = l.get(LexiconCategory::DiscourseConnectives);
        assert!(conn.contains("therefore") && conn.contains("due to"));
        let rv = l.get(LexiconCategory::ReasoningVerbs);
        assert!(rv.contains("cause") && rv.contains("lead"));
        let m = l.get(LexiconCategory::Modals);
        assert!(m.contains("may") && m.contains("should"));
        let an = l.get(LexiconCategory::AbstractNouns);
        for w in ["problem", "issue", "decision", "reason"] {
            assert!(an.contains(w), "{w}");
        }
        let sa = l.get(LexiconCategory::StanceAdverbials);
        assert!(sa.contains("undoubtedly") && sa.contains("paradoxically"));
    }

    #[test]
    fn multiword_matching() {
        let lex = Lexicon::parse("due to\nthus\n# comment\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.count_matches(&toks("due to rain and due thus to")), 2);
        assert_eq!(lex.count_matches(&toks("due")), 0);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(Lexicon::parse("a\nA\n").is_err());
    }

    #[test]
    fn spelling() {
        let d = Dictionary::builtin();
        assert!(d.len() > 40_000);
        assert!(!d.is_misspelled("Great"));
        assert!(!d.is_misspelled("don't"));
        assert!(!d.is_misspelled("well-known"));
        assert!(!d.is_misspelled("2016"));
        assert!(d.is_misspelled("xyzzyq"));
        assert!(d.is_misspelled("teh-xyzzyq"));
    }
}
