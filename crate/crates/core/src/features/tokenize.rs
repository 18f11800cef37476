//! Word, punctuation and sentence tokenization.
//!
//! Word tokens are maximal runs of alphanumeric characters; an apostrophe or
//! hyphen is kept when it sits between two alphanumerics ("don't",
//! "well-known"). Every other non-whitespace character is a punctuation token
//! of its own. A sentence ends at `.`, `!` or `?` when followed by whitespace
//! and an uppercase letter, or by the end of the text.

use std::ops::Range;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenizedComment {
    pub word_tokens: Vec<String>,
    pub punct_tokens: Vec<String>,
    /// Half-open ranges into `word_tokens`; together they cover every word in order.
    pub sentences: Vec<Range<usize>>,
}

impl TokenizedComment {
    pub fn word_count(&self) -> usize {
        self.word_tokens.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    /// True when word `i` opens its sentence.
    pub fn is_sentence_initial(&self, i: usize) -> bool {
        self.sentences.iter().any(|s| s.start == i)
    }

    pub fn lowercase_words(&self) -> Vec<String> {
        self.word_tokens.iter().map(|w| w.to_lowercase()).collect()
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-')
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

pub fn tokenize(text: &str) -> TokenizedComment {
    let chars: Vec<char> = text.chars().collect();
    let mut out = TokenizedComment::default();
    let mut sentence_start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            let start = i;
            i += 1;
            loop {
                if i < chars.len() && chars[i].is_alphanumeric() {
                    i += 1;
                } else if i + 1 < chars.len() && is_joiner(chars[i]) && chars[i + 1].is_alphanumeric() {
                    i += 2;
                } else {
                    break;
                }
            }
            out.word_tokens.push(chars[start..i].iter().collect());
            continue;
        }
        if !c.is_whitespace() {
            out.punct_tokens.push(c.to_string());
            if is_terminator(c) && ends_sentence(&chars, i) && out.word_tokens.len() > sentence_start {
                out.sentences.push(sentence_start..out.word_tokens.len());
                sentence_start = out.word_tokens.len();
            }
        }
        i += 1;
    }
    if out.word_tokens.len() > sentence_start {
        out.sentences.push(sentence_start..out.word_tokens.len());
    }
    out
}

fn ends_sentence(chars: &[char], i: usize) -> bool {
    let mut j = i + 1;
    if j == chars.len() {
        return true;
    }
    if !chars[j].is_whitespace() {
        return false;
    }
    while j < chars.len() && chars[j].is_whitespace() {
        j += 1;
    }
    j == chars.len() || chars[j].is_uppercase()
}

/// Number of word tokens in `text`.
pub fn word_token_count(text: &str) -> usize {
    tokenize(text).word_count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sentences() {
        let t = tokenize("I agree. Totally.");
        assert_eq!(t.word_tokens, vec!["I", "agree", "Totally"]);
        assert_eq!(t.punct_tokens, vec![".", "."]);
        assert_eq!(t.sentences, vec![0..2, 2..3]);
    }

    #[test]
    fn empty() {
        let t = tokenize("");
        assert_eq!(t.word_count(), 0);
        assert_eq!(t.sentence_count(), 0);
        let t = tokenize("  ... !!");
        assert_eq!(t.word_count(), 0);
        assert_eq!(t.sentence_count(), 0);
        assert_eq!(t.punct_tokens.len(), 5);
    }

    #[test]
    fn abbreviation_before_lowercase_does_not_split() {
        let t = tokenize("e.g. test");
        assert_eq!(t.word_tokens, vec!["e", "g", "test"]);
        assert_eq!(t.sentence_count(), 1);
    }

    #[test]
    fn no_terminator_is_one_sentence() {
        let t = tokenize("just some words");
        assert_eq!(t.sentences, vec![0..3]);
    }

    #[test]
    fn joiners_inside_words() {
        let t = tokenize("Don't re-elect 'them' - ok-");
        assert_eq!(t.word_tokens, vec!["Don't", "re-elect", "them", "ok"]);
        assert_eq!(t.punct_tokens, vec!["'", "'", "-", "-"]);
    }

    #[test]
    fn exclamation_run() {
        let t = tokenize("GREAT!!! xyzzyq");
        assert_eq!(t.punct_tokens.len(), 3);
        // lowercase continuation: still one sentence
        assert_eq!(t.sentence_count(), 1);
        let t = tokenize("Really?! Yes. 3 people");
        assert_eq!(t.sentences, vec![0..1, 1..4]);
    }

    #[test]
    fn sentences_partition_words() {
        for s in ["A b. C d! E? f g. H", "x", "Hello. World. ", "One.Two. Three"] {
            let t = tokenize(s);
            let mut next = 0;
            for r in &t.sentences {
                assert_eq!(r.start, next);
                assert!(r.end > r.start);
                next = r.end;
            }
            assert_eq!(next, t.word_count());
        }
    }
}
