//! Text-derived feature groups: length, argumentation, named entities,
//! readability and text quality.

use super::lexicon::{Dictionary, LexiconSet};
use super::tokenize::TokenizedComment;

/// SMOG value of a text with no polysyllabic words.
pub const SMOG_BASE: f64 = 3.1291;
const SMOG_SLOPE: f64 = 1.043;

/// `[word tokens, sentences, mean word length (chars), mean words per sentence]`.
pub fn length_features(t: &TokenizedComment) -> [f64; 4] {
    let words = t.word_count();
    let sentences = t.sentence_count();
    let chars: usize = t.word_tokens.iter().map(|w| w.chars().count()).sum();
    let mean_word = if words > 0 { chars as f64 / words as f64 } else { 0.0 };
    let per_sentence = if sentences > 0 {
        words as f64 / sentences as f64
    } else {
        0.0
    };
    [words as f64, sentences as f64, mean_word, per_sentence]
}

/// Per-category lexicon hits divided by word count, in [`LexiconCategory::ALL`] order.
///
/// [`LexiconCategory::ALL`]: super::lexicon::LexiconCategory::ALL
pub fn argumentation_features(t: &TokenizedComment, lex: &LexiconSet) -> [f64; 5] {
    let mut out = [0.0; 5];
    let words = t.word_count();
    if words == 0 {
        return out;
    }
    let lower = t.lowercase_words();
    for (slot, (_, l)) in out.iter_mut().zip(lex.iter()) {
        *slot = l.count_matches(&lower) as f64 / words as f64;
    }
    out
}

/// Raw lexicon hit counts, same order as [`argumentation_features`].
pub fn argumentation_counts(t: &TokenizedComment, lex: &LexiconSet) -> [usize; 5] {
    let lower = t.lowercase_words();
    let mut out = [0; 5];
    for (slot, (_, l)) in out.iter_mut().zip(lex.iter()) {
        *slot = l.count_matches(&lower);
    }
    out
}

/// Words that may open a sentence capitalised without naming anything.
const FUNCTION_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "because", "before", "both",
    "but", "by", "can", "could", "did", "do", "does", "each", "even", "every", "for", "from", "had", "has",
    "have", "he", "her", "here", "his", "how", "i", "i'd", "i'll", "i'm", "i've", "if", "in", "is", "it",
    "it's", "its", "just", "let", "many", "maybe", "more", "most", "my", "no", "not", "now", "of", "oh", "ok",
    "on", "one", "only", "or", "our", "perhaps", "please", "she", "since", "so", "some", "such", "than",
    "thank", "thanks", "that", "that's", "the", "their", "then", "there", "these", "they", "this", "those",
    "to", "too", "unless", "very", "was", "we", "well", "were", "what", "when", "where", "whether", "which",
    "while", "who", "why", "will", "with", "would", "yes", "yet", "you", "your",
];

fn is_function_word(w: &str) -> bool {
    let lw = w.to_lowercase().replace('’', "'");
    FUNCTION_WORDS.binary_search(&lw.as_str()).is_ok()
}

fn is_capitalized(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

/// Named-entity count: maximal runs of capitalised word tokens.
///
/// The pronoun "I" (and contractions) never counts. A run that starts a
/// sentence loses its first token when that token is a function word, and a
/// run made only of the sentence-initial token is dropped.
pub fn named_entity_count(t: &TokenizedComment) -> f64 {
    let words = &t.word_tokens;
    let mut count = 0usize;
    let mut i = 0;
    while i < words.len() {
        if !is_capitalized(&words[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < words.len() && is_capitalized(&words[i]) {
            i += 1;
        }
        let mut run = start..i;
        if t.is_sentence_initial(run.start) && is_function_word(&words[run.start]) {
            run.start += 1;
        }
        // standalone "I", "I'm", ...
        let tokens: Vec<&str> = words[run.clone()]
            .iter()
            .map(String::as_str)
            .filter(|w| !w.to_lowercase().starts_with("i'") && *w != "I")
            .collect();
        if tokens.is_empty() {
            continue;
        }
        if run.len() == 1 && t.is_sentence_initial(run.start) {
            continue;
        }
        count += 1;
    }
    count as f64
}

/// Vowel-group syllable estimate: each run of `aeiouy` is one syllable, a
/// trailing silent `e` is dropped (but not in a consonant + "le" ending),
/// and every word has at least one.
pub fn syllable_count(word: &str) -> usize {
    let w: Vec<char> = word
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphabetic())
        .collect();
    if w.is_empty() {
        return 0;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let n = w.len();
    if n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2]) && groups > 1 {
        let le_ending = w[n - 2] == 'l' && n >= 3 && !is_vowel(w[n - 3]);
        if !le_ending {
            groups -= 1;
        }
    }
    groups.max(1)
}

pub fn is_polysyllable(word: &str) -> bool {
    syllable_count(word) >= 3
}

/// SMOG grade from raw counts.
pub fn smog_from_counts(polysyllables: usize, sentences: usize) -> f64 {
    if sentences == 0 {
        return SMOG_BASE;
    }
    SMOG_SLOPE * (polysyllables as f64 * 30.0 / sentences as f64).sqrt() + SMOG_BASE
}

pub fn smog_readability(t: &TokenizedComment) -> f64 {
    let poly = t.word_tokens.iter().filter(|w| is_polysyllable(w)).count();
    smog_from_counts(poly, t.sentence_count())
}

const FIRST_PERSON: &[&str] = &[
    "i", "i'd", "i'll", "i'm", "i've", "me", "mine", "my", "myself", "our", "ours", "ourselves", "us", "we",
    "we'd", "we'll", "we're", "we've",
];

const IRREGULAR_PAST: &[&str] = &[
    "ate", "became", "began", "bought", "brought", "built", "came", "caught", "chose", "did", "drove", "fell",
    "felt", "flew", "forgot", "found", "gave", "got", "grew", "had", "heard", "held", "kept", "knew", "left",
    "lost", "made", "meant", "met", "paid", "ran", "read", "said", "sat", "saw", "sent", "spent", "spoke",
    "stood", "taught", "thought", "told", "took", "understood", "was", "went", "were", "won", "wore", "wrote",
];

fn is_past_cue(lw: &str) -> bool {
    IRREGULAR_PAST.binary_search(&lw).is_ok() || (lw.len() > 3 && lw.ends_with("ed"))
}

/// (first-person pronouns + past-tense cues) / word count.
pub fn personal_experience_score(t: &TokenizedComment) -> f64 {
    let words = t.word_count();
    if words == 0 {
        return 0.0;
    }
    let hits = t
        .word_tokens
        .iter()
        .map(|w| w.to_lowercase().replace('’', "'"))
        .filter(|lw| FIRST_PERSON.binary_search(&lw.as_str()).is_ok() || is_past_cue(lw))
        .count();
    hits as f64 / words as f64
}

/// Word tokens of two or more characters whose letters are all uppercase.
pub fn caps_word_count(t: &TokenizedComment) -> usize {
    t.word_tokens
        .iter()
        .filter(|w| {
            let letters: Vec<char> = w.chars().filter(|c| c.is_alphabetic()).collect();
            w.chars().count() >= 2 && letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
        })
        .count()
}

/// `[SMOG, personal experience, misspellings, CAPS words, punctuation tokens]`.
pub fn text_quality_features(t: &TokenizedComment, dict: &Dictionary) -> [f64; 5] {
    let misspelled = t.word_tokens.iter().filter(|w| dict.is_misspelled(w)).count();
    [
        smog_readability(t),
        personal_experience_score(t),
        misspelled as f64,
        caps_word_count(t) as f64,
        t.punct_tokens.len() as f64,
    ]
}

#[cfg(test)]
mod tests {
    use super::super::tokenize::tokenize;
    use super::*;

    #[test]
    fn sorted_tables() {
        for table in [FUNCTION_WORDS, FIRST_PERSON, IRREGULAR_PAST] {
            assert!(table.windows(2).all(|w| w[0] < w[1]), "{:?}", table);
        }
    }

    #[test]
    fn length_hand_count() {
        let f = length_features(&tokenize("I agree. Totally."));
        assert_eq!(f[0], 3.0);
        assert_eq!(f[1], 2.0);
        assert!((f[2] - 13.0 / 3.0).abs() < 1e-12);
        assert_eq!(f[3], 1.5);
        assert_eq!(length_features(&tokenize("")), [0.0; 4]);
    }

    #[test]
    fn argumentation_hits() {
        let lex = LexiconSet::builtin();
        let t = tokenize("We should fix this, therefore…");
        let c = argumentation_counts(&t, &lex);
        assert!(c[0] >= 1, "connectives {c:?}");
        assert!(c[2] >= 1, "modals {c:?}");
        let f = argumentation_features(&t, &lex);
        assert!((f[2] - c[2] as f64 / 5.0).abs() < 1e-12);
        assert_eq!(argumentation_features(&tokenize(""), &lex), [0.0; 5]);
        assert_eq!(argumentation_features(&tokenize("cats purr loudly"), &lex), [0.0; 5]);
    }

    #[test]
    fn named_entities() {
        assert_eq!(named_entity_count(&tokenize("I met Justin Trudeau in Ottawa")), 2.0);
        assert_eq!(named_entity_count(&tokenize("all lowercase here")), 0.0);
        assert_eq!(named_entity_count(&tokenize("Hello")), 0.0);
        assert_eq!(named_entity_count(&tokenize("The Liberals won. Then I left.")), 1.0);
        assert_eq!(named_entity_count(&tokenize("Trudeau Senior spoke")), 1.0);
    }

    #[test]
    fn syllables() {
        assert_eq!(syllable_count("cat"), 1);
        assert_eq!(syllable_count("make"), 1);
        assert_eq!(syllable_count("table"), 2);
        assert_eq!(syllable_count("the"), 1);
        assert_eq!(syllable_count("government"), 3);
        assert_eq!(syllable_count("responsibility"), 6);
        assert_eq!(syllable_count("rhythm"), 1);
        assert_eq!(syllable_count("42"), 0);
    }

    #[test]
    fn smog_cases() {
        assert_eq!(smog_from_counts(0, 7), SMOG_BASE);
        assert_eq!(smog_from_counts(5, 0), SMOG_BASE);
        let expected = 1.043 * 30f64.sqrt() + 3.1291;
        assert!((smog_from_counts(30, 30) - expected).abs() < 1e-12);
        assert!((smog_from_counts(1, 1) - expected).abs() < 1e-12);
        assert!((expected - 8.8418).abs() < 1e-3);
    }

    #[test]
    fn text_quality_counts() {
        let d = Dictionary::builtin();
        let f = text_quality_features(&tokenize("GREAT!!! xyzzyq"), &d);
        assert_eq!(f[3], 1.0);
        assert_eq!(f[4], 3.0);
        assert!(f[2] >= 1.0);
        assert_eq!(text_quality_features(&tokenize(""), &d), [SMOG_BASE, 0.0, 0.0, 0.0, 0.0]);
        let f = text_quality_features(&tokenize("I remember when I worked there"), &d);
        assert!(f[1] > 0.0);
    }
}
