//! Rule-based tag mining from captions.
//!
//! Captions are tokenized on whitespace and punctuation (hyphens and
//! apostrophes stay inside tokens), tokens are classed as stopword /
//! adjective / noun via the bundled lexicon plus suffix heuristics, and two
//! kinds of spans become tags:
//!
//! - noun phrases: maximal `Adj* Noun+` spans, lowercased;
//! - named entities: maximal runs of capitalized tokens, original casing.
//!
//! Unknown words default to nouns, which keeps coverage high for novel
//! objects at the cost of occasional junk tags. Entity runs claim their
//! tokens first; noun-phrase spans are built from what remains, so a span
//! covered by an entity keeps its casing. Stopwords never begin or end a
//! tag, and tags longer than `max_tag_len` characters are dropped.
//!
//! A capitalized token at sentence start is ambiguous (ordinary
//! capitalization vs. name). It joins an entity run only when the following
//! token is also capitalized or when it is the sole token of its sentence;
//! otherwise it falls through to the lowercase noun-phrase path. This keeps
//! mining idempotent on its own output.

mod lexicon;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MineError {
    #[error("caption is empty after trimming")]
    EmptyCaption,
    #[error("tag is empty after normalization")]
    EmptyAfterNormalize,
    #[error("invalid tag {0:?}: {1}")]
    InvalidTag(String, &'static str),
}

/// One caption keyed by its image id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub id: String,
    pub caption: String,
}

impl CaptionRecord {
    pub fn validate(&self) -> Result<(), MineError> {
        if self.id.trim().is_empty() || self.caption.trim().is_empty() {
            return Err(MineError::EmptyCaption);
        }
        Ok(())
    }
}

/// Ordered, deduplicated, normalized tags mined from one caption.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSet {
    tags: Vec<String>,
}

impl TagSet {
    /// Validates the tag invariants: non-empty trimmed strings, no control
    /// characters, no duplicates.
    pub fn new(tags: Vec<String>) -> Result<Self, MineError> {
        let mut seen = BTreeSet::new();
        for tag in &tags {
            if tag.is_empty() {
                return Err(MineError::InvalidTag(tag.clone(), "empty"));
            }
            if tag.trim() != tag {
                return Err(MineError::InvalidTag(tag.clone(), "surrounding whitespace"));
            }
            if tag.chars().any(char::is_control) {
                return Err(MineError::InvalidTag(tag.clone(), "control character"));
            }
            if !seen.insert(tag.clone()) {
                return Err(MineError::InvalidTag(tag.clone(), "duplicate"));
            }
        }
        Ok(Self { tags })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.tags.iter()
    }
}

/// Tag grammar configuration. Defaults bundle the lexicon from
/// [`lexicon`]; the 30-character cap matches the corpus filtering rule the
/// datastore tags were designed around.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerConfig {
    /// Maximum tag length in characters (inclusive).
    pub max_tag_len: usize,
    pub stopwords: BTreeSet<String>,
    pub nouns: BTreeSet<String>,
    pub adjectives: BTreeSet<String>,
    pub noun_suffixes: Vec<String>,
    pub adjective_suffixes: Vec<String>,
    /// Toggles the capitalized-run entity pattern.
    pub extract_entities: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            max_tag_len: 30,
            stopwords: lexicon::STOPWORDS.iter().map(|s| s.to_string()).collect(),
            nouns: lexicon::NOUNS.iter().map(|s| s.to_string()).collect(),
            adjectives: lexicon::ADJECTIVES.iter().map(|s| s.to_string()).collect(),
            noun_suffixes: lexicon::NOUN_SUFFIXES.iter().map(|s| s.to_string()).collect(),
            adjective_suffixes: lexicon::ADJECTIVE_SUFFIXES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            extract_entities: true,
        }
    }
}

impl MinerConfig {
    fn is_stopword(&self, lower: &str) -> bool {
        self.stopwords.contains(lower)
    }

    fn word_class(&self, lower: &str) -> WordClass {
        if self.is_stopword(lower) {
            return WordClass::Stop;
        }
        if self.adjectives.contains(lower) {
            return WordClass::Adjective;
        }
        if self.nouns.contains(lower) {
            return WordClass::Noun;
        }
        // Unknown -ly words are adverbs: they break spans like stopwords do.
        if lower.len() >= 4 && lower.ends_with("ly") {
            return WordClass::Stop;
        }
        // Suffix heuristics need at least two stem characters.
        for suffix in &self.adjective_suffixes {
            if lower.len() >= suffix.len() + 2 && lower.ends_with(suffix.as_str()) {
                return WordClass::Adjective;
            }
        }
        for suffix in &self.noun_suffixes {
            if lower.len() >= suffix.len() + 2 && lower.ends_with(suffix.as_str()) {
                return WordClass::Noun;
            }
        }
        // Coverage-first default: unknown words are treated as nouns so
        // novel objects and entities still surface as tags.
        WordClass::Noun
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WordClass {
    Stop,
    Adjective,
    Noun,
}

#[derive(Debug)]
struct Token {
    text: String,
    lower: String,
    sentence: usize,
    sentence_start: bool,
    capitalized: bool,
    is_word: bool,
}

fn tokenize(caption: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut sentence = 0usize;
    let mut awaiting_sentence_start = true;

    let flush = |current: &mut String,
                 tokens: &mut Vec<Token>,
                 sentence: usize,
                 awaiting: &mut bool| {
        if current.is_empty() {
            return;
        }
        // Trim stray hyphens/apostrophes so "--" or "'" alone never tokenizes.
        let trimmed = current.trim_matches(|c| c == '-' || c == '\'');
        if trimmed.chars().any(char::is_alphanumeric) {
            let first = trimmed.chars().next().unwrap();
            let is_word = first.is_alphabetic();
            let sentence_start = *awaiting && is_word;
            if sentence_start {
                *awaiting = false;
            }
            tokens.push(Token {
                text: trimmed.to_string(),
                lower: trimmed.to_lowercase(),
                sentence,
                sentence_start,
                capitalized: first.is_uppercase(),
                is_word,
            });
        }
        current.clear();
    };

    for ch in caption.chars() {
        if ch.is_alphanumeric() || ch == '-' || ch == '\'' {
            current.push(ch);
        } else {
            flush(&mut current, &mut tokens, sentence, &mut awaiting_sentence_start);
            if matches!(ch, '.' | '!' | '?') {
                sentence += 1;
                awaiting_sentence_start = true;
            }
        }
    }
    flush(&mut current, &mut tokens, sentence, &mut awaiting_sentence_start);
    tokens
}

/// Trims, collapses internal whitespace runs to single spaces, and
/// lowercases unless the tag is a named entity (entities keep casing).
pub fn normalize_tag(raw: &str, is_entity: bool) -> Result<String, MineError> {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if collapsed.is_empty() {
        return Err(MineError::EmptyAfterNormalize);
    }
    Ok(if is_entity {
        collapsed
    } else {
        collapsed.to_lowercase()
    })
}

/// A capitalized token opens or extends an entity run unless it sits at a
/// sentence start, where it only qualifies when the next token of the same
/// sentence is also capitalized or when it stands alone in its sentence.
fn entity_run_member(tokens: &[Token], i: usize, config: &MinerConfig) -> bool {
    let tok = &tokens[i];
    if !tok.is_word || !tok.capitalized {
        return false;
    }
    if !tok.sentence_start {
        return true;
    }
    if config.is_stopword(&tok.lower) {
        return false;
    }
    match tokens.get(i + 1) {
        Some(next) if next.sentence == tok.sentence => next.is_word && next.capitalized,
        _ => true, // sole token of its sentence
    }
}

fn entity_runs(tokens: &[Token], config: &MinerConfig) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if entity_run_member(tokens, i, config) {
            let sentence = tokens[i].sentence;
            let start = i;
            let mut end = i;
            while end + 1 < tokens.len()
                && tokens[end + 1].sentence == sentence
                && tokens[end + 1].is_word
                && tokens[end + 1].capitalized
            {
                end += 1;
            }
            runs.push((start, end));
            i = end + 1;
        } else {
            i += 1;
        }
    }
    runs
}

/// Extracts named-entity strings as maximal capitalized-token runs,
/// original casing preserved, in occurrence order. Stopword edges are
/// trimmed (they never begin or end a tag).
pub fn extract_entities(caption: &str) -> Vec<String> {
    let config = MinerConfig::default();
    let tokens = tokenize(caption);
    entity_runs(&tokens, &config)
        .into_iter()
        .filter_map(|(start, end)| trim_stopword_edges(&tokens, start, end, &config))
        .map(|(s, e)| join_tokens(&tokens, s, e))
        .collect()
}

fn trim_stopword_edges(
    tokens: &[Token],
    mut start: usize,
    mut end: usize,
    config: &MinerConfig,
) -> Option<(usize, usize)> {
    while start <= end && config.is_stopword(&tokens[start].lower) {
        start += 1;
    }
    while end > start && config.is_stopword(&tokens[end].lower) {
        end -= 1;
    }
    if start > end {
        None
    } else {
        Some((start, end))
    }
}

fn join_tokens(tokens: &[Token], start: usize, end: usize) -> String {
    tokens[start..=end]
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Mines the union of noun-phrase and entity tags from one caption.
/// Output order is first-occurrence order in the caption.
pub fn mine_tags(caption: &str, config: &MinerConfig) -> Result<TagSet, MineError> {
    if caption.trim().is_empty() {
        return Err(MineError::EmptyCaption);
    }
    let tokens = tokenize(caption);

    // (start index, normalized tag) candidates, entities first claiming
    // their tokens.
    let mut candidates: Vec<(usize, String)> = Vec::new();
    let mut claimed = vec![false; tokens.len()];

    if config.extract_entities {
        for (run_start, run_end) in entity_runs(&tokens, config) {
            for flag in claimed.iter_mut().take(run_end + 1).skip(run_start) {
                *flag = true;
            }
            if let Some((s, e)) = trim_stopword_edges(&tokens, run_start, run_end, config) {
                if let Ok(tag) = normalize_tag(&join_tokens(&tokens, s, e), true) {
                    candidates.push((s, tag));
                }
            }
        }
    }

    // Noun-phrase spans over unclaimed tokens: maximal Adj* Noun+ within a
    // sentence.
    let mut i = 0;
    while i < tokens.len() {
        let usable = |j: usize| -> Option<WordClass> {
            let t = &tokens[j];
            if claimed[j] || !t.is_word {
                return None;
            }
            match config.word_class(&t.lower) {
                WordClass::Stop => None,
                c => Some(c),
            }
        };
        let Some(class) = usable(i) else {
            i += 1;
            continue;
        };
        let sentence = tokens[i].sentence;
        let start = i;
        let mut j = i;
        // consume adjectives
        while let Some(WordClass::Adjective) = usable(j).filter(|_| tokens[j].sentence == sentence)
        {
            j += 1;
            if j >= tokens.len() {
                break;
            }
        }
        // require at least one noun
        let noun_start = j;
        while j < tokens.len()
            && tokens[j].sentence == sentence
            && usable(j) == Some(WordClass::Noun)
        {
            j += 1;
        }
        if j > noun_start {
            if let Ok(tag) = normalize_tag(&join_tokens(&tokens, start, j - 1), false) {
                candidates.push((start, tag));
            }
            i = j;
        } else {
            // adjectives with no following noun form no tag
            i = if class == WordClass::Adjective { j.max(i + 1) } else { i + 1 };
        }
    }

    candidates.sort_by_key(|(start, _)| *start);

    let mut seen = BTreeSet::new();
    let mut tags = Vec::new();
    for (_, tag) in candidates {
        let len = tag.chars().count();
        if len == 0 || len > config.max_tag_len {
            continue;
        }
        if seen.insert(tag.clone()) {
            tags.push(tag);
        }
    }
    Ok(TagSet { tags })
}

/// Corpus statistics in the three-field report format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub unique_tags: u64,
    pub chars_per_tag: f64,
    pub tags_per_image: f64,
}

/// How the two means are computed; emitted alongside the stats.
pub const AVERAGING_CONVENTION: &str =
    "chars_per_tag averaged over distinct tags; tags_per_image averaged over all records";

/// Streaming accumulator for [`CorpusStats`]. Shards may accumulate
/// independently and merge; means are finalized at the end.
#[derive(Debug, Clone, Default)]
pub struct CorpusAccumulator {
    distinct: BTreeSet<String>,
    records: u64,
    tag_occurrences: u64,
}

impl CorpusAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, tags: &TagSet) {
        self.records += 1;
        self.tag_occurrences += tags.len() as u64;
        for tag in tags.iter() {
            self.distinct.insert(tag.clone());
        }
    }

    /// Associative merge of two partial accumulations.
    pub fn merge(&mut self, other: CorpusAccumulator) {
        self.records += other.records;
        self.tag_occurrences += other.tag_occurrences;
        self.distinct.extend(other.distinct);
    }

    pub fn finalize(&self) -> CorpusStats {
        let unique = self.distinct.len() as u64;
        let chars_per_tag = if unique == 0 {
            0.0
        } else {
            let total_chars: u64 = self.distinct.iter().map(|t| t.chars().count() as u64).sum();
            total_chars as f64 / unique as f64
        };
        let tags_per_image = if self.records == 0 {
            0.0
        } else {
            self.tag_occurrences as f64 / self.records as f64
        };
        CorpusStats {
            unique_tags: unique,
            chars_per_tag,
            tags_per_image,
        }
    }
}

/// Folds a stream of per-record tag sets into corpus statistics.
pub fn corpus_stats<'a, I>(records: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a TagSet>,
{
    let mut acc = CorpusAccumulator::new();
    for tags in records {
        acc.add(tags);
    }
    acc.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mine(caption: &str) -> Vec<String> {
        mine_tags(caption, &MinerConfig::default())
            .unwrap()
            .tags()
            .to_vec()
    }

    #[test]
    fn attributed_objects() {
        assert_eq!(
            mine("a red apple on the wooden table"),
            vec!["red apple", "wooden table"]
        );
    }

    #[test]
    fn empty_caption_is_an_error() {
        assert_eq!(
            mine_tags("   ", &MinerConfig::default()),
            Err(MineError::EmptyCaption)
        );
    }

    #[test]
    fn overlong_token_excluded() {
        let caption =
            "the extraordinarily-long-hyphenated-compound-noun-exceeding-thirty-characters sits";
        assert!(mine(caption).is_empty());
    }

    #[test]
    fn entity_mid_sentence() {
        assert_eq!(extract_entities("a photo of Diamond Head at dusk"), vec!["Diamond Head"]);
    }

    #[test]
    fn no_capitalized_runs() {
        assert!(extract_entities("the cat sat").is_empty());
    }

    #[test]
    fn sentence_initial_article_excluded() {
        assert_eq!(extract_entities("The cat saw Mount Fuji"), vec!["Mount Fuji"]);
    }

    #[test]
    fn sentence_initial_entity_kept_when_run_continues() {
        assert_eq!(extract_entities("Diamond Head at dusk"), vec!["Diamond Head"]);
    }

    #[test]
    fn sole_token_is_an_entity() {
        assert_eq!(extract_entities("Paris"), vec!["Paris"]);
    }

    #[test]
    fn entity_claims_tokens_from_noun_path() {
        let tags = mine("a photo of Diamond Head at dusk");
        assert_eq!(tags, vec!["photo", "Diamond Head", "dusk"]);
    }

    #[test]
    fn leading_stopword_trimmed_from_entity() {
        assert_eq!(extract_entities("a concert by The Beatles"), vec!["Beatles"]);
    }

    #[test]
    fn normalize_collapses_and_lowercases() {
        assert_eq!(normalize_tag("  Red   Apple ", false).unwrap(), "red apple");
    }

    #[test]
    fn normalize_preserves_entity_casing() {
        assert_eq!(normalize_tag("Diamond Head", true).unwrap(), "Diamond Head");
    }

    #[test]
    fn normalize_rejects_blank() {
        assert_eq!(normalize_tag("   ", false), Err(MineError::EmptyAfterNormalize));
    }

    #[test]
    fn duplicates_merged_in_order() {
        assert_eq!(mine("a cat and a dog and a cat"), vec!["cat", "dog"]);
    }

    #[test]
    fn stats_hand_counted() {
        let a = TagSet::new(vec!["a".into(), "bb".into()]).unwrap();
        let b = TagSet::new(vec!["bb".into(), "ccc".into()]).unwrap();
        let stats = corpus_stats([&a, &b]);
        assert_eq!(stats.unique_tags, 3);
        assert_eq!(stats.chars_per_tag, 2.0);
        assert_eq!(stats.tags_per_image, 2.0);
    }

    #[test]
    fn stats_empty_stream() {
        let stats = corpus_stats([]);
        assert_eq!(stats.unique_tags, 0);
        assert_eq!(stats.chars_per_tag, 0.0);
        assert_eq!(stats.tags_per_image, 0.0);
    }

    #[test]
    fn stats_merge_matches_single_pass() {
        let sets: Vec<TagSet> = [
            vec!["red apple", "table"],
            vec!["table", "dog"],
            vec![],
            vec!["Diamond Head"],
        ]
        .into_iter()
        .map(|tags| TagSet::new(tags.into_iter().map(String::from).collect()).unwrap())
        .collect();

        let whole = corpus_stats(sets.iter());

        let mut left = CorpusAccumulator::new();
        let mut right = CorpusAccumulator::new();
        for (i, set) in sets.iter().enumerate() {
            if i % 2 == 0 {
                left.add(set);
            } else {
                right.add(set);
            }
        }
        left.merge(right);
        assert_eq!(left.finalize(), whole);
    }

    #[test]
    fn tagset_rejects_duplicates() {
        assert!(TagSet::new(vec!["x".into(), "x".into()]).is_err());
    }

    #[test]
    fn entity_toggle_off_lowercases() {
        let config = MinerConfig {
            extract_entities: false,
            ..MinerConfig::default()
        };
        let tags = mine_tags("a photo of Diamond Head", &config).unwrap();
        assert_eq!(tags.tags(), ["photo", "diamond head"]);
    }

    proptest! {
        // Captions assembled from lexicon words plus junk tokens.
        #[test]
        fn mined_tags_respect_invariants(
            words in prop::collection::vec(
                prop::sample::select(vec![
                    "a", "the", "red", "blue", "wooden", "apple", "table", "cat", "dog",
                    "Paris", "Mount", "Fuji", "on", "of", "zzkqx", "warmly", "sat",
                ]),
                1..12,
            )
        ) {
            let caption = words.join(" ");
            let config = MinerConfig::default();
            let Ok(tags) = mine_tags(&caption, &config) else { return Ok(()); };

            // length bound and dedup
            let mut seen = std::collections::BTreeSet::new();
            for tag in tags.iter() {
                let n = tag.chars().count();
                prop_assert!(n >= 1 && n <= config.max_tag_len);
                prop_assert!(seen.insert(tag.clone()));
                prop_assert_eq!(tag.trim(), tag.as_str());
            }

            // determinism including order
            let again = mine_tags(&caption, &config).unwrap();
            prop_assert_eq!(tags.tags(), again.tags());

            // idempotence: each emitted tag re-mines to a set containing itself
            for tag in tags.iter() {
                let re = mine_tags(tag, &config).unwrap();
                prop_assert!(
                    re.tags().contains(tag),
                    "tag {:?} re-mined to {:?} from caption {:?}", tag, re.tags(), caption
                );
            }
        }
    }
}
