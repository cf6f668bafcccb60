use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::fingerprint;
use crate::{Error, Result};

/// Bundled Turkish stopword list (plain text, `#` comments).
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_tr.txt");

/// Text cleaning switches. Steps run in a fixed order; see [`Cleaner::clean`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleaningConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub remove_stopwords: bool,
    pub stopword_list: BTreeSet<String>,
    /// Regular expressions; every match is removed.
    pub headline_patterns: Vec<String>,
    /// Literal strings removed when they end the text.
    pub agency_suffix_patterns: Vec<String>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            lowercase: true,
            strip_punctuation: true,
            remove_stopwords: true,
            stopword_list: parse_stopwords(DEFAULT_STOPWORDS),
            headline_patterns: Vec::new(),
            agency_suffix_patterns: Vec::new(),
        }
    }
}

impl CleaningConfig {
    /// Every step off, no patterns: only whitespace normalization remains.
    pub fn passthrough() -> Self {
        CleaningConfig {
            lowercase: false,
            strip_punctuation: false,
            remove_stopwords: false,
            stopword_list: BTreeSet::new(),
            headline_patterns: Vec::new(),
            agency_suffix_patterns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.remove_stopwords && self.stopword_list.is_empty() {
            return Err(Error::Config(
                "remove_stopwords is set but stopword_list is empty".into(),
            ));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        fingerprint::of_json(self)
    }
}

/// Parses a stopword file: one word per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(turkish_lowercase)
        .collect()
}

/// Lowercasing with Turkish dotted/dotless rules: `I`→`ı`, `İ`→`i`.
pub fn turkish_lowercase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            'I' => out.push('ı'),
            'İ' => out.push('i'),
            c => out.extend(c.to_lowercase()),
        }
    }
    out
}

/// A [`CleaningConfig`] with its patterns compiled.
#[derive(Debug, Clone)]
pub struct Cleaner {
    config: CleaningConfig,
    headlines: Vec<Regex>,
}

impl Cleaner {
    pub fn new(config: CleaningConfig) -> Result<Self> {
        config.validate()?;
        let headlines = config
            .headline_patterns
            .iter()
            .map(|p| Regex::new(p).map_err(|e| Error::Config(format!("headline pattern {p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Cleaner { config, headlines })
    }

    pub fn config(&self) -> &CleaningConfig {
        &self.config
    }

    /// Applies headline stripping, agency-suffix stripping, lowercasing,
    /// punctuation removal, stopword removal and whitespace normalization,
    /// repeating the sequence until the text no longer changes. The result
    /// is therefore a fixed point: cleaning it again is a no-op.
    pub fn clean(&self, raw: &str) -> String {
        let mut current = self.pass(raw);
        loop {
            let next = self.pass(&current);
            if next == current {
                return current;
            }
            current = next;
        }
    }

    fn pass(&self, raw: &str) -> String {
        let mut text = raw.to_string();
        for re in &self.headlines {
            if re.is_match(&text) {
                text = re.replace_all(&text, " ").into_owned();
            }
        }
        text = strip_suffixes(&text, &self.config.agency_suffix_patterns);
        if self.config.lowercase {
            text = turkish_lowercase(&text);
        }
        if self.config.strip_punctuation {
            text = strip_punctuation(&text);
        }
        let tokens = text.split_whitespace();
        if self.config.remove_stopwords {
            let stop = &self.config.stopword_list;
            tokens
                .filter(|t| !stop.contains(&turkish_lowercase(t)))
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            tokens.collect::<Vec<_>>().join(" ")
        }
    }
}

/// One-shot convenience over [`Cleaner`].
pub fn clean_text(raw: &str, config: &CleaningConfig) -> Result<String> {
    Ok(Cleaner::new(config.clone())?.clean(raw))
}

fn strip_suffixes(text: &str, suffixes: &[String]) -> String {
    let mut t = text.trim_end();
    loop {
        let before = t.len();
        for s in suffixes.iter().filter(|s| !s.is_empty()) {
            if let Some(rest) = t.strip_suffix(s.as_str()) {
                t = rest.trim_end();
            }
        }
        if t.len() == before {
            return t.to_string();
        }
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '’' | '‘' | 'ʼ')
}

fn is_combining_mark(c: char) -> bool {
    ('\u{0300}'..='\u{036F}').contains(&c)
}

// Apostrophes join Turkish suffixes to proper nouns ("İstanbul'da"), so they
// are deleted; every other punctuation or symbol becomes a separator.
fn strip_punctuation(text: &str) -> String {
    text.chars()
        .filter(|c| !is_apostrophe(*c))
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() || is_combining_mark(c) {
                c
            } else {
                ' '
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn lowercase_only() -> CleaningConfig {
        CleaningConfig {
            lowercase: true,
            ..CleaningConfig::passthrough()
        }
    }

    #[test]
    fn turkish_casing() {
        assert_eq!(
            clean_text("İSTANBUL Haberi", &lowercase_only()).unwrap(),
            "istanbul haberi"
        );
        assert_eq!(turkish_lowercase("IĞDIR"), "ığdır");
        assert_ne!(turkish_lowercase("I"), "i");
    }

    #[test]
    fn agency_suffix() {
        let cfg = CleaningConfig {
            agency_suffix_patterns: vec!["(AA)".into()],
            ..CleaningConfig::passthrough()
        };
        assert_eq!(clean_text("metin sonu (AA)", &cfg).unwrap(), "metin sonu");
        // only trailing occurrences are removed
        assert_eq!(clean_text("(AA) metin", &cfg).unwrap(), "(AA) metin");
    }

    #[test]
    fn headline_pattern() {
        let cfg = CleaningConfig {
            headline_patterns: vec![r"SON DAKİKA[:!]?".into()],
            ..CleaningConfig::passthrough()
        };
        assert_eq!(
            clean_text("SON DAKİKA: deprem oldu", &cfg).unwrap(),
            "deprem oldu"
        );
    }

    #[test]
    fn punctuation_and_stopwords() {
        let cfg = CleaningConfig::default();
        assert_eq!(
            clean_text("Bakan, İstanbul'da ve Ankara'da konuştu!", &cfg).unwrap(),
            "bakan istanbulda ankarada konuştu"
        );
    }

    #[test]
    fn stopwords_require_list() {
        let cfg = CleaningConfig {
            remove_stopwords: true,
            ..CleaningConfig::passthrough()
        };
        assert!(Cleaner::new(cfg).is_err());
    }

    #[test]
    fn cleaning_to_empty() {
        assert_eq!(clean_text("ve ile de", &CleaningConfig::default()).unwrap(), "");
    }

    #[test]
    fn fixed_point_across_steps() {
        // the pattern only matches after lowercasing; a second sweep catches it
        let cfg = CleaningConfig {
            headline_patterns: vec!["son dakika".into()],
            ..lowercase_only()
        };
        let c = Cleaner::new(cfg).unwrap();
        let once = c.clean("SON DAKİKA olay");
        assert_eq!(once, "olay");
        assert_eq!(c.clean(&once), once);
    }

    #[test]
    fn default_stopwords_parse() {
        let s = parse_stopwords(DEFAULT_STOPWORDS);
        assert_eq!(s.len(), 53);
        assert!(s.contains("ve"));
        assert!(!s.iter().any(|w| w.starts_with('#')));
    }

    proptest! {
        #[test]
        fn idempotent(raw in "[ a-zA-ZçğıöşüÇĞİÖŞÜ0-9.,;:!?'()\\-]{0,80}") {
            let mut cfg = CleaningConfig::default();
            cfg.headline_patterns = vec!["ab+".into()];
            cfg.agency_suffix_patterns = vec!["(AA)".into(), "aa".into()];
            let c = Cleaner::new(cfg).unwrap();
            let once = c.clean(&raw);
            prop_assert_eq!(c.clean(&once), once);
        }

        #[test]
        fn passthrough_only_normalizes_whitespace(raw in "\\PC{0,60}") {
            let c = Cleaner::new(CleaningConfig::passthrough()).unwrap();
            let expected = raw.split_whitespace().collect::<Vec<_>>().join(" ");
            prop_assert_eq!(c.clean(&raw), expected);
        }

        #[test]
        fn turkish_mode_never_maps_capital_i_to_dotted(raw in "[Iİıi a-z]{0,30}") {
            let lowered = turkish_lowercase(&raw);
            let dotless = raw.chars().filter(|&ch| ch == 'I' || ch == 'ı').count();
            prop_assert_eq!(lowered.chars().filter(|&ch| ch == 'ı').count(), dotless);
        }
    }
}
