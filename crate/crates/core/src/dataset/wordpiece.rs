use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::fingerprint::sha256_hex;
use crate::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

const MAX_CHARS_PER_WORD: usize = 100;

/// BERT-style WordPiece tokenizer (cased): whitespace and punctuation
/// pre-splitting, then greedy longest-match-first over the vocabulary.
#[derive(Debug, Clone)]
pub struct WordPieceTokenizer {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    pad: u32,
    unk: u32,
    cls: u32,
    sep: u32,
}

impl WordPieceTokenizer {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            ids.entry(t.clone()).or_insert(i as u32);
        }
        let need = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::Config(format!("vocabulary lacks {name}")))
        };
        Ok(WordPieceTokenizer {
            pad: need(PAD)?,
            unk: need(UNK)?,
            cls: need(CLS)?,
            sep: need(SEP)?,
            tokens,
            ids,
        })
    }

    /// Loads a `vocab.txt` (one token per line, id = line number).
    pub fn from_vocab_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tokens(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    /// Builds a vocabulary from a corpus: special tokens, every character as
    /// a word-initial and a `##` continuation piece, then whole words by
    /// descending frequency (ties broken lexically) up to `max_size`.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: usize, min_freq: usize) -> Result<Self> {
        let mut words: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            for w in basic_tokenize(text) {
                *words.entry(w.to_string()).or_default() += 1;
            }
        }
        let mut chars: Vec<char> = words.keys().flat_map(|w| w.chars()).collect();
        chars.sort_unstable();
        chars.dedup();

        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP, MASK].iter().map(|s| s.to_string()).collect();
        tokens.extend(chars.iter().map(|c| c.to_string()));
        tokens.extend(chars.iter().map(|c| format!("##{c}")));
        if tokens.len() > max_size {
            return Err(Error::Config(format!(
                "vocabulary size {max_size} cannot hold the {} base tokens",
                tokens.len()
            )));
        }

        let mut ranked: Vec<(&String, &usize)> = words
            .iter()
            .filter(|(w, &n)| n >= min_freq && w.chars().count() > 1)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let room = max_size - tokens.len();
        tokens.extend(ranked.into_iter().take(room).map(|(w, _)| w.clone()));
        Self::from_tokens(tokens)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.tokens.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.tokens.join("\n"))
    }

    pub fn pad_id(&self) -> u32 {
        self.pad
    }
    pub fn unk_id(&self) -> u32 {
        self.unk
    }
    pub fn cls_id(&self) -> u32 {
        self.cls
    }
    pub fn sep_id(&self) -> u32 {
        self.sep
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Token ids without special tokens.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for word in basic_tokenize(text) {
            self.wordpiece(word, &mut out);
        }
        out
    }

    fn wordpiece(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<(usize, char)> = word.char_indices().collect();
        if chars.len() > MAX_CHARS_PER_WORD {
            out.push(self.unk);
            return;
        }
        let mark = out.len();
        let mut start = 0;
        while start < chars.len() {
            let begin = chars[start].0;
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let stop = chars.get(end).map_or(word.len(), |c| c.0);
                let piece = &word[begin..stop];
                let id = if start == 0 {
                    self.ids.get(piece)
                } else {
                    self.ids.get(&format!("##{piece}"))
                };
                if let Some(&id) = id {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    out.push(id);
                    start = end;
                }
                None => {
                    out.truncate(mark);
                    out.push(self.unk);
                    return;
                }
            }
        }
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Whitespace split, with every punctuation character as its own token.
fn basic_tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in chunk.char_indices() {
            if is_punct(c) {
                if start < i {
                    out.push(&chunk[start..i]);
                }
                out.push(&chunk[i..i + c.len_utf8()]);
                start = i + c.len_utf8();
            }
        }
        if start < chunk.len() {
            out.push(&chunk[start..]);
        }
    }
    out
}
