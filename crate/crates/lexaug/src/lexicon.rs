//! Bilingual dictionaries in the MUSE two-column text format: one
//! `headword translation` pair per line, whitespace separated, with repeated
//! headwords supplying alternative translations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid UTF-8 on line {line}")]
    InvalidUtf8 { path: PathBuf, line: usize },
    #[error("{path}: no valid dictionary lines")]
    Empty { path: PathBuf },
}

/// A word-for-word translation dictionary from `from_lang` to `to_lang`.
/// Translation lists preserve first-occurrence file order, duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    from_lang: String,
    to_lang: String,
    entries: BTreeMap<String, Vec<String>>,
    malformed_lines: usize,
}

/// Aggregate shape of a lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconStats {
    pub headwords: usize,
    pub mean_translations: f64,
    pub max_translations: usize,
}

impl Lexicon {
    /// Builds a lexicon from (headword, translation) pairs in file order.
    /// Exposed for synthetic dictionaries; file input goes through
    /// [`load_lexicon`].
    pub fn from_pairs<I>(from_lang: &str, to_lang: &str, pairs: I) -> Self
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (head, translation) in pairs {
            if head.is_empty() || translation.is_empty() {
                continue;
            }
            let list = entries.entry(head).or_default();
            if !list.contains(&translation) {
                list.push(translation);
            }
        }
        Lexicon {
            from_lang: from_lang.to_string(),
            to_lang: to_lang.to_string(),
            entries,
            malformed_lines: 0,
        }
    }

    pub fn from_lang(&self) -> &str {
        &self.from_lang
    }

    pub fn to_lang(&self) -> &str {
        &self.to_lang
    }

    pub fn headword_count(&self) -> usize {
        self.entries.len()
    }

    /// Lines skipped at load time because they did not have exactly two fields.
    pub fn malformed_lines(&self) -> usize {
        self.malformed_lines
    }

    /// Exact-case lookup, then a lowercase retry when the token itself is not
    /// already lowercase. Misses return `None`.
    pub fn lookup(&self, token: &str) -> Option<&[String]> {
        if let Some(list) = self.entries.get(token) {
            return Some(list);
        }
        let lower = token.to_lowercase();
        if lower != token {
            if let Some(list) = self.entries.get(&lower) {
                return Some(list);
            }
        }
        None
    }

    pub fn stats(&self) -> LexiconStats {
        let headwords = self.entries.len();
        let total: usize = self.entries.values().map(Vec::len).sum();
        let max = self.entries.values().map(Vec::len).max().unwrap_or(0);
        LexiconStats {
            headwords,
            mean_translations: if headwords == 0 {
                0.0
            } else {
                total as f64 / headwords as f64
            },
            max_translations: max,
        }
    }

    /// Writes the MUSE two-column layout: one `headword translation` line
    /// per alternative, headwords sorted, translations in stored order.
    /// `load_lexicon` reads the result back to an equal lexicon.
    pub fn write(&self, path: &Path) -> Result<(), LexiconError> {
        let mut out = String::new();
        for (head, translations) in &self.entries {
            for t in translations {
                out.push_str(head);
                out.push(' ');
                out.push_str(t);
                out.push('\n');
            }
        }
        std::fs::write(path, out).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Loads a MUSE-format dictionary. Lines split on any whitespace (MUSE files
/// mix tabs and spaces); lines without exactly two fields are counted as
/// malformed and skipped. A file with zero valid lines is an error.
pub fn load_lexicon(path: &Path, from_lang: &str, to_lang: &str) -> Result<Lexicon, LexiconError> {
    let bytes = std::fs::read(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut malformed = 0;
    let mut valid = 0;
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| LexiconError::InvalidUtf8 {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            malformed += 1;
            continue;
        }
        valid += 1;
        let list = entries.entry(fields[0].to_string()).or_default();
        let translation = fields[1].to_string();
        if !list.contains(&translation) {
            list.push(translation);
        }
    }
    if valid == 0 {
        return Err(LexiconError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(Lexicon {
        from_lang: from_lang.to_string(),
        to_lang: to_lang.to_string(),
        entries,
        malformed_lines: malformed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_lexicon(lines: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dict.txt");
        std::fs::write(&p, lines).unwrap();
        (dir, p)
    }

    #[test]
    fn loads_simple_entries() {
        let (_d, p) = write_lexicon("stop pare\nsignals señales\n");
        let lex = load_lexicon(&p, "en", "es").unwrap();
        assert_eq!(lex.headword_count(), 2);
        assert_eq!(lex.lookup("stop").unwrap(), ["pare"]);
        assert_eq!(lex.malformed_lines(), 0);
    }

    #[test]
    fn groups_repeated_headwords_in_order() {
        let (_d, p) = write_lexicon("work trabajo\nwork obra\n");
        let lex = load_lexicon(&p, "en", "es").unwrap();
        assert_eq!(lex.lookup("work").unwrap(), ["trabajo", "obra"]);
    }

    #[test]
    fn skips_malformed_lines() {
        let (_d, p) = write_lexicon("onlyoneword\nstop pare\nthree field line\n");
        let lex = load_lexicon(&p, "en", "es").unwrap();
        assert_eq!(lex.malformed_lines(), 2);
        assert_eq!(lex.headword_count(), 1);
    }

    #[test]
    fn duplicate_lines_collapse() {
        let (_d, p) = write_lexicon("stop pare\nstop pare\nstop alto\n");
        let lex = load_lexicon(&p, "en", "es").unwrap();
        assert_eq!(lex.lookup("stop").unwrap(), ["pare", "alto"]);
    }

    #[test]
    fn tabs_accepted_as_separators() {
        let (_d, p) = write_lexicon("stop\tpare\n");
        let lex = load_lexicon(&p, "en", "es").unwrap();
        assert_eq!(lex.lookup("stop").unwrap(), ["pare"]);
    }

    #[test]
    fn empty_file_is_an_error() {
        let (_d, p) = write_lexicon("onlyoneword\n\n");
        assert!(matches!(
            load_lexicon(&p, "en", "es"),
            Err(LexiconError::Empty { .. })
        ));
    }

    #[test]
    fn lookup_lowercase_fallback() {
        let (_d, p) = write_lexicon("stop pare\n");
        let lex = load_lexicon(&p, "en", "es").unwrap();
        assert_eq!(lex.lookup("Stop").unwrap(), ["pare"]);
        assert_eq!(lex.lookup("STOP").unwrap(), ["pare"]);
        assert!(lex.lookup("transportation").is_none());
    }

    #[test]
    fn exact_case_wins_over_fallback() {
        let (_d, p) = write_lexicon("Bonn bonn-city\nbonn bonn-lower\n");
        let lex = load_lexicon(&p, "de", "en").unwrap();
        assert_eq!(lex.lookup("Bonn").unwrap(), ["bonn-city"]);
        assert_eq!(lex.lookup("bonn").unwrap(), ["bonn-lower"]);
    }

    #[test]
    fn stats_counts() {
        let lex = Lexicon::from_pairs(
            "en",
            "es",
            [
                ("work".to_string(), "trabajo".to_string()),
                ("work".to_string(), "obra".to_string()),
                ("stop".to_string(), "pare".to_string()),
            ],
        );
        let s = lex.stats();
        assert_eq!(s.headwords, 2);
        assert!((s.mean_translations - 1.5).abs() < 1e-12);
        assert_eq!(s.max_translations, 2);

        let single = Lexicon::from_pairs("en", "es", [("a".to_string(), "b".to_string())]);
        let s = single.stats();
        assert_eq!((s.headwords, s.max_translations), (1, 1));
        assert!((s.mean_translations - 1.0).abs() < 1e-12);
    }

    #[test]
    fn write_then_load_round_trips() {
        let lex = Lexicon::from_pairs(
            "en",
            "es",
            [
                ("work".to_string(), "trabajo".to_string()),
                ("work".to_string(), "obra".to_string()),
                ("stop".to_string(), "pare".to_string()),
            ],
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.txt");
        lex.write(&path).unwrap();
        let loaded = load_lexicon(&path, "en", "es").unwrap();
        assert_eq!(loaded, lex);
    }

    proptest! {
        // Permuting whole lines of distinct headwords yields the same lexicon.
        #[test]
        fn order_independent_across_headwords(mut heads in proptest::collection::vec("[a-f]{1,3}", 1..8)) {
            heads.sort();
            heads.dedup();
            let pairs: Vec<(String, String)> =
                heads.iter().map(|h| (h.clone(), format!("x{h}"))).collect();
            let forward = Lexicon::from_pairs("a", "b", pairs.clone());
            let reversed = Lexicon::from_pairs("a", "b", pairs.into_iter().rev());
            prop_assert_eq!(forward, reversed);
        }

        // Everything lookup returns was present in the input for the token
        // or its lowercase form.
        #[test]
        fn lookup_returns_only_listed_translations(
            entries in proptest::collection::vec(("[a-d]{1,2}", "[m-p]{1,3}"), 1..10),
            probe in "[a-dA-D]{1,2}",
        ) {
            let pairs: Vec<(String, String)> =
                entries.iter().map(|(h, t)| (h.clone(), t.clone())).collect();
            let lex = Lexicon::from_pairs("x", "y", pairs.clone());
            if let Some(found) = lex.lookup(&probe) {
                let lower = probe.to_lowercase();
                for tr in found {
                    prop_assert!(pairs.iter().any(|(h, t)|
                        (h == &probe || h == &lower) && t == tr));
                }
            }
        }
    }
}
