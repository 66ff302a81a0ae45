use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Token table ordered by (frequency descending, token ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>, min_count: u64) -> Vocabulary {
        let mut kept: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = kept
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32))
            .collect();
        let (tokens, counts) = kept.into_iter().unzip();
        Vocabulary { tokens, counts, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: u32) -> &str {
        &self.tokens[i as usize]
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorpusOptions {
    pub min_count: u64,
    pub stopwords: HashSet<String>,
}

impl CorpusOptions {
    pub fn with_min_count(min_count: u64) -> Self {
        CorpusOptions {
            min_count,
            ..Default::default()
        }
    }

    /// Reads one stopword per line (blank lines and `#` comments ignored).
    pub fn load_stopwords(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase),
        );
        Ok(())
    }
}

/// Abstracts grouped per author, tokens replaced by vocabulary indices.
///
/// Tokens below the frequency cutoff stay in place as `None`, so window
/// distances are measured in the original text.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    authors: Vec<String>,
    docs: Vec<Vec<Vec<Option<u32>>>>,
    vocab: Vocabulary,
    excluded: Vec<String>,
}

impl Corpus {
    /// Builds a corpus from `(author, abstract)` records. Authors appear in
    /// order of first record; an author whose abstracts are all empty after
    /// tokenisation is excluded and listed in [`Corpus::excluded`].
    pub fn build<S: AsRef<str>>(records: &[(S, S)], opts: &CorpusOptions) -> Corpus {
        let mut order: Vec<String> = Vec::new();
        let mut raw: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for (author, text) in records {
            let author = author.as_ref();
            let entry = raw.entry(author.to_string()).or_insert_with(|| {
                order.push(author.to_string());
                Vec::new()
            });
            let tokens: Vec<String> = tokenize(text.as_ref())
                .into_iter()
                .filter(|t| !opts.stopwords.contains(t))
                .collect();
            if !tokens.is_empty() {
                entry.push(tokens);
            }
        }
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for docs in raw.values() {
            for t in docs.iter().flatten() {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let vocab = Vocabulary::from_counts(counts.into_iter().map(|(t, c)| (t.to_string(), c)), opts.min_count.max(1));
        let mut authors = Vec::new();
        let mut docs = Vec::new();
        let mut excluded = Vec::new();
        for a in order {
            let mine = &raw[&a];
            if mine.is_empty() {
                warn!("author {a} has no non-empty abstract; excluded");
                excluded.push(a);
                continue;
            }
            docs.push(
                mine.iter()
                    .map(|d| d.iter().map(|t| vocab.index_of(t)).collect())
                    .collect(),
            );
            authors.push(a);
        }
        Corpus {
            authors,
            docs,
            vocab,
            excluded,
        }
    }

    /// Parses `author_id <TAB> abstract` lines; several lines may share an
    /// author. Blank lines are skipped.
    pub fn parse_records(text: &str, source: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (author, body) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: source.to_string(),
                line: i + 1,
                msg: "expected `author_id<TAB>abstract`".into(),
            })?;
            let author = author.trim();
            if author.is_empty() {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line: i + 1,
                    msg: "empty author id".into(),
                });
            }
            out.push((author.to_string(), body.to_string()));
        }
        Ok(out)
    }

    pub fn load(paths: &[&Path], opts: &CorpusOptions) -> Result<Corpus> {
        let mut records = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(*p, e))?;
            records.extend(Corpus::parse_records(&text, &p.display().to_string())?);
        }
        Ok(Corpus::build(&records, opts))
    }

    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    /// Documents of the author at position `i`.
    pub fn docs(&self, i: usize) -> &[Vec<Option<u32>>] {
        &self.docs[i]
    }

    pub fn author_index(&self, id: &str) -> Option<usize> {
        self.authors.iter().position(|a| a == id)
    }

    /// Every document in author order.
    pub fn all_docs(&self) -> impl Iterator<Item = &Vec<Option<u32>>> {
        self.docs.iter().flatten()
    }

    pub fn num_tokens(&self) -> usize {
        self.all_docs().map(|d| d.iter().flatten().count()).sum()
    }
}

/// Skip-Gram `(center, context)` pairs of one document.
pub fn doc_pairs(doc: &[Option<u32>], window: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
    doc.iter().enumerate().flat_map(move |(i, &center)| {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(doc.len().saturating_sub(1));
        (lo..=hi).filter_map(move |j| match (center, doc[j]) {
            (Some(c), Some(o)) if j != i => Some((c, o)),
            _ => None,
        })
    })
}

/// All pairs of the corpus in document order.
pub fn generate_pairs(c: &Corpus, window: usize) -> Result<impl Iterator<Item = (u32, u32)> + '_> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    Ok(c.all_docs().flat_map(move |d| doc_pairs(d, window)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(records: &[(&str, &str)], min_count: u64) -> Corpus {
        Corpus::build(records, &CorpusOptions::with_min_count(min_count))
    }

    fn named_pairs(c: &Corpus, window: usize) -> Vec<(String, String)> {
        let v = c.vocabulary();
        generate_pairs(c, window)
            .unwrap()
            .map(|(a, b)| (v.token(a).to_string(), v.token(b).to_string()))
            .collect()
    }

    #[test]
    fn vocabulary_order_and_cutoff() {
        let c = corpus(&[("x", "deep graph deep")], 1);
        assert_eq!(c.vocabulary().tokens(), &["deep", "graph"]);
        assert_eq!(c.vocabulary().counts(), &[2, 1]);
        let c = corpus(&[("x", "deep graph deep")], 2);
        assert_eq!(c.vocabulary().tokens(), &["deep"]);
        assert_eq!(c.docs(0)[0], vec![Some(0), None, Some(0)]);
    }

    #[test]
    fn ties_break_alphabetically() {
        let c = corpus(&[("x", "b a c a b")], 1);
        assert_eq!(c.vocabulary().tokens(), &["a", "b", "c"]);
    }

    #[test]
    fn raw_text_is_normalised() {
        assert_eq!(tokenize("Graph-Neural nets, 2021!"), vec!["graph", "neural", "nets", "2021"]);
    }

    #[test]
    fn author_without_text_is_excluded() {
        let c = corpus(&[("x", "a b"), ("y", "  ;; "), ("z", "c")], 1);
        assert_eq!(c.authors(), &["x", "z"]);
        assert_eq!(c.excluded(), &["y"]);
    }

    #[test]
    fn stopwords_are_removed() {
        let mut opts = CorpusOptions::with_min_count(1);
        opts.stopwords.insert("the".into());
        let c = Corpus::build(&[("x", "The graph")], &opts);
        assert_eq!(c.vocabulary().tokens(), &["graph"]);
    }

    #[test]
    fn pair_examples() {
        let c = corpus(&[("x", "a b c")], 1);
        let p = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert_eq!(named_pairs(&c, 1), vec![p("a", "b"), p("b", "a"), p("b", "c"), p("c", "b")]);
        assert_eq!(
            named_pairs(&c, 2),
            vec![p("a", "b"), p("a", "c"), p("b", "a"), p("b", "c"), p("c", "a"), p("c", "b")]
        );
        assert!(named_pairs(&corpus(&[("x", "a")], 1), 3).is_empty());
        assert!(generate_pairs(&c, 0).is_err());
    }

    #[test]
    fn dropped_tokens_keep_their_positions() {
        let c = corpus(&[("x", "a rare a b b")], 2);
        // "rare" is dropped but still separates the first two tokens.
        let v = c.vocabulary();
        let pairs: Vec<(String, String)> = generate_pairs(&c, 1)
            .unwrap()
            .map(|(a, b)| (v.token(a).into(), v.token(b).into()))
            .collect();
        assert_eq!(pairs.len(), 4);
    }

    #[test]
    fn record_parsing() {
        let r = Corpus::parse_records("a\tx y\n\nb\tz\n", "f").unwrap();
        assert_eq!(r, vec![("a".into(), "x y".into()), ("b".into(), "z".into())]);
        assert!(matches!(Corpus::parse_records("no tab\n", "f"), Err(Error::Parse { line: 1, .. })));
    }
}
