use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocabulary, EOT_TEXT, MASK_TEXT};

/// Separates prompt from continuation on a corpus line.
pub const SEPARATOR: &str = "|||";
/// Optional first line of a corpus file: `# pardec-corpus <version>`.
pub const CORPUS_FORMAT: &str = "pardec-corpus";

/// Assigns ids to surface tokens in first-appearance order, after the
/// reserved mask and end-of-text ids.
#[derive(Debug, Clone, Default)]
pub struct VocabBuilder {
    words: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn id(&mut self, word: &str) -> TokenId {
        if word == EOT_TEXT {
            return crate::vocab::EOT_ID;
        }
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = crate::vocab::FIRST_ORDINARY_ID + self.words.len() as TokenId;
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn build(&self) -> Result<Vocabulary> {
        Vocabulary::from_words(self.words.iter().cloned())
    }
}

/// One corpus line. Lines without a separator have an empty continuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub prompt: Vec<TokenId>,
    pub continuation: Vec<TokenId>,
}

impl CorpusEntry {
    /// The whole line as one token sequence.
    pub fn sequence(&self) -> Vec<TokenId> {
        let mut s = self.prompt.clone();
        s.extend_from_slice(&self.continuation);
        s
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub vocab: Vocabulary,
    /// One list of entries per loaded file, in load order.
    pub files: Vec<Vec<CorpusEntry>>,
}

impl Corpus {
    pub fn entries(&self, file: usize) -> &[CorpusEntry] {
        &self.files[file]
    }

    pub fn prompts(&self, file: usize) -> Vec<Vec<TokenId>> {
        self.files[file].iter().map(|e| e.prompt.clone()).collect()
    }

    pub fn continuations(&self, file: usize) -> Vec<Vec<TokenId>> {
        self.files[file].iter().map(|e| e.continuation.clone()).collect()
    }

    /// Training sequences for an n-gram model: each line followed by `pad`
    /// end-of-text tokens.
    pub fn training_sequences(&self, file: usize, pad: usize) -> Vec<Vec<TokenId>> {
        self.files[file]
            .iter()
            .map(|e| {
                let mut s = e.sequence();
                s.extend(std::iter::repeat_n(self.vocab.eot_id(), pad));
                s
            })
            .collect()
    }
}

/// Parses corpus text. Blank lines and lines starting with `#` are skipped.
pub fn parse_corpus(text: &str, path: &Path, builder: &mut VocabBuilder) -> Result<Vec<CorpusEntry>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(version) = comment.trim().strip_prefix(CORPUS_FORMAT) {
                super::check_major(version.trim()).map_err(|e| parse_err(e.to_string()))?;
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (prompt, continuation) = match line.split_once(SEPARATOR) {
            Some((p, c)) => (p, c),
            None => (line, ""),
        };
        if continuation.contains(SEPARATOR) {
            return Err(parse_err("more than one separator".into()));
        }
        let mut encode = |part: &str| -> Result<Vec<TokenId>> {
            part.split_whitespace()
                .map(|w| {
                    if w == MASK_TEXT {
                        Err(parse_err(format!("{MASK_TEXT} is reserved")))
                    } else {
                        Ok(builder.id(w))
                    }
                })
                .collect()
        };
        let prompt = encode(prompt)?;
        let continuation = encode(continuation)?;
        if prompt.is_empty() {
            return Err(parse_err("empty prompt".into()));
        }
        entries.push(CorpusEntry { prompt, continuation });
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "empty corpus".into(),
        });
    }
    Ok(entries)
}

/// Loads corpus files into one shared vocabulary.
pub fn load_corpus<P: AsRef<Path>>(paths: &[P]) -> Result<Corpus> {
    let mut builder = VocabBuilder::new();
    let mut files = Vec::with_capacity(paths.len());
    for p in paths {
        let p = p.as_ref();
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        files.push(parse_corpus(&text, p, &mut builder)?);
    }
    Ok(Corpus {
        vocab: builder.build()?,
        files,
    })
}
