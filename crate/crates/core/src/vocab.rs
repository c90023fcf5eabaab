use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Reserved id of the mask token in vocabularies built by this crate.
pub const MASK_ID: TokenId = 0;
/// Reserved id of the end-of-text token in vocabularies built by this crate.
pub const EOT_ID: TokenId = 1;
/// First id handed to ordinary corpus tokens.
pub const FIRST_ORDINARY_ID: TokenId = 2;

pub const MASK_TEXT: &str = "[MASK]";
pub const EOT_TEXT: &str = "[EoT]";

/// Token alphabet with two reserved ids: mask and end-of-text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    size: u32,
    mask_id: TokenId,
    eot_id: TokenId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token_to_text: Option<Vec<String>>,
    #[serde(skip)]
    text_to_token: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new(size: u32, mask_id: TokenId, eot_id: TokenId) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("vocabulary size must be positive".into()));
        }
        if mask_id >= size || eot_id >= size {
            return Err(Error::Config(format!(
                "reserved ids (mask {mask_id}, eot {eot_id}) must be below size {size}"
            )));
        }
        if mask_id == eot_id {
            return Err(Error::Config("mask and eot ids must differ".into()));
        }
        Ok(Self {
            size,
            mask_id,
            eot_id,
            token_to_text: None,
            text_to_token: HashMap::new(),
        })
    }

    /// Synthetic vocabulary of `size` ids with mask = 0 and eot = 1.
    pub fn synthetic(size: u32) -> Result<Self> {
        Self::new(size, MASK_ID, EOT_ID)
    }

    /// Builds a vocabulary whose ordinary tokens are `words`, in order, after
    /// the two reserved ids.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut texts = vec![MASK_TEXT.to_string(), EOT_TEXT.to_string()];
        let mut index = HashMap::new();
        index.insert(MASK_TEXT.to_string(), MASK_ID);
        index.insert(EOT_TEXT.to_string(), EOT_ID);
        for w in words {
            let w = w.into();
            if index.contains_key(&w) {
                return Err(Error::Config(format!("duplicate vocabulary entry {w:?}")));
            }
            index.insert(w.clone(), texts.len() as TokenId);
            texts.push(w);
        }
        let mut vocab = Self::new(texts.len() as u32, MASK_ID, EOT_ID)?;
        vocab.token_to_text = Some(texts);
        vocab.text_to_token = index;
        Ok(vocab)
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn mask_id(&self) -> TokenId {
        self.mask_id
    }

    pub fn eot_id(&self) -> TokenId {
        self.eot_id
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id < self.size
    }

    pub fn check(&self, id: TokenId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::InvalidToken { id, size: self.size })
        }
    }

    /// Ids that may appear in a decoded sequence (everything except mask).
    pub fn non_mask_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.size).filter(move |&id| id != self.mask_id)
    }

    pub fn texts(&self) -> Option<&[String]> {
        self.token_to_text.as_deref()
    }

    pub fn id_of(&self, text: &str) -> Option<TokenId> {
        if self.text_to_token.is_empty() {
            if let Some(texts) = &self.token_to_text {
                return texts.iter().position(|t| t == text).map(|i| i as TokenId);
            }
        }
        self.text_to_token.get(text).copied()
    }

    /// Maps whitespace-separated words to ids; unknown words are an error.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        text.split_whitespace()
            .map(|w| {
                self.id_of(w)
                    .ok_or_else(|| Error::Config(format!("unknown token {w:?}")))
            })
            .collect()
    }

    pub fn token_text(&self, id: TokenId) -> String {
        match &self.token_to_text {
            Some(texts) if (id as usize) < texts.len() => texts[id as usize].clone(),
            _ if id == self.mask_id => MASK_TEXT.to_string(),
            _ if id == self.eot_id => EOT_TEXT.to_string(),
            _ => format!("<{id}>"),
        }
    }

    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter().map(|&id| self.token_text(id)).collect::<Vec<_>>().join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_validated() {
        assert!(Vocabulary::new(64, 0, 1).is_ok());
        assert!(Vocabulary::new(64, 3, 3).is_err());
        assert!(Vocabulary::new(4, 0, 4).is_err());
        assert!(Vocabulary::new(0, 0, 1).is_err());
    }

    #[test]
    fn words_round_trip() {
        let v = Vocabulary::from_words(["a", "b"]).unwrap();
        assert_eq!(v.size(), 4);
        let ids = v.encode("b a b").unwrap();
        assert_eq!(ids, vec![3, 2, 3]);
        assert_eq!(v.decode(&ids), "b a b");
        assert_eq!(v.decode(&[MASK_ID, EOT_ID]), "[MASK] [EoT]");
        assert!(v.encode("c").is_err());
        assert!(Vocabulary::from_words(["a", "a"]).is_err());
    }
}
