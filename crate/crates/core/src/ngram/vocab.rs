use std::collections::HashMap;

use crate::dist::TokenId;
use crate::error::{Error, Result};

pub const BOS: TokenId = 0;
pub const EOS: TokenId = 1;
pub const UNK: TokenId = 2;

pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

const RESERVED: [&str; 3] = [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN];

/// Splits on Unicode whitespace, optionally lowercasing. Punctuation stays
/// attached to its word.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace()
        .map(|w| if lowercase { w.to_lowercase() } else { w.to_owned() })
        .collect()
}

/// Bijection between token strings and ids. Ids 0, 1, 2 are BOS, EOS, UNK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    token_to_id: HashMap<String, TokenId>,
    id_to_token: Vec<String>,
}

impl Vocab {
    /// Builds a vocabulary from the reserved tokens followed by `words` in the
    /// given order. Reserved strings and duplicates among `words` are rejected.
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self {
            token_to_id: HashMap::new(),
            id_to_token: Vec::new(),
        };
        for r in RESERVED {
            vocab.push(r.to_owned());
        }
        for w in words {
            let w = w.into();
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("invalid vocabulary entry {w:?}")));
            }
            if vocab.token_to_id.contains_key(&w) {
                return Err(Error::invalid(format!("duplicate vocabulary entry {w:?}")));
            }
            vocab.push(w);
        }
        Ok(vocab)
    }

    fn push(&mut self, w: String) {
        let id = self.id_to_token.len() as TokenId;
        self.token_to_id.insert(w.clone(), id);
        self.id_to_token.push(w);
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    /// Exact lookup, reserved strings included.
    pub fn lookup(&self, token: &str) -> Option<TokenId> {
        self.token_to_id.get(token).copied()
    }

    /// Id for a text token. Unknown words and literal BOS/EOS strings map to UNK.
    pub fn id(&self, token: &str) -> TokenId {
        match self.lookup(token) {
            Some(id) if id > UNK => id,
            _ => UNK,
        }
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// Number of tokens that would be mapped to UNK by [`Vocab::encode`].
    pub fn count_unknown<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        tokens.iter().filter(|t| self.id(t.as_ref()) == UNK).count()
    }

    /// Space-joined text of `ids`, skipping BOS and EOS.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|&&id| id != BOS && id != EOS)
            .map(|&id| self.token(id).unwrap_or(UNK_TOKEN))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
