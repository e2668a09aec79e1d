//! Model file format.
//!
//! A UTF-8 text file with `\n` line endings and single spaces between fields:
//!
//! ```text
//! typical-ngram
//! version 1
//! order <m>
//! lambdas <λ_1> ... <λ_m>
//! floor <α>
//! min_count <n>
//! lowercase <true|false>
//! vocab <|V|>
//! <token 0>
//! ...
//! <token |V|-1>
//! table <k> <number of contexts>
//! <c_1> ... <c_{k-1}> <number of successors> <y> <count> <y> <count> ...
//! ...
//! end
//! ```
//!
//! There is one `table` block per k = 1..m, contexts in ascending
//! lexicographic id order and successors in ascending id order. Reals are
//! written in Rust's shortest round-trip decimal form, so loading restores
//! them bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{ContextCounts, NGramModel, TrainConfig, Vocab, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN};
use crate::dist::TokenId;
use crate::error::{Error, Result};

pub const FORMAT_MAGIC: &str = "typical-ngram";
pub const FORMAT_VERSION: u32 = 1;

impl NGramModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        let cfg = self.config();
        let _ = writeln!(out, "{FORMAT_MAGIC}");
        let _ = writeln!(out, "version {FORMAT_VERSION}");
        let _ = writeln!(out, "order {}", cfg.order);
        let lambdas: Vec<String> = cfg.lambdas.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "lambdas {}", lambdas.join(" "));
        let _ = writeln!(out, "floor {}", cfg.floor);
        let _ = writeln!(out, "min_count {}", cfg.min_count);
        let _ = writeln!(out, "lowercase {}", cfg.lowercase);
        let _ = writeln!(out, "vocab {}", self.vocab().len());
        for t in self.vocab().tokens() {
            let _ = writeln!(out, "{t}");
        }
        for (i, table) in self.tables().iter().enumerate() {
            let _ = writeln!(out, "table {} {}", i + 1, table.len());
            for (ctx, counts) in table {
                let mut fields: Vec<String> = ctx.iter().map(|c| c.to_string()).collect();
                fields.push(counts.next.len().to_string());
                for (y, n) in &counts.next {
                    fields.push(y.to_string());
                    fields.push(n.to_string());
                }
                let _ = writeln!(out, "{}", fields.join(" "));
            }
        }
        out.push_str("end\n");
        out.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::format("file", e.to_string()))?;
        if !text.ends_with('\n') {
            return Err(Error::format("end", "missing final newline"));
        }
        let mut r = Reader::new(text);

        if r.line("magic")? != FORMAT_MAGIC {
            return Err(Error::format("magic", "not a typical-ngram model file"));
        }
        let version: u32 = r.keyed("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let order: usize = r.keyed("order")?;
        let lambdas: Vec<f64> = r.keyed_list("lambdas")?;
        let floor: f64 = r.keyed("floor")?;
        let min_count: u64 = r.keyed("min_count")?;
        let lowercase: bool = r.keyed("lowercase")?;
        let config = TrainConfig {
            order,
            lambdas,
            floor,
            min_count,
            lowercase,
        };
        config
            .validate()
            .map_err(|e| Error::format("header", e.to_string()))?;

        let vocab_len: usize = r.keyed("vocab")?;
        if vocab_len < 3 {
            return Err(Error::format("vocab", "fewer entries than reserved tokens"));
        }
        let mut words = Vec::with_capacity(vocab_len);
        for i in 0..vocab_len {
            words.push(r.line("vocab")?.to_owned());
            let expected = [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN].get(i);
            if let Some(&e) = expected {
                if words[i] != e {
                    return Err(Error::format("vocab", format!("entry {i} must be {e}")));
                }
            }
        }
        let vocab = Vocab::new(words.drain(3..)).map_err(|e| Error::format("vocab", e.to_string()))?;

        let mut tables = Vec::with_capacity(order);
        for k in 1..=order {
            let header = r.line("table")?;
            let parts: Vec<&str> = header.split(' ').collect();
            if parts.len() != 3 || parts[0] != "table" || parts[1] != k.to_string() {
                return Err(Error::format("table", format!("expected header for table {k}")));
            }
            let n_ctx: usize = parse(parts[2], "table")?;
            let mut table = BTreeMap::new();
            for _ in 0..n_ctx {
                let (ctx, counts) = parse_context_line(r.line("table")?, k - 1, vocab_len)?;
                if table.insert(ctx, counts).is_some() {
                    return Err(Error::format("table", format!("duplicate context in table {k}")));
                }
            }
            tables.push(table);
        }
        if r.line("end")? != "end" {
            return Err(Error::format("end", "missing end marker"));
        }
        if r.has_more() {
            return Err(Error::format("end", "trailing data after end marker"));
        }
        NGramModel::from_parts(config, vocab, tables)
    }
}

fn parse<T: std::str::FromStr>(s: &str, field: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format(field, format!("cannot parse {s:?}")))
}

fn parse_context_line(line: &str, ctx_len: usize, vocab_len: usize) -> Result<(Vec<TokenId>, ContextCounts)> {
    let fields: Vec<&str> = line.split(' ').collect();
    let id = |s: &str| -> Result<TokenId> {
        let id: TokenId = parse(s, "table")?;
        if id as usize >= vocab_len {
            return Err(Error::format("table", format!("token id {id} out of range")));
        }
        Ok(id)
    };
    if fields.len() < ctx_len + 1 {
        return Err(Error::format("table", "context line too short"));
    }
    let ctx = fields[..ctx_len].iter().map(|s| id(s)).collect::<Result<Vec<_>>>()?;
    let n_next: usize = parse(fields[ctx_len], "table")?;
    let rest = &fields[ctx_len + 1..];
    if rest.len() != 2 * n_next {
        return Err(Error::format("table", "successor count does not match line"));
    }
    let mut counts = ContextCounts::default();
    for pair in rest.chunks(2) {
        let y = id(pair[0])?;
        let n: u64 = parse(pair[1], "table")?;
        if n == 0 || counts.next.contains_key(&y) {
            return Err(Error::format("table", "zero or duplicate successor count"));
        }
        counts.add(y, n);
    }
    Ok((ctx, counts))
}

struct Reader<'a> {
    lines: std::str::Split<'a, char>,
    done: bool,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.split('\n'),
            done: false,
        }
    }

    fn line(&mut self, field: &str) -> Result<&'a str> {
        match self.lines.next() {
            Some(l) if !(l.is_empty() && self.peek_is_end()) => Ok(l),
            _ => {
                self.done = true;
                Err(Error::format(field, "unexpected end of data"))
            }
        }
    }

    // The final "\n" yields one empty trailing segment.
    fn peek_is_end(&self) -> bool {
        self.lines.clone().next().is_none()
    }

    fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.line(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => parse(v, key),
            _ => Err(Error::format(key, format!("expected `{key} <value>`"))),
        }
    }

    fn keyed_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let line = self.line(key)?;
        let mut parts = line.split(' ');
        if parts.next() != Some(key) {
            return Err(Error::format(key, format!("expected `{key} ...`")));
        }
        parts.map(|p| parse(p, key)).collect()
    }

    fn has_more(&self) -> bool {
        if self.done {
            return false;
        }
        let rest: Vec<&str> = self.lines.clone().collect();
        !(rest.is_empty() || rest == [""])
    }
}
