//! JSONL generation records.

use serde::{Deserialize, Serialize};
use typical_core::generation::{GenerationRecord, Termination};
use typical_core::metrics::TextSequence;
use typical_core::{StrategyConfig, TokenId, Vocab};

/// One line of a generations file. Each line is a self-contained JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLine {
    pub index: usize,
    /// Prompt as the model saw it (UNK-mapped words appear as `<unk>`).
    pub prompt: String,
    pub prompt_ids: Vec<TokenId>,
    /// Continuation without the terminal EOS.
    pub text: String,
    /// Continuation ids, terminal EOS included when emitted.
    pub token_ids: Vec<TokenId>,
    pub seed: u64,
    pub strategy: StrategyConfig,
    pub max_len: usize,
    pub terminated_by: Termination,
    pub q_log_probs: Vec<f64>,
    pub pi_log_probs: Vec<f64>,
    pub entropies: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl GenerationLine {
    pub fn from_record(index: usize, record: &GenerationRecord, vocab: &Vocab) -> Self {
        let col = |f: fn(&typical_core::TokenDiagnostics) -> f64| record.per_token.iter().map(f).collect();
        Self {
            index,
            prompt: vocab.decode(&record.prompt),
            prompt_ids: record.prompt.clone(),
            text: vocab.decode(record.content()),
            token_ids: record.generated.clone(),
            seed: record.seed,
            strategy: record.strategy,
            max_len: record.max_len,
            terminated_by: record.terminated_by,
            q_log_probs: col(|t| t.q_log_prob),
            pi_log_probs: col(|t| t.pi_log_prob),
            entropies: col(|t| t.entropy),
            epsilons: col(|t| t.epsilon),
        }
    }

    /// Text view used for evaluation under any model.
    pub fn to_sequence(&self) -> TextSequence {
        TextSequence {
            context: self.prompt.split_whitespace().map(str::to_owned).collect(),
            tokens: self.text.split_whitespace().map(str::to_owned).collect(),
            ends_with_eos: self.terminated_by == Termination::Eos,
        }
    }
}

pub fn to_jsonl(lines: &[GenerationLine]) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(l).expect("generation lines serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<GenerationLine>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}
