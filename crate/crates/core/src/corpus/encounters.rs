use std::collections::HashMap;

use super::message::{Corpus, Message};

/// Keeps one message per encounter: the earliest by timestamp, ties broken by
/// the lexicographically smallest id. Surviving messages keep their relative
/// input order.
pub fn first_message_per_encounter(corpus: &Corpus) -> Corpus {
    let mut best: HashMap<&str, &Message> = HashMap::new();
    for msg in &corpus.messages {
        best.entry(msg.encounter_id.as_str())
            .and_modify(|cur| {
                if (msg.timestamp, msg.id.as_str()) < (cur.timestamp, cur.id.as_str()) {
                    *cur = msg;
                }
            })
            .or_insert(msg);
    }
    let messages = corpus
        .messages
        .iter()
        .filter(|m| best.get(m.encounter_id.as_str()).is_some_and(|b| b.id == m.id))
        .cloned()
        .collect();
    Corpus::new(messages, corpus.provenance.clone())
}
