/// Normalizes one field: whitespace runs become a single space, other control
/// characters are dropped, ends are trimmed. Case and punctuation are kept.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch.is_whitespace() {
            pending_space = true;
        } else if ch.is_control() {
            continue;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(ch);
        }
    }
    out
}

/// Builds the classification text for a message: `"<subject>. <body>"` when the
/// subject is non-empty, otherwise just the body, both normalized.
pub fn clean(subject: &str, body: &str) -> String {
    let subject = normalize(subject);
    let body = normalize(body);
    if subject.is_empty() {
        body
    } else {
        normalize(&format!("{subject}. {body}"))
    }
}
