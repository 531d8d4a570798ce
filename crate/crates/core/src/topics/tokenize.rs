/// Common English function words dropped before topic modeling.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "but", "by", "can", "could", "did", "do",
    "does", "for", "from", "get", "good", "had", "has", "have", "he", "hello", "her", "hi",
    "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "know", "let", "like",
    "me", "more", "morning", "much", "my", "need", "no", "not", "now", "of", "on", "or",
    "our", "out", "over", "please", "she", "should", "so", "some", "still", "than", "thank",
    "thanks", "that", "the", "their", "them", "then", "there", "these", "they", "this", "to",
    "too", "up", "us", "very", "was", "we", "were", "what", "when", "which", "who", "will",
    "with", "would", "you", "your",
];

/// Lowercased alphanumeric tokens of length ≥ 2, excluding stopwords and
/// pure numbers.
pub fn topic_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
        .filter(|t| STOPWORDS.binary_search(&t.as_str()).is_err())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_list_is_sorted() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tokens() {
        assert_eq!(
            topic_tokens("Hi, my MRI showed 2 abnormal results; is it bad?"),
            vec!["mri", "showed", "abnormal", "results", "bad"]
        );
    }
}
