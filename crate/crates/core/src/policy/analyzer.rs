use super::EmotionLexicon;

/// Mean valence/arousal over whole-word, case-insensitive lexicon matches.
/// The opinion proxy y is the valence. No match yields zeros.
pub fn analyze_message(text: &str, lexicon: &EmotionLexicon) -> ([f64; 2], f64) {
    let mut sum = [0.0, 0.0];
    let mut n = 0usize;
    for token in text.split(|c: char| !c.is_alphanumeric()) {
        if token.is_empty() {
            continue;
        }
        if let Some(va) = lexicon.lookup_term(&token.to_lowercase()) {
            sum[0] += va[0];
            sum[1] += va[1];
            n += 1;
        }
    }
    if n == 0 {
        return ([0.0, 0.0], 0.0);
    }
    let va = [sum[0] / n as f64, sum[1] / n as f64];
    (va, va[0])
}
