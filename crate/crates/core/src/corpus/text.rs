//! Character-level Arabic normalization shared by analysis, metrics and alignment.

/// Arabic short vowels, tanween, shadda and sukun (U+064B..=U+0652).
pub fn is_diacritic(c: char) -> bool {
    ('\u{064B}'..='\u{0652}').contains(&c)
}

pub const TATWEEL: char = '\u{0640}';

/// Punctuation that separates tokens. Everything else that is not whitespace
/// belongs to a word.
const EXTRA_PUNCTUATION: &[char] = &[
    '،', '؛', '؟', '٪', '٫', '٬', '۔', '«', '»', '…', '“', '”', '‘', '’', '–', '—', '•', '·',
];

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || EXTRA_PUNCTUATION.contains(&c)
}

pub fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || is_punctuation(c)
}

/// Maps alef variants to bare alef and alef maqsura to ya.
pub fn unify_alef_ya(c: char) -> char {
    match c {
        'أ' | 'إ' | 'آ' => 'ا',
        'ى' => 'ي',
        other => other,
    }
}

/// Applies the two character-level normalization steps to a single char.
/// Returns `None` when the char is dropped.
#[inline]
pub fn normalize_char(c: char, strip_diacritics: bool, unify: bool) -> Option<char> {
    if strip_diacritics && (is_diacritic(c) || c == TATWEEL) {
        return None;
    }
    Some(if unify { unify_alef_ya(c) } else { c })
}

/// Diacritic/tatweel stripping plus alef/ya unification.
pub fn normalize_chars(text: &str) -> String {
    text.chars()
        .filter_map(|c| normalize_char(c, true, true))
        .collect()
}

/// Like [`normalize_chars`] but also returns, for every output char, the
/// char offset it came from in `text`.
pub fn normalize_with_offsets(text: &str) -> (Vec<char>, Vec<usize>) {
    let mut out = Vec::with_capacity(text.len());
    let mut offsets = Vec::with_capacity(text.len());
    for (i, c) in text.chars().enumerate() {
        if let Some(n) = normalize_char(c, true, true) {
            out.push(n);
            offsets.push(i);
        }
    }
    (out, offsets)
}

/// Substring by char offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()));
    let b_start = indices.nth(start).unwrap_or(text.len());
    let b_end = if end > start {
        indices.nth(end - start - 1).unwrap_or(text.len())
    } else {
        b_start
    };
    &text[b_start..b_end]
}

/// Sentence boundaries as half-open char ranges covering the whole text.
///
/// A sentence ends after a newline, or after one of `. ! ? ؟ ؛` when the next
/// char is whitespace or the end of the text.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut start = 0;
    for i in 0..chars.len() {
        let c = chars[i];
        let terminal = matches!(c, '.' | '!' | '?' | '؟' | '؛');
        if c == '\n' || (terminal && chars.get(i + 1).is_none_or(|n| n.is_whitespace())) {
            spans.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < chars.len() {
        spans.push((start, chars.len()));
    }
    spans
}

/// Index of the sentence containing char offset `pos`.
pub fn sentence_of(spans: &[(usize, usize)], pos: usize) -> Option<usize> {
    spans.iter().position(|&(s, e)| pos >= s && pos < e)
}
