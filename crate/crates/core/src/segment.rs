//! Rule-based sentence splitter.
//!
//! A boundary is placed after `.`, `!`, `?` or `…` (plus any closing quotes
//! or brackets) when followed by whitespace and then an uppercase letter, a
//! digit or an opening quote. Tokens in [`ABBREVIATIONS`] never end a
//! sentence. This is a simple substitute for a statistical splitter and
//! will disagree with one on harder inputs.

use crate::corpus::{LangCode, Segment};
use crate::preprocess::is_quote;

pub const ABBREVIATIONS: &[&str] = &[
    "z.B.", "Dr.", "etc.", "asw.", "Nr.", "St.", "Mr.", "Mrs.", "Ms.", "Prof.", "vgl.", "bzw.", "ca.", "p.ex.",
    "e.g.", "i.e.", "M.", "Mme.", "S.", "Jh.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    is_quote(c) || matches!(c, ')' | ']')
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || is_quote(c) || c == '('
}

fn ends_with_abbreviation(text: &str) -> bool {
    let last = text.split_whitespace().last().unwrap_or("");
    let last = last.trim_start_matches(|c: char| is_quote(c) || c == '(');
    ABBREVIATIONS.contains(&last)
}

/// Splits `text` into sentence strings, trimmed, empties dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        while end < chars.len() && (is_terminal(chars[end].1) || is_closer(chars[end].1)) {
            end += 1;
        }
        let mut next = end;
        while next < chars.len() && chars[next].1.is_whitespace() {
            next += 1;
        }
        let end_byte = chars.get(end).map_or(text.len(), |(b, _)| *b);
        let candidate = &text[start..end_byte];
        let boundary = next > end && next < chars.len() && starts_sentence(chars[next].1) && !ends_with_abbreviation(candidate);
        if boundary {
            out.push(candidate.trim().to_string());
            start = chars[next].0;
            i = next;
        } else {
            i = end;
        }
    }
    out.push(text[start..].trim().to_string());
    out.retain(|s| !s.is_empty());
    out
}

/// Splits `text` into segments with ids `<doc_id>:<n>` (or `<n>`).
pub fn segment_sentences(text: &str, lang: &LangCode, doc_id: Option<&str>) -> Vec<Segment> {
    split_sentences(text)
        .into_iter()
        .enumerate()
        .filter_map(|(n, s)| {
            let id = match doc_id {
                Some(d) => format!("{d}:{n}"),
                None => n.to_string(),
            };
            let seg = Segment::new(id, &s, lang.clone()).ok()?;
            Some(match doc_id {
                Some(d) => seg.with_doc(d),
                None => seg,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sentences() {
        assert_eq!(split_sentences("Moien. Wéi geet et?"), vec!["Moien.", "Wéi geet et?"]);
    }

    #[test]
    fn abbreviation_protected() {
        assert_eq!(split_sentences("z.B. esou."), vec!["z.B. esou."]);
        assert_eq!(split_sentences("Den Dr. Muller kënnt. Hien ass do."), vec![
            "Den Dr. Muller kënnt.",
            "Hien ass do."
        ]);
    }

    #[test]
    fn empty_input() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   ").is_empty());
        let lb = LangCode::new("lb").unwrap();
        assert!(segment_sentences("", &lb, None).is_empty());
    }

    #[test]
    fn quotes_and_ellipsis() {
        assert_eq!(
            split_sentences("Hie sot: «Moien.» Dunn ass hie gaang… Spéider koum hien"),
            vec!["Hie sot: «Moien.»", "Dunn ass hie gaang…", "Spéider koum hien"]
        );
        assert_eq!(split_sentences("Et ass 3.5 Meter. ok"), vec!["Et ass 3.5 Meter. ok"]);
    }

    #[test]
    fn ids_carry_document() {
        let lb = LangCode::new("lb").unwrap();
        let segs = segment_sentences("Eent. Zwee.", &lb, Some("luci1"));
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].id, "luci1:1");
        assert_eq!(segs[1].doc_id.as_deref(), Some("luci1"));
    }
}
