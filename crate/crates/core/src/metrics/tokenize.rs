//! 13a-style tokenization for BLEU.
//!
//! Steps, applied in order to ` line `:
//!
//! 1. drop `<skipped>`, join `-\n` hyphenations, turn newlines into spaces,
//!    and unescape `&quot; &amp; &lt; &gt;`;
//! 2. pad every character in `{ | } ~ [ \ ] ^ _ `` ` and ASCII space
//!    through `&`, `(` through `+`, `:` through `@`, and `/` with spaces;
//! 3. split `.` and `,` off anything that is not a digit, on either side;
//! 4. split `-` after a digit;
//! 5. split on whitespace.
//!
//! Non-ASCII characters are never split, so `«` or `’` stay attached.

use std::sync::OnceLock;

use regex::Regex;

struct Rules {
    punct: Regex,
    period_after: Regex,
    period_before: Regex,
    dash: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        punct: Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap(),
        period_after: Regex::new(r"([^0-9])([\.,])").unwrap(),
        period_before: Regex::new(r"([\.,])([^0-9])").unwrap(),
        dash: Regex::new(r"([0-9])(-)").unwrap(),
    })
}

pub fn tokenize_13a(line: &str) -> Vec<String> {
    let mut line = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let r = rules();
    let line = format!(" {line} ");
    let line = r.punct.replace_all(&line, " ${1} ");
    let line = r.period_after.replace_all(&line, "${1} ${2} ");
    let line = r.period_before.replace_all(&line, " ${1} ${2}");
    let line = r.dash.replace_all(&line, "${1} ${2} ");
    line.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(s: &str) -> String {
        tokenize_13a(s).join(" ")
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(tok("Hello, world!"), "Hello , world !");
        assert_eq!(tok("It costs 3.50 euros."), "It costs 3.50 euros .");
        assert_eq!(tok("1,000 people"), "1,000 people");
        assert_eq!(tok("(a) \"b\" c/d"), "( a ) \" b \" c / d");
        assert_eq!(tok("10-15 km"), "10 - 15 km");
        assert_eq!(tok("well-known"), "well-known");
        assert_eq!(tok("Tom &amp; Jerry"), "Tom & Jerry");
    }

    #[test]
    fn unicode_left_alone() {
        assert_eq!(tok("«Moien» d’Kand"), "«Moien» d’Kand");
        assert_eq!(tok("Éischt."), "Éischt .");
    }

    #[test]
    fn empty() {
        assert!(tokenize_13a("").is_empty());
        assert!(tokenize_13a("   ").is_empty());
    }
}
