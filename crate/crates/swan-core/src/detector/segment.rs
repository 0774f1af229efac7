//! Rule-based sentence segmentation: split on `.`/`?`/`!` followed by
//! whitespace and an uppercase letter, with an abbreviation stoplist and a
//! single-initial guard so "Dr. Smith" and "John A. Smith" stay together.

/// Abbreviations whose trailing period does not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "Prof", "Sr", "Jr", "St", "Rev", "Hon", "Gen", "Sgt", "Capt", "Col",
    "Lt", "Gov", "Sen", "Rep", "Pres", "Supt", "Det", "Mt", "Ft", "vs", "etc", "approx", "dept",
    "est", "min", "max", "no", "No", "Inc", "Ltd", "Co", "Corp", "Ave", "Blvd", "Rd", "Jan",
    "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov", "Dec", "U.S", "U.K",
    "U.N", "a.m", "p.m", "e.g", "i.e", "Ph.D", "D.C",
];

/// Splits a paragraph into trimmed sentences.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '?' | '!') {
            // Consume a run of terminators plus immediate closing quotes.
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '.' | '?' | '!' | '"' | '\u{201d}' | '\'') {
                end += 1;
            }
            if splits_here(&chars, start, i, end) {
                let sentence: String = chars[start..end].iter().collect();
                let trimmed = sentence.trim();
                if !trimmed.is_empty() {
                    sentences.push(trimmed.to_string());
                }
                start = end;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    let tail: String = chars[start..].iter().collect();
    let trimmed = tail.trim();
    if !trimmed.is_empty() {
        sentences.push(trimmed.to_string());
    }
    sentences
}

fn splits_here(chars: &[char], start: usize, term: usize, end: usize) -> bool {
    // Next non-whitespace must exist, be preceded by whitespace, and be
    // uppercase.
    let mut j = end;
    let mut saw_ws = false;
    while j < chars.len() && chars[j].is_whitespace() {
        saw_ws = true;
        j += 1;
    }
    if j >= chars.len() {
        return true; // paragraph end closes the sentence
    }
    if !saw_ws || !chars[j].is_uppercase() {
        return false;
    }
    if chars[term] != '.' {
        return true; // `?` and `!` always split
    }
    // Token before the period, over word chars and internal periods
    // ("U.S" for the final dot of "U.S.").
    let mut k = term;
    while k > start {
        let p = chars[k - 1];
        if p.is_alphanumeric() || p == '.' || p == '-' {
            k -= 1;
        } else {
            break;
        }
    }
    let token: String = chars[k..term].iter().collect();
    if token.is_empty() {
        return true;
    }
    // Single uppercase letter reads as a person's initial.
    if token.chars().count() == 1 && token.chars().next().unwrap().is_uppercase() {
        return false;
    }
    !ABBREVIATIONS.contains(&token.as_str())
}
