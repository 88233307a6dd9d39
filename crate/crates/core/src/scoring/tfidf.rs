//! Bundle-local TF-IDF embeddings.
//!
//! The vectorizer is fit on a single bundle's corpus (responses plus repeats)
//! so cosine comparisons share one vocabulary and bundles stay independent.
//! Settings: lowercase tokenization on Unicode letter/digit runs, raw term
//! counts, smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`, and
//! L2-normalized rows.

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in lowered.chars() {
        if c.is_alphanumeric() {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// TF-IDF rows over a shared, alphabetically ordered vocabulary.
///
/// A document with no tokens yields an all-zero row flagged degenerate; it
/// still counts toward `N` in the idf denominator.
#[derive(Debug, Clone)]
pub struct TfidfMatrix {
    pub rows: Vec<Vec<f64>>,
    pub degenerate: Vec<bool>,
    pub vocab: Vec<String>,
}

impl TfidfMatrix {
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
}

pub fn fit_transform<S: AsRef<str>>(docs: &[S]) -> TfidfMatrix {
    let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d.as_ref())).collect();

    let mut vocab: Vec<String> = tokenized
        .iter()
        .flatten()
        .cloned()
        .collect::<std::collections::BTreeSet<String>>()
        .into_iter()
        .collect();
    vocab.sort();
    let index: std::collections::HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let n_docs = docs.len() as f64;
    let mut df = vec![0usize; vocab.len()];
    for tokens in &tokenized {
        let mut seen = vec![false; vocab.len()];
        for token in tokens {
            let i = index[token.as_str()];
            if !seen[i] {
                seen[i] = true;
                df[i] += 1;
            }
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + n_docs) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    let mut rows = Vec::with_capacity(docs.len());
    let mut degenerate = Vec::with_capacity(docs.len());
    for tokens in &tokenized {
        let mut row = vec![0.0f64; vocab.len()];
        for token in tokens {
            row[index[token.as_str()]] += 1.0;
        }
        for (value, idf) in row.iter_mut().zip(&idf) {
            *value *= idf;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for value in &mut row {
                *value /= norm;
            }
            degenerate.push(false);
        } else {
            degenerate.push(true);
        }
        rows.push(row);
    }

    TfidfMatrix {
        rows,
        degenerate,
        vocab,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits_on_non_alnum() {
        assert_eq!(
            tokenize("Jobs-Report: 26 points!"),
            vec!["jobs", "report", "26", "points"]
        );
        assert_eq!(tokenize("don't"), vec!["don", "t"]);
        assert!(tokenize("!!! ...").is_empty());
    }

    #[test]
    fn identical_texts_have_cosine_one() {
        let m = fit_transform(&["same words here", "same words here"]);
        assert!((dot(&m.rows[0], &m.rows[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabulary_has_cosine_zero() {
        let m = fit_transform(&["alpha beta gamma", "delta epsilon zeta"]);
        assert_eq!(dot(&m.rows[0], &m.rows[1]), 0.0);
    }

    #[test]
    fn rows_are_unit_norm() {
        let m = fit_transform(&["a b b c", "c d", "a a a"]);
        for (row, degenerate) in m.rows.iter().zip(&m.degenerate) {
            assert!(!degenerate);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_token_doc_is_degenerate_but_counts_in_n() {
        let m = fit_transform(&["real words", "???", "real words again"]);
        assert_eq!(m.degenerate, vec![false, true, false]);
        // df("real") = 2 of N=3 docs: idf = ln(4/3) + 1
        let real_idx = m.vocab.iter().position(|t| t == "real").unwrap();
        assert!(m.rows[0][real_idx] > 0.0);
    }

    #[test]
    fn scaling_token_counts_leaves_direction_unchanged() {
        let once = fit_transform(&["gain loss", "gain gain"]);
        let thrice = fit_transform(&["gain loss gain loss gain loss", "gain gain gain gain gain gain"]);
        for (a, b) in once.rows.iter().zip(&thrice.rows) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
