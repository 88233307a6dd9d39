//! Lexicon-and-rules sentiment scorer (VADER 3.3.2 behavior).
//!
//! This is a faithful port of the published reference algorithm, including
//! its idiosyncrasies, because downstream disparity scores are only
//! comparable across runs if the engine is bit-stable: token stripping that
//! keeps short emoticon remnants, the "no"-as-negation special case, the
//! booster window with 0.95/0.9 distance damping, caps and punctuation
//! emphasis, special-case idioms, the contrastive-"but" rescale (which
//! rewrites the first occurrence of a duplicated value, as the reference
//! does), and alpha-15 normalization of the summed valence.
//!
//! The lexicon files bundled under `data/` are the reference distribution's
//! lexicons (MIT licensed). Duplicate lexicon lines resolve last-wins, same
//! as a dict rebuild.

use std::collections::HashMap;

const RAW_LEXICON: &str = include_str!("../../data/vader_lexicon.txt");
const RAW_EMOJI_LEXICON: &str = include_str!("../../data/emoji_utf8_lexicon.txt");

const B_INCR: f64 = 0.293;
const B_DECR: f64 = -0.293;
const C_INCR: f64 = 0.733;
const N_SCALAR: f64 = -0.74;
const NORMALIZATION_ALPHA: f64 = 15.0;

const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

const NEGATE: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt",
    "ain't", "aren't", "can't", "couldn't", "daren't", "didn't", "doesn't",
    "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt", "neither",
    "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't",
    "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing", "nowhere",
    "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent",
    "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't",
    "without", "wont", "wouldnt", "won't", "wouldn't", "rarely", "seldom", "despite",
];

fn booster_dict() -> &'static HashMap<&'static str, f64> {
    static BOOSTERS: std::sync::OnceLock<HashMap<&'static str, f64>> = std::sync::OnceLock::new();
    BOOSTERS.get_or_init(|| {
        let mut m = HashMap::new();
        for w in [
            "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably",
            "decidedly", "deeply", "effing", "enormous", "enormously", "entirely", "especially",
            "exceptional", "exceptionally", "extreme", "extremely", "fabulously", "flipping",
            "flippin", "frackin", "fracking", "fricking", "frickin", "frigging", "friggin",
            "fully", "fuckin", "fucking", "fuggin", "fugging", "greatly", "hella", "highly",
            "hugely", "incredible", "incredibly", "intensely", "major", "majorly", "more",
            "most", "particularly", "purely", "quite", "really", "remarkably", "so",
            "substantially", "thoroughly", "total", "totally", "tremendous", "tremendously",
            "uber", "unbelievably", "unusually", "utter", "utterly", "very",
        ] {
            m.insert(w, B_INCR);
        }
        for w in [
            "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof",
            "kind-of", "less", "little", "marginal", "marginally", "occasional",
            "occasionally", "partly", "scarce", "scarcely", "slight", "slightly", "somewhat",
            "sort of", "sorta", "sortof", "sort-of",
        ] {
            m.insert(w, B_DECR);
        }
        m
    })
}

fn special_cases() -> &'static HashMap<&'static str, f64> {
    static CASES: std::sync::OnceLock<HashMap<&'static str, f64>> = std::sync::OnceLock::new();
    CASES.get_or_init(|| {
        HashMap::from([
            ("the shit", 3.0),
            ("the bomb", 3.0),
            ("bad ass", 1.5),
            ("badass", 1.5),
            ("bus stop", 0.0),
            ("yeah right", -2.0),
            ("kiss of death", -1.5),
            ("to die for", 3.0),
            ("beating heart", 3.1),
            ("broken heart", -2.9),
        ])
    })
}

/// Per-text polarity breakdown; `compound` is the headline score in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarityScores {
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
    pub compound: f64,
}

pub struct SentimentAnalyzer {
    lexicon: HashMap<String, f64>,
    emoji: HashMap<char, String>,
}

impl Default for SentimentAnalyzer {
    fn default() -> Self {
        Self::new()
    }
}

impl SentimentAnalyzer {
    pub fn new() -> Self {
        let mut lexicon = HashMap::new();
        for line in RAW_LEXICON.trim_end_matches('\n').split('\n') {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.trim().split('\t');
            let word = parts.next().unwrap_or_default();
            if let Some(measure) = parts.next().and_then(|m| m.parse::<f64>().ok()) {
                lexicon.insert(word.to_string(), measure);
            }
        }
        let mut emoji = HashMap::new();
        for line in RAW_EMOJI_LEXICON.trim_end_matches('\n').split('\n') {
            let mut parts = line.trim_end().split('\t');
            if let (Some(symbol), Some(description)) = (parts.next(), parts.next()) {
                let mut chars = symbol.chars();
                if let (Some(c), None) = (chars.next(), chars.next()) {
                    emoji.insert(c, description.to_string());
                }
            }
        }
        SentimentAnalyzer { lexicon, emoji }
    }

    pub fn lexicon_len(&self) -> usize {
        self.lexicon.len()
    }

    pub fn compound(&self, text: &str) -> f64 {
        self.polarity_scores(text).compound
    }

    pub fn polarity_scores(&self, text: &str) -> PolarityScores {
        // swap single-char emojis for their textual descriptions
        let mut replaced = String::with_capacity(text.len());
        let mut prev_space = true;
        for c in text.chars() {
            if let Some(description) = self.emoji.get(&c) {
                if !prev_space {
                    replaced.push(' ');
                }
                replaced.push_str(description);
                prev_space = false;
            } else {
                prev_space = c == ' ';
                replaced.push(c);
            }
        }
        let text = replaced.trim();

        let tokens = words_and_emoticons(text);
        let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let is_cap_diff = allcap_differential(&tokens);

        let mut sentiments: Vec<f64> = Vec::with_capacity(tokens.len());
        for i in 0..tokens.len() {
            if booster_dict().contains_key(lower[i].as_str()) {
                sentiments.push(0.0);
                continue;
            }
            if i < tokens.len() - 1 && lower[i] == "kind" && lower[i + 1] == "of" {
                sentiments.push(0.0);
                continue;
            }
            sentiments.push(self.sentiment_valence(&tokens, &lower, is_cap_diff, i));
        }

        but_check(&lower, &mut sentiments);
        self.score_valence(&sentiments, text)
    }

    fn sentiment_valence(
        &self,
        tokens: &[String],
        lower: &[String],
        is_cap_diff: bool,
        i: usize,
    ) -> f64 {
        let Some(&lex_valence) = self.lexicon.get(lower[i].as_str()) else {
            return 0.0;
        };
        let mut valence = lex_valence;

        // "no" before a lexicon word acts as a negator, not as its own hit
        if lower[i] == "no" && i != tokens.len() - 1 && self.lexicon.contains_key(lower[i + 1].as_str())
        {
            valence = 0.0;
        }
        if (i > 0 && lower[i - 1] == "no")
            || (i > 1 && lower[i - 2] == "no")
            || (i > 2 && lower[i - 3] == "no" && (lower[i - 1] == "or" || lower[i - 1] == "nor"))
        {
            valence = lex_valence * N_SCALAR;
        }

        if is_upper(&tokens[i]) && is_cap_diff {
            if valence > 0.0 {
                valence += C_INCR;
            } else {
                valence -= C_INCR;
            }
        }

        for start_i in 0..3usize {
            if i > start_i && !self.lexicon.contains_key(lower[i - (start_i + 1)].as_str()) {
                let mut s = scalar_inc_dec(
                    &tokens[i - (start_i + 1)],
                    &lower[i - (start_i + 1)],
                    valence,
                    is_cap_diff,
                );
                if start_i == 1 && s != 0.0 {
                    s *= 0.95;
                }
                if start_i == 2 && s != 0.0 {
                    s *= 0.9;
                }
                valence += s;
                valence = negation_check(valence, lower, start_i, i);
                if start_i == 2 {
                    valence = special_idioms_check(valence, lower, i);
                }
            }
        }

        self.least_check(valence, lower, i)
    }

    fn least_check(&self, valence: f64, lower: &[String], i: usize) -> f64 {
        if i > 1
            && !self.lexicon.contains_key(lower[i - 1].as_str())
            && lower[i - 1] == "least"
        {
            if lower[i - 2] != "at" && lower[i - 2] != "very" {
                return valence * N_SCALAR;
            }
            valence
        } else if i > 0
            && !self.lexicon.contains_key(lower[i - 1].as_str())
            && lower[i - 1] == "least"
        {
            valence * N_SCALAR
        } else {
            valence
        }
    }

    fn score_valence(&self, sentiments: &[f64], text: &str) -> PolarityScores {
        if sentiments.is_empty() {
            return PolarityScores {
                neg: 0.0,
                neu: 0.0,
                pos: 0.0,
                compound: 0.0,
            };
        }
        let mut sum_s: f64 = sentiments.iter().sum();
        let punct_amplifier = punctuation_emphasis(text);
        if sum_s > 0.0 {
            sum_s += punct_amplifier;
        } else if sum_s < 0.0 {
            sum_s -= punct_amplifier;
        }
        let compound = normalize(sum_s);

        let (mut pos_sum, mut neg_sum, neu_count) = sift_sentiment_scores(sentiments);
        if pos_sum > neg_sum.abs() {
            pos_sum += punct_amplifier;
        } else if pos_sum < neg_sum.abs() {
            neg_sum -= punct_amplifier;
        }
        let total = pos_sum + neg_sum.abs() + neu_count as f64;

        PolarityScores {
            neg: decimal_round((neg_sum / total).abs(), 3),
            neu: decimal_round((neu_count as f64 / total).abs(), 3),
            pos: decimal_round((pos_sum / total).abs(), 3),
            compound: decimal_round(compound, 4),
        }
    }
}

/// Whitespace-split tokens with leading/trailing punctuation stripped; tokens
/// whose stripped form is two chars or shorter keep their original spelling
/// (preserves emoticons like ":)" and short contractions).
fn words_and_emoticons(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|token| {
            let stripped = token.trim_matches(|c| PUNCTUATION.contains(c));
            if stripped.chars().count() <= 2 {
                token.to_string()
            } else {
                stripped.to_string()
            }
        })
        .collect()
}

/// Python `str.isupper`: at least one cased character and no lowercase ones.
fn is_upper(token: &str) -> bool {
    let mut has_cased = false;
    for c in token.chars() {
        if c.is_lowercase() {
            return false;
        }
        if c.is_uppercase() {
            has_cased = true;
        }
    }
    has_cased
}

/// True when some but not all tokens are ALL CAPS.
fn allcap_differential(tokens: &[String]) -> bool {
    let allcaps = tokens.iter().filter(|t| is_upper(t)).count();
    allcaps > 0 && allcaps < tokens.len()
}

fn negated(word_lower: &str) -> bool {
    NEGATE.contains(&word_lower) || word_lower.contains("n't")
}

fn normalize(score: f64) -> f64 {
    let norm = score / (score * score + NORMALIZATION_ALPHA).sqrt();
    norm.clamp(-1.0, 1.0)
}

fn scalar_inc_dec(token: &str, token_lower: &str, valence: f64, is_cap_diff: bool) -> f64 {
    let Some(&base) = booster_dict().get(token_lower) else {
        return 0.0;
    };
    let mut scalar = base;
    if valence < 0.0 {
        scalar *= -1.0;
    }
    if is_upper(token) && is_cap_diff {
        if valence > 0.0 {
            scalar += C_INCR;
        } else {
            scalar -= C_INCR;
        }
    }
    scalar
}

fn negation_check(valence: f64, lower: &[String], start_i: usize, i: usize) -> f64 {
    match start_i {
        0 => {
            if negated(&lower[i - 1]) {
                valence * N_SCALAR
            } else {
                valence
            }
        }
        1 => {
            if lower[i - 2] == "never" && (lower[i - 1] == "so" || lower[i - 1] == "this") {
                valence * 1.25
            } else if lower[i - 2] == "without" && lower[i - 1] == "doubt" {
                valence
            } else if negated(&lower[i - 2]) {
                valence * N_SCALAR
            } else {
                valence
            }
        }
        2 => {
            if (lower[i - 3] == "never" && (lower[i - 2] == "so" || lower[i - 2] == "this"))
                || (lower[i - 1] == "so" || lower[i - 1] == "this")
            {
                valence * 1.25
            } else if lower[i - 3] == "without"
                && (lower[i - 2] == "doubt" || lower[i - 1] == "doubt")
            {
                valence
            } else if negated(&lower[i - 3]) {
                valence * N_SCALAR
            } else {
                valence
            }
        }
        _ => valence,
    }
}

fn special_idioms_check(valence: f64, lower: &[String], i: usize) -> f64 {
    let mut valence = valence;
    let join = |indices: &[usize]| -> String {
        indices
            .iter()
            .map(|&k| lower[k].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let onezero = join(&[i - 1, i]);
    let twoonezero = join(&[i - 2, i - 1, i]);
    let twoone = join(&[i - 2, i - 1]);
    let threetwoone = join(&[i - 3, i - 2, i - 1]);
    let threetwo = join(&[i - 3, i - 2]);

    for seq in [&onezero, &twoonezero, &twoone, &threetwoone, &threetwo] {
        if let Some(&v) = special_cases().get(seq.as_str()) {
            valence = v;
            break;
        }
    }
    if lower.len() - 1 > i {
        let zeroone = join(&[i, i + 1]);
        if let Some(&v) = special_cases().get(zeroone.as_str()) {
            valence = v;
        }
    }
    if lower.len() - 1 > i + 1 {
        let zeroonetwo = join(&[i, i + 1, i + 2]);
        if let Some(&v) = special_cases().get(zeroonetwo.as_str()) {
            valence = v;
        }
    }
    // multiword booster phrases such as "sort of" or "kind of"
    for n_gram in [&threetwoone, &threetwo, &twoone] {
        if let Some(&v) = booster_dict().get(n_gram.as_str()) {
            valence += v;
        }
    }
    valence
}

/// Contrastive-conjunction rescale. The reference rewrites the *first list
/// occurrence* of each visited value (not the visited position); replicated
/// bit-for-bit since it changes outcomes when a sentence repeats a valence.
fn but_check(lower: &[String], sentiments: &mut [f64]) {
    let Some(but_index) = lower.iter().position(|w| w == "but") else {
        return;
    };
    for k in 0..sentiments.len() {
        let sentiment = sentiments[k];
        let si = sentiments
            .iter()
            .position(|&v| v == sentiment)
            .expect("value just read is present");
        if si < but_index {
            sentiments[si] = sentiment * 0.5;
        } else if si > but_index {
            sentiments[si] = sentiment * 1.5;
        }
    }
}

fn sift_sentiment_scores(sentiments: &[f64]) -> (f64, f64, usize) {
    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut neu_count = 0;
    for &s in sentiments {
        if s > 0.0 {
            pos_sum += s + 1.0;
        }
        if s < 0.0 {
            neg_sum += s - 1.0;
        }
        if s == 0.0 {
            neu_count += 1;
        }
    }
    (pos_sum, neg_sum, neu_count)
}

fn punctuation_emphasis(text: &str) -> f64 {
    let ep_count = text.matches('!').count().min(4);
    let qm_count = text.matches('?').count();
    let qm_amplifier = if qm_count > 1 {
        if qm_count <= 3 {
            qm_count as f64 * 0.18
        } else {
            0.96
        }
    } else {
        0.0
    };
    ep_count as f64 * 0.292 + qm_amplifier
}

/// Round to `digits` decimal places, ties to even (decimal rounding of the
/// exact binary value, matching the reference scorer's output rounding).
fn decimal_round(x: f64, digits: usize) -> f64 {
    format!("{x:.digits$}").parse().unwrap_or(x)
}
