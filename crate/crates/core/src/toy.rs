//! Generator for the bundled toy prompt/continuation corpus.
//!
//! Each family is a question template with a short answer. Most answers are
//! determined by the last two tokens before them, so a trigram model can
//! reproduce them; `add` and `say ... twice` are deliberately beyond a
//! trigram's reach.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::io::{CORPUS_FORMAT, FORMAT_MAJOR, FORMAT_MINOR, SEPARATOR};
use crate::rng;

/// Training pairs in the bundled corpus.
pub const TRAIN_PAIRS: usize = 2_640;
/// Held-out pairs in the bundled evaluation set.
pub const HELDOUT_PAIRS: usize = 100;
pub const TRAIN_SEED: u64 = 20_251_019;
pub const HELDOUT_SEED: u64 = 7_777;

const CAPITALS: &[(&str, &str)] = &[
    ("france", "paris"),
    ("spain", "madrid"),
    ("italy", "rome"),
    ("japan", "tokyo"),
    ("egypt", "cairo"),
    ("peru", "lima"),
    ("kenya", "nairobi"),
    ("norway", "oslo"),
    ("chile", "santiago"),
    ("canada", "ottawa"),
    ("india", "delhi"),
    ("greece", "athens"),
];

const NUMBERS: &[&str] = &[
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
];

const PLURALS: &[(&str, &str)] = &[
    ("cat", "cats"),
    ("dog", "dogs"),
    ("box", "boxes"),
    ("child", "children"),
    ("mouse", "mice"),
    ("leaf", "leaves"),
    ("foot", "feet"),
    ("city", "cities"),
    ("tooth", "teeth"),
    ("goose", "geese"),
    ("wolf", "wolves"),
    ("bus", "buses"),
];

const OPPOSITES: &[(&str, &str)] = &[
    ("hot", "cold"),
    ("big", "small"),
    ("fast", "slow"),
    ("up", "down"),
    ("early", "late"),
    ("light", "dark"),
    ("wet", "dry"),
    ("open", "closed"),
    ("full", "empty"),
    ("hard", "soft"),
    ("old", "new"),
    ("rich", "poor"),
];

const SPELL_WORDS: &[&str] = &[
    "cat", "dog", "sun", "map", "pen", "cup", "hat", "box", "bed", "fox", "jam", "owl",
];

const COLORS: &[(&str, &str)] = &[
    ("sky", "blue"),
    ("grass", "green"),
    ("snow", "white"),
    ("coal", "black"),
    ("blood", "red"),
    ("banana", "yellow"),
    ("carrot", "orange"),
    ("plum", "purple"),
    ("ash", "grey"),
    ("chocolate", "brown"),
];

const DAYS: &[&str] = &[
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
];

const LETTERS: &[&str] = &[
    "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n", "o", "p", "q", "r", "s", "t", "u", "v", "w",
    "x", "y", "z",
];

const SAY_WORDS: &[&str] = &["hello", "yes", "no", "stop", "go", "wait", "thanks", "sorry"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyPair {
    pub family: &'static str,
    pub prompt: String,
    pub continuation: String,
}

impl ToyPair {
    pub fn line(&self) -> String {
        format!("{} {SEPARATOR} {}", self.prompt, self.continuation)
    }
}

pub const FAMILIES: &[&str] = &[
    "capital",
    "count-up",
    "count-down",
    "plural",
    "opposite",
    "spell",
    "add",
    "color",
    "weekday",
    "letters",
    "say",
];

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty table")
}

fn letter_index(l: &str) -> usize {
    LETTERS.iter().position(|&x| x == l).expect("letter")
}

fn make_pair<R: Rng>(family: &'static str, rng: &mut R) -> ToyPair {
    let (prompt, continuation) = match family {
        "capital" => {
            let (c, city) = pick(rng, CAPITALS);
            (format!("capital of {c} ?"), format!("{city} ."))
        }
        "count-up" => {
            let n = rng.gen_range(0..=16);
            let next: Vec<&str> = (n + 1..=n + 4).map(|i| NUMBERS[i]).collect();
            (
                format!("count up from {} :", NUMBERS[n]),
                format!("{} .", next.join(" ")),
            )
        }
        "count-down" => {
            let n = rng.gen_range(3..=20);
            let next: Vec<&str> = (n - 3..n).rev().map(|i| NUMBERS[i]).collect();
            (
                format!("count down from {} =", NUMBERS[n]),
                format!("{} .", next.join(" ")),
            )
        }
        "plural" => {
            let (s, p) = pick(rng, PLURALS);
            (format!("plural of {s} =>"), format!("{p} ."))
        }
        "opposite" => {
            let (a, b) = pick(rng, OPPOSITES);
            (format!("opposite of {a} ->"), format!("{b} ."))
        }
        "spell" => {
            let w = pick(rng, SPELL_WORDS);
            let letters: Vec<String> = w.chars().map(|c| c.to_string()).collect();
            (format!("spell {w} :"), format!("{} .", letters.join(" ")))
        }
        "add" => {
            let a = rng.gen_range(0..=10);
            let b = rng.gen_range(0..=10);
            (
                format!("add {} and {} =", NUMBERS[a], NUMBERS[b]),
                format!("{} .", NUMBERS[a + b]),
            )
        }
        "color" => {
            let (t, c) = pick(rng, COLORS);
            (format!("what color is {t} ?"), format!("{t} is {c} ."))
        }
        "weekday" => {
            let d = rng.gen_range(0..DAYS.len());
            (
                format!("day after {} ?", DAYS[d]),
                format!("{} .", DAYS[(d + 1) % DAYS.len()]),
            )
        }
        "letters" => {
            let l = pick(rng, &LETTERS[..23]);
            let i = letter_index(l);
            (
                format!("letters after {l} ;"),
                format!("{} {} {} .", LETTERS[i + 1], LETTERS[i + 2], LETTERS[i + 3]),
            )
        }
        "say" => {
            let w = pick(rng, SAY_WORDS);
            (format!("say {w} twice !"), format!("{w} {w} ."))
        }
        other => unreachable!("unknown family {other}"),
    };
    ToyPair {
        family,
        prompt,
        continuation,
    }
}

/// `n` pairs cycling through the families, with slots drawn from `seed`.
pub fn generate(n: usize, seed: u64) -> Vec<ToyPair> {
    let mut rng = rng::seeded(seed);
    (0..n)
        .map(|i| make_pair(FAMILIES[i % FAMILIES.len()], &mut rng))
        .collect()
}

/// The bundled training corpus as file text.
pub fn train_corpus_text() -> String {
    corpus_text(&generate(TRAIN_PAIRS, TRAIN_SEED))
}

/// The bundled held-out set as file text.
pub fn heldout_corpus_text() -> String {
    corpus_text(&generate(HELDOUT_PAIRS, HELDOUT_SEED))
}

fn corpus_text(pairs: &[ToyPair]) -> String {
    let mut s = format!("# {CORPUS_FORMAT} {FORMAT_MAJOR}.{FORMAT_MINOR}\n");
    for p in pairs {
        s.push_str(&p.line());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let a = generate(TRAIN_PAIRS, TRAIN_SEED);
        assert_eq!(a.len(), 2_640);
        assert_eq!(a, generate(TRAIN_PAIRS, TRAIN_SEED));
        assert_eq!(a.len() % FAMILIES.len(), 0);
        for f in FAMILIES {
            assert_eq!(a.iter().filter(|p| p.family == *f).count(), 240);
        }
    }

    #[test]
    fn bundled_files_match_generator() {
        assert_eq!(include_str!("../data/toy_corpus.txt"), train_corpus_text());
        assert_eq!(include_str!("../data/toy_heldout.txt"), heldout_corpus_text());
    }
}
