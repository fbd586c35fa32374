use crate::expr::{tokenize, Expr, Token};

/// Levenshtein distance with unit insert, delete and substitute costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Tokens of the canonical rendering.
pub fn canonical_tokens(e: &Expr) -> Vec<Token> {
    tokenize(&e.to_canonical_string()).expect("canonical strings always lex")
}

/// Token-level edit distance between the canonical renderings.
pub fn edit_distance(u: &Expr, v: &Expr) -> usize {
    levenshtein(&canonical_tokens(u), &canonical_tokens(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        s.parse().unwrap()
    }

    /// Plain recursive definition, exponential but obviously right.
    fn naive<T: PartialEq>(a: &[T], b: &[T]) -> usize {
        match (a, b) {
            ([], _) => b.len(),
            (_, []) => a.len(),
            ([x, ra @ ..], [y, rb @ ..]) => (naive(ra, rb) + usize::from(x != y))
                .min(naive(ra, b) + 1)
                .min(naive(a, rb) + 1),
        }
    }

    #[test]
    fn expression_examples() {
        assert_eq!(edit_distance(&e("x1*C+sin(x2)"), &e("x1*C+sin(x2)")), 0);
        assert_eq!(edit_distance(&e("x+C"), &e("x*C")), 1);
        assert_eq!(edit_distance(&e("sin(x)"), &e("x")), 3);
        assert_eq!(naive(&canonical_tokens(&e("sin(x)")), &canonical_tokens(&e("x"))), 3);
    }

    #[test]
    fn agrees_with_naive_recursion() {
        let words = ["", "a", "ab", "ba", "abc", "kitten", "sitting", "bbab", "abab"];
        for a in words {
            for b in words {
                let (a, b) = (a.as_bytes(), b.as_bytes());
                assert_eq!(levenshtein(a, b), naive(a, b));
            }
        }
    }
}
