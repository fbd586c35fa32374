//! Probabilistic context-free grammar over the expression vocabulary and
//! random corpus generation.
//!
//! Grammar text has one production per line, `NT -> sym sym ... [weight]`,
//! with `#` comments. Symbols that appear on some left-hand side are
//! nonterminals; every other symbol must be a token lexeme (`+`, `sin`, `(`,
//! `x`, `c`, `2`, ...). Each production must have one of the shapes
//! `A`, `A op B`, `( A )`, `f ( A )`, `f A` or `- A`, where operands are
//! nonterminals or leaf terminals; the shape decides the tree it builds.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use thiserror::Error;

use crate::expr::{BinOp, Expr, Func, Token, DEFAULT_MAX_DEPTH, GENERIC_VAR};
use crate::sampling::derive_stream;

/// The default grammar. The published table lists 0.539 for `R -> log(E)`
/// and "0.0.1746" for `T -> R`; they are read as 0.0539 and 0.1746.
pub const DEFAULT_GRAMMAR: &str = "\
E -> E + F [0.2004]
E -> E - F [0.1108]
E -> F [0.6888]
F -> F * T [0.3349]
F -> F / T [0.1098]
F -> T [0.5553]
T -> c [0.1174]
T -> R [0.1746]
T -> x [0.708]
R -> ( E ) [0.6841]
R -> E ^ P [0.0036]
R -> sin ( E ) [0.028]
R -> cos ( E ) [0.049]
R -> sqrt ( E ) [0.0936]
R -> exp ( E ) [0.0878]
R -> log ( E ) [0.0539]
P -> 2 [0.65]
P -> 3 [0.35]
";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("nonterminal {0} has no production with positive weight")]
    NoPositiveRule(String),
    #[error("grammar has no productions")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Nonterminal(usize),
    Terminal(Token),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Operand {
    Nt(usize),
    Leaf(Token),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Single(Operand),
    Binary(BinOp, Operand, Operand),
    Unary(Func, Operand),
    Neg(Operand),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Production {
    pub symbols: Vec<Symbol>,
    /// Normalized so that a nonterminal's weights sum to one.
    pub weight: f64,
    shape: Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    names: Vec<String>,
    rules: Vec<Vec<Production>>,
    cumulative: Vec<Vec<f64>>,
    start: usize,
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Grammar, GrammarError> {
        let mut lines = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| GrammarError::Syntax {
                line: n + 1,
                message,
            };
            let (lhs, rest) = line
                .split_once("->")
                .ok_or_else(|| syntax("missing `->`".into()))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) || Token::from_lexeme(lhs).is_some() {
                return Err(syntax(format!("bad nonterminal name {lhs:?}")));
            }
            let rest = rest.trim();
            let (body, weight) = match rest.rfind('[') {
                Some(open) if rest.ends_with(']') => {
                    let w = rest[open + 1..rest.len() - 1].trim();
                    let w: f64 = w
                        .parse()
                        .map_err(|_| syntax(format!("bad weight {w:?}")))?;
                    (rest[..open].trim(), w)
                }
                _ => return Err(syntax("missing `[weight]`".into())),
            };
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(syntax(format!("weight must be finite and nonnegative, got {weight}")));
            }
            lines.push((n + 1, lhs.to_string(), body.to_string(), weight));
        }
        if lines.is_empty() {
            return Err(GrammarError::Empty);
        }

        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (_, lhs, _, _) in &lines {
            if !index.contains_key(lhs) {
                index.insert(lhs.clone(), names.len());
                names.push(lhs.clone());
            }
        }

        let mut raw_rules: Vec<Vec<(Vec<Symbol>, f64, Shape)>> = vec![Vec::new(); names.len()];
        for (line, lhs, body, weight) in &lines {
            let syntax = |message: String| GrammarError::Syntax {
                line: *line,
                message,
            };
            let symbols = body
                .split_whitespace()
                .map(|word| match index.get(word) {
                    Some(&i) => Ok(Symbol::Nonterminal(i)),
                    None => Token::from_lexeme(word)
                        .map(Symbol::Terminal)
                        .ok_or_else(|| syntax(format!("unknown symbol {word:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let shape = classify(&symbols)
                .ok_or_else(|| syntax(format!("production {body:?} has no supported shape")))?;
            raw_rules[index[lhs]].push((symbols, *weight, shape));
        }

        let mut rules = Vec::with_capacity(names.len());
        let mut cumulative = Vec::with_capacity(names.len());
        for (nt, productions) in raw_rules.into_iter().enumerate() {
            let total: f64 = productions.iter().map(|p| p.1).sum();
            if !(total > 0.0) {
                return Err(GrammarError::NoPositiveRule(names[nt].clone()));
            }
            let normalized: Vec<Production> = productions
                .into_iter()
                .map(|(symbols, w, shape)| Production {
                    symbols,
                    weight: w / total,
                    shape,
                })
                .collect();
            let mut acc = 0.0;
            let cum = normalized
                .iter()
                .map(|p| {
                    acc += p.weight;
                    acc
                })
                .collect();
            rules.push(normalized);
            cumulative.push(cum);
        }
        Ok(Grammar {
            names,
            rules,
            cumulative,
            start: 0,
        })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn nonterminal_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, nt: usize) -> &str {
        &self.names[nt]
    }

    pub fn nonterminal(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn productions(&self, nt: usize) -> &[Production] {
        &self.rules[nt]
    }

    /// Picks a production of `nt` with probability equal to its weight.
    pub fn choose<R: Rng + ?Sized>(&self, nt: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let cum = &self.cumulative[nt];
        cum.iter()
            .position(|&c| u < c)
            // u can exceed the last cumulative value by rounding
            .unwrap_or_else(|| {
                self.rules[nt]
                    .iter()
                    .rposition(|p| p.weight > 0.0)
                    .expect("validated grammar")
            })
    }
}

/// The built-in grammar, normalized per nonterminal.
pub fn default_grammar() -> Grammar {
    Grammar::parse(DEFAULT_GRAMMAR).expect("built-in grammar is valid")
}

fn operand(s: &Symbol) -> Option<Operand> {
    match *s {
        Symbol::Nonterminal(i) => Some(Operand::Nt(i)),
        Symbol::Terminal(t @ (Token::Var(_) | Token::Const | Token::Int(_))) => Some(Operand::Leaf(t)),
        Symbol::Terminal(_) => None,
    }
}

fn classify(symbols: &[Symbol]) -> Option<Shape> {
    use Symbol::Terminal as T;
    match symbols {
        [a] => Some(Shape::Single(operand(a)?)),
        [T(Token::Op(BinOp::Sub)), a] => Some(Shape::Neg(operand(a)?)),
        [T(Token::Func(f)), a] => Some(Shape::Unary(*f, operand(a)?)),
        [a, T(Token::Op(op)), b] => Some(Shape::Binary(*op, operand(a)?, operand(b)?)),
        [T(Token::LParen), a, T(Token::RParen)] => Some(Shape::Single(operand(a)?)),
        [T(Token::Func(f)), T(Token::LParen), a, T(Token::RParen)] => {
            Some(Shape::Unary(*f, operand(a)?))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("derivation deeper than {0} levels")]
    DepthOverflow(usize),
    #[error("derivation larger than {0} expansions")]
    SizeOverflow(usize),
}

/// Upper bound on nonterminal expansions in one derivation.
pub const MAX_EXPANSIONS: usize = 100_000;

/// Source of production choices during a derivation.
pub trait RuleChooser {
    fn choose(&mut self, grammar: &Grammar, nt: usize) -> usize;
}

/// Chooses productions at random by their weights.
pub struct WeightedChooser<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> RuleChooser for WeightedChooser<'_, R> {
    fn choose(&mut self, grammar: &Grammar, nt: usize) -> usize {
        grammar.choose(nt, self.0)
    }
}

/// Samples one expression by leftmost derivation from the start symbol. The
/// result uses the generic variable only; constant slots are numbered.
pub fn sample_expression<R: Rng + ?Sized>(
    grammar: &Grammar,
    rng: &mut R,
    max_depth: usize,
) -> Result<Expr, SampleError> {
    derive(grammar, &mut WeightedChooser(rng), max_depth)
}

/// Leftmost derivation driven by an arbitrary chooser.
pub fn derive(
    grammar: &Grammar,
    chooser: &mut impl RuleChooser,
    max_depth: usize,
) -> Result<Expr, SampleError> {
    let mut d = Derivation {
        grammar,
        chooser,
        max_depth,
        expansions: 0,
    };
    Ok(d.expand(grammar.start(), 1)?.renumber_constants())
}

struct Derivation<'a, C> {
    grammar: &'a Grammar,
    chooser: &'a mut C,
    max_depth: usize,
    expansions: usize,
}

impl<C: RuleChooser> Derivation<'_, C> {
    fn expand(&mut self, nt: usize, depth: usize) -> Result<Expr, SampleError> {
        if depth > self.max_depth {
            return Err(SampleError::DepthOverflow(self.max_depth));
        }
        self.expansions += 1;
        if self.expansions > MAX_EXPANSIONS {
            return Err(SampleError::SizeOverflow(MAX_EXPANSIONS));
        }
        let choice = self.chooser.choose(self.grammar, nt);
        let shape = self.grammar.rules[nt][choice].shape;
        match shape {
            Shape::Single(a) => self.operand(a, depth),
            Shape::Binary(op, a, b) => {
                let left = self.operand(a, depth)?;
                let right = self.operand(b, depth)?;
                Ok(Expr::binary(op, left, right))
            }
            Shape::Unary(f, a) => Ok(Expr::unary(f, self.operand(a, depth)?)),
            Shape::Neg(a) => Ok(Expr::neg(self.operand(a, depth)?)),
        }
    }

    fn operand(&mut self, op: Operand, depth: usize) -> Result<Expr, SampleError> {
        match op {
            Operand::Nt(nt) => self.expand(nt, depth + 1),
            Operand::Leaf(Token::Var(i)) => Ok(Expr::Var(i)),
            Operand::Leaf(Token::Const) => Ok(Expr::Const(0)),
            Operand::Leaf(Token::Int(v)) => Ok(Expr::Int(v)),
            Operand::Leaf(t) => unreachable!("classify admits no leaf {t:?}"),
        }
    }
}

/// Replaces every generic `x` leaf by `x<i>`, with `i` drawn uniformly from
/// `1..=num_variables` independently per leaf.
pub fn assign_variables<R: Rng + ?Sized>(e: Expr, num_variables: usize, rng: &mut R) -> Expr {
    assert!(num_variables >= 1);
    e.map_vars(&mut |i| {
        if i == GENERIC_VAR {
            rng.gen_range(1..=num_variables)
        } else {
            i
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusConfig {
    pub count: usize,
    pub max_variables: usize,
    /// Maximum derivation depth; deeper derivations are resampled.
    pub max_depth: usize,
    pub seed: u64,
    pub deduplicate: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            count: 100,
            max_variables: 2,
            max_depth: DEFAULT_MAX_DEPTH,
            seed: 0,
            deduplicate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("invalid corpus configuration: {0}")]
    Config(String),
    #[error("gave up after {rejected} consecutive rejected samples with {collected} of {count} collected")]
    Exhausted {
        rejected: usize,
        collected: usize,
        count: usize,
    },
}

/// Samples expressions until `cfg.count` are collected. Depth overflows and,
/// with deduplication, repeated canonical strings are rejected.
pub fn generate_corpus(grammar: &Grammar, cfg: &CorpusConfig) -> Result<Vec<Expr>, CorpusError> {
    if cfg.count == 0 {
        return Err(CorpusError::Config("count must be at least 1".into()));
    }
    if cfg.max_variables == 0 {
        return Err(CorpusError::Config("max_variables must be at least 1".into()));
    }
    let mut rng = derive_stream(cfg.seed, "corpus");
    let limit = cfg.count.saturating_mul(1000);
    let mut seen = HashSet::new();
    let mut corpus = Vec::with_capacity(cfg.count);
    let mut rejected = 0;
    while corpus.len() < cfg.count {
        if rejected >= limit {
            return Err(CorpusError::Exhausted {
                rejected,
                collected: corpus.len(),
                count: cfg.count,
            });
        }
        let Ok(e) = sample_expression(grammar, &mut rng, cfg.max_depth) else {
            rejected += 1;
            continue;
        };
        if e.depth() > DEFAULT_MAX_DEPTH {
            rejected += 1;
            continue;
        }
        let e = assign_variables(e, cfg.max_variables, &mut rng);
        if cfg.deduplicate && !seen.insert(e.to_canonical_string()) {
            rejected += 1;
            continue;
        }
        rejected = 0;
        corpus.push(e);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::derive_stream;

    struct Scripted(Vec<usize>);

    impl RuleChooser for Scripted {
        fn choose(&mut self, _: &Grammar, _: usize) -> usize {
            self.0.remove(0)
        }
    }

    fn weights(g: &Grammar, name: &str) -> Vec<f64> {
        g.productions(g.nonterminal(name).unwrap())
            .iter()
            .map(|p| p.weight)
            .collect()
    }

    #[test]
    fn default_weights() {
        let g = default_grammar();
        assert_eq!(weights(&g, "P"), vec![0.65, 0.35]);
        let e = weights(&g, "E");
        let raw = [0.2004, 0.1108, 0.6888];
        let total: f64 = raw.iter().sum();
        for (w, r) in e.iter().zip(raw) {
            assert!((w - r / total).abs() < 1e-15);
        }
        for nt in 0..g.nonterminal_count() {
            let s: f64 = g.productions(nt).iter().map(|p| p.weight).sum();
            assert!((s - 1.0).abs() < 1e-12, "{}", g.name(nt));
        }
        assert_eq!(g.name(g.start()), "E");
        assert_eq!(weights(&g, "R").len(), 7);
    }

    #[test]
    fn scripted_derivations() {
        let g = default_grammar();
        // E -> F, F -> T, T -> x
        let e = derive(&g, &mut Scripted(vec![2, 2, 2]), 64).unwrap();
        assert_eq!(e.to_canonical_string(), "x");
        let e = derive(&g, &mut Scripted(vec![2, 2, 0]), 64).unwrap();
        assert_eq!(e.to_canonical_string(), "C");
        // E -> F, F -> T, T -> R, R -> E ^ P, E -> F, F -> T, T -> x, P -> 3
        let e = derive(&g, &mut Scripted(vec![2, 2, 1, 1, 2, 2, 2, 1]), 64).unwrap();
        assert_eq!(e.to_canonical_string(), "x^3");
        // E -> E + F with E -> F -> T -> c and F -> T -> R -> log(E), E -> F -> T -> c
        let e = derive(&g, &mut Scripted(vec![0, 2, 2, 0, 2, 1, 6, 2, 2, 0]), 64).unwrap();
        assert_eq!(e, "C+log(C)".parse().unwrap());
        assert_eq!(e.constant_count(), 2);
    }

    #[test]
    fn non_terminating_grammar_overflows() {
        let g = Grammar::parse("E -> ( E ) [1]").unwrap();
        let mut rng = derive_stream(0, "t");
        assert_eq!(
            sample_expression(&g, &mut rng, 20),
            Err(SampleError::DepthOverflow(20))
        );
        let g = Grammar::parse("E -> E + E [1]").unwrap();
        assert!(sample_expression(&g, &mut rng, 64).is_err());
    }

    #[test]
    fn grammar_file_errors() {
        assert!(matches!(
            Grammar::parse("E -> x"),
            Err(GrammarError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            Grammar::parse("E -> x [1]\nE -> tan ( E ) [1]"),
            Err(GrammarError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            Grammar::parse("E -> x x [1]"),
            Err(GrammarError::Syntax { line: 1, .. })
        ));
        assert_eq!(
            Grammar::parse("E -> F [1]\nF -> x [0]"),
            Err(GrammarError::NoPositiveRule("F".into()))
        );
        assert!(matches!(Grammar::parse("x -> x [1]"), Err(GrammarError::Syntax { .. })));
        assert_eq!(Grammar::parse("# nothing\n"), Err(GrammarError::Empty));
        let g = Grammar::parse("# comment\nS -> - S [1] # neg\nS -> x [3]\n").unwrap();
        assert_eq!(weights(&g, "S"), vec![0.25, 0.75]);
    }

    #[test]
    fn top_level_rule_frequencies() {
        let g = default_grammar();
        let e = g.nonterminal("E").unwrap();
        let probs = weights(&g, "E");
        let mut counts = vec![0usize; probs.len()];
        let mut rng = derive_stream(1, "freq");
        let n = 100_000;
        for _ in 0..n {
            counts[g.choose(e, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(&probs) {
            let mean = n as f64 * p;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - mean).abs() <= 3.0 * sd, "count {c} vs {mean}");
        }
    }

    #[test]
    fn single_variable_assignment() {
        let e: Expr = "x + sin(x*C)".parse().unwrap();
        let mut rng = derive_stream(0, "t");
        let assigned = assign_variables(e, 1, &mut rng);
        assert_eq!(assigned.to_canonical_string(), "x1+sin(x1*C)");
        let c: Expr = "C*C".parse().unwrap();
        assert_eq!(assign_variables(c.clone(), 3, &mut rng), c);
    }

    #[test]
    fn two_variable_assignment_is_uniform() {
        let e: Expr = "x+x".parse().unwrap();
        let outcomes = ["x1+x1", "x1+x2", "x2+x1", "x2+x2"];
        let mut counts = [0usize; 4];
        let draws = 10_000;
        for seed in 0..draws {
            let mut rng = derive_stream(seed, "assign");
            let s = assign_variables(e.clone(), 2, &mut rng).to_canonical_string();
            counts[outcomes.iter().position(|o| *o == s).unwrap()] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square critical value, 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn corpus_is_deterministic_and_unique() {
        let g = default_grammar();
        let cfg = CorpusConfig {
            count: 100,
            seed: 7,
            ..CorpusConfig::default()
        };
        let a = generate_corpus(&g, &cfg).unwrap();
        let b = generate_corpus(&g, &cfg).unwrap();
        assert_eq!(a, b);
        let strings: HashSet<String> = a.iter().map(Expr::to_canonical_string).collect();
        assert_eq!(strings.len(), 100);
        for e in &a {
            assert!(e.free_variables().iter().all(|v| (1..=2).contains(v)));
            assert_eq!(&e.to_canonical_string().parse::<Expr>().unwrap(), e);
        }
    }

    #[test]
    fn corpus_gives_up_when_exhausted() {
        let g = Grammar::parse("E -> x [1]").unwrap();
        let cfg = CorpusConfig {
            count: 3,
            max_variables: 1,
            ..CorpusConfig::default()
        };
        assert!(matches!(
            generate_corpus(&g, &cfg),
            Err(CorpusError::Exhausted { collected: 1, .. })
        ));
        let cfg = CorpusConfig {
            deduplicate: false,
            ..cfg
        };
        assert_eq!(generate_corpus(&g, &cfg).unwrap().len(), 3);
    }
}
