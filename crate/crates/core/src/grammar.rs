//! GF(2)-grammar representation, file format, and normal forms.
//!
//! A word belongs to the language of a GF(2)-grammar iff its number of
//! derivation trees is odd, so the rule collection is a *set*: inserting a
//! rule that is already present cancels it. The empty word is representable
//! only through the dedicated start rule, tracked as the `epsilon_at_start`
//! flag; every stored rule body is non-empty by construction.

use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Index into the ordered terminal alphabet.
    Terminal(usize),
    /// Index into the nonterminal table.
    Nonterminal(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: usize,
    pub body: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Grammar {
    terminals: Vec<char>,
    nonterminals: Vec<String>,
    rules: BTreeSet<Rule>,
    start: usize,
    epsilon_at_start: bool,
}

impl Gf2Grammar {
    pub fn terminals(&self) -> &[char] {
        &self.terminals
    }

    pub fn alphabet_size(&self) -> usize {
        self.terminals.len()
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn nonterminal_name(&self, idx: usize) -> &str {
        &self.nonterminals[idx]
    }

    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn epsilon_at_start(&self) -> bool {
        self.epsilon_at_start
    }

    pub fn terminal_index(&self, letter: char) -> Result<usize> {
        self.terminals
            .iter()
            .position(|t| *t == letter)
            .ok_or(Error::LetterOutsideAlphabet { letter })
    }

    /// Parse a word given as a string of terminal letters. `""` and `"()"`
    /// both denote the empty word.
    pub fn word_from_str(&self, s: &str) -> Result<Vec<usize>> {
        if s.is_empty() || s == "()" {
            return Ok(Vec::new());
        }
        s.chars().map(|c| self.terminal_index(c)).collect()
    }

    /// The bounded word `a_1^{e_1} ... a_k^{e_k}`.
    pub fn word_from_exponents(&self, e: &crate::Exponents) -> Vec<usize> {
        let mut w = Vec::with_capacity(e.total());
        for (axis, count) in e.as_slice().iter().enumerate() {
            for _ in 0..*count {
                w.push(axis);
            }
        }
        w
    }

    pub fn render_word(&self, w: &[usize]) -> String {
        if w.is_empty() {
            return "()".to_string();
        }
        w.iter().map(|t| self.terminals[*t]).collect()
    }

    pub fn render_rule(&self, rule: &Rule) -> String {
        let body: Vec<String> = rule
            .body
            .iter()
            .map(|s| match s {
                Symbol::Terminal(t) => self.terminals[*t].to_string(),
                Symbol::Nonterminal(n) => self.nonterminals[*n].clone(),
            })
            .collect();
        format!(
            "{} -> {}",
            self.nonterminals[rule.head],
            if body.is_empty() {
                "()".to_string()
            } else {
                body.join(" ")
            }
        )
    }

    /// Every rule body holds at most one nonterminal.
    pub fn is_linear(&self) -> bool {
        self.rules.iter().all(|r| nonterminal_count(&r.body) <= 1)
    }

    pub fn is_binary(&self) -> bool {
        self.rules.iter().all(|r| r.body.len() <= 2)
    }

    /// Rules of one head, in body order.
    pub fn rules_of(&self, head: usize) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.head == head)
    }
}

fn nonterminal_count(body: &[Symbol]) -> usize {
    body.iter()
        .filter(|s| matches!(s, Symbol::Nonterminal(_)))
        .count()
}

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

/// Incremental builder used by the parser and by the grammar constructions.
/// Rules toggle: adding a rule twice removes it (GF(2) semantics).
#[derive(Debug, Clone)]
pub struct GrammarBuilder {
    terminals: Vec<char>,
    nonterminals: Vec<String>,
    name_index: BTreeMap<String, usize>,
    rules: BTreeSet<Rule>,
    start: Option<usize>,
    epsilon_at_start: bool,
}

impl GrammarBuilder {
    /// `terminals` is the explicit ordered alphabet; it must be sorted,
    /// duplicate-free, lowercase ASCII.
    pub fn new(terminals: &[char]) -> Self {
        debug_assert!(terminals.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(terminals.iter().all(|c| c.is_ascii_lowercase()));
        GrammarBuilder {
            terminals: terminals.to_vec(),
            nonterminals: Vec::new(),
            name_index: BTreeMap::new(),
            rules: BTreeSet::new(),
            start: None,
            epsilon_at_start: false,
        }
    }

    pub fn nonterminal(&mut self, name: &str) -> usize {
        if let Some(idx) = self.name_index.get(name) {
            return *idx;
        }
        let idx = self.nonterminals.len();
        self.nonterminals.push(name.to_string());
        self.name_index.insert(name.to_string(), idx);
        idx
    }

    pub fn has_nonterminal(&self, name: &str) -> bool {
        self.name_index.contains_key(name)
    }

    /// A name not yet taken, derived from `base` by appending underscores.
    pub fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.name_index.contains_key(&name) {
            name.push('_');
        }
        name
    }

    pub fn set_start(&mut self, idx: usize) {
        self.start = Some(idx);
    }

    pub fn toggle_epsilon(&mut self) {
        self.epsilon_at_start = !self.epsilon_at_start;
    }

    pub fn set_epsilon(&mut self, value: bool) {
        self.epsilon_at_start = value;
    }

    pub fn toggle_rule(&mut self, head: usize, body: Vec<Symbol>) {
        debug_assert!(!body.is_empty(), "empty bodies are the epsilon flag");
        let rule = Rule { head, body };
        if !self.rules.insert(rule.clone()) {
            self.rules.remove(&rule);
        }
    }

    pub fn terminal_index(&self, letter: char) -> Result<usize> {
        self.terminals
            .iter()
            .position(|t| *t == letter)
            .ok_or(Error::LetterOutsideAlphabet { letter })
    }

    pub fn finish(self) -> Result<Gf2Grammar> {
        let g = Gf2Grammar {
            terminals: self.terminals,
            nonterminals: self.nonterminals,
            rules: self.rules,
            start: self.start.expect("start symbol not set"),
            epsilon_at_start: self.epsilon_at_start,
        };
        g.validate()?;
        Ok(g)
    }
}

impl Gf2Grammar {
    /// Well-formedness beyond what the representation enforces:
    /// finiteness of derivation counts. A cycle among "effectively unit"
    /// rules (bodies that are a single nonterminal up to erasable start
    /// symbols) or a body consisting entirely of nullable symbols would make
    /// some word's derivation count infinite.
    pub fn validate(&self) -> Result<()> {
        // With epsilon at the start symbol only, the nullable set is {start};
        // any rule whose body is entirely nullable either extends the set or
        // gives the start a second epsilon derivation. Both are rejected.
        if self.epsilon_at_start {
            for rule in &self.rules {
                let all_nullable = rule.body.iter().all(|s| match s {
                    Symbol::Nonterminal(n) => *n == self.start,
                    Symbol::Terminal(_) => false,
                });
                if all_nullable {
                    return Err(Error::NullableBody {
                        rule: self.render_rule(rule),
                    });
                }
            }
        }

        // Effective unit edges: head -> X where the body is X padded with
        // erasable start occurrences.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for rule in &self.rules {
            let non_erasable: Vec<&Symbol> = rule
                .body
                .iter()
                .filter(|s| {
                    !(self.epsilon_at_start
                        && matches!(s, Symbol::Nonterminal(n) if *n == self.start))
                })
                .collect();
            if non_erasable.len() == 1 {
                if let Symbol::Nonterminal(n) = non_erasable[0] {
                    edges.push((rule.head, *n));
                }
            }
        }
        if let Some(node) = find_cycle(self.nonterminals.len(), &edges) {
            return Err(Error::UnitCycle {
                nonterminal: self.nonterminals[node].clone(),
            });
        }
        Ok(())
    }

    /// Topological order of the explicit unit-rule graph, dependencies first.
    /// Only meaningful after validation (the graph is acyclic).
    pub(crate) fn unit_topo_order(&self) -> Vec<usize> {
        let n = self.nonterminals.len();
        let mut deps: Vec<Vec<usize>> = vec![Vec::new(); n];
        for rule in &self.rules {
            if rule.body.len() == 1 {
                if let Symbol::Nonterminal(b) = rule.body[0] {
                    deps[rule.head].push(b);
                }
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut state = vec![0u8; n]; // 0 new, 1 visiting, 2 done
        fn visit(
            v: usize,
            deps: &[Vec<usize>],
            state: &mut [u8],
            order: &mut Vec<usize>,
        ) {
            if state[v] != 0 {
                return;
            }
            state[v] = 1;
            for d in &deps[v] {
                visit(*d, deps, state, order);
            }
            state[v] = 2;
            order.push(v);
        }
        for v in 0..n {
            visit(v, &deps, &mut state, &mut order);
        }
        order
    }
}

fn find_cycle(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[*a].push(*b);
    }
    let mut state = vec![0u8; n];
    fn dfs(v: usize, adj: &[Vec<usize>], state: &mut [u8]) -> Option<usize> {
        state[v] = 1;
        for w in &adj[v] {
            match state[*w] {
                0 => {
                    if let Some(c) = dfs(*w, adj, state) {
                        return Some(c);
                    }
                }
                1 => return Some(*w),
                _ => {}
            }
        }
        state[v] = 2;
        None
    }
    (0..n).find_map(|v| {
        if state[v] == 0 {
            dfs(v, &adj, &mut state)
        } else {
            None
        }
    })
}

// ---------------------------------------------------------------------------
// file format
// ---------------------------------------------------------------------------

/// Parse the grammar file format: `# comment` lines, one `start: S` line,
/// rule lines `A -> a B c | ()`. Nonterminals match `[A-Z][A-Za-z0-9_]*`,
/// terminals are single lowercase letters, `()` denotes the empty word and is
/// legal only for the start symbol. Duplicate rules cancel pairwise.
///
/// A `# letters: a b c` comment may widen the alphabet beyond the letters
/// that actually occur in rules (printed grammars use it to keep unused
/// letters); files without it infer the alphabet from the rules.
pub fn parse_grammar(text: &str) -> Result<Gf2Grammar> {
    struct RawRule {
        line: usize,
        head: String,
        body: Vec<Tok>,
    }
    enum Tok {
        Letter(char),
        Name(String),
    }

    let mut start_name: Option<(usize, String)> = None;
    let mut raw_rules: Vec<RawRule> = Vec::new();
    let mut epsilon_toggles: Vec<(usize, String)> = Vec::new();
    let mut declared_letters: BTreeSet<char> = BTreeSet::new();
    let mut extra_letters: BTreeSet<char> = BTreeSet::new();
    let mut heads: BTreeSet<String> = BTreeSet::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(letters) = rest.trim().strip_prefix("letters:") {
                for tok in letters.split_whitespace() {
                    let mut cs = tok.chars();
                    match (cs.next(), cs.next()) {
                        (Some(c), None) if c.is_ascii_lowercase() => {
                            extra_letters.insert(c);
                        }
                        _ => {
                            return Err(Error::GrammarSyntax {
                                line: lineno,
                                msg: format!("bad letter `{tok}` in `# letters:`"),
                            })
                        }
                    }
                }
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("start:") {
            let name = rest.trim().to_string();
            if !is_nonterminal_name(&name) {
                return Err(Error::GrammarSyntax {
                    line: lineno,
                    msg: format!("bad start symbol `{name}`"),
                });
            }
            if start_name.is_some() {
                return Err(Error::GrammarSyntax {
                    line: lineno,
                    msg: "duplicate `start:` line".into(),
                });
            }
            start_name = Some((lineno, name));
            continue;
        }
        let Some((head_part, bodies_part)) = line.split_once("->") else {
            return Err(Error::GrammarSyntax {
                line: lineno,
                msg: "expected `A -> ...` or `start: S`".into(),
            });
        };
        let head = head_part.trim().to_string();
        if !is_nonterminal_name(&head) {
            return Err(Error::GrammarSyntax {
                line: lineno,
                msg: format!("bad nonterminal `{head}`"),
            });
        }
        heads.insert(head.clone());
        for alt in bodies_part.split('|') {
            let alt = alt.trim();
            if alt == "()" {
                epsilon_toggles.push((lineno, head.clone()));
                continue;
            }
            let toks = tokenize_body(alt, lineno)?;
            if toks.is_empty() {
                return Err(Error::GrammarSyntax {
                    line: lineno,
                    msg: "empty alternative; write `()` for the empty word".into(),
                });
            }
            for t in &toks {
                if let Tok2::Letter(c) = t {
                    declared_letters.insert(*c);
                }
            }
            raw_rules.push(RawRule {
                line: lineno,
                head: head.clone(),
                body: toks
                    .into_iter()
                    .map(|t| match t {
                        Tok2::Letter(c) => Tok::Letter(c),
                        Tok2::Name(n) => Tok::Name(n),
                    })
                    .collect(),
            });
        }
    }

    let Some((_, start)) = start_name else {
        return Err(Error::GrammarSyntax {
            line: 0,
            msg: "missing `start:` line".into(),
        });
    };

    declared_letters.extend(extra_letters);
    let terminals: Vec<char> = declared_letters.into_iter().collect();
    let mut builder = GrammarBuilder::new(&terminals);

    // declaration order: start first, then heads in first-appearance order
    builder.nonterminal(&start);
    for r in &raw_rules {
        builder.nonterminal(&r.head);
    }
    let declared: BTreeSet<String> = {
        let mut d = heads;
        d.insert(start.clone());
        d
    };

    for (line, head) in epsilon_toggles {
        if head != start {
            return Err(Error::EpsilonOutsideStart { line });
        }
        builder.toggle_epsilon();
    }

    for r in raw_rules {
        let head_idx = builder.nonterminal(&r.head);
        let mut body = Vec::with_capacity(r.body.len());
        for t in r.body {
            match t {
                Tok::Letter(c) => body.push(Symbol::Terminal(builder.terminal_index(c)?)),
                Tok::Name(n) => {
                    if !declared.contains(&n) {
                        return Err(Error::UndeclaredSymbol {
                            name: n,
                            line: r.line,
                        });
                    }
                    body.push(Symbol::Nonterminal(builder.nonterminal(&n)));
                }
            }
        }
        builder.toggle_rule(head_idx, body);
    }

    let start_idx = builder.nonterminal(&start);
    builder.set_start(start_idx);
    builder.finish()
}

enum Tok2 {
    Letter(char),
    Name(String),
}

fn tokenize_body(alt: &str, lineno: usize) -> Result<Vec<Tok2>> {
    let mut toks = Vec::new();
    let chars: Vec<char> = alt.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_lowercase() {
            toks.push(Tok2::Letter(c));
            i += 1;
        } else if c.is_ascii_uppercase() {
            let mut name = String::new();
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
            {
                name.push(chars[i]);
                i += 1;
            }
            toks.push(Tok2::Name(name));
        } else {
            return Err(Error::GrammarSyntax {
                line: lineno,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(toks)
}

fn is_nonterminal_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Gf2Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let used: BTreeSet<usize> = self
            .rules
            .iter()
            .flat_map(|r| r.body.iter())
            .filter_map(|s| match s {
                Symbol::Terminal(t) => Some(*t),
                _ => None,
            })
            .collect();
        if used.len() != self.terminals.len() {
            let names: Vec<String> =
                self.terminals.iter().map(|c| c.to_string()).collect();
            writeln!(f, "# letters: {}", names.join(" "))?;
        }
        writeln!(f, "start: {}", self.nonterminals[self.start])?;
        for (idx, name) in self.nonterminals.iter().enumerate() {
            let mut alts: Vec<String> = Vec::new();
            if idx == self.start && self.epsilon_at_start {
                alts.push("()".to_string());
            }
            for rule in self.rules_of(idx) {
                let body: Vec<String> = rule
                    .body
                    .iter()
                    .map(|s| match s {
                        Symbol::Terminal(t) => self.terminals[*t].to_string(),
                        Symbol::Nonterminal(n) => self.nonterminals[*n].clone(),
                    })
                    .collect();
                alts.push(body.join(" "));
            }
            if !alts.is_empty() {
                writeln!(f, "{} -> {}", name, alts.join(" | "))?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// normal forms
// ---------------------------------------------------------------------------

impl Gf2Grammar {
    /// Compile the start rule's epsilon away from rule bodies: afterwards the
    /// start symbol appearing inside a body derives only non-empty words, and
    /// the empty word is reachable through the flag alone. For every rule
    /// with `j` start occurrences this emits the 2^j erasure variants, which
    /// is a bijection on derivation trees because the start has exactly one
    /// epsilon derivation.
    pub fn eliminate_start_epsilon(&self) -> Result<Gf2Grammar> {
        if !self.epsilon_at_start {
            return Ok(self.clone());
        }
        let start = self.start;
        let mut builder = GrammarBuilder::new(&self.terminals);
        for name in &self.nonterminals {
            builder.nonterminal(name);
        }
        builder.set_start(start);
        builder.set_epsilon(true);
        for rule in &self.rules {
            let positions: Vec<usize> = rule
                .body
                .iter()
                .enumerate()
                .filter_map(|(i, s)| match s {
                    Symbol::Nonterminal(n) if *n == start => Some(i),
                    _ => None,
                })
                .collect();
            if positions.is_empty() {
                builder.toggle_rule(rule.head, rule.body.clone());
                continue;
            }
            for mask in 0u32..(1 << positions.len()) {
                let erased: BTreeSet<usize> = positions
                    .iter()
                    .enumerate()
                    .filter(|(bit, _)| mask >> bit & 1 == 1)
                    .map(|(_, pos)| *pos)
                    .collect();
                let body: Vec<Symbol> = rule
                    .body
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !erased.contains(i))
                    .map(|(_, s)| *s)
                    .collect();
                // validation has excluded all-nullable bodies
                debug_assert!(!body.is_empty());
                builder.toggle_rule(rule.head, body);
            }
        }
        builder.finish()
    }

    /// Reduce every rule body to length at most two by peeling suffixes into
    /// fresh nonterminals. Fresh names are derived from the suffix body so
    /// shared suffixes are shared and repeated runs produce identical output.
    /// The transformation is a bijection on derivation trees; the start
    /// epsilon is compiled out of bodies first.
    pub fn binarize(&self) -> Result<Gf2Grammar> {
        let g = self.eliminate_start_epsilon()?;
        let mut builder = GrammarBuilder::new(&g.terminals);
        for name in &g.nonterminals {
            builder.nonterminal(name);
        }
        builder.set_start(g.start);
        builder.set_epsilon(g.epsilon_at_start);

        // name chosen for each peeled suffix, keyed by the suffix body
        let mut suffix_names: BTreeMap<Vec<Symbol>, usize> = BTreeMap::new();
        let mut suffix_rules: BTreeSet<(usize, Vec<Symbol>)> = BTreeSet::new();

        let symbol_label = |g: &Gf2Grammar, s: &Symbol| match s {
            Symbol::Terminal(t) => g.terminals[*t].to_string(),
            Symbol::Nonterminal(n) => g.nonterminals[*n].clone(),
        };

        for rule in &g.rules {
            let mut head = rule.head;
            let mut rest: &[Symbol] = &rule.body;
            loop {
                if rest.len() <= 2 {
                    builder.toggle_rule(head, rest.to_vec());
                    break;
                }
                let first = rest[0];
                let suffix = rest[1..].to_vec();
                let next = match suffix_names.get(&suffix) {
                    Some(idx) => *idx,
                    None => {
                        let label: Vec<String> =
                            suffix.iter().map(|s| symbol_label(&g, s)).collect();
                        let name = builder.fresh_name(&format!("Bin_{}", label.join("_")));
                        let idx = builder.nonterminal(&name);
                        suffix_names.insert(suffix.clone(), idx);
                        idx
                    }
                };
                builder.toggle_rule(head, vec![first, Symbol::Nonterminal(next)]);
                // emit the suffix rule once, even when suffixes are shared
                if suffix_rules.insert((next, suffix.clone())) {
                    head = next;
                    rest = &rule.body[rule.body.len() - suffix.len()..];
                } else {
                    break;
                }
            }
        }
        builder.finish()
    }

    /// Rewrite a linear grammar into the normal form where each rule is
    /// `A -> c`, `A -> c B` or `A -> B c` (plus the start epsilon flag):
    /// unit rules are inlined and longer bodies are peeled one letter at a
    /// time.
    pub fn to_linear_normal_form(&self) -> Result<Gf2Grammar> {
        for rule in &self.rules {
            let count = nonterminal_count(&rule.body);
            if count > 1 {
                return Err(Error::NotLinear {
                    rule: self.render_rule(rule),
                    count,
                });
            }
        }
        let g = self.eliminate_start_epsilon()?;

        // inline unit rules in dependency order
        let order = g.unit_topo_order();
        let mut rules_by_head: Vec<BTreeSet<Vec<Symbol>>> =
            vec![BTreeSet::new(); g.nonterminals.len()];
        for rule in &g.rules {
            rules_by_head[rule.head].insert(rule.body.clone());
        }
        for head in order {
            let bodies: Vec<Vec<Symbol>> = rules_by_head[head].iter().cloned().collect();
            for body in bodies {
                if body.len() == 1 {
                    if let Symbol::Nonterminal(b) = body[0] {
                        rules_by_head[head].remove(&body);
                        let inlined: Vec<Vec<Symbol>> =
                            rules_by_head[b].iter().cloned().collect();
                        for ib in inlined {
                            if !rules_by_head[head].insert(ib.clone()) {
                                rules_by_head[head].remove(&ib);
                            }
                        }
                    }
                }
            }
        }

        let mut builder = GrammarBuilder::new(&g.terminals);
        for name in &g.nonterminals {
            builder.nonterminal(name);
        }
        builder.set_start(g.start);
        builder.set_epsilon(g.epsilon_at_start);

        let mut suffix_names: BTreeMap<Vec<Symbol>, usize> = BTreeMap::new();
        let mut queue: Vec<(usize, Vec<Symbol>)> = Vec::new();
        for (head, bodies) in rules_by_head.iter().enumerate() {
            for body in bodies {
                queue.push((head, body.clone()));
            }
        }

        let symbol_label = |g: &Gf2Grammar, s: &Symbol| match s {
            Symbol::Terminal(t) => g.terminals[*t].to_string(),
            Symbol::Nonterminal(n) => g.nonterminals[*n].clone(),
        };

        while let Some((head, body)) = queue.pop() {
            let in_form = match body.as_slice() {
                [Symbol::Terminal(_)] => true,
                [Symbol::Terminal(_), Symbol::Nonterminal(_)] => true,
                [Symbol::Nonterminal(_), Symbol::Terminal(_)] => true,
                _ => false,
            };
            if in_form {
                builder.toggle_rule(head, body);
                continue;
            }
            // peel: keep the first symbol if it is a terminal, otherwise the
            // last one (the single nonterminal sits somewhere inside)
            let (kept, suffix, kept_first) = match body[0] {
                Symbol::Terminal(_) => (body[0], body[1..].to_vec(), true),
                _ => (
                    body[body.len() - 1],
                    body[..body.len() - 1].to_vec(),
                    false,
                ),
            };
            debug_assert!(!suffix.is_empty());
            let next = match suffix_names.get(&suffix) {
                Some(idx) => *idx,
                None => {
                    let label: Vec<String> =
                        suffix.iter().map(|s| symbol_label(&g, s)).collect();
                    let name = builder.fresh_name(&format!("Lin_{}", label.join("_")));
                    let idx = builder.nonterminal(&name);
                    suffix_names.insert(suffix.clone(), idx);
                    queue.push((idx, suffix.clone()));
                    idx
                }
            };
            let new_body = if kept_first {
                vec![kept, Symbol::Nonterminal(next)]
            } else {
                vec![Symbol::Nonterminal(next), kept]
            };
            builder.toggle_rule(head, new_body);
        }
        builder.finish()
    }

    /// Whether the grammar is already in the linear normal form.
    pub fn is_linear_normal_form(&self) -> bool {
        self.rules.iter().all(|r| {
            matches!(
                r.body.as_slice(),
                [Symbol::Terminal(_)]
                    | [Symbol::Terminal(_), Symbol::Nonterminal(_)]
                    | [Symbol::Nonterminal(_), Symbol::Terminal(_)]
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const ANBN: &str = "start: S\nS -> a S b | ()\n";

    #[test]
    fn parses_anbn() {
        let g = parse_grammar(ANBN).unwrap();
        assert_eq!(g.terminals(), &['a', 'b']);
        assert!(g.epsilon_at_start());
        assert_eq!(g.rule_count(), 1);
    }

    #[test]
    fn duplicate_rules_cancel() {
        let g = parse_grammar("start: S\nS -> a S b | ()\nS -> a S b\n").unwrap();
        assert_eq!(g.rule_count(), 0);
        assert!(g.epsilon_at_start());
        let h = parse_grammar("start: S\nS -> () | ()\nS -> a\n").unwrap();
        assert!(!h.epsilon_at_start());
    }

    #[test]
    fn undeclared_symbol_is_an_error() {
        let err = parse_grammar("start: S\nS -> a X\n");
        assert!(matches!(err, Err(Error::UndeclaredSymbol { name, .. }) if name == "X"));
    }

    #[test]
    fn epsilon_outside_start_is_an_error() {
        let err = parse_grammar("start: S\nS -> a B\nB -> ()\n");
        assert!(matches!(err, Err(Error::EpsilonOutsideStart { line: 3 })));
    }

    #[test]
    fn tokenizer_is_maximal_munch() {
        // `aBc` splits as terminal `a` then nonterminal `Bc`
        let g = parse_grammar("start: S\nS -> aBc\nBc -> b\n").unwrap();
        assert_eq!(g.terminals(), &['a', 'b']);
        assert!(g.nonterminals().iter().any(|n| n == "Bc"));
    }

    #[test]
    fn unit_cycles_are_rejected() {
        let err = parse_grammar("start: S\nS -> A\nA -> S\n");
        assert!(matches!(err, Err(Error::UnitCycle { .. })));
        let err2 = parse_grammar("start: S\nS -> S\n");
        assert!(matches!(err2, Err(Error::UnitCycle { .. })));
    }

    #[test]
    fn epsilon_mediated_unit_cycles_are_rejected() {
        // A -> S B and B -> S A behave as a unit cycle once S erases
        let err = parse_grammar("start: S\nS -> a A | ()\nA -> S B\nB -> S A\n");
        assert!(matches!(err, Err(Error::UnitCycle { .. })));
    }

    #[test]
    fn all_nullable_bodies_are_rejected() {
        let err = parse_grammar("start: S\nS -> S S | a\nS -> ()\n");
        assert!(matches!(err, Err(Error::NullableBody { .. })));
        let err2 = parse_grammar("start: S\nS -> a A | ()\nA -> S\n");
        assert!(matches!(err2, Err(Error::NullableBody { .. })));
    }

    #[test]
    fn display_round_trips() {
        let g = parse_grammar("start: S\nS -> a S b | () | A b\nA -> a | a A\n").unwrap();
        let text = g.to_string();
        let back = parse_grammar(&text).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn display_keeps_unused_letters() {
        let mut b = GrammarBuilder::new(&['a', 'b', 'c']);
        let s = b.nonterminal("S");
        b.toggle_rule(s, vec![Symbol::Terminal(0)]);
        b.set_start(s);
        let g = b.finish().unwrap();
        let text = g.to_string();
        assert!(text.contains("# letters: a b c"));
        let back = parse_grammar(&text).unwrap();
        assert_eq!(back.terminals(), &['a', 'b', 'c']);
    }

    #[test]
    fn binarize_peels_long_bodies() {
        let g = parse_grammar("start: S\nS -> a B c\nB -> b\n").unwrap();
        let b = g.binarize().unwrap();
        assert!(b.is_binary());
        // fresh nonterminal named from the peeled suffix
        assert!(b.nonterminals().iter().any(|n| n == "Bin_B_c"));
        assert_eq!(
            b.rules().filter(|r| r.body.len() == 2).count(),
            2
        );
    }

    #[test]
    fn binarize_of_binary_grammar_is_identity() {
        let g = parse_grammar("start: S\nS -> a B | b\nB -> a\n").unwrap();
        let b = g.binarize().unwrap();
        assert_eq!(g, b);
    }

    #[test]
    fn binarize_shares_suffixes() {
        let g = parse_grammar("start: S\nS -> a B c | b B c\nB -> b\n").unwrap();
        let b = g.binarize().unwrap();
        let fresh: Vec<&String> = b
            .nonterminals()
            .iter()
            .filter(|n| n.starts_with("Bin_"))
            .collect();
        assert_eq!(fresh.len(), 1);
    }

    #[test]
    fn epsilon_elimination_expands_variants() {
        let g = parse_grammar(ANBN).unwrap();
        let e = g.eliminate_start_epsilon().unwrap();
        assert!(e.epsilon_at_start());
        // S -> a S b plus the erased variant S -> a b
        assert_eq!(e.rule_count(), 2);
        assert!(e
            .rules()
            .any(|r| r.body == vec![Symbol::Terminal(0), Symbol::Terminal(1)]));
    }

    #[test]
    fn linear_normal_form_peels_and_inlines() {
        let g = parse_grammar("start: S\nS -> a S c | B | ()\nB -> b B | b\n").unwrap();
        assert!(g.is_linear());
        let n = g.to_linear_normal_form().unwrap();
        assert!(n.is_linear_normal_form(), "got:\n{n}");
        assert!(n.is_linear());
        assert!(n.epsilon_at_start());
    }

    #[test]
    fn normal_form_rejects_nonlinear() {
        let g = parse_grammar("start: S\nS -> A A\nA -> a\n").unwrap();
        assert!(!g.is_linear());
        assert!(matches!(
            g.to_linear_normal_form(),
            Err(Error::NotLinear { .. })
        ));
    }

    #[test]
    fn word_helpers() {
        let g = parse_grammar(ANBN).unwrap();
        assert_eq!(g.word_from_str("aabb").unwrap(), vec![0, 0, 1, 1]);
        assert_eq!(g.word_from_str("()").unwrap(), Vec::<usize>::new());
        assert!(matches!(
            g.word_from_str("abc"),
            Err(Error::LetterOutsideAlphabet { letter: 'c' })
        ));
        let e = crate::Exponents(vec![2, 1]);
        assert_eq!(g.render_word(&g.word_from_exponents(&e)), "aab");
    }
}
