//! Text formats: background knowledge, examples, bias and programs.
//!
//! All three files share one Prolog-like clause syntax. `%` starts a line
//! comment. Ground list terms such as `f([a,b])` are replaced by cell
//! constants (`l_a_b`) described by `head/2` and `tail/2` facts; the empty
//! list is `nil`.

use crate::datalog::{EvalError, Examples, FactStore};
use crate::generator::Bias;
use crate::logic::{Atom, Pred, Program, Rule, Sym, Term};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("{file}: {err}")]
    Parse { file: String, err: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Bias(#[from] crate::generator::BiasError),
    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Neck,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Neck => f.write_str("`:-`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut adv = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => adv(1, &mut i),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                out.push((Tok::LParen, l0, c0));
                adv(1, &mut i)
            }
            ')' => {
                out.push((Tok::RParen, l0, c0));
                adv(1, &mut i)
            }
            '[' => {
                out.push((Tok::LBrack, l0, c0));
                adv(1, &mut i)
            }
            ']' => {
                out.push((Tok::RBrack, l0, c0));
                adv(1, &mut i)
            }
            ',' => {
                out.push((Tok::Comma, l0, c0));
                adv(1, &mut i)
            }
            '.' => {
                out.push((Tok::Dot, l0, c0));
                adv(1, &mut i)
            }
            ':' => {
                if chars.get(i + 1) == Some(&'-') {
                    out.push((Tok::Neck, l0, c0));
                    adv(2, &mut i)
                } else {
                    return Err(err(l0, c0, "expected `:-`".into()));
                }
            }
            c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                if c == '-' && word.len() == 1 {
                    return Err(err(l0, c0, "unexpected `-`".into()));
                }
                let tok = if c.is_ascii_uppercase() || c == '_' { Tok::Var(word) } else { Tok::Ident(word) };
                out.push((tok, l0, c0));
                adv(j - start, &mut i)
            }
            other => return Err(err(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

/// Syntax tree before predicates and variables are resolved.
#[derive(Clone, Debug, PartialEq)]
enum Raw {
    Compound(String, Vec<Raw>, (usize, usize)),
    Var(String, (usize, usize)),
    List(Vec<Raw>, (usize, usize)),
}

impl Raw {
    fn pos(&self) -> (usize, usize) {
        match self {
            Raw::Compound(_, _, p) | Raw::Var(_, p) | Raw::List(_, p) => *p,
        }
    }
}

struct RawClause {
    head: Raw,
    body: Vec<Raw>,
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }
    fn pos(&self) -> (usize, usize) {
        (self.toks[self.at].1, self.toks[self.at].2)
    }
    fn fail<T>(&self, msg: String) -> Result<T, ParseError> {
        let (line, col) = self.pos();
        Err(ParseError { line, col, msg })
    }
    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.at += 1;
            Ok(())
        } else {
            self.fail(format!("expected {t}, found {}", self.peek()))
        }
    }

    fn clauses(&mut self) -> Result<Vec<RawClause>, ParseError> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            let head = self.term()?;
            let mut body = Vec::new();
            if *self.peek() == Tok::Neck {
                self.at += 1;
                body.push(self.term()?);
                while *self.peek() == Tok::Comma {
                    self.at += 1;
                    body.push(self.term()?);
                }
            }
            self.expect(Tok::Dot)?;
            out.push(RawClause { head, body });
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<Raw, ParseError> {
        let p = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.at += 1;
                let mut args = Vec::new();
                if *self.peek() == Tok::LParen {
                    self.at += 1;
                    args.push(self.term()?);
                    while *self.peek() == Tok::Comma {
                        self.at += 1;
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen)?;
                }
                Ok(Raw::Compound(name, args, p))
            }
            Tok::Var(name) => {
                self.at += 1;
                Ok(Raw::Var(name, p))
            }
            Tok::LBrack => {
                self.at += 1;
                let mut items = Vec::new();
                if *self.peek() != Tok::RBrack {
                    items.push(self.term()?);
                    while *self.peek() == Tok::Comma {
                        self.at += 1;
                        items.push(self.term()?);
                    }
                }
                self.expect(Tok::RBrack)?;
                Ok(Raw::List(items, p))
            }
            t => self.fail(format!("expected a term, found {t}")),
        }
    }
}

fn parse_raw(src: &str) -> Result<Vec<RawClause>, ParseError> {
    let toks = tokenize(src)?;
    Parser { toks, at: 0 }.clauses()
}

fn perr<T>(pos: (usize, usize), msg: String) -> Result<T, ParseError> {
    Err(ParseError { line: pos.0, col: pos.1, msg })
}

/// Facts generated by list desugaring.
#[derive(Default)]
struct Lists {
    facts: BTreeSet<Atom>,
}

impl Lists {
    fn cell(&mut self, items: &[Sym]) -> Sym {
        if items.is_empty() {
            return Sym::new("nil");
        }
        let name = format!("l_{}", items.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("_"));
        let me = Sym::new(&name);
        let rest = self.cell(&items[1..]);
        self.facts.insert(Atom::new(Pred::new("head", 2), vec![Term::Const(me), Term::Const(items[0])]));
        self.facts.insert(Atom::new(Pred::new("tail", 2), vec![Term::Const(me), Term::Const(rest)]));
        me
    }
}

/// Per-clause variable numbering by first occurrence.
#[derive(Default)]
struct Scope {
    names: Vec<String>,
}

impl Scope {
    fn var(&mut self, name: &str) -> Result<u8, String> {
        let idx = if name == "_" {
            self.names.push(String::new());
            self.names.len() - 1
        } else if let Some(i) = self.names.iter().position(|n| n == name) {
            i
        } else {
            self.names.push(name.to_string());
            self.names.len() - 1
        };
        u8::try_from(idx).map_err(|_| "too many variables in one clause".to_string())
    }
}

fn to_term(raw: &Raw, scope: &mut Scope, lists: &mut Lists) -> Result<Term, ParseError> {
    match raw {
        Raw::Compound(name, args, p) => {
            if !args.is_empty() {
                return perr(*p, format!("nested compound term `{name}(...)` is not allowed"));
            }
            Ok(Term::Const(Sym::new(name)))
        }
        Raw::Var(name, p) => scope.var(name).map(Term::Var).or_else(|m| perr(*p, m)),
        Raw::List(items, p) => {
            let mut syms = Vec::new();
            for it in items {
                match to_term(it, scope, lists)? {
                    Term::Const(c) => syms.push(c),
                    Term::Var(_) => return perr(*p, "lists must be ground".into()),
                }
            }
            Ok(Term::Const(lists.cell(&syms)))
        }
    }
}

const MAX_ARITY: usize = 16;

fn to_atom(raw: &Raw, scope: &mut Scope, lists: &mut Lists) -> Result<Atom, ParseError> {
    match raw {
        Raw::Compound(name, args, p) => {
            if args.len() > MAX_ARITY {
                return perr(*p, format!("arity above {MAX_ARITY} is not supported"));
            }
            let terms = args.iter().map(|a| to_term(a, scope, lists)).collect::<Result<Vec<_>, _>>()?;
            Ok(Atom::new(Pred::new(name, terms.len() as u8), terms))
        }
        other => perr(other.pos(), "expected an atom".into()),
    }
}

fn to_rule(c: &RawClause, lists: &mut Lists) -> Result<Rule, ParseError> {
    let mut scope = Scope::default();
    let head = to_atom(&c.head, &mut scope, lists)?;
    let body = c.body.iter().map(|b| to_atom(b, &mut scope, lists)).collect::<Result<Vec<_>, _>>()?;
    Ok(Rule::new(head, body))
}

/// Background knowledge: ground facts (list terms desugared) and rules.
pub fn parse_bk(src: &str) -> Result<(FactStore, Vec<Rule>), ParseError> {
    let mut lists = Lists::default();
    let mut facts = FactStore::new();
    let mut rules = Vec::new();
    for c in parse_raw(src)? {
        let r = to_rule(&c, &mut lists)?;
        if r.body.is_empty() {
            if !r.head.is_ground() {
                return perr(c.head.pos(), format!("fact `{}` is not ground", r.head));
            }
            facts.insert(&r.head).expect("ground");
        } else {
            rules.push(r);
        }
    }
    for f in &lists.facts {
        facts.insert(f).expect("ground");
    }
    Ok((facts, rules))
}

/// `pos(atom).` / `neg(atom).` lines. Returns examples and list facts.
pub fn parse_examples(src: &str) -> Result<(Examples, FactStore), ParseError> {
    let mut lists = Lists::default();
    let mut ex = Examples::default();
    for c in parse_raw(src)? {
        let Raw::Compound(kind, args, p) = &c.head else {
            return perr(c.head.pos(), "expected pos(...) or neg(...)".into());
        };
        if !c.body.is_empty() || args.len() != 1 || (kind != "pos" && kind != "neg") {
            return perr(*p, "expected pos(atom). or neg(atom).".into());
        }
        let atom = to_atom(&args[0], &mut Scope::default(), &mut lists)?;
        if !atom.is_ground() {
            return perr(args[0].pos(), format!("example `{atom}` is not ground"));
        }
        if kind == "pos" {
            ex.pos.push(atom);
        } else {
            ex.neg.push(atom);
        }
    }
    let mut facts = FactStore::new();
    for f in &lists.facts {
        facts.insert(f).expect("ground");
    }
    Ok((ex, facts))
}

/// Rules of a hypothesis file.
pub fn parse_program(src: &str) -> Result<Vec<Rule>, ParseError> {
    let mut lists = Lists::default();
    let rules = parse_raw(src)?.iter().map(|c| to_rule(c, &mut lists)).collect::<Result<Vec<_>, _>>()?;
    if let Some(f) = lists.facts.iter().next() {
        return perr((1, 1), format!("list terms are not allowed in programs ({f})"));
    }
    Ok(rules)
}

fn int_arg(raw: &Raw) -> Result<usize, ParseError> {
    match raw {
        Raw::Compound(s, a, p) if a.is_empty() => s.parse().or_else(|_| perr(*p, format!("expected a number, found `{s}`"))),
        other => perr(other.pos(), "expected a number".into()),
    }
}

fn name_arg(raw: &Raw) -> Result<String, ParseError> {
    match raw {
        Raw::Compound(s, a, _) if a.is_empty() => Ok(s.clone()),
        other => perr(other.pos(), "expected a name".into()),
    }
}

/// Bias directives, one per clause.
pub fn parse_bias(src: &str) -> Result<Bias, ParseError> {
    let mut head: Option<Pred> = None;
    let mut body: Vec<Pred> = Vec::new();
    let mut consts: Vec<(String, usize, Sym, (usize, usize))> = Vec::new();
    let mut bias = Bias::new(Pred::new("_", 0), Vec::new());
    for c in parse_raw(src)? {
        let Raw::Compound(name, args, p) = &c.head else {
            return perr(c.head.pos(), "expected a bias directive".into());
        };
        if !c.body.is_empty() {
            return perr(*p, "bias directives have no body".into());
        }
        let want = |n: usize| if args.len() == n { Ok(()) } else { perr(*p, format!("{name} takes {n} arguments")) };
        match name.as_str() {
            "head_pred" | "body_pred" => {
                want(2)?;
                let arity = int_arg(&args[1])?;
                if arity > MAX_ARITY {
                    return perr(*p, format!("arity above {MAX_ARITY} is not supported"));
                }
                let pred = Pred::new(&name_arg(&args[0])?, arity as u8);
                if name == "head_pred" {
                    if head.is_some() {
                        return perr(*p, "only one head_pred is supported".into());
                    }
                    head = Some(pred);
                } else if !body.contains(&pred) {
                    body.push(pred);
                }
            }
            "max_vars" => {
                want(1)?;
                bias.max_vars = int_arg(&args[0])?;
            }
            "max_body" => {
                want(1)?;
                bias.max_body = int_arg(&args[0])?;
            }
            "max_rules" => {
                want(1)?;
                bias.max_rules = int_arg(&args[0])?;
            }
            "enable_recursion" => {
                want(1)?;
                bias.enable_recursion = match name_arg(&args[0])?.as_str() {
                    "true" => true,
                    "false" => false,
                    other => return perr(args[0].pos(), format!("expected true or false, found `{other}`")),
                };
            }
            "constant" => {
                want(3)?;
                consts.push((name_arg(&args[0])?, int_arg(&args[1])?, Sym::new(&name_arg(&args[2])?), *p));
            }
            other => return perr(*p, format!("unknown bias directive `{other}`")),
        }
    }
    let Some(head) = head else {
        return perr((1, 1), "missing head_pred".into());
    };
    bias.head = head;
    bias.body = body;
    for (pname, pos, sym, p) in consts {
        let matches: Vec<Pred> = bias.body.iter().copied().filter(|b| b.name.as_str() == pname).collect();
        let [pred] = matches[..] else {
            return perr(p, format!("constant for `{pname}` needs exactly one matching body_pred"));
        };
        bias.constant_pool.entry((pred, pos)).or_default().insert(sym);
    }
    Ok(bias)
}

/// A complete learning task.
#[derive(Clone, Debug)]
pub struct Task {
    pub facts: FactStore,
    pub bk_rules: Vec<Rule>,
    pub examples: Examples,
    pub bias: Bias,
}

impl PartialEq for Task {
    fn eq(&self, other: &Task) -> bool {
        self.facts.atoms() == other.facts.atoms()
            && self.bk_rules == other.bk_rules
            && self.examples == other.examples
            && self.bias == other.bias
    }
}

fn named(file: &str) -> impl Fn(ParseError) -> TaskError + '_ {
    move |err| TaskError::Parse { file: file.to_string(), err }
}

/// Parse and cross-check the three task texts.
pub fn parse_task(bk: &str, exs: &str, bias: &str) -> Result<Task, TaskError> {
    let (mut facts, bk_rules) = parse_bk(bk).map_err(named("bk"))?;
    let (examples, list_facts) = parse_examples(exs).map_err(named("exs"))?;
    let bias = parse_bias(bias).map_err(named("bias"))?;
    for a in list_facts.atoms() {
        facts.insert(&a)?;
    }
    let task = Task { facts, bk_rules, examples, bias };
    task.validate()?;
    Ok(task)
}

impl Task {
    pub fn validate(&self) -> Result<(), TaskError> {
        self.bias.validate()?;
        let target = self.bias.head;
        let mut arity: BTreeMap<Sym, u8> = BTreeMap::new();
        for p in std::iter::once(&target).chain(&self.bias.body) {
            if let Some(&a) = arity.get(&p.name) {
                if a != p.arity {
                    return Err(TaskError::Invalid(format!("predicate {} declared with arities {a} and {}", p.name, p.arity)));
                }
            }
            arity.insert(p.name, p.arity);
        }
        let check = |a: &Atom, what: &str| -> Result<(), TaskError> {
            match arity.get(&a.pred.name) {
                Some(&n) if n != a.pred.arity => Err(TaskError::Invalid(format!(
                    "arity mismatch in {what}: {} used with {} arguments, declared {n}",
                    a.pred.name, a.pred.arity
                ))),
                _ => Ok(()),
            }
        };
        for a in self.facts.atoms() {
            check(&a, "background fact")?;
        }
        for r in &self.bk_rules {
            for a in std::iter::once(&r.head).chain(&r.body) {
                check(a, "background rule")?;
            }
            if r.body.iter().any(|a| a.pred == target) {
                return Err(TaskError::Invalid(format!("background rule uses the target {target} in its body: {r}")));
            }
            if r.head.pred == target {
                return Err(TaskError::Invalid(format!("background rule defines the target {target}: {r}")));
            }
        }
        for a in self.examples.pos.iter().chain(&self.examples.neg) {
            if a.pred != target {
                return Err(TaskError::Invalid(format!("example {a} does not use the target {target}")));
            }
            if !a.is_ground() {
                return Err(TaskError::Invalid(format!("example {a} is not ground")));
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, TaskError> {
    std::fs::read_to_string(path).map_err(|err| TaskError::Io { path: path.display().to_string(), err })
}

pub fn load_task(bk: &Path, exs: &Path, bias: &Path) -> Result<Task, TaskError> {
    let (b, e, s) = (read(bk)?, read(exs)?, read(bias)?);
    let (mut facts, bk_rules) = parse_bk(&b).map_err(named(&bk.display().to_string()))?;
    let (examples, list_facts) = parse_examples(&e).map_err(named(&exs.display().to_string()))?;
    let bias = parse_bias(&s).map_err(named(&bias.display().to_string()))?;
    for a in list_facts.atoms() {
        facts.insert(&a)?;
    }
    let task = Task { facts, bk_rules, examples, bias };
    task.validate()?;
    Ok(task)
}

pub fn load_program(path: &Path) -> Result<Vec<Rule>, TaskError> {
    parse_program(&read(path)?).map_err(named(&path.display().to_string()))
}

pub fn print_bk(facts: &FactStore, rules: &[Rule]) -> String {
    let mut s = String::new();
    for a in facts.atoms() {
        let _ = writeln!(s, "{a}.");
    }
    for r in rules {
        let _ = writeln!(s, "{r}");
    }
    s
}

pub fn print_examples(ex: &Examples) -> String {
    let mut s = String::new();
    for a in &ex.pos {
        let _ = writeln!(s, "pos({a}).");
    }
    for a in &ex.neg {
        let _ = writeln!(s, "neg({a}).");
    }
    s
}

pub fn print_bias(b: &Bias) -> String {
    let mut s = format!("head_pred({},{}).\n", b.head.name, b.head.arity);
    for p in &b.body {
        let _ = writeln!(s, "body_pred({},{}).", p.name, p.arity);
    }
    let _ = writeln!(s, "max_vars({}).\nmax_body({}).\nmax_rules({}).", b.max_vars, b.max_body, b.max_rules);
    let _ = writeln!(s, "enable_recursion({}).", b.enable_recursion);
    for ((p, pos), syms) in &b.constant_pool {
        for c in syms {
            let _ = writeln!(s, "constant({},{pos},{c}).", p.name);
        }
    }
    s
}

pub fn print_program(p: &Program) -> String {
    format!("{p}\n")
}
