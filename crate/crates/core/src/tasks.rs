//! Synthetic task families with planted conjunctive solutions, and fixtures.
//!
//! * `zendo`: scenes of coloured pieces; a scene is positive iff it holds a
//!   piece of each of `m` required colours. Planted cost `k = 3m`.
//! * `string`: lists over a small alphabet; positive iff every one of `n`
//!   required letters occurs. Each membership test is a two-rule recursive
//!   program of cost 6, so `k = 6n`.
//!
//! Negatives are near misses lacking exactly one required feature, cycling
//! through the features so each one is needed.

use crate::combine::reify_conjunction;
use crate::datalog::{Examples, FactStore};
use crate::generator::Bias;
use crate::io::{self, Task, TaskError};
use crate::logic::{Atom, Pred, Program, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Zendo,
    String,
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Family, String> {
        match s {
            "zendo" => Ok(Family::Zendo),
            "string" => Ok(Family::String),
            other => Err(format!("unknown task family `{other}` (expected zendo or string)")),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GenError {
    #[error("zendo tasks need k = 3m with m >= 1, got {0}")]
    ZendoSize(usize),
    #[error("string tasks need k = 6n with 1 <= n <= 20, got {0}")]
    StringSize(usize),
    #[error("the test split must be even and non-empty, got {0}")]
    TestSplit(usize),
    #[error("need at least 2 training examples, got {0}")]
    TrainSplit(usize),
}

#[derive(Clone, Debug)]
pub struct GeneratedTask {
    pub task: Task,
    /// Held out; its atoms are described by `task.facts`.
    pub test: Examples,
    pub members: Vec<Program>,
    /// Reified planted hypothesis.
    pub planted: Program,
    /// Sum of member costs.
    pub planted_cost: usize,
}

const COLOURS: [&str; 16] = [
    "blue", "red", "green", "yellow", "purple", "orange", "white", "black", "pink", "brown", "grey", "cyan", "magenta", "gold", "silver", "teal",
];

fn colour_name(i: usize) -> String {
    COLOURS.get(i).map_or_else(|| format!("colour{i}"), |c| c.to_string())
}

fn fact(store: &mut FactStore, pred: &str, args: &[&str]) {
    store.insert(&Atom::fact(pred, args)).expect("ground");
}

fn parse_members(text: &str) -> Vec<Program> {
    io::parse_program(text)
        .expect("generated member parses")
        .chunks(1)
        .map(|r| Program::new(r.to_vec()))
        .collect()
}

pub fn gen_task(family: Family, k: usize, n_train: usize, n_test: usize, seed: u64) -> Result<GeneratedTask, GenError> {
    if n_test == 0 || n_test % 2 == 1 {
        return Err(GenError::TestSplit(n_test));
    }
    if n_train < 2 {
        return Err(GenError::TrainSplit(n_train));
    }
    match family {
        Family::Zendo => zendo(k, n_train, n_test, seed),
        Family::String => string(k, n_train, n_test, seed),
    }
}

fn zendo(k: usize, n_train: usize, n_test: usize, seed: u64) -> Result<GeneratedTask, GenError> {
    if k == 0 || k % 3 != 0 {
        return Err(GenError::ZendoSize(k));
    }
    let m = k / 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let required: Vec<String> = (0..m).map(colour_name).collect();
    // One spare colour so a single-colour task still has something to lack.
    let mut palette = required.clone();
    if m == 1 {
        palette.push(colour_name(1));
    }
    let mut facts = FactStore::new();
    let target = Pred::new("zendo", 1);
    let scene = |name: &str, missing: Option<usize>, rng: &mut ChaCha8Rng, facts: &mut FactStore| {
        let allowed: Vec<&String> = palette.iter().enumerate().filter(|(i, _)| Some(*i) != missing).map(|(_, c)| c).collect();
        let mut colours: Vec<&String> = required.iter().enumerate().filter(|(i, _)| Some(*i) != missing).map(|(_, c)| c).collect();
        for _ in 0..rng.gen_range(0..=2) {
            colours.push(allowed[rng.gen_range(0..allowed.len())]);
        }
        while colours.len() < 2 {
            colours.push(allowed[rng.gen_range(0..allowed.len())]);
        }
        colours.shuffle(rng);
        // Both sizes in every scene, so size never separates the classes.
        let mut sizes: Vec<&str> = (0..colours.len()).map(|i| if i == 0 { "small" } else if i == 1 { "large" } else if rng.gen() { "small" } else { "large" }).collect();
        sizes.shuffle(rng);
        for (j, (c, s)) in colours.iter().zip(&sizes).enumerate() {
            let piece = format!("{name}_{j}");
            fact(facts, "piece", &[name, &piece]);
            fact(facts, c, &[&piece]);
            fact(facts, s, &[&piece]);
        }
        Atom::new(target, vec![Term::constant(name)])
    };
    let split = |prefix: &str, npos: usize, nneg: usize, rng: &mut ChaCha8Rng, facts: &mut FactStore| {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        let pos = (0..npos).map(|i| scene(&format!("{prefix}{i}"), None, rng, facts)).collect();
        let neg = (0..nneg).map(|i| scene(&format!("{prefix}{}", npos + i), Some(order[i % m]), rng, facts)).collect();
        Examples::new(pos, neg)
    };
    let examples = split("s", n_train.div_ceil(2), n_train / 2, &mut rng, &mut facts);
    let test = split("t", n_test / 2, n_test / 2, &mut rng, &mut facts);

    let mut body = vec![Pred::new("piece", 2)];
    body.extend(palette.iter().map(|c| Pred::new(c, 1)));
    body.extend([Pred::new("small", 1), Pred::new("large", 1)]);
    let mut bias = Bias::new(target, body);
    bias.max_vars = 3;
    bias.max_body = 3;
    bias.max_rules = 1;
    let text: String = required.iter().map(|c| format!("zendo(A) :- piece(A,B), {c}(B).\n")).collect();
    let members = parse_members(&text);
    Ok(finish(Task { facts, bk_rules: Vec::new(), examples, bias }, test, members))
}

fn string(k: usize, n_train: usize, n_test: usize, seed: u64) -> Result<GeneratedTask, GenError> {
    if k == 0 || k % 6 != 0 || k / 6 > 20 {
        return Err(GenError::StringSize(k));
    }
    let n = k / 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<String> = (0..(n + 3).max(6)).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let mut required: Vec<usize> = (0..alphabet.len()).collect();
    required.shuffle(&mut rng);
    required.truncate(n);
    required.sort_unstable();
    let target = Pred::new("f", 1);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut list = |missing: Option<usize>, rng: &mut ChaCha8Rng| -> Vec<usize> {
        for _ in 0..1000 {
            let allowed: Vec<usize> = (0..alphabet.len()).filter(|&l| Some(l) != missing).collect();
            let mut items: Vec<usize> = required.iter().copied().filter(|&l| Some(l) != missing).collect();
            let len = n + rng.gen_range(1..=4);
            while items.len() < len {
                items.push(allowed[rng.gen_range(0..allowed.len())]);
            }
            items.shuffle(rng);
            if seen.insert(items.clone()) {
                return items;
            }
        }
        panic!("could not draw a fresh list");
    };
    let mut split = |npos: usize, nneg: usize, rng: &mut ChaCha8Rng| -> Vec<(bool, Vec<usize>)> {
        let mut out: Vec<(bool, Vec<usize>)> = (0..npos).map(|_| (true, list(None, rng))).collect();
        let mut order = required.clone();
        order.shuffle(rng);
        out.extend((0..nneg).map(|i| (false, list(Some(order[i % n]), rng))));
        out
    };
    let render = |xs: &[(bool, Vec<usize>)]| -> String {
        let mut s = String::new();
        for (is_pos, items) in xs {
            let letters: Vec<&str> = items.iter().map(|&l| alphabet[l].as_str()).collect();
            s.push_str(&format!("{}(f([{}])).\n", if *is_pos { "pos" } else { "neg" }, letters.join(",")));
        }
        s
    };
    let train_text = render(&split(n_train.div_ceil(2), n_train / 2, &mut rng));
    let test_text = render(&split(n_test / 2, n_test / 2, &mut rng));
    let (examples, mut facts) = io::parse_examples(&train_text).expect("generated examples parse");
    let (test, test_facts) = io::parse_examples(&test_text).expect("generated examples parse");
    for a in test_facts.atoms() {
        facts.insert(&a).expect("ground");
    }
    for l in &alphabet {
        fact(&mut facts, &format!("c{l}"), &[l]);
    }
    let mut body = vec![Pred::new("head", 2), Pred::new("tail", 2)];
    body.extend(alphabet.iter().map(|l| Pred::new(&format!("c{l}"), 1)));
    let mut bias = Bias::new(target, body);
    bias.max_vars = 2;
    bias.max_body = 2;
    bias.max_rules = 2;
    bias.enable_recursion = true;
    let members: Vec<Program> = required
        .iter()
        .map(|&l| {
            let text = format!("f(A) :- head(A,B), c{}(B).\nf(A) :- tail(A,B), f(B).\n", alphabet[l]);
            Program::new(io::parse_program(&text).expect("member parses"))
        })
        .collect();
    Ok(finish(Task { facts, bk_rules: Vec::new(), examples, bias }, test, members))
}

fn finish(task: Task, test: Examples, members: Vec<Program>) -> GeneratedTask {
    let members: Vec<Program> = members.iter().map(|p| p.canonical().expect("members are safe")).collect();
    let planted_cost = members.iter().map(Program::cost).sum();
    let planted = reify_conjunction(&members, task.bias.head);
    GeneratedTask { task, test, members, planted, planted_cost }
}

/// Write `bk.pl`, `exs.pl`, `bias.pl`, `test.pl` and `planted.pl`.
pub fn write_task(dir: &Path, g: &GeneratedTask) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("bk.pl"), io::print_bk(&g.task.facts, &g.task.bk_rules))?;
    std::fs::write(dir.join("exs.pl"), io::print_examples(&g.task.examples))?;
    std::fs::write(dir.join("bias.pl"), io::print_bias(&g.task.bias))?;
    std::fs::write(dir.join("test.pl"), io::print_examples(&g.test))?;
    std::fs::write(dir.join("planted.pl"), io::print_program(&g.planted))
}

/// Three-colour zendo task: red, green and blue pieces are all required.
pub fn intro_zendo() -> GeneratedTask {
    gen_task(Family::Zendo, 9, 20, 20, 7).expect("valid size")
}

/// List task with five hand-written joinable programs over `f/1`.
pub struct JoinFixture {
    pub task: Task,
    pub programs: Vec<Program>,
}

pub fn join_fixture() -> Result<JoinFixture, TaskError> {
    let bk = "last(L,X) :- head(L,X), tail(L,nil).\nlast(L,X) :- tail(L,T), last(T,X).\n";
    let exs = "pos(f([a,b,c,d])).\npos(f([c,b,d,e])).\nneg(f([c,b])).\nneg(f([d,b])).\nneg(f([a,c,d,e])).\n";
    let bias = "head_pred(f,1).\nbody_pred(head,2).\nbody_pred(tail,2).\nbody_pred(last,2).\nmax_vars(2).\nmax_body(2).\nmax_rules(2).\nenable_recursion(true).\n\
                constant(head,1,a).\nconstant(head,1,c).\nconstant(head,1,d).\nconstant(head,1,b).\nconstant(last,1,e).\n";
    let task = io::parse_task(bk, exs, bias)?;
    let programs = [
        "f(S) :- head(S,a).",
        "f(S) :- last(S,e).",
        "f(S) :- tail(S,T), head(T,b).",
        "f(S) :- head(S,c).\nf(S) :- tail(S,T), f(T).",
        "f(S) :- head(S,d).\nf(S) :- tail(S,T), f(T).",
    ]
    .iter()
    .map(|t| Program::new(io::parse_program(t).expect("fixture parses")))
    .collect();
    Ok(JoinFixture { task, programs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::accuracy;

    #[test]
    fn planted_programs_are_label_consistent() {
        for (fam, k) in [(Family::Zendo, 3), (Family::Zendo, 12), (Family::String, 6), (Family::String, 18)] {
            let g = gen_task(fam, k, 24, 20, 3).unwrap();
            assert_eq!(g.planted_cost, k);
            assert_eq!(accuracy(Some(&g.planted), &g.task.facts, &g.task.bk_rules, &g.task.examples).unwrap(), 1.0);
            assert_eq!(accuracy(Some(&g.planted), &g.task.facts, &g.task.bk_rules, &g.test).unwrap(), 1.0);
            assert_eq!(accuracy(None, &g.task.facts, &g.task.bk_rules, &g.test).unwrap(), 0.5);
        }
    }

    #[test]
    fn sizes_are_checked() {
        assert_eq!(gen_task(Family::Zendo, 10, 10, 10, 0).unwrap_err(), GenError::ZendoSize(10));
        assert_eq!(gen_task(Family::String, 9, 10, 10, 0).unwrap_err(), GenError::StringSize(9));
        assert_eq!(gen_task(Family::String, 6, 10, 9, 0).unwrap_err(), GenError::TestSplit(9));
    }
}
