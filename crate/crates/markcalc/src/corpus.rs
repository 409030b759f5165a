//! Seeded random term corpora.
//!
//! The preservation harness and the oracle suites run over generated
//! terms: closed guarded terms of a chosen class, equivalence-preserving
//! rewrites of them (rate splitting along the race law, summand
//! reshuffling, identity hiding and relabeling wrappers) and
//! rate-perturbing rewrites. Everything is driven by an explicit seed so
//! failures reproduce.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rate::Rate;
use crate::terms::{ActionName, ItTerm, OtTerm, Relabeling, VisName};

/// Shape parameters for term generation.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_depth: usize,
    /// Permit parallel composition (with empty synchronization sets).
    pub allow_par: bool,
    /// Permit nonempty synchronization sets on parallel compositions.
    pub allow_sync: bool,
    pub allow_tau: bool,
    pub names: Vec<VisName>,
    pub rates: Vec<Rate>,
    /// Variables that may occur free in the generated term.
    pub free_vars: Vec<String>,
}

impl GenConfig {
    /// Sequential terms: the lazy translation's domain.
    pub fn sequential(max_depth: usize) -> GenConfig {
        GenConfig {
            max_depth,
            allow_par: false,
            allow_sync: false,
            allow_tau: true,
            names: ["a", "b", "c"]
                .iter()
                .map(|n| VisName::new(n).unwrap())
                .collect(),
            rates: vec![
                Rate::from_integer(1),
                Rate::from_integer(2),
                Rate::new(3, 2).unwrap(),
            ],
            free_vars: Vec::new(),
        }
    }

    /// Synchronization-free terms: the eager and maximal-progress domain.
    pub fn sync_free(max_depth: usize) -> GenConfig {
        GenConfig {
            allow_par: true,
            ..GenConfig::sequential(max_depth)
        }
    }

    /// Unrestricted terms, synchronization included.
    pub fn general(max_depth: usize) -> GenConfig {
        GenConfig {
            allow_par: true,
            allow_sync: true,
            ..GenConfig::sequential(max_depth)
        }
    }

    pub fn with_free_vars(mut self, vars: &[&str]) -> GenConfig {
        self.free_vars = vars.iter().map(|v| v.to_string()).collect();
        self
    }
}

/// Binder pool for generated recursions; disjoint from the `Z` scheme the
/// maximal-progress translation draws from.
const BINDERS: [&str; 4] = ["X", "Y", "W", "V"];

pub struct TermGen {
    rng: ChaCha8Rng,
}

impl TermGen {
    pub fn new(seed: u64) -> TermGen {
        TermGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.random_range(0..items.len())]
    }

    fn name(&mut self, cfg: &GenConfig) -> ActionName {
        if cfg.allow_tau && self.rng.random_ratio(1, 4) {
            ActionName::Tau
        } else {
            ActionName::Visible(self.pick(&cfg.names).clone())
        }
    }

    fn rate(&mut self, cfg: &GenConfig) -> Rate {
        self.pick(&cfg.rates).clone()
    }

    fn name_set(&mut self, cfg: &GenConfig) -> BTreeSet<VisName> {
        let mut set = BTreeSet::new();
        for name in &cfg.names {
            if self.rng.random_ratio(1, 3) {
                set.insert(name.clone());
            }
        }
        if set.is_empty() {
            set.insert(self.pick(&cfg.names).clone());
        }
        set
    }

    fn relabeling(&mut self, cfg: &GenConfig) -> Relabeling {
        let mut pairs = Vec::new();
        for from in &cfg.names {
            if self.rng.random_ratio(1, 3) {
                pairs.push((from.clone(), self.pick(&cfg.names).clone()));
            }
        }
        Relabeling::from_pairs(pairs)
    }

    /// A closed (up to `cfg.free_vars`) guarded integrated-time term.
    pub fn it_term(&mut self, cfg: &GenConfig) -> ItTerm {
        let mut env: Vec<(String, bool)> = Vec::new();
        self.it_at(cfg.max_depth, &mut env, cfg)
    }

    fn it_leaf(&mut self, env: &[(String, bool)], cfg: &GenConfig) -> ItTerm {
        // Candidate variables: guarded binders plus declared free variables.
        let mut vars: Vec<&str> = env
            .iter()
            .filter(|(_, guarded)| *guarded)
            .map(|(n, _)| n.as_str())
            .collect();
        vars.extend(cfg.free_vars.iter().map(|v| v.as_str()));
        if !vars.is_empty() && self.rng.random_ratio(1, 2) {
            ItTerm::Var(self.pick(&vars).to_string())
        } else {
            ItTerm::Nil
        }
    }

    fn it_at(&mut self, depth: usize, env: &mut Vec<(String, bool)>, cfg: &GenConfig) -> ItTerm {
        if depth == 0 {
            return self.it_leaf(env, cfg);
        }
        match self.rng.random_range(0..12u32) {
            0..=3 => {
                let name = self.name(cfg);
                let rate = self.rate(cfg);
                let saved: Vec<bool> = env.iter().map(|(_, g)| *g).collect();
                for e in env.iter_mut() {
                    e.1 = true;
                }
                let body = self.it_at(depth - 1, env, cfg);
                for (e, g) in env.iter_mut().zip(saved) {
                    e.1 = g;
                }
                ItTerm::prefix(name, rate, body)
            }
            4..=5 => ItTerm::choice(
                self.it_at(depth - 1, env, cfg),
                self.it_at(depth - 1, env, cfg),
            ),
            6 if cfg.allow_par => {
                let sync = if cfg.allow_sync && self.rng.random_ratio(1, 2) {
                    self.name_set(cfg)
                } else {
                    BTreeSet::new()
                };
                ItTerm::par(
                    self.it_at(depth - 1, env, cfg),
                    self.it_at(depth - 1, env, cfg),
                    sync,
                )
            }
            7 => ItTerm::hide(self.it_at(depth - 1, env, cfg), self.name_set(cfg)),
            8 => ItTerm::relab(self.it_at(depth - 1, env, cfg), self.relabeling(cfg)),
            9 => {
                let unused: Vec<&str> = BINDERS
                    .iter()
                    .copied()
                    .filter(|b| !env.iter().any(|(n, _)| n == b))
                    .collect();
                match unused.first() {
                    None => self.it_leaf(env, cfg),
                    Some(binder) => {
                        let binder = binder.to_string();
                        env.push((binder.clone(), false));
                        let body = self.it_at(depth - 1, env, cfg);
                        env.pop();
                        // Recursion over a body that cannot use the binder
                        // is still fine; most bodies will, via the leaf rule.
                        ItTerm::rec(&binder, body)
                    }
                }
            }
            _ => self.it_leaf(env, cfg),
        }
    }

    /// A closed (up to `cfg.free_vars`) guarded orthogonal-time term.
    pub fn ot_term(&mut self, cfg: &GenConfig) -> OtTerm {
        let mut env: Vec<(String, bool)> = Vec::new();
        self.ot_at(cfg.max_depth, &mut env, cfg)
    }

    fn ot_leaf(&mut self, env: &[(String, bool)], cfg: &GenConfig) -> OtTerm {
        let mut vars: Vec<&str> = env
            .iter()
            .filter(|(_, guarded)| *guarded)
            .map(|(n, _)| n.as_str())
            .collect();
        vars.extend(cfg.free_vars.iter().map(|v| v.as_str()));
        if !vars.is_empty() && self.rng.random_ratio(1, 2) {
            OtTerm::Var(self.pick(&vars).to_string())
        } else {
            OtTerm::Nil
        }
    }

    fn ot_at(&mut self, depth: usize, env: &mut Vec<(String, bool)>, cfg: &GenConfig) -> OtTerm {
        if depth == 0 {
            return self.ot_leaf(env, cfg);
        }
        match self.rng.random_range(0..12u32) {
            0..=1 => {
                let name = self.name(cfg);
                let saved: Vec<bool> = env.iter().map(|(_, g)| *g).collect();
                for e in env.iter_mut() {
                    e.1 = true;
                }
                let body = self.ot_at(depth - 1, env, cfg);
                for (e, g) in env.iter_mut().zip(saved) {
                    e.1 = g;
                }
                OtTerm::act(name, body)
            }
            2..=3 => {
                let rate = self.rate(cfg);
                let saved: Vec<bool> = env.iter().map(|(_, g)| *g).collect();
                for e in env.iter_mut() {
                    e.1 = true;
                }
                let body = self.ot_at(depth - 1, env, cfg);
                for (e, g) in env.iter_mut().zip(saved) {
                    e.1 = g;
                }
                OtTerm::delay(rate, body)
            }
            4..=5 => OtTerm::choice(
                self.ot_at(depth - 1, env, cfg),
                self.ot_at(depth - 1, env, cfg),
            ),
            6 if cfg.allow_par => {
                let sync = if cfg.allow_sync && self.rng.random_ratio(1, 2) {
                    self.name_set(cfg)
                } else {
                    BTreeSet::new()
                };
                OtTerm::par(
                    self.ot_at(depth - 1, env, cfg),
                    self.ot_at(depth - 1, env, cfg),
                    sync,
                )
            }
            7 => OtTerm::hide(self.ot_at(depth - 1, env, cfg), self.name_set(cfg)),
            8 => OtTerm::relab(self.ot_at(depth - 1, env, cfg), self.relabeling(cfg)),
            9 => {
                let unused: Vec<&str> = BINDERS
                    .iter()
                    .copied()
                    .filter(|b| !env.iter().any(|(n, _)| n == b))
                    .collect();
                match unused.first() {
                    None => self.ot_leaf(env, cfg),
                    Some(binder) => {
                        let binder = binder.to_string();
                        env.push((binder.clone(), false));
                        let body = self.ot_at(depth - 1, env, cfg);
                        env.pop();
                        OtTerm::rec(&binder, body)
                    }
                }
            }
            _ => self.ot_leaf(env, cfg),
        }
    }

    /// A term bisimilar to `t` by construction: a chain of rewrites that
    /// are sound for integrated-time Markovian bisimilarity — race-law rate
    /// splits and merges, summand swaps and rotations, and identity hiding
    /// or relabeling wrappers. No rewrite introduces parallel composition
    /// or synchronization, so class membership is preserved.
    pub fn equivalent_variant(&mut self, t: &ItTerm) -> ItTerm {
        let mut out = t.clone();
        let steps = self.rng.random_range(1..=3);
        for _ in 0..steps {
            out = self.preserve_once(&out);
        }
        out
    }

    fn preserve_once(&mut self, t: &ItTerm) -> ItTerm {
        for _ in 0..8 {
            let op = self.rng.random_range(0..6u32);
            let rewritten = match op {
                // race-law split: rate into one third plus two thirds
                0 => self.rewrite_some(t, &mut |_, node| match node {
                    ItTerm::Prefix(a, rate, p) => {
                        let l1 = rate * &Rate::new(1, 3).unwrap();
                        let l2 = rate * &Rate::new(2, 3).unwrap();
                        Some(ItTerm::choice(
                            ItTerm::Prefix(a.clone(), l1, p.clone()),
                            ItTerm::Prefix(a.clone(), l2, p.clone()),
                        ))
                    }
                    _ => None,
                }),
                1 => self.rewrite_some(t, &mut |_, node| match node {
                    ItTerm::Choice(l, r) => match (&**l, &**r) {
                        (ItTerm::Prefix(a1, r1, p1), ItTerm::Prefix(a2, r2, p2))
                            if a1 == a2 && p1 == p2 =>
                        {
                            Some(ItTerm::Prefix(
                                a1.clone(),
                                r1.clone() + r2,
                                p1.clone(),
                            ))
                        }
                        _ => None,
                    },
                    _ => None,
                }),
                2 => self.rewrite_some(t, &mut |_, node| match node {
                    ItTerm::Choice(l, r) => Some(ItTerm::Choice(r.clone(), l.clone())),
                    _ => None,
                }),
                3 => self.rewrite_some(t, &mut |_, node| match node {
                    ItTerm::Choice(lr, c) => match &**lr {
                        ItTerm::Choice(a, b) => Some(ItTerm::choice(
                            (**a).clone(),
                            ItTerm::Choice(b.clone(), c.clone()),
                        )),
                        _ => None,
                    },
                    _ => None,
                }),
                4 => self.rewrite_some(t, &mut |_, node| {
                    Some(ItTerm::hide((*node).clone(), BTreeSet::new()))
                }),
                _ => self.rewrite_some(t, &mut |_, node| {
                    Some(ItTerm::relab((*node).clone(), Relabeling::identity()))
                }),
            };
            if let Some(out) = rewritten {
                return out;
            }
        }
        t.clone()
    }

    /// A rate perturbation somewhere in `t`: usually breaks bisimilarity,
    /// though hidden or unreachable positions may leave it intact. The
    /// preservation harness only needs verdict agreement, not a guaranteed
    /// inequivalence.
    pub fn rate_perturbation(&mut self, t: &ItTerm) -> ItTerm {
        let doubled = self.rewrite_some(t, &mut |_, node| match node {
            ItTerm::Prefix(a, rate, p) => Some(ItTerm::Prefix(
                a.clone(),
                rate.clone() + rate,
                p.clone(),
            )),
            _ => None,
        });
        match doubled {
            Some(out) => out,
            // No prefix to perturb: give the term a fresh initial move.
            None => ItTerm::prefix(
                ActionName::visible("a").unwrap(),
                Rate::from_integer(1),
                t.clone(),
            ),
        }
    }

    /// Applies `f` at one uniformly chosen node where it yields a rewrite.
    fn rewrite_some(
        &mut self,
        t: &ItTerm,
        f: &mut dyn FnMut(&mut TermGen, &ItTerm) -> Option<ItTerm>,
    ) -> Option<ItTerm> {
        let mut candidates: Vec<Vec<usize>> = Vec::new();
        collect_candidate_paths(t, f, self, &mut Vec::new(), &mut candidates);
        if candidates.is_empty() {
            return None;
        }
        let path = candidates[self.rng.random_range(0..candidates.len())].clone();
        Some(rewrite_at(t, &path, f, self))
    }

    /// Wraps an integrated-time term in one random elementary context.
    pub fn it_context(&mut self, hole: ItTerm, cfg: &GenConfig) -> ItTerm {
        let filler_cfg = GenConfig {
            max_depth: 2,
            ..cfg.clone()
        };
        match self.rng.random_range(0..5u32) {
            0 => ItTerm::choice(hole, self.it_term(&filler_cfg)),
            1 => ItTerm::prefix(self.name(cfg), self.rate(cfg), hole),
            2 => ItTerm::hide(hole, self.name_set(cfg)),
            3 => ItTerm::relab(hole, self.relabeling(cfg)),
            _ => {
                let sync = if cfg.allow_sync {
                    self.name_set(cfg)
                } else {
                    BTreeSet::new()
                };
                ItTerm::par(hole, self.it_term(&filler_cfg), sync)
            }
        }
    }

    /// Wraps an orthogonal-time term in one random elementary context.
    pub fn ot_context(&mut self, hole: OtTerm, cfg: &GenConfig) -> OtTerm {
        let filler_cfg = GenConfig {
            max_depth: 2,
            ..cfg.clone()
        };
        match self.rng.random_range(0..6u32) {
            0 => OtTerm::choice(hole, self.ot_term(&filler_cfg)),
            1 => OtTerm::act(self.name(cfg), hole),
            2 => OtTerm::delay(self.rate(cfg), hole),
            3 => OtTerm::hide(hole, self.name_set(cfg)),
            4 => OtTerm::relab(hole, self.relabeling(cfg)),
            _ => {
                let sync = if cfg.allow_sync {
                    self.name_set(cfg)
                } else {
                    BTreeSet::new()
                };
                OtTerm::par(hole, self.ot_term(&filler_cfg), sync)
            }
        }
    }
}

fn collect_candidate_paths(
    t: &ItTerm,
    f: &mut dyn FnMut(&mut TermGen, &ItTerm) -> Option<ItTerm>,
    g: &mut TermGen,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if f(g, t).is_some() {
        out.push(path.clone());
    }
    let children: Vec<&ItTerm> = match t {
        ItTerm::Nil | ItTerm::Var(_) => vec![],
        ItTerm::Prefix(_, _, p) | ItTerm::Hide(p, _) | ItTerm::Relab(p, _) | ItTerm::Rec(_, p) => {
            vec![p]
        }
        ItTerm::Choice(l, r) | ItTerm::Par(l, r, _) => vec![l, r],
    };
    for (i, c) in children.into_iter().enumerate() {
        path.push(i);
        collect_candidate_paths(c, f, g, path, out);
        path.pop();
    }
}

fn rewrite_at(
    t: &ItTerm,
    path: &[usize],
    f: &mut dyn FnMut(&mut TermGen, &ItTerm) -> Option<ItTerm>,
    g: &mut TermGen,
) -> ItTerm {
    if path.is_empty() {
        return f(g, t).expect("candidate path must admit the rewrite");
    }
    let (head, rest) = (path[0], &path[1..]);
    match t {
        ItTerm::Prefix(a, r, p) => {
            ItTerm::Prefix(a.clone(), r.clone(), Box::new(rewrite_at(p, rest, f, g)))
        }
        ItTerm::Hide(p, h) => ItTerm::Hide(Box::new(rewrite_at(p, rest, f, g)), h.clone()),
        ItTerm::Relab(p, phi) => ItTerm::Relab(Box::new(rewrite_at(p, rest, f, g)), phi.clone()),
        ItTerm::Rec(x, p) => ItTerm::Rec(x.clone(), Box::new(rewrite_at(p, rest, f, g))),
        ItTerm::Choice(l, r) => {
            if head == 0 {
                ItTerm::Choice(Box::new(rewrite_at(l, rest, f, g)), r.clone())
            } else {
                ItTerm::Choice(l.clone(), Box::new(rewrite_at(r, rest, f, g)))
            }
        }
        ItTerm::Par(l, r, s) => {
            if head == 0 {
                ItTerm::Par(Box::new(rewrite_at(l, rest, f, g)), r.clone(), s.clone())
            } else {
                ItTerm::Par(l.clone(), Box::new(rewrite_at(r, rest, f, g)), s.clone())
            }
        }
        ItTerm::Nil | ItTerm::Var(_) => unreachable!("leaf on a nonempty path"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{check_well_formed_it, check_well_formed_ot, classify_it};

    #[test]
    fn generated_terms_are_well_formed_and_in_class() {
        let mut g = TermGen::new(7);
        let seq = GenConfig::sequential(4);
        let sf = GenConfig::sync_free(4);
        for _ in 0..200 {
            let t = g.it_term(&seq);
            assert!(check_well_formed_it(&t).is_ok(), "{t}");
            assert_eq!(classify_it(&t).sequential, Some(true), "{t}");
            let t = g.it_term(&sf);
            assert!(check_well_formed_it(&t).is_ok(), "{t}");
            assert_eq!(classify_it(&t).sync_free, Some(true), "{t}");
            let q = g.ot_term(&sf);
            assert!(check_well_formed_ot(&q).is_ok(), "{q}");
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let cfg = GenConfig::general(4);
        let a: Vec<ItTerm> = {
            let mut g = TermGen::new(42);
            (0..20).map(|_| g.it_term(&cfg)).collect()
        };
        let b: Vec<ItTerm> = {
            let mut g = TermGen::new(42);
            (0..20).map(|_| g.it_term(&cfg)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn preserving_rewrites_keep_class_and_well_formedness() {
        let mut g = TermGen::new(11);
        let seq = GenConfig::sequential(4);
        for _ in 0..100 {
            let t = g.it_term(&seq);
            let u = g.equivalent_variant(&t);
            assert!(check_well_formed_it(&u).is_ok(), "{u}");
            assert_eq!(classify_it(&u).sequential, Some(true), "{u}");
        }
    }

    #[test]
    fn free_vars_appear_only_when_requested() {
        let mut g = TermGen::new(3);
        let cfg = GenConfig::sequential(4).with_free_vars(&["Y"]);
        let mut saw_free = false;
        for _ in 0..100 {
            let t = g.it_term(&cfg);
            let report = check_well_formed_it(&t);
            for v in &report.violations {
                match v {
                    crate::terms::Violation::FreeVariable { name, .. } => {
                        assert_eq!(name, "Y");
                        saw_free = true;
                    }
                    other => panic!("unexpected violation {other:?}"),
                }
            }
        }
        assert!(saw_free, "the free variable never showed up in 100 samples");
    }
}
