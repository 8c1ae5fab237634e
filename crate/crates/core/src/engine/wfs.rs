//! Well-founded model of a finite ground normal program by the alternating
//! fixpoint.

use std::cell::Cell;

use super::Truth;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundRule {
    pub head: usize,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub truth: Vec<Truth>,
}

struct Program<'a> {
    atoms: usize,
    rules: &'a [GroundRule],
    watch: Vec<Vec<usize>>,
}

impl<'a> Program<'a> {
    fn new(atoms: usize, rules: &'a [GroundRule]) -> Program<'a> {
        let mut watch = vec![Vec::new(); atoms];
        for (i, r) in rules.iter().enumerate() {
            for &p in &r.pos {
                watch[p].push(i);
            }
        }
        Program { atoms, rules, watch }
    }

    /// Least model of the program with each `not b` replaced by its value
    /// under `assumed`: satisfied iff `b` is not in `assumed`.
    fn gamma(&self, assumed: &[bool], steps: &Cell<u64>) -> Result<Vec<bool>> {
        super::charge(steps, self.rules.len() as u64 + 1)?;
        let mut derived = vec![false; self.atoms];
        let mut missing: Vec<usize> = self.rules.iter().map(|r| r.pos.len()).collect();
        let active: Vec<bool> = self.rules.iter().map(|r| r.neg.iter().all(|&b| !assumed[b])).collect();
        let mut queue = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            if active[i] && missing[i] == 0 && !derived[r.head] {
                derived[r.head] = true;
                queue.push(r.head);
            }
        }
        while let Some(a) = queue.pop() {
            for &i in &self.watch[a] {
                missing[i] -= 1;
                let head = self.rules[i].head;
                if active[i] && missing[i] == 0 && !derived[head] {
                    derived[head] = true;
                    queue.push(head);
                }
            }
        }
        Ok(derived)
    }
}

/// Computes the well-founded model. Atoms are `0..atoms`.
pub fn well_founded(atoms: usize, rules: &[GroundRule], steps: &Cell<u64>) -> Result<Model> {
    let prog = Program::new(atoms, rules);
    let mut truths = vec![false; atoms];
    let mut possible = prog.gamma(&truths, steps)?;
    loop {
        let next_true = prog.gamma(&possible, steps)?;
        let next_possible = prog.gamma(&next_true, steps)?;
        let stable = next_true == truths;
        truths = next_true;
        possible = next_possible;
        if stable {
            break;
        }
    }
    let truth = (0..atoms)
        .map(|a| {
            if truths[a] {
                Truth::True
            } else if possible[a] {
                Truth::Undefined
            } else {
                Truth::False
            }
        })
        .collect();
    Ok(Model { truth })
}

impl Model {
    /// Rules for `head` that survive the model: no body literal is false.
    pub fn surviving<'r>(&self, head: usize, rules: &'r [GroundRule]) -> Vec<&'r GroundRule> {
        rules
            .iter()
            .filter(|r| {
                r.head == head
                    && r.pos.iter().all(|&b| self.truth[b] != Truth::False)
                    && r.neg.iter().all(|&b| self.truth[b] != Truth::True)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(head: usize, pos: &[usize], neg: &[usize]) -> GroundRule {
        GroundRule {
            head,
            pos: pos.to_vec(),
            neg: neg.to_vec(),
        }
    }

    fn model(atoms: usize, rules: &[GroundRule]) -> Vec<Truth> {
        well_founded(atoms, rules, &Cell::new(1_000_000)).unwrap().truth
    }

    #[test]
    fn self_negation_is_undefined() {
        assert_eq!(model(1, &[rule(0, &[], &[0])]), vec![Truth::Undefined]);
    }

    #[test]
    fn win_over_a_chain() {
        // atoms: win(a)=0 win(b)=1 win(c)=2; win(X) :- move(X,Y), tnot(win(Y)).
        let rules = [rule(0, &[], &[1]), rule(1, &[], &[2])];
        assert_eq!(model(3, &rules), vec![Truth::False, Truth::True, Truth::False]);
    }

    #[test]
    fn win_over_a_cycle() {
        let rules = [rule(0, &[], &[1]), rule(1, &[], &[0])];
        assert_eq!(model(2, &rules), vec![Truth::Undefined, Truth::Undefined]);
    }

    #[test]
    fn positive_loops_are_false() {
        let rules = [rule(0, &[1], &[]), rule(1, &[0], &[])];
        assert_eq!(model(2, &rules), vec![Truth::False, Truth::False]);
    }

    #[test]
    fn surviving_rules() {
        let rules = [rule(0, &[1], &[]), rule(0, &[], &[2]), rule(2, &[], &[2])];
        let m = well_founded(3, &rules, &Cell::new(1000)).unwrap();
        let kept = m.surviving(0, &rules);
        assert_eq!(kept, vec![&rules[1]]);
    }
}
