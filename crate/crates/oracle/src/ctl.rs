//! Naive CTL semantics by direct fixpoint iteration on the full operator
//! set, with no reduction to a base form. Assumes every state has a
//! successor.

use ssiv_core::logic::Formula;

/// An explicit Kripke structure: successor lists and per-atom truth values.
#[derive(Debug, Clone)]
pub struct Kripke {
    pub succ: Vec<Vec<u32>>,
    /// `labels[a][s]`: atom `a` holds in state `s`.
    pub labels: Vec<Vec<bool>>,
}

impl Kripke {
    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    fn ex(&self, z: &[bool]) -> Vec<bool> {
        self.succ.iter().map(|ss| ss.iter().any(|&t| z[t as usize])).collect()
    }

    fn ax(&self, z: &[bool]) -> Vec<bool> {
        self.succ.iter().map(|ss| ss.iter().all(|&t| z[t as usize])).collect()
    }

    /// Iterates `z := f(z)` from `start` until nothing changes.
    fn fix(&self, start: Vec<bool>, f: impl Fn(&[bool]) -> Vec<bool>) -> Vec<bool> {
        let mut z = start;
        loop {
            let next = f(&z);
            if next == z {
                return z;
            }
            z = next;
        }
    }

    /// Truth value of `f` in every state. Panics on LTL operators.
    pub fn sat(&self, f: &Formula<usize>) -> Vec<bool> {
        let n = self.len();
        let zip = |a: &[bool], b: &[bool], op: fn(bool, bool) -> bool| -> Vec<bool> {
            a.iter().zip(b).map(|(x, y)| op(*x, *y)).collect()
        };
        match f {
            Formula::True => vec![true; n],
            Formula::False => vec![false; n],
            Formula::Atom(a) => self.labels[*a].clone(),
            Formula::Not(a) => self.sat(a).iter().map(|x| !x).collect(),
            Formula::And(a, b) => zip(&self.sat(a), &self.sat(b), |x, y| x && y),
            Formula::Or(a, b) => zip(&self.sat(a), &self.sat(b), |x, y| x || y),
            Formula::Implies(a, b) => zip(&self.sat(a), &self.sat(b), |x, y| !x || y),
            Formula::Iff(a, b) => zip(&self.sat(a), &self.sat(b), |x, y| x == y),
            Formula::EX(a) => self.ex(&self.sat(a)),
            Formula::AX(a) => self.ax(&self.sat(a)),
            Formula::EF(a) => {
                let p = self.sat(a);
                self.fix(vec![false; n], |z| zip(&p, &self.ex(z), |x, y| x || y))
            }
            Formula::AF(a) => {
                let p = self.sat(a);
                self.fix(vec![false; n], |z| zip(&p, &self.ax(z), |x, y| x || y))
            }
            Formula::EG(a) => {
                let p = self.sat(a);
                self.fix(vec![true; n], |z| zip(&p, &self.ex(z), |x, y| x && y))
            }
            Formula::AG(a) => {
                let p = self.sat(a);
                self.fix(vec![true; n], |z| zip(&p, &self.ax(z), |x, y| x && y))
            }
            Formula::EU(a, b) => {
                let (p, q) = (self.sat(a), self.sat(b));
                self.fix(vec![false; n], |z| {
                    let step = zip(&p, &self.ex(z), |x, y| x && y);
                    zip(&q, &step, |x, y| x || y)
                })
            }
            Formula::AU(a, b) => {
                let (p, q) = (self.sat(a), self.sat(b));
                self.fix(vec![false; n], |z| {
                    let step = zip(&p, &self.ax(z), |x, y| x && y);
                    zip(&q, &step, |x, y| x || y)
                })
            }
            Formula::X(_) | Formula::F(_) | Formula::G(_) | Formula::U(..) => {
                panic!("the CTL oracle has no LTL semantics")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 0 -> 1 -> 2 -> 2, 0 -> 0; atom 0 holds in 2, atom 1 in {0, 1}
    fn k() -> Kripke {
        Kripke {
            succ: vec![vec![0, 1], vec![2], vec![2]],
            labels: vec![vec![false, false, true], vec![true, true, false]],
        }
    }

    #[test]
    fn hand_checked_operators() {
        let k = k();
        let p = || Box::new(Formula::Atom(0));
        let q = || Box::new(Formula::Atom(1));
        assert_eq!(k.sat(&Formula::EF(p())), [true, true, true]);
        assert_eq!(k.sat(&Formula::AF(p())), [false, true, true]);
        assert_eq!(k.sat(&Formula::EG(q())), [true, false, false]);
        assert_eq!(k.sat(&Formula::AG(p())), [false, false, true]);
        assert_eq!(k.sat(&Formula::AU(q(), p())), [false, true, true]);
        assert_eq!(k.sat(&Formula::EU(q(), p())), [true, true, true]);
        assert_eq!(k.sat(&Formula::AX(q())), [true, false, false]);
    }
}
