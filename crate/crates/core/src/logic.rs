//! Temporal formulas shared by the front end, the checker and the emitters.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Logic {
    Ctl,
    Ltl,
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logic::Ctl => "ctl",
            Logic::Ltl => "ltl",
        })
    }
}

/// CTL and LTL operators over atoms of type `A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<A> {
    True,
    False,
    Atom(A),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Or(Box<Formula<A>>, Box<Formula<A>>),
    Implies(Box<Formula<A>>, Box<Formula<A>>),
    Iff(Box<Formula<A>>, Box<Formula<A>>),
    EX(Box<Formula<A>>),
    AX(Box<Formula<A>>),
    EF(Box<Formula<A>>),
    AF(Box<Formula<A>>),
    EG(Box<Formula<A>>),
    AG(Box<Formula<A>>),
    EU(Box<Formula<A>>, Box<Formula<A>>),
    AU(Box<Formula<A>>, Box<Formula<A>>),
    // LTL
    X(Box<Formula<A>>),
    F(Box<Formula<A>>),
    G(Box<Formula<A>>),
    U(Box<Formula<A>>, Box<Formula<A>>),
}

impl<A> Formula<A> {
    pub fn not(f: Formula<A>) -> Self {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn children(&self) -> Vec<&Formula<A>> {
        use Formula::*;
        match self {
            True | False | Atom(_) => vec![],
            Not(a) | EX(a) | AX(a) | EF(a) | AF(a) | EG(a) | AG(a) | X(a) | F(a) | G(a) => vec![a],
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) | EU(a, b) | AU(a, b) | U(a, b) => {
                vec![a, b]
            }
        }
    }

    pub fn is_path_quantified(&self) -> bool {
        use Formula::*;
        matches!(self, EX(_) | AX(_) | EF(_) | AF(_) | EG(_) | AG(_) | EU(..) | AU(..))
    }

    pub fn is_linear_temporal(&self) -> bool {
        matches!(self, Formula::X(_) | Formula::F(_) | Formula::G(_) | Formula::U(..))
    }

    /// True if any node satisfies `pred`.
    pub fn any(&self, pred: &impl Fn(&Formula<A>) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a A>) {
        if let Formula::Atom(a) = self {
            out.push(a);
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// Top-level conjuncts (a formula that is not a conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&Formula<A>> {
        match self {
            Formula::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            f => vec![f],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn try_map<B, E>(&self, f: &mut impl FnMut(&A) -> Result<B, E>) -> Result<Formula<B>, E> {
        use Formula::*;
        let mut m = |x: &Formula<A>| x.try_map(f).map(Box::new);
        Ok(match self {
            True => True,
            False => False,
            Atom(a) => Atom(f(a)?),
            Not(a) => Not(m(a)?),
            And(a, b) => And(m(a)?, m(b)?),
            Or(a, b) => Or(m(a)?, m(b)?),
            Implies(a, b) => Implies(m(a)?, m(b)?),
            Iff(a, b) => Iff(m(a)?, m(b)?),
            EX(a) => EX(m(a)?),
            AX(a) => AX(m(a)?),
            EF(a) => EF(m(a)?),
            AF(a) => AF(m(a)?),
            EG(a) => EG(m(a)?),
            AG(a) => AG(m(a)?),
            EU(a, b) => EU(m(a)?, m(b)?),
            AU(a, b) => AU(m(a)?, m(b)?),
            X(a) => X(m(a)?),
            F(a) => F(m(a)?),
            G(a) => G(m(a)?),
            U(a, b) => U(m(a)?, m(b)?),
        })
    }

    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> B) -> Formula<B> {
        self.try_map::<B, std::convert::Infallible>(&mut |a| Ok(f(a)))
            .unwrap_or_else(|e| match e {})
    }

    /// Renders with a callback for atoms, in the ASCII surface syntax.
    pub fn render(&self, atom: &dyn Fn(&A) -> String) -> String {
        self.render_prec(atom, 0)
    }

    fn render_prec(&self, atom: &dyn Fn(&A) -> String, prec: u8) -> String {
        use Formula::*;
        let un = |op: &str, a: &Formula<A>| format!("{op} {}", a.render_prec(atom, 7));
        let (s, p) = match self {
            True => ("true".to_string(), 9),
            False => ("false".to_string(), 9),
            Atom(a) => {
                let s = atom(a);
                if s.contains(' ') {
                    (format!("({s})"), 9)
                } else {
                    (s, 9)
                }
            }
            Not(a) => (format!("!{}", a.render_prec(atom, 7)), 7),
            And(a, b) => (
                format!("{} & {}", a.render_prec(atom, 4), b.render_prec(atom, 5)),
                4,
            ),
            Or(a, b) => (
                format!("{} | {}", a.render_prec(atom, 3), b.render_prec(atom, 4)),
                3,
            ),
            Implies(a, b) => (
                format!("{} -> {}", a.render_prec(atom, 2), b.render_prec(atom, 1)),
                1,
            ),
            Iff(a, b) => (
                format!("{} <-> {}", a.render_prec(atom, 2), b.render_prec(atom, 2)),
                1,
            ),
            EX(a) => (un("EX", a), 7),
            AX(a) => (un("AX", a), 7),
            EF(a) => (un("EF", a), 7),
            AF(a) => (un("AF", a), 7),
            EG(a) => (un("EG", a), 7),
            AG(a) => (un("AG", a), 7),
            EU(a, b) => (format!("E[{} U {}]", a.render_prec(atom, 7), b.render_prec(atom, 0)), 9),
            AU(a, b) => (format!("A[{} U {}]", a.render_prec(atom, 7), b.render_prec(atom, 0)), 9),
            X(a) => (un("X", a), 7),
            F(a) => (un("F", a), 7),
            G(a) => (un("G", a), 7),
            U(a, b) => (
                format!("{} U {}", a.render_prec(atom, 6), b.render_prec(atom, 6)),
                5,
            ),
        };
        if p < prec {
            format!("({s})")
        } else {
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjuncts_flatten_nested_and() {
        let f: Formula<u8> = Formula::and(
            Formula::Atom(1),
            Formula::and(Formula::Atom(2), Formula::AG(Box::new(Formula::Atom(3)))),
        );
        assert_eq!(f.conjuncts().len(), 3);
        assert_eq!(f.depth(), 4);
    }

    #[test]
    fn render_parenthesizes_by_precedence() {
        let f: Formula<&str> = Formula::not(Formula::EF(Box::new(Formula::and(
            Formula::Atom("a"),
            Formula::Atom("b"),
        ))));
        assert_eq!(f.render(&|a| a.to_string()), "!EF (a & b)");
    }
}
