//! Minimal reverse-mode automatic differentiation over a thread-local tape.
//!
//! Only what the discrete path energy needs: the four arithmetic operations,
//! and unary/binary elementary functions through [`Real::lift`] and
//! [`Real::lift2`]. Constants never touch the tape.

use std::cell::RefCell;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::real::Real;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    a: u32,
    b: u32,
    da: f64,
    db: f64,
}

thread_local! {
    static TAPE: RefCell<Vec<Node>> = const { RefCell::new(Vec::new()) };
}

fn push(a: u32, da: f64, b: u32, db: f64) -> u32 {
    TAPE.with(|t| {
        let mut t = t.borrow_mut();
        let idx = t.len() as u32;
        t.push(Node { a, b, da, db });
        idx
    })
}

/// A scalar recorded on the current thread's tape.
#[derive(Clone, Copy, Debug)]
pub struct Var {
    val: f64,
    idx: u32,
}

impl Var {
    /// Registers an independent variable.
    pub fn input(val: f64) -> Self {
        Var { val, idx: push(NONE, 0.0, NONE, 0.0) }
    }

    fn unary(val: f64, x: Var, dx: f64) -> Self {
        if x.idx == NONE {
            return Var { val, idx: NONE };
        }
        Var { val, idx: push(x.idx, dx, NONE, 0.0) }
    }

    fn binary(val: f64, x: Var, dx: f64, y: Var, dy: f64) -> Self {
        match (x.idx == NONE, y.idx == NONE) {
            (true, true) => Var { val, idx: NONE },
            (false, true) => Var { val, idx: push(x.idx, dx, NONE, 0.0) },
            (true, false) => Var { val, idx: push(y.idx, dy, NONE, 0.0) },
            (false, false) => Var { val, idx: push(x.idx, dx, y.idx, dy) },
        }
    }
}

/// Runs `f` on a fresh tape and clears it afterwards.
pub fn with_tape<R>(f: impl FnOnce() -> R) -> R {
    TAPE.with(|t| t.borrow_mut().clear());
    let out = f();
    TAPE.with(|t| {
        let mut t = t.borrow_mut();
        t.clear();
        t.shrink_to(1 << 20);
    });
    out
}

/// Adjoints of `output` with respect to each entry of `inputs`.
pub fn gradient(output: Var, inputs: &[Var]) -> Vec<f64> {
    if output.idx == NONE {
        return vec![0.0; inputs.len()];
    }
    TAPE.with(|t| {
        let t = t.borrow();
        let mut adj = vec![0.0; output.idx as usize + 1];
        adj[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let n = t[i];
            if n.a != NONE {
                adj[n.a as usize] += g * n.da;
            }
            if n.b != NONE {
                adj[n.b as usize] += g * n.db;
            }
        }
        inputs
            .iter()
            .map(|v| if v.idx == NONE || v.idx > output.idx { 0.0 } else { adj[v.idx as usize] })
            .collect()
    })
}

impl Add for Var {
    type Output = Var;
    fn add(self, o: Var) -> Var {
        Var::binary(self.val + o.val, self, 1.0, o, 1.0)
    }
}

impl Sub for Var {
    type Output = Var;
    fn sub(self, o: Var) -> Var {
        Var::binary(self.val - o.val, self, 1.0, o, -1.0)
    }
}

impl Mul for Var {
    type Output = Var;
    fn mul(self, o: Var) -> Var {
        Var::binary(self.val * o.val, self, o.val, o, self.val)
    }
}

impl Div for Var {
    type Output = Var;
    fn div(self, o: Var) -> Var {
        let q = self.val / o.val;
        Var::binary(q, self, 1.0 / o.val, o, -q / o.val)
    }
}

impl Neg for Var {
    type Output = Var;
    fn neg(self) -> Var {
        Var::unary(-self.val, self, -1.0)
    }
}

impl Add<f64> for Var {
    type Output = Var;
    fn add(self, o: f64) -> Var {
        Var::unary(self.val + o, self, 1.0)
    }
}

impl Sub<f64> for Var {
    type Output = Var;
    fn sub(self, o: f64) -> Var {
        Var::unary(self.val - o, self, 1.0)
    }
}

impl Mul<f64> for Var {
    type Output = Var;
    fn mul(self, o: f64) -> Var {
        Var::unary(self.val * o, self, o)
    }
}

impl Div<f64> for Var {
    type Output = Var;
    fn div(self, o: f64) -> Var {
        Var::unary(self.val / o, self, 1.0 / o)
    }
}

impl AddAssign for Var {
    fn add_assign(&mut self, o: Var) {
        *self = *self + o;
    }
}

impl SubAssign for Var {
    fn sub_assign(&mut self, o: Var) {
        *self = *self - o;
    }
}

impl MulAssign for Var {
    fn mul_assign(&mut self, o: Var) {
        *self = *self * o;
    }
}

impl Real for Var {
    fn cst(x: f64) -> Self {
        Var { val: x, idx: NONE }
    }

    fn val(self) -> f64 {
        self.val
    }

    fn lift(self, f: f64, df: f64) -> Self {
        Var::unary(f, self, df)
    }

    fn lift2(self, other: Self, f: f64, dx: f64, dy: f64) -> Self {
        Var::binary(f, self, dx, other, dy)
    }
}
