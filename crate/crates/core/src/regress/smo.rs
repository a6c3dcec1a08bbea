//! Sequential minimal optimization for the epsilon-SVR dual.
//!
//! The dual over `α, α* ∈ [0, C]ⁿ` is written as one box-constrained QP in
//! `2n` variables `β = [α; α*]` with signs `s = [+1…; −1…]`:
//!
//! ```text
//! minimize   ½ βᵀQβ + pᵀβ      Q_tu = s_t s_u K(t mod n, u mod n)
//! subject to Σ s_t β_t = 0,    p = [ε − y; ε + y]
//! ```
//!
//! Each iteration picks a maximal-violating pair with second-order working
//! set selection and solves the two-variable subproblem exactly. Pairs with
//! non-positive curvature (indefinite kernels such as sigmoid) step to the
//! edge of the feasible segment, which can only lower the objective.

const TAU: f64 = 1e-12;

/// Values within this fraction of `C` of a box bound are snapped onto it, so
/// cancellation residue is not mistaken for a free variable.
const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the maximal KKT violation `m(β) − M(β)` is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every pair update.
    pub record_trace: bool,
}

impl SolverOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    /// `αᵢ − αᵢ*`
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `max(0, m(β) − M(β))`.
    pub kkt_violation: f64,
    /// Dual objective in its maximization form.
    pub objective: f64,
    /// Objective after each update when tracing was requested, starting with
    /// the value at `β = 0`.
    pub trace: Vec<f64>,
}

/// Dual objective (maximization form) for explicit `α, α*`:
/// `−½ θᵀKθ − ε Σ(α + α*) + yᵀθ` with `θ = α − α*`.
pub fn dual_objective(gram: &[f64], y: &[f64], epsilon: f64, alpha: &[f64], alpha_star: &[f64]) -> f64 {
    let n = y.len();
    let theta: Vec<f64> = alpha.iter().zip(alpha_star).map(|(a, b)| a - b).collect();
    let mut quad = 0.0;
    for i in 0..n {
        let row = &gram[i * n..(i + 1) * n];
        quad += theta[i] * row.iter().zip(&theta).map(|(k, t)| k * t).sum::<f64>();
    }
    let tube: f64 = alpha.iter().chain(alpha_star).sum::<f64>() * epsilon;
    let fit: f64 = y.iter().zip(&theta).map(|(a, b)| a * b).sum();
    -0.5 * quad - tube + fit
}

struct State<'a> {
    gram: &'a [f64],
    n: usize,
    c: f64,
    beta: Vec<f64>,
    grad: Vec<f64>,
    p: Vec<f64>,
}

impl State<'_> {
    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn k(&self, t: usize, u: usize) -> f64 {
        self.gram[(t % self.n) * self.n + u % self.n]
    }

    #[inline]
    fn in_up(&self, t: usize) -> bool {
        if t < self.n {
            self.beta[t] < self.c
        } else {
            self.beta[t] > 0.0
        }
    }

    #[inline]
    fn in_low(&self, t: usize) -> bool {
        if t < self.n {
            self.beta[t] > 0.0
        } else {
            self.beta[t] < self.c
        }
    }

    /// Primal-form objective `½βᵀQβ + pᵀβ`.
    fn primal_form(&self) -> f64 {
        self.beta
            .iter()
            .zip(self.grad.iter().zip(&self.p))
            .map(|(b, (g, p))| 0.5 * b * (g + p))
            .sum()
    }

    /// Returns `(i, j, gap)`; `j` is `None` when no pair can improve.
    fn select(&self) -> (Option<usize>, Option<usize>, f64) {
        let l = 2 * self.n;
        let mut gmax = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..l {
            if self.in_up(t) {
                let v = -self.sign(t) * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = Some(t);
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = None;
        let mut best = f64::INFINITY;
        for t in 0..l {
            if !self.in_low(t) {
                continue;
            }
            let v = -self.sign(t) * self.grad[t];
            gmin = gmin.min(v);
            if let Some(i) = i {
                let b = gmax - v;
                if b > 0.0 {
                    let mut a = self.k(i, i) + self.k(t, t) - 2.0 * self.k(i, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let score = -(b * b) / a;
                    if score < best {
                        best = score;
                        j = Some(t);
                    }
                }
            }
        }
        (i, j, gmax - gmin)
    }

    fn step(&mut self, i: usize, j: usize) {
        let (si, sj) = (self.sign(i), self.sign(j));
        let g = -si * self.grad[i] + sj * self.grad[j];
        let a = self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j);
        // β_i moves by +s_i·t, β_j by −s_j·t
        let room_i = if si > 0.0 {
            self.c - self.beta[i]
        } else {
            self.beta[i]
        };
        let room_j = if sj > 0.0 {
            self.beta[j]
        } else {
            self.c - self.beta[j]
        };
        let t_max = room_i.min(room_j);
        let t = if a > 0.0 { (g / a).min(t_max) } else { t_max };
        if t <= 0.0 {
            return;
        }
        let (old_i, old_j) = (self.beta[i], self.beta[j]);
        self.beta[i] = if t == room_i {
            if si > 0.0 {
                self.c
            } else {
                0.0
            }
        } else {
            (old_i + si * t).clamp(0.0, self.c)
        };
        self.beta[j] = if t == room_j {
            if sj > 0.0 {
                0.0
            } else {
                self.c
            }
        } else {
            (old_j - sj * t).clamp(0.0, self.c)
        };
        for v in [i, j] {
            let b = &mut self.beta[v];
            if *b <= SNAP * self.c {
                *b = 0.0;
            } else if *b >= self.c * (1.0 - SNAP) {
                *b = self.c;
            }
        }
        let di = self.beta[i] - old_i;
        let dj = self.beta[j] - old_j;
        for u in 0..2 * self.n {
            let su = self.sign(u);
            self.grad[u] += su * (si * self.k(u, i) * di + sj * self.k(u, j) * dj);
        }
    }

    /// Bias from free variables, or the midpoint of the feasible interval
    /// when every variable sits at a bound.
    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum, mut free) = (0.0, 0usize);
        for t in 0..2 * self.n {
            let s = self.sign(t);
            let yg = s * self.grad[t];
            let b = self.beta[t];
            if b >= self.c {
                if s < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if b <= 0.0 {
                if s > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        let rho = if free > 0 {
            sum / free as f64
        } else if ub.is_finite() && lb.is_finite() {
            (ub + lb) / 2.0
        } else if ub.is_finite() {
            ub
        } else {
            lb
        };
        -rho
    }
}

/// Solves the epsilon-SVR dual for a precomputed `n × n` Gram matrix.
pub fn solve_svr_dual(gram: &[f64], y: &[f64], c: f64, epsilon: f64, opts: SolverOptions) -> DualSolution {
    let n = y.len();
    assert_eq!(gram.len(), n * n, "Gram matrix must be n × n");
    let p: Vec<f64> = y
        .iter()
        .map(|v| epsilon - v)
        .chain(y.iter().map(|v| epsilon + v))
        .collect();
    let mut st = State {
        gram,
        n,
        c,
        beta: vec![0.0; 2 * n],
        grad: p.clone(),
        p,
    };
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(-st.primal_form());
    }
    let mut iterations = 0;
    let mut converged = false;
    let mut gap;
    loop {
        let (i, j, g) = st.select();
        gap = g;
        let (Some(i), Some(j)) = (i, j) else {
            converged = true;
            break;
        };
        if gap <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        st.step(i, j);
        iterations += 1;
        if opts.record_trace {
            trace.push(-st.primal_form());
        }
    }
    let alpha = st.beta[..n].to_vec();
    let alpha_star = st.beta[n..].to_vec();
    let coef = alpha.iter().zip(&alpha_star).map(|(a, b)| a - b).collect();
    DualSolution {
        bias: st.bias(),
        objective: -st.primal_form(),
        alpha,
        alpha_star,
        coef,
        iterations,
        converged,
        kkt_violation: gap.max(0.0),
        trace,
    }
}
