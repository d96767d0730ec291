//! Single-layer LSTM with a linear Q-value head, trained by hand-written BPTT.
//!
//! All parameters live in one flat vector so that copying to the target
//! network, gradient descent, finite-difference checks and checkpointing all
//! operate on the same buffer. Layout, for `H` hidden units, `I` inputs and
//! `A` actions, gate blocks ordered input, forget, output, candidate:
//!
//! | block   | shape    |
//! |---------|----------|
//! | `w_x`   | `4H x I` |
//! | `w_h`   | `4H x H` |
//! | `b`     | `4H`     |
//! | `w_out` | `A x H`  |
//! | `b_out` | `A`      |

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Carry {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl Carry {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Intermediate values of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Forward {
    /// One row of Q-values per input step.
    pub q: Vec<Vec<f64>>,
    pub carry: Carry,
    pub caches: Vec<StepCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    input_size: usize,
    hidden: usize,
    actions: usize,
    params: Vec<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Lstm {
    pub fn param_count(input_size: usize, hidden: usize, actions: usize) -> usize {
        4 * hidden * input_size + 4 * hidden * hidden + 4 * hidden + actions * hidden + actions
    }

    pub fn zeros(input_size: usize, hidden: usize, actions: usize) -> Self {
        Self { input_size, hidden, actions, params: vec![0.0; Self::param_count(input_size, hidden, actions)] }
    }

    /// Parameters drawn uniformly from [-scale, scale].
    pub fn random<R: Rng + ?Sized>(input_size: usize, hidden: usize, actions: usize, scale: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(input_size, hidden, actions);
        for p in &mut net.params {
            *p = rng.random_range(-scale..=scale);
        }
        net
    }

    pub fn from_params(input_size: usize, hidden: usize, actions: usize, params: Vec<f64>) -> Option<Self> {
        (params.len() == Self::param_count(input_size, hidden, actions)).then_some(Self {
            input_size,
            hidden,
            actions,
            params,
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> [usize; 5] {
        let (i, h, a) = (self.input_size, self.hidden, self.actions);
        let w_x = 0;
        let w_h = w_x + 4 * h * i;
        let b = w_h + 4 * h * h;
        let w_out = b + 4 * h;
        let b_out = w_out + a * h;
        [w_x, w_h, b, w_out, b_out]
    }

    /// One recurrence step: returns the Q-values and the new carry.
    pub fn step(&self, carry: &Carry, x: &[f64]) -> (Vec<f64>, Carry, StepCache) {
        assert_eq!(x.len(), self.input_size, "input width");
        let (ni, nh) = (self.input_size, self.hidden);
        let [o_wx, o_wh, o_b, o_wo, o_bo] = self.offsets();
        let p = &self.params;

        let mut gates = vec![0.0; 4 * nh];
        for (r, z) in gates.iter_mut().enumerate() {
            let mut acc = p[o_b + r];
            let wx = &p[o_wx + r * ni..o_wx + (r + 1) * ni];
            acc += wx.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            let wh = &p[o_wh + r * nh..o_wh + (r + 1) * nh];
            acc += wh.iter().zip(&carry.h).map(|(w, v)| w * v).sum::<f64>();
            *z = if r < 3 * nh { sigmoid(acc) } else { acc.tanh() };
        }

        let mut c = vec![0.0; nh];
        let mut tanh_c = vec![0.0; nh];
        let mut h = vec![0.0; nh];
        for k in 0..nh {
            let (ig, fg, og, gg) = (gates[k], gates[nh + k], gates[2 * nh + k], gates[3 * nh + k]);
            c[k] = fg * carry.c[k] + ig * gg;
            tanh_c[k] = c[k].tanh();
            h[k] = og * tanh_c[k];
        }

        let q: Vec<f64> = (0..self.actions)
            .map(|a| {
                let w = &p[o_wo + a * nh..o_wo + (a + 1) * nh];
                p[o_bo + a] + w.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();

        let cache =
            StepCache { x: x.to_vec(), h_prev: carry.h.clone(), c_prev: carry.c.clone(), gates, tanh_c, h: h.clone() };
        (q, Carry { h, c }, cache)
    }

    /// Runs a sequence of `inputs.len() / input_size` steps from `carry`.
    pub fn forward(&self, carry: &Carry, inputs: &[f64]) -> Forward {
        assert!(!inputs.is_empty() && inputs.len().is_multiple_of(self.input_size), "input sequence shape");
        let mut carry = carry.clone();
        let mut q = Vec::new();
        let mut caches = Vec::new();
        for x in inputs.chunks(self.input_size) {
            let (row, next, cache) = self.step(&carry, x);
            q.push(row);
            caches.push(cache);
            carry = next;
        }
        Forward { q, carry, caches }
    }

    /// Backpropagation through time. `dq[t]` is dLoss/dQ at step `t`; the
    /// initial carry is treated as a constant. Returns the parameter gradient
    /// in the flat layout.
    pub fn backward(&self, caches: &[StepCache], dq: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(caches.len(), dq.len(), "one dQ row per step");
        let (ni, nh, na) = (self.input_size, self.hidden, self.actions);
        let [o_wx, o_wh, o_b, o_wo, o_bo] = self.offsets();
        let p = &self.params;
        let mut grad = vec![0.0; p.len()];
        let mut dh_next = vec![0.0; nh];
        let mut dc_next = vec![0.0; nh];
        let mut dz = vec![0.0; 4 * nh];

        for (cache, dq_t) in caches.iter().zip(dq).rev() {
            let mut dh = dh_next.clone();
            for a in 0..na {
                let g = dq_t[a];
                if g == 0.0 {
                    continue;
                }
                grad[o_bo + a] += g;
                for k in 0..nh {
                    grad[o_wo + a * nh + k] += g * cache.h[k];
                    dh[k] += g * p[o_wo + a * nh + k];
                }
            }

            let gates = &cache.gates;
            for k in 0..nh {
                let (ig, fg, og, gg) = (gates[k], gates[nh + k], gates[2 * nh + k], gates[3 * nh + k]);
                let tc = cache.tanh_c[k];
                let d_o = dh[k] * tc;
                let dc = dh[k] * og * (1.0 - tc * tc) + dc_next[k];
                dz[k] = dc * gg * ig * (1.0 - ig);
                dz[nh + k] = dc * cache.c_prev[k] * fg * (1.0 - fg);
                dz[2 * nh + k] = d_o * og * (1.0 - og);
                dz[3 * nh + k] = dc * ig * (1.0 - gg * gg);
                dc_next[k] = dc * fg;
            }

            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad[o_b + r] += d;
                for j in 0..ni {
                    grad[o_wx + r * ni + j] += d * cache.x[j];
                }
                for j in 0..nh {
                    grad[o_wh + r * nh + j] += d * cache.h_prev[j];
                    dh_next[j] += d * p[o_wh + r * nh + j];
                }
            }
        }
        grad
    }

    /// Plain gradient descent.
    pub fn apply_gradient(&mut self, grad: &[f64], step: f64) {
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= step * g;
        }
    }

    pub fn copy_from(&mut self, other: &Lstm) {
        assert_eq!(self.params.len(), other.params.len(), "shape mismatch");
        self.params.copy_from_slice(&other.params);
    }
}
