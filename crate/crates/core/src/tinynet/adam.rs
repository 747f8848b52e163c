use super::mlp::{Gradients, Mlp};

/// Adaptive-moment optimizer with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = self.learning_rate / bc1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);

        let mut offset = 0;
        for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
            for (params, grad) in [(&mut layer.weights, &g.weights), (&mut layer.bias, &g.bias)] {
                let n = params.len();
                let m = &mut self.m[offset..offset + n];
                let v = &mut self.v[offset..offset + n];
                for (((p, &gi), mi), vi) in params.iter_mut().zip(grad).zip(m).zip(v) {
                    *mi = b1 * *mi + (1.0 - b1) * gi;
                    *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                    *p -= step * *mi / ((*vi / bc2).sqrt() + eps);
                }
                offset += n;
            }
        }
    }
}
