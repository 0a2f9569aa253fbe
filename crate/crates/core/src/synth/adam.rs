use super::{VaeConfig, VaeParams};
use crate::error::{Error, Result};

/// First and second moment estimates with the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: VaeParams,
    pub v: VaeParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &VaeParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of a flat tensor at step `t` (1-based).
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let c1 = 1.0 - beta1.powi(t as i32);
    let c2 = 1.0 - beta2.powi(t as i32);
    for i in 0..theta.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Apply one Adam step to every tensor of `params`.
pub fn adam_step(params: &mut VaeParams, grads: &VaeParams, state: &mut AdamState, config: &VaeConfig) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(Error::Argument("gradient or optimizer state shape mismatch".into()));
    }
    state.t += 1;
    let t = state.t;
    let g = grads.tensors();
    for (((theta, grad), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(g)
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut())
    {
        adam_update(
            theta,
            grad,
            m,
            v,
            t,
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.adam_epsilon,
        );
    }
    Ok(())
}
