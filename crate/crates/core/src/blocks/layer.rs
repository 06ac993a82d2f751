use crate::blocks::{FeatureMap, ParameterSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A differentiable stage whose learnable state lives in a [`ParameterSet`].
///
/// The layer itself only knows its structure and parameter names, so one
/// layout can be evaluated against any number of parameter sets.
pub trait Layer<T: Scalar> {
    type Output;
    /// Everything backward needs from the matching forward call.
    type Trace;

    fn forward_traced(
        &self,
        params: &ParameterSet<T>,
        input: &FeatureMap<T>,
    ) -> Result<(Self::Output, Self::Trace)>;

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    fn backward(
        &self,
        params: &ParameterSet<T>,
        trace: &Self::Trace,
        grad_output: &FeatureMap<T>,
        grads: &mut ParameterSet<T>,
    ) -> Result<FeatureMap<T>>;

    fn forward(&self, params: &ParameterSet<T>, input: &FeatureMap<T>) -> Result<Self::Output> {
        self.forward_traced(params, input).map(|(out, _)| out)
    }
}

/// Records one forward pass so a later backward call can consume it.
pub struct Tape<'a, T: Scalar, L: Layer<T>> {
    layer: &'a L,
    params: &'a ParameterSet<T>,
    trace: Option<L::Trace>,
}

impl<'a, T: Scalar, L: Layer<T>> Tape<'a, T, L> {
    pub fn new(layer: &'a L, params: &'a ParameterSet<T>) -> Self {
        Self {
            layer,
            params,
            trace: None,
        }
    }

    pub fn forward(&mut self, input: &FeatureMap<T>) -> Result<L::Output> {
        let (out, trace) = self.layer.forward_traced(self.params, input)?;
        self.trace = Some(trace);
        Ok(out)
    }

    /// Backpropagates through the recorded pass. Returns the input gradient
    /// and the parameter gradients; the recording is consumed.
    pub fn backward(&mut self, grad_output: &FeatureMap<T>) -> Result<(FeatureMap<T>, ParameterSet<T>)> {
        let trace = self
            .trace
            .take()
            .ok_or_else(|| Error::Usage("backward called before forward".into()))?;
        let mut grads = self.params.zeros_like();
        let grad_input = self
            .layer
            .backward(self.params, &trace, grad_output, &mut grads)?;
        Ok((grad_input, grads))
    }
}
