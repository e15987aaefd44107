use crate::error::{Result, SnnError};

/// Channel-height-width shape of a spiking feature map.
pub type Shape3 = [usize; 3];

/// Connectivity of one weight layer. No layer carries a bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    /// Valid-padding cross-correlation.
    Conv2d {
        in_shape: Shape3,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
    },
}

impl LayerKind {
    pub fn in_len(&self) -> usize {
        match *self {
            LayerKind::Dense { inputs, .. } => inputs,
            LayerKind::Conv2d { in_shape, .. } => in_shape.iter().product(),
        }
    }

    pub fn out_shape(&self) -> Shape3 {
        match *self {
            LayerKind::Dense { outputs, .. } => [outputs, 1, 1],
            LayerKind::Conv2d {
                in_shape,
                out_channels,
                kernel,
                stride,
            } => [
                out_channels,
                (in_shape[1] - kernel.0) / stride + 1,
                (in_shape[2] - kernel.1) / stride + 1,
            ],
        }
    }

    pub fn out_len(&self) -> usize {
        self.out_shape().iter().product()
    }

    /// Number of presynaptic inputs feeding one output neuron.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Dense { inputs, .. } => inputs,
            LayerKind::Conv2d {
                in_shape, kernel, ..
            } => in_shape[0] * kernel.0 * kernel.1,
        }
    }

    /// Shape of the stored weight tensor.
    ///
    /// Dense weights are stored input-major (`[inputs, outputs]`) so that the
    /// sparse spike-driven integration walks contiguous rows; convolution
    /// kernels use the usual `[out_ch, in_ch, kh, kw]`.
    pub fn weight_shape(&self) -> Vec<usize> {
        match *self {
            LayerKind::Dense { inputs, outputs } => vec![inputs, outputs],
            LayerKind::Conv2d {
                in_shape,
                out_channels,
                kernel,
                ..
            } => vec![out_channels, in_shape[0], kernel.0, kernel.1],
        }
    }

    pub fn weight_len(&self) -> usize {
        self.weight_shape().iter().product()
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LayerKind::Dense { inputs, outputs } => {
                if inputs == 0 || outputs == 0 {
                    return Err(SnnError::InvalidParam(format!(
                        "dense layer {inputs}->{outputs} has a zero dimension"
                    )));
                }
            }
            LayerKind::Conv2d {
                in_shape,
                out_channels,
                kernel,
                stride,
            } => {
                if in_shape.contains(&0) || out_channels == 0 || kernel.0 == 0 || kernel.1 == 0 {
                    return Err(SnnError::InvalidParam(
                        "conv layer has a zero dimension".into(),
                    ));
                }
                if stride == 0 {
                    return Err(SnnError::InvalidParam(
                        "conv stride must be positive".into(),
                    ));
                }
                if kernel.0 > in_shape[1] || kernel.1 > in_shape[2] {
                    return Err(SnnError::InvalidParam(format!(
                        "kernel {}x{} larger than input {}x{}",
                        kernel.0, kernel.1, in_shape[1], in_shape[2]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Weight tensor of one layer together with its connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    kind: LayerKind,
    values: Vec<f64>,
}

impl LayerWeights {
    pub fn new(kind: LayerKind, values: Vec<f64>) -> Result<Self> {
        kind.validate()?;
        if values.len() != kind.weight_len() {
            return Err(SnnError::Shape {
                context: "layer weights",
                expected: kind.weight_shape(),
                actual: vec![values.len()],
            });
        }
        Ok(LayerWeights { kind, values })
    }

    pub fn zeros(kind: LayerKind) -> Result<Self> {
        Self::new(kind, vec![0.0; kind.weight_len()])
    }

    /// Builds a dense layer from an `outputs x inputs` matrix given row by row.
    pub fn dense_from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let outputs = rows.len();
        let inputs = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != inputs) {
            return Err(SnnError::Dimension {
                context: "dense_from_rows row length",
                expected: inputs,
                actual: bad.len(),
            });
        }
        let kind = LayerKind::Dense { inputs, outputs };
        let mut w = Self::zeros(kind)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                w.values[j * outputs + i] = v;
            }
        }
        Ok(w)
    }

    pub fn conv2d(
        in_shape: Shape3,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            LayerKind::Conv2d {
                in_shape,
                out_channels,
                kernel,
                stride,
            },
            values,
        )
    }

    pub fn kind(&self) -> &LayerKind {
        &self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn in_len(&self) -> usize {
        self.kind.in_len()
    }

    pub fn out_len(&self) -> usize {
        self.kind.out_len()
    }

    /// Dense weight from input `j` to output `i`.
    pub fn dense_weight(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            LayerKind::Dense { outputs, .. } => self.values[j * outputs + i],
            LayerKind::Conv2d { .. } => panic!("dense_weight on a conv layer"),
        }
    }

    /// Adds the dendritic sum `W * spikes` into `out`.
    ///
    /// Inputs that did not spike are skipped, so with binary spikes this is a
    /// masked row sum. Summation runs over inputs in increasing index order.
    pub(crate) fn integrate_into(&self, spikes: &[f64], out: &mut [f64]) {
        match self.kind {
            LayerKind::Dense { outputs, .. } => {
                for (j, &s) in spikes.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    let row = &self.values[j * outputs..(j + 1) * outputs];
                    if s == 1.0 {
                        for (acc, &w) in out.iter_mut().zip(row) {
                            *acc += w;
                        }
                    } else {
                        for (acc, &w) in out.iter_mut().zip(row) {
                            *acc += w * s;
                        }
                    }
                }
            }
            LayerKind::Conv2d {
                in_shape: [ic_n, ih, iw],
                out_channels,
                kernel: (kh, kw),
                stride,
            } => {
                let [_, oh, ow] = self.kind.out_shape();
                for oc in 0..out_channels {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = 0.0;
                            for ic in 0..ic_n {
                                let kbase = ((oc * ic_n + ic) * kh) * kw;
                                for ky in 0..kh {
                                    let y = oy * stride + ky;
                                    let in_row = (ic * ih + y) * iw;
                                    for kx in 0..kw {
                                        let s = spikes[in_row + ox * stride + kx];
                                        if s != 0.0 {
                                            acc += self.values[kbase + ky * kw + kx] * s;
                                        }
                                    }
                                }
                            }
                            out[(oc * oh + oy) * ow + ox] += acc;
                        }
                    }
                }
            }
        }
    }

    /// `grad += delta_out (outer) spikes_in`, shaped like the weights.
    pub(crate) fn accumulate_grad(&self, grad: &mut [f64], delta_out: &[f64], spikes_in: &[f64]) {
        match self.kind {
            LayerKind::Dense { outputs, .. } => {
                for (j, &s) in spikes_in.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    let row = &mut grad[j * outputs..(j + 1) * outputs];
                    for (g, &d) in row.iter_mut().zip(delta_out) {
                        *g += d * s;
                    }
                }
            }
            LayerKind::Conv2d {
                in_shape: [ic_n, ih, iw],
                out_channels,
                kernel: (kh, kw),
                stride,
            } => {
                let [_, oh, ow] = self.kind.out_shape();
                for oc in 0..out_channels {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let d = delta_out[(oc * oh + oy) * ow + ox];
                            if d == 0.0 {
                                continue;
                            }
                            for ic in 0..ic_n {
                                let kbase = ((oc * ic_n + ic) * kh) * kw;
                                for ky in 0..kh {
                                    let in_row = (ic * ih + oy * stride + ky) * iw;
                                    for kx in 0..kw {
                                        grad[kbase + ky * kw + kx] +=
                                            d * spikes_in[in_row + ox * stride + kx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// `grad_in += W^T delta_out`: adjoint of [`Self::integrate_into`] with
    /// respect to the input spikes.
    pub(crate) fn backprop_input(&self, delta_out: &[f64], grad_in: &mut [f64]) {
        match self.kind {
            LayerKind::Dense { outputs, .. } => {
                for (j, g) in grad_in.iter_mut().enumerate() {
                    let row = &self.values[j * outputs..(j + 1) * outputs];
                    *g += row.iter().zip(delta_out).map(|(w, d)| w * d).sum::<f64>();
                }
            }
            LayerKind::Conv2d {
                in_shape: [ic_n, ih, iw],
                out_channels,
                kernel: (kh, kw),
                stride,
            } => {
                let [_, oh, ow] = self.kind.out_shape();
                for oc in 0..out_channels {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let d = delta_out[(oc * oh + oy) * ow + ox];
                            if d == 0.0 {
                                continue;
                            }
                            for ic in 0..ic_n {
                                let kbase = ((oc * ic_n + ic) * kh) * kw;
                                for ky in 0..kh {
                                    let in_row = (ic * ih + oy * stride + ky) * iw;
                                    for kx in 0..kw {
                                        grad_in[in_row + ox * stride + kx] +=
                                            self.values[kbase + ky * kw + kx] * d;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Dendritic input `W * o` of a dense layer.
pub fn dense_integrate(weights: &LayerWeights, spikes: &[f64]) -> Result<Vec<f64>> {
    if !matches!(weights.kind, LayerKind::Dense { .. }) {
        return Err(SnnError::InvalidParam(
            "dense_integrate on a conv layer".into(),
        ));
    }
    if spikes.len() != weights.in_len() {
        return Err(SnnError::Dimension {
            context: "dense_integrate spikes",
            expected: weights.in_len(),
            actual: spikes.len(),
        });
    }
    let mut out = vec![0.0; weights.out_len()];
    weights.integrate_into(spikes, &mut out);
    Ok(out)
}

/// Strided valid cross-correlation of a `C x H x W` spike map.
/// The output is flattened `out_ch x out_h x out_w`.
pub fn conv2d_integrate(weights: &LayerWeights, spikes: &[f64], shape: Shape3) -> Result<Vec<f64>> {
    let LayerKind::Conv2d { in_shape, .. } = weights.kind else {
        return Err(SnnError::InvalidParam(
            "conv2d_integrate on a dense layer".into(),
        ));
    };
    if shape != in_shape {
        return Err(SnnError::Shape {
            context: "conv2d_integrate input",
            expected: in_shape.to_vec(),
            actual: shape.to_vec(),
        });
    }
    if spikes.len() != weights.in_len() {
        return Err(SnnError::Dimension {
            context: "conv2d_integrate spikes",
            expected: weights.in_len(),
            actual: spikes.len(),
        });
    }
    let mut out = vec![0.0; weights.out_len()];
    weights.integrate_into(spikes, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_masked_row_sum() {
        let w = LayerWeights::dense_from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(dense_integrate(&w, &[1.0, 0.0]).unwrap(), vec![1.0, 3.0]);
        assert_eq!(dense_integrate(&w, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let w = LayerWeights::dense_from_rows(&[vec![0.5, -0.5]]).unwrap();
        assert_eq!(dense_integrate(&w, &[1.0, 1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn dense_dimension_mismatch() {
        let w = LayerWeights::dense_from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            dense_integrate(&w, &[1.0]),
            Err(SnnError::Dimension { .. })
        ));
    }

    #[test]
    fn conv_ones_stride_one() {
        let w = LayerWeights::conv2d([1, 3, 3], 1, (2, 2), 1, vec![1.0; 4]).unwrap();
        let out = conv2d_integrate(&w, &[1.0; 9], [1, 3, 3]).unwrap();
        assert_eq!(out, vec![4.0; 4]);
        let out = conv2d_integrate(&w, &[0.0; 9], [1, 3, 3]).unwrap();
        assert_eq!(out, vec![0.0; 4]);
    }

    #[test]
    fn conv_ones_stride_two_matches_nested_loops() {
        let w = LayerWeights::conv2d([1, 4, 4], 1, (2, 2), 2, vec![1.0; 4]).unwrap();
        let spikes = vec![1.0; 16];
        let out = conv2d_integrate(&w, &spikes, [1, 4, 4]).unwrap();
        // direct nested-loop oracle
        let mut expect = vec![0.0; 4];
        for oy in 0..2 {
            for ox in 0..2 {
                for ky in 0..2 {
                    for kx in 0..2 {
                        expect[oy * 2 + ox] += spikes[(oy * 2 + ky) * 4 + ox * 2 + kx];
                    }
                }
            }
        }
        assert_eq!(out, expect);
        assert_eq!(out, vec![4.0; 4]);
    }

    #[test]
    fn conv_shape_mismatch() {
        let w = LayerWeights::conv2d([1, 3, 3], 1, (2, 2), 1, vec![1.0; 4]).unwrap();
        assert!(conv2d_integrate(&w, &[1.0; 9], [1, 9, 1]).is_err());
        assert!(LayerWeights::conv2d([1, 3, 3], 1, (4, 4), 1, vec![1.0; 16]).is_err());
        assert!(LayerWeights::conv2d([1, 3, 3], 1, (2, 2), 0, vec![1.0; 4]).is_err());
    }

    #[test]
    fn out_shape_valid_padding() {
        let kind = LayerKind::Conv2d {
            in_shape: [1, 28, 28],
            out_channels: 8,
            kernel: (5, 5),
            stride: 2,
        };
        assert_eq!(kind.out_shape(), [8, 12, 12]);
        assert_eq!(kind.fan_in(), 25);
    }
}
