//! The residual network, its recorded forward pass and the reverse pass.

use kspace_core::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bn::{BnCache, BnGrad, ComplexBn};
use crate::conv::{ComplexConv, ConvGrad, Convention};
use crate::dc::{blend, blend_backward, sigmoid, softplus, softplus_inv, Consistency};
use crate::error::DcrError;
use crate::tensor::{complex_relu, ComplexTensor};
use crate::Result;

/// Channel width and residual block count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arch {
    pub channels: usize,
    pub blocks: usize,
}

impl Arch {
    /// 64 channels, 5 residual blocks.
    pub const FULL: Arch = Arch {
        channels: 64,
        blocks: 5,
    };
}

/// BN behaviour: batch statistics (`Train`) or running statistics (`Eval`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Which half of a complex tensor a stored buffer holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Real => "real",
            Part::Imag => "imag",
        }
    }
}

/// Name, shape and role of one stored buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub part: Part,
    pub trainable: bool,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Two convolutions with their BN layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub conv_a: ComplexConv,
    pub bn_a: ComplexBn,
    pub conv_b: ComplexConv,
    pub bn_b: ComplexBn,
}

/// Network parameters, BN running statistics and the raw DC weight.
///
/// The DC weight is `softplus(lambda_raw)`, so it stays nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct DcrNetModel {
    pub arch: Arch,
    pub input_conv: ComplexConv,
    pub input_bn: ComplexBn,
    pub blocks: Vec<Block>,
    pub output_conv: ComplexConv,
    pub lambda_raw: f64,
    pub mode: Mode,
}

/// Gradients aligned with [`DcrNetModel::layout`]; non-trainable buffers hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    /// Squared Euclidean norm over all entries.
    pub fn norm_sqr(&self) -> f64 {
        self.tensors.iter().flatten().map(|g| g * g).sum()
    }
}

struct BlockTape {
    bn_a: BnCache,
    f: ComplexTensor,
    a: ComplexTensor,
    bn_b: BnCache,
    y: ComplexTensor,
}

struct DcTape {
    k6: Vec<C64>,
    kspace: ComplexTensor,
    mask: Vec<bool>,
    lambda: f64,
}

/// Activations recorded by [`DcrNetModel::forward_train`].
pub struct Tape {
    x0: ComplexTensor,
    bn0: BnCache,
    y0: ComplexTensor,
    blocks: Vec<BlockTape>,
    dc: Option<DcTape>,
}

impl Tape {
    /// Sign pattern of every ReLU output; equal patterns mean the same linear piece.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        let mut push = |t: &ComplexTensor| out.extend(t.re.iter().chain(&t.im).map(|&v| v > 0.0));
        push(&self.y0);
        for b in &self.blocks {
            push(&b.f);
            push(&b.y);
        }
        out
    }
}

fn relu_mask(g: &mut ComplexTensor, out: &ComplexTensor) {
    g.re.iter_mut().zip(&out.re).for_each(|(a, &y)| {
        if y <= 0.0 {
            *a = 0.0
        }
    });
    g.im.iter_mut().zip(&out.im).for_each(|(a, &y)| {
        if y <= 0.0 {
            *a = 0.0
        }
    });
}

fn conv_layout(out: &mut Vec<TensorInfo>, name: &str, c_in: usize, c_out: usize) {
    for (suffix, shape) in [("weight", vec![c_out, c_in, 3, 3]), ("bias", vec![c_out])] {
        for part in [Part::Real, Part::Imag] {
            out.push(TensorInfo {
                name: format!("{name}.{suffix}"),
                shape: shape.clone(),
                part,
                trainable: true,
            });
        }
    }
}

fn bn_layout(out: &mut Vec<TensorInfo>, name: &str, c: usize) {
    for (suffix, trainable) in [
        ("gamma", true),
        ("beta", true),
        ("running_mean", false),
        ("running_var", false),
    ] {
        for part in [Part::Real, Part::Imag] {
            out.push(TensorInfo {
                name: format!("{name}.{suffix}"),
                shape: vec![c],
                part,
                trainable,
            });
        }
    }
}

fn conv_refs<'a>(out: &mut Vec<&'a [f64]>, c: &'a ComplexConv) {
    out.extend([&c.w_re[..], &c.w_im, &c.b_re, &c.b_im]);
}

fn bn_refs<'a>(out: &mut Vec<&'a [f64]>, b: &'a ComplexBn) {
    out.extend([
        &b.gamma_re[..],
        &b.gamma_im,
        &b.beta_re,
        &b.beta_im,
        &b.mean_re,
        &b.mean_im,
        &b.var_re,
        &b.var_im,
    ]);
}

fn conv_muts<'a>(out: &mut Vec<&'a mut [f64]>, c: &'a mut ComplexConv) {
    out.extend([&mut c.w_re[..], &mut c.w_im, &mut c.b_re, &mut c.b_im]);
}

fn bn_muts<'a>(out: &mut Vec<&'a mut [f64]>, b: &'a mut ComplexBn) {
    out.extend([
        &mut b.gamma_re[..],
        &mut b.gamma_im,
        &mut b.beta_re,
        &mut b.beta_im,
        &mut b.mean_re,
        &mut b.mean_im,
        &mut b.var_re,
        &mut b.var_im,
    ]);
}

fn conv_grads(out: &mut Vec<Vec<f64>>, g: ConvGrad) {
    out.extend([g.w_re, g.w_im, g.b_re, g.b_im]);
}

fn bn_grads(out: &mut Vec<Vec<f64>>, g: BnGrad) {
    let c = g.gamma_re.len();
    out.extend([g.gamma_re, g.gamma_im, g.beta_re, g.beta_im]);
    out.extend(std::iter::repeat_with(|| vec![0.0; c]).take(4));
}

impl DcrNetModel {
    /// Conv weights and biases drawn from `N(0, init_std^2)`; BN scale 1,
    /// offset 0; DC weight 1.
    pub fn new(arch: Arch, init_std: f64, seed: u64) -> Result<Self> {
        if arch.channels == 0 {
            return Err(DcrError::Param("channels must be positive".into()));
        }
        if !(init_std >= 0.0 && init_std.is_finite()) {
            return Err(DcrError::Param(format!(
                "init_std must be finite and nonnegative, got {init_std}"
            )));
        }
        let c = arch.channels;
        let mut m = Self {
            arch,
            input_conv: ComplexConv::zeros(1, c),
            input_bn: ComplexBn::new(c),
            blocks: (0..arch.blocks)
                .map(|_| Block {
                    conv_a: ComplexConv::zeros(c, c),
                    bn_a: ComplexBn::new(c),
                    conv_b: ComplexConv::zeros(c, c),
                    bn_b: ComplexBn::new(c),
                })
                .collect(),
            output_conv: ComplexConv::zeros(c, 1),
            lambda_raw: softplus_inv(1.0),
            mode: Mode::Train,
        };
        if init_std > 0.0 {
            let normal = Normal::new(0.0, init_std).map_err(|e| DcrError::Param(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for conv in m.convs_mut() {
                for buf in [
                    &mut conv.w_re,
                    &mut conv.w_im,
                    &mut conv.b_re,
                    &mut conv.b_im,
                ] {
                    buf.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
                }
            }
        }
        Ok(m)
    }

    fn convs_mut(&mut self) -> Vec<&mut ComplexConv> {
        let mut v = vec![&mut self.input_conv];
        for b in &mut self.blocks {
            v.push(&mut b.conv_a);
            v.push(&mut b.conv_b);
        }
        v.push(&mut self.output_conv);
        v
    }

    /// Sets how every convolution combines its real and imaginary parts.
    pub fn set_convention(&mut self, convention: Convention) {
        self.convs_mut()
            .into_iter()
            .for_each(|c| c.convention = convention);
    }

    pub fn convention(&self) -> Convention {
        self.input_conv.convention
    }

    /// DC weight `softplus(lambda_raw)`.
    pub fn lambda(&self) -> f64 {
        softplus(self.lambda_raw)
    }

    /// Buffer descriptions in storage order.
    pub fn layout(arch: Arch) -> Vec<TensorInfo> {
        let c = arch.channels;
        let mut out = Vec::new();
        conv_layout(&mut out, "input.conv", 1, c);
        bn_layout(&mut out, "input.bn", c);
        for b in 0..arch.blocks {
            conv_layout(&mut out, &format!("block{b}.conv_a"), c, c);
            bn_layout(&mut out, &format!("block{b}.bn_a"), c);
            conv_layout(&mut out, &format!("block{b}.conv_b"), c, c);
            bn_layout(&mut out, &format!("block{b}.bn_b"), c);
        }
        conv_layout(&mut out, "output.conv", c, 1);
        out.push(TensorInfo {
            name: "dc.lambda_raw".into(),
            shape: vec![1],
            part: Part::Real,
            trainable: true,
        });
        out
    }

    /// Buffers in [`DcrNetModel::layout`] order.
    pub fn buffers(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        conv_refs(&mut out, &self.input_conv);
        bn_refs(&mut out, &self.input_bn);
        for b in &self.blocks {
            conv_refs(&mut out, &b.conv_a);
            bn_refs(&mut out, &b.bn_a);
            conv_refs(&mut out, &b.conv_b);
            bn_refs(&mut out, &b.bn_b);
        }
        conv_refs(&mut out, &self.output_conv);
        out.push(std::slice::from_ref(&self.lambda_raw));
        out
    }

    /// Mutable buffers in [`DcrNetModel::layout`] order.
    pub fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        conv_muts(&mut out, &mut self.input_conv);
        bn_muts(&mut out, &mut self.input_bn);
        for b in &mut self.blocks {
            conv_muts(&mut out, &mut b.conv_a);
            bn_muts(&mut out, &mut b.bn_a);
            conv_muts(&mut out, &mut b.conv_b);
            bn_muts(&mut out, &mut b.bn_b);
        }
        conv_muts(&mut out, &mut self.output_conv);
        out.push(std::slice::from_mut(&mut self.lambda_raw));
        out
    }

    /// Number of trainable scalars.
    pub fn trainable_count(&self) -> usize {
        Self::layout(self.arch)
            .iter()
            .filter(|t| t.trainable)
            .map(|t| t.len())
            .sum()
    }

    fn check_input(&self, x0: &ComplexTensor, dc: Option<&Consistency<'_>>) -> Result<()> {
        if x0.dims[1] != 1 {
            return Err(DcrError::Channels {
                expected: 1,
                got: x0.dims[1],
            });
        }
        if let Some(dc) = dc {
            dc.check(x0.dims)?;
        }
        Ok(())
    }

    fn pass(
        &self,
        x0: &ComplexTensor,
        dc: Option<&Consistency<'_>>,
        batch: bool,
    ) -> Result<(ComplexTensor, Tape)> {
        self.check_input(x0, dc)?;
        let bn = |layer: &ComplexBn, z: &ComplexTensor| -> (ComplexTensor, Option<BnCache>) {
            if batch {
                let (y, c) = layer.forward_batch(z);
                (y, Some(c))
            } else {
                (layer.forward_eval(z), None)
            }
        };
        let dummy = || {
            ComplexBn::new(1)
                .forward_batch(&ComplexTensor::zeros([1, 1, 1, 1]))
                .1
        };

        let (z, bn0) = bn(&self.input_bn, &self.input_conv.forward(x0)?);
        let y0 = complex_relu(&z);
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut x = y0.clone();
        for b in &self.blocks {
            let (za, ca) = bn(&b.bn_a, &b.conv_a.forward(&x)?);
            let f = complex_relu(&za);
            let mut a = f.clone();
            a.add_assign(&x);
            let (zb, cb) = bn(&b.bn_b, &b.conv_b.forward(&a)?);
            let y = complex_relu(&zb);
            x = y.clone();
            blocks.push(BlockTape {
                bn_a: ca.unwrap_or_else(dummy),
                f,
                a,
                bn_b: cb.unwrap_or_else(dummy),
                y,
            });
        }
        let mut y6 = self.output_conv.forward(&x)?;
        y6.add_assign(x0);
        let (out, dct) = match dc {
            Some(dc) => {
                let lambda = self.lambda();
                let (out, k6) = blend(&y6, dc, lambda);
                (
                    out,
                    Some(DcTape {
                        k6,
                        kspace: dc.kspace.clone(),
                        mask: dc.mask.to_vec(),
                        lambda,
                    }),
                )
            }
            None => (y6, None),
        };
        Ok((
            out,
            Tape {
                x0: x0.clone(),
                bn0: bn0.unwrap_or_else(dummy),
                y0,
                blocks,
                dc: dct,
            },
        ))
    }

    /// Inference; BN follows [`DcrNetModel::mode`] and no state changes.
    ///
    /// With `dc` absent the data-consistency layer is skipped.
    pub fn forward(
        &self,
        x0: &ComplexTensor,
        dc: Option<&Consistency<'_>>,
    ) -> Result<ComplexTensor> {
        self.forward_in(x0, dc, self.mode)
    }

    /// Inference with an explicit BN mode.
    pub fn forward_in(
        &self,
        x0: &ComplexTensor,
        dc: Option<&Consistency<'_>>,
        mode: Mode,
    ) -> Result<ComplexTensor> {
        Ok(self.pass(x0, dc, mode == Mode::Train)?.0)
    }

    /// Training pass with batch statistics; records a [`Tape`] and updates
    /// the BN running statistics.
    pub fn forward_train(
        &mut self,
        x0: &ComplexTensor,
        dc: Option<&Consistency<'_>>,
    ) -> Result<(ComplexTensor, Tape)> {
        let (out, tape) = self.pass(x0, dc, true)?;
        self.input_bn.update_running(&tape.bn0);
        for (b, t) in self.blocks.iter_mut().zip(&tape.blocks) {
            b.bn_a.update_running(&t.bn_a);
            b.bn_b.update_running(&t.bn_b);
        }
        Ok((out, tape))
    }

    /// Parameter gradients of a scalar loss given its gradient `g` w.r.t. the output.
    pub fn backward(&self, tape: &Tape, g: &ComplexTensor) -> Result<Gradients> {
        if g.dims != tape.x0.dims || tape.blocks.len() != self.blocks.len() {
            return Err(DcrError::Shape(
                "gradient does not match the recorded pass".into(),
            ));
        }
        let (g6, g_raw) = match &tape.dc {
            Some(d) => {
                let dc = Consistency {
                    kspace: &d.kspace,
                    mask: &d.mask,
                };
                let (g6, glam) = blend_backward(g, &d.k6, &dc, d.lambda);
                (g6, glam * sigmoid(self.lambda_raw))
            }
            None => (g.clone(), 0.0),
        };
        let last = tape.blocks.last().map_or(&tape.y0, |b| &b.y);
        let (g_out, gx) = self.output_conv.backward(last, &g6, true);
        let mut gx = gx.expect("input gradient requested");

        let mut per_block = Vec::with_capacity(self.blocks.len());
        for (m, (b, t)) in self.blocks.iter().zip(&tape.blocks).enumerate().rev() {
            let x_m = if m == 0 {
                &tape.y0
            } else {
                &tape.blocks[m - 1].y
            };
            relu_mask(&mut gx, &t.y);
            let (gbn_b, gz) = b.bn_b.backward(&t.bn_b, &gx);
            let (gconv_b, ga) = b.conv_b.backward(&t.a, &gz, true);
            let ga = ga.expect("input gradient requested");
            let mut gf = ga.clone();
            relu_mask(&mut gf, &t.f);
            let (gbn_a, gz) = b.bn_a.backward(&t.bn_a, &gf);
            let (gconv_a, gxa) = b.conv_a.backward(x_m, &gz, true);
            let mut next = ga;
            next.add_assign(&gxa.expect("input gradient requested"));
            gx = next;
            per_block.push((gconv_a, gbn_a, gconv_b, gbn_b));
        }
        relu_mask(&mut gx, &tape.y0);
        let (gbn0, gz) = self.input_bn.backward(&tape.bn0, &gx);
        let (gconv0, _) = self.input_conv.backward(&tape.x0, &gz, false);

        let mut tensors = Vec::new();
        conv_grads(&mut tensors, gconv0);
        bn_grads(&mut tensors, gbn0);
        for (ca, ba, cb, bb) in per_block.into_iter().rev() {
            conv_grads(&mut tensors, ca);
            bn_grads(&mut tensors, ba);
            conv_grads(&mut tensors, cb);
            bn_grads(&mut tensors, bb);
        }
        conv_grads(&mut tensors, g_out);
        tensors.push(vec![g_raw]);
        Ok(Gradients { tensors })
    }
}
