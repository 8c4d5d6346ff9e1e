//! Layer specifications and their text form.
//!
//! The text form has one layer per line, preceded by an `input` line:
//!
//! ```text
//! input 3 32 32
//! conv 3 3 8
//! relu
//! maxpool
//! flatten
//! dense 2048 2
//! softmax
//! ```
//!
//! A trailing `frozen` marks a parameterized layer as frozen.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

/// Per-sample activation shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Image {
        channels: usize,
        height: usize,
        width: usize,
    },
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Image {
                channels,
                height,
                width,
            } => channels * height * width,
            Shape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Image {
                channels,
                height,
                width,
            } => alloc::vec![channels, height, width],
            Shape::Flat(n) => alloc::vec![n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Stride-1 convolution with zero "same" padding; `kernel` must be odd.
    Conv2d {
        kernel: usize,
        in_ch: usize,
        out_ch: usize,
    },
    Relu,
    MaxPool2x2,
    Flatten,
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Softmax,
}

impl LayerSpec {
    pub fn is_parameterized(&self) -> bool {
        matches!(self, LayerSpec::Conv2d { .. } | LayerSpec::Dense { .. })
    }

    /// Output shape for `input`, or an error when the two are incompatible.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let mismatch = |what: &str| Err(Error::ShapeMismatch(alloc::format!("{what} cannot follow {input:?}")));
        match (*self, input) {
            (
                LayerSpec::Conv2d { kernel, in_ch, out_ch },
                Shape::Image {
                    channels,
                    height,
                    width,
                },
            ) => {
                if kernel % 2 == 0 || kernel == 0 {
                    return Err(Error::ShapeMismatch(alloc::format!("conv kernel {kernel} must be odd")));
                }
                if channels != in_ch || out_ch == 0 {
                    return mismatch("conv");
                }
                Ok(Shape::Image {
                    channels: out_ch,
                    height,
                    width,
                })
            }
            (LayerSpec::Conv2d { .. }, Shape::Flat(_)) => mismatch("conv"),
            (LayerSpec::Relu, s) => Ok(s),
            (
                LayerSpec::MaxPool2x2,
                Shape::Image {
                    channels,
                    height,
                    width,
                },
            ) if height >= 2 && width >= 2 => Ok(Shape::Image {
                channels,
                height: height / 2,
                width: width / 2,
            }),
            (LayerSpec::MaxPool2x2, _) => mismatch("maxpool"),
            (LayerSpec::Flatten, s) => Ok(Shape::Flat(s.len())),
            (LayerSpec::Dense { inputs, outputs }, Shape::Flat(n)) if n == inputs && outputs > 0 => {
                Ok(Shape::Flat(outputs))
            }
            (LayerSpec::Dense { .. }, _) => mismatch("dense"),
            (LayerSpec::Softmax, Shape::Flat(n)) if n >= 2 => Ok(Shape::Flat(n)),
            (LayerSpec::Softmax, _) => mismatch("softmax"),
        }
    }
}

/// Input shape plus an ordered layer list ending in softmax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arch {
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
}

impl Arch {
    /// conv3x3(3->8), relu, pool, conv3x3(8->16), relu, pool, flatten,
    /// dense(->32), relu, dense(->2), softmax on `side x side` RGB input.
    pub fn tiny_cnn(side: usize) -> Self {
        let flat = 16 * (side / 4) * (side / 4);
        Self {
            input: Shape::Image {
                channels: 3,
                height: side,
                width: side,
            },
            layers: alloc::vec![
                LayerSpec::Conv2d {
                    kernel: 3,
                    in_ch: 3,
                    out_ch: 8
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2x2,
                LayerSpec::Conv2d {
                    kernel: 3,
                    in_ch: 8,
                    out_ch: 16
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2x2,
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    inputs: flat,
                    outputs: 32
                },
                LayerSpec::Relu,
                LayerSpec::Dense { inputs: 32, outputs: 2 },
                LayerSpec::Softmax,
            ],
        }
    }

    /// Single dense layer plus softmax: multinomial logistic regression.
    pub fn logistic(features: usize, classes: usize) -> Self {
        Self {
            input: Shape::Flat(features),
            layers: alloc::vec![
                LayerSpec::Dense {
                    inputs: features,
                    outputs: classes
                },
                LayerSpec::Softmax
            ],
        }
    }

    /// Per-layer output shapes, validating the whole chain.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        if self.input.is_empty() {
            return Err(Error::ShapeMismatch("empty input shape".to_string()));
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = self.input;
        for (i, layer) in self.layers.iter().enumerate() {
            if *layer == LayerSpec::Softmax && i + 1 != self.layers.len() {
                return Err(Error::ShapeMismatch("softmax must be the last layer".to_string()));
            }
            cur = layer.output_shape(cur)?;
            shapes.push(cur);
        }
        if self.layers.last() != Some(&LayerSpec::Softmax) {
            return Err(Error::ShapeMismatch("architecture must end in softmax".to_string()));
        }
        Ok(shapes)
    }

    pub fn to_text(&self, frozen: &[bool]) -> String {
        let mut s = String::new();
        match self.input {
            Shape::Image {
                channels,
                height,
                width,
            } => {
                let _ = writeln!(s, "input {channels} {height} {width}");
            }
            Shape::Flat(n) => {
                let _ = writeln!(s, "input {n}");
            }
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let _ = match *layer {
                LayerSpec::Conv2d { kernel, in_ch, out_ch } => write!(s, "conv {kernel} {in_ch} {out_ch}"),
                LayerSpec::Relu => write!(s, "relu"),
                LayerSpec::MaxPool2x2 => write!(s, "maxpool"),
                LayerSpec::Flatten => write!(s, "flatten"),
                LayerSpec::Dense { inputs, outputs } => write!(s, "dense {inputs} {outputs}"),
                LayerSpec::Softmax => write!(s, "softmax"),
            };
            if frozen.get(i).copied().unwrap_or(false) {
                s.push_str(" frozen");
            }
            s.push('\n');
        }
        s
    }

    /// Parses the text form, returning the architecture and per-layer frozen flags.
    pub fn parse(text: &str) -> Result<(Self, Vec<bool>)> {
        let bad = |line: &str| Error::ShapeMismatch(alloc::format!("cannot parse layer line {line:?}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let first = lines.next().ok_or_else(|| bad(""))?;
        let nums = |words: &[&str], line: &str| -> Result<Vec<usize>> {
            words
                .iter()
                .map(|w| w.parse::<usize>().map_err(|_| bad(line)))
                .collect()
        };
        let words: Vec<&str> = first.split_whitespace().collect();
        if words.first() != Some(&"input") {
            return Err(bad(first));
        }
        let input = match nums(&words[1..], first)?.as_slice() {
            [n] => Shape::Flat(*n),
            [c, h, w] => Shape::Image {
                channels: *c,
                height: *h,
                width: *w,
            },
            _ => return Err(bad(first)),
        };
        let mut layers = Vec::new();
        let mut frozen = Vec::new();
        for line in lines {
            let mut words: Vec<&str> = line.split_whitespace().collect();
            let is_frozen = words.last() == Some(&"frozen");
            if is_frozen {
                words.pop();
            }
            let args = nums(&words[1..], line)?;
            let layer = match (words[0], args.as_slice()) {
                ("conv", [k, i, o]) => LayerSpec::Conv2d {
                    kernel: *k,
                    in_ch: *i,
                    out_ch: *o,
                },
                ("relu", []) => LayerSpec::Relu,
                ("maxpool", []) => LayerSpec::MaxPool2x2,
                ("flatten", []) => LayerSpec::Flatten,
                ("dense", [i, o]) => LayerSpec::Dense {
                    inputs: *i,
                    outputs: *o,
                },
                ("softmax", []) => LayerSpec::Softmax,
                _ => return Err(bad(line)),
            };
            if is_frozen && !layer.is_parameterized() {
                return Err(bad(line));
            }
            layers.push(layer);
            frozen.push(is_frozen);
        }
        let arch = Arch { input, layers };
        arch.shapes()?;
        Ok((arch, frozen))
    }
}
