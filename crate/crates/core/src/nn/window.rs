use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Sliding-window geometry shared by convolution and pooling layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_h: usize,
    pub window_w: usize,
    pub stride: usize,
    /// Zeros added on all four edges.
    pub padding: usize,
}

impl WindowSpec {
    pub fn new(window_h: usize, window_w: usize, stride: usize, padding: usize) -> Result<Self> {
        let spec = Self {
            window_h,
            window_w,
            stride,
            padding,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Square window, stride 1.
    pub fn square(size: usize, padding: usize) -> Self {
        Self {
            window_h: size,
            window_w: size,
            stride: 1,
            padding,
        }
    }

    pub fn cells(&self) -> usize {
        self.window_h * self.window_w
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_h == 0 || self.window_w == 0 || self.stride == 0 {
            return Err(Error::shape(format!(
                "window {}x{} with stride {} must be positive",
                self.window_h, self.window_w, self.stride
            )));
        }
        Ok(())
    }

    fn output_extent(&self, input: usize, window: usize, axis: &str) -> Result<usize> {
        let padded = input + 2 * self.padding;
        if padded < window {
            return Err(Error::shape(format!(
                "{axis}: padded extent {padded} is smaller than window {window}"
            )));
        }
        let span = padded - window;
        if !span.is_multiple_of(self.stride) {
            return Err(Error::shape(format!(
                "{axis}: stride {} does not divide {span}",
                self.stride
            )));
        }
        Ok(span / self.stride + 1)
    }

    /// Output `(height, width)` for an input of `height × width`.
    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        self.validate()?;
        Ok((
            self.output_extent(height, self.window_h, "height")?,
            self.output_extent(width, self.window_w, "width")?,
        ))
    }
}

/// `((v+2p−m)/s + 1, (h+2p−n)/s + 1, d·k)`.
pub fn output_shape(
    input: (usize, usize),
    spec: &WindowSpec,
    filters: usize,
    in_channels: usize,
) -> Result<Shape> {
    let (oh, ow) = spec.output_dims(input.0, input.1)?;
    Ok(Shape::new(oh, ow, in_channels * filters))
}

/// Precomputed mapping from window cells to input pixels for one input shape.
///
/// `sources[pos * cells + cell]` is the spatial pixel index `row * width + col`
/// of that cell, or `None` where it falls in the zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    pub spec: WindowSpec,
    pub input: Shape,
    pub out_h: usize,
    pub out_w: usize,
    sources: Vec<Option<usize>>,
}

impl WindowPlan {
    pub fn new(input: Shape, spec: WindowSpec) -> Result<Self> {
        let (out_h, out_w) = spec.output_dims(input.height, input.width)?;
        let cells = spec.cells();
        let mut sources = Vec::with_capacity(out_h * out_w * cells);
        let p = spec.padding as isize;
        for oy in 0..out_h {
            for ox in 0..out_w {
                for i in 0..spec.window_h {
                    for j in 0..spec.window_w {
                        let r = (oy * spec.stride + i) as isize - p;
                        let c = (ox * spec.stride + j) as isize - p;
                        let inside = r >= 0
                            && c >= 0
                            && (r as usize) < input.height
                            && (c as usize) < input.width;
                        sources.push(inside.then(|| r as usize * input.width + c as usize));
                    }
                }
            }
        }
        Ok(Self {
            spec,
            input,
            out_h,
            out_w,
            sources,
        })
    }

    pub fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn cells(&self) -> usize {
        self.spec.cells()
    }

    pub fn sources(&self, pos: usize) -> &[Option<usize>] {
        let cells = self.cells();
        &self.sources[pos * cells..(pos + 1) * cells]
    }

    /// Gathers the window at `pos` of `channel` into `out` (padding reads 0).
    pub fn gather(&self, input: &[f64], pos: usize, channel: usize, out: &mut Vec<f64>) {
        let d = self.input.channels;
        out.clear();
        out.extend(
            self.sources(pos)
                .iter()
                .map(|s| s.map_or(0.0, |px| input[px * d + channel])),
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub row: usize,
    pub col: usize,
    pub channel: usize,
    /// Row-major window contents.
    pub values: Vec<f64>,
}

/// Windows per channel, sliding left to right and then top to bottom.
pub fn extract_windows(input: &Tensor, spec: &WindowSpec) -> Result<Vec<Window>> {
    let shape = input.shape();
    let plan = WindowPlan::new(shape, *spec)?;
    let mut windows = Vec::with_capacity(plan.positions() * shape.channels);
    for channel in 0..shape.channels {
        for pos in 0..plan.positions() {
            let mut values = Vec::with_capacity(plan.cells());
            plan.gather(input.data(), pos, channel, &mut values);
            windows.push(Window {
                row: pos / plan.out_w,
                col: pos % plan.out_w,
                channel,
                values,
            });
        }
    }
    Ok(windows)
}
