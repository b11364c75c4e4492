//! Sequential CNN schemes and the eight tabular scheme features.
//!
//! A scheme is an ordered list of convolution layers. Six of the features
//! (depth, stages, first/last width, parameters, MACs) are the classic
//! tabular description; the remaining two count effective skip connections
//! and layers that drop part of the receptive field (1x1 kernel with
//! stride 2).

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Names of the scheme features in their canonical column order.
pub const SCHEME_FEATURE_NAMES: [&str; 8] = [
    "depth",
    "num_stages",
    "first_width",
    "last_width",
    "num_params",
    "num_macs",
    "num_skip_connections",
    "num_lost_rf_layers",
];

/// Default input tensor: CIFAR-10 sized, `(height, width, channels)`.
pub const DEFAULT_INPUT: (u32, u32, u32) = (32, 32, 3);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("scheme has no layers")]
    EmptyLayers,
    #[error("layer {index}: in_width {found} does not chain with previous out_width {expected}")]
    Chaining {
        index: usize,
        expected: u32,
        found: u32,
    },
    #[error("layer {index}: kernel size {kernel} not in {{1, 3}}")]
    InvalidKernel { index: usize, kernel: u32 },
    #[error("layer {index}: stride {stride} not in {{1, 2}}")]
    InvalidStride { index: usize, stride: u32 },
    #[error("layer {index}: channel width must be at least 1")]
    ZeroWidth { index: usize },
    #[error("input resolution and channel count must be at least 1")]
    ZeroInput,
}

/// One convolution layer. `index` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub index: usize,
    pub in_width: u32,
    pub out_width: u32,
    pub kernel_size: u32,
    pub stride: u32,
    /// Generator flag; the skip is only effective when shapes match.
    pub requests_skip: bool,
}

impl LayerSpec {
    /// True when a residual addition around this layer is shape-legal.
    pub fn has_effective_skip(&self) -> bool {
        self.requests_skip && self.in_width == self.out_width && self.stride == 1
    }

    /// A 1x1 kernel with stride 2 never looks at half of the input positions.
    pub fn loses_receptive_field(&self) -> bool {
        self.kernel_size == 1 && self.stride == 2
    }
}

/// Layer description as written in a scheme document. `in_width` is
/// normally implied by the previous layer (or the input channels) but may
/// be stated explicitly, in which case it must chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDescription {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_width: Option<u32>,
    pub out_width: u32,
    pub kernel: u32,
    pub stride: u32,
    #[serde(default)]
    pub skip: bool,
}

/// Validated sequential architecture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureScheme {
    name: String,
    layers: Vec<LayerSpec>,
    input_resolution: (u32, u32),
    input_channels: u32,
}

impl ArchitectureScheme {
    /// Validates and builds a scheme from fully specified layers.
    pub fn new(
        name: impl Into<String>,
        input: (u32, u32, u32),
        layers: Vec<LayerSpec>,
    ) -> Result<Self, SchemeError> {
        let (h, w, c) = input;
        if h == 0 || w == 0 || c == 0 {
            return Err(SchemeError::ZeroInput);
        }
        if layers.is_empty() {
            return Err(SchemeError::EmptyLayers);
        }
        let mut prev_out = c;
        for (i, layer) in layers.iter().enumerate() {
            let index = i + 1;
            if layer.in_width == 0 || layer.out_width == 0 {
                return Err(SchemeError::ZeroWidth { index });
            }
            if !matches!(layer.kernel_size, 1 | 3) {
                return Err(SchemeError::InvalidKernel {
                    index,
                    kernel: layer.kernel_size,
                });
            }
            if !matches!(layer.stride, 1 | 2) {
                return Err(SchemeError::InvalidStride {
                    index,
                    stride: layer.stride,
                });
            }
            if layer.in_width != prev_out {
                return Err(SchemeError::Chaining {
                    index,
                    expected: prev_out,
                    found: layer.in_width,
                });
            }
            prev_out = layer.out_width;
        }
        let layers = layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| LayerSpec { index: i + 1, ..l })
            .collect();
        Ok(Self {
            name: name.into(),
            layers,
            input_resolution: (h, w),
            input_channels: c,
        })
    }

    /// Builds a scheme from document-style layer descriptions, deriving
    /// each `in_width` from the previous layer.
    pub fn from_descriptions(
        name: impl Into<String>,
        input: (u32, u32, u32),
        descriptions: &[LayerDescription],
    ) -> Result<Self, SchemeError> {
        let mut prev_out = input.2;
        let mut layers = Vec::with_capacity(descriptions.len());
        for (i, d) in descriptions.iter().enumerate() {
            let in_width = d.in_width.unwrap_or(prev_out);
            layers.push(LayerSpec {
                index: i + 1,
                in_width,
                out_width: d.out_width,
                kernel_size: d.kernel,
                stride: d.stride,
                requests_skip: d.skip,
            });
            prev_out = d.out_width;
        }
        Self::new(name, input, layers)
    }

    /// Inverse of [`from_descriptions`](Self::from_descriptions); `in_width` is left implicit.
    pub fn descriptions(&self) -> Vec<LayerDescription> {
        self.layers
            .iter()
            .map(|l| LayerDescription {
                in_width: None,
                out_width: l.out_width,
                kernel: l.kernel_size,
                stride: l.stride,
                skip: l.requests_skip,
            })
            .collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// `(height, width, channels)`.
    pub fn input(&self) -> (u32, u32, u32) {
        (
            self.input_resolution.0,
            self.input_resolution.1,
            self.input_channels,
        )
    }
}

/// How the number of stages is derived from a scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageRule {
    /// A new stage starts at every stride-2 layer: `1 + #(stride == 2)`.
    #[default]
    Downsampling,
    /// A new stage starts at every layer that changes the channel width.
    WidthChange,
}

/// The eight scheme features in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeFeatures {
    pub depth: u64,
    pub num_stages: u64,
    pub first_width: u64,
    pub last_width: u64,
    pub num_params: u64,
    pub num_macs: u64,
    pub num_skip_connections: u64,
    pub num_lost_rf_layers: u64,
}

impl SchemeFeatures {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.depth as f64,
            self.num_stages as f64,
            self.first_width as f64,
            self.last_width as f64,
            self.num_params as f64,
            self.num_macs as f64,
            self.num_skip_connections as f64,
            self.num_lost_rf_layers as f64,
        ]
    }
}

pub fn count_skip_connections(scheme: &ArchitectureScheme) -> u64 {
    scheme
        .layers
        .iter()
        .filter(|l| l.has_effective_skip())
        .count() as u64
}

pub fn count_lost_rf_layers(scheme: &ArchitectureScheme) -> u64 {
    scheme
        .layers
        .iter()
        .filter(|l| l.loses_receptive_field())
        .count() as u64
}

/// Total `(parameters, MACs)` over all conv layers, biases included.
///
/// Per layer: `params = k²·c_in·c_out + c_out` and
/// `MACs = k²·c_in·c_out·H_out·W_out` with `H_out = ceil(H_in / stride)`.
pub fn count_params_macs(scheme: &ArchitectureScheme) -> (u64, u64) {
    let (mut h, mut w) = (
        u64::from(scheme.input_resolution.0),
        u64::from(scheme.input_resolution.1),
    );
    let (mut params, mut macs) = (0u64, 0u64);
    for l in &scheme.layers {
        let k2 = u64::from(l.kernel_size) * u64::from(l.kernel_size);
        let weights = k2 * u64::from(l.in_width) * u64::from(l.out_width);
        let stride = u64::from(l.stride);
        h = h.div_ceil(stride);
        w = w.div_ceil(stride);
        params += weights + u64::from(l.out_width);
        macs += weights * h * w;
    }
    (params, macs)
}

pub fn count_stages(scheme: &ArchitectureScheme, rule: StageRule) -> u64 {
    let boundaries = match rule {
        StageRule::Downsampling => scheme.layers.iter().filter(|l| l.stride == 2).count(),
        StageRule::WidthChange => scheme
            .layers
            .iter()
            .skip(1)
            .filter(|l| l.in_width != l.out_width)
            .count(),
    };
    1 + boundaries as u64
}

pub fn scheme_feature_vector(scheme: &ArchitectureScheme, rule: StageRule) -> SchemeFeatures {
    let (num_params, num_macs) = count_params_macs(scheme);
    let layers = &scheme.layers;
    SchemeFeatures {
        depth: layers.len() as u64,
        num_stages: count_stages(scheme, rule),
        first_width: layers.first().map_or(0, |l| u64::from(l.out_width)),
        last_width: layers.last().map_or(0, |l| u64::from(l.out_width)),
        num_params,
        num_macs,
        num_skip_connections: count_skip_connections(scheme),
        num_lost_rf_layers: count_lost_rf_layers(scheme),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(out_width: u32, kernel: u32, stride: u32, skip: bool) -> LayerDescription {
        LayerDescription {
            in_width: None,
            out_width,
            kernel,
            stride,
            skip,
        }
    }

    /// Four-layer scheme in the shape of the NAAP-440 generator: layers 3
    /// and 4 carry the optional skip / 1x1 / stride-2 choices.
    fn naap_like(
        w2: u32,
        w3: u32,
        w4: u32,
        l3: (u32, u32, bool),
        l4: (u32, u32, bool),
    ) -> ArchitectureScheme {
        ArchitectureScheme::from_descriptions(
            "g",
            DEFAULT_INPUT,
            &[
                desc(16, 3, 1, false),
                desc(w2, 3, 1, false),
                desc(w3, l3.0, l3.1, l3.2),
                desc(w4, l4.0, l4.1, l4.2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn four_layer_scheme_fields() {
        let s = ArchitectureScheme::from_descriptions(
            "a",
            DEFAULT_INPUT,
            &[
                desc(16, 3, 1, false),
                desc(16, 3, 1, false),
                desc(24, 3, 2, false),
                desc(32, 3, 2, false),
            ],
        )
        .unwrap();
        let f = scheme_feature_vector(&s, StageRule::default());
        assert_eq!(f.depth, 4);
        assert_eq!(f.first_width, 16);
        assert_eq!(f.last_width, 32);
        assert_eq!(f.num_stages, 3);
        assert_eq!(s.layers()[2].in_width, 16);
    }

    #[test]
    fn empty_and_chaining_errors() {
        assert_eq!(
            ArchitectureScheme::from_descriptions("e", DEFAULT_INPUT, &[]),
            Err(SchemeError::EmptyLayers)
        );
        let mut l3 = desc(32, 3, 1, false);
        l3.in_width = Some(24);
        let err = ArchitectureScheme::from_descriptions(
            "c",
            DEFAULT_INPUT,
            &[desc(16, 3, 1, false), desc(16, 3, 1, false), l3],
        )
        .unwrap_err();
        assert_eq!(
            err,
            SchemeError::Chaining {
                index: 3,
                expected: 16,
                found: 24
            }
        );
    }

    #[test]
    fn invalid_kernel_stride_width() {
        let e = ArchitectureScheme::from_descriptions("k", DEFAULT_INPUT, &[desc(16, 5, 1, false)])
            .unwrap_err();
        assert_eq!(
            e,
            SchemeError::InvalidKernel {
                index: 1,
                kernel: 5
            }
        );
        let e = ArchitectureScheme::from_descriptions("s", DEFAULT_INPUT, &[desc(16, 3, 3, false)])
            .unwrap_err();
        assert_eq!(
            e,
            SchemeError::InvalidStride {
                index: 1,
                stride: 3
            }
        );
        let e = ArchitectureScheme::from_descriptions("w", DEFAULT_INPUT, &[desc(0, 3, 1, false)])
            .unwrap_err();
        assert_eq!(e, SchemeError::ZeroWidth { index: 1 });
    }

    #[test]
    fn skip_connections() {
        // layer 3: 16 -> 16 stride 1 with skip.
        let s = naap_like(16, 16, 32, (3, 1, true), (3, 1, false));
        assert_eq!(count_skip_connections(&s), 1);
        let s = naap_like(16, 16, 32, (3, 1, false), (3, 1, false));
        assert_eq!(count_skip_connections(&s), 0);
        // Both request, layer 4 is 16 -> 32 so only one is effective.
        let s = naap_like(16, 16, 32, (3, 1, true), (3, 1, true));
        assert_eq!(count_skip_connections(&s), 1);
        // Stride 2 blocks the skip even with matching widths.
        let s = naap_like(16, 16, 32, (3, 2, true), (3, 1, false));
        assert_eq!(count_skip_connections(&s), 0);
    }

    #[test]
    fn lost_receptive_field() {
        assert_eq!(
            count_lost_rf_layers(&naap_like(16, 24, 32, (1, 2, false), (1, 2, false))),
            2
        );
        assert_eq!(
            count_lost_rf_layers(&naap_like(16, 24, 32, (1, 2, false), (3, 2, false))),
            1
        );
        assert_eq!(
            count_lost_rf_layers(&naap_like(16, 24, 32, (3, 2, false), (3, 1, false))),
            0
        );
    }

    #[test]
    fn params_macs_unit_and_hand_values() {
        let unit =
            ArchitectureScheme::from_descriptions("u", (1, 1, 1), &[desc(1, 1, 1, false)]).unwrap();
        assert_eq!(count_params_macs(&unit), (2, 1));
        let one = ArchitectureScheme::from_descriptions("o", (32, 32, 3), &[desc(16, 3, 1, false)])
            .unwrap();
        assert_eq!(count_params_macs(&one), (448, 442_368));
    }

    #[test]
    fn params_macs_additive() {
        // Second layer on the 16x16 output of a stride-2 first layer.
        let two = ArchitectureScheme::from_descriptions(
            "t",
            (32, 32, 3),
            &[desc(16, 3, 2, false), desc(24, 1, 1, false)],
        )
        .unwrap();
        let first =
            ArchitectureScheme::from_descriptions("f", (32, 32, 3), &[desc(16, 3, 2, false)])
                .unwrap();
        let second =
            ArchitectureScheme::from_descriptions("s", (16, 16, 16), &[desc(24, 1, 1, false)])
                .unwrap();
        let (p1, m1) = count_params_macs(&first);
        let (p2, m2) = count_params_macs(&second);
        assert_eq!(count_params_macs(&two), (p1 + p2, m1 + m2));
        // ceil on odd resolution
        let odd = ArchitectureScheme::from_descriptions("odd", (5, 5, 1), &[desc(1, 1, 2, false)])
            .unwrap();
        assert_eq!(count_params_macs(&odd).1, 9);
    }

    #[test]
    fn feature_vector_order_and_stage_rules() {
        let s = naap_like(24, 24, 40, (3, 2, false), (1, 2, false));
        let f = scheme_feature_vector(&s, StageRule::Downsampling);
        let arr = f.to_array();
        assert_eq!(arr.len(), SCHEME_FEATURE_NAMES.len());
        assert_eq!(arr[0], 4.0);
        assert_eq!(arr[1], 3.0);
        assert_eq!(arr[7], 1.0);
        // widths 16,24,24,40: changes at layers 2 and 4
        assert_eq!(count_stages(&s, StageRule::WidthChange), 3);
    }

    #[test]
    fn generation_grid_bounds() {
        let mut seen = 0;
        for w2 in [16, 24] {
            for w3 in [16, 24, 32, 40] {
                for w4 in [32, 40] {
                    for k3 in [1, 3] {
                        for s3 in [1, 2] {
                            for k4 in [1, 3] {
                                for s4 in [1, 2] {
                                    for sk3 in [false, true] {
                                        for sk4 in [false, true] {
                                            let s =
                                                naap_like(w2, w3, w4, (k3, s3, sk3), (k4, s4, sk4));
                                            assert!(count_skip_connections(&s) <= 1);
                                            let lost = count_lost_rf_layers(&s);
                                            let brute = s
                                                .layers()
                                                .iter()
                                                .filter(|l| l.kernel_size == 1 && l.stride == 2)
                                                .count();
                                            assert_eq!(lost as usize, brute);
                                            assert!(lost <= 2);
                                            seen += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(seen, 2 * 4 * 2 * 16 * 4);
    }

    #[test]
    fn descriptions_round_trip() {
        let s = naap_like(24, 24, 40, (3, 1, true), (1, 2, false));
        let back =
            ArchitectureScheme::from_descriptions(s.name(), s.input(), &s.descriptions()).unwrap();
        assert_eq!(back, s);
    }
}
