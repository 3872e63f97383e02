//! CNN architecture profiles: layer specs, shape inference and memory accounting.
//!
//! Memory of a layer is its parameter bytes plus its output-activation bytes.
//! Splitting at index `l1` places layers `1..=l1` on the client and the rest on
//! the server, so client memory is a prefix sum and server memory a suffix sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer types understood by the shape and cost inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv2d,
    MaxPool2d,
    AvgPool2d,
    AdaptiveAvgPool2d,
    Relu,
    Dropout,
    Linear,
    Flatten,
    /// Opaque composite layer with a pre-counted parameter total and a fixed output shape.
    Block,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::MaxPool2d => "maxpool2d",
            LayerKind::AvgPool2d => "avgpool2d",
            LayerKind::AdaptiveAvgPool2d => "adaptiveavgpool2d",
            LayerKind::Relu => "relu",
            LayerKind::Dropout => "dropout",
            LayerKind::Linear => "linear",
            LayerKind::Flatten => "flatten",
            LayerKind::Block => "block",
        }
    }
}

/// Dimensions of an activation tensor, `[channels, height, width]` or `[features]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TensorShape(pub Vec<usize>);

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Validation(format!(
                "tensor shape {dims:?} must be non-empty with positive dims"
            )));
        }
        Ok(Self(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn element_count(&self) -> u64 {
        self.0.iter().map(|&d| d as u64).product()
    }

    fn chw(&self, kind: LayerKind) -> Result<(usize, usize, usize)> {
        match self.0.as_slice() {
            &[c, h, w] => Ok((c, h, w)),
            _ => Err(Error::ShapeMismatch(format!(
                "{} expects a [c, h, w] input, got {:?}",
                kind.as_str(),
                self.0
            ))),
        }
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// One layer of a sequential CNN. Only the fields relevant to `kind` are set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_features: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_features: Option<usize>,
    /// Square spatial output side of an adaptive pooling layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_param_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_out_shape: Option<TensorShape>,
}

impl LayerSpec {
    fn empty(kind: LayerKind) -> Self {
        Self {
            kind,
            kernel: None,
            stride: None,
            padding: None,
            in_channels: None,
            out_channels: None,
            in_features: None,
            out_features: None,
            output_size: None,
            block_param_count: None,
            block_out_shape: None,
        }
    }

    pub fn conv2d(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        Self {
            kernel: Some(kernel),
            stride: Some(stride),
            padding: Some(padding),
            in_channels: Some(in_channels),
            out_channels: Some(out_channels),
            ..Self::empty(LayerKind::Conv2d)
        }
    }

    pub fn max_pool2d(kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            kernel: Some(kernel),
            stride: Some(stride),
            padding: Some(padding),
            ..Self::empty(LayerKind::MaxPool2d)
        }
    }

    pub fn avg_pool2d(kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            kind: LayerKind::AvgPool2d,
            ..Self::max_pool2d(kernel, stride, padding)
        }
    }

    pub fn adaptive_avg_pool2d(output_size: usize) -> Self {
        Self {
            output_size: Some(output_size),
            ..Self::empty(LayerKind::AdaptiveAvgPool2d)
        }
    }

    pub fn relu() -> Self {
        Self::empty(LayerKind::Relu)
    }

    pub fn dropout() -> Self {
        Self::empty(LayerKind::Dropout)
    }

    pub fn flatten() -> Self {
        Self::empty(LayerKind::Flatten)
    }

    pub fn linear(in_features: usize, out_features: usize) -> Self {
        Self {
            in_features: Some(in_features),
            out_features: Some(out_features),
            ..Self::empty(LayerKind::Linear)
        }
    }

    pub fn block(param_count: u64, out_shape: TensorShape) -> Self {
        Self {
            block_param_count: Some(param_count),
            block_out_shape: Some(out_shape),
            ..Self::empty(LayerKind::Block)
        }
    }

    /// Checks that exactly the fields required by `kind` are present and positive.
    pub fn validate(&self) -> Result<()> {
        use LayerKind::*;
        let present = [
            ("kernel", self.kernel.is_some()),
            ("stride", self.stride.is_some()),
            ("padding", self.padding.is_some()),
            ("in_channels", self.in_channels.is_some()),
            ("out_channels", self.out_channels.is_some()),
            ("in_features", self.in_features.is_some()),
            ("out_features", self.out_features.is_some()),
            ("output_size", self.output_size.is_some()),
            ("block_param_count", self.block_param_count.is_some()),
            ("block_out_shape", self.block_out_shape.is_some()),
        ];
        let required: &[&str] = match self.kind {
            Conv2d => &["kernel", "stride", "padding", "in_channels", "out_channels"],
            MaxPool2d | AvgPool2d => &["kernel", "stride", "padding"],
            AdaptiveAvgPool2d => &["output_size"],
            Relu | Dropout | Flatten => &[],
            Linear => &["in_features", "out_features"],
            Block => &["block_param_count", "block_out_shape"],
        };
        for (field, is_set) in present {
            let needed = required.contains(&field);
            if needed && !is_set {
                return Err(Error::Validation(format!(
                    "{} layer requires `{field}`",
                    self.kind.as_str()
                )));
            }
            if !needed && is_set {
                return Err(Error::Validation(format!(
                    "{} layer does not accept `{field}`",
                    self.kind.as_str()
                )));
            }
        }

        let positive = [
            ("kernel", self.kernel),
            ("stride", self.stride),
            ("in_channels", self.in_channels),
            ("out_channels", self.out_channels),
            ("in_features", self.in_features),
            ("out_features", self.out_features),
            ("output_size", self.output_size),
        ];
        for (field, value) in positive {
            if value == Some(0) {
                return Err(Error::Validation(format!(
                    "{} layer has `{field}` = 0",
                    self.kind.as_str()
                )));
            }
        }
        if let Some(shape) = &self.block_out_shape {
            TensorShape::new(shape.0.clone())?;
        }
        Ok(())
    }
}

/// Parameter and activation accounting for a single layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCost {
    pub param_count: u64,
    pub activation_elements: u64,
    pub param_bytes: u64,
    pub activation_bytes: u64,
}

impl LayerCost {
    pub fn memory_bytes(&self) -> u64 {
        self.param_bytes + self.activation_bytes
    }
}

fn sliding_window(
    kind: LayerKind,
    input: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<usize> {
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::ShapeMismatch(format!(
            "{}: kernel {kernel} exceeds padded input {padded}",
            kind.as_str()
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Output shape of `layer` applied to `in_shape`.
pub fn infer_shape(layer: &LayerSpec, in_shape: &TensorShape) -> Result<TensorShape> {
    layer.validate()?;
    let kind = layer.kind;
    // validate() guarantees the fields below are present for their kinds.
    let shape = match kind {
        LayerKind::Conv2d => {
            let (c, h, w) = in_shape.chw(kind)?;
            let in_channels = layer.in_channels.unwrap();
            if c != in_channels {
                return Err(Error::ShapeMismatch(format!(
                    "conv2d expects {in_channels} input channels, got {c}"
                )));
            }
            let (k, s, p) = (
                layer.kernel.unwrap(),
                layer.stride.unwrap(),
                layer.padding.unwrap(),
            );
            vec![
                layer.out_channels.unwrap(),
                sliding_window(kind, h, k, s, p)?,
                sliding_window(kind, w, k, s, p)?,
            ]
        }
        LayerKind::MaxPool2d | LayerKind::AvgPool2d => {
            let (c, h, w) = in_shape.chw(kind)?;
            let (k, s, p) = (
                layer.kernel.unwrap(),
                layer.stride.unwrap(),
                layer.padding.unwrap(),
            );
            vec![
                c,
                sliding_window(kind, h, k, s, p)?,
                sliding_window(kind, w, k, s, p)?,
            ]
        }
        LayerKind::AdaptiveAvgPool2d => {
            let (c, _, _) = in_shape.chw(kind)?;
            let n = layer.output_size.unwrap();
            vec![c, n, n]
        }
        LayerKind::Relu | LayerKind::Dropout => in_shape.0.clone(),
        LayerKind::Flatten => vec![in_shape.element_count() as usize],
        LayerKind::Linear => {
            // A linear layer flattens its input implicitly.
            let in_features = layer.in_features.unwrap();
            if in_shape.element_count() != in_features as u64 {
                return Err(Error::ShapeMismatch(format!(
                    "linear expects {in_features} input features, got {in_shape}"
                )));
            }
            vec![layer.out_features.unwrap()]
        }
        LayerKind::Block => layer.block_out_shape.clone().unwrap().0,
    };
    TensorShape::new(shape).map_err(|_| {
        Error::ShapeMismatch(format!("{} produced an empty dimension", kind.as_str()))
    })
}

/// Parameter/activation accounting for `layer` applied to `in_shape`.
pub fn layer_cost(
    layer: &LayerSpec,
    in_shape: &TensorShape,
    bytes_per_element: u64,
) -> Result<LayerCost> {
    let out = infer_shape(layer, in_shape)?;
    let param_count = match layer.kind {
        LayerKind::Conv2d => {
            let k = layer.kernel.unwrap() as u64;
            (k * k * layer.in_channels.unwrap() as u64 + 1) * layer.out_channels.unwrap() as u64
        }
        LayerKind::Linear => {
            (layer.in_features.unwrap() as u64 + 1) * layer.out_features.unwrap() as u64
        }
        LayerKind::Block => layer.block_param_count.unwrap(),
        _ => 0,
    };
    let activation_elements = out.element_count();
    Ok(LayerCost {
        param_count,
        activation_elements,
        param_bytes: param_count * bytes_per_element,
        activation_bytes: activation_elements * bytes_per_element,
    })
}

/// A fully shape-inferred sequential CNN.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProfile {
    name: String,
    input_shape: TensorShape,
    layers: Vec<LayerSpec>,
    bytes_per_element: u64,
    output_shapes: Vec<TensorShape>,
    costs: Vec<LayerCost>,
    // prefix_memory[i] = memory of the first i layers
    prefix_memory: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileDocument {
    #[serde(default)]
    name: String,
    #[serde(default = "default_bytes_per_element")]
    bytes_per_element: u64,
    input_shape: TensorShape,
    layers: Vec<LayerSpec>,
}

fn default_bytes_per_element() -> u64 {
    4
}

impl ModelProfile {
    pub fn new(
        name: impl Into<String>,
        input_shape: TensorShape,
        layers: Vec<LayerSpec>,
        bytes_per_element: u64,
    ) -> Result<Self> {
        let input_shape = TensorShape::new(input_shape.0)?;
        if bytes_per_element == 0 {
            return Err(Error::Validation("bytes_per_element must be positive".into()));
        }
        if layers.len() < 2 {
            return Err(Error::Validation(format!(
                "a profile needs at least 2 layers, got {}",
                layers.len()
            )));
        }

        let mut output_shapes = Vec::with_capacity(layers.len());
        let mut costs = Vec::with_capacity(layers.len());
        let mut prefix_memory = Vec::with_capacity(layers.len() + 1);
        prefix_memory.push(0);
        let mut current = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            let tag = |e: Error| match e {
                Error::ShapeMismatch(m) => Error::ShapeMismatch(format!("layer {}: {m}", i + 1)),
                Error::Validation(m) => Error::Validation(format!("layer {}: {m}", i + 1)),
                other => other,
            };
            let cost = layer_cost(layer, &current, bytes_per_element).map_err(tag)?;
            current = infer_shape(layer, &current).map_err(tag)?;
            prefix_memory.push(prefix_memory[i] + cost.memory_bytes());
            costs.push(cost);
            output_shapes.push(current.clone());
        }

        Ok(Self {
            name: name.into(),
            input_shape,
            layers,
            bytes_per_element,
            output_shapes,
            costs,
            prefix_memory,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_shape(&self) -> &TensorShape {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn bytes_per_element(&self) -> u64 {
        self.bytes_per_element
    }

    /// Output shape of every layer, in order.
    pub fn output_shapes(&self) -> &[TensorShape] {
        &self.output_shapes
    }

    pub fn costs(&self) -> &[LayerCost] {
        &self.costs
    }

    /// Total layer count.
    pub fn total_layers(&self) -> usize {
        self.layers.len()
    }

    /// Memory of the first `l1` layers.
    pub fn client_memory(&self, l1: usize) -> Result<u64> {
        self.check_range(l1, 0, self.total_layers())?;
        Ok(self.prefix_memory[l1])
    }

    /// Memory of the last `l2` layers.
    pub fn server_memory(&self, l2: usize) -> Result<u64> {
        let total = self.total_layers();
        self.check_range(l2, 0, total)?;
        Ok(self.prefix_memory[total] - self.prefix_memory[total - l2])
    }

    /// Size in bits of the activation leaving layer `l1`, for `1 <= l1 <= L - 1`.
    pub fn intermediate_size_bits(&self, l1: usize) -> Result<u64> {
        self.check_range(l1, 1, self.total_layers() - 1)?;
        Ok(self.costs[l1 - 1].activation_bytes * 8)
    }

    /// Size in bits of the raw model input.
    pub fn input_size_bits(&self) -> u64 {
        self.input_shape.element_count() * self.bytes_per_element * 8
    }

    fn check_range(&self, index: usize, min: usize, max: usize) -> Result<()> {
        if index < min || index > max {
            return Err(Error::IndexOutOfRange { index, min, max });
        }
        Ok(())
    }

    /// Serializes the profile back to its document form.
    pub fn to_document(&self) -> String {
        let doc = ProfileDocument {
            name: self.name.clone(),
            bytes_per_element: self.bytes_per_element,
            input_shape: self.input_shape.clone(),
            layers: self.layers.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("profile document serializes")
    }
}

/// Parses a JSON profile document and runs shape inference over it.
pub fn load_profile(document: &str) -> Result<ModelProfile> {
    let doc: ProfileDocument =
        serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    ModelProfile::new(doc.name, doc.input_shape, doc.layers, doc.bytes_per_element)
}

/// Names of the profiles compiled into the crate.
pub const BUNDLED_PROFILES: [&str; 5] = ["alexnet", "vgg11", "vgg13", "vgg16", "mobilenet_v2"];

/// Raw document text of a bundled profile.
pub fn bundled_document(name: &str) -> Option<&'static str> {
    Some(match name {
        "alexnet" => include_str!("../data/alexnet.json"),
        "vgg11" => include_str!("../data/vgg11.json"),
        "vgg13" => include_str!("../data/vgg13.json"),
        "vgg16" => include_str!("../data/vgg16.json"),
        "mobilenet_v2" => include_str!("../data/mobilenet_v2.json"),
        _ => return None,
    })
}

/// Loads one of [`BUNDLED_PROFILES`].
pub fn bundled(name: &str) -> Result<ModelProfile> {
    let doc = bundled_document(name)
        .ok_or_else(|| Error::Validation(format!("unknown bundled profile `{name}`")))?;
    load_profile(doc)
}
