use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::block::{Block, BlockKind, BlockOptions, ConvLayer};
use crate::conv::{ConvSpec, ConvWeights};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};

/// One convolution in a weight manifest. Tensors are `.t5b` files next to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct LayerEntry {
    pub name: String,
    pub spec: ConvSpec,
    pub kernels: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<String>,
}

pub(crate) fn write_layer<T: Scalar>(
    dir: &Path,
    prefix: &str,
    layer: &ConvLayer<T>,
) -> Result<LayerEntry> {
    let stem = format!("{prefix}{}", layer.name);
    let kernels = format!("{stem}.kernels.t5b");
    layer
        .weights
        .kernels
        .cast::<f32>()
        .save_t5b(dir.join(&kernels))?;
    let bias = if layer.spec.bias {
        let file = format!("{stem}.bias.t5b");
        let shape = Shape5::new(layer.spec.c_out, 1, 1, 1, 1);
        Tensor5::from_vec(shape, layer.weights.bias.clone())?
            .cast::<f32>()
            .save_t5b(dir.join(&file))?;
        Some(file)
    } else {
        None
    };
    Ok(LayerEntry {
        name: layer.name.clone(),
        spec: layer.spec,
        kernels,
        bias,
    })
}

pub(crate) fn read_layer<T: Scalar>(dir: &Path, entry: &LayerEntry) -> Result<ConvLayer<T>> {
    let kernels = Tensor5::<f32>::load_t5b(dir.join(&entry.kernels))?.cast::<T>();
    let bias = match &entry.bias {
        Some(file) => {
            let b = Tensor5::<f32>::load_t5b(dir.join(file))?;
            let want = Shape5::new(entry.spec.c_out, 1, 1, 1, 1);
            if b.shape() != want {
                return Err(Error::ShapeMismatch {
                    op: "bias file",
                    left: want,
                    right: b.shape(),
                });
            }
            b.cast::<T>().into_vec()
        }
        None => vec![T::zero(); entry.spec.c_out],
    };
    let weights = ConvWeights { kernels, bias };
    weights.check(&entry.spec)?;
    Ok(ConvLayer {
        name: entry.name.clone(),
        spec: entry.spec,
        weights,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct BlockManifest {
    kind: BlockKind,
    c_in: usize,
    c_out: usize,
    k: usize,
    stride: [usize; 3],
    options: BlockOptions,
    seed: u64,
    layers: Vec<LayerEntry>,
}

pub const MANIFEST: &str = "manifest.json";

impl<T: Scalar> Block<T> {
    /// Writes `manifest.json` plus one `.t5b` file per kernel (and per bias
    /// when enabled) into `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let layers = self
            .layers
            .iter()
            .map(|l| write_layer(dir, "", l))
            .collect::<Result<Vec<_>>>()?;
        let manifest = BlockManifest {
            kind: self.kind,
            c_in: self.c_in,
            c_out: self.c_out,
            k: self.k,
            stride: self.stride,
            options: self.options,
            seed: self.seed,
            layers,
        };
        let path = dir.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: BlockManifest = serde_json::from_str(&text)?;
        let mut block = Block::new(m.kind, m.c_in, m.c_out, m.k, m.stride, m.seed, m.options)?;
        if block.layers.len() != m.layers.len() {
            return Err(Error::format(
                "block manifest",
                format!(
                    "expected {} layers, found {}",
                    block.layers.len(),
                    m.layers.len()
                ),
            ));
        }
        for (slot, entry) in block.layers.iter_mut().zip(&m.layers) {
            if slot.name != entry.name || slot.spec != entry.spec {
                return Err(Error::format(
                    "block manifest",
                    format!("layer {} does not match kind {}", entry.name, m.kind),
                ));
            }
            *slot = read_layer(dir, entry)?;
        }
        Ok(block)
    }
}
