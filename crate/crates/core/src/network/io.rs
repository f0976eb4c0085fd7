use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::block::{read_layer, write_layer, ConvLayer, LayerEntry};
use crate::error::{Error, Result};
use crate::network::{NetConfig, Network};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
struct NetManifest {
    config: NetConfig,
    seed: u64,
    layers: Vec<LayerEntry>,
}

impl<T: Scalar> Network<T> {
    /// Writes `manifest.json` and one `.t5b` file per kernel and per enabled
    /// bias. Block layers are stored as `u{i}.{layer}`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut layers = Vec::new();
        for (name, l) in self.layer_names().into_iter().zip(self.layers()) {
            let renamed = ConvLayer {
                name,
                spec: l.spec,
                weights: l.weights.clone(),
            };
            layers.push(write_layer(dir, "", &renamed)?);
        }
        let manifest = NetManifest {
            config: self.config().clone(),
            seed: self.seed(),
            layers,
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: NetManifest = serde_json::from_str(&text)?;
        let mut net = Network::build(&m.config, m.seed)?;
        let names = net.layer_names();
        if names.len() != m.layers.len() {
            return Err(Error::format(
                "network manifest",
                format!("expected {} layers, found {}", names.len(), m.layers.len()),
            ));
        }
        for ((slot, name), entry) in net.layers_mut().into_iter().zip(&names).zip(&m.layers) {
            if *name != entry.name || slot.spec != entry.spec {
                return Err(Error::format(
                    "network manifest",
                    format!("unexpected layer {}", entry.name),
                ));
            }
            slot.weights = read_layer::<T>(dir, entry)?.weights;
        }
        Ok(net)
    }
}
