//! Network shape. The desk defaults keep the decoder depth of the full-size
//! recipe and scale everything else down.

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderConfig {
    /// Total encoder layers L.
    pub layers: usize,
    /// 1-based index l of the deepest layer shared with the sentiment
    /// branch; layers l+1..=L are term-extraction specific.
    pub shared_layer: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ffn: usize,
    pub vocab_size: usize,
    pub max_len: usize,
    /// Decoder depth; 0 selects the degenerate "base" variant that reads
    /// the shared representation directly through the sentiment head.
    pub asc_layers: usize,
    pub dropout: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            layers: 4,
            shared_layer: 3,
            hidden: 64,
            heads: 4,
            ffn: 256,
            vocab_size: 0,
            max_len: 128,
            asc_layers: 2,
            dropout: 0.1,
        }
    }
}

impl EncoderConfig {
    /// Fully shared layers and no decoder: per-token heads on the top
    /// layer, no label conditioning.
    pub fn base_preset() -> Self {
        EncoderConfig {
            shared_layer: 4,
            asc_layers: 0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.layers == 0 {
            return Err("layers must be positive".into());
        }
        if !(1..=self.layers).contains(&self.shared_layer) {
            return Err(format!(
                "shared_layer {} outside 1..={}",
                self.shared_layer, self.layers
            ));
        }
        if self.hidden == 0 || self.hidden % self.heads != 0 {
            return Err(format!(
                "hidden {} must be a positive multiple of heads {}",
                self.hidden, self.heads
            ));
        }
        if self.max_len < 2 {
            return Err("max_len must be at least 2".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let mut cfg = EncoderConfig::default();
        cfg.vocab_size = 100;
        cfg.validate().unwrap();
        assert_eq!(cfg.head_dim(), 16);
    }

    #[test]
    fn shared_layer_must_stay_in_range() {
        let cfg = EncoderConfig {
            shared_layer: 5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn base_preset_shares_everything() {
        let base = EncoderConfig::base_preset();
        base.validate().unwrap();
        assert_eq!(base.shared_layer, base.layers);
        assert_eq!(base.asc_layers, 0);
    }
}
