use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Exact form `x·½(1 + erf(x/√2))`.
    #[default]
    Gelu,
}

/// First-layer input map applied before the hidden layers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Embedding {
    #[default]
    None,
    /// Axis Fourier features `[cos(2πxB), sin(2πxB)]`, `B = [F_0 … F_p]` with
    /// `F_i = f_i·I`.
    Fourier { frequencies: Vec<u32> },
    /// Axis 0 replaced by `(sin x, cos x)`; remaining axes passed through.
    Periodic,
}

impl Embedding {
    /// Fourier features with integer frequencies `1..=max`.
    pub fn fourier_range(max: u32) -> Self {
        Embedding::Fourier {
            frequencies: (1..=max).collect(),
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            Embedding::None => input_dim,
            Embedding::Fourier { frequencies } => 2 * input_dim * frequencies.len(),
            Embedding::Periodic => input_dim + 1,
        }
    }
}

/// Architecture of one boosting stage: embedding, GeLU hidden layers, and a
/// linear scalar head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub input_dim: usize,
    #[serde(default)]
    pub embedding: Embedding,
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl NetworkSpec {
    pub fn mlp(input_dim: usize, hidden: Vec<usize>) -> Self {
        Self {
            input_dim,
            embedding: Embedding::None,
            hidden,
            activation: Activation::Gelu,
        }
    }

    pub fn with_embedding(mut self, embedding: Embedding) -> Self {
        self.embedding = embedding;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidSpec("input dimension must be positive".into()));
        }
        if self.hidden.is_empty() {
            return Err(Error::InvalidSpec("at least one hidden layer is required".into()));
        }
        if let Some(pos) = self.hidden.iter().position(|&w| w == 0) {
            return Err(Error::InvalidSpec(format!("hidden layer {pos} has width 0")));
        }
        match &self.embedding {
            Embedding::None => {}
            Embedding::Fourier { frequencies } => {
                if frequencies.is_empty() {
                    return Err(Error::InvalidSpec("fourier embedding without frequencies".into()));
                }
                if frequencies[0] == 0 || frequencies.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSpec(
                        "fourier frequencies must be strictly increasing positive integers".into(),
                    ));
                }
            }
            Embedding::Periodic => {
                if self.input_dim < 2 {
                    return Err(Error::InvalidSpec(
                        "periodic embedding needs a spatial and a temporal axis".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.embedding.output_dim(self.input_dim)
    }

    /// `(fan_in, fan_out)` of every affine layer, head included.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden.len() + 1);
        let mut fan_in = self.feature_dim();
        for &w in &self.hidden {
            shapes.push((fan_in, w));
            fan_in = w;
        }
        shapes.push((fan_in, 1));
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|&(i, o)| (i + 1) * o).sum()
    }

    /// Parses the list notation used in the ablation tables, e.g. `[100]*3`,
    /// `F10[50]*2` (Fourier features, frequencies 1..=10), `P[200]*3`
    /// (periodic embedding) or `[100,50]`.
    pub fn parse(notation: &str, input_dim: usize) -> Result<Self> {
        let s = notation.trim();
        let bad = |why: &str| Error::InvalidSpec(format!("cannot parse `{notation}`: {why}"));
        let open = s.find('[').ok_or_else(|| bad("missing `[`"))?;
        let close = s.find(']').ok_or_else(|| bad("missing `]`"))?;
        if close < open {
            return Err(bad("misplaced `]`"));
        }
        let prefix = s[..open].trim();
        let embedding = if prefix.is_empty() {
            Embedding::None
        } else if prefix == "P" {
            Embedding::Periodic
        } else if let Some(k) = prefix.strip_prefix('F') {
            let k: u32 = k.trim().parse().map_err(|_| bad("bad fourier range"))?;
            Embedding::fourier_range(k)
        } else {
            return Err(bad("unknown prefix"));
        };
        let widths = s[open + 1..close]
            .split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|_| bad("bad width")))
            .collect::<Result<Vec<_>>>()?;
        let rest = s[close + 1..].trim();
        let repeat = if rest.is_empty() {
            1
        } else {
            let n = rest.strip_prefix('*').ok_or_else(|| bad("expected `*n`"))?;
            n.trim().parse::<usize>().map_err(|_| bad("bad repeat count"))?
        };
        let hidden: Vec<usize> = std::iter::repeat_n(widths, repeat).flatten().collect();
        let spec = NetworkSpec {
            input_dim,
            embedding,
            hidden,
            activation: Activation::Gelu,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a comma separated stage list such as `[50], [100]*2, F10[50]*2`.
    pub fn parse_list(notation: &str, input_dim: usize) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        let mut depth = 0usize;
        let mut start = 0usize;
        for (i, c) in notation.char_indices() {
            match c {
                '[' => depth += 1,
                ']' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    out.push(Self::parse(&notation[start..i], input_dim)?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        if !notation[start..].trim().is_empty() {
            out.push(Self::parse(&notation[start..], input_dim)?);
        }
        if out.is_empty() {
            return Err(Error::InvalidSpec("empty stage list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for NetworkSpec {
    /// Ablation-table notation; inverse of [`NetworkSpec::parse`] for the
    /// embeddings it can express.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.embedding {
            Embedding::None => {}
            Embedding::Periodic => write!(f, "P")?,
            Embedding::Fourier { frequencies } => {
                let is_range = frequencies.iter().enumerate().all(|(i, &v)| v as usize == i + 1);
                if is_range {
                    write!(f, "F{}", frequencies.len())?;
                } else {
                    let list: Vec<String> = frequencies.iter().map(u32::to_string).collect();
                    write!(f, "F{{{}}}", list.join(","))?;
                }
            }
        }
        let uniform = self.hidden.windows(2).all(|w| w[0] == w[1]);
        if uniform && !self.hidden.is_empty() {
            write!(f, "[{}]", self.hidden[0])?;
            if self.hidden.len() > 1 {
                write!(f, "*{}", self.hidden.len())?;
            }
            Ok(())
        } else {
            let list: Vec<String> = self.hidden.iter().map(usize::to_string).collect();
            write!(f, "[{}]", list.join(","))
        }
    }
}
