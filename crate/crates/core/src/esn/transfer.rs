//! Transfer rates and how each one updates a trained readout.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::{min_norm_readout, EsnModel, StateMatrixPair};
use crate::{Error, Result};

/// Penalty rate for the readout correction.
///
/// `Skip` stands for `α = ∞`: the source readout is kept as is. `Rate(0)`
/// refits on the target pairs alone; with fewer pairs than reservoir units the
/// normal matrix is singular and the minimum-norm solution is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransferRate {
    Skip,
    Rate(f64),
}

impl TransferRate {
    pub fn is_skip(self) -> bool {
        matches!(self, TransferRate::Skip)
    }

    /// Short label used in file names and reports: `inf`, `0`, `0.01`.
    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TransferRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferRate::Skip => f.write_str("inf"),
            TransferRate::Rate(a) => write!(f, "{a}"),
        }
    }
}

impl FromStr for TransferRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "skip" | "none" => Ok(TransferRate::Skip),
            other => {
                let a: f64 = other
                    .parse()
                    .map_err(|_| Error::Config(format!("bad transfer rate {s:?}")))?;
                TransferRate::try_from(a)
            }
        }
    }
}

impl TryFrom<f64> for TransferRate {
    type Error = Error;

    fn try_from(a: f64) -> Result<Self> {
        if a == f64::INFINITY {
            Ok(TransferRate::Skip)
        } else if a >= 0.0 && a.is_finite() {
            Ok(TransferRate::Rate(a))
        } else {
            Err(Error::Config(format!("transfer rate {a} must be >= 0")))
        }
    }
}

impl Serialize for TransferRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TransferRate::Skip => s.serialize_str("inf"),
            TransferRate::Rate(a) => s.serialize_f64(*a),
        }
    }
}

impl<'de> Deserialize<'de> for TransferRate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = TransferRate;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<TransferRate, E> {
                TransferRate::try_from(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<TransferRate, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<TransferRate, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<TransferRate, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl EsnModel {
    /// Update the readout for `rate` using the target-regime pairs. Returns
    /// `δW` (all zeros for `Skip`).
    pub fn apply_transfer(&mut self, pair_star: &StateMatrixPair, rate: TransferRate) -> Result<DMatrix<f64>> {
        let w_out = self.w_out().ok_or(Error::Untrained)?.clone();
        match rate {
            TransferRate::Skip => Ok(DMatrix::zeros(w_out.nrows(), w_out.ncols())),
            TransferRate::Rate(alpha) => match self.transfer_update(pair_star, alpha) {
                Err(Error::RankDeficient(_)) if alpha == 0.0 => {
                    let w = min_norm_readout(pair_star)?;
                    let delta = &w - &w_out;
                    self.set_w_out(w)?;
                    Ok(delta)
                }
                other => other,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esn::EsnConfig;

    #[test]
    fn parse_and_display() {
        assert_eq!("inf".parse::<TransferRate>().unwrap(), TransferRate::Skip);
        assert_eq!("0.01".parse::<TransferRate>().unwrap(), TransferRate::Rate(0.01));
        assert!("-1".parse::<TransferRate>().is_err());
        assert!("abc".parse::<TransferRate>().is_err());
        assert_eq!(TransferRate::Skip.label(), "inf");
        assert_eq!(TransferRate::Rate(0.0).label(), "0");
        assert_eq!(TransferRate::Rate(0.01).label(), "0.01");
    }

    #[test]
    fn toml_round_trip_accepts_inf() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct W {
            a: Vec<TransferRate>,
        }
        let w: W = toml::from_str("a = [0, 0.01, inf, \"inf\"]").unwrap();
        assert_eq!(
            w.a,
            vec![
                TransferRate::Rate(0.0),
                TransferRate::Rate(0.01),
                TransferRate::Skip,
                TransferRate::Skip
            ]
        );
        let back: W = toml::from_str(&toml::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        let j: W = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(j, w);
    }

    fn model_and_pairs() -> (EsnModel, StateMatrixPair) {
        let cfg = EsnConfig {
            reservoir_dim: 30,
            io_dim: 4,
            density: 0.2,
            seed: 5,
            ..EsnConfig::default()
        };
        let mut m = EsnModel::build(cfg).unwrap();
        m.set_w_out(DMatrix::from_fn(4, 30, |i, j| ((3 * i + j) as f64).sin() * 0.1)).unwrap();
        let frames: Vec<f64> = (0..6 * 4).map(|k| (k as f64 * 0.7).cos()).collect();
        let pair = m.drive(&frames, &[]).unwrap();
        (m, pair)
    }

    #[test]
    fn skip_leaves_readout_unchanged() {
        let (mut m, pair) = model_and_pairs();
        let before = m.w_out().unwrap().clone();
        let delta = m.apply_transfer(&pair, TransferRate::Skip).unwrap();
        assert_eq!(m.w_out().unwrap(), &before);
        assert_eq!(delta.norm(), 0.0);
    }

    #[test]
    fn zero_rate_with_few_pairs_is_min_norm_fit() {
        let (mut m, pair) = model_and_pairs();
        assert!(pair.len() < m.reservoir_dim());
        m.apply_transfer(&pair, TransferRate::Rate(0.0)).unwrap();
        let expect = min_norm_readout(&pair).unwrap();
        assert!((m.w_out().unwrap() - &expect).norm() < 1e-12 * expect.norm());
        // interpolates the target pairs
        let fit = m.w_out().unwrap() * &pair.states;
        assert!((fit - &pair.targets).norm() < 1e-8 * pair.targets.norm());
    }

    #[test]
    fn positive_rate_matches_transfer_update() {
        let (mut a, pair) = model_and_pairs();
        let mut b = a.clone();
        let da = a.apply_transfer(&pair, TransferRate::Rate(0.01)).unwrap();
        let db = b.transfer_update(&pair, 0.01).unwrap();
        assert_eq!(da, db);
        assert_eq!(a.w_out(), b.w_out());
    }
}
