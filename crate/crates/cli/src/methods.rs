//! The five row-selection methods compared by the benchmark.

use std::fmt;
use std::str::FromStr;

use anyhow::bail;
use arpivot::arp::{rpqr_decompose, skqr_decompose};
use arpivot::{arp_decompose, ArpConfig, InterpolativeDecomposition, MatrixOperand, Result, Variant};

/// | name | pivots | weights |
/// |---|---|---|
/// | `ARP` | volume sampling on the rangefinder basis | `Q Q(S,:)⁻¹` |
/// | `ProjARP` (alias `OptARP`) | same | `A A(S,:)†` |
/// | `SkARP` | same | `(AΦ)(A(S,:)Φ)†` |
/// | `SkQR` | greedy pivoted QR of the sketch transpose | `(AΦ)(A(S,:)Φ)†` |
/// | `RPQR` | randomly pivoted QR of `Aᵀ` | `A A(S,:)†` |
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Arp,
    ProjArp,
    SkArp,
    SkQr,
    Rpqr,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Arp, Method::ProjArp, Method::SkArp, Method::SkQr, Method::Rpqr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Arp => "ARP",
            Method::ProjArp => "ProjARP",
            Method::SkArp => "SkARP",
            Method::SkQr => "SkQR",
            Method::Rpqr => "RPQR",
        }
    }

    /// Runs the method with `base` supplying k, ζ, c, the seed and the round cap.
    pub fn run(self, a: &dyn MatrixOperand, base: &ArpConfig) -> Result<InterpolativeDecomposition> {
        let with = |variant| ArpConfig { variant, ..*base };
        match self {
            Method::Arp => arp_decompose(a, &with(Variant::Type1)),
            Method::ProjArp => arp_decompose(a, &with(Variant::Type2)),
            Method::SkArp => arp_decompose(a, &with(Variant::Osid)),
            Method::SkQr => skqr_decompose(a, &with(Variant::Osid)),
            Method::Rpqr => rpqr_decompose(a, &with(Variant::Type2)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "arp" => Method::Arp,
            "projarp" | "optarp" => Method::ProjArp,
            "skarp" => Method::SkArp,
            "skqr" => Method::SkQr,
            "rpqr" => Method::Rpqr,
            _ => bail!("unknown method {s:?}; expected one of ARP, ProjARP, SkARP, SkQR, RPQR"),
        })
    }
}
