use std::fmt;
use std::str::FromStr;

/// Pipeline stages in facilitator order. `Ord` follows this order, which is also the
/// priority used when two stages write the same clause span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    MaterialStructure,
    Cues,
    Morphology,
    Segmentation,
    DefaultScopes,
    Revision,
    Emission,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::MaterialStructure,
        Stage::Cues,
        Stage::Morphology,
        Stage::Segmentation,
        Stage::DefaultScopes,
        Stage::Revision,
        Stage::Emission,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::MaterialStructure => "material-structure",
            Stage::Cues => "cues",
            Stage::Morphology => "morphology",
            Stage::Segmentation => "segmentation",
            Stage::DefaultScopes => "default-scopes",
            Stage::Revision => "revision",
            Stage::Emission => "emission",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}
