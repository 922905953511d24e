use std::fmt;
use std::str::FromStr;

use super::HousingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Floor,
    Roof,
    Ceiling,
}

impl Variable {
    pub const ALL: [Variable; 3] = [Variable::Floor, Variable::Roof, Variable::Ceiling];

    pub fn levels(self) -> usize {
        match self {
            Variable::Floor => Floor::ALL.len(),
            Variable::Roof => Roof::ALL.len(),
            Variable::Ceiling => Ceiling::ALL.len(),
        }
    }

    /// Category code sheltering the vector.
    pub fn favourable(self) -> u8 {
        match self {
            Variable::Floor => Floor::SoilLooseBrick as u8,
            Variable::Roof => Roof::ReedStraw as u8,
            Variable::Ceiling => Ceiling::No as u8,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variable::Floor => "floor",
            Variable::Roof => "roof",
            Variable::Ceiling => "ceiling",
        })
    }
}

macro_rules! tokens {
    ($name:ident, $var:expr, [$($variant:ident => $tok:literal),+ $(,)?]) => {
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $tok),+
                }
            }

            pub fn from_code(code: u8) -> Option<Self> {
                Self::ALL.get(code as usize).copied()
            }
        }

        impl FromStr for $name {
            type Err = HousingError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
                match t.as_str() {
                    $($tok => Ok($name::$variant),)+
                    _ => Err(HousingError::UnknownToken($var, s.to_string())),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Floor {
    CeramicWood = 0,
    CementFixedBrick,
    SoilLooseBrick,
    Other,
}

tokens!(Floor, Variable::Floor, [
    CeramicWood => "ceramic_wood",
    CementFixedBrick => "cement_brick",
    SoilLooseBrick => "soil_loose_brick",
    Other => "other",
]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Roof {
    AsphaltMembrane = 0,
    TileSlab,
    SlateTile,
    MetalSheet,
    FiberCementPlastic,
    Cardboard,
    ReedStraw,
    Other,
}

tokens!(Roof, Variable::Roof, [
    AsphaltMembrane => "asphalt_membrane",
    TileSlab => "tile_slab",
    SlateTile => "slate_tile",
    MetalSheet => "metal_sheet",
    FiberCementPlastic => "fiber_cement_plastic",
    Cardboard => "cardboard",
    ReedStraw => "reed_straw",
    Other => "other",
]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ceiling {
    Yes = 0,
    No,
}

tokens!(Ceiling, Variable::Ceiling, [
    Yes => "yes",
    No => "no",
]);

/// One combination of the three categorical variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    pub floor: Floor,
    pub roof: Roof,
    pub ceiling: Ceiling,
}

impl Profile {
    pub const FAVOURABLE: Profile =
        Profile { floor: Floor::SoilLooseBrick, roof: Roof::ReedStraw, ceiling: Ceiling::No };

    pub fn new(floor: Floor, roof: Roof, ceiling: Ceiling) -> Self {
        Profile { floor, roof, ceiling }
    }

    pub fn code(&self, v: Variable) -> u8 {
        match v {
            Variable::Floor => self.floor as u8,
            Variable::Roof => self.roof as u8,
            Variable::Ceiling => self.ceiling as u8,
        }
    }

    pub fn with_code(mut self, v: Variable, code: u8) -> Option<Self> {
        match v {
            Variable::Floor => self.floor = Floor::from_code(code)?,
            Variable::Roof => self.roof = Roof::from_code(code)?,
            Variable::Ceiling => self.ceiling = Ceiling::from_code(code)?,
        }
        Some(self)
    }
}

/// Households of one block sharing a profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HousingRecord {
    pub block: String,
    pub profile: Profile,
    pub households: u32,
}

impl HousingRecord {
    pub fn parse(block: &str, floor: &str, roof: &str, ceiling: &str, households: u32) -> Result<Self, HousingError> {
        if households == 0 {
            return Err(HousingError::EmptyRecord(block.to_string()));
        }
        Ok(HousingRecord {
            block: block.to_string(),
            profile: Profile::new(floor.parse()?, roof.parse()?, ceiling.parse()?),
            households,
        })
    }
}
