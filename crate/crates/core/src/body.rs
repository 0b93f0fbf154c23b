//! The fourteen interacting body parts.
//!
//! The ordering is a fixed convention: head, torso, then limbs from the
//! shoulder outwards and hip downwards, left before right.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Head = 0,
    Torso = 1,
    LeftUpperArm = 2,
    RightUpperArm = 3,
    LeftMiddleArm = 4,
    RightMiddleArm = 5,
    LeftHand = 6,
    RightHand = 7,
    LeftUpperLeg = 8,
    RightUpperLeg = 9,
    LeftLowerLeg = 10,
    RightLowerLeg = 11,
    LeftFoot = 12,
    RightFoot = 13,
}

impl BodyPart {
    pub const COUNT: usize = 14;

    pub const ALL: [BodyPart; 14] = [
        BodyPart::Head,
        BodyPart::Torso,
        BodyPart::LeftUpperArm,
        BodyPart::RightUpperArm,
        BodyPart::LeftMiddleArm,
        BodyPart::RightMiddleArm,
        BodyPart::LeftHand,
        BodyPart::RightHand,
        BodyPart::LeftUpperLeg,
        BodyPart::RightUpperLeg,
        BodyPart::LeftLowerLeg,
        BodyPart::RightLowerLeg,
        BodyPart::LeftFoot,
        BodyPart::RightFoot,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::Head => "head",
            BodyPart::Torso => "torso",
            BodyPart::LeftUpperArm => "left_upper_arm",
            BodyPart::RightUpperArm => "right_upper_arm",
            BodyPart::LeftMiddleArm => "left_middle_arm",
            BodyPart::RightMiddleArm => "right_middle_arm",
            BodyPart::LeftHand => "left_hand",
            BodyPart::RightHand => "right_hand",
            BodyPart::LeftUpperLeg => "left_upper_leg",
            BodyPart::RightUpperLeg => "right_upper_leg",
            BodyPart::LeftLowerLeg => "left_lower_leg",
            BodyPart::RightLowerLeg => "right_lower_leg",
            BodyPart::LeftFoot => "left_foot",
            BodyPart::RightFoot => "right_foot",
        }
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown body part `{s}`"))
    }
}
